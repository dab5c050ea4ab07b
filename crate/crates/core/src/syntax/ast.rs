//! Model syntax tree.
//!
//! Rules are stored with canonical bond labels (renumbered from 0 in order of
//! first occurrence, left-hand side first); the parser canonicalizes on the way
//! in and the printer canonicalizes on the way out.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::Span;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SiteSignature {
    pub name: String,
    /// Internal-state alphabet; empty for a pure binding site.
    pub states: Vec<String>,
    pub default_state: Option<String>,
}

impl SiteSignature {
    pub fn binding(name: impl Into<String>) -> Self {
        SiteSignature { name: name.into(), states: Vec::new(), default_state: None }
    }

    /// A state-carrying site; the first state is the default.
    pub fn with_states<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let default_state = states.first().cloned();
        SiteSignature { name: name.into(), states, default_state }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentSignature {
    pub name: String,
    pub sites: Vec<SiteSignature>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SiteTransform {
    Delete(String),
    Rename { site: String, new_name: String },
    Duplicate { site: String, new_names: Vec<String> },
    Add(SiteSignature),
    DefaultOverride { site: String, state: String },
}

impl SiteTransform {
    /// The parent site this transform acts on; `None` for additions.
    pub fn source_site(&self) -> Option<&str> {
        match self {
            SiteTransform::Delete(s) => Some(s),
            SiteTransform::Rename { site, .. }
            | SiteTransform::Duplicate { site, .. }
            | SiteTransform::DefaultOverride { site, .. } => Some(site),
            SiteTransform::Add(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariantDecl {
    pub child: String,
    pub parent: String,
    pub transforms: Vec<SiteTransform>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondCondition {
    /// `site?`: anything goes.
    Unspecified,
    /// Bare `site`: the site must be free.
    Free,
    /// `site!n`: bound to the other endpoint labelled `n`.
    Bound(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteCondition {
    pub site: String,
    pub state: Option<String>,
    pub bond: BondCondition,
}

impl SiteCondition {
    pub fn free(site: impl Into<String>) -> Self {
        SiteCondition { site: site.into(), state: None, bond: BondCondition::Free }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentPattern {
    pub agent: String,
    pub sites: Vec<SiteCondition>,
}

impl AgentPattern {
    pub fn site(&self, name: &str) -> Option<&SiteCondition> {
        self.sites.iter().find(|s| s.site == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RateExpr {
    Value(f64),
    Param(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub name: String,
    pub lhs: Vec<AgentPattern>,
    pub rhs: Vec<AgentPattern>,
    pub binary_rate: Option<RateExpr>,
    pub unary_rate: Option<RateExpr>,
    /// Set on the two halves of a `<->` rule.
    pub direction: Option<Direction>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub value: f64,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FringeDecl {
    pub agents: Vec<String>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OccurrenceKey {
    /// Every left-hand occurrence of this agent.
    Agent(String),
    /// One left-hand occurrence, 0-based.
    Index(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionEntry {
    pub key: OccurrenceKey,
    pub target: String,
    /// Explicit choices `source site -> target site`, needed where a site has
    /// several images in the target.
    pub site_choices: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstantiationDecl {
    /// Rule name; the base name of a reversible rule selects both halves.
    pub rule: String,
    pub entries: Vec<SubstitutionEntry>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountExpr {
    Value(u64),
    Param(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitDecl {
    pub count: CountExpr,
    pub complex: Vec<AgentPattern>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservableDecl {
    pub name: String,
    /// Alternatives separated by `|`; the observable is the sum of their counts.
    pub patterns: Vec<Vec<AgentPattern>>,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelAst {
    pub signatures: Vec<AgentSignature>,
    pub variants: Vec<VariantDecl>,
    pub params: Vec<ParamDecl>,
    pub rules: Vec<Rule>,
    pub fringe: Option<FringeDecl>,
    pub instantiations: Vec<InstantiationDecl>,
    pub inits: Vec<InitDecl>,
    pub observables: Vec<ObservableDecl>,
}

impl ModelAst {
    pub fn is_declared_agent(&self, name: &str) -> bool {
        self.signatures.iter().any(|s| s.name == name) || self.variants.iter().any(|v| v.child == name)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    /// Returns a copy with every rule and pattern's bond labels canonicalized.
    pub fn canonical(&self) -> ModelAst {
        let mut ast = self.clone();
        for r in &mut ast.rules {
            r.canonicalize();
        }
        for i in &mut ast.inits {
            canonicalize_pattern(&mut i.complex);
        }
        for o in &mut ast.observables {
            for p in &mut o.patterns {
                canonicalize_pattern(p);
            }
        }
        ast
    }
}

/// A left-hand occurrence endpoint: (agent position, site name).
pub type Endpoint<'a> = (usize, &'a str);

/// Structural effect of a rule, computed from the lhs/rhs difference.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Action {
    Unbind { a: (usize, String), b: (usize, String) },
    Bind { a: (usize, String), b: (usize, String) },
    SetState { agent: usize, site: String, state: String },
}

fn relabel(side: &mut [AgentPattern], map: &mut BTreeMap<u32, u32>) {
    for ap in side {
        for sc in &mut ap.sites {
            if let BondCondition::Bound(l) = sc.bond {
                let next = map.len() as u32;
                let n = *map.entry(l).or_insert(next);
                sc.bond = BondCondition::Bound(n);
            }
        }
    }
}

/// Renumbers bond labels 0..n in first-occurrence order.
pub fn canonicalize_pattern(side: &mut [AgentPattern]) {
    relabel(side, &mut BTreeMap::new());
}

/// Pairs the endpoints carrying each bond label. Labels that do not occur
/// exactly twice are reported as errors.
pub fn bond_pairs(side: &[AgentPattern]) -> Result<BTreeMap<u32, [Endpoint<'_>; 2]>, String> {
    let mut seen: BTreeMap<u32, Vec<Endpoint<'_>>> = BTreeMap::new();
    for (i, ap) in side.iter().enumerate() {
        for sc in &ap.sites {
            if let BondCondition::Bound(l) = sc.bond {
                seen.entry(l).or_default().push((i, sc.site.as_str()));
            }
        }
    }
    let mut out = BTreeMap::new();
    for (l, eps) in seen {
        if eps.len() != 2 {
            return Err(format!("bond label {} occurs {} time(s); expected exactly 2", l, eps.len()));
        }
        if eps[0] == eps[1] {
            return Err(format!("bond label {l} binds a site to itself"));
        }
        out.insert(l, [eps[0], eps[1]]);
    }
    Ok(out)
}

/// Checks that no site is mentioned twice on one agent pattern.
pub fn check_unique_sites(side: &[AgentPattern]) -> Result<(), String> {
    for ap in side {
        let mut names = BTreeSet::new();
        for sc in &ap.sites {
            if !names.insert(sc.site.as_str()) {
                return Err(format!("site {} mentioned twice on agent {}", sc.site, ap.agent));
            }
        }
    }
    Ok(())
}

/// Connected components of a pattern, as sorted lists of agent positions,
/// ordered by their smallest member.
pub fn pattern_components(side: &[AgentPattern]) -> Vec<Vec<usize>> {
    let n = side.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    let mut by_label: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, ap) in side.iter().enumerate() {
        for sc in &ap.sites {
            if let BondCondition::Bound(l) = sc.bond {
                if let Some(&j) = by_label.get(&l) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                } else {
                    by_label.insert(l, i);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

impl Rule {
    pub fn new(name: impl Into<String>, lhs: Vec<AgentPattern>, rhs: Vec<AgentPattern>) -> Self {
        let mut r = Rule {
            name: name.into(),
            lhs,
            rhs,
            binary_rate: None,
            unary_rate: None,
            direction: None,
            span: Span::default(),
        };
        r.canonicalize();
        r
    }

    pub fn canonicalize(&mut self) {
        let mut map = BTreeMap::new();
        relabel(&mut self.lhs, &mut map);
        relabel(&mut self.rhs, &mut map);
    }

    /// Agent names mentioned on the left-hand side, in order.
    pub fn agents(&self) -> impl Iterator<Item = &str> {
        self.lhs.iter().map(|a| a.agent.as_str())
    }

    /// Structural well-formedness: label pairing, matching agents and sites
    /// on both sides, and an expressible lhs→rhs difference.
    pub fn check(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.lhs.is_empty() {
            errs.push("rule has an empty left-hand side".to_string());
        }
        for side in [&self.lhs, &self.rhs] {
            if let Err(e) = check_unique_sites(side) {
                errs.push(e);
            }
            if let Err(e) = bond_pairs(side) {
                errs.push(e);
            }
        }
        if self.lhs.len() != self.rhs.len() {
            errs.push(format!(
                "left-hand side has {} agent(s) but right-hand side has {}; agents cannot be created or deleted",
                self.lhs.len(),
                self.rhs.len()
            ));
            return errs;
        }
        for (i, (l, r)) in self.lhs.iter().zip(&self.rhs).enumerate() {
            if l.agent != r.agent {
                errs.push(format!("agent {} at position {} becomes {} on the right-hand side", l.agent, i, r.agent));
                continue;
            }
            let lsites: BTreeSet<&str> = l.sites.iter().map(|s| s.site.as_str()).collect();
            let rsites: BTreeSet<&str> = r.sites.iter().map(|s| s.site.as_str()).collect();
            if lsites != rsites {
                let only: Vec<&str> = lsites.symmetric_difference(&rsites).copied().collect();
                errs.push(format!("site(s) {} of {} mentioned on one side only", only.join(", "), l.agent));
                continue;
            }
            for ls in &l.sites {
                let rs = r.site(&ls.site).expect("same site sets");
                if ls.state.is_some() != rs.state.is_some() {
                    errs.push(format!(
                        "site {} of {} must mention its internal state on both sides or neither",
                        ls.site, l.agent
                    ));
                }
                let lu = ls.bond == BondCondition::Unspecified;
                let ru = rs.bond == BondCondition::Unspecified;
                if lu != ru {
                    errs.push(format!(
                        "site {} of {} has an unspecified bond on one side only",
                        ls.site, l.agent
                    ));
                }
            }
        }
        errs
    }

    /// Computes bond removals, bond additions and state changes. Assumes
    /// `check()` passed.
    pub fn actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        let lb = bond_pairs(&self.lhs).unwrap_or_default();
        let rb = bond_pairs(&self.rhs).unwrap_or_default();
        let norm = |p: [Endpoint<'_>; 2]| {
            let mut v = [(p[0].0, p[0].1.to_string()), (p[1].0, p[1].1.to_string())];
            v.sort();
            v
        };
        let lset: BTreeSet<_> = lb.values().map(|p| norm(*p)).collect();
        let rset: BTreeSet<_> = rb.values().map(|p| norm(*p)).collect();
        for [a, b] in lset.difference(&rset).cloned() {
            out.push(Action::Unbind { a, b });
        }
        for [a, b] in rset.difference(&lset).cloned() {
            out.push(Action::Bind { a, b });
        }
        for (i, (l, r)) in self.lhs.iter().zip(&self.rhs).enumerate() {
            for rs in &r.sites {
                let ls = l.site(&rs.site);
                if let (Some(new), Some(old)) = (&rs.state, ls.and_then(|s| s.state.as_ref())) {
                    if new != old {
                        out.push(Action::SetState { agent: i, site: rs.site.clone(), state: new.clone() });
                    }
                }
            }
        }
        out
    }

    /// Bond additions must land on endpoints that are free on the left (or
    /// freed by the same rule).
    pub fn check_actions(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let actions = self.actions();
        let freed: BTreeSet<(usize, String)> = actions
            .iter()
            .filter_map(|a| match a {
                Action::Unbind { a, b } => Some([a.clone(), b.clone()]),
                _ => None,
            })
            .flatten()
            .collect();
        for act in &actions {
            if let Action::Bind { a, b } = act {
                for ep in [a, b] {
                    let cond = self.lhs[ep.0].site(&ep.1).map(|s| s.bond);
                    let ok = matches!(cond, Some(BondCondition::Free)) || freed.contains(ep);
                    if !ok {
                        errs.push(format!(
                            "bond added on site {} of {} which is not free on the left-hand side",
                            ep.1, self.lhs[ep.0].agent
                        ));
                    }
                }
            }
        }
        errs
    }

    /// Equality ignoring names, spans and pairing direction.
    pub fn same_structure(&self, other: &Rule) -> bool {
        let (mut a, mut b) = (self.clone(), other.clone());
        a.canonicalize();
        b.canonicalize();
        a.lhs == b.lhs && a.rhs == b.rhs && a.binary_rate == b.binary_rate && a.unary_rate == b.unary_rate
    }

    pub fn same_patterns(&self, other: &Rule) -> bool {
        let (mut a, mut b) = (self.clone(), other.clone());
        a.canonicalize();
        b.canonicalize();
        a.lhs == b.lhs && a.rhs == b.rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ap(agent: &str, sites: &[(&str, Option<&str>, BondCondition)]) -> AgentPattern {
        AgentPattern {
            agent: agent.into(),
            sites: sites
                .iter()
                .map(|(s, st, b)| SiteCondition { site: s.to_string(), state: st.map(str::to_string), bond: *b })
                .collect(),
        }
    }

    #[test]
    fn canonical_labels_follow_first_occurrence() {
        use BondCondition::*;
        let r = Rule::new(
            "r",
            vec![ap("E", &[("k", None, Bound(7))]), ap("S", &[("s", Some("u"), Bound(7))])],
            vec![ap("E", &[("k", None, Bound(7))]), ap("S", &[("s", Some("p"), Bound(7))])],
        );
        assert_eq!(r.lhs[0].sites[0].bond, Bound(0));
        assert_eq!(r.rhs[1].sites[0].bond, Bound(0));
    }

    #[test]
    fn binding_rule_actions() {
        use BondCondition::*;
        let r = Rule::new(
            "r",
            vec![ap("C", &[("r", None, Free)]), ap("C", &[("l", None, Free)])],
            vec![ap("C", &[("r", None, Bound(0))]), ap("C", &[("l", None, Bound(0))])],
        );
        assert!(r.check().is_empty());
        assert!(r.check_actions().is_empty());
        assert_eq!(
            r.actions(),
            vec![Action::Bind { a: (0, "r".into()), b: (1, "l".into()) }]
        );
    }

    #[test]
    fn bond_onto_unspecified_site_is_rejected() {
        use BondCondition::*;
        let r = Rule::new(
            "r",
            vec![ap("A", &[("x", None, Unspecified)]), ap("B", &[("y", None, Free)])],
            vec![ap("A", &[("x", None, Bound(0))]), ap("B", &[("y", None, Bound(0))])],
        );
        assert!(!r.check().is_empty());
    }

    #[test]
    fn components_split_on_bonds() {
        use BondCondition::*;
        let side = vec![
            ap("A", &[("x", None, Bound(0))]),
            ap("B", &[("y", None, Free)]),
            ap("C", &[("z", None, Bound(0))]),
        ];
        assert_eq!(pattern_components(&side), vec![vec![0, 2], vec![1]]);
    }
}
