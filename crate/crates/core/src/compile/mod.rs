//! Agent resolution (compiling generic rules down to a concrete fringe) and
//! rule resolution (explicit instantiation of rule occurrences).

mod emit;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::diag::{Diagnostics, Span};
use crate::hierarchy::{Hierarchy, HierarchyError};
use crate::syntax::{
    AgentPattern, CountExpr, InitDecl, ModelAst, OccurrenceKey, ParamDecl, RateExpr, Rule, BondCondition,
};

pub use emit::{emit_json, emit_text};

/// Assignment for one left-hand occurrence: its new agent and, per mentioned
/// site, the chosen image site.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccurrenceSub {
    pub index: usize,
    pub source: String,
    pub target: String,
    pub sites: Vec<(String, String)>,
}

/// Occurrences not listed are left unchanged.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution(pub Vec<OccurrenceSub>);

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, o) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            let moved: Vec<String> =
                o.sites.iter().filter(|(s, t)| s != t).map(|(s, t)| format!("{s}->{t}")).collect();
            if o.source == o.target && moved.is_empty() {
                f.write_str(&o.source)?;
            } else {
                write!(f, "{}->{}", o.source, o.target)?;
                if !moved.is_empty() {
                    write!(f, "{{{}}}", moved.join(", "))?;
                }
            }
        }
        Ok(())
    }
}

impl Substitution {
    /// The substitution turning `from` into `to`, read off position by
    /// position. Both rules must have the same shape.
    pub fn between(from: &Rule, to: &Rule) -> Substitution {
        Substitution(
            from.lhs
                .iter()
                .zip(&to.lhs)
                .enumerate()
                .map(|(index, (a, b))| OccurrenceSub {
                    index,
                    source: a.agent.clone(),
                    target: b.agent.clone(),
                    sites: a.sites.iter().zip(&b.sites).map(|(s, t)| (s.site.clone(), t.site.clone())).collect(),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("site {site} of {agent} is deleted in {target}")]
    DeletedSite { agent: String, site: String, target: String },
    #[error("{target} is not a descendant of {agent}")]
    NotADescendant { agent: String, target: String },
    #[error("site choice {choice} for {agent}.{site} is not among its images {{{image}}} in {target}")]
    SiteChoiceOutsideImage { agent: String, site: String, target: String, choice: String, image: String },
    #[error("site {site} of {agent} has several images {{{image}}} in {target}; choose one")]
    AmbiguousSite { agent: String, site: String, target: String, image: String },
    #[error("{agent} has no site {site}")]
    UnknownSite { agent: String, site: String },
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("occurrence {index} does not exist (the rule has {len} left-hand agents)")]
    NoSuchOccurrence { index: usize, len: usize },
    #[error("occurrence {index} is {found}, not {expected}")]
    WrongAgent { index: usize, expected: String, found: String },
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

/// Applies `sub` to `rule`. States, bond labels and rates are kept; the
/// result may still be generic.
pub fn instantiate_rule(rule: &Rule, h: &Hierarchy, sub: &Substitution) -> Result<Rule, CompileError> {
    let mut out = rule.clone();
    for o in &sub.0 {
        let occ = rule.lhs.get(o.index).ok_or(CompileError::NoSuchOccurrence { index: o.index, len: rule.lhs.len() })?;
        if occ.agent != o.source {
            return Err(CompileError::WrongAgent { index: o.index, expected: o.source.clone(), found: occ.agent.clone() });
        }
        let renamed = map_occurrence(occ, h, &o.target, &o.sites)?;
        out.lhs[o.index] = renamed;
        if let Some(r) = rule.rhs.get(o.index) {
            out.rhs[o.index] = map_occurrence(r, h, &o.target, &o.sites)?;
        }
    }
    Ok(out)
}

fn map_occurrence(
    occ: &AgentPattern,
    h: &Hierarchy,
    target: &str,
    choices: &[(String, String)],
) -> Result<AgentPattern, CompileError> {
    let agent = &occ.agent;
    if !h.contains(agent) {
        return Err(CompileError::UnknownAgent(agent.clone()));
    }
    if !h.contains(target) {
        return Err(CompileError::UnknownAgent(target.into()));
    }
    if !h.reaches(agent, target) {
        return Err(CompileError::NotADescendant { agent: agent.clone(), target: target.into() });
    }
    let sm = h.site_map(agent, target)?;
    let image = |site: &str| -> Result<&[String], CompileError> {
        sm.image(site).ok_or_else(|| CompileError::UnknownSite { agent: agent.clone(), site: site.into() })
    };
    for (s, c) in choices {
        let img = image(s)?;
        if !img.contains(c) {
            return Err(CompileError::SiteChoiceOutsideImage {
                agent: agent.clone(),
                site: s.clone(),
                target: target.into(),
                choice: c.clone(),
                image: img.join(" "),
            });
        }
    }
    let mut out = AgentPattern { agent: target.into(), sites: Vec::with_capacity(occ.sites.len()) };
    for sc in &occ.sites {
        let img = image(&sc.site)?;
        let chosen = match choices.iter().find(|(s, _)| *s == sc.site) {
            Some((_, c)) => c.clone(),
            None if img.is_empty() => {
                return Err(CompileError::DeletedSite { agent: agent.clone(), site: sc.site.clone(), target: target.into() })
            }
            None if img.len() == 1 => img[0].clone(),
            None => {
                return Err(CompileError::AmbiguousSite {
                    agent: agent.clone(),
                    site: sc.site.clone(),
                    target: target.into(),
                    image: img.join(" "),
                })
            }
        };
        let mut sc = sc.clone();
        sc.site = chosen;
        out.sites.push(sc);
    }
    Ok(out)
}

/// A concrete rule and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledRule {
    pub rule: Rule,
    /// Name of the generic rule as written in the model.
    pub source: String,
    /// Substitution from the source rule to this one.
    pub substitution: Substitution,
}

#[derive(Clone, Debug, Default)]
pub struct CompiledRuleSet {
    pub rules: Vec<CompiledRule>,
    pub warnings: Diagnostics,
}

impl CompiledRuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&CompiledRule> {
        self.rules.iter().find(|r| r.rule.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().map(|c| &c.rule)
    }
}

#[derive(Clone, Debug, Default)]
pub struct CompileOptions {
    /// Drop (with a warning) rules that mention agents below the fringe
    /// instead of failing.
    pub drop_below_fringe: bool,
}

enum Expansion {
    Instances(Vec<Rule>),
    BelowFringe(String),
}

/// Every concrete instance of `rule`, ordered by substitution.
fn expand(rule: &Rule, h: &Hierarchy, fringe: &[String]) -> Result<Expansion, CompileError> {
    let mut per_occ: Vec<Vec<OccurrenceSub>> = Vec::with_capacity(rule.lhs.len());
    for (index, occ) in rule.lhs.iter().enumerate() {
        let a = &occ.agent;
        if !h.contains(a) {
            return Err(CompileError::UnknownAgent(a.clone()));
        }
        let mut opts = Vec::new();
        if fringe.iter().any(|f| f == a) {
            for sc in &occ.sites {
                if h.interface_site(a, &sc.site).is_none() {
                    return Err(CompileError::UnknownSite { agent: a.clone(), site: sc.site.clone() });
                }
            }
            opts.push(OccurrenceSub {
                index,
                source: a.clone(),
                target: a.clone(),
                sites: occ.sites.iter().map(|s| (s.site.clone(), s.site.clone())).collect(),
            });
        } else {
            if let Some(f) = fringe.iter().find(|f| h.is_strict_ancestor(f, a)) {
                return Ok(Expansion::BelowFringe(format!("{a} lies below concrete agent {f}")));
            }
            for t in h.fringe_descendants(a, fringe) {
                let sm = h.site_map(a, &t)?;
                let mut images = Vec::with_capacity(occ.sites.len());
                for sc in &occ.sites {
                    let img = sm
                        .image(&sc.site)
                        .ok_or_else(|| CompileError::UnknownSite { agent: a.clone(), site: sc.site.clone() })?;
                    images.push(img);
                }
                if images.iter().any(|i| i.is_empty()) {
                    continue;
                }
                for choice in product(&images) {
                    opts.push(OccurrenceSub {
                        index,
                        source: a.clone(),
                        target: t.clone(),
                        sites: occ.sites.iter().map(|s| s.site.clone()).zip(choice).collect(),
                    });
                }
            }
        }
        per_occ.push(opts);
    }
    let mut out = Vec::new();
    for combo in product(&per_occ) {
        out.push(instantiate_rule(rule, h, &Substitution(combo))?);
    }
    Ok(Expansion::Instances(out))
}

/// Cartesian product, first list slowest.
fn product<T: Clone, L: AsRef<[T]>>(lists: &[L]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for l in lists {
        let l = l.as_ref();
        let mut next = Vec::with_capacity(acc.len() * l.len());
        for prefix in &acc {
            for x in l {
                let mut p = prefix.clone();
                p.push(x.clone());
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// Compiles `rules` to the concrete fringe. Each entry pairs the rule to
/// expand with the generic rule it stems from, for provenance.
fn compile_with_origin(
    rules: &[(Rule, &Rule)],
    h: &Hierarchy,
    fringe: &[String],
    opts: &CompileOptions,
) -> Result<CompiledRuleSet, Diagnostics> {
    let mut diags = Diagnostics::new();
    let mut out = CompiledRuleSet::default();
    for (rule, origin) in rules {
        let instances = match expand(rule, h, fringe) {
            Ok(Expansion::Instances(v)) => v,
            Ok(Expansion::BelowFringe(why)) => {
                let msg = format!("rule '{}' mentions an agent below the concrete fringe: {why}", rule.name);
                if opts.drop_below_fringe {
                    out.warnings.warning(rule.span, format!("{msg}; dropped"));
                } else {
                    diags.error(rule.span, msg);
                }
                continue;
            }
            Err(e) => {
                diags.error(rule.span, format!("rule '{}': {e}", rule.name));
                continue;
            }
        };
        if instances.is_empty() {
            out.warnings.warning(rule.span, format!("rule '{}' has no concrete instance", rule.name));
        }
        let mut kept: Vec<Rule> = Vec::new();
        for inst in instances {
            if let Some(prev) = out.rules.iter().map(|c| &c.rule).chain(kept.iter()).find(|r| r.same_patterns(&inst)) {
                if prev.same_structure(&inst) {
                    continue;
                }
                out.warnings.warning(
                    rule.span,
                    format!("rule '{}' yields an instance equal to '{}' up to rates; both kept", rule.name, prev.name),
                );
            }
            kept.push(inst);
        }
        let single = kept.len() == 1;
        for (k, mut r) in kept.into_iter().enumerate() {
            r.canonicalize();
            r.name = if single { rule.name.clone() } else { format!("{}/{}", rule.name, k + 1) };
            let substitution = Substitution::between(origin, &r);
            out.rules.push(CompiledRule { rule: r, source: origin.name.clone(), substitution });
        }
    }
    if diags.has_errors() {
        Err(diags)
    } else {
        Ok(out)
    }
}

/// Expands every rule into its concrete instances over `fringe`: the cross
/// product, per left-hand occurrence, of fringe descendants and image-site
/// choices, skipping instances that would mention a deleted site. Structural
/// duplicates are removed; order follows the source rules, then substitutions.
pub fn compile_rules(
    rules: &[Rule],
    h: &Hierarchy,
    fringe: &[String],
    opts: &CompileOptions,
) -> Result<CompiledRuleSet, Diagnostics> {
    let pairs: Vec<(Rule, &Rule)> = rules.iter().map(|r| (r.clone(), r)).collect();
    compile_with_origin(&pairs, h, fringe, opts)
}

/// Applies the model's `%instantiate:` declarations. A rule with declarations
/// is replaced by its instances, named `<rule>/i<k>`; the second element of
/// each pair is the rule as written.
pub fn apply_instantiations<'a>(ast: &'a ModelAst, h: &Hierarchy) -> Result<Vec<(Rule, &'a Rule)>, Diagnostics> {
    let mut diags = Diagnostics::new();
    let mut out = Vec::new();
    for rule in &ast.rules {
        let base = rule.name.strip_suffix(".fwd").or_else(|| rule.name.strip_suffix(".rev"));
        let decls: Vec<_> = ast
            .instantiations
            .iter()
            .filter(|d| d.rule == rule.name || (rule.direction.is_some() && Some(d.rule.as_str()) == base))
            .collect();
        if decls.is_empty() {
            out.push((rule.clone(), rule));
            continue;
        }
        for (k, d) in decls.iter().enumerate() {
            match substitution_for(rule, &d.entries) {
                Ok(sub) => match instantiate_rule(rule, h, &sub) {
                    Ok(mut r) => {
                        r.name = format!("{}/i{}", rule.name, k + 1);
                        r.span = d.span;
                        out.push((r, rule));
                    }
                    Err(e) => diags.error(d.span, format!("instantiating '{}': {e}", rule.name)),
                },
                Err(msg) => diags.error(d.span, format!("instantiating '{}': {msg}", rule.name)),
            }
        }
    }
    if diags.has_errors() {
        Err(diags)
    } else {
        Ok(out)
    }
}

fn substitution_for(rule: &Rule, entries: &[crate::syntax::SubstitutionEntry]) -> Result<Substitution, String> {
    let mut subs: Vec<OccurrenceSub> = Vec::new();
    for e in entries {
        let indices: Vec<usize> = match &e.key {
            OccurrenceKey::Index(i) => {
                if *i >= rule.lhs.len() {
                    return Err(format!("occurrence {i} does not exist"));
                }
                vec![*i]
            }
            OccurrenceKey::Agent(a) => {
                let v: Vec<usize> = (0..rule.lhs.len()).filter(|&i| rule.lhs[i].agent == *a).collect();
                if v.is_empty() {
                    return Err(format!("the rule does not mention {a}"));
                }
                v
            }
        };
        for index in indices {
            if subs.iter().any(|s| s.index == index) {
                return Err(format!("occurrence {index} is substituted twice"));
            }
            subs.push(OccurrenceSub {
                index,
                source: rule.lhs[index].agent.clone(),
                target: e.target.clone(),
                sites: e.site_choices.clone(),
            });
        }
    }
    subs.sort();
    Ok(Substitution(subs))
}

/// An observable after compilation: the sum of its concrete patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledObservable {
    pub name: String,
    pub patterns: Vec<Vec<AgentPattern>>,
}

/// A model resolved down to its concrete fringe.
#[derive(Clone, Debug)]
pub struct ResolvedModel {
    pub hierarchy: Hierarchy,
    pub fringe: Vec<String>,
    pub params: Vec<ParamDecl>,
    pub rules: CompiledRuleSet,
    pub observables: Vec<CompiledObservable>,
    pub inits: Vec<InitDecl>,
    /// Initial complexes mentioning non-concrete agents; kept out of the
    /// mixture and reported.
    pub dropped_inits: Vec<InitDecl>,
    pub warnings: Diagnostics,
}

impl ResolvedModel {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    /// Sets a declared parameter; `false` if it is not declared.
    pub fn set_param(&mut self, name: &str, value: f64) -> bool {
        match self.params.iter_mut().find(|p| p.name == name) {
            Some(p) => {
                p.value = value;
                true
            }
            None => false,
        }
    }

    /// Numeric value of a rate; an absent rate counts as 1.
    pub fn rate(&self, r: &Option<RateExpr>) -> Option<f64> {
        match r {
            None => Some(1.0),
            Some(RateExpr::Value(v)) => Some(*v),
            Some(RateExpr::Param(p)) => self.param(p),
        }
    }

    pub fn count(&self, c: &CountExpr) -> Option<u64> {
        match c {
            CountExpr::Value(v) => Some(*v),
            CountExpr::Param(p) => {
                let v = self.param(p)?;
                (v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64).then_some(v as u64)
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ResolveOptions {
    /// Replaces the model's `%concrete:` declaration.
    pub fringe: Option<Vec<String>>,
    pub compile: CompileOptions,
}

/// Builds the hierarchy, applies instantiations, compiles rules and
/// observables to the fringe and checks the initial mixture.
pub fn resolve_model(ast: &ModelAst, opts: &ResolveOptions) -> Result<ResolvedModel, Diagnostics> {
    let h = Hierarchy::from_ast(ast)?;
    let fringe_span = ast.fringe.as_ref().map(|f| f.span).unwrap_or_default();
    let declared = opts.fringe.as_deref().or(ast.fringe.as_ref().map(|f| f.agents.as_slice()));
    let (fringe, mut diags) = h.validate_fringe(declared, fringe_span);
    if diags.has_errors() {
        return Err(diags);
    }
    let mut warnings = Diagnostics::new();
    warnings.extend(std::mem::take(&mut diags));

    for r in &ast.rules {
        for rate in [&r.binary_rate, &r.unary_rate].into_iter().flatten() {
            if let RateExpr::Param(p) = rate {
                if ast.param(p).is_none() {
                    diags.error(r.span, format!("undeclared rate parameter {p} in rule '{}'", r.name));
                }
            }
        }
    }

    let working = match apply_instantiations(ast, &h) {
        Ok(w) => w,
        Err(d) => {
            diags.extend(d);
            return Err(diags);
        }
    };
    let rules = match compile_with_origin(&working, &h, &fringe, &opts.compile) {
        Ok(mut c) => {
            warnings.extend(std::mem::take(&mut c.warnings));
            c
        }
        Err(d) => {
            diags.extend(d);
            CompiledRuleSet::default()
        }
    };

    let mut observables = Vec::new();
    for o in &ast.observables {
        let mut patterns: Vec<Vec<AgentPattern>> = Vec::new();
        for p in &o.patterns {
            let probe = Rule { span: o.span, ..Rule::new(o.name.clone(), p.clone(), p.clone()) };
            match expand(&probe, &h, &fringe) {
                Ok(Expansion::Instances(v)) => {
                    for r in v {
                        if !patterns.contains(&r.lhs) {
                            patterns.push(r.lhs);
                        }
                    }
                }
                Ok(Expansion::BelowFringe(why)) => {
                    diags.error(o.span, format!("observable '{}' mentions an agent below the concrete fringe: {why}", o.name))
                }
                Err(e) => diags.error(o.span, format!("observable '{}': {e}", o.name)),
            }
        }
        if patterns.is_empty() && !diags.has_errors() {
            warnings.warning(o.span, format!("observable '{}' has no concrete instance", o.name));
        }
        observables.push(CompiledObservable { name: o.name.clone(), patterns });
    }

    let mut inits = Vec::new();
    let mut dropped_inits = Vec::new();
    for init in &ast.inits {
        if let Some(a) = init.complex.iter().find(|a| !fringe.contains(&a.agent)) {
            warnings.warning(init.span, format!("initial complex mentions {}, which is not concrete; ignored", a.agent));
            dropped_inits.push(init.clone());
        } else {
            check_init(init, &h, ast, &mut diags);
            inits.push(init.clone());
        }
    }

    if diags.has_errors() {
        return Err(diags);
    }
    Ok(ResolvedModel {
        hierarchy: h,
        fringe,
        params: ast.params.clone(),
        rules,
        observables,
        inits,
        dropped_inits,
        warnings,
    })
}

fn check_init(init: &InitDecl, h: &Hierarchy, ast: &ModelAst, diags: &mut Diagnostics) {
    let span: Span = init.span;
    if let CountExpr::Param(p) = &init.count {
        match ast.param(p) {
            None => diags.error(span, format!("undeclared count parameter {p}")),
            Some(v) if v < 0.0 || v.fract() != 0.0 => {
                diags.error(span, format!("count parameter {p} = {v} is not a nonnegative integer"))
            }
            _ => {}
        }
    }
    for ap in &init.complex {
        for sc in &ap.sites {
            let Some(site) = h.interface_site(&ap.agent, &sc.site) else {
                diags.error(span, format!("{} has no site {}", ap.agent, sc.site));
                continue;
            };
            if let Some(st) = &sc.state {
                if !site.states.contains(st) {
                    diags.error(
                        span,
                        format!("state {st} is outside the states {{{}}} of {}.{}", site.states.join(","), ap.agent, sc.site),
                    );
                }
            }
            if sc.bond == BondCondition::Unspecified {
                diags.error(span, format!("initial site {}.{} must be free or bound", ap.agent, sc.site));
            }
        }
    }
}

/// Names of rules in a set that share `source`, in output order.
pub fn instances_of<'a>(set: &'a CompiledRuleSet, source: &str) -> Vec<&'a CompiledRule> {
    set.rules.iter().filter(|c| c.source == source).collect()
}

/// Distinct agent names a compiled rule set mentions.
pub fn mentioned_agents(set: &CompiledRuleSet) -> BTreeSet<String> {
    set.iter().flat_map(|r| r.lhs.iter().map(|a| a.agent.clone())).collect()
}
