//! Agent hierarchies: a DAG of agents rooted at the agents declared ab
//! initio, where every edge derives a child interface from its parent by site
//! transforms.
//!
//! A node with several parent declarations is an alias; its interface is the
//! merge of the per-parent derivations. Internal-state alphabets are the
//! declared states plus every state the rules mention on that site, shared by
//! all sites that descend from the same declared site.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::diag::{Diagnostics, Span};
use crate::syntax::{AgentSignature, ModelAst, SiteTransform, VariantDecl};

pub use report::lint_report;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("{ancestor} is not an ancestor of {descendant}")]
    NotAnAncestor { ancestor: String, descendant: String },
    #[error("incoherent site map from {ancestor} to {descendant}: site {site} maps to {{{first}}} along one derivation and {{{second}}} along another")]
    Incoherent { ancestor: String, descendant: String, site: String, first: String, second: String },
    #[error("unknown agent {0}")]
    UnknownAgent(String),
}

/// A site of an effective interface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceSite {
    pub name: String,
    pub states: Vec<String>,
    pub default_state: Option<String>,
}

/// A declared site (of a root or an added site) that interface sites descend
/// from: `(declaring agent, site name)`.
type Origin = (String, String);

#[derive(Clone, Debug)]
struct WorkSite {
    name: String,
    declared: Vec<String>,
    default_state: Option<String>,
    origins: BTreeSet<Origin>,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub parent: String,
    pub child: String,
    pub transforms: Vec<SiteTransform>,
    pub span: Span,
}

#[derive(Clone, Debug)]
struct Node {
    name: String,
    is_root: bool,
    /// Indices into `edges` of edges ending here, in declaration order.
    in_edges: Vec<usize>,
    children: Vec<usize>,
    interface: Vec<InterfaceSite>,
    span: Span,
}

/// A state mentioned on `agent.site` somewhere in the model.
#[derive(Clone, Debug)]
pub struct StateUsage {
    pub agent: String,
    pub site: String,
    pub state: String,
    pub span: Span,
}

/// For an (ancestor, descendant) pair, the descendant sites each ancestor
/// site becomes. Images are listed in the descendant's interface order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteMap {
    pub source: String,
    pub target: String,
    pub map: Vec<(String, Vec<String>)>,
}

impl SiteMap {
    pub fn image(&self, site: &str) -> Option<&[String]> {
        self.map.iter().find(|(s, _)| s == site).map(|(_, img)| img.as_slice())
    }
}

#[derive(Clone, Debug)]
pub struct Hierarchy {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: BTreeMap<String, usize>,
    /// Node ids in topological order (parents first, ties by declaration).
    topo: Vec<usize>,
    /// Strict descendants of each node.
    below: Vec<BTreeSet<usize>>,
}

struct Union {
    parent: BTreeMap<Origin, Origin>,
}

impl Union {
    fn find(&mut self, x: &Origin) -> Origin {
        let mut cur = x.clone();
        while let Some(p) = self.parent.get(&cur) {
            if *p == cur {
                break;
            }
            cur = p.clone();
        }
        cur
    }

    fn union(&mut self, a: &Origin, b: &Origin) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo);
        }
    }
}

impl Hierarchy {
    /// Builds the hierarchy of a parsed model, inferring state alphabets from
    /// the states its rules mention.
    pub fn from_ast(ast: &ModelAst) -> Result<Hierarchy, Diagnostics> {
        let mut usages = Vec::new();
        for r in &ast.rules {
            for ap in r.lhs.iter().chain(&r.rhs) {
                for sc in &ap.sites {
                    if let Some(st) = &sc.state {
                        usages.push(StateUsage {
                            agent: ap.agent.clone(),
                            site: sc.site.clone(),
                            state: st.clone(),
                            span: r.span,
                        });
                    }
                }
            }
        }
        Hierarchy::build(&ast.signatures, &ast.variants, &usages)
    }

    /// Builds and validates the DAG and computes every effective interface.
    pub fn build(
        signatures: &[AgentSignature],
        variants: &[VariantDecl],
        usages: &[StateUsage],
    ) -> Result<Hierarchy, Diagnostics> {
        let mut diags = Diagnostics::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut index = BTreeMap::new();
        for s in signatures {
            if index.contains_key(&s.name) {
                diags.error(s.span, format!("duplicate declaration of agent {}", s.name));
                continue;
            }
            index.insert(s.name.clone(), nodes.len());
            nodes.push(Node {
                name: s.name.clone(),
                is_root: true,
                in_edges: vec![],
                children: vec![],
                interface: vec![],
                span: s.span,
            });
        }
        for v in variants {
            if let Some(&i) = index.get(&v.child) {
                if nodes[i].is_root {
                    diags.error(v.span, format!("{} is declared ab initio and cannot also be a variant", v.child));
                }
                continue;
            }
            index.insert(v.child.clone(), nodes.len());
            nodes.push(Node {
                name: v.child.clone(),
                is_root: false,
                in_edges: vec![],
                children: vec![],
                interface: vec![],
                span: v.span,
            });
        }
        let mut edges = Vec::new();
        for v in variants {
            let (Some(&c), Some(&p)) = (index.get(&v.child), index.get(&v.parent)) else {
                diags.error(v.span, format!("unknown parent agent {} for {}", v.parent, v.child));
                continue;
            };
            if nodes[c].is_root {
                continue;
            }
            nodes[c].in_edges.push(edges.len());
            if !nodes[p].children.contains(&c) {
                nodes[p].children.push(c);
            }
            edges.push(Edge { parent: v.parent.clone(), child: v.child.clone(), transforms: v.transforms.clone(), span: v.span });
        }
        if diags.has_errors() {
            return Err(diags);
        }

        // Kahn's algorithm with declaration-order tie breaking.
        let n = nodes.len();
        let mut indeg: Vec<usize> = nodes.iter().map(|nd| nd.in_edges.len()).collect();
        let mut by_line: Vec<usize> = (0..n).collect();
        by_line.sort_by_key(|&i| (nodes[i].span.line, nodes[i].span.col));
        let mut rank = vec![0; n];
        for (r, &i) in by_line.iter().enumerate() {
            rank[i] = r;
        }
        let mut ready: BTreeSet<(usize, usize)> = (0..n).filter(|&i| indeg[i] == 0).map(|i| (rank[i], i)).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some((_, i)) = ready.pop_first() {
            topo.push(i);
            for e in edges.iter().filter(|e| e.parent == nodes[i].name) {
                let c = index[&e.child];
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert((rank[c], c));
                }
            }
        }
        if topo.len() < n {
            let cyc: Vec<&str> = (0..n).filter(|&i| indeg[i] > 0).map(|i| nodes[i].name.as_str()).collect();
            let span = (0..n).find(|&i| indeg[i] > 0).map(|i| nodes[i].span).unwrap_or_default();
            diags.error(span, format!("cycle detected in agent hierarchy among: {}", cyc.join(", ")));
            return Err(diags);
        }

        let mut below: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &i in topo.iter().rev() {
            let mut acc = BTreeSet::new();
            for &c in &nodes[i].children {
                acc.insert(c);
                acc.extend(below[c].iter().copied());
            }
            below[i] = acc;
        }

        // Structural pass: names, declared states, defaults and origins.
        let sig_by_name: BTreeMap<&str, &AgentSignature> = signatures.iter().map(|s| (s.name.as_str(), s)).collect();
        let mut work: Vec<Vec<WorkSite>> = vec![Vec::new(); n];
        let mut overrides: Vec<(usize, String, String, Span)> = Vec::new();
        for &i in &topo {
            let node = &nodes[i];
            if node.is_root {
                let sig = sig_by_name[node.name.as_str()];
                work[i] = sig
                    .sites
                    .iter()
                    .map(|s| WorkSite {
                        name: s.name.clone(),
                        declared: s.states.clone(),
                        default_state: s.default_state.clone(),
                        origins: BTreeSet::from([(node.name.clone(), s.name.clone())]),
                    })
                    .collect();
                continue;
            }
            let mut merged: Vec<WorkSite> = Vec::new();
            for &ei in &node.in_edges {
                let e = &edges[ei];
                let p = index[&e.parent];
                let derived = match derive(&node.name, &work[p], &e.transforms) {
                    Ok((d, ovr)) => {
                        for (site, state) in ovr {
                            overrides.push((i, site, state, e.span));
                        }
                        d
                    }
                    Err(msg) => {
                        diags.error(e.span, msg);
                        continue;
                    }
                };
                for site in derived {
                    if let Some(m) = merged.iter_mut().find(|m| m.name == site.name) {
                        let a: BTreeSet<&String> = m.declared.iter().collect();
                        let b: BTreeSet<&String> = site.declared.iter().collect();
                        if a != b || m.default_state != site.default_state {
                            diags.error(
                                e.span,
                                format!(
                                    "alias interface conflict: site {} of {} has states {{{}}} default {} via one parent and states {{{}}} default {} via {}",
                                    site.name,
                                    node.name,
                                    m.declared.join(","),
                                    m.default_state.as_deref().unwrap_or("none"),
                                    site.declared.join(","),
                                    site.default_state.as_deref().unwrap_or("none"),
                                    e.parent
                                ),
                            );
                        }
                        m.origins.extend(site.origins);
                    } else {
                        merged.push(site);
                    }
                }
            }
            work[i] = merged;
        }
        if diags.has_errors() {
            return Err(diags);
        }

        // Alphabet classes: origins merged into one site share an alphabet.
        let mut uf = Union { parent: BTreeMap::new() };
        for sites in &work {
            for s in sites {
                let mut it = s.origins.iter();
                if let Some(first) = it.next() {
                    uf.parent.entry(first.clone()).or_insert_with(|| first.clone());
                    for o in it {
                        uf.parent.entry(o.clone()).or_insert_with(|| o.clone());
                        uf.union(first, o);
                    }
                }
            }
        }
        let mut alphabets: BTreeMap<Origin, Vec<String>> = BTreeMap::new();
        for sites in &work {
            for s in sites {
                let class = uf.find(s.origins.iter().next().expect("every site has an origin"));
                let alpha = alphabets.entry(class).or_default();
                for st in &s.declared {
                    if !alpha.contains(st) {
                        alpha.push(st.clone());
                    }
                }
            }
        }
        for u in usages {
            let Some(&i) = index.get(&u.agent) else { continue };
            let Some(site) = work[i].iter().find(|s| s.name == u.site) else { continue };
            let class = uf.find(site.origins.iter().next().unwrap());
            let alpha = alphabets.entry(class).or_default();
            if alpha.is_empty() {
                diags.error(
                    u.span,
                    format!("site {} of {} has no internal state but is given state {}", u.site, u.agent, u.state),
                );
            } else if !alpha.contains(&u.state) {
                alpha.push(u.state.clone());
            }
        }
        for (i, sites) in work.iter().enumerate() {
            nodes[i].interface = sites
                .iter()
                .map(|s| {
                    let class = uf.find(s.origins.iter().next().unwrap());
                    InterfaceSite {
                        name: s.name.clone(),
                        states: alphabets.get(&class).cloned().unwrap_or_default(),
                        default_state: s.default_state.clone(),
                    }
                })
                .collect();
        }
        for (i, site, state, span) in overrides {
            let node = &nodes[i];
            if let Some(s) = node.interface.iter().find(|s| s.name == site) {
                if !s.states.contains(&state) {
                    diags.error(
                        span,
                        format!(
                            "default state {state} for site {site} of {} is outside its states {{{}}}",
                            node.name,
                            s.states.join(",")
                        ),
                    );
                }
            }
        }
        if diags.has_errors() {
            return Err(diags);
        }
        Ok(Hierarchy { nodes, edges, index, topo, below })
    }

    pub fn contains(&self, agent: &str) -> bool {
        self.index.contains_key(agent)
    }

    fn id(&self, agent: &str) -> Option<usize> {
        self.index.get(agent).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Agent names in topological order.
    pub fn topological_order(&self) -> Vec<&str> {
        self.topo.iter().map(|&i| self.nodes[i].name.as_str()).collect()
    }

    pub fn roots(&self) -> Vec<&str> {
        self.topo.iter().filter(|&&i| self.nodes[i].is_root).map(|&i| self.nodes[i].name.as_str()).collect()
    }

    /// Nodes without children, in topological order.
    pub fn leaves(&self) -> Vec<&str> {
        self.topo
            .iter()
            .filter(|&&i| self.nodes[i].children.is_empty())
            .map(|&i| self.nodes[i].name.as_str())
            .collect()
    }

    pub fn is_root(&self, agent: &str) -> bool {
        self.id(agent).is_some_and(|i| self.nodes[i].is_root)
    }

    pub fn parents(&self, agent: &str) -> Vec<&str> {
        match self.id(agent) {
            Some(i) => self.nodes[i].in_edges.iter().map(|&e| self.edges[e].parent.as_str()).collect(),
            None => vec![],
        }
    }

    pub fn children(&self, agent: &str) -> Vec<&str> {
        match self.id(agent) {
            Some(i) => self.nodes[i].children.iter().map(|&c| self.nodes[c].name.as_str()).collect(),
            None => vec![],
        }
    }

    /// Agents with two or more parent definitions.
    pub fn aliases(&self) -> Vec<&str> {
        self.topo
            .iter()
            .filter(|&&i| self.nodes[i].in_edges.len() >= 2)
            .map(|&i| self.nodes[i].name.as_str())
            .collect()
    }

    pub fn interface(&self, agent: &str) -> Option<&[InterfaceSite]> {
        self.id(agent).map(|i| self.nodes[i].interface.as_slice())
    }

    pub fn interface_site(&self, agent: &str, site: &str) -> Option<&InterfaceSite> {
        self.interface(agent)?.iter().find(|s| s.name == site)
    }

    /// The effective interface as a signature.
    pub fn signature(&self, agent: &str) -> Option<AgentSignature> {
        let i = self.id(agent)?;
        Some(AgentSignature {
            name: agent.to_string(),
            sites: self.nodes[i]
                .interface
                .iter()
                .map(|s| crate::syntax::SiteSignature {
                    name: s.name.clone(),
                    states: s.states.clone(),
                    default_state: s.default_state.clone(),
                })
                .collect(),
            span: self.nodes[i].span,
        })
    }

    pub fn span(&self, agent: &str) -> Span {
        self.id(agent).map(|i| self.nodes[i].span).unwrap_or_default()
    }

    /// True iff `ancestor` reaches `descendant` through at least one edge.
    pub fn is_strict_ancestor(&self, ancestor: &str, descendant: &str) -> bool {
        match (self.id(ancestor), self.id(descendant)) {
            (Some(a), Some(d)) => self.below[a].contains(&d),
            _ => false,
        }
    }

    /// `ancestor == descendant` or a strict ancestor.
    pub fn reaches(&self, ancestor: &str, descendant: &str) -> bool {
        ancestor == descendant && self.contains(ancestor) || self.is_strict_ancestor(ancestor, descendant)
    }

    /// Descendant sites of every `ancestor` site, composed along all
    /// derivation paths. Paths that delete a site contribute nothing; paths
    /// that keep it must agree.
    pub fn site_map(&self, ancestor: &str, descendant: &str) -> Result<SiteMap, HierarchyError> {
        let a = self.id(ancestor).ok_or_else(|| HierarchyError::UnknownAgent(ancestor.into()))?;
        let d = self.id(descendant).ok_or_else(|| HierarchyError::UnknownAgent(descendant.into()))?;
        let a_sites: Vec<String> = self.nodes[a].interface.iter().map(|s| s.name.clone()).collect();
        if a == d {
            return Ok(SiteMap {
                source: ancestor.into(),
                target: descendant.into(),
                map: a_sites.iter().map(|s| (s.clone(), vec![s.clone()])).collect(),
            });
        }
        if !self.below[a].contains(&d) {
            return Err(HierarchyError::NotAnAncestor { ancestor: ancestor.into(), descendant: descendant.into() });
        }
        // maps[node] : ancestor site -> set of node sites
        let mut maps: BTreeMap<usize, BTreeMap<String, BTreeSet<String>>> = BTreeMap::new();
        maps.insert(a, a_sites.iter().map(|s| (s.clone(), BTreeSet::from([s.clone()]))).collect());
        for &n in &self.topo {
            if n == a || !self.below[a].contains(&n) || !(n == d || self.below[n].contains(&d)) {
                continue;
            }
            let mut acc: BTreeMap<String, BTreeSet<String>> = a_sites.iter().map(|s| (s.clone(), BTreeSet::new())).collect();
            for &ei in &self.nodes[n].in_edges {
                let e = &self.edges[ei];
                let p = self.index[&e.parent];
                let Some(pmap) = maps.get(&p) else { continue };
                let emap = edge_map(&self.nodes[p].interface, &e.transforms);
                for (s, imgs) in pmap {
                    let path: BTreeSet<String> =
                        imgs.iter().flat_map(|q| emap.get(q).cloned().unwrap_or_default()).collect();
                    if path.is_empty() {
                        continue;
                    }
                    let cur = acc.get_mut(s).unwrap();
                    if cur.is_empty() {
                        *cur = path;
                    } else if *cur != path {
                        return Err(HierarchyError::Incoherent {
                            ancestor: ancestor.into(),
                            descendant: self.nodes[n].name.clone(),
                            site: s.clone(),
                            first: cur.iter().cloned().collect::<Vec<_>>().join(" "),
                            second: path.into_iter().collect::<Vec<_>>().join(" "),
                        });
                    }
                }
            }
            maps.insert(n, acc);
        }
        let dmap = maps.remove(&d).expect("descendant visited");
        let order: Vec<&str> = self.nodes[d].interface.iter().map(|s| s.name.as_str()).collect();
        let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
        for s in &a_sites {
            for t in &dmap[s] {
                if let Some(prev) = seen.insert(t, s) {
                    return Err(HierarchyError::Incoherent {
                        ancestor: ancestor.into(),
                        descendant: descendant.into(),
                        site: s.clone(),
                        first: format!("{t} (also the image of {prev})"),
                        second: t.clone(),
                    });
                }
            }
        }
        let map = a_sites
            .iter()
            .map(|s| {
                let img = &dmap[s];
                let ordered: Vec<String> = order.iter().filter(|t| img.contains(**t)).map(|t| t.to_string()).collect();
                (s.clone(), ordered)
            })
            .collect();
        Ok(SiteMap { source: ancestor.into(), target: descendant.into(), map })
    }

    /// Fringe agents at or below `agent`, sorted by name.
    pub fn fringe_descendants(&self, agent: &str, fringe: &[String]) -> Vec<String> {
        let mut out: Vec<String> = fringe.iter().filter(|f| self.reaches(agent, f)).cloned().collect();
        out.sort();
        out.dedup();
        out
    }

    /// Resolves the concrete fringe. Without a declaration it is the set of
    /// leaves. A declared fringe is completed with every leaf that no declared
    /// agent covers, so agent families the declaration does not mention stay
    /// concrete. Errors on an empty or unknown fringe; warns when one fringe
    /// agent lies below another.
    pub fn validate_fringe(&self, declared: Option<&[String]>, span: Span) -> (Vec<String>, Diagnostics) {
        let mut diags = Diagnostics::new();
        let mut fringe: Vec<String> = match declared {
            Some(f) => {
                let mut seen = BTreeSet::new();
                f.iter().filter(|a| seen.insert(a.as_str())).cloned().collect()
            }
            None => self.leaves().into_iter().map(String::from).collect(),
        };
        if fringe.is_empty() {
            diags.error(span, "the concrete fringe is empty");
            return (fringe, diags);
        }
        for a in &fringe {
            if !self.contains(a) {
                diags.error(span, format!("fringe agent {a} is not declared"));
            }
        }
        if diags.has_errors() {
            return (fringe, diags);
        }
        for a in &fringe {
            for b in &fringe {
                if a != b && self.is_strict_ancestor(a, b) {
                    diags.warning(span, format!("fringe is not an antichain: {b} lies below {a}"));
                }
            }
        }
        if declared.is_some() {
            let extra: Vec<String> = self
                .leaves()
                .into_iter()
                .filter(|l| !fringe.iter().any(|f| self.reaches(f, l)))
                .map(String::from)
                .collect();
            fringe.extend(extra);
        }
        (fringe, diags)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Applies one edge's transforms to the parent's interface. Returns the
/// derived sites and the default overrides to validate once alphabets are
/// known.
#[allow(clippy::type_complexity)]
fn derive(
    child: &str,
    parent: &[WorkSite],
    transforms: &[SiteTransform],
) -> Result<(Vec<WorkSite>, Vec<(String, String)>), String> {
    let mut out: Vec<WorkSite> = Vec::new();
    let mut overrides = Vec::new();
    for t in transforms {
        if let Some(src) = t.source_site() {
            if !parent.iter().any(|s| s.name == src) {
                return Err(format!("unknown site {src} in the definition of {child}"));
            }
        }
    }
    for s in parent {
        let t = transforms.iter().find(|t| t.source_site() == Some(s.name.as_str()));
        match t {
            None => out.push(s.clone()),
            Some(SiteTransform::Delete(_)) => {}
            Some(SiteTransform::Rename { new_name, .. }) => out.push(WorkSite { name: new_name.clone(), ..s.clone() }),
            Some(SiteTransform::Duplicate { new_names, .. }) => {
                for n in new_names {
                    out.push(WorkSite { name: n.clone(), ..s.clone() });
                }
            }
            Some(SiteTransform::DefaultOverride { state, .. }) => {
                if s.declared.is_empty() && s.default_state.is_none() {
                    // stateless origin; alphabet inference may still add states,
                    // so defer the membership check
                }
                overrides.push((s.name.clone(), state.clone()));
                out.push(WorkSite { default_state: Some(state.clone()), ..s.clone() });
            }
            Some(SiteTransform::Add(_)) => unreachable!("additions have no source site"),
        }
    }
    for t in transforms {
        if let SiteTransform::Add(sig) = t {
            out.push(WorkSite {
                name: sig.name.clone(),
                declared: sig.states.clone(),
                default_state: sig.default_state.clone(),
                origins: BTreeSet::from([(child.to_string(), sig.name.clone())]),
            });
        }
    }
    let mut names = BTreeSet::new();
    for s in &out {
        if !names.insert(s.name.as_str()) {
            return Err(format!("site name {} occurs twice in the interface of {child}", s.name));
        }
    }
    Ok((out, overrides))
}

fn edge_map(parent: &[InterfaceSite], transforms: &[SiteTransform]) -> BTreeMap<String, BTreeSet<String>> {
    parent
        .iter()
        .map(|s| {
            let img = match transforms.iter().find(|t| t.source_site() == Some(s.name.as_str())) {
                Some(SiteTransform::Delete(_)) => BTreeSet::new(),
                Some(SiteTransform::Rename { new_name, .. }) => BTreeSet::from([new_name.clone()]),
                Some(SiteTransform::Duplicate { new_names, .. }) => new_names.iter().cloned().collect(),
                _ => BTreeSet::from([s.name.clone()]),
            };
            (s.name.clone(), img)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_model;

    fn h(text: &str) -> Hierarchy {
        let ast = parse_model(text).unwrap();
        Hierarchy::from_ast(&ast).unwrap_or_else(|d| panic!("{d}"))
    }

    fn herr(text: &str) -> String {
        let ast = parse_model(text).unwrap();
        Hierarchy::from_ast(&ast).unwrap_err().to_string()
    }

    fn names(sites: &[InterfaceSite]) -> Vec<&str> {
        sites.iter().map(|s| s.name.as_str()).collect()
    }

    const MKP: &str = "MAPKSTP(AS,cat~n)\nMAPKYP(AS,cat~n)\nMKP = MAPKSTP[+KIM]\nMKP = MAPKYP[+KIM]\n";

    #[test]
    fn alias_merges_parents() {
        let h = h(MKP);
        let iface = h.interface("MKP").unwrap();
        assert_eq!(names(iface), vec!["AS", "cat", "KIM"]);
        assert_eq!(iface[1].default_state.as_deref(), Some("n"));
        assert_eq!(iface[1].states, vec!["n"]);
        assert!(iface[2].states.is_empty());
        assert_eq!(h.aliases(), vec!["MKP"]);
    }

    #[test]
    fn alias_merge_ignores_parent_order() {
        let swapped = "MAPKSTP(AS,cat~n)\nMAPKYP(AS,cat~n)\nMKP = MAPKYP[+KIM]\nMKP = MAPKSTP[+KIM]\n";
        let a = h(MKP);
        let b = h(swapped);
        let set = |h: &Hierarchy| {
            let mut v: Vec<_> = h.interface("MKP").unwrap().to_vec();
            v.sort_by(|x, y| x.name.cmp(&y.name));
            v
        };
        assert_eq!(set(&a), set(&b));
    }

    #[test]
    fn no_variants_means_all_roots() {
        let h = h("A(x~u)\nB(y)");
        assert_eq!(h.roots(), vec!["A", "B"]);
        assert_eq!(h.leaves(), vec!["A", "B"]);
        assert_eq!(names(h.interface("A").unwrap()), vec!["x"]);
    }

    #[test]
    fn default_override_with_inferred_state() {
        let text = format!(
            "{MKP}JNKP = MKP\np38P = MKP\nDUSP5 = JNKP[cat~y]\nDUSP5 = p38P[cat~y]\nMAPK(T~u)\n\
             MAPKSTP(AS,cat~y), MAPK(T~p) -> MAPKSTP(AS!0,cat~y), MAPK(T~p!0)\n"
        );
        let h = h(&text);
        let cat = h.interface_site("DUSP5", "cat").unwrap();
        assert_eq!(cat.default_state.as_deref(), Some("y"));
        assert_eq!(cat.states, vec!["n", "y"]);
        // the sibling parent shares the alphabet through the MKP alias
        assert_eq!(h.interface_site("MAPKYP", "cat").unwrap().states, vec!["n", "y"]);
        assert_eq!(h.interface_site("JNKP", "cat").unwrap().default_state.as_deref(), Some("n"));
    }

    #[test]
    fn default_override_outside_alphabet() {
        let e = herr("A(s~u)\nB = A[s~z]");
        assert!(e.contains("outside its states"), "{e}");
    }

    #[test]
    fn unknown_site_in_transform() {
        let e = herr("A(x)\nX = A[s\\{t}]");
        assert!(e.contains("unknown site s"), "{e}");
    }

    #[test]
    fn cycles_are_rejected() {
        let e = herr("A(x)\nB = A\nB = C\nC = B");
        assert!(e.contains("cycle"), "{e}");
    }

    #[test]
    fn alias_conflicts() {
        let e = herr("A(x~u)\nB(x~p)\nC = A\nC = B");
        assert!(e.contains("alias interface conflict"), "{e}");
        let e = herr("A(x~u~p)\nB = A[x~p]\nC = A\nD = B\nD = C");
        assert!(e.contains("alias interface conflict"), "{e}");
    }

    #[test]
    fn duplicate_name_clash() {
        let e = herr("A(x,y)\nB = A[x\\{y z}]");
        assert!(e.contains("occurs twice"), "{e}");
    }

    #[test]
    fn stateless_site_given_a_state() {
        let e = herr("A(x)\nA(x~p) -> A(x~q)");
        assert!(e.contains("no internal state"), "{e}");
    }

    #[test]
    fn duplication_site_map() {
        let h = h("C(r,l)\nT = C[r\\{r1 r2}]");
        let m = h.site_map("C", "T").unwrap();
        assert_eq!(m.image("r").unwrap(), ["r1", "r2"]);
        assert_eq!(m.image("l").unwrap(), ["l"]);
    }

    #[test]
    fn shc_site_map() {
        let h = h("Shc(PTB,YXNX~u,SH2)\np52 = Shc[YXNX\\{Y239 Y317}]");
        let m = h.site_map("Shc", "p52").unwrap();
        assert_eq!(m.image("YXNX").unwrap(), ["Y239", "Y317"]);
        assert_eq!(m.image("PTB").unwrap(), ["PTB"]);
    }

    #[test]
    fn identity_site_map() {
        let h = h("A(x,y~u)");
        let m = h.site_map("A", "A").unwrap();
        assert_eq!(m.map, vec![("x".into(), vec!["x".into()]), ("y".into(), vec!["y".into()])]);
    }

    #[test]
    fn added_site_is_invisible_to_ancestor() {
        let h = h(MKP);
        let m = h.site_map("MAPKSTP", "MKP").unwrap();
        assert_eq!(m.map, vec![("AS".into(), vec!["AS".into()]), ("cat".into(), vec!["cat".into()])]);
    }

    #[test]
    fn deletion_gives_empty_image() {
        let h = h("A(x,y)\nB = A[-x]\nC = B");
        assert_eq!(h.site_map("A", "C").unwrap().image("x").unwrap(), [] as [String; 0]);
    }

    #[test]
    fn not_an_ancestor() {
        let h = h("A(x)\nB(y)");
        assert!(matches!(h.site_map("A", "B"), Err(HierarchyError::NotAnAncestor { .. })));
    }

    #[test]
    fn multi_path_disagreement_is_incoherent() {
        let h = h("A(x,y)\nB = A[x\\{z}]\nC = A[x\\{w}]\nD = B\nD = C");
        assert!(matches!(h.site_map("A", "D"), Err(HierarchyError::Incoherent { .. })));
    }

    #[test]
    fn multi_path_deletion_is_unioned() {
        let h = h("A(x,y)\nB = A\nC = A[-x]\nD = B\nD = C");
        assert_eq!(h.site_map("A", "D").unwrap().image("x").unwrap(), ["x"]);
    }

    #[test]
    fn rededuplication_of_a_duplicate() {
        let h = h("C(r,l)\nT = C[r\\{r1 r2}]\nU = T[r1\\{a b}]");
        assert_eq!(h.site_map("C", "U").unwrap().image("r").unwrap(), ["a", "b", "r2"]);
    }

    #[test]
    fn fringe_queries() {
        let h = h("Shc(PTB,YXNX~u,SH2)\np66 = Shc[YXNX\\{Y349 Y427}]\np52 = Shc[YXNX\\{Y239 Y317}]\np46 = Shc[YXNX\\{Y194 Y272}]\nERK(CD)\nJNK(CD)");
        let (leaves, d) = h.validate_fringe(None, Span::default());
        assert!(d.is_empty());
        assert_eq!(leaves, vec!["p66", "p52", "p46", "ERK", "JNK"]);
        let fr: Vec<String> = ["p66", "p52", "p46"].map(String::from).to_vec();
        assert_eq!(h.fringe_descendants("Shc", &fr), vec!["p46", "p52", "p66"]);
        assert_eq!(h.fringe_descendants("Shc", &["Shc".to_string()]), vec!["Shc"]);
        assert!(h.fringe_descendants("JNK", &["ERK".to_string()]).is_empty());

        let (_, d) = h.validate_fringe(Some(&["Shc".into(), "p52".into()]), Span::default());
        assert!(!d.has_errors());
        assert_eq!(d.warnings().count(), 1);
        let (_, d) = h.validate_fringe(Some(&[]), Span::default());
        assert!(d.has_errors());
        let (_, d) = h.validate_fringe(Some(&["Nope".into()]), Span::default());
        assert!(d.has_errors());
        let (f, d) = h.validate_fringe(Some(&["Shc".into()]), Span::default());
        assert!(d.is_empty());
        assert_eq!(f, vec!["Shc", "ERK", "JNK"]);
    }
}
