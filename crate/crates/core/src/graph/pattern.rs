//! Patterns compiled against a signature table, embedding search and rule
//! actions.

use super::{AgentId, GraphError, Mixture, SigTable};
use crate::syntax::{bond_pairs, pattern_components, Action, AgentPattern, BondCondition, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternLink {
    Any,
    Free,
    /// Bound to this site of another pattern agent.
    Bound { agent: usize, site: u16 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternSite {
    pub site: u16,
    pub state: Option<u16>,
    pub link: PatternLink,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternAgent {
    pub kind: u32,
    pub sites: Vec<PatternSite>,
}

/// A connected piece of a pattern, matched from the image of its root
/// (first) agent by following a spanning tree of its bonds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPlan {
    pub agents: Vec<usize>,
    /// `(from, site, to)`: the image of `to` is the partner of `from`'s image
    /// at `site`.
    tree: Vec<(usize, u16, usize)>,
    /// Longest tree path from the root, in bonds.
    pub radius: usize,
}

/// Images of the pattern agents, indexed like the pattern.
pub type Embedding = Vec<AgentId>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub agents: Vec<PatternAgent>,
    pub components: Vec<ComponentPlan>,
}

impl Pattern {
    pub fn compile(side: &[AgentPattern], sig: &SigTable) -> Result<Pattern, GraphError> {
        let pairs = bond_pairs(side).map_err(GraphError::Malformed)?;
        let mut agents = Vec::with_capacity(side.len());
        for ap in side {
            let kind = sig.kind(&ap.agent).ok_or_else(|| GraphError::UnknownAgent(ap.agent.clone()))?;
            let mut sites = Vec::with_capacity(ap.sites.len());
            for sc in &ap.sites {
                let site = sig.resolve_site(kind, &sc.site)?;
                let state = match &sc.state {
                    Some(s) => Some(sig.resolve_state(kind, site, s)?),
                    None => None,
                };
                let link = match sc.bond {
                    BondCondition::Unspecified => PatternLink::Any,
                    BondCondition::Free => PatternLink::Free,
                    BondCondition::Bound(_) => PatternLink::Any, // filled below
                };
                sites.push(PatternSite { site, state, link });
            }
            agents.push(PatternAgent { kind, sites });
        }
        for [(i, si), (j, sj)] in pairs.values() {
            let a = sig.resolve_site(agents[*i].kind, si)?;
            let b = sig.resolve_site(agents[*j].kind, sj)?;
            set_link(&mut agents[*i], a, PatternLink::Bound { agent: *j, site: b });
            set_link(&mut agents[*j], b, PatternLink::Bound { agent: *i, site: a });
        }
        let components = pattern_components(side)
            .into_iter()
            .map(|members| {
                let root = members[0];
                let mut order = vec![root];
                let mut depth = vec![0usize; agents.len()];
                let mut tree = Vec::new();
                let mut k = 0;
                while k < order.len() {
                    let x = order[k];
                    for ps in &agents[x].sites {
                        if let PatternLink::Bound { agent: y, .. } = ps.link {
                            if !order.contains(&y) {
                                depth[y] = depth[x] + 1;
                                order.push(y);
                                tree.push((x, ps.site, y));
                            }
                        }
                    }
                    k += 1;
                }
                let radius = order.iter().map(|&a| depth[a]).max().unwrap_or(0);
                ComponentPlan { agents: order, tree, radius }
            })
            .collect();
        Ok(Pattern { agents, components })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.components.iter().map(|c| c.radius).max().unwrap_or(0)
    }

    pub fn root_kind(&self, c: usize) -> u32 {
        self.agents[self.components[c].agents[0]].kind
    }

    /// Matches component `c` with its root at `root`, writing images into
    /// `out` (indexed like the pattern). Checks every site condition and
    /// injectivity within the component.
    pub fn match_component(&self, c: usize, root: AgentId, m: &Mixture, out: &mut [AgentId]) -> bool {
        let plan = &self.components[c];
        let r = plan.agents[0];
        if m.kind(root) != self.agents[r].kind {
            return false;
        }
        out[r] = root;
        for &(from, site, to) in &plan.tree {
            match m.partner(out[from], site) {
                Some((y, _)) => out[to] = y,
                None => return false,
            }
        }
        for (k, &i) in plan.agents.iter().enumerate() {
            let img = out[i];
            let pa = &self.agents[i];
            if m.kind(img) != pa.kind {
                return false;
            }
            for &j in &plan.agents[..k] {
                if out[j] == img {
                    return false;
                }
            }
            for ps in &pa.sites {
                if let Some(st) = ps.state {
                    if m.state(img, ps.site) != Some(st) {
                        return false;
                    }
                }
                match ps.link {
                    PatternLink::Any => {}
                    PatternLink::Free => {
                        if !m.is_free(img, ps.site) {
                            return false;
                        }
                    }
                    PatternLink::Bound { agent, site } => {
                        if m.partner(img, ps.site) != Some((out[agent], site)) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Root images for which component `c` matches, in agent order.
    pub fn component_roots(&self, c: usize, m: &Mixture) -> Vec<AgentId> {
        let mut out = vec![0; self.len()];
        (0..m.len() as AgentId).filter(|&a| self.match_component(c, a, m, &mut out)).collect()
    }

    /// Every embedding, lexicographic in the component roots.
    pub fn embeddings(&self, m: &Mixture) -> Vec<Embedding> {
        let per: Vec<Vec<Embedding>> = (0..self.components.len())
            .map(|c| {
                self.component_roots(c, m)
                    .into_iter()
                    .map(|r| {
                        let mut e = vec![0; self.len()];
                        self.match_component(c, r, m, &mut e);
                        e
                    })
                    .collect()
            })
            .collect();
        let mut acc: Vec<Embedding> = vec![vec![AgentId::MAX; self.len()]];
        for (c, list) in per.iter().enumerate() {
            let idx = &self.components[c].agents;
            let mut next = Vec::new();
            for partial in &acc {
                for e in list {
                    let clash = idx.iter().any(|&i| {
                        (0..self.len()).any(|j| partial[j] != AgentId::MAX && partial[j] == e[i])
                    });
                    if clash {
                        continue;
                    }
                    let mut p = partial.clone();
                    for &i in idx {
                        p[i] = e[i];
                    }
                    next.push(p);
                }
            }
            acc = next;
        }
        if self.is_empty() {
            return vec![];
        }
        acc
    }

    /// Full check of an embedding.
    pub fn is_embedding(&self, m: &Mixture, e: &[AgentId]) -> bool {
        if e.len() != self.len() {
            return false;
        }
        for i in 0..e.len() {
            for j in 0..i {
                if e[i] == e[j] {
                    return false;
                }
            }
        }
        let mut out = e.to_vec();
        (0..self.components.len()).all(|c| {
            let root = e[self.components[c].agents[0]];
            self.match_component(c, root, m, &mut out) && self.components[c].agents.iter().all(|&i| out[i] == e[i])
        })
    }
}

fn set_link(a: &mut PatternAgent, site: u16, link: PatternLink) {
    if let Some(ps) = a.sites.iter_mut().find(|s| s.site == site) {
        ps.link = link;
    }
}

/// A rule effect in terms of pattern agent positions and site indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphAction {
    Unbind { agent: usize, site: u16 },
    Bind { a: usize, sa: u16, b: usize, sb: u16 },
    SetState { agent: usize, site: u16, state: u16 },
}

/// Resolves a rule's actions against the signature table. Unbindings come
/// first, then bindings, then state changes.
pub fn compile_actions(rule: &Rule, sig: &SigTable) -> Result<Vec<GraphAction>, GraphError> {
    let kind = |i: usize| -> Result<u32, GraphError> {
        let name = &rule.lhs[i].agent;
        sig.kind(name).ok_or_else(|| GraphError::UnknownAgent(name.clone()))
    };
    let mut out = Vec::new();
    for act in rule.actions() {
        out.push(match act {
            Action::Unbind { a, .. } => GraphAction::Unbind { agent: a.0, site: sig.resolve_site(kind(a.0)?, &a.1)? },
            Action::Bind { a, b } => GraphAction::Bind {
                a: a.0,
                sa: sig.resolve_site(kind(a.0)?, &a.1)?,
                b: b.0,
                sb: sig.resolve_site(kind(b.0)?, &b.1)?,
            },
            Action::SetState { agent, site, state } => {
                let k = kind(agent)?;
                let s = sig.resolve_site(k, &site)?;
                GraphAction::SetState { agent, site: s, state: sig.resolve_state(k, s, &state)? }
            }
        });
    }
    out.sort_by_key(|a| match a {
        GraphAction::Unbind { .. } => 0,
        GraphAction::Bind { .. } => 1,
        GraphAction::SetState { .. } => 2,
    });
    Ok(out)
}

impl Mixture {
    /// Applies rule actions at an embedding.
    pub fn apply(&mut self, actions: &[GraphAction], e: &[AgentId]) {
        for act in actions {
            match *act {
                GraphAction::Unbind { agent, site } => self.unbind((e[agent], site)),
                GraphAction::Bind { a, sa, b, sb } => self.bind((e[a], sa), (e[b], sb)),
                GraphAction::SetState { agent, site, state } => self.set_state(e[agent], site, state),
            }
        }
    }
}
