//! Concrete site graphs (mixtures), pattern embeddings and rule application.

mod pattern;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::compile::ResolvedModel;
use crate::hierarchy::Hierarchy;
use crate::syntax::{bond_pairs, AgentPattern, BondCondition};

pub use pattern::{compile_actions, Embedding, GraphAction, Pattern, PatternAgent, PatternLink, PatternSite};

pub type AgentId = u32;
const NONE: u32 = u32::MAX;
const NO_STATE: u16 = u16::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("agent {0} is not concrete")]
    UnknownAgent(String),
    #[error("{agent} has no site {site}")]
    UnknownSite { agent: String, site: String },
    #[error("state {state} is not in the alphabet of {agent}.{site}")]
    UnknownState { agent: String, site: String, state: String },
    #[error("site {agent}.{site} is given a state but has none")]
    Stateless { agent: String, site: String },
    #[error("site {agent}.{site} must be free or bound in an initial complex")]
    UnspecifiedBond { agent: String, site: String },
    #[error("{0}")]
    Malformed(String),
    #[error("count {count} of initial complex is not a nonnegative integer")]
    BadCount { count: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteType {
    pub name: String,
    pub states: Vec<String>,
    pub default_state: Option<u16>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentType {
    pub name: String,
    pub sites: Vec<SiteType>,
}

impl AgentType {
    pub fn site_index(&self, name: &str) -> Option<u16> {
        self.sites.iter().position(|s| s.name == name).map(|i| i as u16)
    }
}

/// Interned concrete agent types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SigTable {
    pub agents: Vec<AgentType>,
    index: HashMap<String, u32>,
}

impl SigTable {
    /// One type per fringe agent, with its effective interface.
    pub fn from_hierarchy(h: &Hierarchy, fringe: &[String]) -> SigTable {
        let mut t = SigTable::default();
        for a in fringe {
            let Some(iface) = h.interface(a) else { continue };
            let sites = iface
                .iter()
                .map(|s| SiteType {
                    name: s.name.clone(),
                    states: s.states.clone(),
                    default_state: s
                        .default_state
                        .as_ref()
                        .and_then(|d| s.states.iter().position(|x| x == d))
                        .or(if s.states.is_empty() { None } else { Some(0) })
                        .map(|i| i as u16),
                })
                .collect();
            t.index.insert(a.clone(), t.agents.len() as u32);
            t.agents.push(AgentType { name: a.clone(), sites });
        }
        t
    }

    pub fn kind(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn agent(&self, kind: u32) -> &AgentType {
        &self.agents[kind as usize]
    }

    fn resolve_site(&self, kind: u32, site: &str) -> Result<u16, GraphError> {
        let a = self.agent(kind);
        a.site_index(site).ok_or_else(|| GraphError::UnknownSite { agent: a.name.clone(), site: site.into() })
    }

    fn resolve_state(&self, kind: u32, site: u16, state: &str) -> Result<u16, GraphError> {
        let a = self.agent(kind);
        let s = &a.sites[site as usize];
        if s.states.is_empty() {
            return Err(GraphError::Stateless { agent: a.name.clone(), site: s.name.clone() });
        }
        s.states.iter().position(|x| x == state).map(|i| i as u16).ok_or_else(|| GraphError::UnknownState {
            agent: a.name.clone(),
            site: s.name.clone(),
            state: state.into(),
        })
    }
}

/// A concrete site graph. Sites are stored in per-agent slots; each slot has
/// an internal state and an optional partner slot. Agents are never removed,
/// so indices stay valid for the mixture's lifetime.
#[derive(Clone, Debug)]
pub struct Mixture {
    sig: Arc<SigTable>,
    kind: Vec<u32>,
    offset: Vec<u32>,
    slot_agent: Vec<AgentId>,
    state: Vec<u16>,
    link: Vec<u32>,
    comp: Vec<u32>,
    pos: Vec<u32>,
    members: Vec<Vec<AgentId>>,
    free_comps: Vec<u32>,
    mark: Vec<u32>,
    generation: u32,
}

/// One side of a bond: agent and site index.
pub type Endpoint = (AgentId, u16);

impl Mixture {
    pub fn new(sig: Arc<SigTable>) -> Mixture {
        Mixture {
            sig,
            kind: vec![],
            offset: vec![],
            slot_agent: vec![],
            state: vec![],
            link: vec![],
            comp: vec![],
            pos: vec![],
            members: vec![],
            free_comps: vec![],
            mark: vec![],
            generation: 0,
        }
    }

    pub fn sig(&self) -> &Arc<SigTable> {
        &self.sig
    }

    pub fn len(&self) -> usize {
        self.kind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kind.is_empty()
    }

    pub fn kind(&self, a: AgentId) -> u32 {
        self.kind[a as usize]
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.sig.agent(self.kind(a)).name
    }

    fn slot(&self, a: AgentId, site: u16) -> usize {
        self.offset[a as usize] as usize + site as usize
    }

    pub fn site_count(&self, a: AgentId) -> u16 {
        self.sig.agent(self.kind(a)).sites.len() as u16
    }

    /// Internal state index, `None` for stateless sites.
    pub fn state(&self, a: AgentId, site: u16) -> Option<u16> {
        let s = self.state[self.slot(a, site)];
        (s != NO_STATE).then_some(s)
    }

    pub fn partner(&self, a: AgentId, site: u16) -> Option<Endpoint> {
        let l = self.link[self.slot(a, site)];
        (l != NONE).then(|| {
            let b = self.slot_agent[l as usize];
            (b, (l - self.offset[b as usize]) as u16)
        })
    }

    pub fn is_free(&self, a: AgentId, site: u16) -> bool {
        self.link[self.slot(a, site)] == NONE
    }

    /// Agents bound to `a`, with repetition for multiple bonds.
    pub fn neighbors(&self, a: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        let start = self.offset[a as usize] as usize;
        let end = start + self.site_count(a) as usize;
        self.link[start..end].iter().filter(|&&l| l != NONE).map(|&l| self.slot_agent[l as usize])
    }

    /// Adds one agent of type `kind` with default states and free sites.
    pub fn add_agent(&mut self, kind: u32) -> AgentId {
        let id = self.kind.len() as AgentId;
        let at = self.sig.agent(kind).clone();
        self.kind.push(kind);
        self.offset.push(self.state.len() as u32);
        for s in &at.sites {
            self.slot_agent.push(id);
            self.state.push(s.default_state.unwrap_or(NO_STATE));
            self.link.push(NONE);
        }
        let c = match self.free_comps.pop() {
            Some(c) => c,
            None => {
                self.members.push(Vec::new());
                (self.members.len() - 1) as u32
            }
        };
        self.members[c as usize].push(id);
        self.comp.push(c);
        self.pos.push((self.members[c as usize].len() - 1) as u32);
        self.mark.push(0);
        id
    }

    pub fn set_state(&mut self, a: AgentId, site: u16, state: u16) {
        let s = self.slot(a, site);
        self.state[s] = state;
    }

    /// Binds two free endpoints.
    pub fn bind(&mut self, (a, sa): Endpoint, (b, sb): Endpoint) {
        let (x, y) = (self.slot(a, sa), self.slot(b, sb));
        assert!(x != y, "a site cannot bind itself");
        assert!(self.link[x] == NONE && self.link[y] == NONE, "bond added onto an occupied site");
        self.link[x] = y as u32;
        self.link[y] = x as u32;
        self.merge(a, b);
    }

    /// Removes the bond at `(a, sa)`.
    pub fn unbind(&mut self, (a, sa): Endpoint) {
        let x = self.slot(a, sa);
        let y = self.link[x];
        assert!(y != NONE, "unbinding a free site");
        self.link[x] = NONE;
        self.link[y as usize] = NONE;
        let b = self.slot_agent[y as usize];
        self.maybe_split(a, b);
    }

    pub fn same_component(&self, a: AgentId, b: AgentId) -> bool {
        self.comp[a as usize] == self.comp[b as usize]
    }

    pub fn component_of(&self, a: AgentId) -> u32 {
        self.comp[a as usize]
    }

    pub fn component_members(&self, c: u32) -> &[AgentId] {
        &self.members[c as usize]
    }

    pub fn component_count(&self) -> usize {
        self.members.len() - self.free_comps.len()
    }

    fn merge(&mut self, a: AgentId, b: AgentId) {
        let (ca, cb) = (self.comp[a as usize], self.comp[b as usize]);
        if ca == cb {
            return;
        }
        let (big, small) =
            if self.members[ca as usize].len() >= self.members[cb as usize].len() { (ca, cb) } else { (cb, ca) };
        let moved = std::mem::take(&mut self.members[small as usize]);
        for &m in &moved {
            self.comp[m as usize] = big;
            self.pos[m as usize] = self.members[big as usize].len() as u32;
            self.members[big as usize].push(m);
        }
        self.free_comps.push(small);
    }

    fn fix_positions(&mut self, c: u32) {
        for (i, &m) in self.members[c as usize].iter().enumerate() {
            self.pos[m as usize] = i as u32;
        }
    }

    fn next_generation(&mut self) -> (u32, u32) {
        if self.generation >= u32::MAX - 3 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.generation = 0;
        }
        self.generation += 2;
        (self.generation - 1, self.generation)
    }

    /// After removing a bond between `a` and `b`, searches from both ends in
    /// lockstep. If the searches meet the component is intact; otherwise the
    /// side that ran out first is split off.
    fn maybe_split(&mut self, a: AgentId, b: AgentId) {
        if a == b {
            return;
        }
        let (ga, gb) = self.next_generation();
        let mut qa = VecDeque::from([a]);
        let mut qb = VecDeque::from([b]);
        let mut seen_a = vec![a];
        let mut seen_b = vec![b];
        self.mark[a as usize] = ga;
        self.mark[b as usize] = gb;
        let split: Vec<AgentId> = loop {
            match self.bfs_step(&mut qa, &mut seen_a, ga, gb) {
                Step::Met => return,
                Step::Exhausted => break seen_a,
                Step::Continue => {}
            }
            match self.bfs_step(&mut qb, &mut seen_b, gb, ga) {
                Step::Met => return,
                Step::Exhausted => break seen_b,
                Step::Continue => {}
            }
        };
        let old = self.comp[a as usize];
        let new = match self.free_comps.pop() {
            Some(c) => c,
            None => {
                self.members.push(Vec::new());
                (self.members.len() - 1) as u32
            }
        };
        for &m in &split {
            self.comp[m as usize] = new;
        }
        self.members[old as usize].retain(|&m| self.comp[m as usize] == old);
        self.members[new as usize] = split;
        self.fix_positions(old);
        self.fix_positions(new);
    }

    fn bfs_step(&mut self, q: &mut VecDeque<AgentId>, seen: &mut Vec<AgentId>, mine: u32, theirs: u32) -> Step {
        let Some(x) = q.pop_front() else { return Step::Exhausted };
        let start = self.offset[x as usize] as usize;
        let end = start + self.site_count(x) as usize;
        for s in start..end {
            let l = self.link[s];
            if l == NONE {
                continue;
            }
            let y = self.slot_agent[l as usize];
            let m = self.mark[y as usize];
            if m == theirs {
                return Step::Met;
            }
            if m != mine {
                self.mark[y as usize] = mine;
                seen.push(y);
                q.push_back(y);
            }
        }
        if q.is_empty() {
            Step::Exhausted
        } else {
            Step::Continue
        }
    }

    /// Recomputes components from scratch and compares them with the
    /// maintained structure.
    pub fn audit_components(&self) -> Result<(), String> {
        let n = self.len();
        let mut label = vec![NONE; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != NONE {
                continue;
            }
            let mut stack = vec![s as AgentId];
            label[s] = next;
            while let Some(x) = stack.pop() {
                for y in self.neighbors(x) {
                    if label[y as usize] == NONE {
                        label[y as usize] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        if next as usize != self.component_count() {
            return Err(format!("{} components maintained, {} found", self.component_count(), next));
        }
        for x in 0..n {
            for y in self.neighbors(x as AgentId) {
                if !self.same_component(x as AgentId, y) {
                    return Err(format!("bound agents {x} and {y} in different components"));
                }
            }
        }
        let mut rep: BTreeMap<u32, u32> = BTreeMap::new();
        for x in 0..n {
            let c = self.comp[x];
            if !self.members[c as usize].contains(&(x as AgentId)) {
                return Err(format!("agent {x} missing from its component list"));
            }
            if *rep.entry(c).or_insert(label[x]) != label[x] {
                return Err(format!("component {c} spans several connected pieces"));
            }
        }
        for (x, &p) in self.pos.iter().enumerate() {
            if self.members[self.comp[x] as usize][p as usize] != x as AgentId {
                return Err(format!("stale position for agent {x}"));
            }
        }
        for (x, &l) in self.link.iter().enumerate() {
            if l != NONE && self.link[l as usize] != x as u32 {
                return Err(format!("asymmetric bond at slot {x}"));
            }
        }
        Ok(())
    }

    /// Equality of the labelled graphs under the identity agent map.
    pub fn same_graph(&self, other: &Mixture) -> bool {
        self.kind == other.kind && self.state == other.state && self.link == other.link
    }

    /// Adds the complex described by `pattern` (fully specified up to
    /// defaults) and returns its agents.
    pub fn add_complex(&mut self, pattern: &[AgentPattern]) -> Result<Vec<AgentId>, GraphError> {
        let pairs = bond_pairs(pattern).map_err(GraphError::Malformed)?;
        let mut kinds = Vec::with_capacity(pattern.len());
        for ap in pattern {
            let k = self.sig.kind(&ap.agent).ok_or_else(|| GraphError::UnknownAgent(ap.agent.clone()))?;
            for sc in &ap.sites {
                let s = self.sig.resolve_site(k, &sc.site)?;
                if let Some(st) = &sc.state {
                    self.sig.resolve_state(k, s, st)?;
                }
                if sc.bond == BondCondition::Unspecified {
                    return Err(GraphError::UnspecifiedBond { agent: ap.agent.clone(), site: sc.site.clone() });
                }
            }
            kinds.push(k);
        }
        let ids: Vec<AgentId> = kinds.iter().map(|&k| self.add_agent(k)).collect();
        for (ap, &id) in pattern.iter().zip(&ids) {
            let k = self.kind(id);
            for sc in &ap.sites {
                if let Some(st) = &sc.state {
                    let s = self.sig.resolve_site(k, &sc.site)?;
                    let v = self.sig.resolve_state(k, s, st)?;
                    self.set_state(id, s, v);
                }
            }
        }
        for [(i, si), (j, sj)] in pairs.values() {
            let (a, b) = (ids[*i], ids[*j]);
            let sa = self.sig.resolve_site(self.kind(a), si)?;
            let sb = self.sig.resolve_site(self.kind(b), sj)?;
            self.bind((a, sa), (b, sb));
        }
        Ok(ids)
    }

    /// Text of one component, agents in breadth-first order from its lowest
    /// index, bonds numbered in order of appearance.
    pub fn component_text(&self, c: u32) -> String {
        let mut members = self.members[c as usize].clone();
        members.sort();
        let Some(&root) = members.first() else { return String::new() };
        let mut order = vec![root];
        let mut seen: HashMap<AgentId, usize> = HashMap::from([(root, 0)]);
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            for s in 0..self.site_count(x) {
                if let Some((y, _)) = self.partner(x, s) {
                    if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(y) {
                        e.insert(order.len());
                        order.push(y);
                    }
                }
            }
            i += 1;
        }
        let mut labels: HashMap<(AgentId, u16), usize> = HashMap::new();
        let mut next = 0;
        let mut parts = Vec::with_capacity(order.len());
        for &x in &order {
            let at = self.sig.agent(self.kind(x));
            let mut s = format!("{}(", at.name);
            for (k, st) in at.sites.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                s.push_str(&st.name);
                if let Some(v) = self.state(x, k as u16) {
                    write!(s, "~{}", st.states[v as usize]).unwrap();
                }
                if let Some(p) = self.partner(x, k as u16) {
                    let l = match labels.get(&p) {
                        Some(&l) => l,
                        None => {
                            labels.insert((x, k as u16), next);
                            next += 1;
                            next - 1
                        }
                    };
                    write!(s, "!{l}").unwrap();
                }
            }
            s.push(')');
            parts.push(s);
        }
        parts.join(", ")
    }

    /// One line per connected component, ordered by lowest agent index.
    pub fn snapshot(&self) -> String {
        let mut comps: Vec<(AgentId, u32)> = (0..self.members.len() as u32)
            .filter(|&c| !self.members[c as usize].is_empty())
            .map(|c| (*self.members[c as usize].iter().min().unwrap(), c))
            .collect();
        comps.sort();
        let mut out = String::new();
        for (_, c) in comps {
            out.push_str(&self.component_text(c));
            out.push('\n');
        }
        out
    }
}

enum Step {
    Met,
    Exhausted,
    Continue,
}

/// Builds the initial mixture of a resolved model: `count` copies of each
/// initial complex, unmentioned sites free and in their default state.
pub fn init_mixture(m: &ResolvedModel) -> Result<Mixture, GraphError> {
    if let Some(d) = m.dropped_inits.first() {
        let a = d.complex.iter().find(|a| !m.fringe.contains(&a.agent)).map(|a| a.agent.clone()).unwrap_or_default();
        return Err(GraphError::UnknownAgent(a));
    }
    let sig = Arc::new(SigTable::from_hierarchy(&m.hierarchy, &m.fringe));
    let mut mix = Mixture::new(sig);
    for init in &m.inits {
        let n = m.count(&init.count).ok_or_else(|| GraphError::BadCount { count: init.count.to_string() })?;
        for _ in 0..n {
            mix.add_complex(&init.complex)?;
        }
    }
    Ok(mix)
}
