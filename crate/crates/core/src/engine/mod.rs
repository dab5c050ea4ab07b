//! Gillespie direct-method simulation of a resolved model.
//!
//! Every rule left-hand side and observable is tracked as a set of root
//! images per pattern component. After an event only agents within the
//! largest pattern radius of the modified agents are rechecked. For
//! two-component patterns the number of clashing pairs (overlapping images)
//! and of unary pairs (both images in one mixture component) is kept as a sum
//! over mixture components, updated from the components touched by the event.
//!
//! Binary rates are per-embedding stochastic constants; unary rates are
//! first-order constants applied to embeddings whose two components already
//! lie in one complex. Embeddings are counted per injective map.

mod hill;
mod sweep;

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::compile::ResolvedModel;
use crate::graph::{compile_actions, init_mixture, AgentId, GraphAction, GraphError, Mixture, Pattern, SigTable};

pub use hill::{fit_hill, HillFit};
pub use sweep::{run_sweep, SweepPoint, SweepResult};

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("rule '{rule}': {reason}")]
    BadRate { rule: String, reason: String },
    #[error("rule '{0}' has three or more connected components on its left-hand side; only one or two are supported in simulation")]
    TooManyComponents(String),
    #[error("end time {0} is negative")]
    NegativeEndTime(f64),
    #[error("sample interval {0} must be positive")]
    BadSampleInterval(f64),
    #[error("unknown parameter {0}")]
    UnknownParam(String),
}

/// Molecularity of a fired event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Molecularity {
    /// One connected left-hand side.
    Mono,
    /// Two components mapped into distinct complexes.
    Binary,
    /// Two components mapped into the same complex.
    Unary,
}

impl Molecularity {
    pub fn tag(&self) -> &'static str {
        match self {
            Molecularity::Mono => "mono",
            Molecularity::Binary => "binary",
            Molecularity::Unary => "unary",
        }
    }
}

#[derive(Clone, Debug)]
struct RootSet {
    items: Vec<AgentId>,
    pos: Vec<u32>,
}

impl RootSet {
    fn new(n: usize) -> RootSet {
        RootSet { items: Vec::new(), pos: vec![ABSENT; n] }
    }

    fn contains(&self, a: AgentId) -> bool {
        self.pos[a as usize] != ABSENT
    }

    fn insert(&mut self, a: AgentId) {
        if !self.contains(a) {
            self.pos[a as usize] = self.items.len() as u32;
            self.items.push(a);
        }
    }

    fn remove(&mut self, a: AgentId) {
        let p = self.pos[a as usize];
        if p == ABSENT {
            return;
        }
        let last = *self.items.last().unwrap();
        self.items.swap_remove(p as usize);
        if last != a {
            self.pos[last as usize] = p;
        }
        self.pos[a as usize] = ABSENT;
    }

    fn len(&self) -> u64 {
        self.items.len() as u64
    }
}

#[derive(Clone, Debug)]
struct Tracked {
    pattern: Pattern,
    roots: Vec<RootSet>,
    /// Two-component patterns: pairs with overlapping images.
    clash: i64,
    /// Two-component patterns: injective pairs inside one complex.
    unary: i64,
}

impl Tracked {
    fn total(&self) -> u64 {
        match self.roots.len() {
            1 => self.roots[0].len(),
            2 => (self.roots[0].len() * self.roots[1].len()) as i64 as u64 - self.clash as u64,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug)]
struct RuleEntry {
    name: String,
    tracked: usize,
    actions: Vec<GraphAction>,
    k: f64,
    u: Option<f64>,
}

#[derive(Clone, Debug)]
enum ObsTerm {
    Tracked(usize),
    /// Three or more components: counted by enumeration when sampled.
    Enumerated(Pattern),
}

/// Current counts and propensity of one rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Activity {
    pub rule: String,
    /// Embeddings across distinct complexes (all embeddings for connected
    /// left-hand sides).
    pub binary_count: u64,
    /// Embeddings of two-component left-hand sides inside one complex.
    pub unary_count: u64,
    pub propensity: f64,
}

/// A chosen event, before it is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub wait: f64,
    pub rule: usize,
    pub embedding: Vec<AgentId>,
    pub molecularity: Molecularity,
}

#[derive(Clone, Debug)]
pub struct Engine {
    mix: Mixture,
    tracked: Vec<Tracked>,
    by_kind: Vec<Vec<(usize, usize)>>,
    radius: usize,
    rules: Vec<RuleEntry>,
    obs_names: Vec<String>,
    obs: Vec<Vec<ObsTerm>>,
    rng: ChaCha8Rng,
    time: f64,
    events: u64,
    mark: Vec<u32>,
    generation: u32,
}

fn check_rate(rule: &str, what: &str, v: Option<f64>) -> Result<f64, SimError> {
    match v {
        None => Err(SimError::BadRate { rule: rule.into(), reason: format!("{what} rate refers to an unknown parameter") }),
        Some(v) if !v.is_finite() || v < 0.0 => {
            Err(SimError::BadRate { rule: rule.into(), reason: format!("{what} rate {v} is not a nonnegative number") })
        }
        Some(v) => Ok(v),
    }
}

impl Engine {
    /// Builds the initial mixture and the tracking structures. The RNG is
    /// ChaCha8 seeded from `seed`, on stream `stream`.
    pub fn new(model: &ResolvedModel, seed: u64, stream: u64) -> Result<Engine, SimError> {
        let mix = init_mixture(model)?;
        Engine::with_mixture(model, mix, seed, stream)
    }

    pub fn with_mixture(model: &ResolvedModel, mix: Mixture, seed: u64, stream: u64) -> Result<Engine, SimError> {
        let sig: Arc<SigTable> = mix.sig().clone();
        let mut patterns: Vec<Pattern> = Vec::new();
        let mut intern = |p: Pattern| -> usize {
            match patterns.iter().position(|q| *q == p) {
                Some(i) => i,
                None => {
                    patterns.push(p);
                    patterns.len() - 1
                }
            }
        };
        let mut rules = Vec::new();
        for c in &model.rules.rules {
            let r = &c.rule;
            let pattern = Pattern::compile(&r.lhs, &sig)?;
            if pattern.components.len() > 2 {
                return Err(SimError::TooManyComponents(r.name.clone()));
            }
            let k = check_rate(&r.name, "binary", model.rate(&r.binary_rate))?;
            let u = match &r.unary_rate {
                None => None,
                some => Some(check_rate(&r.name, "unary", model.rate(some))?),
            };
            let actions = compile_actions(r, &sig)?;
            rules.push(RuleEntry { name: r.name.clone(), tracked: intern(pattern), actions, k, u });
        }
        let mut obs = Vec::new();
        let mut obs_names = Vec::new();
        for o in &model.observables {
            let mut terms = Vec::new();
            for p in &o.patterns {
                let pattern = Pattern::compile(p, &sig)?;
                if pattern.components.len() > 2 {
                    terms.push(ObsTerm::Enumerated(pattern));
                } else {
                    terms.push(ObsTerm::Tracked(intern(pattern)));
                }
            }
            obs_names.push(o.name.clone());
            obs.push(terms);
        }
        let n = mix.len();
        let mut by_kind = vec![Vec::new(); sig.agents.len()];
        let mut tracked = Vec::new();
        for (t, p) in patterns.into_iter().enumerate() {
            for c in 0..p.components.len() {
                by_kind[p.root_kind(c) as usize].push((t, c));
            }
            let roots = (0..p.components.len()).map(|_| RootSet::new(n)).collect();
            tracked.push(Tracked { pattern: p, roots, clash: 0, unary: 0 });
        }
        let radius = tracked.iter().map(|t| t.pattern.radius()).max().unwrap_or(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut e = Engine {
            mix,
            tracked,
            by_kind,
            radius,
            rules,
            obs_names,
            obs,
            rng,
            time: 0.0,
            events: 0,
            mark: vec![0; n],
            generation: 0,
        };
        e.rebuild();
        Ok(e)
    }

    /// Recomputes every tracked quantity from scratch.
    fn rebuild(&mut self) {
        let n = self.mix.len();
        let mut scratch = vec![0; 0];
        for t in &mut self.tracked {
            scratch.resize(t.pattern.len(), 0);
            for (c, set) in t.roots.iter_mut().enumerate() {
                *set = RootSet::new(n);
                for a in 0..n as AgentId {
                    if t.pattern.match_component(c, a, &self.mix, &mut scratch) {
                        set.insert(a);
                    }
                }
            }
            t.clash = 0;
            t.unary = 0;
        }
        let comps: Vec<u32> = {
            let mut v: Vec<u32> = (0..n as AgentId).map(|a| self.mix.component_of(a)).collect();
            v.sort();
            v.dedup();
            v
        };
        for ti in 0..self.tracked.len() {
            if self.tracked[ti].roots.len() == 2 {
                let (mut cl, mut un) = (0, 0);
                for &c in &comps {
                    let (a, b) = pair_counts(&self.tracked[ti], &self.mix, c);
                    cl += a;
                    un += b;
                }
                self.tracked[ti].clash = cl;
                self.tracked[ti].unary = un;
            }
        }
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mix
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn rule_names(&self) -> Vec<&str> {
        self.rules.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn observable_names(&self) -> &[String] {
        &self.obs_names
    }

    fn counts(&self, r: &RuleEntry) -> (u64, u64) {
        let t = &self.tracked[r.tracked];
        match t.roots.len() {
            1 => (t.roots[0].len(), 0),
            _ => {
                let total = t.total();
                (total - t.unary as u64, t.unary as u64)
            }
        }
    }

    fn propensity(&self, r: &RuleEntry) -> f64 {
        let (b, un) = self.counts(r);
        match r.u {
            Some(u) => r.k * b as f64 + u * un as f64,
            None => r.k * (b + un) as f64,
        }
    }

    pub fn activities(&self) -> Vec<Activity> {
        self.rules
            .iter()
            .map(|r| {
                let (b, u) = self.counts(r);
                Activity { rule: r.name.clone(), binary_count: b, unary_count: u, propensity: self.propensity(r) }
            })
            .collect()
    }

    pub fn total_propensity(&self) -> f64 {
        self.rules.iter().map(|r| self.propensity(r)).sum()
    }

    /// Observable values: embedding counts summed over each observable's
    /// patterns.
    pub fn observe(&self) -> Vec<u64> {
        self.obs
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| match t {
                        ObsTerm::Tracked(i) => self.tracked[*i].total(),
                        ObsTerm::Enumerated(p) => p.embeddings(&self.mix).len() as u64,
                    })
                    .sum()
            })
            .collect()
    }

    fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Draws the next event, or `None` when nothing can fire.
    pub fn select(&mut self) -> Option<Selection> {
        let props: Vec<f64> = self.rules.iter().map(|r| self.propensity(r)).collect();
        let a0: f64 = props.iter().sum();
        if a0 <= 0.0 {
            return None;
        }
        let wait = -(1.0 - self.uniform()).ln() / a0;
        let target = self.uniform() * a0;
        let mut acc = 0.0;
        let mut rule = props.iter().rposition(|&p| p > 0.0).unwrap();
        for (i, &p) in props.iter().enumerate() {
            acc += p;
            if target < acc && p > 0.0 {
                rule = i;
                break;
            }
        }
        let r = self.rules[rule].clone();
        let t = &self.tracked[r.tracked];
        let (embedding, molecularity) = if t.roots.len() == 1 {
            let i = self.rng.gen_range(0..t.roots[0].items.len());
            let root = t.roots[0].items[i];
            let mut e = vec![0; t.pattern.len()];
            t.pattern.match_component(0, root, &self.mix, &mut e);
            (e, Molecularity::Mono)
        } else {
            let (b, un) = self.counts(&r);
            let unary = match r.u {
                Some(u) => {
                    let pb = r.k * b as f64;
                    self.uniform() * (pb + u * un as f64) >= pb
                }
                None => false,
            };
            if unary {
                (self.sample_unary(r.tracked), Molecularity::Unary)
            } else {
                let e = self.sample_pair(r.tracked, r.u.is_some());
                let p = &self.tracked[r.tracked].pattern;
                let m = if self.mix.same_component(e[p.components[0].agents[0]], e[p.components[1].agents[0]]) {
                    Molecularity::Unary
                } else {
                    Molecularity::Binary
                };
                (e, m)
            }
        };
        debug_assert!(self.tracked[self.rules[rule].tracked].pattern.is_embedding(&self.mix, &embedding));
        Some(Selection { wait, rule, embedding, molecularity })
    }

    fn pair_embedding(&self, t: usize, r1: AgentId, r2: AgentId) -> Option<Vec<AgentId>> {
        let p = &self.tracked[t].pattern;
        let mut e = vec![0; p.len()];
        p.match_component(0, r1, &self.mix, &mut e);
        p.match_component(1, r2, &self.mix, &mut e);
        let (c0, c1) = (&p.components[0].agents, &p.components[1].agents);
        let clash = c0.iter().any(|&i| c1.iter().any(|&j| e[i] == e[j]));
        (!clash).then_some(e)
    }

    /// Uniform over injective pairs; across complexes only when
    /// `distinct` is set.
    fn sample_pair(&mut self, t: usize, distinct: bool) -> Vec<AgentId> {
        for _ in 0..64 {
            let s = &self.tracked[t].roots;
            let r1 = s[0].items[self.rng.gen_range(0..s[0].items.len())];
            let r2 = s[1].items[self.rng.gen_range(0..s[1].items.len())];
            if distinct && self.mix.same_component(r1, r2) {
                continue;
            }
            if let Some(e) = self.pair_embedding(t, r1, r2) {
                return e;
            }
        }
        let s = &self.tracked[t].roots;
        let mut all = Vec::new();
        for &r1 in &s[0].items {
            for &r2 in &s[1].items {
                if distinct && self.mix.same_component(r1, r2) {
                    continue;
                }
                if let Some(e) = self.pair_embedding(t, r1, r2) {
                    all.push(e);
                }
            }
        }
        let i = self.rng.gen_range(0..all.len());
        all.swap_remove(i)
    }

    /// Uniform over injective pairs inside one complex.
    fn sample_unary(&mut self, t: usize) -> Vec<AgentId> {
        let s = &self.tracked[t].roots;
        let mut all = Vec::new();
        for &r1 in &s[0].items {
            let c = self.mix.component_of(r1);
            for &r2 in self.mix.component_members(c) {
                if s[1].contains(r2) {
                    if let Some(e) = self.pair_embedding(t, r1, r2) {
                        all.push(e);
                    }
                }
            }
        }
        let i = self.rng.gen_range(0..all.len());
        all.swap_remove(i)
    }

    /// Applies a selected event and updates all tracked sets.
    pub fn fire(&mut self, sel: &Selection) {
        let rule = &self.rules[sel.rule];
        let mut modified: Vec<AgentId> = Vec::new();
        for act in &rule.actions {
            match *act {
                GraphAction::Unbind { agent, site } => {
                    modified.push(sel.embedding[agent]);
                    if let Some((b, _)) = self.mix.partner(sel.embedding[agent], site) {
                        modified.push(b);
                    }
                }
                GraphAction::Bind { a, b, .. } => {
                    modified.push(sel.embedding[a]);
                    modified.push(sel.embedding[b]);
                }
                GraphAction::SetState { agent, .. } => modified.push(sel.embedding[agent]),
            }
        }
        modified.sort();
        modified.dedup();
        let actions = rule.actions.clone();
        let pairs: Vec<usize> = (0..self.tracked.len()).filter(|&t| self.tracked[t].roots.len() == 2).collect();

        let before = self.components_of(&modified);
        for &t in &pairs {
            for &c in &before {
                let (cl, un) = pair_counts(&self.tracked[t], &self.mix, c);
                self.tracked[t].clash -= cl;
                self.tracked[t].unary -= un;
            }
        }

        self.mix.apply(&actions, &sel.embedding);
        self.time += sel.wait;
        self.events += 1;

        let candidates = self.neighborhood(&modified);
        let mut scratch = Vec::new();
        for &a in &candidates {
            let kind = self.mix.kind(a) as usize;
            for &(t, c) in &self.by_kind[kind] {
                let tr = &mut self.tracked[t];
                scratch.resize(tr.pattern.len(), 0);
                if tr.pattern.match_component(c, a, &self.mix, &mut scratch) {
                    tr.roots[c].insert(a);
                } else {
                    tr.roots[c].remove(a);
                }
            }
        }

        let after = self.components_of(&modified);
        for &t in &pairs {
            for &c in &after {
                let (cl, un) = pair_counts(&self.tracked[t], &self.mix, c);
                self.tracked[t].clash += cl;
                self.tracked[t].unary += un;
            }
        }
    }

    fn components_of(&self, agents: &[AgentId]) -> Vec<u32> {
        let mut v: Vec<u32> = agents.iter().map(|&a| self.mix.component_of(a)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Agents within `radius` bonds of `start`.
    fn neighborhood(&mut self, start: &[AgentId]) -> Vec<AgentId> {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.generation = 1;
        }
        let g = self.generation;
        let mut out = Vec::new();
        let mut q = VecDeque::new();
        for &a in start {
            if self.mark[a as usize] != g {
                self.mark[a as usize] = g;
                out.push(a);
                q.push_back((a, 0usize));
            }
        }
        while let Some((x, d)) = q.pop_front() {
            if d == self.radius {
                continue;
            }
            for y in self.mix.neighbors(x) {
                if self.mark[y as usize] != g {
                    self.mark[y as usize] = g;
                    out.push(y);
                    q.push_back((y, d + 1));
                }
            }
        }
        out
    }

    /// One event: select then fire. `None` when nothing can fire.
    pub fn step(&mut self) -> Option<Selection> {
        let sel = self.select()?;
        self.fire(&sel);
        Some(sel)
    }

    /// Compares the maintained state with a from-scratch recomputation.
    pub fn audit(&self) -> Result<(), String> {
        self.mix.audit_components()?;
        let mut fresh = self.clone();
        fresh.rebuild();
        for (i, (a, b)) in self.tracked.iter().zip(&fresh.tracked).enumerate() {
            for c in 0..a.roots.len() {
                let mut x = a.roots[c].items.clone();
                let mut y = b.roots[c].items.clone();
                x.sort();
                y.sort();
                if x != y {
                    return Err(format!("pattern {i} component {c}: root sets differ"));
                }
            }
            if a.clash != b.clash || a.unary != b.unary {
                return Err(format!(
                    "pattern {i}: clash/unary {}/{} maintained, {}/{} recomputed",
                    a.clash, a.unary, b.clash, b.unary
                ));
            }
            let direct = a.pattern.embeddings(&self.mix).len() as u64;
            if a.total() != direct {
                return Err(format!("pattern {i}: {} embeddings maintained, {direct} enumerated", a.total()));
            }
        }
        Ok(())
    }
}

/// Clashing and unary pair counts of a two-component pattern restricted to
/// roots inside mixture component `c`.
fn pair_counts(t: &Tracked, m: &Mixture, c: u32) -> (i64, i64) {
    let members = m.component_members(c);
    let r1: Vec<AgentId> = members.iter().copied().filter(|&a| t.roots[0].contains(a)).collect();
    if r1.is_empty() {
        return (0, 0);
    }
    let r2: Vec<AgentId> = members.iter().copied().filter(|&a| t.roots[1].contains(a)).collect();
    let p = &t.pattern;
    let (c0, c1) = (&p.components[0].agents, &p.components[1].agents);
    let mut e = vec![0; p.len()];
    let (mut clash, mut unary) = (0, 0);
    for &a in &r1 {
        p.match_component(0, a, m, &mut e);
        for &b in &r2 {
            p.match_component(1, b, m, &mut e);
            if c0.iter().any(|&i| c1.iter().any(|&j| e[i] == e[j])) {
                clash += 1;
            } else {
                unary += 1;
            }
        }
    }
    (clash, unary)
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    /// RNG stream; replicate `k` of a sweep uses stream `k`.
    pub stream: u64,
    pub end_time: f64,
    pub max_events: Option<u64>,
    /// Sampling grid spacing; defaults to `end_time / 100`.
    pub sample_interval: Option<f64>,
    pub record_events: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { seed: 0, stream: 0, end_time: 100.0, max_events: None, sample_interval: None, record_events: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub rule: String,
    pub molecularity: Molecularity,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub observables: Vec<String>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<u64>>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for o in &self.observables {
            out.push(',');
            out.push_str(o);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.values) {
            write!(out, "{t}").unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn events_csv(&self) -> String {
        let mut out = String::from("time,rule,molecularity\n");
        for e in &self.events {
            writeln!(out, "{},{},{}", e.time, e.rule, e.molecularity.tag()).unwrap();
        }
        out
    }

    /// Index of an observable by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|o| o == name)
    }

    /// Time average of a column over samples with time at least `from`.
    pub fn mean_from(&self, col: usize, from: f64) -> Option<f64> {
        let vals: Vec<f64> =
            self.times.iter().zip(&self.values).filter(|(t, _)| **t >= from).map(|(_, r)| r[col] as f64).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Runs the model from its initial mixture until `end_time`, `max_events`
/// or exhaustion, sampling observables at multiples of the sample interval.
pub fn simulate(model: &ResolvedModel, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    if cfg.end_time < 0.0 || cfg.end_time.is_nan() {
        return Err(SimError::NegativeEndTime(cfg.end_time));
    }
    let dt = cfg.sample_interval.unwrap_or(if cfg.end_time > 0.0 { cfg.end_time / 100.0 } else { 1.0 });
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::BadSampleInterval(dt));
    }
    let mut engine = Engine::new(model, cfg.seed, cfg.stream)?;
    let mut traj = Trajectory { observables: engine.observable_names().to_vec(), ..Default::default() };
    let mut next = 0u64;
    let grid = |i: u64| i as f64 * dt;
    let record = |traj: &mut Trajectory, engine: &Engine, upto: f64, inclusive: bool, next: &mut u64| {
        let snapshot = engine.observe();
        loop {
            let t = grid(*next);
            if t > cfg.end_time || t > upto || (!inclusive && t == upto) {
                break;
            }
            traj.times.push(t);
            traj.values.push(snapshot.clone());
            *next += 1;
        }
    };
    loop {
        if cfg.max_events.is_some_and(|m| engine.events() >= m) {
            let now = engine.time();
            record(&mut traj, &engine, now, true, &mut next);
            break;
        }
        let Some(sel) = engine.select() else {
            record(&mut traj, &engine, f64::INFINITY, true, &mut next);
            break;
        };
        let t_next = engine.time() + sel.wait;
        if t_next > cfg.end_time {
            record(&mut traj, &engine, f64::INFINITY, true, &mut next);
            break;
        }
        record(&mut traj, &engine, t_next, false, &mut next);
        let molecularity = sel.molecularity;
        let rule = sel.rule;
        engine.fire(&sel);
        if cfg.record_events {
            traj.events.push(Event { time: engine.time(), rule: engine.rules[rule].name.clone(), molecularity });
        }
    }
    Ok(traj)
}
