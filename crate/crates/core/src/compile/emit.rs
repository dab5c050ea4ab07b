use std::fmt::Write as _;

use serde::Serialize;

use super::{CompiledRule, ResolvedModel};
use crate::syntax::{pattern_text, rule_line, RateExpr};

/// Concrete `.gka` text: fringe signatures, parameters, rules with their
/// provenance, initial mixture and observables.
pub fn emit_text(m: &ResolvedModel) -> String {
    let mut out = String::new();
    writeln!(out, "# concrete fringe: {}", m.fringe.join(", ")).unwrap();
    for a in &m.fringe {
        if let Some(sig) = m.hierarchy.signature(a) {
            writeln!(out, "{sig}").unwrap();
        }
    }
    for p in &m.params {
        writeln!(out, "%param: {} {}", p.name, p.value).unwrap();
    }
    for c in &m.rules.rules {
        writeln!(out, "# from '{}' via {}", c.source, c.substitution).unwrap();
        writeln!(out, "{}", rule_line(&c.rule)).unwrap();
    }
    for i in &m.inits {
        writeln!(out, "%init: {} {}", i.count, pattern_text(&i.complex)).unwrap();
    }
    for i in &m.dropped_inits {
        writeln!(out, "# %init: {} {}  (not concrete)", i.count, pattern_text(&i.complex)).unwrap();
    }
    for o in &m.observables {
        if o.patterns.is_empty() {
            writeln!(out, "# %obs: '{}' has no concrete instance", o.name).unwrap();
            continue;
        }
        let ps: Vec<String> = o.patterns.iter().map(|p| pattern_text(p)).collect();
        writeln!(out, "%obs: '{}' {}", o.name, ps.join(" | ")).unwrap();
    }
    out
}

#[derive(Serialize)]
struct JsonModel<'a> {
    fringe: &'a [String],
    agents: Vec<String>,
    params: Vec<(&'a str, f64)>,
    rules: Vec<JsonRule>,
    observables: Vec<JsonObservable<'a>>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct JsonRule {
    name: String,
    text: String,
    binary_rate: Option<serde_json::Value>,
    unary_rate: Option<serde_json::Value>,
    source: String,
    substitution: Vec<JsonOccurrence>,
}

#[derive(Serialize)]
struct JsonOccurrence {
    occurrence: usize,
    agent: String,
    target: String,
    sites: Vec<(String, String)>,
}

#[derive(Serialize)]
struct JsonObservable<'a> {
    name: &'a str,
    patterns: Vec<String>,
}

fn rate_json(r: &Option<RateExpr>) -> Option<serde_json::Value> {
    r.as_ref().map(|r| match r {
        RateExpr::Value(v) => serde_json::json!(v),
        RateExpr::Param(p) => serde_json::json!(p),
    })
}

fn json_rule(c: &CompiledRule) -> JsonRule {
    let mut bare = c.rule.clone();
    bare.binary_rate = None;
    bare.unary_rate = None;
    JsonRule {
        name: c.rule.name.clone(),
        text: bare.to_string(),
        binary_rate: rate_json(&c.rule.binary_rate),
        unary_rate: rate_json(&c.rule.unary_rate),
        source: c.source.clone(),
        substitution: c
            .substitution
            .0
            .iter()
            .map(|o| JsonOccurrence {
                occurrence: o.index,
                agent: o.source.clone(),
                target: o.target.clone(),
                sites: o.sites.clone(),
            })
            .collect(),
    }
}

/// The compiled model as pretty-printed JSON with per-rule provenance.
pub fn emit_json(m: &ResolvedModel) -> String {
    let doc = JsonModel {
        fringe: &m.fringe,
        agents: m.fringe.iter().filter_map(|a| m.hierarchy.signature(a)).map(|s| s.to_string()).collect(),
        params: m.params.iter().map(|p| (p.name.as_str(), p.value)).collect(),
        rules: m.rules.rules.iter().map(json_rule).collect(),
        observables: m
            .observables
            .iter()
            .map(|o| JsonObservable { name: &o.name, patterns: o.patterns.iter().map(|p| pattern_text(p)).collect() })
            .collect(),
        warnings: m.warnings.iter().map(|d| d.to_string()).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}
