//! Canonical text output.

use std::fmt::{self, Write as _};

use super::ast::*;

impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateExpr::Value(v) => write!(f, "{v}"),
            RateExpr::Param(p) => f.write_str(p),
        }
    }
}

impl fmt::Display for CountExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountExpr::Value(v) => write!(f, "{v}"),
            CountExpr::Param(p) => f.write_str(p),
        }
    }
}

impl fmt::Display for SiteSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        // default first, then the rest in declared order
        if let Some(d) = &self.default_state {
            write!(f, "~{d}")?;
        }
        for s in self.states.iter().filter(|s| Some(*s) != self.default_state.as_ref()) {
            write!(f, "~{s}")?;
        }
        Ok(())
    }
}

impl fmt::Display for AgentSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            write!(f, "{s}")?;
        }
        f.write_char(')')
    }
}

impl fmt::Display for SiteTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteTransform::Delete(s) => write!(f, "-{s}"),
            SiteTransform::Rename { site, new_name } => write!(f, "{site}\\{{{new_name}}}"),
            SiteTransform::Duplicate { site, new_names } => write!(f, "{site}\\{{{}}}", new_names.join(" ")),
            SiteTransform::Add(sig) => write!(f, "+{sig}"),
            SiteTransform::DefaultOverride { site, state } => write!(f, "{site}~{state}"),
        }
    }
}

impl fmt::Display for VariantDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.child, self.parent)?;
        if !self.transforms.is_empty() {
            let ts: Vec<String> = self.transforms.iter().map(|t| t.to_string()).collect();
            write!(f, "[{}]", ts.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Display for SiteCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.site)?;
        if let Some(s) = &self.state {
            write!(f, "~{s}")?;
        }
        match self.bond {
            BondCondition::Free => Ok(()),
            BondCondition::Unspecified => f.write_char('?'),
            BondCondition::Bound(l) => write!(f, "!{l}"),
        }
    }
}

impl fmt::Display for AgentPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.agent)?;
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            write!(f, "{s}")?;
        }
        f.write_char(')')
    }
}

/// `A(x!0), B(y!0)` with labels renumbered.
pub fn pattern_text(side: &[AgentPattern]) -> String {
    let mut side = side.to_vec();
    canonicalize_pattern(&mut side);
    join_side(&side)
}

fn join_side(side: &[AgentPattern]) -> String {
    side.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
}

fn rates_text(k: &Option<RateExpr>, u: &Option<RateExpr>, rev: Option<&Option<RateExpr>>) -> String {
    let mut s = String::new();
    if let Some(k) = k {
        write!(s, " @ {k}").unwrap();
        if let Some(u) = u {
            write!(s, " ({u})").unwrap();
        }
        if let Some(Some(r)) = rev {
            write!(s, ", {r}").unwrap();
        }
    }
    s
}

/// Rule text without its name label, e.g.
/// `Shc(YXNX~p), Grb2(SH2) -> Shc(YXNX~p!0), Grb2(SH2!0)`.
impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut r = self.clone();
        r.canonicalize();
        write!(
            f,
            "{} -> {}{}",
            join_side(&r.lhs),
            join_side(&r.rhs),
            rates_text(&r.binary_rate, &r.unary_rate, None)
        )
    }
}

/// Labelled rule line.
pub fn rule_line(r: &Rule) -> String {
    format!("'{}' {}", r.name, r)
}

/// Recognizes the two halves of a `<->` rule so they print as one line.
fn reversible_pair<'a>(fwd: &'a Rule, rev: &Rule) -> Option<&'a str> {
    let base = fwd.name.strip_suffix(".fwd")?;
    if fwd.direction != Some(Direction::Forward)
        || rev.direction != Some(Direction::Reverse)
        || rev.name.strip_suffix(".rev") != Some(base)
        || rev.unary_rate.is_some()
        || (fwd.binary_rate.is_none() && (rev.binary_rate.is_some() || fwd.unary_rate.is_some()))
        || (fwd.binary_rate.is_some() && rev.binary_rate.is_none())
    {
        return None;
    }
    let (mut a, mut b) = (fwd.clone(), rev.clone());
    a.canonicalize();
    b.canonicalize();
    let mut swapped = b.clone();
    std::mem::swap(&mut swapped.lhs, &mut swapped.rhs);
    swapped.canonicalize();
    (a.lhs == swapped.lhs && a.rhs == swapped.rhs).then_some(base)
}

/// Canonical text for a whole model. Sections appear in a fixed order:
/// signatures, variants, parameters, rules, instantiations, fringe, initial
/// mixture, observables.
pub fn unparse(ast: &ModelAst) -> String {
    let mut out = String::new();
    for s in &ast.signatures {
        writeln!(out, "{s}").unwrap();
    }
    for v in &ast.variants {
        writeln!(out, "{v}").unwrap();
    }
    for p in &ast.params {
        writeln!(out, "%param: {} {}", p.name, p.value).unwrap();
    }
    let mut i = 0;
    while i < ast.rules.len() {
        let r = &ast.rules[i];
        if let Some(next) = ast.rules.get(i + 1) {
            if let Some(base) = reversible_pair(r, next) {
                let mut c = r.clone();
                c.canonicalize();
                writeln!(
                    out,
                    "'{}' {} <-> {}{}",
                    base,
                    join_side(&c.lhs),
                    join_side(&c.rhs),
                    rates_text(&r.binary_rate, &r.unary_rate, Some(&next.binary_rate))
                )
                .unwrap();
                i += 2;
                continue;
            }
        }
        writeln!(out, "{}", rule_line(r)).unwrap();
        i += 1;
    }
    for inst in &ast.instantiations {
        let entries: Vec<String> = inst
            .entries
            .iter()
            .map(|e| {
                let key = match &e.key {
                    OccurrenceKey::Agent(a) => a.clone(),
                    OccurrenceKey::Index(n) => n.to_string(),
                };
                let mut s = format!("{key} -> {}", e.target);
                if !e.site_choices.is_empty() {
                    let cs: Vec<String> = e.site_choices.iter().map(|(a, b)| format!("{a} -> {b}")).collect();
                    write!(s, " {{{}}}", cs.join(", ")).unwrap();
                }
                s
            })
            .collect();
        writeln!(out, "%instantiate: '{}' {}", inst.rule, entries.join(", ")).unwrap();
    }
    if let Some(f) = &ast.fringe {
        writeln!(out, "%concrete: {}", f.agents.join(", ")).unwrap();
    }
    for init in &ast.inits {
        writeln!(out, "%init: {} {}", init.count, pattern_text(&init.complex)).unwrap();
    }
    for o in &ast.observables {
        let ps: Vec<String> = o.patterns.iter().map(|p| pattern_text(p)).collect();
        writeln!(out, "%obs: '{}' {}", o.name, ps.join(" | ")).unwrap();
    }
    out
}
