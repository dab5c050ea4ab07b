//! Line-oriented parser producing a [`ModelAst`].
//!
//! Each non-empty line is one of: an agent signature `A(x,y~u~p)`, a variant
//! declaration `B = A[...]`, a rule `['name'] lhs -> rhs [@ k [(u)] [, k']]`,
//! or a `%directive:`.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use crate::diag::{Diagnostic, Diagnostics, Span};

type PResult<T> = Result<T, Diagnostic>;

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    end: Span,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        match self.peek() {
            Some(t) => Diagnostic::error(self.span(), format!("expected {expected}, found {}", t.describe())),
            None => Diagnostic::error(self.span(), format!("expected {expected}, found end of line")),
        }
    }

    fn expect(&mut self, tok: &Tok, expected: &str) -> PResult<Span> {
        let sp = self.span();
        if self.eat(tok) {
            Ok(sp)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    /// A state name: identifier or bare number.
    fn state_name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) | Some(Tok::Number(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.unexpected("internal state name")),
        }
    }

    fn finish(&self) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }
}

fn parse_signature(c: &mut Cursor) -> PResult<AgentSignature> {
    let span = c.span();
    let name = c.ident("agent name")?;
    c.expect(&Tok::LParen, "`(`")?;
    let mut sites = Vec::new();
    if !c.eat(&Tok::RParen) {
        loop {
            let site = c.ident("site name")?;
            let mut states = Vec::new();
            while c.eat(&Tok::Tilde) {
                let st = c.state_name()?;
                if states.contains(&st) {
                    return Err(Diagnostic::error(span, format!("state {st} listed twice for site {site}")));
                }
                states.push(st);
            }
            if matches!(c.peek(), Some(Tok::Bang) | Some(Tok::Question)) {
                return Err(Diagnostic::error(c.span(), "bond conditions are not allowed in a signature"));
            }
            let default_state = states.first().cloned();
            sites.push(SiteSignature { name: site, states, default_state });
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(&Tok::Comma, "`,` or `)`")?;
        }
    }
    let mut seen = BTreeSet::new();
    for s in &sites {
        if !seen.insert(s.name.as_str()) {
            return Err(Diagnostic::error(span, format!("site {} declared twice in signature of {}", s.name, name)));
        }
    }
    Ok(AgentSignature { name, sites, span })
}

fn parse_agent_pattern(c: &mut Cursor) -> PResult<AgentPattern> {
    let agent = c.ident("agent name")?;
    c.expect(&Tok::LParen, "`(`")?;
    let mut sites = Vec::new();
    if !c.eat(&Tok::RParen) {
        loop {
            let site = c.ident("site name")?;
            let mut state = None;
            let mut bond = None;
            loop {
                match c.peek() {
                    Some(Tok::Tilde) if state.is_none() => {
                        c.bump();
                        state = Some(c.state_name()?);
                    }
                    Some(Tok::Bang) if bond.is_none() => {
                        c.bump();
                        match c.peek() {
                            Some(Tok::Number(n)) => {
                                let l: u32 = n.parse().map_err(|_| {
                                    Diagnostic::error(c.span(), format!("invalid bond label `{n}`"))
                                })?;
                                c.bump();
                                bond = Some(BondCondition::Bound(l));
                            }
                            _ => return Err(c.unexpected("bond label number")),
                        }
                    }
                    Some(Tok::Question) if bond.is_none() => {
                        c.bump();
                        bond = Some(BondCondition::Unspecified);
                    }
                    Some(Tok::Tilde) | Some(Tok::Bang) | Some(Tok::Question) => {
                        return Err(Diagnostic::error(c.span(), format!("site {site} has two state or bond conditions")));
                    }
                    _ => break,
                }
            }
            sites.push(SiteCondition { site, state, bond: bond.unwrap_or(BondCondition::Free) });
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(&Tok::Comma, "`,` or `)`")?;
        }
    }
    Ok(AgentPattern { agent, sites })
}

/// Comma-separated agent patterns; stops at any token that cannot continue
/// the list.
fn parse_side(c: &mut Cursor) -> PResult<Vec<AgentPattern>> {
    let mut side = vec![parse_agent_pattern(c)?];
    while c.peek() == Some(&Tok::Comma) && matches!(c.peek_at(1), Some(Tok::Ident(_))) {
        c.bump();
        side.push(parse_agent_pattern(c)?);
    }
    Ok(side)
}

fn parse_rate(c: &mut Cursor) -> PResult<RateExpr> {
    match c.peek() {
        Some(Tok::Number(n)) => {
            let v: f64 = n
                .parse()
                .map_err(|_| Diagnostic::error(c.span(), format!("invalid number `{n}`")))?;
            c.bump();
            Ok(RateExpr::Value(v))
        }
        Some(Tok::Ident(s)) => {
            c.bump();
            Ok(RateExpr::Param(s.clone()))
        }
        _ => Err(c.unexpected("rate (number or parameter name)")),
    }
}

/// Parses a rule line; `<->` yields two rules.
fn parse_rule(c: &mut Cursor, line: u32) -> PResult<Vec<Rule>> {
    let span = c.span();
    let name = match c.peek() {
        Some(Tok::Label(l)) => {
            c.bump();
            l.clone()
        }
        _ => format!("r{line}"),
    };
    let lhs = parse_side(c)?;
    let reversible = match c.peek() {
        Some(Tok::Arrow) => false,
        Some(Tok::BiArrow) => true,
        _ => return Err(c.unexpected("`->` or `<->`")),
    };
    c.bump();
    let rhs = parse_side(c)?;
    let (mut k, mut u, mut k_rev) = (None, None, None);
    if c.eat(&Tok::At) {
        k = Some(parse_rate(c)?);
        if c.eat(&Tok::LParen) {
            u = Some(parse_rate(c)?);
            c.expect(&Tok::RParen, "`)`")?;
        }
        if c.peek() == Some(&Tok::Comma) {
            if !reversible {
                return Err(Diagnostic::error(c.span(), "a reverse rate is only allowed on a `<->` rule"));
            }
            c.bump();
            k_rev = Some(parse_rate(c)?);
        }
    }
    c.finish()?;
    if reversible {
        let rev_rate = k_rev.or_else(|| k.clone());
        let mut fwd = Rule {
            name: format!("{name}.fwd"),
            lhs: lhs.clone(),
            rhs: rhs.clone(),
            binary_rate: k,
            unary_rate: u,
            direction: Some(Direction::Forward),
            span,
        };
        let mut rev = Rule {
            name: format!("{name}.rev"),
            lhs: rhs,
            rhs: lhs,
            binary_rate: rev_rate,
            unary_rate: None,
            direction: Some(Direction::Reverse),
            span,
        };
        fwd.canonicalize();
        rev.canonicalize();
        Ok(vec![fwd, rev])
    } else {
        let mut r = Rule { name, lhs, rhs, binary_rate: k, unary_rate: u, direction: None, span };
        r.canonicalize();
        Ok(vec![r])
    }
}

fn parse_brace_names(c: &mut Cursor) -> PResult<Vec<String>> {
    c.expect(&Tok::LBrace, "`{`")?;
    let mut names = Vec::new();
    loop {
        match c.peek() {
            Some(Tok::RBrace) => {
                c.bump();
                break;
            }
            Some(Tok::Comma) => {
                c.bump();
            }
            Some(Tok::Ident(s)) => {
                names.push(s.clone());
                c.bump();
            }
            _ => return Err(c.unexpected("site name or `}`")),
        }
    }
    Ok(names)
}

fn parse_transform(c: &mut Cursor) -> PResult<SiteTransform> {
    let span = c.span();
    match c.peek() {
        Some(Tok::Minus) => {
            c.bump();
            Ok(SiteTransform::Delete(c.ident("site name")?))
        }
        Some(Tok::Plus) => {
            c.bump();
            let name = c.ident("site name")?;
            let mut states = Vec::new();
            while c.eat(&Tok::Tilde) {
                states.push(c.state_name()?);
            }
            let default_state = states.first().cloned();
            Ok(SiteTransform::Add(SiteSignature { name, states, default_state }))
        }
        Some(Tok::Ident(_)) => {
            let site = c.ident("site name")?;
            match c.peek() {
                Some(Tok::Tilde) => {
                    c.bump();
                    let state = c.state_name()?;
                    Ok(SiteTransform::DefaultOverride { site, state })
                }
                Some(Tok::Backslash) | Some(Tok::LBrace) => {
                    c.eat(&Tok::Backslash);
                    let names = parse_brace_names(c)?;
                    match names.len() {
                        0 => Err(Diagnostic::error(span, format!("empty replacement list for site {site}"))),
                        1 => Ok(SiteTransform::Rename { site, new_name: names.into_iter().next().unwrap() }),
                        _ => {
                            let distinct: BTreeSet<&String> = names.iter().collect();
                            if distinct.len() != names.len() {
                                return Err(Diagnostic::error(span, format!("duplicate names for site {site}")));
                            }
                            Ok(SiteTransform::Duplicate { site, new_names: names })
                        }
                    }
                }
                _ => Err(c.unexpected("`~state`, `\\{...}` after site name")),
            }
        }
        _ => Err(c.unexpected("site transform (`-s`, `+s`, `s\\{..}` or `s~state`)")),
    }
}

fn parse_variant(c: &mut Cursor) -> PResult<VariantDecl> {
    let span = c.span();
    let child = c.ident("agent name")?;
    c.expect(&Tok::Eq, "`=`")?;
    let parent = c.ident("parent agent name")?;
    let mut transforms = Vec::new();
    if c.eat(&Tok::LBracket) {
        if !c.eat(&Tok::RBracket) {
            loop {
                transforms.push(parse_transform(c)?);
                if c.eat(&Tok::RBracket) {
                    break;
                }
                c.expect(&Tok::Comma, "`,` or `]`")?;
            }
        }
    }
    c.finish()?;
    let mut seen = BTreeSet::new();
    for t in &transforms {
        if let Some(s) = t.source_site() {
            if !seen.insert(s.to_string()) {
                return Err(Diagnostic::error(span, format!("site {s} is transformed twice in the definition of {child}")));
            }
        }
    }
    Ok(VariantDecl { child, parent, transforms, span })
}

enum Directive {
    Concrete(FringeDecl),
    Init(InitDecl),
    Obs(ObservableDecl),
    Param(ParamDecl),
    Instantiate(InstantiationDecl),
}

fn parse_directive(c: &mut Cursor, name: &str) -> PResult<Directive> {
    let span = c.span();
    c.bump();
    let d = match name {
        "concrete" => {
            let mut agents = vec![c.ident("agent name")?];
            while c.eat(&Tok::Comma) {
                agents.push(c.ident("agent name")?);
            }
            Directive::Concrete(FringeDecl { agents, span })
        }
        "init" => {
            let count = match c.peek() {
                Some(Tok::Number(n)) => {
                    let v: u64 = n.parse().map_err(|_| {
                        Diagnostic::error(c.span(), format!("initial count `{n}` is not a nonnegative integer"))
                    })?;
                    c.bump();
                    CountExpr::Value(v)
                }
                Some(Tok::Ident(p)) => {
                    c.bump();
                    CountExpr::Param(p.clone())
                }
                _ => return Err(c.unexpected("initial count")),
            };
            let mut complex = parse_side(c)?;
            canonicalize_pattern(&mut complex);
            Directive::Init(InitDecl { count, complex, span })
        }
        "obs" => {
            let name = match c.peek() {
                Some(Tok::Label(s)) | Some(Tok::Ident(s)) => {
                    c.bump();
                    s.clone()
                }
                _ => return Err(c.unexpected("observable name")),
            };
            let mut patterns = Vec::new();
            loop {
                let mut p = parse_side(c)?;
                canonicalize_pattern(&mut p);
                patterns.push(p);
                if !c.eat(&Tok::Pipe) {
                    break;
                }
            }
            Directive::Obs(ObservableDecl { name, patterns, span })
        }
        "param" => {
            let name = c.ident("parameter name")?;
            c.eat(&Tok::Eq);
            let value = match parse_rate(c)? {
                RateExpr::Value(v) => v,
                RateExpr::Param(_) => return Err(Diagnostic::error(span, "parameter value must be a number")),
            };
            Directive::Param(ParamDecl { name, value, span })
        }
        "instantiate" => {
            let rule = match c.peek() {
                Some(Tok::Label(s)) | Some(Tok::Ident(s)) => {
                    c.bump();
                    s.clone()
                }
                _ => return Err(c.unexpected("rule name")),
            };
            let mut entries = Vec::new();
            loop {
                let key = match c.peek() {
                    Some(Tok::Ident(a)) => OccurrenceKey::Agent(a.clone()),
                    Some(Tok::Number(n)) => OccurrenceKey::Index(n.parse().map_err(|_| {
                        Diagnostic::error(c.span(), format!("invalid occurrence index `{n}`"))
                    })?),
                    _ => return Err(c.unexpected("agent name or occurrence index")),
                };
                c.bump();
                c.expect(&Tok::Arrow, "`->`")?;
                let target = c.ident("target agent")?;
                let mut site_choices = Vec::new();
                if c.eat(&Tok::LBrace) {
                    loop {
                        if c.eat(&Tok::RBrace) {
                            break;
                        }
                        let from = c.ident("site name")?;
                        c.expect(&Tok::Arrow, "`->`")?;
                        let to = c.ident("site name")?;
                        site_choices.push((from, to));
                        c.eat(&Tok::Comma);
                    }
                }
                entries.push(SubstitutionEntry { key, target, site_choices });
                if !c.eat(&Tok::Comma) {
                    break;
                }
            }
            Directive::Instantiate(InstantiationDecl { rule, entries, span })
        }
        other => return Err(Diagnostic::error(span, format!("unknown directive `%{other}:`"))),
    };
    c.finish()?;
    Ok(d)
}

/// Parses a complete model. Never panics; on failure returns every
/// diagnostic found (parsing continues with the next line after an error).
pub fn parse_model(text: &str) -> Result<ModelAst, Diagnostics> {
    let (toks, lex_diags) = lex(text);
    let mut diags = Diagnostics(lex_diags);
    let mut ast = ModelAst::default();

    let mut lines: Vec<&[Token]> = Vec::new();
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        if t.tok == Tok::Newline {
            lines.push(&toks[start..i]);
            start = i + 1;
        }
    }
    lines.push(&toks[start..]);

    for line in lines.into_iter().filter(|l| !l.is_empty()) {
        let lineno = line[0].span.line;
        let last = line.last().unwrap().span;
        let mut c = Cursor { toks: line, pos: 0, end: Span::new(last.line, last.col + 1) };
        let has_arrow = line.iter().any(|t| matches!(t.tok, Tok::Arrow | Tok::BiArrow));
        let res: PResult<()> = match (&line[0].tok, line.get(1).map(|t| &t.tok)) {
            (Tok::Directive(d), _) => parse_directive(&mut c, &d.clone()).map(|d| match d {
                Directive::Concrete(f) => {
                    if ast.fringe.is_some() {
                        diags.error(f.span, "duplicate declaration: `%concrete:` given more than once");
                    } else {
                        ast.fringe = Some(f);
                    }
                }
                Directive::Init(i) => ast.inits.push(i),
                Directive::Obs(o) => ast.observables.push(o),
                Directive::Param(p) => ast.params.push(p),
                Directive::Instantiate(i) => ast.instantiations.push(i),
            }),
            (Tok::Label(_), _) => parse_rule(&mut c, lineno).map(|rs| ast.rules.extend(rs)),
            _ if has_arrow => parse_rule(&mut c, lineno).map(|rs| ast.rules.extend(rs)),
            (Tok::Ident(_), Some(Tok::Eq)) => parse_variant(&mut c).map(|v| ast.variants.push(v)),
            (Tok::Ident(_), _) => parse_signature(&mut c).and_then(|s| {
                c.finish()?;
                ast.signatures.push(s);
                Ok(())
            }),
            (t, _) => Err(Diagnostic::error(line[0].span, format!("unexpected {} at start of line", t.describe()))),
        };
        if let Err(d) = res {
            diags.push(d);
        }
    }

    check_model(&ast, &mut diags);
    if diags.has_errors() {
        Err(diags)
    } else {
        Ok(ast)
    }
}

/// Declaration-level checks: duplicates, unresolved identifiers and rule
/// well-formedness.
fn check_model(ast: &ModelAst, diags: &mut Diagnostics) {
    let mut agents: BTreeMap<&str, Span> = BTreeMap::new();
    for s in &ast.signatures {
        if agents.insert(&s.name, s.span).is_some() {
            diags.error(s.span, format!("duplicate declaration of agent {}", s.name));
        }
    }
    let mut edges = BTreeSet::new();
    for v in &ast.variants {
        if ast.signatures.iter().any(|s| s.name == v.child) {
            diags.error(v.span, format!("duplicate declaration: {} is declared ab initio and as a variant", v.child));
        }
        if !edges.insert((v.child.as_str(), v.parent.as_str())) {
            diags.error(v.span, format!("duplicate declaration: {} = {} given twice", v.child, v.parent));
        }
    }
    let known = |a: &str| ast.is_declared_agent(a);
    for v in &ast.variants {
        if !known(&v.parent) {
            diags.error(v.span, format!("unresolved identifier: agent {} is not declared", v.parent));
        }
    }

    let mut rule_names: BTreeSet<&str> = BTreeSet::new();
    for r in &ast.rules {
        if !rule_names.insert(&r.name) {
            diags.error(r.span, format!("duplicate declaration of rule '{}'", r.name));
        }
        if r.direction == Some(Direction::Reverse) {
            // The forward half reports problems shared by both halves.
            continue;
        }
        for a in r.lhs.iter().chain(&r.rhs).map(|a| a.agent.as_str()).collect::<BTreeSet<_>>() {
            if !known(a) {
                diags.error(r.span, format!("unresolved identifier: agent {a} in rule '{}' is not declared", r.name));
            }
        }
        let mut errs = r.check();
        if errs.is_empty() {
            errs = r.check_actions();
        }
        for e in errs {
            diags.error(r.span, format!("rule '{}': {e}", r.name));
        }
    }

    let mut params = BTreeSet::new();
    for p in &ast.params {
        if !params.insert(p.name.as_str()) {
            diags.error(p.span, format!("duplicate declaration of parameter {}", p.name));
        }
        if !(p.value >= 0.0 && p.value.is_finite()) {
            diags.error(p.span, format!("parameter {} must be a finite nonnegative number", p.name));
        }
    }
    for r in &ast.rules {
        for rate in [&r.binary_rate, &r.unary_rate].into_iter().flatten() {
            if let RateExpr::Value(v) = rate {
                if !(*v >= 0.0 && v.is_finite()) {
                    diags.error(r.span, format!("rule '{}' has a negative or non-finite rate", r.name));
                }
            }
        }
    }

    if let Some(f) = &ast.fringe {
        for a in &f.agents {
            if !known(a) {
                diags.error(f.span, format!("unresolved identifier: agent {a} in `%concrete:` is not declared"));
            }
        }
    }

    for i in &ast.instantiations {
        let resolves = ast.rules.iter().any(|r| {
            r.name == i.rule || (r.direction.is_some() && r.name.rsplit_once('.').map(|(b, _)| b) == Some(&i.rule))
        });
        if !resolves {
            diags.error(i.span, format!("unresolved identifier: no rule named '{}'", i.rule));
        }
        for e in &i.entries {
            if !known(&e.target) {
                diags.error(i.span, format!("unresolved identifier: agent {} is not declared", e.target));
            }
            if let OccurrenceKey::Agent(a) = &e.key {
                if !known(a) {
                    diags.error(i.span, format!("unresolved identifier: agent {a} is not declared"));
                }
            }
        }
    }

    for init in &ast.inits {
        for a in &init.complex {
            if !known(&a.agent) {
                diags.error(init.span, format!("unresolved identifier: agent {} is not declared", a.agent));
            }
            if a.sites.iter().any(|s| s.bond == BondCondition::Unspecified) {
                diags.error(init.span, "initial complexes must be fully specified (no `?`)");
            }
        }
        if let Err(e) = check_unique_sites(&init.complex).and_then(|_| bond_pairs(&init.complex).map(|_| ())) {
            diags.error(init.span, e);
        }
    }

    let mut obs_names = BTreeSet::new();
    for o in &ast.observables {
        if !obs_names.insert(o.name.as_str()) {
            diags.error(o.span, format!("duplicate declaration of observable '{}'", o.name));
        }
        for p in &o.patterns {
            for a in p {
                if !known(&a.agent) {
                    diags.error(o.span, format!("unresolved identifier: agent {} is not declared", a.agent));
                }
            }
            if let Err(e) = check_unique_sites(p).and_then(|_| bond_pairs(p).map(|_| ())) {
                diags.error(o.span, e);
            }
        }
    }
}
