use proptest::prelude::*;

use super::*;

const TOKENS: &[&str] = &[
    "A", "B2", "s", "x_1", "(", ")", ",", "!", "1", "0", "~", "u", "p", "?", "->", "<->", "@", "'r'", "'", "%init:",
    "%obs:", "%param:", "%concrete:", "%instantiate:", "=", "[", "]", "\\", "{", "}", "-", "+", "\n", " ", "#", "0.5",
    "1e3", "|", ":", "%", "é", "\t",
];

fn soup() -> impl Strategy<Value = String> {
    prop_oneof![
        proptest::collection::vec(proptest::sample::select(TOKENS), 0..60).prop_map(|v| v.concat()),
        "\\PC{0,80}",
    ]
}

/// Renders a small, valid model from a handful of choices.
fn model_text(
    sites: Vec<(u8, bool)>,
    variant: u8,
    rules: Vec<(u8, u8, u8, u8, u8)>,
    init: u8,
) -> String {
    let n_agents = sites.len();
    let mut out = String::new();
    let mut ifaces: Vec<Vec<(String, bool)>> = Vec::new();
    for (i, &(m, states)) in sites.iter().enumerate() {
        let iface: Vec<(String, bool)> = (0..=m % 3).map(|j| (format!("s{j}"), states && j == 0)).collect();
        let body: Vec<String> =
            iface.iter().map(|(n, st)| if *st { format!("{n}~u~p") } else { n.clone() }).collect();
        out.push_str(&format!("A{i}({})\n", body.join(",")));
        ifaces.push(iface);
    }
    match variant % 5 {
        0 => {}
        1 => out.push_str("V = A0[-s0]\n"),
        2 => out.push_str("V = A0[s0\\{t1 t2}]\n"),
        3 => out.push_str("V = A0[+KIM~a~b]\nW = V\n"),
        _ => out.push_str("V = A0[s0\\{q}, +z]\n"),
    }
    out.push_str("%param: k 0.5\n%param: ku 2\n");
    for (r, &(kind, a, sa, b, sb)) in rules.iter().enumerate() {
        let (a, b) = (a as usize % n_agents, b as usize % n_agents);
        let sa = &ifaces[a][sa as usize % ifaces[a].len()];
        let sb = &ifaces[b][sb as usize % ifaces[b].len()];
        let (x, y) = (&sa.0, &sb.0);
        let line = match kind % 5 {
            0 => format!("'r{r}' A{a}({x}), A{b}({y}) -> A{a}({x}!1), A{b}({y}!1) @ k (ku)"),
            1 => format!("'r{r}' A{a}({x}!1), A{b}({y}!1) -> A{a}({x}), A{b}({y}) @ 3"),
            2 => format!("'r{r}' A{a}({x}), A{b}({y}) <-> A{a}({x}!2), A{b}({y}!2) @ k, ku"),
            3 if sa.1 => format!("'r{r}' A{a}({x}~u) -> A{a}({x}~p)"),
            _ => format!("'r{r}' A{a}({x}?), A{b}({y}) -> A{a}({x}?), A{b}({y}) @ 1.5"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    let a = init as usize % n_agents;
    out.push_str(&format!("%init: {} A{a}()\n%obs: 'o' A{a}(s0?) | A{a}()\n", init % 7));
    out
}

fn valid_model() -> impl Strategy<Value = String> {
    (
        proptest::collection::vec((any::<u8>(), any::<bool>()), 1..4),
        any::<u8>(),
        proptest::collection::vec(any::<(u8, u8, u8, u8, u8)>(), 0..6),
        any::<u8>(),
    )
        .prop_map(|(s, v, r, i)| model_text(s, v, r, i))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn parsing_is_total(text in soup()) {
        if let Err(d) = parse_model(&text) {
            prop_assert!(d.has_errors());
        }
    }

    #[test]
    fn unparse_round_trips(text in valid_model()) {
        let ast = parse_model(&text).map_err(|d| TestCaseError::fail(format!("{d}\n{text}")))?;
        let printed = unparse(&ast);
        let again = parse_model(&printed).map_err(|d| TestCaseError::fail(format!("{d}\n{printed}")))?;
        prop_assert_eq!(again.canonical(), ast.canonical());
        prop_assert_eq!(unparse(&again), printed);
    }
}

#[test]
fn bundled_examples_round_trip() {
    for text in [
        include_str!("../../examples/shc.gka"),
        include_str!("../../examples/polymer.gka"),
        include_str!("../../examples/mapk_cascades.gka"),
        include_str!("../../examples/mkp.gka"),
        include_str!("../../examples/distributive.gka"),
        include_str!("../../examples/processive.gka"),
    ] {
        let ast = parse_model(text).unwrap();
        let printed = unparse(&ast);
        let again = parse_model(&printed).unwrap();
        assert_eq!(again.canonical(), ast.canonical());
        assert_eq!(unparse(&again), printed);
    }
}
