use std::fmt::Write as _;

use super::Hierarchy;

/// Human-readable summary: topological order, then one block per agent with
/// its parents, children and effective interface.
pub fn lint_report(h: &Hierarchy, fringe: &[String]) -> String {
    let mut out = String::new();
    let order = h.topological_order();
    writeln!(out, "agents: {} ({} roots, {} aliases)", order.len(), h.roots().len(), h.aliases().len()).unwrap();
    writeln!(out, "topological order: {}", order.join(", ")).unwrap();
    writeln!(out, "concrete fringe: {}", fringe.join(", ")).unwrap();
    for a in order {
        let sig = h.signature(a).expect("agent in hierarchy");
        let mut tags = Vec::new();
        if h.is_root(a) {
            tags.push("root");
        }
        if h.parents(a).len() >= 2 {
            tags.push("alias");
        }
        if fringe.iter().any(|f| f == a) {
            tags.push("concrete");
        }
        write!(out, "\n{sig}").unwrap();
        if !tags.is_empty() {
            write!(out, "  [{}]", tags.join(", ")).unwrap();
        }
        out.push('\n');
        let parents = h.parents(a);
        if !parents.is_empty() {
            writeln!(out, "  parents: {}", parents.join(", ")).unwrap();
        }
        let children = h.children(a);
        if !children.is_empty() {
            writeln!(out, "  children: {}", children.join(", ")).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_model;

    #[test]
    fn report_lists_aliases_and_order() {
        let ast = parse_model("P(a~u)\nQ(a~u)\nM = P[+k]\nM = Q[+k]\n").unwrap();
        let h = Hierarchy::from_ast(&ast).unwrap();
        let r = lint_report(&h, &["M".to_string()]);
        assert!(r.contains("topological order: P, Q, M"), "{r}");
        assert!(r.contains("M(a~u,k)  [alias, concrete]"), "{r}");
        assert!(r.contains("  parents: P, Q"), "{r}");
    }
}
