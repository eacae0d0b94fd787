//! Graphviz output.

use std::fmt::Write;

use crate::ltlf::{fmt_symbol, Nfa};
use crate::product::Product;
use crate::summary::ConstraintGraph;

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn constraint_graph(g: &ConstraintGraph) -> String {
    let mut out = String::from("digraph constraint_graph {\n  node [shape=box];\n");
    for (i, (b, phi)) in g.nodes.iter().enumerate() {
        let _ = writeln!(out, "  n{} [label=\"{}: {}\"];", i, esc(b), esc(&phi.to_string()));
    }
    let _ = writeln!(out, "  start [shape=point];\n  start -> n{};", g.initial);
    for (f, a, t) in &g.edges {
        let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", f, t, esc(a));
    }
    out.push_str("}\n");
    out
}

pub fn nfa(n: &Nfa) -> String {
    let mut out = String::from("digraph nfa {\n  rankdir=LR;\n");
    for (i, s) in n.states.iter().enumerate() {
        let shape = if n.is_final(i) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  q{} [shape={}, label=\"{}\"];", i, shape, esc(&s.to_string()));
    }
    let _ = writeln!(out, "  start [shape=point];\n  start -> q{};", n.initial);
    for (f, l, t) in &n.edges {
        let _ = writeln!(out, "  q{} -> q{} [label=\"{}\"];", f, t, esc(&fmt_symbol(l)));
    }
    out.push_str("}\n");
    out
}

pub fn product(p: &Product) -> String {
    let mut out = String::from("digraph product {\n  node [shape=box];\n");
    for i in 0..p.nodes.len() {
        let style = if p.is_final(i) { ", style=filled, fillcolor=\"#f2d0d0\"" } else { "" };
        let _ = writeln!(out, "  p{} [label=\"{}\"{}];", i, esc(&p.node_label(i)), style);
    }
    let _ = writeln!(out, "  start [shape=point];\n  start -> p{};", p.initial);
    for e in &p.edges {
        let label = if e.symbol.is_empty() { e.action.clone() } else { format!("{} {}", e.action, fmt_symbol(&e.symbol)) };
        let _ = writeln!(out, "  p{} -> p{} [label=\"{}\"];", e.from, e.to, esc(&label));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::summary::{self, Engine, SummaryStrategy};

    #[test]
    fn constraint_graph_dot() {
        let d = examples::b1();
        let g = summary::constraint_graph(&Engine::new(&d, &SummaryStrategy::Mc), 100).unwrap();
        let s = constraint_graph(&g);
        assert!(s.starts_with("digraph"));
        assert_eq!(s.matches(" -> ").count(), g.edges.len() + 1);
        assert!(s.contains("x = 0 && y = 0"));
    }
}
