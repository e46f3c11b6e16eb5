//! DOT export of the reachable synchronous product. Internal rendezvous
//! transitions render as `τ: p→q:label`, external actions as `pq!label` or
//! `pq?label` with the channel written sender-first.

use crate::automata::Polarity;
use crate::composition::{ClassifiedAction, CompositeAutomaton};
use std::fmt::Write;

pub fn edge_label(action: &ClassifiedAction) -> String {
    match action {
        ClassifiedAction::Internal { sender, receiver, label, .. } => {
            format!("\u{03c4}: {sender}\u{2192}{receiver}:{label}")
        }
        ClassifiedAction::External(a) => match a.polarity {
            Polarity::Send => format!("{}{}!{}", a.subject, a.peer, a.label),
            Polarity::Receive => format!("{}{}?{}", a.peer, a.subject, a.label),
        },
    }
}

pub fn product_dot(product: &CompositeAutomaton) -> String {
    let mut out = String::new();
    out.push_str("digraph product {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=circle, label=\"\"];\n");
    out.push_str("  init [shape=none, width=0, height=0];\n");
    writeln!(out, "  init -> s{};", product.initial).unwrap();
    for (from, edges) in product.edges.iter().enumerate() {
        for (action, to) in edges {
            writeln!(out, "  s{from} -> s{to} [label=\"{}\"];", edge_label(action)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::{compose, CompositeSpec};
    use crate::compat::ExploreOptions;
    use crate::source::FileId;
    use crate::syntax::{parse, resolve};

    #[test]
    fn dot_uses_tau_for_rendezvous_and_channel_notation_for_externals() {
        let src = "\
system two
obj a
b ! m
x ! out
y ? in.
obj b
a ? m.
";
        let decls = parse(src, FileId(0)).unwrap();
        let sys = resolve(&decls, "two").unwrap();
        let opts = ExploreOptions::default();
        let spec = CompositeSpec::from_system(&sys, opts.invoke_depth);
        let product = compose(&spec, 1000).unwrap();
        let dot = product_dot(&product);
        assert!(dot.contains("\u{03c4}: a\u{2192}b:m"), "{dot}");
        assert!(dot.contains("ax!out"), "{dot}");
        assert!(dot.contains("ya?in"), "{dot}");
        assert!(dot.starts_with("digraph product {"));
    }
}
