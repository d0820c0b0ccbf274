use std::collections::BTreeMap;
use std::fmt::Write;

use super::{State, TransitionSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Overlay {
    /// Nodes shaded light-to-dark blue by absolute frequency; arcs labelled
    /// and weighted by frequency.
    #[default]
    AbsoluteFrequency,
    /// Plain labels, no style attributes.
    None,
}

const LIGHT: (f64, f64, f64) = (222.0, 235.0, 247.0);
const DARK: (f64, f64, f64) = (8.0, 48.0, 107.0);

fn shade(t: f64) -> String {
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(LIGHT.0, DARK.0), lerp(LIGHT.1, DARK.1), lerp(LIGHT.2, DARK.2))
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render a transition system as a Graphviz digraph. Node ids follow state
/// order (`START`, activities by label, `END`), so the output is byte-stable.
pub fn export_dot(ts: &TransitionSystem, overlay: Overlay) -> String {
    let ids: BTreeMap<&State, usize> = ts.nodes.keys().enumerate().map(|(i, s)| (s, i)).collect();
    let max_freq = ts.activities().map(|(_, i)| i.frequency).max().unwrap_or(1).max(1);
    let max_arc = ts.arcs.values().copied().max().unwrap_or(1).max(1);

    let mut out = String::new();
    let _ = writeln!(out, "digraph process {{");
    let _ = writeln!(out, "  rankdir=LR;");
    for (state, info) in &ts.nodes {
        let id = ids[state];
        let label = escape(state.label());
        match overlay {
            Overlay::None => {
                let _ = writeln!(out, "  n{id} [label=\"{label}\"];");
            }
            Overlay::AbsoluteFrequency if state.is_artificial() => {
                let shape = if *state == State::Start { "circle" } else { "doublecircle" };
                let _ = writeln!(out, "  n{id} [label=\"{label}\", shape={shape}];");
            }
            Overlay::AbsoluteFrequency => {
                let t = info.frequency as f64 / max_freq as f64;
                let font = if t > 0.5 { "#ffffff" } else { "#000000" };
                let _ = writeln!(
                    out,
                    "  n{id} [label=\"{label}\\n{}\", shape=box, style=\"rounded,filled\", fillcolor=\"{}\", fontcolor=\"{font}\"];",
                    info.frequency,
                    shade(t)
                );
            }
        }
    }
    for ((from, to), freq) in &ts.arcs {
        let (a, b) = (ids[from], ids[to]);
        match overlay {
            Overlay::None => {
                let _ = writeln!(out, "  n{a} -> n{b};");
            }
            Overlay::AbsoluteFrequency => {
                let width = 1.0 + 4.0 * (*freq as f64 / max_arc as f64);
                let _ = writeln!(out, "  n{a} -> n{b} [label=\"{freq}\", penwidth={width:.2}];");
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::tests::log_of;
    use crate::discovery::{discover_model, flatten_level};

    fn chain() -> TransitionSystem {
        let log = log_of(&[vec![("a", "E", "x"), ("b", "E", "x")], vec![("a", "E", "x")]]);
        let model = discover_model(&log, 0).unwrap();
        flatten_level(&model, 0).unwrap().clone()
    }

    #[test]
    fn two_node_chain_has_start_end_edges() {
        let log = log_of(&[vec![("a", "E", "x"), ("b", "E", "x")]]);
        let model = discover_model(&log, 0).unwrap();
        let dot = export_dot(flatten_level(&model, 0).unwrap(), Overlay::None);
        assert_eq!(dot.matches("->").count(), 3);
        assert!(dot.starts_with("digraph process {\n"));
        assert!(dot.ends_with("}\n"));
    }

    #[test]
    fn plain_overlay_is_golden() {
        let expected = "digraph process {\n  rankdir=LR;\n  n0 [label=\"START\"];\n  n1 [label=\"a\"];\n  n2 [label=\"b\"];\n  n3 [label=\"END\"];\n  n0 -> n1;\n  n1 -> n2;\n  n1 -> n3;\n  n2 -> n3;\n}\n";
        let dot = export_dot(&chain(), Overlay::None);
        assert_eq!(dot, expected);
        assert!(!dot.contains("style") && !dot.contains("color"));
    }

    #[test]
    fn frequency_overlay_shades_by_frequency() {
        let dot = export_dot(&chain(), Overlay::AbsoluteFrequency);
        // a is seen twice (max), b once.
        assert!(dot.contains("n1 [label=\"a\\n2\", shape=box, style=\"rounded,filled\", fillcolor=\"#08306b\""));
        assert!(dot.contains(&format!("fillcolor=\"{}\"", shade(0.5))));
        assert!(dot.contains("n0 -> n1 [label=\"2\", penwidth=5.00];"));
        assert_eq!(export_dot(&chain(), Overlay::AbsoluteFrequency), dot);
    }

    #[test]
    fn labels_are_escaped() {
        let log = log_of(&[vec![("say \"hi\"", "E", "x")]]);
        let model = discover_model(&log, 0).unwrap();
        let dot = export_dot(flatten_level(&model, 0).unwrap(), Overlay::None);
        assert!(dot.contains(r#"[label="say \"hi\""]"#));
    }
}
