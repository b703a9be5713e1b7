//! Set-level causality graphs and their DOT rendering.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::Serialize;

use crate::bootstrap::GcTestResult;
use crate::error::{Error, Result};
use crate::panel::SetPartition;

/// Significance tier; both boundaries are exclusive, so `p = 0.05` is weak
/// and `p = 0.10` is none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    /// `p < 0.05`, drawn solid.
    Strong,
    /// `0.05 <= p < 0.10`, drawn dashed.
    Weak,
    None,
}

impl Tier {
    pub fn of(p_value: f64) -> Self {
        if p_value < 0.05 {
            Tier::Strong
        } else if p_value < 0.10 {
            Tier::Weak
        } else {
            Tier::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub label: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub rho: f64,
    pub p_value: f64,
    pub tier: Tier,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// One tested edge `from -> to`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTest {
    pub from: String,
    pub to: String,
    pub result: GcTestResult,
}

pub fn build_graph(partition: &SetPartition, results: &[EdgeTest]) -> Result<SetGraph> {
    let mut nodes: Vec<Node> = partition
        .member_lists()
        .map(|(label, members)| Node { label: label.into(), members: members.to_vec() })
        .collect();
    nodes.sort_by(|a, b| a.label.cmp(&b.label));

    let mut seen = BTreeSet::new();
    let mut edges = Vec::with_capacity(results.len());
    for t in results {
        partition.label_index(&t.from)?;
        partition.label_index(&t.to)?;
        if !seen.insert((t.from.as_str(), t.to.as_str())) {
            return Err(Error::DuplicateEdge { from: t.from.clone(), to: t.to.clone() });
        }
        edges.push(Edge {
            from: t.from.clone(),
            to: t.to.clone(),
            rho: t.result.rho_hat,
            p_value: t.result.p_value,
            tier: Tier::of(t.result.p_value),
        });
    }
    edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    Ok(SetGraph { nodes, edges })
}

fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

/// Graphviz text: solid arrows for strong edges, dashed for weak ones;
/// untiered edges are omitted.
pub fn to_dot(graph: &SetGraph) -> String {
    let mut out = String::new();
    out.push_str("digraph set_granger {\n");
    out.push_str("  node [shape=ellipse];\n");
    for node in &graph.nodes {
        let mut label = node.label.clone();
        label.push_str("\\n");
        label.push_str(&node.members.join(", "));
        let _ = writeln!(out, "  {} [label={}];", quoted(&node.label), quoted(&label).replace("\\\\n", "\\n"));
    }
    for e in &graph.edges {
        let style = match e.tier {
            Tier::Strong => "solid",
            Tier::Weak => "dashed",
            Tier::None => continue,
        };
        let _ = writeln!(
            out,
            "  {} -> {} [style={}, label=\"ρ={:.3}, p={:.3}\"];",
            quoted(&e.from),
            quoted(&e.to),
            style,
            e.rho,
            e.p_value
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn result(p: f64, rho: f64) -> GcTestResult {
        GcTestResult {
            rho_hat: rho,
            null_rhos: vec![],
            p_value: p,
            block_length: 5,
            replicates_used: 0,
            failed_replicates: 0,
            alpha: 0.05,
            significant: p < 0.05,
        }
    }

    fn edge(from: &str, to: &str, p: f64) -> EdgeTest {
        EdgeTest { from: from.into(), to: to.into(), result: result(p, 0.5) }
    }

    fn partition() -> SetPartition {
        SetPartition::from_assignments([("b", "II"), ("a", "I"), ("c", "II")]).unwrap()
    }

    #[test]
    fn tiers() {
        assert_eq!(Tier::of(0.03), Tier::Strong);
        assert_eq!(Tier::of(0.07), Tier::Weak);
        assert_eq!(Tier::of(0.05), Tier::Weak);
        assert_eq!(Tier::of(0.10), Tier::None);
    }

    #[test]
    fn empty_results_give_nodes_only() {
        let g = build_graph(&partition(), &[]).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.nodes[0].label, "I");
        assert!(g.edges.is_empty());
    }

    #[test]
    fn duplicates_rejected() {
        let err = build_graph(&partition(), &[edge("I", "II", 0.1), edge("I", "II", 0.2)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { .. }));
    }

    #[test]
    fn dot_renders_strong_weak_and_loops() {
        let g = build_graph(&partition(), &[edge("I", "II", 0.03), edge("II", "II", 0.07), edge("II", "I", 0.5)]).unwrap();
        let dot = to_dot(&g);
        assert!(dot.contains("\"I\" -> \"II\" [style=solid, label=\"ρ=0.500, p=0.030\"];"));
        assert!(dot.contains("\"II\" -> \"II\" [style=dashed"));
        assert!(!dot.contains("\"II\" -> \"I\""));
        assert!(dot.contains("\"II\" [label=\"II\\nb, c\"];"));
        assert_eq!(dot, to_dot(&g));
    }
}
