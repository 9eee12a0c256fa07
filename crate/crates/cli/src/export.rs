//! JSON and DOT renderings of an UP-tree.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use uptree::decomposition::{NodeClass, SkelTag};
use uptree::digraph::{DiGraph, VertexId};
use uptree::uptree::markers::MarkerKind;
use uptree::uptree::{Freedom, UpTree};

pub const SCHEMA: &str = "uptree-v1";

#[derive(Debug, Serialize, Deserialize)]
pub struct GraphDump {
    pub vertices: usize,
    pub edges: Vec<(VertexId, VertexId)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SkelEdgeDump {
    pub tail: VertexId,
    pub head: VertexId,
    /// Graph edge id of a real edge.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub edge: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub arc: Option<usize>,
    /// Marker standing in for the far side of `arc`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub marker: Option<MarkerKind>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeDump {
    pub id: usize,
    pub class: NodeClass,
    pub freedom: Freedom,
    pub skeleton: Vec<SkelEdgeDump>,
    /// Stored clockwise order at each skeleton vertex, parent slot first; `e<id>` for
    /// real edges, `a<id>` for arcs.
    pub rotation: BTreeMap<VertexId, Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ArcDump {
    pub id: usize,
    pub parent: usize,
    pub child: usize,
    pub poles: (VertexId, VertexId),
    pub in_parent: MarkerKind,
    pub in_child: MarkerKind,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeDump {
    pub schema: String,
    pub graph: GraphDump,
    pub root: (VertexId, VertexId),
    /// Number of represented embeddings, in decimal.
    pub count: String,
    pub tree_root: usize,
    pub nodes: Vec<NodeDump>,
    pub arcs: Vec<ArcDump>,
}

fn tag_name(tag: SkelTag) -> String {
    match tag {
        SkelTag::Real(e) => format!("e{e}"),
        SkelTag::Virtual(a) => format!("a{a}"),
    }
}

pub fn dump(g: &DiGraph, up: &UpTree) -> TreeDump {
    let root = g.edge(up.root_edge);
    let r = up.rooted();
    let nodes = up
        .tree
        .nodes
        .iter()
        .map(|(&id, node)| NodeDump {
            id,
            class: node.class,
            freedom: up.freedom[&id],
            skeleton: node
                .skeleton
                .iter()
                .map(|e| {
                    let (edge, arc) = match e.tag {
                        SkelTag::Real(x) => (Some(x), None),
                        SkelTag::Virtual(a) => (None, Some(a)),
                    };
                    SkelEdgeDump {
                        tail: e.tail,
                        head: e.head,
                        edge,
                        arc,
                        marker: arc.map(|a| up.marker_in(id, a)),
                    }
                })
                .collect(),
            rotation: up
                .stored_rotation(id)
                .iter()
                .map(|(&v, order)| (v, order.iter().copied().map(tag_name).collect()))
                .collect(),
        })
        .collect();
    let arcs = up
        .tree
        .arcs
        .iter()
        .map(|(&id, arc)| {
            let child = if r.parent_arc(arc.nodes[0]) == Some(id) { arc.nodes[0] } else { arc.nodes[1] };
            let m = up.markers[&id];
            ArcDump {
                id,
                parent: arc.other(child),
                child,
                poles: arc.poles,
                in_parent: m.in_parent,
                in_child: m.in_child,
            }
        })
        .collect();
    TreeDump {
        schema: SCHEMA.into(),
        graph: GraphDump {
            vertices: g.vertex_count(),
            edges: g.edges().iter().map(|e| (e.tail, e.head)).collect(),
        },
        root: (root.tail, root.head),
        count: up.count_configurations().to_string(),
        tree_root: up.tree.root,
        nodes,
        arcs,
    }
}

pub fn dot(d: &TreeDump) -> String {
    let mut out = String::from("digraph uptree {\n  node [shape=box];\n");
    for n in &d.nodes {
        let reals: Vec<String> = n
            .skeleton
            .iter()
            .filter_map(|e| e.edge.map(|_| format!("{}->{}", e.tail, e.head)))
            .collect();
        let _ = writeln!(
            out,
            "  n{} [label=\"{} {} {:?}\\n{}\"];",
            n.id,
            n.id,
            n.class,
            n.freedom,
            reals.join(" ")
        );
    }
    for a in &d.arcs {
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{{{},{}}} {}/{}\"];",
            a.parent, a.child, a.poles.0, a.poles.1, a.in_parent, a.in_child
        );
    }
    out.push_str("}\n");
    out
}
