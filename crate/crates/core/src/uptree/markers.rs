//! Marker gadgets and their expansion inside skeletons.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decomposition::{ArcId, SkelRotation, SkelTag, TreeNode};
use crate::digraph::{DiGraph, EdgeId, VertexId, VertexRole};
use crate::embedding::Rotation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MarkerKind {
    Ms,
    Mt,
    Muv,
    Muvt,
}

impl fmt::Display for MarkerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MarkerKind::Ms => "Ms",
            MarkerKind::Mt => "Mt",
            MarkerKind::Muv => "Muv",
            MarkerKind::Muvt => "Muvt",
        };
        f.write_str(s)
    }
}

/// A gadget over local vertices `0 = u`, `1 = v` and `2..` internal ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gadget {
    pub internal: usize,
    pub edges: Vec<(usize, usize)>,
    /// Clockwise block replacing the marker slot at `u`, and at `v`.
    pub at_u: Vec<usize>,
    pub at_v: Vec<usize>,
    /// Rotation at each internal vertex.
    pub inner: Vec<Vec<usize>>,
}

impl MarkerKind {
    pub fn gadget(self) -> Gadget {
        match self {
            MarkerKind::Ms => Gadget {
                internal: 1,
                edges: vec![(2, 0), (2, 1)],
                at_u: vec![0],
                at_v: vec![1],
                inner: vec![vec![0, 1]],
            },
            MarkerKind::Mt => Gadget {
                internal: 1,
                edges: vec![(0, 2), (1, 2)],
                at_u: vec![0],
                at_v: vec![1],
                inner: vec![vec![0, 1]],
            },
            MarkerKind::Muv => Gadget {
                internal: 0,
                edges: vec![(0, 1)],
                at_u: vec![0],
                at_v: vec![0],
                inner: vec![],
            },
            // x = 2, w_t = 3; the direct edge runs along the left side of the slot
            MarkerKind::Muvt => Gadget {
                internal: 2,
                edges: vec![(0, 1), (0, 2), (2, 1), (0, 3), (1, 3)],
                at_u: vec![0, 1, 3],
                at_v: vec![4, 2, 0],
                inner: vec![vec![1, 2], vec![3, 4]],
            },
        }
    }
}

/// Marker pair for the two sides of a separation: the marker standing in for the
/// child side (placed in the parent skeleton) and the one standing in for the
/// parent side (placed in the child skeleton).
///
/// `comparable` says whether `u` dominates `v`; the roles are those of `v` in the
/// child side and in the parent side.
pub fn select_markers(comparable: bool, v_in_child: VertexRole, v_in_parent: VertexRole) -> (MarkerKind, MarkerKind) {
    if !comparable {
        return (MarkerKind::Mt, MarkerKind::Ms);
    }
    let in_parent = match v_in_child {
        VertexRole::Source => MarkerKind::Mt,
        VertexRole::Sink => MarkerKind::Muv,
        VertexRole::Internal => MarkerKind::Muvt,
    };
    let in_child = match v_in_parent {
        VertexRole::Source => MarkerKind::Mt,
        _ => MarkerKind::Muv,
    };
    (in_parent, in_child)
}

/// A skeleton with every marker replaced by its gadget.
#[derive(Clone, Debug)]
pub struct Expanded {
    pub graph: DiGraph,
    /// Local id of each skeleton vertex.
    pub local: BTreeMap<VertexId, usize>,
    /// Local edges standing for each skeleton tag, in block order at the tail and
    /// at the head of the skeleton edge.
    pub blocks: BTreeMap<SkelTag, (Vec<EdgeId>, Vec<EdgeId>)>,
    inner: Vec<(usize, Vec<EdgeId>)>,
    /// Gadget edges leaving each `w_s` vertex, keyed by the marker's tag.
    pub ms_darts: BTreeMap<SkelTag, [EdgeId; 2]>,
    /// Tags of `Muvt` markers; these may be drawn in either orientation.
    pub muvt_tags: Vec<SkelTag>,
    /// The `w_t` vertex of each `Mt` and `Muvt` marker.
    pub sinks: BTreeMap<SkelTag, usize>,
}

impl Expanded {
    /// `marker_of(arc)` gives the kind of the marker for `arc` inside this skeleton.
    pub fn new(node: &TreeNode, marker_of: &dyn Fn(ArcId) -> MarkerKind) -> Self {
        let mut local = BTreeMap::new();
        for e in &node.skeleton {
            for x in [e.tail, e.head] {
                let next = local.len();
                local.entry(x).or_insert(next);
            }
        }
        let mut graph = DiGraph::new(local.len());
        let mut blocks = BTreeMap::new();
        let mut inner = Vec::new();
        let mut ms_darts = BTreeMap::new();
        let mut muvt_tags = Vec::new();
        let mut sinks = BTreeMap::new();
        for e in &node.skeleton {
            let (u, v) = (local[&e.tail], local[&e.head]);
            match e.tag {
                SkelTag::Real(_) => {
                    let id = graph.add_edge(u, v).expect("no loops in skeletons");
                    blocks.insert(e.tag, (vec![id], vec![id]));
                }
                SkelTag::Virtual(arc) => {
                    let kind = marker_of(arc);
                    let gad = kind.gadget();
                    let mut ids = vec![u, v];
                    for _ in 0..gad.internal {
                        ids.push(graph.add_vertex());
                    }
                    let edge_ids: Vec<EdgeId> = gad
                        .edges
                        .iter()
                        .map(|&(a, b)| graph.add_edge(ids[a], ids[b]).expect("gadgets have no loops"))
                        .collect();
                    blocks.insert(
                        e.tag,
                        (
                            gad.at_u.iter().map(|&i| edge_ids[i]).collect(),
                            gad.at_v.iter().map(|&i| edge_ids[i]).collect(),
                        ),
                    );
                    for (k, order) in gad.inner.iter().enumerate() {
                        inner.push((ids[2 + k], order.iter().map(|&i| edge_ids[i]).collect()));
                    }
                    match kind {
                        MarkerKind::Ms => {
                            ms_darts.insert(e.tag, [edge_ids[0], edge_ids[1]]);
                        }
                        MarkerKind::Mt => {
                            sinks.insert(e.tag, ids[2]);
                        }
                        MarkerKind::Muvt => {
                            muvt_tags.push(e.tag);
                            sinks.insert(e.tag, ids[3]);
                        }
                        MarkerKind::Muv => {}
                    }
                }
            }
        }
        Expanded {
            graph,
            local,
            blocks,
            inner,
            ms_darts,
            muvt_tags,
            sinks,
        }
    }

    /// Expands a slot-level rotation of the skeleton into a rotation of the gadget graph.
    pub fn rotation(&self, node: &TreeNode, rot: &SkelRotation) -> Rotation {
        self.rotation_with(node, rot, &[])
    }

    /// As [`Expanded::rotation`], with the gadgets of the `mirrored` tags drawn
    /// with reversed blocks.
    pub fn rotation_with(&self, node: &TreeNode, rot: &SkelRotation, mirrored: &[SkelTag]) -> Rotation {
        let mut out: Rotation = vec![Vec::new(); self.graph.vertex_count()];
        for (&x, order) in rot {
            let lx = self.local[&x];
            for tag in order {
                let edge = node.edge_by_tag(*tag).expect("rotation names skeleton edges");
                let (at_tail, at_head) = &self.blocks[tag];
                let block = if edge.tail == x { at_tail } else { at_head };
                if mirrored.contains(tag) {
                    out[lx].extend(block.iter().rev());
                } else {
                    out[lx].extend(block);
                }
            }
        }
        for (w, order) in &self.inner {
            out[*w] = order.clone();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{face_walks, is_planar_embedding};

    #[test]
    fn gadget_shapes() {
        for kind in [MarkerKind::Ms, MarkerKind::Mt, MarkerKind::Muv, MarkerKind::Muvt] {
            let gad = kind.gadget();
            let mut g = DiGraph::new(2 + gad.internal);
            for &(a, b) in &gad.edges {
                g.add_edge(a, b).unwrap();
            }
            assert!(g.is_acyclic());
            // close the slot with an edge u -> v drawn on the right side
            let closing = g.add_edge(0, 1).unwrap();
            let mut rot: Rotation = vec![Vec::new(); g.vertex_count()];
            rot[0] = gad.at_u.clone();
            rot[0].push(closing);
            rot[1] = vec![closing];
            rot[1].extend(&gad.at_v);
            for (k, order) in gad.inner.iter().enumerate() {
                rot[2 + k] = order.clone();
            }
            assert!(is_planar_embedding(&g, &rot), "{kind}");
            assert!(face_walks(&g, &rot).is_ok());
        }
    }

    #[test]
    fn muvt_has_three_outgoing_edges_at_u() {
        let gad = MarkerKind::Muvt.gadget();
        assert_eq!(gad.edges.iter().filter(|e| e.0 == 0).count(), 3);
        assert_eq!(gad.at_u.iter().map(|&i| gad.edges[i].1).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn selection_table() {
        use VertexRole::*;
        assert_eq!(select_markers(false, Sink, Sink), (MarkerKind::Mt, MarkerKind::Ms));
        assert_eq!(select_markers(true, Sink, Internal), (MarkerKind::Muv, MarkerKind::Muv));
        assert_eq!(select_markers(true, Internal, Source), (MarkerKind::Muvt, MarkerKind::Mt));
        assert_eq!(select_markers(true, Source, Sink), (MarkerKind::Mt, MarkerKind::Muv));
    }
}
