//! Roles of arc poles within the pertinent graphs on both sides of each arc.

use std::collections::BTreeMap;

use crate::decomposition::{ArcId, DecompTree, NodeId, Rooted, SkelTag};
use crate::digraph::{DiGraph, EdgeId, VertexId, VertexRole};

/// Roles of both poles on the child side and on the parent side of one arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoleRoles {
    pub poles: (VertexId, VertexId),
    pub child: (VertexRole, VertexRole),
    pub parent: (VertexRole, VertexRole),
}

fn role(indeg: usize, outdeg: usize) -> VertexRole {
    VertexRole::from_degrees(indeg, outdeg).expect("poles touch both sides")
}

/// One preorder pass with running degree counters; the child side of an arc is the
/// difference between the counters at subtree exit and at subtree entry.
pub fn pole_roles(g: &DiGraph, tree: &DecompTree, r: &Rooted) -> BTreeMap<ArcId, PoleRoles> {
    let n = r.preorder.len();
    let mut exits: Vec<Vec<NodeId>> = vec![Vec::new(); n + 1];
    for (&x, &(_, end)) in &r.interval {
        if r.parent.contains_key(&x) {
            exits[end].push(x);
        }
    }
    let mut indeg = vec![0usize; g.vertex_count()];
    let mut outdeg = vec![0usize; g.vertex_count()];
    let mut entry: BTreeMap<NodeId, [(usize, usize); 2]> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (i, closing) in exits.iter().enumerate() {
        for &c in closing {
            let (arc, _) = r.parent[&c];
            let poles = tree.arcs[&arc].poles;
            let before = entry[&c];
            let pick = |k: usize, p: VertexId| {
                let (di, dout) = (indeg[p] - before[k].0, outdeg[p] - before[k].1);
                let total = (g.indegree(p), g.outdegree(p));
                (role(di, dout), role(total.0 - di, total.1 - dout))
            };
            let (cu, pu) = pick(0, poles.0);
            let (cv, pv) = pick(1, poles.1);
            out.insert(
                arc,
                PoleRoles {
                    poles,
                    child: (cu, cv),
                    parent: (pu, pv),
                },
            );
        }
        if i == n {
            break;
        }
        let x = r.preorder[i];
        if let Some(&(arc, _)) = r.parent.get(&x) {
            let (u, v) = tree.arcs[&arc].poles;
            entry.insert(x, [(indeg[u], outdeg[u]), (indeg[v], outdeg[v])]);
        }
        for e in tree.nodes[&x].real_edges() {
            let edge = g.edge(e);
            outdeg[edge.tail] += 1;
            indeg[edge.head] += 1;
        }
    }
    out
}

/// Same result by collecting each side's real edges explicitly.
pub fn pole_roles_direct(g: &DiGraph, tree: &DecompTree, r: &Rooted) -> BTreeMap<ArcId, PoleRoles> {
    let mut out = BTreeMap::new();
    for (&c, &(arc, p)) in &r.parent {
        let poles = tree.arcs[&arc].poles;
        let side = |from: NodeId, toward: NodeId| -> Vec<EdgeId> {
            tree.pertinent_graph(from, toward)
                .expect("arc exists")
                .iter()
                .filter_map(|e| match e.tag {
                    SkelTag::Real(x) => Some(x),
                    SkelTag::Virtual(_) => None,
                })
                .collect()
        };
        let roles = |edges: &[EdgeId], x: VertexId| {
            crate::digraph::vertex_role(g, x, edges).expect("poles touch both sides")
        };
        let child_edges = side(c, p);
        let parent_edges = side(p, c);
        out.insert(
            arc,
            PoleRoles {
                poles,
                child: (roles(&child_edges, poles.0), roles(&child_edges, poles.1)),
                parent: (roles(&parent_edges, poles.0), roles(&parent_edges, poles.1)),
            },
        );
    }
    out
}
