//! Partial upward embedding extension.

use std::collections::{BTreeMap, BTreeSet};

use crate::decomposition::{mirror_skel, NodeId, Rooted, SkelRotation, SkelTag};
use crate::digraph::{validate_input, DiGraph, EdgeId, VertexId};
use crate::embedding::{cyclically_ordered, face_walks, is_upward, Embedding};
use crate::uptree::configuration::permutations;
use crate::uptree::{build_up_tree, Freedom, Outcome, UpTree, UpTreeError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("edge {0} is not an edge of the graph")]
    UnknownEdge(EdgeId),
    #[error("rotation at vertex {0} is not a permutation of its partial edges")]
    BadRotation(VertexId),
    #[error("partial rotation system is not planar")]
    NotPlanar,
}

/// A subgraph `H` of `G` together with a clockwise order of `H`-edges at each vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialInstance {
    pub h_edges: BTreeSet<EdgeId>,
    pub h_rotation: BTreeMap<VertexId, Vec<EdgeId>>,
}

impl PartialInstance {
    pub fn empty() -> Self {
        PartialInstance {
            h_edges: BTreeSet::new(),
            h_rotation: BTreeMap::new(),
        }
    }

    /// Validates edge membership, per-vertex permutations and planarity of each
    /// connected component of `H`.
    pub fn new(
        g: &DiGraph,
        h_edges: BTreeSet<EdgeId>,
        h_rotation: BTreeMap<VertexId, Vec<EdgeId>>,
    ) -> Result<Self, InstanceError> {
        if let Some(&e) = h_edges.iter().find(|&&e| e >= g.edge_count()) {
            return Err(InstanceError::UnknownEdge(e));
        }
        let mut at: BTreeMap<VertexId, BTreeSet<EdgeId>> = BTreeMap::new();
        for &e in &h_edges {
            let edge = g.edge(e);
            at.entry(edge.tail).or_default().insert(e);
            at.entry(edge.head).or_default().insert(e);
        }
        for (&v, order) in &h_rotation {
            let set: BTreeSet<EdgeId> = order.iter().copied().collect();
            if set.len() != order.len() || at.get(&v).map_or(!set.is_empty(), |s| *s != set) {
                return Err(InstanceError::BadRotation(v));
            }
        }
        if let Some((&v, _)) = at.iter().find(|(v, _)| !h_rotation.contains_key(v)) {
            return Err(InstanceError::BadRotation(v));
        }
        let inst = PartialInstance { h_edges, h_rotation };
        if !inst.is_planar(g) {
            return Err(InstanceError::NotPlanar);
        }
        Ok(inst)
    }

    /// The restriction of an embedding of `g` to the given edges.
    pub fn from_embedding(g: &DiGraph, emb: &Embedding, h_edges: BTreeSet<EdgeId>) -> Self {
        let mut h_rotation = BTreeMap::new();
        for v in g.vertices() {
            let order: Vec<EdgeId> = emb.rotation[v].iter().copied().filter(|e| h_edges.contains(e)).collect();
            if !order.is_empty() {
                h_rotation.insert(v, order);
            }
        }
        PartialInstance { h_edges, h_rotation }
    }

    fn is_planar(&self, g: &DiGraph) -> bool {
        if self.h_edges.is_empty() {
            return true;
        }
        // relabel H onto its own edge ids and count faces per component
        let edges: Vec<EdgeId> = self.h_edges.iter().copied().collect();
        let h = g.edge_subgraph(&edges);
        let local = |e: EdgeId| edges.binary_search(&e).unwrap();
        let rot: Vec<Vec<EdgeId>> = g
            .vertices()
            .map(|v| {
                self.h_rotation
                    .get(&v)
                    .map(|o| o.iter().map(|&e| local(e)).collect())
                    .unwrap_or_default()
            })
            .collect();
        let Ok(faces) = face_walks(&h, &rot) else {
            return false;
        };
        let touched = h.vertices().filter(|&v| h.degree(v) > 0).count();
        let mut uf = crate::union_find::UnionFind::new(h.vertex_count());
        let mut components = touched;
        for e in h.edges() {
            if uf.union(e.tail, e.head) {
                components -= 1;
            }
        }
        touched + faces.len() == h.edge_count() + 2 * components
    }
}

/// Whether every vertex sees its `H`-edges in the prescribed cyclic order.
pub fn check_extends(g: &DiGraph, emb: &Embedding, inst: &PartialInstance) -> bool {
    inst.h_rotation.iter().all(|(&v, order)| {
        if v >= g.vertex_count() {
            return false;
        }
        let seen: Vec<EdgeId> = emb.rotation[v]
            .iter()
            .copied()
            .filter(|e| inst.h_edges.contains(e))
            .collect();
        same_cyclic(&seen, order)
    })
}

fn same_cyclic(a: &[EdgeId], b: &[EdgeId]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    match a.iter().position(|&x| x == b[0]) {
        Some(k) => (0..a.len()).all(|i| a[(k + i) % a.len()] == b[i]),
        None => false,
    }
}

/// Triple form of the cyclic test, used where only three edges matter.
pub fn triple_agrees(order: &[EdgeId], a: EdgeId, b: EdgeId, c: EdgeId) -> bool {
    cyclically_ordered(order, &a, &b, &c)
}

/// The tree median of three nodes: the unique node whose paths to all three are
/// pairwise disjoint apart from itself.
pub fn median_node(r: &Rooted, a: NodeId, b: NodeId, c: NodeId) -> NodeId {
    let (ab, ac, bc) = (r.lca(a, b), r.lca(a, c), r.lca(b, c));
    if ab == ac {
        bc
    } else if ab == bc {
        ac
    } else {
        ab
    }
}

/// How a constraint is discharged, by the freedom of its node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// The node offers no choice; the order is checked in the inherited frame.
    FixedOrderCheck,
    /// Selects one of the two orientations of a reversible node.
    OrientationPick,
    /// Restricts the cyclic order of three slots of a permutable bundle.
    ChildTriple,
}

/// One triple of `H`-edges at `vertex`, projected onto the skeleton slots of the
/// node where their paths in the tree meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeConstraint {
    pub node: NodeId,
    pub kind: ConstraintKind,
    pub vertex: VertexId,
    /// Slots in the clockwise order prescribed by `H`.
    pub slots: [SkelTag; 3],
}

impl NodeConstraint {
    /// Whether an absolute skeleton rotation satisfies the constraint.
    pub fn holds(&self, rot: &SkelRotation) -> bool {
        let [a, b, c] = self.slots;
        cyclically_ordered(&rot[&self.vertex], &a, &b, &c)
    }
}

/// Projects every triple of `H`-edges around a vertex onto its median node.
pub fn collect_constraints(up: &UpTree, inst: &PartialInstance) -> Vec<NodeConstraint> {
    let homes = up.tree.edge_homes();
    let r = up.rooted();
    let slot = |n: NodeId, e: EdgeId| {
        let home = homes[&e];
        if home == n {
            SkelTag::Real(e)
        } else if home != n && r.in_subtree(n, home) {
            SkelTag::Virtual(r.child_towards(n, home).0)
        } else {
            SkelTag::Virtual(r.parent_arc(n).expect("non-root"))
        }
    };
    let mut out = Vec::new();
    for (&v, order) in &inst.h_rotation {
        let k = order.len();
        for i in 0..k {
            for j in i + 1..k {
                for l in j + 1..k {
                    let (a, b, c) = (order[i], order[j], order[l]);
                    let node = median_node(r, homes[&a], homes[&b], homes[&c]);
                    let kind = match up.freedom[&node] {
                        Freedom::Fixed => ConstraintKind::FixedOrderCheck,
                        Freedom::Reversible => ConstraintKind::OrientationPick,
                        Freedom::Permutable => ConstraintKind::ChildTriple,
                    };
                    out.push(NodeConstraint {
                        node,
                        kind,
                        vertex: v,
                        slots: [slot(node, a), slot(node, b), slot(node, c)],
                    });
                }
            }
        }
    }
    out
}

/// Bundles with at most this many permuted children are searched exhaustively.
const FULL_SEARCH_CHILDREN: usize = 6;

/// Feasibility of every subtree under both frames, bottom-up, then realization of a
/// satisfying configuration top-down.
struct Solver<'a> {
    up: &'a UpTree,
    by_node: BTreeMap<NodeId, Vec<NodeConstraint>>,
    /// `ok[n][flip]`: some choice in the subtree of `n` satisfies its constraints.
    ok: BTreeMap<NodeId, [bool; 2]>,
}

impl<'a> Solver<'a> {
    fn new(up: &'a UpTree, constraints: Vec<NodeConstraint>) -> Self {
        let mut by_node: BTreeMap<NodeId, Vec<NodeConstraint>> = BTreeMap::new();
        for c in constraints {
            by_node.entry(c.node).or_default().push(c);
        }
        let mut solver = Solver {
            up,
            by_node,
            ok: BTreeMap::new(),
        };
        for &n in up.rooted().preorder.iter().rev() {
            let ok = [false, true].map(|flip| solver.pick(n, flip).is_some());
            solver.ok.insert(n, ok);
        }
        solver
    }

    /// A rotation of `n` in its own frame that satisfies the constraints at `n` and
    /// leaves every child subtree satisfiable.
    fn pick(&self, n: NodeId, flip: bool) -> Option<SkelRotation> {
        let stored = self.up.stored_rotation(n);
        match self.up.freedom[&n] {
            Freedom::Fixed => self.admits(n, stored, flip).then(|| stored.clone()),
            Freedom::Reversible => [stored.clone(), mirror_skel(stored)]
                .into_iter()
                .find(|rot| self.admits(n, rot, flip)),
            Freedom::Permutable => self.pick_order(n, flip),
        }
    }

    fn admits(&self, n: NodeId, rot: &SkelRotation, flip: bool) -> bool {
        let abs = if flip { mirror_skel(rot) } else { rot.clone() };
        let local = self.by_node.get(&n).is_none_or(|cs| cs.iter().all(|c| c.holds(&abs)));
        local && self.children_ok(n, rot, flip)
    }

    fn children_ok(&self, n: NodeId, rot: &SkelRotation, flip: bool) -> bool {
        let mirrored = self.up.mirrored_children(n, rot);
        self.up.rooted().children(n).iter().all(|&(a, c)| {
            let f = flip ^ mirrored.contains(&SkelTag::Virtual(a));
            self.ok[&c][f as usize]
        })
    }

    /// Small bundles try every order. Larger ones order only the children that are
    /// named by a constraint or sensitive to their frame, and append the rest.
    fn pick_order(&self, n: NodeId, flip: bool) -> Option<SkelRotation> {
        let slots = self.up.permuted_slots(n);
        if slots.len() <= FULL_SEARCH_CHILDREN {
            return permutations(&slots)
                .into_iter()
                .map(|order| self.up.bundle_order_rotation(n, &order))
                .find(|rot| self.admits(n, rot, flip));
        }
        let cs = self.by_node.get(&n).map_or(&[][..], Vec::as_slice);
        let child_of = |t: &SkelTag| match t {
            SkelTag::Virtual(a) => self.up.tree.arcs[a].other(n),
            SkelTag::Real(_) => unreachable!("bundle children are virtual"),
        };
        let (bound, free): (Vec<SkelTag>, Vec<SkelTag>) = slots.iter().partition(|t| {
            let ok = self.ok[&child_of(t)];
            ok[0] != ok[1] || cs.iter().any(|c| c.slots.contains(t))
        });
        let mut found = None;
        let mut order = Vec::new();
        self.place(n, flip, &bound, &free, &mut order, &mut vec![false; bound.len()], &mut found);
        found
    }

    #[allow(clippy::too_many_arguments)]
    fn place(
        &self,
        n: NodeId,
        flip: bool,
        bound: &[SkelTag],
        free: &[SkelTag],
        order: &mut Vec<SkelTag>,
        used: &mut Vec<bool>,
        found: &mut Option<SkelRotation>,
    ) {
        if found.is_some() {
            return;
        }
        if order.len() == bound.len() {
            let full: Vec<SkelTag> = order.iter().chain(free).copied().collect();
            let rot = self.up.bundle_order_rotation(n, &full);
            if self.admits(n, &rot, flip) {
                *found = Some(rot);
            }
            return;
        }
        for i in 0..bound.len() {
            if used[i] {
                continue;
            }
            order.push(bound[i]);
            if self.prefix_consistent(n, flip, order) {
                used[i] = true;
                self.place(n, flip, bound, free, order, used, found);
                used[i] = false;
            }
            order.pop();
        }
    }

    /// Constraints among already placed slots hold in the partial order.
    fn prefix_consistent(&self, n: NodeId, flip: bool, order: &[SkelTag]) -> bool {
        let Some(cs) = self.by_node.get(&n) else {
            return true;
        };
        let rot = self.up.bundle_order_rotation(n, order);
        let abs = if flip { mirror_skel(&rot) } else { rot };
        cs.iter()
            .filter(|c| c.slots.iter().all(|t| !matches!(t, SkelTag::Virtual(_)) || abs[&c.vertex].contains(t)))
            .all(|c| c.holds(&abs))
    }

    /// Chooses rotations top-down from the root's own frame.
    fn realize(&self) -> Option<BTreeMap<NodeId, SkelRotation>> {
        let r = self.up.rooted();
        let mut flips: BTreeMap<NodeId, bool> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for &n in &r.preorder {
            let flip = flips.get(&n).copied().unwrap_or(false);
            let rot = self.pick(n, flip)?;
            let mirrored = self.up.mirrored_children(n, &rot);
            for &(a, c) in r.children(n) {
                flips.insert(c, flip ^ mirrored.contains(&SkelTag::Virtual(a)));
            }
            out.insert(n, rot);
        }
        Some(out)
    }
}

/// An upward planar embedding of `g` extending the partial instance, trying every
/// leftmost edge at the source in id order.
pub fn solve_extension(g: &DiGraph, inst: &PartialInstance) -> Result<Option<Embedding>, UpTreeError> {
    let s = g
        .single_source()
        .ok_or_else(|| UpTreeError::InvalidInput(validate_input(g)))?;
    for e in g.out_edges(s) {
        let Outcome::Feasible(up) = build_up_tree(g, e)? else {
            continue;
        };
        let solver = Solver::new(&up, collect_constraints(&up, inst));
        let Some(choice) = solver.realize() else {
            continue;
        };
        let emb = up.compose_with(g, &choice)?;
        debug_assert!(check_extends(g, &emb, inst) && is_upward(g, &emb).unwrap_or(false));
        return Ok(Some(emb));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Dart;

    fn theta3() -> DiGraph {
        DiGraph::from_edges(5, &[(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)]).unwrap()
    }

    fn theta_emb(order_at_s: Vec<EdgeId>) -> Embedding {
        let g = theta3();
        let mut at_t: Vec<EdgeId> = order_at_s.iter().map(|e| e + 1).collect();
        at_t.reverse();
        let rot = vec![order_at_s, vec![0, 1], vec![2, 3], vec![4, 5], at_t];
        Embedding::new(&g, rot, Dart::forward(0)).unwrap()
    }

    #[test]
    fn empty_instance_always_extends() {
        assert!(check_extends(&theta3(), &theta_emb(vec![0, 2, 4]), &PartialInstance::empty()));
    }

    #[test]
    fn full_instance_extends_itself() {
        let g = theta3();
        let emb = theta_emb(vec![0, 2, 4]);
        let inst = PartialInstance::from_embedding(&g, &emb, (0..6).collect());
        assert!(check_extends(&g, &emb, &inst));
    }

    #[test]
    fn wrong_order_at_source_rejected() {
        let g = theta3();
        let inst = PartialInstance::new(
            &g,
            [0, 2, 4].into_iter().collect(),
            [(0, vec![0, 2, 4]), (1, vec![0]), (2, vec![2]), (3, vec![4])].into_iter().collect(),
        )
        .unwrap();
        assert!(!check_extends(&g, &theta_emb(vec![0, 4, 2]), &inst));
        assert!(check_extends(&g, &theta_emb(vec![2, 4, 0]), &inst));
    }

    #[test]
    fn validation_catches_bad_rotations() {
        let g = theta3();
        let bad = PartialInstance::new(&g, [0].into_iter().collect(), [(0, vec![0])].into_iter().collect());
        assert_eq!(bad.unwrap_err(), InstanceError::BadRotation(1));
        let bad = PartialInstance::new(&g, [9].into_iter().collect(), BTreeMap::new());
        assert_eq!(bad.unwrap_err(), InstanceError::UnknownEdge(9));
    }
}
