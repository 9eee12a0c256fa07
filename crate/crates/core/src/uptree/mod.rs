//! The UP-tree: a decomposition tree with marker gadgets whose configurations are
//! exactly the upward planar embeddings with a fixed leftmost edge at the source.

pub mod configuration;
mod enumerate;
pub mod markers;
pub mod roles;
mod transform;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::decomposition::{
    compose_rotation, encode, mirror_skel, spqr_tree, spqr_tree_shuffled, ArcId, DecompError, DecompTree, NodeClass, NodeId, Rooted, SkelRotation,
    SkelTag,
};
use crate::digraph::{validate_input, DiGraph, EdgeId, InputViolation, Reachability};
use crate::embedding::{Dart, Embedding};

pub use configuration::{bundle_order_is_upward, Anchor};
pub use enumerate::Embeddings;
use configuration::{configure_node, NodeChoice};
use markers::{select_markers, Expanded, MarkerKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Freedom {
    Fixed,
    Reversible,
    Permutable,
}

/// Markers on both ends of an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcMarkers {
    /// Stands for the child side inside the parent skeleton.
    pub in_parent: MarkerKind,
    /// Stands for the parent side inside the child skeleton.
    pub in_child: MarkerKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UpTreeError {
    #[error("invalid input: {0:?}")]
    InvalidInput(Vec<InputViolation>),
    #[error("root edge {0} does not leave the source")]
    RootNotAtSource(EdgeId),
    #[error("skeleton of node {0} is not single-source after marker replacement")]
    InconsistentRoles(NodeId),
    #[error(transparent)]
    Decomposition(#[from] DecompError),
}

#[derive(Clone, Debug)]
pub struct UpTree {
    pub root_edge: EdgeId,
    pub tree: DecompTree,
    pub markers: BTreeMap<ArcId, ArcMarkers>,
    /// Present once configurations have been computed.
    pub freedom: BTreeMap<NodeId, Freedom>,
    rooted: Rooted,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Feasible(Box<UpTree>),
    /// No upward planar embedding has the root edge leftmost; `node` has no valid
    /// skeleton configuration.
    Infeasible { node: NodeId },
}

impl UpTreeError {
    fn from_decomposition(e: DecompError) -> Self {
        match e {
            DecompError::RootNotAtSource(e) => UpTreeError::RootNotAtSource(e),
            DecompError::InvalidInput(v) => UpTreeError::InvalidInput(v),
            other => UpTreeError::Decomposition(other),
        }
    }
}

impl Outcome {
    pub fn feasible(self) -> Option<UpTree> {
        match self {
            Outcome::Feasible(t) => Some(*t),
            Outcome::Infeasible { .. } => None,
        }
    }
}

/// The full pipeline: SPQR tree, markers, P-node splits, configurations, contractions.
pub fn build_up_tree(g: &DiGraph, root_edge: EdgeId) -> Result<Outcome, UpTreeError> {
    finish(g, UpTree::marked(g, root_edge)?)
}

/// [`build_up_tree`] with the SPQR decompositions performed in a seeded random order.
pub fn build_up_tree_shuffled(g: &DiGraph, root_edge: EdgeId, seed: u64) -> Result<Outcome, UpTreeError> {
    let tree = spqr_tree_shuffled(g, root_edge, seed).map_err(UpTreeError::from_decomposition)?;
    finish(g, UpTree::with_tree(g, root_edge, tree)?)
}

fn finish(g: &DiGraph, mut up: UpTree) -> Result<Outcome, UpTreeError> {
    up.split_p_nodes(g);
    if let Err(node) = up.compute_configuration() {
        return Ok(Outcome::Infeasible { node });
    }
    up.contract_fixed_arcs();
    Ok(Outcome::Feasible(Box::new(up)))
}

/// Whether `g` has an upward planar embedding at all.
pub fn is_upward_planar(g: &DiGraph) -> Result<bool, UpTreeError> {
    let s = g
        .single_source()
        .ok_or_else(|| UpTreeError::InvalidInput(validate_input(g)))?;
    for e in g.out_edges(s) {
        if matches!(build_up_tree(g, e)?, Outcome::Feasible(_)) {
            return Ok(true);
        }
    }
    Ok(false)
}

impl UpTree {
    /// SPQR tree rooted at the root edge, with every virtual edge oriented and
    /// replaced by its marker.
    pub fn marked(g: &DiGraph, root_edge: EdgeId) -> Result<UpTree, UpTreeError> {
        let tree = spqr_tree(g, root_edge).map_err(UpTreeError::from_decomposition)?;
        UpTree::with_tree(g, root_edge, tree)
    }

    fn with_tree(g: &DiGraph, root_edge: EdgeId, tree: DecompTree) -> Result<UpTree, UpTreeError> {
        let mut up = UpTree {
            root_edge,
            rooted: tree.rooted(),
            tree,
            markers: BTreeMap::new(),
            freedom: BTreeMap::new(),
        };
        up.assign_markers(g)?;
        Ok(up)
    }

    pub fn rooted(&self) -> &Rooted {
        &self.rooted
    }

    pub(crate) fn refresh(&mut self) {
        self.rooted = self.tree.rooted();
    }

    /// Marker for `arc` inside the skeleton of `node`.
    pub fn marker_in(&self, node: NodeId, arc: ArcId) -> MarkerKind {
        let m = self.markers[&arc];
        if self.rooted.parent_arc(node) == Some(arc) {
            m.in_child
        } else {
            m.in_parent
        }
    }

    /// Orients every arc from its dominating pole (smaller id when incomparable) and
    /// selects both markers from dominance and pole roles.
    pub(crate) fn assign_markers(&mut self, g: &DiGraph) -> Result<(), UpTreeError> {
        self.refresh();
        let reach = Reachability::new(g).expect("validated acyclic");
        for arc in self.tree.arcs.values_mut() {
            let (a, b) = arc.poles;
            let flip = reach.dominates(b, a) || (!reach.dominates(a, b) && b < a);
            if flip {
                arc.poles = (b, a);
            }
        }
        let arcs = self.tree.arcs.clone();
        for node in self.tree.nodes.values_mut() {
            for e in node.skeleton.iter_mut() {
                if let SkelTag::Virtual(a) = e.tag {
                    (e.tail, e.head) = arcs[&a].poles;
                }
            }
        }
        let roles = roles::pole_roles(g, &self.tree, &self.rooted);
        self.markers.clear();
        for (&arc, t) in &self.tree.arcs {
            let (u, v) = t.poles;
            let r = roles[&arc];
            let (in_parent, in_child) = select_markers(reach.dominates(u, v), r.child.1, r.parent.1);
            self.markers.insert(arc, ArcMarkers { in_parent, in_child });
        }
        for (&n, node) in &self.tree.nodes {
            let exp = Expanded::new(node, &|a| self.marker_in(n, a));
            if exp.graph.single_source().is_none() {
                return Err(UpTreeError::InconsistentRoles(n));
            }
        }
        Ok(())
    }

    /// The slot that has to be leftmost in the skeleton of `n`.
    pub fn anchor(&self, n: NodeId) -> Anchor {
        match self.rooted.parent_arc(n) {
            Some(a) => Anchor::Parent(SkelTag::Virtual(a), self.markers[&a].in_child),
            None => Anchor::RootEdge(SkelTag::Real(self.root_edge)),
        }
    }

    /// Child slots of `n` in arc id order.
    pub fn child_slots(&self, n: NodeId) -> Vec<SkelTag> {
        let mut arcs: Vec<ArcId> = self.rooted.children(n).iter().map(|&(a, _)| a).collect();
        arcs.sort_unstable();
        arcs.into_iter().map(SkelTag::Virtual).collect()
    }

    /// Children of a permutable bundle in arc id order, without a pinned child.
    pub fn permuted_slots(&self, n: NodeId) -> Vec<SkelTag> {
        let children = self.child_slots(n);
        let pin = self.pinned_slot(n);
        children.into_iter().filter(|&c| Some(c) != pin).collect()
    }

    pub fn pinned_slot(&self, n: NodeId) -> Option<SkelTag> {
        configuration::pinned_child(self.anchor(n), &self.child_slots(n), &|a| self.marker_in(n, a))
    }

    /// Stores a valid rotation and a freedom flag for every skeleton, or names a node
    /// that has none.
    pub fn compute_configuration(&mut self) -> Result<(), NodeId> {
        let ids: Vec<NodeId> = self.tree.nodes.keys().copied().collect();
        for n in ids {
            let node = &self.tree.nodes[&n];
            let choice = configure_node(node, self.anchor(n), &|a| self.marker_in(n, a), &self.child_slots(n));
            match choice {
                NodeChoice::Valid(freedom, rot) => {
                    self.freedom.insert(n, freedom);
                    self.tree.node_mut(n).rotation = Some(rot);
                }
                NodeChoice::Infeasible => return Err(n),
            }
        }
        Ok(())
    }

    /// Number of represented embeddings.
    pub fn count_configurations(&self) -> BigUint {
        let mut total = BigUint::from(1u32);
        for (&n, &f) in &self.freedom {
            match f {
                Freedom::Fixed => {}
                Freedom::Reversible => total *= 2u32,
                Freedom::Permutable => {
                    let k = self.permuted_slots(n).len() as u32;
                    for i in 2..=k {
                        total *= i;
                    }
                }
            }
        }
        total
    }

    pub fn stored_rotation(&self, n: NodeId) -> &SkelRotation {
        self.tree.nodes[&n].rotation.as_ref().expect("configuration computed")
    }

    /// Composes the stored configuration, with some skeleton rotations replaced.
    pub fn compose_with(
        &self,
        g: &DiGraph,
        overrides: &BTreeMap<NodeId, SkelRotation>,
    ) -> Result<Embedding, DecompError> {
        self.compose_absolute(g, &self.absolute_rotations(overrides))
    }

    /// Composes skeleton rotations given in absolute orientation, with the outer face
    /// to the left of the root edge.
    pub fn compose_absolute(
        &self,
        g: &DiGraph,
        absolute: &BTreeMap<NodeId, SkelRotation>,
    ) -> Result<Embedding, DecompError> {
        let rot = compose_rotation(g, &self.tree, &self.rooted, &|n| absolute.get(&n))?;
        let s = g.edge(self.root_edge).tail;
        Ok(Embedding::new(g, rot, Dart::leaving(g, self.root_edge, s))?)
    }

    /// Skeleton rotations are stored with the parent marker leftmost. A child hangs
    /// mirrored relative to its parent when its gadget's sink opens to the left.
    pub fn absolute_rotations(&self, overrides: &BTreeMap<NodeId, SkelRotation>) -> BTreeMap<NodeId, SkelRotation> {
        let config = |n: NodeId| overrides.get(&n).unwrap_or_else(|| self.stored_rotation(n));
        let mut flipped: BTreeMap<NodeId, bool> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for &n in &self.rooted.preorder {
            let flip = flipped.get(&n).copied().unwrap_or(false);
            let rot = config(n);
            let mirrored = self.mirrored_children(n, rot);
            for &(a, c) in self.rooted.children(n) {
                flipped.insert(c, flip ^ mirrored.contains(&SkelTag::Virtual(a)));
            }
            out.insert(n, if flip { mirror_skel(rot) } else { rot.clone() });
        }
        out
    }

    /// Child slots of `n` that hang mirrored when `n` is drawn with rotation `rot`
    /// in its own frame.
    pub(crate) fn mirrored_children(&self, n: NodeId, rot: &SkelRotation) -> Vec<SkelTag> {
        if self.rooted.children(n).is_empty() {
            return Vec::new();
        }
        let node = &self.tree.nodes[&n];
        let exp = Expanded::new(node, &|a| self.marker_in(n, a));
        configuration::mirrored_slots(node, &exp, rot, self.anchor(n)).expect("configurations are valid")
    }

    /// Rotation of a permutable bundle with the given order of its permuted slots.
    pub fn bundle_order_rotation(&self, n: NodeId, permuted: &[SkelTag]) -> SkelRotation {
        let pa = self.rooted.parent_arc(n).expect("bundles are never the root");
        let mut order = vec![SkelTag::Virtual(pa)];
        order.extend(self.pinned_slot(n));
        order.extend_from_slice(permuted);
        configuration::bundle_rotation(self.tree.arcs[&pa].poles, &order)
    }

    /// The embedding of the stored configuration.
    pub fn embedding(&self, g: &DiGraph) -> Embedding {
        self.compose_with(g, &BTreeMap::new()).expect("stored configuration composes")
    }

    pub fn enumerate_embeddings<'a>(&'a self, g: &'a DiGraph) -> Embeddings<'a> {
        Embeddings::new(self, g)
    }

    /// Classes, freedoms, markers, poles and real edges, recursively with sorted children.
    pub fn canonical_encoding(&self) -> String {
        encode(&self.tree, &self.rooted, self.tree.root, &|n, pa| {
            let f = self.freedom.get(&n).map_or(String::new(), |f| format!("{f:?}"));
            let m = pa.map_or(String::new(), |a| {
                let m = self.markers[&a];
                format!("{}/{}", m.in_parent, m.in_child)
            });
            format!("{f}{m}")
        })
    }

    pub fn class(&self, n: NodeId) -> NodeClass {
        self.tree.nodes[&n].class
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{enumerate_upward_planar, DEFAULT_BUDGET};

    fn theta3() -> DiGraph {
        DiGraph::from_edges(5, &[(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)]).unwrap()
    }

    fn k4st() -> DiGraph {
        DiGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn diamond() -> DiGraph {
        DiGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn check_against_oracle(g: &DiGraph) {
        let census = enumerate_upward_planar(g, DEFAULT_BUDGET).unwrap();
        for (&e, bucket) in &census.buckets {
            let got: Vec<Embedding> = match build_up_tree(g, e).unwrap() {
                Outcome::Feasible(up) => {
                    let mut v: Vec<Embedding> = up.enumerate_embeddings(g).map(|x| x.canonical()).collect();
                    v.sort();
                    assert_eq!(BigUint::from(v.len()), up.count_configurations());
                    v
                }
                Outcome::Infeasible { .. } => Vec::new(),
            };
            assert_eq!(&got, bucket, "root edge {e}");
        }
    }

    #[test]
    fn small_graphs_match_oracle() {
        check_against_oracle(&diamond());
        check_against_oracle(&theta3());
        check_against_oracle(&k4st());
    }

    #[test]
    fn theta_counts_two() {
        let up = build_up_tree(&theta3(), 0).unwrap().feasible().unwrap();
        assert_eq!(up.count_configurations(), BigUint::from(2u32));
        assert!(up.freedom.values().any(|&f| f == Freedom::Permutable));
    }

    #[test]
    fn theta_p_children_are_muv() {
        let up = UpTree::marked(&theta3(), 0).unwrap();
        let p = *up.tree.nodes.iter().find(|(_, n)| n.class == NodeClass::P).unwrap().0;
        for a in up.tree.node(p).arcs() {
            assert_eq!(up.marker_in(p, a), MarkerKind::Muv);
        }
    }

    #[test]
    fn pole_roles_agree_with_direct_inspection() {
        for g in [theta3(), k4st(), diamond()] {
            let up = UpTree::marked(&g, 0).unwrap();
            assert_eq!(
                roles::pole_roles(&g, &up.tree, up.rooted()),
                roles::pole_roles_direct(&g, &up.tree, up.rooted())
            );
        }
    }
}
