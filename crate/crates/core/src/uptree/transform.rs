//! Structural steps after marker replacement: P-node splits and arc contractions.

use std::collections::{BTreeMap, BTreeSet};

use crate::decomposition::{mirror_skel, ArcId, NodeClass, NodeId, SkelTag};
use crate::digraph::DiGraph;

use super::configuration::{bundle_needs_search, is_bundle, mirrored_slots};
use super::markers::Expanded;
use super::markers::MarkerKind;
use super::{Freedom, UpTree};

impl UpTree {
    /// Splits every P-node whose parent marker is not `Ms` into a chain: the node
    /// keeps its parent and `Mt` children, the `Muvt` children move one level down,
    /// and the `Muv` children one level further. Levels with a single member are not
    /// materialized. Markers are recomputed afterwards.
    pub fn split_p_nodes(&mut self, g: &DiGraph) {
        let ps: Vec<NodeId> = self
            .tree
            .nodes
            .iter()
            .filter(|(_, n)| n.class == NodeClass::P)
            .map(|(&id, _)| id)
            .collect();
        for lambda in ps {
            let Some(pa) = self.rooted.parent_arc(lambda) else {
                continue;
            };
            if self.markers[&pa].in_child == MarkerKind::Ms {
                continue;
            }
            let poles = self.tree.arcs[&pa].poles;
            let (mut t, mut x, mut v): (Vec<SkelTag>, Vec<SkelTag>, Vec<SkelTag>) = (Vec::new(), Vec::new(), Vec::new());
            for slot in self.child_slots(lambda) {
                let SkelTag::Virtual(a) = slot else { continue };
                match self.markers[&a].in_parent {
                    MarkerKind::Mt | MarkerKind::Ms => t.push(slot),
                    MarkerKind::Muvt => x.push(slot),
                    MarkerKind::Muv => v.push(slot),
                }
            }
            let mut v_ref = v.clone();
            if v.len() >= 2 && t.len() + x.len() > 0 {
                let (_, arc) = self.tree.split_off(lambda, poles, &v.iter().copied().collect());
                v_ref = vec![SkelTag::Virtual(arc)];
            }
            let mid: BTreeSet<SkelTag> = x.iter().chain(&v_ref).copied().collect();
            if !x.is_empty() && mid.len() >= 2 && !t.is_empty() {
                self.tree.split_off(lambda, poles, &mid);
            }
        }
        self.assign_markers(g).expect("splits keep skeletons single-source");
        // bundles whose child orders are constrained are searched exhaustively
        let ids: Vec<NodeId> = self.tree.nodes.keys().copied().collect();
        for n in ids {
            let node = &self.tree.nodes[&n];
            if node.class != NodeClass::P || !is_bundle(&node.skeleton) {
                continue;
            }
            let kinds: Vec<MarkerKind> = self
                .rooted
                .children(n)
                .iter()
                .map(|&(a, _)| self.markers[&a].in_parent)
                .collect();
            if bundle_needs_search(&kinds) {
                self.tree.node_mut(n).class = NodeClass::R;
            }
        }
    }

    /// Merges every fixed R-node into its parent when that parent is an S-node or a
    /// fixed R-node, top-down; the merged node is a fixed R-node. Fixed nodes below
    /// P-, Q- or reversible parents keep their arc.
    pub fn contract_fixed_arcs(&mut self) {
        let order = self.rooted.preorder.clone();
        let mut alias: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for n in order {
            let Some(&(arc, p0)) = self.rooted.parent.get(&n) else {
                continue;
            };
            let p = *alias.get(&p0).unwrap_or(&p0);
            let fixed_r = |up: &UpTree, x: NodeId| up.class(x) == NodeClass::R && up.freedom[&x] == Freedom::Fixed;
            if !fixed_r(self, n) || !(self.class(p) == NodeClass::S || fixed_r(self, p)) {
                continue;
            }
            if self.slot_mirrored(p, arc) {
                let node = self.tree.node_mut(n);
                node.rotation = node.rotation.as_ref().map(mirror_skel);
            }
            self.tree.contract_into(arc, p).expect("arc exists");
            self.markers.remove(&arc);
            self.freedom.remove(&n);
            self.freedom.insert(p, Freedom::Fixed);
            self.tree.node_mut(p).class = NodeClass::R;
            alias.insert(n, p);
        }
        self.refresh();
    }

    /// Whether the child across `arc` hangs mirrored below the stored rotation of `n`.
    pub(crate) fn slot_mirrored(&self, n: NodeId, arc: ArcId) -> bool {
        let node = &self.tree.nodes[&n];
        let exp = Expanded::new(node, &|a| self.marker_in(n, a));
        mirrored_slots(node, &exp, self.stored_rotation(n), self.anchor(n))
            .expect("stored rotations are valid")
            .contains(&SkelTag::Virtual(arc))
    }
}
