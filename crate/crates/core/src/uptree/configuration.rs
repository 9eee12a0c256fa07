//! Upward configurations of single skeletons.

use std::collections::BTreeMap;

use crate::decomposition::{mirror_skel, ArcId, LocalSkeleton, NodeClass, SkelEdge, SkelRotation, SkelTag, TreeNode};
use crate::embedding::{candidates_with_faces, face_walks, large_angle_faces, Dart, FaceId, Faces, Rotation};
use crate::planarity::planar_rotation;

use super::markers::{Expanded, MarkerKind};
use super::Freedom;

/// What must be leftmost at the source of a skeleton.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    /// The root skeleton: this real edge leaves the graph's source.
    RootEdge(SkelTag),
    /// Any other skeleton: the marker standing in for the parent side.
    Parent(SkelTag, MarkerKind),
}

/// Whether a slot-level rotation, with every marker expanded, is upward planar with
/// the anchor leftmost at the skeleton's source.
/// `Muvt` gadgets may be drawn in either orientation.
pub fn skeleton_valid(node: &TreeNode, exp: &Expanded, rot: &SkelRotation, anchor: Anchor) -> bool {
    upward_layout(node, exp, rot, anchor).is_some()
}

/// A valid drawing of an expanded skeleton: the gadget rotation and the outer face.
struct Layout {
    rotation: Rotation,
    faces: Faces,
    outer: FaceId,
}

/// The first combination of `Muvt` orientations under which the rotation is valid.
fn upward_layout(node: &TreeNode, exp: &Expanded, rot: &SkelRotation, anchor: Anchor) -> Option<Layout> {
    let k = exp.muvt_tags.len();
    (0..1u32 << k).find_map(|mask| {
        let mirrored: Vec<SkelTag> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| exp.muvt_tags[i]).collect();
        layout_with(node, exp, exp.rotation_with(node, rot, &mirrored), anchor)
    })
}

fn layout_with(node: &TreeNode, exp: &Expanded, rotation: Rotation, anchor: Anchor) -> Option<Layout> {
    let faces = face_walks(&exp.graph, &rotation).ok()?;
    let cands = candidates_with_faces(&exp.graph, &rotation, &faces).ok()?;
    if cands.is_empty() {
        return None;
    }
    let source = exp.graph.single_source()?;
    let darts: Vec<Dart> = match anchor {
        // w_s -> v is leftmost, so the parent side opens towards v
        Anchor::Parent(tag, MarkerKind::Ms) => vec![Dart::forward(exp.ms_darts[&tag][1])],
        Anchor::RootEdge(tag) | Anchor::Parent(tag, _) => {
            let edge = node.edge_by_tag(tag).expect("anchor is a skeleton edge");
            let (at_tail, at_head) = &exp.blocks[&tag];
            let block = if exp.local[&edge.tail] == source {
                at_tail
            } else if exp.local[&edge.head] == source {
                at_head
            } else {
                return None;
            };
            vec![Dart::leaving(&exp.graph, block[0], source)]
        }
    };
    let outer = darts.iter().map(|&d| faces.face_of(d)).find(|f| cands.contains(f))?;
    Some(Layout { rotation, faces, outer })
}

/// Child slots whose subtrees hang mirrored relative to this skeleton. A child is
/// mirrored when the sink `w_t` of its gadget gets its large angle on the left of
/// the slot, seen from the first pole.
pub fn mirrored_slots(node: &TreeNode, exp: &Expanded, rot: &SkelRotation, anchor: Anchor) -> Option<Vec<SkelTag>> {
    let lay = upward_layout(node, exp, rot, anchor)?;
    let large = large_angle_faces(&exp.graph, &lay.rotation, &lay.faces, lay.outer);
    let mut out = Vec::new();
    for (&tag, &wt) in &exp.sinks {
        let edge = node.edge_by_tag(tag).expect("gadget tags are skeleton edges");
        let u = exp.local[&edge.tail];
        let block = &exp.blocks[&tag].0;
        let order = &lay.rotation[u];
        let last = (0..order.len())
            .find(|&i| block.contains(&order[i]) && !block.contains(&order[(i + 1) % order.len()]))
            .expect("gadget blocks are contiguous");
        let right = lay.faces.face_of(Dart::leaving(&exp.graph, order[last], u).reversed());
        if large[wt] != Some(right) {
            out.push(tag);
        }
    }
    Some(out)
}

/// The unique rotation of a skeleton whose vertices all have degree at most two.
fn forced_rotation(node: &TreeNode) -> SkelRotation {
    let mut rot = SkelRotation::new();
    for e in &node.skeleton {
        rot.entry(e.tail).or_default().push(e.tag);
        rot.entry(e.head).or_default().push(e.tag);
    }
    rot
}

/// Rotation of a bundle: `order` clockwise at the first pole, reversed at the second.
pub fn bundle_rotation(poles: (usize, usize), order: &[SkelTag]) -> SkelRotation {
    let mut at_v: Vec<SkelTag> = order.iter().rev().copied().collect();
    at_v.rotate_right(1);
    SkelRotation::from([(poles.0, order.to_vec()), (poles.1, at_v)])
}

/// Bundle children whose orders are not all interchangeable: several non-`Mt`
/// markers that are not all `Muv`.
pub fn bundle_needs_search(children: &[MarkerKind]) -> bool {
    let non_mt = children.iter().filter(|&&k| k != MarkerKind::Mt).count();
    non_mt > 1 && !children.iter().all(|&k| k == MarkerKind::Muv)
}

/// Below a `Muv` parent the single non-`Mt` child of a bundle must follow the
/// parent directly; only the `Mt` children permute.
pub fn pinned_child(anchor: Anchor, children: &[SkelTag], marker_of: &dyn Fn(ArcId) -> MarkerKind) -> Option<SkelTag> {
    if !matches!(anchor, Anchor::Parent(_, MarkerKind::Muv)) {
        return None;
    }
    let kind = |t: &SkelTag| match t {
        SkelTag::Virtual(a) => marker_of(*a),
        SkelTag::Real(_) => MarkerKind::Muv,
    };
    let mut others = children.iter().filter(|t| kind(t) != MarkerKind::Mt);
    match (others.next(), others.next()) {
        (Some(&only), None) if children.len() > 1 => Some(only),
        _ => None,
    }
}

/// Outcome of configuring one skeleton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeChoice {
    Valid(Freedom, SkelRotation),
    Infeasible,
}

/// Picks the stored rotation and freedom of one skeleton. `children` lists the child
/// slots (sorted by arc id), `anchor` the slot that has to be leftmost.
pub fn configure_node(
    node: &TreeNode,
    anchor: Anchor,
    marker_of: &dyn Fn(ArcId) -> MarkerKind,
    children: &[SkelTag],
) -> NodeChoice {
    let exp = Expanded::new(node, marker_of);
    let check = |rot: &SkelRotation| skeleton_valid(node, &exp, rot, anchor);
    let parent_tag = match anchor {
        Anchor::RootEdge(t) | Anchor::Parent(t, _) => t,
    };
    let single = |rot: SkelRotation| {
        if check(&rot) {
            NodeChoice::Valid(Freedom::Fixed, rot)
        } else {
            NodeChoice::Infeasible
        }
    };
    match node.class {
        NodeClass::Q | NodeClass::S => single(forced_rotation(node)),
        NodeClass::P => {
            let poles = pole_pair(node, parent_tag);
            let mut order = vec![parent_tag];
            let pin = pinned_child(anchor, children, marker_of);
            order.extend(pin);
            order.extend(children.iter().filter(|&&c| Some(c) != pin));
            let rot = bundle_rotation(poles, &order);
            if check(&rot) {
                NodeChoice::Valid(Freedom::Permutable, rot)
            } else {
                NodeChoice::Infeasible
            }
        }
        NodeClass::R if is_bundle(&node.skeleton) => {
            let kinds: Vec<MarkerKind> = children
                .iter()
                .map(|t| match t {
                    SkelTag::Virtual(a) => marker_of(*a),
                    SkelTag::Real(_) => MarkerKind::Muv,
                })
                .collect();
            // v is internal in every Muvt child; bimodality at v admits at most two
            if kinds.iter().filter(|&&k| k == MarkerKind::Muvt).count() > 2 {
                return NodeChoice::Infeasible;
            }
            let poles = pole_pair(node, parent_tag);
            let valid: Vec<SkelRotation> = permutations(children)
                .into_iter()
                .map(|p| {
                    let mut order = vec![parent_tag];
                    order.extend(p);
                    bundle_rotation(poles, &order)
                })
                .filter(|rot| check(rot))
                .collect();
            classify_choices(valid)
        }
        NodeClass::R => {
            let local = LocalSkeleton::new(&node.skeleton);
            let Some(rot) = planar_rotation(&local.graph) else {
                return NodeChoice::Infeasible;
            };
            let rot = local.to_skel(&rot);
            let mirrored = mirror_skel(&rot);
            let valid: Vec<SkelRotation> = [rot, mirrored].into_iter().filter(|r| check(r)).collect();
            classify_choices(valid)
        }
    }
}

fn classify_choices(mut valid: Vec<SkelRotation>) -> NodeChoice {
    match valid.len() {
        0 => NodeChoice::Infeasible,
        1 => NodeChoice::Valid(Freedom::Fixed, valid.remove(0)),
        2 if same_cyclic_rotation(&mirror_skel(&valid[0]), &valid[1]) => {
            NodeChoice::Valid(Freedom::Reversible, valid.remove(0))
        }
        n => panic!("skeleton admits {n} upward orders that are not a mirror pair"),
    }
}

pub(crate) fn same_cyclic_rotation(a: &SkelRotation, b: &SkelRotation) -> bool {
    a.len() == b.len()
        && a.iter().all(|(v, x)| {
            b.get(v).is_some_and(|y| {
                x.len() == y.len()
                    && (x.is_empty() || {
                        let k = y.iter().position(|t| *t == x[0]);
                        k.is_some_and(|k| (0..x.len()).all(|i| y[(k + i) % y.len()] == x[i]))
                    })
            })
        })
}

pub(crate) fn is_bundle(skel: &[SkelEdge]) -> bool {
    let key = |e: &SkelEdge| (e.tail.min(e.head), e.tail.max(e.head));
    skel.len() > 2 && skel.iter().all(|e| key(e) == key(&skel[0]))
}

fn pole_pair(node: &TreeNode, parent_tag: SkelTag) -> (usize, usize) {
    let e = node.edge_by_tag(parent_tag).expect("parent slot present");
    (e.tail, e.head)
}

pub(crate) fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// Builds a stand-alone bundle skeleton between poles `0 -> 1` with the given parent
/// marker followed clockwise by `children`, and reports whether that order is upward.
pub fn bundle_order_is_upward(parent: MarkerKind, children: &[MarkerKind]) -> bool {
    let skeleton: Vec<SkelEdge> = (0..=children.len())
        .map(|a| SkelEdge {
            tail: 0,
            head: 1,
            tag: SkelTag::Virtual(a),
        })
        .collect();
    let node = TreeNode {
        class: NodeClass::P,
        skeleton,
        rotation: None,
    };
    let kinds: BTreeMap<ArcId, MarkerKind> = std::iter::once(parent).chain(children.iter().copied()).enumerate().collect();
    let exp = Expanded::new(&node, &|a| kinds[&a]);
    let order: Vec<SkelTag> = (0..=children.len()).map(SkelTag::Virtual).collect();
    skeleton_valid(&node, &exp, &bundle_rotation((0, 1), &order), Anchor::Parent(SkelTag::Virtual(0), parent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use MarkerKind::*;

    #[test]
    fn muv_markers_must_be_consecutive() {
        assert!(bundle_order_is_upward(Mt, &[Muv, Muv, Mt]));
        assert!(!bundle_order_is_upward(Mt, &[Muv, Mt, Muv]));
        assert!(bundle_order_is_upward(Ms, &[Mt, Mt, Mt]));
    }

    #[test]
    fn bundle_rotation_reverses_at_second_pole() {
        let tags: Vec<SkelTag> = (0..3).map(SkelTag::Virtual).collect();
        let rot = bundle_rotation((4, 7), &tags);
        assert_eq!(rot[&4], tags);
        assert_eq!(rot[&7], vec![tags[0], tags[2], tags[1]]);
    }
}
