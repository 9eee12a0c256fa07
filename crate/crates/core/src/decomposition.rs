//! Decomposition trees: skeletons joined by virtual edges, their embeddings, and
//! the SPQR tree of a biconnected graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digraph::{validate_input, DiGraph, EdgeId, InputViolation, VertexId};
use crate::embedding::{face_walks, Dart, Embedding, EmbeddingError, Rotation};

pub type NodeId = usize;
pub type ArcId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeClass {
    S,
    P,
    Q,
    R,
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            NodeClass::S => "S",
            NodeClass::P => "P",
            NodeClass::Q => "Q",
            NodeClass::R => "R",
        };
        f.write_str(c)
    }
}

/// What a skeleton edge stands for. Within one skeleton every tag is unique.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkelTag {
    Real(EdgeId),
    Virtual(ArcId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkelEdge {
    pub tail: VertexId,
    pub head: VertexId,
    pub tag: SkelTag,
}

impl SkelEdge {
    pub fn touches(&self, v: VertexId) -> bool {
        self.tail == v || self.head == v
    }

    pub fn other(&self, v: VertexId) -> VertexId {
        if self.tail == v {
            self.head
        } else {
            self.tail
        }
    }
}

/// Clockwise order of skeleton edges (by tag) around each skeleton vertex.
pub type SkelRotation = BTreeMap<VertexId, Vec<SkelTag>>;

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub class: NodeClass,
    pub skeleton: Vec<SkelEdge>,
    pub rotation: Option<SkelRotation>,
}

impl TreeNode {
    pub fn vertices(&self) -> BTreeSet<VertexId> {
        self.skeleton.iter().flat_map(|e| [e.tail, e.head]).collect()
    }

    pub fn arcs(&self) -> impl Iterator<Item = ArcId> + '_ {
        self.skeleton.iter().filter_map(|e| match e.tag {
            SkelTag::Virtual(a) => Some(a),
            SkelTag::Real(_) => None,
        })
    }

    pub fn real_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.skeleton.iter().filter_map(|e| match e.tag {
            SkelTag::Real(r) => Some(r),
            SkelTag::Virtual(_) => None,
        })
    }

    pub fn edge_by_tag(&self, tag: SkelTag) -> Option<&SkelEdge> {
        self.skeleton.iter().find(|e| e.tag == tag)
    }
}

/// An arc joins two nodes whose skeletons both carry a virtual edge between `poles`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeArc {
    pub nodes: [NodeId; 2],
    pub poles: (VertexId, VertexId),
}

impl TreeArc {
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.nodes[0] == n {
            self.nodes[1]
        } else {
            self.nodes[0]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecompError {
    #[error("invalid input: {0:?}")]
    InvalidInput(Vec<InputViolation>),
    #[error("root edge {0} does not leave the source")]
    RootNotAtSource(EdgeId),
    #[error("no node {0}")]
    NoSuchNode(NodeId),
    #[error("no arc {0}")]
    NoSuchArc(ArcId),
    #[error("vertex pair does not separate the skeleton")]
    NotACutpair,
    #[error("chosen side is not a connected component of the skeleton minus the pair")]
    NonMaximalSide,
    #[error("root edge is not on the outer face")]
    RootEdgeNotOnOuterFace,
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Clone, Debug)]
pub struct DecompTree {
    pub nodes: BTreeMap<NodeId, TreeNode>,
    pub arcs: BTreeMap<ArcId, TreeArc>,
    pub root: NodeId,
    next_node: NodeId,
    next_arc: ArcId,
}

/// Parent/children structure of a tree as seen from its root.
#[derive(Clone, Debug, Default)]
pub struct Rooted {
    pub parent: BTreeMap<NodeId, (ArcId, NodeId)>,
    pub children: BTreeMap<NodeId, Vec<(ArcId, NodeId)>>,
    pub preorder: Vec<NodeId>,
    pub depth: BTreeMap<NodeId, usize>,
    /// Preorder entry index and exclusive exit index of each subtree.
    pub interval: BTreeMap<NodeId, (usize, usize)>,
}

impl Rooted {
    pub fn parent_arc(&self, n: NodeId) -> Option<ArcId> {
        self.parent.get(&n).map(|&(a, _)| a)
    }

    pub fn children(&self, n: NodeId) -> &[(ArcId, NodeId)] {
        self.children.get(&n).map_or(&[], Vec::as_slice)
    }

    pub fn in_subtree(&self, root: NodeId, x: NodeId) -> bool {
        let (a, b) = self.interval[&root];
        let t = self.interval[&x].0;
        a <= t && t < b
    }

    /// The child of `n` whose subtree contains `x` (which must lie strictly below `n`).
    pub fn child_towards(&self, n: NodeId, x: NodeId) -> (ArcId, NodeId) {
        let t = self.interval[&x].0;
        let kids = self.children(n);
        let i = kids.partition_point(|&(_, c)| self.interval[&c].0 <= t);
        kids[i - 1]
    }

    pub fn lca(&self, mut a: NodeId, mut b: NodeId) -> NodeId {
        while self.depth[&a] > self.depth[&b] {
            a = self.parent[&a].1;
        }
        while self.depth[&b] > self.depth[&a] {
            b = self.parent[&b].1;
        }
        while a != b {
            a = self.parent[&a].1;
            b = self.parent[&b].1;
        }
        a
    }
}

impl DecompTree {
    /// A single node whose skeleton is the whole graph.
    pub fn trivial(g: &DiGraph) -> DecompTree {
        let skeleton = g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| SkelEdge {
                tail: edge.tail,
                head: edge.head,
                tag: SkelTag::Real(e),
            })
            .collect::<Vec<_>>();
        let class = classify(&skeleton);
        let mut nodes = BTreeMap::new();
        nodes.insert(
            0,
            TreeNode {
                class,
                skeleton,
                rotation: None,
            },
        );
        DecompTree {
            nodes,
            arcs: BTreeMap::new(),
            root: 0,
            next_node: 1,
            next_arc: 0,
        }
    }

    pub fn node(&self, n: NodeId) -> &TreeNode {
        &self.nodes[&n]
    }

    pub fn node_mut(&mut self, n: NodeId) -> &mut TreeNode {
        self.nodes.get_mut(&n).expect("node exists")
    }

    pub fn arc(&self, a: ArcId) -> &TreeArc {
        &self.arcs[&a]
    }

    pub(crate) fn add_node(&mut self, class: NodeClass, skeleton: Vec<SkelEdge>) -> NodeId {
        let id = self.next_node;
        self.next_node += 1;
        self.nodes.insert(
            id,
            TreeNode {
                class,
                skeleton,
                rotation: None,
            },
        );
        id
    }

    pub(crate) fn fresh_arc(&mut self, nodes: [NodeId; 2], poles: (VertexId, VertexId)) -> ArcId {
        let id = self.next_arc;
        self.next_arc += 1;
        self.arcs.insert(id, TreeArc { nodes, poles });
        id
    }

    pub fn rooted(&self) -> Rooted {
        let mut r = Rooted::default();
        let mut queue = VecDeque::from([self.root]);
        r.depth.insert(self.root, 0);
        // BFS for parents and depths, then an explicit DFS for preorder intervals
        while let Some(n) = queue.pop_front() {
            let d = r.depth[&n];
            let mut kids = Vec::new();
            for a in self.nodes[&n].arcs() {
                let c = self.arcs[&a].other(n);
                if r.parent.get(&n).is_some_and(|&(pa, _)| pa == a) {
                    continue;
                }
                r.parent.insert(c, (a, n));
                r.depth.insert(c, d + 1);
                kids.push((a, c));
                queue.push_back(c);
            }
            kids.sort_unstable();
            r.children.insert(n, kids);
        }
        let mut stack = vec![(self.root, false)];
        while let Some((n, done)) = stack.pop() {
            if done {
                let start = r.interval[&n].0;
                r.interval.insert(n, (start, r.preorder.len()));
                continue;
            }
            r.interval.insert(n, (r.preorder.len(), 0));
            r.preorder.push(n);
            stack.push((n, true));
            for &(_, c) in r.children[&n].iter().rev() {
                stack.push((c, false));
            }
        }
        // children sorted by preorder position so `child_towards` can binary search
        for kids in r.children.values_mut() {
            kids.sort_by_key(|&(_, c)| r.interval[&c].0);
        }
        r
    }

    /// Node that holds `Real(e)` for each edge id.
    pub fn edge_homes(&self) -> BTreeMap<EdgeId, NodeId> {
        let mut out = BTreeMap::new();
        for (&n, node) in &self.nodes {
            for e in node.real_edges() {
                out.insert(e, n);
            }
        }
        out
    }

    /// Moves the skeleton edges with the given tags of `node` into a new node, joined
    /// to `node` by a fresh arc between `poles`. Any stored rotation of `node` is dropped.
    pub fn split_off(
        &mut self,
        node: NodeId,
        poles: (VertexId, VertexId),
        tags: &BTreeSet<SkelTag>,
    ) -> (NodeId, ArcId) {
        let old = self.nodes.get_mut(&node).expect("node exists");
        let (moved, kept): (Vec<SkelEdge>, Vec<SkelEdge>) =
            old.skeleton.drain(..).partition(|e| tags.contains(&e.tag));
        old.skeleton = kept;
        old.rotation = None;
        let new = self.add_node(NodeClass::R, moved);
        let arc = self.fresh_arc([node, new], poles);
        let virt = SkelEdge {
            tail: poles.0,
            head: poles.1,
            tag: SkelTag::Virtual(arc),
        };
        self.node_mut(node).skeleton.push(virt);
        self.node_mut(new).skeleton.push(virt);
        for n in [node, new] {
            let class = classify(&self.nodes[&n].skeleton);
            self.node_mut(n).class = class;
        }
        for a in self.nodes[&new].arcs().collect::<Vec<_>>() {
            if a != arc {
                let slot = self.arcs.get_mut(&a).unwrap();
                for x in slot.nodes.iter_mut() {
                    if *x == node {
                        *x = new;
                    }
                }
            }
        }
        (new, arc)
    }

    /// Splits `node` at the cutpair `pair`, moving the edges incident to `component`
    /// (one connected component of the skeleton minus the pair) into a new node.
    pub fn decompose(
        &self,
        node: NodeId,
        pair: (VertexId, VertexId),
        component: &[VertexId],
    ) -> Result<(DecompTree, NodeId), DecompError> {
        let n = self.nodes.get(&node).ok_or(DecompError::NoSuchNode(node))?;
        let comps = skeleton_components_without(&n.skeleton, pair);
        if comps.len() < 2 {
            return Err(DecompError::NotACutpair);
        }
        let want: BTreeSet<VertexId> = component.iter().copied().collect();
        if !comps.contains(&want) {
            return Err(DecompError::NonMaximalSide);
        }
        let tags: BTreeSet<SkelTag> = n
            .skeleton
            .iter()
            .filter(|e| want.contains(&e.tail) || want.contains(&e.head))
            .map(|e| e.tag)
            .collect();
        let mut t = self.clone();
        let (new, _) = t.split_off(node, pair, &tags);
        Ok((t, new))
    }

    /// Merges the two nodes of `arc`, removing both virtual edges. The node nearer the
    /// root keeps its id. Stored rotations are spliced when both nodes have one.
    pub fn contract_arc(&self, arc: ArcId) -> Result<DecompTree, DecompError> {
        let TreeArc { nodes: [a, b], .. } = *self.arcs.get(&arc).ok_or(DecompError::NoSuchArc(arc))?;
        let r = self.rooted();
        let keep = if r.parent.get(&b).map(|&(pa, _)| pa) == Some(arc) { a } else { b };
        let mut t = self.clone();
        t.contract_into(arc, keep)?;
        Ok(t)
    }

    /// In-place contraction of `arc`; the node `keep` absorbs the other end.
    pub(crate) fn contract_into(&mut self, arc: ArcId, keep: NodeId) -> Result<(), DecompError> {
        let TreeArc { nodes: [a, b], poles } = *self.arcs.get(&arc).ok_or(DecompError::NoSuchArc(arc))?;
        let gone = if keep == a { b } else { a };
        let tag = SkelTag::Virtual(arc);
        let gone_node = self.nodes.remove(&gone).unwrap();
        let moved_arcs: Vec<ArcId> = gone_node.arcs().collect();
        let keep_node = self.nodes.get_mut(&keep).unwrap();
        let rotation = match (keep_node.rotation.take(), gone_node.rotation) {
            (Some(mut rk), Some(rg)) => {
                for (v, order) in rg {
                    if v == poles.0 || v == poles.1 {
                        let outer = rk.get_mut(&v).expect("pole in both skeletons");
                        let pos = outer.iter().position(|&t| t == tag).expect("virtual edge at pole");
                        let inner_pos = order.iter().position(|&t| t == tag).expect("virtual edge at pole");
                        let k = order.len();
                        let inner: Vec<SkelTag> = (1..k).map(|i| order[(inner_pos + i) % k]).collect();
                        outer.splice(pos..=pos, inner);
                    } else {
                        rk.insert(v, order);
                    }
                }
                Some(rk)
            }
            _ => None,
        };
        keep_node.skeleton.retain(|e| e.tag != tag);
        keep_node
            .skeleton
            .extend(gone_node.skeleton.into_iter().filter(|e| e.tag != tag));
        keep_node.class = classify(&keep_node.skeleton);
        keep_node.rotation = rotation;
        self.arcs.remove(&arc);
        for a in moved_arcs {
            if let Some(slot) = self.arcs.get_mut(&a) {
                for x in slot.nodes.iter_mut() {
                    if *x == gone {
                        *x = keep;
                    }
                }
            }
        }
        if self.root == gone {
            self.root = keep;
        }
        Ok(())
    }

    /// Skeleton of the node obtained by contracting every arc on `mu`'s side of the
    /// arc between `mu` and `nu`: the real edges of that side plus the virtual edge
    /// toward `nu`.
    pub fn pertinent_graph(&self, mu: NodeId, nu: NodeId) -> Result<Vec<SkelEdge>, DecompError> {
        let (&arc, _) = self
            .arcs
            .iter()
            .find(|(_, t)| t.nodes == [mu, nu] || t.nodes == [nu, mu])
            .ok_or(DecompError::NoSuchArc(usize::MAX))?;
        let mut out: Vec<SkelEdge> = Vec::new();
        let mut seen = BTreeSet::from([mu, nu]);
        let mut stack = vec![mu];
        while let Some(x) = stack.pop() {
            let node = &self.nodes[&x];
            out.extend(node.skeleton.iter().filter(|e| matches!(e.tag, SkelTag::Real(_))));
            for a in node.arcs() {
                let y = self.arcs[&a].other(x);
                if a != arc && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        out.sort_by_key(|e| e.tag);
        let poles = self.arcs[&arc].poles;
        out.push(SkelEdge {
            tail: poles.0,
            head: poles.1,
            tag: SkelTag::Virtual(arc),
        });
        Ok(out)
    }

    /// Recursive string of classes, parent poles, real edges and sorted children.
    pub fn canonical_encoding(&self) -> String {
        let r = self.rooted();
        encode(self, &r, self.root, &|_, _| String::new())
    }
}

pub(crate) fn encode(
    t: &DecompTree,
    r: &Rooted,
    root: NodeId,
    extra: &dyn Fn(NodeId, Option<ArcId>) -> String,
) -> String {
    // post-order without recursion
    let mut done: BTreeMap<NodeId, String> = BTreeMap::new();
    let mut stack = vec![(root, false)];
    while let Some((n, ready)) = stack.pop() {
        if !ready {
            stack.push((n, true));
            for &(_, c) in r.children(n) {
                stack.push((c, false));
            }
            continue;
        }
        let node = &t.nodes[&n];
        let pa = r.parent_arc(n);
        let poles = pa.map_or(String::new(), |a| {
            let (u, v) = t.arcs[&a].poles;
            format!("{}-{}", u.min(v), u.max(v))
        });
        let mut reals: Vec<EdgeId> = node.real_edges().collect();
        reals.sort_unstable();
        let mut kids: Vec<String> = r.children(n).iter().map(|&(_, c)| done.remove(&c).unwrap()).collect();
        kids.sort();
        done.insert(
            n,
            format!("{}{}<{}>{:?}({})", node.class, extra(n, pa), poles, reals, kids.join(",")),
        );
    }
    done.remove(&root).unwrap()
}

/// Shape-based class: two edges with a real one is Q, a bundle is P, a cycle is S,
/// everything else R.
pub fn classify(skeleton: &[SkelEdge]) -> NodeClass {
    if skeleton.len() == 2 && skeleton.iter().any(|e| matches!(e.tag, SkelTag::Real(_))) {
        return NodeClass::Q;
    }
    if skeleton.len() == 1 {
        return NodeClass::Q;
    }
    let pair = |e: &SkelEdge| (e.tail.min(e.head), e.tail.max(e.head));
    if skeleton.iter().all(|e| pair(e) == pair(&skeleton[0])) {
        return NodeClass::P;
    }
    let mut deg: BTreeMap<VertexId, usize> = BTreeMap::new();
    for e in skeleton {
        *deg.entry(e.tail).or_default() += 1;
        *deg.entry(e.head).or_default() += 1;
    }
    if deg.values().all(|&d| d == 2) && deg.len() == skeleton.len() {
        return NodeClass::S;
    }
    NodeClass::R
}

fn skeleton_components_without(skel: &[SkelEdge], pair: (VertexId, VertexId)) -> Vec<BTreeSet<VertexId>> {
    let mut adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for e in skel {
        adj.entry(e.tail).or_default().push(e.head);
        adj.entry(e.head).or_default().push(e.tail);
    }
    if !adj.contains_key(&pair.0) || !adj.contains_key(&pair.1) {
        return Vec::new();
    }
    let mut seen: BTreeSet<VertexId> = BTreeSet::from([pair.0, pair.1]);
    let mut comps = Vec::new();
    for &v in adj.keys() {
        if seen.contains(&v) {
            continue;
        }
        seen.insert(v);
        let mut comp = BTreeSet::from([v]);
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for &y in &adj[&x] {
                if seen.insert(y) {
                    comp.insert(y);
                    stack.push(y);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// A skeleton as a stand-alone digraph with local vertex ids and one local edge per
/// skeleton edge (same order).
#[derive(Clone, Debug)]
pub struct LocalSkeleton {
    pub graph: DiGraph,
    pub vertices: Vec<VertexId>,
    pub tags: Vec<SkelTag>,
}

impl LocalSkeleton {
    pub fn new(skeleton: &[SkelEdge]) -> Self {
        let vertices: Vec<VertexId> = skeleton
            .iter()
            .flat_map(|e| [e.tail, e.head])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut graph = DiGraph::new(vertices.len());
        for e in skeleton {
            let t = vertices.binary_search(&e.tail).unwrap();
            let h = vertices.binary_search(&e.head).unwrap();
            graph.add_edge(t, h).expect("skeletons have no loops");
        }
        LocalSkeleton {
            graph,
            vertices,
            tags: skeleton.iter().map(|e| e.tag).collect(),
        }
    }

    pub fn local_vertex(&self, v: VertexId) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn local_edge(&self, tag: SkelTag) -> Option<usize> {
        self.tags.iter().position(|&t| t == tag)
    }

    pub fn to_local(&self, rot: &SkelRotation) -> Rotation {
        self.vertices
            .iter()
            .map(|v| {
                rot.get(v)
                    .map(|order| order.iter().map(|&t| self.local_edge(t).unwrap()).collect())
                    .unwrap_or_default()
            })
            .collect()
    }

    pub fn to_skel(&self, rot: &Rotation) -> SkelRotation {
        self.vertices
            .iter()
            .zip(rot)
            .map(|(&v, order)| (v, order.iter().map(|&e| self.tags[e]).collect()))
            .collect()
    }
}

/// Reverses every clockwise order.
pub fn mirror_skel(rot: &SkelRotation) -> SkelRotation {
    rot.iter()
        .map(|(&v, order)| (v, order.iter().rev().copied().collect()))
        .collect()
}

/// Per-node skeleton embeddings plus the root edge's dart on the outer face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub rotations: BTreeMap<NodeId, SkelRotation>,
    pub outer: Dart,
}

/// Restricts an embedding of `g` to every skeleton of the tree.
pub fn project_embedding(g: &DiGraph, emb: &Embedding, tree: &DecompTree) -> Result<Configuration, DecompError> {
    let r = tree.rooted();
    let homes = tree.edge_homes();
    let root_edge = tree.nodes[&tree.root]
        .real_edges()
        .next()
        .ok_or_else(|| DecompError::InvalidConfiguration("root holds no real edge".into()))?;
    let faces = face_walks(g, &emb.rotation)?;
    let outer_face = emb.outer_face(&faces);
    let outer = [Dart::forward(root_edge), Dart::backward(root_edge)]
        .into_iter()
        .find(|&d| faces.face_of(d) == outer_face)
        .ok_or(DecompError::RootEdgeNotOnOuterFace)?;
    let mut rotations = BTreeMap::new();
    for (&n, node) in &tree.nodes {
        let parent_tag = r.parent_arc(n).map(SkelTag::Virtual);
        let mut rot = SkelRotation::new();
        for v in node.vertices() {
            let mut seq: Vec<SkelTag> = Vec::new();
            for &e in &emb.rotation[v] {
                let q = homes[&e];
                let tag = if q == n {
                    SkelTag::Real(e)
                } else if r.in_subtree(n, q) {
                    SkelTag::Virtual(r.child_towards(n, q).0)
                } else {
                    parent_tag.expect("root contains every edge outside its subtrees")
                };
                if seq.last() != Some(&tag) {
                    seq.push(tag);
                }
            }
            if seq.len() > 1 && seq.first() == seq.last() {
                seq.pop();
            }
            let distinct: BTreeSet<SkelTag> = seq.iter().copied().collect();
            let degree = node.skeleton.iter().filter(|e| e.touches(v)).count();
            if distinct.len() != seq.len() || seq.len() != degree {
                return Err(DecompError::InvalidConfiguration(format!(
                    "pertinent edges not consecutive at vertex {v} in node {n}"
                )));
            }
            rot.insert(v, seq);
        }
        rotations.insert(n, rot);
    }
    Ok(Configuration { rotations, outer })
}

/// Splices all skeleton embeddings into an embedding of `g`.
pub fn compose_embeddings(g: &DiGraph, tree: &DecompTree, config: &Configuration) -> Result<Embedding, DecompError> {
    let rotation = compose_rotation(g, tree, &tree.rooted(), &|n| config.rotations.get(&n))?;
    Ok(Embedding::new(g, rotation, config.outer)?)
}

pub(crate) fn compose_rotation<'a>(
    g: &DiGraph,
    tree: &DecompTree,
    r: &Rooted,
    rotation_of: &dyn Fn(NodeId) -> Option<&'a SkelRotation>,
) -> Result<Rotation, DecompError> {
    let missing = |n: NodeId| DecompError::InvalidConfiguration(format!("node {n} has no rotation"));
    let mut home: Vec<Option<NodeId>> = vec![None; g.vertex_count()];
    for &n in &r.preorder {
        for e in &tree.nodes[&n].skeleton {
            for v in [e.tail, e.head] {
                if home[v].is_none() {
                    home[v] = Some(n);
                }
            }
        }
    }
    let mut out: Rotation = vec![Vec::new(); g.vertex_count()];
    for v in g.vertices() {
        let Some(h) = home[v] else { continue };
        let order = rotation_of(h).ok_or_else(|| missing(h))?;
        let start = order
            .get(&v)
            .ok_or_else(|| DecompError::InvalidConfiguration(format!("vertex {v} missing in node {h}")))?;
        // each frame: (node, tags in order, next index)
        let mut stack: Vec<(NodeId, Vec<SkelTag>, usize)> = vec![(h, start.clone(), 0)];
        while let Some((n, tags, i)) = stack.last_mut() {
            if *i == tags.len() {
                stack.pop();
                continue;
            }
            let tag = tags[*i];
            *i += 1;
            let n = *n;
            match tag {
                SkelTag::Real(e) => out[v].push(e),
                SkelTag::Virtual(a) => {
                    let child = tree.arcs[&a].other(n);
                    if r.parent_arc(n) == Some(a) {
                        return Err(DecompError::InvalidConfiguration(format!(
                            "vertex {v} reaches the parent of node {n}"
                        )));
                    }
                    let crot = rotation_of(child).ok_or_else(|| missing(child))?;
                    let corder = crot.get(&v).ok_or_else(|| {
                        DecompError::InvalidConfiguration(format!("pole {v} missing in node {child}"))
                    })?;
                    let k = corder.len();
                    let p = corder.iter().position(|&t| t == tag).ok_or_else(|| {
                        DecompError::InvalidConfiguration(format!("node {child} lacks its parent edge at {v}"))
                    })?;
                    let seq: Vec<SkelTag> = (1..k).map(|j| corder[(p + j) % k]).collect();
                    stack.push((child, seq, 0));
                }
            }
        }
    }
    Ok(out)
}

/// The SPQR tree of `g` rooted at the Q-node of `root_edge`.
pub fn spqr_tree(g: &DiGraph, root_edge: EdgeId) -> Result<DecompTree, DecompError> {
    check_root(g, root_edge)?;
    Ok(build_spqr(g, root_edge, None))
}

/// Like [`spqr_tree`], but the split pairs and pending components are visited in an
/// order drawn from `seed`. The resulting tree is the same up to node and arc ids.
pub fn spqr_tree_shuffled(g: &DiGraph, root_edge: EdgeId, seed: u64) -> Result<DecompTree, DecompError> {
    check_root(g, root_edge)?;
    Ok(build_spqr(g, root_edge, Some(ChaCha8Rng::seed_from_u64(seed))))
}

fn check_root(g: &DiGraph, root_edge: EdgeId) -> Result<(), DecompError> {
    let violations = validate_input(g);
    if !violations.is_empty() {
        return Err(DecompError::InvalidInput(violations));
    }
    let s = g.single_source().expect("validated");
    if root_edge >= g.edge_count() || g.edge(root_edge).tail != s {
        return Err(DecompError::RootNotAtSource(root_edge));
    }
    Ok(())
}

fn build_spqr(g: &DiGraph, root_edge: EdgeId, rng: Option<ChaCha8Rng>) -> DecompTree {
    let mut t = DecompTree::trivial(g);
    if g.edge_count() == 1 {
        return t;
    }
    Builder::new(g, rng).run(&mut t);
    let homes = t.edge_homes();
    t.root = homes[&root_edge];
    t
}

struct Builder {
    /// vertices known not to belong to any separation pair
    never_paired: Vec<bool>,
    rng: Option<ChaCha8Rng>,
}

#[derive(Clone, Copy)]
struct WorkEdge {
    a: VertexId,
    b: VertexId,
    tag: SkelTag,
}

impl Builder {
    fn new(g: &DiGraph, rng: Option<ChaCha8Rng>) -> Self {
        Builder {
            never_paired: vec![false; g.vertex_count()],
            rng,
        }
    }

    fn run(mut self, t: &mut DecompTree) {
        // Q-nodes first; the main component sees each real edge as a virtual one
        let skeleton = std::mem::take(&mut t.node_mut(0).skeleton);
        t.nodes.clear();
        let mut main = Vec::new();
        let mut finished: Vec<(NodeClass, Vec<WorkEdge>)> = Vec::new();
        let mut pending_arcs: Vec<(VertexId, VertexId)> = Vec::new();
        let mut new_arc = |a: VertexId, b: VertexId| {
            pending_arcs.push((a, b));
            pending_arcs.len() - 1
        };
        for e in &skeleton {
            let arc = new_arc(e.tail, e.head);
            let virt = WorkEdge {
                a: e.tail,
                b: e.head,
                tag: SkelTag::Virtual(arc),
            };
            finished.push((
                NodeClass::Q,
                vec![
                    WorkEdge {
                        a: e.tail,
                        b: e.head,
                        tag: e.tag,
                    },
                    virt,
                ],
            ));
            main.push(virt);
        }
        let mut work = vec![main];
        while !work.is_empty() {
            let i = match self.rng.as_mut() {
                Some(rng) => rng.gen_range(0..work.len()),
                None => work.len() - 1,
            };
            let comp = work.swap_remove(i);
            self.process(comp, &mut work, &mut finished, &mut new_arc);
        }
        // materialize nodes and arcs
        let mut arc_nodes: Vec<Vec<NodeId>> = vec![Vec::new(); pending_arcs.len()];
        for (class, edges) in finished {
            let skel: Vec<SkelEdge> = edges
                .iter()
                .map(|w| SkelEdge {
                    tail: w.a,
                    head: w.b,
                    tag: w.tag,
                })
                .collect();
            let id = t.add_node(class, skel);
            for w in &edges {
                if let SkelTag::Virtual(a) = w.tag {
                    arc_nodes[a].push(id);
                }
            }
        }
        for (a, &(u, v)) in pending_arcs.iter().enumerate() {
            let ends = &arc_nodes[a];
            t.arcs.insert(
                a,
                TreeArc {
                    nodes: [ends[0], ends[1]],
                    poles: (u, v),
                },
            );
        }
        t.next_arc = pending_arcs.len();
        t.root = t.nodes.keys().next().copied().unwrap();
        // merge neighbouring cycles and neighbouring bundles
        let mergeable: Vec<ArcId> = t
            .arcs
            .iter()
            .filter(|(_, arc)| {
                let (x, y) = (t.nodes[&arc.nodes[0]].class, t.nodes[&arc.nodes[1]].class);
                x == y && matches!(x, NodeClass::S | NodeClass::P)
            })
            .map(|(&a, _)| a)
            .collect();
        for a in mergeable {
            let [x, y] = t.arcs[&a].nodes;
            let class = t.nodes[&x].class;
            t.merge_raw(a, x, y);
            t.node_mut(x).class = class;
        }
    }

    fn process(
        &mut self,
        mut comp: Vec<WorkEdge>,
        work: &mut Vec<Vec<WorkEdge>>,
        finished: &mut Vec<(NodeClass, Vec<WorkEdge>)>,
        new_arc: &mut dyn FnMut(VertexId, VertexId) -> ArcId,
    ) {
        loop {
            let key = |w: &WorkEdge| (w.a.min(w.b), w.a.max(w.b));
            // 1. parallel bundles
            let mut groups: BTreeMap<(VertexId, VertexId), Vec<usize>> = BTreeMap::new();
            for (i, w) in comp.iter().enumerate() {
                groups.entry(key(w)).or_default().push(i);
            }
            if groups.len() == 1 {
                finished.push((NodeClass::P, comp));
                return;
            }
            if groups.values().any(|g| g.len() > 1) {
                let mut keep = Vec::new();
                for ((a, b), idx) in groups {
                    if idx.len() == 1 {
                        keep.push(comp[idx[0]]);
                        continue;
                    }
                    let arc = new_arc(a, b);
                    let virt = WorkEdge {
                        a,
                        b,
                        tag: SkelTag::Virtual(arc),
                    };
                    let mut bundle: Vec<WorkEdge> = idx.iter().map(|&i| comp[i]).collect();
                    bundle.push(virt);
                    finished.push((NodeClass::P, bundle));
                    keep.push(virt);
                }
                comp = keep;
                continue;
            }
            let vs: Vec<VertexId> = comp
                .iter()
                .flat_map(|w| [w.a, w.b])
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let local = |v: VertexId| vs.binary_search(&v).unwrap();
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vs.len()];
            for (i, w) in comp.iter().enumerate() {
                adj[local(w.a)].push(i);
                adj[local(w.b)].push(i);
            }
            // 2. a cycle
            if adj.iter().all(|x| x.len() == 2) {
                finished.push((NodeClass::S, comp));
                return;
            }
            // 3. maximal chains through degree-2 vertices
            let mut used = vec![false; comp.len()];
            let mut chains = Vec::new();
            for start in 0..vs.len() {
                if adj[start].len() != 2 || used[adj[start][0]] {
                    continue;
                }
                let mut chain: Vec<usize> = Vec::new();
                let mut ends = [0; 2];
                for (side, &first) in adj[start].iter().enumerate() {
                    let mut e = first;
                    let mut x = start;
                    loop {
                        used[e] = true;
                        chain.push(e);
                        let w = comp[e];
                        let y = local(if vs[x] == w.a { w.b } else { w.a });
                        if adj[y].len() != 2 {
                            ends[side] = y;
                            break;
                        }
                        e = if adj[y][0] == e { adj[y][1] } else { adj[y][0] };
                        x = y;
                    }
                }
                chains.push((chain, ends));
            }
            if !chains.is_empty() {
                let mut drop = vec![false; comp.len()];
                let mut added = Vec::new();
                for (chain, [x, y]) in chains {
                    let arc = new_arc(vs[x], vs[y]);
                    let virt = WorkEdge {
                        a: vs[x],
                        b: vs[y],
                        tag: SkelTag::Virtual(arc),
                    };
                    let mut cycle: Vec<WorkEdge> = chain.iter().map(|&i| comp[i]).collect();
                    for &i in &chain {
                        drop[i] = true;
                    }
                    cycle.push(virt);
                    finished.push((NodeClass::S, cycle));
                    added.push(virt);
                }
                comp = comp
                    .into_iter()
                    .enumerate()
                    .filter(|&(i, _)| !drop[i])
                    .map(|(_, w)| w)
                    .chain(added)
                    .collect();
                continue;
            }
            // 4. a separation pair of a simple component with minimum degree three
            let found = self.find_pair(&comp, &vs, &adj);
            let Some((a, b)) = found else {
                finished.push((NodeClass::R, comp));
                return;
            };
            let (pieces, direct) = split_at_pair(&comp, &vs, &adj, a, b);
            let (pa, pb) = (vs[a], vs[b]);
            if pieces.len() == 2 && direct.is_empty() {
                let arc = new_arc(pa, pb);
                let virt = WorkEdge {
                    a: pa,
                    b: pb,
                    tag: SkelTag::Virtual(arc),
                };
                for mut piece in pieces {
                    piece.push(virt);
                    work.push(piece);
                }
            } else {
                let mut bundle: Vec<WorkEdge> = direct.iter().map(|&i| comp[i]).collect();
                for mut piece in pieces {
                    let arc = new_arc(pa, pb);
                    let virt = WorkEdge {
                        a: pa,
                        b: pb,
                        tag: SkelTag::Virtual(arc),
                    };
                    piece.push(virt);
                    bundle.push(virt);
                    work.push(piece);
                }
                finished.push((NodeClass::P, bundle));
            }
            return;
        }
    }

    fn find_pair(&mut self, comp: &[WorkEdge], vs: &[VertexId], adj: &[Vec<usize>]) -> Option<(usize, usize)> {
        let mut order: Vec<usize> = (0..vs.len()).collect();
        if let Some(rng) = self.rng.as_mut() {
            order.shuffle(rng);
        }
        for a in order {
            if self.never_paired[vs[a]] {
                continue;
            }
            let cuts = crate::digraph::articulation_points(vs.len(), |x| {
                let list: &[usize] = if x == a { &[] } else { &adj[x] };
                list.iter().filter_map(move |&i| {
                    let w = comp[i];
                    let y = if vs[x] == w.a { w.b } else { w.a };
                    let y = vs.binary_search(&y).unwrap();
                    (y != a).then_some((i, y))
                })
            });
            if !cuts.is_empty() {
                let pick = self.rng.as_mut().map_or(0, |rng| rng.gen_range(0..cuts.len()));
                return Some((a, cuts[pick]));
            }
            self.never_paired[vs[a]] = true;
        }
        None
    }
}

/// Pieces of `comp` at the pair `{a, b}`: the edges of each component of the graph
/// minus the pair (with their attachments), and the edges joining `a` and `b`.
fn split_at_pair(
    comp: &[WorkEdge],
    vs: &[VertexId],
    adj: &[Vec<usize>],
    a: usize,
    b: usize,
) -> (Vec<Vec<WorkEdge>>, Vec<usize>) {
    let n = vs.len();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if start == a || start == b || label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &i in &adj[x] {
                let w = comp[i];
                let y = vs.binary_search(if vs[x] == w.a { &w.b } else { &w.a }).unwrap();
                if y != a && y != b && label[y] == usize::MAX {
                    label[y] = count;
                    stack.push(y);
                }
            }
        }
        count += 1;
    }
    let mut pieces = vec![Vec::new(); count];
    let mut direct = Vec::new();
    for (i, w) in comp.iter().enumerate() {
        let (x, y) = (vs.binary_search(&w.a).unwrap(), vs.binary_search(&w.b).unwrap());
        let inner = if x != a && x != b { x } else { y };
        if inner == a || inner == b {
            direct.push(i);
        } else {
            pieces[label[inner]].push(*w);
        }
    }
    (pieces, direct)
}

impl DecompTree {
    /// Merge `y` into `x` along `arc` without touching rotations or the root.
    fn merge_raw(&mut self, arc: ArcId, x: NodeId, y: NodeId) {
        let tag = SkelTag::Virtual(arc);
        let gone = self.nodes.remove(&y).unwrap();
        let keep = self.nodes.get_mut(&x).unwrap();
        keep.skeleton.retain(|e| e.tag != tag);
        keep.skeleton.extend(gone.skeleton.into_iter().filter(|e| e.tag != tag));
        self.arcs.remove(&arc);
        for slot in self.arcs.values_mut() {
            for z in slot.nodes.iter_mut() {
                if *z == y {
                    *z = x;
                }
            }
        }
        if self.root == y {
            self.root = x;
        }
    }
}
