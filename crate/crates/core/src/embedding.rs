//! Rotation systems, face tracing and the fixed-embedding upward test.
//!
//! Rotations list the incident edges of each vertex in clockwise order. A dart is
//! an edge traversed in one direction; the face to the left of a dart `a -> b`
//! continues with the dart leaving `b` along the clockwise successor of the edge.

use serde::{Deserialize, Serialize};

use crate::digraph::{DiGraph, EdgeId, VertexId, VertexRole};
use crate::union_find::UnionFind;

/// Clockwise incident edges, one list per vertex.
pub type Rotation = Vec<Vec<EdgeId>>;

pub type FaceId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dart(pub usize);

impl Dart {
    /// Tail to head.
    pub fn forward(e: EdgeId) -> Dart {
        Dart(2 * e)
    }

    pub fn backward(e: EdgeId) -> Dart {
        Dart(2 * e + 1)
    }

    /// The dart of `e` that starts at `v`.
    pub fn leaving(g: &DiGraph, e: EdgeId, v: VertexId) -> Dart {
        if g.edge(e).tail == v {
            Dart::forward(e)
        } else {
            Dart::backward(e)
        }
    }

    pub fn edge(self) -> EdgeId {
        self.0 / 2
    }

    pub fn is_forward(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn reversed(self) -> Dart {
        Dart(self.0 ^ 1)
    }

    pub fn origin(self, g: &DiGraph) -> VertexId {
        let e = g.edge(self.edge());
        if self.is_forward() {
            e.tail
        } else {
            e.head
        }
    }

    pub fn target(self, g: &DiGraph) -> VertexId {
        self.reversed().origin(g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("malformed rotation at vertex {0}")]
    MalformedRotation(VertexId),
    #[error("rotation count {found} does not match vertex count {expected}")]
    WrongVertexCount { expected: usize, found: usize },
    #[error("rotation system is not planar")]
    NotPlanar,
    #[error("graph does not have exactly one source")]
    NotSingleSource,
    #[error("source is not on the outer face")]
    SourceNotOnOuterFace,
    #[error("dart {0:?} does not exist")]
    UnknownDart(Dart),
}

/// Face cycles of a rotation system. Faces are numbered by their smallest dart and
/// each walk starts at that dart.
#[derive(Clone, Debug)]
pub struct Faces {
    walks: Vec<Vec<Dart>>,
    face_of: Vec<FaceId>,
}

impl Faces {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn walks(&self) -> &[Vec<Dart>] {
        &self.walks
    }

    pub fn walk(&self, f: FaceId) -> &[Dart] {
        &self.walks[f]
    }

    pub fn face_of(&self, d: Dart) -> FaceId {
        self.face_of[d.0]
    }

    /// Smallest dart of the face, its stable identifier.
    pub fn key(&self, f: FaceId) -> Dart {
        self.walks[f][0]
    }

    pub fn contains_vertex(&self, g: &DiGraph, f: FaceId, v: VertexId) -> bool {
        self.walks[f].iter().any(|d| d.origin(g) == v)
    }
}

/// For each dart `d` leaving a vertex, the dart leaving the same vertex along the
/// clockwise next edge.
fn clockwise_next(g: &DiGraph, rot: &Rotation) -> Result<Vec<Dart>, EmbeddingError> {
    if rot.len() != g.vertex_count() {
        return Err(EmbeddingError::WrongVertexCount {
            expected: g.vertex_count(),
            found: rot.len(),
        });
    }
    const UNSET: usize = usize::MAX;
    let mut next = vec![Dart(UNSET); 2 * g.edge_count()];
    for (v, order) in rot.iter().enumerate() {
        if order.len() != g.degree(v) {
            return Err(EmbeddingError::MalformedRotation(v));
        }
        for (i, &e) in order.iter().enumerate() {
            if e >= g.edge_count() || !g.edge(e).touches(v) {
                return Err(EmbeddingError::MalformedRotation(v));
            }
            let d = Dart::leaving(g, e, v);
            if next[d.0].0 != UNSET {
                return Err(EmbeddingError::MalformedRotation(v));
            }
            let succ = order[(i + 1) % order.len()];
            next[d.0] = Dart::leaving(g, succ, v);
        }
    }
    Ok(next)
}

/// Traces all faces of a rotation system.
pub fn face_walks(g: &DiGraph, rot: &Rotation) -> Result<Faces, EmbeddingError> {
    let next = clockwise_next(g, rot)?;
    const UNSET: usize = usize::MAX;
    let mut face_of = vec![UNSET; next.len()];
    let mut walks = Vec::new();
    for start in 0..next.len() {
        if face_of[start] != UNSET {
            continue;
        }
        let id = walks.len();
        let mut walk = Vec::new();
        let mut d = Dart(start);
        loop {
            face_of[d.0] = id;
            walk.push(d);
            d = next[d.reversed().0];
            if d.0 == start {
                break;
            }
        }
        walks.push(walk);
    }
    Ok(Faces { walks, face_of })
}

fn euler_ok(g: &DiGraph, faces: &Faces) -> bool {
    g.vertex_count() + faces.len() == g.edge_count() + 2
}

/// Euler check on a connected graph.
pub fn is_planar_embedding(g: &DiGraph, rot: &Rotation) -> bool {
    match face_walks(g, rot) {
        Ok(faces) => euler_ok(g, &faces),
        Err(_) => false,
    }
}

pub fn mirror(rot: &Rotation) -> Rotation {
    rot.iter()
        .map(|order| order.iter().rev().copied().collect())
        .collect()
}

/// Rotation plus the smallest dart of the chosen outer face.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Embedding {
    pub rotation: Rotation,
    pub outer: Dart,
}

impl Embedding {
    /// Builds an embedding whose outer face is the face containing `outer_dart`.
    pub fn new(g: &DiGraph, rotation: Rotation, outer_dart: Dart) -> Result<Self, EmbeddingError> {
        let faces = face_walks(g, &rotation)?;
        if !euler_ok(g, &faces) {
            return Err(EmbeddingError::NotPlanar);
        }
        if outer_dart.0 >= 2 * g.edge_count() {
            return Err(EmbeddingError::UnknownDart(outer_dart));
        }
        let outer = faces.key(faces.face_of(outer_dart));
        Ok(Embedding { rotation, outer })
    }

    pub fn faces(&self, g: &DiGraph) -> Faces {
        face_walks(g, &self.rotation).expect("embedding was validated")
    }

    pub fn outer_face(&self, faces: &Faces) -> FaceId {
        faces.face_of(self.outer)
    }

    /// Total key: rotations started at their smallest edge id, plus the outer face.
    pub fn canonical(&self) -> Embedding {
        let rotation = self
            .rotation
            .iter()
            .map(|order| {
                let k = order
                    .iter()
                    .enumerate()
                    .min_by_key(|&(_, e)| *e)
                    .map_or(0, |(i, _)| i);
                order[k..].iter().chain(&order[..k]).copied().collect()
            })
            .collect();
        Embedding {
            rotation,
            outer: self.outer,
        }
    }

    /// The same embedding seen from the other side of the plane.
    pub fn mirrored(&self, g: &DiGraph) -> Embedding {
        let rotation = mirror(&self.rotation);
        Embedding::new(g, rotation, self.outer.reversed()).expect("mirror of a planar embedding")
    }
}

/// Links between faces and the vertices where they form an all-incoming corner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceSinkGraph {
    pub face_count: usize,
    pub links: Vec<(FaceId, VertexId)>,
}

fn sink_links(g: &DiGraph, rot: &Rotation, faces: &Faces) -> Vec<(FaceId, VertexId)> {
    let mut links = Vec::new();
    for (v, order) in rot.iter().enumerate() {
        for (i, &e) in order.iter().enumerate() {
            let f = order[(i + 1) % order.len()];
            if g.edge(e).head == v && g.edge(f).head == v {
                let face = faces.face_of(Dart::leaving(g, e, v).reversed());
                links.push((face, v));
            }
        }
    }
    links
}

pub fn face_sink_graph(g: &DiGraph, rot: &Rotation) -> Result<FaceSinkGraph, EmbeddingError> {
    let faces = face_walks(g, rot)?;
    if !euler_ok(g, &faces) {
        return Err(EmbeddingError::NotPlanar);
    }
    Ok(FaceSinkGraph {
        face_count: faces.len(),
        links: sink_links(g, rot, &faces),
    })
}

/// Faces that can serve as the outer face of an upward drawing realizing `rot`.
///
/// Nodes are the faces and the non-source vertices. The rotation is upward for outer
/// face `h` iff the links form a forest in which the tree containing `h` holds no
/// internal vertex, every other tree holds exactly one, and the source lies on `h`.
pub fn candidate_outer_faces(g: &DiGraph, rot: &Rotation) -> Result<Vec<FaceId>, EmbeddingError> {
    let faces = face_walks(g, rot)?;
    candidates_with_faces(g, rot, &faces)
}

pub(crate) fn candidates_with_faces(
    g: &DiGraph,
    rot: &Rotation,
    faces: &Faces,
) -> Result<Vec<FaceId>, EmbeddingError> {
    if !euler_ok(g, faces) {
        return Err(EmbeddingError::NotPlanar);
    }
    let s = g.single_source().ok_or(EmbeddingError::NotSingleSource)?;
    let nf = faces.len();
    let mut uf = UnionFind::new(nf + g.vertex_count());
    for (f, v) in sink_links(g, rot, faces) {
        if !uf.union(f, nf + v) {
            return Ok(Vec::new());
        }
    }
    let mut internal = vec![0usize; nf + g.vertex_count()];
    let mut is_root = vec![false; nf + g.vertex_count()];
    for x in 0..nf {
        let r = uf.find(x);
        is_root[r] = true;
    }
    for v in g.vertices() {
        if v == s {
            continue;
        }
        let r = uf.find(nf + v);
        is_root[r] = true;
        let role = VertexRole::from_degrees(g.indegree(v), g.outdegree(v));
        if role == Some(VertexRole::Internal) {
            internal[r] += 1;
        }
    }
    let mut free_tree = None;
    for r in 0..is_root.len() {
        if !is_root[r] {
            continue;
        }
        match internal[r] {
            0 if free_tree.is_none() => free_tree = Some(r),
            1 => {}
            _ => return Ok(Vec::new()),
        }
    }
    let Some(t) = free_tree else {
        return Ok(Vec::new());
    };
    Ok((0..nf)
        .filter(|&f| uf.find(f) == t && faces.contains_vertex(g, f, s))
        .collect())
}

/// For an upward rotation with outer face `h`, the face holding the large angle of
/// every vertex that has one. Each tree of the face-sink forest is rooted at `h` or
/// at its internal vertex; a vertex gives its large angle to its parent face.
pub(crate) fn large_angle_faces(g: &DiGraph, rot: &Rotation, faces: &Faces, h: FaceId) -> Vec<Option<FaceId>> {
    let nf = faces.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nf + g.vertex_count()];
    for (f, v) in sink_links(g, rot, faces) {
        adj[f].push(nf + v);
        adj[nf + v].push(f);
    }
    let mut roots = vec![h];
    roots.extend(
        g.vertices()
            .filter(|&v| VertexRole::from_degrees(g.indegree(v), g.outdegree(v)) == Some(VertexRole::Internal))
            .map(|v| nf + v),
    );
    let mut seen = vec![false; adj.len()];
    let mut out = vec![None; g.vertex_count()];
    for r in roots {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut stack = vec![r];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    if y >= nf {
                        out[y - nf] = Some(x);
                    }
                    stack.push(y);
                }
            }
        }
    }
    out
}

pub fn upward_planar_with_outer(g: &DiGraph, rot: &Rotation, h: FaceId) -> Result<bool, EmbeddingError> {
    Ok(candidate_outer_faces(g, rot)?.contains(&h))
}

/// Upward test for a full embedding.
pub fn is_upward(g: &DiGraph, emb: &Embedding) -> Result<bool, EmbeddingError> {
    let faces = face_walks(g, &emb.rotation)?;
    let h = emb.outer_face(&faces);
    Ok(candidates_with_faces(g, &emb.rotation, &faces)?.contains(&h))
}

/// The edge that follows the outer-face corner at the source in clockwise order.
pub fn leftmost_edge_at_source(g: &DiGraph, emb: &Embedding) -> Result<EdgeId, EmbeddingError> {
    let s = g.single_source().ok_or(EmbeddingError::NotSingleSource)?;
    let faces = face_walks(g, &emb.rotation)?;
    faces
        .walk(emb.outer_face(&faces))
        .iter()
        .find(|d| d.origin(g) == s)
        .map(|d| d.edge())
        .ok_or(EmbeddingError::SourceNotOnOuterFace)
}

/// Cyclic order check: do `a, b, c` appear in this clockwise order in `order`?
pub fn cyclically_ordered<T: PartialEq>(order: &[T], a: &T, b: &T, c: &T) -> bool {
    let pos = |x: &T| order.iter().position(|y| y == x);
    match (pos(a), pos(b), pos(c)) {
        (Some(i), Some(j), Some(k)) => (i < j && j < k) || (j < k && k < i) || (k < i && i < j),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> DiGraph {
        // s=0 a=1 b=2 t=3
        DiGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn diamond_rot() -> Rotation {
        vec![vec![0, 1], vec![0, 2], vec![1, 3], vec![2, 3]]
    }

    #[test]
    fn single_edge_has_one_face_and_one_link() {
        let g = DiGraph::from_edges(2, &[(0, 1)]).unwrap();
        let rot = vec![vec![0], vec![0]];
        let faces = face_walks(&g, &rot).unwrap();
        assert_eq!(faces.len(), 1);
        assert_eq!(faces.walk(0).len(), 2);
        let fsg = face_sink_graph(&g, &rot).unwrap();
        assert_eq!(fsg.links, vec![(0, 1)]);
        assert_eq!(candidate_outer_faces(&g, &rot).unwrap(), vec![0]);
        let emb = Embedding::new(&g, rot, Dart(0)).unwrap();
        assert_eq!(leftmost_edge_at_source(&g, &emb), Ok(0));
    }

    #[test]
    fn diamond_faces_and_links() {
        let g = diamond();
        let faces = face_walks(&g, &diamond_rot()).unwrap();
        assert_eq!(faces.len(), 2);
        let fsg = face_sink_graph(&g, &diamond_rot()).unwrap();
        assert_eq!(fsg.links.len(), 2);
        assert!(fsg.links.iter().all(|&(_, v)| v == 3));
        assert_eq!(candidate_outer_faces(&g, &diamond_rot()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn diamond_leftmost_depends_on_outer_face() {
        let g = diamond();
        // face left of s->a holds the corner between (s,b) and (s,a)
        let emb = Embedding::new(&g, diamond_rot(), Dart::forward(0)).unwrap();
        assert_eq!(leftmost_edge_at_source(&g, &emb), Ok(0));
        let emb = Embedding::new(&g, diamond_rot(), Dart::forward(1)).unwrap();
        assert_eq!(leftmost_edge_at_source(&g, &emb), Ok(1));
    }

    #[test]
    fn malformed_rotation_rejected() {
        let g = diamond();
        let mut rot = diamond_rot();
        rot[0] = vec![0, 0];
        assert_eq!(face_walks(&g, &rot).unwrap_err(), EmbeddingError::MalformedRotation(0));
        let mut rot = diamond_rot();
        rot[1] = vec![0];
        assert!(face_walks(&g, &rot).is_err());
    }

    #[test]
    fn cyclic_order_helper() {
        let v = [1, 2, 3, 4];
        assert!(cyclically_ordered(&v, &1, &2, &3));
        assert!(cyclically_ordered(&v, &3, &4, &1));
        assert!(!cyclically_ordered(&v, &1, &3, &2));
    }
}
