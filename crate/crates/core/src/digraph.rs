//! Directed multigraphs with dense integer ids, plus the connectivity and
//! reachability predicates used by the rest of the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
}

impl Edge {
    pub fn new(tail: VertexId, head: VertexId) -> Self {
        Edge { tail, head }
    }

    /// The endpoint opposite to `v`. Panics if `v` is not an endpoint.
    pub fn other(&self, v: VertexId) -> VertexId {
        if v == self.tail {
            self.head
        } else {
            assert_eq!(v, self.head, "vertex {v} is not an endpoint");
            self.tail
        }
    }

    pub fn touches(&self, v: VertexId) -> bool {
        self.tail == v || self.head == v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge endpoint {0} is not a vertex")]
    UnknownVertex(VertexId),
}

/// Directed multigraph. Parallel edges are allowed, self-loops are not.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiGraph {
    edges: Vec<Edge>,
    incident: Vec<Vec<EdgeId>>,
}

impl DiGraph {
    pub fn new(vertex_count: usize) -> Self {
        DiGraph {
            edges: Vec::new(),
            incident: vec![Vec::new(); vertex_count],
        }
    }

    pub fn from_edges(vertex_count: usize, edges: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        let mut g = DiGraph::new(vertex_count);
        for &(t, h) in edges {
            g.add_edge(t, h)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.incident.push(Vec::new());
        self.incident.len() - 1
    }

    pub fn add_edge(&mut self, tail: VertexId, head: VertexId) -> Result<EdgeId, GraphError> {
        if tail == head {
            return Err(GraphError::SelfLoop(tail));
        }
        for v in [tail, head] {
            if v >= self.incident.len() {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        let id = self.edges.len();
        self.edges.push(Edge { tail, head });
        self.incident[tail].push(id);
        self.incident[head].push(id);
        Ok(id)
    }

    pub fn vertex_count(&self) -> usize {
        self.incident.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.incident.len()
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Incident edges of `v` in ascending id order.
    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incident[v].len()
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.incident[v].iter().copied().filter(move |&e| self.edges[e].tail == v)
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.incident[v].iter().copied().filter(move |&e| self.edges[e].head == v)
    }

    pub fn indegree(&self, v: VertexId) -> usize {
        self.in_edges(v).count()
    }

    pub fn outdegree(&self, v: VertexId) -> usize {
        self.out_edges(v).count()
    }

    /// Vertices with no incoming and at least one outgoing edge.
    pub fn sources(&self) -> Vec<VertexId> {
        self.vertices()
            .filter(|&v| self.indegree(v) == 0 && self.outdegree(v) > 0)
            .collect()
    }

    pub fn sinks(&self) -> Vec<VertexId> {
        self.vertices()
            .filter(|&v| self.outdegree(v) == 0 && self.indegree(v) > 0)
            .collect()
    }

    /// The unique source, if there is exactly one.
    pub fn single_source(&self) -> Option<VertexId> {
        match self.sources().as_slice() {
            [s] => Some(*s),
            _ => None,
        }
    }

    /// Kahn's algorithm; `None` when the graph has a directed cycle.
    pub fn topological_order(&self) -> Option<Vec<VertexId>> {
        let n = self.vertex_count();
        let mut indeg: Vec<usize> = self.vertices().map(|v| self.indegree(v)).collect();
        let mut stack: Vec<VertexId> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(v);
            for e in self.out_edges(v) {
                let h = self.edges[e].head;
                indeg[h] -= 1;
                if indeg[h] == 0 {
                    stack.push(h);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Connectivity of the underlying undirected graph over all vertices.
    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &e in &self.incident[v] {
                let w = self.edges[e].other(v);
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Cut vertices of the underlying undirected multigraph (iterative DFS).
    pub fn articulation_points(&self) -> Vec<VertexId> {
        articulation_points(self.vertex_count(), |v| {
            self.incident[v].iter().map(move |&e| (e, self.edges[e].other(v)))
        })
    }

    pub fn is_biconnected(&self) -> bool {
        self.is_connected() && self.articulation_points().is_empty()
    }

    /// True when no two edges share the same ordered (tail, head) pair.
    pub fn is_simple(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.edges.iter().all(|e| seen.insert((e.tail, e.head)))
    }

    /// Subgraph induced by the given edge ids, keeping vertex ids.
    pub fn edge_subgraph(&self, edges: &[EdgeId]) -> DiGraph {
        let mut g = DiGraph::new(self.vertex_count());
        for &e in edges {
            let Edge { tail, head } = self.edges[e];
            g.add_edge(tail, head).expect("edges of a valid graph");
        }
        g
    }
}

/// Generic articulation-point search. `neighbours(v)` yields `(edge key, other end)`;
/// the edge key lets parallel edges count as distinct back edges.
pub(crate) fn articulation_points<I, F>(n: usize, neighbours: F) -> Vec<VertexId>
where
    F: Fn(VertexId) -> I,
    I: Iterator<Item = (usize, VertexId)>,
{
    const UNSEEN: usize = usize::MAX;
    let mut disc = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut is_cut = vec![false; n];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != UNSEEN {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        let mut root_children = 0;
        // (vertex, edge used to enter, neighbour iterator)
        let mut stack: Vec<(VertexId, Option<usize>, I)> = vec![(root, None, neighbours(root))];
        while let Some((v, via, iter)) = stack.last_mut() {
            let v = *v;
            let via = *via;
            match iter.next() {
                Some((key, w)) => {
                    if Some(key) == via {
                        continue;
                    }
                    if disc[w] == UNSEEN {
                        disc[w] = time;
                        low[w] = time;
                        time += 1;
                        if v == root {
                            root_children += 1;
                        }
                        stack.push((w, Some(key), neighbours(w)));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                }
                None => {
                    stack.pop();
                    if let Some((p, _, _)) = stack.last() {
                        let p = *p;
                        low[p] = low[p].min(low[v]);
                        if p != root && low[v] >= disc[p] {
                            is_cut[p] = true;
                        }
                    }
                }
            }
        }
        if root_children > 1 {
            is_cut[root] = true;
        }
    }
    (0..n).filter(|&v| is_cut[v]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexRole {
    Source,
    Sink,
    Internal,
}

impl VertexRole {
    pub fn from_degrees(indeg: usize, outdeg: usize) -> Option<VertexRole> {
        match (indeg, outdeg) {
            (0, 0) => None,
            (0, _) => Some(VertexRole::Source),
            (_, 0) => Some(VertexRole::Sink),
            _ => Some(VertexRole::Internal),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoleError {
    #[error("vertex {0} touches no edge of the subgraph")]
    IsolatedInSubgraph(VertexId),
}

/// Role of `v` counting only the edges in `sub`.
pub fn vertex_role(g: &DiGraph, v: VertexId, sub: &[EdgeId]) -> Result<VertexRole, RoleError> {
    let (mut indeg, mut outdeg) = (0, 0);
    for &e in sub {
        let edge = g.edge(e);
        if edge.head == v {
            indeg += 1;
        } else if edge.tail == v {
            outdeg += 1;
        }
    }
    VertexRole::from_degrees(indeg, outdeg).ok_or(RoleError::IsolatedInSubgraph(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputViolation {
    NotSimple,
    Cyclic,
    Disconnected,
    NotBiconnected,
    SourceCount(usize),
}

impl fmt::Display for InputViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputViolation::NotSimple => write!(f, "graph has parallel edges"),
            InputViolation::Cyclic => write!(f, "graph has a directed cycle"),
            InputViolation::Disconnected => write!(f, "graph is disconnected"),
            InputViolation::NotBiconnected => write!(f, "graph is not biconnected"),
            InputViolation::SourceCount(k) => write!(f, "graph has {k} sources, expected exactly one"),
        }
    }
}

/// Every violated precondition of the main entry points; empty means valid.
/// The source count is only checked on acyclic graphs.
pub fn validate_input(g: &DiGraph) -> Vec<InputViolation> {
    let mut out = Vec::new();
    if !g.is_simple() {
        out.push(InputViolation::NotSimple);
    }
    let acyclic = g.is_acyclic();
    if !acyclic {
        out.push(InputViolation::Cyclic);
    }
    if !g.is_connected() || g.edge_count() == 0 {
        out.push(InputViolation::Disconnected);
    } else if !g.articulation_points().is_empty() {
        out.push(InputViolation::NotBiconnected);
    }
    if acyclic {
        let k = g.sources().len();
        if k != 1 {
            out.push(InputViolation::SourceCount(k));
        }
    }
    out
}

/// A separating vertex pair with the vertex sets of the components left after deleting it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cutpair {
    pub pair: (VertexId, VertexId),
    pub components: Vec<Vec<VertexId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CutpairError {
    #[error("graph is not biconnected")]
    NotBiconnected,
}

/// All pairs `{u, v}` (u < v by id) whose deletion disconnects the graph, or that carry
/// two or more parallel edges while further edges exist.
pub fn cutpairs(g: &DiGraph) -> Result<Vec<Cutpair>, CutpairError> {
    if !g.is_biconnected() {
        return Err(CutpairError::NotBiconnected);
    }
    let n = g.vertex_count();
    let mut multiplicity: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    for e in g.edges() {
        *multiplicity.entry((e.tail.min(e.head), e.tail.max(e.head))).or_default() += 1;
    }
    let mut out = Vec::new();
    for u in 0..n {
        // articulation points of G - u are exactly the partners v with {u, v} separating
        let partners = articulation_points(n, |x| {
            let it: Box<dyn Iterator<Item = (usize, VertexId)>> = if x == u {
                Box::new(std::iter::empty())
            } else {
                Box::new(
                    g.incident(x)
                        .iter()
                        .map(move |&e| (e, g.edge(e).other(x)))
                        .filter(move |&(_, w)| w != u),
                )
            };
            it
        });
        let bundles = multiplicity
            .iter()
            .filter(|(&(a, _), &k)| a == u && k >= 2 && k < g.edge_count())
            .map(|(&(_, b), _)| b);
        let mut vs: BTreeSet<VertexId> = partners.into_iter().filter(|&v| v > u).collect();
        vs.extend(bundles);
        for v in vs {
            out.push(Cutpair {
                pair: (u, v),
                components: components_without(g, u, v),
            });
        }
    }
    Ok(out)
}

fn components_without(g: &DiGraph, u: VertexId, v: VertexId) -> Vec<Vec<VertexId>> {
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    seen[u] = true;
    seen[v] = true;
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &e in g.incident(x) {
                let w = g.edge(e).other(x);
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DominanceError {
    #[error("graph has a directed cycle")]
    CyclicGraph,
}

/// Reachability closure of a DAG, stored as one bitset row per vertex.
#[derive(Clone, Debug)]
pub struct Reachability {
    words: usize,
    rows: Vec<u64>,
}

impl Reachability {
    pub fn new(g: &DiGraph) -> Result<Self, DominanceError> {
        let order = g.topological_order().ok_or(DominanceError::CyclicGraph)?;
        let n = g.vertex_count();
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![0u64; n * words];
        for &v in order.iter().rev() {
            rows[v * words + v / 64] |= 1 << (v % 64);
            for e in g.out_edges(v) {
                let h = g.edge(e).head;
                let (lo, hi) = if v < h { (v, h) } else { (h, v) };
                let (a, b) = rows.split_at_mut(hi * words);
                let (dst, src) = if v < h {
                    (&mut a[lo * words..(lo + 1) * words], &b[..words])
                } else {
                    (&mut b[..words], &a[lo * words..(lo + 1) * words])
                };
                for (d, s) in dst.iter_mut().zip(src) {
                    *d |= s;
                }
            }
        }
        Ok(Reachability { words, rows })
    }

    /// Whether a directed path leads from `u` to `v` (every vertex reaches itself).
    pub fn reaches(&self, u: VertexId, v: VertexId) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    /// `u < v`: a nonempty directed path from `u` to `v`.
    pub fn dominates(&self, u: VertexId, v: VertexId) -> bool {
        u != v && self.reaches(u, v)
    }
}

/// The queried pairs `(u, v)` for which `u` dominates `v`.
pub fn dominance_table(
    g: &DiGraph,
    queries: &[(VertexId, VertexId)],
) -> Result<BTreeSet<(VertexId, VertexId)>, DominanceError> {
    let reach = Reachability::new(g)?;
    Ok(queries
        .iter()
        .copied()
        .filter(|&(u, v)| reach.dominates(u, v))
        .collect())
}
