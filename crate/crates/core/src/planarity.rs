//! Planar embedding of biconnected multigraphs by repeated path insertion.
//!
//! Starting from a cycle, every step looks at the fragments of the graph that are not
//! yet embedded, computes the faces each fragment could go into, and routes one path
//! of a fragment through one of its faces. A fragment with no admissible face means
//! the graph is not planar; fragments with a single admissible face go first.

use std::collections::{BTreeMap, VecDeque};

use crate::digraph::{DiGraph, EdgeId, VertexId};
use crate::embedding::{Dart, Rotation};

/// A planar rotation system of a biconnected graph, or `None` if it is not planar.
pub fn planar_rotation(g: &DiGraph) -> Option<Rotation> {
    let n = g.vertex_count();
    let mut rep: BTreeMap<(VertexId, VertexId), EdgeId> = BTreeMap::new();
    let mut parallels: Vec<(EdgeId, EdgeId)> = Vec::new();
    for (e, edge) in g.edges().iter().enumerate() {
        let key = (edge.tail.min(edge.head), edge.tail.max(edge.head));
        match rep.get(&key) {
            Some(&r) => parallels.push((e, r)),
            None => {
                rep.insert(key, e);
            }
        }
    }
    let mut rot: Rotation = vec![Vec::new(); n];
    let active: Vec<VertexId> = g.vertices().filter(|&v| g.degree(v) > 0).collect();
    if rep.len() == 1 {
        let &r = rep.values().next().unwrap();
        let edge = g.edge(r);
        rot[edge.tail] = vec![r];
        rot[edge.head] = vec![r];
    } else if active.len() >= 3 {
        let is_rep: Vec<bool> = (0..g.edge_count())
            .map(|e| {
                let edge = g.edge(e);
                rep[&(edge.tail.min(edge.head), edge.tail.max(edge.head))] == e
            })
            .collect();
        PathAddition::new(g, is_rep).run(&mut rot)?;
    }
    for (e, r) in parallels {
        let edge = g.edge(r);
        let pos = rot[edge.tail].iter().position(|&x| x == r).unwrap();
        rot[edge.tail].insert(pos + 1, e);
        let pos = rot[edge.head].iter().position(|&x| x == r).unwrap();
        rot[edge.head].insert(pos, e);
    }
    Some(rot)
}

struct PathAddition<'a> {
    g: &'a DiGraph,
    usable: Vec<bool>,
    edge_in: Vec<bool>,
    vertex_in: Vec<bool>,
}

enum Fragment {
    Chord(EdgeId),
    Component { attachments: Vec<VertexId>, vertices: Vec<VertexId> },
}

impl<'a> PathAddition<'a> {
    fn new(g: &'a DiGraph, usable: Vec<bool>) -> Self {
        PathAddition {
            g,
            usable,
            edge_in: vec![false; g.edge_count()],
            vertex_in: vec![false; g.vertex_count()],
        }
    }

    fn neighbours(&self, v: VertexId) -> impl Iterator<Item = (EdgeId, VertexId)> + '_ {
        self.g
            .incident(v)
            .iter()
            .filter(|&&e| self.usable[e])
            .map(move |&e| (e, self.g.edge(e).other(v)))
    }

    fn initial_cycle(&self) -> Option<Vec<EdgeId>> {
        let first = (0..self.g.edge_count()).find(|&e| self.usable[e])?;
        let edge = self.g.edge(first);
        // shortest path from head back to tail avoiding the first edge
        let n = self.g.vertex_count();
        let mut via: Vec<Option<EdgeId>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[edge.head] = true;
        let mut queue = VecDeque::from([edge.head]);
        while let Some(v) = queue.pop_front() {
            for (e, w) in self.neighbours(v) {
                if e == first || seen[w] {
                    continue;
                }
                seen[w] = true;
                via[w] = Some(e);
                queue.push_back(w);
            }
        }
        if !seen[edge.tail] {
            return None;
        }
        let mut back = Vec::new();
        let mut v = edge.tail;
        while v != edge.head {
            let e = via[v].unwrap();
            back.push(e);
            v = self.g.edge(e).other(v);
        }
        let mut cycle = vec![first];
        cycle.extend(back.into_iter().rev());
        Some(cycle)
    }

    fn run(mut self, rot: &mut Rotation) -> Option<()> {
        let g = self.g;
        let cycle = self.initial_cycle()?;
        // walk the cycle: first edge tail -> head, then the path back to the tail
        let mut v = g.edge(cycle[0]).tail;
        let k = cycle.len();
        for i in 0..k {
            let e = cycle[i];
            let prev = cycle[(i + k - 1) % k];
            rot[v] = vec![prev, e];
            self.vertex_in[v] = true;
            self.edge_in[e] = true;
            v = g.edge(e).other(v);
        }
        let total = self.usable.iter().filter(|&&u| u).count();
        let mut embedded = k;
        while embedded < total {
            let faces = self.faces(rot);
            let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); g.vertex_count()];
            for (f, walk) in faces.iter().enumerate() {
                for d in walk {
                    vertex_faces[d.origin(g)].push(f);
                }
            }
            let mut choice: Option<(Fragment, usize)> = None;
            for frag in self.fragments() {
                let atts: Vec<VertexId> = match &frag {
                    Fragment::Chord(e) => vec![g.edge(*e).tail, g.edge(*e).head],
                    Fragment::Component { attachments, .. } => attachments.clone(),
                };
                let admissible: Vec<usize> = vertex_faces[atts[0]]
                    .iter()
                    .copied()
                    .filter(|f| atts[1..].iter().all(|a| vertex_faces[*a].contains(f)))
                    .collect();
                match admissible.len() {
                    0 => return None,
                    1 => {
                        choice = Some((frag, admissible[0]));
                        break;
                    }
                    _ => {
                        if choice.is_none() {
                            choice = Some((frag, admissible[0]));
                        }
                    }
                }
            }
            let (frag, face) = choice.expect("unembedded edges imply a fragment");
            let path = self.fragment_path(&frag);
            self.insert_path(rot, &path, &faces[face]);
            embedded += path.len();
        }
        Some(())
    }

    fn faces(&self, rot: &Rotation) -> Vec<Vec<Dart>> {
        let g = self.g;
        let mut next = vec![Dart(usize::MAX); 2 * g.edge_count()];
        for (v, order) in rot.iter().enumerate() {
            for (i, &e) in order.iter().enumerate() {
                next[Dart::leaving(g, e, v).0] = Dart::leaving(g, order[(i + 1) % order.len()], v);
            }
        }
        let mut seen = vec![false; next.len()];
        let mut out = Vec::new();
        for e in 0..g.edge_count() {
            if !self.edge_in[e] {
                continue;
            }
            for start in [Dart::forward(e), Dart::backward(e)] {
                if seen[start.0] {
                    continue;
                }
                let mut walk = Vec::new();
                let mut d = start;
                while !seen[d.0] {
                    seen[d.0] = true;
                    walk.push(d);
                    d = next[d.reversed().0];
                }
                out.push(walk);
            }
        }
        out
    }

    fn fragments(&self) -> Vec<Fragment> {
        let g = self.g;
        let mut out = Vec::new();
        for e in 0..g.edge_count() {
            let edge = g.edge(e);
            if self.usable[e] && !self.edge_in[e] && self.vertex_in[edge.tail] && self.vertex_in[edge.head] {
                out.push(Fragment::Chord(e));
            }
        }
        let mut seen = vec![false; g.vertex_count()];
        for start in g.vertices() {
            if self.vertex_in[start] || seen[start] || g.degree(start) == 0 {
                continue;
            }
            seen[start] = true;
            let mut vertices = vec![start];
            let mut attachments = Vec::new();
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for (_, w) in self.neighbours(v) {
                    if self.vertex_in[w] {
                        if !attachments.contains(&w) {
                            attachments.push(w);
                        }
                    } else if !seen[w] {
                        seen[w] = true;
                        vertices.push(w);
                        stack.push(w);
                    }
                }
            }
            out.push(Fragment::Component { attachments, vertices });
        }
        out
    }

    /// Edges of a path through the fragment joining two distinct attachments,
    /// listed from one attachment to the other.
    fn fragment_path(&self, frag: &Fragment) -> Vec<EdgeId> {
        match frag {
            Fragment::Chord(e) => vec![*e],
            Fragment::Component { attachments, vertices } => {
                let g = self.g;
                let a = attachments[0];
                let mut inside = vec![false; g.vertex_count()];
                for &v in vertices {
                    inside[v] = true;
                }
                let mut via: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
                let mut queue = VecDeque::new();
                for (e, w) in self.neighbours(a) {
                    if inside[w] && !via.contains_key(&w) {
                        via.insert(w, e);
                        queue.push_back(w);
                    }
                }
                while let Some(v) = queue.pop_front() {
                    for (e, w) in self.neighbours(v) {
                        if self.vertex_in[w] {
                            if w != a {
                                let mut path = vec![e];
                                let mut x = v;
                                loop {
                                    let pe = via[&x];
                                    path.push(pe);
                                    x = g.edge(pe).other(x);
                                    if x == a {
                                        break;
                                    }
                                }
                                path.reverse();
                                return path;
                            }
                        } else if let std::collections::btree_map::Entry::Vacant(slot) = via.entry(w) {
                            slot.insert(e);
                            queue.push_back(w);
                        }
                    }
                }
                unreachable!("fragment of a biconnected graph has two attachments")
            }
        }
    }

    fn insert_path(&mut self, rot: &mut Rotation, path: &[EdgeId], face: &[Dart]) {
        let g = self.g;
        let first = g.edge(path[0]);
        // a chord starts at its tail, a longer path at its only embedded first endpoint
        let start = if self.vertex_in[first.tail] { first.tail } else { first.head };
        let mut v = start;
        let mut ends = vec![(start, path[0])];
        for (i, &e) in path.iter().enumerate() {
            let w = g.edge(e).other(v);
            if i + 1 < path.len() {
                rot[w] = vec![e, path[i + 1]];
                self.vertex_in[w] = true;
            } else {
                ends.push((w, e));
            }
            self.edge_in[e] = true;
            v = w;
        }
        for (x, e) in ends {
            // corner of `face` at x: arriving dart followed by leaving dart
            let k = face.len();
            let i = (0..k).find(|&i| face[i].origin(g) == x).expect("endpoint lies on face");
            let incoming = face[(i + k - 1) % k].edge();
            let pos = rot[x].iter().position(|&y| y == incoming).unwrap();
            rot[x].insert(pos + 1, e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::is_planar_embedding;

    fn undirected(n: usize, pairs: &[(usize, usize)]) -> DiGraph {
        DiGraph::from_edges(n, pairs).unwrap()
    }

    #[test]
    fn k4_is_planar() {
        let g = undirected(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let rot = planar_rotation(&g).unwrap();
        assert!(is_planar_embedding(&g, &rot));
    }

    #[test]
    fn k5_and_k33_are_not() {
        let mut k5 = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                k5.push((a, b));
            }
        }
        assert!(planar_rotation(&undirected(5, &k5)).is_none());
        let mut k33 = Vec::new();
        for a in 0..3 {
            for b in 3..6 {
                k33.push((a, b));
            }
        }
        assert!(planar_rotation(&undirected(6, &k33)).is_none());
    }

    #[test]
    fn bundles_and_parallels() {
        let g = undirected(2, &[(0, 1), (0, 1), (0, 1)]);
        let rot = planar_rotation(&g).unwrap();
        assert!(is_planar_embedding(&g, &rot));
        let g = undirected(3, &[(0, 1), (1, 2), (0, 2), (0, 2)]);
        let rot = planar_rotation(&g).unwrap();
        assert!(is_planar_embedding(&g, &rot));
    }

    #[test]
    fn wheel_and_cube() {
        // wheel with 6 spokes
        let mut w = Vec::new();
        for i in 1..=6 {
            w.push((0, i));
            w.push((i, i % 6 + 1));
        }
        let g = undirected(7, &w);
        assert!(is_planar_embedding(&g, &planar_rotation(&g).unwrap()));
        let cube = [
            (0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7),
        ];
        let g = undirected(8, &cube);
        assert!(is_planar_embedding(&g, &planar_rotation(&g).unwrap()));
    }
}
