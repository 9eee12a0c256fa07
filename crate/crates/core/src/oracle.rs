//! Brute-force ground truth: exhaustive enumeration of rotation systems, plus
//! seeded random instance generators.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::digraph::{validate_input, DiGraph, EdgeId, InputViolation, Reachability, VertexId};
use crate::embedding::{candidates_with_faces, face_walks, Embedding, Rotation};
use crate::extension::{check_extends, PartialInstance};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{needed} rotation systems exceed the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("invalid input: {0:?}")]
    InvalidInput(Vec<InputViolation>),
}

/// Upward planar embeddings bucketed by their leftmost edge at the source.
/// Each bucket is sorted and holds canonical embeddings.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Census {
    pub buckets: BTreeMap<EdgeId, Vec<Embedding>>,
}

impl Census {
    pub fn total(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn bucket(&self, e: EdgeId) -> &[Embedding] {
        self.buckets.get(&e).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Embedding> {
        self.buckets.values().flatten()
    }
}

/// Number of rotation systems, the product of `(deg(v) - 1)!`.
pub fn rotation_system_count(g: &DiGraph) -> u128 {
    g.vertices()
        .map(|v| (1..g.degree(v).max(1) as u128).product::<u128>())
        .fold(1u128, |acc, k| acc.saturating_mul(k))
}

/// Calls `f` on every rotation system of `g`. Each vertex's list starts with its
/// smallest incident edge.
pub fn for_each_rotation<F: FnMut(&Rotation)>(g: &DiGraph, budget: u64, mut f: F) -> Result<(), OracleError> {
    let needed = rotation_system_count(g);
    if needed > budget as u128 {
        return Err(OracleError::BudgetExceeded { needed, budget });
    }
    let choices: Vec<Vec<Vec<EdgeId>>> = g
        .vertices()
        .map(|v| {
            let inc = g.incident(v);
            match inc.split_first() {
                None => vec![Vec::new()],
                Some((&first, rest)) => permutations(rest)
                    .into_iter()
                    .map(|p| std::iter::once(first).chain(p).collect())
                    .collect(),
            }
        })
        .collect();
    let mut index = vec![0usize; choices.len()];
    let mut rot: Rotation = choices.iter().map(|c| c[0].clone()).collect();
    loop {
        f(&rot);
        let mut v = 0;
        loop {
            if v == choices.len() {
                return Ok(());
            }
            index[v] += 1;
            if index[v] < choices[v].len() {
                rot[v].clone_from(&choices[v][index[v]]);
                break;
            }
            index[v] = 0;
            rot[v].clone_from(&choices[v][0]);
            v += 1;
        }
    }
}

fn permutations(items: &[EdgeId]) -> Vec<Vec<EdgeId>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Every upward planar embedding of `g`, keyed by the leftmost edge at the source.
pub fn enumerate_upward_planar(g: &DiGraph, budget: u64) -> Result<Census, OracleError> {
    let violations = validate_input(g);
    if !violations.is_empty() {
        return Err(OracleError::InvalidInput(violations));
    }
    let s = g.single_source().expect("validated");
    let mut census = Census::default();
    for e in g.out_edges(s) {
        census.buckets.insert(e, Vec::new());
    }
    for_each_rotation(g, budget, |rot| {
        let Ok(faces) = face_walks(g, rot) else { return };
        let Ok(cands) = candidates_with_faces(g, rot, &faces) else { return };
        for h in cands {
            let leftmost = faces
                .walk(h)
                .iter()
                .find(|d| d.origin(g) == s)
                .expect("candidate faces touch the source")
                .edge();
            let emb = Embedding {
                rotation: rot.clone(),
                outer: faces.key(h),
            };
            census.buckets.get_mut(&leftmost).unwrap().push(emb.canonical());
        }
    })?;
    for bucket in census.buckets.values_mut() {
        bucket.sort();
    }
    Ok(census)
}

/// Every planar embedding (rotation system and outer face) of a connected graph.
pub fn enumerate_planar(g: &DiGraph, budget: u64) -> Result<Vec<Embedding>, OracleError> {
    let mut out = Vec::new();
    for_each_rotation(g, budget, |rot| {
        let Ok(faces) = face_walks(g, rot) else { return };
        if g.vertex_count() + faces.len() != g.edge_count() + 2 {
            return;
        }
        for f in 0..faces.len() {
            out.push(
                Embedding {
                    rotation: rot.clone(),
                    outer: faces.key(f),
                }
                .canonical(),
            );
        }
    })?;
    out.sort();
    Ok(out)
}

/// First census entry that extends the partial embedding.
pub fn brute_extension(g: &DiGraph, inst: &PartialInstance, budget: u64) -> Result<Option<Embedding>, OracleError> {
    let census = enumerate_upward_planar(g, budget)?;
    Ok(first_extending(g, &census, inst))
}

/// First entry of an existing census that extends the partial embedding.
pub fn first_extending(g: &DiGraph, census: &Census, inst: &PartialInstance) -> Option<Embedding> {
    census.iter().find(|emb| check_extends(g, emb, inst)).cloned()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("need at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("no valid instance found after {0} attempts")]
    GenerationFailed(usize),
}

const ATTEMPTS: usize = 64;

/// A biconnected single-source DAG with `n` vertices and about `m` edges, grown from a
/// cycle through the source (vertex 0) by attaching ears between existing vertices.
/// An ear is either a directed path or a path rising from both ends to a new sink.
pub fn random_instance(n: usize, m: usize, seed: u64) -> Result<DiGraph, GenerationError> {
    if n < 3 {
        return Err(GenerationError::TooFewVertices(n));
    }
    let max_edges = n * (n - 1) / 2;
    let m = m.clamp(n, max_edges);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ATTEMPTS {
        if let Some(g) = try_ears(n, m, &mut rng) {
            if validate_input(&g).is_empty() {
                return Ok(g);
            }
        }
    }
    Err(GenerationError::GenerationFailed(ATTEMPTS))
}

fn try_ears(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Option<DiGraph> {
    let ears = m - n;
    let cycle_len = if ears == 0 { n } else { rng.gen_range(3..=n) };
    let mut spare = n - cycle_len;
    let mut inner = vec![0usize; ears];
    while spare > 0 {
        inner[rng.gen_range(0..ears)] += 1;
        spare -= 1;
    }
    let mut g = DiGraph::new(cycle_len);
    // cycle 0 -> 1 -> ... -> t <- ... <- 0 with the sink t somewhere in the middle
    let t = rng.gen_range(1..cycle_len - 1);
    for v in 0..t {
        g.add_edge(v, v + 1).ok()?;
    }
    let mut prev = 0;
    for v in t + 1..cycle_len {
        g.add_edge(prev, v).ok()?;
        prev = v;
    }
    g.add_edge(prev, t).ok()?;
    for k in inner {
        attach_ear(&mut g, k, rng)?;
    }
    Some(g)
}

fn attach_ear(g: &mut DiGraph, k: usize, rng: &mut ChaCha8Rng) -> Option<()> {
    let n = g.vertex_count();
    let adjacent: BTreeSet<(VertexId, VertexId)> =
        g.edges().iter().map(|e| (e.tail.min(e.head), e.tail.max(e.head))).collect();
    let reach = Reachability::new(g).ok()?;
    let s = 0;
    let with_sink = k >= 1 && rng.gen_bool(0.5);
    for _ in 0..200 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        if with_sink {
            let peak = rng.gen_range(0..k);
            let fresh: Vec<VertexId> = (0..k).map(|_| g.add_vertex()).collect();
            let mut prev = a;
            for &x in &fresh[..=peak] {
                g.add_edge(prev, x).ok()?;
                prev = x;
            }
            let mut prev = b;
            for &x in fresh[peak..].iter().rev() {
                g.add_edge(prev, x).ok()?;
                prev = x;
            }
            return Some(());
        }
        if b == s || reach.reaches(b, a) || (k == 0 && adjacent.contains(&(a.min(b), a.max(b)))) {
            continue;
        }
        let mut prev = a;
        for _ in 0..k {
            let x = g.add_vertex();
            g.add_edge(prev, x).ok()?;
            prev = x;
        }
        g.add_edge(prev, b).ok()?;
        return Some(());
    }
    None
}

/// A large upward planar single-source DAG with at least `m` edges. Starting from a
/// 4-cycle, random edges `(a, b)` receive a directed detour, a new sink hanging off
/// both ends, or a triconnected st-block inserted beside them; each step keeps the
/// graph upward planar.
pub fn random_upward_instance(m: usize, seed: u64) -> DiGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DiGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
    while g.edge_count() < m {
        let e = rng.gen_range(0..g.edge_count());
        let (a, b) = (g.edge(e).tail, g.edge(e).head);
        match rng.gen_range(0..3) {
            0 => {
                let len = rng.gen_range(1..=3);
                let mut prev = a;
                for _ in 0..len {
                    let x = g.add_vertex();
                    g.add_edge(prev, x).unwrap();
                    prev = x;
                }
                g.add_edge(prev, b).unwrap();
            }
            1 => {
                // the sink sits inside the face between the detour and the edge
                let y = g.add_vertex();
                let x = g.add_vertex();
                for (t, h) in [(a, y), (y, b), (a, x), (y, x)] {
                    g.add_edge(t, h).unwrap();
                }
            }
            _ => {
                let p = g.add_vertex();
                let q = g.add_vertex();
                for (t, h) in [(a, p), (a, q), (p, q), (p, b), (q, b)] {
                    g.add_edge(t, h).unwrap();
                }
            }
        }
    }
    g
}

/// Relabels vertices by `perm` (old id -> new id), keeping edge ids.
pub fn relabel(g: &DiGraph, perm: &[VertexId]) -> DiGraph {
    let mut h = DiGraph::new(g.vertex_count());
    for e in g.edges() {
        h.add_edge(perm[e.tail], perm[e.head]).unwrap();
    }
    h
}

/// A random permutation of `0..n`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> DiGraph {
        DiGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn diamond_census() {
        let c = enumerate_upward_planar(&diamond(), DEFAULT_BUDGET).unwrap();
        assert_eq!(c.buckets.len(), 2);
        assert!(c.buckets.values().all(|b| b.len() == 1));
    }

    #[test]
    fn theta_census() {
        let g = DiGraph::from_edges(5, &[(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)]).unwrap();
        let c = enumerate_upward_planar(&g, DEFAULT_BUDGET).unwrap();
        assert_eq!(c.buckets.len(), 3);
        assert!(c.buckets.values().all(|b| b.len() == 2));
    }

    #[test]
    fn budget_guard() {
        let g = DiGraph::from_edges(5, &[(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)]).unwrap();
        assert!(matches!(
            enumerate_upward_planar(&g, 1),
            Err(OracleError::BudgetExceeded { needed: 4, budget: 1 })
        ));
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        for seed in 0..50 {
            let g = random_instance(7, 10, seed).unwrap();
            assert!(validate_input(&g).is_empty());
            assert_eq!(g.vertex_count(), 7);
            assert_eq!(g, random_instance(7, 10, seed).unwrap());
        }
        let g = random_instance(4, 4, 1).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (4, 4));
    }

    #[test]
    fn upward_generator_is_valid() {
        let g = random_upward_instance(300, 7);
        assert!(validate_input(&g).is_empty());
        assert!(g.edge_count() >= 300);
    }
}
