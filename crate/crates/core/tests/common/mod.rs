#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uptree::decomposition::{mirror_skel, ArcId, NodeClass, SkelTag};
use uptree::digraph::{vertex_role, DiGraph, EdgeId, Reachability, VertexId, VertexRole};
use uptree::embedding::{is_upward, leftmost_edge_at_source, Embedding};
use uptree::extension::{check_extends, solve_extension, PartialInstance};
use uptree::oracle::{first_extending, random_instance, rotation_system_count, Census, DEFAULT_BUDGET};
use uptree::uptree::{build_up_tree, Freedom, Outcome, UpTree};

pub fn diamond() -> DiGraph {
    DiGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
}

pub fn theta3() -> DiGraph {
    DiGraph::from_edges(5, &[(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)]).unwrap()
}

pub fn k4st() -> DiGraph {
    DiGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
}

/// Single source, no upward planar embedding: every face touching the source
/// leaves a sink trapped below another vertex.
pub fn not_upward() -> DiGraph {
    DiGraph::from_edges(
        8,
        &[(0, 2), (2, 4), (2, 5), (4, 5), (4, 3), (5, 3), (5, 6), (4, 7), (3, 7), (3, 1), (3, 6), (0, 1), (2, 3)],
    )
    .unwrap()
}

const CORPUS: usize = 250;

/// Generated single-source biconnected DAGs with 4 to 8 vertices whose oracle
/// census fits the default budget, paired with their seeds.
pub fn generated(count: usize) -> Vec<(u64, DiGraph)> {
    static CACHE: OnceLock<Vec<(u64, DiGraph)>> = OnceLock::new();
    assert!(count <= CORPUS);
    let all = CACHE.get_or_init(|| {
        let mut out = Vec::new();
        let mut seed = 0u64;
        while out.len() < CORPUS {
            let n = 4 + (seed % 5) as usize;
            let m = n + 1 + (seed as usize / 5) % (n + 1);
            if let Ok(g) = random_instance(n, m, seed) {
                if rotation_system_count(&g) <= DEFAULT_BUDGET as u128 {
                    out.push((seed, g));
                }
            }
            seed += 1;
        }
        out
    });
    all[..count].to_vec()
}

pub fn named() -> Vec<(&'static str, DiGraph)> {
    vec![("diamond", diamond()), ("theta3", theta3()), ("k4st", k4st()), ("not-upward", not_upward())]
}

/// Sorted canonical embeddings represented by the UP-tree for `root`, empty when
/// infeasible.
pub fn represented(g: &DiGraph, root: EdgeId) -> Vec<Embedding> {
    match build_up_tree(g, root).unwrap() {
        Outcome::Feasible(up) => {
            let mut v: Vec<Embedding> = up.enumerate_embeddings(g).map(|e| e.canonical()).collect();
            v.sort();
            v
        }
        Outcome::Infeasible { .. } => Vec::new(),
    }
}

/// One side of an arc with the other side replaced by its marker gadget.
pub struct MarkedSide {
    pub graph: DiGraph,
    /// Graph vertex of each original vertex on this side.
    pub local: BTreeMap<VertexId, VertexId>,
    /// Real edges of this side.
    pub edges: BTreeSet<EdgeId>,
    /// Ids of the gadget edges in `graph`.
    pub gadget_edges: Vec<EdgeId>,
}

/// Real edges on the side of `arc` that contains node `n`.
pub fn side_edges(up: &UpTree, arc: ArcId, n: usize) -> BTreeSet<EdgeId> {
    let other = up.tree.arcs[&arc].other(n);
    up.tree
        .pertinent_graph(n, other)
        .unwrap()
        .iter()
        .filter_map(|e| match e.tag {
            SkelTag::Real(x) => Some(x),
            SkelTag::Virtual(_) => None,
        })
        .collect()
}

/// The child side (`child = true`) or parent side of `arc`, completed by the marker
/// that stands for the opposite side.
pub fn marked_side(g: &DiGraph, up: &UpTree, arc: ArcId, child: bool) -> MarkedSide {
    let t = &up.tree.arcs[&arc];
    let r = up.rooted();
    let child_node = if r.parent_arc(t.nodes[0]) == Some(arc) { t.nodes[0] } else { t.nodes[1] };
    let here = if child { child_node } else { t.other(child_node) };
    let edges = side_edges(up, arc, here);
    let kind = if child { up.markers[&arc].in_child } else { up.markers[&arc].in_parent };
    let mut h = DiGraph::new(0);
    let mut local = BTreeMap::new();
    let mut id = |h: &mut DiGraph, v: VertexId| *local.entry(v).or_insert_with(|| h.add_vertex());
    for &e in &edges {
        let x = g.edge(e);
        let (a, b) = (id(&mut h, x.tail), id(&mut h, x.head));
        h.add_edge(a, b).unwrap();
    }
    let gadget = kind.gadget();
    let mut ids = vec![id(&mut h, t.poles.0), id(&mut h, t.poles.1)];
    for _ in 0..gadget.internal {
        ids.push(h.add_vertex());
    }
    let mut gadget_edges = Vec::new();
    for &(a, b) in &gadget.edges {
        gadget_edges.push(h.add_edge(ids[a], ids[b]).unwrap());
    }
    MarkedSide {
        graph: h,
        local,
        edges,
        gadget_edges,
    }
}

/// Dominance among original vertices is the same in the marked side and in `g`.
pub fn dominance_preserved(g: &DiGraph, side: &MarkedSide) -> Result<(), String> {
    let rg = Reachability::new(g).unwrap();
    let rh = Reachability::new(&side.graph).map_err(|e| e.to_string())?;
    for (&x, &lx) in &side.local {
        for (&y, &ly) in &side.local {
            if x != y && rg.reaches(x, y) != rh.reaches(lx, ly) {
                return Err(format!("{x} -> {y}: graph {} side {}", rg.reaches(x, y), rh.reaches(lx, ly)));
            }
        }
    }
    Ok(())
}

fn role_in(g: &DiGraph, v: VertexId, sub: &[EdgeId]) -> VertexRole {
    vertex_role(g, v, sub).unwrap()
}

/// For every other arc inside the marked side, the role of its dominated pole on the
/// part that holds the gadget agrees with its role on the corresponding part of `g`:
/// in full on the part away from the root edge, as source or not on the part that
/// contains it.
pub fn nested_roles_preserved(g: &DiGraph, up: &UpTree, arc: ArcId, child: bool) -> Result<(), String> {
    let side = marked_side(g, up, arc, child);
    let local_edge: BTreeMap<EdgeId, EdgeId> = {
        // edges of the side were added first, in id order
        side.edges.iter().enumerate().map(|(i, &e)| (e, i)).collect()
    };
    for (&b, t) in &up.tree.arcs {
        if b == arc {
            continue;
        }
        let [p, q] = t.nodes;
        let (ep, eq) = (side_edges(up, b, p), side_edges(up, b, q));
        // the part of b not containing `arc` must lie inside the side
        let (far, near) = if ep.is_subset(&side.edges) && !eq.is_subset(&side.edges) {
            (ep, eq)
        } else if eq.is_subset(&side.edges) && !ep.is_subset(&side.edges) {
            (eq, ep)
        } else {
            continue;
        };
        let near_in_side: Vec<EdgeId> = side
            .edges
            .iter()
            .filter(|e| !far.contains(e))
            .map(|e| local_edge[e])
            .chain(side.gadget_edges.iter().copied())
            .collect();
        let near_in_g: Vec<EdgeId> = near.iter().copied().collect();
        // towards the root edge only being a source is preserved
        let towards_root = near.contains(&up.root_edge);
        // the dominated pole is the one whose role selects markers
        let pole = t.poles.1;
        let want = role_in(g, pole, &near_in_g);
        let got = role_in(&side.graph, side.local[&pole], &near_in_side);
        let differ = if towards_root {
            (want == VertexRole::Source) != (got == VertexRole::Source)
        } else {
            want != got
        };
        if differ {
            return Err(format!("arc {b} pole {pole}: graph {want:?} side {got:?}"));
        }
    }
    Ok(())
}

pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
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

fn upward_with_root(g: &DiGraph, up: &UpTree, emb: &Embedding) -> bool {
    is_upward(g, emb).unwrap() && leftmost_edge_at_source(g, emb).unwrap() == up.root_edge
}

/// Every order of every permutable bundle with at most `max_k` permuted children
/// composes to an upward embedding with the root edge leftmost. Returns the number
/// of orders checked.
pub fn bundle_orders_upward(g: &DiGraph, up: &UpTree, max_k: usize) -> Result<usize, String> {
    let mut checked = 0;
    for (&n, &f) in &up.freedom {
        if f != Freedom::Permutable {
            continue;
        }
        let slots = up.permuted_slots(n);
        if slots.len() > max_k {
            continue;
        }
        for order in permutations(&slots) {
            let overrides = BTreeMap::from([(n, up.bundle_order_rotation(n, &order))]);
            let emb = up.compose_with(g, &overrides).map_err(|e| e.to_string())?;
            if !upward_with_root(g, up, &emb) {
                return Err(format!("node {n} order {order:?} is not upward"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Reversible nodes compose upward in both orientations. Reflecting the whole
/// subtree of a fixed R-node breaks upwardness. Returns (reversible, fixed) counts.
pub fn orientations_behave(g: &DiGraph, up: &UpTree) -> Result<(usize, usize), String> {
    let (mut rev, mut fixed) = (0, 0);
    let stored = up.absolute_rotations(&BTreeMap::new());
    for (&n, &f) in &up.freedom {
        match f {
            Freedom::Reversible => {
                for rot in [up.stored_rotation(n).clone(), mirror_skel(up.stored_rotation(n))] {
                    let emb = up.compose_with(g, &BTreeMap::from([(n, rot)])).map_err(|e| e.to_string())?;
                    if !upward_with_root(g, up, &emb) {
                        return Err(format!("reversible node {n} has a non-upward orientation"));
                    }
                }
                rev += 1;
            }
            Freedom::Fixed if up.class(n) == NodeClass::R => {
                let mut flipped = stored.clone();
                for (&m, rot) in &stored {
                    if up.rooted().in_subtree(n, m) {
                        flipped.insert(m, mirror_skel(rot));
                    }
                }
                let upward = up
                    .compose_absolute(g, &flipped)
                    .is_ok_and(|emb| upward_with_root(g, up, &emb));
                if upward {
                    return Err(format!("fixed node {n} is upward when reflected"));
                }
                fixed += 1;
            }
            _ => {}
        }
    }
    Ok((rev, fixed))
}

/// A random subset of the edges, each kept with probability `p`.
fn random_subset(g: &DiGraph, rng: &mut ChaCha8Rng, p: f64) -> BTreeSet<EdgeId> {
    (0..g.edge_count()).filter(|_| rng.gen_bool(p)).collect()
}

/// Partial instances for `g`: restrictions of census entries, the same with the
/// order at one vertex scrambled, and restrictions of planar embeddings that need
/// not be upward. Instances failing validation are dropped.
pub fn partial_instances(g: &DiGraph, census: &Census, planar: &[Embedding], seed: u64) -> Vec<PartialInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let entries: Vec<&Embedding> = census.iter().collect();
    if let Some(&emb) = entries.choose(&mut rng) {
        let h = random_subset(g, &mut rng, 0.5);
        out.push(PartialInstance::from_embedding(g, emb, h));
    }
    for _ in 0..2 {
        let Some(&emb) = entries.choose(&mut rng) else { break };
        let h = random_subset(g, &mut rng, 0.8);
        let inst = PartialInstance::from_embedding(g, emb, h);
        let mut scrambled = inst.h_rotation.clone();
        let busy: Vec<VertexId> = scrambled.iter().filter(|(_, o)| o.len() >= 3).map(|(&v, _)| v).collect();
        if let Some(&v) = busy.choose(&mut rng) {
            let order = scrambled.get_mut(&v).unwrap();
            // an odd permutation of three edges always changes the cyclic order
            order.swap(0, 1);
            if let Ok(x) = PartialInstance::new(g, inst.h_edges.clone(), scrambled) {
                out.push(x);
            }
        }
    }
    for _ in 0..2 {
        if let Some(emb) = planar.choose(&mut rng) {
            let p = rng.gen_range(0.5..1.0);
            let h = random_subset(g, &mut rng, p);
            out.push(PartialInstance::from_embedding(g, emb, h));
        }
    }
    out
}

/// The solver agrees with the oracle on `inst`, and any embedding it returns is
/// upward and extends `inst`.
pub fn extension_agrees(g: &DiGraph, census: &Census, inst: &PartialInstance) -> Result<bool, String> {
    let got = solve_extension(g, inst).map_err(|e| e.to_string())?;
    let want = first_extending(g, census, inst).is_some();
    if got.is_some() != want {
        return Err(format!("solver {} oracle {want} for {inst:?}", got.is_some()));
    }
    if let Some(emb) = &got {
        if !check_extends(g, emb, inst) || !is_upward(g, emb).unwrap() {
            return Err(format!("returned embedding is not a valid extension of {inst:?}"));
        }
    }
    Ok(want)
}
