//! One line per acceptance criterion, run with `cargo test --test acceptance`.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use uptree::digraph::DiGraph;
use uptree::embedding::Embedding;
use uptree::oracle::{enumerate_planar, enumerate_upward_planar, random_upward_instance, Census, DEFAULT_BUDGET};
use uptree::uptree::markers::MarkerKind;
use uptree::uptree::{build_up_tree, build_up_tree_shuffled, bundle_order_is_upward, is_upward_planar, UpTree};

/// Generated graphs on top of the named ones.
const GENERATED: usize = 200;
/// Shuffled decomposition orders per graph and root edge.
const SHUFFLES: u64 = 10;
/// Largest bundle whose orders are all composed.
const MAX_BUNDLE: usize = 4;
const MIN_PARTIAL_INSTANCES: usize = 300;
/// Wall-clock limit for the bijection and the extension runs.
const CORPUS_LIMIT: Duration = Duration::from_secs(300);
const SCALE_EDGES: usize = 10_000;
const SCALE_LIMIT: Duration = Duration::from_secs(10);
const MAX_DOUBLING_RATIO: f64 = 5.0;

struct Entry {
    name: String,
    graph: DiGraph,
    census: Census,
    planar: Vec<Embedding>,
}

fn corpus() -> Vec<Entry> {
    let named = common::named().into_iter().map(|(n, g)| (n.to_string(), g));
    let generated = common::generated(GENERATED).into_iter().map(|(s, g)| (format!("seed {s}"), g));
    named
        .chain(generated)
        .map(|(name, graph)| Entry {
            census: enumerate_upward_planar(&graph, DEFAULT_BUDGET).unwrap(),
            planar: enumerate_planar(&graph, DEFAULT_BUDGET).unwrap(),
            name,
            graph,
        })
        .collect()
}

fn roots(g: &DiGraph) -> Vec<usize> {
    g.out_edges(g.single_source().unwrap()).collect()
}

fn feasible(g: &DiGraph, e: usize) -> Option<UpTree> {
    build_up_tree(g, e).unwrap().feasible()
}

type Verdict = Result<String, String>;

fn bijection(corpus: &[Entry]) -> Verdict {
    let start = Instant::now();
    let mut buckets = 0;
    for c in corpus {
        for e in roots(&c.graph) {
            if common::represented(&c.graph, e) != c.census.bucket(e) {
                return Err(format!("{} root {e}: embedding sets differ", c.name));
            }
            buckets += 1;
        }
    }
    let took = start.elapsed();
    if took > CORPUS_LIMIT {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("{} graphs, {buckets} root edges, {took:.1?}", corpus.len()))
}

fn decision(corpus: &[Entry]) -> Verdict {
    let mut negative = 0;
    for c in corpus {
        let any = roots(&c.graph).into_iter().any(|e| feasible(&c.graph, e).is_some());
        let oracle = c.census.total() > 0;
        if any != oracle || is_upward_planar(&c.graph).unwrap() != oracle {
            return Err(format!("{}: trees say {any}, oracle says {oracle}", c.name));
        }
        negative += usize::from(!oracle);
    }
    Ok(format!("{} graphs, {negative} not upward planar", corpus.len()))
}

fn order_independence(corpus: &[Entry]) -> Verdict {
    let mut runs = 0;
    for c in corpus {
        for e in roots(&c.graph) {
            let base = feasible(&c.graph, e).map(|u| u.canonical_encoding());
            for seed in 0..SHUFFLES {
                let other = build_up_tree_shuffled(&c.graph, e, seed).unwrap().feasible();
                if other.map(|u| u.canonical_encoding()) != base {
                    return Err(format!("{} root {e} seed {seed}", c.name));
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} shuffled builds"))
}

fn marker_preservation(corpus: &[Entry]) -> Verdict {
    let mut sides = 0;
    for c in corpus {
        for e in roots(&c.graph) {
            let up = UpTree::marked(&c.graph, e).map_err(|x| x.to_string())?;
            for &arc in up.tree.arcs.keys() {
                for child in [true, false] {
                    let side = common::marked_side(&c.graph, &up, arc, child);
                    common::dominance_preserved(&c.graph, &side).map_err(|x| format!("{}: {x}", c.name))?;
                    common::nested_roles_preserved(&c.graph, &up, arc, child)
                        .map_err(|x| format!("{}: {x}", c.name))?;
                    sides += 1;
                }
            }
        }
    }
    Ok(format!("{sides} marked sides"))
}

fn bundle_semantics(corpus: &[Entry]) -> Verdict {
    let mut orders = 0;
    for c in corpus {
        for e in roots(&c.graph) {
            if let Some(up) = feasible(&c.graph, e) {
                orders += common::bundle_orders_upward(&c.graph, &up, MAX_BUNDLE)
                    .map_err(|x| format!("{} root {e}: {x}", c.name))?;
            }
        }
    }
    use MarkerKind::*;
    let kinds = [Mt, Ms, Muv, Muvt];
    let mut split = 0;
    for parent in [Mt, Muv, Ms] {
        for k in 3..=MAX_BUNDLE {
            for code in 0..kinds.len().pow(k as u32) {
                let children: Vec<MarkerKind> =
                    (0..k).map(|i| kinds[code / kinds.len().pow(i as u32) % kinds.len()]).collect();
                let muv: Vec<usize> = (0..k).filter(|&i| children[i] == Muv).collect();
                let between = muv.windows(2).any(|w| (w[0]..w[1]).any(|i| matches!(children[i], Mt | Ms)));
                if between {
                    if bundle_order_is_upward(parent, &children) {
                        return Err(format!("{parent:?} {children:?} accepted"));
                    }
                    split += 1;
                }
            }
        }
    }
    Ok(format!("{orders} corpus orders upward, {split} split Muv orders rejected"))
}

fn orientation_semantics(corpus: &[Entry]) -> Verdict {
    let (mut rev, mut fixed) = (0, 0);
    for c in corpus {
        for e in roots(&c.graph) {
            if let Some(up) = feasible(&c.graph, e) {
                let (r, f) = common::orientations_behave(&c.graph, &up).map_err(|x| format!("{}: {x}", c.name))?;
                rev += r;
                fixed += f;
            }
        }
    }
    Ok(format!("{rev} reversible, {fixed} fixed R-nodes"))
}

fn extension(corpus: &[Entry]) -> Verdict {
    let start = Instant::now();
    let (mut total, mut negative) = (0, 0);
    for (i, c) in corpus.iter().enumerate() {
        for inst in common::partial_instances(&c.graph, &c.census, &c.planar, i as u64) {
            if !common::extension_agrees(&c.graph, &c.census, &inst).map_err(|x| format!("{}: {x}", c.name))? {
                negative += 1;
            }
            total += 1;
        }
    }
    let took = start.elapsed();
    if total < MIN_PARTIAL_INSTANCES {
        return Err(format!("only {total} instances"));
    }
    if took > CORPUS_LIMIT {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("{total} instances, {negative} without extension, {took:.1?}"))
}

fn st_graphs(corpus: &[Entry]) -> Verdict {
    let mut checked = 0;
    for c in corpus.iter().filter(|c| c.graph.sinks().len() == 1) {
        let g = &c.graph;
        let (s, t) = (g.sources()[0], g.sinks()[0]);
        let outside = |emb: &&Embedding| {
            let faces = emb.faces(g);
            let h = emb.outer_face(&faces);
            faces.contains_vertex(g, h, s) && faces.contains_vertex(g, h, t)
        };
        let upward: BTreeSet<&Embedding> = c.census.iter().filter(outside).collect();
        let planar: BTreeSet<&Embedding> = c.planar.iter().filter(outside).collect();
        if upward != planar {
            return Err(format!("{}: {} upward vs {} planar", c.name, upward.len(), planar.len()));
        }
        checked += 1;
    }
    Ok(format!("{checked} st-graphs"))
}

fn timed_build(m: usize) -> Duration {
    let g = random_upward_instance(m, 1);
    let e = roots(&g)[0];
    let start = Instant::now();
    let up = build_up_tree(&g, e).unwrap();
    let took = start.elapsed();
    assert!(up.feasible().is_some(), "generated instance must be upward planar");
    took
}

fn scaling() -> Verdict {
    let half = timed_build(SCALE_EDGES / 2);
    let full = timed_build(SCALE_EDGES);
    let double = timed_build(2 * SCALE_EDGES);
    let ratio = double.as_secs_f64() / full.as_secs_f64();
    let detail = format!("{SCALE_EDGES} edges in {full:.2?} ({half:.2?} at half, {double:.2?} at double, ratio {ratio:.2})");
    if full > SCALE_LIMIT || ratio > MAX_DOUBLING_RATIO {
        Err(detail)
    } else {
        Ok(detail)
    }
}

fn main() -> ExitCode {
    let corpus = corpus();
    let criteria: [(&str, &dyn Fn() -> Verdict); 9] = [
        ("bijection with the census", &|| bijection(&corpus)),
        ("upward planarity decision", &|| decision(&corpus)),
        ("decomposition order independence", &|| order_independence(&corpus)),
        ("markers preserve dominance and roles", &|| marker_preservation(&corpus)),
        ("bundle order semantics", &|| bundle_semantics(&corpus)),
        ("orientation semantics", &|| orientation_semantics(&corpus)),
        ("extension matches brute force", &|| extension(&corpus)),
        ("st-graph census equality", &|| st_graphs(&corpus)),
        ("scaling", &scaling),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
