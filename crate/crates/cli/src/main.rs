//! Command line front end: decision, tree export, counting and extension.
//!
//! Exit codes: 0 yes, 1 no, 2 input error, 3 oracle disagreement.

mod export;
mod input;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use uptree::digraph::{DiGraph, EdgeId};
use uptree::embedding::Embedding;
use uptree::extension::solve_extension;
use uptree::oracle::{brute_extension, enumerate_upward_planar, random_instance, DEFAULT_BUDGET};
use uptree::uptree::{build_up_tree, Outcome};

use input::{parse_partial, resolve_root, GraphFile};

#[derive(Parser)]
#[command(name = "uptree", version, about = "Upward planar embeddings of single-source digraphs")]
struct Cli {
    /// Largest number of rotation systems the brute-force oracle may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Report feasibility for every edge leaving the source.
    Check { graph: PathBuf },
    /// Dump the UP-tree for the root edge.
    Uptree {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Root edge, overriding the file's `root` line.
        #[arg(long, num_args = 2, value_names = ["TAIL", "HEAD"])]
        root: Option<Vec<usize>>,
    },
    /// Count upward planar embeddings per leftmost edge at the source.
    Count {
        graph: PathBuf,
        /// Cross-check against exhaustive enumeration.
        #[arg(long)]
        oracle: bool,
    },
    /// Extend a partial embedding to an upward planar one.
    Extend {
        graph: PathBuf,
        partial: PathBuf,
        /// Cross-check the verdict against exhaustive enumeration.
        #[arg(long)]
        oracle: bool,
    },
    /// Print a random instance with `n` vertices and about `m` edges.
    Gen {
        n: usize,
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const YES: u8 = 0;
const NO: u8 = 1;
const MISMATCH: u8 = 3;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> anyhow::Result<GraphFile> {
    GraphFile::parse(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn edge_name(g: &DiGraph, e: EdgeId) -> String {
    let x = g.edge(e);
    format!("{} {}", x.tail, x.head)
}

fn root_edges(g: &DiGraph) -> Vec<EdgeId> {
    let mut out: Vec<EdgeId> = g.single_source().map_or_else(Vec::new, |s| g.out_edges(s).collect());
    out.sort_unstable();
    out
}

fn check(path: &Path) -> anyhow::Result<u8> {
    let g = load(path)?.graph;
    let mut any = false;
    for e in root_edges(&g) {
        let ok = matches!(build_up_tree(&g, e)?, Outcome::Feasible(_));
        println!("root {}: {}", edge_name(&g, e), if ok { "feasible" } else { "infeasible" });
        any |= ok;
    }
    println!("{}", if any { "upward planar" } else { "not upward planar" });
    Ok(if any { YES } else { NO })
}

fn uptree(path: &Path, format: Format, root: Option<Vec<usize>>) -> anyhow::Result<u8> {
    let file = load(path)?;
    let g = &file.graph;
    let root = match root.as_deref() {
        Some(&[t, h]) => resolve_root(g, t, h)?,
        Some(_) => unreachable!("clap takes exactly two values"),
        None => file.root.context("no root edge: add a `root` line or pass --root")?,
    };
    let Outcome::Feasible(up) = build_up_tree(g, root)? else {
        eprintln!("infeasible: no upward planar embedding has {} leftmost", edge_name(g, root));
        return Ok(NO);
    };
    let d = export::dump(g, &up);
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&d)?),
        Format::Dot => print!("{}", export::dot(&d)),
    }
    Ok(YES)
}

fn count(path: &Path, oracle: bool, budget: u64) -> anyhow::Result<u8> {
    let g = load(path)?.graph;
    let census = oracle.then(|| enumerate_upward_planar(&g, budget)).transpose()?;
    let mut code = YES;
    for e in root_edges(&g) {
        let n = build_up_tree(&g, e)?
            .feasible()
            .map_or_else(|| BigUint::from(0u32), |up| up.count_configurations());
        match &census {
            Some(c) => {
                let want = BigUint::from(c.bucket(e).len());
                let verdict = if want == n { "EQUAL" } else { "DIFF" };
                if want != n {
                    code = MISMATCH;
                }
                println!("{} {n} {want} {verdict}", edge_name(&g, e));
            }
            None => println!("{} {n}", edge_name(&g, e)),
        }
    }
    Ok(code)
}

fn print_embedding(g: &DiGraph, emb: &Embedding) {
    for v in g.vertices() {
        let ids: Vec<String> = emb.rotation[v].iter().map(ToString::to_string).collect();
        println!("rot {v} {}", ids.join(" "));
    }
    println!("outer {} {}", emb.outer.origin(g), emb.outer.target(g));
}

fn extend(graph: &Path, partial: &Path, oracle: bool, budget: u64) -> anyhow::Result<u8> {
    let g = load(graph)?.graph;
    let inst = parse_partial(&g, &read(partial)?).with_context(|| format!("in {}", partial.display()))?;
    let got = solve_extension(&g, &inst)?;
    if oracle {
        let want = brute_extension(&g, &inst, budget)?.is_some();
        if want != got.is_some() {
            eprintln!("oracle disagrees: solver {}, oracle {want}", got.is_some());
            return Ok(MISMATCH);
        }
    }
    match got {
        Some(emb) => {
            print_embedding(&g, &emb);
            Ok(YES)
        }
        None => {
            println!("no extension");
            Ok(NO)
        }
    }
}

fn gen(n: usize, m: usize, seed: u64) -> anyhow::Result<u8> {
    if n < 3 {
        bail!("need at least 3 vertices, got {n}");
    }
    let g = random_instance(n, m, seed)?;
    println!("# random instance n={n} m={m} seed={seed}");
    for e in g.edges() {
        println!("e {} {}", e.tail, e.head);
    }
    Ok(YES)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { graph } => check(&graph),
        Command::Uptree { graph, format, root } => uptree(&graph, format, root),
        Command::Count { graph, oracle } => count(&graph, oracle, cli.budget),
        Command::Extend { graph, partial, oracle } => extend(&graph, &partial, oracle, cli.budget),
        Command::Gen { n, m, seed } => gen(n, m, seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
