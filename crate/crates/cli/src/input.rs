//! Line-oriented graph and partial-embedding files.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use uptree::digraph::{validate_input, DiGraph, EdgeId, VertexId};
use uptree::extension::{InstanceError, PartialInstance};

use crate::export::TreeDump;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("no edge {0} -> {1}")]
    UnknownEdge(VertexId, VertexId),
    #[error("root edge {0} -> {1} does not leave the source")]
    RootNotAtSource(VertexId, VertexId),
    #[error("invalid partial embedding: {0}")]
    InvalidPartial(#[from] InstanceError),
    #[error("vertex {0} has {1} partial edges but no rot line")]
    MissingRotation(VertexId, usize),
    #[error("tree dump: {0}")]
    Json(#[from] serde_json::Error),
}

/// A parsed graph file: the graph and the optional root edge.
#[derive(Debug)]
pub struct GraphFile {
    pub graph: DiGraph,
    pub root: Option<EdgeId>,
}

fn numbers(line: usize, fields: &[&str]) -> Result<Vec<usize>, InputError> {
    fields
        .iter()
        .map(|f| {
            f.parse().map_err(|_| InputError::Syntax {
                line,
                msg: format!("expected a non-negative integer, got {f:?}"),
            })
        })
        .collect()
}

fn pair(line: usize, fields: &[&str]) -> Result<(usize, usize), InputError> {
    match numbers(line, fields)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err(InputError::Syntax {
            line,
            msg: format!("expected two vertices, got {}", fields.len()),
        }),
    }
}

/// Meaningful lines with their 1-based numbers, split into fields.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

pub fn find_edge(g: &DiGraph, tail: VertexId, head: VertexId) -> Result<EdgeId, InputError> {
    g.edges()
        .iter()
        .position(|e| e.tail == tail && e.head == head)
        .ok_or(InputError::UnknownEdge(tail, head))
}

impl GraphFile {
    /// Parses the text format, or a JSON tree dump, which carries its graph.
    pub fn parse(text: &str) -> Result<Self, InputError> {
        if text.trim_start().starts_with('{') {
            let dump: TreeDump = serde_json::from_str(text)?;
            return Self::from_edges(&dump.graph.edges, Some(dump.root));
        }
        let mut edges = Vec::new();
        let mut root = None;
        for (line, fields) in lines(text) {
            match fields[0] {
                "e" => edges.push(pair(line, &fields[1..])?),
                "root" if root.is_none() => root = Some(pair(line, &fields[1..])?),
                "root" => {
                    return Err(InputError::Syntax {
                        line,
                        msg: "second root line".into(),
                    })
                }
                other => {
                    return Err(InputError::Syntax {
                        line,
                        msg: format!("unknown directive {other:?}"),
                    })
                }
            }
        }
        Self::from_edges(&edges, root)
    }

    fn from_edges(edges: &[(VertexId, VertexId)], root: Option<(VertexId, VertexId)>) -> Result<Self, InputError> {
        let n = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        let graph = DiGraph::from_edges(n, edges).map_err(|e| InputError::InvalidGraph(e.to_string()))?;
        let violations = validate_input(&graph);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(InputError::InvalidGraph(text.join("; ")));
        }
        let root = root.map(|(t, h)| resolve_root(&graph, t, h)).transpose()?;
        Ok(GraphFile { graph, root })
    }
}

/// The edge `tail -> head`, which must leave the source.
pub fn resolve_root(g: &DiGraph, tail: VertexId, head: VertexId) -> Result<EdgeId, InputError> {
    let e = find_edge(g, tail, head)?;
    if g.single_source() != Some(tail) {
        return Err(InputError::RootNotAtSource(tail, head));
    }
    Ok(e)
}

/// Parses `h <tail> <head>` and `rot <v> <index...>` lines, where indices point into
/// the list of `h` lines. Vertices with at most two partial edges need no `rot` line.
pub fn parse_partial(g: &DiGraph, text: &str) -> Result<PartialInstance, InputError> {
    let mut h_list: Vec<EdgeId> = Vec::new();
    let mut rots: Vec<(usize, VertexId, Vec<usize>)> = Vec::new();
    for (line, fields) in lines(text) {
        match fields[0] {
            "h" => {
                let (t, h) = pair(line, &fields[1..])?;
                h_list.push(find_edge(g, t, h)?);
            }
            "rot" if fields.len() >= 2 => {
                let nums = numbers(line, &fields[1..])?;
                rots.push((line, nums[0], nums[1..].to_vec()));
            }
            other => {
                return Err(InputError::Syntax {
                    line,
                    msg: format!("unknown or incomplete directive {other:?}"),
                })
            }
        }
    }
    let mut h_rotation: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    for (line, v, idx) in rots {
        let order = idx
            .iter()
            .map(|&i| {
                h_list.get(i).copied().ok_or_else(|| InputError::Syntax {
                    line,
                    msg: format!("index {i} exceeds the {} partial edges", h_list.len()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        h_rotation.insert(v, order);
    }
    let h_edges: BTreeSet<EdgeId> = h_list.iter().copied().collect();
    let mut at: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    for &e in &h_edges {
        let edge = g.edge(e);
        at.entry(edge.tail).or_default().push(e);
        at.entry(edge.head).or_default().push(e);
    }
    for (v, edges) in at {
        if let Entry::Vacant(slot) = h_rotation.entry(v) {
            if edges.len() > 2 {
                return Err(InputError::MissingRotation(v, edges.len()));
            }
            slot.insert(edges);
        }
    }
    Ok(PartialInstance::new(g, h_edges, h_rotation)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA: &str = "# theta\ne 0 1\ne 1 4\ne 0 2\ne 2 4\ne 0 3\ne 3 4\nroot 0 2\n";

    #[test]
    fn parses_graph_with_root_and_comments() {
        let f = GraphFile::parse(THETA).unwrap();
        assert_eq!(f.graph.edge_count(), 6);
        assert_eq!(f.root, Some(2));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(GraphFile::parse("e 0\n"), Err(InputError::Syntax { line: 1, .. })));
        assert!(matches!(GraphFile::parse("x 0 1\n"), Err(InputError::Syntax { .. })));
        assert!(matches!(GraphFile::parse("e 0 1\ne 1 2\n"), Err(InputError::InvalidGraph(_))));
        let bad_root = format!("{THETA}root 1 4\n").replace("root 0 2\n", "");
        assert!(matches!(GraphFile::parse(&bad_root), Err(InputError::RootNotAtSource(1, 4))));
    }

    #[test]
    fn partial_fills_in_short_rotations() {
        let g = GraphFile::parse(THETA).unwrap().graph;
        let inst = parse_partial(&g, "h 0 1\nh 0 2\nh 0 3\nrot 0 1 0 2\n").unwrap();
        assert_eq!(inst.h_rotation[&0], vec![2, 0, 4]);
        assert_eq!(inst.h_rotation[&1], vec![0]);
        assert!(matches!(
            parse_partial(&g, "h 0 1\nh 0 2\nh 0 3\n"),
            Err(InputError::MissingRotation(0, 3))
        ));
    }
}
