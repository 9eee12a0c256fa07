//! Upward planar embeddings of biconnected single-source digraphs.
//!
//! The central object is the [`uptree::UpTree`], a decomposition tree whose
//! configurations correspond one-to-one to the upward planar embeddings of a graph
//! with a prescribed leftmost edge at the source.

pub mod decomposition;
pub mod digraph;
pub mod embedding;
pub mod extension;
pub mod oracle;
pub mod planarity;
pub mod uptree;
pub mod union_find;
