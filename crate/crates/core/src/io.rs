//! JSON loading with line and column diagnostics, and the format version
//! stamped on every document.

use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::contraction::{ContractionError, ContractionSpec, LambdaContraction};
use crate::dilation::DilationJson;
use crate::kgraph::{GraphError, GraphSpec, KGraph};

pub const FORMAT_VERSION: u32 = 1;

pub fn format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: unsupported format {found} (expected {FORMAT_VERSION})")]
    Format { path: String, found: u32 },
    #[error("{path}: {source}")]
    Graph { path: String, source: GraphError },
    #[error("{path}: {source}")]
    Contraction { path: String, source: ContractionError },
}

/// Parses `text` as `T`; `origin` names the source in errors.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let origin = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| IoError::Read { path: origin.clone(), message: e.to_string() })?;
    parse_json(&text, &origin)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn check_format(found: u32, origin: &str) -> Result<(), IoError> {
    if found != FORMAT_VERSION {
        return Err(IoError::Format { path: origin.to_string(), found });
    }
    Ok(())
}

/// A graph from its JSON text. Square defects do not fail here; they are
/// recorded in the graph's validation report.
pub fn graph_from_str(text: &str, origin: &str) -> Result<KGraph, IoError> {
    let spec: GraphSpec = parse_json(text, origin)?;
    check_format(spec.format, origin)?;
    KGraph::from_spec(&spec).map_err(|source| IoError::Graph { path: origin.to_string(), source })
}

pub fn load_graph(path: &Path) -> Result<KGraph, IoError> {
    let origin = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| IoError::Read { path: origin.clone(), message: e.to_string() })?;
    graph_from_str(&text, &origin)
}

pub fn contraction_from_str(graph: Arc<KGraph>, text: &str, origin: &str) -> Result<LambdaContraction, IoError> {
    let spec: ContractionSpec = parse_json(text, origin)?;
    check_format(spec.format, origin)?;
    LambdaContraction::from_spec(graph, &spec)
        .map_err(|source| IoError::Contraction { path: origin.to_string(), source })
}

pub fn load_contraction(graph: Arc<KGraph>, path: &Path) -> Result<LambdaContraction, IoError> {
    let origin = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| IoError::Read { path: origin.clone(), message: e.to_string() })?;
    contraction_from_str(graph, &text, &origin)
}

pub fn load_dilation(path: &Path) -> Result<DilationJson, IoError> {
    let d: DilationJson = read_json(path)?;
    check_format(d.format, &path.display().to_string())?;
    Ok(d)
}
