//! Finite rank-r graphs presented by a colored 1-skeleton and factorization
//! squares.
//!
//! Colors are 0-based internally and 1-based in JSON. Edge ids are assigned in
//! `(color, input order)` order, so sorting words by edge id gives the
//! deterministic "color blocks, then edge ids" ordering used everywhere a
//! matrix is indexed by paths.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;

/// A degree vector in `N_0^r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Shape(Vec<u32>);

impl Shape {
    pub fn new(degrees: Vec<u32>) -> Self {
        assert!(!degrees.is_empty(), "shape of rank 0");
        Shape(degrees)
    }

    pub fn zero(rank: usize) -> Self {
        Shape(vec![0; rank])
    }

    /// The basis vector `e_i` (0-based color).
    pub fn unit(rank: usize, color: usize) -> Self {
        let mut v = vec![0; rank];
        v[color] = 1;
        Shape(v)
    }

    /// `e = (1, ..., 1)`.
    pub fn ones(rank: usize) -> Self {
        Shape(vec![1; rank])
    }

    /// `e(u)` for a set of 0-based colors.
    pub fn from_colors(rank: usize, colors: &[usize]) -> Self {
        let mut v = vec![0; rank];
        for &c in colors {
            v[c] = 1;
        }
        Shape(v)
    }

    pub fn uniform(rank: usize, k: u32) -> Self {
        Shape(vec![k; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, color: usize) -> u32 {
        self.0[color]
    }

    /// `|n| = n_1 + ... + n_r`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&d| d == 0)
    }

    pub fn join(&self, other: &Shape) -> Shape {
        Shape(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn meet(&self, other: &Shape) -> Shape {
        Shape(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    pub fn checked_sub(&self, other: &Shape) -> Option<Shape> {
        self.0.iter().zip(&other.0).map(|(a, b)| a.checked_sub(*b)).collect::<Option<Vec<_>>>().map(Shape)
    }

    /// Componentwise `<=`.
    pub fn le(&self, other: &Shape) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Colors with nonzero degree.
    pub fn support(&self) -> Vec<usize> {
        (0..self.rank()).filter(|&i| self.0[i] > 0).collect()
    }

    /// The color sequence of a normal-form word of this shape.
    pub fn color_sequence(&self) -> Vec<usize> {
        self.0.iter().enumerate().flat_map(|(c, &d)| std::iter::repeat_n(c, d as usize)).collect()
    }

    /// All shapes `m <= self`, ordered by total degree then lexicographically.
    pub fn all_below(&self) -> Vec<Shape> {
        let mut out = vec![Vec::new()];
        for &d in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<u32>| {
                    (0..=d).map(move |k| {
                        let mut p = prefix.clone();
                        p.push(k);
                        p
                    })
                })
                .collect();
        }
        let mut shapes: Vec<Shape> = out.into_iter().map(Shape).collect();
        shapes.sort_by(|a, b| a.total().cmp(&b.total()).then_with(|| a.cmp(b)));
        shapes
    }

    /// Parses `"1,2"` style shapes.
    pub fn parse(text: &str) -> Result<Shape, String> {
        let degrees = text
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|e| format!("bad shape entry {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if degrees.is_empty() {
            return Err("empty shape".into());
        }
        Ok(Shape(degrees))
    }
}

impl Add for &Shape {
    type Output = Shape;
    fn add(self, rhs: &Shape) -> Shape {
        Shape(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    /// 0-based color.
    pub color: usize,
    pub range: VertexId,
    pub source: VertexId,
}

/// A morphism of the graph in color-ascending normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    range: VertexId,
    source: VertexId,
    shape: Shape,
    word: Vec<EdgeId>,
}

impl Path {
    pub fn range(&self) -> VertexId {
        self.range
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn word(&self) -> &[EdgeId] {
        &self.word
    }

    pub fn len(&self) -> u32 {
        self.word.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn is_vertex(&self) -> bool {
        self.word.is_empty()
    }
}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.shape
            .total()
            .cmp(&other.shape.total())
            .then_with(|| self.shape.cmp(&other.shape))
            .then_with(|| self.word.cmp(&other.word))
            .then_with(|| self.range.cmp(&other.range))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A minimal common extension `nu = lambda alpha = mu beta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    pub nu: Path,
    pub alpha: Path,
    pub beta: Path,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),
    #[error("duplicate edge {0:?}")]
    DuplicateEdge(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("unknown edge {0:?}")]
    UnknownEdge(String),
    #[error("color {0} out of range 1..={1}")]
    BadColor(String, usize),
    #[error("graph is not a valid k-graph: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("edges {0:?} and {1:?} are not composable")]
    NotComposable(String, String),
    #[error("empty edge sequence has no vertex")]
    EmptyWord,
    #[error("shape {actual} does not equal {expected}")]
    ShapeMismatch { actual: String, expected: String },
    #[error("no factorization square for ({0}, {1})")]
    MissingSquare(String, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SquareColorMismatch,
    SquareNotComposable,
    SquareEndpointMismatch,
    SquareNotBijective,
    SquareNotTotal,
    AssociativityFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
    pub edges: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// Result of the acyclicity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acyclicity {
    pub acyclic: bool,
    /// Componentwise maximum of the shapes `n` with `Λ^n` nonempty.
    pub max_shape: Option<Shape>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub range: String,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareSpec {
    /// 1-based colors `[i, j]`; each pair is `[[f_i, g_j], [g'_j, f'_i]]`.
    pub colors: [usize; 2],
    pub pairs: Vec<[[String; 2]; 2]>,
}

/// The JSON presentation of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(default = "crate::io::format_version")]
    pub format: u32,
    pub rank: usize,
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: BTreeMap<String, Vec<EdgeSpec>>,
    #[serde(default)]
    pub squares: Vec<SquareSpec>,
}

#[derive(Clone, Debug)]
struct SquareEntry {
    declared: (usize, usize),
    first: (EdgeId, EdgeId),
    second: (EdgeId, EdgeId),
}

/// A finite rank-r graph. Immutable once built.
#[derive(Clone, Debug)]
pub struct KGraph {
    rank: usize,
    vertices: Vec<String>,
    vertex_index: HashMap<String, VertexId>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, EdgeId>,
    by_color: Vec<Vec<EdgeId>>,
    /// `into[color][vertex]`: edges of that color with that range.
    into: Vec<Vec<Vec<EdgeId>>>,
    squares: Vec<SquareEntry>,
    /// Color-ascending pair to color-descending pair.
    up: HashMap<(EdgeId, EdgeId), (EdgeId, EdgeId)>,
    /// Color-descending pair to color-ascending pair.
    down: HashMap<(EdgeId, EdgeId), (EdgeId, EdgeId)>,
    report: ValidationReport,
}

impl KGraph {
    /// Builds the graph and runs [`KGraph::validate`]. Only referential
    /// problems (unknown or duplicate names, bad colors) are errors; square
    /// defects land in the validation report.
    pub fn from_spec(spec: &GraphSpec) -> Result<KGraph, GraphError> {
        let rank = spec.rank;
        if rank == 0 {
            return Err(GraphError::ZeroRank);
        }
        let mut vertex_index = HashMap::new();
        for (k, v) in spec.vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), k).is_some() {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        let lookup_vertex =
            |name: &str| vertex_index.get(name).copied().ok_or_else(|| GraphError::UnknownVertex(name.to_string()));
        let mut edges = Vec::new();
        for color in 0..rank {
            let key = (color + 1).to_string();
            for e in spec.edges.get(&key).into_iter().flatten() {
                edges.push(Edge {
                    name: e.id.clone(),
                    color,
                    range: lookup_vertex(&e.range)?,
                    source: lookup_vertex(&e.source)?,
                });
            }
        }
        for key in spec.edges.keys() {
            match key.parse::<usize>() {
                Ok(c) if (1..=rank).contains(&c) => {}
                _ => return Err(GraphError::BadColor(key.clone(), rank)),
            }
        }
        let mut edge_index = HashMap::new();
        for (k, e) in edges.iter().enumerate() {
            if vertex_index.contains_key(&e.name) || edge_index.insert(e.name.clone(), k).is_some() {
                return Err(GraphError::DuplicateEdge(e.name.clone()));
            }
        }
        let lookup_edge =
            |name: &str| edge_index.get(name).copied().ok_or_else(|| GraphError::UnknownEdge(name.to_string()));
        let mut squares = Vec::new();
        for sq in &spec.squares {
            for &c in &sq.colors {
                if c == 0 || c > rank {
                    return Err(GraphError::BadColor(c.to_string(), rank));
                }
            }
            for [[f, g], [g2, f2]] in &sq.pairs {
                squares.push(SquareEntry {
                    declared: (sq.colors[0] - 1, sq.colors[1] - 1),
                    first: (lookup_edge(f)?, lookup_edge(g)?),
                    second: (lookup_edge(g2)?, lookup_edge(f2)?),
                });
            }
        }
        Ok(Self::assemble(rank, spec.vertices.clone(), vertex_index, edges, edge_index, squares))
    }

    /// Like [`KGraph::from_spec`] but rejects graphs failing validation.
    pub fn from_spec_validated(spec: &GraphSpec) -> Result<KGraph, GraphError> {
        let g = Self::from_spec(spec)?;
        if !g.report.valid {
            let msgs: Vec<_> = g.report.violations.iter().map(|v| v.message.clone()).collect();
            return Err(GraphError::Invalid(msgs.join("; ")));
        }
        Ok(g)
    }

    fn assemble(
        rank: usize,
        vertices: Vec<String>,
        vertex_index: HashMap<String, VertexId>,
        edges: Vec<Edge>,
        edge_index: HashMap<String, EdgeId>,
        squares: Vec<SquareEntry>,
    ) -> KGraph {
        let mut by_color = vec![Vec::new(); rank];
        let mut into = vec![vec![Vec::new(); vertices.len()]; rank];
        for (k, e) in edges.iter().enumerate() {
            by_color[e.color].push(k);
            into[e.color][e.range].push(k);
        }
        let mut g = KGraph {
            rank,
            vertices,
            vertex_index,
            edges,
            edge_index,
            by_color,
            into,
            squares,
            up: HashMap::new(),
            down: HashMap::new(),
            report: ValidationReport { valid: true, violations: Vec::new() },
        };
        for sq in &g.squares {
            let (a, b) = (g.edges[sq.first.0].color, g.edges[sq.first.1].color);
            let (asc, desc) = if a < b { (sq.first, sq.second) } else { (sq.second, sq.first) };
            g.up.entry(asc).or_insert(desc);
            g.down.entry(desc).or_insert(asc);
        }
        g.report = g.compute_validation();
        g
    }

    pub fn to_spec(&self) -> GraphSpec {
        let mut edges = BTreeMap::new();
        for color in 0..self.rank {
            let list: Vec<EdgeSpec> = self.by_color[color]
                .iter()
                .map(|&e| EdgeSpec {
                    id: self.edges[e].name.clone(),
                    range: self.vertices[self.edges[e].range].clone(),
                    source: self.vertices[self.edges[e].source].clone(),
                })
                .collect();
            if !list.is_empty() {
                edges.insert((color + 1).to_string(), list);
            }
        }
        let mut grouped: BTreeMap<(usize, usize), Vec<[[String; 2]; 2]>> = BTreeMap::new();
        for sq in &self.squares {
            let n = |e: EdgeId| self.edges[e].name.clone();
            grouped
                .entry((sq.declared.0 + 1, sq.declared.1 + 1))
                .or_default()
                .push([[n(sq.first.0), n(sq.first.1)], [n(sq.second.0), n(sq.second.1)]]);
        }
        GraphSpec {
            format: crate::io::FORMAT_VERSION,
            rank: self.rank,
            vertices: self.vertices.clone(),
            edges,
            squares: grouped.into_iter().map(|((i, j), pairs)| SquareSpec { colors: [i, j], pairs }).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.vertex_index.get(name).copied()
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_id(&self, name: &str) -> Option<EdgeId> {
        self.edge_index.get(name).copied()
    }

    pub fn edges_of_color(&self, color: usize) -> &[EdgeId] {
        &self.by_color[color]
    }

    pub fn is_valid(&self) -> bool {
        self.report.valid
    }

    /// The report computed at construction.
    pub fn validate(&self) -> &ValidationReport {
        &self.report
    }

    pub fn vertex_path(&self, v: VertexId) -> Path {
        Path { range: v, source: v, shape: Shape::zero(self.rank), word: Vec::new() }
    }

    pub fn edge_path(&self, e: EdgeId) -> Path {
        let edge = &self.edges[e];
        Path { range: edge.range, source: edge.source, shape: Shape::unit(self.rank, edge.color), word: vec![e] }
    }

    /// Human-readable label: edge names concatenated, or the vertex name.
    pub fn label(&self, p: &Path) -> String {
        if p.is_vertex() {
            self.vertices[p.range].clone()
        } else {
            p.word.iter().map(|&e| self.edges[e].name.as_str()).collect()
        }
    }

    /// Applies the square to an adjacent pair of differently colored edges,
    /// returning the pair with the two colors exchanged.
    pub fn swap(&self, x: EdgeId, y: EdgeId) -> Option<(EdgeId, EdgeId)> {
        let (cx, cy) = (self.edges[x].color, self.edges[y].color);
        match cx.cmp(&cy) {
            std::cmp::Ordering::Less => self.up.get(&(x, y)).copied(),
            std::cmp::Ordering::Greater => self.down.get(&(x, y)).copied(),
            std::cmp::Ordering::Equal => None,
        }
    }

    fn check_composable(&self, word: &[EdgeId]) -> Result<(), PathError> {
        for w in word.windows(2) {
            if self.edges[w[0]].source != self.edges[w[1]].range {
                return Err(PathError::NotComposable(self.edges[w[0]].name.clone(), self.edges[w[1]].name.clone()));
            }
        }
        Ok(())
    }

    fn shape_of(&self, word: &[EdgeId]) -> Shape {
        let mut d = vec![0; self.rank];
        for &e in word {
            d[self.edges[e].color] += 1;
        }
        Shape(d)
    }

    /// Rewrites a composable word, using squares, into the word with the given
    /// color sequence. Any sequence of square moves reaches the same word in a
    /// valid graph.
    pub fn reorder(&self, word: &[EdgeId], colors: &[usize]) -> Result<Vec<EdgeId>, PathError> {
        let mut w = word.to_vec();
        let mismatch = || PathError::ShapeMismatch {
            actual: self.shape_of(word).to_string(),
            expected: format!("color sequence {colors:?}"),
        };
        if w.len() != colors.len() {
            return Err(mismatch());
        }
        for (p, &want) in colors.iter().enumerate() {
            let q = (p..w.len()).find(|&q| self.edges[w[q]].color == want).ok_or_else(mismatch)?;
            for k in (p..q).rev() {
                let (a, b) = self.swap(w[k], w[k + 1]).ok_or_else(|| {
                    PathError::MissingSquare(self.edges[w[k]].name.clone(), self.edges[w[k + 1]].name.clone())
                })?;
                w[k] = a;
                w[k + 1] = b;
            }
        }
        Ok(w)
    }

    /// The color-ascending representative of a nonempty composable word.
    pub fn normal_form(&self, word: &[EdgeId]) -> Result<Path, PathError> {
        if word.is_empty() {
            return Err(PathError::EmptyWord);
        }
        self.check_composable(word)?;
        let shape = self.shape_of(word);
        let sorted = self.reorder(word, &shape.color_sequence())?;
        Ok(Path {
            range: self.edges[sorted[0]].range,
            source: self.edges[*sorted.last().unwrap()].source,
            shape,
            word: sorted,
        })
    }

    /// Normal form of an edge-name sequence, or the vertex path when `names`
    /// is a single vertex name.
    pub fn path_from_names(&self, names: &[&str]) -> Result<Path, String> {
        if let [single] = names {
            if let Some(v) = self.vertex_id(single) {
                return Ok(self.vertex_path(v));
            }
        }
        let word = names
            .iter()
            .map(|n| self.edge_id(n).ok_or_else(|| format!("unknown edge {n:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        self.normal_form(&word).map_err(|e| e.to_string())
    }

    /// `λμ` in normal form, or `None` when `s(λ) != r(μ)`.
    pub fn compose(&self, a: &Path, b: &Path) -> Option<Path> {
        if a.source != b.range {
            return None;
        }
        if a.is_vertex() {
            return Some(b.clone());
        }
        if b.is_vertex() {
            return Some(a.clone());
        }
        let word: Vec<EdgeId> = a.word.iter().chain(&b.word).copied().collect();
        Some(self.normal_form(&word).expect("composable word over a graph with total squares"))
    }

    /// The unique `(μ, ν)` with `σ(μ) = m`, `σ(ν) = n` and `μν = λ`.
    pub fn factor(&self, lambda: &Path, m: &Shape, n: &Shape) -> Result<(Path, Path), PathError> {
        let total = m + n;
        if &total != lambda.shape() {
            return Err(PathError::ShapeMismatch { actual: lambda.shape.to_string(), expected: total.to_string() });
        }
        if m.is_zero() {
            return Ok((self.vertex_path(lambda.range), lambda.clone()));
        }
        if n.is_zero() {
            return Ok((lambda.clone(), self.vertex_path(lambda.source)));
        }
        let mut colors = m.color_sequence();
        colors.extend(n.color_sequence());
        let w = self.reorder(&lambda.word, &colors)?;
        let k = m.total() as usize;
        let first =
            Path { range: lambda.range, source: self.edges[w[k - 1]].source, shape: m.clone(), word: w[..k].to_vec() };
        let second =
            Path { range: self.edges[w[k]].range, source: lambda.source, shape: n.clone(), word: w[k..].to_vec() };
        Ok((first, second))
    }

    /// All paths of shape `n`, optionally filtered by range and source, in
    /// lexicographic word order.
    pub fn paths(&self, n: &Shape, range: Option<VertexId>, source: Option<VertexId>) -> Vec<Path> {
        assert_eq!(n.rank(), self.rank, "shape rank mismatch");
        if n.is_zero() {
            return (0..self.vertices.len())
                .filter(|&v| range.is_none_or(|r| r == v) && source.is_none_or(|s| s == v))
                .map(|v| self.vertex_path(v))
                .collect();
        }
        let colors = n.color_sequence();
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(colors.len());
        let starts: Vec<EdgeId> = match range {
            Some(r) => self.into[colors[0]][r].clone(),
            None => self.by_color[colors[0]].clone(),
        };
        for e in starts {
            word.push(e);
            self.extend_paths(&colors, &mut word, source, n, &mut out);
            word.pop();
        }
        out
    }

    fn extend_paths(
        &self,
        colors: &[usize],
        word: &mut Vec<EdgeId>,
        source: Option<VertexId>,
        shape: &Shape,
        out: &mut Vec<Path>,
    ) {
        let last = self.edges[*word.last().unwrap()].source;
        if word.len() == colors.len() {
            if source.is_none_or(|s| s == last) {
                out.push(Path {
                    range: self.edges[word[0]].range,
                    source: last,
                    shape: shape.clone(),
                    word: word.clone(),
                });
            }
            return;
        }
        for &e in &self.into[colors[word.len()]][last] {
            word.push(e);
            self.extend_paths(colors, word, source, shape, out);
            word.pop();
        }
    }

    /// All paths with shape `<= cap`, ordered by shape (total degree first)
    /// then word.
    pub fn paths_upto(&self, cap: &Shape) -> Vec<Path> {
        cap.all_below().iter().flat_map(|n| self.paths(n, None, None)).collect()
    }

    /// Minimal common extensions of `λ` and `μ`.
    pub fn mce(&self, lambda: &Path, mu: &Path) -> Vec<Extension> {
        if lambda.range != mu.range {
            return Vec::new();
        }
        let join = lambda.shape.join(&mu.shape);
        let rest_l = join.checked_sub(&lambda.shape).unwrap();
        let rest_m = join.checked_sub(&mu.shape).unwrap();
        let mut out = Vec::new();
        for alpha in self.paths(&rest_l, Some(lambda.source), None) {
            let nu = self.compose(lambda, &alpha).expect("alpha starts at s(lambda)");
            let (head, beta) = self.factor(&nu, &mu.shape, &rest_m).expect("shape of nu is the join");
            if &head == mu {
                out.push(Extension { nu, alpha, beta });
            }
        }
        out
    }

    /// Directed-cycle test on the union of all colored skeletons, plus the
    /// componentwise maximal nonempty shape when acyclic.
    pub fn acyclicity(&self) -> Acyclicity {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.vertices.len();
        let mut succ = vec![Vec::new(); n];
        for e in &self.edges {
            succ[e.source].push(e.range);
        }
        let mut mark = vec![Mark::New; n];
        for root in 0..n {
            if mark[root] != Mark::New {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Active;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < succ[v].len() {
                    let w = succ[v][*next];
                    *next += 1;
                    match mark[w] {
                        Mark::Active => return Acyclicity { acyclic: false, max_shape: None },
                        Mark::New => {
                            mark[w] = Mark::Active;
                            stack.push((w, 0));
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[v] = Mark::Done;
                    stack.pop();
                }
            }
        }
        Acyclicity { acyclic: true, max_shape: Some(self.max_shape()) }
    }

    pub fn is_acyclic(&self) -> bool {
        self.acyclicity().acyclic
    }

    /// Join of all nonempty shapes. Nonempty shapes are downward closed, so a
    /// breadth-first search from 0 finds them all. Only call on acyclic graphs.
    fn max_shape(&self) -> Shape {
        let mut seen: HashSet<Shape> = HashSet::new();
        let mut frontier = vec![Shape::zero(self.rank)];
        let mut join = Shape::zero(self.rank);
        seen.insert(join.clone());
        while let Some(s) = frontier.pop() {
            join = join.join(&s);
            for c in 0..self.rank {
                let next = &s + &Shape::unit(self.rank, c);
                if !seen.contains(&next) && !self.paths(&next, None, None).is_empty() {
                    seen.insert(next.clone());
                    frontier.push(next);
                }
            }
        }
        join
    }

    fn compute_validation(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let name = |e: EdgeId| self.edges[e].name.clone();
        let push = |out: &mut Vec<Violation>, kind, message: String, edges: Vec<String>| {
            out.push(Violation { kind, message, edges })
        };

        let mut asc_count: HashMap<(EdgeId, EdgeId), usize> = HashMap::new();
        let mut desc_count: HashMap<(EdgeId, EdgeId), usize> = HashMap::new();
        for sq in &self.squares {
            let (f, g) = sq.first;
            let (g2, f2) = sq.second;
            let all = vec![name(f), name(g), name(g2), name(f2)];
            let (ci, cj) = sq.declared;
            let colors_ok = ci != cj
                && self.edges[f].color == ci
                && self.edges[g].color == cj
                && self.edges[g2].color == cj
                && self.edges[f2].color == ci;
            if !colors_ok {
                push(
                    &mut violations,
                    ViolationKind::SquareColorMismatch,
                    format!("square entry {all:?} does not match colors [{}, {}]", ci + 1, cj + 1),
                    all,
                );
                continue;
            }
            if self.edges[f].source != self.edges[g].range || self.edges[g2].source != self.edges[f2].range {
                push(
                    &mut violations,
                    ViolationKind::SquareNotComposable,
                    format!("square entry {all:?} has a non-composable pair"),
                    all,
                );
                continue;
            }
            if self.edges[f].range != self.edges[g2].range || self.edges[g].source != self.edges[f2].source {
                push(
                    &mut violations,
                    ViolationKind::SquareEndpointMismatch,
                    format!("square entry {all:?} does not preserve range and source"),
                    all,
                );
                continue;
            }
            let (asc, desc) = if ci < cj { (sq.first, sq.second) } else { (sq.second, sq.first) };
            *asc_count.entry(asc).or_default() += 1;
            *desc_count.entry(desc).or_default() += 1;
        }

        for i in 0..self.rank {
            for j in (i + 1)..self.rank {
                for &f in &self.by_color[i] {
                    for &g in &self.into[j][self.edges[f].source] {
                        match asc_count.get(&(f, g)).copied().unwrap_or(0) {
                            0 => push(
                                &mut violations,
                                ViolationKind::SquareNotTotal,
                                format!("square not total: no entry for ({}, {})", name(f), name(g)),
                                vec![name(f), name(g)],
                            ),
                            1 => {}
                            k => push(
                                &mut violations,
                                ViolationKind::SquareNotBijective,
                                format!("square not bijective: ({}, {}) appears {k} times", name(f), name(g)),
                                vec![name(f), name(g)],
                            ),
                        }
                    }
                }
                for &g in &self.by_color[j] {
                    for &f in &self.into[i][self.edges[g].source] {
                        match desc_count.get(&(g, f)).copied().unwrap_or(0) {
                            0 => push(
                                &mut violations,
                                ViolationKind::SquareNotBijective,
                                format!("square not bijective: ({}, {}) is not in the image", name(g), name(f)),
                                vec![name(g), name(f)],
                            ),
                            1 => {}
                            k => push(
                                &mut violations,
                                ViolationKind::SquareNotBijective,
                                format!("square not bijective: {k} pairs map to ({}, {})", name(g), name(f)),
                                vec![name(g), name(f)],
                            ),
                        }
                    }
                }
            }
        }

        // Hexagon: the two ways of sorting a descending triple agree.
        if violations.is_empty() && self.rank >= 3 {
            for i in 0..self.rank {
                for j in (i + 1)..self.rank {
                    for l in (j + 1)..self.rank {
                        for &x in &self.by_color[l] {
                            for &y in &self.into[j][self.edges[x].source] {
                                for &z in &self.into[i][self.edges[y].source] {
                                    let a = self.sort_triple([x, y, z], [0, 1, 0]);
                                    let b = self.sort_triple([x, y, z], [1, 0, 1]);
                                    if a != b {
                                        push(
                                            &mut violations,
                                            ViolationKind::AssociativityFailure,
                                            format!("associativity fails on ({}, {}, {})", name(x), name(y), name(z)),
                                            vec![name(x), name(y), name(z)],
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        ValidationReport { valid: violations.is_empty(), violations }
    }

    fn sort_triple(&self, mut w: [EdgeId; 3], moves: [usize; 3]) -> Option<[EdgeId; 3]> {
        for k in moves {
            let (a, b) = self.swap(w[k], w[k + 1])?;
            w[k] = a;
            w[k + 1] = b;
        }
        Some(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn sh(v: &[u32]) -> Shape {
        Shape::new(v.to_vec())
    }

    #[test]
    fn shape_lattice() {
        let a = sh(&[1, 0, 2]);
        let b = sh(&[0, 1, 1]);
        assert_eq!(a.join(&b), sh(&[1, 1, 2]));
        assert_eq!(a.meet(&b), sh(&[0, 0, 1]));
        assert_eq!(&a + &b, sh(&[1, 1, 3]));
        assert_eq!(a.checked_sub(&b), None);
        assert_eq!(a.checked_sub(&sh(&[1, 0, 1])), Some(sh(&[0, 0, 1])));
        assert_eq!(a.total(), 3);
        assert_eq!(sh(&[1, 1]).all_below(), vec![sh(&[0, 0]), sh(&[0, 1]), sh(&[1, 0]), sh(&[1, 1])]);
        assert_eq!(Shape::parse("2, 0").unwrap(), sh(&[2, 0]));
    }

    #[test]
    fn fix_b_is_valid_and_r1_trivially_valid() {
        assert!(fixtures::fix_b_graph().is_valid());
        assert!(fixtures::fix_a_graph().is_valid());
    }

    #[test]
    fn non_injective_square_is_reported() {
        let mut spec = fixtures::fix_b_graph().to_spec();
        // a second entry mapping a different pair onto the same target
        spec.edges.get_mut("1").unwrap().push(EdgeSpec { id: "b3".into(), range: "u".into(), source: "v".into() });
        spec.squares[0].pairs.push([["b3".into(), "r2".into()], ["r1".into(), "b2".into()]]);
        let g = KGraph::from_spec(&spec).unwrap();
        let report = g.validate();
        assert!(!report.valid);
        assert!(report.violations.iter().any(|v| v.message.starts_with("square not bijective")));
    }

    #[test]
    fn missing_square_is_not_total() {
        let mut spec = fixtures::fix_b_graph().to_spec();
        spec.squares.clear();
        let g = KGraph::from_spec(&spec).unwrap();
        assert!(!g.is_valid());
        assert!(g.validate().violations.iter().any(|v| v.kind == ViolationKind::SquareNotTotal));
    }

    #[test]
    fn referential_errors() {
        let mut spec = fixtures::fix_a_graph().to_spec();
        spec.edges.get_mut("1").unwrap()[0].range = "zz".into();
        assert_eq!(KGraph::from_spec(&spec).unwrap_err(), GraphError::UnknownVertex("zz".into()));
        let mut spec = fixtures::fix_a_graph().to_spec();
        spec.edges.insert("2".into(), vec![]);
        assert!(matches!(KGraph::from_spec(&spec), Err(GraphError::BadColor(..))));
    }

    #[test]
    fn normal_form_examples() {
        let g = fixtures::fix_b_graph();
        let id = |n: &str| g.edge_id(n).unwrap();
        let p = g.normal_form(&[id("r1"), id("b2")]).unwrap();
        assert_eq!(g.label(&p), "b1r2");
        assert_eq!(p.shape(), &sh(&[1, 1]));
        let q = g.normal_form(p.word()).unwrap();
        assert_eq!(p, q);
        assert_eq!(g.normal_form(&[]), Err(PathError::EmptyWord));
        assert!(matches!(g.normal_form(&[id("b1"), id("b2")]), Err(PathError::NotComposable(..))));
        let u = g.vertex_id("u").unwrap();
        assert_eq!(g.path_from_names(&["u"]).unwrap(), g.vertex_path(u));
    }

    #[test]
    fn factor_examples() {
        let g = fixtures::fix_b_graph();
        let l = g.path_from_names(&["b1", "r2"]).unwrap();
        let (m, n) = g.factor(&l, &sh(&[1, 0]), &sh(&[0, 1])).unwrap();
        assert_eq!((g.label(&m), g.label(&n)), ("b1".into(), "r2".into()));
        let (m, n) = g.factor(&l, &sh(&[0, 1]), &sh(&[1, 0])).unwrap();
        assert_eq!((g.label(&m), g.label(&n)), ("r1".into(), "b2".into()));
        let (m, n) = g.factor(&l, &sh(&[1, 1]), &sh(&[0, 0])).unwrap();
        assert_eq!(m, l);
        assert_eq!(n, g.vertex_path(l.source()));
        assert!(matches!(g.factor(&l, &sh(&[1, 0]), &sh(&[1, 0])), Err(PathError::ShapeMismatch { .. })));
    }

    #[test]
    fn paths_examples() {
        let g = fixtures::fix_b_graph();
        let p = g.paths(&sh(&[1, 1]), None, None);
        assert_eq!(p.len(), 1);
        assert_eq!(g.label(&p[0]), "b1r2");
        assert_eq!(g.paths(&sh(&[0, 0]), None, None).len(), g.vertex_count());
        let a = fixtures::fix_a_graph();
        assert!(a.paths(&sh(&[2]), None, None).is_empty());
        let b = a.vertex_id("b").unwrap();
        assert_eq!(a.paths(&sh(&[1]), None, Some(b)).len(), 1);
        assert!(a.paths(&sh(&[1]), Some(b), None).is_empty());
    }

    #[test]
    fn mce_examples() {
        let g = fixtures::fix_b_graph();
        let p = |names: &[&str]| g.path_from_names(names).unwrap();
        let b1 = p(&["b1"]);
        let same = g.mce(&b1, &b1);
        assert_eq!(same.len(), 1);
        assert_eq!(same[0].nu, b1);
        assert!(same[0].alpha.is_vertex() && same[0].beta.is_vertex());
        let ext = g.mce(&b1, &p(&["r1"]));
        assert_eq!(ext.len(), 1);
        assert_eq!(g.label(&ext[0].nu), "b1r2");
        assert_eq!(g.label(&ext[0].alpha), "r2");
        assert_eq!(g.label(&ext[0].beta), "b2");
        assert!(g.mce(&b1, &p(&["b2"])).is_empty());
    }

    #[test]
    fn acyclicity_examples() {
        assert_eq!(fixtures::fix_a_graph().acyclicity(), Acyclicity { acyclic: true, max_shape: Some(sh(&[1])) });
        assert_eq!(fixtures::fix_b_graph().acyclicity(), Acyclicity { acyclic: true, max_shape: Some(sh(&[1, 1])) });
        assert!(!fixtures::single_loop_graph().is_acyclic());
    }
}
