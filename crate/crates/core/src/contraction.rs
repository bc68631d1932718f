//! Λ-contractions: operator families indexed by paths, their extension from
//! generators, the axiom checkers for Λ-contractions, Toeplitz families and
//! Toeplitz-Cuntz-Krieger families, and the row operators `T̃(n)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kgraph::{EdgeId, KGraph, Path, Shape, VertexId};
use crate::linalg::{self, matrix_json, CMatrix};
use crate::prodsys::{flip_matrix, BlockSpace, SigmaData};
use crate::report::{Check, CheckKind, Report};

/// Relative tolerance for consistency of factorizations in [`LambdaContraction::extend`].
pub const EXTEND_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractionError {
    #[error("graph is not a valid k-graph")]
    InvalidGraph,
    #[error("operator for {name:?} is {rows}x{cols}, expected {dim}x{dim}")]
    Dimension { name: String, rows: usize, cols: usize, dim: usize },
    #[error("no operator given for {0:?}")]
    Missing(String),
    #[error("{0:?} is neither a vertex nor an edge of the graph")]
    UnknownName(String),
    #[error("V is not well defined on {path}: factorizations {first} and {second} differ by {residual:e}")]
    NotWellDefined { path: String, first: String, second: String, residual: f64 },
    #[error("bad matrix for {0:?}: {1}")]
    Matrix(String, String),
}

/// Contraction JSON: `{"dimH": d, "vertices": {"a": matrix}, "edges": {"f": matrix}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionSpec {
    #[serde(default = "crate::io::format_version")]
    pub format: u32,
    #[serde(rename = "dimH")]
    pub dim_h: usize,
    pub vertices: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub edges: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

/// A family `V_λ`, determined by its vertex projections and edge operators.
#[derive(Debug)]
pub struct LambdaContraction {
    graph: Arc<KGraph>,
    dim_h: usize,
    vertex_ops: Vec<CMatrix>,
    edge_ops: Vec<CMatrix>,
    shape_cap: Shape,
    products: Mutex<HashMap<Path, CMatrix>>,
    consistent: Mutex<HashSet<Path>>,
}

impl Clone for LambdaContraction {
    fn clone(&self) -> Self {
        LambdaContraction {
            graph: self.graph.clone(),
            dim_h: self.dim_h,
            vertex_ops: self.vertex_ops.clone(),
            edge_ops: self.edge_ops.clone(),
            shape_cap: self.shape_cap.clone(),
            products: Mutex::new(self.products.lock().unwrap().clone()),
            consistent: Mutex::new(self.consistent.lock().unwrap().clone()),
        }
    }
}

/// `N_max` for acyclic graphs, `(3, ..., 3)` otherwise.
pub fn default_cap(g: &KGraph) -> Shape {
    g.acyclicity().max_shape.unwrap_or_else(|| Shape::uniform(g.rank(), 3))
}

impl LambdaContraction {
    pub fn new(
        graph: Arc<KGraph>,
        dim_h: usize,
        vertex_ops: Vec<CMatrix>,
        edge_ops: Vec<CMatrix>,
    ) -> Result<Self, ContractionError> {
        if !graph.is_valid() {
            return Err(ContractionError::InvalidGraph);
        }
        assert_eq!(vertex_ops.len(), graph.vertex_count(), "one operator per vertex");
        assert_eq!(edge_ops.len(), graph.edges().len(), "one operator per edge");
        let named = (0..graph.vertex_count())
            .map(|a| (graph.vertex_name(a).to_string(), &vertex_ops[a]))
            .chain(graph.edges().iter().zip(&edge_ops).map(|(e, m)| (e.name.clone(), m)));
        for (name, m) in named {
            if m.nrows() != dim_h || m.ncols() != dim_h {
                return Err(ContractionError::Dimension { name, rows: m.nrows(), cols: m.ncols(), dim: dim_h });
            }
            if !linalg::is_finite(m) {
                return Err(ContractionError::Matrix(name, "non-finite entries".into()));
            }
        }
        let shape_cap = default_cap(&graph);
        Ok(LambdaContraction {
            graph,
            dim_h,
            vertex_ops,
            edge_ops,
            shape_cap,
            products: Mutex::new(HashMap::new()),
            consistent: Mutex::new(HashSet::new()),
        })
    }

    pub fn from_spec(graph: Arc<KGraph>, spec: &ContractionSpec) -> Result<Self, ContractionError> {
        let d = spec.dim_h;
        let parse = |name: &str, rows: Option<&Vec<Vec<[f64; 2]>>>| -> Result<CMatrix, ContractionError> {
            let rows = rows.ok_or_else(|| ContractionError::Missing(name.to_string()))?;
            matrix_json::from_rows(rows.clone(), Some(d)).map_err(|e| ContractionError::Matrix(name.to_string(), e))
        };
        for name in spec.vertices.keys() {
            if graph.vertex_id(name).is_none() {
                return Err(ContractionError::UnknownName(name.clone()));
            }
        }
        for name in spec.edges.keys() {
            if graph.edge_id(name).is_none() {
                return Err(ContractionError::UnknownName(name.clone()));
            }
        }
        let vertex_ops = (0..graph.vertex_count())
            .map(|a| parse(graph.vertex_name(a), spec.vertices.get(graph.vertex_name(a))))
            .collect::<Result<Vec<_>, _>>()?;
        let edge_ops =
            graph.edges().iter().map(|e| parse(&e.name, spec.edges.get(&e.name))).collect::<Result<Vec<_>, _>>()?;
        Self::new(graph, d, vertex_ops, edge_ops)
    }

    pub fn to_spec(&self) -> ContractionSpec {
        let g = &self.graph;
        ContractionSpec {
            format: crate::io::FORMAT_VERSION,
            dim_h: self.dim_h,
            vertices: (0..g.vertex_count())
                .map(|a| (g.vertex_name(a).to_string(), matrix_json::to_rows(&self.vertex_ops[a])))
                .collect(),
            edges: g
                .edges()
                .iter()
                .zip(&self.edge_ops)
                .map(|(e, m)| (e.name.clone(), matrix_json::to_rows(m)))
                .collect(),
        }
    }

    pub fn graph(&self) -> &KGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<KGraph> {
        self.graph.clone()
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn vertex_op(&self, a: VertexId) -> &CMatrix {
        &self.vertex_ops[a]
    }

    pub fn edge_op(&self, e: EdgeId) -> &CMatrix {
        &self.edge_ops[e]
    }

    pub fn vertex_ops(&self) -> &[CMatrix] {
        &self.vertex_ops
    }

    pub fn edge_ops(&self) -> &[CMatrix] {
        &self.edge_ops
    }

    pub fn shape_cap(&self) -> &Shape {
        &self.shape_cap
    }

    pub fn with_shape_cap(mut self, cap: Shape) -> Self {
        assert_eq!(cap.rank(), self.graph.rank(), "cap rank mismatch");
        self.shape_cap = cap;
        self
    }

    /// True when `shape_cap` does not reach every nonempty shape.
    pub fn cap_truncates(&self) -> bool {
        match self.graph.acyclicity().max_shape {
            Some(max) => !max.le(&self.shape_cap),
            None => true,
        }
    }

    pub fn sigma(&self) -> SigmaData {
        SigmaData::from_projections(self.dim_h, &self.vertex_ops)
    }

    /// `V_λ` as the ordered product along the normal-form word, unchecked.
    pub fn product(&self, lambda: &Path) -> CMatrix {
        if lambda.is_vertex() {
            return self.vertex_ops[lambda.range()].clone();
        }
        if lambda.len() == 1 {
            return self.edge_ops[lambda.word()[0]].clone();
        }
        if let Some(m) = self.products.lock().unwrap().get(lambda) {
            return m.clone();
        }
        let word = lambda.word();
        let mut m = self.edge_ops[word[0]].clone();
        for &e in &word[1..] {
            m = &m * &self.edge_ops[e];
        }
        self.products.lock().unwrap().insert(lambda.clone(), m.clone());
        m
    }

    /// `V_λ`, after confirming every factorization of `λ` into edges yields the
    /// same product.
    pub fn extend(&self, lambda: &Path) -> Result<CMatrix, ContractionError> {
        if let Some((first, second, residual)) = self.inconsistency(lambda) {
            return Err(ContractionError::NotWellDefined { path: self.graph.label(lambda), first, second, residual });
        }
        Ok(self.product(lambda))
    }

    /// `V_{λμ}`, zero when `s(λ) != r(μ)`.
    pub fn compose_op(&self, lambda: &Path, mu: &Path) -> CMatrix {
        match self.graph.compose(lambda, mu) {
            Some(p) => self.product(&p),
            None => linalg::zeros(self.dim_h, self.dim_h),
        }
    }

    /// Worst disagreement among factorizations, as `(label, label, residual)`.
    /// Checks the split off of each possible first color and recurses.
    fn inconsistency(&self, lambda: &Path) -> Option<(String, String, f64)> {
        if lambda.len() <= 1 || self.consistent.lock().unwrap().contains(lambda) {
            return None;
        }
        let g = &self.graph;
        let reference = self.product(lambda);
        let scale = 1.0 + reference.norm();
        let mut worst: Option<(String, String, f64)> = None;
        for c in lambda.shape().support() {
            let unit = Shape::unit(g.rank(), c);
            let rest_shape = lambda.shape().checked_sub(&unit).unwrap();
            let (head, rest) = g.factor(lambda, &unit, &rest_shape).expect("shape contains e_c");
            if let Some(w) = self.inconsistency(&rest) {
                return Some(w);
            }
            let r = linalg::residual(&(self.product(&head) * self.product(&rest)), &reference);
            if r > EXTEND_REL_TOL * scale && worst.as_ref().is_none_or(|w| r > w.2) {
                worst = Some((format!("{}·{}", g.label(&head), g.label(&rest)), g.label(lambda), r));
            }
        }
        if worst.is_none() {
            self.consistent.lock().unwrap().insert(lambda.clone());
        }
        worst
    }

    /// Largest factorization disagreement over paths up to the cap.
    fn well_defined_check(&self, tol: f64) -> Check {
        let mut check = Check::new("well defined on paths", CheckKind::Residual);
        for p in self.graph.paths_upto(&self.shape_cap) {
            let (value, witness) = match self.inconsistency(&p) {
                Some((a, b, r)) => (r, format!("{a} vs {b}")),
                None => (0.0, String::new()),
            };
            check.record(value, tol, || witness);
        }
        check
    }

    pub fn is_nondegenerate(&self, tol: f64) -> bool {
        linalg::residual(&self.vertex_sum(), &linalg::identity(self.dim_h)) <= tol
    }

    /// `p = Σ_a V_a`.
    pub fn vertex_sum(&self) -> CMatrix {
        self.vertex_ops.iter().fold(linalg::zeros(self.dim_h, self.dim_h), |acc, v| acc + v)
    }

    /// The family compressed to `pH`, `p = Σ_a V_a`, with the isometry
    /// `pH → H` whose columns span `pH`.
    pub fn nondegenerate_part(&self) -> (LambdaContraction, CMatrix) {
        let u = linalg::projection_frame(&linalg::hermitian_part(&self.vertex_sum()));
        let compress = |m: &CMatrix| u.adjoint() * m * &u;
        let out = LambdaContraction::new(
            self.graph.clone(),
            u.ncols(),
            self.vertex_ops.iter().map(compress).collect(),
            self.edge_ops.iter().map(compress).collect(),
        )
        .expect("compression keeps dimensions consistent")
        .with_shape_cap(self.shape_cap.clone());
        (out, u)
    }

    /// Applies `f` to every operator. The new dimension is read off the images.
    pub fn map_ops(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Result<LambdaContraction, ContractionError> {
        let vertex_ops: Vec<CMatrix> = self.vertex_ops.iter().map(&f).collect();
        let dim = vertex_ops.first().map_or(self.dim_h, |m| m.nrows());
        Ok(LambdaContraction::new(self.graph.clone(), dim, vertex_ops, self.edge_ops.iter().map(&f).collect())?
            .with_shape_cap(self.shape_cap.clone()))
    }

    /// Replaces one edge operator.
    pub fn with_edge_op(&self, e: EdgeId, m: CMatrix) -> Result<LambdaContraction, ContractionError> {
        let mut edges = self.edge_ops.clone();
        edges[e] = m;
        Ok(LambdaContraction::new(self.graph.clone(), self.dim_h, self.vertex_ops.clone(), edges)?
            .with_shape_cap(self.shape_cap.clone()))
    }
}

fn projection_check(v: &LambdaContraction, tol: f64) -> Check {
    let g = v.graph();
    let mut check = Check::new("vertex operators are orthogonal projections", CheckKind::Residual);
    for a in 0..g.vertex_count() {
        let p = v.vertex_op(a);
        let r = linalg::residual(p, &p.adjoint()).max(linalg::residual(&(p * p), p));
        check.record(r, tol, || g.vertex_name(a).to_string());
    }
    check
}

fn orthogonality_check(v: &LambdaContraction, tol: f64) -> Check {
    let g = v.graph();
    let mut check = Check::new("vertex projections mutually orthogonal", CheckKind::Residual);
    for a in 0..g.vertex_count() {
        for b in 0..g.vertex_count() {
            if a != b {
                let r = (v.vertex_op(a) * v.vertex_op(b)).norm();
                check.record(r, tol, || format!("({}, {})", g.vertex_name(a), g.vertex_name(b)));
            }
        }
    }
    check
}

/// Pairs `(λ, μ)` of paths with `σ(λ) + σ(μ) <= cap`.
fn pairs_within<'a>(paths: &'a [Path], cap: &'a Shape) -> impl Iterator<Item = (&'a Path, &'a Path)> + 'a {
    paths.iter().flat_map(move |l| paths.iter().filter(move |m| (l.shape() + m.shape()).le(cap)).map(move |m| (l, m)))
}

fn multiplicativity_checks(v: &LambdaContraction, tol: f64, with_zero: bool) -> Vec<Check> {
    let g = v.graph();
    let paths = g.paths_upto(v.shape_cap());
    let mut zero = Check::new("(i) V_λ V_μ = 0 when s(λ) != r(μ)", CheckKind::Residual);
    let mut mult = Check::new("(ii) V_λ V_μ = V_λμ", CheckKind::Residual);
    for (l, m) in pairs_within(&paths, v.shape_cap()) {
        let prod = v.product(l) * v.product(m);
        let label = || format!("({}, {})", g.label(l), g.label(m));
        if l.source() == m.range() {
            let target = v.compose_op(l, m);
            mult.record(linalg::residual(&prod, &target), tol, label);
        } else if with_zero {
            zero.record(prod.norm(), tol, label);
        }
    }
    if with_zero {
        vec![zero, mult]
    } else {
        vec![mult]
    }
}

fn row_contractivity_check(v: &LambdaContraction, tol: f64) -> Check {
    let g = v.graph();
    let mut check = Check::new("(iii) Σ_{λ ∈ Λ^{e_j}} V_λ V_λ* <= I", CheckKind::Margin);
    let id = linalg::identity(v.dim_h());
    for j in 0..g.rank() {
        let mut sum = id.clone();
        for &e in g.edges_of_color(j) {
            let m = v.edge_op(e);
            sum -= m * m.adjoint();
        }
        check.record(linalg::psd_margin(&sum), tol, || format!("color {}", j + 1));
    }
    check
}

fn nondegenerate_flag(v: &LambdaContraction, tol: f64, report: &mut Report) {
    report.flags.insert("nondegenerate".into(), v.is_nondegenerate(tol));
}

/// Axioms (i)-(iv) of a Λ-contraction, (iii) on the generating shapes `e_j`.
pub fn check_lambda_contraction(v: &LambdaContraction, tol: f64) -> Report {
    let mut report = Report::new("lambda-contraction", tol);
    report.truncated = v.cap_truncates();
    report.push(v.well_defined_check(tol));
    for c in multiplicativity_checks(v, tol, true) {
        report.push(c);
    }
    report.push(row_contractivity_check(v, tol));
    report.push(projection_check(v, tol));
    nondegenerate_flag(v, tol, &mut report);
    report
}

/// Toeplitz axioms (i)-(iv) for all paths and shapes up to the cap.
pub fn check_toeplitz_family(x: &LambdaContraction, tol: f64) -> Report {
    let g = x.graph();
    let mut report = Report::new("toeplitz", tol);
    report.truncated = x.cap_truncates();
    report.push(projection_check(x, tol));
    report.push(orthogonality_check(x, tol));
    report.push(x.well_defined_check(tol));
    for c in multiplicativity_checks(x, tol, false) {
        report.push(c);
    }
    let paths = g.paths_upto(x.shape_cap());
    let mut iso = Check::new("(iii) X_λ* X_λ = X_s(λ)", CheckKind::Residual);
    for p in &paths {
        let m = x.product(p);
        iso.record(linalg::residual(&(m.adjoint() * &m), x.vertex_op(p.source())), tol, || g.label(p));
    }
    report.push(iso);
    let mut dom = Check::new("(iv) X_a >= Σ_{λ ∈ a Λ^n} X_λ X_λ*", CheckKind::Margin);
    for n in x.shape_cap().all_below() {
        if n.is_zero() {
            continue;
        }
        for a in 0..g.vertex_count() {
            let mut m = x.vertex_op(a).clone();
            for p in g.paths(&n, Some(a), None) {
                let xp = x.product(&p);
                m -= &xp * xp.adjoint();
            }
            dom.record(linalg::psd_margin(&m), tol, || format!("vertex {}, shape {n}", g.vertex_name(a)));
        }
    }
    report.push(dom);
    nondegenerate_flag(x, tol, &mut report);
    report
}

/// `‖X_μ* X_ν − Σ_{μα = νβ ∈ MCE(μ,ν)} X_α X_β*‖` for pairs with
/// `σ(μ) ∨ σ(ν) <= cap`.
pub fn nica_check(x: &LambdaContraction, tol: f64) -> Check {
    let g = x.graph();
    let paths = g.paths_upto(x.shape_cap());
    let mut check = Check::new("(v) X_μ* X_ν = Σ_MCE X_α X_β*", CheckKind::Residual);
    for mu in &paths {
        for nu in &paths {
            if !mu.shape().join(nu.shape()).le(x.shape_cap()) {
                continue;
            }
            let lhs = x.product(mu).adjoint() * x.product(nu);
            let mut rhs = linalg::zeros(x.dim_h(), x.dim_h());
            for ext in g.mce(mu, nu) {
                rhs += x.product(&ext.alpha) * x.product(&ext.beta).adjoint();
            }
            check.record(linalg::residual(&lhs, &rhs), tol, || format!("({}, {})", g.label(mu), g.label(nu)));
        }
    }
    check
}

/// Toeplitz axioms plus (v).
pub fn check_tck(x: &LambdaContraction, tol: f64) -> Report {
    let mut report = check_toeplitz_family(x, tol);
    report.name = "tck".into();
    let check = nica_check(x, tol);
    report.push(check);
    report
}

/// `T̃(n)`: `E(n) ⊗_σ H → H`, with column block `V_λ U_{s(λ)}` at slot `λ`.
pub fn ttilde(v: &LambdaContraction, n: &Shape) -> (CMatrix, BlockSpace) {
    let g = v.graph();
    let sigma = v.sigma();
    let space = BlockSpace::of_paths(g.paths(n, None, None), &sigma);
    let mut out = linalg::zeros(v.dim_h(), space.dim());
    for (k, slot) in space.slots().iter().enumerate() {
        let p = &slot[0];
        let block = v.product(p) * sigma.frame(p.source());
        out.view_mut((0, space.block(k).start), block.shape()).copy_from(&block);
    }
    (out, space)
}

/// Per color: `T̃(e_i) T̃(e_i)* = I_H` within `tol`.
pub fn is_coisometric(v: &LambdaContraction, tol: f64) -> Vec<bool> {
    let g = v.graph();
    let id = linalg::identity(v.dim_h());
    (0..g.rank())
        .map(|i| {
            let (t, _) = ttilde(v, &Shape::unit(g.rank(), i));
            linalg::residual(&(&t * t.adjoint()), &id) <= tol
        })
        .collect()
}

/// `I_{E(m)} ⊗ T̃(n)` from `E(m) ⊗ E(n) ⊗_σ H` to `E(m) ⊗_σ H`: the slot
/// `(λ, μ)` maps into slot `λ` by `U_{s(λ)}* V_μ U_{s(μ)}`.
pub fn amplified(v: &LambdaContraction, sigma: &SigmaData, pairs: &BlockSpace, singles: &BlockSpace) -> CMatrix {
    let mut out = linalg::zeros(singles.dim(), pairs.dim());
    for (k, slot) in pairs.slots().iter().enumerate() {
        let (l, mu) = (&slot[0], &slot[1]);
        let t = singles.slot(std::slice::from_ref(l)).expect("first factor present");
        let block = sigma.frame(l.source()).adjoint() * v.product(mu) * sigma.frame(mu.source());
        out.view_mut((singles.block(t).start, pairs.block(k).start), block.shape()).copy_from(&block);
    }
    out
}

/// Representation-side view of a family: the conditions under which
/// `(σ, T^(1), ..., T^(r))` is a completely contractive (and optionally
/// isometric) representation, evaluated on the matrices `T̃(e_j)`.
pub fn representation_report(v: &LambdaContraction, tol: f64) -> Report {
    let g = v.graph();
    let r = g.rank();
    let sigma = v.sigma();
    let mut report = Report::new("representation", tol);
    report.truncated = v.cap_truncates();
    report.push(projection_check(v, tol));
    report.push(orthogonality_check(v, tol));

    let mut cov = Check::new("T(a ξ b) = σ(a) T(ξ) σ(b)", CheckKind::Residual);
    for (e, edge) in g.edges().iter().enumerate() {
        let m = v.edge_op(e);
        let sandwiched = v.vertex_op(edge.range) * m * v.vertex_op(edge.source);
        cov.record(linalg::residual(&sandwiched, m), tol, || edge.name.clone());
    }
    report.push(cov);

    let mut norm = Check::new("‖T̃(e_j)‖ <= 1", CheckKind::Residual);
    let mut iso = Check::new("T̃(e_j) isometric", CheckKind::Residual);
    let mut tt = Vec::with_capacity(r);
    for j in 0..r {
        let (t, space) = ttilde(v, &Shape::unit(r, j));
        norm.record(linalg::spectral_norm(&t) - 1.0, tol, || format!("color {}", j + 1));
        iso.record(linalg::residual(&(t.adjoint() * &t), &linalg::identity(space.dim())), tol, || {
            format!("color {}", j + 1)
        });
        tt.push((t, space));
    }
    report.push(norm);

    let mut compat = Check::new("T̃_i (I ⊗ T̃_j) = T̃_j (I ⊗ T̃_i)(t_ij ⊗ I)", CheckKind::Residual);
    for i in 0..r {
        for j in 0..r {
            if i == j {
                continue;
            }
            let (ei, ej) = (Shape::unit(r, i), Shape::unit(r, j));
            let pij = BlockSpace::pairs(g, &ei, &ej, &sigma);
            let pji = BlockSpace::pairs(g, &ej, &ei, &sigma);
            let lhs = &tt[i].0 * amplified(v, &sigma, &pij, &tt[i].1);
            let rhs = &tt[j].0 * amplified(v, &sigma, &pji, &tt[j].1) * flip_matrix(g, &pij, &pji);
            compat.record(linalg::residual(&lhs, &rhs), tol, || format!("colors ({}, {})", i + 1, j + 1));
        }
    }
    report.push(compat);
    report.flags.insert("isometric".into(), iso.holds);
    report.checks.push(iso);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::re;

    #[test]
    fn extend_examples() {
        let (g, v) = fixtures::fix_b_tck();
        let a = g.path_from_names(&["u"]).unwrap();
        assert_eq!(v.extend(&a).unwrap(), *v.vertex_op(a.range()));
        let nu = g.path_from_names(&["b1", "r2"]).unwrap();
        let e = |n: &str| v.edge_op(g.edge_id(n).unwrap()).clone();
        let ext = v.extend(&nu).unwrap();
        assert!(linalg::residual(&ext, &(e("b1") * e("r2"))) < 1e-14);
        assert!(linalg::residual(&ext, &(e("r1") * e("b2"))) < 1e-14);
        let b1 = g.path_from_names(&["b1"]).unwrap();
        let b2 = g.path_from_names(&["b2"]).unwrap();
        assert_eq!(v.compose_op(&b1, &b2), linalg::zeros(v.dim_h(), v.dim_h()));
    }

    #[test]
    fn extend_detects_inconsistent_square() {
        let (g, v) = fixtures::fix_b_tck();
        let r1 = g.edge_id("r1").unwrap();
        let broken = v.with_edge_op(r1, v.edge_op(r1) * re(0.5)).unwrap();
        let nu = g.path_from_names(&["b1", "r2"]).unwrap();
        assert!(matches!(broken.extend(&nu), Err(ContractionError::NotWellDefined { .. })));
        assert!(!check_lambda_contraction(&broken, 1e-9).holds);
    }

    #[test]
    fn lambda_contraction_examples() {
        let (_, v) = fixtures::fix_a(0.5);
        let rep = check_lambda_contraction(&v, 1e-9);
        assert!(rep.holds, "{}", rep.to_text());
        let m = rep.check("(iii) Σ_{λ ∈ Λ^{e_j}} V_λ V_λ* <= I").unwrap().worst.unwrap();
        assert!((m - 0.75).abs() < 1e-12);

        let (_, v) = fixtures::fix_a(2.0);
        let rep = check_lambda_contraction(&v, 1e-9);
        assert!(!rep.holds);
        let m = rep.check("(iii) Σ_{λ ∈ Λ^{e_j}} V_λ V_λ* <= I").unwrap().worst.unwrap();
        assert!((m + 3.0).abs() < 1e-12);

        let (_, v) = fixtures::fix_a(0.5);
        let zero = v.map_ops(|m| m * re(0.0)).unwrap();
        assert!(check_lambda_contraction(&zero, 1e-9).holds);
    }

    #[test]
    fn toeplitz_examples() {
        let (_, v) = fixtures::fix_a(0.5);
        let rep = check_toeplitz_family(&v, 1e-9);
        assert!(!rep.holds);
        assert!(!rep.check("(iii) X_λ* X_λ = X_s(λ)").unwrap().holds);
        let (_, id) = fixtures::single_vertex_identity(3);
        assert!(check_toeplitz_family(&id, 1e-9).holds);
        assert!(check_tck(&id, 1e-9).holds);
    }

    #[test]
    fn tck_examples() {
        let (_, v) = fixtures::fix_b_tck();
        assert!(check_tck(&v, 1e-9).holds);
        let (g, x) = fixtures::fix_b_toeplitz_not_tck();
        assert!(check_toeplitz_family(&x, 1e-9).holds);
        let rep = check_tck(&x, 1e-9);
        assert!(!rep.holds);
        let nica = rep.checks.last().unwrap();
        let b1 = g.path_from_names(&["b1"]).unwrap();
        let r1 = g.path_from_names(&["r1"]).unwrap();
        let witness = format!("({}, {})", g.label(&b1), g.label(&r1));
        assert!(nica.violations.iter().any(|v| v.witness == witness));
    }

    #[test]
    fn ttilde_examples() {
        let (g, v) = fixtures::fix_a(0.5);
        let (t0, s0) = ttilde(&v, &Shape::zero(1));
        assert_eq!(s0.dim(), 2);
        assert!(linalg::residual(&(&t0 * t0.adjoint()), &linalg::identity(2)) < 1e-14);
        let (t1, s1) = ttilde(&v, &Shape::new(vec![1]));
        assert_eq!(s1.slots().len(), 1);
        assert_eq!(t1.shape(), (2, 1));
        let vf = v.edge_op(g.edge_id("f").unwrap());
        assert_eq!(t1[(0, 0)], vf[(0, 1)]);
        for n in [Shape::zero(1), Shape::new(vec![1])] {
            assert!(linalg::spectral_norm(&ttilde(&v, &n).0) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn coisometry_examples() {
        let (_, v) = fixtures::fix_a(0.5);
        assert_eq!(is_coisometric(&v, 1e-9), vec![false]);
        // literal T̃T̃* = I_H fails for c = 1: the range of V_f is V_a H only
        let (_, v) = fixtures::fix_a(1.0);
        assert_eq!(is_coisometric(&v, 1e-9), vec![false]);
        let (_, v) = fixtures::cyclic_unitary(2);
        assert_eq!(is_coisometric(&v, 1e-9), vec![true, true]);
        let (_, id) = fixtures::two_color_no_edges();
        assert_eq!(is_coisometric(&id, 1e-9), vec![false, false]);
    }

    #[test]
    fn representation_agrees_on_fixtures() {
        for (_, v) in [fixtures::fix_a(0.5), fixtures::fix_b_tck(), fixtures::fix_b_toeplitz_not_tck()] {
            assert!(representation_report(&v, 1e-9).holds);
        }
        let (_, v) = fixtures::fix_a(2.0);
        assert!(!representation_report(&v, 1e-9).holds);
    }

    #[test]
    fn nondegenerate_compression() {
        let (_, v) = fixtures::fix_b_toeplitz_not_tck();
        assert!(!v.is_nondegenerate(1e-9) || v.dim_h() > 0);
        let (w, u) = v.nondegenerate_part();
        assert!(w.is_nondegenerate(1e-9));
        assert!(linalg::residual(&(u.adjoint() * &u), &linalg::identity(w.dim_h())) < 1e-12);
    }
}
