//! Poisson kernel and transform, the minimal isometric dilation realised
//! inside `F ⊗_σ H`, and the checks a dilation is expected to pass.
//!
//! For an acyclic graph every sum defining `Δ_s`, `W` and the Poisson
//! transform is finite once the Fock space reaches `N_max`, so the dilation
//! is computed at `s = 1` directly.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{check_popescu, defect, PopescuGrid};
use crate::contraction::{check_lambda_contraction, check_tck, check_toeplitz_family, is_coisometric, nica_check};
use crate::contraction::{ContractionError, ContractionSpec, LambdaContraction};
use crate::kgraph::{Path, Shape};
use crate::linalg::{self, matrix_json, CMatrix, LinalgError};
use crate::prodsys::{FockSpace, NOPoly};
use crate::report::{Check, CheckKind, Report};

/// Rank threshold when orthonormalizing the spanning set of `K`.
pub const SPAN_TOL: f64 = 1e-8;

/// Defect eigenvalues at or below this (relative to `‖Δ_s‖`) are rounding
/// noise; their square roots would otherwise reach `SPAN_TOL`.
pub const DEFECT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DilationError {
    #[error("exact mode needs an acyclic graph; this one has a directed cycle")]
    ExactModeUnavailable,
    #[error("input is not a Λ-contraction")]
    NotContraction,
    #[error("Popescu condition fails (worst margin {margin:e})")]
    PopescuFails { margin: f64 },
    #[error("defect operator at s = {s} is not positive: {source}")]
    Defect { s: f64, source: LinalgError },
    #[error("W*W differs from the identity by {0:e}")]
    GammaMismatch(f64),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Truncated,
}

/// `W: H → F ⊗_σ H` with `Wξ = ⊕_λ s^{|λ|} Δ_s^{1/2} V_λ* ξ`.
#[derive(Clone, Debug)]
pub struct PoissonKernel {
    pub s: f64,
    pub w: CMatrix,
    pub fock: FockSpace,
    /// `‖W*W − I_H‖`.
    pub gamma_residual: f64,
}

pub fn poisson_kernel(
    v: &LambdaContraction,
    s: f64,
    cap: Option<&Shape>,
    tol: f64,
) -> Result<PoissonKernel, DilationError> {
    let g = v.graph();
    let cap = cap.cloned().unwrap_or_else(|| v.shape_cap().clone());
    let sigma = v.sigma();
    let fock = FockSpace::new(g, &sigma, &cap);
    let root = defect_root(v, s, tol)?;
    let mut w = linalg::zeros(fock.dim(), v.dim_h());
    for (k, slot) in fock.space().slots().iter().enumerate() {
        let p = &slot[0];
        let block =
            sigma.frame(p.source()).adjoint() * &root * v.product(p).adjoint() * linalg::re(s.powi(p.len() as i32));
        let rows = fock.space().block(k);
        w.view_mut((rows.start, 0), block.shape()).copy_from(&block);
    }
    let gamma_residual = linalg::residual(&(w.adjoint() * &w), &linalg::identity(v.dim_h()));
    Ok(PoissonKernel { s, w, fock, gamma_residual })
}

/// `Δ_s^{1/2}` with eigenvalues below [`DEFECT_FLOOR`] set to zero.
pub fn defect_root(v: &LambdaContraction, s: f64, tol: f64) -> Result<CMatrix, DilationError> {
    let d = linalg::hermitian_part(&defect(v, s));
    if d.nrows() == 0 {
        return Ok(d);
    }
    let eig = linalg::hermitian_eigen(&d);
    let min = eig.values[0];
    if min < -tol {
        return Err(DilationError::Defect { s, source: LinalgError::NotPsd { min_eig: min, tol } });
    }
    let floor = DEFECT_FLOOR * eig.values.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    let roots: Vec<_> = eig.values.iter().map(|&x| linalg::re(if x <= floor { 0.0 } else { x.sqrt() })).collect();
    Ok(&eig.vectors * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots)) * eig.vectors.adjoint())
}

/// `R_s(p) = W* (p ⊗ I) W`.
pub fn poisson_transform(v: &LambdaContraction, kernel: &PoissonKernel, p: &NOPoly) -> CMatrix {
    kernel.w.adjoint() * p.eval_fock(v.graph(), &kernel.fock) * &kernel.w
}

/// An isometric dilation candidate: a family `X` on `K` and the isometry
/// `H → K`.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub x: LambdaContraction,
    pub embed: CMatrix,
}

#[derive(Clone, Debug)]
pub struct DilationResult {
    pub mode: Mode,
    pub dilation: Dilation,
    /// Orthonormal basis of `K` inside `F ⊗_σ H`, as columns.
    pub k_basis: CMatrix,
    /// When the input was degenerate: the isometry from the range of `Σ V_a`
    /// into the original space. `embed` starts from that range.
    pub support: Option<CMatrix>,
    /// The family actually dilated (the input, or its nondegenerate part).
    pub dilated: LambdaContraction,
    pub diagnostics: Report,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilateOptions {
    pub tol: f64,
    pub grid: PopescuGrid,
    pub seed: u64,
}

impl Default for DilateOptions {
    fn default() -> Self {
        DilateOptions { tol: linalg::DEFAULT_TOL, grid: PopescuGrid::default(), seed: 0 }
    }
}

/// The minimal isometric dilation of a Popescu family on an acyclic graph.
pub fn dilate(v: &LambdaContraction, opts: DilateOptions) -> Result<DilationResult, DilationError> {
    let g = v.graph();
    let Some(max) = g.acyclicity().max_shape else {
        return Err(DilationError::ExactModeUnavailable);
    };
    if !check_lambda_contraction(v, opts.tol).holds {
        return Err(DilationError::NotContraction);
    }
    let (v, support) = if v.is_nondegenerate(opts.tol) {
        (v.clone().with_shape_cap(max.clone()), None)
    } else {
        let (w, u) = v.nondegenerate_part();
        (w.with_shape_cap(max.clone()), Some(u))
    };
    let popescu = check_popescu(&v, opts.grid, opts.tol);
    if !popescu.holds {
        return Err(DilationError::PopescuFails { margin: popescu.worst_margin() });
    }
    let kernel = poisson_kernel(&v, 1.0, Some(&max), opts.tol)?;
    if kernel.gamma_residual > opts.tol.max(1e-9) * 10.0 {
        return Err(DilationError::GammaMismatch(kernel.gamma_residual));
    }

    let paths = g.paths_upto(&max);
    let creation: Vec<CMatrix> = paths.par_iter().map(|p| kernel.fock.creation_matrix(g, p)).collect();
    let co: Vec<CMatrix> = creation.par_iter().map(|l| l.adjoint() * &kernel.w).collect();
    let mut terms: Vec<(usize, usize)> = Vec::new();
    for (i, l) in paths.iter().enumerate() {
        for (j, m) in paths.iter().enumerate() {
            if l.source() == m.source() {
                terms.push((i, j));
            }
        }
    }
    terms.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let blocks: Vec<CMatrix> = terms.par_iter().map(|&(i, j)| &creation[i] * &co[j]).collect();
    let span = linalg::hstack(&blocks, kernel.fock.dim());
    let q = linalg::orthonormalize(&span, SPAN_TOL).basis;

    let compress = |l: &CMatrix| q.adjoint() * l * &q;
    let vertex_ops =
        (0..g.vertex_count()).map(|a| compress(&kernel.fock.creation_matrix(g, &g.vertex_path(a)))).collect();
    let edge_ops = (0..g.edges().len()).map(|e| compress(&kernel.fock.creation_matrix(g, &g.edge_path(e)))).collect();
    let x = LambdaContraction::new(v.graph_arc(), q.ncols(), vertex_ops, edge_ops)?.with_shape_cap(max.clone());
    let embed = q.adjoint() * &kernel.w;
    let dilation = Dilation { x, embed };

    let mut diagnostics = verify_dilation(&v, &dilation, opts.tol)?;
    let mut inv = Check::new("K reduces every L_λ", CheckKind::Residual);
    let proj = linalg::identity(q.nrows()) - &q * q.adjoint();
    for (p, l) in paths.iter().zip(&creation) {
        let r = (&proj * l * &q).norm().max((&proj * l.adjoint() * &q).norm());
        inv.record(r, opts.tol, || g.label(p));
    }
    diagnostics.push(inv);
    let mut gamma = Check::new("W*W = I_H", CheckKind::Residual);
    gamma.record(kernel.gamma_residual, opts.tol, || "s = 1".into());
    diagnostics.push(gamma);
    diagnostics.flags.insert("compressed".into(), support.is_some());
    Ok(DilationResult { mode: Mode::Exact, dilation, k_basis: q, support, dilated: v, diagnostics })
}

fn all_paths(v: &LambdaContraction) -> Vec<Path> {
    v.graph().paths_upto(v.shape_cap())
}

/// Every property of an isometric dilation: the embedding is an isometry,
/// (a) Toeplitz axioms, (b) axiom (v), (c) `X_λ* embed = embed V_λ*`,
/// (d) `P_H X_λ X_μ*|_H = V_λ V_μ*`, (e) minimality, (f) nondegeneracy.
pub fn verify_dilation(v: &LambdaContraction, d: &Dilation, tol: f64) -> Result<Report, DilationError> {
    let g = v.graph();
    let x = &d.x;
    let e = &d.embed;
    if e.nrows() != x.dim_h() || e.ncols() != v.dim_h() {
        return Err(DilationError::Shape(format!(
            "embed is {}x{}, expected {}x{}",
            e.nrows(),
            e.ncols(),
            x.dim_h(),
            v.dim_h()
        )));
    }
    let mut report = Report::new("dilation", tol);
    report.truncated = x.cap_truncates();

    let mut iso = Check::new("embed*·embed = I_H", CheckKind::Residual);
    iso.record(linalg::residual(&(e.adjoint() * e), &linalg::identity(v.dim_h())), tol, || "embed".into());
    report.push(iso);

    let mut toeplitz = check_toeplitz_family(x, tol);
    toeplitz.name = "(a) toeplitz".into();
    report.absorb(toeplitz);
    let mut nica = nica_check(x, tol);
    nica.label = format!("(b) {}", nica.label);
    report.push(nica);

    let paths = all_paths(v);
    let mut adj = Check::new("(c) X_λ*·embed = embed·V_λ*", CheckKind::Residual);
    for p in &paths {
        let r = linalg::residual(&(x.product(p).adjoint() * e), &(e * v.product(p).adjoint()));
        adj.record(r, tol, || g.label(p));
    }
    report.push(adj);

    let xe: Vec<CMatrix> = paths.iter().map(|p| x.product(p).adjoint() * e).collect();
    let mut comp = Check::new("(d) P_H X_λ X_μ*|_H = V_λ V_μ*", CheckKind::Residual);
    for (i, l) in paths.iter().enumerate() {
        for (j, m) in paths.iter().enumerate() {
            let lhs = xe[i].adjoint() * &xe[j];
            let rhs = v.product(l) * v.product(m).adjoint();
            comp.record(linalg::residual(&lhs, &rhs), tol, || format!("({}, {})", g.label(l), g.label(m)));
        }
    }
    report.push(comp);

    let blocks: Vec<CMatrix> = paths.iter().map(|p| x.product(p) * e).collect();
    let rank = linalg::orthonormalize(&linalg::hstack(&blocks, x.dim_h()), SPAN_TOL).rank;
    let mut minimal = Check::new("(e) K = span{X_λ embed H}", CheckKind::Residual);
    minimal.record_bool(rank == x.dim_h(), || format!("rank {rank} of dim K {}", x.dim_h()));
    report.push(minimal);

    let mut unital = Check::new("(f) Σ X_a = I_K when Σ V_a = I_H", CheckKind::Residual);
    if v.is_nondegenerate(tol) {
        unital.record(linalg::residual(&x.vertex_sum(), &linalg::identity(x.dim_h())), tol, || "Σ X_a".into());
    }
    report.push(unital);
    Ok(report)
}

/// `‖P_H X_λ* X_μ|_H − V_λ* V_μ‖` over pairs with disjoint color support.
pub fn check_regular(v: &LambdaContraction, d: &Dilation, tol: f64) -> Report {
    let g = v.graph();
    let mut report = Report::new("regular", tol);
    report.truncated = v.cap_truncates();
    let mut check = Check::new("P_H X_λ* X_μ|_H = V_λ* V_μ", CheckKind::Residual);
    let paths = all_paths(v);
    for l in &paths {
        for m in &paths {
            if !l.shape().meet(m.shape()).is_zero() {
                continue;
            }
            let lhs = d.embed.adjoint() * d.x.product(l).adjoint() * d.x.product(m) * &d.embed;
            let rhs = v.product(l).adjoint() * v.product(m);
            check.record(linalg::residual(&lhs, &rhs), tol, || format!("({}, {})", g.label(l), g.label(m)));
        }
    }
    report.push(check);
    report
}

/// `‖P_H X_λ* X_μ|_H − Σ_{λα = μβ ∈ MCE(λ,μ)} V_α V_β*‖` over pairs with
/// disjoint color support.
pub fn check_star_regular(v: &LambdaContraction, d: &Dilation, tol: f64) -> Report {
    let g = v.graph();
    let mut report = Report::new("star-regular", tol);
    report.truncated = v.cap_truncates();
    let mut check = Check::new("P_H X_λ* X_μ|_H = Σ_MCE V_α V_β*", CheckKind::Residual);
    let paths = all_paths(v);
    for l in &paths {
        for m in &paths {
            if !l.shape().meet(m.shape()).is_zero() {
                continue;
            }
            let lhs = d.embed.adjoint() * d.x.product(l).adjoint() * d.x.product(m) * &d.embed;
            let mut rhs = linalg::zeros(v.dim_h(), v.dim_h());
            for ext in g.mce(l, m) {
                rhs += v.product(&ext.alpha) * v.product(&ext.beta).adjoint();
            }
            check.record(linalg::residual(&lhs, &rhs), tol, || format!("({}, {})", g.label(l), g.label(m)));
        }
    }
    report.push(check);
    report
}

/// Doubly commuting (axiom (v) for `X`) and *-regular must agree.
pub fn check_dc_streg_equivalence(v: &LambdaContraction, d: &Dilation, tol: f64) -> Report {
    let tck = check_tck(&d.x, tol);
    let streg = check_star_regular(v, d, tol);
    let mut report = Report::new("dc-streg-equivalence", tol);
    report.truncated = v.cap_truncates();
    report.flags.insert("doubly_commuting".into(), tck.holds);
    report.flags.insert("star_regular".into(), streg.holds);
    let mut agree = Check::new("doubly commuting ⟺ *-regular", CheckKind::Residual);
    agree.record_bool(tck.holds == streg.holds, || format!("tck {} vs star-regular {}", tck.holds, streg.holds));
    report.push(agree);
    if tck.holds != streg.holds {
        report.notes.push(tck.to_text());
        report.notes.push(streg.to_text());
    }
    report
}

/// When `V` is coisometric, so is the dilation.
pub fn check_coisometric_inheritance(v: &LambdaContraction, d: &Dilation, tol: f64) -> Report {
    if !is_coisometric(v, tol).iter().all(|&b| b) {
        return Report::not_applicable("coisometric-inheritance", tol, "input is not coisometric");
    }
    let mut report = Report::new("coisometric-inheritance", tol);
    report.truncated = v.cap_truncates();
    let mut check = Check::new("T̃_X(e_i) T̃_X(e_i)* = I_K", CheckKind::Residual);
    for (i, ok) in is_coisometric(&d.x, tol).into_iter().enumerate() {
        check.record_bool(ok, || format!("color {}", i + 1));
    }
    report.push(check);
    report
}

/// The table `⟨X_λ embed ξ_k, X_μ embed ξ_l⟩` over paths up to the cap;
/// equal tables certify unitary equivalence of minimal dilations.
pub fn gram_table(v: &LambdaContraction, d: &Dilation) -> CMatrix {
    let paths = all_paths(v);
    let blocks: Vec<CMatrix> = paths.iter().map(|p| d.x.product(p) * &d.embed).collect();
    let m = linalg::hstack(&blocks, d.x.dim_h());
    m.adjoint() * m
}

/// DilationResult JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationJson {
    #[serde(default = "crate::io::format_version")]
    pub format: u32,
    pub mode: Mode,
    #[serde(rename = "dimK")]
    pub dim_k: usize,
    #[serde(rename = "dimH")]
    pub dim_h: usize,
    #[serde(with = "matrix_json")]
    pub embed: CMatrix,
    #[serde(rename = "X")]
    pub x: ContractionSpec,
    #[serde(default, with = "optional_matrix", skip_serializing_if = "Option::is_none")]
    pub support: Option<CMatrix>,
    #[serde(default, rename = "K_basis", with = "optional_matrix", skip_serializing_if = "Option::is_none")]
    pub k_basis: Option<CMatrix>,
    #[serde(default)]
    pub diagnostics: Option<Report>,
}

mod optional_matrix {
    use super::{matrix_json, CMatrix};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => matrix_json::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMatrix>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "matrix_json")] CMatrix);
        Ok(Option::<W>::deserialize(d)?.map(|W(m)| m))
    }
}

impl DilationResult {
    pub fn to_json(&self) -> DilationJson {
        DilationJson {
            format: crate::io::FORMAT_VERSION,
            mode: self.mode,
            dim_k: self.dilation.x.dim_h(),
            dim_h: self.dilated.dim_h(),
            embed: self.dilation.embed.clone(),
            x: self.dilation.x.to_spec(),
            support: self.support.clone(),
            k_basis: Some(self.k_basis.clone()),
            diagnostics: Some(self.diagnostics.clone()),
        }
    }
}

impl DilationJson {
    /// The dilation described by this JSON, over the given graph.
    pub fn dilation(&self, v: &LambdaContraction) -> Result<Dilation, DilationError> {
        let x = LambdaContraction::from_spec(v.graph_arc(), &self.x)?.with_shape_cap(v.shape_cap().clone());
        if x.dim_h() != self.dim_k {
            return Err(DilationError::Shape(format!("X has dimension {}, dimK is {}", x.dim_h(), self.dim_k)));
        }
        Ok(Dilation { x, embed: self.embed.clone() })
    }
}

/// Residuals of all Poisson-transform identities on terms up to the cap:
/// `R_s(L_λ L_μ*) = s^{|λ|+|μ|} V_λ V_μ*`.
pub fn poisson_term_residuals(v: &LambdaContraction, kernel: &PoissonKernel) -> BTreeMap<(Path, Path), f64> {
    let g = v.graph();
    let paths = g.paths_upto(kernel.fock.cap());
    let mut out = BTreeMap::new();
    for l in &paths {
        for m in &paths {
            if l.source() != m.source() {
                continue;
            }
            let p = NOPoly::term(l, m, linalg::re(1.0));
            let lhs = poisson_transform(v, kernel, &p);
            let rhs = v.product(l) * v.product(m).adjoint() * linalg::re(kernel.s.powi((l.len() + m.len()) as i32));
            out.insert((l.clone(), m.clone()), linalg::residual(&lhs, &rhs));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{diag, re, residual};

    #[test]
    fn kernel_on_fix_a() {
        let (g, v) = fixtures::fix_a(0.5);
        let k = poisson_kernel(&v, 1.0, None, 1e-9).unwrap();
        assert_eq!(k.w.shape(), (3, 2));
        assert!(k.gamma_residual < 1e-14);
        let root = linalg::psd_sqrt(&diag(&[0.75, 1.0]), 1e-9).unwrap();
        let f = g.path_from_names(&["f"]).unwrap();
        let block = k.fock.block_of(&f).unwrap();
        let expected = root.row(1) * v.product(&f).adjoint();
        assert!((k.w.rows(block.start, 1) - expected).norm() < 1e-14);
    }

    #[test]
    fn kernel_isometric_on_toeplitz_and_trivial_inputs() {
        let (_, v) = fixtures::fix_a(1.0);
        assert!(poisson_kernel(&v, 1.0, None, 1e-9).unwrap().gamma_residual < 1e-14);
        let (_, id) = fixtures::single_vertex_identity(2);
        let k = poisson_kernel(&id, 1.0, None, 1e-9).unwrap();
        assert!(residual(&k.w, &linalg::identity(2)) < 1e-14);
    }

    #[test]
    fn transform_examples() {
        let (g, v) = fixtures::fix_a(0.5);
        let k = poisson_kernel(&v, 0.8, None, 1e-9).unwrap();
        let f = g.path_from_names(&["f"]).unwrap();
        let a = g.path_from_names(&["a"]).unwrap();
        let rf = poisson_transform(&v, &k, &NOPoly::term(&f, &f, re(1.0)));
        assert!(residual(&rf, &(v.product(&f) * v.product(&f).adjoint() * re(0.64))) < 1e-12);
        let k1 = poisson_kernel(&v, 1.0, None, 1e-9).unwrap();
        let ra = poisson_transform(&v, &k1, &NOPoly::term(&a, &a, re(1.0)));
        assert!(residual(&ra, v.vertex_op(a.range())) < 1e-12);

        let (g, v) = fixtures::fix_b_tck();
        let k = poisson_kernel(&v, 1.0, None, 1e-9).unwrap();
        let nu = g.path_from_names(&["b1", "r2"]).unwrap();
        let r1 = g.path_from_names(&["r1"]).unwrap();
        let lhs = poisson_transform(&v, &k, &NOPoly::term(&nu, &g.path_from_names(&["b2"]).unwrap(), re(1.0)));
        let rhs = v.product(&nu) * v.product(&g.path_from_names(&["b2"]).unwrap()).adjoint();
        assert!(residual(&lhs, &rhs) < 1e-12);
        assert!(poisson_term_residuals(&v, &k).values().all(|&r| r < 1e-12));
        let _ = r1;
    }

    #[test]
    fn dilate_fix_a() {
        let (_, v) = fixtures::fix_a(0.5);
        let d = dilate(&v, DilateOptions::default()).unwrap();
        assert_eq!(d.dilation.x.dim_h(), 3);
        assert!(d.diagnostics.holds, "{}", d.diagnostics.to_text());
        let xf = d.dilation.x.edge_op(0);
        assert!(linalg::classify(xf, 1e-9).contains(&linalg::MatrixClass::PartialIsometry));
        assert!(check_regular(&v, &d.dilation, 1e-8).holds);
        assert!(check_star_regular(&v, &d.dilation, 1e-8).holds);
        assert!(!check_coisometric_inheritance(&v, &d.dilation, 1e-9).applicable);
    }

    #[test]
    fn dilate_tck_input_is_unitarily_equivalent() {
        let (_, v) = fixtures::fix_b_tck();
        let d = dilate(&v, DilateOptions::default()).unwrap();
        assert!(d.diagnostics.holds);
        assert_eq!(d.dilation.x.dim_h(), v.dim_h());
        assert!(
            residual(
                &gram_table(&v, &d.dilation),
                &gram_table(&v, &Dilation { x: v.clone(), embed: linalg::identity(v.dim_h()) })
            ) < 1e-10
        );
    }

    #[test]
    fn dilate_trivial_graph() {
        let (_, id) = fixtures::single_vertex_identity(2);
        let d = dilate(&id, DilateOptions::default()).unwrap();
        assert_eq!(d.dilation.x.dim_h(), 2);
        assert!(d.diagnostics.holds);
    }

    #[test]
    fn dilate_refuses_cycles_and_popescu_failures() {
        let (_, v) = fixtures::fix_c();
        assert_eq!(dilate(&v, DilateOptions::default()).unwrap_err(), DilationError::ExactModeUnavailable);
    }

    #[test]
    fn non_doubly_commuting_dilation_fails_both_sides() {
        let (v, d) = fixtures::non_dc_minimal_dilation();
        assert!(verify_dilation(&v, &d, 1e-9).unwrap().check("(e) K = span{X_λ embed H}").unwrap().holds);
        let eq = check_dc_streg_equivalence(&v, &d, 1e-9);
        assert!(eq.holds);
        assert!(!eq.flags["doubly_commuting"]);
        assert!(!eq.flags["star_regular"]);
        assert!(!check_regular(&v, &d, 1e-9).holds);
    }

    #[test]
    fn seeds_give_equivalent_dilations() {
        let (_, v) = fixtures::fix_a(0.5);
        let a = dilate(&v, DilateOptions { seed: 1, ..Default::default() }).unwrap();
        let b = dilate(&v, DilateOptions { seed: 2, ..Default::default() }).unwrap();
        assert!(residual(&gram_table(&v, &a.dilation), &gram_table(&v, &b.dilation)) < 1e-10);
    }

    #[test]
    fn json_roundtrip() {
        let (_, v) = fixtures::fix_a(0.5);
        let d = dilate(&v, DilateOptions::default()).unwrap();
        let text = serde_json::to_string(&d.to_json()).unwrap();
        let back: DilationJson = serde_json::from_str(&text).unwrap();
        let dil = back.dilation(&v).unwrap();
        let again = verify_dilation(&v, &dil, 1e-9).unwrap();
        assert!(again.holds);
    }
}
