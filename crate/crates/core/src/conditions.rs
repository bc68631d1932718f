//! The dilation-existence conditions: Popescu positivity of the defect
//! operators, the Brehmer-Solel inequalities, and double commutativity
//! (with its kernel reformulation for isometric families).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contraction::{amplified, ttilde, LambdaContraction};
use crate::kgraph::Shape;
use crate::linalg::{self, CMatrix};
use crate::prodsys::{flip_matrix, BlockSpace};
use crate::report::{Check, CheckKind, Report};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("family is not isometric: {0}")]
    NotIsometric(String),
}

/// Sample points for the Popescu condition: `count` evenly spaced values
/// strictly inside `(rho, 1)`, plus the endpoint `s = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopescuGrid {
    pub rho: f64,
    pub count: usize,
}

impl Default for PopescuGrid {
    fn default() -> Self {
        PopescuGrid { rho: 0.5, count: 32 }
    }
}

impl PopescuGrid {
    pub fn points(&self) -> Vec<f64> {
        (1..=self.count).map(|k| self.rho + (1.0 - self.rho) * k as f64 / (self.count + 1) as f64).collect()
    }
}

/// `Δ_s = Σ_{σ(μ) <= e} (−s²)^{|μ|} V_μ V_μ*`.
pub fn defect(v: &LambdaContraction, s: f64) -> CMatrix {
    let g = v.graph();
    let mut out = linalg::zeros(v.dim_h(), v.dim_h());
    for mu in g.paths_upto(&Shape::ones(g.rank())) {
        let m = v.product(&mu);
        let w = (-s * s).powi(mu.len() as i32);
        out += (&m * m.adjoint()) * linalg::re(w);
    }
    out
}

/// Compresses a degenerate family to the range of `Σ V_a`, noting it.
fn unitalized(v: &LambdaContraction, tol: f64, report: &mut Report) -> LambdaContraction {
    if v.is_nondegenerate(tol) {
        return v.clone();
    }
    let (w, _) = v.nondegenerate_part();
    report.notes.push(format!("compressed to the range of Σ V_a (dim {} of {})", w.dim_h(), v.dim_h()));
    w
}

/// Minimum eigenvalue of `Δ_s` at every grid point and at `s = 1`.
pub fn check_popescu(v: &LambdaContraction, grid: PopescuGrid, tol: f64) -> Report {
    let mut report = Report::new("popescu", tol);
    report.truncated = v.cap_truncates();
    let v = unitalized(v, tol, &mut report);
    let mut points = grid.points();
    points.push(1.0);
    let margins: Vec<f64> = points.par_iter().map(|&s| linalg::psd_margin(&defect(&v, s))).collect();
    for (s, m) in points.iter().zip(margins) {
        let mut check = Check::new(format!("Δ_s >= 0 at s = {s}"), CheckKind::Margin);
        check.record(m, tol, || format!("s = {s}"));
        report.push(check);
    }
    report.notes.push(format!("positivity tested on {} points in ({}, 1) and at s = 1", grid.count, grid.rho));
    report
}

/// `Σ_{u ⊆ v} (−1)^{|u|} P_{u,v}` on `⊕_a ℓ²(Λ^{e(v)}_a; V_a H)`, where
/// `P_{u,v}(δ_{μν} ⊗ ξ) = Σ_{λ ∈ Λ^{e(u)}, r(λ) = s(μ)} δ_{μλ} ⊗ V_λ* V_ν ξ`
/// for `μ ∈ Λ^{e(v)−e(u)}`, `ν ∈ Λ^{e(u)}`.
pub fn brehmer_solel_operator(v: &LambdaContraction, colors: &[usize]) -> (CMatrix, BlockSpace) {
    let g = v.graph();
    let r = g.rank();
    let sigma = v.sigma();
    let ev = Shape::from_colors(r, colors);
    let space = BlockSpace::of_paths(g.paths(&ev, None, None), &sigma);
    let mut out = linalg::zeros(space.dim(), space.dim());
    for mask in 0u32..(1 << colors.len()) {
        let u: Vec<usize> = (0..colors.len()).filter(|k| mask & (1 << k) != 0).map(|k| colors[k]).collect();
        let eu = Shape::from_colors(r, &u);
        let rest = ev.checked_sub(&eu).unwrap();
        let sign = if u.len().is_multiple_of(2) { 1.0 } else { -1.0 };
        for (k, slot) in space.slots().iter().enumerate() {
            let omega = &slot[0];
            let (mu, nu) = g.factor(omega, &rest, &eu).expect("shape of omega is e(v)");
            let vnu = v.product(&nu) * sigma.frame(nu.source());
            for lambda in g.paths(&eu, Some(mu.source()), None) {
                let target = g.compose(&mu, &lambda).expect("r(λ) = s(μ)");
                let t = space.slot(std::slice::from_ref(&target)).expect("shape e(v)");
                let block =
                    sigma.frame(lambda.source()).adjoint() * v.product(&lambda).adjoint() * &vnu * linalg::re(sign);
                let (rows, cols) = (space.block(t), space.block(k));
                let mut view = out.view_mut((rows.start, cols.start), block.shape());
                view += &block;
            }
        }
    }
    (out, space)
}

/// Positivity of the Brehmer-Solel operator for every subset of colors.
pub fn check_brehmer_solel(v: &LambdaContraction, tol: f64) -> Report {
    let g = v.graph();
    let r = g.rank();
    let mut report = Report::new("brehmer-solel", tol);
    report.truncated = v.cap_truncates();
    let subsets: Vec<Vec<usize>> =
        (0u32..(1 << r)).map(|mask| (0..r).filter(|k| mask & (1 << k) != 0).collect()).collect();
    let margins: Vec<f64> =
        subsets.par_iter().map(|sub| linalg::psd_margin(&brehmer_solel_operator(v, sub).0)).collect();
    let mut check = Check::new("Σ_{u ⊆ v} (−1)^|u| P_{u,v} >= 0", CheckKind::Margin);
    for (sub, m) in subsets.iter().zip(margins) {
        check.record(m, tol, || {
            format!("v = {{{}}}", sub.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(","))
        });
    }
    report.push(check);
    report
}

/// Double commutativity, on generators and at operator level.
pub fn check_doubly_commuting(v: &LambdaContraction, tol: f64) -> Report {
    let g = v.graph();
    let r = g.rank();
    let mut report = Report::new("doubly-commuting", tol);
    report.truncated = v.cap_truncates();

    let mut gens = Check::new("V_λ* V_μ = Σ_{λα = μβ ∈ MCE(λ,μ)} V_α V_β*", CheckKind::Residual);
    for i in 0..r {
        for j in 0..r {
            if i == j {
                continue;
            }
            for lambda in g.paths(&Shape::unit(r, i), None, None) {
                for mu in g.paths(&Shape::unit(r, j), None, None) {
                    let lhs = v.product(&lambda).adjoint() * v.product(&mu);
                    let mut rhs = linalg::zeros(v.dim_h(), v.dim_h());
                    for ext in g.mce(&lambda, &mu) {
                        rhs += v.product(&ext.alpha) * v.product(&ext.beta).adjoint();
                    }
                    gens.record(linalg::residual(&lhs, &rhs), tol, || {
                        format!("({}, {})", g.label(&lambda), g.label(&mu))
                    });
                }
            }
        }
    }
    report.push(gens);

    let sigma = v.sigma();
    let mut op = Check::new("T̃_j* T̃_i = (I ⊗ T̃_i)(t_ij ⊗ I)(I ⊗ T̃_j*)", CheckKind::Residual);
    for i in 0..r {
        for j in 0..r {
            if i == j {
                continue;
            }
            let (ei, ej) = (Shape::unit(r, i), Shape::unit(r, j));
            let (ti, si) = ttilde(v, &ei);
            let (tj, sj) = ttilde(v, &ej);
            let pij = BlockSpace::pairs(g, &ei, &ej, &sigma);
            let pji = BlockSpace::pairs(g, &ej, &ei, &sigma);
            let lhs = tj.adjoint() * &ti;
            let rhs = amplified(v, &sigma, &pji, &sj)
                * flip_matrix(g, &pij, &pji)
                * amplified(v, &sigma, &pij, &si).adjoint();
            op.record(linalg::residual(&lhs, &rhs), tol, || format!("colors ({}, {})", i + 1, j + 1));
        }
    }
    report.push(op);
    report
}

/// Rank threshold (singular value) for kernels in the kernel condition.
pub const KERNEL_SV_TOL: f64 = 1e-6;

/// `T̃_i(Ker(I_{E_i} ⊗ T̃_j*)) ⊂ Ker(T̃_j*)` for all `i != j`.
pub fn check_kernel_condition(x: &LambdaContraction, tol: f64) -> Result<Report, ConditionError> {
    let g = x.graph();
    let r = g.rank();
    let sigma = x.sigma();
    let mut tt = Vec::with_capacity(r);
    for j in 0..r {
        let (t, space) = ttilde(x, &Shape::unit(r, j));
        let res = linalg::residual(&(t.adjoint() * &t), &linalg::identity(space.dim()));
        if res > tol {
            return Err(ConditionError::NotIsometric(format!("T̃(e_{}) has ‖T̃*T̃ − I‖ = {res:e}", j + 1)));
        }
        tt.push((t, space));
    }
    let mut report = Report::new("kernel-condition", tol);
    report.truncated = x.cap_truncates();
    let mut check = Check::new("T̃_i(Ker(I ⊗ T̃_j*)) ⊂ Ker(T̃_j*)", CheckKind::Residual);
    for i in 0..r {
        for j in 0..r {
            if i == j {
                continue;
            }
            let (ei, ej) = (Shape::unit(r, i), Shape::unit(r, j));
            let pij = BlockSpace::pairs(g, &ei, &ej, &sigma);
            let amp_star = amplified(x, &sigma, &pij, &tt[i].1).adjoint();
            let kernel = linalg::null_space(&amp_star, KERNEL_SV_TOL);
            let image = tt[j].0.adjoint() * &tt[i].0 * &kernel;
            check.record(image.norm(), tol, || format!("colors ({}, {}), kernel dim {}", i + 1, j + 1, kernel.ncols()));
        }
    }
    report.push(check);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{diag, residual};

    #[test]
    fn defect_examples() {
        let (_, v) = fixtures::fix_a(0.5);
        for s in [0.3, 0.8, 1.0] {
            assert!(residual(&defect(&v, s), &diag(&[1.0 - s * s / 4.0, 1.0])) < 1e-14);
        }
        let (_, v) = fixtures::fix_a(1.0);
        let d = defect(&v, 1.0);
        assert!(residual(&d, &diag(&[0.0, 1.0])) < 1e-14);
        assert!(linalg::classify(&d, 1e-12).contains(&linalg::MatrixClass::Projection));
    }

    #[test]
    fn popescu_examples() {
        let (_, v) = fixtures::fix_a(0.5);
        let rep = check_popescu(&v, PopescuGrid::default(), 1e-9);
        assert!(rep.holds);
        assert!((rep.worst_margin() - 0.75).abs() < 1e-12);
        let (_, v) = fixtures::fix_b_tck();
        assert!(check_popescu(&v, PopescuGrid::default(), 1e-9).holds);
        let (_, v) = fixtures::fix_c();
        let rep = check_popescu(&v, PopescuGrid::default(), 1e-9);
        assert!(!rep.holds);
        assert!(rep.worst_margin() < -0.1);
    }

    #[test]
    fn popescu_on_zero_family_is_vacuous() {
        let (_, v) = fixtures::fix_a(0.5);
        let zero = v.map_ops(|m| m * linalg::re(0.0)).unwrap();
        assert_eq!(defect(&zero, 0.7), linalg::zeros(2, 2));
        let rep = check_popescu(&zero, PopescuGrid::default(), 1e-9);
        assert!(rep.holds);
        assert!(rep.notes.iter().any(|n| n.contains("dim 0 of 2")));
    }

    #[test]
    fn brehmer_solel_examples() {
        let (_, v) = fixtures::fix_a(0.5);
        let (empty, _) = brehmer_solel_operator(&v, &[]);
        assert!(residual(&empty, &linalg::identity(empty.nrows())) < 1e-14);
        let (op, space) = brehmer_solel_operator(&v, &[0]);
        assert_eq!(space.dim(), 1);
        assert!((linalg::psd_margin(&op) - 0.75).abs() < 1e-12);
        assert!(check_brehmer_solel(&v, 1e-9).holds);
        let (_, v) = fixtures::fix_b_tck();
        let (op, _) = brehmer_solel_operator(&v, &[0, 1]);
        assert!(linalg::psd_margin(&op) >= -1e-12);
        assert!(check_brehmer_solel(&v, 1e-9).holds);
    }

    #[test]
    fn doubly_commuting_examples() {
        let (_, v) = fixtures::fix_b_tck();
        let rep = check_doubly_commuting(&v, 1e-9);
        assert!(rep.holds, "{}", rep.to_text());
        let (_, x) = fixtures::fix_b_toeplitz_not_tck();
        let rep = check_doubly_commuting(&x, 1e-9);
        assert!(!rep.holds);
        assert!(rep.checks.iter().all(|c| !c.holds));
        let (_, v) = fixtures::fix_a(0.5);
        assert!(check_doubly_commuting(&v, 1e-9).holds);
    }

    #[test]
    fn kernel_examples() {
        let (_, v) = fixtures::fix_b_tck();
        assert!(check_kernel_condition(&v, 1e-8).unwrap().holds);
        let (_, x) = fixtures::fix_b_toeplitz_not_tck();
        assert!(!check_kernel_condition(&x, 1e-8).unwrap().holds);
        let (_, id) = fixtures::two_color_no_edges();
        assert!(check_kernel_condition(&id, 1e-8).unwrap().holds);
        let (_, v) = fixtures::fix_a(0.5);
        assert!(matches!(check_kernel_condition(&v, 1e-8), Err(ConditionError::NotIsometric(_))));
    }
}
