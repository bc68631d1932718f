//! Seeded randomized suites over the generators in [`crate::fixtures`],
//! gathered into one report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditions::{check_doubly_commuting, check_kernel_condition, check_popescu, PopescuGrid};
use crate::contraction::{
    check_lambda_contraction, check_tck, check_toeplitz_family, is_coisometric, representation_report,
    LambdaContraction,
};
use crate::dilation::{check_dc_streg_equivalence, dilate, gram_table, poisson_kernel, DilateOptions};
use crate::fixtures::{self, random};
use crate::linalg::{self, c, CMatrix};
use crate::prodsys::{FockSpace, NOPoly, SigmaData};
use crate::report::{Check, CheckKind, Report};

#[derive(Clone, Copy, Debug)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Random families drawn per suite.
    pub count: usize,
    pub tol: f64,
    pub grid: PopescuGrid,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { seed: 0, count: 60, tol: linalg::DEFAULT_TOL, grid: PopescuGrid::default() }
    }
}

fn popescu_cases(opts: &SelftestOptions) -> Vec<(String, LambdaContraction)> {
    let mut out =
        vec![("fix-a".to_string(), fixtures::fix_a(0.5).1), ("fix-b-tck".to_string(), fixtures::fix_b_tck().1)];
    out.extend(random::instances(opts.seed.wrapping_add(4), opts.count, 3, false).into_iter().map(|i| (i.label, i.v)));
    out.into_iter()
        .filter(|(_, v)| check_lambda_contraction(v, opts.tol).holds)
        .filter(|(_, v)| check_popescu(v, opts.grid, opts.tol).holds)
        .map(|(l, v)| if v.is_nondegenerate(opts.tol) { (l, v) } else { (l, v.nondegenerate_part().0) })
        .collect()
}

fn correspondence(opts: &SelftestOptions) -> Check {
    let tol = opts.tol;
    let mut check = Check::new("Λ-contraction ⟺ contractive representation", CheckKind::Residual);
    for inst in random::instances(opts.seed.wrapping_add(2), opts.count, 3, false) {
        let lc = check_lambda_contraction(&inst.v, tol).holds;
        let rep = representation_report(&inst.v, tol);
        let rep_ok = rep.checks.iter().filter(|c| c.label != "T̃(e_j) isometric").all(|c| c.holds);
        let toeplitz_ok = !lc || check_toeplitz_family(&inst.v, tol).holds == rep.flags["isometric"];
        check.record_bool(lc == rep_ok && toeplitz_ok, || inst.label.clone());
    }
    check
}

fn implications(opts: &SelftestOptions) -> (Check, Check) {
    let tol = opts.tol;
    let mut popescu = Check::new("doubly commuting or coisometric ⟹ Popescu", CheckKind::Residual);
    let mut kernel = Check::new("kernel condition ⟺ TCK (v) on isometric families", CheckKind::Residual);
    for inst in random::instances(opts.seed.wrapping_add(3), opts.count, 2, true) {
        let v = &inst.v;
        if !check_lambda_contraction(v, tol).holds {
            continue;
        }
        if check_doubly_commuting(v, tol).holds || is_coisometric(v, tol).iter().all(|&b| b) {
            popescu.record_bool(check_popescu(v, opts.grid, tol).holds, || inst.label.clone());
        }
        if check_toeplitz_family(v, tol).holds {
            let agree = check_kernel_condition(v, 1e-8).is_ok_and(|k| k.holds == check_tck(v, 1e-8).holds);
            kernel.record_bool(agree, || inst.label.clone());
        }
    }
    (popescu, kernel)
}

fn normal_ordering(opts: &SelftestOptions) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(8));
    let mut check = Check::new("eval(p·q) = eval(p)·eval(q)", CheckKind::Residual);
    for k in 0..opts.count.div_ceil(10).max(2) {
        let g = random::acyclic_graph(&mut rng, 1 + k % 3).graph;
        let cap = g.acyclicity().max_shape.expect("acyclic graph");
        let n = g.vertex_count();
        let ps: Vec<CMatrix> = (0..n).map(|a| linalg::unit(n, n, a, a)).collect();
        let fock = FockSpace::new(&g, &SigmaData::from_projections(n, &ps), &cap);
        let paths = g.paths_upto(&cap);
        let poly = |rng: &mut ChaCha8Rng| {
            let mut p = NOPoly::zero();
            for _ in 0..rng.random_range(1..=3) {
                let l = &paths[rng.random_range(0..paths.len())];
                let same: Vec<_> = paths.iter().filter(|m| m.source() == l.source()).collect();
                let m = same[rng.random_range(0..same.len())];
                p.add_term(l, m, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
            p
        };
        for j in 0..10 {
            let (p, q) = (poly(&mut rng), poly(&mut rng));
            let lhs = p.mul(&g, &q).eval_fock(&g, &fock);
            let rhs = p.eval_fock(&g, &fock) * q.eval_fock(&g, &fock);
            check.record(linalg::residual(&lhs, &rhs), 1e-10, || format!("graph {k}, pair {j}"));
        }
    }
    check
}

/// Runs every suite. The report holds when no suite finds a counterexample.
pub fn selftest(opts: SelftestOptions) -> Report {
    let tol = opts.tol;
    let mut report = Report::new("selftest", tol);
    report.push(correspondence(&opts));
    let (popescu, kernel) = implications(&opts);
    report.push(popescu);
    report.push(kernel);
    report.push(normal_ordering(&opts));

    let mut gamma = Check::new("Γ = W*W = I_H", CheckKind::Residual);
    let mut contract = Check::new("dilation contract", CheckKind::Residual);
    let mut streg = Check::new("doubly commuting ⟺ *-regular", CheckKind::Residual);
    let mut unique = Check::new("seeded dilations share a Gram table", CheckKind::Residual);
    for (label, v) in popescu_cases(&opts) {
        for s in [0.6, 0.8, 1.0] {
            match poisson_kernel(&v, s, None, tol) {
                Ok(k) => gamma.record(k.gamma_residual, tol, || format!("{label} at s = {s}")),
                Err(e) => gamma.record_bool(false, || format!("{label}: {e}")),
            }
        }
        let runs =
            [opts.seed, opts.seed.wrapping_add(1)].map(|seed| dilate(&v, DilateOptions { tol, grid: opts.grid, seed }));
        let [Ok(a), Ok(b)] = runs else {
            contract.record_bool(false, || format!("{label}: dilate failed"));
            continue;
        };
        contract.record_bool(a.diagnostics.holds, || label.clone());
        streg.record_bool(check_dc_streg_equivalence(&a.dilated, &a.dilation, 1e-8).holds, || label.clone());
        let r = linalg::residual(&gram_table(&a.dilated, &a.dilation), &gram_table(&b.dilated, &b.dilation));
        unique.record(r, 1e-8, || label.clone());
    }
    let (v, d) = fixtures::non_dc_minimal_dilation();
    streg.record_bool(check_dc_streg_equivalence(&v, &d, 1e-8).holds, || "non-doubly-commuting fixture".into());
    for c in [gamma, contract, streg, unique] {
        report.push(c);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_selftest_passes() {
        let r = selftest(SelftestOptions { count: 12, ..Default::default() });
        assert!(r.holds, "{}", r.to_text());
        assert!(r.checks.iter().all(|c| c.evaluated > 0), "{}", r.to_text());
    }
}
