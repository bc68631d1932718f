use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use kgd_core::conditions::{
    check_brehmer_solel, check_doubly_commuting, check_kernel_condition, check_popescu, PopescuGrid,
};
use kgd_core::contraction::{check_lambda_contraction, check_toeplitz_family, is_coisometric, LambdaContraction};
use kgd_core::dilation::{dilate, poisson_kernel, poisson_transform, verify_dilation, DilateOptions};
use kgd_core::fixtures::{self, random};
use kgd_core::kgraph::{KGraph, Path, Shape};
use kgd_core::linalg::{self, c, CMatrix, C64};
use kgd_core::prodsys::{flip_at, FockSpace, NOPoly, SigmaData};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

/// Number of eigenvalues of the Hermitian `a` below `x`, from the signs of
/// the pivots of `a − xI` (Sylvester's law of inertia).
fn count_below(a: &CMatrix, x: f64) -> usize {
    let n = a.nrows();
    let mut m = a - CMatrix::identity(n, n) * linalg::re(x);
    let mut negatives = 0;
    for k in 0..n {
        let mut p = m[(k, k)].re;
        if p == 0.0 {
            p = -1e-300;
        }
        if p < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = m[(i, k)] / p;
            for j in k..n {
                let t = m[(k, j)];
                m[(i, j)] -= f * t;
            }
        }
    }
    negatives
}

fn bisection_min_eig(a: &CMatrix) -> f64 {
    let bound = a.iter().map(|z| z.norm()).sum::<f64>() + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(a, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn graphs_for(seed: u64) -> Vec<Arc<KGraph>> {
    let mut rng = random::rng(seed);
    vec![
        Arc::new(fixtures::fix_a_graph()),
        Arc::new(fixtures::fix_b_graph()),
        random::acyclic_graph(&mut rng, 1).graph,
        random::acyclic_graph(&mut rng, 2).graph,
        random::acyclic_graph(&mut rng, 3).graph,
    ]
}

fn multiplicity_one_fock(g: &KGraph) -> FockSpace {
    let n = g.vertex_count();
    let ps: Vec<CMatrix> = (0..n).map(|a| linalg::unit(n, n, a, a)).collect();
    FockSpace::new(g, &SigmaData::from_projections(n, &ps), &g.acyclicity().max_shape.unwrap())
}

fn popescu_families(seed: u64, count: usize) -> Vec<LambdaContraction> {
    random::instances(seed, count, 2, false)
        .into_iter()
        .map(|i| i.v)
        .filter(|v| check_lambda_contraction(v, 1e-9).holds)
        .filter(|v| check_popescu(v, PopescuGrid::default(), 1e-9).holds)
        .map(|v| if v.is_nondegenerate(1e-9) { v } else { v.nondegenerate_part().0 })
        .collect()
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..=20) {
        let mut rng = random::rng(seed);
        let a = random::complex_matrix(&mut rng, n, n);
        let m = &a * a.adjoint();
        let r = linalg::psd_sqrt(&m, 1e-9).unwrap();
        prop_assert!(linalg::residual(&(&r * &r), &m) <= 1e-8);
    }

    #[test]
    fn min_eig_matches_bisection(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = random::rng(seed);
        let a = random::complex_matrix(&mut rng, n, n);
        let h = linalg::hermitian_part(&a);
        let got = linalg::hermitian_min_eig(&h, 1e-12).unwrap();
        prop_assert!((got - bisection_min_eig(&h)).abs() <= 1e-8);
    }

    #[test]
    fn orthonormalize_spans_inputs(seed in any::<u64>(), n in 1usize..=8, k in 1usize..=10, rank in 1usize..=8) {
        let mut rng = random::rng(seed);
        let rank = rank.min(n);
        let v = random::complex_matrix(&mut rng, n, rank) * random::complex_matrix(&mut rng, rank, k);
        let o = linalg::orthonormalize(&v, 1e-9);
        prop_assert!(o.rank <= rank.min(k));
        prop_assert!(linalg::residual(&(o.basis.adjoint() * &o.basis), &linalg::identity(o.rank)) <= 1e-10);
        let back = &o.basis * (o.basis.adjoint() * &v);
        prop_assert!(linalg::residual(&back, &v) <= 1e-9 * (1.0 + v.norm()));
    }

    #[test]
    fn factor_then_normal_form_round_trips(seed in any::<u64>()) {
        for g in graphs_for(seed) {
            let cap = Shape::uniform(g.rank(), 2);
            for p in g.paths_upto(&cap).iter().filter(|p| p.len() <= 4) {
                for m in p.shape().all_below() {
                    let n = p.shape().checked_sub(&m).unwrap();
                    let (a, b) = g.factor(p, &m, &n).unwrap();
                    let mut word = a.word().to_vec();
                    word.extend_from_slice(b.word());
                    if word.is_empty() {
                        prop_assert!(p.is_vertex());
                    } else {
                        prop_assert_eq!(&g.normal_form(&word).unwrap(), p);
                    }
                }
            }
        }
    }

    #[test]
    fn mce_shapes_are_joins(seed in any::<u64>()) {
        for g in graphs_for(seed) {
            let paths = g.paths_upto(&Shape::uniform(g.rank(), 1));
            for l in &paths {
                for m in &paths {
                    let join = l.shape().join(m.shape());
                    for x in g.mce(l, m) {
                        prop_assert_eq!(x.nu.shape(), &join);
                        prop_assert_eq!(&g.compose(l, &x.alpha).unwrap(), &x.nu);
                        prop_assert_eq!(&g.compose(m, &x.beta).unwrap(), &x.nu);
                    }
                }
            }
        }
    }

    #[test]
    fn normal_form_is_confluent(seed in any::<u64>()) {
        let mut rng = random::rng(seed ^ 0x5eed);
        for g in graphs_for(seed) {
            for p in g.paths_upto(&Shape::uniform(g.rank(), 2)).iter().filter(|p| p.len() >= 2) {
                let mut word = p.word().to_vec();
                for _ in 0..12 {
                    let k = rng.random_range(0..word.len() - 1);
                    if let Some((a, b)) = g.swap(word[k], word[k + 1]) {
                        word[k] = a;
                        word[k + 1] = b;
                    }
                }
                prop_assert_eq!(&g.normal_form(&word).unwrap(), p);
            }
        }
    }

    #[test]
    fn flips_satisfy_the_braid_relation(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let g = random::acyclic_graph(&mut rng, 3).graph;
        for x in g.paths_upto(&Shape::ones(3)).iter().filter(|p| p.len() == 1) {
            for y in g.paths(&Shape::unit(3, 0), Some(x.source()), None).into_iter()
                .chain(g.paths(&Shape::unit(3, 1), Some(x.source()), None))
                .chain(g.paths(&Shape::unit(3, 2), Some(x.source()), None))
            {
                for z in g.paths_upto(&Shape::ones(3)).iter().filter(|z| z.len() == 1 && z.range() == y.source()) {
                    let t = vec![x.clone(), y.clone(), z.clone()];
                    let a = flip_at(&g, &t, 0).and_then(|t| flip_at(&g, &t, 1)).and_then(|t| flip_at(&g, &t, 0));
                    let b = flip_at(&g, &t, 1).and_then(|t| flip_at(&g, &t, 0)).and_then(|t| flip_at(&g, &t, 1));
                    prop_assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn fock_operators_compose_and_satisfy_nica(seed in any::<u64>()) {
        for g in graphs_for(seed) {
            let fock = multiplicity_one_fock(&g);
            let paths = g.paths_upto(fock.cap());
            let l: Vec<CMatrix> = paths.iter().map(|p| fock.creation_matrix(&g, p)).collect();
            for (i, a) in paths.iter().enumerate() {
                for (j, b) in paths.iter().enumerate() {
                    let prod = &l[i] * &l[j];
                    match g.compose(a, b) {
                        Some(ab) => prop_assert!(linalg::residual(&prod, &fock.creation_matrix(&g, &ab)) <= 1e-12),
                        None => prop_assert!(prod.norm() <= 1e-12),
                    }
                    let mut rhs = linalg::zeros(fock.dim(), fock.dim());
                    for x in g.mce(a, b) {
                        rhs += fock.creation_matrix(&g, &x.alpha) * fock.creation_matrix(&g, &x.beta).adjoint();
                    }
                    prop_assert!(linalg::residual(&(l[i].adjoint() * &l[j]), &rhs) <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn products_stay_normal_ordered(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for g in graphs_for(seed) {
            let fock = multiplicity_one_fock(&g);
            let paths = g.paths_upto(fock.cap());
            let mut poly = || {
                let mut p = NOPoly::zero();
                for _ in 0..3 {
                    let a = &paths[rng.random_range(0..paths.len())];
                    let b = &paths[rng.random_range(0..paths.len())];
                    p.add_term(a, b, c(rng.random_range(-1.0..1.0), 0.5));
                }
                p
            };
            let (p, q) = (poly(), poly());
            let pq = p.mul(&g, &q);
            prop_assert!(pq.terms().keys().all(|(a, b)| a.source() == b.source()));
            let lhs = pq.eval_fock(&g, &fock);
            prop_assert!(linalg::residual(&lhs, &(p.eval_fock(&g, &fock) * q.eval_fock(&g, &fock))) <= 1e-10);
        }
    }

    #[test]
    fn extend_is_multiplicative(seed in any::<u64>()) {
        for inst in random::instances(seed, 4, 3, false) {
            let v = &inst.v;
            if !check_lambda_contraction(v, 1e-9).holds {
                continue;
            }
            let g = v.graph();
            let paths = g.paths_upto(v.shape_cap());
            for a in &paths {
                for b in paths.iter().filter(|b| b.range() == a.source()) {
                    let Some(ab) = g.compose(a, b) else { continue };
                    if !ab.shape().le(v.shape_cap()) {
                        continue;
                    }
                    let lhs = v.extend(&ab).unwrap();
                    prop_assert!(linalg::residual(&lhs, &(v.extend(a).unwrap() * v.extend(b).unwrap())) <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn condition_chain(seed in any::<u64>()) {
        for inst in random::instances(seed, 8, 2, true) {
            let v = &inst.v;
            if !check_lambda_contraction(v, 1e-9).holds {
                continue;
            }
            let dc = check_doubly_commuting(v, 1e-9).holds;
            let cois = is_coisometric(v, 1e-9).iter().all(|&b| b);
            if dc || cois {
                prop_assert!(check_popescu(v, PopescuGrid::default(), 1e-9).holds, "{}", inst.label);
            }
            if v.graph().rank() == 1 {
                prop_assert!(check_brehmer_solel(v, 1e-9).holds, "{}", inst.label);
            }
            if check_toeplitz_family(v, 1e-9).holds {
                let k = check_kernel_condition(v, 1e-8).unwrap();
                prop_assert_eq!(k.holds, check_doubly_commuting(v, 1e-8).holds, "{}", inst.label);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn poisson_kernel_and_transform(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        for v in popescu_families(seed, 6) {
            let g = v.graph();
            let paths = g.paths_upto(v.shape_cap());
            for s in [0.6, 0.8, 1.0] {
                let k = poisson_kernel(&v, s, None, 1e-9).unwrap();
                prop_assert!(k.gamma_residual <= 1e-9);
            }
            let k = poisson_kernel(&v, 1.0, None, 1e-9).unwrap();
            let mut poly = || {
                let mut p = NOPoly::zero();
                let a = &paths[rng.random_range(0..paths.len())];
                let b = &paths[rng.random_range(0..paths.len())];
                p.add_term(a, b, C64::new(1.0, 0.0));
                p
            };
            let (p, q) = (poly(), poly());
            let via_mult = poisson_transform(&v, &k, &p.mul(g, &q));
            let via_products = k.w.adjoint() * p.eval_fock(g, &k.fock) * q.eval_fock(g, &k.fock) * &k.w;
            prop_assert!(linalg::residual(&via_mult, &via_products) <= 1e-9);
        }
    }

    #[test]
    fn dilations_verify_and_are_unique(seed in any::<u64>()) {
        for v in popescu_families(seed, 4) {
            let a = dilate(&v, DilateOptions { seed, ..Default::default() }).unwrap();
            let b = dilate(&v, DilateOptions { seed: seed.wrapping_add(1), ..Default::default() }).unwrap();
            let rep = verify_dilation(&a.dilated, &a.dilation, 1e-9).unwrap();
            for label in ["(c) X_λ*·embed = embed·V_λ*", "(d) P_H X_λ X_μ*|_H = V_λ V_μ*"] {
                prop_assert!(rep.check(label).unwrap().holds, "{label}");
            }
            let ga = kgd_core::dilation::gram_table(&a.dilated, &a.dilation);
            let gb = kgd_core::dilation::gram_table(&b.dilated, &b.dilation);
            prop_assert!(linalg::residual(&ga, &gb) <= 1e-8);
        }
    }
}

#[test]
fn flip_braid_on_a_cube() {
    let f = random::Factor { vertices: 2, edges: vec![(0, 1)] };
    let g = random::product_graph(&[f.clone(), f.clone(), f], None);
    assert!(g.is_valid());
    let top = g.paths(&Shape::ones(3), None, None);
    assert_eq!(top.len(), 1);
    let (x, rest) = g.factor(&top[0], &Shape::unit(3, 2), &Shape::new(vec![1, 1, 0])).unwrap();
    let (y, z) = g.factor(&rest, &Shape::unit(3, 1), &Shape::unit(3, 0)).unwrap();
    let t: Vec<Path> = vec![x, y, z];
    let a = flip_at(&g, &t, 0).and_then(|t| flip_at(&g, &t, 1)).and_then(|t| flip_at(&g, &t, 0)).unwrap();
    let b = flip_at(&g, &t, 1).and_then(|t| flip_at(&g, &t, 0)).and_then(|t| flip_at(&g, &t, 1)).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        a.iter().map(|p| p.shape().clone()).collect::<Vec<_>>(),
        vec![Shape::unit(3, 0), Shape::unit(3, 1), Shape::unit(3, 2)]
    );
}

#[test]
fn generators_feed_the_dilation_properties() {
    assert!((0..4).map(|s| popescu_families(s, 6).len()).sum::<usize>() >= 8);
}
