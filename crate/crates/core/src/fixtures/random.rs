//! Seeded random graphs and operator families at desk scale.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{compress, conjugate, fix_b_toeplitz_angle, graph};
use crate::contraction::LambdaContraction;
use crate::kgraph::KGraph;
use crate::linalg::{self, c, re, CMatrix};
use crate::prodsys::{FockSpace, SigmaData};

pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest vertex count and edges per color of generated acyclic graphs.
pub const MAX_VERTICES: usize = 6;
pub const MAX_EDGES_PER_COLOR: usize = 3;
/// Largest `dim H` of generated families.
pub const MAX_DIM: usize = 6;

pub fn complex_matrix(rng: &mut Rand, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn unitary(rng: &mut Rand, n: usize) -> CMatrix {
    if n == 0 {
        return linalg::zeros(0, 0);
    }
    let m = complex_matrix(rng, n, n);
    linalg::orthonormalize(&m, 1e-12).basis
}

/// A 1-graph factor: `n` vertices and edges `(range, source)`.
#[derive(Clone, Debug)]
pub struct Factor {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Factor {
    fn random_dag(rng: &mut Rand, vertices: usize, edges: usize) -> Factor {
        let edges = if vertices < 2 {
            Vec::new()
        } else {
            (0..edges)
                .map(|_| {
                    let s = rng.random_range(1..vertices);
                    (rng.random_range(0..s), s)
                })
                .collect()
        };
        Factor { vertices, edges }
    }
}

/// Which construction produced a graph.
#[derive(Clone, Debug)]
pub enum GraphKind {
    Dag,
    /// Product of 1-graphs, squares either the product ones or twisted.
    Product {
        factors: Vec<Factor>,
        twisted: bool,
    },
    /// All edges go from a top layer to a bottom layer; no squares.
    Bipartite,
}

#[derive(Clone, Debug)]
pub struct RandomGraph {
    pub graph: Arc<KGraph>,
    pub kind: GraphKind,
}

fn coords(mut x: usize, sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&n| {
            let c = x % n;
            x /= n;
            c
        })
        .collect()
}

fn index(coords: &[usize], sizes: &[usize]) -> usize {
    coords.iter().zip(sizes).rev().fold(0, |acc, (&c, &n)| acc * n + c)
}

fn vertex_name(x: usize, sizes: &[usize]) -> String {
    let c: Vec<String> = coords(x, sizes).iter().map(|c| c.to_string()).collect();
    format!("p{}", c.join(""))
}

/// The edge of color `i` along factor edge `k`, placed at `base` (the
/// coordinate `i` of `base` is ignored).
fn product_edge_name(i: usize, k: usize, base: &[usize]) -> String {
    let rest: Vec<String> =
        base.iter().enumerate().map(|(j, c)| if j == i { "_".into() } else { c.to_string() }).collect();
    format!("e{}{}at{}", i + 1, k, rest.join(""))
}

/// Product of 1-graphs; with `twist` (rank 2 only) each square bijection is
/// composed with a random permutation within its endpoint class.
pub fn product_graph(factors: &[Factor], twist: Option<&mut Rand>) -> KGraph {
    let sizes: Vec<usize> = factors.iter().map(|f| f.vertices).collect();
    let n: usize = sizes.iter().product();
    let names: Vec<String> = (0..n).map(|x| vertex_name(x, &sizes)).collect();
    let mut edges: Vec<(String, usize, usize, usize)> = Vec::new();
    let mut edge_at: BTreeMap<(usize, usize, Vec<usize>), String> = BTreeMap::new();
    for (i, f) in factors.iter().enumerate() {
        for (k, &(r, s)) in f.edges.iter().enumerate() {
            for x in 0..n {
                let base = coords(x, &sizes);
                if base[i] != 0 {
                    continue;
                }
                let mut rc = base.clone();
                rc[i] = r;
                let mut sc = base.clone();
                sc[i] = s;
                let name = product_edge_name(i, k, &base);
                let mut key = base.clone();
                key[i] = 0;
                edge_at.insert((i, k, key), name.clone());
                edges.push((name, i + 1, index(&rc, &sizes), index(&sc, &sizes)));
            }
        }
    }
    let name_of = |i: usize, k: usize, at: &[usize]| {
        let mut key = at.to_vec();
        key[i] = 0;
        edge_at[&(i, k, key)].clone()
    };
    // fg = g'f' with f of color i, g of color j > i
    let mut squares: Vec<([usize; 2], [String; 4])> = Vec::new();
    let rank = factors.len();
    let mut classes: BTreeMap<(usize, usize, usize, usize), Vec<usize>> = BTreeMap::new();
    for i in 0..rank {
        for j in i + 1..rank {
            for (k, &(fr, fs)) in factors[i].edges.iter().enumerate() {
                for (l, &(gr, gs)) in factors[j].edges.iter().enumerate() {
                    for x in 0..n {
                        // x is the source of g
                        let src = coords(x, &sizes);
                        if src[j] != gs || src[i] != fs {
                            continue;
                        }
                        let mut mid = src.clone();
                        mid[j] = gr;
                        let mut top = mid.clone();
                        top[i] = fr;
                        let mut mid2 = src.clone();
                        mid2[i] = fr;
                        let f = name_of(i, k, &mid);
                        let g = name_of(j, l, &src);
                        let g2 = name_of(j, l, &top);
                        let f2 = name_of(i, k, &mid2);
                        classes.entry((i, j, index(&top, &sizes), x)).or_default().push(squares.len());
                        squares.push(([i + 1, j + 1], [f, g, g2, f2]));
                    }
                }
            }
        }
    }
    if let Some(rng) = twist {
        for members in classes.values() {
            let mut targets: Vec<[String; 2]> =
                members.iter().map(|&m| [squares[m].1[2].clone(), squares[m].1[3].clone()]).collect();
            targets.shuffle(rng);
            for (&m, [g2, f2]) in members.iter().zip(targets) {
                squares[m].1[2] = g2;
                squares[m].1[3] = f2;
            }
        }
    }
    let vertices: Vec<&str> = names.iter().map(String::as_str).collect();
    let edges: Vec<(&str, usize, &str, &str)> =
        edges.iter().map(|(id, col, r, s)| (id.as_str(), *col, names[*r].as_str(), names[*s].as_str())).collect();
    let squares: Vec<([usize; 2], [&str; 4])> =
        squares.iter().map(|(cols, [a, b, c, d])| (*cols, [a.as_str(), b.as_str(), c.as_str(), d.as_str()])).collect();
    graph(rank, &vertices, &edges, &squares)
}

fn random_dag_graph(rng: &mut Rand) -> RandomGraph {
    let n = rng.random_range(2..=MAX_VERTICES);
    let m = rng.random_range(1..=MAX_EDGES_PER_COLOR);
    let f = Factor::random_dag(rng, n, m);
    RandomGraph { graph: Arc::new(product_graph(&[f], None)), kind: GraphKind::Dag }
}

fn random_product_graph(rng: &mut Rand, rank: usize) -> RandomGraph {
    loop {
        let sizes: Vec<usize> = (0..rank).map(|_| rng.random_range(1..=3)).collect();
        let total: usize = sizes.iter().product();
        if !(2..=MAX_VERTICES).contains(&total) {
            continue;
        }
        let factors: Vec<Factor> = sizes
            .iter()
            .map(|&n| {
                let others = total / n;
                let room = MAX_EDGES_PER_COLOR / others;
                let m = if room == 0 { 0 } else { rng.random_range(0..=room) };
                Factor::random_dag(rng, n, m)
            })
            .collect();
        if factors.iter().all(|f| f.edges.is_empty()) {
            continue;
        }
        let twisted = rank == 2 && rng.random_bool(0.5);
        let g = if twisted { product_graph(&factors, Some(rng)) } else { product_graph(&factors, None) };
        return RandomGraph { graph: Arc::new(g), kind: GraphKind::Product { factors, twisted } };
    }
}

fn random_bipartite_graph(rng: &mut Rand, rank: usize) -> RandomGraph {
    let top = rng.random_range(1..=3);
    let bottom = rng.random_range(1..=3);
    let names: Vec<String> = (0..top).map(|i| format!("t{i}")).chain((0..bottom).map(|i| format!("b{i}"))).collect();
    let mut edges: Vec<(String, usize, usize, usize)> = Vec::new();
    for color in 1..=rank {
        for k in 0..rng.random_range(1..=MAX_EDGES_PER_COLOR) {
            edges.push((format!("c{color}e{k}"), color, top + rng.random_range(0..bottom), rng.random_range(0..top)));
        }
    }
    let vertices: Vec<&str> = names.iter().map(String::as_str).collect();
    let edges: Vec<(&str, usize, &str, &str)> =
        edges.iter().map(|(id, col, r, s)| (id.as_str(), *col, names[*r].as_str(), names[*s].as_str())).collect();
    RandomGraph { graph: Arc::new(graph(rank, &vertices, &edges, &[])), kind: GraphKind::Bipartite }
}

/// A random valid acyclic graph of rank 1, 2 or 3.
pub fn acyclic_graph(rng: &mut Rand, rank: usize) -> RandomGraph {
    match (rank, rng.random_range(0..3)) {
        (1, _) => random_dag_graph(rng),
        (_, 2) => random_bipartite_graph(rng, rank),
        _ => random_product_graph(rng, rank),
    }
}

/// A product of 1-graphs at least one of which has a cycle.
pub fn cyclic_graph(rng: &mut Rand, rank: usize) -> RandomGraph {
    let factors: Vec<Factor> = (0..rank)
        .map(|i| {
            if i == 0 || rng.random_bool(0.5) {
                match rng.random_range(0..3) {
                    0 => Factor { vertices: 1, edges: vec![(0, 0)] },
                    1 => Factor { vertices: 1, edges: vec![(0, 0), (0, 0)] },
                    _ => Factor { vertices: 2, edges: vec![(0, 1), (1, 0)] },
                }
            } else {
                Factor { vertices: 1, edges: vec![(0, 0)] }
            }
        })
        .collect();
    RandomGraph { graph: Arc::new(product_graph(&factors, None)), kind: GraphKind::Product { factors, twisted: false } }
}

/// How a random family was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// Weighted matrix units, row-normalised per color.
    Weighted,
    /// Weighted matrix units with one axiom deliberately broken.
    Corrupted,
    /// A Fock representation compressed to a co-invariant subspace.
    FockCompression,
    /// Tensor product of 1-graph contractions on a product graph.
    Tensor,
    /// A Fock representation.
    Fock,
    /// Toeplitz family on the square graph with ranges at a random angle.
    RotatedToeplitz,
    /// Coisometric families on one-vertex graphs.
    Coisometric,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub label: String,
    pub kind: FamilyKind,
    pub v: LambdaContraction,
}

/// Weights `w_e = c_i ρ_{r(e)} / ρ_{s(e)}` on matrix units, tensored with
/// `I_d`, conjugated by a random unitary. Path products are consistent
/// on every square. With `overshoot` some colors exceed row contractivity.
pub fn weighted(rng: &mut Rand, g: &Arc<KGraph>, d: usize, overshoot: bool) -> LambdaContraction {
    let nv = g.vertex_count();
    let dim = nv * d;
    let rho: Vec<_> = (0..nv)
        .map(|_| {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            c(t.cos(), t.sin()) * rng.random_range(0.5..1.5)
        })
        .collect();
    let raw: Vec<_> = g.edges().iter().map(|e| rho[e.range] / rho[e.source]).collect();
    let mut scale = vec![1.0; g.rank()];
    for (i, s) in scale.iter_mut().enumerate() {
        let mut worst: f64 = 0.0;
        for a in 0..nv {
            let sum: f64 =
                g.edges_of_color(i).iter().filter(|&&e| g.edge(e).range == a).map(|&e| raw[e].norm_sqr()).sum();
            worst = worst.max(sum);
        }
        let target =
            if overshoot && rng.random_bool(0.5) { rng.random_range(1.05..1.4) } else { rng.random_range(0.3..1.0) };
        if worst > 0.0 {
            *s = target / worst.sqrt();
        }
    }
    let block = |i: usize, j: usize| linalg::unit(nv, nv, i, j).kronecker(&linalg::identity(d));
    let vertex_ops: Vec<CMatrix> = (0..nv).map(|a| block(a, a)).collect();
    let edge_ops: Vec<CMatrix> =
        g.edges().iter().enumerate().map(|(k, e)| block(e.range, e.source) * (raw[k] * scale[e.color])).collect();
    let v = LambdaContraction::new(g.clone(), dim, vertex_ops, edge_ops).expect("consistent dimensions");
    conjugate(&v, &unitary(rng, dim))
}

/// Breaks one thing about a weighted family: a single edge rescaled, a
/// vertex operator perturbed, or an edge given a component outside its
/// vertex blocks.
pub fn corrupted(rng: &mut Rand, g: &Arc<KGraph>) -> LambdaContraction {
    let v = weighted(rng, g, 1, false);
    let dim = v.dim_h();
    let ne = g.edges().len();
    match rng.random_range(0..3) {
        0 if ne > 0 => {
            let e = rng.random_range(0..ne);
            v.with_edge_op(e, v.edge_op(e) * re(rng.random_range(1.5..3.0))).unwrap()
        }
        1 if ne > 0 => {
            let e = rng.random_range(0..ne);
            v.with_edge_op(e, v.edge_op(e) + complex_matrix(rng, dim, dim) * re(0.2)).unwrap()
        }
        _ => {
            let a = rng.random_range(0..g.vertex_count());
            let noise = complex_matrix(rng, dim, dim) * re(0.1);
            let mut ops = v.vertex_ops().to_vec();
            ops[a] += linalg::hermitian_part(&noise);
            LambdaContraction::new(g.clone(), dim, ops, v.edge_ops().to_vec()).unwrap()
        }
    }
}

fn sigma_dims(rng: &mut Rand, nv: usize, max: usize) -> Vec<usize> {
    let mut d: Vec<usize> = (0..nv).map(|_| rng.random_range(0..=max)).collect();
    if d.iter().all(|&x| x == 0) {
        d[rng.random_range(0..nv)] = 1;
    }
    d
}

fn sigma_of(dims: &[usize]) -> (usize, Vec<CMatrix>) {
    let n: usize = dims.iter().sum();
    let mut offset = 0;
    let ps = dims
        .iter()
        .map(|&d| {
            let mut p = linalg::zeros(n, n);
            for k in offset..offset + d {
                p[(k, k)] = re(1.0);
            }
            offset += d;
            p
        })
        .collect();
    (n, ps)
}

/// The creation operators on `F ⊗_σ H_0` at `N_max`, for a vertex
/// representation with the given multiplicities.
pub fn fock_family(g: &Arc<KGraph>, dims: &[usize]) -> LambdaContraction {
    let cap = g.acyclicity().max_shape.expect("acyclic graph");
    let (n, ps) = sigma_of(dims);
    let sigma = SigmaData::from_projections(n, &ps);
    let fock = FockSpace::new(g, &sigma, &cap);
    let vertex_ops = (0..g.vertex_count()).map(|a| fock.creation_matrix(g, &g.vertex_path(a))).collect();
    let edge_ops = (0..g.edges().len()).map(|e| fock.creation_matrix(g, &g.edge_path(e))).collect();
    LambdaContraction::new(g.clone(), fock.dim(), vertex_ops, edge_ops).expect("consistent dimensions")
}

/// A random Fock representation with `dim ≤ MAX_DIM`, when one exists.
pub fn fock(rng: &mut Rand, g: &Arc<KGraph>) -> Option<LambdaContraction> {
    for _ in 0..20 {
        let dims = sigma_dims(rng, g.vertex_count(), 1);
        let v = fock_family(g, &dims);
        if v.dim_h() <= MAX_DIM {
            return Some(conjugate(&v, &unitary(rng, v.dim_h())));
        }
    }
    None
}

/// Compression of the Fock representation (`σ` of multiplicity one) to the
/// co-invariant subspace generated by a few random vectors.
pub fn fock_compression(rng: &mut Rand, g: &Arc<KGraph>) -> Option<LambdaContraction> {
    let full = fock_family(g, &vec![1; g.vertex_count()]);
    let n = full.dim_h();
    let paths = g.paths_upto(full.shape_cap());
    for _ in 0..20 {
        let k = rng.random_range(1..=2.min(n));
        let mut seeds = linalg::zeros(n, k);
        for col in 0..k {
            for _ in 0..rng.random_range(1..=3) {
                seeds[(rng.random_range(0..n), col)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let blocks: Vec<CMatrix> = paths.iter().map(|p| full.product(p).adjoint() * &seeds).collect();
        let j = linalg::orthonormalize(&linalg::hstack(&blocks, n), 1e-10).basis;
        if (1..=MAX_DIM).contains(&j.ncols()) {
            return Some(compress(&full, &j));
        }
    }
    None
}

/// Random row contraction of a 1-graph factor on `⊕_v C^{d_v}`.
fn factor_family(rng: &mut Rand, f: &Factor, dims: &[usize]) -> (Vec<CMatrix>, Vec<CMatrix>) {
    let (n, ps) = sigma_of(dims);
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let mut ops: Vec<CMatrix> = f
        .edges
        .iter()
        .map(|&(r, s)| {
            let mut m = linalg::zeros(n, n);
            let block = complex_matrix(rng, dims[r], dims[s]);
            m.view_mut((offsets[r], offsets[s]), block.shape()).copy_from(&block);
            m
        })
        .collect();
    let sum = ops.iter().fold(linalg::zeros(n, n), |acc, m| acc + m * m.adjoint());
    let top = linalg::spectral_norm(&sum);
    if top > 0.0 {
        let t = rng.random_range(0.3..1.0) / top.sqrt();
        for m in &mut ops {
            *m *= re(t);
        }
    }
    (ps, ops)
}

/// `⊗` of 1-graph contractions on an untwisted product graph: a doubly
/// commuting family.
pub fn tensor(rng: &mut Rand, g: &Arc<KGraph>, factors: &[Factor]) -> Option<LambdaContraction> {
    let sizes: Vec<usize> = factors.iter().map(|f| f.vertices).collect();
    for _ in 0..20 {
        let dims: Vec<Vec<usize>> = factors.iter().map(|f| sigma_dims(rng, f.vertices, 2)).collect();
        let total: usize = dims.iter().map(|d| d.iter().sum::<usize>()).product();
        if total == 0 || total > MAX_DIM {
            continue;
        }
        let parts: Vec<(Vec<CMatrix>, Vec<CMatrix>)> =
            factors.iter().zip(&dims).map(|(f, d)| factor_family(rng, f, d)).collect();
        let kron =
            |mats: Vec<&CMatrix>| mats.into_iter().rev().fold(linalg::identity(1), |acc: CMatrix, m| acc.kronecker(m));
        let n: usize = sizes.iter().product();
        let vertex_ops: Vec<CMatrix> = (0..n)
            .map(|x| {
                let c = coords(x, &sizes);
                kron(c.iter().enumerate().map(|(i, &ci)| &parts[i].0[ci]).collect())
            })
            .collect();
        let mut edge_ops = vec![linalg::zeros(total, total); g.edges().len()];
        for (i, f) in factors.iter().enumerate() {
            for k in 0..f.edges.len() {
                for x in 0..n {
                    let base = coords(x, &sizes);
                    if base[i] != 0 {
                        continue;
                    }
                    let name = product_edge_name(i, k, &base);
                    let e = g.edge_id(&name).expect("product edge");
                    edge_ops[e] = kron(
                        base.iter()
                            .enumerate()
                            .map(|(j, &cj)| if j == i { &parts[i].1[k] } else { &parts[j].0[cj] })
                            .collect(),
                    );
                }
            }
        }
        return Some(LambdaContraction::new(g.clone(), total, vertex_ops, edge_ops).expect("consistent dimensions"));
    }
    None
}

/// Commuting unitaries (simultaneously diagonal in a random basis) on the
/// one-vertex graph with one loop per color.
pub fn commuting_unitaries(rng: &mut Rand, rank: usize) -> LambdaContraction {
    let g = Arc::new(super::commuting_loops_graph(rank));
    let d = rng.random_range(1..=3);
    let w = unitary(rng, d);
    let edge_ops = (0..rank)
        .map(|_| {
            let phases: Vec<_> = (0..d)
                .map(|_| {
                    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    c(t.cos(), t.sin())
                })
                .collect();
            &w * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases)) * w.adjoint()
        })
        .collect();
    LambdaContraction::new(g, d, vec![linalg::identity(d)], edge_ops).expect("consistent dimensions")
}

/// One vertex, a color-1 loop `e` and color-2 loops `f0, f1` with
/// `e f_j = f_{1-j} e`; `V_e = U` swaps the ranges of a projection `P`
/// and `V_{f0} = P`, `V_{f1} = I − P`. Coisometric in both colors.
pub fn twisted_coisometric(rng: &mut Rand) -> LambdaContraction {
    let g = Arc::new(graph(
        2,
        &["a"],
        &[("e", 1, "a", "a"), ("f0", 2, "a", "a"), ("f1", 2, "a", "a")],
        &[([1, 2], ["e", "f0", "f1", "e"]), ([1, 2], ["e", "f1", "f0", "e"])],
    ));
    let k = rng.random_range(1..=3);
    let w = unitary(rng, 2 * k);
    let p = w.columns(0, k).into_owned();
    let q = w.columns(k, k).into_owned();
    let mix = unitary(rng, k);
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let u = (&q * &mix * p.adjoint() + &p * mix.adjoint() * q.adjoint()) * c(t.cos(), t.sin());
    let proj = &p * p.adjoint();
    let comp = linalg::identity(2 * k) - &proj;
    LambdaContraction::new(g, 2 * k, vec![linalg::identity(2 * k)], vec![u, proj, comp]).expect("consistent dimensions")
}

fn edge_count_ok(g: &KGraph) -> bool {
    (0..g.rank()).all(|i| g.edges_of_color(i).len() <= MAX_EDGES_PER_COLOR)
}

/// A mixed batch of families on random graphs, acyclic unless `cyclic`.
/// Every family has `dim H ≤ MAX_DIM`.
pub fn instances(seed: u64, count: usize, max_rank: usize, cyclic: bool) -> Vec<Instance> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    while out.len() < count {
        k += 1;
        let rank = rng.random_range(1..=max_rank);
        let rg =
            if cyclic && rng.random_bool(0.3) { cyclic_graph(&mut rng, rank) } else { acyclic_graph(&mut rng, rank) };
        debug_assert!(rg.graph.is_valid() && (!rg.graph.is_acyclic() || edge_count_ok(&rg.graph)));
        let g = &rg.graph;
        let acyclic = g.is_acyclic();
        let choice = rng.random_range(0..8);
        let made = match choice {
            0 | 1 if g.vertex_count() <= MAX_DIM => {
                let d = if g.vertex_count() * 2 <= MAX_DIM && rng.random_bool(0.3) { 2 } else { 1 };
                Some((FamilyKind::Weighted, weighted(&mut rng, g, d, choice == 1)))
            }
            2 if g.vertex_count() <= MAX_DIM => Some((FamilyKind::Corrupted, corrupted(&mut rng, g))),
            3 if acyclic => fock_compression(&mut rng, g).map(|v| (FamilyKind::FockCompression, v)),
            4 if acyclic => fock(&mut rng, g).map(|v| (FamilyKind::Fock, v)),
            5 => match &rg.kind {
                GraphKind::Product { factors, twisted: false } => {
                    tensor(&mut rng, g, factors).map(|v| (FamilyKind::Tensor, v))
                }
                _ => None,
            },
            6 => {
                let theta = rng.random_range(0.0..std::f64::consts::PI);
                let (_, x) = fix_b_toeplitz_angle(theta);
                Some((FamilyKind::RotatedToeplitz, conjugate(&x, &unitary(&mut rng, 4))))
            }
            _ if cyclic => {
                let v = if rng.random_bool(0.5) {
                    {
                        let r = rng.random_range(1..=max_rank.max(1));
                        commuting_unitaries(&mut rng, r)
                    }
                } else {
                    twisted_coisometric(&mut rng)
                };
                Some((FamilyKind::Coisometric, v))
            }
            _ => None,
        };
        if let Some((kind, v)) = made {
            out.push(Instance { label: format!("seed {seed} #{k} {kind:?}"), kind, v });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{check_doubly_commuting, check_popescu, PopescuGrid};
    use crate::contraction::{check_lambda_contraction, check_tck, is_coisometric};

    #[test]
    fn generated_graphs_are_valid() {
        let mut r = rng(7);
        for rank in 1..=3 {
            for _ in 0..30 {
                let g = acyclic_graph(&mut r, rank);
                assert!(g.graph.is_valid(), "{:?}", g.graph.validate());
                assert!(g.graph.is_acyclic());
                assert!(g.graph.vertex_count() <= MAX_VERTICES);
                assert!(edge_count_ok(&g.graph));
            }
            let g = cyclic_graph(&mut r, rank);
            assert!(g.graph.is_valid());
            assert!(!g.graph.is_acyclic());
        }
    }

    #[test]
    fn twisted_products_are_valid() {
        let mut r = rng(3);
        let f1 = Factor { vertices: 2, edges: vec![(0, 1), (0, 1)] };
        let f2 = Factor { vertices: 2, edges: vec![(0, 1)] };
        for _ in 0..10 {
            assert!(product_graph(&[f1.clone(), f2.clone()], Some(&mut r)).is_valid());
        }
    }

    #[test]
    fn generators_produce_what_they_claim() {
        let mut r = rng(11);
        for _ in 0..10 {
            let RandomGraph { graph: g, kind } = random_product_graph(&mut r, 2);
            if let GraphKind::Product { factors, twisted: false } = kind {
                if let Some(v) = tensor(&mut r, &g, &factors) {
                    assert!(check_lambda_contraction(&v, 1e-9).holds);
                    assert!(check_doubly_commuting(&v, 1e-9).holds);
                }
            }
            if let Some(v) = fock(&mut r, &g) {
                assert!(check_tck(&v, 1e-9).holds);
            }
            if let Some(v) = fock_compression(&mut r, &g) {
                assert!(check_lambda_contraction(&v, 1e-9).holds);
                assert!(check_popescu(&v, PopescuGrid::default(), 1e-9).holds);
            }
            let w = weighted(&mut r, &g, 1, false);
            assert!(check_lambda_contraction(&w, 1e-9).holds);
        }
        let v = twisted_coisometric(&mut r);
        assert!(check_lambda_contraction(&v, 1e-9).holds);
        assert_eq!(is_coisometric(&v, 1e-9), vec![true, true]);
        let u = commuting_unitaries(&mut r, 3);
        assert!(is_coisometric(&u, 1e-9).iter().all(|&b| b));
    }

    #[test]
    fn instance_batches_are_deterministic_and_bounded() {
        let a = instances(5, 20, 2, true);
        let b = instances(5, 20, 2, true);
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert!(x.v.dim_h() <= MAX_DIM);
            assert_eq!(x.v.edge_ops(), y.v.edge_ops());
        }
    }
}
