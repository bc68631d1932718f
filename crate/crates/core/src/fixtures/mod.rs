//! Small named graphs and families used throughout the tests, the CLI
//! self-test and the Python smoke test, plus seeded random generators.

pub mod random;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::contraction::LambdaContraction;
use crate::dilation::Dilation;
use crate::kgraph::{EdgeSpec, GraphSpec, KGraph, SquareSpec};
use crate::linalg::{self, c, diag, re, CMatrix};

/// Builds a graph from `(id, color, range, source)` edges (1-based colors)
/// and `(colors, [f, g, g', f'])` squares meaning `fg = g'f'`.
pub fn graph(
    rank: usize,
    vertices: &[&str],
    edges: &[(&str, usize, &str, &str)],
    squares: &[([usize; 2], [&str; 4])],
) -> KGraph {
    KGraph::from_spec(&spec(rank, vertices, edges, squares)).expect("fixture graph is well formed")
}

pub fn spec(
    rank: usize,
    vertices: &[&str],
    edges: &[(&str, usize, &str, &str)],
    squares: &[([usize; 2], [&str; 4])],
) -> GraphSpec {
    let mut by_color: BTreeMap<String, Vec<EdgeSpec>> = BTreeMap::new();
    for &(id, color, range, source) in edges {
        by_color.entry(color.to_string()).or_default().push(EdgeSpec {
            id: id.into(),
            range: range.into(),
            source: source.into(),
        });
    }
    let mut grouped: BTreeMap<[usize; 2], Vec<[[String; 2]; 2]>> = BTreeMap::new();
    for &(colors, [f, g, g2, f2]) in squares {
        grouped.entry(colors).or_default().push([[f.into(), g.into()], [g2.into(), f2.into()]]);
    }
    GraphSpec {
        format: crate::io::FORMAT_VERSION,
        rank,
        vertices: vertices.iter().map(|v| v.to_string()).collect(),
        edges: by_color,
        squares: grouped.into_iter().map(|(colors, pairs)| SquareSpec { colors, pairs }).collect(),
    }
}

fn family(g: &Arc<KGraph>, dim: usize, vertices: &[(&str, CMatrix)], edges: &[(&str, CMatrix)]) -> LambdaContraction {
    let mut v = vec![linalg::zeros(dim, dim); g.vertex_count()];
    for (name, m) in vertices {
        v[g.vertex_id(name).expect("known vertex")] = m.clone();
    }
    let mut e = vec![linalg::zeros(dim, dim); g.edges().len()];
    for (name, m) in edges {
        e[g.edge_id(name).expect("known edge")] = m.clone();
    }
    LambdaContraction::new(g.clone(), dim, v, e).expect("fixture family is well formed")
}

/// Two vertices `a, b` and one edge `f: b → a`.
pub fn fix_a_graph() -> KGraph {
    graph(1, &["a", "b"], &[("f", 1, "a", "b")], &[])
}

/// `V_a = diag(1,0)`, `V_b = diag(0,1)`, `V_f = c·E_12` on `C²`.
pub fn fix_a(c_f: f64) -> (Arc<KGraph>, LambdaContraction) {
    let g = Arc::new(fix_a_graph());
    let mut f = linalg::zeros(2, 2);
    f[(0, 1)] = re(c_f);
    let v = family(&g, 2, &[("a", diag(&[1.0, 0.0])), ("b", diag(&[0.0, 1.0]))], &[("f", f)]);
    (g, v)
}

/// Four vertices `u, v, w, x` and the single square `b1 r2 = r1 b2`.
pub fn fix_b_graph() -> KGraph {
    graph(
        2,
        &["u", "v", "w", "x"],
        &[("b1", 1, "u", "v"), ("b2", 1, "w", "x"), ("r1", 2, "u", "w"), ("r2", 2, "v", "x")],
        &[([1, 2], ["b1", "r2", "r1", "b2"])],
    )
}

/// Matrix units on `C⁴ = ⊕_{u,v,w,x} C`: a Toeplitz-Cuntz-Krieger family.
pub fn fix_b_tck() -> (Arc<KGraph>, LambdaContraction) {
    let g = Arc::new(fix_b_graph());
    let e = |i, j| linalg::unit(4, 4, i, j);
    let v = family(
        &g,
        4,
        &[("u", e(0, 0)), ("v", e(1, 1)), ("w", e(2, 2)), ("x", e(3, 3))],
        &[("b1", e(0, 1)), ("r2", e(1, 3)), ("r1", e(0, 2)), ("b2", e(2, 3))],
    );
    (g, v)
}

/// Toeplitz family on the square graph with `H_u = C²`, `H_v = H_w = C`, `H_x = 0`,
/// where `X_{b1}` and `X_{r1}` have ranges at angle `theta`.
pub fn fix_b_toeplitz_angle(theta: f64) -> (Arc<KGraph>, LambdaContraction) {
    let g = Arc::new(fix_b_graph());
    let mut pu = linalg::zeros(4, 4);
    pu[(0, 0)] = re(1.0);
    pu[(1, 1)] = re(1.0);
    let mut r1 = linalg::zeros(4, 4);
    r1[(0, 3)] = re(theta.cos());
    r1[(1, 3)] = re(theta.sin());
    let v = family(
        &g,
        4,
        &[("u", pu), ("v", linalg::unit(4, 4, 2, 2)), ("w", linalg::unit(4, 4, 3, 3))],
        &[("b1", linalg::unit(4, 4, 0, 2)), ("r1", r1)],
    );
    (g, v)
}

/// [`fix_b_toeplitz_angle`] at 45°: Toeplitz, but `X_{b1}* X_{r1} ≠ 0`
/// while `Λ^{(1,1)}` contributes nothing.
pub fn fix_b_toeplitz_not_tck() -> (Arc<KGraph>, LambdaContraction) {
    fix_b_toeplitz_angle(std::f64::consts::FRAC_PI_4)
}

/// One vertex with a loop of each of two colors.
pub fn two_loop_graph() -> KGraph {
    graph(2, &["a"], &[("e", 1, "a", "a"), ("f", 2, "a", "a")], &[([1, 2], ["e", "f", "f", "e"])])
}

/// Two equal nilpotent loops: a Λ-contraction failing the Popescu condition.
pub fn fix_c() -> (Arc<KGraph>, LambdaContraction) {
    let g = Arc::new(two_loop_graph());
    let n = linalg::unit(2, 2, 0, 1);
    let v = family(&g, 2, &[("a", linalg::identity(2))], &[("e", n.clone()), ("f", n)]);
    (g, v)
}

pub fn single_loop_graph() -> KGraph {
    graph(1, &["a"], &[("e", 1, "a", "a")], &[])
}

/// One vertex, one loop per color, all squares commuting.
pub fn commuting_loops_graph(rank: usize) -> KGraph {
    let names: Vec<String> = (1..=rank).map(|i| format!("e{i}")).collect();
    let edges: Vec<(&str, usize, &str, &str)> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i + 1, "a", "a")).collect();
    let mut squares = Vec::new();
    for i in 0..rank {
        for j in i + 1..rank {
            squares
                .push(([i + 1, j + 1], [names[i].as_str(), names[j].as_str(), names[j].as_str(), names[i].as_str()]));
        }
    }
    graph(rank, &["a"], &edges, &squares)
}

/// Commuting diagonal unitaries on `C²`, one per color.
pub fn cyclic_unitary(rank: usize) -> (Arc<KGraph>, LambdaContraction) {
    let g = Arc::new(commuting_loops_graph(rank));
    let edges: Vec<(String, CMatrix)> = (0..rank)
        .map(|i| {
            let t = 0.7 * (i + 1) as f64;
            let mut u = linalg::zeros(2, 2);
            u[(0, 0)] = c(t.cos(), t.sin());
            u[(1, 1)] = c((2.0 * t).cos(), -(2.0 * t).sin());
            (format!("e{}", i + 1), u)
        })
        .collect();
    let edges: Vec<(&str, CMatrix)> = edges.iter().map(|(n, m)| (n.as_str(), m.clone())).collect();
    let v = family(&g, 2, &[("a", linalg::identity(2))], &edges);
    (g, v)
}

/// Rank 1, one vertex, no edges, `V_a = I_n`.
pub fn single_vertex_identity(n: usize) -> (Arc<KGraph>, LambdaContraction) {
    let g = Arc::new(graph(1, &["a"], &[], &[]));
    let v = family(&g, n, &[("a", linalg::identity(n))], &[]);
    (g, v)
}

/// Rank 2, one vertex, no edges, `V_a = I_2`.
pub fn two_color_no_edges() -> (Arc<KGraph>, LambdaContraction) {
    let g = Arc::new(graph(2, &["a"], &[], &[]));
    let v = family(&g, 2, &[("a", linalg::identity(2))], &[]);
    (g, v)
}

/// A minimal isometric dilation that is not doubly commuting: the
/// Toeplitz family of [`fix_b_toeplitz_not_tck`] compressed to the
/// co-invariant subspace spanned by a generic `h ∈ H_u`, `H_v` and `H_w`.
pub fn non_dc_minimal_dilation() -> (LambdaContraction, Dilation) {
    let (_, x) = fix_b_toeplitz_not_tck();
    let (t, phi) = (0.7_f64, 0.3_f64);
    let mut j = linalg::zeros(4, 3);
    j[(0, 0)] = re(t.cos());
    j[(1, 0)] = c(t.sin() * phi.cos(), t.sin() * phi.sin());
    j[(2, 1)] = re(1.0);
    j[(3, 2)] = re(1.0);
    let v = compress(&x, &j);
    (v, Dilation { x, embed: j })
}

/// `J* X_λ J` for an isometry `J`.
pub fn compress(x: &LambdaContraction, j: &CMatrix) -> LambdaContraction {
    let f = |m: &CMatrix| j.adjoint() * m * j;
    LambdaContraction::new(
        x.graph_arc(),
        j.ncols(),
        x.vertex_ops().iter().map(f).collect(),
        x.edge_ops().iter().map(f).collect(),
    )
    .expect("compression keeps dimensions consistent")
    .with_shape_cap(x.shape_cap().clone())
}

/// `W X_λ W*` for a unitary `W`.
pub fn conjugate(x: &LambdaContraction, w: &CMatrix) -> LambdaContraction {
    compress(x, &w.adjoint())
}

/// Named fixtures as `(name, family)`.
pub fn named() -> Vec<(&'static str, LambdaContraction)> {
    vec![
        ("fix-a", fix_a(0.5).1),
        ("fix-a-isometric", fix_a(1.0).1),
        ("fix-a-large", fix_a(2.0).1),
        ("fix-b-tck", fix_b_tck().1),
        ("fix-b-toeplitz", fix_b_toeplitz_not_tck().1),
        ("fix-c", fix_c().1),
        ("cyclic-unitary", cyclic_unitary(2).1),
        ("identity", single_vertex_identity(2).1),
        ("no-edges", two_color_no_edges().1),
    ]
}
