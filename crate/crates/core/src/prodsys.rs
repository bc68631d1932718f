//! The product system of a k-graph realised concretely.
//!
//! `E(n)` is the space of functions on `Λ^n`, and `E(n) ⊗_σ H` is
//! `⊕_{λ ∈ Λ^n} V_{s(λ)}H`. A [`BlockSpace`] lays such a direct sum out as
//! coordinates: one block per slot, of dimension `dim V_{s(last path)}H`,
//! expressed in an orthonormal frame of that range. The truncated Fock space
//! `F ⊗_σ H` is the block space over all paths with shape below a cap.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::kgraph::{KGraph, Path, Shape, VertexId};
use crate::linalg::{self, CMatrix, C64};

/// The vertex representation `σ(δ_a) = P_a`, stored through orthonormal
/// frames `U_a` with `U_a U_a* = P_a`.
#[derive(Clone, Debug)]
pub struct SigmaData {
    dim_h: usize,
    frames: Vec<CMatrix>,
}

impl SigmaData {
    pub fn from_projections(dim_h: usize, projections: &[CMatrix]) -> Self {
        let frames = projections.iter().map(linalg::projection_frame).collect();
        SigmaData { dim_h, frames }
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    /// `dim P_a H`.
    pub fn dim(&self, a: VertexId) -> usize {
        self.frames[a].ncols()
    }

    pub fn frame(&self, a: VertexId) -> &CMatrix {
        &self.frames[a]
    }
}

/// Coordinates for `⊕_{slots} P_{s(slot)} H`, where a slot is a tuple of
/// composable paths (an elementary tensor `δ_{λ_1} ⊗ ... ⊗ δ_{λ_k}`).
#[derive(Clone, Debug)]
pub struct BlockSpace {
    slots: Vec<Vec<Path>>,
    offsets: Vec<usize>,
    dims: Vec<usize>,
    total: usize,
    index: HashMap<Vec<Path>, usize>,
}

impl BlockSpace {
    pub fn new(slots: Vec<Vec<Path>>, sigma: &SigmaData) -> Self {
        let mut offsets = Vec::with_capacity(slots.len());
        let mut dims = Vec::with_capacity(slots.len());
        let mut index = HashMap::with_capacity(slots.len());
        let mut total = 0;
        for (k, slot) in slots.iter().enumerate() {
            let d = sigma.dim(slot.last().expect("empty slot").source());
            offsets.push(total);
            dims.push(d);
            total += d;
            index.insert(slot.clone(), k);
        }
        BlockSpace { slots, offsets, dims, total, index }
    }

    /// Slots `(λ)` for every `λ` in `paths`.
    pub fn of_paths(paths: Vec<Path>, sigma: &SigmaData) -> Self {
        Self::new(paths.into_iter().map(|p| vec![p]).collect(), sigma)
    }

    /// `E(m) ⊗ E(n) ⊗_σ H`: slots `(λ, μ)` with `s(λ) = r(μ)`.
    pub fn pairs(g: &KGraph, m: &Shape, n: &Shape, sigma: &SigmaData) -> Self {
        let mut slots = Vec::new();
        for l in g.paths(m, None, None) {
            for mu in g.paths(n, Some(l.source()), None) {
                slots.push(vec![l.clone(), mu]);
            }
        }
        Self::new(slots, sigma)
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    pub fn slots(&self) -> &[Vec<Path>] {
        &self.slots
    }

    pub fn slot(&self, key: &[Path]) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn block(&self, slot: usize) -> Range<usize> {
        self.offsets[slot]..self.offsets[slot] + self.dims[slot]
    }
}

/// The Fock space truncated to shapes `<= cap`, tensored with `H`.
#[derive(Clone, Debug)]
pub struct FockSpace {
    space: BlockSpace,
    cap: Shape,
    truncated: bool,
}

impl FockSpace {
    pub fn new(g: &KGraph, sigma: &SigmaData, cap: &Shape) -> Self {
        let truncated = match g.acyclicity().max_shape {
            Some(max) => !max.le(cap),
            None => true,
        };
        FockSpace { space: BlockSpace::of_paths(g.paths_upto(cap), sigma), cap: cap.clone(), truncated }
    }

    pub fn space(&self) -> &BlockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn cap(&self) -> &Shape {
        &self.cap
    }

    /// True when paths beyond the cap exist, so creation operators are
    /// compressions rather than the real thing.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn slot(&self, p: &Path) -> Option<usize> {
        self.space.slot(std::slice::from_ref(p))
    }

    pub fn block_of(&self, p: &Path) -> Option<Range<usize>> {
        self.slot(p).map(|k| self.space.block(k))
    }

    /// Matrix of `L_{δ_λ} ⊗ I_H`: `(μ, k) ↦ (λμ, k)` when composable and
    /// within the cap.
    pub fn creation_matrix(&self, g: &KGraph, lambda: &Path) -> CMatrix {
        let n = self.dim();
        let mut out = linalg::zeros(n, n);
        for (k, slot) in self.space.slots.iter().enumerate() {
            let mu = &slot[0];
            if mu.range() != lambda.source() || !(lambda.shape() + mu.shape()).le(&self.cap) {
                continue;
            }
            let target = g.compose(lambda, mu).expect("composable");
            let t = self.slot(&target).expect("target within cap");
            let (src, dst) = (self.space.block(k), self.space.block(t));
            for (i, j) in dst.zip(src) {
                out[(i, j)] = C64::new(1.0, 0.0);
            }
        }
        out
    }
}

/// `t_{m,n}` on a basis pair: `δ_λ ⊗ δ_μ ↦ δ_{ν'} ⊗ δ_{λ'}` where
/// `λμ = ν'λ'` with `σ(ν') = σ(μ)`. `None` when `s(λ) != r(μ)`.
pub fn flip(g: &KGraph, lambda: &Path, mu: &Path) -> Option<(Path, Path)> {
    let joined = g.compose(lambda, mu)?;
    Some(g.factor(&joined, mu.shape(), lambda.shape()).expect("shape is the sum"))
}

/// Applies `flip` to positions `k, k+1` of a tensor of basis paths.
pub fn flip_at(g: &KGraph, tuple: &[Path], k: usize) -> Option<Vec<Path>> {
    let (a, b) = flip(g, &tuple[k], &tuple[k + 1])?;
    let mut out = tuple.to_vec();
    out[k] = a;
    out[k + 1] = b;
    Some(out)
}

/// `t_{m,n} ⊗ I_H` as a matrix from `BlockSpace::pairs(m, n)` to
/// `BlockSpace::pairs(n, m)`.
pub fn flip_matrix(g: &KGraph, from: &BlockSpace, to: &BlockSpace) -> CMatrix {
    let mut out = linalg::zeros(to.dim(), from.dim());
    for (k, slot) in from.slots().iter().enumerate() {
        let (a, b) = flip(g, &slot[0], &slot[1]).expect("slots are composable");
        let t = to.slot(&[a, b]).expect("flipped pair present");
        for (i, j) in to.block(t).zip(from.block(k)) {
            out[(i, j)] = C64::new(1.0, 0.0);
        }
    }
    out
}

/// A finitely supported element of `E(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrElement {
    shape: Shape,
    coeffs: BTreeMap<Path, C64>,
}

impl CorrElement {
    pub fn zero(shape: Shape) -> Self {
        CorrElement { shape, coeffs: BTreeMap::new() }
    }

    pub fn delta(p: &Path) -> Self {
        let mut x = Self::zero(p.shape().clone());
        x.coeffs.insert(p.clone(), C64::new(1.0, 0.0));
        x
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn coeffs(&self) -> &BTreeMap<Path, C64> {
        &self.coeffs
    }

    pub fn get(&self, p: &Path) -> C64 {
        self.coeffs.get(p).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, p: &Path, c: C64) {
        assert_eq!(p.shape(), &self.shape, "path shape differs from element shape");
        *self.coeffs.entry(p.clone()).or_default() += c;
        if self.coeffs[p] == C64::default() {
            self.coeffs.remove(p);
        }
    }

    /// `⟨x, y⟩(a) = Σ_{λ ∈ Λ^n_a} conj(x(λ)) y(λ)`, one entry per vertex.
    pub fn inner(&self, other: &CorrElement, vertex_count: usize) -> Vec<C64> {
        let mut out = vec![C64::default(); vertex_count];
        for (p, x) in &self.coeffs {
            out[p.source()] += x.conj() * other.get(p);
        }
        out
    }

    /// `sqrt(⟨x, x⟩(a))` per vertex.
    pub fn norms(&self, vertex_count: usize) -> Vec<f64> {
        self.inner(self, vertex_count).into_iter().map(|z| z.re.max(0.0).sqrt()).collect()
    }

    /// `(f·x)(λ) = f(r(λ)) x(λ)`.
    pub fn left_action(&self, f: &[C64]) -> Self {
        self.map(|p, x| f[p.range()] * x)
    }

    /// `(x·f)(λ) = x(λ) f(s(λ))`.
    pub fn right_action(&self, f: &[C64]) -> Self {
        self.map(|p, x| x * f[p.source()])
    }

    fn map(&self, mut op: impl FnMut(&Path, C64) -> C64) -> Self {
        let mut out = Self::zero(self.shape.clone());
        for (p, x) in &self.coeffs {
            out.add_term(p, op(p, *x));
        }
        out
    }

    /// `x ⊗ y` in `E(m+n)`: `(x ⊗ y)(μν) = x(μ) y(ν)`.
    pub fn tensor(&self, g: &KGraph, other: &CorrElement) -> Self {
        let mut out = Self::zero(&self.shape + &other.shape);
        for (p, x) in &self.coeffs {
            for (q, y) in &other.coeffs {
                if let Some(pq) = g.compose(p, q) {
                    out.add_term(&pq, x * y);
                }
            }
        }
        out
    }

    /// `t(x ⊗ y)` expanded over basis pairs of `E(n) ⊗ E(m)`.
    pub fn flip_tensor(&self, g: &KGraph, other: &CorrElement) -> BTreeMap<(Path, Path), C64> {
        let mut out: BTreeMap<(Path, Path), C64> = BTreeMap::new();
        for (p, x) in &self.coeffs {
            for (q, y) in &other.coeffs {
                if let Some(pair) = flip(g, p, q) {
                    *out.entry(pair).or_default() += x * y;
                }
            }
        }
        out.retain(|_, c| *c != C64::default());
        out
    }
}

/// Norm of a matrix over `E(n)` in the column operator-space structure:
/// `sup_a ‖A_a‖^{1/2}` with `(A_a)_{ik} = Σ_l Σ_{λ ∈ Λ^n_a} conj(x_li(λ)) x_lk(λ)`.
pub fn operator_space_norm(entries: &[Vec<CorrElement>], vertex_count: usize) -> f64 {
    let n = entries.len();
    let mut best: f64 = 0.0;
    for a in 0..vertex_count {
        let mut m = linalg::zeros(n, n);
        for row in entries {
            for i in 0..n {
                for k in 0..n {
                    m[(i, k)] += row[i].inner(&row[k], vertex_count)[a];
                }
            }
        }
        best = best.max(linalg::spectral_norm(&m));
    }
    best.sqrt()
}

/// A finite combination `Σ c · L_λ L_μ*` with `s(λ) = s(μ)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NOPoly {
    terms: BTreeMap<(Path, Path), C64>,
}

impl NOPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `L_λ L_μ*`, or zero when `s(λ) != s(μ)`.
    pub fn term(lambda: &Path, mu: &Path, coeff: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(lambda, mu, coeff);
        p
    }

    pub fn add_term(&mut self, lambda: &Path, mu: &Path, coeff: C64) {
        if lambda.source() != mu.source() {
            return;
        }
        let key = (lambda.clone(), mu.clone());
        let c = self.terms.entry(key.clone()).or_default();
        *c += coeff;
        if *c == C64::default() {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> &BTreeMap<(Path, Path), C64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &NOPoly) -> NOPoly {
        let mut out = self.clone();
        for ((l, m), c) in &other.terms {
            out.add_term(l, m, *c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> NOPoly {
        let mut out = NOPoly::zero();
        for ((l, m), c) in &self.terms {
            out.add_term(l, m, c * s);
        }
        out
    }

    /// `(L_λ L_μ*)*  = L_μ L_λ*`, extended antilinearly.
    pub fn adjoint(&self) -> NOPoly {
        let mut out = NOPoly::zero();
        for ((l, m), c) in &self.terms {
            out.add_term(m, l, c.conj());
        }
        out
    }

    /// Normal-ordered product: `(L_λ L_μ*)(L_ν L_ρ*) = Σ_{μα = νβ ∈ MCE(μ,ν)} L_{λα} L_{ρβ}*`.
    pub fn mul(&self, g: &KGraph, other: &NOPoly) -> NOPoly {
        let mut out = NOPoly::zero();
        for ((l, m), c) in &self.terms {
            for ((n, r), d) in &other.terms {
                for ext in g.mce(m, n) {
                    let la = g.compose(l, &ext.alpha).expect("s(λ) = s(μ) = r(α)");
                    let rb = g.compose(r, &ext.beta).expect("s(ρ) = s(ν) = r(β)");
                    out.add_term(&la, &rb, c * d);
                }
            }
        }
        out
    }

    /// `Σ c · L_λ L_μ*` on the truncated Fock space.
    pub fn eval_fock(&self, g: &KGraph, fock: &FockSpace) -> CMatrix {
        let n = fock.dim();
        let mut out = linalg::zeros(n, n);
        let mut cache: HashMap<&Path, CMatrix> = HashMap::new();
        for ((l, m), c) in &self.terms {
            for p in [l, m] {
                cache.entry(p).or_insert_with(|| fock.creation_matrix(g, p));
            }
            out += &cache[l] * cache[m].adjoint() * *c;
        }
        out
    }

    /// `Σ_a L_a L_a*`.
    pub fn unit(g: &KGraph) -> NOPoly {
        let mut out = NOPoly::zero();
        for a in 0..g.vertex_count() {
            let v = g.vertex_path(a);
            out.add_term(&v, &v, C64::new(1.0, 0.0));
        }
        out
    }

    pub fn to_json(&self, g: &KGraph) -> Vec<NOTermJson> {
        self.terms
            .iter()
            .map(|((l, m), c)| NOTermJson { left: PathWord::of(g, l), right: PathWord::of(g, m), coeff: [c.re, c.im] })
            .collect()
    }

    pub fn from_json(g: &KGraph, terms: &[NOTermJson]) -> Result<NOPoly, String> {
        let mut out = NOPoly::zero();
        for t in terms {
            let l = t.left.resolve(g)?;
            let m = t.right.resolve(g)?;
            if l.source() != m.source() {
                return Err(format!("term ({}, {}) has mismatched sources", g.label(&l), g.label(&m)));
            }
            out.add_term(&l, &m, C64::new(t.coeff[0], t.coeff[1]));
        }
        Ok(out)
    }
}

/// A path in JSON: a vertex name or a list of edge names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathWord {
    Vertex(String),
    Edges(Vec<String>),
}

impl PathWord {
    pub fn of(g: &KGraph, p: &Path) -> Self {
        if p.is_vertex() {
            PathWord::Vertex(g.vertex_name(p.range()).to_string())
        } else {
            PathWord::Edges(p.word().iter().map(|&e| g.edge(e).name.clone()).collect())
        }
    }

    pub fn resolve(&self, g: &KGraph) -> Result<Path, String> {
        match self {
            PathWord::Vertex(v) => {
                g.vertex_id(v).map(|a| g.vertex_path(a)).ok_or_else(|| format!("unknown vertex {v:?}"))
            }
            PathWord::Edges(es) => {
                let names: Vec<&str> = es.iter().map(String::as_str).collect();
                g.path_from_names(&names)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NOTermJson {
    pub left: PathWord,
    pub right: PathWord,
    pub coeff: [f64; 2],
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{re, residual};

    fn one() -> C64 {
        re(1.0)
    }

    #[test]
    fn flip_examples() {
        let g = fixtures::fix_b_graph();
        let p = |n: &str| g.path_from_names(&[n]).unwrap();
        let (a, b) = flip(&g, &p("b1"), &p("r2")).unwrap();
        assert_eq!((g.label(&a), g.label(&b)), ("r1".into(), "b2".into()));
        let (c, d) = flip(&g, &a, &b).unwrap();
        assert_eq!((c, d), (p("b1"), p("r2")));
        assert!(flip(&g, &p("b1"), &p("b2")).is_none());
        let (s, r) = (g.vertex_path(p("b1").source()), g.vertex_path(p("b1").range()));
        assert_eq!(flip(&g, &p("b1"), &s), Some((r, p("b1"))));
    }

    #[test]
    fn creation_on_fix_a() {
        let (g, v) = fixtures::fix_a(0.5);
        let sigma = v.sigma();
        let fock = FockSpace::new(&g, &sigma, &Shape::new(vec![1]));
        assert!(!fock.truncated());
        assert_eq!(fock.dim(), 3);
        let f = g.path_from_names(&["f"]).unwrap();
        let lf = fock.creation_matrix(&g, &f);
        let b = fock.block_of(&g.path_from_names(&["b"]).unwrap()).unwrap();
        let fb = fock.block_of(&f).unwrap();
        let mut expected = linalg::zeros(3, 3);
        expected[(fb.start, b.start)] = one();
        assert_eq!(lf, expected);
        let a = g.path_from_names(&["a"]).unwrap();
        let la = fock.creation_matrix(&g, &a);
        let ablock = fock.block_of(&a).unwrap();
        let mut pa = linalg::zeros(3, 3);
        pa[(ablock.start, ablock.start)] = one();
        pa[(fb.start, fb.start)] = one();
        assert_eq!(la, pa);
        let capped = FockSpace::new(&g, &sigma, &Shape::new(vec![0]));
        assert!(capped.truncated());
        assert_eq!(capped.creation_matrix(&g, &f), linalg::zeros(2, 2));
    }

    #[test]
    fn no_mult_examples() {
        let g = fixtures::fix_b_graph();
        let p = |n: &str| g.path_from_names(&[n]).unwrap();
        let u = g.vertex_path(g.vertex_id("u").unwrap());
        let pu = NOPoly::term(&u, &u, one());
        assert_eq!(pu.mul(&g, &pu), pu);
        let x = NOPoly::term(&p("b1"), &p("b1"), one());
        let y = NOPoly::term(&p("r1"), &p("r1"), one());
        let nu = g.path_from_names(&["b1", "r2"]).unwrap();
        assert_eq!(x.mul(&g, &y), NOPoly::term(&nu, &nu, one()));

        let (ga, _) = fixtures::fix_a(0.5);
        let f = ga.path_from_names(&["f"]).unwrap();
        let b = ga.path_from_names(&["b"]).unwrap();
        let a = ga.path_from_names(&["a"]).unwrap();
        // L_f* = L_b L_f*; r(f) = a, so it survives L_a L_a* and dies on L_b L_b*
        let lf_star = NOPoly::term(&b, &f, one());
        assert_eq!(lf_star.mul(&ga, &NOPoly::term(&a, &a, one())), lf_star);
        assert!(lf_star.mul(&ga, &NOPoly::term(&b, &b, one())).is_zero());
    }

    #[test]
    fn eval_examples() {
        let (g, v) = fixtures::fix_a(0.5);
        let sigma = v.sigma();
        let fock = FockSpace::new(&g, &sigma, &Shape::new(vec![1]));
        assert_eq!(NOPoly::unit(&g).eval_fock(&g, &fock), linalg::identity(fock.dim()));
        let f = g.path_from_names(&["f"]).unwrap();
        let m = NOPoly::term(&f, &f, one()).eval_fock(&g, &fock);
        let fb = fock.block_of(&f).unwrap();
        let mut expected = linalg::zeros(3, 3);
        expected[(fb.start, fb.start)] = one();
        assert!(residual(&m, &expected) < 1e-15);
    }

    #[test]
    fn fix_b_product_matches_matrices() {
        let (g, v) = fixtures::fix_b_tck();
        let sigma = v.sigma();
        let cap = g.acyclicity().max_shape.unwrap();
        let fock = FockSpace::new(&g, &sigma, &cap);
        let p = |n: &str| g.path_from_names(&[n]).unwrap();
        let x = NOPoly::term(&p("b1"), &p("b1"), one());
        let y = NOPoly::term(&p("r1"), &p("r1"), one());
        let lhs = x.mul(&g, &y).eval_fock(&g, &fock);
        let rhs = x.eval_fock(&g, &fock) * y.eval_fock(&g, &fock);
        assert!(residual(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn corr_element_structure() {
        let g = fixtures::fix_b_graph();
        let n = g.vertex_count();
        let p = |n: &str| g.path_from_names(&[n]).unwrap();
        let mut x = CorrElement::delta(&p("b1"));
        x.add_term(&p("b2"), re(2.0));
        let norms = x.norms(n);
        assert_eq!(norms[g.vertex_id("v").unwrap()], 1.0);
        assert_eq!(norms[g.vertex_id("x").unwrap()], 2.0);
        let t = CorrElement::delta(&p("b1")).tensor(&g, &CorrElement::delta(&p("r2")));
        let nu = g.path_from_names(&["b1", "r2"]).unwrap();
        assert_eq!(t.get(&nu), one());
        let fl = CorrElement::delta(&p("b1")).flip_tensor(&g, &CorrElement::delta(&p("r2")));
        assert_eq!(fl.len(), 1);
        assert_eq!(fl[&(p("r1"), p("b2"))], one());
        let mut f = vec![re(0.0); n];
        f[g.vertex_id("u").unwrap()] = re(3.0);
        assert_eq!(x.left_action(&f).get(&p("b1")), re(3.0));
        assert_eq!(x.left_action(&f).get(&p("b2")), re(0.0));
        // a row of distinct deltas has norm 1
        let row = vec![vec![CorrElement::delta(&p("b1")), CorrElement::delta(&p("b2"))]];
        assert!((operator_space_norm(&row, n) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let g = fixtures::fix_b_graph();
        let nu = g.path_from_names(&["r1", "b2"]).unwrap();
        let x = g.vertex_path(g.vertex_id("x").unwrap());
        let p = NOPoly::term(&nu, &x, C64::new(0.5, -1.0));
        let text = serde_json::to_string(&p.to_json(&g)).unwrap();
        assert_eq!(text, r#"[{"left":["b1","r2"],"right":"x","coeff":[0.5,-1.0]}]"#);
        let back: Vec<NOTermJson> = serde_json::from_str(&text).unwrap();
        assert_eq!(NOPoly::from_json(&g, &back).unwrap(), p);
    }
}
