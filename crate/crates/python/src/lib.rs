//! Python bindings: graphs, contraction families, condition checks and
//! dilations. Reports come back as plain dictionaries.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use kgd_core::conditions::{self, PopescuGrid};
use kgd_core::contraction::{self, ContractionSpec, LambdaContraction};
use kgd_core::dilation::{self, DilateOptions, Dilation as CoreDilation, DilationJson};
use kgd_core::fixtures;
use kgd_core::io;
use kgd_core::kgraph::{KGraph, Path, Shape};
use kgd_core::linalg::CMatrix;
use kgd_core::prodsys::NOPoly;
use kgd_core::selftest::{self as core_selftest, SelftestOptions};

type Rows = Vec<Vec<Complex64>>;
/// `(λ, μ, c)` for the term `c · L_λ L_μ*`.
type Term = (Vec<String>, Vec<String>, Complex64);

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts a serializable value into Python objects through JSON.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn matrix(name: &str, rows: &Rows) -> PyResult<CMatrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{name}: rows have different lengths")));
    }
    Ok(CMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn json_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    rows(m).into_iter().map(|r| r.into_iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn shape(g: &KGraph, degrees: Option<Vec<u32>>) -> PyResult<Option<Shape>> {
    match degrees {
        Some(d) if d.len() != g.rank() => {
            Err(PyValueError::new_err(format!("shape has {} entries, graph has rank {}", d.len(), g.rank())))
        }
        Some(d) => Ok(Some(Shape::new(d))),
        None => Ok(None),
    }
}

fn path(g: &KGraph, names: &[String]) -> PyResult<Path> {
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    g.path_from_names(&names).map_err(PyKeyError::new_err)
}

fn names(g: &KGraph, p: &Path) -> Vec<String> {
    if p.is_vertex() {
        vec![g.vertex_name(p.range()).to_string()]
    } else {
        p.word().iter().map(|&e| g.edge(e).name.clone()).collect()
    }
}

/// A higher-rank graph. Paths are lists of edge names, or a one-element
/// list holding a vertex name.
#[pyclass(name = "Graph", module = "kgd", frozen)]
struct PyGraph {
    inner: Arc<KGraph>,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: Arc::new(io::graph_from_str(text, "<string>").map_err(value_error)?) })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyGraph { inner: Arc::new(io::load_graph(&path).map_err(value_error)?) })
    }

    fn to_json(&self) -> String {
        io::to_json(&self.inner.to_spec())
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    #[getter]
    fn vertices(&self) -> Vec<String> {
        (0..self.inner.vertex_count()).map(|v| self.inner.vertex_name(v).to_string()).collect()
    }

    #[getter]
    fn edges(&self) -> Vec<(String, usize, String, String)> {
        let g = &self.inner;
        g.edges()
            .iter()
            .map(|e| (e.name.clone(), e.color + 1, g.vertex_name(e.range).into(), g.vertex_name(e.source).into()))
            .collect()
    }

    fn is_valid(&self) -> bool {
        self.inner.is_valid()
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.validate())
    }

    /// Largest nonempty shape, or `None` for graphs with cycles.
    fn max_shape(&self) -> Option<Vec<u32>> {
        self.inner.acyclicity().max_shape.map(|s| s.degrees().to_vec())
    }

    #[pyo3(signature = (shape, range = None, source = None))]
    fn paths(&self, shape: Vec<u32>, range: Option<&str>, source: Option<&str>) -> PyResult<Vec<Vec<String>>> {
        let g = &self.inner;
        let n = self::shape(g, Some(shape))?.unwrap();
        let vertex = |name: Option<&str>| {
            name.map(|v| g.vertex_id(v).ok_or_else(|| PyKeyError::new_err(format!("unknown vertex {v:?}")))).transpose()
        };
        Ok(g.paths(&n, vertex(range)?, vertex(source)?).iter().map(|p| names(g, p)).collect())
    }

    fn normal_form(&self, word: Vec<String>) -> PyResult<Vec<String>> {
        Ok(names(&self.inner, &path(&self.inner, &word)?))
    }

    /// The unique factorization `λ = αβ` with `σ(α) = m`.
    fn factor(&self, word: Vec<String>, m: Vec<u32>) -> PyResult<(Vec<String>, Vec<String>)> {
        let g = &self.inner;
        let p = path(g, &word)?;
        let m = shape(g, Some(m))?.unwrap();
        let n = p.shape().checked_sub(&m).ok_or_else(|| PyValueError::new_err("m exceeds the shape of the path"))?;
        let (a, b) = g.factor(&p, &m, &n).map_err(value_error)?;
        Ok((names(g, &a), names(g, &b)))
    }

    /// Minimal common extensions as `(α, β)` with `λα = μβ`.
    fn mce(&self, lam: Vec<String>, mu: Vec<String>) -> PyResult<Vec<(Vec<String>, Vec<String>)>> {
        let g = &self.inner;
        let (l, m) = (path(g, &lam)?, path(g, &mu)?);
        Ok(g.mce(&l, &m).iter().map(|x| (names(g, &x.alpha), names(g, &x.beta))).collect())
    }

    /// Normal-ordered product of two sums `Σ c L_λ L_μ*` given as
    /// `(λ, μ, c)` triples.
    fn multiply(&self, p: Vec<Term>, q: Vec<Term>) -> PyResult<Vec<Term>> {
        let g = &self.inner;
        let poly = |terms: &[Term]| -> PyResult<NOPoly> {
            let mut out = NOPoly::zero();
            for (l, m, c) in terms {
                out.add_term(&path(g, l)?, &path(g, m)?, *c);
            }
            Ok(out)
        };
        let product = poly(&p)?.mul(g, &poly(&q)?);
        Ok(product.terms().iter().map(|((l, m), c)| (names(g, l), names(g, m), *c)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(rank={}, vertices={}, edges={})",
            self.inner.rank(),
            self.inner.vertex_count(),
            self.inner.edges().len()
        )
    }
}

/// A family of operators indexed by vertices and edges of a graph.
#[pyclass(name = "Contraction", module = "kgd", frozen)]
struct PyContraction {
    inner: LambdaContraction,
}

#[pymethods]
impl PyContraction {
    /// `vertices` and `edges` map names to square complex matrices given
    /// as nested lists.
    #[new]
    #[pyo3(signature = (graph, vertices, edges, shape_cap = None))]
    fn new(
        graph: &PyGraph,
        vertices: std::collections::BTreeMap<String, Rows>,
        edges: std::collections::BTreeMap<String, Rows>,
        shape_cap: Option<Vec<u32>>,
    ) -> PyResult<Self> {
        let dim = vertices.values().next().map_or(0, Vec::len);
        let convert = |m: &std::collections::BTreeMap<String, Rows>| -> PyResult<_> {
            m.iter().map(|(k, v)| Ok((k.clone(), json_rows(&matrix(k, v)?)))).collect::<PyResult<_>>()
        };
        let spec = ContractionSpec {
            format: io::FORMAT_VERSION,
            dim_h: dim,
            vertices: convert(&vertices)?,
            edges: convert(&edges)?,
        };
        Self::build(&graph.inner, &spec, shape_cap)
    }

    #[staticmethod]
    #[pyo3(signature = (graph, text, shape_cap = None))]
    fn from_json(graph: &PyGraph, text: &str, shape_cap: Option<Vec<u32>>) -> PyResult<Self> {
        let spec: ContractionSpec = io::parse_json(text, "<string>").map_err(value_error)?;
        Self::build(&graph.inner, &spec, shape_cap)
    }

    fn to_json(&self) -> String {
        io::to_json(&self.inner.to_spec())
    }

    #[getter]
    fn graph(&self) -> PyGraph {
        PyGraph { inner: self.inner.graph_arc() }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim_h()
    }

    #[getter]
    fn shape_cap(&self) -> Vec<u32> {
        self.inner.shape_cap().degrees().to_vec()
    }

    /// `V_λ` for a path given by names.
    fn operator(&self, word: Vec<String>) -> PyResult<Rows> {
        let p = path(self.inner.graph(), &word)?;
        Ok(rows(&self.inner.extend(&p).map_err(value_error)?))
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn check_lambda_contraction<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &contraction::check_lambda_contraction(&self.inner, tol))
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn check_toeplitz<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &contraction::check_toeplitz_family(&self.inner, tol))
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn check_tck<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &contraction::check_tck(&self.inner, tol))
    }

    #[pyo3(signature = (rho = 0.5, count = 32, tol = 1e-9))]
    fn check_popescu<'py>(&self, py: Python<'py>, rho: f64, count: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &conditions::check_popescu(&self.inner, grid(rho, count)?, tol))
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn check_brehmer_solel<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &conditions::check_brehmer_solel(&self.inner, tol))
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn check_doubly_commuting<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &conditions::check_doubly_commuting(&self.inner, tol))
    }

    /// Minimal isometric dilation; raises `ValueError` when none can be built.
    #[pyo3(signature = (seed = 0, tol = 1e-9, rho = 0.5, count = 32))]
    fn dilate(&self, py: Python<'_>, seed: u64, tol: f64, rho: f64, count: usize) -> PyResult<PyDilation> {
        let opts = DilateOptions { tol, grid: grid(rho, count)?, seed };
        let v = &self.inner;
        let result = py.detach(|| dilation::dilate(v, opts)).map_err(value_error)?;
        Ok(PyDilation { json: result.to_json(), dilated: result.dilated, dilation: result.dilation })
    }

    fn __repr__(&self) -> String {
        format!("Contraction(dim={}, rank={})", self.inner.dim_h(), self.inner.graph().rank())
    }
}

impl PyContraction {
    fn build(g: &Arc<KGraph>, spec: &ContractionSpec, shape_cap: Option<Vec<u32>>) -> PyResult<Self> {
        let mut v = LambdaContraction::from_spec(g.clone(), spec).map_err(value_error)?;
        if let Some(cap) = shape(g, shape_cap)?.or(g.acyclicity().max_shape) {
            v = v.with_shape_cap(cap);
        }
        Ok(PyContraction { inner: v })
    }
}

fn grid(rho: f64, count: usize) -> PyResult<PopescuGrid> {
    if !(rho > 0.0 && rho < 1.0) || count < 2 {
        return Err(PyValueError::new_err("need 0 < rho < 1 and count >= 2"));
    }
    Ok(PopescuGrid { rho, count })
}

/// A dilation `(X, embed)` of the family it was built from.
#[pyclass(name = "Dilation", module = "kgd", frozen)]
struct PyDilation {
    json: DilationJson,
    dilated: LambdaContraction,
    dilation: CoreDilation,
}

#[pymethods]
impl PyDilation {
    #[getter]
    fn dim_k(&self) -> usize {
        self.json.dim_k
    }

    #[getter]
    fn dim_h(&self) -> usize {
        self.json.dim_h
    }

    #[getter]
    fn embed(&self) -> Rows {
        rows(&self.dilation.embed)
    }

    /// The dilated family `X` on `K`.
    #[getter]
    fn x(&self) -> PyContraction {
        PyContraction { inner: self.dilation.x.clone() }
    }

    /// The nondegenerate family that was dilated.
    #[getter]
    fn dilated(&self) -> PyContraction {
        PyContraction { inner: self.dilated.clone() }
    }

    #[getter]
    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.json.diagnostics)
    }

    fn to_json(&self) -> String {
        io::to_json(&self.json)
    }

    /// Re-runs every dilation check against `family` (the dilated family
    /// when omitted).
    #[pyo3(signature = (family = None, tol = 1e-9))]
    fn verify<'py>(&self, py: Python<'py>, family: Option<&PyContraction>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let v = family.map_or(&self.dilated, |f| &f.inner);
        to_py(py, &dilation::verify_dilation(v, &self.dilation, tol).map_err(value_error)?)
    }

    #[pyo3(signature = (tol = 1e-8))]
    fn check_regular<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &dilation::check_regular(&self.dilated, &self.dilation, tol))
    }

    #[pyo3(signature = (tol = 1e-8))]
    fn check_star_regular<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &dilation::check_star_regular(&self.dilated, &self.dilation, tol))
    }

    /// Inner products `⟨X_λ X_μ* embed e_i, X_λ' X_μ'* embed e_j⟩`, a
    /// unitary invariant of the dilation.
    fn gram_table(&self) -> Rows {
        rows(&dilation::gram_table(&self.dilated, &self.dilation))
    }

    fn __repr__(&self) -> String {
        format!("Dilation(dim_h={}, dim_k={})", self.json.dim_h, self.json.dim_k)
    }
}

/// A named example family: one of `fix-a`, `fix-a-isometric`,
/// `fix-a-large`, `fix-b-tck`, `fix-b-toeplitz`, `fix-c`,
/// `cyclic-unitary`, `identity`, `no-edges`.
#[pyfunction]
fn fixture(name: &str) -> PyResult<(PyGraph, PyContraction)> {
    let (_, v) = fixtures::named()
        .into_iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| PyKeyError::new_err(format!("unknown fixture {name:?}")))?;
    Ok((PyGraph { inner: v.graph_arc() }, PyContraction { inner: v }))
}

/// Runs the randomized property suites and returns the report.
#[pyfunction]
#[pyo3(signature = (seed = 0, count = 60, tol = 1e-9))]
fn selftest<'py>(py: Python<'py>, seed: u64, count: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let opts = SelftestOptions { seed, count, tol, grid: PopescuGrid::default() };
    let report = py.detach(|| core_selftest::selftest(opts));
    to_py(py, &report)
}

#[pymodule]
fn kgd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyContraction>()?;
    m.add_class::<PyDilation>()?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add("FORMAT_VERSION", io::FORMAT_VERSION)?;
    Ok(())
}
