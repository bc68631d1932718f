//! Dense complex matrices: Hermitian spectra, PSD certification, square roots,
//! operator classification and span orthonormalization.
//!
//! Every operator in the crate (edge matrices, defect operators, Poisson
//! kernels, dilated families) is a [`CMatrix`]. Eigen-decompositions go through
//! nalgebra's Hermitian solver (Householder tridiagonalisation followed by
//! implicit QR), which is accurate to a small multiple of machine epsilon
//! relative to the matrix norm.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default tolerance for positivity and identity checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |m - m*| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:e} < -{tol:e}")]
    NotPsd { min_eig: f64, tol: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Diagonal matrix with real entries.
pub fn diag(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(entries.len(), entries.iter().map(|&x| re(x))))
}

/// Matrix unit `E_{ij}` of the given size.
pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(rows, cols);
    m[(i, j)] = re(1.0);
    m
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Frobenius norm of `a - b`; an upper bound for the operator-norm residual.
pub fn residual(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    (a - b).norm()
}

/// `(m + m*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn check_square(m: &CMatrix) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if !is_finite(m) {
        return Err(LinalgError::NonFinite);
    }
    Ok(())
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

/// Eigen-decomposes the Hermitian part of `m` (no Hermiticity check).
pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen { values: Vec::new(), vectors: zeros(0, 0) };
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
///
/// Fails when `m` is not square or deviates from Hermitian by more than
/// `herm_tol` in the max-entry norm. The empty matrix has no spectrum and
/// reports `+inf`, so it never violates a positivity check.
pub fn hermitian_min_eig(m: &CMatrix, herm_tol: f64) -> Result<f64, LinalgError> {
    check_square(m)?;
    let deviation = max_abs(&(m - m.adjoint()));
    if deviation > herm_tol {
        return Err(LinalgError::NotHermitian { deviation, tol: herm_tol });
    }
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(hermitian_eigen(m).values[0])
}

/// Minimum eigenvalue of the Hermitian part, `+inf` for the empty matrix.
pub fn psd_margin(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    hermitian_eigen(m).values[0]
}

/// Unique PSD square root after clamping eigenvalues in `[-tol, 0)` to zero.
pub fn psd_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix, LinalgError> {
    check_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let deviation = max_abs(&(m - m.adjoint()));
    let herm_tol = tol.max(1e-12 * (1.0 + max_abs(m)));
    if deviation > herm_tol {
        return Err(LinalgError::NotHermitian { deviation, tol: herm_tol });
    }
    if is_real_diagonal(m) {
        let mut out = zeros(n, n);
        for i in 0..n {
            let d = m[(i, i)].re;
            if d < -tol {
                return Err(LinalgError::NotPsd { min_eig: d, tol });
            }
            out[(i, i)] = re(d.max(0.0).sqrt());
        }
        return Ok(out);
    }
    let eig = hermitian_eigen(m);
    if eig.values[0] < -tol {
        return Err(LinalgError::NotPsd { min_eig: eig.values[0], tol });
    }
    let roots = CVector::from_iterator(n, eig.values.iter().map(|&x| re(x.max(0.0).sqrt())));
    Ok(&eig.vectors * CMatrix::from_diagonal(&roots) * eig.vectors.adjoint())
}

fn is_real_diagonal(m: &CMatrix) -> bool {
    m.iter().enumerate().all(|(k, z)| {
        let (i, j) = (k % m.nrows(), k / m.nrows());
        if i == j {
            z.im == 0.0
        } else {
            *z == C64::new(0.0, 0.0)
        }
    })
}

/// Operator (spectral) norm.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    hermitian_eigen(&gram).values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixClass {
    Projection,
    Isometry,
    PartialIsometry,
    Coisometry,
    Contraction,
}

/// Every operator class `m` belongs to within `tol`.
pub fn classify(m: &CMatrix, tol: f64) -> BTreeSet<MatrixClass> {
    let mut out = BTreeSet::new();
    let (rows, cols) = m.shape();
    let adj = m.adjoint();
    if rows == cols && residual(m, &adj) <= tol && residual(&(m * m), m) <= tol {
        out.insert(MatrixClass::Projection);
    }
    if residual(&(&adj * m), &identity(cols)) <= tol {
        out.insert(MatrixClass::Isometry);
    }
    if residual(&(m * &adj * m), m) <= tol {
        out.insert(MatrixClass::PartialIsometry);
    }
    if residual(&(m * &adj), &identity(rows)) <= tol {
        out.insert(MatrixClass::Coisometry);
    }
    if spectral_norm(m) <= 1.0 + tol {
        out.insert(MatrixClass::Contraction);
    }
    out
}

/// Orthonormal basis of a span together with its rank.
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    /// Basis vectors as columns.
    pub basis: CMatrix,
    pub rank: usize,
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass.
///
/// Vectors (columns of `vectors`) whose residual after projection has norm
/// `<= tol` are discarded.
pub fn orthonormalize(vectors: &CMatrix, tol: f64) -> Orthonormalized {
    let n = vectors.nrows();
    let mut basis: Vec<CVector> = Vec::new();
    for col in vectors.column_iter() {
        let mut v: CVector = col.into_owned();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&v);
                v.axpy(-proj, q, re(1.0));
            }
        }
        let norm = v.norm();
        if norm > tol {
            basis.push(v.unscale(norm));
        }
    }
    let rank = basis.len();
    let mut m = zeros(n, rank);
    for (j, q) in basis.iter().enumerate() {
        m.set_column(j, q);
    }
    Orthonormalized { basis: m, rank }
}

/// Orthonormal basis (as columns) of the kernel of `m`.
///
/// Computed from the eigenvectors of `m* m` whose eigenvalue (squared
/// singular value) is at most `sv_tol^2`.
pub fn null_space(m: &CMatrix, sv_tol: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return zeros(0, 0);
    }
    let eig = hermitian_eigen(&(m.adjoint() * m));
    let keep: Vec<usize> = (0..cols).filter(|&i| eig.values[i] <= sv_tol * sv_tol).collect();
    let mut out = zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &eig.vectors.column(i));
    }
    out
}

/// Orthonormal basis of the range of an orthogonal projection.
///
/// Diagonal 0/1 projections get standard basis vectors so coordinates stay
/// readable; anything else goes through the eigen-decomposition.
pub fn projection_frame(p: &CMatrix) -> CMatrix {
    let n = p.nrows();
    if is_real_diagonal(p) {
        let idx: Vec<usize> = (0..n).filter(|&i| p[(i, i)].re > 0.5).collect();
        let mut out = zeros(n, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            out[(i, j)] = re(1.0);
        }
        return out;
    }
    let eig = hermitian_eigen(p);
    let idx: Vec<usize> = (0..n).filter(|&i| eig.values[i] > 0.5).collect();
    let mut out = zeros(n, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        out.set_column(j, &eig.vectors.column(i));
    }
    out
}

/// Horizontal concatenation of column blocks with a common row count.
pub fn hstack(blocks: &[CMatrix], rows: usize) -> CMatrix {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, at), b.shape()).copy_from(b);
        at += b.ncols();
    }
    out
}

/// JSON encoding `[[ [re, im], ... ], ...]`, row-major. Bare numbers are
/// accepted on input as real entries.
pub mod matrix_json {
    use super::{CMatrix, C64};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Pair([f64; 2]),
        Real(f64),
    }

    pub fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
    }

    pub fn from_rows(rows: Vec<Vec<[f64; 2]>>, expected_cols: Option<usize>) -> Result<CMatrix, String> {
        let n = rows.len();
        let cols = rows.first().map(|r| r.len()).or(expected_cols).unwrap_or(0);
        if let Some(row) = rows.iter().position(|r| r.len() != cols) {
            return Err(format!("row {row} has {} entries, expected {cols}", rows[row].len()));
        }
        let mut m = CMatrix::zeros(n, cols);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, [a, b]) in row.into_iter().enumerate() {
                if !a.is_finite() || !b.is_finite() {
                    return Err(format!("entry ({i},{j}) is not finite"));
                }
                m[(i, j)] = C64::new(a, b);
            }
        }
        Ok(m)
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let raw: Vec<Vec<Entry>> = Vec::deserialize(d)?;
        let rows = raw
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|e| match e {
                        Entry::Pair(p) => p,
                        Entry::Real(x) => [x, 0.0],
                    })
                    .collect()
            })
            .collect();
        from_rows(rows, None).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn min_eig_identity_and_zero() {
        assert!(close(hermitian_min_eig(&identity(3), 1e-12).unwrap(), 1.0, 1e-12));
        assert!(close(hermitian_min_eig(&zeros(2, 2), 1e-12).unwrap(), 0.0, 1e-12));
    }

    #[test]
    fn min_eig_defect_of_fix_a() {
        let s: f64 = 0.8;
        let m = diag(&[1.0 - s * s / 4.0, 1.0]);
        assert!(close(hermitian_min_eig(&m, 1e-12).unwrap(), 0.84, 1e-12));
    }

    #[test]
    fn min_eig_errors() {
        assert_eq!(hermitian_min_eig(&zeros(2, 3), 1e-9), Err(LinalgError::NotSquare { rows: 2, cols: 3 }));
        let mut m = identity(2);
        m[(0, 1)] = re(1.0);
        assert!(matches!(hermitian_min_eig(&m, 1e-9), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_examples() {
        assert!(residual(&psd_sqrt(&identity(3), 1e-9).unwrap(), &identity(3)) < 1e-14);
        assert!(residual(&psd_sqrt(&diag(&[4.0, 0.0]), 1e-9).unwrap(), &diag(&[2.0, 0.0])) < 1e-14);
        let delta1 = diag(&[0.75, 1.0]);
        let expected = diag(&[3f64.sqrt() / 2.0, 1.0]);
        assert!(residual(&psd_sqrt(&delta1, 1e-9).unwrap(), &expected) < 1e-14);
        assert!(matches!(psd_sqrt(&diag(&[1.0, -0.1]), 1e-9), Err(LinalgError::NotPsd { .. })));
        // tiny negative eigenvalues inside the tolerance are clamped
        assert!(psd_sqrt(&diag(&[1.0, -1e-12]), 1e-9).is_ok());
    }

    #[test]
    fn sqrt_of_non_diagonal() {
        let m = CMatrix::from_row_slice(2, 2, &[re(2.0), c(0.0, 1.0), c(0.0, -1.0), re(2.0)]);
        let r = psd_sqrt(&m, 1e-9).unwrap();
        assert!(residual(&(&r * &r), &m) < 1e-12);
    }

    #[test]
    fn classify_examples() {
        use MatrixClass::*;
        let all: BTreeSet<_> = [Projection, Isometry, PartialIsometry, Coisometry, Contraction].into();
        assert_eq!(classify(&identity(2), 1e-12), all);

        let mut vf = zeros(2, 2);
        vf[(0, 1)] = re(0.5);
        assert_eq!(classify(&vf, 1e-12), [Contraction].into());
        vf[(0, 1)] = re(1.0);
        assert_eq!(classify(&vf, 1e-12), [PartialIsometry, Contraction].into());
    }

    #[test]
    fn orthonormalize_examples() {
        let e1 = CVector::from_vec(vec![re(1.0), re(0.0), re(0.0)]);
        let e2 = CVector::from_vec(vec![re(0.0), re(1.0), re(0.0)]);
        let m = CMatrix::from_columns(&[e1.clone(), e1.clone()]);
        assert_eq!(orthonormalize(&m, 1e-10).rank, 1);
        let m = CMatrix::from_columns(&[e1.clone(), e2.clone()]);
        assert_eq!(orthonormalize(&m, 1e-10).rank, 2);
        let m = CMatrix::from_columns(&[&e1 + &e2, &e1 - &e2, e1.clone()]);
        let o = orthonormalize(&m, 1e-10);
        assert_eq!(o.rank, 2);
        assert!(residual(&(o.basis.adjoint() * &o.basis), &identity(2)) < 1e-12);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = CMatrix::from_row_slice(1, 2, &[re(1.0), re(1.0)]);
        let k = null_space(&m, 1e-8);
        assert_eq!(k.ncols(), 1);
        assert!((&m * &k).norm() < 1e-12);
    }

    #[test]
    fn frame_of_projection() {
        let f = projection_frame(&diag(&[0.0, 1.0]));
        assert_eq!(f, unit(2, 1, 1, 0));
        let half = CMatrix::from_element(2, 2, re(0.5));
        let f = projection_frame(&half);
        assert_eq!(f.ncols(), 1);
        assert!(residual(&(&f * f.adjoint()), &half) < 1e-12);
    }

    #[test]
    fn json_roundtrip_and_real_entries() {
        let m = CMatrix::from_row_slice(1, 2, &[c(1.0, -2.0), re(0.25)]);
        let s = serde_json::to_string(&matrix_json::to_rows(&m)).unwrap();
        assert_eq!(s, "[[[1.0,-2.0],[0.25,0.0]]]");
        #[derive(serde::Deserialize)]
        struct W(#[serde(with = "matrix_json")] CMatrix);
        let W(back) = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let W(real) = serde_json::from_str("[[1, 0.5]]").unwrap();
        assert_eq!(real, CMatrix::from_row_slice(1, 2, &[re(1.0), re(0.5)]));
        assert!(serde_json::from_str::<W>("[[1],[1,2]]").is_err());
    }
}
