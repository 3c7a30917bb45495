//! Dense complex linear algebra for small quantum registers (dimension at most 256).
//!
//! Everything here is a pure function on immutable values. Storage is row-major.
//! Eigen- and singular-value decompositions are delegated to `nalgebra`; the
//! results are re-sorted and phase-fixed so that repeated runs produce identical
//! output.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on Hermiticity and unitarity of inputs.
pub const INPUT_TOL: f64 = 1e-10;
/// Tolerance on reconstruction identities.
pub const RECON_TOL: f64 = 1e-9;
/// Largest supported matrix dimension (8 qubits).
pub const MAX_DIM: usize = 256;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense complex matrix with row-major storage.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch { rows, cols, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(pos / cols, pos % cols));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Square matrix from nested rows. Panics on ragged input; use [`ComplexMatrix::new`]
    /// for untrusted data.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let m = rows[0].as_ref().len();
        let data: Vec<C64> = rows
            .iter()
            .flat_map(|row| {
                assert_eq!(row.as_ref().len(), m, "ragged rows");
                row.as_ref().iter().copied()
            })
            .collect();
        Self { rows: n, cols: m, data }
    }

    /// Real-valued square matrix from nested rows.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cr: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.as_ref().iter().map(|&x| r(x)).collect())
            .collect();
        Self::from_rows(&cr)
    }

    /// Column vector.
    pub fn column(entries: &[C64]) -> Self {
        Self { rows: entries.len(), cols: 1, data: entries.to_vec() }
    }

    /// Outer product |a><b|.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                m[(i, j)] = x * y.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.data
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        self.diag().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Matrix product; panics on inner-dimension mismatch (programming error).
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate(&self, rho: &Self) -> Self {
        self.matmul(rho).matmul(&self.dagger())
    }

    /// Max-abs deviation of `self - self^dagger`.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Max-abs deviation of `self * self^dagger - 1`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.matmul(&self.dagger()) - &Self::identity(self.rows)).max_abs()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", self.rows, self.cols),
            })
        }
    }

    pub fn require_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.shape() == (rows, cols) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: format!("{rows}x{cols}"),
                got: format!("{}x{}", self.rows, self.cols),
            })
        }
    }

    pub fn require_hermitian(&self, tol: f64) -> Result<()> {
        self.require_square()?;
        let dev = self.hermiticity_deviation();
        if dev <= tol {
            Ok(())
        } else {
            Err(Error::NotHermitian(dev))
        }
    }

    pub fn require_unitary(&self, tol: f64) -> Result<()> {
        self.require_square()?;
        let dev = self.unitarity_deviation();
        if dev <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary(dev))
        }
    }

    /// Hermitian part `(m + m^dagger) / 2`, used to strip rounding asymmetry.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.dagger()).scale(r(0.5))
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let (rows, cols) = m.shape();
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    pub fn column_vec(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>9.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm()
}

/// Kronecker product `a (x) b`; block (i, j) equals `a[i, j] * b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a sequence of factors, left factor most significant.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Partial trace over one factor of a bipartite `(d1*d2) x (d1*d2)` matrix.
///
/// `keep = 1` keeps the left factor (dimension `d1`), `keep = 2` the right one.
pub fn partial_trace_dims(
    rho: &ComplexMatrix,
    d1: usize,
    d2: usize,
    keep: usize,
) -> Result<ComplexMatrix> {
    rho.require_shape(d1 * d2, d1 * d2)?;
    match keep {
        1 => {
            let mut out = ComplexMatrix::zeros(d1, d1);
            for i in 0..d1 {
                for j in 0..d1 {
                    out[(i, j)] = (0..d2).map(|k| rho[(i * d2 + k, j * d2 + k)]).sum();
                }
            }
            Ok(out)
        }
        2 => {
            let mut out = ComplexMatrix::zeros(d2, d2);
            for i in 0..d2 {
                for j in 0..d2 {
                    out[(i, j)] = (0..d1).map(|k| rho[(k * d2 + i, k * d2 + j)]).sum();
                }
            }
            Ok(out)
        }
        other => Err(Error::InvalidArgument(format!(
            "subsystem index must be 1 or 2, got {other}"
        ))),
    }
}

/// Reduced 2x2 state of qubit `keep` (1 = left factor) from a 4x4 two-qubit matrix.
pub fn partial_trace(rho: &ComplexMatrix, keep: usize) -> Result<ComplexMatrix> {
    rho.require_shape(4, 4)?;
    rho.require_hermitian(INPUT_TOL)?;
    partial_trace_dims(rho, 2, 2, keep)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(diag(lambda)) V^dagger` for a scalar function of the eigenvalues.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fl: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)].conj()).sum();
            }
        }
        out
    }

    /// `e^{-i K t}` from the stored spectrum.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.apply_fn(|l| (-I * l * t).exp())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(r)
    }
}

/// Multiplies every column by a unit phase so its first non-negligible entry is real positive.
fn fix_column_phases(m: &mut ComplexMatrix) {
    let (rows, cols) = m.shape();
    for j in 0..cols {
        let scale = (0..rows).map(|i| m[(i, j)].norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        let Some(pivot) = (0..rows).map(|i| m[(i, j)]).find(|z| z.norm() > 1e-12 * scale.max(1.0))
        else {
            continue;
        };
        let phase = pivot.conj() / pivot.norm();
        for i in 0..rows {
            m[(i, j)] *= phase;
        }
    }
}

/// Eigendecomposition of a Hermitian matrix with descending eigenvalues and
/// deterministic eigenvector phases.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    m.require_hermitian(INPUT_TOL)?;
    let n = m.rows();
    if n > MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    let eig = m.hermitian_part().to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep the solver's order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = eig.eigenvectors[(i, src)];
        }
    }
    fix_column_phases(&mut vectors);
    Ok(HermitianEigen { values, vectors })
}

/// `e^{-i k t}` for Hermitian `k`, by spectral decomposition.
pub fn matexp_hermitian(k: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(k)?.propagator(t))
}

/// Singular value decomposition `m = U diag(sigma) V^dagger`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns (`rows x k`).
    pub u: ComplexMatrix,
    /// Right singular vectors as columns (`cols x k`).
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singular_values.len();
        let sigma =
            ComplexMatrix::from_diag(&self.singular_values.iter().map(|&s| r(s)).collect::<Vec<_>>());
        debug_assert_eq!(sigma.rows(), k);
        self.u.matmul(&sigma).matmul(&self.v.dagger())
    }

    /// Count of singular values above `rel_cutoff * sigma_max`.
    pub fn rank(&self, rel_cutoff: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > rel_cutoff * smax).count()
    }
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let dec = m.to_nalgebra().svd(true, true);
    let u_na = dec.u.expect("requested U");
    let vt_na = dec.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let u_full = ComplexMatrix::from_nalgebra(&u_na);
    let v_full = ComplexMatrix::from_nalgebra(&vt_na.adjoint());
    let mut u = ComplexMatrix::zeros(rows, k);
    let mut v = ComplexMatrix::zeros(cols, k);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..rows {
            u[(i, dst)] = u_full[(i, src)];
        }
        for i in 0..cols {
            v[(i, dst)] = v_full[(i, src)];
        }
    }
    let singular_values = order.iter().map(|&s| dec.singular_values[s].max(0.0)).collect();
    Svd { singular_values, u, v }
}

/// Eigenvalues and eigenvectors of a unitary (or any normal) matrix, from its
/// complex Schur form. Returns `None` if the Schur factor is not diagonal
/// within `1e-8`, i.e. the input is not normal.
pub fn normal_eig(m: &ComplexMatrix) -> Result<Option<(Vec<C64>, ComplexMatrix)>> {
    let n = m.require_square()?;
    let schur = m.to_nalgebra().schur();
    let (q, t) = schur.unpack();
    let mut off = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(t[(i, j)].norm());
            }
        }
    }
    if off > 1e-8 {
        return Ok(None);
    }
    let values = (0..n).map(|i| t[(i, i)]).collect();
    Ok(Some((values, ComplexMatrix::from_nalgebra(&q))))
}

/// Moore-Penrose inverse together with the numerical rank it was built from.
#[derive(Clone, Debug)]
pub struct PseudoInverse {
    pub matrix: ComplexMatrix,
    pub rank: usize,
    /// Dimension of the smaller side; `rank < full_rank` means rank deficiency.
    pub full_rank: usize,
}

impl PseudoInverse {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.full_rank
    }
}

/// Moore-Penrose inverse; singular values at or below `cutoff * sigma_max` are dropped.
pub fn pseudo_inverse(m: &ComplexMatrix, cutoff: f64) -> PseudoInverse {
    let dec = svd(m);
    let rank = dec.rank(cutoff);
    let (rows, cols) = m.shape();
    let mut out = ComplexMatrix::zeros(cols, rows);
    for (k, &s) in dec.singular_values.iter().enumerate().take(rank) {
        let inv = 1.0 / s;
        for i in 0..cols {
            for j in 0..rows {
                out[(i, j)] += dec.v[(i, k)] * inv * dec.u[(j, k)].conj();
            }
        }
    }
    PseudoInverse { matrix: out, rank, full_rank: rows.min(cols) }
}

/// Trace distance `(1/2) tr|a - b|` between two Hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let diff = (a - b).hermitian_part();
    let eig = hermitian_eig(&diff)?;
    Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Pauli matrices and other fixed single-qubit operators.
pub mod paulis {
    use super::*;

    pub fn id2() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[[ZERO, -I], [I, ZERO]])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]])
    }

    pub fn hadamard() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[[s, s], [s, -s]])
    }
}
