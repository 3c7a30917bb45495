//! Pure and mixed qubit-register states, and two-qubit entanglement diagnostics.
//!
//! Qubit 1 is the leftmost (most significant) tensor factor everywhere, so the
//! amplitude of `|q1 q2 ... qn>` lives at index `q1 * 2^(n-1) + ... + qn`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, c, hermitian_eig, kron, r, ComplexMatrix, C64, I, ONE, ZERO};

/// Norm, trace and Hermiticity tolerance for states.
pub const STATE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density matrix may have.
pub const POSITIVITY_TOL: f64 = 1e-9;
pub const MAX_QUBITS: usize = 8;

fn check_qubits(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
        )))
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() && dim >= 2 {
        let n = dim.trailing_zeros() as usize;
        check_qubits(n)?;
        Ok(n)
    } else {
        Err(Error::DimensionMismatch {
            expected: "power-of-two dimension >= 2".into(),
            got: dim.to_string(),
        })
    }
}

/// Normalized state vector of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Takes amplitudes that are already normalized (within 1e-10).
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(0, 0));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n.is_finite() && n > 1e-300) {
            return Err(Error::NotNormalized(n));
        }
        Self::from_amplitudes(amplitudes.into_iter().map(|z| z / n).collect())
    }

    /// Computational basis state `|index>` on `n_qubits` qubits.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n_qubits, amplitudes: amps })
    }

    /// Tensor product of the factors, left factor is qubit 1.
    pub fn product(factors: &[PureState]) -> Result<Self> {
        let mut amps = vec![ONE];
        for f in factors {
            amps = amps
                .iter()
                .flat_map(|a| f.amplitudes.iter().map(move |b| a * b))
                .collect();
        }
        Self::normalized(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `|psi><psi|`.
    pub fn densify(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }

    /// `U |psi>`; the caller guarantees `u` is unitary of matching size.
    pub(crate) fn evolved(&self, u: &ComplexMatrix) -> Self {
        let v = u.matmul(&ComplexMatrix::column(&self.amplitudes));
        Self { n_qubits: self.n_qubits, amplitudes: v.into_entries() }
    }

    /// Reduced density matrix of the listed qubits (1-based labels, kept in ascending order).
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (keep, rest) = split_qubits(self.n_qubits, keep)?;
        let n = self.n_qubits;
        let mut coeff = ComplexMatrix::zeros(1 << keep.len(), 1 << rest.len());
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            coeff[(gather_bits(idx, n, &keep), gather_bits(idx, n, &rest))] = amp;
        }
        Ok(DensityMatrix { n_qubits: keep.len(), matrix: coeff.matmul(&coeff.dagger()) })
    }

    /// Smaller Schmidt weight across the cut {qubit} | {all other qubits}.
    ///
    /// Zero iff the qubit factors out of the register; 1/2 for a maximally entangled qubit.
    pub fn qubit_vs_rest_weight(&self, qubit: usize) -> Result<f64> {
        if self.n_qubits == 1 {
            return Ok(0.0);
        }
        let rho = self.reduced(&[qubit])?;
        let eig = hermitian_eig(rho.matrix())?;
        Ok(eig.values[1].max(0.0))
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.n_qubits;
        let mut first = true;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() < 1e-12 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.4}{:+.4}i)|{:0width$b}>", a.re, a.im, i)?;
        }
        Ok(())
    }
}

fn norm(amps: &[C64]) -> f64 {
    amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Validates 1-based qubit labels and returns (kept, traced) 0-based bit positions
/// counted from the most significant qubit.
fn split_qubits(n: usize, keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut k: Vec<usize> = Vec::with_capacity(keep.len());
    for &q in keep {
        if q == 0 || q > n {
            return Err(Error::InvalidArgument(format!("qubit {q} out of range 1..={n}")));
        }
        if k.contains(&(q - 1)) {
            return Err(Error::InvalidArgument(format!("qubit {q} listed twice")));
        }
        k.push(q - 1);
    }
    if k.is_empty() {
        return Err(Error::InvalidArgument("no qubits to keep".into()));
    }
    k.sort_unstable();
    let rest = (0..n).filter(|q| !k.contains(q)).collect();
    Ok((k, rest))
}

fn gather_bits(idx: usize, n: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .fold(0, |acc, &p| (acc << 1) | ((idx >> (n - 1 - p)) & 1))
}

/// The six single-qubit stabilizer states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stabilizer {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl Stabilizer {
    pub const ALL: [Stabilizer; 6] = [
        Stabilizer::Zero,
        Stabilizer::One,
        Stabilizer::Plus,
        Stabilizer::Minus,
        Stabilizer::PlusI,
        Stabilizer::MinusI,
    ];

    pub fn amplitudes(self) -> [C64; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            Stabilizer::Zero => [ONE, ZERO],
            Stabilizer::One => [ZERO, ONE],
            Stabilizer::Plus => [r(s), r(s)],
            Stabilizer::Minus => [r(s), r(-s)],
            Stabilizer::PlusI => [r(s), c(0.0, s)],
            Stabilizer::MinusI => [r(s), c(0.0, -s)],
        }
    }

    pub fn state(self) -> PureState {
        PureState { n_qubits: 1, amplitudes: self.amplitudes().to_vec() }
    }

    pub fn density(self) -> DensityMatrix {
        self.state().densify()
    }

    pub fn label(self) -> &'static str {
        match self {
            Stabilizer::Zero => "0",
            Stabilizer::One => "1",
            Stabilizer::Plus => "+",
            Stabilizer::Minus => "-",
            Stabilizer::PlusI => "+i",
            Stabilizer::MinusI => "-i",
        }
    }
}

impl FromStr for Stabilizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stabilizer::ALL
            .into_iter()
            .find(|st| st.label() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown named state {s:?}; expected one of 0, 1, +, -, +i, -i"
                ))
            })
    }
}

impl fmt::Display for Stabilizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}>", self.label())
    }
}

/// Density matrix of an `n`-qubit register: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.require_square()?;
        let n_qubits = qubits_for_dim(dim)?;
        let dev = matrix.hermiticity_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {:.12} + {:.3e}i is not 1",
                tr.re, tr.im
            )));
        }
        let min = *hermitian_eig(&matrix)?.values.last().expect("non-empty");
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Maximally mixed state on `n_qubits`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(Self { n_qubits, matrix: ComplexMatrix::identity(d).scale(r(1.0 / d as f64)) })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.matrix.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.purity() >= 1.0 - tol
    }

    /// `rho_1 (x) rho_2`, left factor first.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    /// `U rho U^dagger`; the caller guarantees `u` is unitary of matching size.
    pub(crate) fn evolved(&self, u: &ComplexMatrix) -> Self {
        Self { n_qubits: self.n_qubits, matrix: u.conjugate(&self.matrix).hermitian_part() }
    }

    /// Reduced density matrix of the listed qubits (1-based labels, kept in ascending order).
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self.n_qubits;
        let (keep, rest) = split_qubits(n, keep)?;
        let dk = 1 << keep.len();
        let mut out = ComplexMatrix::zeros(dk, dk);
        let dim = self.dim();
        for i in 0..dim {
            let ri = gather_bits(i, n, &rest);
            let ki = gather_bits(i, n, &keep);
            for j in 0..dim {
                if gather_bits(j, n, &rest) == ri {
                    out[(ki, gather_bits(j, n, &keep))] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityMatrix { n_qubits: keep.len(), matrix: out })
    }

    /// Reduced state of qubit `keep` (1 or 2) of a two-qubit state.
    pub fn partial_trace(&self, keep: usize) -> Result<DensityMatrix> {
        let m = linalg::partial_trace(&self.matrix, keep)?;
        Ok(DensityMatrix { n_qubits: 1, matrix: m })
    }

    /// Product of the two single-qubit marginals of a two-qubit state.
    pub fn product_of_marginals(&self) -> Result<DensityMatrix> {
        Ok(self.partial_trace(1)?.tensor(&self.partial_trace(2)?))
    }

    /// Frobenius distance to the product of its marginals; zero iff the state factorizes.
    pub fn correlation_norm(&self) -> Result<f64> {
        Ok(linalg::frobenius_distance(&self.matrix, self.product_of_marginals()?.matrix()))
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        linalg::trace_distance(&self.matrix, &other.matrix)
    }
}

fn require_two_qubits(n: usize) -> Result<()> {
    if n == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("expected a two-qubit state, got {n} qubits")))
    }
}

/// `|g00 g11 - g01 g10|` for a normalized two-qubit pure state.
///
/// Zero exactly when the amplitudes factor as `(a0|0> + a1|1>)(b0|0> + b1|1>)`. The
/// product form avoids dividing by vanishing amplitudes. Concurrence is twice this.
pub fn pure_entanglement(psi: &PureState) -> Result<f64> {
    require_two_qubits(psi.n_qubits())?;
    let g = psi.amplitudes();
    Ok((g[0] * g[3] - g[1] * g[2]).norm())
}

/// Schmidt coefficients `(s1, s2)`, descending, from the SVD of the 2x2 amplitude matrix.
pub fn schmidt_coefficients(psi: &PureState) -> Result<[f64; 2]> {
    require_two_qubits(psi.n_qubits())?;
    let g = psi.amplitudes();
    let sv = linalg::svd(&ComplexMatrix::from_rows(&[[g[0], g[1]], [g[2], g[3]]])).singular_values;
    Ok([sv[0], sv[1]])
}

pub fn is_separable_pure(psi: &PureState, tol: f64) -> Result<bool> {
    Ok(pure_entanglement(psi)? <= tol)
}

/// Partial transpose of a two-qubit matrix over qubit 2.
pub fn partial_transpose(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.require_shape(4, 4)?;
    let mut out = ComplexMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            for ap in 0..2 {
                for bp in 0..2 {
                    out[(2 * a + bp, 2 * ap + b)] = m[(2 * a + b, 2 * ap + bp)];
                }
            }
        }
    }
    Ok(out)
}

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose.
///
/// Positive exactly when a two-qubit state is entangled.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho.n_qubits())?;
    let pt = partial_transpose(rho.matrix())?;
    let eig = hermitian_eig(&pt.hermitian_part())?;
    Ok(eig.values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum())
}

/// `(|0> + e^{i phi}|1>)/sqrt 2`.
pub fn phase_qubit(phi: f64) -> PureState {
    let s = FRAC_1_SQRT_2;
    PureState { n_qubits: 1, amplitudes: vec![r(s), (I * phi).exp() * s] }
}
