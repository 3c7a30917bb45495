//! Gates as time-independent Hamiltonian evolutions `U = e^{-iKt*}` (with hbar = 1).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{
    self, frobenius_distance, hermitian_eig, kron, matexp_hermitian, normal_eig, paulis, r,
    ComplexMatrix, C64, I, INPUT_TOL, ONE, ZERO,
};
use crate::states::{pure_entanglement, DensityMatrix, PureState, Stabilizer};

/// Default gate duration `t*` in arbitrary time units.
pub const DEFAULT_DURATION: f64 = 1.0;
/// Relative singular-value cutoff for the operator Schmidt rank.
pub const SCHMIDT_TOL: f64 = 1e-9;

/// A unitary gate together with the Hermitian generator and duration that produce it.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    name: String,
    n_qubits: usize,
    generator: ComplexMatrix,
    duration: f64,
    unitary: ComplexMatrix,
}

impl Gate {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// The Hermitian generator `K`.
    pub fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }

    /// Operating time `t*`; evolution starts at `t0 = 0`.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// `e^{-iKt*}`.
    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Evolution operator at an intermediate time `t` of the gate interval.
    pub fn propagator_at(&self, t: f64) -> ComplexMatrix {
        matexp_hermitian(&self.generator, t).expect("generator validated at construction")
    }

    /// Applies the gate to a pure state or density matrix.
    pub fn apply<S: GateInput>(&self, state: &S) -> Result<S> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: format!("{}-qubit state", self.n_qubits),
                got: format!("{}-qubit state", state.n_qubits()),
            });
        }
        Ok(state.evolve(&self.unitary))
    }
}

/// States a gate can act on: `U|psi>` for vectors, `U rho U^dagger` for density matrices.
pub trait GateInput: Sized {
    fn n_qubits(&self) -> usize;
    fn evolve(&self, u: &ComplexMatrix) -> Self;
}

impl GateInput for PureState {
    fn n_qubits(&self) -> usize {
        PureState::n_qubits(self)
    }
    fn evolve(&self, u: &ComplexMatrix) -> Self {
        self.evolved(u)
    }
}

impl GateInput for DensityMatrix {
    fn n_qubits(&self) -> usize {
        DensityMatrix::n_qubits(self)
    }
    fn evolve(&self, u: &ComplexMatrix) -> Self {
        self.evolved(u)
    }
}

fn qubits_of(m: &ComplexMatrix) -> Result<usize> {
    let d = m.require_square()?;
    match d {
        2 => Ok(1),
        4 => Ok(2),
        _ => Err(Error::DimensionMismatch {
            expected: "2x2 or 4x4 gate".into(),
            got: format!("{d}x{d}"),
        }),
    }
}

fn check_duration(t_star: f64) -> Result<()> {
    if t_star.is_finite() && t_star > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gate duration must be positive, got {t_star}")))
    }
}

/// Builds the gate `e^{-i k t_star}` on one or two qubits.
pub fn gate_from_generator(k: &ComplexMatrix, t_star: f64) -> Result<Gate> {
    let n_qubits = qubits_of(k)?;
    k.require_hermitian(INPUT_TOL)?;
    check_duration(t_star)?;
    let generator = k.hermitian_part();
    let unitary = matexp_hermitian(&generator, t_star)?;
    Ok(Gate { name: "U".into(), n_qubits, generator, duration: t_star, unitary })
}

/// Principal generator of a unitary.
///
/// Each eigenvalue `e^{i theta}` of `u` becomes the generator eigenvalue
/// `-theta / t_star` with `theta` taken in `[-pi, pi)`, so every phase
/// `kappa * t_star` lies in `(-pi, pi]`. An eigenvalue `-1` therefore maps to
/// `+pi / t_star`.
pub fn generator_from_unitary(u: &ComplexMatrix, t_star: f64) -> Result<ComplexMatrix> {
    qubits_of(u)?;
    u.require_unitary(INPUT_TOL)?;
    check_duration(t_star)?;
    let (values, vectors) = normal_eig(u)?
        .ok_or_else(|| Error::Numerical("Schur form of unitary is not diagonal".into()))?;
    let kappas: Vec<C64> = values
        .iter()
        .map(|lam| {
            let mut theta = lam.arg();
            if theta > PI - 1e-12 {
                theta = -PI;
            }
            r(-theta / t_star)
        })
        .collect();
    let k = vectors
        .matmul(&ComplexMatrix::from_diag(&kappas))
        .matmul(&vectors.dagger())
        .hermitian_part();
    Ok(k)
}

/// Gate realizing the unitary `u` over `t_star` with its principal generator.
pub fn gate_from_unitary(u: &ComplexMatrix, t_star: f64) -> Result<Gate> {
    let k = generator_from_unitary(u, t_star)?;
    gate_from_generator(&k, t_star)
}

/// Pauli X realized as the evolution under `K = X` for `t* = pi/2`;
/// equal to `X` up to the global phase `-i`.
pub fn x_evolution() -> Gate {
    gate_from_generator(&paulis::x(), PI / 2.0)
        .expect("X is Hermitian")
        .with_name("X")
}

pub fn x() -> Gate {
    gate_from_unitary(&paulis::x(), DEFAULT_DURATION).expect("X is unitary").with_name("X")
}

pub fn hadamard() -> Gate {
    gate_from_unitary(&paulis::hadamard(), DEFAULT_DURATION)
        .expect("H is unitary")
        .with_name("H")
}

/// Identity gate on `n_qubits` (1 or 2).
pub fn identity(n_qubits: usize) -> Result<Gate> {
    let d = 1 << n_qubits;
    gate_from_generator(&ComplexMatrix::zeros(d, d), DEFAULT_DURATION)
        .map(|g| g.with_name("I"))
}

/// `diag(1, 1, 1, e^{i phi})`, duration 1, generator `-phi' |11><11|` with `phi'` the
/// principal representative of `phi` in `[-pi, pi)`.
pub fn c_phase(phi: f64) -> Gate {
    c_phase_with_duration(phi, DEFAULT_DURATION).expect("positive default duration")
}

pub fn c_phase_with_duration(phi: f64, t_star: f64) -> Result<Gate> {
    check_duration(t_star)?;
    let k = generator_from_unitary(&c_phase_matrix(phi), t_star)?;
    Ok(gate_from_generator(&k, t_star)?.with_name(format!("CPHASE({phi})")))
}

pub fn c_phase_matrix(phi: f64) -> ComplexMatrix {
    ComplexMatrix::from_diag(&[ONE, ONE, ONE, (I * phi).exp()])
}

/// `1 (x) diag(1, e^{i phi})`: a phase on qubit 2 only.
pub fn local_phase(phi: f64) -> Gate {
    let u = kron(&paulis::id2(), &ComplexMatrix::from_diag(&[ONE, (I * phi).exp()]));
    gate_from_unitary(&u, DEFAULT_DURATION)
        .expect("local phase is unitary")
        .with_name(format!("1xPHASE({phi})"))
}

pub fn swap_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

pub fn swap() -> Gate {
    gate_from_unitary(&swap_matrix(), DEFAULT_DURATION).expect("SWAP is unitary").with_name("SWAP")
}

/// Reorders a two-qubit operator `A(a b, a' b')` into `R(a a', b b')`.
///
/// For `U = sum_k s_k A_k (x) B_k` this gives `R = sum_k s_k vec(A_k) vec(B_k)^T`, so the
/// singular values of `R` are the operator Schmidt coefficients.
pub fn reshuffle(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    u.require_shape(4, 4)?;
    let mut out = ComplexMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            for ap in 0..2 {
                for bp in 0..2 {
                    out[(2 * a + ap, 2 * b + bp)] = u[(2 * a + b, 2 * ap + bp)];
                }
            }
        }
    }
    Ok(out)
}

/// Operator Schmidt decomposition summary of a two-qubit gate.
#[derive(Clone, Debug, PartialEq)]
pub struct EntanglingVerdict {
    pub entangling: bool,
    pub operator_schmidt_rank: usize,
    /// Operator Schmidt coefficients, descending.
    pub schmidt_values: Vec<f64>,
}

/// A two-qubit gate entangles iff its operator Schmidt rank exceeds 1.
pub fn is_entangling(g: &Gate, tol: f64) -> Result<EntanglingVerdict> {
    if g.n_qubits() != 2 {
        return Err(Error::InvalidArgument(format!(
            "entangling test needs a two-qubit gate, got {} qubit(s)",
            g.n_qubits()
        )));
    }
    let dec = linalg::svd(&reshuffle(g.unitary())?);
    let rank = dec.rank(tol);
    Ok(EntanglingVerdict {
        entangling: rank > 1,
        operator_schmidt_rank: rank,
        schmidt_values: dec.singular_values,
    })
}

/// `true` iff `||a - c b||_F <= tol` for the unit phase `c` read off the largest entry of `b`.
pub fn equal_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let (idx, pivot) = b
        .entries()
        .iter()
        .enumerate()
        .fold((0, ZERO), |best, (i, &z)| if z.norm() > best.1.norm() { (i, z) } else { best });
    if pivot.norm() == 0.0 {
        return a.frobenius_norm() <= tol;
    }
    let ratio = a.entries()[idx] / pivot;
    if ratio.norm() == 0.0 {
        return false;
    }
    let phase = ratio / ratio.norm();
    frobenius_distance(a, &b.scale(phase)) <= tol
}

/// Searches the 36 stabilizer product inputs for one the gate maps to an entangled state.
///
/// Returns the input pair and the output's `|g00 g11 - g01 g10|`, preferring the
/// largest value.
pub fn find_entangling_input(g: &Gate, tol: f64) -> Result<Option<(Stabilizer, Stabilizer, f64)>> {
    if g.n_qubits() != 2 {
        return Err(Error::InvalidArgument("need a two-qubit gate".into()));
    }
    let mut best: Option<(Stabilizer, Stabilizer, f64)> = None;
    for a in Stabilizer::ALL {
        for b in Stabilizer::ALL {
            let input = PureState::product(&[a.state(), b.state()])?;
            let tau = pure_entanglement(&g.apply(&input)?)?;
            if tau > tol && best.is_none_or(|(_, _, t)| tau > t) {
                best = Some((a, b, tau));
            }
        }
    }
    Ok(best)
}

/// Spectrum of the generator, descending.
pub fn generator_spectrum(g: &Gate) -> Vec<f64> {
    hermitian_eig(g.generator()).expect("validated").values
}
