//! Reduced dynamical maps of one qubit inside a two-qubit gate.
//!
//! A map is held as a 4x4 superoperator acting on column-stacked 2x2 matrices,
//! `vec(rho)[i + 2j] = rho[i][j]`, so `rho -> A rho B^dagger` has superoperator
//! `conj(B) (x) A`. The Choi matrix is `sum_ij E(|i><j|) (x) |i><j|`, which has trace 2
//! for a trace-preserving map and is positive semidefinite iff the map is completely
//! positive.
//!
//! When the joint state at the start of an interval is a product `rho_1 (x) env` with
//! `env` fixed, `rho_1 -> tr_env[U (rho_1 (x) env) U^dagger]` is a well-defined CPTP map
//! for every input ([`induced_map`]). Inside an entangling gate the joint state at an
//! intermediate time is correlated, and two tests probe what goes wrong there:
//! [`intermediate_map`] checks whether the whole-interval map factors through the
//! intermediate time as a CP map, and [`udm_witness_subinterval`] shows that two joint
//! states with the same qubit-1 marginal lead to different qubit-1 outputs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, frobenius_distance, hermitian_eig, kron, partial_trace_dims, pseudo_inverse, r,
    ComplexMatrix, C64, INPUT_TOL, ONE, ZERO,
};
use crate::states::{DensityMatrix, Stabilizer};

/// Tolerance on Choi eigenvalues for complete positivity.
pub const CP_TOL: f64 = 1e-7;
/// Tolerance on the identity-preservation of the dual map.
pub const TP_TOL: f64 = 1e-9;
/// Choi eigenvalues above this become Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-10;
/// Relative singular-value cutoff when inverting the short-interval map.
pub const PINV_CUTOFF: f64 = 1e-10;
/// Largest joint-state distance from the product of its marginals accepted as "product".
pub const PRODUCT_TOL: f64 = 1e-9;

/// Column-stacking vectorization of a 2x2 matrix.
pub fn vectorize(m: &ComplexMatrix) -> Vec<C64> {
    let (rows, cols) = m.shape();
    (0..cols).flat_map(|j| (0..rows).map(move |i| m[(i, j)])).collect()
}

/// Inverse of [`vectorize`] for a `dim x dim` matrix.
pub fn unvectorize(v: &[C64], dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            m[(i, j)] = v[i + dim * j];
        }
    }
    m
}

/// Superoperator of `rho -> a rho b^dagger`.
pub fn sandwich_superoperator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    kron(&b.conj(), a)
}

/// A linear map on single-qubit operators.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicalMap {
    superoperator: ComplexMatrix,
    environment: Option<DensityMatrix>,
    interval: (f64, f64),
    which_qubit: usize,
}

impl DynamicalMap {
    /// Wraps an arbitrary 4x4 superoperator.
    pub fn from_superoperator(
        superoperator: ComplexMatrix,
        interval: (f64, f64),
        which_qubit: usize,
    ) -> Result<Self> {
        superoperator.require_shape(4, 4)?;
        check_which(which_qubit)?;
        Ok(Self { superoperator, environment: None, interval, which_qubit })
    }

    pub fn identity() -> Self {
        Self {
            superoperator: ComplexMatrix::identity(4),
            environment: None,
            interval: (0.0, 0.0),
            which_qubit: 1,
        }
    }

    /// `rho -> u rho u^dagger`.
    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        u.require_shape(2, 2)?;
        u.require_unitary(INPUT_TOL)?;
        Self::from_superoperator(sandwich_superoperator(u, u), (0.0, 0.0), 1)
    }

    pub fn superoperator(&self) -> &ComplexMatrix {
        &self.superoperator
    }

    /// The fixed state of the other qubit the map was induced from, if any.
    pub fn environment(&self) -> Option<&DensityMatrix> {
        self.environment.as_ref()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn which_qubit(&self) -> usize {
        self.which_qubit
    }

    /// Image of an arbitrary 2x2 operator.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        x.require_shape(2, 2)?;
        let v = self.superoperator.matmul(&ComplexMatrix::column(&vectorize(x)));
        Ok(unvectorize(v.entries(), 2))
    }

    /// `self` after `first`: the superoperator product `self * first`.
    pub fn compose_after(&self, first: &DynamicalMap) -> DynamicalMap {
        DynamicalMap {
            superoperator: self.superoperator.matmul(&first.superoperator),
            environment: None,
            interval: (first.interval.0, self.interval.1),
            which_qubit: self.which_qubit,
        }
    }

    pub fn distance(&self, other: &DynamicalMap) -> f64 {
        frobenius_distance(&self.superoperator, &other.superoperator)
    }
}

fn check_which(which: usize) -> Result<()> {
    if which == 1 || which == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("qubit index must be 1 or 2, got {which}")))
    }
}

/// Applies a map to a state; a non-CP map may produce an invalid output, which is an error.
pub fn apply_map(m: &DynamicalMap, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: "single-qubit state".into(),
            got: format!("{}-qubit state", rho.n_qubits()),
        });
    }
    DensityMatrix::new(m.apply_operator(rho.matrix())?)
}

/// Joint two-qubit state with `rho` on qubit `which` and `env` on the other one.
fn embed(rho: &ComplexMatrix, env: &ComplexMatrix, which: usize) -> ComplexMatrix {
    if which == 1 {
        kron(rho, env)
    } else {
        kron(env, rho)
    }
}

/// The four tomography probes `|0><0|, |1><1|, |+><+|, |+i><+i|`.
pub fn tomography_probes() -> [DensityMatrix; 4] {
    [
        Stabilizer::Zero.density(),
        Stabilizer::One.density(),
        Stabilizer::Plus.density(),
        Stabilizer::PlusI.density(),
    ]
}

/// Reconstructs a superoperator from its action on the tomography probes.
pub fn superoperator_from_probes(
    action: impl Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let probes = tomography_probes();
    let mut inputs = ComplexMatrix::zeros(4, 4);
    let mut outputs = ComplexMatrix::zeros(4, 4);
    for (col, p) in probes.iter().enumerate() {
        let out = action(p.matrix())?;
        for (row, (a, b)) in vectorize(p.matrix()).into_iter().zip(vectorize(&out)).enumerate() {
            inputs[(row, col)] = a;
            outputs[(row, col)] = b;
        }
    }
    let inv = pseudo_inverse(&inputs, 1e-12);
    debug_assert!(inv.is_full_rank());
    Ok(outputs.matmul(&inv.matrix))
}

/// Map on qubit `which` induced by `U(t) = e^{-ikt}` with the other qubit fixed to `env`.
pub fn induced_map(
    k: &ComplexMatrix,
    env: &DensityMatrix,
    t: f64,
    which: usize,
) -> Result<DynamicalMap> {
    k.require_shape(4, 4)?;
    check_which(which)?;
    if env.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: "single-qubit environment".into(),
            got: format!("{}-qubit state", env.n_qubits()),
        });
    }
    let u = linalg::matexp_hermitian(k, t)?;
    let superoperator = superoperator_from_probes(|p| {
        let joint = u.conjugate(&embed(p, env.matrix(), which));
        partial_trace_dims(&joint, 2, 2, which)
    })?;
    Ok(DynamicalMap { superoperator, environment: Some(env.clone()), interval: (0.0, t), which_qubit: which })
}

/// Choi matrix and its spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    pub matrix: ComplexMatrix,
    /// Eigenvalues of the Hermitian part, descending.
    pub eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("4 eigenvalues")
    }
}

pub fn choi(m: &DynamicalMap) -> Result<ChoiMatrix> {
    let s = &m.superoperator;
    let mut c = ComplexMatrix::zeros(4, 4);
    for a in 0..2 {
        for i in 0..2 {
            for b in 0..2 {
                for j in 0..2 {
                    c[(2 * a + i, 2 * b + j)] = s[(a + 2 * b, i + 2 * j)];
                }
            }
        }
    }
    let eig = hermitian_eig(&c.hermitian_part())?;
    Ok(ChoiMatrix { matrix: c, eigenvalues: eig.values, eigenvectors: eig.vectors })
}

/// Complete positivity and trace preservation of a map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CptpVerdict {
    pub cp: bool,
    pub tp: bool,
    pub min_choi_eigenvalue: f64,
    /// `max |tr E(|i><j|) - delta_ij|`.
    pub tp_deviation: f64,
}

/// CP iff the smallest Choi eigenvalue is at least `-tol`; TP iff the dual map
/// preserves the identity within `tol`.
pub fn is_cptp(m: &DynamicalMap, tol: f64) -> Result<CptpVerdict> {
    let c = choi(m)?;
    let s = &m.superoperator;
    let mut tp_dev = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            let tr = s[(0, i + 2 * j)] + s[(3, i + 2 * j)];
            let target = if i == j { ONE } else { ZERO };
            tp_dev = tp_dev.max((tr - target).norm());
        }
    }
    let min = c.min_eigenvalue();
    Ok(CptpVerdict { cp: min >= -tol, tp: tp_dev <= tol, min_choi_eigenvalue: min, tp_deviation: tp_dev })
}

/// Kraus operators `K_a` with `E(rho) = sum_a K_a rho K_a^dagger`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<ComplexMatrix>,
    /// Choi eigenvalues the operators were scaled from, descending.
    pub weights: Vec<f64>,
}

impl KrausSet {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, k| &acc + &k.conjugate(rho))
    }

    /// `max |sum_a K_a^dagger K_a - 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, k| &acc + &k.dagger().matmul(k));
        (&sum - &ComplexMatrix::identity(2)).max_abs()
    }

    /// Max-abs difference between the Kraus form and the map on `rho`.
    pub fn reconstruction_residual(&self, m: &DynamicalMap, rho: &ComplexMatrix) -> Result<f64> {
        Ok((&self.apply(rho) - &m.apply_operator(rho)?).max_abs())
    }
}

/// Kraus form from the Choi eigendecomposition; fails for maps that are not CP.
pub fn kraus_decompose(c: &ChoiMatrix) -> Result<KrausSet> {
    let min = c.min_eigenvalue();
    if min < -CP_TOL {
        return Err(Error::NotCompletelyPositive(min));
    }
    let mut operators = Vec::new();
    let mut weights = Vec::new();
    for (idx, &lam) in c.eigenvalues.iter().enumerate() {
        if lam <= KRAUS_CUTOFF {
            continue;
        }
        let v = c.eigenvectors.column_vec(idx);
        let s = lam.sqrt();
        // v[2a + i] = K[a][i] for the Choi layout used by `choi`
        let k = ComplexMatrix::from_rows(&[[v[0] * s, v[1] * s], [v[2] * s, v[3] * s]]);
        operators.push(k);
        weights.push(lam);
    }
    Ok(KrausSet { operators, weights })
}

/// Outcome of trying to factor a map family through an intermediate time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divisibility {
    /// The intermediate map is CP.
    Divisible,
    /// The intermediate map has a negative Choi eigenvalue.
    NotDivisible,
    /// The short-interval map is singular, so no unique intermediate map exists.
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct IntermediateMap {
    pub candidate: DynamicalMap,
    pub cp: bool,
    pub min_choi_eigenvalue: f64,
    pub rank: usize,
    pub divisibility: Divisibility,
}

/// `e_long * pinv(e_short)`, the map that would carry qubit 1 from `t1` to `t*`.
pub fn intermediate_map(e_short: &DynamicalMap, e_long: &DynamicalMap) -> Result<IntermediateMap> {
    intermediate_map_with_tol(e_short, e_long, CP_TOL)
}

/// [`intermediate_map`] with an explicit tolerance on the candidate's Choi eigenvalues.
pub fn intermediate_map_with_tol(
    e_short: &DynamicalMap,
    e_long: &DynamicalMap,
    cp_tol: f64,
) -> Result<IntermediateMap> {
    let (a0, a1) = e_short.interval;
    let (b0, b1) = e_long.interval;
    if a0 != b0 || !(a0 < a1 && a1 < b1) {
        return Err(Error::InvalidArgument(format!(
            "need intervals [t0, t1] and [t0, t*] with t0 < t1 < t*, got [{a0}, {a1}] and [{b0}, {b1}]"
        )));
    }
    if e_short.which_qubit != e_long.which_qubit || e_short.environment != e_long.environment {
        return Err(Error::InvalidArgument(
            "maps must describe the same qubit with the same environment".into(),
        ));
    }
    let inv = pseudo_inverse(&e_short.superoperator, PINV_CUTOFF);
    let candidate = DynamicalMap {
        superoperator: e_long.superoperator.matmul(&inv.matrix),
        environment: None,
        interval: (a1, b1),
        which_qubit: e_long.which_qubit,
    };
    let min = choi(&candidate)?.min_eigenvalue();
    let cp = min >= -cp_tol;
    let divisibility = if !inv.is_full_rank() {
        Divisibility::Indeterminate
    } else if cp {
        Divisibility::Divisible
    } else {
        Divisibility::NotDivisible
    };
    Ok(IntermediateMap { candidate, cp, min_choi_eigenvalue: min, rank: inv.rank, divisibility })
}

/// Same-marginal, different-outcome test on the sub-interval `[t1, t*]`.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub t1: f64,
    pub t_star: f64,
    /// Trace distance between the two qubit-1 outputs at `t*`.
    pub distance: f64,
    /// Same distance for qubit 2.
    pub distance_qubit2: f64,
    /// Frobenius distance of the joint state at `t1` from the product of its marginals.
    pub correlation_at_t1: f64,
    pub output_correlated: DensityMatrix,
    pub output_decorrelated: DensityMatrix,
}

/// Evolves a product input to `t1`, erases the correlations of the joint state there
/// while keeping both marginals, and evolves both versions to `t_star`.
///
/// Any map acting on the qubit-1 state at `t1` alone gives the same output for both
/// branches, so a positive distance rules such a map out on `[t1, t_star]`.
pub fn udm_witness_subinterval(
    k: &ComplexMatrix,
    rho_in: &DensityMatrix,
    t1: f64,
    t_star: f64,
) -> Result<WitnessReport> {
    k.require_shape(4, 4)?;
    if rho_in.n_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "two-qubit joint state".into(),
            got: format!("{}-qubit state", rho_in.n_qubits()),
        });
    }
    if !(t1 > 0.0 && t1 < t_star) {
        return Err(Error::InvalidArgument(format!("need 0 < t1 < t*, got t1 = {t1}, t* = {t_star}")));
    }
    let corr = rho_in.correlation_norm()?;
    if corr > PRODUCT_TOL {
        return Err(Error::NotProductState(corr));
    }
    let eig = hermitian_eig(k)?;
    let sigma = rho_in.evolved(&eig.propagator(t1));
    let decorrelated = sigma.product_of_marginals()?;
    let rest = eig.propagator(t_star - t1);
    let a = sigma.evolved(&rest);
    let b = decorrelated.evolved(&rest);
    let (a1, b1) = (a.partial_trace(1)?, b.partial_trace(1)?);
    Ok(WitnessReport {
        t1,
        t_star,
        distance: a1.trace_distance(&b1)?,
        distance_qubit2: a.partial_trace(2)?.trace_distance(&b.partial_trace(2)?)?,
        correlation_at_t1: sigma.correlation_norm()?,
        output_correlated: a1,
        output_decorrelated: b1,
    })
}

/// The two single-qubit maps of a gate: `e1` for qubit 1 with qubit 2 fixed to `rho2`,
/// `e2` for qubit 2 with qubit 1 fixed to `rho1`.
pub fn local_pair_maps(
    k: &ComplexMatrix,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    t: f64,
) -> Result<(DynamicalMap, DynamicalMap)> {
    Ok((induced_map(k, rho2, t, 1)?, induced_map(k, rho1, t, 2)?))
}

/// `rho -> rho^T`: positive but not completely positive.
pub fn transpose_map() -> DynamicalMap {
    let mut s = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            s[(j + 2 * i, i + 2 * j)] = ONE;
        }
    }
    DynamicalMap { superoperator: s, environment: None, interval: (0.0, 0.0), which_qubit: 1 }
}

/// `rho -> tr(rho) 1/2`.
pub fn completely_depolarizing_map() -> DynamicalMap {
    let mut s = ComplexMatrix::zeros(4, 4);
    for out in [0, 3] {
        for inp in [0, 3] {
            s[(out, inp)] = r(0.5);
        }
    }
    DynamicalMap { superoperator: s, environment: None, interval: (0.0, 0.0), which_qubit: 1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;
    use crate::random;
    use std::f64::consts::PI;

    fn cz_k() -> ComplexMatrix {
        ComplexMatrix::from_diag(&[ZERO, ZERO, ZERO, r(PI)])
    }

    /// tr_other[U(t) (rho (x) env) U(t)^dagger] computed directly on the joint state.
    fn joint_oracle(
        k: &ComplexMatrix,
        env: &DensityMatrix,
        t: f64,
        which: usize,
        rho: &ComplexMatrix,
    ) -> ComplexMatrix {
        let u = linalg::matexp_hermitian(k, t).unwrap();
        let joint = if which == 1 { kron(rho, env.matrix()) } else { kron(env.matrix(), rho) };
        partial_trace_dims(&u.conjugate(&joint), 2, 2, which).unwrap()
    }

    #[test]
    fn vectorization_convention() {
        let a = ComplexMatrix::from_rows(&[[r(1.0), r(2.0)], [r(3.0), r(4.0)]]);
        assert_eq!(vectorize(&a), vec![r(1.0), r(3.0), r(2.0), r(4.0)]);
        assert_eq!(unvectorize(&vectorize(&a), 2), a);

        let mut rng = random::rng(3);
        let (x, y) = (random::ginibre(&mut rng, 2, 2), random::ginibre(&mut rng, 2, 2));
        let rho = random::ginibre(&mut rng, 2, 2);
        let m = DynamicalMap::from_superoperator(sandwich_superoperator(&x, &y), (0.0, 1.0), 1)
            .unwrap();
        let direct = x.matmul(&rho).matmul(&y.dagger());
        assert!(frobenius_distance(&m.apply_operator(&rho).unwrap(), &direct) < 1e-13);
    }

    #[test]
    fn induced_map_examples() {
        let env = random::density_matrix(&mut random::rng(1), 1);
        let m = induced_map(&ComplexMatrix::zeros(4, 4), &env, 0.7, 1).unwrap();
        assert!(frobenius_distance(m.superoperator(), &ComplexMatrix::identity(4)) < 1e-13);

        let m = induced_map(&cz_k(), &Stabilizer::One.density(), 1.0, 1).unwrap();
        let z = DynamicalMap::unitary(&paulis::z()).unwrap();
        assert!(m.distance(&z) < 1e-13);

        let m = induced_map(&cz_k(), &Stabilizer::Plus.density(), 1.0, 1).unwrap();
        let out = apply_map(&m, &Stabilizer::Plus.density()).unwrap();
        assert!(out.purity() < 1.0 - 1e-3);
        let oracle = joint_oracle(&cz_k(), &Stabilizer::Plus.density(), 1.0, 1, Stabilizer::Plus.density().matrix());
        assert!(frobenius_distance(out.matrix(), &oracle) < 1e-13);
        // coherence factor (1 + e^{i pi t}) / 2 vanishes at t = 1
        assert!(out.matrix()[(0, 1)].norm() < 1e-13);
        assert!(is_cptp(&m, 1e-8).unwrap().cp);
    }

    #[test]
    fn induced_map_errors() {
        let env = Stabilizer::Zero.density();
        let nh = ComplexMatrix::from_real_rows(&[
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ]);
        assert!(matches!(induced_map(&nh, &env, 1.0, 1), Err(Error::NotHermitian(_))));
        assert!(induced_map(&cz_k(), &env, 1.0, 3).is_err());
        let two = env.tensor(&env);
        assert!(induced_map(&cz_k(), &two, 1.0, 1).is_err());
    }

    #[test]
    fn induced_map_matches_joint_evolution_on_random_inputs() {
        let mut rng = random::rng(11);
        for _ in 0..10 {
            let k = random::hermitian(&mut rng, 4);
            let env = random::density_matrix(&mut rng, 1);
            let t = 0.4 + 2.0 * rand::Rng::random::<f64>(&mut rng);
            for which in [1, 2] {
                let m = induced_map(&k, &env, t, which).unwrap();
                for _ in 0..5 {
                    let rho = random::density_matrix(&mut rng, 1);
                    let out = apply_map(&m, &rho).unwrap();
                    let oracle = joint_oracle(&k, &env, t, which, rho.matrix());
                    assert!(frobenius_distance(out.matrix(), &oracle) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn choi_examples() {
        let c = choi(&DynamicalMap::identity()).unwrap();
        let omega = [ONE, ZERO, ZERO, ONE];
        assert!(frobenius_distance(&c.matrix, &ComplexMatrix::outer(&omega, &omega)) < 1e-15);
        assert!((c.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!(c.eigenvalues[1..].iter().all(|v| v.abs() < 1e-14));

        let c = choi(&DynamicalMap::unitary(&paulis::z()).unwrap()).unwrap();
        assert!(c.eigenvalues[1..].iter().all(|v| v.abs() < 1e-14));
        assert!((c.eigenvalues[0] - 2.0).abs() < 1e-14);

        let c = choi(&completely_depolarizing_map()).unwrap();
        assert!(frobenius_distance(&c.matrix, &ComplexMatrix::identity(4).scale(r(0.5))) < 1e-15);
    }

    #[test]
    fn cptp_examples() {
        let v = is_cptp(&transpose_map(), 1e-8).unwrap();
        assert!(!v.cp && v.tp);
        assert!((v.min_choi_eigenvalue + 1.0).abs() < 1e-13);

        let v = is_cptp(&DynamicalMap::identity(), 1e-8).unwrap();
        assert!(v.cp && v.tp && v.min_choi_eigenvalue.abs() < 1e-14);

        let mut rng = random::rng(5);
        let k = random::hermitian(&mut rng, 4);
        let env = random::density_matrix(&mut rng, 1);
        let v = is_cptp(&induced_map(&k, &env, 1.3, 2).unwrap(), 1e-8).unwrap();
        assert!(v.cp && v.tp && v.min_choi_eigenvalue >= -1e-9);

        let scaled = DynamicalMap::from_superoperator(
            ComplexMatrix::identity(4).scale(r(0.5)),
            (0.0, 1.0),
            1,
        )
        .unwrap();
        assert!(!is_cptp(&scaled, 1e-8).unwrap().tp);
    }

    #[test]
    fn apply_map_reports_invalid_outputs() {
        // sends |0><0| to diag(-1, 2)
        let mut s = ComplexMatrix::identity(4);
        s[(0, 0)] = r(-1.0);
        s[(3, 0)] = r(2.0);
        let m = DynamicalMap::from_superoperator(s, (0.0, 1.0), 1).unwrap();
        assert!(matches!(
            apply_map(&m, &Stabilizer::Zero.density()),
            Err(Error::InvalidDensityMatrix(_))
        ));
    }

    #[test]
    fn kraus_examples() {
        let ks = kraus_decompose(&choi(&DynamicalMap::identity()).unwrap()).unwrap();
        assert_eq!(ks.len(), 1);
        assert!(crate::gates::equal_up_to_phase(&ks.operators[0], &ComplexMatrix::identity(2), 1e-12));

        let deph = induced_map(&cz_k(), &Stabilizer::Plus.density(), 1.0, 1).unwrap();
        let ks = kraus_decompose(&choi(&deph).unwrap()).unwrap();
        assert_eq!(ks.len(), 2);
        for k in &ks.operators {
            assert!(k[(0, 1)].norm() < 1e-12 && k[(1, 0)].norm() < 1e-12);
        }
        assert!(ks.completeness_residual() < 1e-12);

        let dep = completely_depolarizing_map();
        let ks = kraus_decompose(&choi(&dep).unwrap()).unwrap();
        assert_eq!(ks.len(), 4);
        assert!(ks.completeness_residual() < 1e-12);
        let mut rng = random::rng(8);
        for _ in 0..5 {
            let rho = random::density_matrix(&mut rng, 1);
            assert!(ks.reconstruction_residual(&dep, rho.matrix()).unwrap() < 1e-12);
        }

        assert!(matches!(
            kraus_decompose(&choi(&transpose_map()).unwrap()),
            Err(Error::NotCompletelyPositive(_))
        ));
    }

    #[test]
    fn intermediate_map_examples() {
        let env = Stabilizer::Plus.density();
        let zero = ComplexMatrix::zeros(4, 4);
        let im = intermediate_map(
            &induced_map(&zero, &env, 0.5, 1).unwrap(),
            &induced_map(&zero, &env, 1.0, 1).unwrap(),
        )
        .unwrap();
        assert!(im.cp && im.divisibility == Divisibility::Divisible);
        assert!(frobenius_distance(im.candidate.superoperator(), &ComplexMatrix::identity(4)) < 1e-12);

        let local = kron(&paulis::z(), &paulis::id2());
        let im = intermediate_map(
            &induced_map(&local, &env, 0.3, 1).unwrap(),
            &induced_map(&local, &env, 1.1, 1).unwrap(),
        )
        .unwrap();
        assert!(im.cp);
        let u = linalg::matexp_hermitian(&paulis::z(), 0.8).unwrap();
        assert!(im.candidate.distance(&DynamicalMap::unitary(&u).unwrap()) < 1e-12);
    }

    #[test]
    fn intermediate_map_rejects_bad_intervals() {
        let env = Stabilizer::Plus.density();
        let a = induced_map(&cz_k(), &env, 1.0, 1).unwrap();
        let b = induced_map(&cz_k(), &env, 0.5, 1).unwrap();
        assert!(intermediate_map(&a, &b).is_err());
        let c = induced_map(&cz_k(), &env, 1.0, 2).unwrap();
        assert!(intermediate_map(&b, &c).is_err());
    }

    #[test]
    fn cz_dephasing_family_is_divisible_until_the_phase_wraps() {
        // coherence factor (1 + e^{i pi t}) / 2 has modulus |cos(pi t / 2)|: it shrinks on
        // [0, 1] and revives on [1, 2], so divisibility holds up to t = 1 and fails after
        let env = Stabilizer::Plus.density();
        let short = induced_map(&cz_k(), &env, 0.5, 1).unwrap();
        let im = intermediate_map(&short, &induced_map(&cz_k(), &env, 1.0, 1).unwrap()).unwrap();
        assert!(im.cp);
        assert!(im.min_choi_eigenvalue.abs() < 1e-12);

        let im = intermediate_map(&short, &induced_map(&cz_k(), &env, 2.0, 1).unwrap()).unwrap();
        assert_eq!(im.divisibility, Divisibility::NotDivisible);
        // intermediate map is dephasing with factor 1 / c(1/2) = 2 / (1 + i): min Choi eigenvalue 1 - sqrt 2
        assert!((im.min_choi_eigenvalue - (1.0 - 2f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn singular_short_map_is_indeterminate() {
        let env = Stabilizer::Plus.density();
        let short = induced_map(&cz_k(), &env, 1.0, 1).unwrap();
        let long = induced_map(&cz_k(), &env, 1.5, 1).unwrap();
        let im = intermediate_map(&short, &long).unwrap();
        assert_eq!(im.divisibility, Divisibility::Indeterminate);
        assert_eq!(im.rank, 2);
    }

    #[test]
    fn witness_examples() {
        let pp = Stabilizer::Plus.density().tensor(&Stabilizer::Plus.density());
        let local = kron(&paulis::z(), &paulis::id2());
        let w = udm_witness_subinterval(&local, &pp, 0.5, 1.0).unwrap();
        assert!(w.distance < 1e-12 && w.correlation_at_t1 < 1e-12);

        let w = udm_witness_subinterval(&cz_k(), &pp, 0.5, 1.0).unwrap();
        assert!(w.distance > 0.1, "D = {}", w.distance);
        assert!((w.distance - 0.25).abs() < 1e-12);

        let mut last = f64::INFINITY;
        for t1 in [1e-1, 1e-2, 1e-3, 1e-4] {
            let d = udm_witness_subinterval(&cz_k(), &pp, t1, 1.0).unwrap().distance;
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn witness_rejects_correlated_input() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = crate::states::PureState::from_amplitudes(vec![r(s), ZERO, ZERO, r(s)])
            .unwrap()
            .densify();
        assert!(matches!(
            udm_witness_subinterval(&cz_k(), &bell, 0.5, 1.0),
            Err(Error::NotProductState(_))
        ));
        let pp = Stabilizer::Plus.density().tensor(&Stabilizer::Plus.density());
        assert!(udm_witness_subinterval(&cz_k(), &pp, 1.0, 1.0).is_err());
        assert!(udm_witness_subinterval(&cz_k(), &pp, 0.0, 1.0).is_err());
    }

    #[test]
    fn local_pair_examples() {
        let mut rng = random::rng(21);
        let a = random::hermitian(&mut rng, 2);
        let symmetric = &(&kron(&a, &paulis::id2()) + &kron(&paulis::id2(), &a))
            + &ComplexMatrix::from_diag(&[ZERO, ZERO, ZERO, r(0.9)]);
        let rho = random::density_matrix(&mut rng, 1);
        let (e1, e2) = local_pair_maps(&symmetric, &rho, &rho, 0.8).unwrap();
        assert!(e1.distance(&e2) < 1e-10);

        let (e1, e2) =
            local_pair_maps(&cz_k(), &Stabilizer::Plus.density(), &Stabilizer::One.density(), 1.0)
                .unwrap();
        assert!(e1.distance(&DynamicalMap::unitary(&paulis::z()).unwrap()) < 1e-12);
        let out = apply_map(&e2, &Stabilizer::Plus.density()).unwrap();
        assert!(out.purity() < 0.5 + 1e-12);
        assert!(e1.distance(&e2) > 1e-3);
    }
}
