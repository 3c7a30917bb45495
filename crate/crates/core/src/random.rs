//! Seeded random operators and states for property sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, hermitian_eig, ComplexMatrix, C64};
use crate::states::{DensityMatrix, PureState};

pub type SweepRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SweepRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre matrix with i.i.d. standard complex normal entries.
pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    ComplexMatrix::new(rows, cols, data).expect("finite samples")
}

/// Hermitian matrix `(G + G^dagger)/2` from a Ginibre sample.
pub fn hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    ginibre(rng, dim, dim).hermitian_part()
}

/// Unitary `e^{-iH}` for a random Hermitian `H`.
pub fn unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let h = hermitian(rng, dim);
    hermitian_eig(&h).expect("hermitian by construction").propagator(1.0)
}

pub fn pure_state(rng: &mut impl Rng, n_qubits: usize) -> PureState {
    let amps = (0..1usize << n_qubits).map(|_| gaussian(rng)).collect();
    PureState::normalized(amps).expect("non-zero gaussian vector")
}

/// Full-rank mixed state `G G^dagger / tr(G G^dagger)`.
pub fn density_matrix(rng: &mut impl Rng, n_qubits: usize) -> DensityMatrix {
    let d = 1usize << n_qubits;
    let g = ginibre(rng, d, d);
    let w = g.matmul(&g.dagger()).hermitian_part();
    let tr = w.trace().re;
    DensityMatrix::new(w.scale(c(1.0 / tr, 0.0))).expect("positive by construction")
}
