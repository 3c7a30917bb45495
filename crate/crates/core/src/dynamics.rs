//! Joint two-qubit evolution sampled on a time grid inside the gate interval.
//!
//! Each grid state is computed directly as `U(t) rho_in U(t)^dagger` from one spectral
//! decomposition of the generator. The grid is a sampling of the continuous dynamics, so
//! refining it never changes the state at a shared time point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, INPUT_TOL};
use crate::report::fmt_num;
use crate::states::{negativity, pure_entanglement, DensityMatrix, PureState, Stabilizer};

pub const DEFAULT_STEPS: usize = 100;
/// Negativity above which a joint state counts as entangled.
pub const ENTANGLEMENT_TOL: f64 = 1e-6;
/// Purity above `1 - PURE_TOL` counts as a pure joint state.
pub const PURE_TOL: f64 = 1e-9;

/// `M + 1` equally spaced sample times `t_start + m (t_end - t_start) / M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::InvalidArgument(format!(
                "grid needs t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("grid needs at least one step".into()));
        }
        Ok(Self { t_start, t_end, steps })
    }

    /// `[0, t_end]` with the default step count.
    pub fn over(t_end: f64) -> Result<Self> {
        Self::new(0.0, t_end, DEFAULT_STEPS)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn epsilon(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    /// Time of grid point `m`; `point(steps)` is exactly `t_end`.
    pub fn point(&self, m: usize) -> f64 {
        if m == self.steps {
            return self.t_end;
        }
        // (span * m) / M is bit-identical to (span * 2m) / 2M, which keeps refinements aligned
        self.t_start + (self.t_end - self.t_start) * m as f64 / self.steps as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|m| self.point(m))
    }

    /// Same interval with twice the resolution.
    pub fn refined(&self) -> Self {
        Self { steps: self.steps * 2, ..*self }
    }
}

/// Joint states of the two-qubit system at every grid point.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: TimeGrid,
    generator: ComplexMatrix,
    joint_states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }

    pub fn joint_states(&self) -> &[DensityMatrix] {
        &self.joint_states
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.joint_states[0]
    }

    pub fn endpoint(&self) -> &DensityMatrix {
        self.joint_states.last().expect("grid has at least two points")
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.points().collect()
    }

    /// Largest `|tr rho(t)^2 - tr rho_in^2|` along the trajectory.
    pub fn purity_drift(&self) -> f64 {
        let p0 = self.initial().purity();
        self.joint_states.iter().map(|s| (s.purity() - p0).abs()).fold(0.0, f64::max)
    }
}

/// Evolves `rho_in` under the time-independent generator `k` across `grid`.
pub fn evolve_trajectory(
    k: &ComplexMatrix,
    rho_in: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    k.require_shape(4, 4)?;
    if rho_in.n_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "two-qubit joint state".into(),
            got: format!("{}-qubit state", rho_in.n_qubits()),
        });
    }
    let eig = hermitian_eig(k)?;
    debug_assert!(k.is_hermitian(INPUT_TOL));
    let joint_states = grid
        .points()
        .map(|t| rho_in.evolved(&eig.propagator(t - grid.t_start())))
        .collect();
    Ok(Trajectory { grid: *grid, generator: k.hermitian_part(), joint_states })
}

/// Entanglement diagnostics at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub t: f64,
    pub negativity: f64,
    /// `|g00 g11 - g01 g10|`, only for pure joint states.
    pub tau: Option<f64>,
    pub purity: f64,
}

/// Recovers the state vector of a (numerically) pure density matrix.
pub fn dominant_pure_state(rho: &DensityMatrix) -> Result<PureState> {
    let eig = hermitian_eig(rho.matrix())?;
    PureState::normalized(eig.vectors.column_vec(0))
}

pub fn entanglement_profile(traj: &Trajectory) -> Result<Vec<ProfilePoint>> {
    traj.grid
        .points()
        .zip(&traj.joint_states)
        .map(|(t, rho)| {
            let purity = rho.purity();
            let tau = if rho.is_pure(PURE_TOL) {
                Some(pure_entanglement(&dominant_pure_state(rho)?)?)
            } else {
                None
            };
            Ok(ProfilePoint { t, negativity: negativity(rho)?, tau, purity })
        })
        .collect()
}

/// First grid time at which the joint state is entangled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntangledInstant {
    pub t1: f64,
    pub negativity: f64,
    pub index: usize,
}

/// Earliest grid point whose joint-state negativity exceeds `tol`, if any.
///
/// A hit certifies `rho_12(t1) != rho_1(t1) (x) rho_2(t1)`.
pub fn find_entangled_instant(traj: &Trajectory, tol: f64) -> Result<Option<EntangledInstant>> {
    for (index, (t, rho)) in traj.grid.points().zip(&traj.joint_states).enumerate() {
        let n = negativity(rho)?;
        if n > tol {
            return Ok(Some(EntangledInstant { t1: t, negativity: n, index }));
        }
    }
    Ok(None)
}

/// Searches stabilizer product inputs for one that becomes entangled somewhere on `grid`.
pub fn search_entangling_input(
    k: &ComplexMatrix,
    grid: &TimeGrid,
    tol: f64,
) -> Result<Option<(Stabilizer, Stabilizer, EntangledInstant)>> {
    for a in Stabilizer::ALL {
        for b in Stabilizer::ALL {
            let rho = a.density().tensor(&b.density());
            if let Some(hit) = find_entangled_instant(&evolve_trajectory(k, &rho, grid)?, tol)? {
                return Ok(Some((a, b, hit)));
            }
        }
    }
    Ok(None)
}

pub const CSV_HEADER: &str = "t,negativity,tau,purity";

/// Profile as CSV; `tau` is left empty for mixed joint states.
pub fn profile_csv(profile: &[ProfilePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in profile {
        let tau = p.tau.map(fmt_num).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(p.t),
            fmt_num(p.negativity),
            tau,
            fmt_num(p.purity)
        ));
    }
    out
}
