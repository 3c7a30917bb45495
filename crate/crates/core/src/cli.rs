//! Scenario files and the five analysis commands behind the `udmlab` binary.
//!
//! A scenario is a JSON object; every field is optional and commands reject
//! scenarios that lack what they need:
//!
//! ```json
//! {
//!   "generator": { "gate": "CPHASE", "phi": 3.141592653589793 },
//!   "input": { "qubits": ["+", "+"] },
//!   "grid": { "t_start": 0.0, "t_end": 1.0, "steps": 100 },
//!   "t1": 0.5,
//!   "tolerances": { "cp": 1e-7 },
//!   "seed": 7
//! }
//! ```
//!
//! `generator` is either a named gate (`CPHASE`, `LOCAL_PHASE`, `SWAP`, `IDENTITY`)
//! whose principal generator over the grid span is used, or `{"hamiltonian": K}` with
//! `K` a 4x4 array of `[re, im]` pairs. `input` is either per-qubit named states
//! (`0`, `1`, `+`, `-`, `+i`, `-i`) or `{"amplitudes": [[re, im], ...]}`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::circuits::{self, BlockAudit, Circuit, CircuitFile};
use crate::dynamics::{self, TimeGrid};
use crate::gates::{self, Gate};
use crate::linalg::{self, c, frobenius_distance, ComplexMatrix, C64};
use crate::maps::{self, Divisibility, DynamicalMap};
use crate::random;
use crate::report::{self, matrix_pairs, vector_pairs};
use crate::states::{self, DensityMatrix, PureState, Stabilizer};
use crate::Error;

pub const TOL_OVERRIDE_ENV: &str = "UDMLAB_TOL_OVERRIDE";

/// Random inputs used for the Kraus reconstruction residual in `map`.
pub const RESIDUAL_SAMPLES: usize = 20;

/// Input error: exit code 2.
pub const EXIT_INPUT: i32 = 2;
/// Internal invariant violation: exit code 3.
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn input(e: impl fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }

    fn internal(e: impl fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

type CliResult<T> = std::result::Result<T, CliError>;

// ---------------------------------------------------------------------------
// Command line

#[derive(Debug, Parser)]
#[command(name = "udmlab", version, about = "Gate dynamics, reduced maps and divisibility for two-qubit gates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Write the JSON report here instead of stdout; CSV output goes next to it.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Tolerance on negative Choi eigenvalues.
    #[arg(long, global = true, value_name = "REAL")]
    pub tol_cp: Option<f64>,
    /// Number of grid intervals, overriding the scenario grid.
    #[arg(long, global = true, value_name = "INT")]
    pub steps: Option<usize>,
    /// Report the maps of both qubits.
    #[arg(long, global = true)]
    pub both_qubits: bool,
    /// Seed for randomized checks, overriding the scenario seed.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Unitary, principal generator and operator Schmidt analysis of a gate.
    AnalyzeGate,
    /// Entanglement profile of the joint state across the gate interval.
    Trajectory {
        /// CSV destination; defaults to the --out path with a .csv extension.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Reduced dynamical map of a qubit over the whole gate interval.
    Map,
    /// CP-divisibility and the no-universal-map witness at an intermediate time.
    Divisibility {
        /// Intermediate time, overriding the scenario value.
        #[arg(long, value_name = "REAL")]
        t1: Option<f64>,
    },
    /// Quantum Fourier transform (or a circuit file) with per-gate separability audit.
    Qft {
        /// Register size (2..=8).
        #[arg(long, short = 'n', value_name = "INT")]
        qubits: Option<usize>,
        /// Basis bitstring such as 011, or comma-separated named states such as +,0,1.
        #[arg(long, value_name = "STATE")]
        input: Option<String>,
        /// Run this circuit file instead of building the QFT.
        #[arg(long, value_name = "PATH")]
        circuit: Option<PathBuf>,
        /// Also write the circuit that was run to this path.
        #[arg(long, value_name = "PATH")]
        emit_circuit: Option<PathBuf>,
        /// CSV destination; defaults to the --out path with a .csv extension.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::AnalyzeGate => "analyze-gate",
            Command::Trajectory { .. } => "trajectory",
            Command::Map => "map",
            Command::Divisibility { .. } => "divisibility",
            Command::Qft { .. } => "qft",
        }
    }
}

// ---------------------------------------------------------------------------
// Scenario format

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub input: Option<InputSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(default)]
    pub gate: Option<String>,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub hamiltonian: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default)]
    pub qubits: Option<Vec<String>>,
    #[serde(default)]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_t_end() -> f64 {
    1.0
}

fn default_steps() -> usize {
    dynamics::DEFAULT_STEPS
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { t_start: 0.0, t_end: default_t_end(), steps: default_steps() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub hermiticity: Option<f64>,
    pub normalization: Option<f64>,
    pub cp: Option<f64>,
    pub entanglement: Option<f64>,
    pub schmidt: Option<f64>,
    pub audit: Option<f64>,
    pub witness: Option<f64>,
    pub product: Option<f64>,
}

/// The tolerance set a command ran with; embedded in every report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Max `|K - K^dagger|` accepted for an explicit generator.
    pub hermiticity: f64,
    /// Max `| ||psi|| - 1 |` accepted for explicit amplitudes.
    pub normalization: f64,
    /// Negative Choi eigenvalues down to `-cp` still count as CP; also the TP tolerance.
    pub cp: f64,
    /// Negativity above which a joint state counts as entangled.
    pub entanglement: f64,
    /// Relative cutoff for the operator Schmidt rank.
    pub schmidt: f64,
    /// Separability tolerance of circuit audits.
    pub audit: f64,
    /// Witness distance above which no universal map exists on the sub-interval.
    pub witness: f64,
    /// Max distance of the input from the product of its marginals.
    pub product: f64,
    /// Singular-value cutoff of the pseudo-inverse.
    pub pinv_cutoff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermiticity: linalg::INPUT_TOL,
            normalization: 1e-6,
            cp: maps::CP_TOL,
            entanglement: dynamics::ENTANGLEMENT_TOL,
            schmidt: gates::SCHMIDT_TOL,
            audit: circuits::AUDIT_TOL,
            witness: 1e-6,
            product: maps::PRODUCT_TOL,
            pinv_cutoff: maps::PINV_CUTOFF,
        }
    }
}

impl Tolerances {
    fn apply(&mut self, o: &ToleranceOverrides) {
        let slots = [
            (&mut self.hermiticity, o.hermiticity),
            (&mut self.normalization, o.normalization),
            (&mut self.cp, o.cp),
            (&mut self.entanglement, o.entanglement),
            (&mut self.schmidt, o.schmidt),
            (&mut self.audit, o.audit),
            (&mut self.witness, o.witness),
            (&mut self.product, o.product),
        ];
        for (slot, value) in slots {
            if let Some(v) = value {
                *slot = v;
            }
        }
    }

    fn validate(&self) -> CliResult<()> {
        let all = [
            ("hermiticity", self.hermiticity),
            ("normalization", self.normalization),
            ("cp", self.cp),
            ("entanglement", self.entanglement),
            ("schmidt", self.schmidt),
            ("audit", self.audit),
            ("witness", self.witness),
            ("product", self.product),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Input(format!("tolerance {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Parses `name=value[,name=value...]` as accepted in `UDMLAB_TOL_OVERRIDE`.
pub fn parse_tol_override(text: &str) -> CliResult<ToleranceOverrides> {
    let mut o = ToleranceOverrides::default();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item.split_once('=').ok_or_else(|| {
            CliError::Input(format!("{TOL_OVERRIDE_ENV}: expected name=value, got {item:?}"))
        })?;
        let v: f64 = value.trim().parse().map_err(|_| {
            CliError::Input(format!("{TOL_OVERRIDE_ENV}: {name} has non-numeric value {value:?}"))
        })?;
        let slot = match name.trim() {
            "hermiticity" => &mut o.hermiticity,
            "normalization" => &mut o.normalization,
            "cp" => &mut o.cp,
            "entanglement" => &mut o.entanglement,
            "schmidt" => &mut o.schmidt,
            "audit" => &mut o.audit,
            "witness" => &mut o.witness,
            "product" => &mut o.product,
            other => {
                return Err(CliError::Input(format!("{TOL_OVERRIDE_ENV}: unknown tolerance {other:?}")))
            }
        };
        *slot = Some(v);
    }
    Ok(o)
}

/// Parses scenario text; syntax errors carry line and column.
pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("scenario: {e}")))
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read scenario {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

// ---------------------------------------------------------------------------
// Resolved configuration

/// Everything a command needs, validated.
#[derive(Clone, Debug)]
pub struct Config {
    pub scenario: Scenario,
    pub tolerances: Tolerances,
    pub tol_override_env: Option<String>,
    pub seed: u64,
    pub grid: TimeGrid,
    pub both_qubits: bool,
}

impl Config {
    /// Merges defaults, scenario, the environment override and command-line flags,
    /// in increasing priority.
    pub fn resolve(
        scenario: Scenario,
        common: &CommonArgs,
        tol_override_env: Option<String>,
    ) -> CliResult<Self> {
        let mut tolerances = Tolerances::default();
        tolerances.apply(&scenario.tolerances);
        if let Some(text) = &tol_override_env {
            tolerances.apply(&parse_tol_override(text)?);
        }
        if let Some(cp) = common.tol_cp {
            tolerances.cp = cp;
        }
        tolerances.validate()?;
        let mut spec = scenario.grid.unwrap_or_default();
        if let Some(steps) = common.steps {
            spec.steps = steps;
        }
        let grid = TimeGrid::new(spec.t_start, spec.t_end, spec.steps)
            .map_err(|e| CliError::Input(format!("grid: {e}")))?;
        let seed = common.seed.or(scenario.seed).unwrap_or(0);
        Ok(Config { scenario, tolerances, tol_override_env, seed, grid, both_qubits: common.both_qubits })
    }

    /// Length of the gate interval.
    pub fn span(&self) -> f64 {
        self.grid.t_end() - self.grid.t_start()
    }

    fn header(&self, command: &'static str) -> Header {
        Header {
            command,
            tolerances: self.tolerances,
            tol_override_env: self.tol_override_env.clone(),
            seed: self.seed,
        }
    }

    /// The gate described by the scenario, realized over the grid span.
    pub fn gate(&self) -> CliResult<Gate> {
        let spec = self
            .scenario
            .generator
            .as_ref()
            .ok_or_else(|| CliError::Input("scenario has no \"generator\"".into()))?;
        let t = self.span();
        match (&spec.gate, &spec.hamiltonian) {
            (Some(_), Some(_)) => Err(CliError::Input(
                "generator: give either \"gate\" or \"hamiltonian\", not both".into(),
            )),
            (None, None) => Err(CliError::Input("generator: needs \"gate\" or \"hamiltonian\"".into())),
            (None, Some(rows)) => {
                if spec.phi.is_some() {
                    return Err(CliError::Input("generator: \"phi\" only applies to named gates".into()));
                }
                let k = parse_matrix(rows, "generator.hamiltonian")?;
                k.require_shape(4, 4).map_err(|e| CliError::Input(format!("generator.hamiltonian: {e}")))?;
                k.require_hermitian(self.tolerances.hermiticity)
                    .map_err(|e| CliError::Input(format!("generator.hamiltonian: {e}")))?;
                gates::gate_from_generator(&k.hermitian_part(), t)
                    .map(|g| g.with_name("hamiltonian"))
                    .map_err(|e| CliError::Input(format!("generator.hamiltonian: {e}")))
            }
            (Some(name), None) => named_gate(name, spec.phi, t),
        }
    }

    /// Joint input state on `n` qubits.
    pub fn input_state(&self, n: usize) -> CliResult<(PureState, String)> {
        let spec = self
            .scenario
            .input
            .as_ref()
            .ok_or_else(|| CliError::Input("scenario has no \"input\"".into()))?;
        parse_input_spec(spec, n, self.tolerances.normalization)
    }
}

/// Fields shared by every report.
#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub command: &'static str,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_override_env: Option<String>,
    pub seed: u64,
}

fn named_gate(name: &str, phi: Option<f64>, t: f64) -> CliResult<Gate> {
    let need_phi = || {
        phi.filter(|p| p.is_finite())
            .ok_or_else(|| CliError::Input(format!("generator: {name} needs a finite \"phi\"")))
    };
    let no_phi = || {
        if phi.is_some() {
            Err(CliError::Input(format!("generator: {name} takes no \"phi\"")))
        } else {
            Ok(())
        }
    };
    let unitary = match name {
        "CPHASE" => gates::c_phase_matrix(need_phi()?),
        "LOCAL_PHASE" => gates::local_phase(need_phi()?).unitary().clone(),
        "SWAP" => {
            no_phi()?;
            gates::swap_matrix()
        }
        "IDENTITY" => {
            no_phi()?;
            ComplexMatrix::identity(4)
        }
        other => {
            return Err(CliError::Input(format!(
                "generator.gate: unknown gate {other:?}; expected CPHASE, LOCAL_PHASE, SWAP or IDENTITY"
            )))
        }
    };
    gates::gate_from_unitary(&unitary, t)
        .map(|g| g.with_name(name))
        .map_err(|e| CliError::Input(format!("generator: {e}")))
}

fn parse_matrix(rows: &[Vec<[f64; 2]>], field: &str) -> CliResult<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Input(format!("{field}: expected a square array of [re, im] pairs")));
    }
    let data: Vec<C64> = rows.iter().flatten().map(|&[re, im]| c(re, im)).collect();
    ComplexMatrix::new(n, n, data).map_err(|e| CliError::Input(format!("{field}: {e}")))
}

fn parse_input_spec(spec: &InputSpec, n: usize, norm_tol: f64) -> CliResult<(PureState, String)> {
    match (&spec.qubits, &spec.amplitudes) {
        (Some(labels), None) => {
            if labels.len() != n {
                return Err(CliError::Input(format!(
                    "input.qubits: expected {n} named states, got {}",
                    labels.len()
                )));
            }
            named_product(labels.iter().map(String::as_str))
        }
        (None, Some(pairs)) => {
            let dim = 1usize << n;
            if pairs.len() != dim {
                return Err(CliError::Input(format!(
                    "input.amplitudes: expected {dim} amplitudes for {n} qubits, got {}",
                    pairs.len()
                )));
            }
            let amps: Vec<C64> = pairs.iter().map(|&[re, im]| c(re, im)).collect();
            if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(CliError::Input("input.amplitudes: non-finite entry".into()));
            }
            let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > norm_tol {
                return Err(CliError::Input(format!(
                    "input.amplitudes: state is not normalized (norm = {norm})"
                )));
            }
            let state = PureState::normalized(amps).map_err(CliError::input)?;
            Ok((state, "amplitudes".into()))
        }
        (Some(_), Some(_)) => {
            Err(CliError::Input("input: give either \"qubits\" or \"amplitudes\", not both".into()))
        }
        (None, None) => Err(CliError::Input("input: needs \"qubits\" or \"amplitudes\"".into())),
    }
}

fn named_product<'a>(labels: impl Iterator<Item = &'a str>) -> CliResult<(PureState, String)> {
    let factors: Vec<Stabilizer> = labels
        .map(|l| l.trim().parse::<Stabilizer>().map_err(|e| CliError::Input(format!("input: {e}"))))
        .collect::<CliResult<_>>()?;
    let label = factors.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("");
    let states: Vec<PureState> = factors.iter().map(|s| s.state()).collect();
    let state = PureState::product(&states).map_err(CliError::input)?;
    Ok((state, label))
}

/// Parses the `--input` flag of `qft`: a bitstring like `011` or labels like `+,0,1`.
pub fn parse_register_input(text: &str, n: usize) -> CliResult<(PureState, String)> {
    let text = text.trim();
    if !text.contains(',') && !text.is_empty() && text.chars().all(|ch| ch == '0' || ch == '1') {
        if text.len() != n {
            return Err(CliError::Input(format!(
                "--input: bitstring {text:?} has {} bits for a {n}-qubit register",
                text.len()
            )));
        }
        let index = usize::from_str_radix(text, 2).map_err(CliError::input)?;
        let state = PureState::basis(n, index).map_err(CliError::input)?;
        return Ok((state, format!("|{text}>")));
    }
    let labels: Vec<&str> = text.split(',').collect();
    if labels.len() != n {
        return Err(CliError::Input(format!(
            "--input: expected {n} comma-separated named states, got {}",
            labels.len()
        )));
    }
    named_product(labels.into_iter())
}

fn two_qubit_density(psi: &PureState) -> DensityMatrix {
    psi.densify()
}

// ---------------------------------------------------------------------------
// analyze-gate

#[derive(Clone, Debug, Serialize)]
pub struct EntanglingInput {
    pub qubit1: &'static str,
    pub qubit2: &'static str,
    /// `|g00 g11 - g01 g10|` of the output.
    pub tau: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeGateReport {
    #[serde(flatten)]
    pub header: Header,
    pub gate: String,
    pub duration: f64,
    pub unitary: Vec<Vec<[f64; 2]>>,
    /// Principal generator of the unitary over `duration`.
    pub generator: Vec<Vec<[f64; 2]>>,
    pub generator_spectrum: Vec<f64>,
    pub operator_schmidt_values: Vec<f64>,
    pub operator_schmidt_rank: usize,
    pub entangling: bool,
    /// Stabilizer product input with the most entangled output, if any.
    pub entangling_input: Option<EntanglingInput>,
}

pub fn cmd_analyze_gate(cfg: &Config) -> CliResult<AnalyzeGateReport> {
    let gate = cfg.gate()?;
    let principal =
        gates::generator_from_unitary(gate.unitary(), gate.duration()).map_err(CliError::internal)?;
    let verdict = gates::is_entangling(&gate, cfg.tolerances.schmidt).map_err(CliError::internal)?;
    let best = gates::find_entangling_input(&gate, cfg.tolerances.entanglement).map_err(CliError::internal)?;
    Ok(AnalyzeGateReport {
        header: cfg.header("analyze-gate"),
        gate: gate.name().to_string(),
        duration: gate.duration(),
        unitary: matrix_pairs(gate.unitary()),
        generator: matrix_pairs(&principal),
        generator_spectrum: gates::generator_spectrum(&gate),
        operator_schmidt_values: verdict.schmidt_values,
        operator_schmidt_rank: verdict.operator_schmidt_rank,
        entangling: verdict.entangling,
        entangling_input: best.map(|(a, b, tau)| EntanglingInput { qubit1: a.label(), qubit2: b.label(), tau }),
    })
}

// ---------------------------------------------------------------------------
// trajectory

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryReport {
    #[serde(flatten)]
    pub header: Header,
    pub gate: String,
    pub input: String,
    pub grid: TimeGrid,
    /// First grid time with negativity above the entanglement tolerance.
    pub t1: Option<f64>,
    pub t1_index: Option<usize>,
    pub t1_negativity: Option<f64>,
    pub max_negativity: f64,
    pub max_negativity_t: f64,
    pub final_negativity: f64,
    pub final_tau: Option<f64>,
    pub purity_drift: f64,
    pub rows: usize,
}

pub fn cmd_trajectory(cfg: &Config) -> CliResult<(TrajectoryReport, String)> {
    let gate = cfg.gate()?;
    let (psi, label) = cfg.input_state(2)?;
    let traj = dynamics::evolve_trajectory(gate.generator(), &two_qubit_density(&psi), &cfg.grid)
        .map_err(CliError::internal)?;
    let profile = dynamics::entanglement_profile(&traj).map_err(CliError::internal)?;
    let hit = dynamics::find_entangled_instant(&traj, cfg.tolerances.entanglement).map_err(CliError::internal)?;
    let (max_negativity_t, max_negativity) = profile
        .iter()
        .fold((profile[0].t, profile[0].negativity), |best, p| {
            if p.negativity > best.1 {
                (p.t, p.negativity)
            } else {
                best
            }
        });
    let last = profile.last().expect("grid has at least two points");
    let report = TrajectoryReport {
        header: cfg.header("trajectory"),
        gate: gate.name().to_string(),
        input: label,
        grid: cfg.grid,
        t1: hit.map(|h| h.t1),
        t1_index: hit.map(|h| h.index),
        t1_negativity: hit.map(|h| h.negativity),
        max_negativity,
        max_negativity_t,
        final_negativity: last.negativity,
        final_tau: last.tau,
        purity_drift: traj.purity_drift(),
        rows: profile.len(),
    };
    Ok((report, dynamics::profile_csv(&profile)))
}

// ---------------------------------------------------------------------------
// map

#[derive(Clone, Debug, Serialize)]
pub struct MapReport {
    pub which_qubit: usize,
    /// State of the other qubit at the start of the interval.
    pub environment: Vec<Vec<[f64; 2]>>,
    pub superoperator: Vec<Vec<[f64; 2]>>,
    pub choi_eigenvalues: Vec<f64>,
    pub cp: bool,
    pub tp: bool,
    pub min_choi_eigenvalue: f64,
    pub tp_deviation: f64,
    pub kraus_count: usize,
    pub kraus_weights: Vec<f64>,
    pub kraus_operators: Vec<Vec<Vec<[f64; 2]>>>,
    /// Max-abs Kraus-form error over seeded random inputs.
    pub reconstruction_residual: f64,
    pub completeness_residual: f64,
    /// Max-abs difference from tracing out the jointly evolved state, same inputs.
    pub joint_evolution_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MapCommandReport {
    #[serde(flatten)]
    pub header: Header,
    pub gate: String,
    pub input: String,
    pub t: f64,
    pub maps: Vec<MapReport>,
    /// Frobenius distance between the two qubits' superoperators (with --both-qubits).
    pub superoperator_distance: Option<f64>,
}

/// Single-qubit marginals of a product input, or the product-state error.
fn product_marginals(psi: &PureState, tol: f64) -> CliResult<(DensityMatrix, DensityMatrix)> {
    let rho = two_qubit_density(psi);
    let corr = rho.correlation_norm().map_err(CliError::internal)?;
    if corr > tol {
        return Err(CliError::input(Error::NotProductState(corr)));
    }
    let rho1 = rho.partial_trace(1).map_err(CliError::internal)?;
    let rho2 = rho.partial_trace(2).map_err(CliError::internal)?;
    Ok((rho1, rho2))
}

fn map_report(
    m: &DynamicalMap,
    k: &ComplexMatrix,
    t: f64,
    cfg: &Config,
) -> crate::Result<MapReport> {
    let choi = maps::choi(m)?;
    let verdict = maps::is_cptp(m, cfg.tolerances.cp)?;
    let kraus = maps::kraus_decompose(&choi)?;
    let env = m.environment().expect("induced maps carry their environment");
    let u = linalg::matexp_hermitian(k, t)?;
    let mut rng = random::rng(cfg.seed ^ m.which_qubit() as u64);
    let mut recon: f64 = 0.0;
    let mut joint: f64 = 0.0;
    for _ in 0..RESIDUAL_SAMPLES {
        let rho = random::density_matrix(&mut rng, 1);
        recon = recon.max(kraus.reconstruction_residual(m, rho.matrix())?);
        let embedded = if m.which_qubit() == 1 { rho.tensor(env) } else { env.tensor(&rho) };
        let direct = linalg::partial_trace(&u.conjugate(embedded.matrix()), m.which_qubit())?;
        joint = joint.max((&direct - &m.apply_operator(rho.matrix())?).max_abs());
    }
    Ok(MapReport {
        which_qubit: m.which_qubit(),
        environment: matrix_pairs(env.matrix()),
        superoperator: matrix_pairs(m.superoperator()),
        choi_eigenvalues: choi.eigenvalues.clone(),
        cp: verdict.cp,
        tp: verdict.tp,
        min_choi_eigenvalue: verdict.min_choi_eigenvalue,
        tp_deviation: verdict.tp_deviation,
        kraus_count: kraus.len(),
        kraus_weights: kraus.weights.clone(),
        kraus_operators: kraus.operators.iter().map(matrix_pairs).collect(),
        reconstruction_residual: recon,
        completeness_residual: kraus.completeness_residual(),
        joint_evolution_residual: joint,
    })
}

pub fn cmd_map(cfg: &Config) -> CliResult<MapCommandReport> {
    let gate = cfg.gate()?;
    let (psi, label) = cfg.input_state(2)?;
    let (rho1, rho2) = product_marginals(&psi, cfg.tolerances.product)?;
    let k = gate.generator();
    let t = cfg.span();
    let (e1, e2) = maps::local_pair_maps(k, &rho1, &rho2, t).map_err(CliError::internal)?;
    let mut reports = vec![map_report(&e1, k, t, cfg).map_err(CliError::internal)?];
    let mut distance = None;
    if cfg.both_qubits {
        reports.push(map_report(&e2, k, t, cfg).map_err(CliError::internal)?);
        distance = Some(frobenius_distance(e1.superoperator(), e2.superoperator()));
    }
    Ok(MapCommandReport {
        header: cfg.header("map"),
        gate: gate.name().to_string(),
        input: label,
        t,
        maps: reports,
        superoperator_distance: distance,
    })
}

// ---------------------------------------------------------------------------
// divisibility

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Markovian,
    NonMarkovian,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntermediateSummary {
    pub choi_eigenvalues: Vec<f64>,
    pub min_choi_eigenvalue: f64,
    pub cp: bool,
    /// Rank of the short-interval superoperator (4 when invertible).
    pub rank: usize,
    pub divisibility: Divisibility,
    pub superoperator: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessSummary {
    pub distance: f64,
    pub distance_qubit2: f64,
    pub correlation_at_t1: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanPoint {
    pub t1: f64,
    pub min_choi_eigenvalue: f64,
    pub divisibility: Divisibility,
    pub witness_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivisibilityReport {
    #[serde(flatten)]
    pub header: Header,
    pub gate: String,
    pub input: String,
    pub t0: f64,
    pub t1: f64,
    pub t_star: f64,
    pub intermediate: IntermediateSummary,
    pub witness: WitnessSummary,
    pub verdict: Verdict,
    pub reason: String,
    /// The same two certificates at every interior grid point.
    pub scan: Vec<ScanPoint>,
}

struct Certificates {
    intermediate: maps::IntermediateMap,
    witness: maps::WitnessReport,
}

fn certificates(
    k: &ComplexMatrix,
    rho_in: &DensityMatrix,
    env: &DensityMatrix,
    s1: f64,
    s_star: f64,
    cp_tol: f64,
) -> crate::Result<Certificates> {
    let short = maps::induced_map(k, env, s1, 1)?;
    let long = maps::induced_map(k, env, s_star, 1)?;
    Ok(Certificates {
        intermediate: maps::intermediate_map_with_tol(&short, &long, cp_tol)?,
        witness: maps::udm_witness_subinterval(k, rho_in, s1, s_star)?,
    })
}

/// Non-Markovian if the intermediate map is not CP or the witness fires; indeterminate
/// if the short map is singular and the witness is silent; Markovian otherwise.
pub fn verdict(divisibility: Divisibility, witness_distance: f64, witness_tol: f64) -> (Verdict, String) {
    let fires = witness_distance > witness_tol;
    match (divisibility, fires) {
        (Divisibility::NotDivisible, true) => (
            Verdict::NonMarkovian,
            "intermediate map is not CP and the correlation witness fires".into(),
        ),
        (Divisibility::NotDivisible, false) => {
            (Verdict::NonMarkovian, "intermediate map is not completely positive".into())
        }
        (_, true) => (
            Verdict::NonMarkovian,
            "correlation witness fires: no map of the qubit state at t1 alone reproduces the dynamics".into(),
        ),
        (Divisibility::Indeterminate, false) => (
            Verdict::Indeterminate,
            "short-interval map is singular; intermediate map is not unique".into(),
        ),
        (Divisibility::Divisible, false) => {
            (Verdict::Markovian, "intermediate map is CP and the correlation witness is silent".into())
        }
    }
}

pub fn cmd_divisibility(cfg: &Config, t1_flag: Option<f64>) -> CliResult<DivisibilityReport> {
    let gate = cfg.gate()?;
    let (psi, label) = cfg.input_state(2)?;
    let (_, rho2) = product_marginals(&psi, cfg.tolerances.product)?;
    let rho_in = two_qubit_density(&psi);
    let t1 = t1_flag
        .or(cfg.scenario.t1)
        .ok_or_else(|| CliError::Input("divisibility needs \"t1\" in the scenario or --t1".into()))?;
    let (t0, t_star) = (cfg.grid.t_start(), cfg.grid.t_end());
    if !(t1.is_finite() && t0 < t1 && t1 < t_star) {
        return Err(CliError::Input(format!(
            "t1 = {t1} must lie strictly inside the grid interval ({t0}, {t_star}); the sub-interval [t1, t_end] is empty otherwise"
        )));
    }
    let k = gate.generator();
    let tol = &cfg.tolerances;
    let cert = certificates(k, &rho_in, &rho2, t1 - t0, t_star - t0, tol.cp).map_err(CliError::internal)?;
    let choi = maps::choi(&cert.intermediate.candidate).map_err(CliError::internal)?;
    let (v, reason) = verdict(cert.intermediate.divisibility, cert.witness.distance, tol.witness);
    let mut scan = Vec::new();
    for m in 1..cfg.grid.steps() {
        let t = cfg.grid.point(m);
        let c = certificates(k, &rho_in, &rho2, t - t0, t_star - t0, tol.cp).map_err(CliError::internal)?;
        scan.push(ScanPoint {
            t1: t,
            min_choi_eigenvalue: c.intermediate.min_choi_eigenvalue,
            divisibility: c.intermediate.divisibility,
            witness_distance: c.witness.distance,
        });
    }
    Ok(DivisibilityReport {
        header: cfg.header("divisibility"),
        gate: gate.name().to_string(),
        input: label,
        t0,
        t1,
        t_star,
        intermediate: IntermediateSummary {
            choi_eigenvalues: choi.eigenvalues,
            min_choi_eigenvalue: cert.intermediate.min_choi_eigenvalue,
            cp: cert.intermediate.cp,
            rank: cert.intermediate.rank,
            divisibility: cert.intermediate.divisibility,
            superoperator: matrix_pairs(cert.intermediate.candidate.superoperator()),
        },
        witness: WitnessSummary {
            distance: cert.witness.distance,
            distance_qubit2: cert.witness.distance_qubit2,
            correlation_at_t1: cert.witness.correlation_at_t1,
        },
        verdict: v,
        reason,
        scan,
    })
}

// ---------------------------------------------------------------------------
// qft

#[derive(Clone, Debug, Serialize)]
pub struct QftReport {
    #[serde(flatten)]
    pub header: Header,
    pub n_qubits: usize,
    pub input: String,
    pub circuit: CircuitFile,
    /// Max-abs distance of the circuit unitary from the DFT matrix; absent for circuit files.
    pub dft_residual: Option<f64>,
    pub audit: BlockAudit,
    pub all_separable: bool,
    pub output_amplitudes: Vec<[f64; 2]>,
}

pub const AUDIT_CSV_HEADER: &str = "position,gate,qubits,measure,input,output,separable";

pub fn audit_csv(audit: &BlockAudit) -> String {
    let mut out = String::from(AUDIT_CSV_HEADER);
    out.push('\n');
    for r in &audit.records {
        let qubits = r.qubits.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(";");
        let measure = match r.measure {
            circuits::AuditMeasure::PairNegativity => "pair_negativity",
            circuits::AuditMeasure::QubitVsRest => "qubit_vs_rest",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.position,
            r.gate,
            qubits,
            measure,
            report::fmt_num(r.input),
            report::fmt_num(r.output),
            r.separable
        ));
    }
    out
}

/// Where the circuit of a `qft` run comes from.
#[derive(Clone, Debug)]
pub enum CircuitSource {
    Qft(Option<usize>),
    File(PathBuf),
}

pub fn cmd_qft(
    cfg: &Config,
    source: &CircuitSource,
    input: Option<&str>,
) -> CliResult<(QftReport, String)> {
    let (circ, is_qft): (Circuit, bool) = match source {
        CircuitSource::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read circuit {}: {e}", path.display())))?;
            let circ = CircuitFile::parse(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            (circ, false)
        }
        CircuitSource::Qft(n) => {
            let n = n
                .or_else(|| {
                    let spec = cfg.scenario.input.as_ref()?;
                    spec.qubits
                        .as_ref()
                        .map(Vec::len)
                        .or_else(|| spec.amplitudes.as_ref().map(|a| a.len().trailing_zeros() as usize))
                })
                .ok_or_else(|| CliError::Input("qft needs --qubits or a scenario input".into()))?;
            if !(circuits::MIN_QUBITS..=states::MAX_QUBITS).contains(&n) {
                return Err(CliError::Input(format!(
                    "qft register size {n} is out of range {}..={}",
                    circuits::MIN_QUBITS,
                    states::MAX_QUBITS
                )));
            }
            (circuits::build_qft(n).map_err(CliError::input)?, true)
        }
    };
    let n = circ.n_qubits();
    let (psi, label) = match (input, &cfg.scenario.input) {
        (Some(text), _) => parse_register_input(text, n)?,
        (None, Some(spec)) => parse_input_spec(spec, n, cfg.tolerances.normalization)?,
        (None, None) => parse_register_input(&"0".repeat(n), n)?,
    };
    let dft_residual =
        is_qft.then(|| (&circuits::circuit_unitary(&circ) - &circuits::dft_matrix(n)).max_abs());
    let (out, audit) = circuits::run_circuit_with_tol(&circ, &psi, cfg.tolerances.audit).map_err(CliError::internal)?;
    let csv = audit_csv(&audit);
    Ok((
        QftReport {
            header: cfg.header("qft"),
            n_qubits: n,
            input: label,
            circuit: CircuitFile::from_circuit(&circ),
            dft_residual,
            all_separable: audit.all_separable(),
            audit,
            output_amplitudes: vector_pairs(out.amplitudes()),
        },
        csv,
    ))
}

// ---------------------------------------------------------------------------
// Driver

/// Rendered outputs of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub json: String,
    pub csv: Option<String>,
}

/// Runs a parsed command line; `tol_override_env` is the value of `UDMLAB_TOL_OVERRIDE`.
pub fn execute(cli: &Cli, tol_override_env: Option<String>) -> CliResult<Output> {
    let scenario = match &cli.common.scenario {
        Some(path) => load_scenario(path)?,
        None => Scenario::default(),
    };
    let cfg = Config::resolve(scenario, &cli.common, tol_override_env)?;
    let (json, csv) = match &cli.command {
        Command::AnalyzeGate => (report::to_json(&cmd_analyze_gate(&cfg)?), None),
        Command::Trajectory { .. } => {
            let (r, csv) = cmd_trajectory(&cfg)?;
            (report::to_json(&r), Some(csv))
        }
        Command::Map => (report::to_json(&cmd_map(&cfg)?), None),
        Command::Divisibility { t1 } => (report::to_json(&cmd_divisibility(&cfg, *t1)?), None),
        Command::Qft { qubits, input, circuit, emit_circuit, .. } => {
            let source = match circuit {
                Some(path) => CircuitSource::File(path.clone()),
                None => CircuitSource::Qft(*qubits),
            };
            let (r, csv) = cmd_qft(&cfg, &source, input.as_deref())?;
            if let Some(path) = emit_circuit {
                // full precision so the file reproduces the run exactly
                let text = serde_json::to_string_pretty(&r.circuit).map_err(CliError::internal)? + "\n";
                write_file(path, &text)?;
            }
            (report::to_json(&r), Some(csv))
        }
    };
    Ok(Output { json, csv })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn csv_path(cli: &Cli) -> Option<PathBuf> {
    let explicit = match &cli.command {
        Command::Trajectory { csv } | Command::Qft { csv, .. } => csv.clone(),
        _ => None,
    };
    explicit.or_else(|| cli.common.out.as_ref().map(|p| p.with_extension("csv")))
}

/// Runs the command and writes its outputs; returns the process exit code.
pub fn run(cli: &Cli, tol_override_env: Option<String>) -> i32 {
    let result = execute(cli, tol_override_env).and_then(|out| {
        match &cli.common.out {
            Some(path) => write_file(path, &out.json)?,
            None => print!("{}", out.json),
        }
        if let (Some(csv), Some(path)) = (&out.csv, csv_path(cli)) {
            write_file(&path, csv)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("udmlab {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

/// Entry point of the binary: parses `args`, runs, and never panics.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    let env = std::env::var(TOL_OVERRIDE_ENV).ok();
    match std::panic::catch_unwind(|| run(&cli, env)) {
        Ok(code) => code,
        Err(_) => {
            eprintln!("udmlab: internal invariant violation");
            EXIT_INTERNAL
        }
    }
}
