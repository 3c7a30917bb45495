//! Multi-qubit circuits of one- and two-qubit gates, the QFT layout, and per-gate
//! separability audits.
//!
//! Qubits are labelled `1..=n`, qubit 1 being the most significant tensor factor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{self, Gate};
use crate::linalg::{c, ComplexMatrix, C64, ZERO};
use crate::states::{negativity, PureState, MAX_QUBITS};

pub const MIN_QUBITS: usize = 2;
/// Entanglement above this marks an audit record as entangled.
pub const AUDIT_TOL: f64 = 1e-9;

/// Gate vocabulary of circuit files.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    H,
    X,
    CPhase(f64),
    Swap,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::H | GateKind::X => 1,
            GateKind::CPhase(_) | GateKind::Swap => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::CPhase(_) => "CPHASE",
            GateKind::Swap => "SWAP",
        }
    }

    pub fn gate(&self) -> Gate {
        match *self {
            GateKind::H => gates::hadamard(),
            GateKind::X => gates::x(),
            GateKind::CPhase(phi) => gates::c_phase(phi),
            GateKind::Swap => gates::swap(),
        }
    }
}

/// A gate placed on specific qubits at a sequence position.
#[derive(Clone, Debug)]
pub struct PlacedGate {
    pub kind: GateKind,
    /// 1-based labels; for `CPHASE` the first is the control.
    pub qubits: Vec<usize>,
    pub position: usize,
    gate: Gate,
}

impl PlacedGate {
    pub fn gate(&self) -> &Gate {
        &self.gate
    }
}

#[derive(Clone, Debug)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<PlacedGate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if !(MIN_QUBITS..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::InvalidArgument(format!(
                "circuit size must be in {MIN_QUBITS}..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        Ok(Self { n_qubits, gates: Vec::new() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[PlacedGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, kind: GateKind, qubits: &[usize]) -> Result<&mut Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidArgument(format!(
                "{} acts on {} qubit(s), got {:?}",
                kind.name(),
                kind.arity(),
                qubits
            )));
        }
        if let Some(&q) = qubits.iter().find(|&&q| q == 0 || q > self.n_qubits) {
            return Err(Error::InvalidArgument(format!(
                "qubit {q} out of range 1..={}",
                self.n_qubits
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidArgument(format!(
                "{} needs two distinct qubits, got {:?}",
                kind.name(),
                qubits
            )));
        }
        if let GateKind::CPhase(phi) = kind {
            if !phi.is_finite() {
                return Err(Error::InvalidArgument("CPHASE angle must be finite".into()));
            }
        }
        let position = self.gates.len();
        self.gates.push(PlacedGate { kind, qubits: qubits.to_vec(), position, gate: kind.gate() });
        Ok(self)
    }

    pub fn count(&self, name: &str) -> usize {
        self.gates.iter().filter(|g| g.kind.name() == name).count()
    }
}

/// Applies a one- or two-qubit unitary to the listed qubits of a state vector in place.
fn apply_local(amps: &mut [C64], n: usize, u: &ComplexMatrix, qubits: &[usize]) {
    let shifts: Vec<usize> = qubits.iter().map(|&q| n - q).collect();
    let mask: usize = shifts.iter().map(|s| 1 << s).sum();
    let k = qubits.len();
    let local_dim = 1 << k;
    let mut offsets = vec![0usize; local_dim];
    for (local, off) in offsets.iter_mut().enumerate() {
        for (pos, s) in shifts.iter().enumerate() {
            if (local >> (k - 1 - pos)) & 1 == 1 {
                *off |= 1 << s;
            }
        }
    }
    let mut buf = vec![ZERO; local_dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (b, off) in buf.iter_mut().zip(&offsets) {
            *b = amps[base | off];
        }
        for (row, off) in offsets.iter().enumerate() {
            amps[base | off] = (0..local_dim).map(|col| u[(row, col)] * buf[col]).sum();
        }
    }
}

/// Standard QFT: Hadamard on each qubit `j` followed by `C_{pi / 2^(k-j)}` from every later
/// qubit `k`, then SWAPs that reverse the qubit order.
pub fn build_qft(n: usize) -> Result<Circuit> {
    let mut circ = Circuit::new(n)?;
    for j in 1..=n {
        circ.push(GateKind::H, &[j])?;
        for k in j + 1..=n {
            circ.push(GateKind::CPhase(PI / f64::powi(2.0, (k - j) as i32)), &[k, j])?;
        }
    }
    for i in 1..=n / 2 {
        circ.push(GateKind::Swap, &[i, n + 1 - i])?;
    }
    Ok(circ)
}

/// `DFT[j][k] = e^{2 pi i jk / 2^n} / 2^(n/2)`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let norm = 1.0 / (dim as f64).sqrt();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        for k in 0..dim {
            let angle = 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
            m[(j, k)] = c(angle.cos() * norm, angle.sin() * norm);
        }
    }
    m
}

/// Ordered product of all placed gates, embedded in the full register.
pub fn circuit_unitary(circ: &Circuit) -> ComplexMatrix {
    let n = circ.n_qubits;
    let dim = 1 << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut amps = vec![ZERO; dim];
        amps[col] = c(1.0, 0.0);
        for g in &circ.gates {
            apply_local(&mut amps, n, g.gate.unitary(), &g.qubits);
        }
        for (row, a) in amps.into_iter().enumerate() {
            out[(row, col)] = a;
        }
    }
    out
}

/// How entanglement was measured for an audit record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMeasure {
    /// Negativity of the reduced state of the two touched qubits.
    PairNegativity,
    /// Smaller Schmidt weight across the cut {touched qubit} | {rest of the register}.
    QubitVsRest,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRecord {
    pub position: usize,
    pub gate: String,
    pub qubits: Vec<usize>,
    pub measure: AuditMeasure,
    pub input: f64,
    pub output: f64,
    /// `true` when both input and output are at or below the audit tolerance.
    pub separable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockAudit {
    pub tol: f64,
    pub records: Vec<AuditRecord>,
}

impl BlockAudit {
    pub fn all_separable(&self) -> bool {
        self.records.iter().all(|r| r.separable)
    }
}

fn audit_value(state: &PureState, qubits: &[usize]) -> Result<(AuditMeasure, f64)> {
    if qubits.len() == 2 {
        Ok((AuditMeasure::PairNegativity, negativity(&state.reduced(qubits)?)?))
    } else {
        Ok((AuditMeasure::QubitVsRest, state.qubit_vs_rest_weight(qubits[0])?))
    }
}

/// Runs the circuit gate by gate, auditing entanglement around every gate at `tol`.
pub fn run_circuit_with_tol(
    circ: &Circuit,
    input: &PureState,
    tol: f64,
) -> Result<(PureState, BlockAudit)> {
    if input.n_qubits() != circ.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: format!("{}-qubit input", circ.n_qubits),
            got: format!("{}-qubit input", input.n_qubits()),
        });
    }
    let n = circ.n_qubits;
    let mut state = input.clone();
    let mut records = Vec::with_capacity(circ.len());
    for g in &circ.gates {
        let (measure, before) = audit_value(&state, &g.qubits)?;
        let mut amps = state.amplitudes().to_vec();
        apply_local(&mut amps, n, g.gate.unitary(), &g.qubits);
        state = PureState::normalized(amps)?;
        let (_, after) = audit_value(&state, &g.qubits)?;
        records.push(AuditRecord {
            position: g.position,
            gate: g.kind.name().to_string(),
            qubits: g.qubits.clone(),
            measure,
            input: before,
            output: after,
            separable: before <= tol && after <= tol,
        });
    }
    Ok((state, BlockAudit { tol, records }))
}

pub fn run_circuit(circ: &Circuit, input: &PureState) -> Result<(PureState, BlockAudit)> {
    run_circuit_with_tol(circ, input, AUDIT_TOL)
}

/// On-disk circuit description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub n_qubits: usize,
    pub gates: Vec<GateEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateEntry {
    pub name: String,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

impl CircuitFile {
    pub fn from_circuit(circ: &Circuit) -> Self {
        CircuitFile {
            n_qubits: circ.n_qubits,
            gates: circ
                .gates
                .iter()
                .map(|g| GateEntry {
                    name: g.kind.name().to_string(),
                    qubits: g.qubits.clone(),
                    phi: match g.kind {
                        GateKind::CPhase(phi) => Some(phi),
                        _ => None,
                    },
                })
                .collect(),
        }
    }

    pub fn to_circuit(&self) -> Result<Circuit> {
        let mut circ = Circuit::new(self.n_qubits)?;
        for (idx, e) in self.gates.iter().enumerate() {
            let kind = match (e.name.as_str(), e.phi) {
                ("H", None) => GateKind::H,
                ("X", None) => GateKind::X,
                ("SWAP", None) => GateKind::Swap,
                ("CPHASE", Some(phi)) => GateKind::CPhase(phi),
                ("CPHASE", None) => {
                    return Err(Error::InvalidArgument(format!("gate {idx}: CPHASE needs \"phi\"")))
                }
                ("H" | "X" | "SWAP", Some(_)) => {
                    return Err(Error::InvalidArgument(format!(
                        "gate {idx}: {} takes no \"phi\"",
                        e.name
                    )))
                }
                (other, _) => {
                    return Err(Error::InvalidArgument(format!(
                        "gate {idx}: unknown gate {other:?}; expected H, X, CPHASE or SWAP"
                    )))
                }
            };
            circ.push(kind, &e.qubits)
                .map_err(|err| Error::InvalidArgument(format!("gate {idx}: {err}")))?;
        }
        Ok(circ)
    }

    pub fn parse(text: &str) -> Result<Circuit> {
        let file: CircuitFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("circuit file: {e}")))?;
        file.to_circuit()
    }
}
