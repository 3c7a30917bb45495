//! Builds the QFT, compares it with the DFT matrix and audits every gate for entanglement.
//!
//! cargo run --example qft_audit -- 4

use udmlab::circuits::{build_qft, circuit_unitary, dft_matrix, run_circuit, CircuitFile};
use udmlab::report::{fmt_num, to_json};
use udmlab::{PureState, Result};

fn main() -> Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let circ = build_qft(n)?;
    print!("{}", to_json(&CircuitFile::from_circuit(&circ)));
    let residual = (&circuit_unitary(&circ) - &dft_matrix(n)).max_abs();
    println!("DFT residual {residual:.1e}");

    let mut entangled_inputs = 0;
    for b in 0..1usize << n {
        let (_, audit) = run_circuit(&circ, &PureState::basis(n, b)?)?;
        entangled_inputs += usize::from(!audit.all_separable());
    }
    println!("basis inputs with an entangled audit record: {entangled_inputs}");

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![udmlab::linalg::r(0.0); 1 << n];
    amps[0] = udmlab::linalg::r(s);
    amps[(1 << n) - 1] = udmlab::linalg::r(s);
    let (_, audit) = run_circuit(&circ, &PureState::from_amplitudes(amps)?)?;
    println!("GHZ-like input:");
    for rec in audit.records {
        println!(
            "  #{:<2} {:<6} {:?}  {:?}  {} -> {}  separable {}",
            rec.position, rec.gate, rec.qubits, rec.measure, fmt_num(rec.input), fmt_num(rec.output), rec.separable
        );
    }
    Ok(())
}
