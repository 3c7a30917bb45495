//! One gate, two qubits, two different reduced maps.
//!
//! cargo run --example local_pair_maps

use std::f64::consts::PI;

use udmlab::gates::c_phase;
use udmlab::linalg::frobenius_distance;
use udmlab::maps::{apply_map, local_pair_maps};
use udmlab::report::fmt_num;
use udmlab::{Result, Stabilizer};

fn main() -> Result<()> {
    let gate = c_phase(PI);
    let (rho1, rho2) = (Stabilizer::Plus.density(), Stabilizer::One.density());
    let (e1, e2) = local_pair_maps(gate.generator(), &rho1, &rho2, gate.duration())?;
    println!("map of qubit 1 (environment |1>):\n{:?}", e1.superoperator());
    println!("map of qubit 2 (environment |+>):\n{:?}", e2.superoperator());
    println!(
        "superoperator distance {}",
        fmt_num(frobenius_distance(e1.superoperator(), e2.superoperator()))
    );

    let joint = gate.apply(&rho1.tensor(&rho2))?;
    let d1 = apply_map(&e1, &rho1)?.trace_distance(&joint.partial_trace(1)?)?;
    let d2 = apply_map(&e2, &rho2)?.trace_distance(&joint.partial_trace(2)?)?;
    println!("each map reproduces its qubit: {:.1e}, {:.1e}", d1, d2);
    Ok(())
}
