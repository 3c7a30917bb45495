//! Classifies gates by operator Schmidt rank and recovers their generators.
//!
//! cargo run --example gate_analysis

use std::f64::consts::PI;

use udmlab::gates::{self, Gate};
use udmlab::report::fmt_num;
use udmlab::Result;

fn describe(g: &Gate) -> Result<()> {
    let v = gates::is_entangling(g, gates::SCHMIDT_TOL)?;
    let spectrum: Vec<String> = gates::generator_spectrum(g).into_iter().map(fmt_num).collect();
    println!(
        "{:<16} rank {}  entangling {:<5}  K spectrum [{}]",
        g.name(),
        v.operator_schmidt_rank,
        v.entangling,
        spectrum.join(", ")
    );
    if let Some((a, b, tau)) = gates::find_entangling_input(g, 1e-9)? {
        println!("{:<16} best stabilizer input {a}{b} -> tau = {}", "", fmt_num(tau));
    }
    Ok(())
}

fn main() -> Result<()> {
    for phi in [PI / 4.0, PI / 2.0, PI] {
        describe(&gates::c_phase(phi).with_name(format!("C({})", fmt_num(phi))))?;
    }
    describe(&gates::local_phase(PI / 2.0).with_name("1 (x) phi(pi/2)"))?;
    describe(&gates::swap())?;
    describe(&gates::identity(2)?)?;

    // X realized as e^{-iXt} at t = pi/2 matches the Pauli matrix up to a global phase
    let x = gates::x_evolution();
    println!(
        "\nX evolution equals Pauli X up to phase: {}",
        gates::equal_up_to_phase(x.unitary(), &udmlab::linalg::paulis::x(), 1e-10)
    );
    Ok(())
}
