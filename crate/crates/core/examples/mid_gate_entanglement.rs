//! Follows the joint state through a C-phase gate and prints its entanglement profile.
//!
//! cargo run --example mid_gate_entanglement

use std::f64::consts::PI;

use udmlab::dynamics::{entanglement_profile, evolve_trajectory, find_entangled_instant, TimeGrid};
use udmlab::gates::c_phase;
use udmlab::report::fmt_num;
use udmlab::{Result, Stabilizer};

fn main() -> Result<()> {
    let gate = c_phase(PI);
    let grid = TimeGrid::new(0.0, gate.duration(), 10)?;
    for (a, b) in [(Stabilizer::Plus, Stabilizer::Plus), (Stabilizer::Zero, Stabilizer::One)] {
        let rho = a.density().tensor(&b.density());
        let traj = evolve_trajectory(gate.generator(), &rho, &grid)?;
        println!("input {a}{b}");
        println!("{:>6} {:>18} {:>18}", "t", "negativity", "tau");
        for p in entanglement_profile(&traj)? {
            let tau = p.tau.map(fmt_num).unwrap_or_else(|| "-".into());
            println!("{:>6} {:>18} {:>18}", fmt_num(p.t), fmt_num(p.negativity), tau);
        }
        match find_entangled_instant(&traj, 1e-6)? {
            Some(hit) => println!("first entangled instant t1 = {}\n", fmt_num(hit.t1)),
            None => println!("product state at every grid point\n"),
        }
    }
    Ok(())
}
