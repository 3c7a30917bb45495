//! Divisibility of the reduced dynamics through an intermediate time, and the
//! correlation witness against a state-independent map on the later sub-interval.
//!
//! cargo run --example non_markovianity

use std::f64::consts::PI;

use udmlab::gates::c_phase;
use udmlab::linalg::{kron, paulis, ComplexMatrix};
use udmlab::maps::{induced_map, intermediate_map, udm_witness_subinterval};
use udmlab::report::fmt_num;
use udmlab::{Result, Stabilizer};

fn certificates(label: &str, k: &ComplexMatrix, t1: f64, t_star: f64) -> Result<()> {
    let env = Stabilizer::Plus.density();
    let input = Stabilizer::Plus.density().tensor(&env);
    let inter = intermediate_map(&induced_map(k, &env, t1, 1)?, &induced_map(k, &env, t_star, 1)?)?;
    let w = udm_witness_subinterval(k, &input, t1, t_star)?;
    println!(
        "{label:<10} t1 = {t1:<4} t* = {t_star:<4} min Choi {:>20}  {:<14?}  witness D = {}",
        fmt_num(inter.min_choi_eigenvalue),
        inter.divisibility,
        fmt_num(w.distance)
    );
    Ok(())
}

fn main() -> Result<()> {
    let coupled = c_phase(PI).generator().clone();
    let local = kron(&paulis::z(), &paulis::id2());
    for (t1, t_star) in [(0.5, 1.0), (0.25, 0.75), (0.5, 1.5), (0.5, 2.0)] {
        certificates("C_pi", &coupled, t1, t_star)?;
    }
    certificates("Z (x) 1", &local, 0.5, 1.0)?;
    Ok(())
}
