//! Builds the reduced map of qubit 1 under C_pi with the other qubit fixed, then
//! checks complete positivity and extracts a Kraus form.
//!
//! cargo run --example induced_map_kraus

use std::f64::consts::PI;

use udmlab::gates::c_phase;
use udmlab::maps::{apply_map, choi, induced_map, is_cptp, kraus_decompose, CP_TOL};
use udmlab::report::{fmt_num, to_json};
use udmlab::{Result, Stabilizer};

fn main() -> Result<()> {
    let k = c_phase(PI).generator().clone();
    for env in [Stabilizer::One, Stabilizer::Plus] {
        let m = induced_map(&k, &env.density(), 1.0, 1)?;
        let c = choi(&m)?;
        let kraus = kraus_decompose(&c)?;
        println!("environment {env}");
        print!("  CPTP verdict {}", to_json(&is_cptp(&m, CP_TOL)?));
        println!("  Choi eigenvalues {:?}", c.eigenvalues.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>());
        println!("  {} Kraus operators, completeness residual {:.1e}", kraus.len(), kraus.completeness_residual());
        for (w, op) in kraus.weights.iter().zip(&kraus.operators) {
            println!("  weight {} :\n{op:?}", fmt_num(*w));
        }
        let out = apply_map(&m, &Stabilizer::Plus.density())?;
        println!("  |+> goes to a state of purity {}\n", fmt_num(out.purity()));
    }
    Ok(())
}
