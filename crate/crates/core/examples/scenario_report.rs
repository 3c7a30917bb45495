//! Runs the command-line analyses in-process on a scenario file.
//!
//! cargo run --example scenario_report -- crates/core/scenarios/cphase_pi.json

use udmlab::cli::{cmd_divisibility, cmd_map, load_scenario, CommonArgs, Config};
use udmlab::report::to_json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/cphase_pi.json").into());
    let args = CommonArgs { both_qubits: true, ..Default::default() };
    let cfg = Config::resolve(load_scenario(path.as_ref())?, &args, None)?;
    let map = cmd_map(&cfg)?;
    println!("map distance between the two qubits: {:?}", map.superoperator_distance);
    let div = cmd_divisibility(&cfg, None)?;
    let mut summary = serde_json::to_value(&div)?;
    summary.as_object_mut().map(|o| o.remove("scan"));
    print!("{}", to_json(&summary));
    Ok(())
}
