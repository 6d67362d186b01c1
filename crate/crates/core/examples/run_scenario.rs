//! Runs a shipped scenario into a temporary directory and lists the output
//! tree.

use roughsde::runner::{run_scenario, ScenarioConfig};

fn main() -> roughsde::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "elliptic_energy".into());
    let path = format!("{}/scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let cfg = ScenarioConfig::load(path.as_ref())?;
    let dir = tempfile::tempdir()?;
    let m = run_scenario(&cfg, dir.path())?;
    println!("{} (hash {})", m.scenario, &m.input_hash[..12]);
    for c in &m.checks {
        println!("  {} {}", if c.passed { "PASS" } else { "FAIL" }, c.check);
    }
    for f in &m.files {
        println!("  {f}");
    }
    Ok(())
}
