//! Scenario configs, the fixed scenario graphs, and the output tree.

pub mod config;
pub mod output;
pub mod scenarios;

pub use config::{scenario_names, EnergySpec, GridSpec, PointsSpec, ScenarioConfig, SCENARIOS};
pub use output::{CheckStatus, Manifest, Sink};
pub use scenarios::run_scenario;

/// The only environment override: the output directory.
pub const OUT_ENV: &str = "ROUGHSDE_OUT";

/// Output directory: explicit choice, then `ROUGHSDE_OUT`, then the config's
/// `output`, then `out/<scenario>`.
pub fn resolve_output(explicit: Option<&std::path::Path>, config: &ScenarioConfig) -> std::path::PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV) {
        return p.into();
    }
    config
        .output
        .clone()
        .unwrap_or_else(|| std::path::Path::new("out").join(&config.scenario))
}
