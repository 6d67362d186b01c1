//! Scenario configuration files and their validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::{Params, PRESETS};
use crate::fpe::TransportFlux;
use crate::grid::Grid;
use crate::norms::Part;
use crate::sde::{InitialSpec, SelectionRules};

/// Scenario names with a one-line description each.
pub const SCENARIOS: [(&str, &str); 7] = [
    (
        "thm_multidim_convergence",
        "Cauchy table and Q sweep for a mollified family in two dimensions",
    ),
    (
        "thm_1d_convergence",
        "Cauchy table, weighted Q sweep and uniqueness blocks in one dimension",
    ),
    ("elliptic_energy", "Fokker-Planck solve with the L^alpha energy monitor"),
    (
        "stationary_1d",
        "Fokker-Planck solve, stationary bound and Monte Carlo cross-check",
    ),
    (
        "kinetic_langevin",
        "phase-space kinetic solve with the maximum principle check",
    ),
    ("ae_uniqueness_map", "per-initial-point gap between regularized builds"),
    (
        "norm_audit",
        "the four weighted norms plus semicontinuity and Hoelder checks",
    ),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub bounds: Vec<(f64, f64)>,
    pub cells: Vec<usize>,
    #[serde(default)]
    pub periodic: Vec<bool>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        let periodic = if self.periodic.is_empty() {
            vec![false; self.bounds.len()]
        } else {
            self.periodic.clone()
        };
        Grid::make(self.bounds.len(), &self.bounds, &self.cells, &periodic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    pub alphas: Vec<f64>,
    pub p: f64,
    pub q: f64,
}

impl Default for EnergySpec {
    fn default() -> Self {
        EnergySpec {
            alphas: vec![2.0, 4.0],
            p: 2.0,
            q: 4.0,
        }
    }
}

/// Tensor grid of initial points, `count` per axis, cell-centred in
/// `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: usize,
}

impl PointsSpec {
    pub fn flatten(&self) -> Vec<f64> {
        let axis = |k: usize| -> Vec<f64> {
            (0..self.count)
                .map(|i| self.lo[k] + (self.hi[k] - self.lo[k]) * (i as f64 + 0.5) / self.count as f64)
                .collect()
        };
        match self.lo.len() {
            1 => axis(0),
            _ => {
                let (xs, ys) = (axis(0), axis(1));
                xs.iter().flat_map(|x| ys.iter().flat_map(move |y| [*x, *y])).collect()
            }
        }
    }
}

fn default_paths() -> usize {
    1000
}
fn default_one() -> usize {
    1
}
fn default_p() -> f64 {
    2.0
}
fn default_z() -> f64 {
    2.0
}
fn default_flux() -> TransportFlux {
    TransportFlux::Upwind
}
fn default_part() -> Part {
    Part::Diffusion
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub preset: String,
    #[serde(default)]
    pub params: Params,
    pub grid: GridSpec,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    pub horizon: f64,
    /// Time step of the scenario's solver (SDE or PDE).
    pub dt: f64,
    /// SDE step for scenarios that also run a PDE; defaults to `dt`.
    #[serde(default)]
    pub sde_dt: Option<f64>,
    #[serde(default = "default_one")]
    pub record_every: usize,
    /// Mollification scales, coarse to fine.
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub rules: SelectionRules,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Standard errors allowed in Monte Carlo comparisons.
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub energy: Option<EnergySpec>,
    #[serde(default)]
    pub stationary_c: Option<f64>,
    #[serde(default)]
    pub law_l1_tol: Option<f64>,
    #[serde(default)]
    pub points: Option<PointsSpec>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_flux")]
    pub flux: TransportFlux,
    #[serde(default = "default_part")]
    pub part: Part,
    #[serde(default)]
    pub smoothing: Vec<f64>,
    #[serde(default = "default_one")]
    pub snapshot_stride: usize,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("parse: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn sde_dt(&self) -> f64 {
        self.sde_dt.unwrap_or(self.dt)
    }

    pub fn energy(&self) -> EnergySpec {
        self.energy.clone().unwrap_or_default()
    }

    /// SHA-256 of the canonical JSON of the config (output directory
    /// excluded) and the crate version, hex encoded.
    pub fn input_hash(&self) -> Result<String> {
        let mut echo = self.clone();
        echo.output = None;
        let mut h = Sha256::new();
        h.update(serde_json::to_string(&echo)?.as_bytes());
        h.update(b"\0");
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut bad = |field: &str, msg: String| errs.push(format!("{field}: {msg}"));
        let scenario = self.scenario.as_str();
        if !SCENARIOS.iter().any(|(s, _)| *s == scenario) {
            bad("scenario", format!("unknown scenario '{scenario}'"));
        }
        if !PRESETS.contains(&self.preset.as_str()) {
            bad("preset", format!("unknown preset '{}'", self.preset));
        }
        let grid = match self.grid.build() {
            Ok(g) => {
                if !self.grid.periodic.is_empty() && self.grid.periodic.len() != g.dim() {
                    bad("grid.periodic", "one flag per axis".into());
                }
                Some(g)
            }
            Err(e) => {
                bad("grid", e.to_string());
                None
            }
        };
        let d = grid.as_ref().map(Grid::dim).unwrap_or(0);
        if let (Some(g), true) = (&grid, PRESETS.contains(&self.preset.as_str())) {
            if let Err(e) = crate::fields::preset_field(&self.preset, &self.params, g) {
                bad("params", e.to_string());
            }
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            bad("horizon", format!("must be positive, got {}", self.horizon));
        }
        for (name, v) in [("dt", Some(self.dt)), ("sde_dt", self.sde_dt)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    bad(name, format!("must be positive, got {v}"));
                } else if self.horizon > 0.0 {
                    let steps = self.horizon / v;
                    if (steps - steps.round()).abs() > 1e-9 * steps {
                        bad(name, format!("horizon {} is not a multiple of {v}", self.horizon));
                    }
                }
            }
        }
        if self.n_paths == 0 {
            bad("n_paths", "must be positive".into());
        }
        if self.record_every == 0 {
            bad("record_every", "must be positive".into());
        }
        if self.snapshot_stride == 0 {
            bad("snapshot_stride", "must be positive".into());
        }
        if self.deltas.iter().any(|v| !(*v > 0.0)) {
            bad("deltas", "every scale must be positive".into());
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            bad("deltas", "scales must decrease strictly".into());
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            bad("epsilons", "every epsilon must lie in (0, 1)".into());
        }
        if !(self.p > 1.0) {
            bad("p", format!("must exceed 1, got {}", self.p));
        }
        if !(self.z > 0.0) {
            bad("z", format!("must be positive, got {}", self.z));
        }
        if let Some(init) = &self.initial {
            if init.dim() != d && !matches!(init, InitialSpec::Samples { .. }) {
                bad(
                    "initial",
                    format!("dimension {} differs from the grid's {d}", init.dim()),
                );
            }
        }
        let need_d = |want: usize, errs: &mut Vec<String>| {
            if d != 0 && d != want {
                errs.push(format!(
                    "grid: scenario {scenario} needs a {want}-dimensional grid, got {d}"
                ));
            }
        };
        match scenario {
            "thm_multidim_convergence" | "thm_1d_convergence" => {
                need_d(if scenario == "thm_1d_convergence" { 1 } else { 2 }, &mut errs);
                if self.deltas.len() < 4 {
                    errs.push(format!("deltas: need at least 4 scales, got {}", self.deltas.len()));
                }
                if self.epsilons.is_empty() {
                    errs.push("epsilons: need at least one value".into());
                }
            }
            "elliptic_energy" | "stationary_1d" => {
                need_d(1, &mut errs);
                if scenario == "elliptic_energy" {
                    let e = self.energy();
                    if !(e.p > d as f64) {
                        errs.push(format!("energy.p: must exceed the dimension {d}, got {}", e.p));
                    } else {
                        let theta = 1.0 - d as f64 / e.p;
                        if (e.q - 2.0 / theta).abs() > 1e-9 * e.q.abs().max(1.0) {
                            errs.push(format!("energy.q: must equal 2/theta = {}", 2.0 / theta));
                        }
                    }
                    if e.alphas.is_empty() || e.alphas.iter().any(|a| !(*a >= 1.0)) {
                        errs.push("energy.alphas: need exponents >= 1".into());
                    }
                }
                if let Some(c) = self.stationary_c {
                    if !(c > 0.0) {
                        errs.push(format!("stationary_c: must be positive, got {c}"));
                    }
                }
                if matches!(self.initial, Some(InitialSpec::Samples { .. })) {
                    errs.push("initial: density scenarios need a point, gaussian or uniform law".into());
                }
            }
            "kinetic_langevin" => {
                need_d(2, &mut errs);
                if matches!(self.initial, Some(InitialSpec::Samples { .. })) {
                    errs.push("initial: density scenarios need a point, gaussian or uniform law".into());
                }
            }
            "ae_uniqueness_map" => {
                if self.deltas.len() < 2 {
                    errs.push("deltas: need at least 2 scales".into());
                }
                if self.epsilons.len() != 1 {
                    errs.push("epsilons: need exactly one value".into());
                }
                match &self.points {
                    None => errs.push("points: required".into()),
                    Some(p) => {
                        if p.lo.len() != d || p.hi.len() != d || p.count == 0 {
                            errs.push(format!("points: need {d}-dimensional bounds and a positive count"));
                        }
                    }
                }
            }
            "norm_audit" => {
                need_d(1, &mut errs);
                if let Some(g) = &grid {
                    if !(g.axis(0).periodic && g.len().is_power_of_two()) {
                        errs.push("grid: norm_audit needs a periodic grid with a power-of-two cell count".into());
                    }
                }
                if self.deltas.len() < 4 {
                    errs.push(format!("deltas: need at least 4 scales, got {}", self.deltas.len()));
                }
                if !self.smoothing.is_empty() && self.smoothing.len() < 4 {
                    errs.push("smoothing: need at least 4 scales when given".into());
                }
            }
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Names of every scenario, in listing order.
pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|(s, _)| *s).collect()
}

/// Descriptions keyed by scenario name.
pub fn scenario_table() -> BTreeMap<&'static str, &'static str> {
    SCENARIOS.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "scenario": "elliptic_energy",
            "preset": "heat",
            "grid": {"bounds": [[-8.0, 8.0]], "cells": [256]},
            "horizon": 0.5,
            "dt": 0.0009765625
        })
    }

    #[test]
    fn minimal_config_validates() {
        let c: ScenarioConfig = serde_json::from_value(base()).unwrap();
        c.validate().unwrap();
        assert_eq!(c.n_paths, 1000);
        assert_eq!(c.input_hash().unwrap().len(), 64);
    }

    #[test]
    fn every_offending_field_is_listed() {
        let mut v = base();
        v["scenario"] = "nope".into();
        v["preset"] = "mystery".into();
        v["horizon"] = (-1.0).into();
        v["n_paths"] = 0.into();
        let c: ScenarioConfig = serde_json::from_value(v).unwrap();
        match c.validate() {
            Err(Error::Config(list)) => {
                for field in ["scenario", "preset", "horizon", "n_paths"] {
                    assert!(
                        list.iter().any(|e| e.starts_with(field)),
                        "{field} missing from {list:?}"
                    );
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn energy_exponent_at_dimension_rejected() {
        let mut v = base();
        v["energy"] = serde_json::json!({"alphas": [2.0], "p": 1.0, "q": 2.0});
        let c: ScenarioConfig = serde_json::from_value(v).unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("energy.p"), "{err}");
    }

    #[test]
    fn hash_ignores_output_and_tracks_seed() {
        let a: ScenarioConfig = serde_json::from_value(base()).unwrap();
        let mut b = a.clone();
        b.output = Some("elsewhere".into());
        assert_eq!(a.input_hash().unwrap(), b.input_hash().unwrap());
        b.seed = 9;
        assert_ne!(a.input_hash().unwrap(), b.input_hash().unwrap());
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v = base();
        v["bogus"] = 1.into();
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn points_tensor_grid() {
        let p = PointsSpec {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 2.0],
            count: 2,
        };
        assert_eq!(p.flatten(), vec![0.25, 0.5, 0.25, 1.5, 0.75, 0.5, 0.75, 1.5]);
    }
}
