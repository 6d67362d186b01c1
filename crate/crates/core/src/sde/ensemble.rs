//! Euler–Maruyama ensembles driven by a [`BrownianStore`].

use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::brownian::{aggregate, path_rng, BrownianStore};
use crate::error::{param, precondition, Error, Result};
use crate::fields::{CoefficientField, Provenance};
use crate::grid::Grid;
use crate::law::{Estimator, Law};

/// Law of `X₀`. Draws come from the store seed, so ensembles built on the
/// same store with the same spec start from identical points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Point {
        x: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        std: Vec<f64>,
    },
    Uniform {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Flattened `n × d` points; path `p` starts at point `p mod n`.
    Samples {
        points: Vec<f64>,
    },
}

impl InitialSpec {
    pub fn point(x: &[f64]) -> Self {
        InitialSpec::Point { x: x.to_vec() }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialSpec::Point { x } => x.len(),
            InitialSpec::Gaussian { mean, .. } => mean.len(),
            InitialSpec::Uniform { lo, .. } => lo.len(),
            InitialSpec::Samples { .. } => 0,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let ok = match self {
            InitialSpec::Point { x } => x.len() == d && x.iter().all(|v| v.is_finite()),
            InitialSpec::Gaussian { mean, std } => mean.len() == d && std.len() == d && std.iter().all(|s| *s >= 0.0),
            InitialSpec::Uniform { lo, hi } => lo.len() == d && hi.len() == d && lo.iter().zip(hi).all(|(a, b)| a < b),
            InitialSpec::Samples { points } => !points.is_empty() && points.len() % d == 0,
        };
        if ok {
            Ok(())
        } else {
            Err(param(
                "initial",
                format!("spec does not describe a {d}-dimensional law"),
            ))
        }
    }

    pub(crate) fn draw(&self, seed: u64, path: usize, d: usize) -> Vec<f64> {
        match self {
            InitialSpec::Point { x } => x.clone(),
            InitialSpec::Gaussian { mean, std } => {
                let mut rng = path_rng(seed, path, true);
                (0..d)
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        mean[i] + std[i] * z
                    })
                    .collect()
            }
            InitialSpec::Uniform { lo, hi } => {
                let mut rng = path_rng(seed, path, true);
                (0..d)
                    .map(|i| Uniform::new(lo[i], hi[i]).unwrap().sample(&mut rng))
                    .collect()
            }
            InitialSpec::Samples { points } => {
                let n = points.len() / d;
                let k = path % n;
                points[k * d..(k + 1) * d].to_vec()
            }
        }
    }
}

/// Time step, number of steps and recording stride.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, horizon: f64, record_every: usize) -> Result<Self> {
        if !(dt > 0.0) || !(horizon > 0.0) {
            return Err(param("dt", "step and horizon must be positive"));
        }
        let steps = (horizon / dt).round() as usize;
        if steps == 0 || ((steps as f64) * dt - horizon).abs() > 1e-9 * horizon {
            return Err(param("dt", format!("horizon {horizon} is not a multiple of {dt}")));
        }
        if record_every == 0 || !steps.is_multiple_of(record_every) {
            return Err(param("record_every", "must divide the step count"));
        }
        Ok(TimeGrid {
            dt,
            steps,
            record_every,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Recorded times, starting at 0.
    pub fn stamps(&self) -> Vec<f64> {
        (0..=self.steps / self.record_every)
            .map(|k| (k * self.record_every) as f64 * self.dt)
            .collect()
    }
}

/// Stability cap `0.1 / (1 + ‖F‖∞ + ‖σ‖∞²)`.
pub fn dt_cap(field: &CoefficientField) -> f64 {
    let s = field.sup_sigma();
    0.1 / (1.0 + field.sup_drift() + s * s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    provenance: Provenance,
    initial: InitialSpec,
    time: TimeGrid,
    stamps: Vec<f64>,
    n_paths: usize,
    dim: usize,
    /// Stamp-major positions: `k * N * d + p * d + i`.
    data: Vec<f64>,
    fingerprint: u64,
    exits: usize,
}

impl PathEnsemble {
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn initial(&self) -> &InitialSpec {
        &self.initial
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn stamps(&self) -> &[f64] {
        &self.stamps
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All positions at stamp `k`, `N × d`.
    pub fn positions(&self, k: usize) -> &[f64] {
        let w = self.n_paths * self.dim;
        &self.data[k * w..(k + 1) * w]
    }

    pub fn position(&self, k: usize, p: usize) -> &[f64] {
        &self.positions(k)[p * self.dim..(p + 1) * self.dim]
    }

    /// Raw stamp-major path array.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Number of paths that left the grid box at some step.
    pub fn exits(&self) -> usize {
        self.exits
    }

    pub fn exit_fraction(&self) -> f64 {
        self.exits as f64 / self.n_paths as f64
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Errors unless `other` was driven by the same noise on the same
    /// recorded stamps.
    pub fn ensure_coupled(&self, other: &PathEnsemble) -> Result<()> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::Uncoupled("ensembles were driven by different stores".into()));
        }
        if self.n_paths != other.n_paths || self.dim != other.dim {
            return Err(Error::Uncoupled("path counts or dimensions differ".into()));
        }
        if self.stamps != other.stamps {
            return Err(Error::Uncoupled("recorded stamps differ".into()));
        }
        Ok(())
    }

    /// Empirical law of the recorded positions on `grid`.
    pub fn law(&self, grid: &Grid, estimator: Estimator) -> Result<Law> {
        let points: Vec<Vec<f64>> = (0..self.stamps.len()).map(|k| self.positions(k).to_vec()).collect();
        Law::from_samples(grid.clone(), self.stamps.clone(), &points, estimator)
    }

    /// Per-path left Riemann sums of `∫₀^T g(t, X_t) dt` over the recorded
    /// stamps.
    pub fn path_integrals<G>(&self, horizon: f64, g: G) -> Vec<f64>
    where
        G: Fn(usize, &[f64]) -> f64 + Sync,
    {
        let n = self.stamps.len();
        let widths: Vec<f64> = (0..n)
            .map(|k| {
                let end = if k + 1 < n {
                    self.stamps[k + 1].min(horizon)
                } else {
                    horizon
                };
                (end - self.stamps[k].min(horizon)).max(0.0)
            })
            .collect();
        (0..self.n_paths)
            .into_par_iter()
            .map(|p| {
                let mut acc = 0.0;
                for (k, w) in widths.iter().enumerate() {
                    if *w > 0.0 {
                        acc += w * g(k, self.position(k, p));
                    }
                }
                acc
            })
            .collect()
    }
}

/// Paths advanced together by one worker.
const LOCKSTEP: usize = 8;

enum PathOutcome {
    Done { records: Vec<f64>, exited: bool },
    NonFinite { step: usize },
}

/// Euler–Maruyama: `X_{k+1} = X_k + F(t_k, X_k) Δt + σ(t_k, X_k) ΔW_k`, with
/// coefficients interpolated multilinearly from the grid.
pub fn simulate_ensemble(
    field: &CoefficientField,
    initial: &InitialSpec,
    time: &TimeGrid,
    n_paths: usize,
    store: &BrownianStore,
) -> Result<PathEnsemble> {
    let d = field.dim();
    let r = field.noise_dim();
    initial.validate(d)?;
    if n_paths == 0 || n_paths > store.n_paths() {
        return Err(param(
            "n_paths",
            format!("store holds {} paths, asked for {n_paths}", store.n_paths()),
        ));
    }
    if r != store.noise_dim() {
        return Err(precondition("store noise dimension differs from the field's"));
    }
    let ratio = time.dt / store.dt();
    let factor = ratio.round() as usize;
    if factor == 0 || (ratio - factor as f64).abs() > 1e-9 * ratio {
        return Err(precondition(format!(
            "time step {} is not a multiple of the store step {}",
            time.dt,
            store.dt()
        )));
    }
    if time.steps * factor > store.steps() {
        return Err(precondition("time grid runs past the end of the store"));
    }
    let cap = dt_cap(field);
    if time.dt > cap * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            dt: time.dt,
            limit: cap,
        });
    }
    let grid = field.grid();
    let dt = time.dt;
    let n_records = time.steps / time.record_every + 1;
    // Paths advance in lockstep blocks so the interpolation latency of one
    // path overlaps with the others; each path's arithmetic is unchanged.
    let blocks: Vec<Vec<PathOutcome>> = (0..n_paths.div_ceil(LOCKSTEP))
        .into_par_iter()
        .map(|b| {
            let paths: Vec<usize> = (b * LOCKSTEP..((b + 1) * LOCKSTEP).min(n_paths)).collect();
            let dws: Vec<Vec<f64>> = paths
                .iter()
                .map(|&p| {
                    let mut fine = store.increments(p);
                    fine.truncate(time.steps * factor * r);
                    aggregate(&fine, factor, r)
                })
                .collect();
            let mut xs: Vec<Vec<f64>> = paths.iter().map(|&p| initial.draw(store.seed(), p, d)).collect();
            let mut records: Vec<Vec<f64>> = xs
                .iter()
                .map(|x| {
                    let mut rec = Vec::with_capacity(n_records * d);
                    rec.extend_from_slice(x);
                    rec
                })
                .collect();
            let mut exited: Vec<bool> = xs.iter().map(|x| !grid.contains(x)).collect();
            let mut failed: Vec<Option<usize>> = vec![None; paths.len()];
            let mut drift = vec![0.0; d];
            let mut sigma = vec![0.0; d * r];
            for k in 0..time.steps {
                let slice = field.slice_at(k as f64 * dt);
                let record = (k + 1) % time.record_every == 0;
                for (q, x) in xs.iter_mut().enumerate() {
                    if failed[q].is_some() {
                        continue;
                    }
                    field.sample(slice, x, &mut drift, &mut sigma);
                    let inc = &dws[q][k * r..(k + 1) * r];
                    for i in 0..d {
                        let mut noise = 0.0;
                        for j in 0..r {
                            noise += sigma[i * r + j] * inc[j];
                        }
                        x[i] += drift[i] * dt + noise;
                    }
                    if x.iter().any(|v| !v.is_finite()) {
                        failed[q] = Some(k + 1);
                        continue;
                    }
                    exited[q] |= !grid.contains(x);
                    if record {
                        records[q].extend_from_slice(x);
                    }
                }
            }
            records
                .into_iter()
                .zip(exited)
                .zip(failed)
                .map(|((records, exited), failed)| match failed {
                    Some(step) => PathOutcome::NonFinite { step },
                    None => PathOutcome::Done { records, exited },
                })
                .collect()
        })
        .collect();
    let mut data = vec![0.0; n_records * n_paths * d];
    let mut exits = 0;
    for (p, outcome) in blocks.into_iter().flatten().enumerate() {
        match outcome {
            PathOutcome::NonFinite { step } => return Err(Error::NonFinitePath { path: p, step }),
            PathOutcome::Done { records, exited } => {
                exits += usize::from(exited);
                for k in 0..n_records {
                    let dst = k * n_paths * d + p * d;
                    data[dst..dst + d].copy_from_slice(&records[k * d..(k + 1) * d]);
                }
            }
        }
    }
    Ok(PathEnsemble {
        provenance: field.provenance().clone(),
        initial: initial.clone(),
        time: time.clone(),
        stamps: time.stamps(),
        n_paths,
        dim: d,
        data,
        fingerprint: store.fingerprint(),
        exits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{preset_field, Params};
    use crate::report::mean_stderr;

    fn heat(grid: &Grid, a: f64) -> CoefficientField {
        let mut p = Params::new();
        p.insert("a".into(), a);
        preset_field("heat", &p, grid).unwrap()
    }

    #[test]
    fn frozen_paths_stay_put() {
        let g = Grid::line(-4.0, 4.0, 64, false).unwrap();
        let f = heat(&g, 0.0);
        let store = BrownianStore::new(3, 10, 64, 1.0 / 64.0, 1).unwrap();
        let tg = TimeGrid::new(1.0 / 64.0, 1.0, 8).unwrap();
        let ens = simulate_ensemble(&f, &InitialSpec::point(&[0.37]), &tg, 10, &store).unwrap();
        assert!(ens.data().iter().all(|v| *v == 0.37));
        assert_eq!(ens.stamps().len(), 9);
    }

    #[test]
    fn brownian_variance_at_unit_time() {
        let g = Grid::line(-8.0, 8.0, 64, false).unwrap();
        let f = heat(&g, 0.5);
        let n = 20_000;
        let store = BrownianStore::new(17, n, 32, 1.0 / 32.0, 1).unwrap();
        let tg = TimeGrid::new(1.0 / 32.0, 1.0, 32).unwrap();
        let ens = simulate_ensemble(&f, &InitialSpec::point(&[0.0]), &tg, n, &store).unwrap();
        let x1 = ens.positions(1);
        let m = x1.iter().sum::<f64>() / n as f64;
        let var = x1.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() <= 4.0 * (2.0 / n as f64).sqrt(), "{var}");
    }

    #[test]
    fn ou_mean_decays() {
        let g = Grid::line(-6.0, 6.0, 384, false).unwrap();
        let f = preset_field("ou", &Params::new(), &g).unwrap();
        let n = 20_000;
        let dt = 1.0 / 256.0;
        let store = BrownianStore::new(23, n, 256, dt, 1).unwrap();
        let tg = TimeGrid::new(dt, 1.0, 128).unwrap();
        let ens = simulate_ensemble(&f, &InitialSpec::point(&[1.0]), &tg, n, &store).unwrap();
        for (k, t) in [(1usize, 0.5f64), (2, 1.0)] {
            let (m, se) = mean_stderr(ens.positions(k));
            assert!((m - (-t).exp()).abs() <= 3.0 * se, "t={t}: {m} ± {se}");
        }
    }

    #[test]
    fn coarse_store_matches_aggregated_fine_store() {
        let g = Grid::line(-4.0, 4.0, 64, false).unwrap();
        let f = heat(&g, 0.5);
        let fine = BrownianStore::new(8, 50, 64, 1.0 / 64.0, 1).unwrap();
        let coarse = fine.coarsen(2).unwrap();
        let tg = TimeGrid::new(1.0 / 32.0, 1.0, 4).unwrap();
        let init = InitialSpec::Gaussian {
            mean: vec![0.0],
            std: vec![1.0],
        };
        let a = simulate_ensemble(&f, &init, &tg, 50, &fine).unwrap();
        let b = simulate_ensemble(&f, &init, &tg, 50, &coarse).unwrap();
        assert_eq!(a.data(), b.data());
        a.ensure_coupled(&b).unwrap();
    }

    #[test]
    fn step_limits_are_enforced() {
        let g = Grid::line(-4.0, 4.0, 64, false).unwrap();
        let f = preset_field("ou", &Params::new(), &g).unwrap();
        let store = BrownianStore::new(1, 4, 8, 0.125, 1).unwrap();
        let tg = TimeGrid::new(0.125, 1.0, 1).unwrap();
        let err = simulate_ensemble(&f, &InitialSpec::point(&[0.0]), &tg, 4, &store);
        assert!(matches!(err, Err(Error::Cfl { .. })));
        let tg = TimeGrid::new(0.01, 1.0, 1).unwrap();
        assert!(simulate_ensemble(&f, &InitialSpec::point(&[0.0]), &tg, 4, &store).is_err());
    }

    #[test]
    fn path_integral_of_constant() {
        let g = Grid::line(-4.0, 4.0, 64, false).unwrap();
        let f = heat(&g, 0.5);
        let store = BrownianStore::new(2, 5, 32, 1.0 / 32.0, 1).unwrap();
        let tg = TimeGrid::new(1.0 / 32.0, 1.0, 4).unwrap();
        let ens = simulate_ensemble(&f, &InitialSpec::point(&[0.0]), &tg, 5, &store).unwrap();
        for v in ens.path_integrals(1.0, |_, _| 2.0) {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }
}
