//! Per-initial-condition comparison of two regularized builds under shared
//! noise: `N_t^ε(x) = E|X_t^x − X̂_t^x|` next to the diagnostic
//! `M_t^ε(x) = E ∫₀^t [(M|∇σ|)² + |F| + M_{1/ε}|∇F|](s, X_s^x) ds`.

use serde::{Deserialize, Serialize};

use super::brownian::BrownianStore;
use super::ensemble::{simulate_ensemble, InitialSpec, TimeGrid};
use crate::error::{param, Error, Result};
use crate::fields::CoefficientField;
use crate::maxops::{gradient_norm, maximal, maximal_modified, RadiusSchedule};
use crate::report::{mean_stderr, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessMap {
    pub dim: usize,
    /// Flattened initial points.
    pub points: Vec<f64>,
    pub t: f64,
    pub epsilon: f64,
    pub n_eps: Vec<f64>,
    pub n_stderr: Vec<f64>,
    pub m_eps: Vec<f64>,
    pub threshold: f64,
    pub fraction_below: f64,
}

impl UniquenessMap {
    /// Columns `x, N_eps, M_eps` (one-dimensional points) or
    /// `x, v, N_eps, M_eps`.
    pub fn table(&self) -> Table {
        let mut cols: Vec<&str> = if self.dim == 1 { vec!["x"] } else { vec!["x", "v"] };
        cols.extend(["N_eps", "M_eps"]);
        let mut t = Table::new(&cols);
        for (i, x) in self.points.chunks_exact(self.dim).enumerate() {
            let mut row = x.to_vec();
            row.push(self.n_eps[i]);
            row.push(self.m_eps[i]);
            t.push(row);
        }
        t
    }
}

/// Node values of `(M|∇σ|)² + |F| + M_{1/ε}|∇F|` for the slice in force at
/// `t`.
pub fn uniqueness_integrand(field: &CoefficientField, eps: f64, t: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(param("epsilon", format!("must lie in (0, 1), got {eps}")));
    }
    let grid = field.grid();
    let slice = field.slice_at(t);
    let sched = RadiusSchedule::for_grid(grid)?;
    let sig: Vec<&[f64]> = slice.diffusion.iter().map(Vec::as_slice).collect();
    let drift: Vec<&[f64]> = slice.drift.iter().map(Vec::as_slice).collect();
    let m_sigma = maximal(grid, &gradient_norm(grid, &sig), &sched)?;
    let ml = maximal_modified(grid, &gradient_norm(grid, &drift), 1.0 / eps)?;
    Ok((0..grid.len())
        .map(|i| {
            let f: f64 = slice.drift.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt();
            m_sigma[i] * m_sigma[i] + f + ml[i]
        })
        .collect())
}

/// Runs both builds from every point in `points` on the same store and
/// reports the map at the common horizon.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_map(
    build_a: &CoefficientField,
    time_a: &TimeGrid,
    build_b: &CoefficientField,
    time_b: &TimeGrid,
    points: &[f64],
    n_paths: usize,
    store: &BrownianStore,
    eps: f64,
    threshold: f64,
) -> Result<UniquenessMap> {
    let d = build_a.dim();
    if build_b.dim() != d || points.is_empty() || !points.len().is_multiple_of(d) {
        return Err(param("points", "builds and points must share one dimension"));
    }
    let t = time_a.horizon();
    if (time_b.horizon() - t).abs() > 1e-12 {
        return Err(param("time", "builds must share the horizon"));
    }
    let integrand = uniqueness_integrand(build_a, eps, 0.0)?;
    let grid = build_a.grid();
    let mut n_eps = Vec::new();
    let mut n_stderr = Vec::new();
    let mut m_eps = Vec::new();
    for x in points.chunks_exact(d) {
        let init = InitialSpec::point(x);
        let a = simulate_ensemble(build_a, &init, time_a, n_paths, store)?;
        let b = simulate_ensemble(build_b, &init, time_b, n_paths, store)?;
        if a.fingerprint() != b.fingerprint() {
            return Err(Error::Uncoupled("builds used different stores".into()));
        }
        let (ka, kb) = (a.stamps().len() - 1, b.stamps().len() - 1);
        let gaps: Vec<f64> = (0..n_paths)
            .map(|p| {
                a.position(ka, p)
                    .iter()
                    .zip(b.position(kb, p))
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let (m, s) = mean_stderr(&gaps);
        n_eps.push(m);
        n_stderr.push(s);
        let integrals = a.path_integrals(t, |_, y| grid.interpolate(&integrand, y));
        m_eps.push(mean_stderr(&integrals).0);
    }
    let below = n_eps.iter().filter(|v| **v <= threshold).count();
    Ok(UniquenessMap {
        dim: d,
        points: points.to_vec(),
        t,
        epsilon: eps,
        fraction_below: below as f64 / n_eps.len() as f64,
        n_eps,
        n_stderr,
        m_eps,
        threshold,
    })
}
