//! Runtime monitor for the `L^α` energy inequality
//! `d/dt ∫u^α ≤ C''(1 + ‖∇a‖_{L^p}^{2/θ}) ∫u^α`, with `1 − θ = d/p`.

use serde::{Deserialize, Serialize};

use super::fp1d::{cfl_limit_1d, initial_from_fn, solve_fp_1d, DensityEvolution};
use crate::error::{param, precondition, Result};
use crate::fields::{preset_field, CoefficientField, Params};
use crate::grid::Grid;
use crate::maxops::gradient_norm;
use crate::report::{Report, Table};

/// Relative slack on each step for rounding in `∫u^α`.
pub const ENERGY_ROUNDING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub alphas: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    pub c2: f64,
    pub ellipticity: f64,
    pub stamps: Vec<f64>,
    /// `values[j][k] = ∫u(t_k)^{α_j}`.
    pub values: Vec<Vec<f64>>,
    /// `budgets[j][k]` bounds `values[j][k]` from `values[j][k-1]`; entry 0
    /// repeats the initial value.
    pub budgets: Vec<Vec<f64>>,
    pub violations: usize,
}

impl EnergyReport {
    /// Long table with columns `t, alpha, lhs, budget`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["t", "alpha", "lhs", "budget"]);
        for (j, a) in self.alphas.iter().enumerate() {
            for (k, s) in self.stamps.iter().enumerate() {
                t.push(vec![*s, *a, self.values[j][k], self.budgets[j][k]]);
            }
        }
        t
    }

    pub fn to_report(&self, check: &str) -> Report {
        let mut r = Report::new(check);
        r.constant("C2", self.c2)
            .constant("theta", self.theta)
            .constant("p", self.p)
            .constant("q", self.q)
            .constant("ellipticity", self.ellipticity);
        for (j, a) in self.alphas.iter().enumerate() {
            for k in 1..self.stamps.len() {
                if self.values[j][k] > self.budgets[j][k] {
                    r.record_violation(vec![self.stamps[k], *a], self.values[j][k], self.budgets[j][k]);
                }
            }
        }
        r.tables.insert("energy".into(), self.table());
        r
    }
}

/// `θ = 1 − d/p`, defined for `p > d`.
pub fn sobolev_theta(d: usize, p: f64) -> Result<f64> {
    if !(p > d as f64) {
        return Err(param("p", format!("must exceed the dimension {d}, got {p}")));
    }
    Ok(1.0 - d as f64 / p)
}

/// `∫ u^α` on the evolution grid.
pub fn alpha_integral(grid: &Grid, u: &[f64], alpha: f64) -> f64 {
    u.iter().map(|v| v.max(0.0).powf(alpha)).sum::<f64>() * grid.cell_volume()
}

/// `‖∇a‖_{L^p}` with `|∇a|` the Frobenius norm over all entries of `a`.
fn grad_a_lp(field: &CoefficientField, t: f64, p: f64) -> f64 {
    let grid = field.grid();
    let slice = field.slice_at(t);
    let d = field.dim();
    let mut sq = vec![0.0; grid.len()];
    for i in 0..d {
        for j in 0..d {
            let a = field.a_component(slice, i, j);
            let g = gradient_norm(grid, &[&a]);
            sq.iter_mut().zip(&g).for_each(|(s, v)| *s += v * v);
        }
    }
    (sq.iter().map(|s| s.powf(p / 2.0)).sum::<f64>() * grid.cell_volume()).powf(1.0 / p)
}

/// Checks the per-step discrete inequality
/// `I_{k+1} ≤ I_k (1 + Δt_k C''(1 + ‖∇a(t_k)‖_{L^p}^{2/θ}))` for every α.
pub fn energy_monitor(
    evolution: &DensityEvolution,
    field: &CoefficientField,
    alphas: &[f64],
    p: f64,
    q: f64,
    c2: f64,
) -> Result<EnergyReport> {
    let grid = field.grid();
    grid.ensure_same(&evolution.grid, "energy monitor")?;
    let d = grid.dim();
    let theta = sobolev_theta(d, p)?;
    if (q - 2.0 / theta).abs() > 1e-9 * q.abs().max(1.0) {
        return Err(param("q", format!("must equal 2/θ = {} for p = {p}", 2.0 / theta)));
    }
    if alphas.is_empty() || alphas.iter().any(|a| !(*a >= 1.0)) {
        return Err(param("alphas", "need a nonempty list of exponents ≥ 1"));
    }
    if !(c2 >= 0.0) || !c2.is_finite() {
        return Err(param("c2", "must be finite and nonnegative"));
    }
    let ellipticity = field.min_eigen_a();
    if !(ellipticity > 0.0) {
        return Err(precondition(format!(
            "ellipticity constant {ellipticity} is not positive"
        )));
    }
    let stamps = evolution.stamps.clone();
    let growth: Vec<f64> = stamps
        .windows(2)
        .map(|w| {
            let rate = c2 * (1.0 + grad_a_lp(field, w[0], p).powf(q));
            1.0 + (w[1] - w[0]) * rate
        })
        .collect();
    let mut values = Vec::new();
    let mut budgets = Vec::new();
    let mut violations = 0;
    for &a in alphas {
        let v: Vec<f64> = evolution.densities.iter().map(|u| alpha_integral(grid, u, a)).collect();
        let mut b = vec![v[0]];
        for k in 1..v.len() {
            let budget = v[k - 1] * growth[k - 1] * (1.0 + ENERGY_ROUNDING);
            if v[k] > budget {
                violations += 1;
            }
            b.push(budget);
        }
        values.push(v);
        budgets.push(b);
    }
    Ok(EnergyReport {
        alphas: alphas.to_vec(),
        p,
        q,
        theta,
        c2,
        ellipticity,
        stamps,
        values,
        budgets,
        violations,
    })
}

/// Calibrates C'' on pure diffusion (`F = 0`, `a = 1`, standard Gaussian
/// start, `t ∈ [0, 1]`, 512 cells on [−8, 8]): the largest observed
/// per-step rate `|I_{k+1} − I_k| / (Δt I_k)` over `alphas`.
pub fn calibrate_c2(alphas: &[f64]) -> Result<f64> {
    let grid = Grid::line(-8.0, 8.0, 512, false)?;
    let mut params = Params::new();
    params.insert("a".into(), 1.0);
    let heat = preset_field("heat", &params, &grid)?;
    let u0 = initial_from_fn(&grid, |x| (-x[0] * x[0] / 2.0).exp())?;
    let limit = cfl_limit_1d(grid.axis(0).width(), 0.0, 1.0);
    let dt = 1.0 / (1.0 / limit).ceil();
    let evo = solve_fp_1d(&heat, &u0, 1.0, dt, 1)?;
    let mut c2: f64 = 0.0;
    for &a in alphas {
        let v: Vec<f64> = evo.densities.iter().map(|u| alpha_integral(&grid, u, a)).collect();
        for w in v.windows(2) {
            c2 = c2.max(((w[1] - w[0]) / (dt * w[0])).abs());
        }
    }
    Ok(c2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat_run(a: f64) -> (CoefficientField, DensityEvolution) {
        let g = Grid::line(-8.0, 8.0, 256, false).unwrap();
        let mut p = Params::new();
        p.insert("a".into(), a);
        let f = preset_field("heat", &p, &g).unwrap();
        let u0 = initial_from_fn(&g, |x| (-2.0 * x[0] * x[0]).exp()).unwrap();
        let evo = solve_fp_1d(&f, &u0, 0.5, 1.0 / 1024.0, 4).unwrap();
        (f, evo)
    }

    #[test]
    fn heat_dissipates_every_alpha() {
        let (_, evo) = heat_run(1.0);
        for a in [2.0, 3.0, 4.0] {
            let v: Vec<f64> = evo.densities.iter().map(|u| alpha_integral(&evo.grid, u, a)).collect();
            assert!(v.windows(2).all(|w| w[1] < w[0]), "alpha {a}");
        }
    }

    #[test]
    fn heat_passes_even_with_zero_constant() {
        let (f, evo) = heat_run(1.0);
        let r = energy_monitor(&evo, &f, &[2.0, 4.0], 2.0, 4.0, 0.0).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.theta, 0.5);
        assert_eq!(r.table().rows.len(), 2 * evo.stamps.len());
    }

    #[test]
    fn exponent_preconditions() {
        let (f, evo) = heat_run(1.0);
        assert!(energy_monitor(&evo, &f, &[2.0], 1.0, 2.0, 1.0).is_err());
        assert!(energy_monitor(&evo, &f, &[2.0], 2.0, 3.0, 1.0).is_err());
        assert!(sobolev_theta(2, 2.0).is_err());
        assert_eq!(sobolev_theta(2, 4.0).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_field_rejected() {
        let g = Grid::line(-4.0, 4.0, 128, false).unwrap();
        let f = preset_field("degenerate_1d", &Params::new(), &g).unwrap();
        let u0 = initial_from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        let evo = solve_fp_1d(&f, &u0, 0.125, 1.0 / 2048.0, 8).unwrap();
        assert!(energy_monitor(&evo, &f, &[2.0], 2.0, 4.0, 1.0).is_err());
    }

    #[test]
    fn growth_beyond_budget_is_flagged() {
        // OU from a wide start concentrates, so ∫u² grows; C'' = 0 must flag it
        let g = Grid::line(-8.0, 8.0, 256, false).unwrap();
        let f = preset_field("ou", &Params::new(), &g).unwrap();
        let u0 = initial_from_fn(&g, |x| (-x[0] * x[0] / 8.0).exp()).unwrap();
        let evo = solve_fp_1d(&f, &u0, 0.5, 1.0 / 2048.0, 16).unwrap();
        let r = energy_monitor(&evo, &f, &[2.0], 2.0, 4.0, 0.0).unwrap();
        assert!(r.violations > 0);
        let c2 = calibrate_c2(&[2.0, 4.0]).unwrap();
        assert!(c2 > 0.0 && c2.is_finite());
    }
}
