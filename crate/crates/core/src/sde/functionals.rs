//! Expectation functionals of coupled path differences `Δ_t = X_t − Y_t`.

use serde::{Deserialize, Serialize};

use super::ensemble::PathEnsemble;
use crate::error::{param, precondition, Result};
use crate::grid::Grid;
use crate::report::{mean_stderr, Table};

/// Time series of a Monte Carlo expectation with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSeries {
    pub kind: String,
    pub epsilon: Option<f64>,
    pub stamps: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl FunctionalSeries {
    /// Largest value over the stamps and its standard error.
    pub fn sup(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (v, s) in self.values.iter().zip(&self.stderr) {
            if *v > best.0 {
                best = (*v, *s);
            }
        }
        best
    }

    /// Columns `t, value, stderr`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["t", "value", "stderr"]);
        for k in 0..self.stamps.len() {
            t.push(vec![self.stamps[k], self.values[k], self.stderr[k]]);
        }
        t
    }
}

fn require_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(param("epsilon", format!("must be positive, got {eps}")));
    }
    Ok(())
}

/// `|X_t^p − Y_t^p|` at stamp `k`.
#[inline]
fn gap(a: &PathEnsemble, b: &PathEnsemble, k: usize, p: usize) -> f64 {
    a.position(k, p)
        .iter()
        .zip(b.position(k, p))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-stamp mean and standard error of `g(|Δ|)` over paths.
fn series<G>(a: &PathEnsemble, b: &PathEnsemble, kind: &str, eps: Option<f64>, g: G) -> Result<FunctionalSeries>
where
    G: Fn(usize, usize, f64) -> f64,
{
    a.ensure_coupled(b)?;
    let mut values = Vec::with_capacity(a.stamps().len());
    let mut stderr = Vec::with_capacity(a.stamps().len());
    let mut buf = vec![0.0; a.n_paths()];
    for k in 0..a.stamps().len() {
        for (p, slot) in buf.iter_mut().enumerate() {
            *slot = g(k, p, gap(a, b, k, p));
        }
        let (m, s) = mean_stderr(&buf);
        values.push(m);
        stderr.push(s);
    }
    Ok(FunctionalSeries {
        kind: kind.to_string(),
        epsilon: eps,
        stamps: a.stamps().to_vec(),
        values,
        stderr,
    })
}

/// `E log(1 + |Δ_t|² / ε²)`.
pub fn q_functional(a: &PathEnsemble, b: &PathEnsemble, eps: f64) -> Result<FunctionalSeries> {
    require_epsilon(eps)?;
    series(a, b, "Q", Some(eps), |_, _, r| (r * r / (eps * eps)).ln_1p())
}

/// Accumulated weight `U` along every path pair, `dU = λ dt` with
/// `λ = 4 (h̃(X_t) + h̃(Y_t))`, left Riemann sums on the recorded stamps.
/// Returned stamp-major, `k * N + p`.
pub fn weight_process(a: &PathEnsemble, b: &PathEnsemble, grid: &Grid, h_tilde: &[f64]) -> Result<Vec<f64>> {
    a.ensure_coupled(b)?;
    if h_tilde.len() != grid.len() {
        return Err(param("h_tilde", "length differs from the grid node count"));
    }
    let n = a.n_paths();
    let stamps = a.stamps();
    let mut u = vec![0.0; stamps.len() * n];
    for k in 1..stamps.len() {
        let w = stamps[k] - stamps[k - 1];
        for p in 0..n {
            let lam = 4.0
                * (grid.interpolate(h_tilde, a.position(k - 1, p)) + grid.interpolate(h_tilde, b.position(k - 1, p)));
            u[k * n + p] = u[(k - 1) * n + p] + lam * w;
        }
    }
    Ok(u)
}

/// `E[e^{−U_t} |Δ_t| log(1 + |Δ_t|² / ε²)]` for one-dimensional ensembles;
/// `h_tilde` holds `M|∇F|` on `grid`.
pub fn q_tilde_functional(
    a: &PathEnsemble,
    b: &PathEnsemble,
    eps: f64,
    grid: &Grid,
    h_tilde: &[f64],
) -> Result<FunctionalSeries> {
    require_epsilon(eps)?;
    if a.dim() != 1 {
        return Err(precondition("the weighted functional is one-dimensional"));
    }
    let u = weight_process(a, b, grid, h_tilde)?;
    let n = a.n_paths();
    series(a, b, "Q_tilde", Some(eps), |k, p, r| {
        (-u[k * n + p]).exp() * r * (r * r / (eps * eps)).ln_1p()
    })
}

/// Shape of the uniqueness test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LFlavor {
    /// 0 below ε/2, 1 above ε.
    Plateau,
    /// 0 below ε/2, `|x|` above ε.
    Linear1d,
}

/// Value of the test function at distance `r = |x|`. Both bridges on
/// `[ε/2, ε]` are quintics in `s = (r − ε/2)/(ε/2)` matching value, slope and
/// curvature at both ends.
pub fn l_eps(flavor: LFlavor, eps: f64, r: f64) -> f64 {
    let r = r.abs();
    if r <= 0.5 * eps {
        return 0.0;
    }
    match flavor {
        LFlavor::Plateau => {
            if r >= eps {
                1.0
            } else {
                let s = (r - 0.5 * eps) / (0.5 * eps);
                s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
            }
        }
        LFlavor::Linear1d => {
            if r >= eps {
                r
            } else {
                let s = (r - 0.5 * eps) / (0.5 * eps);
                eps * s * s * s * (8.0 + s * (-11.5 + 4.5 * s))
            }
        }
    }
}

/// `E L_ε(Δ_t)`.
pub fn l_eps_functional(a: &PathEnsemble, b: &PathEnsemble, eps: f64, flavor: LFlavor) -> Result<FunctionalSeries> {
    require_epsilon(eps)?;
    if flavor == LFlavor::Linear1d && a.dim() != 1 {
        return Err(precondition("the linear flavor is one-dimensional"));
    }
    let kind = match flavor {
        LFlavor::Plateau => "L_eps",
        LFlavor::Linear1d => "L_eps_linear",
    };
    series(a, b, kind, Some(eps), |_, _, r| l_eps(flavor, eps, r))
}

/// Empirical `P(|Δ_t| > ε)`.
pub fn tail_probability(a: &PathEnsemble, b: &PathEnsemble, eps: f64) -> Result<FunctionalSeries> {
    series(a, b, "tail", Some(eps), |_, _, r| if r > eps { 1.0 } else { 0.0 })
}

/// `E sup_t |Δ_t|^p` (discrete max over recorded stamps) and its standard
/// error.
pub fn sup_moment(a: &PathEnsemble, b: &PathEnsemble, p: f64) -> Result<(f64, f64)> {
    a.ensure_coupled(b)?;
    let per_path: Vec<f64> = (0..a.n_paths())
        .map(|i| {
            (0..a.stamps().len())
                .map(|k| gap(a, b, k, i))
                .fold(0.0, f64::max)
                .powf(p)
        })
        .collect();
    Ok(mean_stderr(&per_path))
}

/// Intervals `[a_i, b_i)` with `b_0 = ε_max`, `a_i = b_i²`, `b_{i+1} = a_i`,
/// stopping after the first interval reaching below `ε_min`.
pub fn dyadic_eps_schedule(eps_min: f64, eps_max: f64) -> Result<Vec<(f64, f64)>> {
    if !(eps_min > 0.0 && eps_min < eps_max && eps_max < 1.0) {
        return Err(param("epsilon range", format!("need 0 < {eps_min} < {eps_max} < 1")));
    }
    let mut out = Vec::new();
    let mut b = eps_max;
    loop {
        let a = b * b;
        out.push((a, b));
        if a < eps_min {
            break;
        }
        b = a;
    }
    Ok(out)
}

/// Shell indices `k` with `[2^{−k−1}, 2^{−k}) ⊂ [a, b)`.
pub fn shells_in(a: f64, b: f64) -> Vec<u32> {
    (0..1100u32)
        .filter(|&k| {
            let hi = 2f64.powi(-(k as i32));
            let lo = 0.5 * hi;
            lo >= a * (1.0 - 1e-12) && hi <= b * (1.0 + 1e-12)
        })
        .collect()
}

/// Coupled gaps at or below this size are rounding residue between two
/// builds and count as coincident paths in [`shell_weights`].
pub const COINCIDENCE_FLOOR: f64 = 1e-12;

/// `β_k = ∫₀^t E[(h̄(X_s) + h̄(Y_s)) 1_{2^{−k−1} ≤ |Δ_s| ≤ 2^{−k}}] ds` for each
/// shell `k`, with `h̄` given on `grid` (left Riemann sums up to `horizon`).
pub fn shell_weights(
    a: &PathEnsemble,
    b: &PathEnsemble,
    grid: &Grid,
    h_bar: &[f64],
    shells: &[u32],
    horizon: f64,
) -> Result<Vec<f64>> {
    a.ensure_coupled(b)?;
    let stamps = a.stamps();
    let n = a.n_paths();
    let mut out = vec![0.0; shells.len()];
    for k in 0..stamps.len() {
        let end = if k + 1 < stamps.len() {
            stamps[k + 1].min(horizon)
        } else {
            horizon
        };
        let w = (end - stamps[k].min(horizon)).max(0.0);
        if w == 0.0 {
            continue;
        }
        for p in 0..n {
            let r = gap(a, b, k, p);
            if r <= COINCIDENCE_FLOOR {
                continue;
            }
            let h = grid.interpolate(h_bar, a.position(k, p)) + grid.interpolate(h_bar, b.position(k, p));
            for (slot, &s) in out.iter_mut().zip(shells) {
                let hi = 2f64.powi(-(s as i32));
                if r >= 0.5 * hi && r <= hi {
                    *slot += w * h / n as f64;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_profile() {
        let eps = 0.1;
        assert_eq!(l_eps(LFlavor::Plateau, eps, 0.0), 0.0);
        assert_eq!(l_eps(LFlavor::Plateau, eps, 0.05), 0.0);
        assert_eq!(l_eps(LFlavor::Plateau, eps, 0.2), 1.0);
        assert_eq!(l_eps(LFlavor::Plateau, eps, 0.1), 1.0);
        assert!((l_eps(LFlavor::Plateau, eps, 0.075) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bridges_are_smooth_at_the_joints() {
        let eps = 0.3;
        let h = 1e-6;
        for flavor in [LFlavor::Plateau, LFlavor::Linear1d] {
            let f = |r: f64| l_eps(flavor, eps, r);
            let slope_hi = if flavor == LFlavor::Plateau { 0.0 } else { 1.0 };
            let d_lo = (f(0.5 * eps + h) - f(0.5 * eps)) / h;
            let d_hi = (f(eps) - f(eps - h)) / h;
            assert!(d_lo.abs() < 1e-4);
            assert!((d_hi - slope_hi).abs() < 1e-4, "{flavor:?}: {d_hi}");
            assert!((f(eps - 1e-12) - f(eps)).abs() < 1e-9);
        }
    }

    #[test]
    fn bridges_are_monotone_in_r_and_eps() {
        let rs: Vec<f64> = (0..400).map(|i| i as f64 * 0.0025).collect();
        let epss = [0.4, 0.3, 0.2, 0.1, 0.05];
        for flavor in [LFlavor::Plateau, LFlavor::Linear1d] {
            for &eps in &epss {
                for w in rs.windows(2) {
                    assert!(l_eps(flavor, eps, w[1]) >= l_eps(flavor, eps, w[0]));
                }
            }
            for &r in &rs {
                for w in epss.windows(2) {
                    // ε decreasing along the list
                    assert!(l_eps(flavor, w[1], r) >= l_eps(flavor, w[0], r) - 1e-15);
                }
            }
        }
    }

    #[test]
    fn dyadic_schedule_examples() {
        let s = dyadic_eps_schedule(1e-4, 0.5).unwrap();
        assert_eq!(s[0], (0.25, 0.5));
        assert_eq!(s[1], (0.0625, 0.25));
        assert_eq!(s.len(), 4);
        assert_eq!(s[3], (2f64.powi(-16), 2f64.powi(-8)));
        for w in s.windows(2) {
            assert!((w[1].0.ln() / w[0].0.ln() - 2.0).abs() < 1e-12);
        }
        assert!(dyadic_eps_schedule(0.5, 0.25).is_err());
    }

    #[test]
    fn shells_partition_blocks() {
        assert_eq!(shells_in(0.25, 0.5), vec![1]);
        assert_eq!(shells_in(1.0 / 16.0, 0.25), vec![2, 3]);
        assert_eq!(shells_in(2f64.powi(-8), 1.0 / 16.0), vec![4, 5, 6, 7]);
    }
}
