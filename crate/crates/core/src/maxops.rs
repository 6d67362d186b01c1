//! Maximal operators and the pointwise difference inequalities they control.
//!
//! * [`maximal`]: the Hardy–Littlewood maximal function, discretized as a
//!   maximum of ball averages over a geometric radius schedule.
//! * [`maximal_modified`]: `M_L g(x) = √(log L) + ∫_{B(x,1)} g 1_{g ≥ √(log L)}
//!   / ((1/L + |x−z|)|x−z|^{d−1}) dz`, with analytic integrals of the kernel
//!   over the cells next to the singularity.
//! * [`half_derivative`]: the Fourier multiplier `|ξ|^{1/2}` on a periodic line.
//! * [`check_pointwise_bound`]: scans node pairs for breaches of
//!   `|f(x) − f(y)| ≤ K (h(x) + h(y)) ρ(|x − y|)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{param, precondition, Error, Result};
use crate::grid::Grid;

/// Per-axis derivatives: centered differences in the interior, one-sided at
/// the ends of bounded axes.
pub fn gradient(grid: &Grid, values: &[f64]) -> Vec<Vec<f64>> {
    let [n0, n1] = grid.shape();
    let mut out = Vec::with_capacity(grid.dim());
    for k in 0..grid.dim() {
        let ax = grid.axis(k);
        let h = ax.width();
        let n = ax.nodes();
        let mut g = vec![0.0; values.len()];
        for i in 0..n0 {
            for j in 0..n1 {
                let pos = if k == 0 { i } else { j };
                let idx_of = |p: usize| if k == 0 { p * n1 + j } else { i * n1 + p };
                let v = if ax.periodic {
                    let lo = ax.resolve(pos as isize - 1);
                    let hi = ax.resolve(pos as isize + 1);
                    (values[idx_of(hi)] - values[idx_of(lo)]) / (2.0 * h)
                } else if pos == 0 {
                    (values[idx_of(1)] - values[idx_of(0)]) / h
                } else if pos == n - 1 {
                    (values[idx_of(n - 1)] - values[idx_of(n - 2)]) / h
                } else {
                    (values[idx_of(pos + 1)] - values[idx_of(pos - 1)]) / (2.0 * h)
                };
                g[i * n1 + j] = v;
            }
        }
        out.push(g);
    }
    out
}

/// Pointwise Frobenius norm of the gradient of a (possibly vector-valued)
/// field given as a list of scalar components.
pub fn gradient_norm(grid: &Grid, components: &[&[f64]]) -> Vec<f64> {
    let mut acc = vec![0.0; grid.len()];
    for c in components {
        for g in gradient(grid, c) {
            for (a, v) in acc.iter_mut().zip(g) {
                *a += v * v;
            }
        }
    }
    acc.iter_mut().for_each(|a| *a = a.sqrt());
    acc
}

/// Radii over which ball averages are maximised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    radii: Vec<f64>,
}

impl RadiusSchedule {
    /// `r_k = r_min · 2^k` up to `r_max`.
    pub fn geometric(r_min: f64, r_max: f64) -> Result<Self> {
        Self::with_density(r_min, r_max, 1)
    }

    /// `r_k = r_min · 2^{k / per_octave}` up to `r_max`.
    pub fn with_density(r_min: f64, r_max: f64, per_octave: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min.is_finite() && r_max >= r_min && r_max.is_finite()) {
            return Err(param("radii", format!("need 0 < r_min <= r_max, got {r_min}, {r_max}")));
        }
        if per_octave == 0 {
            return Err(param("per_octave", "must be at least 1"));
        }
        let ratio = 2f64.powf(1.0 / per_octave as f64);
        let mut radii = vec![r_min];
        loop {
            let next = radii.last().unwrap() * ratio;
            if next > r_max * (1.0 + 1e-12) {
                break;
            }
            radii.push(next);
        }
        Ok(RadiusSchedule { radii })
    }

    /// Default schedule for a grid: from one cell width to half the box
    /// diameter, factor 2.
    pub fn for_grid(grid: &Grid) -> Result<Self> {
        Self::geometric(grid.max_width(), 0.5 * grid.diameter())
    }

    /// Schedule with twice the density; a superset of `self`.
    pub fn refined(&self) -> Self {
        let mut radii = Vec::with_capacity(2 * self.radii.len());
        for w in self.radii.windows(2) {
            radii.push(w[0]);
            radii.push((w[0] * w[1]).sqrt());
        }
        radii.push(*self.radii.last().unwrap());
        RadiusSchedule { radii }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn validate_for(&self, grid: &Grid) -> Result<()> {
        let h = grid.max_width();
        let first = self.radii[0];
        let last = *self.radii.last().unwrap();
        if first < h * (1.0 - 1e-12) {
            return Err(param("radii", format!("r_min {first} is below the cell width {h}")));
        }
        if last > 0.5 * grid.diameter() * (1.0 + 1e-12) {
            return Err(param("radii", "r_max exceeds half the box diameter"));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(param("radii", "radii must be strictly increasing"));
        }
        Ok(())
    }
}

fn require_nonnegative(f: &[f64]) -> Result<()> {
    if let Some(v) = f.iter().find(|v| !(**v >= 0.0)) {
        return Err(precondition(format!(
            "maximal operators need a nonnegative input, found {v}; pass absolute values"
        )));
    }
    Ok(())
}

#[inline]
fn cells_within(r: f64, h: f64) -> usize {
    (r / h * (1.0 + 1e-12)).floor() as usize
}

/// Maximal function: at every node, the largest average of `f` over the
/// discrete balls `{z : |z − x| ≤ r}` for `r` in the schedule.
pub fn maximal(grid: &Grid, f: &[f64], schedule: &RadiusSchedule) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(Error::GridMismatch("input length differs from node count".into()));
    }
    require_nonnegative(f)?;
    schedule.validate_for(grid)?;
    Ok(match grid.dim() {
        1 => maximal_1d(grid, f, schedule),
        _ => maximal_2d(grid, f, schedule),
    })
}

fn maximal_1d(grid: &Grid, f: &[f64], schedule: &RadiusSchedule) -> Vec<f64> {
    let ax = grid.axis(0);
    let h = ax.width();
    let mut ks: Vec<usize> = schedule.radii().iter().map(|&r| cells_within(r, h)).collect();
    ks.dedup();
    let pad = *ks.last().unwrap();
    let n = f.len();
    // prefix[i] = sum of padded values before padded position i
    let mut prefix = Vec::with_capacity(n + 2 * pad + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for p in 0..n + 2 * pad {
        acc += f[ax.resolve(p as isize - pad as isize)];
        prefix.push(acc);
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let c = i + pad;
            ks.iter()
                .map(|&k| (prefix[c + k + 1] - prefix[c - k]) / (2 * k + 1) as f64)
                .fold(0.0, f64::max)
        })
        .collect()
}

fn maximal_2d(grid: &Grid, f: &[f64], schedule: &RadiusSchedule) -> Vec<f64> {
    let (ax, ay) = (grid.axis(0), grid.axis(1));
    let (hx, hy) = (ax.width(), ay.width());
    let [n0, n1] = grid.shape();
    let rmax = *schedule.radii().last().unwrap();
    let pad = cells_within(rmax, hy);
    let width = n1 + 2 * pad;
    // row prefix sums along axis 1, padded by the extension rule
    let mut prefix = vec![0.0; n0 * (width + 1)];
    for i in 0..n0 {
        let row = &mut prefix[i * (width + 1)..(i + 1) * (width + 1)];
        let mut acc = 0.0;
        for p in 0..width {
            acc += f[i * n1 + ay.resolve(p as isize - pad as isize)];
            row[p + 1] = acc;
        }
    }
    // per radius: list of (row offset, half width)
    let stencils: Vec<Vec<(isize, usize)>> = schedule
        .radii()
        .iter()
        .map(|&r| {
            let kx = cells_within(r, hx) as isize;
            (-kx..=kx)
                .map(|di| {
                    let dx = di as f64 * hx;
                    let half = (r * r - dx * dx).max(0.0).sqrt();
                    (di, cells_within(half, hy))
                })
                .collect()
        })
        .collect();
    (0..n0 * n1)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n1, idx % n1);
            let c = j + pad;
            let mut best: f64 = 0.0;
            for st in &stencils {
                let mut sum = 0.0;
                let mut count = 0usize;
                for &(di, k) in st {
                    let ii = ax.resolve(i as isize + di);
                    let row = &prefix[ii * (width + 1)..];
                    sum += row[c + k + 1] - row[c - k];
                    count += 2 * k + 1;
                }
                best = best.max(sum / count as f64);
            }
            best
        })
        .collect()
}

/// Cell integrals of the kernel `1/((1/L + |s|)|s|^{d−1})` over the unit
/// ball, indexed by node offset.
pub fn modified_kernel_weights(grid: &Grid, l: f64) -> Vec<([isize; 2], f64)> {
    let eps = 1.0 / l;
    let mut taps = Vec::new();
    match grid.dim() {
        1 => {
            let h = grid.axis(0).width();
            let half = 0.5 * h;
            // center cell, both halves
            let c = half.min(1.0);
            taps.push(([0, 0], 2.0 * ((eps + c) / eps).ln()));
            let kmax = ((1.0 + half) / h).ceil() as isize;
            for k in 1..=kmax {
                let a = k as f64 * h - half;
                if a >= 1.0 {
                    break;
                }
                let b = (k as f64 * h + half).min(1.0);
                let w = ((eps + b) / (eps + a)).ln();
                taps.push(([k, 0], w));
                taps.push(([-k, 0], w));
            }
        }
        _ => {
            let hx = grid.axis(0).width();
            let hy = grid.axis(1).width();
            let rho = (hx * hy / PI).sqrt();
            taps.push(([0, 0], 2.0 * PI * (1.0 + rho / eps).ln()));
            let kx = ((1.0 + hx) / hx).ceil() as isize;
            let ky = ((1.0 + hy) / hy).ceil() as isize;
            for i in -kx..=kx {
                for j in -ky..=ky {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let sub = if i.abs() <= 2 && j.abs() <= 2 { 16 } else { 4 };
                    let mut w = 0.0;
                    let da = hx * hy / (sub * sub) as f64;
                    for a in 0..sub {
                        for b in 0..sub {
                            let x = (i as f64 - 0.5 + (a as f64 + 0.5) / sub as f64) * hx;
                            let y = (j as f64 - 0.5 + (b as f64 + 0.5) / sub as f64) * hy;
                            let s = (x * x + y * y).sqrt();
                            if s < 1.0 {
                                w += da / ((eps + s) * s);
                            }
                        }
                    }
                    if w > 0.0 {
                        taps.push(([i, j], w));
                    }
                }
            }
        }
    }
    taps
}

/// Modified maximal operator `M_L` applied to `g` (the role of `|∇F|`).
pub fn maximal_modified(grid: &Grid, g: &[f64], l: f64) -> Result<Vec<f64>> {
    if !(l >= 1.0) || !l.is_finite() {
        return Err(param("L", format!("must be >= 1, got {l}")));
    }
    if g.len() != grid.len() {
        return Err(Error::GridMismatch("input length differs from node count".into()));
    }
    require_nonnegative(g)?;
    let thr = l.ln().sqrt();
    let masked: Vec<f64> = g.iter().map(|&v| if v >= thr { v } else { 0.0 }).collect();
    if masked.iter().all(|&v| v == 0.0) {
        return Ok(vec![thr; g.len()]);
    }
    let taps = modified_kernel_weights(grid, l);
    let [n0, n1] = grid.shape();
    let out = (0..n0 * n1)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n1, idx % n1);
            let mut acc = 0.0;
            match grid.dim() {
                1 => {
                    let ax = grid.axis(0);
                    for (off, w) in &taps {
                        acc += w * masked[ax.resolve(i as isize + off[0])];
                    }
                }
                _ => {
                    let (ax, ay) = (grid.axis(0), grid.axis(1));
                    for (off, w) in &taps {
                        let ii = ax.resolve(i as isize + off[0]);
                        let jj = ay.resolve(j as isize + off[1]);
                        acc += w * masked[ii * n1 + jj];
                    }
                }
            }
            thr + acc
        })
        .collect();
    Ok(out)
}

fn require_spectral_grid(grid: &Grid) -> Result<()> {
    if grid.dim() != 1 {
        return Err(precondition(
            "the half derivative is implemented on one-dimensional grids",
        ));
    }
    let ax = grid.axis(0);
    if !ax.periodic {
        return Err(precondition(
            "the half derivative needs a periodic grid; embed the field in a larger periodic box",
        ));
    }
    if !ax.nodes().is_power_of_two() {
        return Err(precondition("the half derivative needs a power-of-two node count"));
    }
    Ok(())
}

/// Angular wavenumbers `|ξ_k|` of the discrete Fourier modes.
pub fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|k| {
            let ks = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            base * ks.abs()
        })
        .collect()
}

/// Multiplier `|ξ_k|^{1/2}` of the half derivative.
pub fn half_derivative_multiplier(n: usize, h: f64) -> Vec<f64> {
    wavenumbers(n, h).into_iter().map(f64::sqrt).collect()
}

/// Multiplier `|ξ_k|` (the first-order operator `|∂|`).
pub fn abs_derivative_multiplier(n: usize, h: f64) -> Vec<f64> {
    wavenumbers(n, h)
}

/// Applies a real, even Fourier multiplier to nodal values.
pub fn apply_multiplier(values: &[f64], multiplier: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for (c, m) in buf.iter_mut().zip(multiplier) {
        *c *= *m;
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Spectral half derivative `F^{-1}(|ξ|^{1/2} F σ)` on a periodic line.
pub fn half_derivative(grid: &Grid, sigma: &[f64]) -> Result<Vec<f64>> {
    require_spectral_grid(grid)?;
    if sigma.len() != grid.len() {
        return Err(Error::GridMismatch("input length differs from node count".into()));
    }
    let m = half_derivative_multiplier(grid.len(), grid.axis(0).width());
    Ok(apply_multiplier(sigma, &m))
}

/// Which pointwise inequality to scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `|σ(x)−σ(y)| ≤ (M|∇σ|(x) + M|∇σ|(y)) |x−y|`
    Classic,
    /// `|F(x)−F(y)| ≤ (h(x) + h(y)) (|x−y| + 1/L)` with `h = |F| + M_L|∇F|`
    Modified,
    /// `|σ(x)−σ(y)| ≤ K (M|∂^{1/2}σ|(x) + M|∂^{1/2}σ|(y)) |x−y|^{1/2}`
    Half,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Radius schedule for `M`; the grid default when `None`.
    pub schedule: Option<RadiusSchedule>,
    /// Discretization allowance factor: `τ = c_disc · h · max|∇f|`.
    pub c_disc: f64,
    /// Calibration constant multiplying the right side.
    pub k_cal: f64,
    /// Threshold parameter of `M_L` (modified kind only).
    pub l: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            schedule: None,
            c_disc: 2.0,
            k_cal: 1.0,
            l: std::f64::consts::E,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub kind: BoundKind,
    pub pairs_tested: usize,
    pub violations: usize,
    /// Largest achieved left side / right side (without the allowance).
    pub worst_ratio: f64,
    /// Coordinates of the worst pair, first point then second.
    pub worst_pair: Vec<f64>,
    pub tolerance: f64,
}

/// Precomputed controlling function for repeated pair scans on one field.
#[derive(Clone, Debug)]
pub struct PointwiseBound {
    kind: BoundKind,
    grid: Grid,
    field: Vec<f64>,
    control: Vec<f64>,
    k_cal: f64,
    l: f64,
    tolerance: f64,
}

impl PointwiseBound {
    pub fn new(kind: BoundKind, grid: &Grid, field: &[f64], params: &BoundParams) -> Result<Self> {
        if field.len() != grid.len() {
            return Err(Error::GridMismatch("field length differs from node count".into()));
        }
        let schedule = match &params.schedule {
            Some(s) => s.clone(),
            None => RadiusSchedule::for_grid(grid)?,
        };
        let grad = gradient_norm(grid, &[field]);
        let max_grad = grad.iter().cloned().fold(0.0, f64::max);
        let tolerance = params.c_disc * grid.max_width() * max_grad;
        let control = match kind {
            BoundKind::Classic => maximal(grid, &grad, &schedule)?,
            BoundKind::Modified => {
                let ml = maximal_modified(grid, &grad, params.l)?;
                field.iter().zip(ml).map(|(f, m)| f.abs() + m).collect()
            }
            BoundKind::Half => {
                let half: Vec<f64> = half_derivative(grid, field)?.iter().map(|v| v.abs()).collect();
                maximal(grid, &half, &schedule)?
            }
        };
        Ok(PointwiseBound {
            kind,
            grid: grid.clone(),
            field: field.to_vec(),
            control,
            k_cal: params.k_cal,
            l: params.l,
            tolerance,
        })
    }

    /// The controlling function `h` on the grid.
    pub fn control(&self) -> &[f64] {
        &self.control
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    #[inline]
    fn sides(&self, a: usize, b: usize) -> (f64, f64) {
        let lhs = (self.field[a] - self.field[b]).abs();
        let r = self.grid.distance(a, b);
        let rho = match self.kind {
            BoundKind::Classic => r,
            BoundKind::Modified => r + 1.0 / self.l,
            BoundKind::Half => r.sqrt(),
        };
        (lhs, self.k_cal * (self.control[a] + self.control[b]) * rho)
    }

    pub fn scan<I>(&self, pairs: I) -> Result<ViolationReport>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut tested = 0usize;
        let mut violations = 0usize;
        let mut worst = 0.0f64;
        let mut worst_pair = (0usize, 0usize);
        for (a, b) in pairs {
            tested += 1;
            let (lhs, rhs) = self.sides(a, b);
            if lhs > rhs + self.tolerance {
                violations += 1;
            }
            let ratio = if rhs > 0.0 {
                lhs / rhs
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if ratio > worst {
                worst = ratio;
                worst_pair = (a, b);
            }
        }
        if tested == 0 {
            return Err(precondition("empty pair sample"));
        }
        let d = self.grid.dim();
        let mut coords = self.grid.point(worst_pair.0)[..d].to_vec();
        coords.extend_from_slice(&self.grid.point(worst_pair.1)[..d]);
        Ok(ViolationReport {
            kind: self.kind,
            pairs_tested: tested,
            violations,
            worst_ratio: worst,
            worst_pair: coords,
            tolerance: self.tolerance,
        })
    }
}

/// Scans `pairs` of node indices for breaches of the `kind` inequality.
pub fn check_pointwise_bound<I>(
    kind: BoundKind,
    grid: &Grid,
    field: &[f64],
    pairs: I,
    params: &BoundParams,
) -> Result<ViolationReport>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    PointwiseBound::new(kind, grid, field, params)?.scan(pairs)
}

/// Node indices whose coordinates lie in the box `[lo, hi]` (per axis).
pub fn nodes_in(grid: &Grid, lo: &[f64], hi: &[f64]) -> Vec<usize> {
    let d = grid.dim();
    (0..grid.len())
        .filter(|&idx| {
            let p = grid.point(idx);
            (0..d).all(|k| p[k] >= lo[k] - 1e-12 && p[k] <= hi[k] + 1e-12)
        })
        .collect()
}

/// `n` random distinct-node pairs drawn uniformly from `nodes`.
pub fn sample_pairs(nodes: &[usize], n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if nodes.len() < 2 {
        return Vec::new();
    }
    (0..n)
        .map(|_| loop {
            let a = nodes[rng.random_range(0..nodes.len())];
            let b = nodes[rng.random_range(0..nodes.len())];
            if a != b {
                break (a, b);
            }
        })
        .collect()
}

/// Every unordered pair of distinct nodes.
pub fn all_pairs(nodes: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..nodes.len()).flat_map(move |i| (i + 1..nodes.len()).map(move |j| (nodes[i], nodes[j])))
}
