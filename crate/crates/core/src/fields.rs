//! Gridded drift and diffusion coefficients, analytic presets, and the
//! mollification that produces smooth approximating sequences.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::Grid;

/// Named real parameters of a preset.
pub type Params = BTreeMap<String, f64>;

/// Preset names understood by [`preset_field`].
pub const PRESETS: [&str; 6] = [
    "ou",
    "heat",
    "sqrt_diffusion",
    "kink_drift",
    "degenerate_1d",
    "kinetic_langevin",
];

/// Where a field came from: preset, parameters, and mollification scale
/// (`delta = 0` for an unmollified field).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub preset: String,
    pub params: Params,
    pub delta: f64,
}

impl Provenance {
    pub fn custom(name: &str) -> Self {
        Provenance {
            preset: name.to_string(),
            params: Params::new(),
            delta: 0.0,
        }
    }
}

/// Coefficients frozen at one time stamp. `drift[i]` holds component `i` of
/// F on every node; `diffusion[i * r + j]` holds entry `(i, j)` of σ.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSlice {
    pub time: f64,
    pub drift: Vec<Vec<f64>>,
    pub diffusion: Vec<Vec<f64>>,
}

/// Drift F and diffusion σ on a grid, piecewise constant in time.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    grid: Grid,
    noise_dim: usize,
    slices: Vec<FieldSlice>,
    provenance: Provenance,
}

impl CoefficientField {
    /// Autonomous field from pointwise formulas. The closure receives a node
    /// position and fills `drift` (length d) and `sigma` (length d·r,
    /// row-major).
    pub fn from_fn<G>(grid: Grid, noise_dim: usize, provenance: Provenance, f: G) -> Result<Self>
    where
        G: Fn(&[f64], &mut [f64], &mut [f64]),
    {
        let d = grid.dim();
        let n = grid.len();
        let mut drift = vec![vec![0.0; n]; d];
        let mut diffusion = vec![vec![0.0; n]; d * noise_dim];
        let mut fb = vec![0.0; d];
        let mut sb = vec![0.0; d * noise_dim];
        for idx in 0..n {
            let p = grid.point(idx);
            fb.iter_mut().for_each(|v| *v = 0.0);
            sb.iter_mut().for_each(|v| *v = 0.0);
            f(&p[..d], &mut fb, &mut sb);
            for c in 0..d {
                drift[c][idx] = fb[c];
            }
            for c in 0..d * noise_dim {
                diffusion[c][idx] = sb[c];
            }
        }
        let slice = FieldSlice {
            time: 0.0,
            drift,
            diffusion,
        };
        CoefficientField::with_slices(grid, noise_dim, vec![slice], provenance)
    }

    /// Field from explicit time slices (piecewise constant in time; slice `k`
    /// applies on `[t_k, t_{k+1})`).
    pub fn with_slices(grid: Grid, noise_dim: usize, slices: Vec<FieldSlice>, provenance: Provenance) -> Result<Self> {
        if noise_dim == 0 {
            return Err(param("noise_dim", "must be at least 1"));
        }
        if slices.is_empty() {
            return Err(param("slices", "at least one time slice is required"));
        }
        let d = grid.dim();
        let n = grid.len();
        let mut last = f64::NEG_INFINITY;
        for s in &slices {
            if !(s.time > last) {
                return Err(param("slices", "time stamps must be strictly increasing"));
            }
            last = s.time;
            if s.drift.len() != d || s.diffusion.len() != d * noise_dim {
                return Err(param("slices", "component count does not match dimension"));
            }
            for comp in s.drift.iter().chain(&s.diffusion) {
                if comp.len() != n {
                    return Err(Error::GridMismatch("component length differs from node count".into()));
                }
                if comp.iter().any(|v| !v.is_finite()) {
                    return Err(param("values", "all coefficient values must be finite"));
                }
            }
        }
        Ok(CoefficientField {
            grid,
            noise_dim,
            slices,
            provenance,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn slices(&self) -> &[FieldSlice] {
        &self.slices
    }

    pub fn is_autonomous(&self) -> bool {
        self.slices.len() == 1
    }

    /// Slice in force at time `t`.
    pub fn slice_at(&self, t: f64) -> &FieldSlice {
        let k = self.slices.partition_point(|s| s.time <= t);
        &self.slices[k.saturating_sub(1)]
    }

    pub fn drift(&self, t: f64, comp: usize) -> &[f64] {
        &self.slice_at(t).drift[comp]
    }

    pub fn sigma(&self, t: f64, i: usize, j: usize) -> &[f64] {
        &self.slice_at(t).diffusion[i * self.noise_dim + j]
    }

    /// Pointwise Euclidean norm of F, maximised over nodes and slices.
    pub fn sup_drift(&self) -> f64 {
        let mut m: f64 = 0.0;
        for s in &self.slices {
            for idx in 0..self.grid.len() {
                let v: f64 = s.drift.iter().map(|c| c[idx] * c[idx]).sum();
                m = m.max(v.sqrt());
            }
        }
        m
    }

    /// Pointwise Frobenius norm of σ, maximised over nodes and slices.
    pub fn sup_sigma(&self) -> f64 {
        let mut m: f64 = 0.0;
        for s in &self.slices {
            for idx in 0..self.grid.len() {
                let v: f64 = s.diffusion.iter().map(|c| c[idx] * c[idx]).sum();
                m = m.max(v.sqrt());
            }
        }
        m
    }

    /// Entry `(i, j)` of `a = σσ*/2` on every node of `slice`.
    pub fn a_component(&self, slice: &FieldSlice, i: usize, j: usize) -> Vec<f64> {
        let r = self.noise_dim;
        (0..self.grid.len())
            .map(|idx| {
                0.5 * (0..r)
                    .map(|k| slice.diffusion[i * r + k][idx] * slice.diffusion[j * r + k][idx])
                    .sum::<f64>()
            })
            .collect()
    }

    /// Smallest eigenvalue of `a` over all nodes and slices.
    pub fn min_eigen_a(&self) -> f64 {
        let mut m = f64::INFINITY;
        for s in &self.slices {
            match self.dim() {
                1 => {
                    for v in self.a_component(s, 0, 0) {
                        m = m.min(v);
                    }
                }
                _ => {
                    let a00 = self.a_component(s, 0, 0);
                    let a01 = self.a_component(s, 0, 1);
                    let a11 = self.a_component(s, 1, 1);
                    for idx in 0..self.grid.len() {
                        let tr = a00[idx] + a11[idx];
                        let det = a00[idx] * a11[idx] - a01[idx] * a01[idx];
                        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
                        m = m.min(0.5 * tr - disc);
                    }
                }
            }
        }
        m
    }

    /// Evaluates F and σ at an arbitrary point by multilinear interpolation.
    #[inline]
    pub fn sample(&self, slice: &FieldSlice, x: &[f64], drift: &mut [f64], sigma: &mut [f64]) {
        let st = self.grid.stencil(x);
        for (c, out) in slice.drift.iter().zip(drift.iter_mut()) {
            *out = st.apply(c);
        }
        for (c, out) in slice.diffusion.iter().zip(sigma.iter_mut()) {
            *out = st.apply(c);
        }
    }

    /// Applies `f` to every component of every slice.
    pub(crate) fn map_components<G>(&self, provenance: Provenance, f: G) -> Result<Self>
    where
        G: Fn(&[f64]) -> Vec<f64>,
    {
        let slices = self
            .slices
            .iter()
            .map(|s| FieldSlice {
                time: s.time,
                drift: s.drift.iter().map(|c| f(c)).collect(),
                diffusion: s.diffusion.iter().map(|c| f(c)).collect(),
            })
            .collect();
        CoefficientField::with_slices(self.grid.clone(), self.noise_dim, slices, provenance)
    }

    /// Writes one row per node and slice: time, coordinates, F components,
    /// σ components.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        let mut header = vec!["t".to_string()];
        header.extend(["x", "v"].iter().take(d).map(|s| s.to_string()));
        header.extend((0..d).map(|i| format!("F{i}")));
        for i in 0..d {
            for j in 0..self.noise_dim {
                header.push(format!("sigma{i}{j}"));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for s in &self.slices {
            for idx in 0..self.grid.len() {
                let p = self.grid.point(idx);
                let mut row = vec![crate::report::fmt_f64(s.time)];
                row.extend(p[..d].iter().map(|v| crate::report::fmt_f64(*v)));
                row.extend(s.drift.iter().map(|c| crate::report::fmt_f64(c[idx])));
                row.extend(s.diffusion.iter().map(|c| crate::report::fmt_f64(c[idx])));
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

fn take_params(name: &str, given: &Params, defaults: &[(&str, f64)]) -> Result<Params> {
    for key in given.keys() {
        if !defaults.iter().any(|(k, _)| k == key) {
            return Err(param(key, format!("not a parameter of preset `{name}`")));
        }
    }
    let mut out = Params::new();
    for (k, v) in defaults {
        let value = given.get(*k).copied().unwrap_or(*v);
        if !value.is_finite() {
            return Err(param(k, "must be finite"));
        }
        out.insert(k.to_string(), value);
    }
    Ok(out)
}

fn nonneg(p: &Params, key: &str) -> Result<f64> {
    let v = p[key];
    if v < 0.0 {
        return Err(param(key, format!("must be >= 0, got {v}")));
    }
    Ok(v)
}

/// Builds one of the analytic presets on `grid`.
///
/// | preset | F | σ |
/// |---|---|---|
/// | `ou` (`theta`=1, `sigma`=√2) | −θx | sigma·I |
/// | `heat` (`a`=1/2) | 0 | √(2a)·I |
/// | `sqrt_diffusion` (`kappa`=0) | 0 | √(min(\|x\|,1)+κ)·I |
/// | `kink_drift` (`beta`=1, `sigma`=1) | β·min(\|xᵢ\|,1)·sign(xᵢ) | sigma·I |
/// | `degenerate_1d` (`gamma`=1/2, `theta`=1) | −θx | √2·min(\|x\|,1)^γ |
/// | `kinetic_langevin` (`stiffness`=0, `a`=1/2) | (v, −k·x) | (0, √(2a))ᵀ |
///
/// `degenerate_1d` needs a one-dimensional grid and `kinetic_langevin` a
/// two-dimensional phase-space grid with axes (x, v).
pub fn preset_field(name: &str, params: &Params, grid: &Grid) -> Result<CoefficientField> {
    let d = grid.dim();
    let grid = grid.clone();
    match name {
        "ou" => {
            let p = take_params(name, params, &[("theta", 1.0), ("sigma", 2f64.sqrt())])?;
            let theta = p["theta"];
            if theta <= 0.0 {
                return Err(param("theta", "must be > 0"));
            }
            let s = nonneg(&p, "sigma")?;
            let prov = provenance(name, p);
            CoefficientField::from_fn(grid, d, prov, move |x, f, sg| {
                for i in 0..x.len() {
                    f[i] = -theta * x[i];
                    sg[i * x.len() + i] = s;
                }
            })
        }
        "heat" => {
            let p = take_params(name, params, &[("a", 0.5)])?;
            let s = (2.0 * nonneg(&p, "a")?).sqrt();
            let prov = provenance(name, p);
            CoefficientField::from_fn(grid, d, prov, move |x, _f, sg| {
                for i in 0..x.len() {
                    sg[i * x.len() + i] = s;
                }
            })
        }
        "sqrt_diffusion" => {
            let p = take_params(name, params, &[("kappa", 0.0)])?;
            let kappa = nonneg(&p, "kappa")?;
            let prov = provenance(name, p);
            CoefficientField::from_fn(grid, d, prov, move |x, _f, sg| {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let s = (r.min(1.0) + kappa).sqrt();
                for i in 0..x.len() {
                    sg[i * x.len() + i] = s;
                }
            })
        }
        "kink_drift" => {
            let p = take_params(name, params, &[("beta", 1.0), ("sigma", 1.0)])?;
            let beta = nonneg(&p, "beta")?;
            let s = nonneg(&p, "sigma")?;
            let prov = provenance(name, p);
            CoefficientField::from_fn(grid, d, prov, move |x, f, sg| {
                for i in 0..x.len() {
                    f[i] = beta * x[i].abs().min(1.0) * x[i].signum();
                    sg[i * x.len() + i] = s;
                }
            })
        }
        "degenerate_1d" => {
            if d != 1 {
                return Err(param("grid", "degenerate_1d needs a one-dimensional grid"));
            }
            let p = take_params(name, params, &[("gamma", 0.5), ("theta", 1.0)])?;
            let gamma = p["gamma"];
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(param("gamma", "must lie in (0, 1]"));
            }
            let theta = nonneg(&p, "theta")?;
            let prov = provenance(name, p);
            CoefficientField::from_fn(grid, 1, prov, move |x, f, sg| {
                f[0] = -theta * x[0];
                sg[0] = 2f64.sqrt() * x[0].abs().min(1.0).powf(gamma);
            })
        }
        "kinetic_langevin" => {
            if d != 2 {
                return Err(param("grid", "kinetic_langevin needs a (x, v) phase-space grid"));
            }
            let p = take_params(name, params, &[("stiffness", 0.0), ("a", 0.5)])?;
            let k = nonneg(&p, "stiffness")?;
            let s = (2.0 * nonneg(&p, "a")?).sqrt();
            let prov = provenance(name, p);
            CoefficientField::from_fn(grid, 1, prov, move |x, f, sg| {
                f[0] = x[1];
                f[1] = -k * x[0];
                sg[0] = 0.0;
                sg[1] = s;
            })
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

fn provenance(name: &str, params: Params) -> Provenance {
    Provenance {
        preset: name.to_string(),
        params,
        delta: 0.0,
    }
}

/// Compactly supported bump `exp(-1/(1-|x/δ|²))`, normalized to unit
/// discrete mass on the grid it is applied to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mollifier {
    delta: f64,
}

impl Mollifier {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(param("delta", "mollification scale must be positive"));
        }
        Ok(Mollifier { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Unnormalized kernel profile at distance `r`.
    #[inline]
    pub fn profile(&self, r: f64) -> f64 {
        let s = r / self.delta;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s * s)).exp()
        }
    }

    /// Node offsets and weights of the discrete kernel on `grid`; weights sum
    /// to one.
    pub fn stencil(&self, grid: &Grid) -> Result<Vec<([isize; 2], f64)>> {
        let h = grid.max_width();
        if self.delta < h {
            return Err(param(
                "delta",
                format!(
                    "scale {} is below the cell width {h}; the kernel would be under-resolved",
                    self.delta
                ),
            ));
        }
        let mut taps = Vec::new();
        match grid.dim() {
            1 => {
                let hx = grid.axis(0).width();
                let k = (self.delta / hx).ceil() as isize;
                for i in -k..=k {
                    let w = self.profile(i as f64 * hx);
                    if w > 0.0 {
                        taps.push(([i, 0], w));
                    }
                }
            }
            _ => {
                let hx = grid.axis(0).width();
                let hy = grid.axis(1).width();
                let kx = (self.delta / hx).ceil() as isize;
                let ky = (self.delta / hy).ceil() as isize;
                for i in -kx..=kx {
                    for j in -ky..=ky {
                        let r = ((i as f64 * hx).powi(2) + (j as f64 * hy).powi(2)).sqrt();
                        let w = self.profile(r);
                        if w > 0.0 {
                            taps.push(([i, j], w));
                        }
                    }
                }
            }
        }
        let total: f64 = taps.iter().map(|t| t.1).sum();
        for t in &mut taps {
            t.1 /= total;
        }
        Ok(taps)
    }

    /// Discrete convolution of nodal values with the kernel, using the grid's
    /// extension rule beyond the box.
    pub fn apply(&self, grid: &Grid, values: &[f64]) -> Result<Vec<f64>> {
        let taps = self.stencil(grid)?;
        Ok(convolve(grid, values, &taps))
    }
}

pub(crate) fn convolve(grid: &Grid, values: &[f64], taps: &[([isize; 2], f64)]) -> Vec<f64> {
    let [n0, n1] = grid.shape();
    let mut out = vec![0.0; values.len()];
    match grid.dim() {
        1 => {
            let ax = grid.axis(0);
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (off, w) in taps {
                    acc += w * values[ax.resolve(i as isize + off[0])];
                }
                *o = acc;
            }
        }
        _ => {
            let (ax, ay) = (grid.axis(0), grid.axis(1));
            for i in 0..n0 {
                for j in 0..n1 {
                    let mut acc = 0.0;
                    for (off, w) in taps {
                        let ii = ax.resolve(i as isize + off[0]);
                        let jj = ay.resolve(j as isize + off[1]);
                        acc += w * values[ii * n1 + jj];
                    }
                    out[i * n1 + j] = acc;
                }
            }
        }
    }
    out
}

/// Convolves every coefficient with the bump of scale `delta`.
pub fn mollify(field: &CoefficientField, delta: f64) -> Result<CoefficientField> {
    let m = Mollifier::new(delta)?;
    let taps = m.stencil(field.grid())?;
    let mut prov = field.provenance().clone();
    prov.delta = delta;
    let grid = field.grid().clone();
    field.map_components(prov, |c| convolve(&grid, c, &taps))
}

/// Mollification scale of the n-th member of the approximating sequence,
/// `δ_n = 2^{-n} δ_0`.
pub fn sequence_delta(delta0: f64, n: u32) -> f64 {
    delta0 * 0.5f64.powi(n as i32)
}
