//! Kinetic equation on a phase-space grid (axis 0 = x, axis 1 = v):
//! `∂_t u + v ∂_x u + F(t, x) ∂_v u = a(t, x) ∂²_v u`.
//!
//! Strang splitting: half step in x, full step in v (transport then
//! diffusion), half step in x. Each substep is a conservative flux
//! difference with zero-flux walls.

use serde::{Deserialize, Serialize};

use super::fp1d::{project_initial, DensityEvolution};
use crate::error::{param, precondition, Error, Result};
use crate::fields::CoefficientField;
use crate::report::Report;

/// Interface flux for the transport substeps. `Centered` is not monotone
/// and exists only to exercise [`max_principle_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportFlux {
    Upwind,
    Centered,
}

/// Tolerance of the discrete maximum principle.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;

/// `min(h_x/(2 max|v|), h_v/(2 max|F|), h_v²/(4 max a))`.
pub fn kinetic_cfl(field: &CoefficientField) -> Result<f64> {
    let grid = field.grid();
    if grid.dim() != 2 {
        return Err(precondition("kinetic solver needs a two-dimensional (x, v) grid"));
    }
    let (hx, hv) = (grid.axis(0).width(), grid.axis(1).width());
    let mut sx: f64 = 0.0;
    let mut sv: f64 = 0.0;
    let mut sa: f64 = 0.0;
    for s in field.slices() {
        sx = s.drift[0].iter().fold(sx, |m, v| m.max(v.abs()));
        sv = s.drift[1].iter().fold(sv, |m, v| m.max(v.abs()));
        sa = field.a_component(s, 1, 1).iter().fold(sa, |m, v| m.max(v.abs()));
    }
    let lim = |h: f64, s: f64| if s > 0.0 { h / (2.0 * s) } else { f64::INFINITY };
    let dif = if sa > 0.0 { hv * hv / (4.0 * sa) } else { f64::INFINITY };
    Ok(lim(hx, sx).min(lim(hv, sv)).min(dif))
}

/// Scratch-free line update along a strided line of `u`.
struct Line {
    start: usize,
    stride: usize,
    len: usize,
    periodic: bool,
}

impl Line {
    #[inline]
    fn at(&self, k: usize) -> usize {
        self.start + k * self.stride
    }

    /// `u ← u − c (J_{k+½} − J_{k−½})` with `J` from `flux(k, k+1)`.
    fn update<G: Fn(usize, usize) -> f64>(&self, u: &mut [f64], c: f64, flux: G, buf: &mut Vec<f64>) {
        let n = self.len;
        let faces = if self.periodic { n } else { n - 1 };
        buf.clear();
        buf.extend((0..faces).map(|k| flux(self.at(k), self.at((k + 1) % n))));
        for k in 0..n {
            let right = if k < faces { buf[k] } else { 0.0 };
            let left = match (k, self.periodic) {
                (0, true) => buf[n - 1],
                (0, false) => 0.0,
                _ => buf[k - 1],
            };
            u[self.at(k)] -= c * (right - left);
        }
    }
}

fn transport(u: &mut [f64], speed: &[f64], line: &Line, c: f64, kind: TransportFlux, buf: &mut Vec<f64>) {
    let snapshot: Vec<f64> = (0..line.len).map(|k| u[line.at(k)]).collect();
    let base = line.start;
    let stride = line.stride;
    let local = |idx: usize| snapshot[(idx - base) / stride];
    line.update(
        u,
        c,
        |i, j| {
            let s = 0.5 * (speed[i] + speed[j]);
            match kind {
                TransportFlux::Upwind => s * if s >= 0.0 { local(i) } else { local(j) },
                TransportFlux::Centered => s * 0.5 * (local(i) + local(j)),
            }
        },
        buf,
    );
}

fn diffuse(u: &mut [f64], a: &[f64], line: &Line, c: f64, h: f64, buf: &mut Vec<f64>) {
    let snapshot: Vec<f64> = (0..line.len).map(|k| u[line.at(k)]).collect();
    let base = line.start;
    let stride = line.stride;
    let local = |idx: usize| snapshot[(idx - base) / stride];
    line.update(u, c, |i, j| -(a[j] * local(j) - a[i] * local(i)) / h, buf);
}

/// Solves up to `horizon` with step `dt`, recording every `record_every`
/// steps and always the last one. Speeds are `F_0` (x) and `F_1` (v) of
/// `field`; diffusion is `a_{vv}`.
pub fn solve_kinetic(
    field: &CoefficientField,
    u0: &[f64],
    horizon: f64,
    dt: f64,
    record_every: usize,
    flux: TransportFlux,
) -> Result<DensityEvolution> {
    let limit = kinetic_cfl(field)?;
    let grid = field.grid();
    if !(dt > 0.0) || !(horizon > 0.0) || record_every == 0 {
        return Err(param("dt", "step, horizon and stride must be positive"));
    }
    let steps = (horizon / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - horizon).abs() > 1e-9 * horizon {
        return Err(param("dt", format!("horizon {horizon} is not a multiple of {dt}")));
    }
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    for s in field.slices() {
        if field.a_component(s, 0, 0).iter().any(|v| *v != 0.0) {
            return Err(precondition("kinetic fields carry no diffusion in x"));
        }
        if field.a_component(s, 1, 1).iter().any(|v| *v < 0.0) {
            return Err(precondition("a must be nonnegative"));
        }
    }
    let mut u = project_initial(grid, u0)?;
    let [nx, nv] = grid.shape();
    let (ax, av) = (grid.axis(0), grid.axis(1));
    let (hx, hv) = (ax.width(), av.width());
    let x_lines: Vec<Line> = (0..nv)
        .map(|j| Line {
            start: j,
            stride: nv,
            len: nx,
            periodic: ax.periodic,
        })
        .collect();
    let v_lines: Vec<Line> = (0..nx)
        .map(|i| Line {
            start: i * nv,
            stride: 1,
            len: nv,
            periodic: av.periodic,
        })
        .collect();
    let scheme = match flux {
        TransportFlux::Upwind => "strang split, upwind transport, centered v-diffusion",
        TransportFlux::Centered => "strang split, centered transport, centered v-diffusion",
    };
    let mut evo = DensityEvolution::new(grid.clone(), dt, scheme);
    evo.record(0.0, &u);
    let mut buf = Vec::new();
    let mut cache: Option<(usize, Vec<f64>)> = None;
    for k in 0..steps {
        let t = k as f64 * dt;
        let slot = field.slices().partition_point(|s| s.time <= t).saturating_sub(1);
        let slice = &field.slices()[slot];
        if cache.as_ref().map(|c| c.0) != Some(slot) {
            cache = Some((slot, field.a_component(slice, 1, 1)));
        }
        let a = &cache.as_ref().expect("cache filled above").1;
        let diffusive = a.iter().any(|v| *v > 0.0);
        for line in &x_lines {
            transport(&mut u, &slice.drift[0], line, 0.5 * dt / hx, flux, &mut buf);
        }
        for line in &v_lines {
            transport(&mut u, &slice.drift[1], line, dt / hv, flux, &mut buf);
            if diffusive {
                diffuse(&mut u, a, line, dt / hv, hv, &mut buf);
            }
        }
        for line in &x_lines {
            transport(&mut u, &slice.drift[0], line, 0.5 * dt / hx, flux, &mut buf);
        }
        if (k + 1) % record_every == 0 || k + 1 == steps {
            evo.record((k + 1) as f64 * dt, &u);
        }
    }
    Ok(evo)
}

/// Checks `max u(t_k) ≤ max u⁰ (1 + 1e−8)` at every stamp.
pub fn max_principle_check(evolution: &DensityEvolution) -> Report {
    let max0 = evolution.densities[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bound = max0 * (1.0 + MAX_PRINCIPLE_TOL);
    let mut r = Report::new("max_principle");
    r.constant("initial_max", max0).constant("tolerance", MAX_PRINCIPLE_TOL);
    let mut worst: f64 = 0.0;
    for (k, u) in evolution.densities.iter().enumerate() {
        let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(m);
        if m > bound {
            r.record_violation(vec![evolution.stamps[k]], m, bound);
        }
    }
    r.constant("worst_max", worst);
    r
}

/// Marginal masses along v (summed over x) of stamp `k`, as a density in v.
pub fn v_marginal(evolution: &DensityEvolution, k: usize) -> Vec<f64> {
    let [nx, nv] = evolution.grid.shape();
    let hx = evolution.grid.axis(0).width();
    let u = &evolution.densities[k];
    (0..nv)
        .map(|j| (0..nx).map(|i| u[i * nv + j]).sum::<f64>() * hx)
        .collect()
}

/// Variance of the v-marginal of stamp `k`.
pub fn v_variance(evolution: &DensityEvolution, k: usize) -> f64 {
    let m = v_marginal(evolution, k);
    let vs = evolution.grid.coords(1);
    let hv = evolution.grid.axis(1).width();
    let mass: f64 = m.iter().sum::<f64>() * hv;
    let mean = m.iter().zip(&vs).map(|(p, v)| p * v).sum::<f64>() * hv / mass;
    m.iter().zip(&vs).map(|(p, v)| p * (v - mean) * (v - mean)).sum::<f64>() * hv / mass
}
