//! Weighted norms of coefficients relative to a law `u`, evaluated by grid
//! quadrature or pathwise along an ensemble.
//!
//! * H1: `‖σ‖² = ∫∫ |σ|² u + ∫∫ (M|∇σ|)² u`
//! * W11: `∫∫ M|∇F| u` (degree one, not squared)
//! * W^{φ,weak}: `max_L φ(L)/(L log L) · ∫∫ (|F| + M_L|∇F|) u` over an L grid
//! * H^{1/2}: `‖σ‖² = ∫∫ (M|∂^{1/2}σ|)² u`

use serde::{Deserialize, Serialize};

use crate::error::{param, precondition, Result};
use crate::fields::{mollify, CoefficientField};
use crate::grid::Grid;
use crate::law::Law;
use crate::maxops::{gradient_norm, half_derivative, maximal, maximal_modified, RadiusSchedule};
use crate::report::{mean_stderr, Report, Table};
use crate::sde::PathEnsemble;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    H1,
    W11,
    WphiWeak,
    Hhalf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    Pathwise,
}

/// Which coefficient a norm is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Drift,
    Diffusion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub kind: NormKind,
    pub value: f64,
    pub method: Method,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "L_grid", skip_serializing_if = "Option::is_none")]
    pub l_grid: Option<Vec<f64>>,
    #[serde(rename = "argmax_L", skip_serializing_if = "Option::is_none")]
    pub argmax_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<f64>,
}

/// Law against which a norm is integrated.
#[derive(Clone, Copy, Debug)]
pub enum Weighting<'a> {
    Quadrature(&'a Law),
    Pathwise(&'a PathEnsemble),
}

/// Super-linear weight in the W^{φ,weak} norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiWeight {
    /// `φ(L) = L √(1 + log L)`.
    Default,
    /// `L/φ(L) = C√ℓ/ℓ + C√ℓ/ψ(√ℓ)` with `ℓ = log L` and `ψ` piecewise
    /// linear through `psi` (extended linearly past the last knot).
    Appendix { c: f64, psi: Vec<(f64, f64)> },
    /// Piecewise-linear `φ` through the given `(L, φ(L))` knots.
    Table { knots: Vec<(f64, f64)> },
}

fn piecewise_linear(knots: &[(f64, f64)], x: f64) -> f64 {
    let k = knots.partition_point(|p| p.0 <= x);
    let (a, b) = if k == 0 {
        (knots[0], knots[1])
    } else if k >= knots.len() {
        (knots[knots.len() - 2], knots[knots.len() - 1])
    } else {
        (knots[k - 1], knots[k])
    };
    a.1 + (x - a.0) * (b.1 - a.1) / (b.0 - a.0)
}

impl PhiWeight {
    /// Appendix weight with a fitted modulus `ψ(s) = s log(e + s)` sampled on
    /// powers of two.
    pub fn appendix_fitted(c: f64) -> Self {
        let psi = std::iter::once(0.0)
            .chain((0..=12).map(|k| 2f64.powi(k)))
            .map(|s| (s, s * (std::f64::consts::E + s).ln()))
            .collect();
        PhiWeight::Appendix { c, psi }
    }

    pub fn phi(&self, l: f64) -> f64 {
        match self {
            PhiWeight::Default => l * (1.0 + l.ln()).sqrt(),
            PhiWeight::Appendix { c, psi } => {
                let ll = l.ln();
                let s = ll.sqrt();
                l / (c * s / ll + c * s / piecewise_linear(psi, s))
            }
            PhiWeight::Table { knots } => piecewise_linear(knots, l),
        }
    }

    /// `φ(L) / (L log L)`.
    pub fn weight(&self, l: f64) -> f64 {
        self.phi(l) / (l * l.ln())
    }

    /// Checks that `φ(L)/L` is nondecreasing along `grid` and grows overall.
    pub fn check_superlinear(&self, grid: &[f64]) -> Result<()> {
        let ratios: Vec<f64> = grid.iter().map(|&l| self.phi(l) / l).collect();
        if ratios.windows(2).any(|w| w[1] < w[0]) || ratios.last() <= ratios.first() {
            return Err(param("phi", "φ(L)/L must be nondecreasing and growing on the L grid"));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            PhiWeight::Default => true,
            PhiWeight::Appendix { c, psi } => *c > 0.0 && psi.len() >= 2 && psi.windows(2).all(|w| w[1].0 > w[0].0),
            PhiWeight::Table { knots } => knots.len() >= 2 && knots.windows(2).all(|w| w[1].0 > w[0].0),
        };
        if ok {
            Ok(())
        } else {
            Err(param(
                "phi",
                "needs a positive constant and at least two increasing knots",
            ))
        }
    }
}

/// `L = e^{2^k}` for `k = 0..count`, a grid geometric in `log L`. Stops
/// at the last finite value (`k = 9`).
pub fn default_l_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| 2f64.powi(k as i32).exp())
        .take_while(|l| l.is_finite())
        .collect()
}

fn components(field: &CoefficientField, part: Part, t: f64) -> Vec<&[f64]> {
    let s = field.slice_at(t);
    match part {
        Part::Drift => s.drift.iter().map(Vec::as_slice).collect(),
        Part::Diffusion => s.diffusion.iter().map(Vec::as_slice).collect(),
    }
}

fn pointwise_norm(comps: &[&[f64]], len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .collect()
}

/// `|σ|² + (M|∇σ|)²` on the nodes.
pub fn h1_integrand(field: &CoefficientField, part: Part, t: f64, schedule: &RadiusSchedule) -> Result<Vec<f64>> {
    let grid = field.grid();
    let comps = components(field, part, t);
    let m = maximal(grid, &gradient_norm(grid, &comps), schedule)?;
    let v = pointwise_norm(&comps, grid.len());
    Ok(v.iter().zip(&m).map(|(a, b)| a * a + b * b).collect())
}

/// `M|∇F|` on the nodes.
pub fn w11_integrand(field: &CoefficientField, part: Part, t: f64, schedule: &RadiusSchedule) -> Result<Vec<f64>> {
    let grid = field.grid();
    maximal(grid, &gradient_norm(grid, &components(field, part, t)), schedule)
}

/// `|F| + M_L|∇F|` on the nodes.
pub fn wphi_integrand(field: &CoefficientField, part: Part, t: f64, l: f64) -> Result<Vec<f64>> {
    let grid = field.grid();
    let comps = components(field, part, t);
    let ml = maximal_modified(grid, &gradient_norm(grid, &comps), l)?;
    Ok(pointwise_norm(&comps, grid.len())
        .iter()
        .zip(&ml)
        .map(|(a, b)| a + b)
        .collect())
}

/// `(M|∂^{1/2}σ|)²` on the nodes (one-dimensional periodic grids).
pub fn h_half_integrand(field: &CoefficientField, part: Part, t: f64, schedule: &RadiusSchedule) -> Result<Vec<f64>> {
    let grid = field.grid();
    if grid.dim() != 1 {
        return Err(precondition("the H^{1/2} norm is one-dimensional"));
    }
    let comps = components(field, part, t);
    let mut acc = vec![0.0; grid.len()];
    for c in &comps {
        for (a, v) in acc.iter_mut().zip(half_derivative(grid, c)?) {
            *a += v * v;
        }
    }
    acc.iter_mut().for_each(|a| *a = a.sqrt());
    Ok(maximal(grid, &acc, schedule)?.into_iter().map(|m| m * m).collect())
}

/// `∫₀^T ∫ g u dt` and, for pathwise weighting, the Monte Carlo standard
/// error. `g(t)` returns node values on the field grid; it is evaluated once
/// per coefficient slice.
fn integrate<G>(field: &CoefficientField, weighting: Weighting, horizon: f64, g: G) -> Result<(f64, Option<f64>)>
where
    G: Fn(f64) -> Result<Vec<f64>>,
{
    if !(horizon > 0.0) {
        return Err(param("T", "horizon must be positive"));
    }
    let grid = field.grid();
    let mut cache: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut at = |t: f64| -> Result<Vec<f64>> {
        let key = field.slice_at(t).time;
        if let Some((_, v)) = cache.iter().find(|(k, _)| *k == key) {
            return Ok(v.clone());
        }
        let v = g(t)?;
        cache.push((key, v.clone()));
        Ok(v)
    };
    match weighting {
        Weighting::Quadrature(law) => {
            grid.ensure_same(law.grid(), "norm quadrature")?;
            Ok((law.time_integral(horizon, at)?, None))
        }
        Weighting::Pathwise(ens) => {
            if ens.dim() != grid.dim() {
                return Err(precondition("ensemble and field dimensions differ"));
            }
            let values: Vec<Vec<f64>> = ens.stamps().iter().map(|&t| at(t)).collect::<Result<_>>()?;
            let per_path = ens.path_integrals(horizon, |k, x| grid.interpolate(&values[k], x));
            let (m, se) = mean_stderr(&per_path);
            Ok((m, Some(se)))
        }
    }
}

fn method_of(w: Weighting) -> Method {
    match w {
        Weighting::Quadrature(_) => Method::Quadrature,
        Weighting::Pathwise(_) => Method::Pathwise,
    }
}

/// Square root with the delta-method standard error.
fn root(kind: NormKind, w: Weighting, horizon: f64, (sq, se): (f64, Option<f64>)) -> NormValue {
    let value = sq.max(0.0).sqrt();
    NormValue {
        kind,
        value,
        method: method_of(w),
        horizon,
        l_grid: None,
        argmax_l: None,
        mc_stderr: se.map(|s| if value > 0.0 { s / (2.0 * value) } else { s.sqrt() }),
    }
}

fn schedule_for(grid: &Grid, schedule: Option<&RadiusSchedule>) -> Result<RadiusSchedule> {
    match schedule {
        Some(s) => Ok(s.clone()),
        None => RadiusSchedule::for_grid(grid),
    }
}

pub fn h1_norm(
    field: &CoefficientField,
    part: Part,
    weighting: Weighting,
    horizon: f64,
    schedule: Option<&RadiusSchedule>,
) -> Result<NormValue> {
    let grid = field.grid();
    let sched = schedule_for(grid, schedule)?;
    let r = integrate(field, weighting, horizon, |t| h1_integrand(field, part, t, &sched))?;
    Ok(root(NormKind::H1, weighting, horizon, r))
}

pub fn w11_norm(
    field: &CoefficientField,
    part: Part,
    weighting: Weighting,
    horizon: f64,
    schedule: Option<&RadiusSchedule>,
) -> Result<NormValue> {
    let grid = field.grid();
    let sched = schedule_for(grid, schedule)?;
    let (value, se) = integrate(field, weighting, horizon, |t| w11_integrand(field, part, t, &sched))?;
    Ok(NormValue {
        kind: NormKind::W11,
        value,
        method: method_of(weighting),
        horizon,
        l_grid: None,
        argmax_l: None,
        mc_stderr: se,
    })
}

pub fn wphi_weak_norm(
    field: &CoefficientField,
    part: Part,
    weighting: Weighting,
    horizon: f64,
    phi: &PhiWeight,
    l_grid: &[f64],
) -> Result<NormValue> {
    if l_grid.is_empty() {
        return Err(param("L_grid", "must not be empty"));
    }
    if let Some(l) = l_grid.iter().find(|l| !(**l >= std::f64::consts::E * (1.0 - 1e-15))) {
        return Err(param("L_grid", format!("entries must be at least e, found {l}")));
    }
    phi.validate()?;
    let mut best = (f64::NEG_INFINITY, l_grid[0], None);
    for &l in l_grid {
        let (v, se) = integrate(field, weighting, horizon, |t| wphi_integrand(field, part, t, l))?;
        let w = phi.weight(l);
        if w * v > best.0 {
            best = (w * v, l, se.map(|s| w * s));
        }
    }
    Ok(NormValue {
        kind: NormKind::WphiWeak,
        value: best.0,
        method: method_of(weighting),
        horizon,
        l_grid: Some(l_grid.to_vec()),
        argmax_l: Some(best.1),
        mc_stderr: best.2,
    })
}

pub fn h_half_norm(
    field: &CoefficientField,
    part: Part,
    weighting: Weighting,
    horizon: f64,
    schedule: Option<&RadiusSchedule>,
) -> Result<NormValue> {
    let grid = field.grid();
    if grid.dim() != 1 {
        return Err(precondition("the H^{1/2} norm is one-dimensional"));
    }
    let sched = schedule_for(grid, schedule)?;
    let r = integrate(field, weighting, horizon, |t| h_half_integrand(field, part, t, &sched))?;
    Ok(root(NormKind::Hhalf, weighting, horizon, r))
}

/// Evaluates `kind` by quadrature against `u` with default settings.
pub fn norm_of(field: &CoefficientField, part: Part, kind: NormKind, u: &Law, horizon: f64) -> Result<NormValue> {
    let w = Weighting::Quadrature(u);
    match kind {
        NormKind::H1 => h1_norm(field, part, w, horizon, None),
        NormKind::W11 => w11_norm(field, part, w, horizon, None),
        NormKind::WphiWeak => wphi_weak_norm(field, part, w, horizon, &PhiWeight::Default, &default_l_grid(5)),
        NormKind::Hhalf => h_half_norm(field, part, w, horizon, None),
    }
}

/// Settings of the semicontinuity probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    /// Relative slack in `‖σ‖ ≤ min_tail ‖σ_n‖ (1 + rel_tol)`.
    pub rel_tol: f64,
    /// Fraction of each schedule treated as its tail.
    pub tail_fraction: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            rel_tol: 0.05,
            tail_fraction: 0.5,
        }
    }
}

/// Checks lower semicontinuity numerically in both directions:
/// `σ_n = mollify(σ, δ_n)` against fixed `u`, and fixed `σ` against
/// `u_n = u` smoothed by a heat kernel of scale `s_n`.
#[allow(clippy::too_many_arguments)]
pub fn semicontinuity_probe(
    field: &CoefficientField,
    part: Part,
    kind: NormKind,
    u: &Law,
    horizon: f64,
    deltas: &[f64],
    smoothing: &[f64],
    settings: &ProbeSettings,
) -> Result<Report> {
    if deltas.len() < 4 || smoothing.len() < 4 {
        return Err(param("schedule", "both schedules need at least 4 terms"));
    }
    if kind == NormKind::W11 {
        return Err(param("kind", "the probe covers H1, WphiWeak and Hhalf"));
    }
    let limit = norm_of(field, part, kind, u, horizon)?.value;
    let mut report = Report::new("semicontinuity");
    report.constant("limit_norm", limit);
    report.constant("rel_tol", settings.rel_tol);
    let mut table = Table::new(&["direction", "scale", "norm"]);
    let tail_len = |n: usize| ((n as f64 * settings.tail_fraction).ceil() as usize).clamp(1, n);

    let mut seq = Vec::new();
    for &d in deltas {
        let v = norm_of(&mollify(field, d)?, part, kind, u, horizon)?.value;
        table.push(vec![0.0, d, v]);
        seq.push(v);
    }
    let tail_min = seq[seq.len() - tail_len(seq.len())..]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    report.constant("coefficient_tail_min", tail_min);
    if limit > tail_min * (1.0 + settings.rel_tol) {
        report.record_violation(vec![0.0], limit, tail_min);
    }

    let mut seq = Vec::new();
    for &s in smoothing {
        let v = norm_of(field, part, kind, &u.smooth_heat(s)?, horizon)?.value;
        table.push(vec![1.0, s, v]);
        seq.push(v);
    }
    let tail_min = seq[seq.len() - tail_len(seq.len())..]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    report.constant("law_tail_min", tail_min);
    if limit > tail_min * (1.0 + settings.rel_tol) {
        report.record_violation(vec![1.0], limit, tail_min);
    }
    report.note("direction 0: mollified coefficients; direction 1: smoothed laws");
    report.tables.insert("sequence".into(), table);
    Ok(report)
}

/// Mixed norm `(∫ (∫ |g|^p dx)^{q/p} dt)^{1/q}` of node values per slice
/// (`values[k]` in force for `time_weights[k]`).
fn mixed_norm(values: &[Vec<f64>], time_weights: &[f64], vol: f64, p: f64, q: f64) -> f64 {
    values
        .iter()
        .zip(time_weights)
        .map(|(v, w)| {
            let inner = v.iter().map(|x| x.abs().powf(p)).sum::<f64>() * vol;
            w * inner.powf(q / p)
        })
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Both sides of `∫∫ G u ≤ ‖G‖_{L^q(L^p)} ‖u‖_{L^{q'}(L^{p'})}` with
/// `G = (M|∇σ|)²`.
pub fn holder_domination_check(
    field: &CoefficientField,
    part: Part,
    u: &Law,
    horizon: f64,
    p: f64,
    q: f64,
) -> Result<Report> {
    if !(p > 1.0) || !(q > 1.0) {
        return Err(param("p, q", "both exponents must exceed 1"));
    }
    let grid = field.grid();
    grid.ensure_same(u.grid(), "Hölder check")?;
    let sched = RadiusSchedule::for_grid(grid)?;
    let weights = u.time_weights(horizon);
    let mut g_slices = Vec::new();
    let mut u_slices = Vec::new();
    let mut lhs = 0.0;
    let vol = grid.cell_volume();
    for (k, &t) in u.stamps().iter().enumerate() {
        let m = w11_integrand(field, part, t, &sched)?;
        let g: Vec<f64> = m.iter().map(|v| v * v).collect();
        let dens = u.density(k);
        lhs += weights[k] * g.iter().zip(&dens).map(|(a, b)| a * b).sum::<f64>() * vol;
        g_slices.push(g);
        u_slices.push(dens);
    }
    let (pc, qc) = (p / (p - 1.0), q / (q - 1.0));
    let rhs = mixed_norm(&g_slices, &weights, vol, p, q) * mixed_norm(&u_slices, &weights, vol, pc, qc);
    let mut report = Report::new("holder_domination");
    report
        .constant("p", p)
        .constant("q", q)
        .constant("lhs", lhs)
        .constant("rhs", rhs);
    report.constant("ratio", if rhs > 0.0 { lhs / rhs } else { 0.0 });
    if lhs > rhs * (1.0 + 1e-12) {
        report.record_violation(vec![p, q], lhs, rhs);
    }
    Ok(report)
}
