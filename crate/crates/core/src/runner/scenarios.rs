//! The seven scenario graphs.

use std::path::Path;

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::output::{Manifest, Sink};
use crate::error::{precondition, Result};
use crate::fields::{mollify, preset_field, CoefficientField};
use crate::fpe::{
    calibrate_c2, energy_monitor, initial_from_fn, law_compare, max_principle_check, solve_fp_1d, solve_kinetic,
    stationary_bound, stationary_bound_check, v_variance, DensityEvolution,
};
use crate::grid::Grid;
use crate::law::Estimator;
use crate::maxops::{gradient_norm, maximal, maximal_modified, RadiusSchedule};
use crate::norms::{holder_domination_check, norm_of, semicontinuity_probe, NormKind, ProbeSettings};
use crate::report::{Report, Table};
use crate::sde::functionals::{shell_weights, shells_in};
use crate::sde::{
    cauchy_diagnostic, dyadic_eps_schedule, l_eps_functional, q_functional, q_tilde_functional, simulate_ensemble,
    tail_probability, uniqueness_map, BrownianStore, FunctionalSeries, InitialSpec, LFlavor, PathEnsemble, TimeGrid,
};

/// Largest tolerated fraction of paths leaving the grid box.
pub const EXIT_LIMIT: f64 = 1e-3;
/// Minimum length of a strictly decreasing run of block averages.
pub const BLOCK_RUN: usize = 3;
/// Absolute slack, in units of C, of the stationary bound check.
pub const STATIONARY_TOL: f64 = 1e-3;
/// Default L¹ tolerance of the Monte Carlo vs PDE comparison.
pub const LAW_L1_TOL: f64 = 0.05;
/// Relative tolerance of the v-variance growth check.
pub const VARIANCE_REL_TOL: f64 = 0.02;
/// Default ε range of the dyadic block schedule.
pub const BLOCK_EPS_RANGE: (f64, f64) = (1e-20, 0.5);

/// Validates `config`, runs its graph into `dir` and returns the manifest.
/// On a failing stage the manifest is left flagged incomplete and the error
/// is returned.
pub fn run_scenario(config: &ScenarioConfig, dir: &Path) -> Result<Manifest> {
    config.validate()?;
    let mut sink = Sink::create(dir, config)?;
    let outcome = match config.scenario.as_str() {
        "thm_multidim_convergence" => convergence(config, &mut sink, false),
        "thm_1d_convergence" => convergence(config, &mut sink, true),
        "elliptic_energy" => elliptic_energy(config, &mut sink),
        "stationary_1d" => stationary(config, &mut sink),
        "kinetic_langevin" => kinetic(config, &mut sink),
        "ae_uniqueness_map" => ae_map(config, &mut sink),
        "norm_audit" => norm_audit(config, &mut sink),
        other => Err(precondition(format!("no graph for scenario {other}"))),
    };
    match outcome {
        Ok(()) => sink.finish(),
        Err(e) => {
            sink.abort(e.to_string())?;
            Err(e)
        }
    }
}

fn base_field(cfg: &ScenarioConfig) -> Result<(Grid, CoefficientField)> {
    let grid = cfg.grid.build()?;
    let field = preset_field(&cfg.preset, &cfg.params, &grid)?;
    Ok((grid, field))
}

fn initial_spec(cfg: &ScenarioConfig, d: usize) -> InitialSpec {
    cfg.initial.clone().unwrap_or(InitialSpec::Gaussian {
        mean: vec![0.0; d],
        std: vec![1.0; d],
    })
}

/// Grid density of a point, Gaussian or uniform initial law.
fn initial_density(spec: &InitialSpec, grid: &Grid) -> Result<Vec<f64>> {
    match spec {
        InitialSpec::Point { x } => {
            let mut u = vec![0.0; grid.len()];
            u[grid.nearest_index(x)] = 1.0;
            Ok(u)
        }
        InitialSpec::Gaussian { mean, std } => initial_from_fn(grid, |x| {
            x.iter()
                .zip(mean.iter().zip(std))
                .map(|(xi, (m, s))| (-(xi - m) * (xi - m) / (2.0 * s * s)).exp())
                .product()
        }),
        InitialSpec::Uniform { lo, hi } => initial_from_fn(grid, |x| {
            let inside = x.iter().enumerate().all(|(k, xi)| *xi >= lo[k] && *xi <= hi[k]);
            if inside {
                1.0
            } else {
                0.0
            }
        }),
        InitialSpec::Samples { .. } => Err(precondition("density scenarios need a point, gaussian or uniform law")),
    }
}

fn store_for(cfg: &ScenarioConfig, field: &CoefficientField, dt: f64) -> Result<BrownianStore> {
    let steps = (cfg.horizon / dt).round() as usize;
    BrownianStore::new(cfg.seed, cfg.n_paths, steps, dt, field.noise_dim())
}

/// Exit fractions of ensembles labelled by their mollification scale.
fn exits_report(ensembles: &[(f64, &PathEnsemble)]) -> Report {
    let mut r = Report::new("ensemble_exits");
    r.constant("limit", EXIT_LIMIT);
    for (k, (delta, e)) in ensembles.iter().enumerate() {
        let frac = e.exit_fraction();
        r.constant(&format!("exit_fraction_{k}"), frac);
        if frac >= EXIT_LIMIT {
            r.record_violation(vec![*delta], frac, EXIT_LIMIT);
        }
    }
    r
}

fn sweep_table(series: &[FunctionalSeries]) -> Table {
    let mut t = Table::new(&["epsilon", "t", "EQ", "stderr"]);
    for s in series {
        let eps = s.epsilon.unwrap_or(f64::NAN);
        for k in 0..s.stamps.len() {
            t.push(vec![eps, s.stamps[k], s.values[k], s.stderr[k]]);
        }
    }
    t
}

/// Checks that `sup_t EQ^ε / |log ε|` does not grow as ε decreases, within
/// `z` combined standard errors.
pub fn q_log_ratio_check(series: &[FunctionalSeries], z: f64) -> Report {
    let mut sorted: Vec<&FunctionalSeries> = series.iter().collect();
    sorted.sort_by(|a, b| b.epsilon.partial_cmp(&a.epsilon).expect("finite epsilons"));
    let mut r = Report::new("q_log_ratio");
    r.constant("z", z);
    let ratios: Vec<(f64, f64, f64)> = sorted
        .iter()
        .map(|s| {
            let eps = s.epsilon.unwrap_or(f64::NAN);
            let (v, se) = s.sup();
            let log = eps.ln().abs();
            (eps, v / log, se / log)
        })
        .collect();
    let mut t = Table::new(&["epsilon", "ratio", "stderr"]);
    for &(eps, v, se) in &ratios {
        t.push(vec![eps, v, se]);
    }
    for w in ratios.windows(2) {
        let allowed = w[0].1 + z * (w[0].2 * w[0].2 + w[1].2 * w[1].2).sqrt();
        if w[1].1 > allowed {
            r.record_violation(vec![w[1].0], w[1].1, allowed);
        }
    }
    r.tables.insert("ratios".into(), t);
    r
}

/// `E L_ε(Δ_t) ≥ P(|Δ_t| > ε)` at every stamp and every ε, exactly.
pub fn l_eps_tail_check(a: &PathEnsemble, b: &PathEnsemble, epsilons: &[f64]) -> Result<Report> {
    let mut r = Report::new("l_eps_dominates_tail");
    let mut t = Table::new(&["epsilon", "t", "EL", "tail"]);
    for &eps in epsilons {
        let l = l_eps_functional(a, b, eps, LFlavor::Plateau)?;
        let p = tail_probability(a, b, eps)?;
        for k in 0..l.stamps.len() {
            t.push(vec![eps, l.stamps[k], l.values[k], p.values[k]]);
            if l.values[k] < p.values[k] {
                r.record_violation(vec![eps, l.stamps[k]], l.values[k], p.values[k]);
            }
        }
    }
    r.tables.insert("series".into(), t);
    Ok(r)
}

/// Block averages `(1/|J_i|) Σ_{k∈J_i} β_k` over the dyadic schedule, with
/// `h̄ = |F| + M_{1/a_i}|∇F|` of `field` on its grid.
pub fn block_averages(
    field: &CoefficientField,
    a: &PathEnsemble,
    b: &PathEnsemble,
    eps_range: (f64, f64),
    horizon: f64,
) -> Result<Table> {
    let grid = field.grid();
    let drift = &field.slices()[0].drift[0];
    let grad = gradient_norm(grid, &[drift]);
    let mut t = Table::new(&["a", "b", "shells", "average"]);
    for (lo, hi) in dyadic_eps_schedule(eps_range.0, eps_range.1)? {
        let ml = maximal_modified(grid, &grad, 1.0 / lo)?;
        let hbar: Vec<f64> = drift.iter().zip(&ml).map(|(f, m)| f.abs() + m).collect();
        let shells = shells_in(lo, hi);
        let beta = shell_weights(a, b, grid, &hbar, &shells, horizon)?;
        let avg = beta.iter().sum::<f64>() / beta.len().max(1) as f64;
        t.push(vec![lo, hi, shells.len() as f64, avg]);
    }
    Ok(t)
}

/// Longest run of consecutive blocks with strictly decreasing averages.
pub fn longest_decreasing_run(averages: &[f64]) -> usize {
    let mut best = averages.len().min(1);
    let mut run = best;
    for w in averages.windows(2) {
        run = if w[1] < w[0] { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

fn convergence(cfg: &ScenarioConfig, sink: &mut Sink, one_d: bool) -> Result<()> {
    let (grid, base) = base_field(cfg)?;
    let dt = cfg.sde_dt();
    let store = store_for(cfg, &base, dt)?;
    let time = TimeGrid::new(dt, cfg.horizon, cfg.record_every)?;
    let init = initial_spec(cfg, grid.dim());
    let fields: Vec<CoefficientField> = cfg.deltas.iter().map(|&d| mollify(&base, d)).collect::<Result<_>>()?;
    let family: Vec<(CoefficientField, PathEnsemble)> = fields
        .into_iter()
        .map(|f| {
            let e = simulate_ensemble(&f, &init, &time, cfg.n_paths, &store)?;
            Ok((f, e))
        })
        .collect::<Result<_>>()?;
    let labelled: Vec<(f64, &PathEnsemble)> = family.iter().map(|(f, e)| (f.provenance().delta, e)).collect();
    sink.report(&exits_report(&labelled))?;

    let (matrix, report) = cauchy_diagnostic(&family, cfg.p, cfg.horizon, &cfg.rules, cfg.z)?;
    sink.json("cauchy_matrix", &matrix)?;
    sink.report(&report)?;

    let n = family.len();
    let (coarse, fine) = (&family[n - 2].1, &family[n - 1].1);
    let q: Vec<FunctionalSeries> = cfg
        .epsilons
        .iter()
        .map(|&e| q_functional(coarse, fine, e))
        .collect::<Result<_>>()?;
    sink.series("q_sweep", &sweep_table(&q))?;
    sink.report(&q_log_ratio_check(&q, cfg.z))?;

    let (first, last) = (&family[0].1, &family[n - 1].1);
    sink.report(&l_eps_tail_check(first, last, &cfg.epsilons)?)?;

    if one_d {
        let fine_field = &family[n - 1].0;
        let grad = gradient_norm(&grid, &[&fine_field.slices()[0].drift[0]]);
        let h_tilde = maximal(&grid, &grad, &RadiusSchedule::for_grid(&grid)?)?;
        let qt: Vec<FunctionalSeries> = cfg
            .epsilons
            .iter()
            .map(|&e| q_tilde_functional(coarse, fine, e, &grid, &h_tilde))
            .collect::<Result<_>>()?;
        sink.series("q_tilde_sweep", &sweep_table(&qt))?;

        let blocks = block_averages(&family[0].0, first, last, BLOCK_EPS_RANGE, cfg.horizon)?;
        let avgs = blocks.column("average").expect("column exists");
        let run = longest_decreasing_run(&avgs);
        let mut r = Report::new("uniqueness_blocks");
        r.constant("longest_decreasing_run", run as f64)
            .constant("required_run", BLOCK_RUN as f64);
        if run < BLOCK_RUN {
            r.record_violation(vec![], run as f64, BLOCK_RUN as f64);
        }
        r.tables.insert("averages".into(), blocks);
        sink.report(&r)?;
    }
    Ok(())
}

fn density_report(evo: &DensityEvolution) -> Report {
    let mut r = Report::new("mass_positivity");
    let (drift, min) = (evo.mass_drift(), evo.min_value());
    r.constant("mass_drift", drift).constant("min_value", min);
    if drift > 1e-10 {
        r.record_violation(vec![], drift, 1e-10);
    }
    if min < 0.0 {
        r.record_violation(vec![], min, 0.0);
    }
    r
}

fn elliptic_energy(cfg: &ScenarioConfig, sink: &mut Sink) -> Result<()> {
    let (grid, field) = base_field(cfg)?;
    let u0 = initial_density(&initial_spec(cfg, 1), &grid)?;
    let evo = solve_fp_1d(&field, &u0, cfg.horizon, cfg.dt, cfg.record_every)?;
    sink.report(&density_report(&evo))?;
    sink.series("density", &evo.snapshot_table(cfg.snapshot_stride))?;
    let spec = cfg.energy();
    let c2 = calibrate_c2(&spec.alphas)?;
    let energy = energy_monitor(&evo, &field, &spec.alphas, spec.p, spec.q, c2)?;
    sink.series("energy", &energy.table())?;
    let mut report = energy.to_report("energy_monitor");
    report.tables.clear();
    sink.report(&report)
}

fn stationary(cfg: &ScenarioConfig, sink: &mut Sink) -> Result<()> {
    let (grid, field) = base_field(cfg)?;
    let init = initial_spec(cfg, 1);
    let u0 = initial_density(&init, &grid)?;
    let evo = solve_fp_1d(&field, &u0, cfg.horizon, cfg.dt, cfg.record_every)?;
    sink.report(&density_report(&evo))?;
    sink.series("density", &evo.snapshot_table(cfg.snapshot_stride))?;

    let c = match cfg.stationary_c {
        Some(c) => c,
        None => {
            let unit = stationary_bound(&field, 1.0)?;
            evo.densities[0]
                .iter()
                .zip(&unit)
                .map(|(u, b)| u / b)
                .fold(0.0, f64::max)
        }
    };
    let mut bound_table = Table::new(&["x", "bound"]);
    for (i, b) in stationary_bound(&field, c)?.iter().enumerate() {
        bound_table.push(vec![grid.point(i)[0], *b]);
    }
    sink.series("stationary_bound", &bound_table)?;
    sink.report(&stationary_bound_check(&field, &evo, c, STATIONARY_TOL)?)?;

    let dt = cfg.sde_dt();
    let store = store_for(cfg, &field, dt)?;
    let steps = store.steps();
    let ens = simulate_ensemble(
        &field,
        &init,
        &TimeGrid::new(dt, cfg.horizon, steps)?,
        cfg.n_paths,
        &store,
    )?;
    sink.report(&exits_report(&[(0.0, &ens)]))?;
    let mc = ens.law(&grid, Estimator::Histogram)?;
    let dist = law_compare(&mc, &evo.to_law()?)?;
    let tol = cfg.law_l1_tol.unwrap_or(LAW_L1_TOL);
    let mut r = Report::new("law_compare");
    r.constant("l1", dist.l1).constant("l1_tol", tol);
    if let Some(w1) = dist.w1 {
        r.constant("w1", w1);
    }
    if dist.l1 >= tol {
        r.record_violation(vec![cfg.horizon], dist.l1, tol);
    }
    sink.report(&r)
}

fn kinetic(cfg: &ScenarioConfig, sink: &mut Sink) -> Result<()> {
    let (grid, field) = base_field(cfg)?;
    let init = cfg.initial.clone().unwrap_or(InitialSpec::Gaussian {
        mean: vec![0.0, 0.0],
        std: vec![0.5, 0.5],
    });
    let u0 = initial_density(&init, &grid)?;
    let evo = solve_kinetic(&field, &u0, cfg.horizon, cfg.dt, cfg.record_every, cfg.flux)?;
    sink.report(&density_report(&evo))?;
    sink.report(&max_principle_check(&evo))?;
    sink.series("density", &evo.snapshot_table(cfg.snapshot_stride))?;

    let mut table = Table::new(&["t", "v_variance"]);
    let vars: Vec<f64> = (0..evo.stamps.len()).map(|k| v_variance(&evo, k)).collect();
    for (t, v) in evo.stamps.iter().zip(&vars) {
        table.push(vec![*t, *v]);
    }
    sink.series("v_variance", &table)?;

    // the 2at law only holds without v-forcing and with constant a_vv
    let slice = &field.slices()[0];
    let a = field.a_component(slice, 1, 1);
    let force_free = field.is_autonomous() && slice.drift[1].iter().all(|f| *f == 0.0);
    if force_free && a.iter().all(|v| *v == a[0]) {
        let mut r = Report::new("v_variance_growth");
        r.constant("a", a[0]).constant("rel_tol", VARIANCE_REL_TOL);
        for k in 1..vars.len() {
            let expect = 2.0 * a[0] * evo.stamps[k];
            let got = vars[k] - vars[0];
            if (got - expect).abs() > VARIANCE_REL_TOL * expect {
                r.record_violation(vec![evo.stamps[k]], got, expect);
            }
        }
        sink.report(&r)?;
    }
    Ok(())
}

fn ae_map(cfg: &ScenarioConfig, sink: &mut Sink) -> Result<()> {
    let (_, base) = base_field(cfg)?;
    let dt = cfg.sde_dt();
    let store = store_for(cfg, &base, dt)?;
    let time = TimeGrid::new(dt, cfg.horizon, cfg.record_every)?;
    let builds: Vec<CoefficientField> = cfg.deltas.iter().map(|&d| mollify(&base, d)).collect::<Result<_>>()?;
    let points = cfg.points.as_ref().expect("validated").flatten();
    let eps = cfg.epsilons[0];
    let threshold = cfg.threshold.unwrap_or(f64::INFINITY);
    let maps = (0..builds.len() - 1)
        .into_par_iter()
        .map(|i| {
            uniqueness_map(
                &builds[i],
                &time,
                &builds[i + 1],
                &time,
                &points,
                cfg.n_paths,
                &store,
                eps,
                threshold,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, m) in maps.iter().enumerate() {
        sink.series(&format!("uniqueness_map_{i}"), &m.table())?;
    }
    if let Some(th) = cfg.threshold {
        let mut r = Report::new("uniqueness_threshold");
        r.constant("threshold", th)
            .constant("fraction_below", maps[0].fraction_below);
        let d = maps[0].dim;
        for (x, n) in maps[0].points.chunks_exact(d).zip(&maps[0].n_eps) {
            if *n > th {
                r.record_violation(x.to_vec(), *n, th);
            }
        }
        sink.report(&r)?;
    }
    if maps.len() >= 2 {
        let mut r = Report::new("uniqueness_refinement");
        r.constant("z", cfg.z);
        for w in maps.windows(2) {
            let d = w[0].dim;
            for (i, x) in w[0].points.chunks_exact(d).enumerate() {
                let (s0, s1) = (w[0].n_stderr[i], w[1].n_stderr[i]);
                let allowed = w[0].n_eps[i] + cfg.z * (s0 * s0 + s1 * s1).sqrt();
                if w[1].n_eps[i] > allowed {
                    r.record_violation(x.to_vec(), w[1].n_eps[i], allowed);
                }
            }
        }
        sink.report(&r)?;
    }
    Ok(())
}

fn norm_audit(cfg: &ScenarioConfig, sink: &mut Sink) -> Result<()> {
    let (grid, field) = base_field(cfg)?;
    let dt = cfg.sde_dt();
    let store = store_for(cfg, &field, dt)?;
    let time = TimeGrid::new(dt, cfg.horizon, cfg.record_every)?;
    let ens = simulate_ensemble(&field, &initial_spec(cfg, 1), &time, cfg.n_paths, &store)?;
    sink.report(&exits_report(&[(0.0, &ens)]))?;
    let law = ens.law(&grid, Estimator::Kde)?;
    for (name, kind) in [
        ("norm_h1", NormKind::H1),
        ("norm_w11", NormKind::W11),
        ("norm_wphi_weak", NormKind::WphiWeak),
        ("norm_hhalf", NormKind::Hhalf),
    ] {
        sink.json(name, &norm_of(&field, cfg.part, kind, &law, cfg.horizon)?)?;
    }
    let smoothing = if cfg.smoothing.is_empty() {
        &cfg.deltas
    } else {
        &cfg.smoothing
    };
    let probe = semicontinuity_probe(
        &field,
        cfg.part,
        NormKind::H1,
        &law,
        cfg.horizon,
        &cfg.deltas,
        smoothing,
        &ProbeSettings::default(),
    )?;
    sink.report(&probe)?;
    sink.report(&holder_domination_check(
        &field,
        cfg.part,
        &law,
        cfg.horizon,
        cfg.p,
        cfg.p,
    )?)
}
