use proptest::prelude::*;

use roughsde::fields::{mollify, preset_field, CoefficientField, Params, Provenance};
use roughsde::fpe::{cfl_limit_1d, initial_from_fn, solve_fp_1d};
use roughsde::grid::Grid;
use roughsde::law::Law;
use roughsde::maxops::{
    maximal, maximal_modified, nodes_in, sample_pairs, BoundKind, BoundParams, PointwiseBound, RadiusSchedule,
};
use roughsde::norms::{h1_norm, h_half_norm, w11_norm, Part, Weighting};
use roughsde::sde::{
    functionals::weight_process, l_eps, q_functional, simulate_ensemble, BrownianStore, InitialSpec, LFlavor,
    PathEnsemble, TimeGrid,
};

const PRESETS_1D: [&str; 5] = ["ou", "heat", "sqrt_diffusion", "kink_drift", "degenerate_1d"];

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Trigonometric polynomial with integer modes, periodic on [-π, π].
fn trig(coef: &[(f64, f64)], x: f64) -> f64 {
    coef.iter()
        .enumerate()
        .map(|(k, (a, p))| a * ((k + 1) as f64 * x + p).sin())
        .sum()
}

fn sigma_field(grid: &Grid, coef: &[(f64, f64)]) -> CoefficientField {
    let c = coef.to_vec();
    CoefficientField::from_fn(grid.clone(), 1, Provenance::custom("trig"), move |x, _, s| {
        s[0] = trig(&c, x[0])
    })
    .unwrap()
}

fn modes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, 0.0..6.3f64), 1..5)
}

fn periodic_line() -> Grid {
    Grid::line(-std::f64::consts::PI, std::f64::consts::PI, 64, true).unwrap()
}

fn small_ensembles(seed: u64, shift: f64) -> (PathEnsemble, PathEnsemble) {
    let g = Grid::line(-6.0, 6.0, 64, false).unwrap();
    let ou = preset_field("ou", &Params::new(), &g).unwrap();
    let stiff = preset_field("ou", &[("theta".to_string(), 2.0)].into_iter().collect(), &g).unwrap();
    let store = BrownianStore::new(seed, 200, 256, 1.0 / 256.0, 1).unwrap();
    let tg = TimeGrid::new(1.0 / 256.0, 1.0, 32).unwrap();
    let init = InitialSpec::Gaussian {
        mean: vec![shift],
        std: vec![0.5],
    };
    (
        simulate_ensemble(&ou, &init, &tg, 200, &store).unwrap(),
        simulate_ensemble(&stiff, &init, &tg, 200, &store).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grids_reject_few_cells_and_have_uniform_width(lo in -10.0..0.0f64, len in 0.1..20.0f64, cells in 1usize..64) {
        let g = Grid::line(lo, lo + len, cells, false);
        if cells < 8 {
            prop_assert!(g.is_err());
        } else {
            let g = g.unwrap();
            let x = g.coords(0);
            let h = g.axis(0).width();
            prop_assert!(close(h, len / cells as f64, 1e-12));
            prop_assert!(x.windows(2).all(|w| (w[1] - w[0] - h).abs() < 1e-9 * len));
        }
    }

    #[test]
    fn mollification_contracts_sup_norm(k in 0usize..5, delta in 0.05..0.5f64) {
        let g = Grid::line(-4.0, 4.0, 256, false).unwrap();
        let f = preset_field(PRESETS_1D[k], &Params::new(), &g).unwrap();
        let m = mollify(&f, delta).unwrap();
        let (s, t) = (&f.slices()[0], &m.slices()[0]);
        prop_assert!(sup(&t.drift[0]) <= sup(&s.drift[0]) * (1.0 + 1e-12));
        prop_assert!(sup(&t.diffusion[0]) <= sup(&s.diffusion[0]) * (1.0 + 1e-12));
    }

    #[test]
    fn mollification_error_is_lipschitz_times_delta(delta in 0.05..0.5f64, kink in any::<bool>()) {
        let g = Grid::line(-4.0, 4.0, 256, false).unwrap();
        let f = preset_field(if kink { "kink_drift" } else { "ou" }, &Params::new(), &g).unwrap();
        let m = mollify(&f, delta).unwrap();
        let err = f.slices()[0].drift[0].iter().zip(&m.slices()[0].drift[0]).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
        prop_assert!(err <= delta * (1.0 + 1e-12), "{err} > {delta}");
    }

    #[test]
    fn maximal_is_sublinear_and_monotone(
        f in prop::collection::vec(0.0..1.0f64, 65),
        g in prop::collection::vec(0.0..1.0f64, 65),
        lambda in 0.0..5.0f64,
    ) {
        let grid = Grid::line(-1.0, 1.0, 64, false).unwrap();
        let s = RadiusSchedule::for_grid(&grid).unwrap();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = f.iter().map(|a| lambda * a).collect();
        let (mf, mg) = (maximal(&grid, &f, &s).unwrap(), maximal(&grid, &g, &s).unwrap());
        let (msum, mscaled) = (maximal(&grid, &sum, &s).unwrap(), maximal(&grid, &scaled, &s).unwrap());
        for i in 0..grid.len() {
            prop_assert!(msum[i] <= mf[i] + mg[i] + 1e-12);
            prop_assert!((mscaled[i] - lambda * mf[i]).abs() <= 1e-12 * (1.0 + lambda));
            prop_assert!(msum[i] >= mf[i] - 1e-12);
        }
    }

    #[test]
    fn modified_maximal_is_monotone_and_above_sqrt_log(
        f in prop::collection::vec(0.0..3.0f64, 65),
        bump in prop::collection::vec(0.0..1.0f64, 65),
        l in 1.0..1e6f64,
    ) {
        let grid = Grid::line(-1.0, 1.0, 64, false).unwrap();
        let g: Vec<f64> = f.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let (mf, mg) = (maximal_modified(&grid, &f, l).unwrap(), maximal_modified(&grid, &g, l).unwrap());
        let floor = l.ln().sqrt();
        for i in 0..grid.len() {
            prop_assert!(mf[i] >= floor - 1e-12);
            prop_assert!(mg[i] >= mf[i] - 1e-12);
        }
    }

    #[test]
    fn violation_reports_are_consistent(c in modes(), seed in 0u64..1000) {
        let grid = periodic_line();
        let sigma = sigma_field(&grid, &c).slices()[0].diffusion[0].clone();
        let pairs = sample_pairs(&nodes_in(&grid, &[-3.0], &[3.0]), 500, seed);
        for kind in [BoundKind::Classic, BoundKind::Half] {
            let r = PointwiseBound::new(kind, &grid, &sigma, &BoundParams::default()).unwrap().scan(pairs.iter().cloned()).unwrap();
            prop_assert!(r.violations <= r.pairs_tested);
            prop_assert!(r.worst_ratio >= 0.0);
        }
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive(a in modes(), b in modes(), lambda in -3.0..3.0f64) {
        let grid = periodic_line();
        let law = Law::from_pdf(grid.clone(), |x| 1.0 + 0.5 * x[0].cos()).unwrap();
        let fa = sigma_field(&grid, &a);
        let fb = sigma_field(&grid, &b);
        let (ca, cb) = (a.clone(), b.clone());
        let fs = CoefficientField::from_fn(grid.clone(), 1, Provenance::custom("sum"), move |x, _, s| {
            s[0] = trig(&ca, x[0]) + trig(&cb, x[0])
        })
        .unwrap();
        let scaled: Vec<(f64, f64)> = a.iter().map(|(c, p)| (lambda * c, *p)).collect();
        let fl = sigma_field(&grid, &scaled);
        type NormFn = fn(&CoefficientField, Part, Weighting, f64, Option<&RadiusSchedule>) -> roughsde::Result<roughsde::norms::NormValue>;
        let norms: [NormFn; 3] = [h1_norm, w11_norm, h_half_norm];
        for norm in norms {
            let v = |f: &CoefficientField| norm(f, Part::Diffusion, Weighting::Quadrature(&law), 1.0, None).unwrap().value;
            let (na, nb, ns, nl) = (v(&fa), v(&fb), v(&fs), v(&fl));
            prop_assert!(ns <= (na + nb) * (1.0 + 1e-10) + 1e-12, "{ns} > {na} + {nb}");
            prop_assert!(close(nl, lambda.abs() * na, 1e-10) || nl < 1e-12);
        }
    }

    #[test]
    fn q_is_nonincreasing_in_epsilon(seed in 0u64..1000, e1 in 1e-4..1.0f64, factor in 1.0..100.0f64) {
        let (a, b) = small_ensembles(seed, 0.3);
        let small = q_functional(&a, &b, e1).unwrap();
        let large = q_functional(&a, &b, e1 * factor).unwrap();
        for (s, l) in small.values.iter().zip(&large.values) {
            prop_assert!(*l >= 0.0 && *s >= *l - 1e-15);
        }
    }

    #[test]
    fn plateau_l_eps_is_between_tail_indicators(eps in 1e-6..10.0f64, r in 0.0..20.0f64) {
        let v = l_eps(LFlavor::Plateau, eps, r);
        prop_assert!((0.0..=1.0).contains(&v));
        if r >= eps {
            prop_assert_eq!(v, 1.0);
        }
        if r < eps / 2.0 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn weight_process_starts_at_zero_and_grows(seed in 0u64..1000, h in prop::collection::vec(0.0..5.0f64, 65)) {
        let (a, b) = small_ensembles(seed, 0.0);
        let g = Grid::line(-6.0, 6.0, 64, false).unwrap();
        let u = weight_process(&a, &b, &g, &h).unwrap();
        let n = a.n_paths();
        prop_assert!(u[..n].iter().all(|v| *v == 0.0));
        for k in 1..a.stamps().len() {
            for p in 0..n {
                prop_assert!(u[k * n + p] >= u[(k - 1) * n + p]);
            }
        }
    }

    #[test]
    fn fokker_planck_keeps_mass_and_sign(drift in modes(), diff in modes(), m in -2.0..2.0f64, s in 0.2..1.5f64) {
        let g = Grid::line(-std::f64::consts::PI, std::f64::consts::PI, 128, true).unwrap();
        let field = CoefficientField::from_fn(g.clone(), 1, Provenance::custom("random"), move |x, f, sg| {
            f[0] = trig(&drift, x[0]);
            sg[0] = trig(&diff, x[0]);
        }).unwrap();
        let sup_f = sup(&field.slices()[0].drift[0]);
        let sup_a = field.a_component(&field.slices()[0], 0, 0).iter().cloned().fold(0.0, f64::max);
        let dt = 0.9 * cfl_limit_1d(g.axis(0).width(), sup_f, sup_a);
        let u0 = initial_from_fn(&g, |x| (-(x[0] - m).powi(2) / (2.0 * s * s)).exp()).unwrap();
        let evo = solve_fp_1d(&field, &u0, 40.0 * dt, dt, 8).unwrap();
        prop_assert!(evo.min_value() >= 0.0);
        prop_assert!(evo.mass_drift() <= 1e-10);
    }
}
