//! Solves the OU Fokker-Planck equation from a narrow Gaussian, compares it
//! with a particle ensemble, and runs the energy monitor.

use roughsde::fpe::{calibrate_c2, cfl_limit_1d, energy_monitor, initial_from_fn, law_compare, solve_fp_1d};
use roughsde::law::Estimator;
use roughsde::sde::{simulate_ensemble, BrownianStore, InitialSpec, TimeGrid};
use roughsde::{preset_field, Grid, Params};

fn main() -> roughsde::Result<()> {
    let g = Grid::line(-6.0, 6.0, 512, false)?;
    let ou = preset_field("ou", &Params::new(), &g)?;
    let u0 = initial_from_fn(&g, |x| (-x[0] * x[0] / 0.5).exp())?;
    let dt = 1.0 / (1.0 / cfl_limit_1d(g.axis(0).width(), 6.0, 1.0)).ceil();
    let evo = solve_fp_1d(&ou, &u0, 1.0, dt, 64)?;
    println!(
        "mass drift {:.2e}, min density {:.2e}",
        evo.mass_drift(),
        evo.min_value()
    );

    let n = 50_000;
    let store = BrownianStore::new(5, n, 512, 1.0 / 512.0, 1)?;
    let init = InitialSpec::Gaussian {
        mean: vec![0.0],
        std: vec![0.5],
    };
    let ens = simulate_ensemble(&ou, &init, &TimeGrid::new(1.0 / 512.0, 1.0, 512)?, n, &store)?;
    let d = law_compare(&ens.law(&g, Estimator::Histogram)?, &evo.to_law()?)?;
    println!("particles vs PDE at t = 1: L1 {:.4}", d.l1);

    let alphas = [2.0, 3.0, 4.0];
    let r = energy_monitor(&evo, &ou, &alphas, 2.0, 4.0, calibrate_c2(&alphas)?)?;
    println!("energy monitor: {} violations", r.violations);
    Ok(())
}
