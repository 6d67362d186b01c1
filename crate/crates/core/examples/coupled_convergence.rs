//! Simulates a mollified square-root diffusion family on one Brownian store
//! and prints the Cauchy matrix of sup-in-time distances.

use roughsde::sde::{cauchy_diagnostic, simulate_ensemble, BrownianStore, InitialSpec, SelectionRules, TimeGrid};
use roughsde::{mollify, preset_field, Grid, Params};

fn main() -> roughsde::Result<()> {
    let g = Grid::line(-8.0, 8.0, 1 << 14, false)?;
    let base = preset_field("sqrt_diffusion", &Params::new(), &g)?;
    let dt = 1.0 / 1024.0;
    let store = BrownianStore::new(42, 4000, 1024, dt, 1)?;
    let tg = TimeGrid::new(dt, 1.0, 8)?;
    let init = InitialSpec::Gaussian {
        mean: vec![0.0],
        std: vec![1.0],
    };
    let family = (2..=6)
        .map(|k| {
            let f = mollify(&base, 2f64.powi(-k))?;
            let e = simulate_ensemble(&f, &init, &tg, 4000, &store)?;
            Ok((f, e))
        })
        .collect::<roughsde::Result<Vec<_>>>()?;
    let (m, report) = cauchy_diagnostic(&family, 2.0, 1.0, &SelectionRules::default(), 2.0)?;
    print!("{}", serde_json::to_string_pretty(&m)?);
    let (finest, se) = m.finest();
    println!("\nfinest distance {finest:.3e} ± {se:.1e}; monotone: {}", report.passed);
    Ok(())
}
