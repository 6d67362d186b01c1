//! Q, L_eps and tail functionals between two coupled approximations of a
//! kinked drift.

use roughsde::sde::{
    l_eps_functional, q_functional, simulate_ensemble, tail_probability, BrownianStore, InitialSpec, LFlavor, TimeGrid,
};
use roughsde::{mollify, preset_field, Grid, Params};

fn main() -> roughsde::Result<()> {
    let g = Grid::line(-8.0, 8.0, 1 << 14, false)?;
    let base = preset_field("kink_drift", &Params::new(), &g)?;
    let dt = 1.0 / 1024.0;
    let store = BrownianStore::new(7, 5000, 1024, dt, 1)?;
    let tg = TimeGrid::new(dt, 1.0, 32)?;
    let init = InitialSpec::Gaussian {
        mean: vec![0.0],
        std: vec![1.0],
    };
    let a = simulate_ensemble(&mollify(&base, 0.25)?, &init, &tg, 5000, &store)?;
    let b = simulate_ensemble(&mollify(&base, 1.0 / 256.0)?, &init, &tg, 5000, &store)?;
    println!("{:>8} {:>12} {:>12} {:>12}", "eps", "sup EQ", "sup EL", "sup P");
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let q = q_functional(&a, &b, eps)?.sup().0;
        let l = l_eps_functional(&a, &b, eps, LFlavor::Plateau)?.sup().0;
        let p = tail_probability(&a, &b, eps)?.sup().0;
        println!("{eps:>8.0e} {q:>12.5} {l:>12.5} {p:>12.5}");
    }
    Ok(())
}
