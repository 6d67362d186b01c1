//! Evaluates the law-weighted norms of an OU drift and a square-root
//! diffusion, by quadrature and along paths.

use roughsde::norms::{default_l_grid, h1_norm, h_half_norm, w11_norm, wphi_weak_norm, Part, PhiWeight, Weighting};
use roughsde::sde::{simulate_ensemble, BrownianStore, InitialSpec, TimeGrid};
use roughsde::{mollify, preset_field, Grid, Law, Params};

fn main() -> roughsde::Result<()> {
    let g = Grid::line(-8.0, 8.0, 1024, false)?;
    let ou = preset_field("ou", &Params::new(), &g)?;
    let law = Law::from_pdf(g.clone(), |x| (-x[0] * x[0] / 2.0).exp())?;
    let quad = h1_norm(&ou, Part::Drift, Weighting::Quadrature(&law), 1.0, None)?;
    let store = BrownianStore::new(3, 20_000, 256, 1.0 / 256.0, 1)?;
    let init = InitialSpec::Gaussian {
        mean: vec![0.0],
        std: vec![1.0],
    };
    let e = simulate_ensemble(&ou, &init, &TimeGrid::new(1.0 / 256.0, 1.0, 8)?, 20_000, &store)?;
    let path = h1_norm(&ou, Part::Drift, Weighting::Pathwise(&e), 1.0, None)?;
    println!(
        "OU drift H1: quadrature {:.5}, pathwise {:.5} ± {:.5}",
        quad.value,
        path.value,
        path.mc_stderr.unwrap_or(0.0)
    );

    let p = Grid::line(-4.0, 4.0, 1024, true)?;
    let law = Law::from_pdf(p.clone(), |x| (-x[0] * x[0] / 2.0).exp())?;
    let sq = mollify(&preset_field("sqrt_diffusion", &Params::new(), &p)?, 0.125)?;
    let w = Weighting::Quadrature(&law);
    println!("sqrt diffusion, delta 1/8:");
    println!("  H1     {:.5}", h1_norm(&sq, Part::Diffusion, w, 1.0, None)?.value);
    println!("  W11    {:.5}", w11_norm(&sq, Part::Diffusion, w, 1.0, None)?.value);
    println!("  H1/2   {:.5}", h_half_norm(&sq, Part::Diffusion, w, 1.0, None)?.value);
    let wphi = wphi_weak_norm(&sq, Part::Diffusion, w, 1.0, &PhiWeight::Default, &default_l_grid(8))?;
    println!(
        "  Wphi   {:.5} (attained at L = {:.3e})",
        wphi.value,
        wphi.argmax_l.unwrap_or(f64::NAN)
    );
    Ok(())
}
