//! Kinetic Fokker-Planck in phase space: velocity variance growth under
//! pure velocity diffusion.

use roughsde::fpe::{initial_from_fn, kinetic_cfl, max_principle_check, solve_kinetic, v_variance, TransportFlux};
use roughsde::{preset_field, Grid};

fn main() -> roughsde::Result<()> {
    let g = Grid::make(2, &[(-4.0, 4.0), (-4.0, 4.0)], &[128, 128], &[false, false])?;
    let a = 0.5;
    let params = [("stiffness".to_string(), 0.0), ("a".to_string(), a)]
        .into_iter()
        .collect();
    let field = preset_field("kinetic_langevin", &params, &g)?;
    let u0 = initial_from_fn(&g, |x| (-(x[0] + 1.0).powi(2) / 0.32 - x[1] * x[1] / 0.5).exp())?;
    let dt = 0.5 / (0.5 / kinetic_cfl(&field)?).ceil();
    let evo = solve_kinetic(&field, &u0, 0.5, dt, 16, TransportFlux::Upwind)?;
    println!("{:>8} {:>12} {:>12}", "t", "Var v", "predicted");
    let v0 = v_variance(&evo, 0);
    for (k, t) in evo.stamps.iter().enumerate() {
        println!("{t:>8.4} {:>12.6} {:>12.6}", v_variance(&evo, k), v0 + 2.0 * a * t);
    }
    println!("max principle holds: {}", max_principle_check(&evo).passed);
    Ok(())
}
