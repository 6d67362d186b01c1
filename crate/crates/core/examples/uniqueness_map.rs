//! Pointwise non-uniqueness estimate for deterministic starting points.

use roughsde::sde::{uniqueness_map, BrownianStore, TimeGrid};
use roughsde::{mollify, preset_field, Grid, Params};

fn main() -> roughsde::Result<()> {
    let g = Grid::line(-4.0, 4.0, 1 << 13, false)?;
    let base = preset_field("sqrt_diffusion", &Params::new(), &g)?;
    let coarse = mollify(&base, 1.0 / 16.0)?;
    let fine = mollify(&base, 1.0 / 256.0)?;
    let pts: Vec<f64> = (0..16).map(|i| -2.0 + 4.0 * (i as f64 + 0.5) / 16.0).collect();
    let store = BrownianStore::new(9, 500, 512, 1.0 / 512.0, 1)?;
    let tg = TimeGrid::new(1.0 / 512.0, 1.0, 8)?;
    let m = uniqueness_map(&coarse, &tg, &fine, &tg, &pts, 500, &store, 0.01, 0.02)?;
    m.table().write_csv(std::io::stdout())?;
    println!("fraction of points below {}: {:.3}", m.threshold, m.fraction_below);
    Ok(())
}
