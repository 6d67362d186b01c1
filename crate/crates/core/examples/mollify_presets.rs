//! Builds every one-dimensional preset and prints how mollification changes
//! its sup norms.

use roughsde::{mollify, preset_field, Grid, Params};

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn main() -> roughsde::Result<()> {
    let g = Grid::line(-4.0, 4.0, 1024, false)?;
    println!(
        "{:<16} {:>8} {:>12} {:>12}",
        "preset", "delta", "sup |F|", "sup |sigma|"
    );
    for name in ["ou", "heat", "sqrt_diffusion", "kink_drift", "degenerate_1d"] {
        let base = preset_field(name, &Params::new(), &g)?;
        for delta in [0.0, 0.25, 0.0625] {
            let f = if delta > 0.0 {
                mollify(&base, delta)?
            } else {
                base.clone()
            };
            let s = &f.slices()[0];
            println!(
                "{name:<16} {delta:>8} {:>12.6} {:>12.6}",
                sup(&s.drift[0]),
                sup(&s.diffusion[0])
            );
        }
    }
    Ok(())
}
