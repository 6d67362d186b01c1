//! Scans the classic and half-derivative pointwise inequalities on a
//! square-root diffusion coefficient.

use roughsde::maxops::{all_pairs, maximal_modified, nodes_in, sample_pairs, BoundKind, BoundParams, PointwiseBound};
use roughsde::{preset_field, Grid, Params};

fn main() -> roughsde::Result<()> {
    let g = Grid::line(-4.0, 4.0, 4096, true)?;
    let f = preset_field("sqrt_diffusion", &Params::new(), &g)?;
    let sigma = &f.slices()[0].diffusion[0];

    let classic = PointwiseBound::new(BoundKind::Classic, &g, sigma, &BoundParams::default())?;
    let r = classic.scan(sample_pairs(&nodes_in(&g, &[-4.0], &[4.0]), 100_000, 1))?;
    println!(
        "classic: {} of {} pairs violate, worst ratio {:.4}",
        r.violations, r.pairs_tested, r.worst_ratio
    );

    // calibrate the half-derivative constant on a window, then test elsewhere
    let half = PointwiseBound::new(BoundKind::Half, &g, sigma, &BoundParams::default())?;
    let k_cal = half.scan(all_pairs(&nodes_in(&g, &[-2.0], &[2.0])))?.worst_ratio;
    let params = BoundParams {
        k_cal,
        ..BoundParams::default()
    };
    let r = PointwiseBound::new(BoundKind::Half, &g, sigma, &params)?.scan(sample_pairs(
        &nodes_in(&g, &[-4.0], &[4.0]),
        100_000,
        2,
    ))?;
    println!("half: K_cal {k_cal:.4}, {} violations on fresh pairs", r.violations);

    let ind: Vec<f64> = g
        .coords(0)
        .iter()
        .map(|x| if (0.0..=1.0).contains(x) { 1.0 } else { 0.0 })
        .collect();
    for l in [std::f64::consts::E, 100.0, 1e6] {
        let m = maximal_modified(&g, &ind, l)?;
        println!("M_L of 1[0,1] at 0 with L = {l:.3e}: {:.5}", m[g.nearest_index(&[0.0])]);
    }
    Ok(())
}
