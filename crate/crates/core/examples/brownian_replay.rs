//! Stores Brownian increments, reloads them, and checks that a coarsened
//! store drives the same paths as the aggregated fine one.

use roughsde::sde::{simulate_ensemble, BrownianStore, InitialSpec, TimeGrid};
use roughsde::{preset_field, Grid, Params};

fn main() -> roughsde::Result<()> {
    let store = BrownianStore::new(11, 1000, 256, 1.0 / 256.0, 1)?;
    let (mean, var, n) = store.increment_stats();
    println!(
        "{n} increments: mean {mean:.2e}, variance {var:.6e} (dt {:.6e})",
        store.dt()
    );

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("w.bin");
    store.save(&path)?;
    let back = BrownianStore::load(&path)?;
    println!(
        "reloaded fingerprint matches: {}",
        back.fingerprint() == store.fingerprint()
    );

    let g = Grid::line(-8.0, 8.0, 256, false)?;
    let ou = preset_field("ou", &Params::new(), &g)?;
    let coarse = store.coarsen(2)?;
    let init = InitialSpec::point(&[0.5]);
    let e = simulate_ensemble(&ou, &init, &TimeGrid::new(1.0 / 128.0, 1.0, 16)?, 1000, &coarse)?;
    println!(
        "coarse ensemble fingerprint {:016x}, exits {}",
        e.fingerprint(),
        e.exits()
    );
    Ok(())
}
