//! Fokker–Planck solvers in one dimension and in (x, v) phase space, with
//! the stationary-bound, energy and maximum-principle monitors.

pub mod compare;
pub mod energy;
pub mod fp1d;
pub mod kinetic;

pub use compare::{law_compare, law_compare_at, masses_compare, w1_samples, LawDistances};
pub use energy::{calibrate_c2, energy_monitor, sobolev_theta, EnergyReport};
pub use fp1d::{
    cfl_limit_1d, initial_from_fn, l1_distance, project_initial, solve_fp_1d, stationary_bound, stationary_bound_check,
    DensityEvolution,
};
pub use kinetic::{kinetic_cfl, max_principle_check, solve_kinetic, v_marginal, v_variance, TransportFlux};
