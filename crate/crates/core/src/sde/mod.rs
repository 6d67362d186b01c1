//! Shared-noise Euler–Maruyama ensembles and the functionals of coupled
//! path differences.

pub mod brownian;
pub mod cauchy;
pub mod ensemble;
pub mod functionals;
pub mod uniqueness;

pub use brownian::BrownianStore;
pub use cauchy::{cauchy_diagnostic, CauchyMatrix, SelectionRules};
pub use ensemble::{dt_cap, simulate_ensemble, InitialSpec, PathEnsemble, TimeGrid};
pub use functionals::{
    dyadic_eps_schedule, l_eps, l_eps_functional, q_functional, q_tilde_functional, sup_moment, tail_probability,
    FunctionalSeries, LFlavor,
};
pub use uniqueness::{uniqueness_map, UniquenessMap};
