//! Time evolution: statevector annealing in the lab and rotated frames,
//! collective-spin annealing of the uniform ferromagnet, nonlinear
//! mean-field dynamics (approximate and exact counterdiabatic driving) and
//! the classical master equation behind simulated annealing.

mod collective;
mod hamiltonian;
mod integrator;
mod master;
mod meanfield;
mod overlap;
mod schrodinger;
mod state;

pub use collective::{CollectiveEngine, CollectiveState};
pub use integrator::{integrate, IntegrationStats, IntegratorConfig, Method, OdeSystem};
pub use master::{
    evolve_master_equation, evolve_master_with_beta, sa_beta, ClassicalDistribution, NEGATIVE_PROBABILITY_TOL,
};
pub use meanfield::{
    evolve_meanfield, exact_cd_meanfield, final_magnetization, meanfield_hamiltonian, meanfield_rhs, CdSign,
    ExactCdConfig, ExactCdSample, MeanFieldParams, MeanFieldSample, MeanFieldState,
};
pub use overlap::{overlap_trace, OverlapSample, MAX_OVERLAP_SITES};
pub use schrodinger::{evolve_effective, evolve_schrodinger, to_rotated_frame, SchrodingerEngine, NORM_FAILURE_TOL};
pub use state::StateVector;
