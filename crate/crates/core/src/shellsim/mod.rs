//! Discrete-shell simulator: energies, equilibrium search and snap-through.

mod hessian;
mod lbfgs;
mod model;
mod snap;
mod solve;

pub use hessian::Triplets;
pub use lbfgs::{minimize as lbfgs_minimize, LbfgsOptions, LbfgsReport, Preconditioner};
pub use model::{EnergyBreakdown, ShellModel, Vec3};
pub use snap::{snap_through, SnapControl, SnapCurve, SnapOutcome};
pub use solve::{
    aligned_distance, evaluate_state, find_stable_states, height_of, minimize, mode_of, sign_of, EquilibriumState,
    ModeLabel, Seed, Sign, SolverOptions, StableStates,
};

