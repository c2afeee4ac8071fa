use thiserror::Error;

use crate::shellsim::EquilibriumState;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid material: shear modulus 2(c1 + c2) = {shear_modulus} kPa must be positive")]
    InvalidMaterial { shear_modulus: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh resolution error: edge length {edge_length} mm exceeds {max_edge_length} mm (feature size / 4)")]
    Resolution { edge_length: f64, max_edge_length: f64 },

    #[error("infeasible target H/L = {target}: attainable range is [0, {bound})")]
    InfeasibleTarget { target: f64, bound: f64 },

    #[error("element inversion in face {face}")]
    ElementInversion { face: usize },

    #[error("solver did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        last_state: Box<EquilibriumState>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
