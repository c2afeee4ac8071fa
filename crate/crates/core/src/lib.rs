//! Mechanics and simulation of bistable trilayer Kirigami composites.
//!
//! Units throughout: mm, kPa (mN/mm²), mN, µJ.

pub mod analytic;
pub mod error;
pub mod export;
pub mod laminate;
pub mod materials;
pub mod pattern;
pub mod shellsim;

pub use error::{Error, Result};
