//! Riemannian-geometry model of `n`-qutrit circuit complexity.
//!
//! The crate covers the Gell-Mann product basis of `su(3^n)` ([`basis`]), a dense complex
//! kernel ([`linalg`]), the penalty metric and curve lengths ([`metric`]), geodesic
//! integration and the closed-form three-qutrit solution ([`geodesic`]), and Trotterized
//! synthesis with an itemized error budget ([`synthesis`]).

pub mod basis;
pub mod campaigns;
pub mod error;
pub mod geodesic;
pub mod linalg;
pub mod metric;
pub mod random;
pub mod synthesis;

pub use error::{Error, Result};

/// Example schedule in the JSON schedule format: two qutrits, ten segments of width 0.1,
/// each with unit cost, so its path length is 1.
pub const EXAMPLE_SCHEDULE_N2: &str = include_str!("../data/example_n2_d1.json");
