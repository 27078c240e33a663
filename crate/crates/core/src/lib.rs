//! Mental-age compatibility between chronological age groups.
//!
//! Mental age is modelled as a Gaussian around chronological age with a
//! standard deviation proportional to age. The probability that two randomly
//! drawn people have mental ages at most `d` years apart follows in closed form
//! from the convolution of the two densities. On top of that the crate derives
//! population expectations, inverts age-limit policies and audits the
//! "half your age plus seven" rule. Every closed form is checked against the
//! independent quadrature and Monte-Carlo oracles in [`verify`].

pub mod cli;
pub mod compat;
pub mod error;
pub mod expect;
pub mod model;
pub mod policy;
pub mod special_fn;
pub mod verify;

pub use compat::{CompatQuery, Window};
pub use error::{Error, Result};
pub use model::{AgeProfile, DiffStats, Gaussian};
pub use special_fn::UnitProb;

/// The benchmark window multiple `t = 2/√π`: the mean same-age mental-age
/// difference expressed in units of σ.
pub const BENCHMARK_T: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Default σ/μ ratio used by the CLI, the middle of the supported band.
pub const DEFAULT_S: f64 = 0.15;
