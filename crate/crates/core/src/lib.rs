//! Click-counting statistics of arrays of on-off photodetectors.
//!
//! The crate covers the forward model (state and detector to click
//! probabilities), moment extraction from click statistics, matrix-of-moments
//! nonclassicality witnesses, a closed-form single-photon decay example and a
//! Monte Carlo sampler with bootstrap uncertainties.

pub mod dd;
pub mod detector;
pub mod dynamics;
pub mod error;
pub mod sampler;
pub mod series;
pub mod states;
pub mod witness;

pub use error::{Error, Result};
pub use series::{Dd, PowerSeries, Precision, Real};
