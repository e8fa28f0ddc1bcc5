//! Numerical laboratory for forgetting in sequential exact-fit linear
//! regression with i.i.d. tasks: projection dynamics, the task-averaged
//! conjugation operator and its spectrum, projection-based surrogates, and
//! reproducible Monte Carlo experiment drivers.

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod family;
pub mod fixtures;
pub mod operator;
pub mod oracle;
pub mod spectral;
pub mod stream;
pub mod subspace;
pub mod surrogates;
pub mod svec;
pub mod task;

pub use error::{Error, Result};
