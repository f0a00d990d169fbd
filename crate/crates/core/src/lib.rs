//! Truncated Fock-space simulation of photon-axion mixing.
//!
//! The crate is organised bottom-up:
//!
//! * [`layout`], [`state`], [`operator`] and [`evolve`] implement multi-mode
//!   bosonic linear algebra on a hard-truncated product Fock basis.
//! * [`states`] builds coherent, squeezed and photon-added states.
//! * [`mixing`] holds the physical parameters, unit conversions, the classical
//!   conversion formulas and the mixing generator `Q`.
//! * [`scenarios`] evaluates conversion probabilities for each state pairing.
//! * [`oracle`] extracts exact perturbation-series coefficients by repeated
//!   operator application, independently of the exponential.

pub mod error;
pub mod evolve;
pub mod layout;
pub mod mixing;
pub mod operator;
pub mod oracle;
pub mod scenarios;
pub mod state;
pub mod states;
pub mod units;

pub use error::{Error, Result};
pub use evolve::{evolve_exact, evolve_exact_with, EvolutionConfig};
pub use layout::{Mode, ModeLayout};
pub use operator::LinearOperator;
pub use state::{inner_product, StateVector};

pub use num_complex::Complex64;
