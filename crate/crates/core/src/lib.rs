//! Robust dynamic state estimation for power systems.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. It carries the numerical side of the toolkit:
//!
//! - [`grid`]: bus/branch networks, admittance assembly, the AC measurement
//!   function and Holt's two-parameter forecast used as state transition.
//! - [`unscented`]: sigma points, weights and unscented propagation.
//! - [`correntropy`]: Cauchy/Gaussian kernels, the mixture criterion and the
//!   fixed-point weights.
//! - [`filters`]: EKF, UKF and the correntropy-weighted UKF family with the
//!   Joseph covariance update and a pseudo-inverse fallback.
//! - [`metaheuristics`]: Beluga-whale, bat, their hybrid, PSO, the classical
//!   23-function benchmark suite and coefficient tuning.
//! - [`scenarios`]: heavy-tailed noise, bad-data and load-change scenarios.
//! - [`metrics`]: ARMSE and improvement percentages.
//!
//! File formats, the Monte-Carlo harness and the command line live in the
//! companion `dse` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod correntropy;
pub mod error;
pub mod filters;
pub mod grid;
pub mod linalg;
pub mod metaheuristics;
pub mod metrics;
pub mod rng;
pub mod scenarios;
pub mod unscented;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};

pub(crate) mod prelude {
    pub use alloc::boxed::Box;
    pub use alloc::string::String;
    pub use alloc::vec;
    pub use alloc::vec::Vec;
    pub use alloc::format;
    #[cfg(not(feature = "std"))]
    pub use num_traits::Float;
}
