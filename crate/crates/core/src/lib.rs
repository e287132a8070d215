//! Bloch orbitals of periodic Schrödinger operators on square and cubic
//! lattices, and separable periodic density fitting of their pair densities
//! by random Fourier compression followed by pivoted-QR column selection.
//!
//! The pipeline is
//! [`bloch::solve_all`] → [`dfcore::density_fit`] → [`metrics::sample_errors`],
//! orchestrated by the [`harness`] module and the `periodic-df` binary.

pub mod bloch;
pub mod dfcore;
pub mod error;
pub mod fft;
pub mod harness;
pub mod lattice;
pub mod metrics;
pub mod potential;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
