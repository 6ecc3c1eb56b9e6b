//! Spectral analysis of the Gribov (reggeon) Hamiltonian
//! `H = mu z d/dz + i lambda (z d^2/dz^2 + z^2 d/dz)` acting on Bargmann space.
//!
//! Four independent pipelines compute the spectrum:
//!
//! * [`spectrum`]: truncated matrix in the orthonormal monomial basis,
//! * [`shooting`]: Frobenius start plus ODE integration along the negative imaginary axis,
//! * [`halfline`]: Liouville-transformed Schroedinger operator on the half line,
//! * [`kernel`]: Nystrom discretization of the explicit inverse kernel.
//!
//! [`bargmann`] holds the basis-level plumbing and [`heun`] the series machinery.

pub mod bargmann;
pub mod dd;
pub mod error;
pub mod halfline;
pub mod heun;
pub mod kernel;
pub mod ode;
pub mod params;
pub mod pipeline;
pub mod quad;
pub mod report;
pub mod shooting;
pub mod spectrum;
pub mod tridiag;

pub use error::{Error, Result};
pub use params::GribovParams;

pub use num_complex::Complex64;
