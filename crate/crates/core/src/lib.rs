//! Sinc-type matrix functions for sparse symmetric positive semi-definite
//! operators, and the trigonometric integrators that consume them.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalarfun`]: scalar sinc/ψ/σ, Laguerre and Padé polynomials,
//!   Gauss–Legendre rules and the a-priori error bounds used to pick pole
//!   counts.
//! * [`polesets`]: the pole families fed to the rational Krylov recursion.
//! * [`sparse`], [`banded`], [`operator`]: CSR storage, banded factorizations
//!   and the [`operator::SymOperator`] abstraction with cached shifted solves.
//! * [`densemf`]: dense spectral reference evaluation (the test oracle).
//! * [`ratkrylov`]: rational Arnoldi and projected function evaluation.
//! * [`expsum`]: exponential sums from the inverse Fourier transform.
//! * [`integrators`]: Gautschi-type and Störmer–Verlet time stepping.
//! * [`problems`], [`fem`]: test matrices, the synthetic benchmark and the
//!   P1 wave-equation pipeline.
//! * [`experiments`]: the sweeps behind the command-line harness.
//!
//! Data-parallel sweeps go through [`par`]; building without the default
//! `parallel` feature gives a purely sequential crate with the same results.

pub mod banded;
pub mod densemf;
pub mod eigs;
pub mod error;
pub mod experiments;
pub mod expsum;
pub mod fem;
pub mod integrators;
pub mod operator;
pub mod par;
pub mod polesets;
pub mod problems;
pub mod ratkrylov;
pub mod scalarfun;
pub mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
