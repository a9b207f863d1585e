//! Linear stability toolkit for shear layers in the half-plane.
//!
//! Modules, bottom-up:
//! - [`specialfn`]: complex Airy functions, their repeated integrals and the Tietjens function.
//! - [`profiles`]: analytic background profiles, critical points and the background heat flow.
//! - [`rayleigh`]: inviscid solution bases, Green function, boundary-value solves and point spectrum.
//! - [`orrsommerfeld`]: viscous bases, dispersion relations, band extraction and a collocation solver.
//! - [`semigroup`]: time evolution of single Fourier modes, by stepping and by contour integrals.
//! - [`cascade`]: exact exponent algebra for the multilayer instability ladder.

pub mod cascade;
pub mod grid;
pub mod orrsommerfeld;
pub mod par;
pub mod profiles;
pub mod rayleigh;
pub mod semigroup;
pub mod specialfn;
pub mod taylor;

pub use num_complex::Complex64 as C64;

/// Imaginary unit.
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input outside an operation's contract.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("near eigenvalue: {0}")]
    NearEigenvalue(String),
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),
    #[error("asymptotic construction broke down: {0}")]
    Breakdown(String),
    #[error("branch error: {0}")]
    Branch(String),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("contour error: {0}")]
    Contour(String),
}

impl Error {
    /// True for errors caused by bad input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Domain(_) | Error::InsufficientData(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
