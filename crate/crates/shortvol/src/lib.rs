//! Pricing engine for European options under short-rate-dependent volatility.
//!
//! The asset's instantaneous volatility is an explicit function of the driver
//! `Y` of the short rate, and European option prices are recovered from a
//! generalized Fourier representation: the pricing problem reduces to a
//! characteristic function `G` of the joint time-integrals of the short rate
//! `r(Y)` and the variance `c²(Y)`.  Two drivers admit explicit formulas for
//! `G` and the zero-coupon bond:
//!
//! * a CIR (square-root) driver with `r(y) = y` and `c(y) = γ/√y`, and
//! * a Jacobi driver on `(0, 1)` with `r(y) = ηy/(1−y)` and
//!   `c(y) = γ√((1−y)/y)`.
//!
//! Module layout:
//!
//! * [`specfun`] — complex special functions (log-Γ, ₁F₁, terminating ₃F₂,
//!   Jacobi polynomials with complex parameters).
//! * [`models`] — parameter sets, admissibility validation, coefficient
//!   functions.
//! * [`chf`] — the characteristic function `G` and bond prices, in explicit
//!   closed/series form for both drivers.
//! * [`pricing`] — the Fourier contour integral, call transform, and adaptive
//!   quadrature.
//! * [`vol`] — Black-Scholes forward pricing, implied-volatility inversion,
//!   and smile generation.
//! * [`mc`] — Monte Carlo simulation used as an independent cross-validation
//!   oracle.
//! * [`cli`] — command-line front end (`price`, `smile`, `bond`, `mc-check`).

pub mod chf;
pub mod cli;
pub(crate) mod dd;
pub mod mc;
pub mod models;
pub mod pricing;
pub mod specfun;
pub mod vol;

use thiserror::Error;

/// Complex scalar used throughout: the contour variable `ω = ω_r + iω_i`,
/// the transform arguments `(w, z)`, and all complex intermediates.
pub type ComplexScalar = num_complex::Complex<f64>;

/// Unified error type for the whole engine.
///
/// Errors are deliberately loud: any numerical routine that cannot certify
/// its result reports failure instead of returning a silently corrupted
/// value.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Model/market parameters violate an admissibility condition.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// An input lies outside the state space or argument domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series or iteration exhausted its budget without converging.
    #[error("convergence failure: {0}")]
    NonConvergence(String),
    /// A pole of a special function was hit.
    #[error("pole encountered: {0}")]
    Pole(String),
    /// Floating-point cancellation exceeded the certified error budget.
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    /// A branch discontinuity was detected along the pricing contour.
    #[error("branch discontinuity: {0}")]
    BranchDiscontinuity(String),
    /// The contour quadrature failed to converge.
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    /// A nominally real result carried too large an imaginary residue.
    #[error("imaginary residue: {0}")]
    ImaginaryResidue(String),
    /// A transform was evaluated outside its declared strip of validity.
    #[error("strip violation: {0}")]
    StripViolation(String),
    /// A price violates arbitrage bounds (e.g. implied-vol inversion input).
    #[error("arbitrage bounds violated: {0}")]
    BoundsViolation(String),
    /// Root bracketing failed in the implied-vol solver.
    #[error("bracketing failure: {0}")]
    Bracketing(String),
    /// A computed price was negative beyond quadrature noise.
    #[error("negative price: {0}")]
    NegativePrice(String),
    /// Configuration file / run configuration problem.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
