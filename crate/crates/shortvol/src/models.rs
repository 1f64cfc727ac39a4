//! Model parameter sets, admissibility validation, and coefficient functions.
//!
//! Both drivers fit the common diffusion template
//!
//! ```text
//! dY = b(Y) dt + a(Y) dW,          R = r(Y),
//! dX = (r(Y) − c²(Y)/2) dt + c(Y)(ρ dW + √(1−ρ²) dB),
//! ```
//!
//! with `(r, b, a, c)` specialized per model:
//!
//! * CIR: `r(y) = y`, `b(y) = κ(θ−y)`, `a(y) = δ√y`, `c(y) = γ/√y` on `y > 0`;
//! * Jacobi: `r(y) = ηy/(1−y)`, `b(y) = κ−θy`, `a(y) = δ√(y(1−y))`,
//!   `c(y) = γ√((1−y)/y)` on `0 < y < 1`.
//!
//! Parameters are validated once at construction; everything downstream may
//! assume the invariants.  State-space checks are strict inequalities with no
//! epsilon padding — boundary attainment is a Monte Carlo concern, handled in
//! [`crate::mc`], not here.

use crate::{Error, Result};

/// CIR (square-root) driver parameters.
///
/// Admissibility: `κ, θ, δ > 0`, `γ ≥ 0`, `|ρ| ≤ 1`, and the Feller
/// condition `2κθ > δ²` (strict), which keeps `Y` away from 0 and the
/// volatility `γ/√Y` finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    kappa: f64,
    theta: f64,
    delta: f64,
    gamma: f64,
    rho: f64,
}

impl CirParams {
    /// Validates and constructs; the error names the violated condition.
    pub fn new(kappa: f64, theta: f64, delta: f64, gamma: f64, rho: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("theta", theta), ("delta", delta), ("gamma", gamma), ("rho", rho)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if kappa <= 0.0 {
            return Err(Error::InvalidParams(format!("kappa must be > 0, got {kappa}")));
        }
        if theta <= 0.0 {
            return Err(Error::InvalidParams(format!("theta must be > 0, got {theta}")));
        }
        if delta <= 0.0 {
            return Err(Error::InvalidParams(format!("delta must be > 0, got {delta}")));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {gamma}")));
        }
        if rho.abs() > 1.0 {
            return Err(Error::InvalidParams(format!("rho must lie in [-1, 1], got {rho}")));
        }
        if 2.0 * kappa * theta <= delta * delta {
            return Err(Error::InvalidParams(format!(
                "Feller condition violated: need 2*kappa*theta > delta^2, got {} <= {}",
                2.0 * kappa * theta,
                delta * delta
            )));
        }
        Ok(CirParams { kappa, theta, delta, gamma, rho })
    }

    /// The crate's reference parameter set, used by the CLI defaults and the
    /// validation suite: `κ = 0.5`, `θ = 0.05`, `δ = 0.95·√(2κθ)` (95% of the
    /// Feller bound), `γ = 0.2·√θ` (so the spot volatility `γ/√θ ≈ 0.2`).
    pub fn reference(rho: f64) -> Self {
        let kappa = 0.5f64;
        let theta = 0.05f64;
        let delta = 0.95 * (2.0 * kappa * theta).sqrt();
        let gamma = 0.2 * theta.sqrt();
        CirParams::new(kappa, theta, delta, gamma, rho).expect("reference parameters are admissible")
    }

    pub fn kappa(&self) -> f64 { self.kappa }
    pub fn theta(&self) -> f64 { self.theta }
    pub fn delta(&self) -> f64 { self.delta }
    pub fn gamma(&self) -> f64 { self.gamma }
    pub fn rho(&self) -> f64 { self.rho }
}

/// Jacobi driver parameters; `Y` lives on `(0, 1)`.
///
/// Admissibility: `δ > 0`, `γ ≥ 0`, `η > 0`, `|ρ| ≤ 1`, and the two-sided
/// boundary non-attainment conditions `κ > δ²/2` and `θ − κ > δ²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    kappa: f64,
    theta: f64,
    delta: f64,
    gamma: f64,
    eta: f64,
    rho: f64,
}

impl JacobiParams {
    /// Validates and constructs; the error names the violated condition.
    pub fn new(kappa: f64, theta: f64, delta: f64, gamma: f64, eta: f64, rho: f64) -> Result<Self> {
        for (name, v) in [
            ("kappa", kappa), ("theta", theta), ("delta", delta),
            ("gamma", gamma), ("eta", eta), ("rho", rho),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if delta <= 0.0 {
            return Err(Error::InvalidParams(format!("delta must be > 0, got {delta}")));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {gamma}")));
        }
        if eta <= 0.0 {
            return Err(Error::InvalidParams(format!("eta must be > 0, got {eta}")));
        }
        if rho.abs() > 1.0 {
            return Err(Error::InvalidParams(format!("rho must lie in [-1, 1], got {rho}")));
        }
        let half_d2 = delta * delta / 2.0;
        if kappa <= half_d2 {
            return Err(Error::InvalidParams(format!(
                "boundary condition violated at y=0: need kappa > delta^2/2, got {kappa} <= {half_d2}"
            )));
        }
        if theta - kappa <= half_d2 {
            return Err(Error::InvalidParams(format!(
                "boundary condition violated at y=1: need theta - kappa > delta^2/2, got {} <= {half_d2}",
                theta - kappa
            )));
        }
        Ok(JacobiParams { kappa, theta, delta, gamma, eta, rho })
    }

    /// The crate's reference Jacobi parameter set, used by the CLI defaults
    /// and the validation suite: `κ = 0.3`, `θ = 0.8`, `δ = 0.2`, `η = 0.05`,
    /// `γ = 0.2`.
    pub fn reference(rho: f64) -> Self {
        JacobiParams::new(0.3, 0.8, 0.2, 0.2, 0.05, rho).expect("reference parameters are admissible")
    }

    pub fn kappa(&self) -> f64 { self.kappa }
    pub fn theta(&self) -> f64 { self.theta }
    pub fn delta(&self) -> f64 { self.delta }
    pub fn gamma(&self) -> f64 { self.gamma }
    pub fn eta(&self) -> f64 { self.eta }
    pub fn rho(&self) -> f64 { self.rho }
}

/// Either driver, with its validated parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Cir(CirParams),
    Jacobi(JacobiParams),
}

impl Model {
    /// Asset-volatility correlation ρ of the driver.
    pub fn rho(&self) -> f64 {
        match self {
            Model::Cir(p) => p.rho(),
            Model::Jacobi(p) => p.rho(),
        }
    }

    /// True iff `y` lies strictly inside the driver's state space.
    pub fn contains(&self, y: f64) -> bool {
        match self {
            Model::Cir(_) => y > 0.0 && y.is_finite(),
            Model::Jacobi(_) => y > 0.0 && y < 1.0,
        }
    }

    /// Evaluates the coefficient quadruple `(r, b, a, c)` at driver level `y`.
    ///
    /// # Errors
    /// [`Error::Domain`] if `y` lies outside the state space.
    pub fn coefficients(&self, y: f64) -> Result<(f64, f64, f64, f64)> {
        if !self.contains(y) {
            return Err(Error::Domain(format!(
                "driver level y={y} outside the state space of {}",
                self.name()
            )));
        }
        Ok(match self {
            Model::Cir(p) => (
                y,
                p.kappa() * (p.theta() - y),
                p.delta() * y.sqrt(),
                p.gamma() / y.sqrt(),
            ),
            Model::Jacobi(p) => (
                p.eta() * y / (1.0 - y),
                p.kappa() - p.theta() * y,
                p.delta() * (y * (1.0 - y)).sqrt(),
                p.gamma() * ((1.0 - y) / y).sqrt(),
            ),
        })
    }

    /// Checks a market state against this model (driver in state space).
    pub fn validate_state(&self, state: &MarketState) -> Result<()> {
        if !self.contains(state.y) {
            return Err(Error::Domain(format!(
                "initial driver level y={} outside the state space of {}",
                state.y,
                self.name()
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Cir(_) => "cir",
            Model::Jacobi(_) => "jacobi",
        }
    }
}

/// Market state: time `t`, log price `x = ln S_t`, and driver level `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl MarketState {
    /// Basic construction checks (finiteness, `t ≥ 0`); the model-specific
    /// state-space constraint on `y` is checked by [`Model::validate_state`].
    pub fn new(t: f64, x: f64, y: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParams(format!("time t must be finite and >= 0, got {t}")));
        }
        if !x.is_finite() {
            return Err(Error::InvalidParams(format!("log price x must be finite, got {x}")));
        }
        if !y.is_finite() {
            return Err(Error::InvalidParams(format!("driver level y must be finite, got {y}")));
        }
        Ok(MarketState { t, x, y })
    }

    /// Spot price `S_t = e^x`.
    pub fn spot(&self) -> f64 {
        self.x.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cir_reference_set_is_admissible() {
        let p = CirParams::reference(0.5);
        // δ = 0.95·√(2·0.5·0.05) = 0.95·√0.05
        assert_relative_eq!(p.delta(), 0.212_426_457_862_48, max_relative = 1e-12);
        assert_relative_eq!(p.gamma(), 0.044721359549995794, max_relative = 1e-12);
    }

    #[test]
    fn cir_rejects_feller_boundary() {
        // delta^2 = 2*kappa*theta exactly (all values exactly representable):
        // kappa=1, theta=2, delta=2 gives 2*kappa*theta = delta^2 = 4.
        assert!(matches!(
            CirParams::new(1.0, 2.0, 2.0, 0.1, 0.0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn cir_rejects_negative_kappa() {
        assert!(matches!(
            CirParams::new(-0.1, 0.05, 0.1, 0.04, 0.0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn cir_rejects_out_of_range_rho() {
        assert!(CirParams::new(0.5, 0.05, 0.2, 0.04, 1.2).is_err());
        assert!(CirParams::new(0.5, 0.05, 0.2, 0.04, -1.0).is_ok());
    }

    #[test]
    fn jacobi_reference_set_is_admissible() {
        let p = JacobiParams::reference(0.0);
        assert!(p.kappa() > p.delta() * p.delta() / 2.0);
        assert!(p.theta() - p.kappa() > p.delta() * p.delta() / 2.0);
    }

    #[test]
    fn jacobi_rejects_lower_boundary() {
        // kappa = delta^2/2 exactly.
        assert!(matches!(
            JacobiParams::new(0.02, 0.8, 0.2, 0.2, 0.05, 0.0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn jacobi_rejects_upper_boundary() {
        // theta - kappa = delta^2/2 exactly (exactly representable values):
        // kappa=3, theta=5, delta=2 gives theta-kappa = delta^2/2 = 2.
        assert!(matches!(
            JacobiParams::new(3.0, 5.0, 2.0, 0.2, 0.05, 0.0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn cir_coefficients_at_long_run_level() {
        let p = CirParams::reference(0.5);
        let model = Model::Cir(p);
        let (r, b, a, c) = model.coefficients(p.theta()).unwrap();
        assert_relative_eq!(r, 0.05, max_relative = 1e-14);
        assert_relative_eq!(b, 0.0, epsilon = 1e-14);
        assert_relative_eq!(a, p.delta() * 0.05f64.sqrt(), max_relative = 1e-14);
        // Spot volatility gamma/sqrt(theta) = 0.2 by construction.
        assert_relative_eq!(c, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn cir_coefficients_reject_zero_y() {
        let model = Model::Cir(CirParams::reference(0.0));
        assert!(matches!(model.coefficients(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn jacobi_coefficients_midpoint() {
        let p = JacobiParams::new(0.3, 0.8, 0.2, 0.2, 0.1, 0.0).unwrap();
        let model = Model::Jacobi(p);
        let (r, _, _, c) = model.coefficients(0.5).unwrap();
        assert_relative_eq!(r, 0.1, max_relative = 1e-14);
        assert_relative_eq!(c, 0.2, max_relative = 1e-14);
    }

    #[test]
    fn jacobi_coefficients_reject_boundary() {
        let model = Model::Jacobi(JacobiParams::reference(0.0));
        assert!(model.coefficients(0.0).is_err());
        assert!(model.coefficients(1.0).is_err());
    }

    #[test]
    fn market_state_rejects_negative_time() {
        assert!(MarketState::new(-1.0, 0.0, 0.5).is_err());
        assert!(MarketState::new(0.0, 100.0f64.ln(), 0.05).is_ok());
    }

    proptest! {
        #[test]
        fn prop_cir_vol_rate_product_is_constant(y in 1e-6f64..10.0) {
            // c(y)·√r(y) = γ for every y in the state space.
            let p = CirParams::reference(0.3);
            let (r, _, _, c) = Model::Cir(p).coefficients(y).unwrap();
            prop_assert!((c * r.sqrt() - p.gamma()).abs() <= 1e-12 * p.gamma().max(1.0));
        }

        #[test]
        fn prop_jacobi_vol_rate_product_is_constant(y in 1e-6f64..=0.999999) {
            // c(y)·√r(y) = γ√η for every y in (0, 1).
            let p = JacobiParams::reference(0.3);
            let (r, _, _, c) = Model::Jacobi(p).coefficients(y).unwrap();
            let expect = p.gamma() * p.eta().sqrt();
            prop_assert!((c * r.sqrt() - expect).abs() <= 1e-10 * expect.max(1.0));
        }

        #[test]
        fn prop_coefficients_are_finite_on_state_space(
            y_cir in 1e-9f64..100.0,
            y_jac in 1e-9f64..=0.999_999_999,
        ) {
            let cir = Model::Cir(CirParams::reference(0.7));
            let (r, b, a, c) = cir.coefficients(y_cir).unwrap();
            prop_assert!(r.is_finite() && b.is_finite() && a.is_finite() && c.is_finite());
            let jac = Model::Jacobi(JacobiParams::reference(-0.4));
            let (r, b, a, c) = jac.coefficients(y_jac).unwrap();
            prop_assert!(r.is_finite() && b.is_finite() && a.is_finite() && c.is_finite());
        }
    }
}
