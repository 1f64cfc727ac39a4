//! Black–Scholes forward pricing, implied-volatility inversion, and smile
//! generation.
//!
//! Quoting conventions: prices are inverted against the forward
//! `F_t^T = S_t / B_t^T`, strikes are parameterized by log-moneyness
//! `K = e^L · F_t^T`, and the Black–Scholes formula is the undiscounted
//! forward form `F·Φ(d₊) − K·Φ(d₋)` with
//! `d± = ln(F/K)/(σ√τ) ± σ√τ/2`.

use crate::chf;
use crate::models::{MarketState, Model};
use crate::pricing::{price_call, ContourConfig};
use crate::{Error, Result};
use rayon::prelude::*;

/// Lower edge of the implied-volatility bracket.
pub const IV_MIN: f64 = 1e-6;
/// Upper edge of the implied-volatility bracket.
pub const IV_MAX: f64 = 5.0;
/// Maximum root-finder iterations.
const IV_MAX_ITER: usize = 100;

/// Standard normal CDF via the complementary error function (`erfc` is a
/// rational-approximation implementation accurate to ~1 ulp, so Φ is good to
/// ~1e-16 relative in the central range).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Undiscounted Black–Scholes forward call price `F·Φ(d₊) − K·Φ(d₋)`.
///
/// At `σ√τ = 0` this degenerates to the intrinsic value `(F − K)⁺`.
/// Inputs are assumed positive (`σ ≥ 0`); no validation is performed.
pub fn bs_call_forward(forward: f64, strike: f64, tau: f64, sigma: f64) -> f64 {
    let st = sigma * tau.sqrt();
    if st <= 0.0 {
        return (forward - strike).max(0.0);
    }
    let d_plus = (forward / strike).ln() / st + 0.5 * st;
    forward * normal_cdf(d_plus) - strike * normal_cdf(d_plus - st)
}

/// Inverts [`bs_call_forward`] in `σ` for a given undiscounted forward call
/// price.
///
/// # Errors
/// * [`Error::BoundsViolation`] if the price violates the strict arbitrage
///   bounds `(F − K)⁺ < price < F`;
/// * [`Error::Bracketing`] if the root lies outside `[1e-6, 5]`;
/// * [`Error::NonConvergence`] if the solver cannot certify
///   `|BS(σ) − price| < 1e-10·F` within 100 iterations.
pub fn implied_vol(forward_price: f64, forward: f64, strike: f64, tau: f64) -> Result<f64> {
    for (name, v) in [("forward", forward), ("strike", strike), ("tau", tau)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if !forward_price.is_finite() {
        return Err(Error::InvalidParams(format!("forward_price must be finite, got {forward_price}")));
    }
    let intrinsic = (forward - strike).max(0.0);
    if forward_price <= intrinsic {
        return Err(Error::BoundsViolation(format!(
            "forward price {forward_price} at or below intrinsic value {intrinsic}"
        )));
    }
    if forward_price >= forward {
        return Err(Error::BoundsViolation(format!(
            "forward price {forward_price} at or above the forward {forward}"
        )));
    }
    let tol_f = 1e-10 * forward;
    let objective = |sigma: f64| bs_call_forward(forward, strike, tau, sigma) - forward_price;
    let f_lo = objective(IV_MIN);
    if f_lo > 0.0 {
        return Err(Error::Bracketing(format!(
            "implied volatility below the bracket edge {IV_MIN}"
        )));
    }
    let f_hi = objective(IV_MAX);
    if f_hi < 0.0 {
        return Err(Error::Bracketing(format!(
            "implied volatility above the bracket edge {IV_MAX}"
        )));
    }
    let sigma = brent(objective, IV_MIN, IV_MAX, f_lo, f_hi)?;
    let residual = objective(sigma).abs();
    if residual >= tol_f {
        return Err(Error::NonConvergence(format!(
            "implied-vol residual {residual:.3e} above tolerance {tol_f:.3e}"
        )));
    }
    Ok(sigma)
}

/// Brent's method (the classic `zeroin` scheme) on a sign-changing bracket:
/// inverse-quadratic / secant steps with bisection fallback.  Runs until the
/// bracket collapses to floating-point width in `σ` itself — a residual-based
/// exit would certify the price but leave `σ` only as accurate as the local
/// vega allows, which is orders of magnitude too loose in the wings.
fn brent(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> Result<f64> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..IV_MAX_ITER {
        // Keep b the best iterate and c on the opposite side of the root.
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol_x = 2.0 * f64::EPSILON * b.abs() + 1e-13;
        let m = 0.5 * (c - b);
        if m.abs() <= tol_x || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol_x && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                // Secant step.
                (2.0 * m * s, 1.0 - s)
            } else {
                // Inverse quadratic interpolation.
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * m * q - (tol_x * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol_x { d } else { tol_x.copysign(m) };
        fb = f(b);
    }
    Err(Error::NonConvergence(
        "implied-vol solver exhausted its iteration budget".into(),
    ))
}

// ---------------------------------------------------------------------------
// Smile generation
// ---------------------------------------------------------------------------

/// A smile computation request: model, state, maturity, log-moneyness grid,
/// and the pricing contour configuration.
#[derive(Debug, Clone)]
pub struct SmileRequest {
    pub model: Model,
    pub state: MarketState,
    pub maturity: f64,
    pub l_grid: Vec<f64>,
    pub contour: ContourConfig,
}

/// Per-point solver outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    /// Pricing or inversion failed; the message keeps the cause.
    Failed(String),
}

impl PointStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PointStatus::Ok)
    }

    /// Compact single-token form for CSV emission.
    pub fn token(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Failed(_) => "failed",
        }
    }
}

/// One smile grid point.  `call_price` is the spot (discounted) call value;
/// `implied_vol` is quoted against the forward and is `NaN` when `status`
/// is not `Ok`.
#[derive(Debug, Clone)]
pub struct SmilePoint {
    pub l: f64,
    pub strike: f64,
    pub call_price: f64,
    pub forward: f64,
    pub implied_vol: f64,
    pub status: PointStatus,
}

/// A computed smile: the common forward/bond and the per-point results in
/// input-grid order.
#[derive(Debug, Clone)]
pub struct SmileResult {
    pub bond: f64,
    pub forward: f64,
    pub points: Vec<SmilePoint>,
}

/// Computes the implied-volatility smile over the request's log-moneyness
/// grid: `F = S_t/B`, `K = e^L·F`, forward call `= price_call(..)/B`,
/// `σ = implied_vol(..)`.
///
/// Per-point failures (pricing or inversion) are recorded in the point's
/// status and do not abort the run; only an invalid request or a failed
/// bond computation is a hard error.  Points are evaluated in parallel;
/// each point's arithmetic is independent and internally sequential, so
/// results are identical for any thread count and ordered by the input
/// grid.
pub fn smile(request: &SmileRequest) -> Result<SmileResult> {
    let state = &request.state;
    if !(request.maturity > state.t) {
        return Err(Error::InvalidParams(format!(
            "maturity {} must exceed valuation time {}",
            request.maturity, state.t
        )));
    }
    if request.l_grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidParams("log-moneyness grid contains non-finite entries".into()));
    }
    if request.l_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("log-moneyness grid must be sorted ascending".into()));
    }
    request.model.validate_state(state)?;
    let bond = chf::bond(&request.model, state.t, state.y, request.maturity)?;
    let forward = state.spot() / bond;
    let tau = request.maturity - state.t;

    let points: Vec<SmilePoint> = request
        .l_grid
        .par_iter()
        .map(|&l| {
            let strike = l.exp() * forward;
            match price_call(&request.model, state, request.maturity, strike, &request.contour) {
                Err(err) => SmilePoint {
                    l,
                    strike,
                    call_price: f64::NAN,
                    forward,
                    implied_vol: f64::NAN,
                    status: PointStatus::Failed(format!("pricing: {err}")),
                },
                Ok(call_price) => {
                    match implied_vol(call_price / bond, forward, strike, tau) {
                        Ok(sigma) => SmilePoint {
                            l,
                            strike,
                            call_price,
                            forward,
                            implied_vol: sigma,
                            status: PointStatus::Ok,
                        },
                        Err(err) => SmilePoint {
                            l,
                            strike,
                            call_price,
                            forward,
                            implied_vol: f64::NAN,
                            status: PointStatus::Failed(format!("inversion: {err}")),
                        },
                    }
                }
            }
        })
        .collect();

    Ok(SmileResult { bond, forward, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CirParams, JacobiParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn normal_cdf_reference_point() {
        assert_relative_eq!(normal_cdf(0.1), 0.539827837277028981, max_relative = 1e-15);
        assert_relative_eq!(normal_cdf(0.0), 0.5, max_relative = 1e-15);
        assert!(normal_cdf(-40.0) >= 0.0);
        assert_relative_eq!(normal_cdf(40.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn bs_zero_vol_returns_intrinsic() {
        assert_eq!(bs_call_forward(110.0, 100.0, 1.0, 0.0), 10.0);
        assert_eq!(bs_call_forward(90.0, 100.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn bs_atm_reference_value() {
        // F = K = 1, τ = 1, σ = 0.2 → 2Φ(0.1) − 1.
        assert_relative_eq!(
            bs_call_forward(1.0, 1.0, 1.0, 0.2),
            0.0796556745540579629,
            max_relative = 1e-14
        );
    }

    #[test]
    fn bs_general_reference_value() {
        assert_relative_eq!(
            bs_call_forward(100.0, 95.0, 0.5, 0.25),
            9.65335984215786278,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            bs_call_forward(100.0, 105.0, 2.0, 0.4),
            20.4096087183979759,
            max_relative = 1e-14
        );
    }

    #[test]
    fn bs_tiny_strike_approaches_forward() {
        let v = bs_call_forward(100.0, 1e-10, 1.0, 0.2);
        assert_relative_eq!(v, 100.0, max_relative = 1e-10);
    }

    #[test]
    fn bs_monotone_in_vol() {
        let mut last = -1.0;
        for k in 1..=50 {
            let sigma = k as f64 * 0.04;
            let v = bs_call_forward(100.0, 120.0, 0.5, sigma);
            assert!(v > last, "not strictly increasing at sigma={sigma}");
            last = v;
        }
    }

    #[test]
    fn implied_vol_round_trip_point() {
        let price = bs_call_forward(100.0, 110.0, 0.75, 0.3);
        let sigma = implied_vol(price, 100.0, 110.0, 0.75).unwrap();
        assert_relative_eq!(sigma, 0.3, epsilon = 1e-8);
    }

    #[test]
    fn implied_vol_rejects_bound_violations() {
        // At intrinsic (here 0 for an OTM call) and at the forward.
        assert!(matches!(
            implied_vol(0.0, 100.0, 110.0, 1.0),
            Err(Error::BoundsViolation(_))
        ));
        assert!(matches!(
            implied_vol(10.0, 110.0, 100.0, 1.0),
            Err(Error::BoundsViolation(_))
        ));
        assert!(matches!(
            implied_vol(100.0, 100.0, 110.0, 1.0),
            Err(Error::BoundsViolation(_))
        ));
    }

    #[test]
    fn implied_vol_rejects_out_of_bracket_roots() {
        // A price implying σ < 1e-6.
        let low = bs_call_forward(100.0, 100.0, 1.0, 1e-8);
        assert!(matches!(
            implied_vol(low, 100.0, 100.0, 1.0),
            Err(Error::Bracketing(_))
        ));
        // A price implying σ > 5.
        let high = bs_call_forward(100.0, 100.0, 1.0, 6.0);
        assert!(matches!(
            implied_vol(high, 100.0, 100.0, 1.0),
            Err(Error::Bracketing(_))
        ));
    }

    #[test]
    fn smile_strikes_follow_the_grid_exactly() {
        let request = SmileRequest {
            model: Model::Cir(CirParams::reference(0.5)),
            state: MarketState::new(0.0, 100.0f64.ln(), 0.05).unwrap(),
            maturity: 0.25,
            l_grid: vec![-0.2, -0.1, 0.0, 0.1, 0.2],
            contour: ContourConfig::default(),
        };
        let result = smile(&request).unwrap();
        assert_eq!(result.points.len(), 5);
        for (point, &l) in result.points.iter().zip(&request.l_grid) {
            assert_eq!(point.l, l);
            assert_eq!(point.strike, l.exp() * result.forward);
            assert!(point.status.is_ok(), "point L={l} failed: {:?}", point.status);
            assert!(point.implied_vol > 0.0);
        }
    }

    #[test]
    fn smile_asymmetric_at_zero_correlation() {
        let request = SmileRequest {
            model: Model::Cir(CirParams::reference(0.0)),
            state: MarketState::new(0.0, 100.0f64.ln(), 0.05).unwrap(),
            maturity: 0.25,
            l_grid: vec![-0.2, 0.2],
            contour: ContourConfig::default(),
        };
        let result = smile(&request).unwrap();
        let left = result.points[0].implied_vol;
        let right = result.points[1].implied_vol;
        assert!(
            (left - right).abs() > 1e-3,
            "smile unexpectedly symmetric: σ(−0.2)={left}, σ(+0.2)={right}"
        );
    }

    #[test]
    fn smile_atm_skew_steepens_with_correlation() {
        let mut slopes = vec![];
        for rho in [0.0, 0.5, 1.0] {
            let request = SmileRequest {
                model: Model::Cir(CirParams::reference(rho)),
                state: MarketState::new(0.0, 100.0f64.ln(), 0.05).unwrap(),
                maturity: 0.25,
                l_grid: vec![-0.02, 0.02],
                contour: ContourConfig::default(),
            };
            let result = smile(&request).unwrap();
            let slope =
                (result.points[1].implied_vol - result.points[0].implied_vol) / 0.04;
            slopes.push(slope.abs());
        }
        assert!(slopes[0] < slopes[1] && slopes[1] < slopes[2], "skews: {slopes:?}");
    }

    #[test]
    fn smile_tiny_gamma_vanishing_vol() {
        // γ → 0 removes the asset's own volatility; what remains is the
        // rate-driven component of S_T = S₀·e^{∫r ds}, which at these
        // parameters contributes std(∫r)/√T ≈ 0.7%.  The smile must
        // collapse to that floor (or the point may fail inversion if the
        // price degenerates to intrinsic).
        let params = CirParams::new(0.5, 0.05, 0.95 * (2.0 * 0.5 * 0.05f64).sqrt(), 1e-6, 0.0).unwrap();
        let request = SmileRequest {
            model: Model::Cir(params),
            state: MarketState::new(0.0, 100.0f64.ln(), 0.05).unwrap(),
            maturity: 0.25,
            l_grid: vec![0.0],
            // With γ ≈ 0 the integrand loses its Gaussian envelope and only
            // decays through the rate-integral transform (~e^{−c√ω}), so the
            // truncation domain must grow far beyond the default.
            contour: ContourConfig { max_doublings: 10, ..ContourConfig::default() },
        };
        let result = smile(&request).unwrap();
        let point = &result.points[0];
        match &point.status {
            PointStatus::Ok => assert!(point.implied_vol < 0.01, "vol {}", point.implied_vol),
            PointStatus::Failed(msg) => assert!(msg.contains("inversion"), "{msg}"),
        }
    }

    #[test]
    fn smile_jacobi_reference_runs_clean() {
        let request = SmileRequest {
            model: Model::Jacobi(JacobiParams::reference(0.5)),
            state: MarketState::new(0.0, 100.0f64.ln(), 0.5).unwrap(),
            maturity: 0.5,
            l_grid: vec![-0.1, 0.0, 0.1],
            contour: ContourConfig::default(),
        };
        let result = smile(&request).unwrap();
        for point in &result.points {
            assert!(point.status.is_ok(), "L={} failed: {:?}", point.l, point.status);
        }
    }

    #[test]
    fn smile_rejects_unsorted_grid() {
        let request = SmileRequest {
            model: Model::Cir(CirParams::reference(0.0)),
            state: MarketState::new(0.0, 100.0f64.ln(), 0.05).unwrap(),
            maturity: 0.25,
            l_grid: vec![0.1, -0.1],
            contour: ContourConfig::default(),
        };
        assert!(matches!(smile(&request), Err(Error::InvalidParams(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prop_implied_vol_round_trip(
            forward in 50.0f64..150.0,
            u in -2.0f64..2.0,
            tau in 0.1f64..3.0,
            sigma in 0.01f64..2.0,
        ) {
            // Moneyness scaled by σ√τ keeps prices well inside the
            // arbitrage bounds for every draw.
            let strike = forward * (u * sigma * tau.sqrt()).exp();
            let price = bs_call_forward(forward, strike, tau, sigma);
            prop_assume!(price > (forward - strike).max(0.0) + 1e-12 * forward);
            prop_assume!(price < forward * (1.0 - 1e-12));
            let recovered = implied_vol(price, forward, strike, tau).unwrap();
            prop_assert!((recovered - sigma).abs() <= 1e-8, "σ={sigma}, got {recovered}");
        }
    }
}
