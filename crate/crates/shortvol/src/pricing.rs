//! Fourier pricing: payoff transforms, contour quadrature, and the European
//! option pricer.
//!
//! With `G` from [`crate::chf`], the time-`t` value of a European claim with
//! payoff transform `φ̂` is
//!
//! ```text
//! V_t = (1/π) ∫₀^∞ Re[ φ̂(ω) e^{iωX_t} G(t, Y_t; T, 1−iω, ω²/2+iω/2) ] dω_r
//! ```
//!
//! along the horizontal contour `ω = ω_r + iω_i`.  The half-line Re-part
//! form is licensed by conjugate symmetry of the integrand in `ω_r`.  For a
//! call, `φ̂(ω) = −K^{1−iω}/(ω²+iω)` on the strip `ω_i < −1`; the same
//! algebraic expression on `ω_i > 0` prices a put (used for parity checks).
//!
//! Quadrature is adaptive Gauss–Kronrod (7–15 pair, bisection on the error
//! estimate) over `[0, Ω]`, with `Ω` doubled until the newest tail segment
//! contributes less than the absolute tolerance.  Evaluation and reduction
//! order are fixed, so prices are bit-reproducible for a given
//! configuration.

use crate::chf::{self, GArgs};
use crate::models::{MarketState, Model};
use crate::{ComplexScalar, Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// Contour offset and quadrature controls for the pricing integral.
#[derive(Debug, Clone, Copy)]
pub struct ContourConfig {
    /// Imaginary offset `ω_i` of the contour.  Calls need `ω_i < −1`.
    pub omega_i: f64,
    /// Absolute tolerance on the integral (also the tail-segment cutoff).
    pub abs_tol: f64,
    /// Relative tolerance on the integral.
    pub rel_tol: f64,
    /// Initial truncation point `Ω` of the half-line.
    pub omega_max_init: f64,
    /// Maximum number of domain doublings before giving up.
    pub max_doublings: u32,
}

impl Default for ContourConfig {
    /// Reference configuration: `ω_i = −1.5`, absolute tolerance `1e-10`,
    /// relative tolerance `1e-8`, initial truncation `Ω = 40`, up to 6
    /// doublings.
    fn default() -> Self {
        ContourConfig {
            omega_i: -1.5,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            omega_max_init: 40.0,
            max_doublings: 6,
        }
    }
}

impl ContourConfig {
    /// The default put-side configuration: same tolerances, contour on the
    /// put strip at `ω_i = +0.5`.
    pub fn default_put() -> Self {
        ContourConfig { omega_i: 0.5, ..ContourConfig::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "quadrature tolerances must be positive, got abs_tol={}, rel_tol={}",
                self.abs_tol, self.rel_tol
            )));
        }
        if !(self.omega_max_init > 0.0) || !self.omega_max_init.is_finite() {
            return Err(Error::InvalidParams(format!(
                "omega_max_init must be positive and finite, got {}",
                self.omega_max_init
            )));
        }
        if !self.omega_i.is_finite() {
            return Err(Error::InvalidParams(format!("omega_i must be finite, got {}", self.omega_i)));
        }
        Ok(())
    }
}

/// A payoff's generalized Fourier transform `φ̂` together with the open strip
/// of contour offsets `ω_i` on which it is valid.
#[derive(Clone)]
pub struct PayoffTransform {
    strip: (f64, f64),
    eval: Arc<dyn Fn(ComplexScalar) -> ComplexScalar + Send + Sync>,
}

impl std::fmt::Debug for PayoffTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PayoffTransform").field("strip", &self.strip).finish()
    }
}

impl PayoffTransform {
    /// Wraps an evaluator valid on the open strip `lo < ω_i < hi`.
    pub fn new(
        strip: (f64, f64),
        eval: impl Fn(ComplexScalar) -> ComplexScalar + Send + Sync + 'static,
    ) -> Self {
        PayoffTransform { strip, eval: Arc::new(eval) }
    }

    /// Declared validity strip `(lo, hi)` for `ω_i`.
    pub fn strip(&self) -> (f64, f64) {
        self.strip
    }

    /// Evaluates `φ̂(ω)`, rejecting contours outside the declared strip.
    pub fn evaluate(&self, omega: ComplexScalar) -> Result<ComplexScalar> {
        if omega.im <= self.strip.0 || omega.im >= self.strip.1 {
            return Err(Error::StripViolation(format!(
                "omega_i={} outside the transform's strip ({}, {})",
                omega.im, self.strip.0, self.strip.1
            )));
        }
        Ok((self.eval)(omega))
    }
}

/// Call transform `φ̂(ω) = −K^{1−iω}/(ω² + iω)`, valid on `ω_i < −1`.
pub fn call_transform(strike: f64) -> Result<PayoffTransform> {
    if !(strike > 0.0) || !strike.is_finite() {
        return Err(Error::InvalidParams(format!("strike must be positive, got {strike}")));
    }
    Ok(PayoffTransform::new((f64::NEG_INFINITY, -1.0), move |omega| {
        rational_transform(strike, omega)
    }))
}

/// Put transform: the identical rational expression on the strip `ω_i > 0`
/// (where `e^{ω_i x}(K − e^x)⁺` is integrable).  Used for parity checks.
pub fn put_transform(strike: f64) -> Result<PayoffTransform> {
    if !(strike > 0.0) || !strike.is_finite() {
        return Err(Error::InvalidParams(format!("strike must be positive, got {strike}")));
    }
    Ok(PayoffTransform::new((0.0, f64::INFINITY), move |omega| {
        rational_transform(strike, omega)
    }))
}

fn rational_transform(strike: f64, omega: ComplexScalar) -> ComplexScalar {
    let i = Complex64::i();
    let k_pow = ((Complex64::new(1.0, 0.0) - i * omega) * strike.ln()).exp();
    -k_pow / (omega * omega + i * omega)
}

// ---------------------------------------------------------------------------
// Gauss–Kronrod quadrature
// ---------------------------------------------------------------------------

/// 15-point Kronrod abscissae on [0, 1] (symmetric; last entry is 0).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
/// Embedded 7-point Gauss weights (nodes `XGK[1], XGK[3], XGK[5], XGK[7]`).
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// Hard cap on integrand evaluations per segment.
const MAX_EVALS_PER_SEGMENT: usize = 200_000;
/// Panels narrower than this fraction of the segment are accepted as-is.
const MIN_PANEL_FRACTION: f64 = 1e-10;

/// One Gauss–Kronrod 7–15 panel: returns `(K15, |K15 − G7|)`.
fn gk_panel<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [0.0f64; 15];
    // Fixed evaluation order: left nodes outside-in, center, right nodes
    // inside-out — reproducibility of the floating-point sum is part of the
    // output contract.
    for j in 0..7 {
        fv[j] = f(c - h * XGK[j])?;
    }
    fv[7] = f(c)?;
    for j in 0..7 {
        fv[8 + j] = f(c + h * XGK[6 - j])?;
    }
    let mut k15 = WGK[7] * fv[7];
    for j in 0..7 {
        k15 += WGK[j] * (fv[j] + fv[14 - j]);
    }
    let mut g7 = WG[3] * fv[7];
    for (i, j) in [1usize, 3, 5].iter().enumerate() {
        g7 += WG[i] * (fv[*j] + fv[14 - *j]);
    }
    Ok((h * k15, h * (k15 - g7).abs()))
}

/// Adaptive bisection over `[a, b]`, depth-first and left-first, with error
/// allocation proportional to panel width.  Returns the integral estimate.
fn gk_adaptive<F>(f: &mut F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let seg_width = b - a;
    let min_width = seg_width * MIN_PANEL_FRACTION;
    let mut total = 0.0f64;
    let mut evals = 0usize;
    let mut stack = vec![(a, b)];
    while let Some((lo, hi)) = stack.pop() {
        evals += 15;
        if evals > MAX_EVALS_PER_SEGMENT {
            return Err(Error::Quadrature(format!(
                "evaluation budget exhausted on segment [{a}, {b}]"
            )));
        }
        let (value, err) = gk_panel(f, lo, hi)?;
        let width = hi - lo;
        let tol_here = (abs_tol * width / seg_width).max(rel_tol * value.abs());
        if err <= tol_here || width <= min_width {
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            // Push right first so the left half is processed next (LIFO).
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Ok(total)
}

/// Computes `(1/π)·∫₀^∞ Re[integrand(ω_r)] dω_r` by adaptive panels on
/// `[0, Ω]`, doubling `Ω` until the newest tail segment contributes less
/// than `abs_tol`.
///
/// # Errors
/// [`Error::Quadrature`] if the tail still matters after `max_doublings`
/// doublings or the evaluation budget is exhausted; integrand errors
/// propagate.
pub fn integrate_contour<F>(mut integrand: F, config: &ContourConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<ComplexScalar>,
{
    config.validate()?;
    let mut re_part = |omega_r: f64| -> Result<f64> { Ok(integrand(omega_r)?.re) };
    let mut total = gk_adaptive(&mut re_part, 0.0, config.omega_max_init, config.abs_tol, config.rel_tol)?;
    let mut omega_lo = config.omega_max_init;
    let mut tail_ok = false;
    for _ in 0..=config.max_doublings {
        // Previous segment's share of abs_tol already spent; give the tail
        // segments the same budget each — conservative but simple.
        let omega_hi = 2.0 * omega_lo;
        let tail = gk_adaptive(&mut re_part, omega_lo, omega_hi, config.abs_tol, config.rel_tol)?;
        total += tail;
        if tail.abs() < config.abs_tol {
            tail_ok = true;
            break;
        }
        omega_lo = omega_hi;
    }
    if !tail_ok {
        return Err(Error::Quadrature(format!(
            "tail of the contour integral still contributes >= {} after \
             {} domain doublings (last Ω = {omega_lo})",
            config.abs_tol, config.max_doublings
        )));
    }
    Ok(total / std::f64::consts::PI)
}

// ---------------------------------------------------------------------------
// European pricing
// ---------------------------------------------------------------------------

/// Number of samples for the pre-quadrature branch-continuity sweep.
const CONTINUITY_SAMPLES: usize = 33;

/// Resolves the contour offset actually used for integration: the requested
/// one when it lies inside both the transform strip and the model's
/// admissible window, otherwise the midpoint of their intersection.
fn effective_offset(model: &Model, requested: f64, strip: (f64, f64)) -> Result<f64> {
    let (wlo, whi) = chf::admissible_offset_window(model);
    let lo = wlo.max(strip.0);
    let hi = whi.min(strip.1);
    if !(lo < hi) {
        return Err(Error::BranchDiscontinuity(format!(
            "no admissible contour: the model's analyticity window \
             ({wlo}, {whi}) does not meet the transform strip \
             ({}, {})",
            strip.0, strip.1
        )));
    }
    if requested > lo && requested < hi {
        return Ok(requested);
    }
    // For the built-in call/put strips both bounds are finite here (the
    // strip caps the infinite side of the window); the guards cover custom
    // transforms with unbounded strips.
    let fallback = if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo.is_finite() {
        lo + 1.0
    } else {
        hi - 1.0
    };
    Ok(fallback)
}

/// Prices a European claim with transform `φ̂` by the contour integral.
///
/// Validation: `t < T`, the state lies in the model's state space, and the
/// configured contour offset lies inside the transform's strip.  Before
/// integrating, `G` is swept once along the contour as a branch-continuity
/// diagnostic (see [`chf::check_contour_continuity`]).
///
/// Contour admissibility: the integral equals the option value only for
/// offsets inside [`chf::admissible_offset_window`] — outside it the
/// formula's square roots cross their branch cuts on the imaginary axis and
/// the result drifts with `ω_i`.  A requested offset outside the window is
/// replaced by the midpoint of the window's intersection with the
/// transform's strip (deterministically); if that intersection is empty the
/// claim cannot be priced on any horizontal contour and
/// [`Error::BranchDiscontinuity`] is raised.
///
/// Negative results: values below `−max(abs_tol, 1e-10·S₀)` raise
/// [`Error::NegativePrice`]; tiny negatives inside that noise floor are
/// clamped to zero.
///
/// A final tail-decay check asserts the integrand magnitude is falling at
/// least quadratically near the truncation point (the integrability the
/// half-line representation relies on); violation raises
/// [`Error::Quadrature`].
pub fn price_european(
    model: &Model,
    state: &MarketState,
    maturity: f64,
    transform: &PayoffTransform,
    config: &ContourConfig,
) -> Result<f64> {
    config.validate()?;
    if maturity <= state.t {
        return Err(Error::InvalidParams(format!(
            "maturity must exceed valuation time, got t={}, maturity={maturity}",
            state.t
        )));
    }
    model.validate_state(state)?;
    let (lo, hi) = transform.strip();
    if config.omega_i <= lo || config.omega_i >= hi {
        return Err(Error::StripViolation(format!(
            "contour offset omega_i={} outside the transform strip ({lo}, {hi})",
            config.omega_i
        )));
    }
    let omega_i = effective_offset(model, config.omega_i, (lo, hi))?;

    chf::check_contour_continuity(
        model,
        state.t,
        maturity,
        state.y,
        omega_i,
        config.omega_max_init,
        CONTINUITY_SAMPLES,
    )?;

    let x_t = state.x;
    let mut eval_integrand = |omega_r: f64| -> Result<ComplexScalar> {
        let omega = Complex64::new(omega_r, omega_i);
        let phi_hat = transform.evaluate(omega)?;
        let args = GArgs::for_pricing(state.t, maturity, state.y, omega)?;
        let g_val = chf::g(model, &args)?;
        Ok(phi_hat * (Complex64::i() * omega * x_t).exp() * g_val)
    };

    let value = integrate_contour(&mut eval_integrand, config)?;

    // Tail-decay (integrability) check: compare integrand magnitude peaks
    // near Ω/2 and Ω; a 1/ω² decay would give a ratio of ~1/4, so a ratio
    // above 1 signals a non-integrable (or mis-truncated) integrand.  Peaks
    // over a few samples make the check robust to oscillation nulls.
    let omega_end = config.omega_max_init;
    let peak = |center: f64, f: &mut dyn FnMut(f64) -> Result<ComplexScalar>| -> Result<f64> {
        let mut m = 0.0f64;
        for d in [-0.05, 0.0, 0.05] {
            m = m.max(f(center * (1.0 + d))?.norm());
        }
        Ok(m)
    };
    let m_half = peak(0.5 * omega_end, &mut eval_integrand)?;
    let m_end = peak(omega_end, &mut eval_integrand)?;
    if m_end > m_half.max(config.abs_tol) {
        return Err(Error::Quadrature(format!(
            "integrand magnitude does not decay near truncation: \
             |f|≈{m_end:.3e} at Ω={omega_end} vs {m_half:.3e} at Ω/2"
        )));
    }

    let spot = state.spot();
    let noise_floor = config.abs_tol.max(1e-10 * spot);
    if value < -noise_floor {
        return Err(Error::NegativePrice(format!(
            "price {value:.6e} below the quadrature noise floor −{noise_floor:.1e}"
        )));
    }
    Ok(value.max(0.0))
}

/// Prices a European call of strike `K`: [`call_transform`] composed with
/// [`price_european`].
pub fn price_call(
    model: &Model,
    state: &MarketState,
    maturity: f64,
    strike: f64,
    config: &ContourConfig,
) -> Result<f64> {
    let transform = call_transform(strike)?;
    price_european(model, state, maturity, &transform, config)
}

/// Prices a European put of strike `K` on the `ω_i > 0` strip.  The caller's
/// config must carry a positive `omega_i` (see
/// [`ContourConfig::default_put`]).
pub fn price_put(
    model: &Model,
    state: &MarketState,
    maturity: f64,
    strike: f64,
    config: &ContourConfig,
) -> Result<f64> {
    let transform = put_transform(strike)?;
    price_european(model, state, maturity, &transform, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CirParams, JacobiParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> ComplexScalar {
        Complex64::new(re, im)
    }

    fn cir_model() -> Model {
        Model::Cir(CirParams::reference(0.5))
    }

    fn cir_state() -> MarketState {
        MarketState::new(0.0, 100.0f64.ln(), 0.05).unwrap()
    }

    fn jacobi_model() -> Model {
        Model::Jacobi(JacobiParams::reference(0.5))
    }

    fn jacobi_state() -> MarketState {
        MarketState::new(0.0, 100.0f64.ln(), 0.5).unwrap()
    }

    #[test]
    fn call_transform_pure_imaginary_point() {
        // K = 1, ω = −1.5i: φ̂ = −1/((−1.5i)² + i(−1.5i)) = 4/3.
        let t = call_transform(1.0).unwrap();
        let v = t.evaluate(c(0.0, -1.5)).unwrap();
        assert_relative_eq!(v.re, 4.0 / 3.0, max_relative = 1e-14);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn call_transform_rejects_outside_strip() {
        let t = call_transform(1.0).unwrap();
        assert!(matches!(t.evaluate(c(0.0, -0.5)), Err(Error::StripViolation(_))));
        assert!(matches!(t.evaluate(c(1.0, -1.0)), Err(Error::StripViolation(_))));
    }

    #[test]
    fn put_transform_strip_is_positive_side() {
        let t = put_transform(100.0).unwrap();
        assert!(t.evaluate(c(1.0, 0.5)).is_ok());
        assert!(matches!(t.evaluate(c(1.0, -1.5)), Err(Error::StripViolation(_))));
    }

    #[test]
    fn integrate_contour_zero_integrand() {
        let config = ContourConfig::default();
        let v = integrate_contour(|_| Ok(c(0.0, 0.0)), &config).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn integrate_contour_gaussian() {
        // (1/π)∫₀^∞ e^{−ω²} dω = 1/(2√π).
        let config = ContourConfig { omega_max_init: 10.0, ..ContourConfig::default() };
        let v = integrate_contour(|w| Ok(c((-w * w).exp(), 0.0)), &config).unwrap();
        assert_relative_eq!(v, 0.5 / std::f64::consts::PI.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn integrate_contour_half_line_matches_full_line() {
        // Conjugate-symmetric integrand g(ω) = e^{−ω²/4}·e^{i·0.8·ω}:
        // the full-line integral of Re[g] (independent Simpson quadrature)
        // must equal 2π × the half-line Re-part result.
        let config = ContourConfig { omega_max_init: 20.0, ..ContourConfig::default() };
        let g = |w: f64| c((-w * w / 4.0).exp() * (0.8 * w).cos(), (-w * w / 4.0).exp() * (0.8 * w).sin());
        let half = integrate_contour(|w| Ok(g(w)), &config).unwrap();
        // Simpson over [−20, 20] with 4001 points.
        let (a, b, n) = (-20.0f64, 20.0f64, 4000usize);
        let h = (b - a) / n as f64;
        let mut simpson = 0.0;
        for k in 0..=n {
            let w = a + k as f64 * h;
            let coef = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            simpson += coef * g(w).re;
        }
        simpson *= h / 3.0;
        assert_relative_eq!(simpson, 2.0 * std::f64::consts::PI * half, max_relative = 1e-8);
    }

    #[test]
    fn integrate_contour_flags_non_decaying_tail() {
        let config = ContourConfig { omega_max_init: 1.0, max_doublings: 3, ..ContourConfig::default() };
        let err = integrate_contour(|_| Ok(c(1.0, 0.0)), &config);
        assert!(matches!(err, Err(Error::Quadrature(_))));
    }

    #[test]
    fn deep_itm_call_approaches_spot() {
        // K → 0⁺: C → S₀ (martingale limit, E[e^{−∫r}S_T] = S₀).
        let config = ContourConfig::default();
        let v = price_call(&cir_model(), &cir_state(), 0.25, 1e-8, &config).unwrap();
        assert_relative_eq!(v, 100.0, epsilon = 1e-6);
    }

    #[test]
    fn call_price_monotone_in_strike() {
        let config = ContourConfig::default();
        let mut last = f64::INFINITY;
        for strike in [60.0, 80.0, 100.0, 120.0, 140.0] {
            let v = price_call(&cir_model(), &cir_state(), 0.25, strike, &config).unwrap();
            assert!(v <= last + 1e-10, "price increased with strike at K={strike}");
            last = v;
        }
    }

    #[test]
    fn call_price_within_arbitrage_bounds() {
        let config = ContourConfig::default();
        for model in [cir_model(), jacobi_model()] {
            let state = if matches!(model, Model::Cir(_)) { cir_state() } else { jacobi_state() };
            for maturity in [0.25, 1.0] {
                let bond = chf::bond(&model, 0.0, state.y, maturity).unwrap();
                for strike in [80.0, 100.0, 120.0] {
                    let v = price_call(&model, &state, maturity, strike, &config).unwrap();
                    let lower = (100.0 - strike * bond).max(0.0);
                    assert!(
                        v >= lower - 1e-8 && v <= 100.0 + 1e-8,
                        "bounds violated: C={v}, intrinsic={lower}, model={}",
                        model.name()
                    );
                }
            }
        }
    }

    #[test]
    fn call_price_convex_in_strike() {
        let config = ContourConfig::default();
        let strikes = [80.0, 90.0, 100.0, 110.0, 120.0];
        let prices: Vec<f64> = strikes
            .iter()
            .map(|&k| price_call(&cir_model(), &cir_state(), 0.25, k, &config).unwrap())
            .collect();
        for i in 1..4 {
            let second_diff = prices[i - 1] - 2.0 * prices[i] + prices[i + 1];
            assert!(second_diff >= -config.abs_tol, "convexity violated at K={}", strikes[i]);
        }
    }

    #[test]
    fn price_invariant_under_tolerance_halving() {
        let config = ContourConfig::default();
        let tight = ContourConfig {
            abs_tol: config.abs_tol / 2.0,
            rel_tol: config.rel_tol / 2.0,
            ..config
        };
        let v1 = price_call(&cir_model(), &cir_state(), 0.25, 100.0, &config).unwrap();
        let v2 = price_call(&cir_model(), &cir_state(), 0.25, 100.0, &tight).unwrap();
        assert_relative_eq!(v1, v2, max_relative = 1e-8);
    }

    #[test]
    fn price_invariant_across_contour_offsets() {
        // Cauchy: the integral does not depend on ω_i within the admissible
        // window, here (−1.726…, −1) for the reference CIR model at ρ=0.5.
        let base = price_call(&cir_model(), &cir_state(), 0.25, 100.0, &ContourConfig::default()).unwrap();
        for omega_i in [-1.7, -1.45, -1.2] {
            let config = ContourConfig { omega_i, ..ContourConfig::default() };
            let v = price_call(&cir_model(), &cir_state(), 0.25, 100.0, &config).unwrap();
            assert_relative_eq!(v, base, max_relative = 1e-9);
        }
    }

    #[test]
    fn inadmissible_offsets_fall_back_deterministically() {
        // At ρ=0 the admissible window is (−1.0619…, +0.0619…): every
        // conventional call offset is outside it, so all requests collapse
        // onto the same midpoint contour and must price bitwise-identically.
        let model = Model::Cir(CirParams::reference(0.0));
        let mut prices = vec![];
        for omega_i in [-1.2, -1.5, -2.9] {
            let config = ContourConfig { omega_i, ..ContourConfig::default() };
            prices.push(price_call(&model, &cir_state(), 0.25, 100.0, &config).unwrap());
        }
        assert_eq!(prices[0], prices[1]);
        assert_eq!(prices[0], prices[2]);
    }

    #[test]
    fn frozen_cir_reference_prices() {
        // Values from an independent extended-precision implementation of
        // the same formulas, computed on window-interior contours and
        // cross-checked against put-call parity to 16 digits.
        let state = cir_state();
        let cases = [
            (0.5, 4.870110806203792, 3.628419479838047),
            (0.0, 4.823892928252986, 3.582201601887241),
        ];
        for (rho, call_ref, put_ref) in cases {
            let model = Model::Cir(CirParams::reference(rho));
            let call = price_call(&model, &state, 0.25, 100.0, &ContourConfig::default()).unwrap();
            let put = price_put(&model, &state, 0.25, 100.0, &ContourConfig::default_put()).unwrap();
            assert_relative_eq!(call, call_ref, max_relative = 1e-9);
            assert_relative_eq!(put, put_ref, max_relative = 1e-9);
        }
    }

    #[test]
    fn frozen_jacobi_reference_prices() {
        // Calls from the same independent extended-precision implementation,
        // over both maturities and a strike ladder. The Jacobi admissible
        // window is wide enough that the conventional contours are interior.
        let state = jacobi_state();
        // (rho, maturity, strike, call)
        let cases = [
            (0.0, 0.25, 90.0, 11.69171787403187),
            (0.0, 0.25, 100.0, 4.69807089698795),
            (0.0, 0.25, 110.0, 1.2635196410146257),
            (0.0, 1.0, 90.0, 16.877976560360246),
            (0.0, 1.0, 100.0, 10.858618982283618),
            (0.0, 1.0, 110.0, 6.554521753468414),
            (0.5, 0.25, 90.0, 11.752292459106922),
            (0.5, 0.25, 100.0, 4.724647761518501),
            (0.5, 0.25, 110.0, 1.216766959255678),
            (0.5, 1.0, 90.0, 17.099348600348584),
            (0.5, 1.0, 100.0, 10.999519908826223),
            (0.5, 1.0, 110.0, 6.557651280461879),
        ];
        for (rho, maturity, strike, call_ref) in cases {
            let model = Model::Jacobi(JacobiParams::reference(rho));
            let call = price_call(&model, &state, maturity, strike, &ContourConfig::default()).unwrap();
            assert_relative_eq!(call, call_ref, max_relative = 1e-8);
        }
    }

    #[test]
    fn jacobi_price_invariant_across_contour_offsets() {
        let base = price_call(&jacobi_model(), &jacobi_state(), 0.25, 100.0, &ContourConfig::default()).unwrap();
        for omega_i in [-2.5, -1.2] {
            let config = ContourConfig { omega_i, ..ContourConfig::default() };
            let v = price_call(&jacobi_model(), &jacobi_state(), 0.25, 100.0, &config).unwrap();
            assert_relative_eq!(v, base, max_relative = 1e-7);
        }
    }

    #[test]
    fn put_call_parity_single_point() {
        let model = cir_model();
        let state = cir_state();
        let (maturity, strike) = (0.25, 100.0);
        let call = price_call(&model, &state, maturity, strike, &ContourConfig::default()).unwrap();
        let put = price_put(&model, &state, maturity, strike, &ContourConfig::default_put()).unwrap();
        let bond = chf::bond(&model, 0.0, state.y, maturity).unwrap();
        let parity = call - put - (100.0 - strike * bond);
        assert!(parity.abs() < 1e-6 * 100.0, "parity residual {parity}");
    }

    #[test]
    fn rejects_contour_outside_call_strip() {
        let config = ContourConfig { omega_i: -0.5, ..ContourConfig::default() };
        assert!(matches!(
            price_call(&cir_model(), &cir_state(), 0.25, 100.0, &config),
            Err(Error::StripViolation(_))
        ));
    }

    #[test]
    fn rejects_maturity_before_t() {
        let state = MarketState::new(1.0, 100.0f64.ln(), 0.05).unwrap();
        assert!(price_call(&cir_model(), &state, 0.5, 100.0, &ContourConfig::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn prop_strike_scaling_of_call_transform(
            omega_r in -20.0f64..20.0,
            omega_i in -5.0f64..-1.01,
            strike in 0.5f64..500.0,
        ) {
            // φ̂_K(ω) = K^{1−iω}·φ̂_1(ω).
            let omega = c(omega_r, omega_i);
            let t_k = call_transform(strike).unwrap().evaluate(omega).unwrap();
            let t_1 = call_transform(1.0).unwrap().evaluate(omega).unwrap();
            let scale = ((c(1.0, 0.0) - Complex64::i() * omega) * strike.ln()).exp();
            let expect = scale * t_1;
            let denom = t_k.norm().max(expect.norm()).max(1e-300);
            prop_assert!((t_k - expect).norm() / denom <= 1e-12);
        }
    }
}
