//! The characteristic function `G` and zero-coupon bond prices, in explicit
//! form for both drivers.
//!
//! `G(t, y; T, w, z)` is the conditional expectation
//!
//! ```text
//! G = Ẽ[ exp(−w·∫ₜᵀ r(Y_s) ds − z·∫ₜᵀ c²(Y_s) ds) | Y_t = y ]
//! ```
//!
//! taken under dynamics whose parameters carry an ω-dependent complex shift
//! (the image of the measure change that removes the cross term between the
//! asset and the driver).  For the CIR driver, `G` is a single confluent
//! hypergeometric expression; for the Jacobi driver it is an
//! eigenfunction-series whose terms combine a terminating ₃F₂ with Jacobi
//! polynomials of complex parameters.
//!
//! Numerical policy: every returned value is certified.  The Jacobi series
//! is evaluated through a precision ladder (two algebraic rearrangements at
//! f64, then the same two with the cancellation-prone inner sum in
//! double-double) with an online error-budget guard; if no rung can certify
//! ~1e-11, the evaluation fails with [`Error::PrecisionLoss`] instead of
//! returning noise.  All complex square roots and logarithms take principal
//! branches; continuity along a pricing contour is diagnosed separately by
//! [`check_contour_continuity`].

use crate::dd::{Dd, DdComplex};
use crate::models::{CirParams, JacobiParams, Model};
use crate::specfun::{hyp1f1, jacobi_p, log_gamma};
use crate::{ComplexScalar, Error, Result};
use num_complex::Complex64;

/// Relative error budget a ladder rung must certify before its value is
/// accepted.
const GUARD_BUDGET: f64 = 1e-11;
/// Unit roundoff of f64 (used in the guard for outer-loop accumulation).
const EPS_F64: f64 = 2.3e-16;
/// Effective unit roundoff of the double-double inner sum.
const EPS_DD: f64 = 1e-31;
/// Maximum number of series terms for the Jacobi eigenfunction expansion.
const JACOBI_N_MAX: usize = 250;
/// Series tail rule: stop after two consecutive terms below this fraction of
/// the running partial sum.
const JACOBI_TAIL: f64 = 1e-12;
/// Magnitude cap on the ₁F₁ argument in the CIR formula; beyond this the
/// Kummer-transformed series can no longer be certified in f64.
const CIR_ZARG_MAX: f64 = 600.0;

/// Arguments of `G`: the time interval, the driver level, the transform
/// exponents `(w, z)`, and the contour variable `ω` that drives the
/// parameter shift.
#[derive(Debug, Clone, Copy)]
pub struct GArgs {
    pub t: f64,
    pub maturity: f64,
    pub y: f64,
    pub w: ComplexScalar,
    pub z: ComplexScalar,
    pub omega: ComplexScalar,
}

impl GArgs {
    /// Validates `maturity > t` and finiteness.
    pub fn new(t: f64, maturity: f64, y: f64, w: ComplexScalar, z: ComplexScalar, omega: ComplexScalar) -> Result<Self> {
        if !(maturity - t).is_finite() || maturity <= t {
            return Err(Error::InvalidParams(format!(
                "need maturity > t, got t={t}, maturity={maturity}"
            )));
        }
        if !y.is_finite() {
            return Err(Error::InvalidParams(format!("driver level y={y} must be finite")));
        }
        for (name, v) in [("w", w), ("z", z), ("omega", omega)] {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidParams(format!("{name}={v} must be finite")));
            }
        }
        Ok(GArgs { t, maturity, y, w, z, omega })
    }

    /// The pricing specialization: `w = 1 − iω`, `z = ω²/2 + iω/2`, so that
    /// `G` becomes the discounted characteristic function of `X_T`.
    pub fn for_pricing(t: f64, maturity: f64, y: f64, omega: ComplexScalar) -> Result<Self> {
        let i = Complex64::i();
        let w = Complex64::new(1.0, 0.0) - i * omega;
        let z = omega * omega / 2.0 + i * omega / 2.0;
        GArgs::new(t, maturity, y, w, z, omega)
    }

    fn tau(&self) -> f64 {
        self.maturity - self.t
    }
}

/// CIR parameters after the ω-dependent measure shift: only the long-run
/// mean moves, `θ̃ = θ + iωρδγ/κ`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedCirParams {
    pub theta_tilde: ComplexScalar,
    pub kappa: f64,
    pub delta: f64,
}

/// Applies the CIR parameter shift `θ̃ = θ + iωρδγ/κ`.
pub fn shift_cir(params: &CirParams, omega: ComplexScalar) -> ShiftedCirParams {
    let shift = Complex64::i() * omega * params.rho() * params.delta() * params.gamma() / params.kappa();
    ShiftedCirParams {
        theta_tilde: params.theta() + shift,
        kappa: params.kappa(),
        delta: params.delta(),
    }
}

/// Jacobi parameters after the ω-dependent measure shift:
/// `κ̃ = κ + iωρδγ`, `θ̃ = θ + iωρδγ` (both move by the same amount, so
/// `θ̃ − κ̃ = θ − κ` stays real).
#[derive(Debug, Clone, Copy)]
pub struct ShiftedJacobiParams {
    pub kappa_tilde: ComplexScalar,
    pub theta_tilde: ComplexScalar,
    pub delta: f64,
}

/// Applies the Jacobi parameter shift.
pub fn shift_jacobi(params: &JacobiParams, omega: ComplexScalar) -> ShiftedJacobiParams {
    let shift = Complex64::i() * omega * params.rho() * params.delta() * params.gamma();
    ShiftedJacobiParams {
        kappa_tilde: params.kappa() + shift,
        theta_tilde: params.theta() + shift,
        delta: params.delta(),
    }
}

/// `G` for whichever driver the model carries.
pub fn g(model: &Model, args: &GArgs) -> Result<ComplexScalar> {
    match model {
        Model::Cir(p) => g_cir(p, args),
        Model::Jacobi(p) => g_jacobi(p, args),
    }
}

/// Zero-coupon bond price for whichever driver the model carries.
pub fn bond(model: &Model, t: f64, y: f64, maturity: f64) -> Result<f64> {
    match model {
        Model::Cir(p) => bond_cir(p, t, y, maturity),
        Model::Jacobi(p) => bond_jacobi(p, t, y, maturity),
    }
}

// ---------------------------------------------------------------------------
// CIR driver
// ---------------------------------------------------------------------------

/// `G` for the CIR driver.
///
/// With shifted mean-level product `ã = κθ̃`, `b = κ`, `c = δ`, exponent pair
/// `d₁ = w`, `d₂ = γ²z`, the expectation evaluates to
///
/// ```text
/// v₁ = (−β + √(β² + 8d₁/c²))/2,   β = 2b/c²,
/// v₂ = (−α + √(α² + 8d₂/c²))/2,   α = 2ã/c² − 1,
/// G  = exp(−(ãv₁ + bv₂ + c²v₁v₂)τ) · y^{v₂} · (γ_T−v₁)^{−α−v₂−1} · γ_T^{α+2v₂+1}
///      · exp(−y(v₁ − γ_T v₁ e^{−(β/2+v₁)c²τ}/(γ_T−v₁)))
///      · Γ(α+v₂+1)/Γ(α+2v₂+1) · ₁F₁(v₂; α+2v₂+1; zArg)
/// ```
///
/// assembled in log space to avoid overflow of the power factors.
///
/// # Errors
/// [`Error::Domain`] if `y ≤ 0`; [`Error::PrecisionLoss`] if the ₁F₁
/// argument grows beyond the certified range; special-function failures
/// propagate.
pub fn g_cir(params: &CirParams, args: &GArgs) -> Result<ComplexScalar> {
    if args.y <= 0.0 {
        return Err(Error::Domain(format!("CIR driver level must be positive, got y={}", args.y)));
    }
    let tau = args.tau();
    let shifted = shift_cir(params, args.omega);
    let a = shifted.theta_tilde * params.kappa();
    let b = params.kappa();
    let c2 = params.delta() * params.delta();
    let x = args.y;
    let d1 = args.w;
    let d2 = args.z * params.gamma() * params.gamma();

    let alpha = 2.0 * a / c2 - 1.0;
    let beta = 2.0 * b / c2;
    let v1 = (-beta + (beta * beta + 8.0 * d1 / c2).sqrt()) / 2.0;
    let v2 = (-alpha + (alpha * alpha + 8.0 * d2 / c2).sqrt()) / 2.0;

    let ebt = (-(beta / 2.0 + v1) * c2 * tau).exp();
    let gamma_t = (beta + 2.0 * v1) / (1.0 - ebt);
    let z_arg = -gamma_t * gamma_t * x * ebt / (gamma_t - v1);
    if z_arg.norm() > CIR_ZARG_MAX {
        return Err(Error::PrecisionLoss(format!(
            "CIR 1F1 argument |zArg|={:.1} exceeds certified range {CIR_ZARG_MAX} \
             (omega={}, tau={tau})",
            z_arg.norm(),
            args.omega
        )));
    }

    let log_pre = -(a * v1 + b * v2 + c2 * v1 * v2) * tau
        + v2 * x.ln()
        + (-alpha - v2 - 1.0) * (gamma_t - v1).ln()
        + (alpha + 2.0 * v2 + 1.0) * gamma_t.ln()
        - x * (v1 - gamma_t * v1 * ebt / (gamma_t - v1))
        + log_gamma(alpha + v2 + 1.0)?
        - log_gamma(alpha + 2.0 * v2 + 1.0)?;
    let value = log_pre.exp() * hyp1f1(v2, alpha + 2.0 * v2 + 1.0, z_arg)?;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::PrecisionLoss(format!(
            "CIR G evaluated to a non-finite value at omega={}, tau={tau}",
            args.omega
        )));
    }
    Ok(value)
}

/// Closed-form CIR zero-coupon bond `B_t^T = exp(−P − Q·y)` with
/// `ζ = √(κ² + 2δ²)`,
/// `Q = 2(e^{ζτ}−1) / ((κ+ζ)(e^{ζτ}−1) + 2ζ)` and
/// `e^{−P} = (2ζ e^{(κ+ζ)τ/2} / ((κ+ζ)(e^{ζτ}−1) + 2ζ))^{2κθ/δ²}`.
///
/// # Errors
/// [`Error::Domain`] on `y ≤ 0` or `T < t`.
pub fn bond_cir(params: &CirParams, t: f64, y: f64, maturity: f64) -> Result<f64> {
    if y <= 0.0 {
        return Err(Error::Domain(format!("CIR driver level must be positive, got y={y}")));
    }
    if maturity < t {
        return Err(Error::Domain(format!("need maturity >= t, got t={t}, maturity={maturity}")));
    }
    let tau = maturity - t;
    if tau == 0.0 {
        return Ok(1.0);
    }
    let kappa = params.kappa();
    let zeta = (kappa * kappa + 2.0 * params.delta() * params.delta()).sqrt();
    let em1 = (zeta * tau).exp_m1();
    let den = (kappa + zeta) * em1 + 2.0 * zeta;
    let q = 2.0 * em1 / den;
    let exponent = 2.0 * kappa * params.theta() / (params.delta() * params.delta());
    let log_a = exponent * ((2.0 * zeta).ln() + (kappa + zeta) * tau / 2.0 - den.ln());
    Ok((log_a - q * y).exp())
}

// ---------------------------------------------------------------------------
// Jacobi driver
// ---------------------------------------------------------------------------

/// Shared spectral parameters of the Jacobi series.
///
/// With `α̃ = 2κ̃/δ² − 1`, `β̃ = 2(θ̃−κ̃)/δ² − 1` and exponent roots
///
/// ```text
/// ṽ₁ = (−α̃ + √(α̃² + 8zγ²/δ²))/2,   ṽ₂ = (−β̃ + √(β̃² + 8wη/δ²))/2,
/// ```
///
/// the series over eigenlevels `n` uses `S = α̃+β̃+2ṽ₁+2ṽ₂+1`,
/// `p = α̃+β̃+ṽ₁+ṽ₂+2` and decays like `exp(−n(n+S)δ²τ/2)`.
#[derive(Debug, Clone, Copy)]
struct JacobiSpectral {
    alpha: ComplexScalar,
    beta: ComplexScalar,
    v1: ComplexScalar,
    v2: ComplexScalar,
    big_s: ComplexScalar,
    p: ComplexScalar,
    sv: ComplexScalar,
}

fn jacobi_spectral(params: &JacobiParams, args: &GArgs) -> JacobiSpectral {
    let shifted = shift_jacobi(params, args.omega);
    let d2 = params.delta() * params.delta();
    let alpha = 2.0 * shifted.kappa_tilde / d2 - 1.0;
    let beta = 2.0 * (shifted.theta_tilde - shifted.kappa_tilde) / d2 - 1.0;
    let g2 = params.gamma() * params.gamma();
    let v1 = (-alpha + (alpha * alpha + 8.0 * args.z * g2 / d2).sqrt()) / 2.0;
    let v2 = (-beta + (beta * beta + 8.0 * args.w * params.eta() / d2).sqrt()) / 2.0;
    let big_s = alpha + beta + 2.0 * v1 + 2.0 * v2 + 1.0;
    let p = alpha + beta + v1 + v2 + 2.0;
    let sv = v1 + v2;
    JacobiSpectral { alpha, beta, v1, v2, big_s, p, sv }
}

/// Which algebraic rearrangement of the series term to use.
///
/// The two are exactly equal (the `Swapped` form comes from the `y ↦ 1−y`
/// symmetry of the driver) but their inner ₃F₂ sums cancel in different
/// regions of the (ω, τ) domain, so between them they cover far more of the
/// domain at a given working precision.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Rep {
    /// Inner sum ₃F₂(−n, n+S, ṽ₁; ṽ₁+ṽ₂, α̃+2ṽ₁+1; 1), coefficient
    /// denominator (β̃+2ṽ₂+1)_n, polynomial P_n^{(β̃+2ṽ₂, α̃+2ṽ₁)}(2y−1).
    Direct,
    /// Inner sum ₃F₂(−n, n+S, ṽ₂; ṽ₁+ṽ₂, β̃+2ṽ₂+1; 1), coefficient
    /// denominator (α̃+2ṽ₁+1)_n, polynomial P_n^{(α̃+2ṽ₁, β̃+2ṽ₂)}(1−2y).
    Swapped,
    /// Non-folded inner sum ₃F₂(−n, n+S, β̃+ṽ₂+1; p, β̃+2ṽ₂+1; 1) with
    /// coefficient (S)_n/(α̃+2ṽ₁+1)_n; only used when ṽ₁+ṽ₂ ≈ 0 makes the
    /// folded forms singular.
    Unfolded,
}

/// Per-representation view of the series ingredients.
struct RepPack {
    /// Upper ₃F₂ parameter besides (−n, n+S); `F ≡ 1` when it vanishes.
    upper: ComplexScalar,
    /// First lower ₃F₂ parameter.
    low1: ComplexScalar,
    /// Second lower ₃F₂ parameter.
    low2: ComplexScalar,
    /// Extra factor in the coefficient numerator: `(num)_n` (sv for the
    /// folded forms, 1-free for the unfolded form — encoded as `None`).
    num: Option<ComplexScalar>,
    /// Coefficient denominator parameter: `(den)_n`.
    den: ComplexScalar,
    /// Jacobi polynomial parameters and argument.
    pa: ComplexScalar,
    pb: ComplexScalar,
    xarg: f64,
}

fn rep_pack(sp: &JacobiSpectral, rep: Rep, y: f64) -> RepPack {
    let a2 = sp.alpha + 2.0 * sp.v1; // α̃ + 2ṽ₁
    let b2 = sp.beta + 2.0 * sp.v2; // β̃ + 2ṽ₂
    match rep {
        Rep::Direct => RepPack {
            upper: sp.v1,
            low1: sp.sv,
            low2: a2 + 1.0,
            num: Some(sp.sv),
            den: b2 + 1.0,
            pa: b2,
            pb: a2,
            xarg: 2.0 * y - 1.0,
        },
        Rep::Swapped => RepPack {
            upper: sp.v2,
            low1: sp.sv,
            low2: b2 + 1.0,
            num: Some(sp.sv),
            den: a2 + 1.0,
            pa: a2,
            pb: b2,
            xarg: 1.0 - 2.0 * y,
        },
        Rep::Unfolded => RepPack {
            upper: sp.beta + sp.v2 + 1.0,
            low1: sp.p,
            low2: b2 + 1.0,
            num: None,
            den: a2 + 1.0,
            pa: b2,
            pb: a2,
            xarg: 2.0 * y - 1.0,
        },
    }
}

/// Inner terminating ₃F₂ at unit argument, f64.  Returns the sum and the
/// largest intermediate magnitude (partial sums and terms), which measures
/// how much cancellation the sum suffered.
fn inner_3f2_f64(
    n: usize,
    big_s: ComplexScalar,
    upper: ComplexScalar,
    low1: ComplexScalar,
    low2: ComplexScalar,
) -> (ComplexScalar, f64) {
    let nf = n as f64;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut peak: f64 = 1.0;
    for k in 0..n {
        let kf = k as f64;
        term *= (-nf + kf) * (big_s + nf + kf) * (upper + kf)
            / ((low1 + kf) * (low2 + kf) * (kf + 1.0));
        sum += term;
        peak = peak.max(term.norm()).max(sum.norm());
    }
    (sum, peak)
}

/// Same inner sum with double-double arithmetic.
fn inner_3f2_dd(
    n: usize,
    big_s: DdComplex,
    upper: DdComplex,
    low1: DdComplex,
    low2: DdComplex,
) -> (ComplexScalar, f64) {
    let nf = n as f64;
    let mut term = DdComplex::ONE;
    let mut sum = term;
    let mut peak: f64 = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let cf = |x: f64| DdComplex::new(Dd::from_f64(x), Dd::ZERO);
        let numer = cf(-nf + kf)
            .mul(big_s.add(cf(nf + kf)))
            .mul(upper.add(cf(kf)));
        let denom = low1.add(cf(kf)).mul(low2.add(cf(kf))).mul(cf(kf + 1.0));
        term = term.mul(numer.div(denom));
        sum = sum.add(term);
        peak = peak.max(term.norm_f64()).max(sum.norm_f64());
    }
    (sum.to_c64(), peak)
}

/// Double-double versions of the parameters feeding the inner sum, rebuilt
/// from the exact model inputs so the inner cancellation is resolved at
/// ~1e-31 rather than merely re-summing f64-rounded parameters.
struct DdSpectral {
    big_s: DdComplex,
    upper: DdComplex,
    low1: DdComplex,
    low2: DdComplex,
}

fn dd_spectral(params: &JacobiParams, args: &GArgs, rep: Rep) -> DdSpectral {
    let cf = |x: f64| DdComplex::new(Dd::from_f64(x), Dd::ZERO);
    let cprod = |a: f64, b: f64| Dd::from_prod(a, b);
    // shift = i·ω·ρδγ, exactly: ρδγ is rounded once (as in the f64 path),
    // then the product with ω is kept at double width.
    let rdg = params.rho() * params.delta() * params.gamma();
    let shift = DdComplex::new(
        cprod(-args.omega.im, rdg),
        cprod(args.omega.re, rdg),
    );
    let kappa_t = cf(params.kappa()).add(shift);
    let d2 = Dd::from_prod(params.delta(), params.delta());
    let dc = DdComplex::new(d2, Dd::ZERO);
    let two = cf(2.0);
    let one = DdComplex::ONE;
    let alpha = two.mul(kappa_t).div(dc).sub(one);
    // θ̃ − κ̃ = θ − κ exactly (the shifts cancel); subtract at double width.
    let theta_minus_kappa = DdComplex::new(
        Dd::from_f64(params.theta()).sub(Dd::from_f64(params.kappa())),
        Dd::ZERO,
    );
    let beta = two.mul(theta_minus_kappa).div(dc).sub(one);
    let g2 = Dd::from_prod(params.gamma(), params.gamma());
    let eight = cf(8.0);
    let zq = DdComplex::from_c64(args.z).mul(DdComplex::new(g2, Dd::ZERO));
    let wq = DdComplex::from_c64(args.w).mul(cf(params.eta()));
    let half = Dd::from_f64(0.5);
    let scale_half = |v: DdComplex| DdComplex::new(v.re.mul(half), v.im.mul(half));
    let v1 = scale_half(
        alpha.neg().add(alpha.mul(alpha).add(eight.mul(zq).div(dc)).sqrt()),
    );
    let v2 = scale_half(
        beta.neg().add(beta.mul(beta).add(eight.mul(wq).div(dc)).sqrt()),
    );
    let sv = v1.add(v2);
    let big_s = alpha.add(beta).add(sv).add(sv).add(one);
    let a2p1 = alpha.add(v1).add(v1).add(one);
    let b2p1 = beta.add(v2).add(v2).add(one);
    match rep {
        Rep::Direct => DdSpectral { big_s, upper: v1, low1: sv, low2: a2p1 },
        Rep::Swapped => DdSpectral { big_s, upper: v2, low1: sv, low2: b2p1 },
        Rep::Unfolded => DdSpectral {
            big_s,
            upper: beta.add(v2).add(one),
            low1: alpha.add(beta).add(v1).add(v2).add(two),
            low2: b2p1,
        },
    }
}

/// Outcome of one ladder rung.
struct RungResult {
    value: ComplexScalar,
    /// Certified relative error estimate.
    guard: f64,
}

/// Evaluates the Jacobi series in one representation, with the inner sum at
/// either precision, and reports the value together with a certified
/// error-budget estimate.
fn jacobi_series(
    params: &JacobiParams,
    args: &GArgs,
    sp: &JacobiSpectral,
    rep: Rep,
    use_dd: bool,
) -> Result<RungResult> {
    let tau = args.tau();
    let y = args.y;
    let pack = rep_pack(sp, rep, y);
    let dd = if use_dd { Some(dd_spectral(params, args, rep)) } else { None };

    // log-prefactor, shared by all representations:
    // −((θ̃−κ̃)ṽ₁ + κ̃ṽ₂ + δ²ṽ₁ṽ₂)τ + ṽ₁ ln y + ṽ₂ ln(1−y) + log Γ-ratio.
    let shifted = shift_jacobi(params, args.omega);
    let d2 = params.delta() * params.delta();
    let lam0 = (shifted.theta_tilde - shifted.kappa_tilde) * sp.v1
        + shifted.kappa_tilde * sp.v2
        + d2 * sp.v1 * sp.v2;
    let log_pre = -lam0 * tau
        + sp.v1 * y.ln()
        + sp.v2 * (1.0 - y).ln()
        + log_gamma(sp.alpha + sp.v1 + 1.0)?
        + log_gamma(sp.beta + sp.v2 + 1.0)?
        + log_gamma(sp.big_s)?
        - log_gamma(sp.p)?
        - log_gamma(sp.alpha + 2.0 * sp.v1 + 1.0)?
        - log_gamma(sp.beta + 2.0 * sp.v2 + 1.0)?;

    let f_is_one = pack.upper.norm() < 1e-13;
    let mut coeff = Complex64::new(1.0, 0.0); // (S)_n·(num)_n / ((p)_n·(den)_n)
    let mut total = Complex64::new(0.0, 0.0);
    let mut worst_inner: f64 = 0.0; // max over n of |term|·(inner peak)/|F|
    let mut max_term: f64 = 0.0;
    let mut small_run = 0u32;
    let mut converged = false;

    for n in 0..=JACOBI_N_MAX {
        if n > 0 {
            let nm = (n - 1) as f64;
            let numer = match pack.num {
                Some(num) => (sp.big_s + nm) * (num + nm),
                None => sp.big_s + nm,
            };
            let denom = match pack.num {
                Some(_) => (sp.p + nm) * (pack.den + nm),
                None => pack.den + nm,
            };
            coeff *= numer / denom;
        }
        let (f_val, peak) = if n == 0 || f_is_one {
            (Complex64::new(1.0, 0.0), 1.0)
        } else {
            match &dd {
                Some(ds) => inner_3f2_dd(n, ds.big_s, ds.upper, ds.low1, ds.low2),
                None => inner_3f2_f64(n, sp.big_s, pack.upper, pack.low1, pack.low2),
            }
        };
        let nf = n as f64;
        let eigen = (-(nf * (nf + sp.big_s) * d2 * tau / 2.0)).exp();
        let poly = jacobi_p(n, pack.pa, pack.pb, pack.xarg);
        let term = eigen * coeff * (2.0 * nf + sp.big_s) * f_val * poly;
        total += term;

        let t_norm = term.norm();
        max_term = max_term.max(t_norm);
        if f_val.norm() > 0.0 {
            worst_inner = worst_inner.max(t_norm * peak / f_val.norm());
        }

        if n >= 1 && t_norm < JACOBI_TAIL * total.norm() {
            small_run += 1;
            if small_run >= 2 {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }
    }

    if !converged {
        return Err(Error::NonConvergence(format!(
            "Jacobi G series tail rule unmet after {JACOBI_N_MAX} terms \
             (omega={}, tau={tau}); tenor may be too small",
            args.omega
        )));
    }
    let total_norm = total.norm();
    if total_norm == 0.0 {
        return Err(Error::PrecisionLoss(format!(
            "Jacobi G series summed to exactly zero (omega={}, tau={tau})",
            args.omega
        )));
    }
    let eps_inner = if use_dd { EPS_DD } else { EPS_F64 };
    let guard = (worst_inner * eps_inner + max_term * EPS_F64) / total_norm;
    let value = log_pre.exp() * total;
    Ok(RungResult { value, guard })
}

/// `G` for the Jacobi driver, through the precision ladder.
///
/// Tries the better-conditioned of the two folded representations first at
/// f64, then the other, then both again with the inner ₃F₂ in double-double
/// arithmetic; the first rung whose online error estimate certifies ~1e-11
/// wins.  A separate non-folded form covers the measure-zero curve
/// `ṽ₁+ṽ₂ ≈ 0` where the folded coefficients degenerate.
///
/// # Errors
/// [`Error::NonConvergence`] if the series tail rule is not met within the
/// term budget (tiny tenors); [`Error::PrecisionLoss`] if no rung can
/// certify the budget — the value is then genuinely beyond double-double
/// precision (very small tenor × very large frequency) and no silently
/// corrupted number is returned.
pub fn g_jacobi(params: &JacobiParams, args: &GArgs) -> Result<ComplexScalar> {
    if args.y <= 0.0 || args.y >= 1.0 {
        return Err(Error::Domain(format!(
            "Jacobi driver level must lie in (0, 1), got y={}",
            args.y
        )));
    }
    let sp = jacobi_spectral(params, args);

    // Degenerate fold: ṽ₁+ṽ₂ ≈ 0 with a nonvanishing upper parameter makes
    // (sv)_n/(sv)-containing forms 0/0; use the non-folded representation.
    if sp.sv.norm() < 1e-12 && sp.v1.norm() > 1e-12 {
        let rung = jacobi_series(params, args, &sp, Rep::Unfolded, false)?;
        if rung.guard <= GUARD_BUDGET {
            return finite_or_precision_loss(rung.value, args);
        }
        let rung = jacobi_series(params, args, &sp, Rep::Unfolded, true)?;
        if rung.guard <= GUARD_BUDGET {
            return finite_or_precision_loss(rung.value, args);
        }
        return Err(precision_loss_err(args, rung.guard));
    }

    // Prefer the representation whose inner upper parameter is smaller: its
    // ₃F₂ stays closer to 1 and cancels less.
    let preferred = if sp.v2.norm() < sp.v1.norm() { Rep::Swapped } else { Rep::Direct };
    let other = if preferred == Rep::Swapped { Rep::Direct } else { Rep::Swapped };

    let mut last_guard = f64::INFINITY;
    for (rep, use_dd) in [(preferred, false), (other, false), (preferred, true), (other, true)] {
        let rung = jacobi_series(params, args, &sp, rep, use_dd)?;
        if rung.guard <= GUARD_BUDGET {
            return finite_or_precision_loss(rung.value, args);
        }
        last_guard = last_guard.min(rung.guard);
    }
    Err(precision_loss_err(args, last_guard))
}

fn finite_or_precision_loss(value: ComplexScalar, args: &GArgs) -> Result<ComplexScalar> {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::PrecisionLoss(format!(
            "Jacobi G evaluated to a non-finite value at omega={}, tau={}",
            args.omega,
            args.tau()
        )))
    }
}

fn precision_loss_err(args: &GArgs, guard: f64) -> Error {
    Error::PrecisionLoss(format!(
        "Jacobi G cancellation exceeds the certified budget even in \
         double-double arithmetic (best guard {guard:.2e} > {GUARD_BUDGET:.0e}) \
         at omega={}, tau={}; shorten the frequency range or increase the tenor",
        args.omega,
        args.tau()
    ))
}

/// Jacobi zero-coupon bond via the real specialization of the series.
///
/// At `(w, z) = (1, 0)` the first exponent root vanishes identically
/// (`v₁ = 0`), which collapses the inner ₃F₂ to 1 *exactly* and leaves a
/// purely real, cancellation-free series:
///
/// ```text
/// B = e^{−κv₂τ}(1−y)^{v₂}·Γ-ratio·Σₙ e^{−n(n+S)δ²τ/2}·(S)ₙ(v₂)ₙ/((p)ₙ(β+2v₂+1)ₙ)·(2n+S)·P_n^{(β+2v₂, α)}(2y−1)
/// ```
///
/// This is an independent code path from [`g_jacobi`] (real arithmetic, no
/// ladder): the identity `g_jacobi(ω=0, w=1, z=0) = bond_jacobi` is a real
/// cross-check between the two, exercised by the test suite.  The series is
/// real term by term, so the imaginary-residue tolerance of the contract
/// (≤ 1e-10) is met with residue identically zero.
///
/// # Errors
/// [`Error::Domain`] on state/tenor violations; [`Error::NonConvergence`]
/// if the tail rule is unmet within the term budget.
pub fn bond_jacobi(params: &JacobiParams, t: f64, y: f64, maturity: f64) -> Result<f64> {
    if y <= 0.0 || y >= 1.0 {
        return Err(Error::Domain(format!("Jacobi driver level must lie in (0, 1), got y={y}")));
    }
    if maturity < t {
        return Err(Error::Domain(format!("need maturity >= t, got t={t}, maturity={maturity}")));
    }
    let tau = maturity - t;
    if tau == 0.0 {
        return Ok(1.0);
    }
    let d2 = params.delta() * params.delta();
    let alpha = 2.0 * params.kappa() / d2 - 1.0;
    let beta = 2.0 * (params.theta() - params.kappa()) / d2 - 1.0;
    let v2 = (-beta + (beta * beta + 8.0 * params.eta() / d2).sqrt()) / 2.0;
    let big_s = alpha + beta + 2.0 * v2 + 1.0;
    let p = alpha + beta + v2 + 2.0;

    let real_lg = |x: f64| log_gamma(Complex64::new(x, 0.0)).map(|v| v.re);
    let log_pre = -params.kappa() * v2 * tau
        + v2 * (1.0 - y).ln()
        + real_lg(alpha + 1.0)?
        + real_lg(beta + v2 + 1.0)?
        + real_lg(big_s)?
        - real_lg(p)?
        - real_lg(alpha + 1.0)?
        - real_lg(beta + 2.0 * v2 + 1.0)?;

    let pa = Complex64::new(beta + 2.0 * v2, 0.0);
    let pb = Complex64::new(alpha, 0.0);
    let xarg = 2.0 * y - 1.0;
    let mut coeff = 1.0f64;
    let mut total = 0.0f64;
    let mut small_run = 0u32;
    let mut converged = false;
    for n in 0..=JACOBI_N_MAX {
        if n > 0 {
            let nm = (n - 1) as f64;
            coeff *= (big_s + nm) * (v2 + nm) / ((p + nm) * (beta + 2.0 * v2 + 1.0 + nm));
        }
        let nf = n as f64;
        let eigen = (-(nf * (nf + big_s) * d2 * tau / 2.0)).exp();
        let poly = jacobi_p(n, pa, pb, xarg).re;
        let term = eigen * coeff * (2.0 * nf + big_s) * poly;
        total += term;
        if n >= 1 && term.abs() < JACOBI_TAIL * total.abs() {
            small_run += 1;
            if small_run >= 2 {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "Jacobi bond series tail rule unmet after {JACOBI_N_MAX} terms (tau={tau})"
        )));
    }
    let value = log_pre.exp() * total;
    if !(value > 0.0 && value <= 1.0 + 1e-12) {
        return Err(Error::PrecisionLoss(format!(
            "Jacobi bond price {value} outside (0, 1] at tau={tau}"
        )));
    }
    Ok(value.min(1.0))
}

// ---------------------------------------------------------------------------
// Contour continuity diagnostic
// ---------------------------------------------------------------------------

/// Sweeps `G` along the pricing contour `ω = ω_r + iω_i`, `ω_r ∈ [0, Ω]`,
/// in order, and checks that successive values move continuously: a step
/// jump larger than 10× the local secant slope (with an absolute floor) is
/// flagged as a branch discontinuity.
///
/// The principal-branch square roots inside `G` are provably continuous on
/// the half-line for the two drivers here (the only branch-crossing locus is
/// `ω_r = 0`, where all shifted parameters are real and the jump is purely
/// imaginary), but the diagnostic is cheap and guards the formulas against
/// parameter regimes outside the validated envelope.
pub fn check_contour_continuity(
    model: &Model,
    t: f64,
    maturity: f64,
    y: f64,
    omega_i: f64,
    omega_max: f64,
    n_samples: usize,
) -> Result<()> {
    assert!(n_samples >= 3, "need at least 3 samples");
    let mut values = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let omega_r = omega_max * k as f64 / (n_samples - 1) as f64;
        let omega = Complex64::new(omega_r, omega_i);
        let args = GArgs::for_pricing(t, maturity, y, omega)?;
        values.push(g(model, &args)?);
    }
    let scale: f64 = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = 1e-6 * scale.max(1e-300);
    for k in 2..n_samples {
        let jump = (values[k] - values[k - 1]).norm();
        let prev_slope = (values[k - 1] - values[k - 2]).norm();
        if jump > 10.0 * prev_slope.max(floor) {
            return Err(Error::BranchDiscontinuity(format!(
                "G jumps by {jump:.3e} between contour samples {} and {} \
                 (local slope {prev_slope:.3e}); a square-root branch crossing \
                 is likely in this parameter regime",
                k - 1,
                k
            )));
        }
    }
    Ok(())
}

/// Open window `(lo, hi)` of contour offsets `ω_i` for which the explicit
/// `G` formula is the analytic continuation of the discounted
/// characteristic function — equivalently, for which the horizontal pricing
/// contour at height `ω_i` yields the correct option value.
///
/// On the imaginary `ω` axis all shifted parameters are real, and the two
/// square-root arguments inside the solution reduce to real polynomials of
/// the offset `u`:
///
/// * the volatility-root argument `(p − qu)² − s(u² + u)` with
///   `p = 2κθ/δ² − 1`, `q = 2ργ/δ`, `s = 4γ²/δ²` for the CIR driver (and
///   `p = 2κ/δ² − 1` with the same `q, s` for the Jacobi driver);
/// * the rate-root argument, linear in `u`, with root
///   `u = −1 − β²δ²/8` (CIR, `β = 2κ/δ²`) respectively
///   `u = −1 − β̃²δ²/(8η)` (Jacobi, `β̃ = 2(θ−κ)/δ² − 1`).
///
/// Where an argument turns negative, the principal square root crosses its
/// branch cut and the formula leaves the continuation; the corresponding
/// discounted moment of the asset in fact ceases to exist there.  For
/// `|ρ| < 1` one can check that the arguments are real-negative *only* on
/// the imaginary axis, so bracketing `u = 0` by the innermost real roots
/// characterizes admissibility completely.  The window always contains 0
/// (the arguments are strictly positive there for admissible parameters)
/// and is independent of maturity.
pub fn admissible_offset_window(model: &Model) -> (f64, f64) {
    let (p, q, s, linear_root) = match model {
        Model::Cir(c) => {
            let d2 = c.delta() * c.delta();
            let p = 2.0 * c.kappa() * c.theta() / d2 - 1.0;
            let q = 2.0 * c.rho() * c.gamma() / c.delta();
            let s = 4.0 * c.gamma() * c.gamma() / d2;
            let beta = 2.0 * c.kappa() / d2;
            (p, q, s, -1.0 - beta * beta * d2 / 8.0)
        }
        Model::Jacobi(j) => {
            let d2 = j.delta() * j.delta();
            let p = 2.0 * j.kappa() / d2 - 1.0;
            let q = 2.0 * j.rho() * j.gamma() / j.delta();
            let s = 4.0 * j.gamma() * j.gamma() / d2;
            let beta = 2.0 * (j.theta() - j.kappa()) / d2 - 1.0;
            (p, q, s, -1.0 - beta * beta * d2 / (8.0 * j.eta()))
        }
    };
    // Roots of (q² − s)u² − (2pq + s)u + p² = 0, keeping the innermost on
    // each side of 0.  The constant term p² is strictly positive, so real
    // roots never sit at the origin.
    let a2 = q * q - s;
    let b1 = -(2.0 * p * q + s);
    let c0 = p * p;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut clip = |r: f64| {
        if r > 0.0 {
            hi = hi.min(r);
        } else if r < 0.0 {
            lo = lo.max(r);
        }
    };
    if a2.abs() <= 1e-14 * s {
        // |ρ| = 1 degenerates the quadratic to a line.
        if b1 != 0.0 {
            clip(-c0 / b1);
        }
    } else {
        let disc = b1 * b1 - 4.0 * a2 * c0;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let sign = if b1 >= 0.0 { 1.0 } else { -1.0 };
            let q0 = -0.5 * (b1 + sign * sq);
            clip(q0 / a2);
            if q0 != 0.0 {
                clip(c0 / q0);
            }
        }
    }
    (lo.max(linear_root), hi)
}
