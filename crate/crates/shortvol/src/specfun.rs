//! Complex-valued special functions for the explicit `G` and bond formulas.
//!
//! Everything here is elementary series/recurrence work, but over complex
//! parameters: principal-branch log-Γ (Lanczos), the confluent
//! hypergeometric ₁F₁ with the Kummer transformation, the terminating
//! ₃F₂(−n, ·, ·; ·, ·; 1) sum, and Jacobi polynomials with complex
//! parameters via the three-term recurrence.
//!
//! All functions are pure; complex powers are taken as `exp(s·Log w)` with
//! the principal logarithm.  Branch-continuity questions along the pricing
//! contour are the caller's concern (see [`crate::chf`]).

use crate::{ComplexScalar, Error, Result};
use num_complex::Complex64;

/// Default relative tolerance for infinite series.
pub const SERIES_TOL: f64 = 1e-12;

/// Maximum number of terms for infinite series before giving up.
pub const SERIES_MAX_TERMS: usize = 10_000;

/// Lanczos coefficients for g = 7 (9-term rational approximation).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Rising factorial (Pochhammer symbol) `(x)_n = x(x+1)···(x+n−1)`.
///
/// Returns 1 for `n = 0` (empty product).
pub fn pochhammer(x: ComplexScalar, n: usize) -> ComplexScalar {
    let mut p = Complex64::new(1.0, 0.0);
    for k in 0..n {
        p *= x + k as f64;
    }
    p
}

/// True iff `z` is (exactly) a nonpositive real integer — a pole of Γ.
fn is_nonpositive_integer(z: ComplexScalar) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// Principal-branch log-Gamma for complex argument.
///
/// Uses the Lanczos approximation for `Re(z) ≥ 0.5` and the reflection
/// formula `Γ(z)Γ(1−z) = π/sin(πz)` otherwise.  Satisfies
/// `exp(log_gamma(z)) = Γ(z)` to ≈1e-13 relative on the domain used by the
/// pricing formulas; the imaginary part is *not* normalized to `(−π, π]`
/// across reflections, only the exponentiated value is guaranteed.
///
/// # Errors
/// [`Error::Pole`] when `z` is a nonpositive integer.
pub fn log_gamma(z: ComplexScalar) -> Result<ComplexScalar> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(format!("log_gamma at nonpositive integer {z}")));
    }
    if z.re < 0.5 {
        // Reflection: log Γ(z) = log(π / sin(πz)) − log Γ(1 − z).
        let pi = std::f64::consts::PI;
        let s = (pi * z).sin();
        let refl = (Complex64::new(pi, 0.0) / s).ln();
        return Ok(refl - log_gamma(Complex64::new(1.0, 0.0) - z)?);
    }
    // Lanczos with the series evaluated at z − 1.
    let zm1 = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (zm1 + i as f64);
    }
    let t = zm1 + LANCZOS_G + 0.5;
    let half_log_2pi = 0.918_938_533_204_672_74; // ln(2π)/2
    Ok(half_log_2pi + (zm1 + 0.5) * t.ln() - t + acc.ln())
}

/// Raw Taylor series for ₁F₁(a; b; z) with term-ratio updates.
///
/// Convergence is declared when three consecutive terms fall below
/// `tol·|partial sum|` — a single small term is not trusted because the
/// series can alternate through a near-cancellation.
fn hyp1f1_series(a: ComplexScalar, b: ComplexScalar, z: ComplexScalar, tol: f64) -> Result<ComplexScalar> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut small_run = 0u32;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * z / ((b + kf) * (kf + 1.0));
        sum += term;
        if term.norm() < tol * sum.norm() {
            small_run += 1;
            if small_run >= 3 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence(format!(
        "1F1({a}; {b}; {z}) did not converge in {SERIES_MAX_TERMS} terms"
    )))
}

/// Confluent hypergeometric function ₁F₁(a; b; z) to relative tolerance `tol`.
///
/// For `Re(z) < 0` the Kummer transformation
/// `₁F₁(a; b; z) = e^z·₁F₁(b−a; b; −z)` is applied first, turning an
/// alternating (cancellation-prone) series into one with positive-real
/// argument.
///
/// # Errors
/// [`Error::Pole`] when `b` is a nonpositive integer;
/// [`Error::NonConvergence`] if the term budget is exhausted.
pub fn hyp1f1_tol(a: ComplexScalar, b: ComplexScalar, z: ComplexScalar, tol: f64) -> Result<ComplexScalar> {
    if is_nonpositive_integer(b) {
        return Err(Error::Pole(format!("1F1 lower parameter {b} is a nonpositive integer")));
    }
    if z.re < 0.0 {
        Ok(z.exp() * hyp1f1_series(b - a, b, -z, tol)?)
    } else {
        hyp1f1_series(a, b, z, tol)
    }
}

/// ₁F₁(a; b; z) at the default tolerance [`SERIES_TOL`].
pub fn hyp1f1(a: ComplexScalar, b: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar> {
    hyp1f1_tol(a, b, z, SERIES_TOL)
}

/// Terminating hypergeometric sum ₃F₂(−n, p2, p3; q1, q2; 1).
///
/// Exact finite sum of `n + 1` terms; no convergence question arises.
///
/// # Errors
/// [`Error::Pole`] when a denominator Pochhammer vanishes within the first
/// `n + 1` terms (i.e. `q1` or `q2` is a nonpositive integer `> −n`).
pub fn hyp3f2_terminating(
    n: usize,
    p2: ComplexScalar,
    p3: ComplexScalar,
    q1: ComplexScalar,
    q2: ComplexScalar,
) -> Result<ComplexScalar> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let nf = n as f64;
    for k in 0..n {
        let kf = k as f64;
        let d1 = q1 + kf;
        let d2 = q2 + kf;
        if d1 == Complex64::new(0.0, 0.0) || d2 == Complex64::new(0.0, 0.0) {
            return Err(Error::Pole(format!(
                "3F2 denominator parameter hits zero at term {k} (q1={q1}, q2={q2})"
            )));
        }
        term *= (-nf + kf) * (p2 + kf) * (p3 + kf) / (d1 * d2 * (kf + 1.0));
        sum += term;
    }
    Ok(sum)
}

/// Jacobi polynomial `P_n^{(α,β)}(x)` with complex parameters, real argument,
/// via the standard three-term recurrence.
pub fn jacobi_p(n: usize, alpha: ComplexScalar, beta: ComplexScalar, x: f64) -> ComplexScalar {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut p0 = Complex64::new(1.0, 0.0);
    let mut p1 = (alpha - beta + (alpha + beta + 2.0) * x) / 2.0;
    for m in 2..=n {
        let mf = m as f64;
        let ab = alpha + beta;
        let c1 = 2.0 * mf * (ab + mf) * (ab + 2.0 * mf - 2.0);
        let c2 = (ab + 2.0 * mf - 1.0) * (alpha * alpha - beta * beta);
        let c3 = (ab + 2.0 * mf - 2.0) * (ab + 2.0 * mf - 1.0) * (ab + 2.0 * mf);
        let c4 = 2.0 * (alpha + mf - 1.0) * (beta + mf - 1.0) * (ab + 2.0 * mf);
        let p2 = ((c2 + c3 * x) * p1 - c4 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    p1
}
