//! Minimal double-double (≈31 significant digits) arithmetic.
//!
//! The Jacobi-driver characteristic function contains a terminating ₃F₂ whose
//! partial sums cancel catastrophically in parts of the frequency/tenor
//! domain while every other factor of the series stays benign.  This module
//! provides just enough extended precision to evaluate that inner sum (and
//! prepare its parameters): error-free transformations (`two_sum`,
//! `two_prod` via FMA) composed into add/sub/mul/div and a Newton-refined
//! complex square root.  No transcendental functions are needed at extended
//! precision.

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// Error-free sum: `a + b = s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `two_sum` specialization requiring `|a| ≥ |b|` (or a = 0).
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product: `a·b = p + e` exactly (single-rounding FMA).
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles as a `Dd`.
    #[inline]
    pub fn from_prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    /// Quotient via one long-division step plus a correction term.
    #[inline]
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r2 = r.sub(o.mul(Dd::from_f64(q2)));
        let q3 = r2.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        let (hi, lo) = quick_two_sum(s, e + q3);
        Dd { hi, lo }
    }
}

/// Complex number with double-double components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub const ZERO: DdComplex = DdComplex { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: DdComplex = DdComplex { re: Dd::ONE, im: Dd::ZERO };

    #[inline]
    pub fn new(re: Dd, im: Dd) -> DdComplex {
        DdComplex { re, im }
    }

    #[inline]
    pub fn from_c64(z: num_complex::Complex<f64>) -> DdComplex {
        DdComplex { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    #[inline]
    pub fn to_c64(self) -> num_complex::Complex<f64> {
        num_complex::Complex::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn add(self, o: DdComplex) -> DdComplex {
        DdComplex::new(self.re.add(o.re), self.im.add(o.im))
    }

    #[inline]
    pub fn sub(self, o: DdComplex) -> DdComplex {
        DdComplex::new(self.re.sub(o.re), self.im.sub(o.im))
    }

    #[inline]
    pub fn neg(self) -> DdComplex {
        DdComplex::new(self.re.neg(), self.im.neg())
    }

    #[inline]
    pub fn mul(self, o: DdComplex) -> DdComplex {
        let re = self.re.mul(o.re).sub(self.im.mul(o.im));
        let im = self.re.mul(o.im).add(self.im.mul(o.re));
        DdComplex::new(re, im)
    }

    #[inline]
    pub fn div(self, o: DdComplex) -> DdComplex {
        let den = o.re.mul(o.re).add(o.im.mul(o.im));
        let re = self.re.mul(o.re).add(self.im.mul(o.im)).div(den);
        let im = self.im.mul(o.re).sub(self.re.mul(o.im)).div(den);
        DdComplex::new(re, im)
    }

    /// Magnitude estimate at plain f64 precision (used only for guard
    /// bookkeeping, never for the value itself).
    #[inline]
    pub fn norm_f64(self) -> f64 {
        self.to_c64().norm()
    }

    /// Principal square root, seeded from the f64 result and polished with
    /// two Newton steps `w ← (w + z/w)/2` in double-double arithmetic.
    pub fn sqrt(self) -> DdComplex {
        let seed = self.to_c64().sqrt();
        if seed.norm() == 0.0 {
            return DdComplex::ZERO;
        }
        let mut w = DdComplex::from_c64(seed);
        let half = Dd::from_f64(0.5);
        for _ in 0..2 {
            let q = self.div(w);
            w = DdComplex::new(
                w.re.add(q.re).mul(half),
                w.im.add(q.im).mul(half),
            );
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn add_carries_low_order_bits() {
        // 1 + 1e-25 is unrepresentable in f64 but exact in Dd.
        let s = Dd::ONE.add(Dd::from_f64(1e-25));
        assert_eq!(s.hi, 1.0);
        assert_eq!(s.lo, 1e-25);
        let back = s.sub(Dd::ONE);
        assert_eq!(back.to_f64(), 1e-25);
    }

    #[test]
    fn from_prod_is_exact() {
        // π-ish operands: hi·lo structure must capture the exact product.
        let a = 1.1858434252734304;
        let b = 2.9305903852860426;
        let p = Dd::from_prod(a, b);
        // Reconstruct a·b in integer arithmetic over the 53-bit mantissas.
        let exact_hi = a * b;
        let err = a.mul_add(b, -exact_hi);
        assert_eq!(p.hi, exact_hi);
        assert_eq!(p.lo, err);
    }

    #[test]
    fn division_round_trips() {
        let a = Dd::from_prod(3.0, 0.1).add(Dd::from_f64(7.0));
        let b = Dd::from_prod(-1.0, std::f64::consts::PI);
        let q = a.div(b);
        let back = q.mul(b);
        let diff = back.sub(a);
        assert!(diff.to_f64().abs() < 1e-30, "residual {}", diff.to_f64());
    }

    #[test]
    fn sqrt_two_to_thirty_digits() {
        let s = Dd::from_f64(2.0);
        let r = DdComplex::new(s, Dd::ZERO).sqrt();
        // √2 = 1.41421356237309504880168872420969808…
        assert_eq!(r.re.hi, 1.4142135623730951);
        let sq = r.mul(r);
        let resid = sq.re.sub(s).to_f64().abs() + sq.im.to_f64().abs();
        assert!(resid < 1e-31, "√2 residual {resid}");
    }

    #[test]
    fn complex_sqrt_principal_branch() {
        let z = Complex64::new(-3.0, 4.0);
        let r = DdComplex::from_c64(z).sqrt();
        let rc = r.to_c64();
        // Principal branch has nonnegative real part.
        assert!(rc.re >= 0.0);
        let sq = r.mul(r);
        let resid = (sq.to_c64() - z).norm();
        assert!(resid < 1e-30, "residual {resid}");
        // Agrees with the f64 principal square root to f64 accuracy.
        assert!((rc - z.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn complex_division_identity() {
        let a = DdComplex::from_c64(Complex64::new(0.3, -1.7));
        let b = DdComplex::from_c64(Complex64::new(-2.2, 0.9));
        let q = a.div(b).mul(b);
        assert!((q.to_c64() - a.to_c64()).norm() < 1e-30);
    }
}
