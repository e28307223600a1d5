//! Precision-controlled real/complex arithmetic and exact 2x2 symmetric
//! linear algebra.
//!
//! All arbitrary-precision values are MPFR/MPC floats (via `rug`); a
//! [`PrecisionContext`] pins the number of significant decimal digits and
//! every constructor goes through it, so two sweeps at different precision
//! can run side by side without interfering.

use rug::float::Special;
use rug::ops::{CompleteRound, Pow};
use rug::{Assign, Complex, Float};

use crate::error::{Error, Result};

/// Arbitrary-precision real number.
pub type Real = Float;
/// Arbitrary-precision complex number.
pub type BigComplex = Complex;

const LOG2_10: f64 = 3.321928094887362;

/// Governs working decimal digits for all real/complex arithmetic.
///
/// `digits` is the contract ("relative error <= 10^(-digits+2)");
/// `guard_digits` are extra digits carried internally so rounding in long
/// chains of operations stays below that bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionContext {
    digits: u32,
    guard_digits: u32,
}

impl PrecisionContext {
    pub const MIN_DIGITS: u32 = 15;
    const DEFAULT_GUARD: u32 = 10;

    pub fn new(digits: u32) -> Result<Self> {
        Self::with_guard(digits, Self::DEFAULT_GUARD)
    }

    pub fn with_guard(digits: u32, guard_digits: u32) -> Result<Self> {
        if digits < Self::MIN_DIGITS {
            return Err(Error::Domain(format!(
                "digits must be >= {}, got {digits}",
                Self::MIN_DIGITS
            )));
        }
        Ok(Self { digits, guard_digits })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn guard_digits(&self) -> u32 {
        self.guard_digits
    }

    /// Working precision in bits (digits plus guard digits).
    pub fn prec(&self) -> u32 {
        ((self.digits + self.guard_digits) as f64 * LOG2_10).ceil() as u32 + 8
    }

    /// A context with `digits` scaled by `num/den` (at least MIN_DIGITS).
    pub fn scaled(&self, num: u32, den: u32) -> Self {
        let digits = ((self.digits as u64 * num as u64) / den as u64) as u32;
        Self {
            digits: digits.max(Self::MIN_DIGITS),
            guard_digits: self.guard_digits,
        }
    }

    pub fn real<T>(&self, v: T) -> Real
    where
        Float: Assign<T>,
    {
        Float::with_val(self.prec(), v)
    }

    pub fn real_from_str(&self, s: &str) -> Result<Real> {
        Float::parse(s)
            .map(|p| p.complete(self.prec()))
            .map_err(|e| Error::Domain(format!("bad real literal {s:?}: {e}")))
    }

    pub fn complex<T>(&self, v: T) -> BigComplex
    where
        Complex: Assign<T>,
    {
        Complex::with_val(self.prec(), v)
    }

    /// 10^e at context precision.
    pub fn pow10(&self, e: i32) -> Real {
        self.real(10).pow(e)
    }

    /// The context's relative-error contract, 10^(-digits+2).
    pub fn eps(&self) -> Real {
        self.pow10(-(self.digits as i32) + 2)
    }

    pub fn zero(&self) -> Real {
        self.real(0)
    }

    pub fn pi(&self) -> Real {
        Float::with_val(self.prec(), rug::float::Constant::Pi)
    }

    /// Point-at-infinity sentinel.
    pub fn infinity(&self) -> BigComplex {
        self.complex((Float::with_val(self.prec(), Special::Infinity), 0))
    }
}

/// |z|^2 = re^2 + im^2.
pub fn abs2(z: &BigComplex) -> Result<Real> {
    if !z.real().is_finite() || !z.imag().is_finite() {
        return Err(Error::NonfiniteOperand);
    }
    Ok(z.clone().norm().into_real_imag().0)
}

/// Symmetric 2x2 matrix [[a, b], [b, d]].
#[derive(Clone, Debug)]
pub struct Sym2 {
    pub a: Real,
    pub b: Real,
    pub d: Real,
}

impl Sym2 {
    pub fn new(a: Real, b: Real, d: Real) -> Self {
        Self { a, b, d }
    }

    /// M + s*Id.
    pub fn shift(&self, s: &Real) -> Self {
        Self {
            a: self.a.clone() + s,
            b: self.b.clone(),
            d: self.d.clone() + s,
        }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Real; 2]) -> [Real; 2] {
        [
            self.a.clone() * &v[0] + self.b.clone() * &v[1],
            self.b.clone() * &v[0] + self.d.clone() * &v[1],
        ]
    }
}

/// Eigenstructure of a symmetric 2x2 matrix: `l1 >= l2`, orthonormal
/// eigenvectors `e1`, `e2`.
#[derive(Clone, Debug)]
pub struct Eig2 {
    pub l1: Real,
    pub l2: Real,
    pub e1: [Real; 2],
    pub e2: [Real; 2],
}

/// Closed-form symmetric eigendecomposition.
///
/// lambda = ((a+d) +- sqrt((a-d)^2 + 4 b^2)) / 2; for b = 0 and a = d the
/// standard basis is returned.
pub fn eig2_sym(h: &Sym2, ctx: &PrecisionContext) -> Eig2 {
    let half = ctx.real(0.5);
    let tr = h.a.clone() + &h.d;
    let diff = h.a.clone() - &h.d;
    let disc = (diff.clone().square() + ctx.real(4) * h.b.clone().square()).sqrt();
    let l1 = (tr.clone() + &disc) * &half;
    let l2 = (tr - &disc) * &half;

    let one = ctx.real(1);
    let zero = ctx.zero();
    if h.b.is_zero() {
        // Diagonal: eigenvectors are the standard basis, ordered by eigenvalue.
        return if h.a >= h.d {
            Eig2 {
                l1,
                l2,
                e1: [one.clone(), zero.clone()],
                e2: [zero, one],
            }
        } else {
            Eig2 {
                l1,
                l2,
                e1: [zero.clone(), one.clone()],
                e2: [one, zero],
            }
        };
    }

    // For the larger eigenvalue, (b, l1 - a) and (l1 - d, b) are both
    // eigenvectors; pick the better conditioned one.
    let c1 = l1.clone() - &h.a;
    let c2 = l1.clone() - &h.d;
    let (mut ex, mut ey) = if c2.clone().abs() >= c1.clone().abs() {
        (c2, h.b.clone())
    } else {
        (h.b.clone(), c1)
    };
    let norm = (ex.clone().square() + ey.clone().square()).sqrt();
    ex /= &norm;
    ey /= &norm;
    let e2 = [-ey.clone(), ex.clone()];
    Eig2 {
        l1,
        l2,
        e1: [ex, ey],
        e2,
    }
}

/// Minimum absolute eigenvalue (invertibility margin).
pub fn minsp(h: &Sym2, ctx: &PrecisionContext) -> Real {
    let e = eig2_sym(h, ctx);
    let a1 = e.l1.abs();
    let a2 = e.l2.abs();
    if a1 <= a2 {
        a1
    } else {
        a2
    }
}

/// Euclidean norm of a 2-vector.
pub fn norm2(v: &[Real; 2]) -> Real {
    (v[0].clone().square() + v[1].clone().square()).sqrt()
}

/// Dot product of 2-vectors.
pub fn dot2(u: &[Real; 2], v: &[Real; 2]) -> Real {
    u[0].clone() * &v[0] + u[1].clone() * &v[1]
}
