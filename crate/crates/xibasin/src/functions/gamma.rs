//! Complex Gamma via the Stirling series with argument reduction, and the
//! reflection formula for the left half-plane.

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, PrecisionContext};

use super::bernoulli::bernoulli_real;

const LN_10: f64 = core::f64::consts::LN_10;

/// Gamma(s); errors on the poles at non-positive integers.
pub fn gamma(s: &BigComplex, ctx: &PrecisionContext) -> Result<BigComplex> {
    if s.imag().is_zero() {
        let re = s.real();
        if re.is_integer() && *re <= 0 {
            return Err(Error::GammaPole);
        }
    }
    if s.real().clone().to_f64() < 0.5 {
        // Gamma(s) = pi / (sin(pi s) * Gamma(1-s))
        let pi = ctx.complex(ctx.pi());
        let one_minus_s = ctx.complex(1) - s.clone();
        let sin_term = (pi.clone() * s.clone()).sin();
        return Ok(pi / (sin_term * gamma_right(&one_minus_s, ctx)));
    }
    Ok(gamma_right(s, ctx))
}

/// Gamma for Re(s) >= 0.5: shift until the Stirling series reaches the
/// context's accuracy, then divide the shift product back out.
fn gamma_right(s: &BigComplex, ctx: &PrecisionContext) -> BigComplex {
    // The optimally truncated Stirling remainder is ~ e^{-2 pi |z|}.
    let r0 = (ctx.digits() + ctx.guard_digits()) as f64 * LN_10 / (2.0 * core::f64::consts::PI) + 5.0;
    let abs_s = s.clone().abs().into_real_imag().0.to_f64();
    let shift = if abs_s >= r0 {
        0u32
    } else {
        (r0 - s.real().clone().to_f64()).ceil().max(0.0) as u32
    };
    let z = s.clone() + shift;
    let mut value = ln_gamma_stirling(&z, ctx).exp();
    for k in 0..shift {
        value /= s.clone() + k;
    }
    value
}

/// Stirling series for ln Gamma, valid once |z| is large enough.
fn ln_gamma_stirling(z: &BigComplex, ctx: &PrecisionContext) -> BigComplex {
    let pi = ctx.pi();
    let half = ctx.real(0.5);
    let ln_z = z.clone().ln();
    let mut acc = (z.clone() - &half) * ln_z - z.clone();
    acc += (ctx.real(2) * pi).ln() * &half;

    let target = ctx.pow10(-(ctx.digits() as i32) - ctx.guard_digits() as i32 / 2);
    let z2 = z.clone().square();
    let mut zpow = z.clone(); // z^{2n-1}
    let mut n = 1usize;
    loop {
        let b = bernoulli_real(2 * n, ctx);
        let denom = ctx.real((2 * n * (2 * n - 1)) as u32);
        let term = ctx.complex(b / denom) / zpow.clone();
        let mag = term.clone().abs().into_real_imag().0;
        acc += term;
        if mag <= target || n > 400 {
            break;
        }
        zpow *= &z2;
        n += 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50).unwrap()
    }

    #[test]
    fn small_factorials() {
        let c = ctx();
        let one = gamma(&c.complex(1), &c).unwrap();
        assert!((one - 1u32).abs().into_real_imag().0 < c.pow10(-45));
        let g5 = gamma(&c.complex(5), &c).unwrap();
        assert!((g5 - 24u32).abs().into_real_imag().0 < c.pow10(-44));
    }

    #[test]
    fn half_is_sqrt_pi_by_reflection_oracle() {
        let c = ctx();
        // reflection at s = 1/2: Gamma(1/2)^2 = pi / sin(pi/2) = pi
        let g = gamma(&c.complex(0.5), &c).unwrap();
        let sq = g.clone().square();
        assert!((sq - c.complex(c.pi())).abs().into_real_imag().0 < c.pow10(-44));
        let sqrt_pi = c.pi().sqrt();
        assert!((g - c.complex(sqrt_pi)).abs().into_real_imag().0 < c.pow10(-44));
    }

    #[test]
    fn poles_error() {
        let c = ctx();
        for k in [0i32, -1, -5] {
            assert!(matches!(gamma(&c.complex(k), &c), Err(Error::GammaPole)));
        }
    }

    #[test]
    fn recurrence_holds() {
        let c = ctx();
        let tol = c.pow10(-44);
        for (re, im) in [(0.3, 7.0), (2.5, -3.0), (-1.5, 0.25), (1.25, 500.0)] {
            let s = c.complex((re, im));
            let lhs = gamma(&(s.clone() + 1u32), &c).unwrap();
            let rhs = s.clone() * gamma(&s, &c).unwrap();
            let rel = (lhs.clone() - rhs).abs().into_real_imag().0
                / lhs.abs().into_real_imag().0;
            assert!(rel < tol, "recurrence failed at {re}+{im}i: {rel}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let c = ctx();
        let s = c.complex((1.25, 14.0));
        let sc = c.complex((1.25, -14.0));
        let g = gamma(&s, &c).unwrap();
        let gc = gamma(&sc, &c).unwrap();
        let diff = (g.clone().conj() - gc).abs().into_real_imag().0;
        let rel = diff / g.abs().into_real_imag().0;
        assert!(rel < c.pow10(-44));
    }
}
