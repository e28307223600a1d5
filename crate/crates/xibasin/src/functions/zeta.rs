//! Riemann zeta via Euler-Maclaurin summation, with the functional
//! equation taking over in the far left half-plane.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, PrecisionContext, Real};

use super::bernoulli::bernoulli_real;
use super::gamma::gamma;

/// ln(1), ln(2), ... cached per working precision.
static LN_TABLES: Lazy<Mutex<HashMap<u32, Arc<Vec<Float>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn ln_table(prec: u32, len: usize) -> Arc<Vec<Float>> {
    let mut map = LN_TABLES.lock().unwrap();
    let entry = map.entry(prec).or_insert_with(|| Arc::new(Vec::new()));
    if entry.len() < len {
        let mut v: Vec<Float> = (**entry).clone();
        for n in v.len()..len {
            v.push(Float::with_val(prec, (n + 1) as u32).ln());
        }
        *entry = Arc::new(v);
    }
    entry.clone()
}

/// zeta(s), defined for s != 1.
pub fn zeta(s: &BigComplex, ctx: &PrecisionContext) -> Result<BigComplex> {
    if s.real().clone() == 1 && s.imag().is_zero() {
        return Err(Error::SimplePole);
    }
    let sm1 = s.clone() - 1u32;
    Ok(zeta_m1(s, ctx) / sm1)
}

/// (s-1)*zeta(s), entire; the factor is distributed into the
/// Euler-Maclaurin formula so there is no 0*inf anywhere near s = 1.
pub fn zeta_m1(s: &BigComplex, ctx: &PrecisionContext) -> BigComplex {
    if s.real().clone().to_f64() < -0.5 {
        return zeta_m1_reflected(s, ctx);
    }
    let digits = ctx.digits() as i32;
    let target = ctx.pow10(-digits - (ctx.guard_digits() as i32) / 2);
    let im = s.imag().clone().to_f64().abs();
    let mut n = (ctx.digits() as usize).max((0.7 * im).ceil() as usize).max(10);
    for _ in 0..8 {
        if let Some(v) = em_attempt(s, n, &target, ctx) {
            return v;
        }
        n = n * 3 / 2 + 10;
    }
    // Unreachable for the domains this toolkit touches; raising N always
    // shrinks the optimal Euler-Maclaurin remainder.
    panic!("euler-maclaurin failed to converge for s = {s}");
}

/// One Euler-Maclaurin evaluation of (s-1)*zeta(s) with N = n; None if the
/// correction series bottoms out above `target`.
fn em_attempt(
    s: &BigComplex,
    n: usize,
    target: &Real,
    ctx: &PrecisionContext,
) -> Option<BigComplex> {
    let prec = ctx.prec();
    let lns = ln_table(prec, n);
    let minus_s = -s.clone();

    // sum_{k=1}^{n-1} k^{-s}
    let mut sum = ctx.complex(1);
    for k in 2..n {
        sum += (minus_s.clone() * &lns[k - 1]).exp();
    }

    let nf = ctx.real(n as u32);
    let n_pow_ms = (minus_s * &lns[n - 1]).exp(); // n^{-s}
    sum += n_pow_ms.clone() / 2u32;

    // corrections: sum_k B_{2k}/(2k)! * s(s+1)...(s+2k-2) * n^{1-s-2k}
    let mut tail = ctx.complex(0);
    let mut poch = s.clone();
    let mut fact = ctx.real(2); // (2k)! at k = 1
    let mut npow = n_pow_ms.clone() / &nf; // n^{-s-2k+1} at k = 1
    let n2 = nf.clone().square();
    let mut prev_mag = ctx.real(rug::float::Special::Infinity);
    let mut converged = false;
    for k in 1..=600usize {
        let b = bernoulli_real(2 * k, ctx);
        let term = poch.clone() * &npow * (b / &fact);
        let mag = term.clone().abs().into_real_imag().0;
        tail += term;
        if mag <= *target {
            converged = true;
            break;
        }
        if mag > prev_mag {
            return None; // asymptotic series bottomed out too early
        }
        prev_mag = mag;
        let two_k = 2 * k as u32;
        poch *= (s.clone() + (two_k - 1)) * (s.clone() + two_k);
        fact *= ctx.real((two_k + 1) * (two_k + 2));
        npow /= &n2;
    }
    if !converged {
        return None;
    }

    let sm1 = s.clone() - 1u32;
    let n_pow_1ms = n_pow_ms * &nf; // n^{1-s}
    Some(sm1 * (sum + tail) + n_pow_1ms)
}

/// (s-1)*zeta(s) for Re(s) < -0.5 via the functional equation
/// zeta(s) = 2^s pi^{s-1} sin(pi s/2) Gamma(1-s) zeta(1-s).
fn zeta_m1_reflected(s: &BigComplex, ctx: &PrecisionContext) -> BigComplex {
    let pi = ctx.complex(ctx.pi());
    let one_minus_s = ctx.complex(1) - s.clone();
    let two_pow = (s.clone() * ctx.real(2).ln()).exp();
    let pi_pow = ((s.clone() - 1u32) * pi.clone().ln()).exp();
    let sin_term = (pi.clone() * s.clone() / 2u32).sin();
    // 1-s has Re > 1.5 here, never a pole of Gamma
    let gamma_term = gamma(&one_minus_s, ctx).expect("Gamma argument has positive real part");
    // zeta(1-s) = (s-1)zeta... reuse the entire form: zeta(1-s) = zeta_m1(1-s)/(-s)
    let zeta_omz = zeta_m1(&one_minus_s, ctx) / (-s.clone());
    let sm1 = s.clone() - 1u32;
    sm1 * two_pow * pi_pow * sin_term * gamma_term * zeta_omz
}
