//! The Riemann xi function and its evaluator handle.

use std::sync::Arc;

use crate::numerics::{BigComplex, PrecisionContext};

use super::gamma::gamma;
use super::zeta::zeta_m1;
use super::FunctionHandle;

/// xi(s) = s(s-1)/2 * pi^{-s/2} * Gamma(s/2) * zeta(s), computed as
/// pi^{-s/2} * Gamma(s/2 + 1) * [(s-1) zeta(s)] via s*Gamma(s/2) = 2*Gamma(s/2+1),
/// so the zeta pole at s = 1 and the Gamma pole at s = 0 never appear.
pub fn xi(s: &BigComplex, ctx: &PrecisionContext) -> BigComplex {
    let half_s_plus_1 = s.clone() / 2u32 + 1u32;
    match gamma(&half_s_plus_1, ctx) {
        Ok(g) => {
            let pi = ctx.complex(ctx.pi());
            let pi_pow = (-s.clone() / 2u32 * pi.ln()).exp();
            pi_pow * g * zeta_m1(s, ctx)
        }
        // Gamma(s/2+1) poles only at exact s = -2, -4, ...; xi is entire
        // there (the trivial zeros of zeta cancel), so evaluate the mirror.
        Err(_) => {
            let mirrored = ctx.complex(1) - s.clone();
            xi(&mirrored, ctx)
        }
    }
}

/// Handle for xi: value from the defining product, derivatives by central
/// finite differences at working precision raised by 50% with step
/// 10^(-digits/3).
pub fn xi_handle(ctx: &PrecisionContext) -> FunctionHandle {
    build_handle(*ctx, None)
}

/// Like [`xi_handle`], but normalized by the constant 1/|xi(1/2 + i*anchor_t)|.
///
/// xi decays like exp(-pi t/4) up the critical line, so at heights in the
/// hundreds raw values (and F, and its gradient) sit hundreds of orders of
/// magnitude below any fixed stopping threshold. A constant rescale keeps
/// the iteration identical (BNQN with tau = 1 is scale-equivariant) while
/// making |g| comparable to the distance from a root near the anchor.
pub fn xi_handle_anchored(ctx: &PrecisionContext, anchor_t: f64) -> FunctionHandle {
    build_handle(*ctx, Some(anchor_t))
}

fn build_handle(ctx: PrecisionContext, anchor_t: Option<f64>) -> FunctionHandle {
    let hi = ctx.scaled(3, 2);
    let step = hi.pow10(-(ctx.digits() as i32) / 3);
    let scale = match anchor_t {
        None => hi.real(1),
        Some(t) => {
            let anchor = hi.complex((0.5, t));
            let mag = xi(&anchor, &hi).abs().into_real_imag().0;
            hi.real(1) / mag
        }
    };
    let name = match anchor_t {
        None => "xi".to_string(),
        Some(t) => format!("xi@{t}"),
    };

    let value_scale = scale.clone();
    let value: Arc<super::ValueFn> = Arc::new(move |z| {
        let z = ctx.complex(z);
        Ok(ctx.complex(xi(&z, &ctx) * &value_scale))
    });

    let eval: Arc<super::EvalFn> = Arc::new(move |z| {
        let zh = hi.complex(z);
        let f0 = xi(&zh, &hi) * &scale;
        let fp = xi(&(zh.clone() + &step), &hi) * &scale;
        let fm = xi(&(zh.clone() - &step), &hi) * &scale;
        let d1 = (fp.clone() - &fm) / (step.clone() * 2u32);
        let d2 = (fp + fm - f0.clone() * 2u32) / step.clone().square();
        Ok((ctx.complex(f0), ctx.complex(d1), ctx.complex(d2)))
    });

    let value_fn = value;
    FunctionHandle::new(name, value_fn, eval, Arc::new(|_| false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50).unwrap()
    }

    #[test]
    fn xi_at_zero_and_one_is_half() {
        let c = ctx();
        let tol = c.pow10(-45);
        let at0 = xi(&c.complex(0), &c);
        let at1 = xi(&c.complex(1), &c);
        assert!((at0 - c.complex(0.5)).abs().into_real_imag().0 < tol);
        assert!((at1 - c.complex(0.5)).abs().into_real_imag().0 < tol);
    }

    #[test]
    fn first_zero_ordinate() {
        let c = ctx();
        let s = c.complex((0.5, c.real_from_str("14.13472514173").unwrap()));
        let v = xi(&s, &c).abs().into_real_imag().0;
        assert!(v < c.real(1e-9), "|xi(root 1)| = {v}");
    }

    #[test]
    fn symmetry_spot_check() {
        let c = ctx();
        let s = c.complex((0.3, 7));
        let mirrored = c.complex(1) - &s;
        let diff = (xi(&s, &c) - xi(&mirrored, &c)).abs().into_real_imag().0;
        assert!(diff < c.pow10(-45), "asymmetry {diff}");
    }

    #[test]
    fn entire_at_trivial_zeros() {
        let c = ctx();
        let direct = xi(&c.complex(-2), &c);
        let mirrored = xi(&c.complex(3), &c);
        assert!((direct - mirrored).abs().into_real_imag().0 < c.pow10(-45));
    }

    #[test]
    fn handle_derivatives_match_independent_differences() {
        let c = ctx();
        let h = xi_handle(&c);
        let z = c.complex((0.4, 12));
        let (g, dg, ddg) = h.eval(&z).unwrap();
        // independent check at a different step size and precision
        let chk = c.scaled(2, 1);
        let hstep = chk.pow10(-20);
        let zp = chk.complex(&z) + &hstep;
        let zm = chk.complex(&z) - &hstep;
        let fp = xi(&zp, &chk);
        let fm = xi(&zm, &chk);
        let d1 = (fp.clone() - &fm) / (hstep.clone() * 2u32);
        let d2 = (fp + fm - xi(&chk.complex(&z), &chk) * 2u32) / hstep.clone().square();
        let rel1 = (dg.clone() - c.complex(&d1)).abs().into_real_imag().0
            / dg.abs().into_real_imag().0;
        let rel2 = (ddg.clone() - c.complex(&d2)).abs().into_real_imag().0
            / ddg.abs().into_real_imag().0;
        let tol = c.pow10(-(c.digits() as i32) / 3);
        assert!(rel1 < tol, "g' rel err {rel1}");
        assert!(rel2 < tol, "g'' rel err {rel2}");
        assert!(!g.real().is_zero());
    }

    #[test]
    fn anchored_handle_scales_only() {
        let c = ctx();
        let plain = xi_handle(&c);
        let anchored = xi_handle_anchored(&c, 100.0);
        let z = c.complex((0.2, 100.5));
        let a = anchored.value(&z).unwrap();
        let p = plain.value(&z).unwrap();
        // ratio must be the same real constant everywhere
        let z2 = c.complex((0.8, 99.5));
        let r1 = a / p;
        let r2 = anchored.value(&z2).unwrap() / plain.value(&z2).unwrap();
        let rel = (r1.clone() - r2).abs().into_real_imag().0 / r1.clone().abs().into_real_imag().0;
        assert!(rel < c.pow10(-40));
        let imag_rel = r1.imag().clone().abs() / r1.clone().abs().into_real_imag().0;
        assert!(imag_rel < c.pow10(-40));
    }
}
