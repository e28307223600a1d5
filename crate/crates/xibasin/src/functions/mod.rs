//! Evaluator bundles (g, g', g'') for the target functions: polynomials,
//! sine, zeta, Gamma, xi and the heat-flow family H_t.

mod bernoulli;
mod gamma;
mod heatflow;
mod xi;
mod zeta;

pub use bernoulli::{bernoulli, bernoulli_real};
pub use gamma::gamma;
pub use heatflow::{ht_handle, phi, phi_terms_needed, HeatFlowSpec};
pub use xi::{xi, xi_handle, xi_handle_anchored};
pub use zeta::{zeta, zeta_m1};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, PrecisionContext};

type EvalFn = dyn Fn(&BigComplex) -> Result<(BigComplex, BigComplex, BigComplex)> + Send + Sync;
type ValueFn = dyn Fn(&BigComplex) -> Result<BigComplex> + Send + Sync;
type PoleFn = dyn Fn(&BigComplex) -> bool + Send + Sync;

/// Evaluator bundle for one meromorphic function.
///
/// `value` is the cheap g-only path (line searches need nothing else);
/// `eval` returns (g, g', g'') in one call.
#[derive(Clone)]
pub struct FunctionHandle {
    name: String,
    value: Arc<ValueFn>,
    eval: Arc<EvalFn>,
    is_pole: Arc<PoleFn>,
}

impl FunctionHandle {
    pub fn new(
        name: impl Into<String>,
        value: Arc<ValueFn>,
        eval: Arc<EvalFn>,
        is_pole: Arc<PoleFn>,
    ) -> Self {
        Self {
            name: name.into(),
            value,
            eval,
            is_pole,
        }
    }

    /// Entire function whose g' and g'' come with g from a single closure.
    pub fn entire(
        name: impl Into<String>,
        eval: Arc<EvalFn>,
    ) -> Self {
        let value_eval = eval.clone();
        Self::new(
            name,
            Arc::new(move |z| value_eval(z).map(|(g, _, _)| g)),
            eval,
            Arc::new(|_| false),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, z: &BigComplex) -> Result<BigComplex> {
        (self.value)(z)
    }

    pub fn eval(&self, z: &BigComplex) -> Result<(BigComplex, BigComplex, BigComplex)> {
        (self.eval)(z)
    }

    pub fn is_pole(&self, z: &BigComplex) -> bool {
        (self.is_pole)(z)
    }
}

impl std::fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionHandle").field("name", &self.name).finish()
    }
}

/// A polynomial given by its roots (kept as a product, better conditioned
/// near a root) or by ascending coefficients.
#[derive(Clone, Debug)]
pub enum PolynomialSpec {
    Roots(Vec<BigComplex>),
    /// a_0 + a_1 z + ... + a_n z^n
    Coefficients(Vec<BigComplex>),
}

impl PolynomialSpec {
    fn validate(&self) -> Result<()> {
        match self {
            PolynomialSpec::Roots(r) => {
                if r.is_empty() {
                    return Err(Error::InvalidSpec("empty root list".into()));
                }
            }
            PolynomialSpec::Coefficients(c) => {
                if c.len() < 2 {
                    return Err(Error::InvalidSpec(
                        "need degree >= 1 (at least two coefficients)".into(),
                    ));
                }
                let lead = c.last().unwrap();
                if lead.real().is_zero() && lead.imag().is_zero() {
                    return Err(Error::InvalidSpec("leading coefficient is zero".into()));
                }
            }
        }
        Ok(())
    }
}

/// Handle for a polynomial; g, g', g'' by product/Horner recurrences.
pub fn poly_handle(spec: &PolynomialSpec, ctx: &PrecisionContext) -> Result<FunctionHandle> {
    spec.validate()?;
    let spec = spec.clone();
    let ctx = *ctx;
    let eval: Arc<EvalFn> = Arc::new(move |z| {
        let (mut p, mut dp, mut ddp) = (ctx.complex(1), ctx.complex(0), ctx.complex(0));
        match &spec {
            PolynomialSpec::Roots(roots) => {
                for r in roots {
                    let f = z.clone() - r;
                    let new_ddp = ddp * &f + dp.clone() * 2u32;
                    let new_dp = dp * &f + p.clone();
                    p *= &f;
                    dp = new_dp;
                    ddp = new_ddp;
                }
            }
            PolynomialSpec::Coefficients(coeffs) => {
                p = ctx.complex(0);
                for a in coeffs.iter().rev() {
                    let new_ddp = ddp * z + dp.clone() * 2u32;
                    let new_dp = dp * z + p.clone();
                    p = p * z + a.clone();
                    dp = new_dp;
                    ddp = new_ddp;
                }
            }
        }
        Ok((p, dp, ddp))
    });
    Ok(FunctionHandle::entire("poly", eval))
}

/// g(z) = sin z, with (cos z, -sin z) as derivatives.
pub fn sin_handle(ctx: &PrecisionContext) -> FunctionHandle {
    let ctx = *ctx;
    let eval: Arc<EvalFn> = Arc::new(move |z| {
        let z = ctx.complex(z);
        let s = z.clone().sin();
        let c = z.cos();
        Ok((s.clone(), c, -s))
    });
    FunctionHandle::entire("sin", eval)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50).unwrap()
    }

    #[test]
    fn poly_from_roots_matches_expansion() {
        let c = ctx();
        let spec = PolynomialSpec::Roots(vec![c.complex(1), c.complex(-1)]);
        let h = poly_handle(&spec, &c).unwrap();
        // g = z^2 - 1 at z = 2 -> (3, 4, 2)
        let (g, dg, ddg) = h.eval(&c.complex(2)).unwrap();
        assert_eq!(g, 3);
        assert_eq!(dg, 4);
        assert_eq!(ddg, 2);
        // at a root
        let (g, dg, ddg) = h.eval(&c.complex(1)).unwrap();
        assert_eq!(g, 0);
        assert_eq!(dg, 2);
        assert_eq!(ddg, 2);
    }

    #[test]
    fn poly_from_coefficients_matches_roots_route() {
        let c = ctx();
        // z^2 - 1 as coefficients
        let spec = PolynomialSpec::Coefficients(vec![c.complex(-1), c.complex(0), c.complex(1)]);
        let h = poly_handle(&spec, &c).unwrap();
        let (g, dg, ddg) = h.eval(&c.complex(2)).unwrap();
        assert_eq!(g, 3);
        assert_eq!(dg, 4);
        assert_eq!(ddg, 2);
    }

    #[test]
    fn poly_rejects_bad_specs() {
        let c = ctx();
        assert!(poly_handle(&PolynomialSpec::Roots(vec![]), &c).is_err());
        assert!(poly_handle(&PolynomialSpec::Coefficients(vec![c.complex(3)]), &c).is_err());
        assert!(poly_handle(
            &PolynomialSpec::Coefficients(vec![c.complex(1), c.complex(0)]),
            &c
        )
        .is_err());
    }

    #[test]
    fn sin_values() {
        let c = ctx();
        let h = sin_handle(&c);
        let (g, dg, ddg) = h.eval(&c.complex(0)).unwrap();
        assert_eq!(g, 0);
        assert_eq!(dg, 1);
        assert_eq!(ddg, 0);

        let half_pi = c.pi() / 2u32;
        let (g, dg, ddg) = h.eval(&c.complex(half_pi)).unwrap();
        let tol = c.pow10(-45);
        assert!((g.clone() - 1u32).abs().into_real_imag().0 < tol);
        assert!(dg.abs().into_real_imag().0 < tol);
        assert!((ddg + 1u32).abs().into_real_imag().0 < tol);
    }

    /// Series oracle for sin at z = i: sum z^{2k+1}/(2k+1)! with z = i gives
    /// i*sinh(1).
    #[test]
    fn sin_at_i_matches_series_oracle() {
        let c = ctx();
        let h = sin_handle(&c);
        let z = c.complex((0, 1));
        let mut series = c.complex(0);
        let mut term = z.clone();
        for k in 0..60u32 {
            series += term.clone();
            term *= -z.clone().square() / ctx_real_prod(&c, 2 * k + 2, 2 * k + 3);
        }
        let (g, dg, ddg) = h.eval(&z).unwrap();
        let tol = c.pow10(-45);
        assert!((g.clone() - &series).abs().into_real_imag().0 < tol);
        assert!((ddg + series).abs().into_real_imag().0 < tol);
        // cos(i) = cosh(1)
        let cosh1 = c.real(1).cosh();
        assert!((dg - c.complex(cosh1)).abs().into_real_imag().0 < tol);
    }

    fn ctx_real_prod(c: &PrecisionContext, a: u32, b: u32) -> crate::numerics::Real {
        c.real(a) * c.real(b)
    }
}
