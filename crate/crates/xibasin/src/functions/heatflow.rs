//! The heat-flow family H_t(z) = int_0^inf Phi(u) e^{t u^2} cos(zu) du,
//! evaluated by Gauss-Legendre quadrature on [0, U] with node doubling.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, PrecisionContext, Real};

use super::FunctionHandle;

const LN_10: f64 = core::f64::consts::LN_10;
const PI: f64 = core::f64::consts::PI;

/// Parameters for evaluating H_t.
#[derive(Clone, Debug)]
pub struct HeatFlowSpec {
    /// Heat-flow time; sanity-bounded by t <= 1/2.
    pub t: f64,
    /// Terms of the Phi series.
    pub series_terms: u32,
    /// Upper integration cutoff U.
    pub upper_cutoff: f64,
    /// Initial Gauss-Legendre node count (doubled until stable).
    pub quadrature_nodes: u32,
}

impl HeatFlowSpec {
    /// Spec with truncation choices solved from the context's digit budget:
    /// U from pi e^{4U} >= digits ln10 + 10, series terms from the
    /// exp(-pi n^2 e^{4u}) tail at u = 0.
    pub fn for_context(t: f64, ctx: &PrecisionContext) -> Result<Self> {
        let nats = ctx.digits() as f64 * LN_10 + 10.0;
        let spec = Self {
            t,
            series_terms: phi_terms_needed(0.0, ctx),
            upper_cutoff: ((nats / PI).ln() / 4.0).max(0.25),
            quadrature_nodes: 32,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t > 0.5 {
            return Err(Error::InvalidSpec(format!("t = {} exceeds 1/2", self.t)));
        }
        if self.series_terms == 0 || self.quadrature_nodes == 0 || self.upper_cutoff <= 0.0 {
            return Err(Error::InvalidSpec("nonpositive truncation parameter".into()));
        }
        Ok(())
    }
}

/// Terms of the Phi series needed so the exp(-pi n^2 e^{4u}) tail sits
/// below 10^(-digits).
pub fn phi_terms_needed(u: f64, ctx: &PrecisionContext) -> u32 {
    let nats = ctx.digits() as f64 * LN_10 + 10.0;
    ((nats / (PI * (4.0 * u).exp())).sqrt().ceil() as u32).max(3)
}

/// Partial sum of Phi(u) = sum_n (2 pi^2 n^4 e^{9u} - 3 pi n^2 e^{5u}) exp(-pi n^2 e^{4u}).
pub fn phi(u: &Real, n_terms: u32, ctx: &PrecisionContext) -> Result<Real> {
    if *u < 0 {
        return Err(Error::Domain("Phi is defined on [0, inf)".into()));
    }
    let pi = ctx.pi();
    let e4u = (u.clone() * 4u32).exp();
    let e5u = (u.clone() * 5u32).exp();
    let e9u = (u.clone() * 9u32).exp();
    let mut acc = ctx.zero();
    for n in 1..=n_terms {
        let n2 = ctx.real(n * n);
        let n4 = n2.clone().square();
        let a = ctx.real(2) * pi.clone().square() * n4 * &e9u;
        let b = ctx.real(3) * pi.clone() * &n2 * &e5u;
        let damp = (-(pi.clone() * n2 * &e4u)).exp();
        acc += (a - b) * damp;
    }
    Ok(acc)
}

type NodeTable = HashMap<(u32, u32), Arc<(Vec<Real>, Vec<Real>)>>;
static GL_CACHE: Lazy<Mutex<NodeTable>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Gauss-Legendre nodes and weights on [-1, 1], cached per (n, precision).
fn gauss_legendre(n: u32, ctx: &PrecisionContext) -> Arc<(Vec<Real>, Vec<Real>)> {
    let prec = ctx.prec();
    if let Some(hit) = GL_CACHE.lock().unwrap().get(&(n, prec)) {
        return hit.clone();
    }
    let mut nodes = vec![ctx.zero(); n as usize];
    let mut weights = vec![ctx.zero(); n as usize];
    let stop = ctx.pow10(-(ctx.digits() as i32) - ctx.guard_digits() as i32 / 2);
    for i in 0..(n as usize + 1) / 2 {
        // Newton from the Chebyshev estimate of the i-th root of P_n.
        let mut x = ctx.real((PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
        let mut dp = ctx.real(1);
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, &x, ctx);
            dp = d;
            let dx = p / &dp;
            x -= &dx;
            if dx.abs() <= stop {
                break;
            }
        }
        let w = ctx.real(2) / ((ctx.real(1) - x.clone().square()) * dp.square());
        nodes[i] = -x.clone();
        weights[i] = w.clone();
        nodes[n as usize - 1 - i] = x;
        weights[n as usize - 1 - i] = w;
    }
    let arc = Arc::new((nodes, weights));
    GL_CACHE.lock().unwrap().insert((n, prec), arc.clone());
    arc
}

fn legendre_and_derivative(n: u32, x: &Real, ctx: &PrecisionContext) -> (Real, Real) {
    let mut p0 = ctx.real(1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let p2 = (x.clone() * &p1 * (2 * k - 1) - p0.clone() * (k - 1)) / ctx.real(k);
        p0 = p1;
        p1 = p2;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let d = (x.clone() * &p1 - &p0) * ctx.real(n) / (x.clone().square() - 1u32);
    (p1, d)
}

/// Handle for H_t: the integrand is differentiated under the integral
/// (-u sin(zu), -u^2 cos(zu) factors), and the node count doubles until two
/// successive results agree to 10^(-digits/2).
pub fn ht_handle(spec: &HeatFlowSpec, ctx: &PrecisionContext) -> Result<FunctionHandle> {
    spec.validate()?;
    let spec = spec.clone();
    let start_nodes = spec.quadrature_nodes.max(4);
    let name = format!("ht(t={})", spec.t);
    let ctx = *ctx;
    // Phi(u) e^{t u^2} * w is independent of z; cache it per node count.
    let envelope_cache: Mutex<HashMap<u32, Arc<Vec<(Real, Real)>>>> = Mutex::new(HashMap::new());
    let envelope = move |n: u32| -> Result<Arc<Vec<(Real, Real)>>> {
        if let Some(hit) = envelope_cache.lock().unwrap().get(&n) {
            return Ok(hit.clone());
        }
        let table = gauss_legendre(n, &ctx);
        let half_u = ctx.real(spec.upper_cutoff) / 2u32;
        let t = ctx.real(spec.t);
        let mut rows = Vec::with_capacity(n as usize);
        for (x, w) in table.0.iter().zip(table.1.iter()) {
            // map [-1,1] -> [0, U]
            let u = half_u.clone() * (x.clone() + 1u32);
            let n_terms = spec.series_terms;
            let band = phi(&u, n_terms, &ctx)?
                * (t.clone() * u.clone().square()).exp()
                * w.clone()
                * &half_u;
            rows.push((u, band));
        }
        let arc = Arc::new(rows);
        envelope_cache.lock().unwrap().insert(n, arc.clone());
        Ok(arc)
    };

    let stable = ctx.pow10(-(ctx.digits() as i32) / 2);
    let eval: Arc<super::EvalFn> = Arc::new(move |z| {
        let z = ctx.complex(z);
        let mut prev: Option<(BigComplex, BigComplex, BigComplex)> = None;
        let mut n = start_nodes;
        while n <= 1 << 13 {
            let rows = envelope(n)?;
            let mut g = ctx.complex(0);
            let mut dg = ctx.complex(0);
            let mut ddg = ctx.complex(0);
            for (u, band) in rows.iter() {
                let zu = z.clone() * u;
                let c = zu.clone().cos();
                let s = zu.sin();
                g += c.clone() * band;
                dg -= s * u.clone() * band;
                ddg -= c * u.clone().square() * band;
            }
            if let Some((pg, _, _)) = &prev {
                let diff = (g.clone() - pg).abs().into_real_imag().0;
                let scale = g.clone().abs().into_real_imag().0.max(&ctx.real(1));
                if diff <= stable.clone() * scale {
                    return Ok((g, dg, ddg));
                }
            }
            prev = Some((g, dg, ddg));
            n *= 2;
        }
        Err(Error::QuadratureFailure)
    });
    Ok(FunctionHandle::entire(name, eval))
}
