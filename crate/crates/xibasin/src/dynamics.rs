//! The BNQN optimizer on F(x,y) = |g(x+iy)|^2/2, the comparator iterators,
//! trajectory recording and limit classification.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rug::ops::Pow;

use crate::error::{Error, Result};
use crate::functions::FunctionHandle;
use crate::numerics::{
    abs2, dot2, eig2_sym, minsp, norm2, BigComplex, PrecisionContext, Real, Sym2,
};

/// BNQN parameters. `deltas` empty means "draw three per run from the
/// seeded RNG" (uniform in [-2,2], redrawn until pairwise gaps >= 0.1).
#[derive(Clone, Debug)]
pub struct BNQNParams {
    pub deltas: Vec<f64>,
    pub theta: f64,
    pub tau: f64,
    pub gamma0: f64,
    /// Armijo sufficient-decrease constant; the method fixes it at 1/3.
    pub armijo_c: f64,
    pub max_iter: u32,
    /// Stop once the gradient norm falls below this; None means 10^(-digits/2).
    pub grad_tol_log10: Option<i32>,
    pub max_halvings: u32,
    pub seed: u64,
    /// |g| threshold separating ConvergedRoot from ConvergedCritical, and
    /// the classification radius in strip coordinates.
    pub root_tol: f64,
}

impl BNQNParams {
    pub fn new(seed: u64) -> Self {
        Self {
            deltas: Vec::new(),
            theta: 1.0,
            tau: 1.0,
            gamma0: 1.0,
            armijo_c: 1.0 / 3.0,
            max_iter: 30,
            grad_tol_log10: None,
            max_halvings: 200,
            seed,
            root_tol: 1e-6,
        }
    }

    pub fn with_deltas(mut self, deltas: Vec<f64>) -> Self {
        self.deltas = deltas;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.deltas.is_empty() {
            if self.deltas.len() < 3 {
                return Err(Error::Config("need at least 3 deltas".into()));
            }
            if kappa_f64(&self.deltas) <= 0.0 {
                return Err(Error::Config("deltas must be pairwise distinct".into()));
            }
        }
        if self.tau <= 0.0 || self.theta < 0.0 || self.gamma0 <= 0.0 || self.gamma0 > 1.0 {
            return Err(Error::Config("need tau > 0, theta >= 0, 0 < gamma0 <= 1".into()));
        }
        Ok(())
    }

    /// Fixed deltas, or three drawn from the run RNG.
    pub fn resolve_deltas(&self, rng: &mut impl Rng) -> Vec<f64> {
        if !self.deltas.is_empty() {
            return self.deltas.clone();
        }
        loop {
            let d: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if kappa_f64(&d) >= 0.05 {
                // pairwise gaps >= 0.1
                return d;
            }
        }
    }

    pub fn grad_tol(&self, ctx: &PrecisionContext) -> Real {
        let e = self
            .grad_tol_log10
            .unwrap_or(-(ctx.digits() as i32) / 2);
        ctx.pow10(e)
    }
}

/// kappa = min_{i != j} |d_i - d_j| / 2.
fn kappa_f64(deltas: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in deltas.iter().enumerate() {
        for b in &deltas[i + 1..] {
            best = best.min((a - b).abs());
        }
    }
    best / 2.0
}

/// Gradient and Hessian of F at a point, in (x, y) coordinates.
#[derive(Clone, Debug)]
pub struct GradHess {
    pub grad: [Real; 2],
    pub hess: Sym2,
}

/// One accepted BNQN step.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub z: BigComplex,
    pub f: Real,
    pub grad_norm: Real,
    pub delta_index: usize,
    pub gamma: Real,
    pub halvings: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    ConvergedRoot,
    ConvergedCritical,
    Diverged,
    MaxIter,
    /// Comparator methods only: the iteration hit a critical point or pole.
    Unresolved,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Outcome::ConvergedRoot => "converged-root",
            Outcome::ConvergedCritical => "converged-critical",
            Outcome::Diverged => "diverged",
            Outcome::MaxIter => "max-iter",
            Outcome::Unresolved => "unresolved",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub outcome: Outcome,
    pub terminal: BigComplex,
}

impl Trajectory {
    /// CSV with columns iter,x,y,F,grad_norm,delta_index,gamma,halvings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,x,y,F,grad_norm,delta_index,gamma,halvings\n");
        for (i, r) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                i,
                fmt_real(r.z.real()),
                fmt_real(r.z.imag()),
                fmt_real(&r.f),
                fmt_real(&r.grad_norm),
                r.delta_index,
                fmt_real(&r.gamma),
                r.halvings,
            ));
        }
        out
    }
}

/// Fixed-width scientific form so output files are byte-stable.
pub fn fmt_real(x: &Real) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    format!("{:.30e}", x)
}

/// Gradient and Hessian of F = |g|^2/2 from one (g, g', g'') evaluation:
/// grad = (Re(conj(g) g'), -Im(conj(g) g')),
/// hess = [[|g'|^2 + Re(conj(g) g''), -Im(conj(g) g'')],
///         [-Im(conj(g) g''), |g'|^2 - Re(conj(g) g'')]].
pub fn grad_hess_f(
    h: &FunctionHandle,
    z: &BigComplex,
    ctx: &PrecisionContext,
) -> Result<GradHess> {
    if h.is_pole(z) {
        return Err(Error::PoleEvaluation);
    }
    let (g, dg, ddg) = h.eval(z)?;
    let gbar = g.conj();
    let gd = gbar.clone() * dg.clone();
    let gdd = gbar * ddg;
    let dg_norm2 = abs2(&dg)?;
    let (gd_re, gd_im) = gd.into_real_imag();
    let (gdd_re, gdd_im) = gdd.into_real_imag();
    Ok(GradHess {
        grad: [ctx.real(&gd_re), -ctx.real(&gd_im)],
        hess: Sym2::new(
            ctx.real(dg_norm2.clone() + &gdd_re),
            -ctx.real(&gdd_im),
            ctx.real(dg_norm2 - gdd_re),
        ),
    })
}

/// Everything bnqn_step decides, exposed for invariant checks.
#[derive(Clone, Debug)]
pub struct StepDetail {
    pub delta_index: usize,
    pub shifted_minsp: Real,
    pub kappa_threshold: Real,
    pub descent: Real,
    pub step: [Real; 2],
    pub gamma: Real,
    pub halvings: u32,
}

/// One BNQN step from `z` (gradient must be nonzero).
pub fn bnqn_step(
    h: &FunctionHandle,
    z: &BigComplex,
    p: &BNQNParams,
    ctx: &PrecisionContext,
) -> Result<(BigComplex, IterationRecord)> {
    let gh = grad_hess_f(h, z, ctx)?;
    let deltas = p.resolve_deltas(&mut ChaCha12Rng::seed_from_u64(p.seed));
    let f0 = f_value(h, z)?;
    let (znew, rec, _) = bnqn_step_inner(h, z, &gh, &f0, &deltas, p, ctx)?;
    Ok((znew, rec))
}

fn f_value(h: &FunctionHandle, z: &BigComplex) -> Result<Real> {
    Ok(abs2(&h.value(z)?)? / 2u32)
}

fn bnqn_step_inner(
    h: &FunctionHandle,
    z: &BigComplex,
    gh: &GradHess,
    f0: &Real,
    deltas: &[f64],
    p: &BNQNParams,
    ctx: &PrecisionContext,
) -> Result<(BigComplex, IterationRecord, StepDetail)> {
    let grad_norm = norm2(&gh.grad);
    let shift_mag = grad_norm.clone().pow(ctx.real(p.tau));
    let kappa = ctx.real(kappa_f64(deltas)) * &shift_mag;

    // smallest j whose shifted Hessian clears the kappa margin
    let mut accepted = None;
    for (j, delta) in deltas.iter().enumerate() {
        let shifted = gh.hess.shift(&(ctx.real(*delta) * &shift_mag));
        let m = minsp(&shifted, ctx);
        if m >= kappa {
            accepted = Some((j, shifted, m));
            break;
        }
    }
    let (delta_index, a, shifted_minsp) = accepted.ok_or(Error::DeltaExhaustion)?;

    // v = A^{-1} grad; w reflects v across the positive eigenspace, i.e.
    // the coefficient along e_i becomes (grad . e_i)/|lambda_i|.
    let eig = eig2_sym(&a, ctx);
    let c1 = dot2(&gh.grad, &eig.e1) / eig.l1.clone().abs();
    let c2 = dot2(&gh.grad, &eig.e2) / eig.l2.clone().abs();
    let w = [
        c1.clone() * &eig.e1[0] + c2.clone() * &eig.e2[0],
        c1 * &eig.e1[1] + c2 * &eig.e2[1],
    ];
    let wn = norm2(&w);
    let denom = (ctx.real(p.theta) * &wn).max(&ctx.real(1));
    let what = [w[0].clone() / &denom, w[1].clone() / &denom];
    let descent = dot2(&what, &gh.grad);

    // Armijo backtracking: halve gamma until
    // F(z - gamma w) - F(z) <= -gamma <w, grad>/3 (strict ">" rejects).
    let armijo_c = ctx.real(p.armijo_c);
    let mut gamma = ctx.real(p.gamma0);
    let mut halvings = 0u32;
    loop {
        let cand = z.clone()
            - ctx.complex((gamma.clone() * &what[0], gamma.clone() * &what[1]));
        // poles (or evaluation failures) behave as F = +inf: reject and halve
        let f_cand = if h.is_pole(&cand) {
            None
        } else {
            f_value(h, &cand).ok()
        };
        if let Some(f_cand) = f_cand {
            let lhs = f_cand.clone() - f0;
            let rhs = -(gamma.clone() * &descent * &armijo_c);
            if !(lhs > rhs) {
                let rec = IterationRecord {
                    z: cand.clone(),
                    f: f_cand,
                    grad_norm: grad_norm.clone(),
                    delta_index,
                    gamma: gamma.clone(),
                    halvings,
                };
                let detail = StepDetail {
                    delta_index,
                    shifted_minsp,
                    kappa_threshold: kappa,
                    descent,
                    step: [
                        gamma.clone() * &what[0],
                        gamma.clone() * &what[1],
                    ],
                    gamma,
                    halvings,
                };
                return Ok((cand, rec, detail));
            }
        }
        halvings += 1;
        if halvings > p.max_halvings {
            return Err(Error::LineSearchStall);
        }
        gamma /= 2u32;
    }
}

/// Full BNQN run with classification.
pub fn bnqn_run(
    h: &FunctionHandle,
    z0: &BigComplex,
    p: &BNQNParams,
    ctx: &PrecisionContext,
) -> Result<Trajectory> {
    bnqn_run_observed(h, z0, p, ctx, &mut |_| {})
}

/// Like [`bnqn_run`] but reporting each accepted step's [`StepDetail`]
/// (used by the invariant suites).
pub fn bnqn_run_observed(
    h: &FunctionHandle,
    z0: &BigComplex,
    p: &BNQNParams,
    ctx: &PrecisionContext,
    observe: &mut dyn FnMut(&StepDetail),
) -> Result<Trajectory> {
    p.validate()?;
    if h.is_pole(z0) {
        return Err(Error::PoleEvaluation);
    }
    let deltas = p.resolve_deltas(&mut ChaCha12Rng::seed_from_u64(p.seed));
    let grad_tol = p.grad_tol(ctx);
    let root_tol = ctx.real(p.root_tol);
    let radius = ctx.real(10) * (ctx.real(1) + z0.clone().abs().into_real_imag().0);

    let mut z = ctx.complex(z0);
    let mut records = Vec::new();
    let mut f = f_value(h, &z)?;
    let mut outcome = Outcome::MaxIter;
    for _ in 0..p.max_iter {
        let gh = grad_hess_f(h, &z, ctx)?;
        let grad_norm = norm2(&gh.grad);
        if grad_norm <= grad_tol {
            let g_abs = abs2(&h.value(&z)?)?.sqrt();
            outcome = if g_abs <= root_tol {
                Outcome::ConvergedRoot
            } else {
                Outcome::ConvergedCritical
            };
            break;
        }
        if z.clone().abs().into_real_imag().0 > radius {
            outcome = Outcome::Diverged;
            break;
        }
        let (znew, rec, detail) = bnqn_step_inner(h, &z, &gh, &f, &deltas, p, ctx)?;
        observe(&detail);
        f = rec.f.clone();
        records.push(rec);
        z = znew;
    }
    if outcome == Outcome::MaxIter {
        // a max-iter terminal sitting on a root still counts as converged
        let gh = grad_hess_f(h, &z, ctx)?;
        if norm2(&gh.grad) <= grad_tol {
            let g_abs = abs2(&h.value(&z)?)?.sqrt();
            outcome = if g_abs <= root_tol {
                Outcome::ConvergedRoot
            } else {
                Outcome::ConvergedCritical
            };
        }
    }
    Ok(Trajectory {
        records,
        outcome,
        terminal: z,
    })
}

/// Newton's method for g: z - g/g'.
pub fn newton_step(h: &FunctionHandle, z: &BigComplex) -> Result<BigComplex> {
    let (g, dg, _) = h.eval(z)?;
    if dg.real().is_zero() && dg.imag().is_zero() {
        return Err(Error::CriticalPoint);
    }
    Ok(z.clone() - g / dg)
}

/// Relaxed Newton: z - alpha g/g'.
pub fn relaxed_newton_step(
    h: &FunctionHandle,
    z: &BigComplex,
    alpha: &BigComplex,
) -> Result<BigComplex> {
    let (g, dg, _) = h.eval(z)?;
    if dg.real().is_zero() && dg.imag().is_zero() {
        return Err(Error::CriticalPoint);
    }
    Ok(z.clone() - alpha.clone() * g / dg)
}

/// Kawahira's map: z - g/(z g').
pub fn nu_step(h: &FunctionHandle, z: &BigComplex) -> Result<BigComplex> {
    let (g, dg, _) = h.eval(z)?;
    let zdg = z.clone() * dg;
    if zdg.real().is_zero() && zdg.imag().is_zero() {
        return Err(Error::CriticalPoint);
    }
    Ok(z.clone() - g / zdg)
}

/// Iterate an arbitrary step map, recording and classifying like bnqn_run.
pub fn iterate_run(
    h: &FunctionHandle,
    z0: &BigComplex,
    max_iter: u32,
    root_tol: f64,
    ctx: &PrecisionContext,
    mut step: impl FnMut(&BigComplex) -> Result<BigComplex>,
) -> Result<Trajectory> {
    if h.is_pole(z0) {
        return Err(Error::PoleEvaluation);
    }
    let root_tol = ctx.real(root_tol);
    let radius = ctx.real(10) * (ctx.real(1) + z0.clone().abs().into_real_imag().0);
    let mut z = ctx.complex(z0);
    let mut records = Vec::new();
    let mut outcome = Outcome::MaxIter;
    for _ in 0..max_iter {
        let g_abs = abs2(&h.value(&z)?)?.sqrt();
        if g_abs <= root_tol {
            outcome = Outcome::ConvergedRoot;
            break;
        }
        if z.clone().abs().into_real_imag().0 > radius {
            outcome = Outcome::Diverged;
            break;
        }
        let znew = match step(&z) {
            Ok(z) => z,
            Err(Error::CriticalPoint) | Err(Error::PoleEvaluation) => {
                outcome = Outcome::Unresolved;
                break;
            }
            Err(e) => return Err(e),
        };
        let f = f_value(h, &znew)?;
        records.push(IterationRecord {
            z: znew.clone(),
            f,
            grad_norm: ctx.zero(),
            delta_index: 0,
            gamma: ctx.real(1),
            halvings: 0,
        });
        z = znew;
    }
    if outcome == Outcome::MaxIter && abs2(&h.value(&z)?)?.sqrt() <= root_tol {
        outcome = Outcome::ConvergedRoot;
    }
    Ok(Trajectory {
        records,
        outcome,
        terminal: z,
    })
}

/// Random Relaxed Newton: alpha_n drawn per step, uniform on the disk
/// |alpha - 1| <= 1/2, deterministic given the seed.
pub fn random_relaxed_run(
    h: &FunctionHandle,
    z0: &BigComplex,
    seed: u64,
    max_iter: u32,
    root_tol: f64,
    ctx: &PrecisionContext,
) -> Result<Trajectory> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let ctx2 = *ctx;
    iterate_run(h, z0, max_iter, root_tol, ctx, move |z| {
        let r = 0.5 * rng.gen_range(0.0f64..1.0).sqrt();
        let phi = rng.gen_range(0.0f64..core::f64::consts::TAU);
        let alpha = ctx2.complex((1.0 + r * phi.cos(), r * phi.sin()));
        relaxed_newton_step(h, z, &alpha)
    })
}

/// Attractor label of one grid cell / trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Root(usize),
    CriticalPoint,
    Divergent,
    Unmatched,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Root(i) => write!(f, "root{i}"),
            Label::CriticalPoint => f.write_str("critical"),
            Label::Divergent => f.write_str("divergent"),
            Label::Unmatched => f.write_str("unmatched"),
        }
    }
}

/// Match a trajectory's terminal against the supplied roots.
pub fn classify_limit(
    t: &Trajectory,
    roots: &[BigComplex],
    tol: f64,
    ctx: &PrecisionContext,
) -> Result<Label> {
    if tol <= 0.0 {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    match t.outcome {
        Outcome::Diverged => return Ok(Label::Divergent),
        Outcome::ConvergedCritical => return Ok(Label::CriticalPoint),
        _ => {}
    }
    let tol = ctx.real(tol);
    let mut hit = None;
    for (i, r) in roots.iter().enumerate() {
        let d = (t.terminal.clone() - r).abs().into_real_imag().0;
        if d <= tol {
            if hit.is_some() {
                return Err(Error::AmbiguousMatch);
            }
            hit = Some(i);
        }
    }
    Ok(hit.map(Label::Root).unwrap_or(Label::Unmatched))
}
