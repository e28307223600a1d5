//! Independent confirmation: critical-line sign-change scans, root
//! verification near a candidate, and rectangle zero counting by the
//! argument principle.

use crate::error::{Error, Result};
use crate::functions::{xi, FunctionHandle};
use crate::numerics::{BigComplex, PrecisionContext, Real};

/// Result of a critical-line scan: every sign change of xi(1/2 + it) on
/// [t_lo, t_hi] at resolution `step`, as brackets (t_a, t_b).
#[derive(Clone, Debug)]
pub struct SignScan {
    pub t_lo: f64,
    pub t_hi: f64,
    pub step: f64,
    pub brackets: Vec<(Real, Real)>,
}

impl SignScan {
    /// Bisect bracket `i` down to width 1e-8; returns the refined bracket.
    pub fn refine_bracket(&self, i: usize, ctx: &PrecisionContext) -> Result<(Real, Real)> {
        let (mut a, mut b) = self.brackets[i].clone();
        let mut fa = xi_critical(&a, ctx)?;
        let width = ctx.real(1e-8);
        while b.clone() - &a > width {
            let m = (a.clone() + &b) / 2u32;
            let fm = xi_critical(&m, ctx)?;
            if (fa.clone() * &fm) < 0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        Ok((a, b))
    }

    /// One line per bracket: index,t_a,t_b.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bracket,t_a,t_b\n");
        for (i, (a, b)) in self.brackets.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                i,
                crate::dynamics::fmt_real(a),
                crate::dynamics::fmt_real(b)
            ));
        }
        out
    }
}

/// Re xi(1/2 + it). xi is real on the critical line; a residual imaginary
/// part above 10^(-digits/2) means the evaluation lost too much precision.
pub fn xi_critical(t: &Real, ctx: &PrecisionContext) -> Result<Real> {
    let s = ctx.complex((ctx.real(0.5), ctx.real(t)));
    let v = xi(&s, ctx);
    let (re, im) = v.into_real_imag();
    let floor = ctx.pow10(-(ctx.digits() as i32) / 2);
    if im.abs() > floor {
        return Err(Error::PrecisionBreach);
    }
    Ok(re)
}

/// Bracket every sign change of xi(1/2 + it) on [t_lo, t_hi] sampled at
/// spacing `step`.
pub fn sign_scan(t_lo: f64, t_hi: f64, step: f64, ctx: &PrecisionContext) -> Result<SignScan> {
    if !(step > 0.0) {
        return Err(Error::Domain("step must be positive".into()));
    }
    if !(t_lo < t_hi) {
        return Err(Error::Domain("need t_lo < t_hi".into()));
    }
    let n = ((t_hi - t_lo) / step).ceil() as u64;
    let mut brackets = Vec::new();
    let mut t_prev = ctx.real(t_lo);
    let mut f_prev = xi_critical(&t_prev, ctx)?;
    for k in 1..=n {
        let t = if k == n {
            ctx.real(t_hi)
        } else {
            ctx.real(t_lo) + ctx.real(step) * ctx.real(k)
        };
        let f = xi_critical(&t, ctx)?;
        if (f_prev.clone() * &f) < 0 {
            brackets.push((t_prev.clone(), t.clone()));
        }
        t_prev = t;
        f_prev = f;
    }
    Ok(SignScan {
        t_lo,
        t_hi,
        step,
        brackets,
    })
}

/// True iff a critical-line sign change exists within `radius` of Im z.
/// The candidate's real part is ignored (critical-line projection).
pub fn verify_root_near(z: &BigComplex, radius: f64, ctx: &PrecisionContext) -> Result<bool> {
    if !(radius > 0.0) {
        return Err(Error::Domain("radius must be positive".into()));
    }
    let t = z.imag().to_f64();
    let scan = sign_scan(t - radius, t + radius, radius / 5.0, ctx)?;
    Ok(!scan.brackets.is_empty())
}

/// Axis-aligned counting rectangle.
#[derive(Clone, Copy, Debug)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        if !(x_lo < x_hi) || !(y_lo < y_hi) {
            return Err(Error::Domain("rectangle bounds must be increasing".into()));
        }
        Ok(Self { x_lo, x_hi, y_lo, y_hi })
    }

    fn corners(&self, ctx: &PrecisionContext) -> [BigComplex; 4] {
        [
            ctx.complex((self.x_lo, self.y_lo)),
            ctx.complex((self.x_hi, self.y_lo)),
            ctx.complex((self.x_hi, self.y_hi)),
            ctx.complex((self.x_lo, self.y_hi)),
        ]
    }

    /// |g| >= floor at `samples_per_edge`+1 points on every edge.
    fn boundary_clear(
        &self,
        h: &FunctionHandle,
        floor: &Real,
        samples_per_edge: u32,
        ctx: &PrecisionContext,
    ) -> Result<bool> {
        let corners = self.corners(ctx);
        for e in 0..4 {
            let a = &corners[e];
            let b = &corners[(e + 1) % 4];
            for k in 0..=samples_per_edge {
                let t = ctx.real(k) / ctx.real(samples_per_edge);
                let z = a.clone() + (b.clone() - a) * ctx.complex(t);
                let mag = h.value(&z)?.abs().into_real_imag().0;
                if mag < *floor {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

const MAX_SPLIT_DEPTH: u32 = 48;

/// Argument increment of g along the straight segment a -> b, subdividing
/// until each sub-arc turns less than pi/2. ga, gb are g at the endpoints.
fn arg_along(
    h: &FunctionHandle,
    a: &BigComplex,
    ga: &BigComplex,
    b: &BigComplex,
    gb: &BigComplex,
    depth: u32,
    ctx: &PrecisionContext,
) -> Result<Real> {
    let ratio = gb.clone() / ga;
    let dphi = ratio.arg().into_real_imag().0;
    let half_pi = ctx.pi() / 2u32;
    if dphi.clone().abs() < half_pi {
        return Ok(dphi);
    }
    if depth >= MAX_SPLIT_DEPTH {
        return Err(Error::BoundaryProximity);
    }
    let m = (a.clone() + b) / 2u32;
    let gm = h.value(&m)?;
    let left = arg_along(h, a, ga, &m, &gm, depth + 1, ctx)?;
    let right = arg_along(h, &m, &gm, b, gb, depth + 1, ctx)?;
    Ok(left + right)
}

/// Zeros of g inside `r` (with multiplicity) by the argument principle:
/// the winding of g around the boundary, integrated counterclockwise with
/// adaptive subdivision. Errors with "boundary proximity" when a zero sits
/// on or hugs the contour.
pub fn count_zeros_rect(h: &FunctionHandle, r: &Rect, ctx: &PrecisionContext) -> Result<i64> {
    count_zeros_rect_used(h, r, ctx).map(|(n, _)| n)
}

/// Like [`count_zeros_rect`], also returning the rectangle actually
/// integrated (edges may be nudged outward by one sample step when a zero
/// breaches the boundary floor).
pub fn count_zeros_rect_used(
    h: &FunctionHandle,
    r: &Rect,
    ctx: &PrecisionContext,
) -> Result<(i64, Rect)> {
    let floor = ctx.pow10(-(ctx.digits() as i32) / 2);
    let samples = 16u32;
    let mut rect = *r;
    if !rect.boundary_clear(h, &floor, samples, ctx)? {
        // one outward nudge by a sample step, then give up
        let dx = (r.x_hi - r.x_lo) / samples as f64;
        let dy = (r.y_hi - r.y_lo) / samples as f64;
        rect = Rect {
            x_lo: r.x_lo - dx,
            x_hi: r.x_hi + dx,
            y_lo: r.y_lo - dy,
            y_hi: r.y_hi + dy,
        };
        if !rect.boundary_clear(h, &floor, samples, ctx)? {
            return Err(Error::BoundaryProximity);
        }
    }

    let corners = rect.corners(ctx);
    let segments_per_edge = 8u32;
    let mut total = ctx.zero();
    for e in 0..4 {
        let a = &corners[e];
        let b = &corners[(e + 1) % 4];
        let mut prev_z = a.clone();
        let mut prev_g = h.value(&prev_z)?;
        for k in 1..=segments_per_edge {
            let t = ctx.real(k) / ctx.real(segments_per_edge);
            let z = a.clone() + (b.clone() - a) * ctx.complex(t);
            let g = h.value(&z)?;
            total += arg_along(h, &prev_z, &prev_g, &z, &g, 0, ctx)?;
            prev_z = z;
            prev_g = g;
        }
    }

    let turns = total / (ctx.pi() * 2u32);
    let nearest = turns.clone().round();
    let residual = (turns - &nearest).abs();
    if residual >= 0.1 {
        return Err(Error::BoundaryProximity);
    }
    let n = nearest
        .to_integer()
        .and_then(|i| i.to_i64())
        .ok_or(Error::BoundaryProximity)?;
    Ok((n, rect))
}
