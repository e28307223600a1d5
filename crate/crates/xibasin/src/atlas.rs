//! Grid sweeps producing basin-of-attraction rasters, Voronoi nearest-site
//! rasters, PPM/CSV emission and grid comparison.

use rayon::prelude::*;

use crate::dynamics::{
    bnqn_run, classify_limit, fmt_real, iterate_run, newton_step, nu_step,
    random_relaxed_run, relaxed_newton_step, BNQNParams, Label, Trajectory,
};
use crate::error::{Error, Result};
use crate::functions::FunctionHandle;
use crate::numerics::{BigComplex, PrecisionContext};

/// Rectangular sampling window. `y_render_scale` is figure metadata: it
/// relabels the y axis in reports and never changes coordinates or pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: u32,
    pub ny: u32,
    pub y_render_scale: f64,
}

impl GridSpec {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: u32, ny: u32) -> Result<Self> {
        let spec = Self {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            nx,
            ny,
            y_render_scale: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(Error::InvalidSpec("window bounds must be increasing".into()));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidSpec("grid needs nx >= 1 and ny >= 1".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.nx as usize * self.ny as usize
    }

    /// Center of cell (ix, iy), uniform samples of the open rectangle.
    pub fn center(&self, ix: u32, iy: u32, ctx: &PrecisionContext) -> BigComplex {
        let dx = (self.x_max - self.x_min) / self.nx as f64;
        let dy = (self.y_max - self.y_min) / self.ny as f64;
        ctx.complex((
            self.x_min + (ix as f64 + 0.5) * dx,
            self.y_min + (iy as f64 + 0.5) * dy,
        ))
    }
}

/// Sweep output: one label/iteration-count/terminal per cell, row-major
/// with index iy*nx + ix.
#[derive(Clone, Debug)]
pub struct BasinGrid {
    pub spec: GridSpec,
    pub labels: Vec<Label>,
    pub iters: Vec<u32>,
    pub terminals: Vec<BigComplex>,
}

impl BasinGrid {
    pub fn label(&self, ix: u32, iy: u32) -> Label {
        self.labels[(iy * self.spec.nx + ix) as usize]
    }

    /// CSV with columns ix,iy,x,y,label,iters,term_x,term_y.
    pub fn to_csv(&self, ctx: &PrecisionContext) -> String {
        let mut out = String::from("ix,iy,x,y,label,iters,term_x,term_y\n");
        for iy in 0..self.spec.ny {
            for ix in 0..self.spec.nx {
                let i = (iy * self.spec.nx + ix) as usize;
                let z0 = self.spec.center(ix, iy, ctx);
                let t = &self.terminals[i];
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    ix,
                    iy,
                    fmt_real(z0.real()),
                    fmt_real(z0.imag()),
                    self.labels[i],
                    self.iters[i],
                    fmt_real(t.real()),
                    fmt_real(t.imag()),
                ));
            }
        }
        out
    }
}

/// Basin colors in figure order; non-root labels render black.
#[derive(Clone, Debug)]
pub struct Palette {
    pub colors: Vec<[u8; 3]>,
    pub black: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            colors: vec![
                [0, 255, 0],     // green
                [255, 255, 0],   // yellow
                [0, 0, 255],     // blue
                [255, 0, 0],     // red
                [255, 105, 180], // pink
                [0, 255, 255],   // cyan
                [255, 165, 0],   // orange
                [160, 32, 240],  // purple
            ],
            black: [0, 0, 0],
        }
    }
}

impl Palette {
    pub fn color(&self, label: Label) -> [u8; 3] {
        match label {
            Label::Root(i) => self.colors[i % self.colors.len()],
            _ => self.black,
        }
    }
}

/// Iterator choice for sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Bnqn,
    Newton,
    Relaxed(f64),
    RandomRelaxed,
    Nu,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bnqn" => Ok(Method::Bnqn),
            "newton" => Ok(Method::Newton),
            "relaxed" => Ok(Method::Relaxed(0.5)),
            "random-relaxed" => Ok(Method::RandomRelaxed),
            "nu" => Ok(Method::Nu),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Bnqn => f.write_str("bnqn"),
            Method::Newton => f.write_str("newton"),
            Method::Relaxed(a) => write!(f, "relaxed({a})"),
            Method::RandomRelaxed => f.write_str("random-relaxed"),
            Method::Nu => f.write_str("nu"),
        }
    }
}

/// Run one trajectory of the chosen method; `run_seed` feeds the RNG of
/// the stochastic methods (and the delta draw for BNQN).
pub fn run_method(
    h: &FunctionHandle,
    z0: &BigComplex,
    method: Method,
    params: &BNQNParams,
    run_seed: u64,
    ctx: &PrecisionContext,
) -> Result<Trajectory> {
    match method {
        Method::Bnqn => {
            let mut p = params.clone();
            p.seed = run_seed;
            bnqn_run(h, z0, &p, ctx)
        }
        Method::Newton => iterate_run(h, z0, params.max_iter, params.root_tol, ctx, |z| {
            newton_step(h, z)
        }),
        Method::Relaxed(a) => {
            let alpha = ctx.complex(a);
            iterate_run(h, z0, params.max_iter, params.root_tol, ctx, |z| {
                relaxed_newton_step(h, z, &alpha)
            })
        }
        Method::RandomRelaxed => {
            random_relaxed_run(h, z0, run_seed, params.max_iter, params.root_tol, ctx)
        }
        Method::Nu => iterate_run(h, z0, params.max_iter, params.root_tol, ctx, |z| {
            nu_step(h, z)
        }),
    }
}

/// Run the chosen iterator from every cell center and classify terminals.
/// Per-cell seeds derive from (params.seed, cell index), so results are
/// deterministic and independent of scheduling. Cell failures label
/// Unmatched rather than aborting the sweep.
pub fn sweep(
    h: &FunctionHandle,
    grid: &GridSpec,
    method: Method,
    params: &BNQNParams,
    roots: &[BigComplex],
    ctx: &PrecisionContext,
) -> Result<BasinGrid> {
    grid.validate()?;
    let min_sep = ctx.real(2.0 * params.root_tol);
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            if (a.clone() - b).abs().into_real_imag().0 <= min_sep {
                return Err(Error::InvalidSpec(
                    "roots closer than twice the matching tolerance".into(),
                ));
            }
        }
    }

    let nx = grid.nx;
    let rows: Vec<Vec<(Label, u32, BigComplex)>> = (0..grid.ny)
        .into_par_iter()
        .map(|iy| {
            (0..nx)
                .map(|ix| {
                    let z0 = grid.center(ix, iy, ctx);
                    let cell = iy as u64 * nx as u64 + ix as u64;
                    let cell_seed = params
                        .seed
                        .wrapping_mul(0x9e3779b97f4a7c15)
                        .wrapping_add(cell);
                    match run_method(h, &z0, method, params, cell_seed, ctx) {
                        Ok(t) => {
                            let label = classify_limit(&t, roots, params.root_tol, ctx)
                                .unwrap_or(Label::Unmatched);
                            (label, t.records.len() as u32, t.terminal)
                        }
                        Err(_) => (Label::Unmatched, 0, z0),
                    }
                })
                .collect()
        })
        .collect();

    let mut labels = Vec::with_capacity(grid.cells());
    let mut iters = Vec::with_capacity(grid.cells());
    let mut terminals = Vec::with_capacity(grid.cells());
    for row in rows {
        for (l, n, t) in row {
            labels.push(l);
            iters.push(n);
            terminals.push(t);
        }
    }
    Ok(BasinGrid {
        spec: grid.clone(),
        labels,
        iters,
        terminals,
    })
}

/// Label each cell by its nearest site; exact distance ties are boundary
/// cells and get Unmatched.
pub fn voronoi_raster(
    sites: &[BigComplex],
    grid: &GridSpec,
    ctx: &PrecisionContext,
) -> Result<BasinGrid> {
    grid.validate()?;
    if sites.is_empty() {
        return Err(Error::InvalidSpec("need at least one site".into()));
    }
    let mut labels = Vec::with_capacity(grid.cells());
    let mut terminals = Vec::with_capacity(grid.cells());
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let z = grid.center(ix, iy, ctx);
            let mut best = 0usize;
            let mut best_d = (z.clone() - &sites[0]).abs().into_real_imag().0;
            let mut tie = false;
            for (i, s) in sites.iter().enumerate().skip(1) {
                let d = (z.clone() - s).abs().into_real_imag().0;
                if d < best_d {
                    best = i;
                    best_d = d;
                    tie = false;
                } else if d == best_d {
                    tie = true;
                }
            }
            if tie {
                labels.push(Label::Unmatched);
                terminals.push(z);
            } else {
                labels.push(Label::Root(best));
                terminals.push(ctx.complex(&sites[best]));
            }
        }
    }
    Ok(BasinGrid {
        spec: grid.clone(),
        labels,
        iters: vec![0; grid.cells()],
        terminals,
    })
}

/// Fraction of cells where `map(a-label)` equals the b label, over cells
/// neither grid marks Unmatched. An empty comparable set counts as 1.
pub fn agreement(
    a: &BasinGrid,
    b: &BasinGrid,
    map: impl Fn(Label) -> Label,
) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::GridMismatch);
    }
    let mut same = 0u64;
    let mut total = 0u64;
    for (la, lb) in a.labels.iter().zip(b.labels.iter()) {
        if *la == Label::Unmatched || *lb == Label::Unmatched {
            continue;
        }
        total += 1;
        if map(*la) == *lb {
            same += 1;
        }
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(same as f64 / total as f64)
}

/// Copy of `g` with every cell bordering a different label relabeled
/// Unmatched, so agreement() skips basin boundaries.
pub fn mask_boundaries(g: &BasinGrid) -> BasinGrid {
    let nx = g.spec.nx as i64;
    let ny = g.spec.ny as i64;
    let mut out = g.clone();
    for iy in 0..ny {
        for ix in 0..nx {
            let me = g.labels[(iy * nx + ix) as usize];
            'scan: for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let (jx, jy) = (ix + dx, iy + dy);
                    if jx < 0 || jy < 0 || jx >= nx || jy >= ny {
                        continue;
                    }
                    if g.labels[(jy * nx + jx) as usize] != me {
                        out.labels[(iy * nx + ix) as usize] = Label::Unmatched;
                        break 'scan;
                    }
                }
            }
        }
    }
    out
}

/// Binary P6 PPM, nx columns by ny rows, row 0 at the top (y_max).
pub fn render_ppm(g: &BasinGrid, p: &Palette) -> Vec<u8> {
    let nx = g.spec.nx as usize;
    let ny = g.spec.ny as usize;
    let mut out = format!("P6\n{} {}\n255\n", nx, ny).into_bytes();
    out.reserve(3 * nx * ny);
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            out.extend_from_slice(&p.color(g.labels[iy * nx + ix]));
        }
    }
    out
}

/// Count of cells labeled Root(i) for each i in 0..n_roots.
pub fn basin_sizes(g: &BasinGrid, n_roots: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_roots];
    for l in &g.labels {
        if let Label::Root(i) = l {
            if *i < n_roots {
                counts[*i] += 1;
            }
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{poly_handle, PolynomialSpec};

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50).unwrap()
    }

    fn z2m1(c: &PrecisionContext) -> FunctionHandle {
        poly_handle(
            &PolynomialSpec::Roots(vec![c.complex(1), c.complex(-1)]),
            c,
        )
        .unwrap()
    }

    #[test]
    fn grid_centers_sample_open_rectangle() {
        let c = ctx();
        let g = GridSpec::new((-2.0, 2.0), (-2.0, 2.0), 4, 4).unwrap();
        let z = g.center(0, 0, &c);
        assert_eq!(z.real().to_f64(), -1.5);
        assert_eq!(z.imag().to_f64(), -1.5);
        let z = g.center(3, 3, &c);
        assert_eq!(z.real().to_f64(), 1.5);
        assert_eq!(z.imag().to_f64(), 1.5);
        assert!(GridSpec::new((0.0, 1.0), (0.0, 1.0), 0, 3).is_err());
        assert!(GridSpec::new((1.0, 0.0), (0.0, 1.0), 3, 3).is_err());
    }

    #[test]
    fn sweep_z2m1_three_by_three() {
        let c = ctx();
        let h = z2m1(&c);
        let g = GridSpec::new((-2.0, 2.0), (-2.0, 2.0), 3, 3).unwrap();
        let roots = vec![c.complex(-1), c.complex(1)];
        let mut p = BNQNParams::new(7);
        p.max_iter = 100;
        let basin = sweep(&h, &g, Method::Bnqn, &p, &roots, &c).unwrap();
        // left column -> -1, right column -> +1 (centers at x = +-4/3)
        for iy in 0..3 {
            assert_eq!(basin.label(0, iy), Label::Root(0), "left col row {iy}");
            assert_eq!(basin.label(2, iy), Label::Root(1), "right col row {iy}");
        }
        // center column (x = 0): the imaginary axis is invariant for
        // z^2-1, so exact-axis starts end at the critical point 0
        for iy in 0..3 {
            assert!(matches!(
                basin.label(1, iy),
                Label::Root(_) | Label::CriticalPoint
            ));
        }
        assert!((0..3).any(|iy| basin.label(1, iy) == Label::CriticalPoint));
    }

    #[test]
    fn sweep_empty_roots_all_unmatched() {
        let c = ctx();
        let h = z2m1(&c);
        let g = GridSpec::new((-2.0, 2.0), (-2.0, 2.0), 2, 2).unwrap();
        let basin = sweep(&h, &g, Method::Bnqn, &BNQNParams::new(1), &[], &c).unwrap();
        assert!(basin.labels.iter().all(|l| *l == Label::Unmatched));
    }

    #[test]
    fn sweep_rejects_clustered_roots() {
        let c = ctx();
        let h = z2m1(&c);
        let g = GridSpec::new((-2.0, 2.0), (-2.0, 2.0), 2, 2).unwrap();
        let roots = vec![c.complex(1), c.complex(1.0000001)];
        assert!(sweep(&h, &g, Method::Bnqn, &BNQNParams::new(1), &roots, &c).is_err());
    }

    #[test]
    fn sweep_deterministic() {
        let c = ctx();
        let h = z2m1(&c);
        let g = GridSpec::new((-2.0, 2.0), (-2.0, 2.0), 5, 5).unwrap();
        let roots = vec![c.complex(-1), c.complex(1)];
        let p = BNQNParams::new(3);
        let a = sweep(&h, &g, Method::RandomRelaxed, &p, &roots, &c).unwrap();
        let b = sweep(&h, &g, Method::RandomRelaxed, &p, &roots, &c).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.terminals, b.terminals);
    }

    #[test]
    fn voronoi_nearest_and_ties() {
        let c = ctx();
        let sites = vec![c.complex(-1), c.complex(1)];
        // single cell centered at (0.5, 0): nearest site is +1
        let g = GridSpec::new((0.0, 1.0), (-0.5, 0.5), 1, 1).unwrap();
        let v = voronoi_raster(&sites, &g, &c).unwrap();
        assert_eq!(v.label(0, 0), Label::Root(1));
        // cell centered exactly on the axis: tie
        let g = GridSpec::new((-0.5, 0.5), (-0.5, 0.5), 1, 1).unwrap();
        let v = voronoi_raster(&sites, &g, &c).unwrap();
        assert_eq!(v.label(0, 0), Label::Unmatched);
        assert!(voronoi_raster(&[], &g, &c).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn collinear_sites_have_horizontal_midline_boundaries(
            base in 5.0f64..20.0,
            gaps in proptest::collection::vec(1.5f64..6.0, 1..4),
        ) {
            let c = ctx();
            let mut ts = vec![base];
            for g in &gaps {
                ts.push(ts.last().unwrap() + g);
            }
            let sites: Vec<BigComplex> =
                ts.iter().map(|t| c.complex((0.5, *t))).collect();
            let y_lo = ts[0] - 1.0;
            let y_hi = ts.last().unwrap() + 1.0;
            let ny = 200u32;
            let g = GridSpec::new((-1.0, 2.0), (y_lo, y_hi), 4, ny).unwrap();
            let v = voronoi_raster(&sites, &g, &c).unwrap();
            let dy = (y_hi - y_lo) / ny as f64;
            let mids: Vec<f64> =
                ts.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
            for ix in 0..4 {
                let mut flips = Vec::new();
                for iy in 1..ny {
                    if v.label(ix, iy) != v.label(ix, iy - 1) {
                        flips.push(y_lo + iy as f64 * dy);
                    }
                }
                proptest::prop_assert_eq!(flips.len(), mids.len());
                for (f, m) in flips.iter().zip(mids.iter()) {
                    proptest::prop_assert!((f - m).abs() <= dy);
                }
            }
        }
    }

    #[test]
    fn voronoi_collinear_boundary_near_midpoints() {
        let c = ctx();
        let t1 = 14.134725;
        let t2 = 21.022040;
        let sites = vec![c.complex((0.5, t1)), c.complex((0.5, t2))];
        let g = GridSpec::new((-1.0, 2.0), (10.0, 25.0), 30, 150).unwrap();
        let v = voronoi_raster(&sites, &g, &c).unwrap();
        let mid = (t1 + t2) / 2.0;
        let dy = (25.0 - 10.0) / 150.0;
        // in every column the label flips exactly once, within one cell of
        // the analytic midline, and the boundary is horizontal
        for ix in 0..30 {
            let mut flips = Vec::new();
            for iy in 1..150 {
                if v.label(ix, iy) != v.label(ix, iy - 1) {
                    flips.push(iy);
                }
            }
            assert_eq!(flips.len(), 1, "column {ix}");
            let y_flip = 10.0 + (flips[0] as f64) * dy;
            assert!((y_flip - mid).abs() <= dy, "column {ix}: {y_flip} vs {mid}");
        }
    }

    #[test]
    fn agreement_examples() {
        let c = ctx();
        let g = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 2, 2).unwrap();
        let mk = |labels: Vec<Label>| BasinGrid {
            spec: g.clone(),
            labels,
            iters: vec![0; 4],
            terminals: vec![c.complex(0), c.complex(0), c.complex(0), c.complex(0)],
        };
        let a = mk(vec![
            Label::Root(0),
            Label::Root(1),
            Label::Root(1),
            Label::Root(0),
        ]);
        assert_eq!(agreement(&a, &a, |l| l).unwrap(), 1.0);
        let b = mk(vec![
            Label::Root(1),
            Label::Root(0),
            Label::Root(0),
            Label::Root(1),
        ]);
        assert_eq!(agreement(&a, &b, |l| l).unwrap(), 0.0);
        // unmatched cells drop from the denominator
        let u = mk(vec![
            Label::Root(0),
            Label::Unmatched,
            Label::Root(0),
            Label::Root(0),
        ]);
        assert_eq!(agreement(&a, &u, |l| l).unwrap(), 2.0 / 3.0);
        // mismatched specs error
        let g2 = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 4, 1).unwrap();
        let other = BasinGrid {
            spec: g2,
            labels: a.labels.clone(),
            iters: vec![0; 4],
            terminals: a.terminals.clone(),
        };
        assert!(matches!(agreement(&a, &other, |l| l), Err(Error::GridMismatch)));
    }

    #[test]
    fn boundary_mask_drops_label_changes() {
        let c = ctx();
        let g = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 3, 1).unwrap();
        let grid = BasinGrid {
            spec: g,
            labels: vec![Label::Root(0), Label::Root(0), Label::Root(1)],
            iters: vec![0; 3],
            terminals: vec![c.complex(0), c.complex(0), c.complex(0)],
        };
        let m = mask_boundaries(&grid);
        assert_eq!(m.labels[0], Label::Root(0));
        assert_eq!(m.labels[1], Label::Unmatched);
        assert_eq!(m.labels[2], Label::Unmatched);
    }

    #[test]
    fn ppm_bytes() {
        let c = ctx();
        let g = GridSpec::new((0.0, 1.0), (0.0, 1.0), 1, 1).unwrap();
        let one = BasinGrid {
            spec: g,
            labels: vec![Label::Root(0)],
            iters: vec![0],
            terminals: vec![c.complex(0)],
        };
        let bytes = render_ppm(&one, &Palette::default());
        assert_eq!(bytes, b"P6\n1 1\n255\n\x00\xff\x00");

        let g = GridSpec::new((0.0, 2.0), (0.0, 1.0), 2, 1).unwrap();
        let two = BasinGrid {
            spec: g,
            labels: vec![Label::Root(0), Label::Divergent],
            iters: vec![0, 0],
            terminals: vec![c.complex(0), c.complex(0)],
        };
        let bytes = render_ppm(&two, &Palette::default());
        assert_eq!(bytes, b"P6\n2 1\n255\n\x00\xff\x00\x00\x00\x00");
    }

    #[test]
    fn ppm_row_zero_is_y_max() {
        let c = ctx();
        let g = GridSpec::new((0.0, 1.0), (0.0, 2.0), 1, 2).unwrap();
        // iy=1 is the top half of the window
        let grid = BasinGrid {
            spec: g,
            labels: vec![Label::Root(1), Label::Root(0)],
            iters: vec![0, 0],
            terminals: vec![c.complex(0), c.complex(0)],
        };
        let bytes = render_ppm(&grid, &Palette::default());
        // first pixel = green (label of iy=1), second = yellow
        assert_eq!(&bytes[11..14], b"\x00\xff\x00");
        assert_eq!(&bytes[14..17], b"\xff\xff\x00");
    }

    #[test]
    fn csv_shape() {
        let c = ctx();
        let g = GridSpec::new((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        let grid = BasinGrid {
            spec: g,
            labels: vec![Label::Root(0); 4],
            iters: vec![1; 4],
            terminals: vec![c.complex(1), c.complex(1), c.complex(1), c.complex(1)],
        };
        let csv = grid.to_csv(&c);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "ix,iy,x,y,label,iters,term_x,term_y");
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[1].contains("root0"));
    }
}
