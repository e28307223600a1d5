//! Command layer shared by the CLI: single solves, basin renders, Voronoi
//! comparisons, verification reports and the named experiment presets.

use std::collections::BTreeMap;
use std::path::Path;

use crate::atlas::{
    agreement, basin_sizes, mask_boundaries, render_ppm, run_method, sweep, voronoi_raster,
    GridSpec, Method, Palette,
};
use crate::config::{FunctionChoice, RunConfig};
use crate::dynamics::{fmt_real, Outcome, Trajectory};
use crate::error::{Error, Result};
use crate::functions::FunctionHandle;
use crate::numerics::{BigComplex, PrecisionContext};
use crate::verify::{count_zeros_rect_used, sign_scan, verify_root_near, Rect};

/// Ordinates of the first four zeros above the real axis.
pub const XI_ROOT_ORDINATES: [f64; 4] = [
    14.13472514173,
    21.02203963877,
    25.01085758014,
    30.42487612585,
];

/// The eight window roots in figure order: conjugate pairs by increasing
/// ordinate, positive member first.
pub fn xi_window_roots() -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for t in XI_ROOT_ORDINATES {
        v.push((0.5, t));
        v.push((0.5, -t));
    }
    v
}

/// Everything a command produced. Files are written in one pass after all
/// computation finishes; every set includes `config.txt` with the resolved
/// config echo.
pub struct CmdOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: String,
}

impl CmdOutput {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

fn as_config_err<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(other.to_string()),
    })
}

/// xi handles get anchored at the seed height once seeds leave the window
/// where raw |xi| is comparable to the fixed tolerances.
fn seed_handle(cfg: &RunConfig, ctx: &PrecisionContext, im: f64) -> Result<FunctionHandle> {
    let anchor = match cfg.function {
        FunctionChoice::Xi if !cfg.has("anchor") && im.abs() >= 50.0 => Some(im.abs()),
        _ => None,
    };
    cfg.handle(ctx, anchor)
}

fn verified_flag(
    cfg: &RunConfig,
    h: &FunctionHandle,
    t: &Trajectory,
    ctx: &PrecisionContext,
) -> Result<bool> {
    if t.outcome != Outcome::ConvergedRoot {
        return Ok(false);
    }
    match cfg.function {
        FunctionChoice::Xi => verify_root_near(&t.terminal, cfg.root_tol, ctx),
        _ => {
            let mag = h.value(&t.terminal)?.abs().into_real_imag().0;
            Ok(mag <= ctx.real(cfg.root_tol))
        }
    }
}

/// Run every configured seed, write one trajectory CSV per seed plus a
/// summary table.
pub fn cmd_solve(cfg: &RunConfig) -> Result<CmdOutput> {
    let ctx = as_config_err(cfg.precision())?;
    as_config_err(cfg.bnqn_params().validate())?;
    if cfg.seeds.is_empty() {
        return Err(Error::Config("solve needs at least one seed (key seeds)".into()));
    }
    let params = cfg.bnqn_params();
    let mut files = vec![("config.txt".to_string(), cfg.echo().into_bytes())];
    let mut summary = String::from("seed_x,seed_y,term_x,term_y,outcome,iters,verified\n");
    let mut report = String::from("solve\n");
    for (i, (sx, sy)) in cfg.seeds.iter().enumerate() {
        let h = seed_handle(cfg, &ctx, *sy)?;
        let z0 = ctx.complex((*sx, *sy));
        let run_seed = cfg.seed.wrapping_add(i as u64);
        let t = run_method(&h, &z0, cfg.method, &params, run_seed, &ctx)?;
        let verified = verified_flag(cfg, &h, &t, &ctx)?;
        files.push((format!("trajectory_{i:03}.csv"), t.to_csv().into_bytes()));
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sx,
            sy,
            fmt_real(t.terminal.real()),
            fmt_real(t.terminal.imag()),
            t.outcome,
            t.records.len(),
            verified,
        ));
        report.push_str(&format!(
            "seed ({sx}, {sy}) -> ({}, {}) {} iters={} verified={}\n",
            fmt_real(t.terminal.real()),
            fmt_real(t.terminal.imag()),
            t.outcome,
            t.records.len(),
            verified,
        ));
    }
    files.push(("summary.csv".to_string(), summary.into_bytes()));
    files.push(("report.txt".to_string(), report.clone().into_bytes()));
    Ok(CmdOutput { files, report })
}

/// Roots used for basin classification when the config does not list any.
fn default_roots(cfg: &RunConfig, grid: &GridSpec) -> Result<Vec<(f64, f64)>> {
    if !cfg.roots.is_empty() {
        return Ok(cfg.roots.clone());
    }
    match &cfg.function {
        FunctionChoice::Poly { roots, .. } if !roots.is_empty() => Ok(roots.clone()),
        FunctionChoice::Xi => Ok(xi_window_roots()
            .into_iter()
            .filter(|(_, t)| *t >= grid.y_min && *t <= grid.y_max)
            .collect()),
        FunctionChoice::Sin => {
            // multiples of pi inside the window
            let pi = core::f64::consts::PI;
            let lo = (grid.x_min / pi).ceil() as i64;
            let hi = (grid.x_max / pi).floor() as i64;
            Ok((lo..=hi).map(|k| (k as f64 * pi, 0.0)).collect())
        }
        _ => Err(Error::Config(
            "no classification roots: set the roots key".into(),
        )),
    }
}

/// Sweep the grid with the configured method and render basins.
pub fn cmd_basins(cfg: &RunConfig) -> Result<CmdOutput> {
    if cfg.preset.is_some() {
        return cmd_experiment(cfg, false);
    }
    let ctx = as_config_err(cfg.precision())?;
    let grid = as_config_err(cfg.grid_spec())?;
    let h = cfg.handle(&ctx, None)?;
    let roots: Vec<BigComplex> = default_roots(cfg, &grid)?
        .iter()
        .map(|p| ctx.complex(*p))
        .collect();
    let params = cfg.bnqn_params();
    let basin = sweep(&h, &grid, cfg.method, &params, &roots, &ctx)?;
    let palette = Palette::default();
    let mut files = vec![("config.txt".to_string(), cfg.echo().into_bytes())];
    files.push((format!("basins_{}.ppm", method_tag(cfg.method)), render_ppm(&basin, &palette)));
    files.push((
        format!("basins_{}.csv", method_tag(cfg.method)),
        basin.to_csv(&ctx).into_bytes(),
    ));
    let sizes = basin_sizes(&basin, roots.len());
    let mut report = format!("basins method={}\n", cfg.method);
    for (i, n) in sizes.iter().enumerate() {
        report.push_str(&format!("basin root{i}: {n} cells\n"));
    }
    files.push(("report.txt".to_string(), report.clone().into_bytes()));
    Ok(CmdOutput { files, report })
}

fn method_tag(m: Method) -> String {
    match m {
        Method::Relaxed(_) => "relaxed".to_string(),
        other => other.to_string(),
    }
}

/// Nearest-site raster of the configured roots.
pub fn cmd_voronoi(cfg: &RunConfig) -> Result<CmdOutput> {
    let ctx = as_config_err(cfg.precision())?;
    let grid = as_config_err(cfg.grid_spec())?;
    let sites: Vec<BigComplex> = default_roots(cfg, &grid)?
        .iter()
        .map(|p| ctx.complex(*p))
        .collect();
    let v = voronoi_raster(&sites, &grid, &ctx)?;
    let files = vec![
        ("config.txt".to_string(), cfg.echo().into_bytes()),
        ("voronoi.ppm".to_string(), render_ppm(&v, &Palette::default())),
        ("voronoi.csv".to_string(), v.to_csv(&ctx).into_bytes()),
    ];
    let report = format!("voronoi sites={}\n", sites.len());
    Ok(CmdOutput { files, report })
}

/// Sign-scan and/or rectangle zero-count report.
pub fn cmd_verify(cfg: &RunConfig) -> Result<CmdOutput> {
    let ctx = as_config_err(cfg.precision())?;
    let mut files = vec![("config.txt".to_string(), cfg.echo().into_bytes())];
    let mut report = String::from("verify\n");
    let mut did_anything = false;
    if let (Some(lo), Some(hi)) = (cfg.t_lo, cfg.t_hi) {
        let scan = sign_scan(lo, hi, cfg.scan_step, &ctx)?;
        report.push_str(&format!(
            "sign_scan [{lo},{hi}] step {}: {} bracket(s)\n",
            cfg.scan_step,
            scan.brackets.len()
        ));
        for i in 0..scan.brackets.len() {
            let (a, b) = scan.refine_bracket(i, &ctx)?;
            let mid = (a + b) / 2u32;
            report.push_str(&format!("  root near t={}\n", fmt_real(&mid)));
        }
        files.push(("brackets.csv".to_string(), scan.to_csv().into_bytes()));
        did_anything = true;
    }
    if let Some((x_lo, x_hi, y_lo, y_hi)) = cfg.rect {
        let rect = as_config_err(Rect::new(x_lo, x_hi, y_lo, y_hi))?;
        let h = cfg.handle(&ctx, None)?;
        let (count, used) = count_zeros_rect_used(&h, &rect, &ctx)?;
        report.push_str(&format!(
            "count_zeros_rect [{},{}]x[{},{}]: {count}\n",
            used.x_lo, used.x_hi, used.y_lo, used.y_hi
        ));
        did_anything = true;
    }
    if !did_anything {
        return Err(Error::Config(
            "verify needs t_lo/t_hi (sign scan) or rect (zero count)".into(),
        ));
    }
    files.push(("report.txt".to_string(), report.clone().into_bytes()));
    Ok(CmdOutput { files, report })
}

/// One completed seed-scan run.
pub struct SeedRun {
    pub y: f64,
    pub terminal: BigComplex,
    pub outcome: Outcome,
    pub iters: u32,
    pub root: Option<usize>,
}

/// Outcome of the Experiment 2-4 protocol at one height.
pub struct SeedScanReport {
    pub height: f64,
    pub window: (f64, f64),
    pub target: i64,
    pub roots: Vec<BigComplex>,
    pub verified: Vec<bool>,
    pub runs: Vec<SeedRun>,
}

impl SeedScanReport {
    /// Roots found inside the counting window.
    pub fn roots_in_window(&self) -> Vec<usize> {
        self.roots
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                let t = r.imag().to_f64();
                t >= self.window.0 && t <= self.window.1
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn complete(&self) -> bool {
        let in_window = self.roots_in_window();
        in_window.len() as i64 == self.target
            && in_window.iter().all(|&i| self.verified[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed_y,term_x,term_y,outcome,iters,root\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.y,
                fmt_real(r.terminal.real()),
                fmt_real(r.terminal.imag()),
                r.outcome,
                r.iters,
                r.root.map(|i| i.to_string()).unwrap_or_else(|| "-".into()),
            ));
        }
        out
    }
}

const SEED_SPACING: f64 = 1.0 / 30.0;
const MAX_REFINE_ROUNDS: u32 = 3;
const DOWNWARD_SEEDS: u32 = 16;

/// Experiments 2-4 protocol: seeds (0, T + j/30) for j = 0..=30, BNQN at
/// the configured budget, then Example 4's refinement (insert seeds at a
/// tenth of the spacing between neighbors that disagree) and a downward
/// extension (0, T - j/30) while the window count falls short of the
/// argument-principle target.
pub fn seed_scan_with_refinement(
    cfg: &RunConfig,
    height: f64,
    ctx: &PrecisionContext,
) -> Result<SeedScanReport> {
    let h = match cfg.function {
        FunctionChoice::Xi => cfg.handle(ctx, Some(cfg.anchor.unwrap_or(height)))?,
        _ => cfg.handle(ctx, None)?,
    };
    let params = cfg.bnqn_params();
    let rect = Rect::new(-1.0, 2.0, height, height + 1.0)?;
    let (target, used) = count_zeros_rect_used(&h, &rect, ctx)?;

    // seed ordinates keyed by offset from the scan floor, exact at the
    // finest refinement spacing
    let key_of = |y: f64| -> i64 { ((y - height + 1.0) * 3.0e7).round() as i64 };
    let mut runs: BTreeMap<i64, SeedRun> = BTreeMap::new();
    let mut roots: Vec<BigComplex> = Vec::new();

    let run_seed_at = |y: f64,
                           runs: &mut BTreeMap<i64, SeedRun>,
                           roots: &mut Vec<BigComplex>|
     -> Result<()> {
        let k = key_of(y);
        if runs.contains_key(&k) {
            return Ok(());
        }
        let z0 = ctx.complex((0.0, y));
        let t = run_method(&h, &z0, cfg.method, &params, cfg.seed.wrapping_add(k as u64), ctx)?;
        let root = if t.outcome == Outcome::ConvergedRoot {
            let tol = ctx.real(cfg.root_tol);
            let found = roots
                .iter()
                .position(|r| (t.terminal.clone() - r).abs().into_real_imag().0 <= tol);
            Some(match found {
                Some(i) => i,
                None => {
                    roots.push(ctx.complex(&t.terminal));
                    roots.len() - 1
                }
            })
        } else {
            None
        };
        runs.insert(
            k,
            SeedRun {
                y,
                terminal: t.terminal,
                outcome: t.outcome,
                iters: t.records.len() as u32,
                root,
            },
        );
        Ok(())
    };

    for j in 0..=30u32 {
        run_seed_at(height + j as f64 * SEED_SPACING, &mut runs, &mut roots)?;
    }

    let in_window = |roots: &[BigComplex]| -> usize {
        roots
            .iter()
            .filter(|r| {
                let t = r.imag().to_f64();
                t >= used.y_lo && t <= used.y_hi
            })
            .count()
    };

    // downward extension while the window count is short
    let mut j = 1u32;
    while (in_window(&roots) as i64) < target && j <= DOWNWARD_SEEDS {
        run_seed_at(height - j as f64 * SEED_SPACING, &mut runs, &mut roots)?;
        j += 1;
    }

    // refinement: subdivide between disagreeing neighbors
    for _ in 0..MAX_REFINE_ROUNDS {
        if (in_window(&roots) as i64) >= target {
            break;
        }
        let snapshot: Vec<(f64, Option<usize>)> =
            runs.values().map(|r| (r.y, r.root)).collect();
        let mut inserted = false;
        for w in snapshot.windows(2) {
            let (y1, r1) = w[0];
            let (y2, r2) = w[1];
            if r1 == r2 && r1.is_some() {
                continue;
            }
            let step = (y2 - y1) / 10.0;
            if step < SEED_SPACING / 3.0e4 {
                continue;
            }
            for k in 1..10 {
                run_seed_at(y1 + k as f64 * step, &mut runs, &mut roots)?;
                inserted = true;
            }
        }
        if !inserted {
            break;
        }
    }

    let mut verified = Vec::with_capacity(roots.len());
    for r in &roots {
        let t = r.imag().to_f64();
        let ok = if t >= used.y_lo && t <= used.y_hi {
            verify_root_near(r, cfg.root_tol, ctx)?
        } else {
            false
        };
        verified.push(ok);
    }

    Ok(SeedScanReport {
        height,
        window: (used.y_lo, used.y_hi),
        target,
        roots,
        verified,
        runs: runs.into_values().collect(),
    })
}

fn seed_scan_output(cfg: &RunConfig, height: f64) -> Result<CmdOutput> {
    let mut c = cfg.clone();
    if !c.has("function") {
        c.function = FunctionChoice::Xi;
    }
    if !c.has("dps") {
        c.dps = 100;
    }
    let ctx = as_config_err(c.precision())?;
    let scan = seed_scan_with_refinement(&c, height, &ctx)?;
    let mut report = format!(
        "seed scan at height {height}\nwindow=[{},{}]\ntarget_count={}\n",
        scan.window.0, scan.window.1, scan.target
    );
    let in_window = scan.roots_in_window();
    report.push_str(&format!("found_count={}\n", in_window.len()));
    for &i in &in_window {
        report.push_str(&format!(
            "root: ({}, {}) verified={}\n",
            fmt_real(scan.roots[i].real()),
            fmt_real(scan.roots[i].imag()),
            scan.verified[i],
        ));
    }
    report.push_str(&format!("seeds_run={}\n", scan.runs.len()));
    report.push_str(&format!("complete={}\n", scan.complete()));
    let files = vec![
        ("config.txt".to_string(), c.echo().into_bytes()),
        ("seeds.csv".to_string(), scan.to_csv().into_bytes()),
        ("report.txt".to_string(), report.clone().into_bytes()),
    ];
    Ok(CmdOutput { files, report })
}

/// Basin-figure preset shared by fig1 and exp1.
fn basin_figure(cfg: &RunConfig, function: FunctionChoice, emit_voronoi: bool) -> Result<CmdOutput> {
    let mut c = cfg.clone();
    c.function = function;
    if !c.has("nx") {
        c.nx = 250;
    }
    if !c.has("ny") {
        c.ny = 250;
    }
    if !c.has("y_scale") {
        c.y_scale = 0.1;
    }
    if !c.has("dps") {
        c.dps = match c.function {
            FunctionChoice::Poly { .. } | FunctionChoice::Sin => 50,
            _ => 100,
        };
    }
    let ctx = as_config_err(c.precision())?;
    let grid = as_config_err(c.grid_spec())?;
    let h = c.handle(&ctx, None)?;
    let roots: Vec<BigComplex> = default_roots(&c, &grid)?
        .iter()
        .map(|p| ctx.complex(*p))
        .collect();
    let params = c.bnqn_params();
    let palette = Palette::default();

    let mut files = vec![("config.txt".to_string(), c.echo().into_bytes())];
    let mut report = String::new();
    let vor = voronoi_raster(&roots, &grid, &ctx)?;
    let mut basins = Vec::new();
    for method in [Method::Bnqn, Method::Newton, Method::RandomRelaxed] {
        let b = sweep(&h, &grid, method, &params, &roots, &ctx)?;
        files.push((format!("{}.ppm", method_tag(method)), render_ppm(&b, &palette)));
        files.push((format!("{}.csv", method_tag(method)), b.to_csv(&ctx).into_bytes()));
        let sizes = basin_sizes(&b, roots.len());
        report.push_str(&format!(
            "{}: nonempty_basins={}/{} sizes={:?}\n",
            method_tag(method),
            sizes.iter().filter(|n| **n > 0).count(),
            roots.len(),
            sizes
        ));
        basins.push((method, b));
    }
    if emit_voronoi {
        files.push(("voronoi.ppm".to_string(), render_ppm(&vor, &palette)));
        files.push(("voronoi.csv".to_string(), vor.to_csv(&ctx).into_bytes()));
    }
    let bnqn = &basins[0].1;
    let masked = mask_boundaries(&vor);
    let agree_all = agreement(bnqn, &vor, |l| l)?;
    let agree_interior = agreement(bnqn, &masked, |l| l)?;
    report.push_str(&format!("bnqn_voronoi_agreement={agree_all:.6}\n"));
    report.push_str(&format!(
        "bnqn_voronoi_agreement_interior={agree_interior:.6}\n"
    ));
    files.push(("report.txt".to_string(), report.clone().into_bytes()));
    Ok(CmdOutput { files, report })
}

/// Dispatch a named preset. Long-running presets (the paper's heights
/// 1e9/1e10) require `allow_long` and otherwise exit through
/// [`Error::Gated`].
pub fn cmd_experiment(cfg: &RunConfig, allow_long: bool) -> Result<CmdOutput> {
    let name = cfg
        .preset
        .clone()
        .ok_or_else(|| Error::Config("experiment needs key preset".into()))?;
    match name.as_str() {
        "fig1" => {
            let roots = xi_window_roots();
            basin_figure(cfg, FunctionChoice::Poly { roots, coeffs: Vec::new() }, true)
        }
        "exp1" => basin_figure(cfg, FunctionChoice::Xi, false),
        "exp2-lite" => seed_scan_output(cfg, 100.0),
        "exp3-lite" => seed_scan_output(cfg, 1000.0),
        "exp2" => {
            if !allow_long {
                return Err(Error::Gated);
            }
            seed_scan_output(cfg, 1.0e9)
        }
        "exp3" => {
            if !allow_long {
                return Err(Error::Gated);
            }
            seed_scan_output(cfg, 1.0e10)
        }
        "exp4" => {
            if !allow_long {
                return Err(Error::Gated);
            }
            seed_scan_output(cfg, 1.0e9)
        }
        other => Err(Error::Config(format!("unknown preset {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_requires_seeds() {
        let cfg = RunConfig::parse_str("function=sin\n").unwrap();
        assert!(matches!(cmd_solve(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn solve_sin_seed() {
        let cfg = RunConfig::parse_str("function=sin\nseeds=3,0.2\nmax_iter=60\n").unwrap();
        let out = cmd_solve(&cfg).unwrap();
        assert!(out.report.contains("converged-root"));
        assert!(out.report.contains("verified=true"));
        assert!(out.files.iter().any(|(n, _)| n == "trajectory_000.csv"));
        assert!(out.files.iter().any(|(n, _)| n == "summary.csv"));
        assert!(out.files.iter().any(|(n, _)| n == "config.txt"));
    }

    #[test]
    fn experiment_gating() {
        let cfg = RunConfig::parse_str("preset=exp2\n").unwrap();
        assert!(matches!(cmd_experiment(&cfg, false), Err(Error::Gated)));
        let cfg = RunConfig::parse_str("preset=nope\n").unwrap();
        assert!(matches!(cmd_experiment(&cfg, false), Err(Error::Config(_))));
        let cfg = RunConfig::parse_str("").unwrap();
        assert!(matches!(cmd_experiment(&cfg, false), Err(Error::Config(_))));
    }

    #[test]
    fn fig1_small_grid_outputs() {
        let cfg = RunConfig::parse_str("preset=fig1\nnx=20\nny=40\nseed=5\n").unwrap();
        let out = cmd_experiment(&cfg, false).unwrap();
        for f in ["bnqn.ppm", "newton.ppm", "random-relaxed.ppm", "voronoi.ppm"] {
            assert!(out.files.iter().any(|(n, _)| n == f), "missing {f}");
        }
        assert!(out.report.contains("bnqn_voronoi_agreement"));
        // determinism: full byte match on rerun
        let out2 = cmd_experiment(&cfg, false).unwrap();
        assert_eq!(out.files.len(), out2.files.len());
        for ((n1, b1), (n2, b2)) in out.files.iter().zip(out2.files.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(b1, b2, "file {n1} differs between reruns");
        }
    }

    #[test]
    fn voronoi_command() {
        let cfg = RunConfig::parse_str("nx=10\nny=20\ndps=30\n").unwrap();
        let out = cmd_voronoi(&cfg).unwrap();
        assert!(out.files.iter().any(|(n, _)| n == "voronoi.ppm"));
        let ppm = &out.files.iter().find(|(n, _)| n == "voronoi.ppm").unwrap().1;
        assert!(ppm.starts_with(b"P6\n10 20\n255\n"));
    }

    #[test]
    fn verify_command_scan() {
        let cfg = RunConfig::parse_str("dps=50\nt_lo=14\nt_hi=15\nscan_step=0.1\n").unwrap();
        let out = cmd_verify(&cfg).unwrap();
        assert!(out.report.contains("1 bracket(s)"));
        let cfg = RunConfig::parse_str("dps=50\n").unwrap();
        assert!(matches!(cmd_verify(&cfg), Err(Error::Config(_))));
    }
}
