//! Run configuration: UTF-8 key=value lines with `#` comments, parsed
//! strictly (unknown keys rejected), echoed back in canonical form so a
//! run can be reproduced from its own echo.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::atlas::{GridSpec, Method};
use crate::dynamics::BNQNParams;
use crate::error::{Error, Result};
use crate::functions::{
    ht_handle, poly_handle, sin_handle, xi_handle, xi_handle_anchored, FunctionHandle,
    HeatFlowSpec, PolynomialSpec,
};
use crate::numerics::{BigComplex, PrecisionContext};

/// Target function selection.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionChoice {
    Poly { roots: Vec<(f64, f64)>, coeffs: Vec<(f64, f64)> },
    Sin,
    Xi,
    Ht { t: f64 },
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub function: FunctionChoice,
    pub method: Method,
    pub dps: u32,
    pub seed: u64,
    pub max_iter: u32,
    pub tau: f64,
    pub theta: f64,
    pub gamma0: f64,
    pub root_tol: f64,
    pub deltas: Vec<f64>,
    pub relaxed_alpha: f64,
    /// Constant-rescale anchor height for xi (see functions module).
    pub anchor: Option<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: u32,
    pub ny: u32,
    pub y_scale: f64,
    pub seeds: Vec<(f64, f64)>,
    pub roots: Vec<(f64, f64)>,
    pub t_lo: Option<f64>,
    pub t_hi: Option<f64>,
    pub scan_step: f64,
    pub rect: Option<(f64, f64, f64, f64)>,
    pub preset: Option<String>,
    /// Keys the user actually wrote; presets only override the rest.
    pub explicit: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            function: FunctionChoice::Xi,
            method: Method::Bnqn,
            dps: 0, // resolved per function
            seed: 0,
            max_iter: 30,
            tau: 1.0,
            theta: 1.0,
            gamma0: 1.0,
            root_tol: 1e-6,
            deltas: Vec::new(),
            relaxed_alpha: 0.5,
            anchor: None,
            x_min: -1.0,
            x_max: 2.0,
            y_min: -35.0,
            y_max: 35.0,
            nx: 100,
            ny: 100,
            y_scale: 1.0,
            seeds: Vec::new(),
            roots: Vec::new(),
            t_lo: None,
            t_hi: None,
            scan_step: 0.05,
            rect: None,
            preset: None,
            explicit: BTreeSet::new(),
        }
    }
}

fn bad(key: &str, val: &str) -> Error {
    Error::Config(format!("invalid value for key {key:?}: {val:?}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse().map_err(|_| bad(key, v))
}

fn parse_u32(key: &str, v: &str) -> Result<u32> {
    v.trim().parse().map_err(|_| bad(key, v))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.trim().parse().map_err(|_| bad(key, v))
}

/// "a,b,c" -> reals.
fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|p| parse_f64(key, p)).collect()
}

/// "re,im;re,im" -> complex points.
fn parse_complex_list(key: &str, v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(';')
        .map(|pair| {
            let mut it = pair.split(',');
            let re = it.next().ok_or_else(|| bad(key, v))?;
            let im = it.next().ok_or_else(|| bad(key, v))?;
            if it.next().is_some() {
                return Err(bad(key, v));
            }
            Ok((parse_f64(key, re)?, parse_f64(key, im)?))
        })
        .collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn fmt_complex_list(v: &[(f64, f64)]) -> String {
    v.iter()
        .map(|(re, im)| format!("{re},{im}"))
        .collect::<Vec<_>>()
        .join(";")
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut function_key: Option<String> = None;
        let mut dps_seen = false;
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got {raw:?}", lineno + 1))
            })?;
            let key = key.trim();
            let val = val.trim();
            if kv.insert(key.to_string(), val.to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key {key:?}")));
            }
        }
        for (key, val) in &kv {
            let val = val.as_str();
            match key.as_str() {
                "function" => function_key = Some(val.to_string()),
                "method" => cfg.method = Method::parse(val)?,
                "dps" => {
                    cfg.dps = parse_u32(key, val)?;
                    dps_seen = true;
                }
                "seed" => cfg.seed = parse_u64(key, val)?,
                "max_iter" => cfg.max_iter = parse_u32(key, val)?,
                "tau" => cfg.tau = parse_f64(key, val)?,
                "theta" => cfg.theta = parse_f64(key, val)?,
                "gamma0" => cfg.gamma0 = parse_f64(key, val)?,
                "root_tol" => cfg.root_tol = parse_f64(key, val)?,
                "deltas" => cfg.deltas = parse_f64_list(key, val)?,
                "relaxed_alpha" => cfg.relaxed_alpha = parse_f64(key, val)?,
                "anchor" => cfg.anchor = Some(parse_f64(key, val)?),
                "ht_t" => {
                    // folded into the function choice below
                }
                "poly_roots" | "poly_coeffs" => {}
                "x_min" => cfg.x_min = parse_f64(key, val)?,
                "x_max" => cfg.x_max = parse_f64(key, val)?,
                "y_min" => cfg.y_min = parse_f64(key, val)?,
                "y_max" => cfg.y_max = parse_f64(key, val)?,
                "nx" => cfg.nx = parse_u32(key, val)?,
                "ny" => cfg.ny = parse_u32(key, val)?,
                "y_scale" => cfg.y_scale = parse_f64(key, val)?,
                "seeds" => cfg.seeds = parse_complex_list(key, val)?,
                "roots" => cfg.roots = parse_complex_list(key, val)?,
                "t_lo" => cfg.t_lo = Some(parse_f64(key, val)?),
                "t_hi" => cfg.t_hi = Some(parse_f64(key, val)?),
                "scan_step" => cfg.scan_step = parse_f64(key, val)?,
                "rect" => {
                    let v = parse_f64_list(key, val)?;
                    if v.len() != 4 {
                        return Err(bad(key, val));
                    }
                    cfg.rect = Some((v[0], v[1], v[2], v[3]));
                }
                "preset" => cfg.preset = Some(val.to_string()),
                _ => return Err(Error::Config(format!("unknown key {key:?}"))),
            }
        }

        cfg.function = match function_key.as_deref().unwrap_or("xi") {
            "xi" => FunctionChoice::Xi,
            "sin" => FunctionChoice::Sin,
            "ht" => {
                let t = kv
                    .get("ht_t")
                    .map(|v| parse_f64("ht_t", v))
                    .transpose()?
                    .unwrap_or(0.0);
                FunctionChoice::Ht { t }
            }
            "poly" => {
                let roots = kv
                    .get("poly_roots")
                    .map(|v| parse_complex_list("poly_roots", v))
                    .transpose()?
                    .unwrap_or_default();
                let coeffs = kv
                    .get("poly_coeffs")
                    .map(|v| parse_complex_list("poly_coeffs", v))
                    .transpose()?
                    .unwrap_or_default();
                if roots.is_empty() == coeffs.is_empty() {
                    return Err(Error::Config(
                        "function=poly needs exactly one of poly_roots, poly_coeffs".into(),
                    ));
                }
                FunctionChoice::Poly { roots, coeffs }
            }
            other => return Err(Error::Config(format!("unknown function {other:?}"))),
        };
        cfg.explicit = kv.keys().cloned().collect();
        if let Method::Relaxed(_) = cfg.method {
            cfg.method = Method::Relaxed(cfg.relaxed_alpha);
        }
        if !dps_seen {
            cfg.dps = match cfg.function {
                FunctionChoice::Poly { .. } | FunctionChoice::Sin => 50,
                FunctionChoice::Xi | FunctionChoice::Ht { .. } => 100,
            };
        }
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Canonical key=value form; parsing it reproduces this config.
    pub fn echo(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        match &self.function {
            FunctionChoice::Xi => {
                kv.insert("function", "xi".into());
            }
            FunctionChoice::Sin => {
                kv.insert("function", "sin".into());
            }
            FunctionChoice::Ht { t } => {
                kv.insert("function", "ht".into());
                kv.insert("ht_t", fmt_f64(*t));
            }
            FunctionChoice::Poly { roots, coeffs } => {
                kv.insert("function", "poly".into());
                if !roots.is_empty() {
                    kv.insert("poly_roots", fmt_complex_list(roots));
                } else {
                    kv.insert("poly_coeffs", fmt_complex_list(coeffs));
                }
            }
        }
        let method = match self.method {
            Method::Relaxed(_) => "relaxed".to_string(),
            m => m.to_string(),
        };
        kv.insert("method", method);
        kv.insert("dps", self.dps.to_string());
        kv.insert("seed", self.seed.to_string());
        kv.insert("max_iter", self.max_iter.to_string());
        kv.insert("tau", fmt_f64(self.tau));
        kv.insert("theta", fmt_f64(self.theta));
        kv.insert("gamma0", fmt_f64(self.gamma0));
        kv.insert("root_tol", fmt_f64(self.root_tol));
        kv.insert("relaxed_alpha", fmt_f64(self.relaxed_alpha));
        if !self.deltas.is_empty() {
            kv.insert(
                "deltas",
                self.deltas.iter().map(|d| fmt_f64(*d)).collect::<Vec<_>>().join(","),
            );
        }
        if let Some(a) = self.anchor {
            kv.insert("anchor", fmt_f64(a));
        }
        kv.insert("x_min", fmt_f64(self.x_min));
        kv.insert("x_max", fmt_f64(self.x_max));
        kv.insert("y_min", fmt_f64(self.y_min));
        kv.insert("y_max", fmt_f64(self.y_max));
        kv.insert("nx", self.nx.to_string());
        kv.insert("ny", self.ny.to_string());
        kv.insert("y_scale", fmt_f64(self.y_scale));
        if !self.seeds.is_empty() {
            kv.insert("seeds", fmt_complex_list(&self.seeds));
        }
        if !self.roots.is_empty() {
            kv.insert("roots", fmt_complex_list(&self.roots));
        }
        if let Some(t) = self.t_lo {
            kv.insert("t_lo", fmt_f64(t));
        }
        if let Some(t) = self.t_hi {
            kv.insert("t_hi", fmt_f64(t));
        }
        kv.insert("scan_step", fmt_f64(self.scan_step));
        if let Some((a, b, c, d)) = self.rect {
            kv.insert("rect", format!("{a},{b},{c},{d}"));
        }
        if let Some(p) = &self.preset {
            kv.insert("preset", p.clone());
        }
        let mut out = String::new();
        for (k, v) in kv {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn precision(&self) -> Result<PrecisionContext> {
        PrecisionContext::new(self.dps)
    }

    /// Build the target function's handle. `anchor_override` replaces the
    /// config anchor for xi (used per-seed at large heights).
    pub fn handle(
        &self,
        ctx: &PrecisionContext,
        anchor_override: Option<f64>,
    ) -> Result<FunctionHandle> {
        match &self.function {
            FunctionChoice::Xi => Ok(match anchor_override.or(self.anchor) {
                Some(t) => xi_handle_anchored(ctx, t),
                None => xi_handle(ctx),
            }),
            FunctionChoice::Sin => Ok(sin_handle(ctx)),
            FunctionChoice::Ht { t } => {
                let spec = HeatFlowSpec::for_context(*t, ctx)?;
                ht_handle(&spec, ctx)
            }
            FunctionChoice::Poly { roots, coeffs } => {
                let spec = if !roots.is_empty() {
                    PolynomialSpec::Roots(
                        roots.iter().map(|p| ctx.complex(*p)).collect(),
                    )
                } else {
                    PolynomialSpec::Coefficients(
                        coeffs.iter().map(|p| ctx.complex(*p)).collect(),
                    )
                };
                poly_handle(&spec, ctx)
            }
        }
    }

    pub fn bnqn_params(&self) -> BNQNParams {
        let mut p = BNQNParams::new(self.seed);
        p.deltas = self.deltas.clone();
        p.tau = self.tau;
        p.theta = self.theta;
        p.gamma0 = self.gamma0;
        p.max_iter = self.max_iter;
        p.root_tol = self.root_tol;
        p
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let mut g = GridSpec::new(
            (self.x_min, self.x_max),
            (self.y_min, self.y_max),
            self.nx,
            self.ny,
        )?;
        g.y_render_scale = self.y_scale;
        Ok(g)
    }

    pub fn roots_big(&self, ctx: &PrecisionContext) -> Vec<BigComplex> {
        self.roots.iter().map(|p| ctx.complex(*p)).collect()
    }

    pub fn has(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }
}
