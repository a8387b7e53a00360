//! The computations behind each subcommand. Every function returns report
//! rows in a fixed order so that output files are reproducible.

use std::time::Instant;

use pansu_core::competitors::random_specs;
use pansu_core::foliation::{curvature_gap_bound, gauss_green, leaf_growth_bound, pop_bound_check};
use pansu_core::heisenberg::horizontal_divergence_fd;
use pansu_core::pansu::{isoperimetric_ratio, omega_2n, pansu_perimeter, pansu_volume};
use pansu_core::profile::phi;
use pansu_core::quadrature::QuadratureConfig;
use pansu_core::quantitative::QuantConfig;
use pansu_core::{sweep, FoliationContext, Point, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::HarnessConfig;

/// A fixed direction in `R^{2n}` that is not aligned with any axis.
fn generic_direction(n: usize) -> Vec<f64> {
    (0..2 * n).map(|k| 1.0 + 0.37 * k as f64).collect()
}

fn context(cfg: &HarnessConfig, eps: f64) -> Result<FoliationContext, String> {
    FoliationContext::new(cfg.n, eps).map(|c| c.with_root_tol(cfg.tolerances.root)).map_err(|e| e.to_string())
}

fn quant_config(cfg: &HarnessConfig) -> QuantConfig {
    QuantConfig {
        quad: QuadratureConfig::with_abs_tol(cfg.tolerances.quadrature),
        margin_tol: cfg.tolerances.margin,
        ..QuantConfig::default()
    }
}

/// Worst value of a scan and where it occurred.
struct Extreme {
    value: f64,
    r: f64,
    t: f64,
    cells: usize,
    errors: usize,
    first_error: Option<String>,
}

/// Runs `eval` over cells in parallel and keeps the largest value
/// (`maximize`) or the smallest one.
fn scan<F>(cells: &[(f64, f64)], maximize: bool, eval: F) -> Extreme
where
    F: Fn(f64, f64) -> Result<f64, String> + Sync,
{
    let values: Vec<Result<f64, String>> = cells.par_iter().map(|&(r, t)| eval(r, t)).collect();
    let mut out = Extreme {
        value: if maximize { f64::NEG_INFINITY } else { f64::INFINITY },
        r: f64::NAN,
        t: f64::NAN,
        cells: cells.len(),
        errors: 0,
        first_error: None,
    };
    for (&(r, t), v) in cells.iter().zip(values) {
        match v {
            Ok(v) if v.is_nan() => {
                out.errors += 1;
                out.first_error.get_or_insert_with(|| format!("NaN at r = {r}, t = {t}"));
            }
            Ok(v) => {
                if (maximize && v > out.value) || (!maximize && v < out.value) {
                    out.value = v;
                    out.r = r;
                    out.t = t;
                }
            }
            Err(e) => {
                out.errors += 1;
                out.first_error.get_or_insert(e);
            }
        }
    }
    out
}

fn tag(report: VerificationReport, cfg: &HarnessConfig, eps: f64) -> VerificationReport {
    report.with_input("n", cfg.n).with_input("eps", eps)
}

/// `lhs = worst ≤ rhs = limit`, or an error row if any cell failed. The
/// slack is capped at a thousandth of the limit so that a tiny limit is not
/// swamped by the margin tolerance.
fn max_row(id: &str, ext: Extreme, limit: f64, cfg: &HarnessConfig, eps: f64) -> VerificationReport {
    let slack = cfg.tolerances.margin.min(1e-3 * limit);
    let report = match ext.first_error {
        Some(e) => VerificationReport::error(id, format!("{} of {} cells failed; first: {e}", ext.errors, ext.cells)),
        None => VerificationReport::at_most(id, ext.value, limit, slack),
    };
    tag(report, cfg, eps).with_input("cells", ext.cells).with_detail("at_r", ext.r).with_detail("at_t", ext.t)
}

/// Cells `(r, t)` strictly inside `E ∩ C_ε`, cell-centred in height.
fn interior_cells(cfg: &HarnessConfig, ctx: &FoliationContext) -> Vec<(f64, f64)> {
    let m = cfg.grid.radial_margin;
    let nr = cfg.grid.radial;
    let nv = cfg.grid.vertical;
    let mut cells = Vec::with_capacity(nr * nv);
    for i in 0..nr {
        let r = ctx.r_eps() * (m + (1.0 - 2.0 * m) * i as f64 / (nr - 1) as f64);
        let r = r.max(1e-6);
        let room = phi(r).unwrap_or(f64::NAN) - ctx.t_eps();
        for j in 0..nv {
            cells.push((r, ctx.t_eps() + room * (j as f64 + 0.5) / nv as f64));
        }
    }
    cells
}

pub fn verify_foliation(cfg: &HarnessConfig) -> Vec<VerificationReport> {
    let mut rows = Vec::new();
    for &eps in &cfg.epsilons {
        let ctx = match context(cfg, eps) {
            Ok(c) => c,
            Err(e) => {
                rows.push(tag(VerificationReport::error("CL2", e), cfg, eps));
                continue;
            }
        };
        let tol = &cfg.tolerances;
        let dir = generic_direction(cfg.n);
        let cells = interior_cells(cfg, &ctx);
        let leaf = |r: f64, t: f64| ctx.solve_u(&Point::along(&dir, r, t)).map_err(|e| e.to_string());

        let ext = scan(&cells, true, |r, t| {
            let s = leaf(r, t)?.s;
            ctx.f_eps(r, t, s).map(f64::abs).map_err(|e| e.to_string())
        });
        rows.push(max_row("CL2.root_residual", ext, tol.root, cfg, eps));

        let ext = scan(&cells, true, |r, t| {
            let x = ctx.calibration_x(&Point::along(&dir, r, t)).map_err(|e| e.to_string())?;
            Ok((x.norm() - 1.0).abs())
        });
        rows.push(max_row("CL2.unit_norm", ext, tol.unit_norm, cfg, eps));

        let field = ctx.x_field();
        let two_n = 2.0 * cfg.n as f64;
        let ext = scan(&cells, true, |r, t| {
            let p = Point::along(&dir, r, t);
            let s = ctx.solve_u(&p).map_err(|e| e.to_string())?.s;
            let div = horizontal_divergence_fd(&field, &p, cfg.fd_step).map_err(|e| e.to_string())?;
            Ok((div / two_n - 1.0 / s).abs())
        });
        rows.push(max_row("CL2.curvature", ext, tol.curvature, cfg, eps).with_detail("fd_step", cfg.fd_step));

        rows.push(duality(cfg, &ctx, eps));
        rows.push(boundary_limit(cfg, &ctx, &dir, eps));

        let start = Instant::now();
        let report = match gauss_green(&ctx, 1e-9) {
            Ok(gg) => VerificationReport::at_most("CL2.gauss_green", gg.relative_mismatch(), tol.gauss_green, tol.margin)
                .with_detail("bulk", gg.bulk)
                .with_detail("cap_flux", gg.cap_flux)
                .with_detail("bottom_flux", gg.bottom_flux),
            Err(e) => VerificationReport::error("CL2.gauss_green", e.to_string()),
        };
        rows.push(tag(report, cfg, eps).with_runtime(start.elapsed()));
    }
    rows
}

/// `u` evaluated on the inner leaf `Σ_s` returns `s`.
fn duality(cfg: &HarnessConfig, ctx: &FoliationContext, eps: f64) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<(f64, f64)> = (0..cfg.duality_samples)
        .map(|_| (rng.gen_range(1.001..=50.0), ctx.r_eps() * rng.gen_range(0.0..1.0)))
        .collect();
    let dir = generic_direction(cfg.n);
    let ext = scan(&pairs, true, |s, r| {
        let t = ctx.leaf_graph(s, r).map_err(|e| e.to_string())?;
        let leaf = ctx.solve_u(&Point::along(&dir, r, t)).map_err(|e| e.to_string())?;
        Ok((leaf.s - s).abs())
    });
    // Columns of this scan are (s, r) rather than (r, t).
    let (s_at, r_at) = (ext.r, ext.t);
    let mut row = max_row("CL2.duality", ext, cfg.tolerances.duality, cfg, eps).with_input("seed", cfg.seed);
    row.details.remove("at_t");
    row.with_detail("at_r", r_at).with_detail("at_s", s_at)
}

/// `u → 1` and `X` continuous across `∂E`.
fn boundary_limit(cfg: &HarnessConfig, ctx: &FoliationContext, dir: &[f64], eps: f64) -> VerificationReport {
    let delta = 1e-9;
    let m = cfg.grid.radial_margin;
    let nr = cfg.grid.radial;
    let cells: Vec<(f64, f64)> = (0..nr)
        .map(|i| {
            let r = ctx.r_eps() * (m + (1.0 - 2.0 * m) * i as f64 / (nr - 1) as f64);
            (r.max(1e-6), phi(r).unwrap_or(f64::NAN))
        })
        .collect();
    let ext = scan(&cells, true, |r, top| {
        let below = Point::along(dir, r, top - delta);
        let above = Point::along(dir, r, top + delta);
        let err = |e: pansu_core::foliation::FoliationError| e.to_string();
        let u_in = ctx.solve_u(&below).map_err(err)?.s;
        let u_out = ctx.solve_u(&above).map_err(err)?.s;
        let x_in = ctx.calibration_x(&below).map_err(err)?;
        let x_out = ctx.calibration_x(&above).map_err(err)?;
        Ok((u_in - 1.0).abs().max((u_out - 1.0).abs()).max(x_in.max_abs_diff(&x_out)))
    });
    max_row("CL2.boundary_limit", ext, cfg.tolerances.boundary, cfg, eps).with_detail("offset", delta)
}

pub fn verify_bounds(cfg: &HarnessConfig) -> Vec<VerificationReport> {
    let mut rows = Vec::new();
    for &eps in &cfg.epsilons {
        let id = if eps == 0.0 { "H_s_2" } else { "H_s_1" };
        let ctx = match context(cfg, eps) {
            Ok(c) => c,
            Err(e) => {
                rows.push(tag(VerificationReport::error(id, e), cfg, eps));
                continue;
            }
        };
        // (r, depth) cells over the whole inner region.
        let (nr, nv) = (cfg.grid.radial, cfg.grid.vertical);
        let cells: Vec<(f64, f64)> = (0..nr)
            .flat_map(|i| {
                let r = ctx.r_eps() * (i as f64 + 0.5) / nr as f64;
                let room = phi(r).unwrap_or(f64::NAN) - ctx.t_eps();
                (0..nv).map(move |j| (r, room * (j as f64 + 0.5) / nv as f64))
            })
            .collect();
        let f = |r: f64, depth: f64| ctx.f_z(depth, r).map_err(|e| e.to_string());

        let gap = scan(&cells, false, |r, d| Ok((1.0 - 1.0 / f(r, d)?) - curvature_gap_bound(d, eps)));
        rows.push(min_row(id, gap, cfg, eps, |r, d| {
            let lhs = 1.0 - 1.0 / f(r, d)?;
            Ok((lhs, curvature_gap_bound(d, eps)))
        }));
        let growth = scan(&cells, false, |r, d| Ok(f(r, d)? - leaf_growth_bound(d, eps)));
        rows.push(min_row(&format!("{id}.growth"), growth, cfg, eps, |r, d| Ok((f(r, d)?, leaf_growth_bound(d, eps)))));
        rows.push(pop(cfg, eps));
    }
    rows
}

/// Row for `lhs ≥ rhs` at the cell with the smallest margin.
fn min_row(
    id: &str,
    ext: Extreme,
    cfg: &HarnessConfig,
    eps: f64,
    sides: impl Fn(f64, f64) -> Result<(f64, f64), String>,
) -> VerificationReport {
    let report = match ext.first_error {
        Some(e) => VerificationReport::error(id, format!("{} of {} cells failed; first: {e}", ext.errors, ext.cells)),
        None => match sides(ext.r, ext.t) {
            Ok((lhs, rhs)) => VerificationReport::at_least(id, lhs, rhs, cfg.tolerances.margin),
            Err(e) => VerificationReport::error(id, e),
        },
    };
    tag(report, cfg, eps).with_input("cells", ext.cells).with_detail("at_r", ext.r).with_detail("at_depth", ext.t)
}

/// `s(ψ(r_ε/s) − π) ≤ 2/√(s − r_ε)` on a grid log-spaced in `s − 1`.
fn pop(cfg: &HarnessConfig, eps: f64) -> VerificationReport {
    let count = cfg.grid.s_points;
    let span = cfg.grid.s_max - 1.0;
    let lo = 1e-6f64.min(span / 2.0);
    let points: Vec<(f64, f64)> = (0..count)
        .map(|k| {
            let frac = (k + 1) as f64 / count as f64;
            (1.0 + lo * (span / lo).powf(frac), 0.0)
        })
        .collect();
    let ext = scan(&points, false, |s, _| pop_bound_check(s, eps).map(|(l, r)| r - l).map_err(|e| e.to_string()));
    let s_at = ext.r;
    let report = match ext.first_error {
        Some(e) => VerificationReport::error("pop", format!("{} of {} points failed; first: {e}", ext.errors, ext.cells)),
        None => match pop_bound_check(s_at, eps) {
            Ok((lhs, rhs)) => VerificationReport::at_most("pop", lhs, rhs, cfg.tolerances.margin),
            Err(e) => VerificationReport::error("pop", e.to_string()),
        },
    };
    tag(report, cfg, eps).with_input("points", count).with_detail("at_s", s_at)
}

/// The exponent of the asymmetry in the quantitative inequality.
pub fn asymmetry_power(eps: f64) -> i32 {
    if eps == 0.0 {
        3
    } else {
        2
    }
}

pub fn run_competitors(cfg: &HarnessConfig) -> Vec<VerificationReport> {
    let qcfg = quant_config(cfg);
    let mut rows = Vec::new();
    for &eps in &cfg.epsilons {
        let ctx = match context(cfg, eps) {
            Ok(c) => c,
            Err(e) => {
                rows.push(tag(VerificationReport::error(if eps == 0.0 { "TP" } else { "TP2" }, e), cfg, eps));
                continue;
            }
        };
        let mut specs = cfg.sweep.specs.clone();
        specs.extend(random_specs(cfg.sweep.random_count, cfg.seed, &ctx, &qcfg.quad));
        let p = asymmetry_power(eps);
        rows.extend(sweep(&specs, &ctx, &qcfg).into_iter().map(|r| {
            let asym = r.details.get("asymmetry").copied();
            match asym {
                Some(a) => r.with_detail("asymmetry_power", a.powi(p)),
                None => r,
            }
        }));
    }
    rows
}

#[derive(Debug, Serialize)]
pub struct EpsilonConstants {
    pub eps: f64,
    pub r_eps: f64,
    pub t_eps: f64,
}

#[derive(Debug, Serialize)]
pub struct Constants {
    pub n: usize,
    pub omega_2n: f64,
    pub volume: f64,
    pub perimeter: f64,
    pub isoperimetric_ratio: f64,
    pub cylinders: Vec<EpsilonConstants>,
}

pub fn constants(cfg: &HarnessConfig) -> Result<Constants, String> {
    let quad = QuadratureConfig::with_abs_tol(cfg.tolerances.quadrature.max(1e-12));
    let volume = pansu_volume(cfg.n, &quad).map_err(|e| e.to_string())?;
    let perimeter = pansu_perimeter(cfg.n, &quad).map_err(|e| e.to_string())?;
    let cylinders = cfg
        .epsilons
        .iter()
        .map(|&eps| context(cfg, eps).map(|c| EpsilonConstants { eps, r_eps: c.r_eps(), t_eps: c.t_eps() }))
        .collect::<Result<_, _>>()?;
    Ok(Constants {
        n: cfg.n,
        omega_2n: omega_2n(cfg.n),
        volume,
        perimeter,
        isoperimetric_ratio: isoperimetric_ratio(perimeter, volume, cfg.n),
        cylinders,
    })
}
