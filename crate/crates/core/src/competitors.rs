//! Volume-matched radial competitors confined to the half-cylinder.
//!
//! A competitor has top profile `g = φ + δ·B + λ·B₂` on `[r0, r1]`, where
//! `B` is a family bump, `B₂(ξ) = ξ²(1 − ξ²)³` is the correction bump and
//! `ξ = (2r − r0 − r1)/(r1 − r0)`. Since the volume is affine in `λ`, the
//! match `∫(g − φ) r^{2n−1} dr = 0` is solved in closed form.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foliation::FoliationContext;
use crate::pansu::{pansu_volume, volume_of_graph_set, GeometryError, RadialProfile};
use crate::profile::phi_unchecked;
use crate::quadrature::{integrate_with_breaks, QuadratureConfig, QuadratureError};
use crate::quantitative::{check_quantitative, QuantConfig};
use crate::report::VerificationReport;

/// Relative volume mismatch allowed for an emitted competitor.
pub const VOLUME_MATCH_TOL: f64 = 1e-10;
/// Largest admissible `|δ|` and `|λ|·max B₂`, as a fraction of `φ(r1) − t_ε`.
pub const AMPLITUDE_CAP: f64 = 0.5;
const B2_MAX: f64 = 27.0 / 256.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompetitorError {
    #[error("invalid perturbation spec: {0}")]
    BadSpec(String),
    #[error("amplitude {amplitude} exceeds the cap {cap}")]
    AmplitudeCap { amplitude: f64, cap: f64 },
    #[error("volume correction {lambda} exceeds the cap (|λ|·max B₂ = {size} > {cap})")]
    CorrectionCap { lambda: f64, size: f64, cap: f64 },
    #[error("competitor leaves the half-cylinder at r = {r} (margin {margin:e})")]
    Confinement { r: f64, margin: f64 },
    #[error("volume mismatch {relative:e} after correction")]
    VolumeMismatch { relative: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `b(ξ) = (1 − ξ²)³`.
    SmoothBump,
    /// Two half-width bumps, the outer one scaled by `shape`.
    DoubleBump,
    /// `−b(ξ/w)` with width `w = shape ∈ (0, 1]`.
    Dent,
    /// `ξ·b(ξ)`: lowers the inner half and raises the outer one.
    CapFlatten,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::SmoothBump, Family::DoubleBump, Family::Dent, Family::CapFlatten];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::SmoothBump => "smooth_bump",
            Family::DoubleBump => "double_bump",
            Family::Dent => "dent",
            Family::CapFlatten => "cap_flatten",
        }
    }

    /// `(B(ξ), dB/dξ)`.
    fn eval(self, xi: f64, shape: f64) -> (f64, f64) {
        match self {
            Family::SmoothBump => bump(xi),
            Family::DoubleBump => {
                if xi < 0.0 {
                    let (v, d) = bump(2.0 * xi + 1.0);
                    (v, 2.0 * d)
                } else {
                    let (v, d) = bump(2.0 * xi - 1.0);
                    (shape * v, 2.0 * shape * d)
                }
            }
            Family::Dent => {
                let (v, d) = bump(xi / shape);
                (-v, -d / shape)
            }
            Family::CapFlatten => {
                let (v, d) = bump(xi);
                (xi * v, v + xi * d)
            }
        }
    }

    /// Interior points where the family bump is only `C²`.
    fn kinks(self, shape: f64) -> Vec<f64> {
        match self {
            Family::DoubleBump => vec![0.0],
            Family::Dent if shape < 1.0 => vec![-shape, shape],
            _ => Vec::new(),
        }
    }
}

fn bump(xi: f64) -> (f64, f64) {
    if xi.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - xi * xi;
    (q * q * q, -6.0 * xi * q * q)
}

fn correction(xi: f64) -> (f64, f64) {
    let (v, d) = bump(xi);
    (xi * xi * v, 2.0 * xi * v + xi * xi * d)
}

fn default_shape() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub family: Family,
    pub amplitude: f64,
    pub r0: f64,
    pub r1: f64,
    #[serde(default = "default_shape")]
    pub shape: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(family: Family, amplitude: f64, r0: f64, r1: f64) -> Self {
        Self { family, amplitude, r0, r1, shape: 1.0, seed: 0 }
    }

    pub fn with_shape(mut self, shape: f64) -> Self {
        self.shape = shape;
        self
    }

    fn validate(&self, ctx: &FoliationContext) -> Result<(), CompetitorError> {
        let re = ctx.r_eps();
        if !(self.r0 > 0.0 && self.r0 < self.r1 && self.r1 < re) {
            return Err(CompetitorError::BadSpec(format!(
                "support [{}, {}] must satisfy 0 < r0 < r1 < r_eps = {re}",
                self.r0, self.r1
            )));
        }
        if !self.amplitude.is_finite() || !self.shape.is_finite() {
            return Err(CompetitorError::BadSpec("amplitude and shape must be finite".into()));
        }
        if self.family == Family::Dent && !(self.shape > 0.0 && self.shape <= 1.0) {
            return Err(CompetitorError::BadSpec(format!("dent width {} must lie in (0, 1]", self.shape)));
        }
        Ok(())
    }
}

/// A generated competitor together with its volume correction.
#[derive(Debug, Clone)]
pub struct Competitor {
    pub spec: PerturbationSpec,
    pub profile: RadialProfile,
    pub lambda: f64,
}

/// Builds `g = φ + δB + λB₂`, solves for `λ` and validates the result.
pub fn make_competitor(
    spec: &PerturbationSpec,
    ctx: &FoliationContext,
    cfg: &QuadratureConfig,
) -> Result<Competitor, CompetitorError> {
    spec.validate(ctx)?;
    let n = ctx.n();
    let (r0, r1, delta, shape, family) = (spec.r0, spec.r1, spec.amplitude, spec.shape, spec.family);
    let room = phi_unchecked(r1) - ctx.t_eps();
    let cap = AMPLITUDE_CAP * room;
    if delta.abs() > cap {
        return Err(CompetitorError::AmplitudeCap { amplitude: delta, cap });
    }
    if delta == 0.0 {
        return Ok(Competitor { spec: spec.clone(), profile: RadialProfile::pansu(), lambda: 0.0 });
    }

    let mid = 0.5 * (r0 + r1);
    let half = 0.5 * (r1 - r0);
    let xi_of = move |r: f64| ((r - mid) / half).clamp(-1.0, 1.0);
    let w = (2 * n - 1) as i32;
    let mut breaks = vec![r0];
    breaks.extend(family.kinks(shape).into_iter().map(|k| mid + half * k));
    breaks.push(r1);
    let i_b = integrate_with_breaks(|r| family.eval(xi_of(r), shape).0 * r.powi(w), &breaks, cfg)?.value;
    let i_c = integrate_with_breaks(|r| correction(xi_of(r)).0 * r.powi(w), &breaks, cfg)?.value;
    let lambda = -delta * i_b / i_c;
    let size = lambda.abs() * B2_MAX;
    if size > cap {
        return Err(CompetitorError::CorrectionCap { lambda, size, cap });
    }

    let profile = RadialProfile::perturbed(
        move |r| {
            let xi = xi_of(r);
            let (b, db) = family.eval(xi, shape);
            let (c, dc) = correction(xi);
            (delta * b + lambda * c, (delta * db + lambda * dc) / half)
        },
        r0,
        r1,
    )?;

    // Confinement: min(g, φ) > t_ε and g > −φ on the support.
    let samples = 4000;
    for i in 0..=samples {
        let r = r0 + (r1 - r0) * i as f64 / samples as f64;
        let phi = phi_unchecked(r);
        let g = profile.value(r);
        let margin = g.min(phi) - ctx.t_eps();
        if !(margin > 0.0) || !(g + phi > 0.0) {
            return Err(CompetitorError::Confinement { r, margin });
        }
    }

    let vol_e = pansu_volume(n, cfg)?;
    let vol_f = volume_of_graph_set(&profile, n, cfg)?;
    let relative = (vol_f - vol_e).abs() / vol_e;
    if relative > VOLUME_MATCH_TOL {
        return Err(CompetitorError::VolumeMismatch { relative });
    }
    Ok(Competitor { spec: spec.clone(), profile, lambda })
}

fn theorem_id(ctx: &FoliationContext) -> &'static str {
    if ctx.eps() == 0.0 {
        "TP"
    } else {
        "TP2"
    }
}

fn with_spec_inputs(report: VerificationReport, spec: &PerturbationSpec, ctx: &FoliationContext) -> VerificationReport {
    report
        .with_input("n", ctx.n())
        .with_input("eps", ctx.eps())
        .with_input("family", spec.family.as_str())
        .with_input("amplitude", spec.amplitude)
        .with_input("r0", spec.r0)
        .with_input("r1", spec.r1)
        .with_input("shape", spec.shape)
        .with_input("seed", spec.seed)
}

/// Builds and checks one competitor; failures become `error` reports.
pub fn evaluate(spec: &PerturbationSpec, ctx: &FoliationContext, cfg: &QuantConfig) -> VerificationReport {
    let start = Instant::now();
    let report = match make_competitor(spec, ctx, &cfg.quad) {
        Err(e) => VerificationReport::error(theorem_id(ctx), e.to_string()),
        Ok(c) => match check_quantitative(&c.profile, ctx, cfg) {
            Ok(q) => q.summary().with_detail("lambda", c.lambda),
            Err(e) => VerificationReport::error(theorem_id(ctx), e.to_string()),
        },
    };
    with_spec_inputs(report, spec, ctx).with_runtime(start.elapsed())
}

/// Evaluates every spec in parallel; the output keeps the input order.
pub fn sweep(specs: &[PerturbationSpec], ctx: &FoliationContext, cfg: &QuantConfig) -> Vec<VerificationReport> {
    specs.par_iter().map(|s| evaluate(s, ctx, cfg)).collect()
}

/// One admissible random spec drawn from `seed`. Draws that the generator
/// rejects are redrawn from the same stream.
pub fn random_spec(seed: u64, ctx: &FoliationContext, cfg: &QuadratureConfig) -> PerturbationSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let re = ctx.r_eps();
    loop {
        let family = Family::ALL[rng.gen_range(0..Family::ALL.len())];
        let r0 = re * rng.gen_range(0.05..0.75);
        let r1 = rng.gen_range(r0 + 0.1 * re..0.95 * re);
        let shape = match family {
            Family::Dent => rng.gen_range(0.3..1.0),
            Family::DoubleBump => rng.gen_range(-1.0..1.0),
            _ => 1.0,
        };
        let cap = AMPLITUDE_CAP * (phi_unchecked(r1) - ctx.t_eps());
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let amplitude = sign * cap * rng.gen_range(0.05..0.9);
        let spec = PerturbationSpec { family, amplitude, r0, r1, shape, seed };
        if make_competitor(&spec, ctx, cfg).is_ok() {
            return spec;
        }
    }
}

/// `count` random specs with seeds `base_seed, base_seed + 1, …`.
pub fn random_specs(count: usize, base_seed: u64, ctx: &FoliationContext, cfg: &QuadratureConfig) -> Vec<PerturbationSpec> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| random_spec(base_seed.wrapping_add(i), ctx, cfg))
        .collect()
}
