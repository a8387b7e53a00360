//! Slicing quantities, the `G` functional and the chain of inequalities that
//! turns curvature gaps of the foliation into a quantitative isoperimetric
//! inequality.
//!
//! For a competitor `F = {−φ(|z|) < t < g(|z|)}` the vertical slice of
//! `E \ F` over `z` has length `m(z) = (φ(|z|) − g(|z|))₊`, and
//!
//! ```text
//! G(E \ F) = ∫_{E\F} (1 − 1/u) dz dt
//!          = 2n·ω_{2n} ∫ [∫_0^{m(r)} (1 − 1/f_z(τ)) dτ] r^{2n−1} dr.
//! ```
//!
//! With `ε = 0` the chain is
//! `deficit ≥ 2n·G ≥ (2n/60)∫m³dz ≥ (2n/(60ω²))(∫m dz)³ = (n/(240ω²))·asym³`;
//! with `ε > 0` the cubic steps become quadratic with constant `√ε`.

use std::cell::RefCell;

use serde::Serialize;
use thiserror::Error;

use crate::foliation::{FoliationContext, FoliationError, AXIS_EXCLUSION};
use crate::pansu::{omega_2n, pansu_perimeter, pansu_volume, perimeter_excess, GeometryError, RadialProfile};
use crate::quadrature::{integrate, QuadratureConfig, QuadratureError};
use crate::report::{Status, VerificationReport, DEFAULT_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("competitor is not confined to the half-cylinder at r = {r}: {detail}")]
    Confinement { r: f64, detail: String },
    #[error("competitor is not volume matched (relative volume error {relative:e})")]
    NotVolumeMatched { relative: f64 },
    #[error("dimension mismatch: profile checked with n = {n} but {detail}")]
    Dimension { n: usize, detail: String },
    #[error("invalid piecewise function: {0}")]
    BadPiecewise(String),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Accuracy settings for the quantitative evaluators.
#[derive(Debug, Clone, Copy)]
pub struct QuantConfig {
    /// Absolute tolerance for every outer radial quadrature.
    pub quad: QuadratureConfig,
    /// Tolerances for the inner `τ`-integral of `G`.
    pub inner_abs_tol: f64,
    pub inner_rel_tol: f64,
    /// Slack accepted on inequality margins.
    pub margin_tol: f64,
    /// Subintervals used to locate sign changes of `g − φ`.
    pub scan_points: usize,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::with_abs_tol(1e-13),
            inner_abs_tol: 1e-16,
            inner_rel_tol: 1e-11,
            margin_tol: DEFAULT_TOLERANCE,
            scan_points: 400,
        }
    }
}

/// `m(r) = max(φ(r) − g(r), 0)`.
pub fn m_of_z(g: &RadialProfile, r: f64) -> f64 {
    (-g.offset(r)).max(0.0)
}

/// Maximal subintervals of the support on which `g − φ` has one sign.
/// Each entry is `(a, b, below)` with `below` true where `g < φ`.
pub fn sign_partition(g: &RadialProfile, scan_points: usize) -> Vec<(f64, f64, bool)> {
    let Some((r0, r1)) = g.support() else {
        return Vec::new();
    };
    let n = scan_points.max(8);
    let below = |r: f64| g.offset(r) < 0.0;
    let at = |i: usize| r0 + (r1 - r0) * i as f64 / n as f64;
    // Classify by interior midpoints; the support ends are zeros.
    let mut out = Vec::new();
    let mut start = r0;
    let mut prev_mid = 0.5 * (at(0) + at(1));
    let mut current = below(prev_mid);
    for i in 1..n {
        let mid = 0.5 * (at(i) + at(i + 1));
        let side = below(mid);
        if side != current {
            let (mut lo, mut hi) = (prev_mid, mid);
            for _ in 0..80 {
                let c = 0.5 * (lo + hi);
                if c <= lo || c >= hi {
                    break;
                }
                if below(c) == current {
                    lo = c;
                } else {
                    hi = c;
                }
            }
            let cut = 0.5 * (lo + hi);
            out.push((start, cut, current));
            start = cut;
            current = side;
        }
        prev_mid = mid;
    }
    out.push((start, r1, current));
    out
}

/// Radial moments `∫ m^k r^{2n−1} dr` for `k = 1, 2, 3`.
pub fn m_moments(g: &RadialProfile, n: usize, cfg: &QuantConfig) -> Result<[f64; 3], QuantError> {
    let w = (2 * n - 1) as i32;
    let mut out = [0.0; 3];
    for (a, b, below) in sign_partition(g, cfg.scan_points) {
        if !below {
            continue;
        }
        for (k, slot) in out.iter_mut().enumerate() {
            let q = integrate(|r| m_of_z(g, r).powi(k as i32 + 1) * r.powi(w), a, b, &cfg.quad)?;
            *slot += q.value;
        }
    }
    Ok(out)
}

/// `L^{2n+1}(F Δ E) = 2n·ω_{2n} ∫ |g − φ| r^{2n−1} dr`.
pub fn asymmetry(g: &RadialProfile, n: usize, cfg: &QuantConfig) -> Result<f64, QuantError> {
    let w = (2 * n - 1) as i32;
    let area = 2.0 * n as f64 * omega_2n(n);
    let mut total = 0.0;
    for (a, b, _) in sign_partition(g, cfg.scan_points) {
        total += integrate(|r| g.offset(r).abs() * r.powi(w), a, b, &cfg.quad)?.value;
    }
    Ok(area * total)
}

/// `L^{2n+1}(F) − L^{2n+1}(E) = 2n·ω_{2n} ∫ (g − φ) r^{2n−1} dr`.
pub fn volume_change(g: &RadialProfile, n: usize, cfg: &QuantConfig) -> Result<f64, QuantError> {
    let Some((r0, r1)) = g.support() else {
        return Ok(0.0);
    };
    let w = (2 * n - 1) as i32;
    let area = 2.0 * n as f64 * omega_2n(n);
    Ok(area * integrate(|r| g.offset(r) * r.powi(w), r0, r1, &cfg.quad)?.value)
}

/// Checks that `E \ F` lies in the half-cylinder, away from the axis and the
/// ring `|z| = r_ε`.
fn check_confinement(
    g: &RadialProfile,
    ctx: &FoliationContext,
    parts: &[(f64, f64, bool)],
) -> Result<(), QuantError> {
    for &(a, b, below) in parts {
        if !below {
            continue;
        }
        if a < AXIS_EXCLUSION || b >= ctx.r_eps() {
            return Err(QuantError::Confinement {
                r: if a < AXIS_EXCLUSION { a } else { b },
                detail: format!("E \\ F must stay in {} < |z| < r_eps = {}", AXIS_EXCLUSION, ctx.r_eps()),
            });
        }
        for i in 0..=64 {
            let r = a + (b - a) * i as f64 / 64.0;
            if g.value(r) <= ctx.t_eps() {
                return Err(QuantError::Confinement {
                    r,
                    detail: format!("g = {} is not above t_eps = {}", g.value(r), ctx.t_eps()),
                });
            }
        }
    }
    Ok(())
}

/// `∫_0^{m} (1 − 1/f_z(τ)) dτ` at radius `r`.
pub fn slice_gap_integral(
    ctx: &FoliationContext,
    r: f64,
    m: f64,
    cfg: &QuantConfig,
) -> Result<f64, QuantError> {
    if m <= 0.0 {
        return Ok(0.0);
    }
    let failure = RefCell::new(None);
    let inner_cfg = QuadratureConfig { abs_tol: cfg.inner_abs_tol, rel_tol: cfg.inner_rel_tol, ..cfg.quad };
    let q = integrate(
        |tau| match ctx.f_z(tau, r) {
            Ok(f) => 1.0 - 1.0 / f,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        m,
        &inner_cfg,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok(q?.value)
}

/// `G(E \ F)` by nested adaptive quadrature.
#[allow(non_snake_case)]
pub fn G_functional(
    g: &RadialProfile,
    ctx: &FoliationContext,
    cfg: &QuantConfig,
) -> Result<f64, QuantError> {
    let parts = sign_partition(g, cfg.scan_points);
    check_confinement(g, ctx, &parts)?;
    let n = ctx.n();
    let w = (2 * n - 1) as i32;
    let area = 2.0 * n as f64 * omega_2n(n);
    let outer_cfg = QuadratureConfig { abs_tol: cfg.quad.abs_tol / area, ..cfg.quad };
    let mut total = 0.0;
    for (a, b, below) in parts {
        if !below {
            continue;
        }
        let failure = RefCell::new(None);
        let q = integrate(
            |r| match slice_gap_integral(ctx, r, m_of_z(g, r), cfg) {
                Ok(v) => v * r.powi(w),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
            &outer_cfg,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        total += q?.value;
    }
    Ok(area * total)
}

/// `P(F) − P(E)`; only the top graph over the support differs.
pub fn deficit(g: &RadialProfile, n: usize, cfg: &QuantConfig) -> Result<f64, QuantError> {
    Ok(perimeter_excess(g, n, &cfg.quad)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficitBreakdown {
    pub n: usize,
    pub eps: f64,
    pub perimeter_f: f64,
    pub perimeter_e: f64,
    /// `P(F) − P(E)`, computed directly rather than as a difference.
    pub deficit: f64,
    pub g_value: f64,
    /// `L^{2n+1}(F Δ E)`.
    pub asymmetry: f64,
    /// `∫ m^k r^{2n−1} dr` for `k = 1, 2, 3`.
    pub m_moments: [f64; 3],
    /// `L^{2n+1}(F) − L^{2n+1}(E)`.
    pub volume_change: f64,
}

impl DeficitBreakdown {
    /// `∫ m^k dz = 2n·ω_{2n}·∫ m^k r^{2n−1} dr`.
    pub fn m_integral(&self, k: usize) -> f64 {
        2.0 * self.n as f64 * omega_2n(self.n) * self.m_moments[k - 1]
    }
}

pub fn breakdown(
    g: &RadialProfile,
    ctx: &FoliationContext,
    cfg: &QuantConfig,
) -> Result<DeficitBreakdown, QuantError> {
    let n = ctx.n();
    let g_value = G_functional(g, ctx, cfg)?;
    let deficit = deficit(g, n, cfg)?;
    let perimeter_e = pansu_perimeter(n, &cfg.quad)?;
    Ok(DeficitBreakdown {
        n,
        eps: ctx.eps(),
        perimeter_f: perimeter_e + deficit,
        perimeter_e,
        deficit,
        g_value,
        asymmetry: asymmetry(g, n, cfg)?,
        m_moments: m_moments(g, n, cfg)?,
        volume_change: volume_change(g, n, cfg)?,
    })
}

/// The chain for one competitor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantitativeReport {
    pub breakdown: DeficitBreakdown,
    pub links: Vec<VerificationReport>,
    pub status: Status,
}

impl QuantitativeReport {
    pub fn passed(&self) -> bool {
        self.status.is_ok()
    }

    /// The final theorem link.
    pub fn theorem(&self) -> &VerificationReport {
        self.links.last().expect("chain is never empty")
    }

    /// One flat record: the theorem link with the worst status of the chain,
    /// every link's sides and margins and the breakdown in `details`.
    pub fn summary(&self) -> VerificationReport {
        let mut out = self.theorem().clone();
        out.status = self.status;
        let b = &self.breakdown;
        out = out
            .with_detail("deficit", b.deficit)
            .with_detail("two_n_G", 2.0 * b.n as f64 * b.g_value)
            .with_detail("G", b.g_value)
            .with_detail("asymmetry", b.asymmetry)
            .with_detail("volume_change", b.volume_change)
            .with_detail("int_m_dz", b.m_integral(1))
            .with_detail("int_m2_dz", b.m_integral(2))
            .with_detail("int_m3_dz", b.m_integral(3));
        for link in &self.links {
            out = out
                .with_detail(&format!("bound:{}", link.check_id), link.rhs)
                .with_detail(&format!("margin:{}", link.check_id), link.margin);
        }
        out
    }
}

/// Every link of the chain for a volume-matched, confined competitor.
pub fn check_quantitative(
    g: &RadialProfile,
    ctx: &FoliationContext,
    cfg: &QuantConfig,
) -> Result<QuantitativeReport, QuantError> {
    let n = ctx.n();
    let nf = n as f64;
    let omega = omega_2n(n);
    let tol = cfg.margin_tol;
    let relative = volume_change(g, n, cfg)?.abs() / pansu_volume(n, &cfg.quad)?;
    if relative > 1e-9 {
        return Err(QuantError::NotVolumeMatched { relative });
    }
    let b = breakdown(g, ctx, cfg)?;
    let eps = ctx.eps();
    let two_n_g = 2.0 * nf * b.g_value;
    let int_m = b.m_integral(1);
    let mut links = vec![VerificationReport::at_least("F_E", b.deficit, two_n_g, tol)];
    // ∫m dz = asym/2 once volumes agree.
    links.push(VerificationReport::identity("asym.half", int_m, 0.5 * b.asymmetry, tol));
    if eps == 0.0 {
        let slice = b.m_integral(3) / 60.0;
        let holder = int_m.powi(3) / (60.0 * omega * omega);
        let pix = b.asymmetry.powi(3) / (480.0 * omega * omega);
        links.push(VerificationReport::at_least("pix.slice", b.g_value, slice, tol));
        links.push(VerificationReport::at_least("pix.holder", slice, holder, tol));
        links.push(VerificationReport::at_least("pix", b.g_value, pix, tol));
        links.push(VerificationReport::at_least("TP", b.deficit, nf * b.asymmetry.powi(3) / (240.0 * omega * omega), tol));
    } else {
        let se = eps.sqrt();
        let slice = se / 8.0 * b.m_integral(2);
        let holder = se / (8.0 * omega) * int_m * int_m;
        let pox = se / (32.0 * omega) * b.asymmetry.powi(2);
        links.push(VerificationReport::at_least("pox.slice", b.g_value, slice, tol));
        links.push(VerificationReport::at_least("pox.holder", slice, holder, tol));
        links.push(VerificationReport::at_least("pox", b.g_value, pox, tol));
        links.push(VerificationReport::at_least("TP2", b.deficit, nf * se / (16.0 * omega) * b.asymmetry.powi(2), tol));
    }
    for link in &mut links {
        link.inputs.insert("n".into(), n.into());
        link.inputs.insert("eps".into(), eps.into());
    }
    let status = links.iter().fold(Status::Pass, |s, l| s.worst(l.status));
    Ok(QuantitativeReport { breakdown: b, links, status })
}

/// Hölder step on the unit ball for `m(z) = values[i]` on
/// `edges[i] ≤ |z| < edges[i+1]`: `ω²·∫m³dz ≥ (∫m dz)³`. The margin is
/// compared against `tol·max(1, rhs)`.
pub fn holder_link(values: &[f64], edges: &[f64], n: usize, tol: f64) -> Result<VerificationReport, QuantError> {
    if n == 0 {
        return Err(GeometryError::BadDimension.into());
    }
    if edges.len() != values.len() + 1 {
        return Err(QuantError::BadPiecewise(format!("{} values need {} edges, got {}", values.len(), values.len() + 1, edges.len())));
    }
    if edges.windows(2).any(|w| !(w[0] <= w[1])) || edges.first() != Some(&0.0) || edges.last() != Some(&1.0) {
        return Err(QuantError::BadPiecewise("edges must increase from 0 to 1".into()));
    }
    if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(QuantError::BadPiecewise("values must be finite and nonnegative".into()));
    }
    let omega = omega_2n(n);
    let area = 2.0 * n as f64 * omega;
    let p = 2 * n as i32;
    let (mut m1, mut m3) = (0.0, 0.0);
    for (v, w) in values.iter().zip(edges.windows(2)) {
        // ∫_a^b r^{2n−1} dr = (b^{2n} − a^{2n})/(2n)
        let shell = (w[1].powi(p) - w[0].powi(p)) / (2.0 * n as f64);
        m1 += v * shell;
        m3 += v * v * v * shell;
    }
    let lhs = omega * omega * area * m3;
    let rhs = (area * m1).powi(3);
    let scaled = tol * rhs.max(1.0);
    Ok(VerificationReport::at_least("pix.holder", lhs, rhs, scaled)
        .with_input("n", n)
        .with_input("pieces", values.len()))
}
