//! The Pansu set `E = {|t| < φ(|z|), |z| < 1}`, the half-cylinders `C_ε`,
//! and volume / H-perimeter of axially symmetric t-graph sets
//! `F = {−φ(|z|) < t < g(|z|)}`.
//!
//! All radial integrals are taken in the angle variable `r = sin θ`, which
//! turns the `1/√(1−r²)` behaviour of `φ'` at the equator into an analytic
//! integrand.

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::heisenberg::Point;
use crate::profile::{phi_prime_unchecked, phi_unchecked};
use crate::quadrature::{integrate_radial, QuadratureConfig, QuadratureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension n must be at least 1")]
    BadDimension,
    #[error("epsilon must lie in [0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("support [{0}, {1}] must satisfy 0 < r0 < r1 < 1")]
    BadSupport(f64, f64),
    #[error("radial range [{0}, {1}] must satisfy 0 <= a <= b <= 1")]
    BadRange(f64, f64),
    #[error("invalid profile: top graph below the bottom sheet near r = {0}")]
    NegativeThickness(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Volume of the Euclidean unit ball in `R^{2n}`, `π^n / n!`.
pub fn omega_2n(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * PI / k as f64)
}

/// Constants attached to the half-cylinder `C_ε = {|z| < 1, t > t_ε}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CylinderParams {
    pub n: usize,
    pub eps: f64,
    /// `t_ε = φ(1 − ε)`
    pub t_eps: f64,
    /// `r_ε = 1 − ε`
    pub r_eps: f64,
    /// `ω_{2n}`
    pub omega: f64,
}

impl CylinderParams {
    pub fn new(n: usize, eps: f64) -> Result<Self, GeometryError> {
        if n == 0 {
            return Err(GeometryError::BadDimension);
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(GeometryError::BadEpsilon(eps));
        }
        let r_eps = 1.0 - eps;
        Ok(Self { n, eps, t_eps: phi_unchecked(r_eps), r_eps, omega: omega_2n(n) })
    }

    /// Surface measure of the unit sphere in `R^{2n}`, `2n·ω_{2n}`.
    pub fn sphere_area(&self) -> f64 {
        2.0 * self.n as f64 * self.omega
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.radius() < 1.0 && p.t > self.t_eps
    }
}

/// `(z, t) ∈ E` iff `|z| < 1` and `|t| < φ(|z|)`.
pub fn is_in_pansu(p: &Point) -> bool {
    let r = p.radius();
    r < 1.0 && p.t.abs() < phi_unchecked(r)
}

type Pair = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Pansu,
    /// `g = φ + o` on the support; the closure returns `(o, o')`.
    Offset(Pair),
    /// `g` given directly on the support; the closure returns `(g, g')`.
    Graph(Pair),
}

/// Top graph `t = g(|z|)` of an axially symmetric set, equal to the Pansu
/// profile `φ` outside a support interval `[r0, r1] ⊂ (0, 1)`.
#[derive(Clone)]
pub struct RadialProfile {
    shape: Shape,
    support: Option<(f64, f64)>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.shape {
            Shape::Pansu => "pansu",
            Shape::Offset(_) => "offset",
            Shape::Graph(_) => "graph",
        };
        f.debug_struct("RadialProfile")
            .field("kind", &kind)
            .field("support", &self.support)
            .finish()
    }
}

fn check_support(r0: f64, r1: f64) -> Result<(), GeometryError> {
    if 0.0 < r0 && r0 < r1 && r1 < 1.0 {
        Ok(())
    } else {
        Err(GeometryError::BadSupport(r0, r1))
    }
}

impl RadialProfile {
    /// The top boundary of `E` itself.
    pub fn pansu() -> Self {
        Self { shape: Shape::Pansu, support: None }
    }

    /// `g = φ + o` on `[r0, r1]`; `offset` returns `(o(r), o'(r))`.
    pub fn perturbed(
        offset: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        r0: f64,
        r1: f64,
    ) -> Result<Self, GeometryError> {
        check_support(r0, r1)?;
        Ok(Self { shape: Shape::Offset(Arc::new(offset)), support: Some((r0, r1)) })
    }

    /// Arbitrary `g` on `[r0, r1]`; `graph` returns `(g(r), g'(r))`.
    pub fn from_graph(
        graph: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        r0: f64,
        r1: f64,
    ) -> Result<Self, GeometryError> {
        check_support(r0, r1)?;
        Ok(Self { shape: Shape::Graph(Arc::new(graph)), support: Some((r0, r1)) })
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    pub fn is_pansu(&self) -> bool {
        matches!(self.shape, Shape::Pansu)
    }

    fn in_support(&self, r: f64) -> bool {
        matches!(self.support, Some((a, b)) if a <= r && r <= b)
    }

    /// `g(r)`.
    pub fn value(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Offset(o) if self.in_support(r) => phi_unchecked(r) + o(r).0,
            Shape::Graph(g) if self.in_support(r) => g(r).0,
            _ => phi_unchecked(r),
        }
    }

    /// `g'(r)`.
    pub fn derivative(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Offset(o) if self.in_support(r) => phi_prime_unchecked(r) + o(r).1,
            Shape::Graph(g) if self.in_support(r) => g(r).1,
            _ => phi_prime_unchecked(r),
        }
    }

    /// `g(r) − φ(r)`, exact for offset-type profiles.
    pub fn offset(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Offset(o) if self.in_support(r) => o(r).0,
            Shape::Graph(g) if self.in_support(r) => g(r).0 - phi_unchecked(r),
            _ => 0.0,
        }
    }

    /// `g'(r) − φ'(r)`.
    pub fn offset_derivative(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Offset(o) if self.in_support(r) => o(r).1,
            Shape::Graph(g) if self.in_support(r) => g(r).1 - phi_prime_unchecked(r),
            _ => 0.0,
        }
    }

    /// Breakpoints of `[a, b]` at the support ends.
    pub(crate) fn breaks(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = vec![a];
        if let Some((r0, r1)) = self.support {
            for r in [r0, r1] {
                if a < r && r < b {
                    out.push(r);
                }
            }
        }
        out.push(b);
        out
    }
}

/// Integrates `∫_a^b f(r) dr` piecewise between the profile's support
/// breakpoints. `f(r, cos θ)` must already include the Jacobian `cos θ`.
pub(crate) fn radial_integral(
    g: &RadialProfile,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
    f: impl Fn(f64, f64) -> f64,
) -> Result<f64, GeometryError> {
    if !(0.0 <= a && a <= b && b <= 1.0) {
        return Err(GeometryError::BadRange(a, b));
    }
    let breaks = g.breaks(a, b);
    let span = (b - a).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let sub = QuadratureConfig {
            abs_tol: cfg.abs_tol * ((w[1] - w[0]) / span).max(1e-3),
            ..*cfg
        };
        total += integrate_radial(&f, w[0], w[1], &sub)?.value;
    }
    Ok(total)
}

/// `L^{2n+1}` of `{−φ(|z|) < t < g(|z|)}`:
/// `2n·ω_{2n} ∫_0^1 (g(r) + φ(r)) r^{2n−1} dr`.
pub fn volume_of_graph_set(
    g: &RadialProfile,
    n: usize,
    cfg: &QuadratureConfig,
) -> Result<f64, GeometryError> {
    if n == 0 {
        return Err(GeometryError::BadDimension);
    }
    let bad = Cell::new(None);
    let area = 2.0 * n as f64 * omega_2n(n);
    let inner_cfg = QuadratureConfig { abs_tol: cfg.abs_tol / area, ..*cfg };
    let integral = radial_integral(g, 0.0, 1.0, &inner_cfg, |s, c| {
        let thickness = if g.in_support(s) {
            2.0 * phi_unchecked(s) + g.offset(s)
        } else {
            2.0 * phi_unchecked(s)
        };
        if thickness < 0.0 {
            bad.set(Some(s));
        }
        thickness * s.powi(2 * n as i32 - 1) * c
    })?;
    if let Some(r) = bad.get() {
        return Err(GeometryError::NegativeThickness(r));
    }
    Ok(area * integral)
}

/// H-perimeter density of the graph `t = g(|z|)` per unit `z`-area,
/// `√(g'(r)² + 4r²)`.
pub fn graph_perimeter_density(g_prime: f64, r: f64) -> f64 {
    g_prime.hypot(2.0 * r)
}

/// H-perimeter of the top graph over the annulus `a < |z| < b`:
/// `2n·ω_{2n} ∫_a^b √(g'(r)² + 4r²) r^{2n−1} dr`.
pub fn h_perimeter_of_graph(
    g: &RadialProfile,
    n: usize,
    range: (f64, f64),
    cfg: &QuadratureConfig,
) -> Result<f64, GeometryError> {
    if n == 0 {
        return Err(GeometryError::BadDimension);
    }
    let area = 2.0 * n as f64 * omega_2n(n);
    let inner_cfg = QuadratureConfig { abs_tol: cfg.abs_tol / area, ..*cfg };
    let m = 2 * n as i32;
    let integral = radial_integral(g, range.0, range.1, &inner_cfg, |s, c| {
        if g.in_support(s) {
            graph_perimeter_density(g.derivative(s), s) * s.powi(m - 1) * c
        } else {
            // √(φ'² + 4r²) = 2r/√(1−r²), times r^{2n−1} cos θ.
            2.0 * s.powi(m)
        }
    })?;
    Ok(area * integral)
}

/// `P(F) − P(E)` for `F = {−φ < t < g}`; only the support contributes and
/// the integrand is written as a quotient to avoid cancellation.
pub fn perimeter_excess(
    g: &RadialProfile,
    n: usize,
    cfg: &QuadratureConfig,
) -> Result<f64, GeometryError> {
    if n == 0 {
        return Err(GeometryError::BadDimension);
    }
    let Some((r0, r1)) = g.support() else {
        return Ok(0.0);
    };
    let area = 2.0 * n as f64 * omega_2n(n);
    let inner_cfg = QuadratureConfig { abs_tol: cfg.abs_tol / area, ..*cfg };
    let m = 2 * n as i32;
    let integral = radial_integral(g, r0, r1, &inner_cfg, |s, c| {
        let fp = phi_prime_unchecked(s);
        let dg = g.offset_derivative(s);
        let gp = fp + dg;
        let num = dg * (gp + fp);
        let den = graph_perimeter_density(gp, s) + graph_perimeter_density(fp, s);
        if den == 0.0 {
            return 0.0;
        }
        num / den * s.powi(m - 1) * c
    })?;
    Ok(area * integral)
}

/// Volume of `E`.
pub fn pansu_volume(n: usize, cfg: &QuadratureConfig) -> Result<f64, GeometryError> {
    volume_of_graph_set(&RadialProfile::pansu(), n, cfg)
}

/// H-perimeter of `E` (both halves).
pub fn pansu_perimeter(n: usize, cfg: &QuadratureConfig) -> Result<f64, GeometryError> {
    Ok(2.0 * h_perimeter_of_graph(&RadialProfile::pansu(), n, (0.0, 1.0), cfg)?)
}

/// `P / V^{(2n+1)/(2n+2)}`, invariant under dilations.
pub fn isoperimetric_ratio(perimeter: f64, volume: f64, n: usize) -> f64 {
    let q = (2 * n + 1) as f64 / (2 * n + 2) as f64;
    perimeter / volume.powf(q)
}

/// Perimeter of an arbitrary top graph over `[a, b]`, integrated directly
/// in `r`. Meant for smooth graphs that have nothing to do with `φ`, such as
/// dilated profiles.
pub fn perimeter_of_top_graph(
    g_prime: impl Fn(f64) -> f64,
    n: usize,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, GeometryError> {
    let area = 2.0 * n as f64 * omega_2n(n);
    let m = 2 * n as i32;
    let q = crate::quadrature::integrate(
        |r| graph_perimeter_density(g_prime(r), r) * r.powi(m - 1),
        a,
        b,
        &QuadratureConfig { abs_tol: cfg.abs_tol / area, ..*cfg },
    )?;
    Ok(area * q.value)
}

/// Volume between two graphs over the annulus `a < |z| < b`.
pub fn volume_between(
    top: impl Fn(f64) -> f64,
    bottom: impl Fn(f64) -> f64,
    n: usize,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, GeometryError> {
    let area = 2.0 * n as f64 * omega_2n(n);
    let m = 2 * n as i32;
    let q = crate::quadrature::integrate(
        |r| (top(r) - bottom(r)) * r.powi(m - 1),
        a,
        b,
        &QuadratureConfig { abs_tol: cfg.abs_tol / area, ..*cfg },
    )?;
    Ok(area * q.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn tight() -> QuadratureConfig {
        QuadratureConfig::with_abs_tol(1e-12)
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega_2n(1), PI);
        assert!((omega_2n(2) - PI * PI / 2.0).abs() < 1e-15);
        assert!((omega_2n(3) - PI.powi(3) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn cylinder_params() {
        let c = CylinderParams::new(1, 0.0).unwrap();
        assert_eq!(c.t_eps, 0.0);
        assert_eq!(c.r_eps, 1.0);
        let c = CylinderParams::new(2, 0.5).unwrap();
        assert!((c.t_eps - phi_unchecked(0.5)).abs() == 0.0);
        assert!(CylinderParams::new(0, 0.1).is_err());
        assert!(CylinderParams::new(1, 1.0).is_err());
        assert!(CylinderParams::new(1, -0.1).is_err());
    }

    #[test]
    fn membership() {
        assert!(is_in_pansu(&Point::origin(1)));
        assert!(!is_in_pansu(&Point::on_axis_x1(1, 0.0, FRAC_PI_2)));
        assert!(is_in_pansu(&Point::on_axis_x1(1, 0.5, 1.4)));
        assert!(!is_in_pansu(&Point::on_axis_x1(1, 0.5, 1.49)));
        assert!(is_in_pansu(&Point::on_axis_x1(2, 0.5, -1.4)));
        assert!(!is_in_pansu(&Point::on_axis_x1(1, 1.0, 0.0)));
    }

    #[test]
    fn pansu_volume_and_perimeter_n1() {
        let v = pansu_volume(1, &tight()).unwrap();
        assert!((v - 0.75 * PI * PI).abs() < 1e-10);
        let p = pansu_perimeter(1, &tight()).unwrap();
        assert!((p - 2.0 * PI * PI).abs() < 1e-10);
        let ratio = isoperimetric_ratio(p, v, 1);
        assert!((ratio - 2.0 * PI * PI / (0.75 * PI * PI).powf(0.75)).abs() < 1e-10);
    }

    #[test]
    fn degenerate_and_constant_graphs() {
        // g = −φ on (almost) the whole ball: empty set apart from the collar.
        let g = RadialProfile::from_graph(|r| (-phi_unchecked(r), -phi_prime_unchecked(r)), 1e-12, 1.0 - 1e-12)
            .unwrap();
        assert!(volume_of_graph_set(&g, 1, &tight()).unwrap().abs() < 1e-9);

        let g = RadialProfile::from_graph(|_| (1.0, 0.0), 0.2, 0.6).unwrap();
        let p = h_perimeter_of_graph(&g, 1, (0.2, 0.6), &tight()).unwrap();
        let expected = 2.0 * PI * 2.0 * (0.6f64.powi(3) - 0.2f64.powi(3)) / 3.0;
        assert!((p - expected).abs() < 1e-11);
    }

    #[test]
    fn negative_thickness_is_rejected() {
        let g = RadialProfile::from_graph(|_| (-3.0, 0.0), 0.2, 0.6).unwrap();
        assert!(matches!(
            volume_of_graph_set(&g, 1, &tight()),
            Err(GeometryError::NegativeThickness(_))
        ));
    }

    #[test]
    fn zero_mean_bump_preserves_volume() {
        // o(r) = δ·b(ξ)·(1 − kξ²) with k chosen so that ∫ o r dr = 0 (n = 1).
        let (r0, r1) = (0.2, 0.6);
        let bump = move |r: f64| {
            let xi = (2.0 * r - r0 - r1) / (r1 - r0);
            (1.0 - xi * xi).powi(3)
        };
        let cfg = tight();
        let m0 = crate::quadrature::integrate(|r| bump(r) * r, r0, r1, &cfg).unwrap().value;
        let m2 = crate::quadrature::integrate(
            |r| {
                let xi = (2.0 * r - r0 - r1) / (r1 - r0);
                bump(r) * xi * xi * r
            },
            r0,
            r1,
            &cfg,
        )
        .unwrap()
        .value;
        let k = m0 / m2;
        let delta = 0.05;
        let g = RadialProfile::perturbed(
            move |r| {
                let xi = (2.0 * r - r0 - r1) / (r1 - r0);
                let dxi = 2.0 / (r1 - r0);
                let b = (1.0 - xi * xi).powi(3);
                let db = -6.0 * xi * (1.0 - xi * xi).powi(2) * dxi;
                let w = 1.0 - k * xi * xi;
                let dw = -2.0 * k * xi * dxi;
                (delta * b * w, delta * (db * w + b * dw))
            },
            r0,
            r1,
        )
        .unwrap();
        let v = volume_of_graph_set(&g, 1, &cfg).unwrap();
        assert!((v - 0.75 * PI * PI).abs() < 1e-10);
        // The perturbed graph has strictly larger perimeter.
        let excess = perimeter_excess(&g, 1, &cfg).unwrap();
        let direct = h_perimeter_of_graph(&g, 1, (0.0, 1.0), &cfg).unwrap()
            - h_perimeter_of_graph(&RadialProfile::pansu(), 1, (0.0, 1.0), &cfg).unwrap();
        assert!(excess > 0.0);
        assert!((excess - direct).abs() < 1e-10, "{excess} vs {direct}");
    }

    #[test]
    fn dilation_scaling_laws() {
        // Smooth top graph unrelated to φ; bottom sheet t = −1 + r².
        let g = |r: f64| 1.2 - r * r + 0.3 * r.powi(4);
        let gp = |r: f64| -2.0 * r + 1.2 * r.powi(3);
        let bottom = |r: f64| -1.0 + r * r;
        let cfg = tight();
        for n in [1usize, 2] {
            let p1 = perimeter_of_top_graph(gp, n, 0.0, 1.0, &cfg).unwrap();
            let v1 = volume_between(g, bottom, n, 0.0, 1.0, &cfg).unwrap();
            for lam in [0.5f64, 0.8] {
                let gl = |r: f64| lam * lam * g(r / lam);
                let glp = |r: f64| lam * gp(r / lam);
                let bl = |r: f64| lam * lam * bottom(r / lam);
                let p = perimeter_of_top_graph(glp, n, 0.0, lam, &cfg).unwrap();
                let v = volume_between(gl, bl, n, 0.0, lam, &cfg).unwrap();
                let k = 2 * n as i32;
                assert!((p / p1 - lam.powi(k + 1)).abs() < 1e-6 * lam.powi(k + 1));
                assert!((v / v1 - lam.powi(k + 2)).abs() < 1e-6 * lam.powi(k + 2));
            }
        }
    }
}
