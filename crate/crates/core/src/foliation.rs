//! Foliation of the half-cylinder `C_ε` by constant-H-mean-curvature leaves
//! `Σ_s = {u = s}` and the sub-calibration `X = −∇_H u / |∇_H u|`.
//!
//! Outside `E` the leaves are vertical translates of the top of `∂E`,
//! `u = φ(|z|) − t + 1`. Inside `E ∩ C_ε` the leaf through `(z, t)` is the
//! dilated and lowered hemisphere `t = s²φ(|z|/s) + t_ε − s²φ(r_ε/s)`,
//! i.e. `s` is the unique root in `(1, ∞)` of
//!
//! ```text
//! F_ε(r, t, s) = s²(φ(r/s) − φ(r_ε/s)) + t_ε − t,
//! ```
//!
//! which is strictly decreasing in `s` with `∂_s F_ε = s(ψ(r/s) − ψ(r_ε/s))`.
//! The leaf `Σ_s` has H-mean curvature `1/s` inside `E` and `1` outside.

use thiserror::Error;

use crate::heisenberg::{HorizontalVector, Point, ScalarField, VectorField};
use crate::pansu::{CylinderParams, GeometryError};
use crate::profile::{phi_gap, phi_unchecked, psi_gap};

/// Points closer than this to the `t`-axis have no calibration direction.
pub const AXIS_EXCLUSION: f64 = 1e-8;
/// Half-width of the slab around `∂E` treated as the boundary leaf `s = 1`.
pub const BOUNDARY_SLAB: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FoliationError {
    #[error("point (|z| = {r}, t = {t}) is outside the half-cylinder C_eps (t_eps = {t_eps})")]
    OutsideCylinder { r: f64, t: f64, t_eps: f64 },
    #[error("point with |z| = {r} >= r_eps = {r_eps} lies below the boundary but outside the inner leaves")]
    Collar { r: f64, r_eps: f64 },
    #[error("calibration field is undefined on the axis (|z| = {0:e})")]
    OnAxis(f64),
    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },
    #[error("leaf solver did not converge at r = {r}, depth = {depth:e} (residual {residual:e})")]
    NoConvergence { r: f64, depth: f64, residual: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `s > 1`, inside `E`.
    Inner,
    /// `s < 1`, above `∂E`.
    Outer,
    /// `s = 1`, on `∂E`.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafPoint {
    pub point: Point,
    pub s: f64,
    pub branch: Branch,
}

/// Euclidean partial derivatives of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanGradient {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dt: f64,
}

impl EuclideanGradient {
    /// `X_j u = ∂_{x_j} u + 2y_j ∂_t u`, `Y_j u = ∂_{y_j} u − 2x_j ∂_t u`.
    pub fn horizontal(&self, p: &Point) -> HorizontalVector {
        HorizontalVector {
            a: self.dx.iter().zip(&p.y).map(|(d, y)| d + 2.0 * y * self.dt).collect(),
            b: self.dy.iter().zip(&p.x).map(|(d, x)| d - 2.0 * x * self.dt).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FoliationContext {
    pub params: CylinderParams,
    /// Required `|F_ε|` at the returned root.
    pub root_tol: f64,
    /// Factor by which the upper bracket end grows.
    pub growth: f64,
    pub max_iter: usize,
}

impl FoliationContext {
    pub fn new(n: usize, eps: f64) -> Result<Self, FoliationError> {
        Ok(Self::from_params(CylinderParams::new(n, eps)?))
    }

    pub fn from_params(params: CylinderParams) -> Self {
        Self { params, root_tol: 1e-12, growth: 2.0, max_iter: 300 }
    }

    pub fn with_root_tol(mut self, tol: f64) -> Self {
        self.root_tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn eps(&self) -> f64 {
        self.params.eps
    }

    pub fn r_eps(&self) -> f64 {
        self.params.r_eps
    }

    pub fn t_eps(&self) -> f64 {
        self.params.t_eps
    }

    fn check_leaf_args(&self, r: f64, s: f64) -> Result<(), FoliationError> {
        if !(s > 1.0) || !s.is_finite() {
            return Err(FoliationError::Domain { what: "leaf parameter", detail: format!("s = {s} must be > 1") });
        }
        if !(0.0..=self.r_eps()).contains(&r) {
            return Err(FoliationError::Domain {
                what: "radius",
                detail: format!("r = {r} must lie in [0, r_eps = {}]", self.r_eps()),
            });
        }
        Ok(())
    }

    /// `F_ε(r, t, s)`.
    pub fn f_eps(&self, r: f64, t: f64, s: f64) -> Result<f64, FoliationError> {
        self.check_leaf_args(r, s)?;
        Ok(s * s * phi_gap(r, self.r_eps(), s) + self.t_eps() - t)
    }

    /// `∂_s F_ε(r, ·, s) = s(ψ(r/s) − ψ(r_ε/s))`, negative for `r < r_ε`.
    pub fn ds_f_eps(&self, r: f64, s: f64) -> Result<f64, FoliationError> {
        self.check_leaf_args(r, s)?;
        Ok(s * psi_gap(r, self.r_eps(), s))
    }

    /// `F_ε` written against the depth `φ(r) − t` below `∂E`, so that the
    /// value at `s = 1` is exactly the depth.
    fn residual(&self, r: f64, depth: f64, s: f64) -> f64 {
        let re = self.r_eps();
        s * s * phi_gap(r, re, s) - phi_gap(r, re, 1.0) + depth
    }

    /// Unique `s > 1` with `F_ε(r, φ(r) − depth, s) = 0`.
    ///
    /// Brackets by doubling the upper end, then runs Newton in `w = 1/s`
    /// (where `F_ε` is close to affine for large `s`) with a bisection
    /// fallback whenever the step leaves the bracket.
    pub fn solve_inner(&self, r: f64, depth: f64) -> Result<f64, FoliationError> {
        let re = self.r_eps();
        if !(0.0..re).contains(&r) {
            return Err(FoliationError::Collar { r, r_eps: re });
        }
        let room = phi_unchecked(r) - self.t_eps();
        if !(depth > 0.0 && depth < room) {
            return Err(FoliationError::Domain {
                what: "depth below the boundary",
                detail: format!("{depth} must lie in (0, φ(r) − t_ε = {room})"),
            });
        }
        let f = |s: f64| self.residual(r, depth, s);

        let mut lo = 1.0;
        let mut hi = 2.0f64.max(re + 1.0);
        let mut f_hi = f(hi);
        let mut guard = 0;
        while f_hi >= 0.0 {
            lo = hi;
            hi *= self.growth;
            f_hi = f(hi);
            guard += 1;
            if guard > 1000 || !hi.is_finite() {
                return Err(FoliationError::NoConvergence { r, depth, residual: f_hi });
            }
        }

        let mut s = 0.5 * (lo + hi);
        for _ in 0..self.max_iter {
            let fs = f(s);
            if fs == 0.0 {
                break;
            }
            if fs > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let dfs = s * psi_gap(r, re, s);
            // Newton step in w = 1/s: dF/dw = −s² dF/ds.
            let w = 1.0 / s;
            let w_next = w + fs / (dfs * s * s);
            let newton = 1.0 / w_next;
            let next = if dfs.is_finite() && dfs < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let done = (next - s).abs() <= 2.0 * f64::EPSILON * s || hi - lo <= 2.0 * f64::EPSILON * s;
            s = next;
            if done {
                break;
            }
        }
        let residual = f(s);
        // Near s = 1 with ε = 0 the slope blows up and no f64 reaches the
        // absolute target; accept a root resolved to a few ulps of s.
        let ulp_floor = 8.0 * f64::EPSILON * s * (s * psi_gap(r, re, s)).abs();
        if residual.abs() > self.root_tol.max(ulp_floor) || !s.is_finite() {
            return Err(FoliationError::NoConvergence { r, depth, residual });
        }
        Ok(s)
    }

    /// Leaf coordinate `u(p)` with its branch.
    pub fn solve_u(&self, p: &Point) -> Result<LeafPoint, FoliationError> {
        let r = p.radius();
        if !(r < 1.0 && p.t > self.t_eps()) {
            return Err(FoliationError::OutsideCylinder { r, t: p.t, t_eps: self.t_eps() });
        }
        let top = phi_unchecked(r);
        let (s, branch) = if (p.t - top).abs() <= BOUNDARY_SLAB {
            (1.0, Branch::Boundary)
        } else if p.t > top {
            (top - p.t + 1.0, Branch::Outer)
        } else {
            (self.solve_inner(r, top - p.t)?, Branch::Inner)
        };
        Ok(LeafPoint { point: p.clone(), s, branch })
    }

    /// Height of the inner leaf `Σ_s` over radius `r`:
    /// `t = t_ε + s²(φ(r/s) − φ(r_ε/s))`.
    pub fn leaf_graph(&self, s: f64, r: f64) -> Result<f64, FoliationError> {
        self.check_leaf_args(r, s)?;
        Ok(self.t_eps() + s * s * phi_gap(r, self.r_eps(), s))
    }

    /// Depth `φ(r) − t` of the inner leaf `Σ_s` below `∂E` at radius `r`.
    pub fn leaf_depth(&self, s: f64, r: f64) -> Result<f64, FoliationError> {
        self.check_leaf_args(r, s)?;
        let re = self.r_eps();
        Ok(phi_gap(r, re, 1.0) - s * s * phi_gap(r, re, s))
    }

    /// The calibration field `X = −∇_H u/|∇_H u|`:
    /// `a_i = x_i/s + y_i √(s²−r²)/(rs)`, `b_i = y_i/s − x_i √(s²−r²)/(rs)`,
    /// with `s = 1` above `∂E`.
    pub fn calibration_x(&self, p: &Point) -> Result<HorizontalVector, FoliationError> {
        let leaf = self.solve_u(p)?;
        let r = p.radius();
        if r < AXIS_EXCLUSION {
            return Err(FoliationError::OnAxis(r));
        }
        let s = leaf.s.max(1.0);
        let w = ((s - r) * (s + r)).sqrt() / (r * s);
        Ok(HorizontalVector {
            a: p.x.iter().zip(&p.y).map(|(x, y)| x / s + y * w).collect(),
            b: p.x.iter().zip(&p.y).map(|(x, y)| y / s - x * w).collect(),
        })
    }

    /// H-mean curvature of the leaf through `p`: `1/s` inside `E`, `1` outside.
    pub fn leaf_curvature(&self, p: &Point) -> Result<f64, FoliationError> {
        let r = p.radius();
        let leaf = self.solve_u(p)?;
        if r < AXIS_EXCLUSION {
            return Err(FoliationError::OnAxis(r));
        }
        Ok(match leaf.branch {
            Branch::Inner => 1.0 / leaf.s,
            Branch::Outer | Branch::Boundary => 1.0,
        })
    }

    /// Closed-form Euclidean gradient of `u` (implicit differentiation of
    /// `F_ε` inside `E`, direct differentiation outside).
    pub fn grad_u(&self, p: &Point) -> Result<EuclideanGradient, FoliationError> {
        let leaf = self.solve_u(p)?;
        let r = p.radius();
        let (radial, dt) = match leaf.branch {
            Branch::Inner => {
                let s = leaf.s;
                let d = psi_gap(r, self.r_eps(), s);
                let dt = 1.0 / (s * d);
                // ∂_{x_i} u = x_i · 2r/√(s²−r²) · ∂_t u
                (2.0 * r / ((s - r) * (s + r)).sqrt() * dt, dt)
            }
            Branch::Outer | Branch::Boundary => {
                // φ'(r)/r = −2r/√(1−r²)
                (-2.0 * r / ((1.0 - r) * (1.0 + r)).sqrt(), -1.0)
            }
        };
        Ok(EuclideanGradient {
            dx: p.x.iter().map(|x| radial * x).collect(),
            dy: p.y.iter().map(|y| radial * y).collect(),
            dt,
        })
    }

    /// Closed-form `|∇_H u|²`; inside `E` it equals
    /// `4r²/((s²−r²)(ψ(r/s) − ψ(r_ε/s))²)`.
    pub fn horizontal_gradient_norm_sq(&self, p: &Point) -> Result<f64, FoliationError> {
        let leaf = self.solve_u(p)?;
        let r = p.radius();
        Ok(match leaf.branch {
            Branch::Inner => {
                let s = leaf.s;
                let d = psi_gap(r, self.r_eps(), s);
                4.0 * r * r / ((s - r) * (s + r) * d * d)
            }
            Branch::Outer | Branch::Boundary => 4.0 * r * r / ((1.0 - r) * (1.0 + r)),
        })
    }

    fn check_fz(&self, t: f64, r: f64) -> Result<(), FoliationError> {
        if !(0.0..self.r_eps()).contains(&r) {
            return Err(FoliationError::Collar { r, r_eps: self.r_eps() });
        }
        let room = phi_unchecked(r) - self.t_eps();
        if !(0.0..room).contains(&t) {
            return Err(FoliationError::Domain {
                what: "f_z depth",
                detail: format!("t = {t} must lie in [0, φ(r) − t_ε = {room})"),
            });
        }
        Ok(())
    }

    /// `f_z(t) = u(z, φ(|z|) − t)` for `|z| = r`; equals `1` at `t = 0` and
    /// increases with `t`.
    pub fn f_z(&self, t: f64, r: f64) -> Result<f64, FoliationError> {
        self.check_fz(t, r)?;
        if t == 0.0 {
            return Ok(1.0);
        }
        self.solve_inner(r, t)
    }

    /// `f_z'(t) = 1/(f(ψ(r_ε/f) − ψ(r/f)))`.
    pub fn f_z_derivative(&self, t: f64, r: f64) -> Result<f64, FoliationError> {
        let f = self.f_z(t, r)?;
        Ok(-1.0 / (f * psi_gap(r, self.r_eps(), f)))
    }

    /// Certified lower bound for `1 − H` at a point of `C_ε`: the depth bound
    /// inside `E`, zero above it.
    pub fn gap_bound_at(&self, p: &Point) -> Result<f64, FoliationError> {
        let leaf = self.solve_u(p)?;
        Ok(match leaf.branch {
            Branch::Inner => curvature_gap_bound(phi_unchecked(p.radius()) - p.t, self.eps()),
            Branch::Outer | Branch::Boundary => 0.0,
        })
    }

    /// `u` as a scalar field on `C_ε`.
    pub fn u_field(&self) -> ScalarField<'static> {
        let ctx = *self;
        let params = self.params;
        ScalarField::new(move |p: &Point| ctx.solve_u(p).map(|l| l.s).unwrap_or(f64::NAN))
            .with_domain(move |p: &Point| params.contains(p))
    }

    /// `X` as a vector field on `C_ε` minus the axis.
    pub fn x_field(&self) -> VectorField<'static> {
        let ctx = *self;
        let params = self.params;
        VectorField::new(move |p: &Point| {
            ctx.calibration_x(p).unwrap_or_else(|_| HorizontalVector {
                a: vec![f64::NAN; p.dim()],
                b: vec![f64::NAN; p.dim()],
            })
        })
        .with_domain(move |p: &Point| params.contains(p) && p.radius() >= AXIS_EXCLUSION)
    }
}

/// Lower bound for `1 − 1/f_z(t)`: `t²/20` when `ε = 0`, `(√ε/4)·t` otherwise.
pub fn curvature_gap_bound(t: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        t * t / 20.0
    } else {
        0.25 * eps.sqrt() * t
    }
}

/// Lower bound on `f_z(t)` used to derive [`curvature_gap_bound`]:
/// `1 + t²/16` when `ε = 0`, `1 + t√ε/2` otherwise.
pub fn leaf_growth_bound(t: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        1.0 + t * t / 16.0
    } else {
        1.0 + 0.5 * t * eps.sqrt()
    }
}

/// Both sides of `s(ψ(r_ε/s) − π) ≤ 2/√(s − r_ε)` for `s > 1`.
pub fn pop_bound_check(s: f64, eps: f64) -> Result<(f64, f64), FoliationError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(GeometryError::BadEpsilon(eps).into());
    }
    if !(s > 1.0) {
        return Err(FoliationError::Domain { what: "leaf parameter", detail: format!("s = {s} must be > 1") });
    }
    let re = 1.0 - eps;
    let lhs = s * psi_gap(re, 0.0, s);
    let rhs = 2.0 / (s - re).sqrt();
    Ok((lhs, rhs))
}

/// Both sides of the Gauss–Green identity for `X` on `E ∩ C_ε`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GaussGreen {
    /// `∫_{E∩C_ε} div_H X = 2n·ω_{2n} ∫_0^{r_ε} ∫_{t_ε}^{φ(r)} (2n/u) dt r^{2n−1} dr`.
    pub bulk: f64,
    /// Flux through the top cap `{t = φ(|z|), |z| < r_ε}`, where `X = ν_E`.
    pub cap_flux: f64,
    /// Flux through the bottom disk `{t = t_ε}`. There `s → ∞`, so
    /// `⟨X, ν⟩ → −2|z|` per unit area.
    pub bottom_flux: f64,
}

impl GaussGreen {
    pub fn boundary(&self) -> f64 {
        self.cap_flux + self.bottom_flux
    }

    pub fn relative_mismatch(&self) -> f64 {
        (self.bulk - self.boundary()).abs() / self.bulk.abs()
    }
}

pub fn gauss_green(ctx: &FoliationContext, tol: f64) -> Result<GaussGreen, FoliationError> {
    use crate::pansu::omega_2n;
    use crate::quadrature::{integrate, integrate_radial, QuadratureConfig};
    use std::cell::RefCell;

    let n = ctx.n();
    let nf = n as f64;
    let area = 2.0 * nf * omega_2n(n);
    let re = ctx.r_eps();
    let m = 2 * n as i32;
    let cfg = QuadratureConfig::with_abs_tol(tol / area);
    let failure = RefCell::new(None);
    let bulk = integrate(
        |r| {
            let room = phi_unchecked(r) - ctx.t_eps();
            let inner = integrate(
                |tau| match ctx.f_z(tau, r) {
                    Ok(s) => 2.0 * nf / s,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                },
                0.0,
                room,
                &cfg,
            );
            match inner {
                Ok(q) => q.value * r.powi(m - 1),
                Err(_) => f64::NAN,
            }
        },
        0.0,
        re,
        &cfg,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let bulk = area * bulk.map_err(GeometryError::from)?.value;
    let cap = integrate_radial(|s, _c| 2.0 * s.powi(m), 0.0, re, &cfg).map_err(GeometryError::from)?;
    let bottom = -area * 2.0 * re.powi(m + 1) / (m as f64 + 1.0);
    Ok(GaussGreen { bulk, cap_flux: area * cap.value, bottom_flux: bottom })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::{horizontal_divergence_fd, horizontal_gradient_fd};
    use crate::profile::{phi, psi};
    use std::f64::consts::PI;

    fn ctx(n: usize, eps: f64) -> FoliationContext {
        FoliationContext::new(n, eps).unwrap()
    }

    /// Plain bisection on the textbook formula of `F_ε`; used only here as an
    /// independent oracle for the solver.
    fn bisect_oracle(r: f64, t: f64, eps: f64) -> f64 {
        let re = 1.0 - eps;
        let te = phi(re).unwrap();
        let f = |s: f64| s * s * (phi(r / s).unwrap() - phi(re / s).unwrap()) + te - t;
        let (mut lo, mut hi) = (1.0 + 1e-15, 2.0);
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    // Frozen from `bisect_oracle(0.3, 0.8, 0.0)`.
    const GOLDEN_S_03_08: f64 = 1.156_623_413_814_837_2;

    #[test]
    fn golden_root_n1_eps0() {
        let oracle = bisect_oracle(0.3, 0.8, 0.0);
        assert!((oracle - GOLDEN_S_03_08).abs() < 1e-12, "{oracle:.17}");
        let c = ctx(1, 0.0);
        let leaf = c.solve_u(&Point::on_axis_x1(1, 0.3, 0.8)).unwrap();
        assert_eq!(leaf.branch, Branch::Inner);
        assert!((leaf.s - GOLDEN_S_03_08).abs() < 1e-12);
    }

    #[test]
    fn solver_agrees_with_bisection_oracle() {
        for &eps in &[0.0, 0.1, 0.5] {
            let c = ctx(1, eps);
            for i in 1..10 {
                let r = c.r_eps() * i as f64 / 10.0;
                for j in 1..10 {
                    let t = c.t_eps() + (phi(r).unwrap() - c.t_eps()) * j as f64 / 10.0;
                    let s = c.solve_u(&Point::on_axis_x1(1, r, t)).unwrap().s;
                    let want = bisect_oracle(r, t, eps);
                    assert!((s - want).abs() < 1e-9 * want, "eps {eps} r {r} t {t}: {s} vs {want}");
                }
            }
        }
    }

    #[test]
    fn f_eps_limits() {
        let c = ctx(1, 0.2);
        let (r, t) = (0.3, 1.0);
        let near_one = c.f_eps(r, t, 1.0 + 1e-12).unwrap();
        assert!((near_one - (phi(r).unwrap() - t)).abs() < 1e-9);
        let far = c.f_eps(r, t, 1e7).unwrap();
        assert!((far - (c.t_eps() - t)).abs() < 1e-7);
        assert!(c.f_eps(r, t, 1.0).is_err());
        assert!(c.f_eps(0.9, t, 2.0).is_err());
    }

    #[test]
    fn ds_f_eps_matches_differences() {
        for &eps in &[0.0, 0.3] {
            let c = ctx(1, eps);
            for &(r, s) in &[(0.2, 1.5), (0.5, 3.0), (0.6, 1.1), (0.0, 10.0)] {
                let h = 1e-5 * s;
                let fd = (c.f_eps(r, 0.7, s + h).unwrap() - c.f_eps(r, 0.7, s - h).unwrap()) / (2.0 * h);
                let exact = c.ds_f_eps(r, s).unwrap();
                assert!(exact < 0.0);
                assert!((fd - exact).abs() < 1e-7 * exact.abs().max(1.0), "{fd} vs {exact}");
                let direct = s * (psi(r / s).unwrap() - psi(c.r_eps() / s).unwrap());
                assert!((direct - exact).abs() < 1e-12 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn branches() {
        let c = ctx(1, 0.0);
        let r = 0.4;
        let top = phi(r).unwrap();
        let on = c.solve_u(&Point::on_axis_x1(1, r, top)).unwrap();
        assert_eq!((on.s, on.branch), (1.0, Branch::Boundary));
        let above = c.solve_u(&Point::on_axis_x1(1, r, top + 0.25)).unwrap();
        assert_eq!(above.branch, Branch::Outer);
        assert_eq!(above.s, top - (top + 0.25) + 1.0);
        assert!(matches!(
            c.solve_u(&Point::on_axis_x1(1, r, -0.1)),
            Err(FoliationError::OutsideCylinder { .. })
        ));
        assert!(matches!(
            c.solve_u(&Point::on_axis_x1(1, 1.0, 0.5)),
            Err(FoliationError::OutsideCylinder { .. })
        ));
    }

    #[test]
    fn leaf_graph_properties() {
        for &eps in &[0.0, 0.25] {
            let c = ctx(1, eps);
            for &s in &[1.001, 1.5, 7.0, 50.0] {
                assert!((c.leaf_graph(s, c.r_eps()).unwrap() - c.t_eps()).abs() < 1e-15);
                let r = 0.37 * c.r_eps();
                let t = c.leaf_graph(s, r).unwrap();
                assert!(c.f_eps(r, t, s).unwrap().abs() < 1e-14);
                let back = c.solve_u(&Point::on_axis_x1(1, r, t)).unwrap().s;
                assert!((back - s).abs() < 1e-9 * s);
            }
            // Continuity at the boundary leaf; for ε = 0 the approach is like √(s − 1).
            let r = 0.5 * c.r_eps();
            let gaps: Vec<f64> = [1e-4, 1e-8, 1e-12]
                .iter()
                .map(|d| (c.leaf_graph(1.0 + d, r).unwrap() - phi(r).unwrap()).abs())
                .collect();
            assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-5, "{gaps:?}");
        }
        assert!(ctx(1, 0.5).leaf_graph(2.0, 0.6).is_err());
        assert!(ctx(1, 0.5).leaf_graph(0.9, 0.1).is_err());
    }

    #[test]
    fn calibration_is_unit_and_matches_boundary_normal() {
        let c = ctx(2, 0.1);
        let dir = [0.3, -0.5, 0.7, 0.2];
        for &r in &[0.1, 0.5, 0.85] {
            let top = phi(r).unwrap();
            for &t in &[c.t_eps() + 0.01, 0.5 * (top + c.t_eps()), top - 1e-9, top, top + 0.3] {
                let p = Point::along(&dir, r, t);
                let x = c.calibration_x(&p).unwrap();
                assert!((x.norm() - 1.0).abs() < 1e-12);
            }
            // On ∂E the field is −ν_E with ν_E = ∇_H(φ(|z|) − t)/|…|.
            let p = Point::along(&dir, r, top);
            let x = c.calibration_x(&p).unwrap();
            let g = c.grad_u(&p).unwrap().horizontal(&p);
            let norm = g.norm();
            for j in 0..2 {
                assert!((x.a[j] + g.a[j] / norm).abs() < 1e-12);
                assert!((x.b[j] + g.b[j] / norm).abs() < 1e-12);
            }
            // Inner limit approaches the outer value.
            let below = c.calibration_x(&Point::along(&dir, r, top - 1e-10)).unwrap();
            assert!(below.max_abs_diff(&x) < 1e-4);
        }
        assert!(matches!(
            c.calibration_x(&Point::along(&dir, 1e-10, 1.0)),
            Err(FoliationError::OnAxis(_))
        ));
    }

    #[test]
    fn curvature_values() {
        let c = ctx(1, 0.0);
        let r = 0.45;
        assert_eq!(c.leaf_curvature(&Point::on_axis_x1(1, r, phi(r).unwrap())).unwrap(), 1.0);
        let t = c.leaf_graph(2.0, r).unwrap();
        assert!((c.leaf_curvature(&Point::on_axis_x1(1, r, t)).unwrap() - 0.5).abs() < 1e-10);
        assert_eq!(c.leaf_curvature(&Point::on_axis_x1(1, r, 2.0)).unwrap(), 1.0);
    }

    #[test]
    fn fd_divergence_reproduces_curvature() {
        for &(n, eps) in &[(1usize, 0.0), (2, 0.3)] {
            let c = ctx(n, eps);
            let field = c.x_field();
            let dir: Vec<f64> = (0..2 * n).map(|k| 1.0 + k as f64).collect();
            for &fr in &[0.2, 0.5, 0.8] {
                let r = fr * c.r_eps();
                for &ft in &[0.2, 0.5, 0.8] {
                    let t = c.t_eps() + (phi(r).unwrap() - c.t_eps()) * ft;
                    let p = Point::along(&dir, r, t);
                    let div = horizontal_divergence_fd(&field, &p, 1e-5).unwrap();
                    let h = c.leaf_curvature(&p).unwrap();
                    assert!((div / (2 * n) as f64 - h).abs() < 1e-6, "n {n} eps {eps} r {r} t {t}");
                }
            }
        }
    }

    #[test]
    fn closed_form_gradient_matches_differences() {
        let c = ctx(1, 0.0);
        let u = c.u_field();
        for &(r, ft) in &[(0.3, 0.4), (0.6, 0.7), (0.5, 1.3)] {
            let t = phi(r).unwrap() * ft;
            let p = Point::along(&[0.6, 0.8], r, t);
            let fd = horizontal_gradient_fd(&u, &p, 1e-5).unwrap();
            let exact = c.grad_u(&p).unwrap().horizontal(&p);
            assert!(fd.max_abs_diff(&exact) < 1e-6 * exact.norm().max(1.0), "{fd:?} {exact:?}");
            let nsq = c.horizontal_gradient_norm_sq(&p).unwrap();
            assert!((fd.norm_sq() - nsq).abs() < 1e-6 * nsq);
            // ∂_t u by differences of solve_u, and the x/t proportionality.
            let h = 1e-6;
            let up = c.solve_u(&Point::along(&[0.6, 0.8], r, t + h)).unwrap().s;
            let dn = c.solve_u(&Point::along(&[0.6, 0.8], r, t - h)).unwrap().s;
            let g = c.grad_u(&p).unwrap();
            assert!(((up - dn) / (2.0 * h) - g.dt).abs() < 1e-5 * g.dt.abs().max(1.0));
            if ft < 1.0 {
                let s = c.solve_u(&p).unwrap().s;
                let ratio = 2.0 * p.x[0] * r / (s * s - r * r).sqrt() * g.dt;
                assert!((g.dx[0] - ratio).abs() < 1e-12 * ratio.abs().max(1.0));
            }
        }
    }

    #[test]
    fn f_z_basics() {
        for &eps in &[0.0, 0.2] {
            let c = ctx(1, eps);
            let r = 0.4 * c.r_eps();
            assert_eq!(c.f_z(0.0, r).unwrap(), 1.0);
            let room = phi(r).unwrap() - c.t_eps();
            let mut prev = 1.0;
            for k in 1..50 {
                let t = room * k as f64 / 50.0;
                let f = c.f_z(t, r).unwrap();
                assert!(f > prev);
                assert!(f >= leaf_growth_bound(t, eps));
                assert!(1.0 - 1.0 / f >= curvature_gap_bound(t, eps));
                prev = f;
            }
            assert!(c.f_z(room, r).is_err());
            assert!(c.f_z(-0.1, r).is_err());
        }
    }

    #[test]
    fn f_z_solves_its_ode() {
        let c = ctx(1, 0.1);
        let r = 0.35;
        let (t, h) = (0.3, 1e-5);
        let fd = (c.f_z(t + h, r).unwrap() - c.f_z(t - h, r).unwrap()) / (2.0 * h);
        let exact = c.f_z_derivative(t, r).unwrap();
        assert!((fd - exact).abs() < 1e-7 * exact.abs());
    }

    #[test]
    fn gap_bound_constants() {
        assert_eq!(curvature_gap_bound(0.0, 0.0), 0.0);
        assert_eq!(curvature_gap_bound(0.0, 0.3), 0.0);
        assert_eq!(curvature_gap_bound(1.0, 0.0), 0.05);
        assert_eq!(curvature_gap_bound(1.0, 0.25), 0.125);
        let c = ctx(1, 0.0);
        assert_eq!(c.gap_bound_at(&Point::on_axis_x1(1, 0.5, 1.6)).unwrap(), 0.0);
    }

    #[test]
    fn pop_bound_values() {
        let (lhs, rhs) = pop_bound_check(2.0, 0.0).unwrap();
        let psi_half = 2.0 * (0.5 / 0.75f64.sqrt() + 0.5f64.acos());
        assert!((lhs - 2.0 * (psi_half - PI)).abs() < 1e-13);
        assert!((lhs - 0.214_9).abs() < 1e-3);
        assert_eq!(rhs, 2.0);
        let (lhs, rhs) = pop_bound_check(1e6, 0.1).unwrap();
        assert!(lhs < 1e-5 && rhs < 1e-2 && lhs <= rhs);
        assert!(pop_bound_check(1.0, 0.0).is_err());
        assert!(pop_bound_check(2.0, 1.0).is_err());
    }

    #[test]
    fn gauss_green_n1_eps0() {
        // Boundary side in closed form: π² − 4π/3.
        let gg = gauss_green(&ctx(1, 0.0), 1e-8).unwrap();
        assert!((gg.boundary() - (PI * PI - 4.0 * PI / 3.0)).abs() < 1e-8);
        assert!(gg.relative_mismatch() < 1e-6, "{gg:?}");
    }
}
