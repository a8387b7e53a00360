//! Heisenberg group `H^n = C^n × R`, its dilations and the horizontal frame
//! `X_j = ∂_{x_j} + 2y_j ∂_t`, `Y_j = ∂_{y_j} − 2x_j ∂_t`.
//!
//! The finite-difference operators here are deliberately generic: they know
//! nothing about the foliation and serve as an independent oracle for the
//! closed forms implemented elsewhere.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeisenbergError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("point must have n >= 1 and matching x/y lengths (got x: {x}, y: {y})")]
    BadShape { x: usize, y: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),
    #[error("finite-difference step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("finite-difference stencil leaves the field domain")]
    StencilOutsideDomain,
}

/// A point `(z, t)` with `z_j = x_j + i y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl Point {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self, HeisenbergError> {
        if x.is_empty() || x.len() != y.len() {
            return Err(HeisenbergError::BadShape { x: x.len(), y: y.len() });
        }
        if !(t.is_finite() && x.iter().chain(y.iter()).all(|v| v.is_finite())) {
            return Err(HeisenbergError::NonFinite);
        }
        Ok(Self { x, y, t })
    }

    pub fn origin(n: usize) -> Self {
        Self { x: vec![0.0; n], y: vec![0.0; n], t: 0.0 }
    }

    /// Point at radius `r` along the first real axis, height `t`.
    pub fn on_axis_x1(n: usize, r: f64, t: f64) -> Self {
        let mut p = Self::origin(n);
        p.x[0] = r;
        p.t = t;
        p
    }

    /// Point at height `t` whose horizontal part is `r·direction`, where
    /// `direction` lists the `2n` components `(x_1..x_n, y_1..y_n)` and is
    /// normalized here.
    pub fn along(direction: &[f64], r: f64, t: f64) -> Self {
        assert!(!direction.is_empty() && direction.len() % 2 == 0);
        let n = direction.len() / 2;
        let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        let scale = r / norm;
        Self {
            x: direction[..n].iter().map(|c| c * scale).collect(),
            y: direction[n..].iter().map(|c| c * scale).collect(),
            t,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `|z|`, the Euclidean norm of the horizontal part.
    pub fn radius(&self) -> f64 {
        self.x
            .iter()
            .chain(self.y.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Point) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.y.iter().zip(&other.y))
            .map(|(a, b)| (a - b).abs())
            .fold((self.t - other.t).abs(), f64::max)
    }
}

/// Horizontal vector `(a_1..a_n, b_1..b_n)` in the frame `X_j, Y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalVector {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl HorizontalVector {
    pub fn zeros(n: usize) -> Self {
        Self { a: vec![0.0; n], b: vec![0.0; n] }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.a.iter().chain(self.b.iter()).map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &HorizontalVector) -> f64 {
        self.a
            .iter()
            .zip(&other.a)
            .chain(self.b.iter().zip(&other.b))
            .map(|(p, q)| p * q)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &HorizontalVector) -> f64 {
        self.a
            .iter()
            .zip(&other.a)
            .chain(self.b.iter().zip(&other.b))
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }
}

type Pred<'a> = Box<dyn Fn(&Point) -> bool + Send + Sync + 'a>;

/// Scalar function on (a subset of) `H^n`.
pub struct ScalarField<'a> {
    eval: Box<dyn Fn(&Point) -> f64 + Send + Sync + 'a>,
    domain: Pred<'a>,
}

impl<'a> ScalarField<'a> {
    pub fn new(eval: impl Fn(&Point) -> f64 + Send + Sync + 'a) -> Self {
        Self { eval: Box::new(eval), domain: Box::new(|_| true) }
    }

    pub fn with_domain(mut self, domain: impl Fn(&Point) -> bool + Send + Sync + 'a) -> Self {
        self.domain = Box::new(domain);
        self
    }

    pub fn contains(&self, p: &Point) -> bool {
        (self.domain)(p)
    }

    pub fn eval(&self, p: &Point) -> Option<f64> {
        self.contains(p).then(|| (self.eval)(p))
    }
}

/// Horizontal vector field on (a subset of) `H^n`.
pub struct VectorField<'a> {
    eval: Box<dyn Fn(&Point) -> HorizontalVector + Send + Sync + 'a>,
    domain: Pred<'a>,
}

impl<'a> VectorField<'a> {
    pub fn new(eval: impl Fn(&Point) -> HorizontalVector + Send + Sync + 'a) -> Self {
        Self { eval: Box::new(eval), domain: Box::new(|_| true) }
    }

    pub fn with_domain(mut self, domain: impl Fn(&Point) -> bool + Send + Sync + 'a) -> Self {
        self.domain = Box::new(domain);
        self
    }

    pub fn contains(&self, p: &Point) -> bool {
        (self.domain)(p)
    }

    pub fn eval(&self, p: &Point) -> Option<HorizontalVector> {
        self.contains(p).then(|| (self.eval)(p))
    }
}

/// `Im⟨z, ζ̄⟩ = Σ_j (y_j ξ_j − x_j η_j)` for `ζ_j = ξ_j + iη_j`.
///
/// This sign is the one for which `X_j, Y_j` are the left-invariant
/// extensions of `∂_{x_j}, ∂_{y_j}`; associativity alone does not fix it.
pub fn symplectic_form(p: &Point, q: &Point) -> f64 {
    p.x.iter()
        .zip(&p.y)
        .zip(q.x.iter().zip(&q.y))
        .map(|((x, y), (xi, eta))| y * xi - x * eta)
        .sum()
}

/// `(z, t) ∗ (ζ, τ) = (z + ζ, t + τ + 2 Im⟨z, ζ̄⟩)`.
pub fn group_product(p: &Point, q: &Point) -> Result<Point, HeisenbergError> {
    if p.dim() != q.dim() {
        return Err(HeisenbergError::DimensionMismatch { left: p.dim(), right: q.dim() });
    }
    Ok(Point {
        x: p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect(),
        y: p.y.iter().zip(&q.y).map(|(a, b)| a + b).collect(),
        t: p.t + q.t + 2.0 * symplectic_form(p, q),
    })
}

pub fn inverse(p: &Point) -> Point {
    Point {
        x: p.x.iter().map(|v| -v).collect(),
        y: p.y.iter().map(|v| -v).collect(),
        t: -p.t,
    }
}

/// Intrinsic dilation `(z, t) ↦ (λz, λ²t)`.
pub fn dilate(p: &Point, lambda: f64) -> Result<Point, HeisenbergError> {
    if !(lambda > 0.0) {
        return Err(HeisenbergError::NonPositiveDilation(lambda));
    }
    Ok(Point {
        x: p.x.iter().map(|v| lambda * v).collect(),
        y: p.y.iter().map(|v| lambda * v).collect(),
        t: lambda * lambda * p.t,
    })
}

/// Direction of a horizontal frame element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameField {
    X(usize),
    Y(usize),
}

/// Moves `p` by time `h` along the flow of a frame field. The flows of
/// `X_j` and `Y_j` are straight lines, so this is exact.
pub fn flow(p: &Point, field: FrameField, h: f64) -> Point {
    let mut q = p.clone();
    match field {
        FrameField::X(j) => {
            q.x[j] += h;
            q.t += 2.0 * p.y[j] * h;
        }
        FrameField::Y(j) => {
            q.y[j] += h;
            q.t -= 2.0 * p.x[j] * h;
        }
    }
    q
}

fn central_difference<T>(
    p: &Point,
    field: FrameField,
    h: f64,
    eval: impl Fn(&Point) -> Option<T>,
    diff: impl Fn(T, T) -> f64,
) -> Result<f64, HeisenbergError> {
    let plus = eval(&flow(p, field, h)).ok_or(HeisenbergError::StencilOutsideDomain)?;
    let minus = eval(&flow(p, field, -h)).ok_or(HeisenbergError::StencilOutsideDomain)?;
    Ok(diff(plus, minus) / (2.0 * h))
}

/// Horizontal gradient `(X_1 f, …, X_n f, Y_1 f, …, Y_n f)` by second-order
/// central differences along the frame flows.
pub fn horizontal_gradient_fd(
    f: &ScalarField<'_>,
    p: &Point,
    h: f64,
) -> Result<HorizontalVector, HeisenbergError> {
    if !(h > 0.0) {
        return Err(HeisenbergError::NonPositiveStep(h));
    }
    let n = p.dim();
    let mut out = HorizontalVector::zeros(n);
    for j in 0..n {
        out.a[j] = central_difference(p, FrameField::X(j), h, |q| f.eval(q), |a, b| a - b)?;
        out.b[j] = central_difference(p, FrameField::Y(j), h, |q| f.eval(q), |a, b| a - b)?;
    }
    Ok(out)
}

/// Horizontal divergence `Σ_j X_j a_j + Y_j b_j` by second-order central
/// differences.
pub fn horizontal_divergence_fd(
    v: &VectorField<'_>,
    p: &Point,
    h: f64,
) -> Result<f64, HeisenbergError> {
    if !(h > 0.0) {
        return Err(HeisenbergError::NonPositiveStep(h));
    }
    let mut div = 0.0;
    for j in 0..p.dim() {
        div += central_difference(p, FrameField::X(j), h, |q| v.eval(q), |a, b| a.a[j] - b.a[j])?;
        div += central_difference(p, FrameField::Y(j), h, |q| v.eval(q), |a, b| a.b[j] - b.b[j])?;
    }
    Ok(div)
}

/// Richardson-extrapolated divergence from steps `h` and `h/2`; also
/// returns the plain estimate at `h` so callers can compare.
pub fn horizontal_divergence_richardson(
    v: &VectorField<'_>,
    p: &Point,
    h: f64,
) -> Result<(f64, f64), HeisenbergError> {
    let coarse = horizontal_divergence_fd(v, p, h)?;
    let fine = horizontal_divergence_fd(v, p, 0.5 * h)?;
    Ok(((4.0 * fine - coarse) / 3.0, coarse))
}
