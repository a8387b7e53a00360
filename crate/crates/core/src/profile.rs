//! Profile of the Pansu sphere, `φ(r) = arccos r + r√(1−r²)`, its
//! derivatives, and `ψ(r) = 2φ(r) − rφ'(r)`.
//!
//! Besides the pointwise closed forms this module provides differences
//! `φ(c₁/s) − φ(c₂/s)` and `ψ(c₁/s) − ψ(c₂/s)` that stay accurate to a few
//! ulps of the *difference*, which the leaf solver needs when the two
//! arguments are close (`r → r_ε`) or both small (`s → ∞`).

use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("radius {r} outside the domain [0, 1] of `{func}`")]
    OutOfDomain { func: &'static str, r: f64 },
}

fn check(func: &'static str, r: f64) -> Result<(), ProfileError> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(ProfileError::OutOfDomain { func, r })
    }
}

/// `√(1−r²)` computed as `√((1−r)(1+r))`.
#[inline]
pub(crate) fn cosine_of(r: f64) -> f64 {
    ((1.0 - r) * (1.0 + r)).sqrt()
}

#[inline]
pub(crate) fn phi_unchecked(r: f64) -> f64 {
    r.acos() + r * cosine_of(r)
}

#[inline]
pub(crate) fn phi_prime_unchecked(r: f64) -> f64 {
    let c = cosine_of(r);
    if c == 0.0 {
        return f64::NEG_INFINITY;
    }
    -2.0 * r * r / c
}

#[inline]
pub(crate) fn psi_unchecked(r: f64) -> f64 {
    let c = cosine_of(r);
    if c == 0.0 {
        return f64::INFINITY;
    }
    2.0 * (r / c + r.acos())
}

#[inline]
pub(crate) fn psi_prime_unchecked(r: f64) -> f64 {
    let c = cosine_of(r);
    if c == 0.0 {
        return f64::INFINITY;
    }
    2.0 * r * r / (c * c * c)
}

/// `φ(r)`, defined on `[0, 1]`; `φ(0) = π/2`, `φ(1) = 0`.
pub fn phi(r: f64) -> Result<f64, ProfileError> {
    check("phi", r)?;
    Ok(phi_unchecked(r))
}

/// `φ'(r) = −2r²/√(1−r²)`; `−∞` at `r = 1`.
pub fn phi_prime(r: f64) -> Result<f64, ProfileError> {
    check("phi_prime", r)?;
    Ok(phi_prime_unchecked(r))
}

/// `φ''(r) = 2r(r²−2)/(1−r²)^{3/2}`; `−∞` at `r = 1`.
pub fn phi_second(r: f64) -> Result<f64, ProfileError> {
    check("phi_second", r)?;
    let c = cosine_of(r);
    if c == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(2.0 * r * (r * r - 2.0) / (c * c * c))
}

/// `ψ(r) = 2(r/√(1−r²) + arccos r)`; `+∞` at `r = 1`.
pub fn psi(r: f64) -> Result<f64, ProfileError> {
    check("psi", r)?;
    Ok(psi_unchecked(r))
}

/// `ψ'(r) = 2r²/(1−r²)^{3/2}`; `+∞` at `r = 1`.
pub fn psi_prime(r: f64) -> Result<f64, ProfileError> {
    check("psi_prime", r)?;
    Ok(psi_prime_unchecked(r))
}

/// `x − sin x` without cancellation for small `|x|`.
pub(crate) fn x_minus_sin(x: f64) -> f64 {
    if x.abs() >= 0.5 {
        return x - x.sin();
    }
    // x³/3! − x⁵/5! + x⁷/7! − …
    let x2 = x * x;
    let mut term = x * x2 / 6.0;
    let mut sum = term;
    let mut k = 2.0;
    while term.abs() > 1e-17 * sum.abs() {
        term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term;
        k += 1.0;
    }
    sum
}

/// Angles `θ = arcsin(c/s)` of two scaled radii, kept together with their
/// sines and cosines. Cosines are formed as `√((s−c)(s+c))/s`, which is
/// exact-ish even when `c/s` is close to one.
struct AnglePair {
    cos_a: f64,
    cos_b: f64,
    /// `θ_a − θ_b`
    delta: f64,
    sin_delta: f64,
    /// `θ_a + θ_b`
    sigma: f64,
}

impl AnglePair {
    fn new(ca: f64, cb: f64, s: f64) -> Self {
        debug_assert!(s > 0.0 && (0.0..=s).contains(&ca) && (0.0..=s).contains(&cb));
        let sin_a = ca / s;
        let sin_b = cb / s;
        let cos_a = ((s - ca) * (s + ca)).sqrt() / s;
        let cos_b = ((s - cb) * (s + cb)).sqrt() / s;
        let theta_a = ca.atan2(((s - ca) * (s + ca)).sqrt());
        let theta_b = cb.atan2(((s - cb) * (s + cb)).sqrt());
        // sin(θa − θb) = (a² − b²)/(a cos θb + b cos θa), free of cancellation.
        let denom = sin_a * cos_b + sin_b * cos_a;
        let sin_delta = if denom > 0.0 {
            ((ca - cb) / s) * ((ca + cb) / s) / denom
        } else {
            0.0
        };
        let cos_delta = cos_a * cos_b + sin_a * sin_b;
        Self {
            cos_a,
            cos_b,
            delta: sin_delta.atan2(cos_delta),
            sin_delta,
            sigma: theta_a + theta_b,
        }
    }
}

/// `φ(c_a/s) − φ(c_b/s)` for `0 ≤ c_a, c_b ≤ s`.
///
/// With `θ = arcsin x` one has `φ = π/2 − (2θ − sin 2θ)/2`, which turns the
/// difference into a sum of same-signed terms.
pub fn phi_gap(ca: f64, cb: f64, s: f64) -> f64 {
    if ca == cb {
        return 0.0;
    }
    let ang = AnglePair::new(ca, cb, s);
    let half_sigma = (0.5 * ang.sigma).sin();
    -x_minus_sin(ang.delta) - 2.0 * ang.sin_delta * half_sigma * half_sigma
}

/// `ψ(c_a/s) − ψ(c_b/s)` for `0 ≤ c_a, c_b < s`.
///
/// Uses `ψ = 2(tan θ + π/2 − θ)` and
/// `tan θ_a − tan θ_b − δ = sin δ (sin²(δ/2) + sin²(σ/2))/(cos θ_a cos θ_b) − (δ − sin δ)`.
pub fn psi_gap(ca: f64, cb: f64, s: f64) -> f64 {
    if ca == cb {
        return 0.0;
    }
    let ang = AnglePair::new(ca, cb, s);
    let cc = ang.cos_a * ang.cos_b;
    if cc == 0.0 {
        return if ang.cos_a == 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    let hd = (0.5 * ang.delta).sin();
    let hs = (0.5 * ang.sigma).sin();
    2.0 * (ang.sin_delta * (hd * hd + hs * hs) / cc - x_minus_sin(ang.delta))
}

/// `ψ(x) − π`, nonnegative on `[0, 1)`.
pub fn psi_minus_pi(x: f64) -> f64 {
    psi_gap(x, 0.0, 1.0)
}

/// Value of `φ` at the top pole, `φ(0) = π/2`, and of `ψ(0) = π`.
pub const PHI_AT_AXIS: f64 = FRAC_PI_2;
pub const PSI_AT_AXIS: f64 = PI;
