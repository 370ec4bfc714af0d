//! Li–Yau cutoff `φ(r) = ψ(r/R)` with the cosine-squared transition on
//! `[R, 2R]`, and certification of its gradient and Laplacian bounds.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, RadialGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    radius: f64,
    c1: f64,
    c2: f64,
}

impl CutoffProfile {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    fn phase(&self, r: f64) -> Option<f64> {
        if r <= self.radius || r >= 2.0 * self.radius {
            None
        } else {
            Some(0.5 * PI * (r / self.radius - 1.0))
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.radius {
            1.0
        } else if r >= 2.0 * self.radius {
            0.0
        } else {
            let c = self.phase(r).map_or(0.0, f64::cos);
            c * c
        }
    }

    pub fn d1(&self, r: f64) -> f64 {
        self.phase(r).map_or(0.0, |s| -(PI / self.radius) * s.sin() * s.cos())
    }

    pub fn d2(&self, r: f64) -> f64 {
        self.phase(r)
            .map_or(0.0, |s| -(PI * PI / (2.0 * self.radius * self.radius)) * (2.0 * s).cos())
    }

    /// Δφ = φ'' + (n−1)(ψ'/ψ)φ'; zero on the plateau, including the pole.
    pub fn laplacian(&self, manifold: &ModelManifold, r: f64) -> f64 {
        let d1 = self.d1(r);
        if d1 == 0.0 {
            return self.d2(r);
        }
        self.d2(r) + manifold.distance_laplacian(r) * d1
    }
}

pub fn build_cutoff(radius: f64) -> Result<CutoffProfile> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("cutoff radius must be positive, got {radius}")));
    }
    Ok(CutoffProfile { radius, c1: PI, c2: PI * PI / 2.0 })
}

/// `((n−1)(1+√K·R)C₁² + C₂)/R²`.
pub fn b_constant(n: usize, k: f64, radius: f64, c1: f64, c2: f64) -> Result<f64> {
    if n < 2 || !(k >= 0.0) || !(radius > 0.0) || !k.is_finite() || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("B needs n ≥ 2, K ≥ 0, R > 0 (n={n}, K={k}, R={radius})")));
    }
    Ok(((n as f64 - 1.0) * (1.0 + k.sqrt() * radius) * c1 * c1 + c2) / (radius * radius))
}

/// min over nodes with φ > 0 and r ≤ `limit` of C₁²/R² − (φ')²/φ.
pub fn gradient_margin_within(profile: &CutoffProfile, grid: &RadialGrid, limit: f64) -> Result<f64> {
    let bound = profile.c1 * profile.c1 / (profile.radius * profile.radius);
    let mut margin = f64::INFINITY;
    for r in grid.nodes().filter(|&r| r <= limit) {
        let phi = profile.value(r);
        if phi > 0.0 {
            let d = profile.d1(r);
            margin = margin.min(bound - d * d / phi);
        }
    }
    if margin.is_infinite() {
        return Err(Error::EmptyRegion);
    }
    Ok(margin)
}

/// Gradient condition over the whole ball `B_p(2R)`.
pub fn verify_cutoff_gradient(profile: &CutoffProfile, manifold: &ModelManifold, grid: &RadialGrid) -> Result<f64> {
    grid.check_manifold(manifold)?;
    gradient_margin_within(profile, grid, grid.outer())
}

/// min over nodes of Δφ + B, with Δr taken from the exact warp.
pub fn verify_cutoff_laplacian(
    profile: &CutoffProfile,
    manifold: &ModelManifold,
    grid: &RadialGrid,
    k: f64,
) -> Result<f64> {
    grid.check_manifold(manifold)?;
    let b = b_constant(manifold.dim(), k, profile.radius, profile.c1, profile.c2)?;
    Ok(grid.nodes().map(|r| profile.laplacian(manifold, r) + b).fold(f64::INFINITY, f64::min))
}

/// The rescaled conditions −C₁√ψ ≤ ψ' ≤ 0 and ψ'' ≥ −C₂, returned as the
/// smallest slack over the nodes.
pub fn shape_margin(profile: &CutoffProfile, grid: &RadialGrid) -> f64 {
    let r0 = profile.radius;
    grid.nodes()
        .map(|r| {
            let d1 = profile.d1(r) * r0;
            let d2 = profile.d2(r) * r0 * r0;
            let lower = d1 + profile.c1 * profile.value(r).sqrt();
            lower.min(-d1).min(d2 + profile.c2)
        })
        .fold(f64::INFINITY, f64::min)
}
