//! Radial coefficient families for a, b and V, their analytic derivatives,
//! grid bounds, and the plus-part operator.

use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, RadialGrid, ScalarField};

/// Shape of a radial coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Constant { value: f64 },
    /// base + amp·tanh((r − center)/width)
    TanhBump { base: f64, amp: f64, center: f64, width: f64 },
    /// base + amp·exp(−(r − center)²/width²)
    GaussianBump { base: f64, amp: f64, center: f64, width: f64 },
}

/// Multiplicative modulation `m(t) = 1 + eps·sin(omega·t)` of the bump amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulation {
    pub eps: f64,
    pub omega: f64,
}

impl Modulation {
    fn factor(&self, t: f64) -> f64 {
        1.0 + self.eps * (self.omega * t).sin()
    }

    fn rate(&self, t: f64) -> f64 {
        self.eps * self.omega * (self.omega * t).cos()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientProfile {
    pub family: Family,
    pub modulation: Option<Modulation>,
}

impl CoefficientProfile {
    pub fn constant(value: f64) -> Self {
        Self { family: Family::Constant { value }, modulation: None }
    }

    pub fn tanh_bump(base: f64, amp: f64, center: f64, width: f64) -> Self {
        Self { family: Family::TanhBump { base, amp, center, width }, modulation: None }
    }

    pub fn gaussian_bump(base: f64, amp: f64, center: f64, width: f64) -> Self {
        Self { family: Family::GaussianBump { base, amp, center, width }, modulation: None }
    }

    pub fn modulated(mut self, eps: f64, omega: f64) -> Self {
        self.modulation = Some(Modulation { eps, omega });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.family {
            Family::Constant { value } => value.is_finite(),
            Family::TanhBump { base, amp, center, width }
            | Family::GaussianBump { base, amp, center, width } => {
                base.is_finite() && amp.is_finite() && center.is_finite() && width.is_finite() && width > 0.0
            }
        };
        let mod_ok = self.modulation.map_or(true, |m| m.eps.is_finite() && m.omega.is_finite());
        if ok && mod_ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad coefficient parameters: {self:?}")))
        }
    }

    pub fn is_constant(&self) -> bool {
        match self.family {
            Family::Constant { .. } => true,
            Family::TanhBump { amp, .. } | Family::GaussianBump { amp, .. } => amp == 0.0,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.is_constant() && self.modulation.is_some_and(|m| m.eps != 0.0)
    }

    /// Same profile with the bump amplitude multiplied by `theta`.
    pub fn with_amplitude_scale(&self, theta: f64) -> Self {
        let family = match self.family {
            Family::Constant { value } => Family::Constant { value },
            Family::TanhBump { base, amp, center, width } => {
                Family::TanhBump { base, amp: amp * theta, center, width }
            }
            Family::GaussianBump { base, amp, center, width } => {
                Family::GaussianBump { base, amp: amp * theta, center, width }
            }
        };
        Self { family, modulation: self.modulation }
    }

    /// (base, amp, shape, shape', shape'') at r.
    fn parts(&self, r: f64) -> (f64, f64, f64, f64, f64) {
        match self.family {
            Family::Constant { value } => (value, 0.0, 0.0, 0.0, 0.0),
            Family::TanhBump { base, amp, center, width } => {
                let z = (r - center) / width;
                let th = z.tanh();
                let sech2 = 1.0 - th * th;
                (base, amp, th, sech2 / width, -2.0 * th * sech2 / (width * width))
            }
            Family::GaussianBump { base, amp, center, width } => {
                let z = (r - center) / width;
                let g = (-z * z).exp();
                (base, amp, g, -2.0 * z / width * g, (4.0 * z * z - 2.0) / (width * width) * g)
            }
        }
    }

    fn factor(&self, t: f64) -> f64 {
        self.modulation.map_or(1.0, |m| m.factor(t))
    }

    pub fn value(&self, r: f64, t: f64) -> f64 {
        let (base, amp, g, _, _) = self.parts(r);
        base + amp * self.factor(t) * g
    }

    pub fn dr(&self, r: f64, t: f64) -> f64 {
        let (_, amp, _, g1, _) = self.parts(r);
        amp * self.factor(t) * g1
    }

    pub fn drr(&self, r: f64, t: f64) -> f64 {
        let (_, amp, _, _, g2) = self.parts(r);
        amp * self.factor(t) * g2
    }

    pub fn dt(&self, r: f64, t: f64) -> f64 {
        match self.modulation {
            None => 0.0,
            Some(m) => {
                let (_, amp, g, _, _) = self.parts(r);
                amp * g * m.rate(t)
            }
        }
    }

    /// |∇p|² = (∂_r p)² for a radial p.
    pub fn grad_sq(&self, r: f64, t: f64) -> f64 {
        let d = self.dr(r, t);
        d * d
    }

    /// Δp = p'' + (n−1)(ψ'/ψ)p', and n·p''(0) at the pole.
    pub fn laplacian(&self, manifold: &ModelManifold, r: f64, t: f64) -> f64 {
        if r == 0.0 {
            manifold.dim() as f64 * self.drr(0.0, t)
        } else {
            self.drr(r, t) + manifold.distance_laplacian(r) * self.dr(r, t)
        }
    }

    /// Upper bound on |∂_r p(0, t)| over all t. A radial function is C² on
    /// the manifold only if this vanishes.
    pub fn pole_slope(&self) -> f64 {
        let (_, amp, _, g1, _) = self.parts(0.0);
        let m = self.modulation.map_or(1.0, |m| 1.0 + m.eps.abs());
        (amp * g1).abs() * m
    }
}

/// Analytic evaluation of a profile at the grid nodes.
pub fn sample(profile: &CoefficientProfile, grid: &RadialGrid, t: f64) -> Result<ScalarField> {
    profile.validate()?;
    Ok(ScalarField::from_fn(*grid, |r| profile.value(r, t))?.with_time(t))
}

/// sup over the region of max(g, 0).
pub fn plus_part(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(values.iter().copied().fold(0.0, f64::max))
}

/// Time samples at which time-dependent quantities are evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

impl TimeWindow {
    pub fn instant(t: f64) -> Self {
        Self { start: t, end: t, samples: 1 }
    }

    pub fn times(&self) -> Vec<f64> {
        if self.samples <= 1 || self.end == self.start {
            return vec![self.start];
        }
        let dt = (self.end - self.start) / (self.samples - 1) as f64;
        (0..self.samples).map(|j| self.start + j as f64 * dt).collect()
    }
}

/// Grid sup/inf of a profile and its derivatives over `B_p(2R)` × window,
/// each widened by the largest jump between neighbouring samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientBounds {
    pub sup: f64,
    pub inf: f64,
    pub sup_grad_sq: f64,
    pub inf_laplacian: f64,
    pub sup_laplacian: f64,
    pub sup_abs_dt: f64,
}

impl CoefficientBounds {
    pub fn sup_abs(&self) -> f64 {
        self.sup.abs().max(self.inf.abs())
    }

    pub fn sup_grad(&self) -> f64 {
        self.sup_grad_sq.sqrt()
    }

    pub fn sup_abs_laplacian(&self) -> f64 {
        self.sup_laplacian.abs().max(self.inf_laplacian.abs())
    }
}

struct Extremes {
    max: f64,
    min: f64,
    jump: f64,
}

impl Extremes {
    fn of(rows: &[Vec<f64>]) -> Self {
        let mut max = f64::NEG_INFINITY;
        let mut min = f64::INFINITY;
        let mut jump: f64 = 0.0;
        for (j, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                max = max.max(v);
                min = min.min(v);
                if i > 0 {
                    jump = jump.max((v - row[i - 1]).abs());
                }
                if j > 0 {
                    jump = jump.max((v - rows[j - 1][i]).abs());
                }
            }
        }
        Self { max, min, jump }
    }
}

pub fn coefficient_bounds(
    profile: &CoefficientProfile,
    manifold: &ModelManifold,
    grid: &RadialGrid,
    window: TimeWindow,
) -> Result<CoefficientBounds> {
    profile.validate()?;
    grid.check_manifold(manifold)?;
    let times = window.times();
    let rows = |f: &dyn Fn(f64, f64) -> f64| -> Vec<Vec<f64>> {
        times.iter().map(|&t| grid.nodes().map(|r| f(r, t)).collect()).collect()
    };
    let value = Extremes::of(&rows(&|r, t| profile.value(r, t)));
    let grad = Extremes::of(&rows(&|r, t| profile.grad_sq(r, t)));
    let lap = Extremes::of(&rows(&|r, t| profile.laplacian(manifold, r, t)));
    let dt = Extremes::of(&rows(&|r, t| profile.dt(r, t).abs()));
    Ok(CoefficientBounds {
        sup: value.max + value.jump,
        inf: value.min - value.jump,
        sup_grad_sq: grad.max + grad.jump,
        inf_laplacian: lap.min - lap.jump,
        sup_laplacian: lap.max + lap.jump,
        sup_abs_dt: dt.max + dt.jump,
    })
}
