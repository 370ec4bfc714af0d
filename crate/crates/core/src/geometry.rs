//! Rotationally symmetric model manifolds `dr² + ψ(r)² g_sphere`, uniform
//! radial grids over `[0, 2R]`, and the radial finite-difference operators
//! (Laplace–Beltrami, gradient, Hessian norm) used by the solvers and checks.
//!
//! All operators act on radial functions. At the pole the even extension
//! `v(-h) = v(h)` is used, which gives `Δv(0) = n·v''(0)` and keeps the
//! stencil second order.

use crate::error::{Error, Result};

/// Smallest node count accepted by the differential operators.
pub const MIN_CELLS: usize = 8;

/// Warping profile ψ of the model metric, as a closed-form family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Warp {
    /// ψ(r) = r.
    Euclidean,
    /// ψ(r) = sinh(√k r)/√k, constant sectional curvature −k.
    Hyperbolic { k: f64 },
    /// ψ(r) = sin(√k r)/√k, constant sectional curvature +k.
    Spherical { k: f64 },
    /// ψ(r) = r + c·r³.
    Cubic { c: f64 },
}

impl Warp {
    /// `(ψ, ψ', ψ'')` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Warp::Euclidean => (r, 1.0, 0.0),
            Warp::Hyperbolic { k } => {
                let s = k.sqrt();
                ((s * r).sinh() / s, (s * r).cosh(), s * (s * r).sinh())
            }
            Warp::Spherical { k } => {
                let s = k.sqrt();
                ((s * r).sin() / s, (s * r).cos(), -s * (s * r).sin())
            }
            Warp::Cubic { c } => (r + c * r * r * r, 1.0 + 3.0 * c * r * r, 6.0 * c * r),
        }
    }

    /// ψ''/ψ, with its pole limit ψ'''(0).
    pub fn curvature_ratio(&self, r: f64) -> f64 {
        match *self {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic { k } => k,
            Warp::Spherical { k } => -k,
            Warp::Cubic { c } => 6.0 * c / (1.0 + c * r * r),
        }
    }

    /// (1 − ψ'²)/ψ², with its pole limit −ψ'''(0).
    pub fn sphere_term(&self, r: f64) -> f64 {
        match *self {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic { k } => -k,
            Warp::Spherical { k } => k,
            Warp::Cubic { c } => {
                let q = 1.0 + c * r * r;
                -(6.0 * c + 9.0 * c * c * r * r) / (q * q)
            }
        }
    }

    /// ψ'/ψ for r > 0. Infinite at the pole.
    pub fn log_derivative(&self, r: f64) -> f64 {
        if r == 0.0 {
            return f64::INFINITY;
        }
        match *self {
            Warp::Euclidean => 1.0 / r,
            Warp::Hyperbolic { k } => {
                let s = k.sqrt();
                s / (s * r).tanh()
            }
            Warp::Spherical { k } => {
                let s = k.sqrt();
                s / (s * r).tan()
            }
            Warp::Cubic { c } => (1.0 + 3.0 * c * r * r) / (r + c * r * r * r),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Warp::Euclidean => "euclidean",
            Warp::Hyperbolic { .. } => "hyperbolic",
            Warp::Spherical { .. } => "spherical",
            Warp::Cubic { .. } => "cubic",
        }
    }

    /// The single family parameter (k or c); 0 for the flat warp.
    pub fn parameter(&self) -> f64 {
        match *self {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic { k } | Warp::Spherical { k } => k,
            Warp::Cubic { c } => c,
        }
    }
}

/// A model manifold restricted to the geodesic ball `B_p(2R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelManifold {
    dim: usize,
    warp: Warp,
    radius: f64,
}

impl ModelManifold {
    pub fn new(dim: usize, warp: Warp, radius: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidManifold(format!("dimension {dim} < 2")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidManifold(format!("ball radius {radius} must be positive")));
        }
        let outer = 2.0 * radius;
        match warp {
            Warp::Euclidean => {}
            Warp::Hyperbolic { k } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::InvalidManifold(format!("hyperbolic k = {k} must be positive")));
                }
            }
            Warp::Spherical { k } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::InvalidManifold(format!("spherical k = {k} must be positive")));
                }
                if k.sqrt() * outer >= std::f64::consts::PI {
                    return Err(Error::InvalidManifold(format!(
                        "spherical warp vanishes inside the ball: 2R·√k = {} ≥ π",
                        k.sqrt() * outer
                    )));
                }
            }
            Warp::Cubic { c } => {
                if !c.is_finite() || 1.0 + c * outer * outer <= 0.0 {
                    return Err(Error::InvalidManifold(format!(
                        "cubic warp with c = {c} is not positive on (0, {outer}]"
                    )));
                }
            }
        }
        Ok(Self { dim, warp, radius })
    }

    pub fn euclidean(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, Warp::Euclidean, radius)
    }

    pub fn hyperbolic(dim: usize, k: f64, radius: f64) -> Result<Self> {
        Self::new(dim, Warp::Hyperbolic { k }, radius)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn warp(&self) -> Warp {
        self.warp
    }

    /// Inner radius R; the theorems conclude on `B_p(R)`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Outer radius 2R of the computational domain.
    pub fn outer_radius(&self) -> f64 {
        2.0 * self.radius
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let outer = self.outer_radius();
        if !(r >= 0.0 && r <= outer * (1.0 + 1e-12)) {
            return Err(Error::OutOfDomain { r, outer });
        }
        Ok(())
    }

    pub fn warp_eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        self.check_radius(r)?;
        Ok(self.warp.eval(r))
    }

    /// Δr = (n−1)ψ'/ψ for r > 0.
    pub fn distance_laplacian(&self, r: f64) -> f64 {
        (self.dim - 1) as f64 * self.warp.log_derivative(r)
    }

    /// Ricci eigenvalues `(radial, spherical)` at `r`:
    /// `−(n−1)ψ''/ψ` and `−ψ''/ψ + (n−2)(1−ψ'²)/ψ²`.
    pub fn ricci_eigenvalues(&self, r: f64) -> Result<(f64, f64)> {
        self.check_radius(r)?;
        let n = self.dim as f64;
        let ratio = self.warp.curvature_ratio(r);
        let radial = -(n - 1.0) * ratio;
        let spherical = -ratio + (n - 2.0) * self.warp.sphere_term(r);
        Ok((radial, spherical))
    }

    /// Nonnegative K with `Ric ≥ −K` on the grid nodes, widened by `h·L`
    /// where L is the observed Lipschitz constant of the eigenvalue fields.
    pub fn ricci_lower_bound(&self, grid: &RadialGrid) -> Result<f64> {
        grid.check_manifold(self)?;
        let mut min_eig = f64::INFINITY;
        let mut max_jump: f64 = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (i, r) in grid.nodes().enumerate() {
            if r > 0.0 {
                let (psi, _, _) = self.warp.eval(r);
                if !(psi > 0.0) {
                    return Err(Error::NonPositive { node: i, value: psi });
                }
            }
            let (rad, sph) = self.ricci_eigenvalues(r)?;
            min_eig = min_eig.min(rad).min(sph);
            if let Some((pr, ps)) = prev {
                max_jump = max_jump.max((rad - pr).abs()).max((sph - ps).abs());
            }
            prev = Some((rad, sph));
        }
        Ok((-(min_eig - max_jump)).max(0.0))
    }
}

/// Uniform grid `r_i = i·h`, `i = 0..=cells`, over `[0, 2R]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid {
    cells: usize,
    spacing: f64,
}

impl RadialGrid {
    pub fn new(manifold: &ModelManifold, cells: usize) -> Result<Self> {
        Self::over(manifold.outer_radius(), cells)
    }

    /// Grid over `[0, outer]` without a manifold attached.
    pub fn over(outer: f64, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::GridTooCoarse { cells, min: 2 });
        }
        if !(outer.is_finite() && outer > 0.0) {
            return Err(Error::InvalidArgument(format!("grid extent {outer} must be positive")));
        }
        Ok(Self { cells, spacing: outer / cells as f64 })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Number of nodes, `cells + 1`.
    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn outer(&self) -> f64 {
        self.cells as f64 * self.spacing
    }

    pub fn r(&self, i: usize) -> f64 {
        if i == self.cells {
            self.outer()
        } else {
            i as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(move |i| self.r(i))
    }

    /// Largest node index with `r_i ≤ radius` (with a relative slack of 1e-12).
    pub fn last_index_within(&self, radius: f64) -> usize {
        let x = radius / self.spacing * (1.0 + 1e-12);
        (x.floor().max(0.0) as usize).min(self.cells)
    }

    pub(crate) fn check_manifold(&self, manifold: &ModelManifold) -> Result<()> {
        let outer = manifold.outer_radius();
        if (self.outer() - outer).abs() > 1e-9 * outer {
            return Err(Error::GridMismatch(format!(
                "grid covers [0, {}] but the manifold domain is [0, {outer}]",
                self.outer()
            )));
        }
        Ok(())
    }
}

/// Values of a radial function on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: RadialGrid,
    values: Vec<f64>,
    time: Option<f64>,
}

impl ScalarField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values, time: None })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: RadialGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())?;
        out.time = self.time;
        Ok(out)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_grid(&self, other: &RadialGrid) -> Result<()> {
        if self.grid != *other {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }
}

fn require_resolution(grid: &RadialGrid) -> Result<()> {
    if grid.cells() < MIN_CELLS {
        return Err(Error::GridTooCoarse { cells: grid.cells(), min: MIN_CELLS });
    }
    Ok(())
}

/// First radial derivative: zero at the pole, central inside, second-order
/// one-sided at the outer node.
pub fn radial_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let mut d = vec![0.0; n + 1];
    for i in 1..n {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[n] = (3.0 * (values[n] - values[n - 1]) - (values[n - 1] - values[n - 2])) / (2.0 * h);
    d
}

/// Second radial derivative with the even ghost node at the pole and a
/// four-point one-sided stencil at the outer node.
pub fn second_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let h2 = h * h;
    let mut d = vec![0.0; n + 1];
    d[0] = 2.0 * (values[1] - values[0]) / h2;
    for i in 1..n {
        d[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
    }
    d[n] = (2.0 * (values[n] - values[n - 1]) - 3.0 * (values[n - 1] - values[n - 2])
        + (values[n - 2] - values[n - 3]))
        / h2;
    d
}

/// Discrete `v'' + (n−1)(ψ'/ψ)v'`, with `n·v''(0)` at the pole.
pub fn laplace_beltrami(field: &ScalarField, manifold: &ModelManifold) -> Result<ScalarField> {
    let grid = *field.grid();
    grid.check_manifold(manifold)?;
    require_resolution(&grid)?;
    let h = grid.spacing();
    let v = field.values();
    let d1 = radial_derivative(v, h);
    let d2 = second_derivative(v, h);
    let n = manifold.dim() as f64;
    let out = (0..grid.len())
        .map(|i| {
            if i == 0 {
                n * d2[0]
            } else {
                d2[i] + manifold.distance_laplacian(grid.r(i)) * d1[i]
            }
        })
        .collect();
    let mut lap = ScalarField::new(grid, out)?;
    lap.time = field.time;
    Ok(lap)
}

/// |∇v|² = (v')² for radial v.
pub fn radial_gradient_sq(field: &ScalarField, manifold: &ModelManifold) -> Result<ScalarField> {
    let grid = *field.grid();
    grid.check_manifold(manifold)?;
    require_resolution(&grid)?;
    let d1 = radial_derivative(field.values(), grid.spacing());
    ScalarField::new(grid, d1.into_iter().map(|d| d * d).collect())
}

/// ⟨∇v, ∇w⟩ = v'·w' for radial v, w.
pub fn radial_inner(v: &ScalarField, w: &ScalarField, manifold: &ModelManifold) -> Result<ScalarField> {
    let grid = *v.grid();
    w.check_grid(&grid)?;
    grid.check_manifold(manifold)?;
    require_resolution(&grid)?;
    let h = grid.spacing();
    let dv = radial_derivative(v.values(), h);
    let dw = radial_derivative(w.values(), h);
    ScalarField::new(grid, dv.iter().zip(&dw).map(|(a, b)| a * b).collect())
}

/// |D²w|² = (w'')² + (n−1)((ψ'/ψ)w')², equal to n·(w''(0))² at the pole.
pub fn hessian_norm_sq(field: &ScalarField, manifold: &ModelManifold) -> Result<ScalarField> {
    let grid = *field.grid();
    grid.check_manifold(manifold)?;
    require_resolution(&grid)?;
    let h = grid.spacing();
    let d1 = radial_derivative(field.values(), h);
    let d2 = second_derivative(field.values(), h);
    let n = manifold.dim() as f64;
    let out = (0..grid.len())
        .map(|i| {
            if i == 0 {
                n * d2[0] * d2[0]
            } else {
                let t = manifold.warp().log_derivative(grid.r(i)) * d1[i];
                d2[i] * d2[i] + (n - 1.0) * t * t
            }
        })
        .collect();
    ScalarField::new(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_sinh(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for k in 1..30 {
            term *= x * x / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        sum
    }

    fn taylor_cosh(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            term *= x * x / ((2 * k - 1) as f64 * (2 * k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn warp_eval_examples() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        assert_eq!(m.warp_eval(0.7).unwrap(), (0.7, 1.0, 0.0));

        let m = ModelManifold::hyperbolic(3, 1.0, 1.0).unwrap();
        let (p, dp, ddp) = m.warp_eval(1.0).unwrap();
        assert!((p - taylor_sinh(1.0)).abs() < 1e-12);
        assert!((dp - taylor_cosh(1.0)).abs() < 1e-12);
        assert!((ddp - taylor_sinh(1.0)).abs() < 1e-12);
        assert!((p - 1.17520).abs() < 1e-5 && (dp - 1.54308).abs() < 1e-5);

        let m = ModelManifold::hyperbolic(3, 4.0, 1.0).unwrap();
        assert_eq!(m.warp_eval(0.0).unwrap(), (0.0, 1.0, 0.0));
    }

    #[test]
    fn warp_eval_rejects_outside_domain() {
        let m = ModelManifold::euclidean(2, 1.0).unwrap();
        assert!(matches!(m.warp_eval(2.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(m.warp_eval(-0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn manifold_invariants() {
        assert!(ModelManifold::euclidean(1, 1.0).is_err());
        assert!(ModelManifold::new(3, Warp::Spherical { k: 1.0 }, 2.0).is_err());
        assert!(ModelManifold::new(3, Warp::Cubic { c: -0.5 }, 1.0).is_err());
        assert!(ModelManifold::new(3, Warp::Cubic { c: -0.1 }, 1.0).is_ok());
    }

    #[test]
    fn sphere_term_matches_direct_formula_away_from_pole() {
        for warp in [
            Warp::Hyperbolic { k: 0.7 },
            Warp::Spherical { k: 0.3 },
            Warp::Cubic { c: 0.2 },
            Warp::Cubic { c: -0.05 },
        ] {
            for &r in &[0.3, 1.0, 1.7] {
                let (p, dp, ddp) = warp.eval(r);
                let direct = (1.0 - dp * dp) / (p * p);
                assert!((warp.sphere_term(r) - direct).abs() < 1e-10, "{warp:?} r={r}");
                assert!((warp.curvature_ratio(r) - ddp / p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ricci_lower_bound_examples() {
        for n in 2..=6 {
            let m = ModelManifold::euclidean(n, 3.0).unwrap();
            let g = RadialGrid::new(&m, 64).unwrap();
            assert_eq!(m.ricci_lower_bound(&g).unwrap(), 0.0);
        }
        let m = ModelManifold::hyperbolic(3, 1.0, 2.0).unwrap();
        let g = RadialGrid::new(&m, 64).unwrap();
        assert!((m.ricci_lower_bound(&g).unwrap() - 2.0).abs() < 1e-12);
        let m = ModelManifold::hyperbolic(2, 1.0, 2.0).unwrap();
        let g = RadialGrid::new(&m, 64).unwrap();
        assert!((m.ricci_lower_bound(&g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ricci_lower_bound_hyperbolic_family() {
        for n in 2..=6 {
            for &k in &[0.25, 1.0, 4.0] {
                let m = ModelManifold::hyperbolic(n, k, 1.5).unwrap();
                let g = RadialGrid::new(&m, 200).unwrap();
                let bound = m.ricci_lower_bound(&g).unwrap();
                assert!((bound - (n as f64 - 1.0) * k).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cubic_ricci_bound_covers_the_grid_infimum() {
        // ψ = r + c r³ with c > 0 is negatively curved, most negative at the pole.
        let m = ModelManifold::new(3, Warp::Cubic { c: 0.1 }, 1.0).unwrap();
        let g = RadialGrid::new(&m, 100).unwrap();
        let bound = m.ricci_lower_bound(&g).unwrap();
        assert!(bound >= 2.0 * 0.6 - 1e-12);
        for r in g.nodes() {
            let (a, b) = m.ricci_eigenvalues(r).unwrap();
            assert!(a >= -bound && b >= -bound);
        }
    }

    #[test]
    fn laplacian_of_r_squared_is_exact() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        let g = RadialGrid::new(&m, 50).unwrap();
        let v = ScalarField::from_fn(g, |r| r * r).unwrap();
        let lap = laplace_beltrami(&v, &m).unwrap();
        for x in lap.values() {
            assert!((x - 6.0).abs() <= 1e-10, "{x}");
        }
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        for warp in [Warp::Euclidean, Warp::Hyperbolic { k: 2.0 }, Warp::Cubic { c: 0.3 }] {
            let m = ModelManifold::new(4, warp, 1.3).unwrap();
            let g = RadialGrid::new(&m, 40).unwrap();
            let v = ScalarField::constant(g, 3.7).unwrap();
            let lap = laplace_beltrami(&v, &m).unwrap();
            assert!(lap.values().iter().all(|&x| x == 0.0));
        }
    }

    fn cosh_laplacian_error(cells: usize) -> f64 {
        let m = ModelManifold::hyperbolic(3, 1.0, 1.0).unwrap();
        let g = RadialGrid::new(&m, cells).unwrap();
        let v = ScalarField::from_fn(g, f64::cosh).unwrap();
        let lap = laplace_beltrami(&v, &m).unwrap();
        g.nodes()
            .zip(lap.values())
            .map(|(r, x)| (x - 3.0 * r.cosh()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacian_converges_at_second_order() {
        let e1 = cosh_laplacian_error(128);
        let e2 = cosh_laplacian_error(256);
        let ratio = e1 / e2;
        assert!(e2 < 1e-3);
        assert!((ratio - 4.0).abs() <= 0.8, "ratio {ratio}");
    }

    #[test]
    fn laplacian_rejects_coarse_grids() {
        let m = ModelManifold::euclidean(2, 1.0).unwrap();
        let g = RadialGrid::new(&m, 4).unwrap();
        let v = ScalarField::constant(g, 1.0).unwrap();
        assert!(matches!(laplace_beltrami(&v, &m), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn gradient_examples() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        let g = RadialGrid::new(&m, 100).unwrap();
        let v = ScalarField::from_fn(g, |r| r).unwrap();
        let gs = radial_gradient_sq(&v, &m).unwrap();
        for x in &gs.values()[1..] {
            assert!((x - 1.0).abs() < 1e-12);
        }
        assert_eq!(gs.values()[0], 0.0);

        let c = ScalarField::constant(g, 2.0).unwrap();
        assert!(radial_gradient_sq(&c, &m).unwrap().values().iter().all(|&x| x == 0.0));

        let q = ScalarField::from_fn(g, |r| r * r).unwrap();
        let gs = radial_gradient_sq(&q, &m).unwrap();
        let i = g.last_index_within(0.5);
        assert_eq!(g.r(i), 0.5);
        assert!((gs.values()[i] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn grid_layout() {
        let m = ModelManifold::euclidean(2, 1.5).unwrap();
        let g = RadialGrid::new(&m, 30).unwrap();
        assert_eq!(g.r(0), 0.0);
        assert_eq!(g.r(30), 3.0);
        assert_eq!(g.len(), 31);
        let rs: Vec<f64> = g.nodes().collect();
        assert!(rs.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.last_index_within(1.5), 15);
    }

    #[test]
    fn scalar_field_rejects_bad_input() {
        let g = RadialGrid::over(1.0, 10).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 3]).is_err());
        let mut v = vec![0.0; 11];
        v[4] = f64::NAN;
        assert_eq!(ScalarField::new(g, v), Err(Error::NonFinite(4)));
    }
}
