//! Damped Newton solver for `Δu + a·u·log u + b·u = 0` on `[0, 2R]`.

use crate::error::{Error, Result};
use crate::fields::{sample, CoefficientProfile};
use crate::geometry::{ModelManifold, RadialGrid, ScalarField, MIN_CELLS};
use crate::linalg::solve_tridiagonal;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest line-search step before giving up.
    pub damping_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100, damping_floor: 2f64.powi(-30) }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.damping_floor > 0.0 && self.damping_floor <= 1.0) {
            return Err(Error::InvalidArgument(format!("bad solver options {self:?}")));
        }
        Ok(())
    }
}

/// Condition imposed at `r = 2R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OuterBoundary {
    Dirichlet(f64),
    /// u'(2R) = 0 via an even ghost node.
    Neumann,
}

/// The discrete operator shared by the elliptic and implicit parabolic
/// solvers: `Δu + a·u·log u + b·u − (u − prev)/τ`.
pub(crate) struct Discretization<'a> {
    pub h: f64,
    pub dim: f64,
    /// (n−1)ψ'/ψ at interior nodes (unused at the pole).
    pub drift: Vec<f64>,
    pub a: &'a [f64],
    pub b: &'a [f64],
    pub outer: OuterBoundary,
    pub implicit: Option<(f64, &'a [f64])>,
}

impl<'a> Discretization<'a> {
    pub fn new(
        manifold: &ModelManifold,
        grid: &RadialGrid,
        a: &'a [f64],
        b: &'a [f64],
        outer: OuterBoundary,
        implicit: Option<(f64, &'a [f64])>,
    ) -> Result<Self> {
        grid.check_manifold(manifold)?;
        if grid.cells() < MIN_CELLS {
            return Err(Error::GridTooCoarse { cells: grid.cells(), min: MIN_CELLS });
        }
        if a.len() != grid.len() || b.len() != grid.len() {
            return Err(Error::GridMismatch("coefficient length differs from grid".into()));
        }
        let mut drift = vec![0.0; grid.len()];
        for (i, d) in drift.iter_mut().enumerate().skip(1) {
            *d = manifold.distance_laplacian(grid.r(i));
        }
        Ok(Self { h: grid.spacing(), dim: manifold.dim() as f64, drift, a, b, outer, implicit })
    }

    fn len(&self) -> usize {
        self.a.len()
    }

    fn laplacian_row(&self, u: &[f64], i: usize) -> f64 {
        let h2 = self.h * self.h;
        let last = self.len() - 1;
        if i == 0 {
            2.0 * self.dim * (u[1] - u[0]) / h2
        } else if i == last {
            2.0 * (u[last - 1] - u[last]) / h2
        } else {
            (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2 + self.drift[i] * (u[i + 1] - u[i - 1]) / (2.0 * self.h)
        }
    }

    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = u.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositive { node: i, value: u[i] });
        }
        let last = self.len() - 1;
        Ok((0..self.len())
            .map(|i| {
                if i == last {
                    if let OuterBoundary::Dirichlet(ud) = self.outer {
                        return u[i] - ud;
                    }
                }
                let mut r = self.laplacian_row(u, i) + self.a[i] * u[i] * u[i].ln() + self.b[i] * u[i];
                if let Some((tau, prev)) = self.implicit {
                    r -= (u[i] - prev[i]) / tau;
                }
                r
            })
            .collect())
    }

    /// Tridiagonal Jacobian (lower, diag, upper).
    fn jacobian(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.len();
        let last = n - 1;
        let h2 = self.h * self.h;
        let mut lower = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n - 1];
        let shift = self.implicit.map_or(0.0, |(tau, _)| 1.0 / tau);
        for i in 0..n {
            let reaction = self.a[i] * (u[i].ln() + 1.0) + self.b[i] - shift;
            if i == 0 {
                diag[0] = -2.0 * self.dim / h2 + reaction;
                upper[0] = 2.0 * self.dim / h2;
            } else if i == last {
                match self.outer {
                    OuterBoundary::Dirichlet(_) => diag[i] = 1.0,
                    OuterBoundary::Neumann => {
                        diag[i] = -2.0 / h2 + reaction;
                        lower[i - 1] = 2.0 / h2;
                    }
                }
            } else {
                let c = self.drift[i] / (2.0 * self.h);
                lower[i - 1] = 1.0 / h2 - c;
                diag[i] = -2.0 / h2 + reaction;
                upper[i] = 1.0 / h2 + c;
            }
        }
        (lower, diag, upper)
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration; returns (u, residual sup-norm, iterations).
pub(crate) fn newton(system: &Discretization<'_>, mut u: Vec<f64>, options: &SolverOptions) -> Result<(Vec<f64>, f64, usize)> {
    options.validate()?;
    let mut res = system.residual(&u)?;
    let mut norm = sup_norm(&res);
    for iteration in 0..options.max_iter {
        if norm <= options.tol {
            return Ok((u, norm, iteration));
        }
        let (lower, diag, upper) = system.jacobian(&u);
        let step = solve_tridiagonal(lower, diag, upper, res.iter().map(|r| -r).collect())?;
        let mut lambda = 1.0;
        loop {
            if lambda < options.damping_floor {
                return Err(Error::LineSearch { iteration, residual: norm });
            }
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, d)| x + lambda * d).collect();
            if trial.iter().all(|&v| v > 0.0 && v.is_finite()) {
                let r = system.residual(&trial)?;
                let n = sup_norm(&r);
                if n < norm {
                    u = trial;
                    res = r;
                    norm = n;
                    break;
                }
            }
            lambda *= 0.5;
        }
    }
    if norm <= options.tol {
        return Ok((u, norm, options.max_iter));
    }
    Err(Error::Divergence { iterations: options.max_iter, residual: norm })
}

/// Boundary value at `r = 2R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryValue {
    /// exp(−b/a) evaluated at the wall, or 1 where a vanishes there.
    Auto,
    Fixed(f64),
    /// Whatever value the discrete equations reach when marched out from
    /// the pole. For positive a the pole-regular solutions decay towards
    /// the wall, so a prescribed wall value is nearly unattainable and this
    /// is the only robust choice.
    Natural,
}

impl BoundaryValue {
    pub fn resolve(&self, a_wall: f64, b_wall: f64) -> Result<f64> {
        let v = match *self {
            BoundaryValue::Fixed(v) => v,
            BoundaryValue::Auto if a_wall != 0.0 => (-b_wall / a_wall).exp(),
            BoundaryValue::Auto | BoundaryValue::Natural => 1.0,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("boundary value must be positive and finite, got {v}")));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug)]
pub struct EllipticProblem {
    pub manifold: ModelManifold,
    pub grid: RadialGrid,
    pub a: ScalarField,
    pub b: ScalarField,
    pub boundary_value: f64,
    pub options: SolverOptions,
    /// Starting iterate used when `solve` is given none.
    pub guess: Option<ScalarField>,
}

impl EllipticProblem {
    pub fn new(
        manifold: ModelManifold,
        grid: RadialGrid,
        a: ScalarField,
        b: ScalarField,
        boundary_value: f64,
        options: SolverOptions,
    ) -> Result<Self> {
        grid.check_manifold(&manifold)?;
        a.check_grid(&grid)?;
        b.check_grid(&grid)?;
        if !(boundary_value > 0.0 && boundary_value.is_finite()) {
            return Err(Error::InvalidArgument(format!("boundary value must be positive, got {boundary_value}")));
        }
        options.validate()?;
        Ok(Self { manifold, grid, a, b, boundary_value, options, guess: None })
    }

    pub fn from_profiles(
        manifold: ModelManifold,
        grid: RadialGrid,
        a: &CoefficientProfile,
        b: &CoefficientProfile,
        boundary: BoundaryValue,
        options: SolverOptions,
    ) -> Result<Self> {
        let af = sample(a, &grid, 0.0)?;
        let bf = sample(b, &grid, 0.0)?;
        if boundary == BoundaryValue::Natural {
            let center = BoundaryValue::Auto.resolve(a.value(0.0, 0.0), b.value(0.0, 0.0))?;
            let marched = march_from_pole(&manifold, &grid, af.values(), bf.values(), center)?;
            let ud = marched.values()[grid.cells()];
            let mut p = Self::new(manifold, grid, af, bf, ud, options)?;
            p.guess = Some(marched);
            return Ok(p);
        }
        let wall = grid.outer();
        let ud = boundary.resolve(a.value(wall, 0.0), b.value(wall, 0.0))?;
        Self::new(manifold, grid, af, bf, ud, options)
    }

    fn discretization(&self) -> Result<Discretization<'_>> {
        Discretization::new(
            &self.manifold,
            &self.grid,
            self.a.values(),
            self.b.values(),
            OuterBoundary::Dirichlet(self.boundary_value),
            None,
        )
    }

    /// exp(−b̄/ā) from the mid-range values when a keeps a strict sign,
    /// otherwise the boundary value.
    pub fn default_guess(&self) -> Result<ScalarField> {
        if let Some(g) = &self.guess {
            return Ok(g.clone());
        }
        let (amin, amax) = (self.a.min(), self.a.max());
        let value = if amin > 0.0 || amax < 0.0 {
            let abar = 0.5 * (amin + amax);
            let bbar = 0.5 * (self.b.min() + self.b.max());
            (-bbar / abar).exp()
        } else {
            self.boundary_value
        };
        if !(value > 0.0 && value.is_finite()) {
            return ScalarField::constant(self.grid, self.boundary_value);
        }
        ScalarField::constant(self.grid, value)
    }
}

/// Solves rows `0..N` of the discrete equation for the next node in turn,
/// starting from `u(0) = center`. Unstable when a is negative, since the
/// homogeneous solutions then grow exponentially.
pub fn march_from_pole(
    manifold: &ModelManifold,
    grid: &RadialGrid,
    a: &[f64],
    b: &[f64],
    center: f64,
) -> Result<ScalarField> {
    let system = Discretization::new(manifold, grid, a, b, OuterBoundary::Neumann, None)?;
    if !(center > 0.0 && center.is_finite()) {
        return Err(Error::InvalidArgument(format!("center value must be positive, got {center}")));
    }
    let h = grid.spacing();
    let h2 = h * h;
    let mut u = vec![0.0; grid.len()];
    u[0] = center;
    for i in 0..grid.cells() {
        let reaction = a[i] * u[i] * u[i].ln() + b[i] * u[i];
        u[i + 1] = if i == 0 {
            u[0] - h2 * reaction / (2.0 * system.dim)
        } else {
            let c = system.drift[i] / (2.0 * h);
            (2.0 * u[i] / h2 - (1.0 / h2 - c) * u[i - 1] - reaction) / (1.0 / h2 + c)
        };
        if !u[i + 1].is_finite() {
            return Err(Error::NonFinite(i + 1));
        }
        if u[i + 1] <= 0.0 {
            return Err(Error::NonPositive { node: i + 1, value: u[i + 1] });
        }
    }
    ScalarField::new(*grid, u)
}

#[derive(Clone, Debug)]
pub struct EllipticSolution {
    pub u: ScalarField,
    pub residual: f64,
    pub iterations: usize,
}

/// Node-wise discrete residual, with the Dirichlet row `u_N − u_D`.
pub fn residual(u: &ScalarField, problem: &EllipticProblem) -> Result<ScalarField> {
    u.check_grid(&problem.grid)?;
    let r = problem.discretization()?.residual(u.values())?;
    ScalarField::new(problem.grid, r)
}

pub fn solve(problem: &EllipticProblem, initial: Option<&ScalarField>) -> Result<EllipticSolution> {
    let guess = match initial {
        Some(u) => {
            u.check_grid(&problem.grid)?;
            u.clone()
        }
        None => problem.default_guess()?,
    };
    let system = problem.discretization()?;
    let (u, residual, iterations) = newton(&system, guess.into_values(), &problem.options)?;
    Ok(EllipticSolution { u: ScalarField::new(problem.grid, u)?, residual, iterations })
}

/// Smallest ramp increment before continuation gives up.
pub const MIN_RAMP_STEP: f64 = 1.0 / 1_048_576.0;

/// Ramps the bump amplitudes of `a` and `b` from 0 to their targets in
/// `steps` equal increments, warm-starting each stage. A failed stage
/// is retried with half the increment.
pub fn continuation_solve(
    manifold: ModelManifold,
    grid: RadialGrid,
    a: &CoefficientProfile,
    b: &CoefficientProfile,
    boundary: BoundaryValue,
    options: SolverOptions,
    steps: usize,
) -> Result<EllipticSolution> {
    if steps == 0 {
        return Err(Error::InvalidArgument("continuation needs at least one step".into()));
    }
    let stage = |theta: f64| {
        EllipticProblem::from_profiles(
            manifold,
            grid,
            &a.with_amplitude_scale(theta),
            &b.with_amplitude_scale(theta),
            boundary,
            options,
        )
    };
    let mut current = solve(&stage(0.0)?, None)?;
    let mut theta = 0.0;
    let mut dtheta = 1.0 / steps as f64;
    while theta < 1.0 {
        let next = (theta + dtheta).min(1.0);
        match solve(&stage(next)?, Some(&current.u)) {
            Ok(sol) => {
                current = sol;
                theta = next;
            }
            Err(Error::LineSearch { .. } | Error::Divergence { .. } | Error::SingularJacobian(_)) => {
                dtheta *= 0.5;
                if dtheta < MIN_RAMP_STEP {
                    return Err(Error::RampUnderflow(dtheta));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn constant_problem(manifold: ModelManifold, cells: usize, a: f64, b: f64, ud: f64) -> EllipticProblem {
        let grid = RadialGrid::new(&manifold, cells).unwrap();
        EllipticProblem::new(
            manifold,
            grid,
            ScalarField::constant(grid, a).unwrap(),
            ScalarField::constant(grid, b).unwrap(),
            ud,
            SolverOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn residual_vanishes_on_constant_solutions() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        for &(a, b, u) in &[(2.0, -2.0, E), (0.0, 0.0, 3.7), (1.0, 0.0, 1.0)] {
            let p = constant_problem(m, 64, a, b, u);
            let r = residual(&ScalarField::constant(p.grid, u).unwrap(), &p).unwrap();
            assert!(r.sup_norm() < 1e-14, "{a} {b} {u}: {}", r.sup_norm());
        }
    }

    #[test]
    fn residual_rejects_nonpositive_input() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        let p = constant_problem(m, 16, 1.0, 0.0, 1.0);
        let mut v = vec![1.0; p.grid.len()];
        v[3] = 0.0;
        let u = ScalarField::new(p.grid, v).unwrap();
        assert!(matches!(residual(&u, &p), Err(Error::NonPositive { node: 3, .. })));
    }

    #[test]
    fn constant_solutions_are_recovered() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        for &(a, b) in &[(2.0, -2.0), (-2.0, 2.0)] {
            let p = constant_problem(m, 512, a, b, E);
            let s = solve(&p, None).unwrap();
            assert!(s.u.values().iter().all(|&v| (v - E).abs() <= 1e-10));
            // A perturbed start converges back as well.
            let start = ScalarField::from_fn(p.grid, |r| E + 0.3 * (1.0 - r / 2.0)).unwrap();
            let s = solve(&p, Some(&start)).unwrap();
            assert!(s.u.values().iter().all(|&v| (v - E).abs() <= 1e-10));
        }
    }

    #[test]
    fn bump_solution_passes_independent_residual() {
        let m = ModelManifold::hyperbolic(3, 1.0, 2.0).unwrap();
        let g = RadialGrid::new(&m, 256).unwrap();
        let a = CoefficientProfile::constant(2.0);
        let b = CoefficientProfile::tanh_bump(0.0, 0.5, 2.0, 0.5);
        let p = EllipticProblem::from_profiles(m, g, &a, &b, BoundaryValue::Auto, SolverOptions::default()).unwrap();
        let s = solve(&p, None).unwrap();
        assert!(s.residual <= 1e-9);
        // Independent evaluation from the geometry operator.
        let lap = crate::geometry::laplace_beltrami(&s.u, &m).unwrap();
        for i in 1..g.cells() {
            let u = s.u.values()[i];
            let r = lap.values()[i] + 2.0 * u * u.ln() + p.b.values()[i] * u;
            assert!(r.abs() <= 1e-9, "node {i}: {r}");
        }
        assert!(s.u.min() > 0.0);
        assert!(s.u.values()[1] - s.u.values()[0] < 1e-3);
    }

    #[test]
    fn grid_refinement_is_second_order() {
        let m = ModelManifold::euclidean(3, 2.0).unwrap();
        let a = CoefficientProfile::constant(2.0);
        let b = CoefficientProfile::gaussian_bump(0.0, 0.5, 2.0, 0.7);
        let solve_on = |cells| {
            let g = RadialGrid::new(&m, cells).unwrap();
            let p = EllipticProblem::from_profiles(m, g, &a, &b, BoundaryValue::Auto, SolverOptions::default()).unwrap();
            solve(&p, None).unwrap().u.into_values()
        };
        let coarse = solve_on(64);
        let mid = solve_on(128);
        let fine = solve_on(256);
        let e1 = (0..coarse.len()).map(|i| (coarse[i] - mid[2 * i]).abs()).fold(0.0, f64::max);
        let e2 = (0..mid.len()).map(|i| (mid[i] - fine[2 * i]).abs()).fold(0.0, f64::max);
        let ratio = e1 / e2;
        assert!(ratio > 3.2 && ratio < 4.8, "{ratio}");
    }

    #[test]
    fn continuation_is_consistent() {
        let m = ModelManifold::hyperbolic(3, 1.0, 2.0).unwrap();
        let g = RadialGrid::new(&m, 256).unwrap();
        let a = CoefficientProfile::tanh_bump(2.0, 0.5, 2.0, 0.5);
        let b = CoefficientProfile::gaussian_bump(0.0, 0.5, 1.0, 0.5);
        let opts = SolverOptions::default();
        let five = continuation_solve(m, g, &a, &b, BoundaryValue::Auto, opts, 5).unwrap();
        let ten = continuation_solve(m, g, &a, &b, BoundaryValue::Auto, opts, 10).unwrap();
        let diff = five.u.values().iter().zip(ten.u.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");

        let flat = CoefficientProfile::tanh_bump(2.0, 0.0, 2.0, 0.5);
        let zero = CoefficientProfile::constant(-2.0);
        let ramped = continuation_solve(m, g, &flat, &zero, BoundaryValue::Auto, opts, 4).unwrap();
        let direct = solve(
            &EllipticProblem::from_profiles(m, g, &flat, &zero, BoundaryValue::Auto, opts).unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(ramped.u.values(), direct.u.values());
    }

    #[test]
    fn continuation_on_b_only_keeps_every_stage_converged() {
        let m = ModelManifold::euclidean(3, 2.0).unwrap();
        let g = RadialGrid::new(&m, 128).unwrap();
        let a = CoefficientProfile::constant(2.0);
        let b = CoefficientProfile::gaussian_bump(0.0, 1.0, 1.0, 0.5);
        let opts = SolverOptions::default();
        for k in 0..=4 {
            let theta = k as f64 / 4.0;
            let p = EllipticProblem::from_profiles(m, g, &a, &b.with_amplitude_scale(theta), BoundaryValue::Auto, opts)
                .unwrap();
            let s = solve(&p, None).unwrap();
            assert!(residual(&s.u, &p).unwrap().sup_norm() <= opts.tol);
        }
        assert!(continuation_solve(m, g, &a, &b, BoundaryValue::Auto, opts, 4).unwrap().residual <= opts.tol);
    }

    #[test]
    fn boundary_resolution() {
        assert!((BoundaryValue::Auto.resolve(2.0, -2.0).unwrap() - E).abs() < 1e-15);
        assert_eq!(BoundaryValue::Auto.resolve(0.0, 5.0).unwrap(), 1.0);
        assert!(BoundaryValue::Fixed(-1.0).resolve(1.0, 0.0).is_err());
    }

    #[test]
    fn natural_boundary_handles_decaying_oscillation() {
        // Positive a on a wide hyperbolic ball: the wall value barely
        // depends on the centre, so u_D = 1 is out of reach.
        let m = ModelManifold::hyperbolic(3, 1.0, 5.0).unwrap();
        let g = RadialGrid::new(&m, 512).unwrap();
        let a = CoefficientProfile::tanh_bump(2.0, 0.5, 5.0, 0.5);
        let b = CoefficientProfile::gaussian_bump(0.0, 0.5, 2.5, 0.5);
        let opts = SolverOptions::default();
        let p = EllipticProblem::from_profiles(m, g, &a, &b, BoundaryValue::Natural, opts).unwrap();
        let marched = p.guess.clone().unwrap();
        assert!(residual(&marched, &p).unwrap().sup_norm() < 1e-8);
        let s = solve(&p, None).unwrap();
        assert!(s.residual <= opts.tol);
        assert!((s.u.values()[g.cells()] - p.boundary_value).abs() < 1e-15);
    }

    #[test]
    fn marching_reproduces_constant_solution() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        let g = RadialGrid::new(&m, 64).unwrap();
        let u = march_from_pole(&m, &g, &vec![2.0; g.len()], &vec![-2.0; g.len()], E).unwrap();
        assert!(u.values().iter().all(|&v| (v - E).abs() < 1e-13));
    }
}
