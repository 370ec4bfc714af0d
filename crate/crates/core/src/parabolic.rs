//! Implicit Euler time stepping for `(Δ − ∂t)u + a·u·log u + b·u = 0`.

use crate::elliptic::{newton, Discretization, OuterBoundary, SolverOptions};
use crate::error::{Error, Result};
use crate::fields::{sample, CoefficientProfile};
use crate::geometry::{ModelManifold, RadialGrid, ScalarField};

#[derive(Clone, Debug)]
pub struct ParabolicProblem {
    pub manifold: ModelManifold,
    pub grid: RadialGrid,
    pub a: CoefficientProfile,
    pub b: CoefficientProfile,
    pub initial: ScalarField,
    pub outer: OuterBoundary,
    pub tau: f64,
    pub horizon: f64,
    pub options: SolverOptions,
}

impl ParabolicProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        manifold: ModelManifold,
        grid: RadialGrid,
        a: CoefficientProfile,
        b: CoefficientProfile,
        initial: ScalarField,
        outer: OuterBoundary,
        tau: f64,
        horizon: f64,
        options: SolverOptions,
    ) -> Result<Self> {
        grid.check_manifold(&manifold)?;
        initial.check_grid(&grid)?;
        a.validate()?;
        b.validate()?;
        options.validate()?;
        if !(tau > 0.0 && tau.is_finite()) || !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("need τ > 0 and T > 0, got τ={tau}, T={horizon}")));
        }
        if let Some(i) = initial.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositive { node: i, value: initial.values()[i] });
        }
        if let OuterBoundary::Dirichlet(v) = outer {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("boundary value must be positive, got {v}")));
            }
        }
        Ok(Self { manifold, grid, a, b, initial, outer, tau, horizon, options })
    }

    /// Number of implicit steps needed to reach the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.tau - 1e-9).ceil().max(1.0) as usize
    }
}

/// Advances `u_m` to time `t` (the new time level) by one implicit step.
pub fn step(u_m: &ScalarField, problem: &ParabolicProblem, t: f64) -> Result<(ScalarField, f64)> {
    u_m.check_grid(&problem.grid)?;
    let a = sample(&problem.a, &problem.grid, t)?;
    let b = sample(&problem.b, &problem.grid, t)?;
    let system = Discretization::new(
        &problem.manifold,
        &problem.grid,
        a.values(),
        b.values(),
        problem.outer,
        Some((problem.tau, u_m.values())),
    )?;
    let (u, residual, _) = newton(&system, u_m.values().to_vec(), &problem.options)?;
    Ok((ScalarField::new(problem.grid, u)?.with_time(t), residual))
}

#[derive(Clone, Debug)]
pub struct ParabolicTrajectory {
    grid: RadialGrid,
    tau: f64,
    snapshots: Vec<ScalarField>,
    residuals: Vec<f64>,
}

impl ParabolicTrajectory {
    /// Snapshot `m` is taken to sit at `t = m·τ`.
    pub fn from_snapshots(tau: f64, snapshots: Vec<ScalarField>) -> Result<Self> {
        let first = snapshots.first().ok_or(Error::EmptyRegion)?;
        let grid = *first.grid();
        for s in &snapshots {
            s.check_grid(&grid)?;
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("τ must be positive, got {tau}")));
        }
        Ok(Self { grid, tau, residuals: vec![0.0; snapshots.len() - 1], snapshots })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn snapshots(&self) -> &[ScalarField] {
        &self.snapshots
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.tau
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Snapshot index nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.tau).round().max(0.0) as usize).min(self.len() - 1)
    }
}

pub fn run(problem: &ParabolicProblem) -> Result<ParabolicTrajectory> {
    let steps = problem.steps();
    let mut snapshots = Vec::with_capacity(steps + 1);
    let mut residuals = Vec::with_capacity(steps);
    snapshots.push(problem.initial.clone().with_time(0.0));
    for m in 1..=steps {
        let t = m as f64 * problem.tau;
        let (u, r) = step(&snapshots[m - 1], problem, t)?;
        snapshots.push(u);
        residuals.push(r);
    }
    Ok(ParabolicTrajectory { grid: problem.grid, tau: problem.tau, snapshots, residuals })
}

/// ∂t of `f = log(u/D)` at snapshot `m`: central inside, second-order
/// one-sided at the ends.
pub fn time_derivative(trajectory: &ParabolicTrajectory, m: usize, d: f64) -> Result<ScalarField> {
    let len = trajectory.len();
    if len < 2 {
        return Err(Error::InvalidArgument("time derivative needs at least two snapshots".into()));
    }
    if m >= len {
        return Err(Error::InvalidArgument(format!("snapshot {m} out of range (have {len})")));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("D must be positive, got {d}")));
    }
    let f = |k: usize| -> Vec<f64> { trajectory.snapshots[k].values().iter().map(|u| (u / d).ln()).collect() };
    let tau = trajectory.tau;
    let values: Vec<f64> = if len == 2 {
        let (f0, f1) = (f(0), f(1));
        f0.iter().zip(&f1).map(|(x, y)| (y - x) / tau).collect()
    } else if m == 0 {
        let (f0, f1, f2) = (f(0), f(1), f(2));
        (0..f0.len()).map(|i| (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * tau)).collect()
    } else if m == len - 1 {
        let (f0, f1, f2) = (f(m), f(m - 1), f(m - 2));
        (0..f0.len()).map(|i| (3.0 * f0[i] - 4.0 * f1[i] + f2[i]) / (2.0 * tau)).collect()
    } else {
        let (fp, fm) = (f(m + 1), f(m - 1));
        fp.iter().zip(&fm).map(|(x, y)| (x - y) / (2.0 * tau)).collect()
    };
    Ok(ScalarField::new(trajectory.grid, values)?.with_time(trajectory.time(m)))
}

/// D = max of u over every snapshot and node.
pub fn sup_bound_d(trajectory: &ParabolicTrajectory) -> f64 {
    trajectory.snapshots.iter().map(ScalarField::max).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn problem(
        manifold: ModelManifold,
        cells: usize,
        a: CoefficientProfile,
        b: CoefficientProfile,
        initial: impl Fn(f64) -> f64,
        outer: OuterBoundary,
        tau: f64,
        horizon: f64,
    ) -> ParabolicProblem {
        let grid = RadialGrid::new(&manifold, cells).unwrap();
        let u0 = ScalarField::from_fn(grid, initial).unwrap();
        ParabolicProblem::new(manifold, grid, a, b, u0, outer, tau, horizon, SolverOptions::default()).unwrap()
    }

    #[test]
    fn stationary_states_are_fixed_points() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        let p = problem(
            m,
            64,
            CoefficientProfile::constant(2.0),
            CoefficientProfile::constant(-2.0),
            |_| E,
            OuterBoundary::Dirichlet(E),
            0.01,
            1.0,
        );
        let traj = run(&p).unwrap();
        assert_eq!(traj.len(), 101);
        let drift = traj.snapshots().iter().flat_map(|s| s.values().iter()).map(|v| (v - E).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-9);
        assert!((sup_bound_d(&traj) - E).abs() <= 1e-9);
        let ft = time_derivative(&traj, 50, sup_bound_d(&traj)).unwrap();
        assert!(ft.sup_norm() <= 1e-9);

        let heat = problem(m, 64, CoefficientProfile::constant(0.0), CoefficientProfile::constant(0.0), |_| 2.5, OuterBoundary::Dirichlet(2.5), 0.1, 0.3);
        let (u, _) = step(&heat.initial, &heat, 0.1).unwrap();
        assert!(u.values().iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn heat_flow_obeys_maximum_principle() {
        let m = ModelManifold::euclidean(3, 3.0).unwrap();
        let p = problem(
            m,
            128,
            CoefficientProfile::constant(0.0),
            CoefficientProfile::constant(0.0),
            |r| 1.0 + (-r * r).exp(),
            OuterBoundary::Dirichlet(1.0 + (-36.0f64).exp()),
            0.01,
            0.5,
        );
        let traj = run(&p).unwrap();
        let sups: Vec<f64> = traj.snapshots().iter().map(ScalarField::max).collect();
        for w in sups.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        assert!(sups.last().unwrap() < &sups[0]);
        assert_eq!(sup_bound_d(&traj), sups[0]);
        let d = sup_bound_d(&traj);
        assert!(traj.snapshots().iter().all(|s| s.values().iter().all(|&u| (u / d).ln() <= 0.0)));
    }

    #[test]
    fn spatially_constant_decay() {
        // u_t = −u with Neumann outer condition: u = e^{−t}, ∂t log u = −1.
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        let run_with = |tau: f64| {
            let p = problem(m, 32, CoefficientProfile::constant(0.0), CoefficientProfile::constant(-1.0), |_| 1.0, OuterBoundary::Neumann, tau, 1.0);
            run(&p).unwrap()
        };
        let coarse = run_with(0.02);
        let fine = run_with(0.01);
        let err = |t: &ParabolicTrajectory| (t.snapshots().last().unwrap().values()[5] - (-1.0f64).exp()).abs();
        let ratio = err(&coarse) / err(&fine);
        assert!(ratio > 1.8 && ratio < 2.2, "{ratio}");
        let ft = time_derivative(&fine, 50, 1.0).unwrap();
        assert!(ft.values().iter().all(|&v| (v + 1.0).abs() < 0.01));
    }

    #[test]
    fn central_difference_is_second_order() {
        let grid = RadialGrid::over(1.0, 8).unwrap();
        let err = |tau: f64| {
            let snaps = (0..=(1.0 / tau).round() as usize)
                .map(|m| ScalarField::constant(grid, (m as f64 * tau).sin().exp()).unwrap())
                .collect();
            let traj = ParabolicTrajectory::from_snapshots(tau, snaps).unwrap();
            let m = traj.index_of(0.5);
            let ft = time_derivative(&traj, m, 1.0).unwrap();
            let end = time_derivative(&traj, traj.len() - 1, 1.0).unwrap();
            ((ft.values()[0] - 0.5f64.cos()).abs(), (end.values()[0] - 1.0f64.cos()).abs())
        };
        let (c1, e1) = err(0.02);
        let (c2, e2) = err(0.01);
        assert!((c1 / c2 - 4.0).abs() < 0.4);
        assert!((e1 / e2 - 4.0).abs() < 0.6);
    }

    #[test]
    fn step_refinement_is_first_order() {
        let m = ModelManifold::euclidean(2, 1.0).unwrap();
        let at_end = |tau: f64| {
            let p = problem(
                m,
                64,
                CoefficientProfile::constant(1.0),
                CoefficientProfile::constant(0.0),
                |r| 1.0 + 0.5 * (-r * r).exp(),
                OuterBoundary::Neumann,
                tau,
                0.4,
            );
            run(&p).unwrap().snapshots().last().unwrap().values().to_vec()
        };
        let (u1, u2, u3) = (at_end(0.04), at_end(0.02), at_end(0.01));
        let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ratio = d(&u1, &u2) / d(&u2, &u3);
        assert!(ratio > 1.7 && ratio < 2.3, "{ratio}");
    }

    #[test]
    fn zero_modulation_matches_static_run() {
        let m = ModelManifold::euclidean(3, 2.0).unwrap();
        let a = CoefficientProfile::tanh_bump(-1.0, 0.5, 2.0, 1.0);
        let b = CoefficientProfile::constant(0.0);
        let mk = |a| problem(m, 64, a, b, |r| 1.0 + 0.5 * (-r * r).exp(), OuterBoundary::Dirichlet(1.0), 0.05, 0.5);
        let still = run(&mk(a)).unwrap();
        let moving = run(&mk(a.modulated(0.0, 1.0))).unwrap();
        for (x, y) in still.snapshots().iter().zip(moving.snapshots()) {
            assert_eq!(x.values(), y.values());
        }
    }

    #[test]
    fn invalid_inputs() {
        let m = ModelManifold::euclidean(3, 1.0).unwrap();
        let g = RadialGrid::new(&m, 16).unwrap();
        let u0 = ScalarField::constant(g, 1.0).unwrap();
        let c = CoefficientProfile::constant(0.0);
        let opts = SolverOptions::default();
        assert!(ParabolicProblem::new(m, g, c, c, u0.clone(), OuterBoundary::Neumann, 0.0, 1.0, opts).is_err());
        let bad = ScalarField::constant(g, -1.0).unwrap();
        assert!(ParabolicProblem::new(m, g, c, c, bad, OuterBoundary::Neumann, 0.1, 1.0, opts).is_err());
        let single = ParabolicTrajectory::from_snapshots(0.1, vec![u0]).unwrap();
        assert!(time_derivative(&single, 0, 1.0).is_err());
    }
}
