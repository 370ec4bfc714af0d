//! Left-hand sides of the estimates, differential-inequality residuals, and
//! the pass/fail reports built from them.

use crate::cutoff::build_cutoff;
use crate::error::{Error, Result};
use crate::estimates::{
    corollary_bounds, corollary_exponent, rhs_thm1_case1, rhs_thm1_case2, rhs_thm2, sample_coefficients,
    schrodinger_bounds, schrodinger_elliptic_exponent, CorollaryInputs, EstimateContext, NodeSample, PotentialBounds,
    Sign,
};
use crate::fields::{CoefficientProfile, TimeWindow};
use crate::geometry::{
    hessian_norm_sq, laplace_beltrami, radial_derivative, radial_gradient_sq, radial_inner, ModelManifold,
    RadialGrid, ScalarField,
};
use crate::parabolic::{sup_bound_d, time_derivative, ParabolicTrajectory};

/// Default relative tolerance for estimate checks.
pub const TOL_CHECK: f64 = 1e-6;
/// Default relative tolerance for the differential inequalities.
pub const TOL_LEMMA: f64 = 1e-6;
/// Nodes nearest the outer wall left out of the differential checks.
pub const WALL_EXCLUSION: usize = 3;

/// Quantities derived from a solution.
#[derive(Clone, Debug)]
pub struct DerivedFields {
    /// log u (elliptic) or log(u/D) (parabolic).
    pub f: ScalarField,
    /// log u.
    pub w: ScalarField,
    pub grad_f_sq: ScalarField,
    /// |∇w|² + (a+A)w + M (elliptic).
    pub g: Option<ScalarField>,
    pub f_t: Option<ScalarField>,
    /// t{|∇f|² + (A+a)f + 2(M+b) − 2f_t} (parabolic).
    pub big_f: Option<ScalarField>,
    /// |∇f|²/F where F > 0.
    pub h: Option<Vec<Option<f64>>>,
    /// φF.
    pub lambda: Option<ScalarField>,
}

fn log_field(u: &ScalarField, scale: f64) -> Result<ScalarField> {
    if let Some(i) = u.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositive { node: i, value: u.values()[i] });
    }
    u.map(|v| (v / scale).ln())
}

fn check_samples(samples: &[NodeSample], grid: &RadialGrid) -> Result<()> {
    if samples.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} coefficient samples for {} nodes", samples.len(), grid.len())));
    }
    Ok(())
}

impl DerivedFields {
    pub fn elliptic(u: &ScalarField, samples: &[NodeSample], a_const: f64, m: f64, manifold: &ModelManifold) -> Result<Self> {
        check_samples(samples, u.grid())?;
        let w = log_field(u, 1.0)?;
        let grad = radial_gradient_sq(&w, manifold)?;
        let g: Vec<f64> = (0..w.values().len())
            .map(|i| grad.values()[i] + (samples[i].a + a_const) * w.values()[i] + m)
            .collect();
        Ok(Self {
            f: w.clone(),
            grad_f_sq: grad,
            g: Some(ScalarField::new(*u.grid(), g)?),
            w,
            f_t: None,
            big_f: None,
            h: None,
            lambda: None,
        })
    }

    /// Fields at snapshot `m`; `samples` are the coefficients at that time.
    pub fn parabolic(
        traj: &ParabolicTrajectory,
        m_index: usize,
        samples: &[NodeSample],
        a_const: f64,
        m: f64,
        d: f64,
        manifold: &ModelManifold,
    ) -> Result<Self> {
        check_samples(samples, traj.grid())?;
        let u = traj
            .snapshots()
            .get(m_index)
            .ok_or_else(|| Error::InvalidArgument(format!("snapshot {m_index} out of range")))?;
        let t = traj.time(m_index);
        if !(t > 0.0) {
            return Err(Error::InvalidArgument("parabolic fields need t > 0".into()));
        }
        let f = log_field(u, d)?;
        let w = log_field(u, 1.0)?;
        let grad = radial_gradient_sq(&f, manifold)?;
        let f_t = time_derivative(traj, m_index, d)?;
        let big: Vec<f64> = (0..f.values().len())
            .map(|i| {
                let s = &samples[i];
                t * (grad.values()[i] + (a_const + s.a) * f.values()[i] + 2.0 * (m + s.b) - 2.0 * f_t.values()[i])
            })
            .collect();
        let h = big.iter().zip(grad.values()).map(|(&bf, &g)| (bf > 0.0).then(|| g / bf)).collect();
        let cutoff = build_cutoff(manifold.radius())?;
        let grid = *traj.grid();
        let lambda = ScalarField::new(grid, big.iter().enumerate().map(|(i, v)| cutoff.value(grid.r(i)) * v).collect())?;
        Ok(Self {
            f,
            w,
            grad_f_sq: grad,
            g: None,
            f_t: Some(f_t),
            big_f: Some(ScalarField::new(grid, big)?.with_time(t)),
            h: Some(h),
            lambda: Some(lambda),
        })
    }
}

/// One row of the report.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub case_id: String,
    pub check: String,
    pub n: usize,
    pub radius: f64,
    pub k: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub b_const: Option<f64>,
    pub a_const: Option<f64>,
    pub m: Option<f64>,
    pub lhs_max: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    pub grid: usize,
    pub tau: Option<f64>,
    pub runtime_ms: u64,
    /// False for diagnostic rows that never decide the exit status.
    pub gating: bool,
    /// Where the LHS maximum sits, solver residual, and similar extras.
    pub diagnostics: Vec<(String, f64)>,
}

impl CheckReport {
    pub fn new(check: &str, n: usize, radius: f64, grid: usize) -> Self {
        Self {
            case_id: String::new(),
            check: check.to_string(),
            n,
            radius,
            k: None,
            c1: None,
            c2: None,
            b_const: None,
            a_const: None,
            m: None,
            lhs_max: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            pass: false,
            grid,
            tau: None,
            runtime_ms: 0,
            gating: true,
            diagnostics: Vec::new(),
        }
    }

    pub fn from_context(check: &str, ctx: &EstimateContext, grid: usize) -> Self {
        Self {
            k: Some(ctx.k),
            c1: Some(ctx.c1),
            c2: Some(ctx.c2),
            b_const: Some(ctx.b_const),
            a_const: Some(ctx.a_const),
            m: Some(ctx.m),
            ..Self::new(check, ctx.n, ctx.radius, grid)
        }
    }

    /// Fills LHS/RHS/margin and applies `margin ≥ −tol·(1 + |RHS|)`.
    pub fn decide(mut self, lhs_max: f64, rhs: f64, tol: f64) -> Self {
        self.lhs_max = lhs_max;
        self.rhs = rhs;
        self.margin = rhs - lhs_max;
        self.pass = self.margin.is_finite() && self.margin >= -tol * (1.0 + rhs.abs());
        self
    }

    /// Lemma-style decision: `margin ≥ −tol·scale`.
    pub fn decide_scaled(mut self, lhs_max: f64, rhs: f64, tol: f64, scale: f64) -> Self {
        self.lhs_max = lhs_max;
        self.rhs = rhs;
        self.margin = rhs - lhs_max;
        self.pass = self.margin.is_finite() && self.margin >= -tol * scale;
        self
    }

    /// Re-applies the decision rule with another tolerance.
    pub fn with_tolerance(self, tol: f64) -> Self {
        let (lhs, rhs) = (self.lhs_max, self.rhs);
        self.decide(lhs, rhs, tol)
    }

    pub fn with_case(mut self, id: &str) -> Self {
        self.case_id = id.to_string();
        self
    }

    pub fn diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.push((key.to_string(), value));
        self
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Maximum of `values[i]` over `0..=last` and its node.
fn max_over(values: &[f64], last: usize) -> (f64, usize) {
    values[..=last]
        .iter()
        .enumerate()
        .fold((f64::NEG_INFINITY, 0), |(m, at), (i, &v)| if v > m { (v, i) } else { (m, at) })
}

/// Discrete Bochner residual `Δ|∇w|² − 2⟨∇w,∇Δw⟩ − 2|D²w|² − 2Ric(∇w,∇w)`
/// at every node; only interior nodes are meaningful.
pub fn bochner_residual(w: &ScalarField, manifold: &ModelManifold) -> Result<ScalarField> {
    let grid = *w.grid();
    let grad = radial_gradient_sq(w, manifold)?;
    let lap_grad = laplace_beltrami(&grad, manifold)?;
    let lap = laplace_beltrami(w, manifold)?;
    let inner = radial_inner(w, &lap, manifold)?;
    let hess = hessian_norm_sq(w, manifold)?;
    let values = (0..grid.len())
        .map(|i| {
            let r = grid.r(i);
            let ric = if i == 0 { 0.0 } else { -(manifold.dim() as f64 - 1.0) * manifold.warp().curvature_ratio(r) * grad.values()[i] };
            lap_grad.values()[i] - 2.0 * inner.values()[i] - 2.0 * hess.values()[i] - 2.0 * ric
        })
        .collect();
    ScalarField::new(grid, values)
}

/// sup of the Bochner residual over nodes `1..=N−3` and where it occurs.
/// Composite stencils next to the wall differentiate a one-sided value
/// twice, so those nodes carry an O(1) error and are left out.
pub fn check_bochner(w: &ScalarField, manifold: &ModelManifold) -> Result<(f64, f64)> {
    let res = bochner_residual(w, manifold)?;
    let grid = *w.grid();
    let (worst, at) = (1..=grid.cells() - WALL_EXCLUSION)
        .map(|i| (res.values()[i].abs(), i))
        .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    Ok((worst, grid.r(at)))
}

/// Bochner residual with the grid operators applied to exact data: the
/// discrete Laplacian of the exact `|∇w|²` and the discrete gradient of the
/// exact `Δw`, against exact Hessian and Ricci terms. `d1`, `d2` are w', w''.
/// Returns the sup over nodes `1..=N−3` and where it occurs.
pub fn check_bochner_exact_inputs(
    d1: impl Fn(f64) -> f64,
    d2: impl Fn(f64) -> f64,
    manifold: &ModelManifold,
    grid: &RadialGrid,
) -> Result<(f64, f64)> {
    grid.check_manifold(manifold)?;
    let n1 = manifold.dim() as f64 - 1.0;
    let warp = manifold.warp();
    let lap_exact = |r: f64| {
        if r == 0.0 {
            manifold.dim() as f64 * d2(0.0)
        } else {
            d2(r) + manifold.distance_laplacian(r) * d1(r)
        }
    };
    let grad_sq = ScalarField::from_fn(*grid, |r| d1(r) * d1(r))?;
    let lap_grad = laplace_beltrami(&grad_sq, manifold)?;
    let lap: Vec<f64> = grid.nodes().map(lap_exact).collect();
    let dlap = radial_derivative(&lap, grid.spacing());
    let (worst, at) = (1..=grid.cells() - WALL_EXCLUSION)
        .map(|i| {
            let r = grid.r(i);
            let (w1, w2) = (d1(r), d2(r));
            let tangential = warp.log_derivative(r) * w1;
            let hess = w2 * w2 + n1 * tangential * tangential;
            let ric = -n1 * warp.curvature_ratio(r) * w1 * w1;
            let res = lap_grad.values()[i] - 2.0 * w1 * dlap[i] - 2.0 * hess - 2.0 * ric;
            (res.abs(), r)
        })
        .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    Ok((worst, at))
}

/// Which form of the G-inequality to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LemmaForm {
    /// The coefficient of G as stated: −4Aw/n + 4(b−M)/n − 2K − 2a − 2.
    AsStated,
    /// The coefficient obtained by redoing the expansion, which keeps the
    /// 2A|∇w|² term: −4Aw/n + 4(b−M)/n − 2K + A − a − 2.
    Rederived,
}

/// Node-wise outcome of a differential-inequality check.
#[derive(Clone, Debug)]
pub struct LemmaResult {
    /// LHS − RHS at every node (NaN where excluded).
    pub margin: Vec<f64>,
    pub min_margin: f64,
    pub location: f64,
    pub scale: f64,
    /// Zero when no node qualified, in which case the margin is +∞.
    pub checked_nodes: usize,
}

impl LemmaResult {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_margin >= -tol * self.scale
    }

    /// Row with `lhs_max = max(RHS − LHS)` against 0.
    pub fn report(&self, check: &str, ctx: &EstimateContext, grid: usize, tol: f64) -> CheckReport {
        let worst = if self.checked_nodes == 0 { f64::NEG_INFINITY } else { -self.min_margin };
        let mut r = CheckReport::from_context(check, ctx, grid)
            .decide_scaled(worst, 0.0, tol, self.scale)
            .diag("r_at_min", self.location)
            .diag("scale", self.scale)
            .diag("checked_nodes", self.checked_nodes as f64);
        if self.checked_nodes == 0 {
            // Vacuous: nothing to check.
            r.margin = f64::INFINITY;
            r.pass = true;
        }
        r
    }

    fn from_sides(lhs: &[f64], rhs: &[f64], include: impl Fn(usize) -> bool, grid: &RadialGrid) -> Result<Self> {
        let mut margin = vec![f64::NAN; lhs.len()];
        let mut min_margin = f64::INFINITY;
        let mut location = 0.0;
        let mut max_lhs: f64 = 0.0;
        let mut max_rhs: f64 = 0.0;
        let mut count = 0;
        for i in 0..lhs.len() {
            if !include(i) {
                continue;
            }
            count += 1;
            margin[i] = lhs[i] - rhs[i];
            max_lhs = max_lhs.max(lhs[i].abs());
            max_rhs = max_rhs.max(rhs[i].abs());
            if margin[i] < min_margin {
                min_margin = margin[i];
                location = grid.r(i);
            }
        }
        // No admissible node (F ≤ 0 everywhere): the inequality is vacuous.
        Ok(Self { margin, min_margin, location, scale: 1.0 + max_lhs + max_rhs, checked_nodes: count })
    }
}

/// ΔG against the right-hand side of the G-inequality on `B_p(2R − 3h)`.
pub fn check_elliptic_lemma(
    u: &ScalarField,
    samples: &[NodeSample],
    a_const: f64,
    m: f64,
    k: f64,
    manifold: &ModelManifold,
    form: LemmaForm,
) -> Result<LemmaResult> {
    let grid = *u.grid();
    let fields = DerivedFields::elliptic(u, samples, a_const, m, manifold)?;
    let g = fields.g.as_ref().expect("elliptic fields carry G");
    let w = fields.w.values();
    let lap_g = laplace_beltrami(g, manifold)?;
    let inner = radial_inner(g, &fields.w, manifold)?;
    let n = manifold.dim() as f64;
    let a0 = a_const;
    let rhs: Vec<f64> = (0..grid.len())
        .map(|i| {
            let s = &samples[i];
            let (gi, wi) = (g.values()[i], w[i]);
            let tail = match form {
                LemmaForm::AsStated => -2.0 * s.a - 2.0,
                LemmaForm::Rederived => a0 - s.a - 2.0,
            };
            2.0 * gi * gi / n - 2.0 * inner.values()[i]
                + gi * (-4.0 * a0 * wi / n + 4.0 * (s.b - m) / n - 2.0 * k + tail)
                + (4.0 * (m - s.b) * a0 / n + (2.0 * k + 2.0) * (a0 + s.a) + s.lap_a) * wi
                + 2.0 * a0 * a0 * wi * wi / n
                - a0 * (a0 + s.a) * wi
                + 2.0 * (s.b - m) * (s.b - m) / n
                + (a0 + s.a) * (m - s.b)
                + (2.0 - 2.0 * a0) * m
                + 2.0 * k * m
                - s.grad_a_sq
                - s.grad_b_sq
        })
        .collect();
    let last = grid.cells() - WALL_EXCLUSION;
    LemmaResult::from_sides(lap_g.values(), &rhs, |i| i <= last, &grid)
}

/// ΔF − F_t against the right-hand side of the F-inequality at snapshot
/// `m_index`, where F exceeds `1e-8·scale`.
#[allow(clippy::too_many_arguments)]
pub fn check_parabolic_lemma(
    traj: &ParabolicTrajectory,
    a: &CoefficientProfile,
    b: &CoefficientProfile,
    manifold: &ModelManifold,
    a_const: f64,
    m: f64,
    d: f64,
    k: f64,
    m_index: usize,
) -> Result<LemmaResult> {
    if m_index < 2 || m_index + 2 >= traj.len() {
        return Err(Error::InvalidArgument(format!(
            "snapshot {m_index} needs two neighbours on each side (have {})",
            traj.len()
        )));
    }
    let grid = *traj.grid();
    let at = |j: usize| -> Result<(DerivedFields, Vec<NodeSample>)> {
        let s = sample_coefficients(a, b, manifold, &grid, TimeWindow::instant(traj.time(j)))?;
        Ok((DerivedFields::parabolic(traj, j, &s, a_const, m, d, manifold)?, s))
    };
    let (prev, _) = at(m_index - 1)?;
    let (next, _) = at(m_index + 1)?;
    let (here, s) = at(m_index)?;
    let big = here.big_f.as_ref().expect("parabolic fields carry F");
    let f_prev = prev.big_f.as_ref().expect("parabolic fields carry F");
    let f_next = next.big_f.as_ref().expect("parabolic fields carry F");
    let t = traj.time(m_index);
    let tau = traj.tau();
    let lap_f = laplace_beltrami(big, manifold)?;
    let grad_big_f = radial_inner(&here.f, big, manifold)?;
    let n = manifold.dim() as f64;
    let log_d = d.ln();
    let a0 = a_const;
    let lhs: Vec<f64> = (0..grid.len())
        .map(|i| lap_f.values()[i] - (f_next.values()[i] - f_prev.values()[i]) / (2.0 * tau))
        .collect();
    let rhs: Vec<f64> = (0..grid.len())
        .map(|i| {
            let s = &s[i];
            let bf = big.values()[i];
            let f = here.f.values()[i];
            let grad = here.grad_f_sq.values()[i];
            // (1 + ht)F = F + t|∇f|² and hF = |∇f|², so no division by F.
            let one_ht_f = bf + t * grad;
            let ml = m - s.a * log_d;
            t * ((a0 - 2.0 * k - 2.0 - log_d.abs()) * grad + one_ht_f * one_ht_f / (2.0 * n * t * t)
                - 2.0 * one_ht_f * ml / (n * t))
                + t * f * (one_ht_f * (s.a - a0) / (n * t) + s.lap_a + s.a_t + 2.0 * (a0 - s.a) * ml / n)
                + t * (2.0 * s.a * (m + s.b) + 2.0 * s.a_t * log_d + 2.0 * s.lap_b + 2.0 * ml * ml / n)
                - bf / t
                - s.a * bf
                - t * ((a0 + s.a) * (s.a * log_d + s.b) + s.grad_b_sq + (1.0 + log_d.abs()) * s.grad_a_sq)
                - 2.0 * grad_big_f.values()[i]
        })
        .collect();
    let floor = 1e-8 * (1.0 + big.sup_norm());
    let last = grid.cells() - WALL_EXCLUSION;
    LemmaResult::from_sides(&lhs, &rhs, |i| i <= last && big.values()[i] > floor, &grid)
}

fn elliptic_lhs(u: &ScalarField, ctx: &EstimateContext, manifold: &ModelManifold) -> Result<Vec<f64>> {
    check_samples(&ctx.samples, u.grid())?;
    let f = log_field(u, 1.0)?;
    let grad = radial_gradient_sq(&f, manifold)?;
    Ok((0..f.values().len())
        .map(|i| grad.values()[i] + (ctx.a_const + ctx.samples[i].a) * f.values()[i])
        .collect())
}

/// `|∇f|² + (A_i + a)f` on `B_p(R)` against the matching closed-form bound.
pub fn check_thm1(u: &ScalarField, ctx: &EstimateContext, manifold: &ModelManifold, residual: f64) -> Result<CheckReport> {
    let grid = *u.grid();
    let a0 = ctx.a_const;
    let (rhs, name) = match ctx.sign() {
        Sign::Positive => {
            if let Some(s) = ctx.samples.iter().find(|s| s.a < 2.0 * a0) {
                return Err(Error::Hypothesis(format!("a = {} < 2A₁ = {}", s.a, 2.0 * a0)));
            }
            (rhs_thm1_case1(ctx)?, "thm1-case1")
        }
        Sign::Negative => {
            let a3 = ctx.a_extreme.unwrap_or(f64::NEG_INFINITY);
            if let Some(s) = ctx.samples.iter().find(|s| s.a > 2.0 * a0 || s.a < a3) {
                return Err(Error::Hypothesis(format!("a = {} outside [A₃, 2A₂] = [{a3}, {}]", s.a, 2.0 * a0)));
            }
            (rhs_thm1_case2(ctx)?, "thm1-case2")
        }
    };
    let lhs = elliptic_lhs(u, ctx, manifold)?;
    let inner = grid.last_index_within(ctx.radius);
    let (lhs_max, at) = max_over(&lhs, inner);
    // Gradient near the wall relative to the interior flags wall distortion.
    let df: Vec<f64> = radial_derivative(&u.values().iter().map(|v| v.ln()).collect::<Vec<_>>(), grid.spacing());
    let inner_grad = df[..=inner].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let outer_start = grid.last_index_within(1.75 * ctx.radius);
    let wall_grad = df[outer_start..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(CheckReport::from_context(name, ctx, grid.cells())
        .decide(lhs_max, rhs, TOL_CHECK)
        .diag("r_at_max", grid.r(at))
        .diag("solver_residual", residual)
        .diag("wall_gradient_ratio", wall_grad / inner_grad.max(1e-300)))
}

/// Earliest and latest admissible check times for a trajectory.
pub fn time_window(traj: &ParabolicTrajectory) -> (f64, f64) {
    (5.0 * traj.tau(), traj.final_time() - 5.0 * traj.tau())
}

/// `|∇f|² + (A+a)f − 2f_t` on `B_p(R)` at each requested time.
pub fn check_thm2(
    traj: &ParabolicTrajectory,
    ctx: &EstimateContext,
    a: &CoefficientProfile,
    b: &CoefficientProfile,
    manifold: &ModelManifold,
    times: &[f64],
) -> Result<Vec<CheckReport>> {
    let d = ctx.d.ok_or_else(|| Error::InvalidArgument("parabolic check needs D".into()))?;
    let sup = sup_bound_d(traj);
    if sup > d * (1.0 + 1e-12) {
        return Err(Error::Hypothesis(format!("u reaches {sup} above D = {d}")));
    }
    let grid = *traj.grid();
    let (t_lo, t_hi) = time_window(traj);
    let inner = grid.last_index_within(ctx.radius);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < t_lo - 1e-12 || t > t_hi + 1e-12 {
            return Err(Error::InvalidArgument(format!("t = {t} outside the check window [{t_lo}, {t_hi}]")));
        }
        let m_index = traj.index_of(t);
        let tm = traj.time(m_index);
        let samples = sample_coefficients(a, b, manifold, &grid, TimeWindow::instant(tm))?;
        let fields = DerivedFields::parabolic(traj, m_index, &samples, ctx.a_const, ctx.m, d, manifold)?;
        let f_t = fields.f_t.as_ref().expect("parabolic fields carry f_t");
        let lhs: Vec<f64> = (0..grid.len())
            .map(|i| {
                fields.grad_f_sq.values()[i] + (ctx.a_const + samples[i].a) * fields.f.values()[i]
                    - 2.0 * f_t.values()[i]
            })
            .collect();
        let (lhs_max, at) = max_over(&lhs, inner);
        let reaction_max = (0..=inner)
            .map(|i| (ctx.a_const + samples[i].a) * fields.f.values()[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let kinetic_max = (0..=inner)
            .map(|i| fields.grad_f_sq.values()[i] - 2.0 * f_t.values()[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut report = CheckReport::from_context("thm2", ctx, grid.cells())
            .decide(lhs_max, rhs_thm2(ctx, tm)?, TOL_CHECK)
            .diag("t", tm)
            .diag("r_at_max", grid.r(at))
            .diag("D", d)
            .diag("reaction_max", reaction_max)
            .diag("kinetic_max", kinetic_max);
        report.tau = Some(traj.tau());
        out.push(report);
    }
    Ok(out)
}

/// sup u (positive a) or inf u (negative a) on `B_p(R/2)` against the
/// global bound.
pub fn check_corollary(u: &ScalarField, ctx: &EstimateContext) -> Result<CheckReport> {
    let inputs = CorollaryInputs::from_context(ctx)?;
    let exponent = corollary_exponent(&inputs)?;
    let bound = corollary_bounds(&inputs)?;
    let grid = *u.grid();
    let last = grid.last_index_within(ctx.radius / 2.0);
    let region = &u.values()[..=last];
    let report = CheckReport::from_context("cor1", ctx, grid.cells());
    let report = match ctx.sign() {
        Sign::Positive => {
            let sup = region.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            report.decide(sup, bound, TOL_CHECK)
        }
        Sign::Negative => {
            let inf = region.iter().copied().fold(f64::INFINITY, f64::min);
            report.decide(bound, inf, TOL_CHECK)
        }
    };
    Ok(report.diag("exponent", exponent).diag("b1", inputs.b1).diag("a1", inputs.a1))
}

/// sup u on `B_p(R)` against both global bounds for `Δu + 2u log u + Vu = 0`.
pub fn check_schrodinger(
    u: &ScalarField,
    v_values: &[f64],
    v: &PotentialBounds,
    manifold: &ModelManifold,
) -> Result<Vec<CheckReport>> {
    let grid = *u.grid();
    if v_values.len() != grid.len() {
        return Err(Error::GridMismatch("potential samples do not match the grid".into()));
    }
    let n = manifold.dim();
    let e = schrodinger_bounds(v, n)?;
    let last = grid.last_index_within(manifold.radius());
    let sup = u.values()[..=last].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pointwise = (0..=last)
        .map(|i| schrodinger_elliptic_exponent(v, n, v_values[i]) - u.values()[i].ln())
        .fold(f64::INFINITY, f64::min);
    let tighter = if e.parabolic < e.elliptic { 1.0 } else { 0.0 };
    let base = |name: &str, exponent: f64| {
        CheckReport {
            k: Some(0.0),
            a_const: Some(1.0),
            ..CheckReport::new(name, n, manifold.radius(), grid.cells())
        }
        .decide(sup, exponent.exp(), TOL_CHECK)
        .diag("exponent", exponent)
        .diag("parabolic_route_tighter", tighter)
    };
    Ok(vec![
        base("schrodinger-elliptic", e.elliptic).diag("pointwise_log_margin", pointwise),
        base("schrodinger-parabolic", e.parabolic),
    ])
}

/// One intermediate bound on G.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseBound {
    pub role: String,
    pub bound: f64,
    /// max G over `B_p(R)`.
    pub g_max: f64,
}

impl CaseBound {
    pub fn margin(&self) -> f64 {
        self.bound - self.g_max
    }
}

/// G on `B_p(R)` against each intermediate case bound, plus the largest of
/// them under the role `combined`. Reported, never gating.
pub fn diagnostic_case_bounds(u: &ScalarField, ctx: &EstimateContext, manifold: &ModelManifold) -> Result<Vec<CaseBound>> {
    let fields = DerivedFields::elliptic(u, &ctx.samples, ctx.a_const, ctx.m, manifold)?;
    let g = fields.g.expect("elliptic fields carry G");
    let grid = *u.grid();
    let inner = grid.last_index_within(ctx.radius);
    let (g_max, _) = max_over(g.values(), inner);
    let n = ctx.n as f64;
    let (b, k, c1sq, r2) = (ctx.b_const, ctx.k, ctx.c1 * ctx.c1, ctx.radius * ctx.radius);
    let a0 = ctx.a_const;
    let m = ctx.m;
    let a_plus = ctx.plus(|s| s.a);
    let mb = ctx.plus(|s| m - s.b);
    let lap_plus = ctx.plus(|s| s.lap_a);
    let shifted_plus = ctx.plus(|s| a0 + s.a);
    let young = n * c1sq / r2;
    let flat = n * (b + young + 4.0 * mb / n + 2.0 * k + 2.0 * a_plus + 2.0);
    let curved = n * ((a0 + a_plus).powi(2) * c1sq / (3.0 * a0 * a0 * r2)
        + 4.0 * mb / n
        + (2.0 * k + 2.0) * shifted_plus / a0
        + lap_plus / a0);
    let bounds: Vec<(&str, f64)> = match ctx.sign() {
        Sign::Positive => {
            let high = 2.0 * n * (b + 3.0 * n * a_plus * c1sq / (a0 * r2) + 2.0 * k + 2.0 * a_plus + 2.0 + 4.0 * mb / n);
            vec![("pos-w-high", high), ("pos-w-mid", high + 2.0 * n * a0), ("pos-w-neg-a", flat), ("pos-w-neg-b", curved)]
        }
        Sign::Negative => {
            let nonpos = 2.0 * n * (b + 3.0 * n * a_plus * c1sq / (a0 * r2) + 2.0 * k + 2.0 + 4.0 * mb / n);
            vec![
                ("neg-w-nonpos", nonpos),
                ("neg-w-mid-a", flat),
                ("neg-w-mid-b", curved - n * shifted_plus),
                ("neg-w-high-a", flat),
                ("neg-w-high-b", curved),
            ]
        }
    };
    let combined = bounds.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<CaseBound> =
        bounds.into_iter().map(|(role, bound)| CaseBound { role: role.to_string(), bound, g_max }).collect();
    out.push(CaseBound { role: "combined".to_string(), bound: combined, g_max });
    Ok(out)
}
