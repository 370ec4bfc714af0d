//! Selection of the estimate constants and evaluation of the closed-form
//! right-hand sides.
//!
//! Composite plus-parts such as `(M − b)⁺` are taken node by node over the
//! sampled region, never as combinations of separate sups.

use std::fmt;

use crate::cutoff::{b_constant, build_cutoff};
use crate::error::{Error, Result};
use crate::fields::{coefficient_bounds, CoefficientBounds, CoefficientProfile, TimeWindow};
use crate::geometry::{ModelManifold, RadialGrid};

/// Coefficient data at one node (and one time for space-time samples).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NodeSample {
    pub a: f64,
    pub b: f64,
    pub grad_a_sq: f64,
    pub grad_b_sq: f64,
    pub lap_a: f64,
    pub lap_b: f64,
    pub a_t: f64,
}

/// Analytic samples of `a`, `b` at every node of `grid` and every time of
/// `window`.
pub fn sample_coefficients(
    a: &CoefficientProfile,
    b: &CoefficientProfile,
    manifold: &ModelManifold,
    grid: &RadialGrid,
    window: TimeWindow,
) -> Result<Vec<NodeSample>> {
    a.validate()?;
    b.validate()?;
    let mut out = Vec::with_capacity(grid.len() * window.samples.max(1));
    for t in window.times() {
        for r in grid.nodes() {
            out.push(NodeSample {
                a: a.value(r, t),
                b: b.value(r, t),
                grad_a_sq: a.grad_sq(r, t),
                grad_b_sq: b.grad_sq(r, t),
                lap_a: a.laplacian(manifold, r, t),
                lap_b: b.laplacian(manifold, r, t),
                a_t: a.dt(r, t),
            });
        }
    }
    Ok(out)
}

/// sup over samples of max(g, 0).
pub fn plus_over(samples: &[NodeSample], g: impl Fn(&NodeSample) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(samples.iter().map(g).fold(0.0, f64::max))
}

fn require_finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!("{name} is not finite")))
    }
}

/// A₁ = (inf a)/2 for a positive.
pub fn select_a1(a: &CoefficientBounds) -> Result<f64> {
    if !(a.inf > 0.0) {
        return Err(Error::Hypothesis(format!("positive-a case needs inf a > 0, got {}", a.inf)));
    }
    Ok(a.inf / 2.0)
}

/// (A₂, A₃) = ((sup a)/2, inf a) for a negative.
pub fn select_a2_a3(a: &CoefficientBounds) -> Result<(f64, f64)> {
    if !(a.sup < 0.0) {
        return Err(Error::Hypothesis(format!("negative-a case needs sup a < 0, got {}", a.sup)));
    }
    Ok((a.sup / 2.0, a.inf))
}

/// A₄ = sup a.
pub fn select_a4(a: &CoefficientBounds) -> Result<f64> {
    if !(a.inf > 0.0) {
        return Err(Error::Hypothesis(format!("A₄ needs a positive a, got inf a = {}", a.inf)));
    }
    Ok(a.sup)
}

/// `q·M² + l·M + c ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadratic {
    pub q: f64,
    pub l: f64,
    pub c: f64,
}

impl Quadratic {
    pub fn eval(&self, m: f64) -> f64 {
        (self.q * m + self.l) * m + self.c
    }

    fn violated(&self, m: f64) -> bool {
        let scale = 1.0 + (self.q * m * m).abs() + (self.l * m).abs() + self.c.abs();
        self.eval(m) < -1e-13 * scale
    }

    /// Larger real root, computed without cancellation.
    fn upper_root(&self) -> Option<f64> {
        if self.q == 0.0 {
            return (self.l > 0.0).then(|| -self.c / self.l);
        }
        let disc = self.l * self.l - 4.0 * self.q * self.c;
        if disc < 0.0 {
            return None;
        }
        let t = -0.5 * (self.l + self.l.signum() * disc.sqrt());
        if t == 0.0 {
            return Some(0.0);
        }
        let (r1, r2) = (t / self.q, self.c / t);
        Some(r1.max(r2))
    }
}

/// Smallest M ≥ `lower` with every quadratic nonnegative. Each condition
/// has q > 0, so a violated candidate lies strictly between the roots and
/// the smallest feasible value above it is the upper root.
pub fn minimal_feasible(lower: f64, conditions: &[Quadratic]) -> Result<f64> {
    let mut m = require_finite("lower bound", lower)?;
    loop {
        let mut moved = false;
        for c in conditions {
            if c.violated(m) {
                let root = c
                    .upper_root()
                    .ok_or_else(|| Error::Infeasible(format!("condition {c:?} has no admissible M")))?;
                if root > m {
                    m = root;
                    moved = true;
                } else if c.q <= 0.0 {
                    return Err(Error::Infeasible(format!("condition {c:?} cannot be met above {m}")));
                }
            }
        }
        if !moved {
            // Adding 0.0 turns a −0 from −b with b = 0 into +0.
            return require_finite("selected constant", m + 0.0);
        }
    }
}

/// Which of the two elliptic regimes a selection is made for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

fn elliptic_quadratic(s: &NodeSample, a_const: f64, k: f64, n: f64) -> Quadratic {
    // (2/n)(M−b)² + (A+a)(M−b) + (2−2A)M + 2KM − |∇a|² − |∇b|²
    let ap = a_const + s.a;
    Quadratic {
        q: 2.0 / n,
        l: -4.0 * s.b / n + ap + 2.0 - 2.0 * a_const + 2.0 * k,
        c: 2.0 * s.b * s.b / n - ap * s.b - s.grad_a_sq - s.grad_b_sq,
    }
}

/// `4(M−b)A/n + (2K+2)(A+a) + Δa`; required ≥ 0 for positive a and ≤ 0
/// for negative a. Both reduce to M ≥ b − n((2K+2)(A+a) + Δa)/(4A).
fn elliptic_linear(s: &NodeSample, a_const: f64, k: f64, n: f64, m: f64) -> f64 {
    4.0 * (m - s.b) * a_const / n + (2.0 * k + 2.0) * (a_const + s.a) + s.lap_a
}

fn elliptic_linear_bound(s: &NodeSample, a_const: f64, k: f64, n: f64) -> f64 {
    s.b - n * ((2.0 * k + 2.0) * (a_const + s.a) + s.lap_a) / (4.0 * a_const)
}

fn select_elliptic_m(samples: &[NodeSample], a_const: f64, k: f64, n: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if a_const == 0.0 {
        return Err(Error::Hypothesis("A must be nonzero".into()));
    }
    let n = n as f64;
    let lower = samples.iter().map(|s| elliptic_linear_bound(s, a_const, k, n)).fold(0.0, f64::max);
    let quads: Vec<Quadratic> = samples.iter().map(|s| elliptic_quadratic(s, a_const, k, n)).collect();
    minimal_feasible(lower, &quads)
}

/// Smallest M₁ ≥ 0 meeting both positive-a conditions at every sample.
pub fn select_m1(samples: &[NodeSample], a1: f64, k: f64, n: usize) -> Result<f64> {
    if !(a1 > 0.0) {
        return Err(Error::Hypothesis(format!("A₁ must be positive, got {a1}")));
    }
    select_elliptic_m(samples, a1, k, n)
}

/// Smallest M₂ ≥ 0 meeting both negative-a conditions at every sample.
pub fn select_m2(samples: &[NodeSample], a2: f64, k: f64, n: usize) -> Result<f64> {
    if !(a2 < 0.0) {
        return Err(Error::Hypothesis(format!("A₂ must be negative, got {a2}")));
    }
    select_elliptic_m(samples, a2, k, n)
}

/// Smallest slack over the elliptic M-conditions (negative when violated).
pub fn elliptic_slack(samples: &[NodeSample], a_const: f64, k: f64, n: usize, sign: Sign, m: f64) -> f64 {
    let nf = n as f64;
    samples
        .iter()
        .map(|s| {
            let lin = elliptic_linear(s, a_const, k, nf, m);
            let lin = if sign == Sign::Positive { lin } else { -lin };
            elliptic_quadratic(s, a_const, k, nf).eval(m).min(lin)
        })
        .fold(m, f64::min)
}

/// A = max((a)⁺ + 1, 2K + 2 + |log D|).
pub fn select_a_parabolic(a_plus: f64, k: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) || !(a_plus >= 0.0) || !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad inputs (a)⁺={a_plus}, K={k}, D={d}")));
    }
    Ok((a_plus + 1.0).max(2.0 * k + 2.0 + d.ln().abs()))
}

fn parabolic_quadratic(s: &NodeSample, a_const: f64, log_d: f64, n: f64) -> Quadratic {
    // (2/n)(M − aL)² + 2a(M+b) − (A+a)(aL+b) + 2a_t L + 2Δb − |∇b|² − (1+|L|)|∇a|²
    let al = s.a * log_d;
    Quadratic {
        q: 2.0 / n,
        l: -4.0 * al / n + 2.0 * s.a,
        c: 2.0 * al * al / n + 2.0 * s.a * s.b - (a_const + s.a) * (al + s.b) + 2.0 * s.a_t * log_d + 2.0 * s.lap_b
            - s.grad_b_sq
            - (1.0 + log_d.abs()) * s.grad_a_sq,
    }
}

/// Smallest M with M + b ≥ 0, M − a·log D ≥ 0 and the quadratic condition
/// at every space-time sample.
pub fn select_m_parabolic(samples: &[NodeSample], a_const: f64, d: f64, n: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("D must be positive, got {d}")));
    }
    let log_d = d.ln();
    let lower = samples.iter().map(|s| (-s.b).max(s.a * log_d)).fold(f64::NEG_INFINITY, f64::max);
    let quads: Vec<Quadratic> = samples.iter().map(|s| parabolic_quadratic(s, a_const, log_d, n as f64)).collect();
    minimal_feasible(lower, &quads)
}

/// Smallest slack over the three parabolic M-conditions.
pub fn parabolic_slack(samples: &[NodeSample], a_const: f64, d: f64, n: usize, m: f64) -> f64 {
    let log_d = d.ln();
    samples
        .iter()
        .map(|s| {
            let q = parabolic_quadratic(s, a_const, log_d, n as f64).eval(m);
            q.min(m + s.b).min(m - s.a * log_d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Which estimate a context was built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseTag {
    Thm1Case1,
    Thm1Case2,
    Thm2,
    Cor1,
    Schrodinger,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::Thm1Case1 => "thm1-case1",
            CaseTag::Thm1Case2 => "thm1-case2",
            CaseTag::Thm2 => "thm2",
            CaseTag::Cor1 => "cor1",
            CaseTag::Schrodinger => "schrodinger",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Thm1Case1, Self::Thm1Case2, Self::Thm2, Self::Cor1, Self::Schrodinger]
            .into_iter()
            .find(|c| c.as_str() == s)
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All constants for one verification case.
#[derive(Clone, Debug)]
pub struct EstimateContext {
    pub case: CaseTag,
    pub n: usize,
    pub k: f64,
    pub radius: f64,
    pub c1: f64,
    pub c2: f64,
    pub b_const: f64,
    /// A₁, A₂ or the parabolic A, depending on the case.
    pub a_const: f64,
    /// A₃ (negative a) or A₄ (positive a) when used.
    pub a_extreme: Option<f64>,
    /// M₁, M₂ or the parabolic M.
    pub m: f64,
    pub d: Option<f64>,
    pub horizon: Option<f64>,
    pub a_bounds: CoefficientBounds,
    pub b_bounds: CoefficientBounds,
    /// Samples over `B_p(2R)` (× the time window for parabolic cases).
    pub samples: Vec<NodeSample>,
}

impl EstimateContext {
    pub fn sign(&self) -> Sign {
        if self.a_const > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn plus(&self, g: impl Fn(&NodeSample) -> f64) -> f64 {
        self.samples.iter().map(g).fold(0.0, f64::max)
    }
}

fn geometry_constants(manifold: &ModelManifold, grid: &RadialGrid) -> Result<(f64, f64, f64, f64)> {
    let k = manifold.ricci_lower_bound(grid)?;
    let cutoff = build_cutoff(manifold.radius())?;
    let b = b_constant(manifold.dim(), k, manifold.radius(), cutoff.c1(), cutoff.c2())?;
    Ok((k, cutoff.c1(), cutoff.c2(), b))
}

/// Context for the elliptic estimate; the sign of `a` picks the regime.
pub fn elliptic_context(
    case: CaseTag,
    manifold: &ModelManifold,
    grid: &RadialGrid,
    a: &CoefficientProfile,
    b: &CoefficientProfile,
) -> Result<EstimateContext> {
    let window = TimeWindow::instant(0.0);
    let a_bounds = coefficient_bounds(a, manifold, grid, window)?;
    let b_bounds = coefficient_bounds(b, manifold, grid, window)?;
    let samples = sample_coefficients(a, b, manifold, grid, window)?;
    let (k, c1, c2, b_const) = geometry_constants(manifold, grid)?;
    let n = manifold.dim();
    let negative = match case {
        CaseTag::Thm1Case2 => true,
        CaseTag::Thm1Case1 | CaseTag::Schrodinger => false,
        CaseTag::Cor1 => a_bounds.sup < 0.0,
        CaseTag::Thm2 => return Err(Error::InvalidArgument("thm2 needs a parabolic context".into())),
    };
    let (a_const, a_extreme, m) = if negative {
        let (a2, a3) = select_a2_a3(&a_bounds)?;
        (a2, Some(a3), select_m2(&samples, a2, k, n)?)
    } else {
        let a1 = select_a1(&a_bounds)?;
        (a1, Some(select_a4(&a_bounds)?), select_m1(&samples, a1, k, n)?)
    };
    Ok(EstimateContext {
        case,
        n,
        k,
        radius: manifold.radius(),
        c1,
        c2,
        b_const,
        a_const,
        a_extreme,
        m,
        d: None,
        horizon: None,
        a_bounds,
        b_bounds,
        samples,
    })
}

/// Context for the parabolic estimate with a given upper bound `d` of u.
pub fn parabolic_context(
    manifold: &ModelManifold,
    grid: &RadialGrid,
    a: &CoefficientProfile,
    b: &CoefficientProfile,
    window: TimeWindow,
    d: f64,
) -> Result<EstimateContext> {
    let a_bounds = coefficient_bounds(a, manifold, grid, window)?;
    let b_bounds = coefficient_bounds(b, manifold, grid, window)?;
    let samples = sample_coefficients(a, b, manifold, grid, window)?;
    let (k, c1, c2, b_const) = geometry_constants(manifold, grid)?;
    let n = manifold.dim();
    let a_plus = plus_over(&samples, |s| s.a)?;
    let a_const = select_a_parabolic(a_plus, k, d)?;
    let m = select_m_parabolic(&samples, a_const, d, n)?;
    Ok(EstimateContext {
        case: CaseTag::Thm2,
        n,
        k,
        radius: manifold.radius(),
        c1,
        c2,
        b_const,
        a_const,
        a_extreme: None,
        m,
        d: Some(d),
        horizon: Some(window.end),
        a_bounds,
        b_bounds,
        samples,
    })
}

/// Shared head `n{2B + 3n(a²/A²)⁺C₁²/R² + (3K+3)(a/A)⁺} + n{(8/n)(M−b)⁺ + (Δa/A)⁺}`.
fn rhs_thm1_common(ctx: &EstimateContext) -> f64 {
    let n = ctx.n as f64;
    let a0 = ctx.a_const;
    let head = 2.0 * ctx.b_const
        + 3.0 * n * ctx.plus(|s| s.a * s.a / (a0 * a0)) * ctx.c1 * ctx.c1 / (ctx.radius * ctx.radius)
        + (3.0 * ctx.k + 3.0) * ctx.plus(|s| s.a / a0);
    let m = ctx.m;
    let tail = 8.0 / n * ctx.plus(|s| m - s.b) + ctx.plus(|s| s.lap_a / a0);
    n * head + n * tail
}

/// Bound for `|∇f|² + (A₁+a)f` with positive a.
pub fn rhs_thm1_case1(ctx: &EstimateContext) -> Result<f64> {
    if !(ctx.a_const > 0.0) {
        return Err(Error::Hypothesis("positive-a bound needs A₁ > 0".into()));
    }
    let n = ctx.n as f64;
    Ok(rhs_thm1_common(ctx) + n * 5.0 * ctx.plus(|s| s.a))
}

/// Bound for `|∇f|² + (A₂+a)f` with negative a.
pub fn rhs_thm1_case2(ctx: &EstimateContext) -> Result<f64> {
    if !(ctx.a_const < 0.0) {
        return Err(Error::Hypothesis("negative-a bound needs A₂ < 0".into()));
    }
    let n = ctx.n as f64;
    Ok(rhs_thm1_common(ctx) + n * ctx.plus(|s| -1.5 * s.a))
}

/// Bound for `|∇f|² + (A+a)f − 2f_t` at time t.
pub fn rhs_thm2(ctx: &EstimateContext, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let d = ctx.d.ok_or_else(|| Error::InvalidArgument("parabolic bound needs D".into()))?;
    let n = ctx.n as f64;
    let log_d = d.ln();
    let a_plus = ctx.plus(|s| s.a);
    let gap = ctx.a_const - a_plus;
    if !(gap > 0.0) {
        return Err(Error::Hypothesis(format!("A = {} must exceed [a]⁺ = {a_plus}", ctx.a_const)));
    }
    let m = ctx.m;
    let first = a_plus + ctx.b_const + n * ctx.c1 * ctx.c1 / (ctx.radius * ctx.radius)
        + 2.0 * ctx.plus(|s| m - s.a * log_d) / n;
    let bracket = (-(ctx.a_const - 2.0 * ctx.k - 2.0 - log_d.abs())).max(0.0);
    let second = 0.5 * bracket + ctx.plus(|s| s.lap_a + s.a_t) / (4.0 * gap);
    Ok(4.0 * n / t + 4.0 * n * first + 4.0 * n * second)
}

/// Inputs of the global bounds on u.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorollaryInputs {
    pub n: usize,
    pub k: f64,
    /// A₁ (positive a) or A₂ (negative a).
    pub a_const: f64,
    /// A₄ (positive a) or A₃ (negative a).
    pub a_extreme: f64,
    pub m: f64,
    /// Global lower bound of b.
    pub b1: f64,
    /// Global bound of |Δa|.
    pub a1: f64,
}

impl CorollaryInputs {
    pub fn from_context(ctx: &EstimateContext) -> Result<Self> {
        let a_extreme = ctx
            .a_extreme
            .ok_or_else(|| Error::Hypothesis("global bound needs A₃ or A₄".into()))?;
        let a1 = ctx.samples.iter().map(|s| s.lap_a.abs()).fold(0.0, f64::max);
        let b1 = ctx.samples.iter().map(|s| s.b).fold(f64::INFINITY, f64::min);
        Ok(Self { n: ctx.n, k: ctx.k, a_const: ctx.a_const, a_extreme, m: ctx.m, b1, a1 })
    }
}

/// Exponent of the global bound: an upper bound on u for positive a and a
/// lower bound for negative a.
pub fn corollary_exponent(inp: &CorollaryInputs) -> Result<f64> {
    let n = inp.n as f64;
    let c = inp.a_const;
    if !(inp.a1 >= 0.0) || !inp.b1.is_finite() {
        return Err(Error::Hypothesis("global bound needs b ≥ b₁ and |Δa| ≤ a₁".into()));
    }
    if c > 0.0 {
        let a4 = inp.a_extreme;
        if !(a4 >= 2.0 * c) {
            return Err(Error::Hypothesis(format!("need 0 < 2A₁ ≤ A₄, got A₁={c}, A₄={a4}")));
        }
        Ok(n * ((inp.k + 1.0) * a4 / (c * c)
            + 8.0 * (inp.m - inp.b1) / (3.0 * n * c)
            + inp.a1 / (3.0 * c * c)
            + 5.0 * a4 / (3.0 * c)))
    } else if c < 0.0 {
        let a3 = inp.a_extreme;
        if !(a3 <= 2.0 * c) {
            return Err(Error::Hypothesis(format!("need A₃ ≤ 2A₂ < 0, got A₂={c}, A₃={a3}")));
        }
        Ok(n * ((inp.k + 1.0) * a3 / (c * c) + 8.0 * (inp.m - inp.b1) / (3.0 * n * c)
            - inp.a1 / (3.0 * c * c)
            - a3 / (2.0 * c)))
    } else {
        Err(Error::Hypothesis("A must be nonzero".into()))
    }
}

pub fn corollary_bounds(inp: &CorollaryInputs) -> Result<f64> {
    Ok(corollary_exponent(inp)?.exp())
}

/// Bounds on V used by the logarithmic Schrödinger bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialBounds {
    pub sup_abs: f64,
    pub inf: f64,
    pub sup_grad_sq: f64,
    pub sup_abs_laplacian: Option<f64>,
}

impl From<&CoefficientBounds> for PotentialBounds {
    fn from(b: &CoefficientBounds) -> Self {
        Self {
            sup_abs: b.sup_abs(),
            inf: b.inf,
            sup_grad_sq: b.sup_grad_sq,
            sup_abs_laplacian: Some(b.sup_abs_laplacian()),
        }
    }
}

/// Exponents of the two global upper bounds on u for `Δu + 2u log u + Vu = 0`:
/// the elliptic route with −V at its worst (inf V), and the parabolic route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchrodingerExponents {
    pub elliptic: f64,
    pub parabolic: f64,
}

impl SchrodingerExponents {
    pub fn elliptic_bound(&self) -> f64 {
        self.elliptic.exp()
    }

    pub fn parabolic_bound(&self) -> f64 {
        self.parabolic.exp()
    }
}

/// Pointwise elliptic-route exponent at a node where V = `v`.
pub fn schrodinger_elliptic_exponent(v: &PotentialBounds, n: usize, v_here: f64) -> f64 {
    (16.0 * n as f64 + 8.0 * v.sup_abs + 8.0 / 3.0 * v.sup_grad_sq - 8.0 * v_here) / 3.0
}

pub fn schrodinger_bounds(v: &PotentialBounds, n: usize) -> Result<SchrodingerExponents> {
    let lap = v
        .sup_abs_laplacian
        .ok_or_else(|| Error::InvalidArgument("parabolic-route bound needs sup|ΔV|".into()))?;
    Ok(SchrodingerExponents {
        elliptic: schrodinger_elliptic_exponent(v, n, v.inf),
        parabolic: 2.0 * n as f64 + lap + 0.5 * v.sup_grad_sq.sqrt() + 2.0 * v.sup_abs,
    })
}

/// The closed-form admissible M₁ = sup|V| + sup|∇V|²/3.
pub fn schrodinger_closed_form_m1(v: &PotentialBounds) -> f64 {
    v.sup_abs + v.sup_grad_sq / 3.0
}

/// The closed-form parabolic-route M = ½sup|ΔV| + ¼sup|∇V| + sup|V|.
pub fn schrodinger_closed_form_m(v: &PotentialBounds) -> Result<f64> {
    let lap = v
        .sup_abs_laplacian
        .ok_or_else(|| Error::InvalidArgument("closed-form M needs sup|ΔV|".into()))?;
    Ok(0.5 * lap + 0.25 * v.sup_grad_sq.sqrt() + v.sup_abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn constant_sample(a: f64, b: f64) -> NodeSample {
        NodeSample { a, b, ..Default::default() }
    }

    fn bounds(inf: f64, sup: f64) -> CoefficientBounds {
        CoefficientBounds { sup, inf, sup_grad_sq: 0.0, inf_laplacian: 0.0, sup_laplacian: 0.0, sup_abs_dt: 0.0 }
    }

    #[test]
    fn a_selectors() {
        assert_eq!(select_a1(&bounds(2.0, 2.0)).unwrap(), 1.0);
        assert_eq!(select_a2_a3(&bounds(-4.0, -2.0)).unwrap(), (-1.0, -4.0));
        assert_eq!(select_a4(&bounds(2.0, 3.0)).unwrap(), 3.0);
        assert!(select_a1(&bounds(-1.0, 2.0)).is_err());
        assert!(select_a2_a3(&bounds(-1.0, 2.0)).is_err());
    }

    #[test]
    fn m1_examples() {
        let zero = vec![constant_sample(2.0, 0.0); 5];
        assert_eq!(select_m1(&zero, 1.0, 0.0, 3).unwrap(), 0.0);
        // (2/3)M² + 3M − 1 = 0.
        let mut s = zero.clone();
        s[2].grad_b_sq = 1.0;
        let m = select_m1(&s, 1.0, 0.0, 3).unwrap();
        let oracle = (-3.0 + (9.0f64 + 8.0 / 3.0).sqrt()) / (4.0 / 3.0);
        assert!((m - oracle).abs() < 1e-14, "{m} {oracle}");
        assert!((m - 0.311738).abs() < 1e-6);
    }

    #[test]
    fn m2_examples() {
        let s = vec![constant_sample(-2.0, 0.0); 4];
        assert_eq!(select_m2(&s, -1.0, 0.0, 2).unwrap(), 0.0);
        let zero = vec![NodeSample::default(); 3];
        assert!(select_m2(&zero, -1.0, 0.0, 2).is_ok());
        let mut bumped = s.clone();
        bumped[1].grad_b_sq = 1.0;
        let m = select_m2(&bumped, -1.0, 0.0, 2).unwrap();
        // M² + (−3 + 4)M − 1 = 0 at that node.
        assert!((m - (-1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn a_parabolic_examples() {
        assert_eq!(select_a_parabolic(0.0, 0.0, 1.0).unwrap(), 2.0);
        assert_eq!(select_a_parabolic(2.0, 0.0, 1.0).unwrap(), 3.0);
        assert!((select_a_parabolic(0.0, 2.0, std::f64::consts::E).unwrap() - 7.0).abs() < 1e-15);
    }

    #[test]
    fn m_parabolic_examples() {
        let zero = vec![NodeSample::default(); 3];
        assert_eq!(select_m_parabolic(&zero, 2.0, 1.0, 3).unwrap(), 0.0);
        let neg = vec![constant_sample(0.0, -1.0); 3];
        assert_eq!(select_m_parabolic(&neg, 2.0, 1.0, 3).unwrap(), 1.0);
    }

    #[test]
    fn thm1_case1_substitution() {
        let n = 3;
        let r = 10.0;
        let b = b_constant(n, 0.0, r, PI, PI * PI / 2.0).unwrap();
        let ctx = EstimateContext {
            case: CaseTag::Thm1Case1,
            n,
            k: 0.0,
            radius: r,
            c1: PI,
            c2: PI * PI / 2.0,
            b_const: b,
            a_const: 1.0,
            a_extreme: Some(2.0),
            m: 0.0,
            d: None,
            horizon: None,
            a_bounds: bounds(2.0, 2.0),
            b_bounds: bounds(0.0, 0.0),
            samples: vec![constant_sample(2.0, 0.0); 4],
        };
        let b_hand = (2.0 * PI * PI + PI * PI / 2.0) / 100.0;
        let hand = 3.0 * (2.0 * b_hand + 3.0 * 3.0 * 4.0 * PI * PI / 100.0 + 3.0 * 2.0 + 0.0 + 0.0 + 10.0);
        assert!((rhs_thm1_case1(&ctx).unwrap() - hand).abs() < 1e-12);

        let huge = EstimateContext { radius: 1e9, b_const: b_constant(n, 0.0, 1e9, PI, PI * PI / 2.0).unwrap(), ..ctx.clone() };
        assert!((rhs_thm1_case1(&huge).unwrap() - 3.0 * (3.0 * 2.0 + 5.0 * 2.0)).abs() < 1e-9);

        let degenerate = EstimateContext {
            b_const: 0.0,
            samples: vec![NodeSample { a: 0.0, b: 0.0, ..Default::default() }],
            ..ctx
        };
        assert_eq!(rhs_thm1_case1(&degenerate).unwrap(), 0.0);
    }

    #[test]
    fn thm1_case2_substitution() {
        let s = vec![constant_sample(-2.0, 0.0); 3];
        let ctx = EstimateContext {
            case: CaseTag::Thm1Case2,
            n: 3,
            k: 0.0,
            radius: 1e9,
            c1: PI,
            c2: PI * PI / 2.0,
            b_const: 0.0,
            a_const: -1.0,
            a_extreme: Some(-2.0),
            m: 0.0,
            d: None,
            horizon: None,
            a_bounds: bounds(-2.0, -2.0),
            b_bounds: bounds(0.0, 0.0),
            samples: s,
        };
        assert_eq!(ctx.plus(|s| s.a / -1.0), 2.0);
        assert_eq!(ctx.plus(|s| -1.5 * s.a), 3.0);
        let expect = 3.0 * (3.0 * 2.0 + 3.0);
        assert!((rhs_thm1_case2(&ctx).unwrap() - expect).abs() < 1e-9);
        assert!(rhs_thm1_case1(&ctx).is_err());
    }

    #[test]
    fn thm2_reduces_to_li_yau_form() {
        let n = 3;
        let r = 10.0;
        let b = b_constant(n, 0.0, r, PI, PI * PI / 2.0).unwrap();
        let ctx = EstimateContext {
            case: CaseTag::Thm2,
            n,
            k: 0.0,
            radius: r,
            c1: PI,
            c2: PI * PI / 2.0,
            b_const: b,
            a_const: 2.0,
            a_extreme: None,
            m: 0.0,
            d: Some(1.0),
            horizon: Some(2.0),
            a_bounds: bounds(0.0, 0.0),
            b_bounds: bounds(0.0, 0.0),
            samples: vec![NodeSample::default(); 3],
        };
        for t in [0.5, 1.0, 2.0] {
            let expect = 12.0 / t + 12.0 * (b + 3.0 * PI * PI / 100.0);
            assert!((rhs_thm2(&ctx, t).unwrap() - expect).abs() < 1e-12);
        }
        assert!(rhs_thm2(&ctx, 0.0).is_err());
        let late = rhs_thm2(&ctx, 1e12).unwrap();
        assert!((late - 12.0 * (b + 3.0 * PI * PI / 100.0)).abs() < 1e-9);
    }

    #[test]
    fn corollary_examples() {
        let up = CorollaryInputs { n: 3, k: 0.0, a_const: 1.0, a_extreme: 2.0, m: 0.0, b1: 0.0, a1: 0.0 };
        assert!((corollary_exponent(&up).unwrap() - 16.0).abs() < 1e-12);
        let down = CorollaryInputs { n: 2, k: 0.0, a_const: -1.0, a_extreme: -2.0, m: 0.0, b1: 0.0, a1: 0.0 };
        assert!((corollary_exponent(&down).unwrap() + 6.0).abs() < 1e-12);
        // With A₄ = 2A₁ and M₁ = b₁ the exponent is n(K+1)·2/A₁ + 10n/3.
        let tight = CorollaryInputs { n: 4, k: 1.0, a_const: 0.5, a_extreme: 1.0, m: 0.3, b1: 0.3, a1: 0.0 };
        let e = corollary_exponent(&tight).unwrap();
        assert!((e - 4.0 * (2.0 * 1.0 / 0.25 + 5.0 / 1.5)).abs() < 1e-12);
        assert!(e > 0.0);
        assert!(corollary_exponent(&CorollaryInputs { a_extreme: 1.5, ..up }).is_err());
    }

    #[test]
    fn schrodinger_examples() {
        let zero = PotentialBounds { sup_abs: 0.0, inf: 0.0, sup_grad_sq: 0.0, sup_abs_laplacian: Some(0.0) };
        let e = schrodinger_bounds(&zero, 3).unwrap();
        assert!((e.elliptic - 16.0).abs() < 1e-12);
        assert!((e.parabolic - 6.0).abs() < 1e-12);
        for c in [0.0, 0.5, 2.0, 10.0] {
            let v = PotentialBounds { sup_abs: c, inf: c, sup_grad_sq: 0.0, sup_abs_laplacian: Some(0.0) };
            assert!((schrodinger_bounds(&v, 3).unwrap().elliptic - 16.0).abs() < 1e-12);
        }
        let v = PotentialBounds { sup_abs: 1.0, inf: -1.0, sup_grad_sq: 0.0, sup_abs_laplacian: Some(0.0) };
        let e = schrodinger_bounds(&v, 2).unwrap();
        assert!((e.parabolic - 6.0).abs() < 1e-12);
        assert!((e.elliptic - 48.0 / 3.0).abs() < 1e-12);
        assert!(e.parabolic < e.elliptic);
        assert!(schrodinger_bounds(&PotentialBounds { sup_abs_laplacian: None, ..v }, 2).is_err());
    }

    #[test]
    fn quadratic_roots_are_stable() {
        let q = Quadratic { q: 1.0, l: 1e8, c: -1.0 };
        let r = q.upper_root().unwrap();
        assert!((r - 1e-8).abs() < 1e-20);
        assert!(minimal_feasible(0.0, &[Quadratic { q: 0.0, l: -1.0, c: -1.0 }]).is_err());
    }

    fn sample_strategy() -> impl Strategy<Value = NodeSample> {
        (1.0f64..4.0, -2.0f64..2.0, 0.0f64..3.0, 0.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0).prop_map(
            |(a, b, ga, gb, la, lb, at)| NodeSample { a, b, grad_a_sq: ga, grad_b_sq: gb, lap_a: la, lap_b: lb, a_t: at },
        )
    }

    proptest! {
        #[test]
        fn m1_is_minimal(samples in proptest::collection::vec(sample_strategy(), 1..20), k in 0.0f64..3.0, n in 2usize..6) {
            let a1 = samples.iter().map(|s| s.a).fold(f64::INFINITY, f64::min) / 2.0;
            let m = select_m1(&samples, a1, k, n).unwrap();
            prop_assert!(elliptic_slack(&samples, a1, k, n, Sign::Positive, m) >= -1e-9 * (1.0 + m * m));
            let lower = m - 1e-6 * (1.0 + m.abs());
            prop_assert!(elliptic_slack(&samples, a1, k, n, Sign::Positive, lower) < 0.0);
        }

        #[test]
        fn m2_is_minimal(samples in proptest::collection::vec(sample_strategy(), 1..20), k in 0.0f64..3.0, n in 2usize..6) {
            let samples: Vec<NodeSample> = samples.into_iter().map(|s| NodeSample { a: -s.a, ..s }).collect();
            let a2 = samples.iter().map(|s| s.a).fold(f64::NEG_INFINITY, f64::max) / 2.0;
            let m = select_m2(&samples, a2, k, n).unwrap();
            prop_assert!(elliptic_slack(&samples, a2, k, n, Sign::Negative, m) >= -1e-9 * (1.0 + m * m));
            let lower = m - 1e-6 * (1.0 + m.abs());
            prop_assert!(elliptic_slack(&samples, a2, k, n, Sign::Negative, lower) < 0.0);
        }

        #[test]
        fn m_parabolic_is_minimal(samples in proptest::collection::vec(sample_strategy(), 1..20), k in 0.0f64..3.0, n in 2usize..6, d in 0.2f64..5.0) {
            let a_plus = plus_over(&samples, |s| s.a).unwrap();
            let a = select_a_parabolic(a_plus, k, d).unwrap();
            let m = select_m_parabolic(&samples, a, d, n).unwrap();
            prop_assert!(parabolic_slack(&samples, a, d, n, m) >= -1e-9 * (1.0 + m * m));
            let lower = m - 1e-6 * (1.0 + m.abs());
            prop_assert!(parabolic_slack(&samples, a, d, n, lower) < 0.0);
        }

        #[test]
        fn rhs_thm2_is_non_increasing_in_time(t in 0.01f64..100.0, dt in 0.0f64..10.0) {
            let ctx = EstimateContext {
                case: CaseTag::Thm2, n: 3, k: 0.0, radius: 5.0, c1: PI, c2: PI * PI / 2.0,
                b_const: b_constant(3, 0.0, 5.0, PI, PI * PI / 2.0).unwrap(),
                a_const: 3.0, a_extreme: None, m: 0.5, d: Some(2.0), horizon: Some(1.0),
                a_bounds: bounds(1.0, 2.0), b_bounds: bounds(0.0, 0.0),
                samples: vec![constant_sample(2.0, 0.0), constant_sample(1.0, 0.3)],
            };
            prop_assert!(rhs_thm2(&ctx, t + dt).unwrap() <= rhs_thm2(&ctx, t).unwrap());
        }
    }
}
