//! Executes scenarios: solve, build the estimate context, run the checks.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{BoundarySpec, CheckKind, ConfigError, OuterSpec, ScenarioConfig};
use crate::cutoff::{build_cutoff, verify_cutoff_gradient, verify_cutoff_laplacian};
use crate::elliptic::{continuation_solve, solve, BoundaryValue, EllipticProblem, EllipticSolution, OuterBoundary, SolverOptions};
use crate::error::{Error, Result};
use crate::estimates::{elliptic_context, parabolic_context, CaseTag, EstimateContext, PotentialBounds};
use crate::fields::{sample, TimeWindow};
use crate::geometry::{ModelManifold, RadialGrid};
use crate::parabolic::{run, sup_bound_d, ParabolicProblem, ParabolicTrajectory};
use crate::verify::{
    check_corollary, check_elliptic_lemma, check_parabolic_lemma, check_schrodinger, check_thm1, check_thm2,
    diagnostic_case_bounds, CheckReport, LemmaForm,
};

/// Absolute tolerance on the cutoff margins.
pub const CUTOFF_TOL: f64 = 1e-9;
/// Continuation stages tried when a direct elliptic solve fails.
pub const CONTINUATION_STEPS: usize = 8;
/// Extra steps past T so that central time differences exist at T.
pub const TAIL_STEPS: f64 = 6.0;

#[derive(Clone, Debug, Default)]
pub struct CaseOutcome {
    pub reports: Vec<CheckReport>,
    pub solver_failed: bool,
}

impl CaseOutcome {
    /// Every gating row passed.
    pub fn passed(&self) -> bool {
        self.reports.iter().filter(|r| r.gating).all(|r| r.pass)
    }
}

fn options(cfg: &ScenarioConfig) -> SolverOptions {
    SolverOptions { tol: cfg.solver.tol, max_iter: cfg.solver.max_iter, ..SolverOptions::default() }
}

fn boundary(cfg: &ScenarioConfig, grid: &RadialGrid) -> BoundaryValue {
    match cfg.coefficients.boundary {
        BoundarySpec::Fixed(v) => BoundaryValue::Fixed(v),
        BoundarySpec::Equilibrium => BoundaryValue::Auto,
        BoundarySpec::Natural => BoundaryValue::Natural,
        BoundarySpec::Auto => {
            let a = &cfg.coefficients.a;
            if grid.nodes().all(|r| a.value(r, 0.0) > 0.0) {
                BoundaryValue::Natural
            } else {
                BoundaryValue::Auto
            }
        }
    }
}

/// Direct Newton solve, falling back to amplitude continuation.
pub fn solve_elliptic(cfg: &ScenarioConfig, manifold: ModelManifold, grid: RadialGrid) -> Result<EllipticSolution> {
    let (a, b) = (&cfg.coefficients.a, &cfg.coefficients.b);
    let bv = boundary(cfg, &grid);
    let opts = options(cfg);
    match solve(&EllipticProblem::from_profiles(manifold, grid, a, b, bv, opts)?, None) {
        Err(Error::LineSearch { .. } | Error::Divergence { .. } | Error::SingularJacobian(_)) => {
            continuation_solve(manifold, grid, a, b, bv, opts, CONTINUATION_STEPS)
        }
        other => other,
    }
}

/// Implicit Euler run to `T + 6τ`.
pub fn solve_parabolic(cfg: &ScenarioConfig, manifold: ModelManifold, grid: RadialGrid) -> Result<ParabolicTrajectory> {
    let (Some(tau), Some(horizon), Some(init)) = (cfg.solver.tau, cfg.solver.horizon, cfg.coefficients.initial) else {
        return Err(Error::InvalidArgument("parabolic run needs tau, T and an initial profile".into()));
    };
    let u0 = sample(&init, &grid, 0.0)?;
    let outer = match cfg.solver.outer {
        OuterSpec::Dirichlet => OuterBoundary::Dirichlet(u0.values()[grid.cells()]),
        OuterSpec::Neumann => OuterBoundary::Neumann,
    };
    let problem = ParabolicProblem::new(
        manifold,
        grid,
        cfg.coefficients.a,
        cfg.coefficients.b,
        u0,
        outer,
        tau,
        horizon + TAIL_STEPS * tau,
        options(cfg),
    )?;
    run(&problem)
}

fn failed_row(cfg: &ScenarioConfig, check: &str, err: &Error) -> CheckReport {
    let mut r = CheckReport::new(check, cfg.geometry.n, cfg.geometry.radius, cfg.solver.grid);
    r.case_id = cfg.id.clone();
    r.diagnostics.push((format!("error: {err}"), f64::NAN));
    r
}

fn elliptic_tag(kind: CheckKind, cfg: &ScenarioConfig, grid: &RadialGrid) -> CaseTag {
    match kind {
        CheckKind::Thm1Case1 => CaseTag::Thm1Case1,
        CheckKind::Thm1Case2 => CaseTag::Thm1Case2,
        CheckKind::Cor1 => CaseTag::Cor1,
        CheckKind::Schrodinger => CaseTag::Schrodinger,
        _ => {
            if grid.nodes().all(|r| cfg.coefficients.a.value(r, 0.0) > 0.0) {
                CaseTag::Thm1Case1
            } else {
                CaseTag::Thm1Case2
            }
        }
    }
}

fn elliptic_rows(
    kind: CheckKind,
    cfg: &ScenarioConfig,
    manifold: &ModelManifold,
    grid: &RadialGrid,
    sol: &EllipticSolution,
) -> Result<Vec<CheckReport>> {
    let (a, b) = (&cfg.coefficients.a, &cfg.coefficients.b);
    let ctx: EstimateContext = elliptic_context(elliptic_tag(kind, cfg, grid), manifold, grid, a, b)?;
    let tol = cfg.checks.tol_check;
    Ok(match kind {
        CheckKind::Thm1Case1 | CheckKind::Thm1Case2 => {
            vec![check_thm1(&sol.u, &ctx, manifold, sol.residual)?.with_tolerance(tol)]
        }
        CheckKind::Cor1 => vec![check_corollary(&sol.u, &ctx)?.with_tolerance(tol)],
        CheckKind::Schrodinger => {
            let v = sample(b, grid, 0.0)?;
            let bounds = PotentialBounds::from(&ctx.b_bounds);
            check_schrodinger(&sol.u, v.values(), &bounds, manifold)?
                .into_iter()
                .map(|r| r.with_tolerance(tol))
                .collect()
        }
        CheckKind::LemmaElliptic => {
            let row = |form, name| -> Result<CheckReport> {
                let l = check_elliptic_lemma(&sol.u, &ctx.samples, ctx.a_const, ctx.m, ctx.k, manifold, form)?;
                Ok(l.report(name, &ctx, grid.cells(), cfg.checks.tol_lemma))
            };
            let mut rederived = row(LemmaForm::Rederived, "lemma-elliptic-rederived")?;
            rederived.gating = false;
            vec![row(LemmaForm::AsStated, "lemma-elliptic")?, rederived]
        }
        CheckKind::CaseBounds => diagnostic_case_bounds(&sol.u, &ctx, manifold)?
            .into_iter()
            .map(|c| {
                let mut r = CheckReport::from_context(&format!("case-bound-{}", c.role), &ctx, grid.cells())
                    .decide(c.g_max, c.bound, tol);
                r.gating = false;
                r
            })
            .collect(),
        _ => unreachable!("not an elliptic check"),
    })
}

fn parabolic_rows(
    kind: CheckKind,
    cfg: &ScenarioConfig,
    manifold: &ModelManifold,
    grid: &RadialGrid,
    traj: &ParabolicTrajectory,
) -> Result<Vec<CheckReport>> {
    let (a, b) = (&cfg.coefficients.a, &cfg.coefficients.b);
    let d = sup_bound_d(traj);
    let window = TimeWindow { start: 0.0, end: traj.final_time(), samples: 65 };
    let ctx = parabolic_context(manifold, grid, a, b, window, d)?;
    let times = cfg.check_times();
    Ok(match kind {
        CheckKind::Thm2 => check_thm2(traj, &ctx, a, b, manifold, &times)?
            .into_iter()
            .map(|r| r.with_tolerance(cfg.checks.tol_check))
            .collect(),
        CheckKind::LemmaParabolic => times
            .iter()
            .map(|&t| {
                let m = traj.index_of(t);
                let l = check_parabolic_lemma(traj, a, b, manifold, ctx.a_const, ctx.m, d, ctx.k, m)?;
                let mut r = l.report("lemma-parabolic", &ctx, grid.cells(), cfg.checks.tol_lemma).diag("t", traj.time(m));
                r.tau = Some(traj.tau());
                Ok(r)
            })
            .collect::<Result<_>>()?,
        _ => unreachable!("not a parabolic check"),
    })
}

fn cutoff_rows(manifold: &ModelManifold, grid: &RadialGrid) -> Result<Vec<CheckReport>> {
    let profile = build_cutoff(manifold.radius())?;
    let k = manifold.ricci_lower_bound(grid)?;
    let base = |name: &str| CheckReport {
        k: Some(k),
        c1: Some(profile.c1()),
        c2: Some(profile.c2()),
        b_const: crate::cutoff::b_constant(manifold.dim(), k, manifold.radius(), profile.c1(), profile.c2()).ok(),
        ..CheckReport::new(name, manifold.dim(), manifold.radius(), grid.cells())
    };
    let g = verify_cutoff_gradient(&profile, manifold, grid)?;
    let l = verify_cutoff_laplacian(&profile, manifold, grid, k)?;
    Ok(vec![
        base("cutoff-gradient").decide(-g, 0.0, CUTOFF_TOL),
        base("cutoff-laplacian").decide(-l, 0.0, CUTOFF_TOL),
    ])
}

/// Runs every requested check of one scenario. Solver failures become
/// failed rows rather than errors.
pub fn run_case(cfg: &ScenarioConfig, timing: bool) -> CaseOutcome {
    let start = Instant::now();
    let mut out = CaseOutcome::default();
    let geometry = cfg.manifold().and_then(|m| Ok((m, cfg.grid()?)));
    let (manifold, grid) = match geometry {
        Ok(mg) => mg,
        Err(e) => {
            let err = Error::InvalidArgument(e.to_string());
            out.reports = cfg.checks.run.iter().map(|k| failed_row(cfg, k.as_str(), &err)).collect();
            out.solver_failed = true;
            return out;
        }
    };
    let elliptic = cfg
        .checks
        .run
        .iter()
        .any(CheckKind::is_elliptic)
        .then(|| solve_elliptic(cfg, manifold, grid));
    let parabolic = cfg
        .checks
        .run
        .iter()
        .any(CheckKind::is_parabolic)
        .then(|| solve_parabolic(cfg, manifold, grid));
    for &kind in &cfg.checks.run {
        let rows = if kind == CheckKind::Cutoff {
            cutoff_rows(&manifold, &grid)
        } else if kind.is_elliptic() {
            match elliptic.as_ref().expect("elliptic solve requested") {
                Ok(sol) => elliptic_rows(kind, cfg, &manifold, &grid, sol),
                Err(e) => {
                    out.solver_failed = true;
                    Err(e.clone())
                }
            }
        } else {
            match parabolic.as_ref().expect("parabolic run requested") {
                Ok(traj) => parabolic_rows(kind, cfg, &manifold, &grid, traj),
                Err(e) => {
                    out.solver_failed = true;
                    Err(e.clone())
                }
            }
        };
        match rows {
            Ok(rows) => out.reports.extend(rows),
            Err(e) => out.reports.push(failed_row(cfg, kind.as_str(), &e)),
        }
    }
    let elapsed = if timing { start.elapsed().as_millis() as u64 } else { 0 };
    for r in &mut out.reports {
        r.case_id = cfg.id.clone();
        r.runtime_ms = elapsed;
    }
    out
}

/// One swept key and its values.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepParam {
    pub section: String,
    pub key: String,
    pub values: Vec<String>,
}

fn section_of(key: &str) -> Option<&'static str> {
    Some(match key {
        "id" => "case",
        "n" | "R" | "warp" | "k" => "geometry",
        "a" | "b" | "v" | "initial" | "modulation" | "boundary" => "coefficients",
        "grid" | "tol" | "max_iter" | "tau" | "T" | "outer" => "solver",
        "run" | "times" | "tol_check" | "tol_lemma" | "report" => "checks",
        _ => return None,
    })
}

/// `key=v1,v2,...` or `section.key=...`; values holding commas are
/// separated with `;` instead.
pub fn parse_sweep_param(spec: &str) -> std::result::Result<SweepParam, ConfigError> {
    let invalid = |m: String| ConfigError::Invalid { key: "--param".into(), message: m };
    let (lhs, rhs) = spec.split_once('=').ok_or_else(|| invalid(format!("expected key=v1,v2,..., got `{spec}`")))?;
    let (section, key) = match lhs.trim().split_once('.') {
        Some((s, k)) => (s.to_string(), k.to_string()),
        None => {
            let key = lhs.trim();
            (section_of(key).ok_or_else(|| invalid(format!("unknown key `{key}`")))?.to_string(), key.to_string())
        }
    };
    let sep = if rhs.contains(';') { ';' } else { ',' };
    let values: Vec<String> = rhs.split(sep).map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(invalid(format!("no values for `{key}`")));
    }
    Ok(SweepParam { section, key, values })
}

/// Expands the template over the Cartesian product of the parameters, in
/// the order given, with case ids `id[key=value;...]`.
pub fn expand_sweep(template: &ScenarioConfig, params: &[SweepParam]) -> std::result::Result<Vec<ScenarioConfig>, ConfigError> {
    let mut configs = vec![(template.clone(), Vec::<String>::new())];
    for p in params {
        let mut next = Vec::with_capacity(configs.len() * p.values.len());
        for (cfg, tags) in &configs {
            for v in &p.values {
                let mut c = cfg.clone();
                c.set(&p.section, &p.key, v, 0)?;
                let mut t = tags.clone();
                t.push(format!("{}={}", p.key, v.replace(',', "/")));
                next.push((c, t));
            }
        }
        configs = next;
    }
    configs
        .into_iter()
        .map(|(mut c, tags)| {
            if !tags.is_empty() {
                c.id = format!("{}[{}]", template.id, tags.join(";"));
            }
            c.validate()?;
            Ok(c)
        })
        .collect()
}

/// Thread cap from `GRADLAB_THREADS`, if set and positive.
pub fn thread_cap() -> Option<usize> {
    std::env::var("GRADLAB_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Runs the cases in parallel and returns the outcomes in case order.
pub fn run_sweep(configs: &[ScenarioConfig], timing: bool) -> Vec<CaseOutcome> {
    let work = || configs.par_iter().map(|c| run_case(c, timing)).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(thread_cap().unwrap_or(0)).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}
