//! Identity and convergence checks that need no scenario file.

use std::f64::consts::{E, PI};

use crate::cutoff::{build_cutoff, verify_cutoff_gradient, verify_cutoff_laplacian};
use crate::elliptic::{solve, BoundaryValue, EllipticProblem, SolverOptions};
use crate::error::Result;
use crate::estimates::{elliptic_context, elliptic_slack, CaseTag};
use crate::fields::CoefficientProfile;
use crate::geometry::{ModelManifold, RadialGrid, ScalarField};
use crate::verify::{check_bochner, check_elliptic_lemma, DerivedFields, LemmaForm};

#[derive(Clone, Debug, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn constant_solution() -> Result<SelfCheck> {
    let m = ModelManifold::euclidean(3, 1.0)?;
    let g = RadialGrid::new(&m, 512)?;
    let p = EllipticProblem::from_profiles(
        m,
        g,
        &CoefficientProfile::constant(2.0),
        &CoefficientProfile::constant(-2.0),
        BoundaryValue::Auto,
        SolverOptions::default(),
    )?;
    let u = solve(&p, None)?.u;
    let err = u.values().iter().fold(0.0f64, |m, v| m.max((v - E).abs()));
    Ok(SelfCheck { name: "constant-solution", pass: err <= 1e-10, detail: format!("sup|u − e| = {err:e}") })
}

fn bochner() -> Result<SelfCheck> {
    let m = ModelManifold::hyperbolic(3, 1.0, 1.0)?;
    let res = |cells| -> Result<f64> {
        let g = RadialGrid::new(&m, cells)?;
        Ok(check_bochner(&ScalarField::from_fn(g, f64::cosh)?, &m)?.0)
    };
    let (coarse, fine) = (res(1024)?, res(2048)?);
    let ratio = coarse / fine;
    Ok(SelfCheck {
        name: "bochner-convergence",
        pass: (ratio - 4.0).abs() <= 0.8,
        detail: format!("residual {coarse:e} at N=1024, ratio {ratio:.3}"),
    })
}

fn cutoff() -> Result<SelfCheck> {
    let mut worst = f64::INFINITY;
    for n in [2, 3] {
        for r in [1.0, 5.0, 10.0] {
            for m in [ModelManifold::euclidean(n, r)?, ModelManifold::hyperbolic(n, 1.0, r)?] {
                let g = RadialGrid::new(&m, 1024)?;
                let p = build_cutoff(r)?;
                let k = m.ricci_lower_bound(&g)?;
                worst = worst.min(verify_cutoff_gradient(&p, &m, &g)?).min(verify_cutoff_laplacian(&p, &m, &g, k)?);
            }
        }
    }
    Ok(SelfCheck { name: "cutoff-margins", pass: worst >= -1e-9, detail: format!("smallest margin {worst:e}") })
}

fn bump_case() -> Result<(ModelManifold, ScalarField, crate::estimates::EstimateContext)> {
    let m = ModelManifold::hyperbolic(3, 1.0, 2.0)?;
    let g = RadialGrid::new(&m, 512)?;
    let a = CoefficientProfile::tanh_bump(2.0, 0.5, 2.0, 0.5);
    let b = CoefficientProfile::gaussian_bump(0.0, 0.3, 1.0, 0.3);
    let p = EllipticProblem::from_profiles(m, g, &a, &b, BoundaryValue::Natural, SolverOptions::default())?;
    let u = solve(&p, None)?.u;
    Ok((m, u, elliptic_context(CaseTag::Thm1Case1, &m, &g, &a, &b)?))
}

fn identity_closure() -> Result<SelfCheck> {
    let (m, u, ctx) = bump_case()?;
    let d = DerivedFields::elliptic(&u, &ctx.samples, ctx.a_const, ctx.m, &m)?;
    let g = d.g.as_ref().expect("elliptic fields carry G");
    let worst = (0..g.values().len())
        .map(|i| {
            let back = g.values()[i] - (ctx.a_const + ctx.samples[i].a) * d.w.values()[i] - ctx.m;
            (back - d.grad_f_sq.values()[i]).abs() / (1.0 + g.values()[i].abs())
        })
        .fold(0.0, f64::max);
    Ok(SelfCheck { name: "identity-closure", pass: worst <= 1e-12, detail: format!("relative gap {worst:e}") })
}

fn rederived_lemma() -> Result<SelfCheck> {
    let (m, u, ctx) = bump_case()?;
    let l = check_elliptic_lemma(&u, &ctx.samples, ctx.a_const, ctx.m, ctx.k, &m, LemmaForm::Rederived)?;
    Ok(SelfCheck {
        name: "gradient-inequality",
        pass: l.passes(1e-6),
        detail: format!("min margin {:e} (scale {:.3})", l.min_margin, l.scale),
    })
}

fn selector_minimality() -> Result<SelfCheck> {
    let (_, _, ctx) = bump_case()?;
    let slack = |m| elliptic_slack(&ctx.samples, ctx.a_const, ctx.k, ctx.n, ctx.sign(), m);
    let delta = 1e-6 * (1.0 + ctx.m.abs());
    let pass = slack(ctx.m) >= -1e-9 && (ctx.m == 0.0 || slack(ctx.m - delta) < 0.0);
    Ok(SelfCheck { name: "selector-minimality", pass, detail: format!("M = {}", ctx.m) })
}

fn b_constant() -> Result<SelfCheck> {
    let b = crate::cutoff::b_constant(2, 0.0, 1.0, PI, PI * PI / 2.0)?;
    Ok(SelfCheck {
        name: "b-constant",
        pass: (b - 1.5 * PI * PI).abs() < 1e-12,
        detail: format!("B(n=2,K=0,R=1) = {b}"),
    })
}

/// Runs every self check; an internal error counts as a failure.
pub fn run_selftest() -> Vec<SelfCheck> {
    let checks: [(&'static str, fn() -> Result<SelfCheck>); 7] = [
        ("constant-solution", constant_solution),
        ("bochner-convergence", bochner),
        ("cutoff-margins", cutoff),
        ("identity-closure", identity_closure),
        ("gradient-inequality", rederived_lemma),
        ("selector-minimality", selector_minimality),
        ("b-constant", b_constant),
    ];
    checks
        .iter()
        .map(|(name, f)| f().unwrap_or_else(|e| SelfCheck { name, pass: false, detail: e.to_string() }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        let results = run_selftest();
        assert_eq!(results.len(), 7);
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }
}
