use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gradlab::cli::config::{parse_config, parse_unvalidated, ScenarioConfig};
use gradlab::cli::runner::{solve_elliptic, solve_parabolic};
use gradlab::cli::selftest::run_selftest;
use gradlab::cli::{expand_sweep, parse_sweep_param, run_case, run_sweep, to_csv, CaseOutcome};
use gradlab::cli::report::number;

const EXIT_FAIL: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "gradlab", version, about = "Gradient estimates for Δu + a·u·log u + b·u = 0 on model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file.
    config: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the grid size.
    #[arg(long)]
    grid: Option<usize>,
    /// No summary on stderr.
    #[arg(long)]
    quiet: bool,
    /// Record wall-clock time in the runtime_ms column.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the elliptic problem and print r,u.
    SolveElliptic(Common),
    /// Run the parabolic problem and print t,r,u at the check times.
    SolveParabolic(Common),
    /// Run every check of a scenario.
    Verify(Common),
    /// Run a scenario over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `key=v1,v2,...`; use `;` between values that contain commas.
        #[arg(long = "param", required = true)]
        params: Vec<String>,
    },
    /// Identity and convergence self checks.
    Selftest {
        #[arg(long)]
        quiet: bool,
    },
}

fn load(common: &Common, validate: bool) -> Result<ScenarioConfig, ExitCode> {
    let text = fs::read_to_string(&common.config).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", common.config.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    let parsed = if validate { parse_config(&text) } else { parse_unvalidated(&text) };
    let mut cfg = parsed.map_err(|e| {
        eprintln!("error: {}: {e}", common.config.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(n) = common.grid {
        cfg.solver.grid = n;
        if validate {
            cfg.validate().map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            })?;
        }
    }
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), ExitCode> {
    let written = match out {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    written.map_err(|e| {
        eprintln!("error: cannot write output: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn summarize(outcomes: &[CaseOutcome], quiet: bool) -> ExitCode {
    let rows: Vec<_> = outcomes.iter().flat_map(|o| &o.reports).collect();
    if !quiet {
        for r in &rows {
            let tag = match (r.pass, r.gating) {
                (true, _) => "ok",
                (false, true) => "FAIL",
                (false, false) => "note",
            };
            eprintln!("{tag:>4} {} {} margin {}", r.case_id, r.check, number(r.margin));
            for (k, v) in r.diagnostics.iter().filter(|(k, _)| k.starts_with("error")) {
                eprintln!("     {k} {v}");
            }
        }
    }
    if outcomes.iter().any(|o| o.solver_failed) {
        ExitCode::from(EXIT_SOLVER)
    } else if outcomes.iter().all(CaseOutcome::passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn verify(common: &Common) -> Result<ExitCode, ExitCode> {
    let cfg = load(common, true)?;
    let outcome = run_case(&cfg, common.timing);
    let rows = outcome.reports.clone();
    let out = common.out.clone().or_else(|| cfg.checks.report.as_ref().map(PathBuf::from));
    emit(&to_csv(&rows), out.as_deref())?;
    Ok(summarize(&[outcome], common.quiet))
}

fn sweep(common: &Common, params: &[String]) -> Result<ExitCode, ExitCode> {
    let mut template = load(common, false)?;
    if let Some(n) = common.grid {
        template.solver.grid = n;
    }
    let params = params
        .iter()
        .map(|p| parse_sweep_param(p))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|ps| expand_sweep(&template, &ps))
        .map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        })?;
    let outcomes = run_sweep(&params, common.timing);
    let rows: Vec<_> = outcomes.iter().flat_map(|o| o.reports.clone()).collect();
    emit(&to_csv(&rows), common.out.as_deref())?;
    Ok(summarize(&outcomes, common.quiet))
}

fn solve_elliptic_cmd(common: &Common) -> Result<ExitCode, ExitCode> {
    let cfg = load(common, true)?;
    let (m, g) = (cfg.manifold().map_err(config_exit)?, cfg.grid().map_err(config_exit)?);
    let sol = solve_elliptic(&cfg, m, g).map_err(|e| {
        eprintln!("error: solver: {e}");
        ExitCode::from(EXIT_SOLVER)
    })?;
    let mut s = String::from("r,u\n");
    for (i, u) in sol.u.values().iter().enumerate() {
        s.push_str(&format!("{},{}\n", number(g.r(i)), number(*u)));
    }
    emit(&s, common.out.as_deref())?;
    if !common.quiet {
        eprintln!("residual {} after {} iterations", number(sol.residual), sol.iterations);
    }
    Ok(ExitCode::SUCCESS)
}

fn solve_parabolic_cmd(common: &Common) -> Result<ExitCode, ExitCode> {
    let cfg = load(common, true)?;
    let (m, g) = (cfg.manifold().map_err(config_exit)?, cfg.grid().map_err(config_exit)?);
    let traj = solve_parabolic(&cfg, m, g).map_err(|e| {
        eprintln!("error: solver: {e}");
        ExitCode::from(EXIT_SOLVER)
    })?;
    let mut s = String::from("t,r,u\n");
    for t in cfg.check_times() {
        let k = traj.index_of(t);
        for (i, u) in traj.snapshots()[k].values().iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", number(traj.time(k)), number(g.r(i)), number(*u)));
        }
    }
    emit(&s, common.out.as_deref())?;
    if !common.quiet {
        let worst = traj.residuals().iter().copied().fold(0.0, f64::max);
        eprintln!("{} steps, worst step residual {}", traj.len() - 1, number(worst));
    }
    Ok(ExitCode::SUCCESS)
}

fn config_exit(e: gradlab::cli::ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn selftest(quiet: bool) -> ExitCode {
    let results = run_selftest();
    for r in &results {
        if !quiet || !r.pass {
            println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        }
    }
    if results.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SolveElliptic(c) => solve_elliptic_cmd(c),
        Command::SolveParabolic(c) => solve_parabolic_cmd(c),
        Command::Verify(c) => verify(c),
        Command::Sweep { common, params } => sweep(common, params),
        Command::Selftest { quiet } => Ok(selftest(*quiet)),
    };
    result.unwrap_or_else(|code| code)
}
