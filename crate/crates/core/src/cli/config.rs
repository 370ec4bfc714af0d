//! Scenario files: `[section]` headers, `key = value` lines, `#` comments.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::fields::{CoefficientProfile, Family};
use crate::geometry::{ModelManifold, RadialGrid, Warp};

/// Smallest grid accepted from a scenario file.
pub const MIN_GRID: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("hypothesis: {0}")]
    Hypothesis(String),
}

/// What a scenario asks to verify.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    Thm1Case1,
    Thm1Case2,
    Thm2,
    Cor1,
    Schrodinger,
    LemmaElliptic,
    LemmaParabolic,
    Cutoff,
    CaseBounds,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::Thm1Case1,
        CheckKind::Thm1Case2,
        CheckKind::Thm2,
        CheckKind::Cor1,
        CheckKind::Schrodinger,
        CheckKind::LemmaElliptic,
        CheckKind::LemmaParabolic,
        CheckKind::Cutoff,
        CheckKind::CaseBounds,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckKind::Thm1Case1 => "thm1-case1",
            CheckKind::Thm1Case2 => "thm1-case2",
            CheckKind::Thm2 => "thm2",
            CheckKind::Cor1 => "cor1",
            CheckKind::Schrodinger => "schrodinger",
            CheckKind::LemmaElliptic => "lemma-elliptic",
            CheckKind::LemmaParabolic => "lemma-parabolic",
            CheckKind::Cutoff => "cutoff",
            CheckKind::CaseBounds => "case-bounds",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn is_parabolic(&self) -> bool {
        matches!(self, CheckKind::Thm2 | CheckKind::LemmaParabolic)
    }

    pub fn is_elliptic(&self) -> bool {
        !self.is_parabolic() && *self != CheckKind::Cutoff
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Wall condition for the elliptic solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundarySpec {
    /// `natural` when a > 0 on the whole ball, `equilibrium` otherwise.
    Auto,
    /// u_D = exp(−b/a) at the wall.
    Equilibrium,
    /// Marched out from the pole.
    Natural,
    Fixed(f64),
}

/// Wall condition for the parabolic run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuterSpec {
    /// Held at the initial value there.
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryConfig {
    pub n: usize,
    pub radius: f64,
    pub warp: Warp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientConfig {
    pub a: CoefficientProfile,
    pub b: CoefficientProfile,
    pub initial: Option<CoefficientProfile>,
    pub boundary: BoundarySpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub tau: Option<f64>,
    pub horizon: Option<f64>,
    pub outer: OuterSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChecksConfig {
    pub run: Vec<CheckKind>,
    /// Times for the parabolic checks; empty means T/4, T/2, T.
    pub times: Vec<f64>,
    pub tol_check: f64,
    pub tol_lemma: f64,
    pub report: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub geometry: GeometryConfig,
    pub coefficients: CoefficientConfig,
    pub solver: SolverConfig,
    pub checks: ChecksConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            id: "case".into(),
            geometry: GeometryConfig { n: 3, radius: 1.0, warp: Warp::Euclidean },
            coefficients: CoefficientConfig {
                a: CoefficientProfile::constant(0.0),
                b: CoefficientProfile::constant(0.0),
                initial: None,
                boundary: BoundarySpec::Auto,
            },
            solver: SolverConfig { grid: 512, tol: 1e-10, max_iter: 100, tau: None, horizon: None, outer: OuterSpec::Dirichlet },
            checks: ChecksConfig { run: Vec::new(), times: Vec::new(), tol_check: 1e-6, tol_lemma: 1e-6, report: None },
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got `{s}`"))?;
    if !v.is_finite() {
        return Err(format!("expected a finite number, got `{s}`"));
    }
    Ok(v)
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| parse_f64(x.trim())).collect()
}

/// `constant:c`, `tanh:base,amp,center,width` or `gaussian:base,amp,center,width`.
pub fn parse_profile(s: &str) -> Result<CoefficientProfile, String> {
    let (kind, args) = s.split_once(':').ok_or_else(|| format!("expected `family:params`, got `{s}`"))?;
    let args = parse_list(args)?;
    let profile = match (kind.trim(), args.as_slice()) {
        ("constant", &[c]) => CoefficientProfile::constant(c),
        ("tanh", &[base, amp, center, width]) => CoefficientProfile::tanh_bump(base, amp, center, width),
        ("gaussian", &[base, amp, center, width]) => CoefficientProfile::gaussian_bump(base, amp, center, width),
        ("constant", _) => return Err("constant takes one value".into()),
        ("tanh" | "gaussian", _) => return Err(format!("{kind} takes base,amp,center,width")),
        _ => return Err(format!("unknown family `{kind}`")),
    };
    profile.validate().map_err(|e| e.to_string())?;
    Ok(profile)
}

pub fn format_profile(p: &CoefficientProfile) -> String {
    match p.family {
        Family::Constant { value } => format!("constant:{value:?}"),
        Family::TanhBump { base, amp, center, width } => format!("tanh:{base:?},{amp:?},{center:?},{width:?}"),
        Family::GaussianBump { base, amp, center, width } => {
            format!("gaussian:{base:?},{amp:?},{center:?},{width:?}")
        }
    }
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn parse_boundary(s: &str) -> Result<BoundarySpec, String> {
    Ok(match s {
        "auto" => BoundarySpec::Auto,
        "equilibrium" => BoundarySpec::Equilibrium,
        "natural" => BoundarySpec::Natural,
        v => BoundarySpec::Fixed(parse_f64(v).map_err(|_| format!("expected auto, equilibrium, natural or a value, got `{v}`"))?),
    })
}

#[derive(Default)]
struct Raw {
    warp: Option<String>,
    k: Option<f64>,
    modulation: Option<(f64, f64)>,
    a_given: bool,
}

impl ScenarioConfig {
    /// Applies one `key = value` assignment; `line` only labels errors.
    pub fn set(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let mut raw = Raw::default();
        self.assign(&mut raw, section, key, value, line)?;
        self.finish_raw(raw)
    }

    fn assign(&mut self, raw: &mut Raw, section: &str, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::BadValue { line, key: key.to_string(), message };
        match (section, key) {
            ("case", "id") => {
                if value.is_empty() || value.contains(',') || value.contains('"') {
                    return Err(bad("id must be non-empty without commas or quotes".into()));
                }
                self.id = value.to_string();
            }
            ("geometry", "n") => self.geometry.n = parse_usize(value).map_err(bad)?,
            ("geometry", "R") => self.geometry.radius = parse_f64(value).map_err(bad)?,
            ("geometry", "warp") => raw.warp = Some(value.to_string()),
            ("geometry", "k") => raw.k = Some(parse_f64(value).map_err(bad)?),
            ("coefficients", "a") => {
                self.coefficients.a = parse_profile(value).map_err(bad)?;
                raw.a_given = true;
            }
            ("coefficients", "b") => self.coefficients.b = parse_profile(value).map_err(bad)?,
            ("coefficients", "v") => {
                self.coefficients.b = parse_profile(value).map_err(bad)?;
                if !raw.a_given {
                    self.coefficients.a = CoefficientProfile::constant(2.0);
                }
            }
            ("coefficients", "initial") => self.coefficients.initial = Some(parse_profile(value).map_err(bad)?),
            ("coefficients", "modulation") => {
                let v = parse_list(value).map_err(bad)?;
                let [eps, omega] = v[..] else { return Err(bad("expected eps,omega".into())) };
                raw.modulation = Some((eps, omega));
            }
            ("coefficients", "boundary") => self.coefficients.boundary = parse_boundary(value).map_err(bad)?,
            ("solver", "grid") => self.solver.grid = parse_usize(value).map_err(bad)?,
            ("solver", "tol") => self.solver.tol = parse_f64(value).map_err(bad)?,
            ("solver", "max_iter") => self.solver.max_iter = parse_usize(value).map_err(bad)?,
            ("solver", "tau") => self.solver.tau = Some(parse_f64(value).map_err(bad)?),
            ("solver", "T") => self.solver.horizon = Some(parse_f64(value).map_err(bad)?),
            ("solver", "outer") => {
                self.solver.outer = match value {
                    "dirichlet" => OuterSpec::Dirichlet,
                    "neumann" => OuterSpec::Neumann,
                    v => return Err(bad(format!("expected dirichlet or neumann, got `{v}`"))),
                }
            }
            ("checks", "run") => {
                self.checks.run = value
                    .split(',')
                    .map(|s| CheckKind::parse(s.trim()).ok_or_else(|| bad(format!("unknown check `{}`", s.trim()))))
                    .collect::<Result<_, _>>()?;
            }
            ("checks", "times") => self.checks.times = parse_list(value).map_err(bad)?,
            ("checks", "tol_check") => self.checks.tol_check = parse_f64(value).map_err(bad)?,
            ("checks", "tol_lemma") => self.checks.tol_lemma = parse_f64(value).map_err(bad)?,
            ("checks", "report") => self.checks.report = Some(value.to_string()),
            _ => {
                return Err(ConfigError::UnknownKey { line, section: section.to_string(), key: key.to_string() });
            }
        }
        Ok(())
    }

    fn finish_raw(&mut self, raw: Raw) -> Result<(), ConfigError> {
        if raw.warp.is_some() || raw.k.is_some() {
            let tag = raw.warp.unwrap_or_else(|| self.geometry.warp.tag().to_string());
            let k = raw.k.unwrap_or_else(|| match self.geometry.warp {
                Warp::Euclidean => 1.0,
                w => w.parameter(),
            });
            self.geometry.warp = match tag.as_str() {
                "euclidean" => Warp::Euclidean,
                "hyperbolic" => Warp::Hyperbolic { k },
                "spherical" => Warp::Spherical { k },
                "cubic" => Warp::Cubic { c: k },
                other => {
                    return Err(ConfigError::Invalid { key: "warp".into(), message: format!("unknown warp `{other}`") })
                }
            };
        }
        if let Some((eps, omega)) = raw.modulation {
            self.coefficients.a = CoefficientProfile { modulation: None, ..self.coefficients.a }.modulated(eps, omega);
        }
        Ok(())
    }

    pub fn manifold(&self) -> Result<ModelManifold, ConfigError> {
        ModelManifold::new(self.geometry.n, self.geometry.warp, self.geometry.radius)
            .map_err(|e| ConfigError::Invalid { key: "geometry".into(), message: e.to_string() })
    }

    pub fn grid(&self) -> Result<RadialGrid, ConfigError> {
        RadialGrid::new(&self.manifold()?, self.solver.grid)
            .map_err(|e| ConfigError::Invalid { key: "grid".into(), message: e.to_string() })
    }

    /// Parabolic checks use times up to T; a default set is filled in here.
    pub fn check_times(&self) -> Vec<f64> {
        if !self.checks.times.is_empty() {
            return self.checks.times.clone();
        }
        self.solver.horizon.map_or_else(Vec::new, |t| vec![0.25 * t, 0.5 * t, t])
    }

    /// Structural and hypothesis validation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid { key: key.into(), message };
        if self.geometry.n < 2 {
            return Err(invalid("n", format!("dimension must be at least 2, got {}", self.geometry.n)));
        }
        if self.solver.grid < MIN_GRID {
            return Err(invalid("grid", format!("need at least {MIN_GRID} cells, got {}", self.solver.grid)));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(invalid("solver", "tol and max_iter must be positive".into()));
        }
        if !(self.checks.tol_check > 0.0 && self.checks.tol_lemma > 0.0) {
            return Err(invalid("checks", "tolerances must be positive".into()));
        }
        if self.checks.run.is_empty() {
            return Err(invalid("run", "no checks requested".into()));
        }
        let manifold = self.manifold()?;
        let grid = self.grid()?;
        for (key, p) in [("a", &self.coefficients.a), ("b", &self.coefficients.b)] {
            p.validate().map_err(|e| invalid(key, e.to_string()))?;
        }
        if let BoundarySpec::Fixed(v) = self.coefficients.boundary {
            if !(v > 0.0) {
                return Err(invalid("boundary", format!("boundary value must be positive, got {v}")));
            }
        }
        let parabolic = self.checks.run.iter().any(CheckKind::is_parabolic);
        if parabolic {
            let (Some(tau), Some(t)) = (self.solver.tau, self.solver.horizon) else {
                return Err(invalid("solver", "parabolic checks need tau and T".into()));
            };
            if !(tau > 0.0 && t > 0.0) {
                return Err(invalid("solver", "tau and T must be positive".into()));
            }
            let Some(init) = self.coefficients.initial else {
                return Err(invalid("initial", "parabolic checks need an initial profile".into()));
            };
            let low = grid.nodes().map(|r| init.value(r, 0.0)).fold(f64::INFINITY, f64::min);
            if !(low > 0.0) {
                return Err(ConfigError::Hypothesis(format!("initial data must be positive, reaches {low}")));
            }
            if self.check_times().iter().any(|&s| s < 5.0 * tau || s > t + tau) {
                return Err(invalid("times", format!("check times must lie in [5τ, T] = [{}, {t}]", 5.0 * tau)));
            }
        }
        if self.coefficients.a.is_time_dependent() && self.checks.run.iter().any(CheckKind::is_elliptic) {
            return Err(ConfigError::Hypothesis("elliptic checks need a time-independent a".into()));
        }
        let a = &self.coefficients.a;
        let (a_inf, a_sup) = grid
            .nodes()
            .map(|r| a.value(r, 0.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        for check in &self.checks.run {
            match check {
                CheckKind::Thm1Case1 if !(a_inf > 0.0) => {
                    return Err(ConfigError::Hypothesis(format!("thm1-case1 needs a > 0, but inf a = {a_inf}")));
                }
                CheckKind::Thm1Case2 if !(a_sup < 0.0) => {
                    return Err(ConfigError::Hypothesis(format!("thm1-case2 needs a < 0, but sup a = {a_sup}")));
                }
                CheckKind::Cor1 | CheckKind::LemmaElliptic | CheckKind::CaseBounds if !(a_inf > 0.0 || a_sup < 0.0) => {
                    return Err(ConfigError::Hypothesis(format!("{check} needs a of one strict sign, got [{a_inf}, {a_sup}]")));
                }
                CheckKind::Schrodinger => {
                    if self.geometry.warp != Warp::Euclidean {
                        return Err(ConfigError::Hypothesis("schrodinger needs the euclidean warp".into()));
                    }
                    if *a != CoefficientProfile::constant(2.0) {
                        return Err(ConfigError::Hypothesis("schrodinger needs a = constant:2".into()));
                    }
                }
                _ => {}
            }
        }
        let _ = manifold;
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[case]\nid = {}\n", self.id);
        let _ = writeln!(s, "[geometry]\nn = {}\nR = {:?}\nwarp = {}", self.geometry.n, self.geometry.radius, self.geometry.warp.tag());
        if self.geometry.warp != Warp::Euclidean {
            let _ = writeln!(s, "k = {:?}", self.geometry.warp.parameter());
        }
        let c = &self.coefficients;
        let _ = writeln!(s, "\n[coefficients]\na = {}\nb = {}", format_profile(&c.a), format_profile(&c.b));
        if let Some(m) = c.a.modulation {
            let _ = writeln!(s, "modulation = {:?},{:?}", m.eps, m.omega);
        }
        if let Some(init) = &c.initial {
            let _ = writeln!(s, "initial = {}", format_profile(init));
        }
        let boundary = match c.boundary {
            BoundarySpec::Auto => "auto".to_string(),
            BoundarySpec::Equilibrium => "equilibrium".to_string(),
            BoundarySpec::Natural => "natural".to_string(),
            BoundarySpec::Fixed(v) => format!("{v:?}"),
        };
        let _ = writeln!(s, "boundary = {boundary}");
        let sv = &self.solver;
        let _ = writeln!(s, "\n[solver]\ngrid = {}\ntol = {:?}\nmax_iter = {}", sv.grid, sv.tol, sv.max_iter);
        if let Some(tau) = sv.tau {
            let _ = writeln!(s, "tau = {tau:?}");
        }
        if let Some(t) = sv.horizon {
            let _ = writeln!(s, "T = {t:?}");
        }
        let outer = match sv.outer {
            OuterSpec::Dirichlet => "dirichlet",
            OuterSpec::Neumann => "neumann",
        };
        let _ = writeln!(s, "outer = {outer}");
        let ch = &self.checks;
        let run: Vec<&str> = ch.run.iter().map(CheckKind::as_str).collect();
        let _ = writeln!(s, "\n[checks]\nrun = {}", run.join(","));
        if !ch.times.is_empty() {
            let times: Vec<String> = ch.times.iter().map(|t| format!("{t:?}")).collect();
            let _ = writeln!(s, "times = {}", times.join(","));
        }
        let _ = writeln!(s, "tol_check = {:?}\ntol_lemma = {:?}", ch.tol_check, ch.tol_lemma);
        if let Some(r) = &ch.report {
            let _ = writeln!(s, "report = {r}");
        }
        s
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let config = parse_unvalidated(text)?;
    config.validate()?;
    Ok(config)
}

/// Parses without the validation pass, for templates that are completed
/// by sweep overrides.
pub fn parse_unvalidated(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut config = ScenarioConfig::default();
    let mut raw = Raw::default();
    let mut section: Option<String> = None;
    for (index, full) in text.lines().enumerate() {
        let line = index + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("unterminated section header `{content}`") })?
                .trim();
            if !matches!(name, "case" | "geometry" | "coefficients" | "solver" | "checks") {
                return Err(ConfigError::Syntax { line, message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") })?;
        let sec = section
            .as_deref()
            .ok_or_else(|| ConfigError::Syntax { line, message: "key outside any section".into() })?;
        config.assign(&mut raw, sec, key.trim(), value.trim(), line)?;
    }
    config.finish_raw(raw)?;
    Ok(config)
}
