//! Run configuration: a single TOML file describing the system under study
//! (a Hénon map or a linear shift model), numerical controls, and an
//! optional parameter family for sweeps.
//!
//! Validation failures carry 1-based line numbers whenever the offending
//! value can be located in the source text.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::map::{HenonFactor, HenonMap};
use crate::oracle::LinearModel;
use crate::sweep::{FamilySpec, FamilyTemplate, HorseshoeGuard, ParamSlot, SampleShape};

/// Default deepest period when the config does not set `n_max`.
pub const DEFAULT_N_MAX: u32 = 10;
/// Default pressure grid when the config does not set `t_grid`.
pub const DEFAULT_T_GRID: GridSpec = GridSpec {
    start: 0.0,
    stop: 4.0,
    step: 0.01,
};
/// Default root/maximizer tolerance when the config does not set `tol`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Uniform parameter grid `start, start+step, …` capped at `stop`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// The configured dynamical system.
#[derive(Clone, Debug)]
pub enum SystemSpec {
    Map(HenonMap),
    Linear(LinearModel),
}

/// Parsed and validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub n_max: u32,
    pub t_grid: GridSpec,
    pub tol: f64,
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; 0 means auto-detect (must not change output bytes).
    pub jobs: usize,
    family: Option<FamilySpec>,
}

impl RunConfig {
    /// Parse and validate a configuration from TOML text.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|err| at_span(text, &err))?;
        validate(text, raw)
    }

    /// Parse and validate the configuration file at `path`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// The sweep family, if the config has a `[family]` section.
    pub fn family(&self) -> Result<&FamilySpec> {
        self.family
            .as_ref()
            .ok_or_else(|| Error::Config("this subcommand needs a [family] section".into()))
    }

    pub fn has_family(&self) -> bool {
        self.family.is_some()
    }
}

// ---------------------------------------------------------------------------
// Raw (serde-facing) layer
// ---------------------------------------------------------------------------

/// A complex scalar: either a bare real or an `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
enum ComplexVal {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexVal> for Complex64 {
    fn from(v: ComplexVal) -> Self {
        match v {
            ComplexVal::Real(re) => Complex64::new(re, 0.0),
            ComplexVal::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    map: Option<RawMap>,
    linear_model: Option<RawLinear>,
    n_max: Option<Spanned<u32>>,
    t_grid: Option<Spanned<RawGrid>>,
    tol: Option<Spanned<f64>>,
    cache_dir: Option<PathBuf>,
    jobs: Option<usize>,
    family: Option<RawFamily>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    factors: Vec<RawFactor>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    /// Polynomial coefficients, ascending degree.
    coeffs: Spanned<Vec<ComplexVal>>,
    a: Spanned<ComplexVal>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinear {
    branch_logs: Spanned<Vec<f64>>,
    log_a: Spanned<f64>,
}

/// `t_grid` accepts `{ start, stop, step }` (each optional) or a bare
/// `[start, stop, step]` triple.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGrid {
    Triple((f64, f64, f64)),
    Table {
        #[serde(default)]
        start: Option<f64>,
        #[serde(default)]
        stop: Option<f64>,
        #[serde(default)]
        step: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    slot: RawSlot,
    guard: Option<RawGuard>,
    shape: RawShape,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RawSlot {
    FactorCoeff { factor: usize, coeff: usize },
    FactorA { factor: usize },
    BranchLog { branch: usize },
    LogA,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawGuard {
    Degree2Default,
    AssertedHyperbolic,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RawShape {
    Segment {
        from: ComplexVal,
        to: ComplexVal,
        samples: u32,
    },
    Circle {
        center: ComplexVal,
        radius: f64,
        samples: u32,
    },
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// 1-based line of a byte offset in `text`.
fn line_of(text: &str, byte: usize) -> usize {
    let end = byte.min(text.len());
    text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

fn at(text: &str, span: &Spanned<impl Sized>, msg: impl Into<String>) -> Error {
    Error::ConfigAt {
        line: line_of(text, span.span().start),
        msg: msg.into(),
    }
}

fn at_span(text: &str, err: &toml::de::Error) -> Error {
    match err.span() {
        Some(span) => Error::ConfigAt {
            line: line_of(text, span.start),
            msg: err.message().to_string(),
        },
        None => Error::Config(err.message().to_string()),
    }
}

fn validate(text: &str, raw: RawConfig) -> Result<RunConfig> {
    let system = match (raw.map, raw.linear_model) {
        (Some(map), None) => SystemSpec::Map(build_map(text, map)?),
        (None, Some(model)) => SystemSpec::Linear(build_linear(text, model)?),
        (None, None) => {
            return Err(Error::Config(
                "config needs a [map] or [linear_model] section".into(),
            ))
        }
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "config must contain exactly one of [map] and [linear_model]".into(),
            ))
        }
    };

    let n_max = match raw.n_max {
        None => DEFAULT_N_MAX,
        Some(n) => {
            if *n.get_ref() < 3 {
                return Err(at(
                    text,
                    &n,
                    format!("n_max must be at least 3, got {}", n.get_ref()),
                ));
            }
            n.into_inner()
        }
    };

    let t_grid = match raw.t_grid {
        None => DEFAULT_T_GRID,
        Some(grid) => {
            let spec = match *grid.get_ref() {
                RawGrid::Triple((start, stop, step)) => GridSpec { start, stop, step },
                RawGrid::Table { start, stop, step } => GridSpec {
                    start: start.unwrap_or(DEFAULT_T_GRID.start),
                    stop: stop.unwrap_or(DEFAULT_T_GRID.stop),
                    step: step.unwrap_or(DEFAULT_T_GRID.step),
                },
            };
            if !(spec.step > 0.0) || !spec.step.is_finite() {
                return Err(at(
                    text,
                    &grid,
                    format!("t_grid step must be positive and finite, got {}", spec.step),
                ));
            }
            if !(spec.stop > spec.start) || !spec.start.is_finite() || spec.start < 0.0 {
                return Err(at(
                    text,
                    &grid,
                    format!(
                        "t_grid needs 0 <= start < stop, got start = {}, stop = {}",
                        spec.start, spec.stop
                    ),
                ));
            }
            spec
        }
    };

    let tol = match raw.tol {
        None => DEFAULT_TOL,
        Some(tol) => {
            let v = *tol.get_ref();
            if !(v > 0.0) || !v.is_finite() {
                return Err(at(
                    text,
                    &tol,
                    format!("tol must be positive and finite, got {v}"),
                ));
            }
            v
        }
    };

    let family = raw
        .family
        .map(|f| build_family(&system, f))
        .transpose()?;

    Ok(RunConfig {
        system,
        n_max,
        t_grid,
        tol,
        cache_dir: raw.cache_dir,
        jobs: raw.jobs.unwrap_or(0),
        family,
    })
}

fn build_map(text: &str, raw: RawMap) -> Result<HenonMap> {
    let mut factors = Vec::with_capacity(raw.factors.len());
    for (i, f) in raw.factors.into_iter().enumerate() {
        let coeffs: Vec<Complex64> = f.coeffs.get_ref().iter().map(|&c| c.into()).collect();
        if coeffs.len() < 3 {
            return Err(at(
                text,
                &f.coeffs,
                format!(
                    "factor {i}: polynomial degree must be at least 2 \
                     (need 3 or more coefficients, got {})",
                    coeffs.len()
                ),
            ));
        }
        let a: Complex64 = (*f.a.get_ref()).into();
        if a == Complex64::new(0.0, 0.0) {
            return Err(at(text, &f.a, format!("factor {i}: a must be nonzero")));
        }
        let factor = HenonFactor::new(coeffs, a).map_err(|e| match e {
            Error::Config(msg) => at(text, &f.coeffs, format!("factor {i}: {msg}")),
            other => other,
        })?;
        factors.push(factor);
    }
    HenonMap::new(factors)
}

fn build_linear(text: &str, raw: RawLinear) -> Result<LinearModel> {
    LinearModel::new(raw.branch_logs.get_ref().clone(), *raw.log_a.get_ref()).map_err(|e| {
        match e {
            Error::InvalidModel(msg) if msg.contains("log|a|") => at(text, &raw.log_a, msg),
            Error::InvalidModel(msg) => at(text, &raw.branch_logs, msg),
            other => other,
        }
    })
}

fn build_family(system: &SystemSpec, raw: RawFamily) -> Result<FamilySpec> {
    let slot = match raw.slot {
        RawSlot::FactorCoeff { factor, coeff } => ParamSlot::FactorCoeff { factor, coeff },
        RawSlot::FactorA { factor } => ParamSlot::FactorA { factor },
        RawSlot::BranchLog { branch } => ParamSlot::BranchLog { branch },
        RawSlot::LogA => ParamSlot::LogA,
    };
    let template = match (system, slot) {
        (SystemSpec::Map(map), ParamSlot::FactorCoeff { .. } | ParamSlot::FactorA { .. }) => {
            FamilyTemplate::Henon(map.clone())
        }
        (SystemSpec::Linear(model), ParamSlot::BranchLog { .. } | ParamSlot::LogA) => {
            FamilyTemplate::Linear(model.clone())
        }
        (SystemSpec::Map(_), _) => {
            return Err(Error::Config(
                "family slot kinds branch-log and log-a need a [linear_model] section".into(),
            ))
        }
        (SystemSpec::Linear(_), _) => {
            return Err(Error::Config(
                "family slot kinds factor-coeff and factor-a need a [map] section".into(),
            ))
        }
    };
    let guard = match raw.guard {
        Some(RawGuard::Degree2Default) => HorseshoeGuard::Degree2Default,
        Some(RawGuard::AssertedHyperbolic) => HorseshoeGuard::AssertedHyperbolic,
        // Hénon templates get the conservative default; linear models are
        // hyperbolic by construction.
        None => match template {
            FamilyTemplate::Henon(_) => HorseshoeGuard::Degree2Default,
            FamilyTemplate::Linear(_) => HorseshoeGuard::AssertedHyperbolic,
        },
    };
    let shape = match raw.shape {
        RawShape::Segment { from, to, samples } => {
            if samples == 0 {
                return Err(Error::Config("family shape needs at least 1 sample".into()));
            }
            SampleShape::Segment {
                from: from.into(),
                to: to.into(),
                samples,
            }
        }
        RawShape::Circle {
            center,
            radius,
            samples,
        } => {
            if samples == 0 {
                return Err(Error::Config("family shape needs at least 1 sample".into()));
            }
            if !(radius >= 0.0) || !radius.is_finite() {
                return Err(Error::Config(format!(
                    "family circle radius must be finite and nonnegative, got {radius}"
                )));
            }
            SampleShape::Circle {
                center: center.into(),
                radius,
                samples,
            }
        }
    };
    Ok(FamilySpec {
        template,
        slot,
        shape,
        guard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAP_CONFIG: &str = "\
n_max = 12
tol = 1e-10
jobs = 2
cache_dir = \"cache\"

[t_grid]
start = 0.0
stop = 2.0
step = 0.01

[map]
factors = [
  { coeffs = [[-6.0, 0.0], [0.0, 0.0], [1.0, 0.0]], a = [0.2, 0.0] },
]
";

    #[test]
    fn map_config_round_trips_every_field() {
        let cfg = RunConfig::parse(MAP_CONFIG).unwrap();
        assert_eq!(cfg.n_max, 12);
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.jobs, 2);
        assert_eq!(cfg.cache_dir.as_deref(), Some(Path::new("cache")));
        assert_eq!(
            cfg.t_grid,
            GridSpec {
                start: 0.0,
                stop: 2.0,
                step: 0.01
            }
        );
        let SystemSpec::Map(map) = &cfg.system else {
            panic!("expected a map system")
        };
        let reference =
            HenonMap::quadratic(Complex64::new(-6.0, 0.0), Complex64::new(0.2, 0.0)).unwrap();
        assert_eq!(map.fingerprint(), reference.fingerprint());
        assert!(!cfg.has_family());
        assert!(cfg.family().is_err());
    }

    #[test]
    fn defaults_apply_when_fields_are_absent() {
        let cfg = RunConfig::parse(
            "[map]\nfactors = [{ coeffs = [-6.0, 0.0, 1.0], a = 0.2 }]\n",
        )
        .unwrap();
        assert_eq!(cfg.n_max, DEFAULT_N_MAX);
        assert_eq!(cfg.t_grid, DEFAULT_T_GRID);
        assert_eq!(cfg.tol, DEFAULT_TOL);
        assert_eq!(cfg.jobs, 0);
        assert!(cfg.cache_dir.is_none());
        // Bare reals and [re, im] pairs describe the same map.
        let pairs = RunConfig::parse(
            "[map]\nfactors = [{ coeffs = [[-6.0, 0], [0, 0], [1, 0]], a = [0.2, 0] }]\n",
        )
        .unwrap();
        let (SystemSpec::Map(a), SystemSpec::Map(b)) = (&cfg.system, &pairs.system) else {
            panic!("expected map systems")
        };
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn rejections_carry_the_offending_line() {
        // Degree-1 factor on line 3.
        let text = "\
n_max = 8
[map]
factors = [{ coeffs = [1.0, 2.0], a = 0.5 }]
";
        match RunConfig::parse(text) {
            Err(Error::ConfigAt { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("degree"), "message: {msg}");
            }
            other => panic!("expected a located config error, got {other:?}"),
        }

        // a = 0 with the factor split across lines: the `a` key sits on line 5.
        let text = "\
[map]
[[map.factors]]
coeffs = [-6.0, 0.0, 1.0]

a = [0.0, 0.0]
";
        match RunConfig::parse(text) {
            Err(Error::ConfigAt { line, msg }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("nonzero"), "message: {msg}");
            }
            other => panic!("expected a located config error, got {other:?}"),
        }

        // Syntax error location.
        match RunConfig::parse("n_max = \n") {
            Err(Error::ConfigAt { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected a located config error, got {other:?}"),
        }

        // n_max and tol invariants, anchored to their lines (root keys
        // must precede the [map] section in TOML).
        let base = "[map]\nfactors = [{ coeffs = [-6.0, 0.0, 1.0], a = 0.2 }]\n";
        for (extra, needle) in [
            ("n_max = 2\n", "n_max"),
            ("tol = 0.0\n", "tol"),
            ("t_grid = [0.0, 2.0, -0.1]\n", "step"),
            ("t_grid = [2.0, 1.0, 0.1]\n", "start < stop"),
        ] {
            let text = format!("{extra}{base}");
            match RunConfig::parse(&text) {
                Err(Error::ConfigAt { line: l, msg }) => {
                    assert_eq!(l, 1, "for {extra:?}");
                    assert!(msg.contains(needle), "for {extra:?}: {msg}");
                }
                other => panic!("expected a located error for {extra:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn exactly_one_system_section_is_required() {
        assert!(matches!(
            RunConfig::parse("n_max = 5\n"),
            Err(Error::Config(_))
        ));
        let both = "\
[map]
factors = [{ coeffs = [-6.0, 0.0, 1.0], a = 0.2 }]
[linear_model]
branch_logs = [0.7, 2.0]
log_a = -1.4
";
        match RunConfig::parse(both) {
            Err(Error::Config(msg)) => assert!(msg.contains("exactly one")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn linear_model_section_builds_the_oracle() {
        let cfg = RunConfig::parse(
            "[linear_model]\nbranch_logs = [0.6931471805599453, 2.0794415416798357]\nlog_a = -1.3862943611198906\n",
        )
        .unwrap();
        let SystemSpec::Linear(model) = &cfg.system else {
            panic!("expected a linear system")
        };
        assert_eq!(model.branch_logs().len(), 2);
        assert!((model.log_a() - 0.25f64.ln()).abs() < 1e-15);

        // Invalid branch logs anchor to their line; invalid log_a to its own.
        match RunConfig::parse("[linear_model]\nbranch_logs = [0.7, -1.0]\nlog_a = -1.0\n") {
            Err(Error::ConfigAt { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected located error, got {other:?}"),
        }
        match RunConfig::parse("[linear_model]\nbranch_logs = [0.7, 1.0]\nlog_a = 0.5\n") {
            Err(Error::ConfigAt { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("log|a|"));
            }
            other => panic!("expected located error, got {other:?}"),
        }
    }

    #[test]
    fn t_grid_accepts_triple_and_table_forms() {
        let base = "[map]\nfactors = [{ coeffs = [-6.0, 0.0, 1.0], a = 0.2 }]\n";
        let triple = RunConfig::parse(&format!("t_grid = [0.0, 2.0, 0.01]\n{base}")).unwrap();
        let table =
            RunConfig::parse(&format!("{base}[t_grid]\nstop = 2.0\n")).unwrap();
        assert_eq!(triple.t_grid, table.t_grid);
        assert_eq!(
            triple.t_grid,
            GridSpec {
                start: 0.0,
                stop: 2.0,
                step: 0.01
            }
        );
    }

    #[test]
    fn family_section_builds_a_sweep_spec() {
        let text = "\
[map]
factors = [{ coeffs = [-7.0, 0.0, 1.0], a = 0.2 }]

[family]
slot = { kind = \"factor-coeff\", factor = 0, coeff = 0 }
shape = { kind = \"segment\", from = [-8.0, 0.0], to = [-6.0, 0.0], samples = 11 }
";
        let cfg = RunConfig::parse(text).unwrap();
        let family = cfg.family().unwrap();
        assert_eq!(
            family.slot,
            ParamSlot::FactorCoeff {
                factor: 0,
                coeff: 0
            }
        );
        assert_eq!(family.guard, HorseshoeGuard::Degree2Default);
        let SampleShape::Segment { samples, .. } = family.shape else {
            panic!("expected a segment shape")
        };
        assert_eq!(samples, 11);

        let text = "\
[linear_model]
branch_logs = [0.7, 2.0]
log_a = -1.4

[family]
slot = { kind = \"branch-log\", branch = 1 }
shape = { kind = \"circle\", center = 2.0, radius = 0.3, samples = 16 }
";
        let cfg = RunConfig::parse(text).unwrap();
        let family = cfg.family().unwrap();
        assert_eq!(family.guard, HorseshoeGuard::AssertedHyperbolic);
        assert_eq!(family.slot, ParamSlot::BranchLog { branch: 1 });
        let SampleShape::Circle { radius, .. } = family.shape else {
            panic!("expected a circle shape")
        };
        assert_eq!(radius, 0.3);

        // Slot-template mismatch is rejected at parse time.
        let text = "\
[linear_model]
branch_logs = [0.7, 2.0]
log_a = -1.4

[family]
slot = { kind = \"factor-a\", factor = 0 }
shape = { kind = \"segment\", from = 0.1, to = 0.3, samples = 3 }
";
        match RunConfig::parse(text) {
            Err(Error::Config(msg)) => assert!(msg.contains("factor-coeff")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_location() {
        let text = "\
[map]
factors = [{ coeffs = [-6.0, 0.0, 1.0], a = 0.2 }]
mystery = 1
";
        match RunConfig::parse(text) {
            Err(Error::ConfigAt { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected located config error, got {other:?}"),
        }
    }
}
