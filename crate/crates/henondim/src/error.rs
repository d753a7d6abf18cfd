//! Crate-wide error type.
//!
//! Every failure mode carries a stable, greppable tag as the first token of
//! its message (`escaped`, `no-bracket`, …); the CLI relays these verbatim and
//! maps config-class errors to exit code 2, numerical ones to exit code 3.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All error conditions surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An orbit left the working region during map evaluation.
    #[error("escaped: coordinate modulus exceeded {threshold:e} during evaluation")]
    Escaped {
        /// Escape threshold that was crossed.
        threshold: f64,
    },

    /// |det Dg| > 1: the map is volume expanding; relabel via the inverse.
    #[error("orientation: |det Dg| = {jac_mod} exceeds 1; pass the inverse map so volume is non-increasing")]
    Orientation {
        /// Product of the factor |a_i|.
        jac_mod: f64,
    },

    /// Backward branch iteration failed to settle.
    #[error("seeding-diverged: word {word} at period {period} did not converge after {sweeps} backward sweeps")]
    SeedingDiverged { word: String, period: u32, sweeps: u32 },

    /// Newton refinement failed inside the continuation schedule.
    #[error("newton-diverged: word {word} at period {period}, continuation step {step}: residual {residual:e}")]
    NewtonDiverged {
        word: String,
        period: u32,
        step: u32,
        residual: f64,
    },

    /// A cycle multiplier sits too close to the unit circle.
    #[error("non-hyperbolic: word {word} at period {period}: log|lambda_u| = {log_mult_u:e}, eigenvalue condition {condition:e}")]
    NonHyperbolic {
        word: String,
        period: u32,
        log_mult_u: f64,
        condition: f64,
    },

    /// Two symbolically distinct words refined to the same cycle.
    #[error("duplicate-orbit: words {word_a} and {word_b} at period {period} refined to the same cycle")]
    DuplicateOrbit {
        word_a: String,
        word_b: String,
        period: u32,
    },

    /// Cache file belongs to a different configuration.
    #[error("fingerprint-mismatch: cache holds {found}, configuration expects {expected}")]
    FingerprintMismatch { found: String, expected: String },

    /// Cache file is unreadable or internally inconsistent.
    #[error("corrupt-cache: {path}: {detail} (first bad row: {row})")]
    CorruptCache {
        path: String,
        row: String,
        detail: String,
    },

    /// The orbit library does not cover the requested period.
    #[error("incomplete-library: period {period} is missing or fails the fixed-point count check")]
    IncompleteLibrary { period: u32 },

    /// Estimated unstable exponent is not positive.
    #[error("degenerate-Lambda: estimated exponent {lambda:e} at t = {t} is not positive")]
    DegenerateLambda { t: f64, lambda: f64 },

    /// Pressure does not change sign on the root-search interval.
    #[error("no-bracket: pressure does not change sign on [0, {t_cap}] (endpoint value {value:e})")]
    NoBracket { t_cap: f64, value: f64 },

    /// The dimension-curve derivative never changes sign on (t_s, t_u).
    #[error("no-interior-max: dDelta has no sign change on ({t_s}, {t_u})")]
    NoInteriorMax { t_s: f64, t_u: f64 },

    /// Itinerary enumeration would exceed the word budget.
    #[error("budget-exceeded: {words} itineraries exceed the enumeration budget of {budget}")]
    BudgetExceeded { words: u64, budget: u64 },

    /// A synthetic model was given invalid parameters.
    #[error("invalid-model: {0}")]
    InvalidModel(String),

    /// A sampled family member violates the configured horseshoe guard.
    #[error("horseshoe-guard: {0}")]
    GuardViolation(String),

    /// Configuration file problem, with a 1-based line number where known.
    #[error("config: line {line}: {msg}")]
    ConfigAt { line: usize, msg: String },

    /// Configuration problem without a useful line anchor.
    #[error("config: {0}")]
    Config(String),

    /// Filesystem failure while reading or writing an artifact.
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// The stable lead token of this error's message (`escaped`,
    /// `no-bracket`, …), for status columns and log filtering.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Escaped { .. } => "escaped",
            Error::Orientation { .. } => "orientation",
            Error::SeedingDiverged { .. } => "seeding-diverged",
            Error::NewtonDiverged { .. } => "newton-diverged",
            Error::NonHyperbolic { .. } => "non-hyperbolic",
            Error::DuplicateOrbit { .. } => "duplicate-orbit",
            Error::FingerprintMismatch { .. } => "fingerprint-mismatch",
            Error::CorruptCache { .. } => "corrupt-cache",
            Error::IncompleteLibrary { .. } => "incomplete-library",
            Error::DegenerateLambda { .. } => "degenerate-Lambda",
            Error::NoBracket { .. } => "no-bracket",
            Error::NoInteriorMax { .. } => "no-interior-max",
            Error::BudgetExceeded { .. } => "budget-exceeded",
            Error::InvalidModel(..) => "invalid-model",
            Error::GuardViolation(..) => "horseshoe-guard",
            Error::ConfigAt { .. } | Error::Config(..) => "config",
            Error::Io { .. } => "io",
        }
    }

    /// True for errors the CLI should treat as configuration/user-input
    /// problems (exit code 2) rather than numerical failures (exit code 3).
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::ConfigAt { .. } | Error::Config(..) | Error::Io { .. } | Error::GuardViolation(..)
        )
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
