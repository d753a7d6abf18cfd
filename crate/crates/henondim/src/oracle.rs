//! Exactly solvable shift models: locally constant unstable log-multipliers
//! on a full `d`-shift with constant Jacobian modulus.
//!
//! For such a model every thermodynamic quantity has a closed form —
//! `P^u(t) = log Σ_i e^{−t·ℓ_i}`, the Gibbs weights are per-symbol, and the
//! level-`n` partition sums factor exactly — so the whole pipeline can be
//! validated end-to-end: [`LinearModel::exact_sample`] against
//! `pressure::sample_at` on a [`synthetic_library`](LinearModel::synthetic_library),
//! and [`LinearModel::exact_report`] against `dimension::dimension_report`.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::dimension::{
    assemble_report, solve_bowen, ConnectivityHint, DimensionReport, FullDimDiagnostics, Verdict,
    AFFINE_TOL, CONNECTIVITY_TOL, RIGIDITY_TOL, T_CAP,
};
use crate::error::{Error, Result};
use crate::numeric::{fmt_g17, Kahan};
use crate::orbits::{Itinerary, OrbitLibrary, PeriodicOrbit, WORD_BUDGET};
use crate::pressure::{curve_flags, PressureCurve, PressureSample, N_USED_EXACT};

/// Root tolerance for the closed-form Bowen–Ruelle equations.
const EXACT_TOL: f64 = 1e-12;
/// Grid intervals for the closed-form affinity deviation.
const AFFINITY_INTERVALS: usize = 512;

/// A full `d`-shift with per-symbol unstable log-multipliers `ℓ_i > 0` and
/// constant Jacobian log-modulus `log|a| ≤ 0`.
#[derive(Clone, Debug)]
pub struct LinearModel {
    branch_logs: Vec<f64>,
    log_a: f64,
}

impl LinearModel {
    pub fn new(branch_logs: Vec<f64>, log_a: f64) -> Result<Self> {
        if branch_logs.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "a linear model needs at least 2 branches, got {}",
                branch_logs.len()
            )));
        }
        if let Some(bad) = branch_logs.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "branch log-multipliers must be positive and finite, got {bad}"
            )));
        }
        if !(log_a <= 0.0) || !log_a.is_finite() {
            return Err(Error::InvalidModel(format!(
                "log|a| must be finite and nonpositive, got {log_a}"
            )));
        }
        Ok(Self { branch_logs, log_a })
    }

    /// Convenience constructor for the ubiquitous two-branch model.
    pub fn two_branch(l0: f64, l1: f64, log_a: f64) -> Result<Self> {
        Self::new(vec![l0, l1], log_a)
    }

    pub fn branch_logs(&self) -> &[f64] {
        &self.branch_logs
    }

    pub fn log_a(&self) -> f64 {
        self.log_a
    }

    pub fn degree(&self) -> u64 {
        self.branch_logs.len() as u64
    }

    /// Gibbs weights `w_i ∝ e^{−t·ℓ_i}` and their first two moments
    /// against the branch logs: `(log Σ e^{−tℓ}, Σ wℓ, Σ wℓ²)`.
    fn moments(&self, t: f64) -> (f64, f64, f64) {
        let shift = self
            .branch_logs
            .iter()
            .map(|&l| -t * l)
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut s0, mut s1, mut s2) = (Kahan::default(), Kahan::default(), Kahan::default());
        for &l in &self.branch_logs {
            let w = (-t * l - shift).exp();
            s0.add(w);
            s1.add(w * l);
            s2.add(w * l * l);
        }
        let z = s0.value();
        (shift + z.ln(), s1.value() / z, s2.value() / z)
    }

    /// Closed-form unstable pressure `P^u(t) = log Σ_i e^{−t·ℓ_i}`.
    pub fn pressure_u(&self, t: f64) -> f64 {
        self.moments(t).0
    }

    /// Closed-form stable pressure `P^s(t) = P^u(t) + t·log|a|`.
    pub fn pressure_s(&self, t: f64) -> f64 {
        self.pressure_u(t) + t * self.log_a
    }

    /// Closed-form Lyapunov exponent `Λ(t) = Σ w_i ℓ_i`.
    pub fn lambda(&self, t: f64) -> f64 {
        self.moments(t).1
    }

    /// Closed-form Gibbs variance `V(t) = Σ w_i ℓ_i² − Λ(t)²` (= `−Λ′(t)`).
    pub fn variance(&self, t: f64) -> f64 {
        let (_, lambda, second) = self.moments(t);
        (second - lambda * lambda).max(0.0)
    }

    /// Closed-form entropy `h(t) = P^u(t) + t·Λ(t)`.
    pub fn entropy(&self, t: f64) -> f64 {
        let (p_u, lambda, _) = self.moments(t);
        p_u + t * lambda
    }

    /// Closed-form dimension curve `Δ(t)`.
    pub fn delta(&self, t: f64) -> f64 {
        self.exact_sample(t).delta
    }

    /// Closed-form derivative `dΔ/dt`.
    pub fn d_delta(&self, t: f64) -> f64 {
        self.exact_sample(t).d_delta
    }

    /// The full thermodynamic sample, exact at every `t ≥ 0`: `err_est = 0`
    /// and `n_used` is the `exact` sentinel.
    pub fn exact_sample(&self, t: f64) -> PressureSample {
        let (p_u, lambda, second) = self.moments(t);
        let variance = (second - lambda * lambda).max(0.0);
        let la = self.log_a;
        let p_s = p_u + t * la;
        let gap = lambda - la;
        PressureSample {
            t,
            p_u,
            p_s,
            lambda,
            lambda_neg: la - lambda,
            h: p_u + t * lambda,
            delta: 2.0 * t + p_u / lambda + p_s / gap,
            d_delta: variance * (p_u / (lambda * lambda) + p_s / (gap * gap)),
            p_avg: p_u,
            variance,
            n_used: N_USED_EXACT,
            err_est: 0.0,
        }
    }

    /// Closed-form pressure curve over an ascending grid. `n_max` carries
    /// the `exact` sentinel, matching the per-sample `n_used`.
    pub fn exact_curve(&self, grid: &[f64]) -> Result<PressureCurve> {
        if grid.is_empty() {
            return Err(Error::Config("pressure grid is empty".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "pressure grid must be strictly ascending".into(),
            ));
        }
        let samples: Vec<PressureSample> = grid.iter().map(|&t| self.exact_sample(t)).collect();
        let (p_u_strictly_decreasing, lambda_nonincreasing) = curve_flags(&samples);
        Ok(PressureCurve {
            fingerprint: self.fingerprint(),
            n_max: N_USED_EXACT,
            samples,
            p_u_strictly_decreasing,
            lambda_nonincreasing,
        })
    }

    /// Exact full-dimension diagnostics: the affinity deviation on a uniform
    /// grid over `[0, t_u]` and the rigidity spread `max_i |ℓ_i − Λ(0)|`
    /// (attained by the fixed points, so it equals the library supremum).
    fn exact_diagnostics(&self, t_u: f64) -> FullDimDiagnostics {
        let p0 = self.pressure_u(0.0);
        let p1 = self.pressure_u(t_u);
        let chord = |t: f64| p0 + (p1 - p0) * t / t_u;
        let mut affinity_deviation = 0.0f64;
        for k in 0..=AFFINITY_INTERVALS {
            let t = t_u * k as f64 / AFFINITY_INTERVALS as f64;
            affinity_deviation = affinity_deviation.max((self.pressure_u(t) - chord(t)).abs());
        }
        let lambda0 = self.lambda(0.0);
        let multiplier_rigidity = self
            .branch_logs
            .iter()
            .map(|&l| (l - lambda0).abs())
            .fold(0.0f64, f64::max);
        let volume_preserving = self.log_a == 0.0;
        let verdict = if affinity_deviation <= AFFINE_TOL && multiplier_rigidity <= RIGIDITY_TOL {
            Verdict::FullDimensionAffine
        } else if volume_preserving {
            Verdict::FullDimensionVolumePreserving
        } else {
            Verdict::NoFullDimension
        };
        let lambda0_vs_logd = lambda0 - (self.degree() as f64).ln();
        let connectivity_hint = if lambda0_vs_logd.abs() <= CONNECTIVITY_TOL {
            ConnectivityHint::ConnectedCandidate
        } else {
            ConnectivityHint::CantorCandidate
        };
        FullDimDiagnostics {
            volume_preserving,
            affinity_deviation,
            multiplier_rigidity,
            lambda0_vs_logd,
            verdict,
            connectivity_hint,
        }
    }

    /// Closed-form dimension report: roots to 1e−12 on `|P|`, maximizers by
    /// the shared sign-scan of the exact `dΔ/dt` polished by bisection.
    pub fn exact_report(&self) -> Result<DimensionReport> {
        // The unstable root always exists (ℓ_i > 0); expand the bracket cap
        // geometrically in case of very small branch logs.
        let mut cap = T_CAP;
        while self.pressure_u(cap) > 0.0 || self.pressure_s(cap) > 0.0 {
            cap *= 2.0;
            if cap > 1e9 {
                return Err(Error::InvalidModel(
                    "pressure fails to change sign at any reasonable t".into(),
                ));
            }
        }
        let t_u = solve_bowen(|t| Ok(self.pressure_u(t)), cap, EXACT_TOL)?;
        let t_s = solve_bowen(|t| Ok(self.pressure_s(t)), cap, EXACT_TOL)?;
        let diagnostics = self.exact_diagnostics(t_u);
        assemble_report(
            |t| Ok(self.exact_sample(t)),
            t_u,
            t_s,
            self.log_a,
            diagnostics,
            EXACT_TOL,
        )
    }

    /// Canonical fingerprint of the model parameters.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"linear;");
        for l in &self.branch_logs {
            hasher.update(fmt_g17(*l).as_bytes());
            hasher.update(b",");
        }
        hasher.update(b";");
        hasher.update(fmt_g17(self.log_a).as_bytes());
        format!("{:x}", hasher.finalize())
    }

    /// All primitive cycles of the full shift up to `n_max`, with exact
    /// log-multipliers `Σ_k ℓ_{s_k}` and placeholder geometry (synthetic
    /// flag set; closure checks do not apply).
    pub fn synthetic_library(&self, n_max: u32) -> Result<OrbitLibrary> {
        if n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        let d = self.degree();
        let mut total_words: u64 = 0;
        for n in 1..=n_max {
            let count = d
                .checked_pow(n)
                .filter(|&c| c <= WORD_BUDGET)
                .ok_or(Error::BudgetExceeded {
                    words: u64::MAX,
                    budget: WORD_BUDGET,
                })?;
            total_words += count;
            if total_words > WORD_BUDGET {
                return Err(Error::BudgetExceeded {
                    words: total_words,
                    budget: WORD_BUDGET,
                });
            }
        }

        let mut orbits: BTreeMap<u32, Vec<PeriodicOrbit>> = BTreeMap::new();
        for n in 1..=n_max {
            let mut level = Vec::new();
            for idx in 0..d.pow(n) {
                let itin = Itinerary::new(crate::orbits::word_symbols(idx, n, d));
                if !itin.is_canonical() || !itin.is_primitive() {
                    continue;
                }
                let log_mult_u: f64 = itin
                    .symbols()
                    .iter()
                    .map(|&s| self.branch_logs[s as usize])
                    .sum();
                level.push(PeriodicOrbit {
                    period: n,
                    itinerary: itin,
                    points: Vec::new(),
                    log_mult_u,
                    mult_u_arg: 0.0,
                    residual: 0.0,
                });
            }
            orbits.insert(n, level);
        }
        Ok(OrbitLibrary::from_parts(
            self.fingerprint(),
            d,
            self.log_a,
            n_max,
            true,
            orbits,
        ))
    }
}

/// One self-test row: a named residual against its tolerance.
#[derive(Clone, Debug)]
pub struct OracleCheck {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tol
    }
}

/// Frozen reference values for the canonical two-branch models, computed
/// independently at high precision before this module was built. Digits
/// beyond f64 precision record the source computation verbatim.
#[allow(clippy::excessive_precision)]
pub mod reference {
    /// `t^u` for branch multipliers (2, 8): root of `x + x³ = 1`, `x = 2^{−t}`.
    pub const ASYM_T_U: f64 = 0.551_463_089_745_595_5;
    /// `t^s` for (2, 8) with `|a| = 1/4`.
    pub const ASYM_T_S: f64 = 0.255_632_592_556_525_18;
    /// `dim_H J = t^u + t^s` for (2, 8), `|a| = 1/4`.
    pub const ASYM_DIM_J: f64 = 0.807_095_682_302_120_7;
    /// Interior maximizer `t*` of Δ for (2, 8), `|a| = 1/4`.
    pub const ASYM_T_STAR: f64 = 0.456_214_399_810_991_64;
    /// `d(g) = Δ(t*)` for (2, 8), `|a| = 1/4`.
    pub const ASYM_D_G: f64 = 0.801_927_266_428_983;
    /// Dimension gap `dim_H J − d(g)` for (2, 8), `|a| = 1/4`.
    pub const ASYM_GAP: f64 = 5.168_415_873_137_735e-3;
}

/// The canonical oracle equivalence suite: closed-form reports against
/// frozen references, derivative cross-checks, and the full pipeline on
/// synthetic libraries. Returns one row per check.
pub fn selftest() -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();
    let mut push = |name: &str, residual: f64, tol: f64| {
        checks.push(OracleCheck {
            name: name.to_string(),
            residual,
            tol,
        });
    };

    // 1. Symmetric volume-preserving model: (t_u, t_s, dim_J, d_g) = (1/2,
    //    1/2, 1, 1) with an affine verdict.
    let symmetric = LinearModel::two_branch(4f64.ln(), 4f64.ln(), 0.0)?;
    let report = symmetric.exact_report()?;
    push("symmetric-t_u", (report.t_u - 0.5).abs(), 1e-8);
    push("symmetric-t_s", (report.t_s - 0.5).abs(), 1e-8);
    push("symmetric-dim_J", (report.dim_j - 1.0).abs(), 1e-8);
    push("symmetric-d_g", (report.d_g - 1.0).abs(), 1e-8);
    push(
        "symmetric-affine-verdict",
        if report.diagnostics.verdict == Verdict::FullDimensionAffine {
            0.0
        } else {
            1.0
        },
        0.5,
    );

    // 2. Asymmetric volume-preserving model: t_u = t_s at the x + x³ = 1
    //    root and a vanishing gap.
    let asym_vp = LinearModel::two_branch(2f64.ln(), 8f64.ln(), 0.0)?;
    let report = asym_vp.exact_report()?;
    push("asym-vp-t_u", (report.t_u - reference::ASYM_T_U).abs(), 1e-8);
    push("asym-vp-t_s", (report.t_s - report.t_u).abs(), 1e-8);
    push("asym-vp-gap", report.gap.abs(), 1e-8);
    push(
        "asym-vp-volume-verdict",
        if report.diagnostics.verdict == Verdict::FullDimensionVolumePreserving {
            0.0
        } else {
            1.0
        },
        0.5,
    );

    // 3. Asymmetric contracting model against the frozen reference report.
    let asym = LinearModel::two_branch(2f64.ln(), 8f64.ln(), 0.25f64.ln())?;
    let report = asym.exact_report()?;
    push("asym-t_u", (report.t_u - reference::ASYM_T_U).abs(), 1e-8);
    push("asym-t_s", (report.t_s - reference::ASYM_T_S).abs(), 1e-8);
    push(
        "asym-dim_J",
        (report.dim_j - reference::ASYM_DIM_J).abs(),
        1e-8,
    );
    push("asym-d_g", (report.d_g - reference::ASYM_D_G).abs(), 1e-8);
    push("asym-gap", (report.gap - reference::ASYM_GAP).abs(), 1e-8);
    push(
        "asym-t_star",
        report
            .maximizers
            .iter()
            .map(|&(t, _)| (t - reference::ASYM_T_STAR).abs())
            .fold(f64::INFINITY, f64::min),
        1e-8,
    );
    push("asym-gap-positive", if report.gap > 1e-3 { 0.0 } else { 1.0 }, 0.5);
    push("asym-formula-residual", report.formula_residual, 1e-8);

    // 4. Derivative cross-checks on the closed forms.
    let eps = 1e-5;
    let mut worst_p = 0.0f64;
    let mut worst_delta = 0.0f64;
    for &t in &[0.2, 0.456, 0.7, 1.3] {
        let fd_p = (asym.pressure_u(t + eps) - asym.pressure_u(t - eps)) / (2.0 * eps);
        worst_p = worst_p.max((fd_p + asym.lambda(t)).abs());
        let fd_d = (asym.delta(t + eps) - asym.delta(t - eps)) / (2.0 * eps);
        worst_delta = worst_delta.max((fd_d - asym.d_delta(t)).abs());
    }
    push("derivative-dP_u", worst_p, 1e-8);
    push("derivative-dDelta", worst_delta, 1e-8);

    // 5. Pipeline equality: finite-level estimators on the synthetic
    //    library reproduce the closed forms exactly.
    let lib = asym.synthetic_library(6)?;
    let mut worst = 0.0f64;
    for &t in &[0.0, 0.5, 1.0, 2.0] {
        let exact = asym.exact_sample(t);
        let sampled = crate::pressure::sample_at(&lib, t, 6)?;
        for (a, b) in [
            (exact.p_u, sampled.p_u),
            (exact.p_s, sampled.p_s),
            (exact.lambda, sampled.lambda),
            (exact.lambda_neg, sampled.lambda_neg),
            (exact.h, sampled.h),
            (exact.delta, sampled.delta),
            (exact.d_delta, sampled.d_delta),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    push("pipeline-sample-agreement", worst, 1e-12);

    // 6. End-to-end: the generic dimension report on the synthetic library
    //    agrees with the closed-form report.
    let pipeline = crate::dimension::dimension_report(&lib, 6, 1e-11)?;
    let exact = asym.exact_report()?;
    let mut worst = 0.0f64;
    for (a, b) in [
        (pipeline.t_u, exact.t_u),
        (pipeline.t_s, exact.t_s),
        (pipeline.dim_j, exact.dim_j),
        (pipeline.d_g, exact.d_g),
        (pipeline.gap, exact.gap),
    ] {
        worst = worst.max((a - b).abs());
    }
    push("pipeline-report-agreement", worst, 1e-8);

    Ok(checks)
}
