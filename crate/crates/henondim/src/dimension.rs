//! Dimension layer: Bowen–Ruelle roots `t^u`, `t^s`, the Julia-set dimension
//! `t^u + t^s`, maximizers of the dimension curve `Δ` on `[t^s, t^u]`, the
//! dynamical dimension `d(g)` with its gap, and full-dimension diagnostics.
//!
//! All operations consume a pressure evaluator (a closure producing
//! [`PressureSample`]s), so the same code drives both finite-period orbit
//! libraries and exact closed-form models.

use std::fmt;

use crate::error::{Error, Result};
use crate::orbits::OrbitLibrary;
use crate::pressure::{sample_at, PressureSample};

/// Upper end of the root bracket for both Bowen–Ruelle equations. The
/// unstable root always lies in `[0, 2]`; the margin leaves room for stable
/// roots of strongly contracting maps and for curve exploration.
pub const T_CAP: f64 = 4.0;
/// Intervals in the maximizer sign scan of `dΔ/dt`.
const SCAN_INTERVALS: usize = 2000;
/// Maxima within this of the best are reported as ties.
const TIE_TOL: f64 = 1e-9;
/// Default threshold on the chord deviation of `P^u` for the affine verdict.
pub const AFFINE_TOL: f64 = 1e-6;
/// Default threshold on the multiplier spread for the affine verdict.
pub const RIGIDITY_TOL: f64 = 1e-6;
/// Threshold on `|Λ(0) − log d|` for the connectivity hint.
pub const CONNECTIVITY_TOL: f64 = 1e-6;
/// Intervals in the affinity-deviation grid on `[0, t_u]`.
const AFFINITY_INTERVALS: usize = 512;

/// Full-dimension diagnostics: the numerical shadows of the affinity,
/// rigidity, and entropy-maximality equivalences.
#[derive(Clone, Copy, Debug)]
pub struct FullDimDiagnostics {
    /// `|a| = 1` exactly (volume class of the generating map).
    pub volume_preserving: bool,
    /// `max |P_u(t) − chord(t)|` over a uniform grid on `[0, t_u]`, where
    /// the chord joins the curve's endpoints.
    pub affinity_deviation: f64,
    /// `max_p |(1/n) log|λ^u(p)| − Λ(0)|` over every orbit in the library.
    pub multiplier_rigidity: f64,
    /// `Λ(0) − log d` (nonnegative up to estimator error).
    pub lambda0_vs_logd: f64,
    pub verdict: Verdict,
    pub connectivity_hint: ConnectivityHint,
}

/// Diagnostic verdict on the existence of a measure of full dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    FullDimensionVolumePreserving,
    FullDimensionAffine,
    NoFullDimension,
}

impl Verdict {
    pub fn is_full_dimension(self) -> bool {
        !matches!(self, Verdict::NoFullDimension)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::FullDimensionVolumePreserving => "full-dimension-volume-preserving",
            Verdict::FullDimensionAffine => "full-dimension-affine",
            Verdict::NoFullDimension => "no-full-dimension",
        })
    }
}

/// Topological hint from the entropy-maximality criterion `Λ(0) = log d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectivityHint {
    ConnectedCandidate,
    CantorCandidate,
}

impl fmt::Display for ConnectivityHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectivityHint::ConnectedCandidate => "connected-candidate",
            ConnectivityHint::CantorCandidate => "cantor-candidate",
        })
    }
}

/// End-to-end dimension report for one map.
#[derive(Clone, Debug)]
pub struct DimensionReport {
    /// Root of `P^u(t) = 0`.
    pub t_u: f64,
    /// Root of `P^s(t) = 0`.
    pub t_s: f64,
    /// `dim_H J = t^u + t^s`.
    pub dim_j: f64,
    /// All `(t*, Δ(t*))` maximizers of `Δ` on `[t^s, t^u]` (ties within
    /// 1e−9 of the best are all reported).
    pub maximizers: Vec<(f64, f64)>,
    /// Dynamical dimension `d(g) = max Δ(t*)`.
    pub d_g: f64,
    /// Dimension gap `dim_H J − d(g)`.
    pub gap: f64,
    /// Max over maximizers of the critical-point consistency formula
    /// `|Δ(t*) − (2t* + P^u(t*)·log|a| / Λ(t*)²)|`; 0 by convention when the
    /// maximum sits on a flat (affine) or boundary-degenerate stretch where
    /// the critical-point identity does not apply.
    pub formula_residual: f64,
    pub diagnostics: FullDimDiagnostics,
}

/// Solve one Bowen–Ruelle equation `P(t) = 0` on `[0, t_cap]` to
/// `|P(t_root)| ≤ tol` by a bracketing bisection/secant hybrid.
///
/// The evaluator must be strictly decreasing with `P(0) > 0`; if the cap is
/// too small to bracket the sign change the error reports the cap value
/// rather than guessing.
pub fn solve_bowen<F>(mut pressure: F, t_cap: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let p_cap = pressure(t_cap)?;
    if p_cap > 0.0 {
        return Err(Error::NoBracket {
            t_cap,
            value: p_cap,
        });
    }
    crate::numeric::bracket_root(
        pressure,
        0.0,
        t_cap,
        tol,
        Error::NoBracket {
            t_cap,
            value: p_cap,
        },
    )
}

/// Locate every maximizer of `Δ` on `[t_s, t_u]` by a uniform sign scan of
/// `dΔ/dt` (positive-to-nonpositive crossings) polished by bisection to an
/// interval of width `tol`. Returns all maxima whose `Δ` is within 1e−9 of
/// the best, plus the critical-point formula residual
/// `max |Δ(t*) − (2t* + P^u(t*)·log|a|/Λ(t*)²)|`.
///
/// Errors with "no-interior-max" when `dΔ` never changes sign — the affine
/// and volume-preserving (full-dimension) cases, which the caller resolves
/// against the diagnostics verdict.
pub fn maximize_delta<F>(
    mut eval: F,
    t_s: f64,
    t_u: f64,
    log_a: f64,
    tol: f64,
) -> Result<(Vec<(f64, f64)>, f64)>
where
    F: FnMut(f64) -> Result<PressureSample>,
{
    if !(t_s < t_u) {
        return Err(Error::Config(format!(
            "maximizer scan needs t_s < t_u, got [{t_s}, {t_u}]"
        )));
    }
    let width = t_u - t_s;
    let grid_t = |k: usize| t_s + width * k as f64 / SCAN_INTERVALS as f64;
    let mut d_prev = eval(t_s)?.d_delta;
    let mut crossings: Vec<(f64, f64)> = Vec::new();
    for k in 1..=SCAN_INTERVALS {
        let t = grid_t(k);
        let d = eval(t)?.d_delta;
        if d_prev > 0.0 && d <= 0.0 {
            crossings.push((grid_t(k - 1), t));
        }
        d_prev = d;
    }
    if crossings.is_empty() {
        return Err(Error::NoInteriorMax { t_s, t_u });
    }

    let mut candidates: Vec<(f64, f64, f64)> = Vec::new(); // (t*, Δ*, residual)
    for (mut a, mut b) in crossings {
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if eval(mid)?.d_delta > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let t_star = 0.5 * (a + b);
        let s = eval(t_star)?;
        let formula = 2.0 * t_star + s.p_u * log_a / (s.lambda * s.lambda);
        candidates.push((t_star, s.delta, (s.delta - formula).abs()));
    }
    let best = candidates
        .iter()
        .map(|&(_, delta, _)| delta)
        .fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<(f64, f64, f64)> = candidates
        .into_iter()
        .filter(|&(_, delta, _)| delta >= best - TIE_TOL)
        .collect();
    let residual = kept
        .iter()
        .map(|&(_, _, r)| r)
        .fold(0.0f64, f64::max);
    Ok((kept.iter().map(|&(t, d, _)| (t, d)).collect(), residual))
}

/// Diagnostics for the full-dimension trichotomy.
///
/// Precedence: the affine verdict (chord deviation *and* multiplier
/// rigidity below threshold) is checked first — an affine pressure function
/// certifies a measure of full dimension whatever the volume class — then
/// exact volume preservation, then the generic no-full-dimension verdict.
pub fn full_dimension_diagnostics<F>(
    library: &OrbitLibrary,
    mut eval: F,
    t_u: f64,
    affine_tol: f64,
    rigidity_tol: f64,
) -> Result<FullDimDiagnostics>
where
    F: FnMut(f64) -> Result<PressureSample>,
{
    let p0 = eval(0.0)?;
    let p1 = eval(t_u)?;
    let chord = |t: f64| p0.p_u + (p1.p_u - p0.p_u) * t / t_u;
    let mut affinity_deviation = 0.0f64;
    for k in 0..=AFFINITY_INTERVALS {
        let t = t_u * k as f64 / AFFINITY_INTERVALS as f64;
        let dev = (eval(t)?.p_u - chord(t)).abs();
        affinity_deviation = affinity_deviation.max(dev);
    }

    let lambda0 = p0.lambda;
    let mut multiplier_rigidity = 0.0f64;
    for n in library.periods() {
        for orbit in library.orbits(n) {
            multiplier_rigidity = multiplier_rigidity.max((orbit.rate() - lambda0).abs());
        }
    }

    let volume_preserving = library.log_jac_mod() == 0.0;
    let verdict = if affinity_deviation <= affine_tol && multiplier_rigidity <= rigidity_tol {
        Verdict::FullDimensionAffine
    } else if volume_preserving {
        Verdict::FullDimensionVolumePreserving
    } else {
        Verdict::NoFullDimension
    };
    let lambda0_vs_logd = lambda0 - (library.degree() as f64).ln();
    let connectivity_hint = if lambda0_vs_logd.abs() <= CONNECTIVITY_TOL {
        ConnectivityHint::ConnectedCandidate
    } else {
        ConnectivityHint::CantorCandidate
    };
    Ok(FullDimDiagnostics {
        volume_preserving,
        affinity_deviation,
        multiplier_rigidity,
        lambda0_vs_logd,
        verdict,
        connectivity_hint,
    })
}

/// Assemble the maximizer block and final report from precomputed roots and
/// diagnostics. Shared by the library-driven report and closed-form models.
pub(crate) fn assemble_report<F>(
    mut eval: F,
    t_u: f64,
    t_s: f64,
    log_a: f64,
    diagnostics: FullDimDiagnostics,
    tol: f64,
) -> Result<DimensionReport>
where
    F: FnMut(f64) -> Result<PressureSample>,
{
    let dim_j = t_u + t_s;
    let midpoint =
        |eval: &mut F, residual_is_sentinel: bool| -> Result<(Vec<(f64, f64)>, f64)> {
            let t_star = 0.5 * (t_s + t_u);
            let s = eval(t_star)?;
            let residual = if residual_is_sentinel {
                0.0
            } else {
                let formula = 2.0 * t_star + s.p_u * log_a / (s.lambda * s.lambda);
                (s.delta - formula).abs()
            };
            Ok((vec![(t_star, s.delta)], residual))
        };

    let (maximizers, formula_residual) = if (t_u - t_s).abs() <= 4.0 * tol {
        // Degenerate interval (volume-preserving limit): the maximum sits at
        // the common root, where the critical-point formula still applies.
        midpoint(&mut eval, false)?
    } else {
        match maximize_delta(&mut eval, t_s, t_u, log_a, tol) {
            Ok(found) => found,
            Err(Error::NoInteriorMax { .. }) if diagnostics.verdict.is_full_dimension() => {
                // Flat Δ (affine pressure): every point is a maximum; report
                // the midpoint, with the critical-point residual suppressed
                // since no isolated critical point exists.
                midpoint(&mut eval, true)?
            }
            Err(e) => return Err(e),
        }
    };

    let d_g = maximizers
        .iter()
        .map(|&(_, delta)| delta)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DimensionReport {
        t_u,
        t_s,
        dim_j,
        maximizers,
        d_g,
        gap: dim_j - d_g,
        formula_residual,
        diagnostics,
    })
}

/// End-to-end dimension report from an orbit library at level `n_max`.
pub fn dimension_report(library: &OrbitLibrary, n_max: u32, tol: f64) -> Result<DimensionReport> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!(
            "root tolerance must be positive, got {tol}"
        )));
    }
    let eval = |t: f64| sample_at(library, t, n_max);
    let t_u = solve_bowen(|t| eval(t).map(|s| s.p_u), T_CAP, tol)?;
    let t_s = solve_bowen(|t| eval(t).map(|s| s.p_s), T_CAP, tol)?;
    let diagnostics = full_dimension_diagnostics(library, eval, t_u, AFFINE_TOL, RIGIDITY_TOL)?;
    assemble_report(eval, t_u, t_s, library.log_jac_mod(), diagnostics, tol)
}

/// Flat key-value rendering (`key=value`, one per line, 17 significant
/// digits) for terminal output and simple downstream parsing.
/// Flat key-value rendering. Numbers print as the shortest decimal that
/// round-trips the exact binary value (so `0.5` reads `0.5`, not a padded
/// scientific form); bulk CSV output keeps the fixed 17-digit format.
pub fn render_report(report: &DimensionReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    kv("t_u", report.t_u.to_string());
    kv("t_s", report.t_s.to_string());
    kv("dim_J", report.dim_j.to_string());
    kv("maximizer_count", report.maximizers.len().to_string());
    for (i, &(t_star, delta_star)) in report.maximizers.iter().enumerate() {
        kv(&format!("t_star_{}", i + 1), t_star.to_string());
        kv(&format!("Delta_star_{}", i + 1), delta_star.to_string());
    }
    kv("d_g", report.d_g.to_string());
    kv("gap", report.gap.to_string());
    kv("formula_residual", report.formula_residual.to_string());
    let d = &report.diagnostics;
    kv("volume_preserving", d.volume_preserving.to_string());
    kv("affinity_deviation", d.affinity_deviation.to_string());
    kv("multiplier_rigidity", d.multiplier_rigidity.to_string());
    kv("lambda0_vs_logd", d.lambda0_vs_logd.to_string());
    kv("verdict", d.verdict.to_string());
    kv("connectivity_hint", d.connectivity_hint.to_string());
    out
}
