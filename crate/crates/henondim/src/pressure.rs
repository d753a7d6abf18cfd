//! Thermodynamic layer: periodic-orbit partition sums and the derived
//! pressure, Lyapunov, entropy, and dimension-curve estimators.
//!
//! The level-`n` partition sum over fixed points of the `n`-th iterate is
//! `Z_n(t) = Σ_{p ∈ Fix(gⁿ)} |λ^u_n(p)|^{−t}`, accumulated in the log domain
//! with a max shift and compensated summation. The primary pressure
//! estimator is the ratio form `P̂_n = log Z_n − log Z_{n−1}`; the plain
//! `(1/n) log Z_n` average is retained as a diagnostic fallback. The stable
//! pressure is defined through the exact identity `P_s = P_u + t·log|a|`,
//! with a direct stable-side sum available for cross-checks only.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::HenonMap;
use crate::numeric::{fmt_g17, Kahan};
use crate::orbits::{cycle_multipliers, OrbitLibrary};

/// Sentinel `n_used` for samples produced by a closed-form model rather than
/// a finite-period estimator; rendered as `exact` in CSV output.
pub const N_USED_EXACT: u32 = u32::MAX;

/// Level-`n` partition data at one `t`.
#[derive(Clone, Copy, Debug)]
pub struct LevelSums {
    /// `log Z_n(t)`.
    pub log_z: f64,
    /// Weighted mean `Λ_n(t)` of the per-step rates `(1/n) log|λ^u_n|`.
    pub lambda: f64,
    /// Weighted variance `V_n(t)` of the per-step rates.
    pub variance: f64,
}

/// One row of the thermodynamic output at a fixed parameter `t`.
#[derive(Clone, Copy, Debug)]
pub struct PressureSample {
    pub t: f64,
    /// Unstable pressure `P^u(t)`, ratio estimator at `n_used`.
    pub p_u: f64,
    /// Stable pressure `P^s(t) = P^u(t) + t·log|a|` (exact identity).
    pub p_s: f64,
    /// Lyapunov exponent `Λ(t)` (weighted mean at `n_used`).
    pub lambda: f64,
    /// Contracting exponent `λ⁽¹⁾(t) = log|a| − Λ(t)`.
    pub lambda_neg: f64,
    /// Entropy `h(t) = P^u(t) + t·Λ(t)`.
    pub h: f64,
    /// Dimension curve `Δ(t) = 2t + P^u/Λ + P^s/(Λ − log|a|)`.
    pub delta: f64,
    /// Closed-form derivative `dΔ/dt = σ²·(P^u/Λ² + P^s/(Λ − log|a|)²)`
    /// with `σ² = n·V` (the analytic `−dΛ/dt` of the level-`n` weights).
    pub d_delta: f64,
    /// Diagnostic fallback estimator `(1/n) log Z_n`.
    pub p_avg: f64,
    /// Weighted rate variance `V` at `n_used`.
    pub variance: f64,
    /// Level the estimators were evaluated at (`N_USED_EXACT` if closed-form).
    pub n_used: u32,
    /// Successive-difference error heuristic `|P̂_n − P̂_{n−1}|`.
    pub err_est: f64,
}

/// Discretized equilibrium weights on the fixed points of `gⁿ`.
///
/// Keys are `(primitive period m, orbit index within that period, phase)`;
/// an orbit of primitive period `m` carries `m` fixed points of `gⁿ`, one
/// per phase, all with equal weight.
#[derive(Clone, Debug)]
pub struct WeightedOrbitMeasure {
    pub n: u32,
    pub weights: BTreeMap<(u32, usize, u32), f64>,
}

impl WeightedOrbitMeasure {
    /// Sum of all weights (1 up to rounding).
    pub fn total(&self) -> f64 {
        let mut acc = Kahan::default();
        for w in self.weights.values() {
            acc.add(*w);
        }
        acc.value()
    }

    /// Shannon entropy `−Σ w log w` (terms with `w = 0` contribute 0).
    pub fn entropy(&self) -> f64 {
        let mut acc = Kahan::default();
        for &w in self.weights.values() {
            if w > 0.0 {
                acc.add(-w * w.ln());
            }
        }
        acc.value()
    }
}

/// A pressure curve over an ascending `t` grid, with monotonicity flags.
#[derive(Clone, Debug)]
pub struct PressureCurve {
    /// Fingerprint of the generating map or model.
    pub fingerprint: String,
    /// Level the samples were computed at.
    pub n_max: u32,
    pub samples: Vec<PressureSample>,
    /// `P_u` strictly decreasing at every grid step.
    pub p_u_strictly_decreasing: bool,
    /// `Λ` nonincreasing at every grid step within `2·err_est` slack.
    pub lambda_nonincreasing: bool,
}

/// Divisors of `n` in ascending order.
fn divisors(n: u32) -> impl Iterator<Item = u32> {
    (1..=n).filter(move |&m| n.is_multiple_of(m))
}

/// One partition term: multiplicity, log-weight exponent at `t = 1`-free
/// form (the exponent is `−t·L`), and the per-step rate.
struct Term {
    multiplicity: f64,
    /// `L = (n/m)·log|λ^u_m|`, the full log-multiplier over `n` steps.
    log_mult: f64,
    /// Per-step rate `L/n = log|λ^u_m|/m`.
    rate: f64,
}

/// Partition terms for level `n`, in deterministic (period, itinerary) order.
fn level_terms(library: &OrbitLibrary, n: u32) -> Result<Vec<Term>> {
    if !library.is_complete(n) {
        return Err(Error::IncompleteLibrary { period: n });
    }
    let mut terms = Vec::new();
    for m in divisors(n) {
        let reps = f64::from(n / m);
        for orbit in library.orbits(m) {
            terms.push(Term {
                multiplicity: f64::from(m),
                log_mult: reps * orbit.log_mult_u,
                rate: orbit.rate(),
            });
        }
    }
    Ok(terms)
}

/// Max-shifted compensated moments of the terms at parameter `t`.
fn moments(terms: &[Term], t: f64) -> LevelSums {
    let shift = terms
        .iter()
        .map(|term| -t * term.log_mult)
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut s0, mut s1, mut s2) = (Kahan::default(), Kahan::default(), Kahan::default());
    for term in terms {
        let w = term.multiplicity * (-t * term.log_mult - shift).exp();
        s0.add(w);
        s1.add(w * term.rate);
        s2.add(w * term.rate * term.rate);
    }
    let z0 = s0.value();
    let lambda = s1.value() / z0;
    // Tiny negative values are pure cancellation noise (V = 0 libraries).
    let variance = (s2.value() / z0 - lambda * lambda).max(0.0);
    LevelSums {
        log_z: shift + z0.ln(),
        lambda,
        variance,
    }
}

/// `log Z_n(t)` with the weighted mean and variance of the per-step rates.
///
/// Fixed points of `gⁿ` on an orbit of primitive period `m | n` enter with
/// multiplicity `m` and multiplier `|λ^u_m|^{n/m}`. Terms are accumulated in
/// a fixed canonical order with compensated summation, so the result is
/// independent of any parallel scheduling upstream.
pub fn partition_sums(library: &OrbitLibrary, n: u32, t: f64) -> Result<LevelSums> {
    if t < 0.0 {
        return Err(Error::Config(format!(
            "pressure parameter t must be nonnegative, got {t}"
        )));
    }
    Ok(moments(&level_terms(library, n)?, t))
}

/// Full thermodynamic sample at one `t`, using levels `n_max`, `n_max−1`,
/// and `n_max−2` of the library.
pub fn sample_at(library: &OrbitLibrary, t: f64, n_max: u32) -> Result<PressureSample> {
    if n_max < 3 {
        return Err(Error::Config(format!(
            "pressure estimators need n_max >= 3, got {n_max}"
        )));
    }
    let top = partition_sums(library, n_max, t)?;
    let mid = partition_sums(library, n_max - 1, t)?;
    let low = partition_sums(library, n_max - 2, t)?;

    let p_u = top.log_z - mid.log_z;
    let prev = mid.log_z - low.log_z;
    let err_est = (p_u - prev).abs();
    let lambda = top.lambda;
    if lambda <= 0.0 {
        return Err(Error::DegenerateLambda { t, lambda });
    }
    let la = library.log_jac_mod();
    let p_s = p_u + t * la;
    let gap = lambda - la;
    let sigma2 = f64::from(n_max) * top.variance;
    Ok(PressureSample {
        t,
        p_u,
        p_s,
        lambda,
        lambda_neg: la - lambda,
        h: p_u + t * lambda,
        delta: 2.0 * t + p_u / lambda + p_s / gap,
        d_delta: sigma2 * (p_u / (lambda * lambda) + p_s / (gap * gap)),
        p_avg: top.log_z / f64::from(n_max),
        variance: top.variance,
        n_used: n_max,
        err_est,
    })
}

/// Normalized equilibrium weights on the fixed points of `gⁿ` at `t`.
pub fn orbit_measure(library: &OrbitLibrary, n: u32, t: f64) -> Result<WeightedOrbitMeasure> {
    if t < 0.0 {
        return Err(Error::Config(format!(
            "pressure parameter t must be nonnegative, got {t}"
        )));
    }
    if !library.is_complete(n) {
        return Err(Error::IncompleteLibrary { period: n });
    }
    let mut exponents: Vec<(u32, usize, f64)> = Vec::new();
    for m in divisors(n) {
        let reps = f64::from(n / m);
        for (idx, orbit) in library.orbits(m).iter().enumerate() {
            exponents.push((m, idx, -t * reps * orbit.log_mult_u));
        }
    }
    let shift = exponents
        .iter()
        .map(|&(_, _, y)| y)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = Kahan::default();
    for &(m, _, y) in &exponents {
        z.add(f64::from(m) * (y - shift).exp());
    }
    let z = z.value();
    let mut weights = BTreeMap::new();
    for (m, idx, y) in exponents {
        let w = (y - shift).exp() / z;
        for phase in 0..m {
            weights.insert((m, idx, phase), w);
        }
    }
    Ok(WeightedOrbitMeasure { n, weights })
}

/// Samples at every grid point (parallel over the grid, ordered output),
/// with the monotonicity flags of the assembled curve.
pub fn build_curve(library: &OrbitLibrary, grid: &[f64], n_max: u32) -> Result<PressureCurve> {
    if grid.is_empty() {
        return Err(Error::Config("pressure grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "pressure grid must be strictly ascending".into(),
        ));
    }
    let samples: Vec<PressureSample> = grid
        .par_iter()
        .map(|&t| sample_at(library, t, n_max))
        .collect::<Result<_>>()?;
    let (p_u_strictly_decreasing, lambda_nonincreasing) = curve_flags(&samples);
    Ok(PressureCurve {
        fingerprint: library.fingerprint().to_string(),
        n_max,
        samples,
        p_u_strictly_decreasing,
        lambda_nonincreasing,
    })
}

/// Monotonicity flags over an ordered sample row: `P_u` strictly decreasing,
/// and `Λ` nonincreasing within a `2·err_est` slack.
pub(crate) fn curve_flags(samples: &[PressureSample]) -> (bool, bool) {
    let p_u_strictly_decreasing = samples.windows(2).all(|s| s[1].p_u < s[0].p_u);
    let lambda_nonincreasing = samples
        .windows(2)
        .all(|s| s[1].lambda <= s[0].lambda + 2.0 * s[0].err_est.max(s[1].err_est));
    (p_u_strictly_decreasing, lambda_nonincreasing)
}

/// Ratio-estimator stable pressure from *directly computed* stable
/// multipliers (`Z^s_n(t) = Σ |λ^s_n(p)|^{t}`), bypassing the determinant
/// identity. This is a cross-check path: the production `p_s` field is the
/// identity value.
pub fn stable_pressure_direct(
    map: &HenonMap,
    library: &OrbitLibrary,
    t: f64,
    n_max: u32,
) -> Result<f64> {
    if n_max < 2 {
        return Err(Error::Config(format!(
            "the stable-pressure cross-check needs n_max >= 2, got {n_max}"
        )));
    }
    // Stable log-multipliers per orbit, computed once.
    let mut stable: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for m in library.periods().filter(|&m| m <= n_max) {
        let logs = library
            .orbits(m)
            .iter()
            .map(|orbit| Ok(cycle_multipliers(map, &orbit.points)?.log_s_direct))
            .collect::<Result<Vec<f64>>>()?;
        stable.insert(m, logs);
    }
    let level = |n: u32| -> Result<f64> {
        if !library.is_complete(n) {
            return Err(Error::IncompleteLibrary { period: n });
        }
        let mut terms: Vec<(f64, f64)> = Vec::new();
        for m in divisors(n) {
            let reps = f64::from(n / m);
            for log_s in &stable[&m] {
                terms.push((f64::from(m), t * reps * log_s));
            }
        }
        let shift = terms
            .iter()
            .map(|&(_, y)| y)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut s = Kahan::default();
        for (mult, y) in terms {
            s.add(mult * (y - shift).exp());
        }
        Ok(shift + s.value().ln())
    };
    Ok(level(n_max)? - level(n_max - 1)?)
}

/// Ascending grid `start, start+step, …` up to and including `stop` (within
/// half a step of rounding slack at the top end).
pub fn t_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Config(format!(
            "invalid t grid: start {start}, stop {stop}, step {step}"
        )));
    }
    if start < 0.0 || stop < start {
        return Err(Error::Config(format!(
            "invalid t grid: need 0 <= start <= stop, got start {start}, stop {stop}"
        )));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| start + k as f64 * step).collect();
    // Clip any overshoot from the rounding slack.
    while grid.last().is_some_and(|&t| t > stop + 1e-12 * step) {
        grid.pop();
    }
    Ok(grid)
}

fn n_used_label(n: u32) -> String {
    if n == N_USED_EXACT {
        "exact".to_string()
    } else {
        n.to_string()
    }
}

/// CSV serialization: `t,P_u,P_s,Lambda,h,Delta,dDelta,n_used,err_est` with
/// 17-significant-digit decimals.
pub fn write_curve_csv<W: Write>(curve: &PressureCurve, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,P_u,P_s,Lambda,h,Delta,dDelta,n_used,err_est")?;
    for s in &curve.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_g17(s.t),
            fmt_g17(s.p_u),
            fmt_g17(s.p_s),
            fmt_g17(s.lambda),
            fmt_g17(s.h),
            fmt_g17(s.delta),
            fmt_g17(s.d_delta),
            n_used_label(s.n_used),
            fmt_g17(s.err_est),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::map::HenonMap;
    use crate::orbits::{enumerate_orbits, EnumerateOpts, OrbitLibrary, VerifyMode};
    use crate::testutil::two_branch_library;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_level_counts_fix_the_partition_at_t_zero() {
        let lib = two_branch_library([2f64.ln(), 8f64.ln()], 0.25f64.ln(), 5);
        for n in 1..=5 {
            let sums = partition_sums(&lib, n, 0.0).unwrap();
            assert!(close(sums.log_z, f64::from(n) * 2f64.ln(), 1e-12));
        }
        // Z_2(0) = 4 exactly.
        let z2 = partition_sums(&lib, 2, 0.0).unwrap();
        assert!(close(z2.log_z.exp(), 4.0, 1e-12));
        // Uniform weights at t = 0: Lambda is the flat mean of per-step rates.
        let measure = orbit_measure(&lib, 3, 0.0).unwrap();
        let first = *measure.weights.values().next().unwrap();
        assert!(measure.weights.values().all(|w| close(*w, first, 1e-15)));
    }

    #[test]
    fn asymmetric_two_branch_matches_the_binomial_sum() {
        let lib = two_branch_library([2f64.ln(), 8f64.ln()], 0.25f64.ln(), 6);
        // Z_2(1) = (2^{-1} + 8^{-1})² = 0.390625.
        let sums = partition_sums(&lib, 2, 1.0).unwrap();
        assert!(close(sums.log_z, 0.390_625f64.ln(), 1e-13));
        // At t = 1 the weights are 0.8 / 0.2 per branch, so the weighted mean
        // rate is 0.8·log 2 + 0.2·log 8 = 1.4·log 2.
        let sample = sample_at(&lib, 1.0, 6).unwrap();
        assert!(close(sample.lambda, 1.4 * 2f64.ln(), 1e-12));
        assert!(close(sample.p_u, 0.625f64.ln(), 1e-12));
        // Locally constant potential: the ratio estimator is exact at every
        // level, so the successive-difference heuristic vanishes.
        assert!(sample.err_est <= 1e-13);
    }

    #[test]
    fn constant_multiplier_library_is_exact_and_flat() {
        // Both branches expand by 4: P_u(t) = log 2 − t·log 4, Λ ≡ log 4,
        // h ≡ log 2, V ≡ 0, and Δ ≡ 1 when volume is preserved.
        let lib = two_branch_library([4f64.ln(), 4f64.ln()], 0.0, 5);
        for &t in &[0.0, 0.35, 1.0, 2.0] {
            let s = sample_at(&lib, t, 5).unwrap();
            assert!(close(s.p_u, 2f64.ln() - t * 4f64.ln(), 1e-12));
            assert!(close(s.lambda, 4f64.ln(), 1e-12));
            assert!(close(s.h, 2f64.ln(), 1e-12));
            assert_eq!(s.variance, 0.0);
            assert_eq!(s.d_delta, 0.0);
            assert!(close(s.delta, 1.0, 1e-12));
            // Volume preserving: stable and unstable pressure coincide.
            assert_eq!(s.p_s, s.p_u);
        }
    }

    #[test]
    fn stable_identity_and_young_form_hold_for_every_sample() {
        let lib = two_branch_library([2f64.ln(), 8f64.ln()], 0.25f64.ln(), 6);
        let la = lib.log_jac_mod();
        for &t in &[0.0, 0.3, 0.7, 1.1, 2.0] {
            let s = sample_at(&lib, t, 6).unwrap();
            // Identity holds exactly as implemented.
            assert_eq!(s.p_s, s.p_u + t * la);
            assert_eq!(s.lambda_neg, la - s.lambda);
            assert_eq!(s.h, s.p_u + t * s.lambda);
            assert!(s.lambda > 0.0 && s.lambda_neg < 0.0);
            // Young form h/Λ + h/(Λ − log|a|) agrees with the pressure form.
            let young = s.h / s.lambda + s.h / (s.lambda - la);
            assert!(close(young, s.delta, 1e-12));
        }
    }

    #[test]
    fn gibbs_entropy_identity_holds_at_fixed_level() {
        let lib = two_branch_library([2f64.ln(), 8f64.ln()], 0.25f64.ln(), 6);
        for n in 3..=6 {
            for &t in &[0.0, 0.7, 1.3] {
                let sums = partition_sums(&lib, n, t).unwrap();
                let measure = orbit_measure(&lib, n, t).unwrap();
                assert!(close(measure.total(), 1.0, 1e-12));
                let lhs = measure.entropy() / f64::from(n);
                let rhs = sums.log_z / f64::from(n) + t * sums.lambda;
                assert!(
                    close(lhs, rhs, 1e-10),
                    "Gibbs identity failed at n={n}, t={t}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn lambda_derivative_is_minus_n_times_variance() {
        let lib = two_branch_library([2f64.ln(), 8f64.ln()], 0.25f64.ln(), 6);
        let n = 6;
        let eps = 1e-5;
        for &t in &[0.2, 0.8, 1.5] {
            let hi = partition_sums(&lib, n, t + eps).unwrap();
            let lo = partition_sums(&lib, n, t - eps).unwrap();
            let mid = partition_sums(&lib, n, t).unwrap();
            assert!(mid.variance >= 0.0);
            let fd = (hi.lambda - lo.lambda) / (2.0 * eps);
            assert!(
                close(fd, -f64::from(n) * mid.variance, 1e-6),
                "dLambda/dt mismatch at t={t}: {fd} vs {}",
                -f64::from(n) * mid.variance
            );
        }
    }

    #[test]
    fn curve_has_monotone_flags_and_renders_csv() {
        let lib = two_branch_library([2f64.ln(), 8f64.ln()], 0.25f64.ln(), 5);
        let grid = t_grid(0.0, 2.0, 0.25).unwrap();
        assert_eq!(grid.len(), 9);
        let curve = build_curve(&lib, &grid, 5).unwrap();
        assert!(curve.p_u_strictly_decreasing);
        assert!(curve.lambda_nonincreasing);
        assert_eq!(curve.samples.len(), 9);

        let mut csv = Vec::new();
        write_curve_csv(&curve, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,P_u,P_s,Lambda,h,Delta,dDelta,n_used,err_est"
        );
        assert_eq!(text.lines().count(), 10);
        assert!(text.lines().skip(1).all(|row| row.split(',').count() == 9));
        assert!(text.contains(",5,"));

        // The closed-form sentinel renders as `exact`.
        let mut exact_curve = curve.clone();
        exact_curve.samples[0].n_used = N_USED_EXACT;
        let mut csv = Vec::new();
        write_curve_csv(&exact_curve, &mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().contains(",exact,"));
    }

    #[test]
    fn rejects_bad_grids_incomplete_libraries_and_degenerate_inputs() {
        let lib = two_branch_library([2f64.ln(), 8f64.ln()], 0.25f64.ln(), 4);
        assert!(matches!(
            partition_sums(&lib, 5, 1.0),
            Err(Error::IncompleteLibrary { period: 5 })
        ));
        assert!(partition_sums(&lib, 2, -0.5).is_err());
        assert!(sample_at(&lib, 1.0, 2).is_err());
        assert!(build_curve(&lib, &[], 4).is_err());
        assert!(build_curve(&lib, &[0.0, 0.0], 4).is_err());
        assert!(t_grid(0.0, 1.0, -0.1).is_err());
        assert!(t_grid(0.5, 0.2, 0.1).is_err());

        // A library with a missing period-3 orbit fails completeness.
        let mut orbits = BTreeMap::new();
        for n in 1..=4 {
            let mut level = two_branch_library([2f64.ln(), 8f64.ln()], 0.25f64.ln(), 4)
                .orbits(n)
                .to_vec();
            if n == 3 {
                level.pop();
            }
            orbits.insert(n, level);
        }
        let broken = OrbitLibrary::from_parts("broken".into(), 2, 0.25f64.ln(), 4, true, orbits);
        assert!(matches!(
            partition_sums(&broken, 3, 1.0),
            Err(Error::IncompleteLibrary { period: 3 })
        ));
    }

    #[test]
    fn direct_stable_sums_confirm_the_pressure_identity() {
        let map = HenonMap::quadratic((-6.0).into(), 0.2.into()).unwrap();
        let opts = EnumerateOpts {
            verify: VerifyMode::CanonicalOnly,
            ..EnumerateOpts::default()
        };
        let lib = enumerate_orbits(&map, 5, &opts).unwrap();
        for &t in &[0.0, 0.5, 1.0] {
            let sample = sample_at(&lib, t, 5).unwrap();
            let direct = stable_pressure_direct(&map, &lib, t, 5).unwrap();
            assert!(
                close(sample.p_s, direct, 1e-12),
                "stable pressure mismatch at t={t}: identity {} vs direct {direct}",
                sample.p_s
            );
        }
    }
}
