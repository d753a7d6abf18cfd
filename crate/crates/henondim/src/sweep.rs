//! Parameter-family sweeps: dimension reports along segments and circles in
//! one complex parameter, the continuity statistic, and the sub-mean-value
//! (plurisubharmonicity) check on circles.
//!
//! A family is a template (a Hénon map or a linear shift model) with one
//! designated parameter slot. Hénon samples are gated by a horseshoe guard
//! *before* any computation; per-sample numerical failures during the sweep
//! are recorded in the record's status and never abort the run.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dimension::{dimension_report, DimensionReport};
use crate::error::{Error, Result};
use crate::map::{HenonFactor, HenonMap};
use crate::numeric::{fmt_g17, Kahan};
use crate::oracle::LinearModel;
use crate::orbits::{enumerate_orbits, EnumerateOpts, VerifyMode};
use crate::pressure::sample_at;

/// Which scalar of the template the sweep parameter replaces.
///
/// Hénon slots consume the full complex parameter; linear-model slots are
/// real quantities and consume its real part.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamSlot {
    /// Coefficient `coeff` (ascending-degree index) of factor `factor`.
    FactorCoeff { factor: usize, coeff: usize },
    /// The `a` of factor `factor`.
    FactorA { factor: usize },
    /// Branch log-multiplier `branch` of a linear model (real part).
    BranchLog { branch: usize },
    /// The `log|a|` of a linear model (real part).
    LogA,
}

/// Sample layout in the parameter plane.
#[derive(Clone, Copy, Debug)]
pub enum SampleShape {
    /// `samples` points from `from` to `to` inclusive (evenly spaced).
    Segment {
        from: Complex64,
        to: Complex64,
        samples: u32,
    },
    /// `samples` points `center + radius·e^{2πik/samples}`.
    Circle {
        center: Complex64,
        radius: f64,
        samples: u32,
    },
}

/// Hyperbolicity gate applied to every Hénon sample before the sweep runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HorseshoeGuard {
    /// `|c| > 2(1+|a|)²` on the constant term — valid only for
    /// single-factor degree-2 templates.
    Degree2Default,
    /// The user asserts hyperbolicity of every sample (no check).
    AssertedHyperbolic,
}

/// The swept object: template, slot, sample shape, and guard.
#[derive(Clone, Debug)]
pub struct FamilySpec {
    pub template: FamilyTemplate,
    pub slot: ParamSlot,
    pub shape: SampleShape,
    pub guard: HorseshoeGuard,
}

/// Template the parameter is substituted into.
#[derive(Clone, Debug)]
pub enum FamilyTemplate {
    Henon(HenonMap),
    Linear(LinearModel),
}

/// A fully instantiated family member.
pub enum FamilyMember {
    Henon(HenonMap),
    Linear(LinearModel),
}

/// One row of the sweep atlas.
#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub param: Complex64,
    pub t_u: f64,
    pub t_s: f64,
    pub dim_j: f64,
    pub d_g: f64,
    pub gap: f64,
    pub n_max: u32,
    /// `ok`, or the error tag of the failure that produced this record.
    pub status: String,
    /// Pressure error heuristic at the best maximizer (0 for exact models;
    /// NaN when status is not `ok`). Not part of the CSV contract.
    pub err_est: f64,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Sub-mean-value check result on a circle family.
#[derive(Clone, Copy, Debug)]
pub struct SubmeanReport {
    pub center: Complex64,
    pub radius: f64,
    pub samples: u32,
    /// `d_g` at the circle center.
    pub center_value: f64,
    /// Mean of `d_g` over the circle samples.
    pub circle_mean: f64,
    /// `circle_mean − center_value` (plurisubharmonicity predicts ≥ 0 up to
    /// estimator error).
    pub margin: f64,
    /// Max pressure `err_est` over the center and circle samples.
    pub err_budget: f64,
    /// True only if `margin < −2·err_budget`.
    pub violation: bool,
}

impl FamilySpec {
    /// The sampled parameter values, in deterministic order.
    pub fn params(&self) -> Vec<Complex64> {
        match self.shape {
            SampleShape::Segment { from, to, samples } => {
                let n = samples.max(1);
                (0..n)
                    .map(|k| {
                        if n == 1 {
                            from
                        } else {
                            from + (to - from) * (f64::from(k) / f64::from(n - 1))
                        }
                    })
                    .collect()
            }
            SampleShape::Circle {
                center,
                radius,
                samples,
            } => {
                let n = samples.max(1);
                (0..n)
                    .map(|k| {
                        let theta = std::f64::consts::TAU * f64::from(k) / f64::from(n);
                        center + Complex64::from_polar(radius, theta)
                    })
                    .collect()
            }
        }
    }

    /// Build the family member at one parameter value.
    pub fn instantiate(&self, param: Complex64) -> Result<FamilyMember> {
        match (&self.template, self.slot) {
            (FamilyTemplate::Henon(map), ParamSlot::FactorCoeff { factor, coeff }) => {
                let factors = rebuild_factors(map, factor, |coeffs, a| {
                    let mut coeffs = coeffs.to_vec();
                    *coeffs.get_mut(coeff).ok_or_else(|| {
                        Error::Config(format!(
                            "slot coefficient index {coeff} out of range for factor {factor}"
                        ))
                    })? = param;
                    HenonFactor::new(coeffs, a)
                })?;
                Ok(FamilyMember::Henon(HenonMap::new(factors)?))
            }
            (FamilyTemplate::Henon(map), ParamSlot::FactorA { factor }) => {
                let factors =
                    rebuild_factors(map, factor, |coeffs, _| HenonFactor::new(coeffs.to_vec(), param))?;
                Ok(FamilyMember::Henon(HenonMap::new(factors)?))
            }
            (FamilyTemplate::Linear(model), ParamSlot::BranchLog { branch }) => {
                let mut logs = model.branch_logs().to_vec();
                *logs.get_mut(branch).ok_or_else(|| {
                    Error::Config(format!("slot branch index {branch} out of range"))
                })? = param.re;
                Ok(FamilyMember::Linear(LinearModel::new(logs, model.log_a())?))
            }
            (FamilyTemplate::Linear(model), ParamSlot::LogA) => Ok(FamilyMember::Linear(
                LinearModel::new(model.branch_logs().to_vec(), param.re)?,
            )),
            (FamilyTemplate::Henon(_), _) => Err(Error::Config(
                "linear-model slot used with a Hénon template".into(),
            )),
            (FamilyTemplate::Linear(_), _) => Err(Error::Config(
                "Hénon slot used with a linear-model template".into(),
            )),
        }
    }

    /// Check that the slot addresses the template (right kind, in range).
    /// Parameter-independent, so a violation rejects the whole family.
    fn validate_slot(&self) -> Result<()> {
        let factor_count = |map: &HenonMap| map.factors().len();
        match (&self.template, self.slot) {
            (FamilyTemplate::Henon(map), ParamSlot::FactorCoeff { factor, coeff }) => {
                let f = map.factors().get(factor).ok_or_else(|| {
                    Error::Config(format!(
                        "slot factor index {factor} out of range ({} factors)",
                        factor_count(map)
                    ))
                })?;
                if coeff >= f.coeffs().len() {
                    return Err(Error::Config(format!(
                        "slot coefficient index {coeff} out of range for factor {factor} \
                         ({} coefficients)",
                        f.coeffs().len()
                    )));
                }
                Ok(())
            }
            (FamilyTemplate::Henon(map), ParamSlot::FactorA { factor }) => {
                if factor >= factor_count(map) {
                    return Err(Error::Config(format!(
                        "slot factor index {factor} out of range ({} factors)",
                        factor_count(map)
                    )));
                }
                Ok(())
            }
            (FamilyTemplate::Linear(model), ParamSlot::BranchLog { branch }) => {
                if branch >= model.branch_logs().len() {
                    return Err(Error::Config(format!(
                        "slot branch index {branch} out of range ({} branches)",
                        model.branch_logs().len()
                    )));
                }
                Ok(())
            }
            (FamilyTemplate::Linear(_), ParamSlot::LogA) => Ok(()),
            (FamilyTemplate::Henon(_), _) => Err(Error::Config(
                "linear-model slot used with a Hénon template".into(),
            )),
            (FamilyTemplate::Linear(_), _) => Err(Error::Config(
                "Hénon slot used with a linear-model template".into(),
            )),
        }
    }

    /// Apply the horseshoe guard to every sample up front, rejecting the
    /// whole family on the first violation.
    fn validate_guard(&self, params: &[Complex64]) -> Result<()> {
        match (&self.template, self.guard) {
            (_, HorseshoeGuard::AssertedHyperbolic) => Ok(()),
            (FamilyTemplate::Linear(_), HorseshoeGuard::Degree2Default) => {
                Err(Error::GuardViolation(
                    "the degree-2 guard does not apply to linear models; \
                     use the asserted-hyperbolic guard"
                        .into(),
                ))
            }
            (FamilyTemplate::Henon(map), HorseshoeGuard::Degree2Default) => {
                if map.factors().len() != 1 || map.factors()[0].degree() != 2 {
                    return Err(Error::GuardViolation(
                        "the default |c| > 2(1+|a|)^2 guard covers only single-factor \
                         degree-2 maps; assert hyperbolicity explicitly for other templates"
                            .into(),
                    ));
                }
                for (k, &param) in params.iter().enumerate() {
                    let member = self.instantiate(param)?;
                    let FamilyMember::Henon(map) = member else {
                        unreachable!("Hénon template instantiates to a Hénon member")
                    };
                    let factor = &map.factors()[0];
                    let c = factor.coeffs()[0].norm();
                    let bound = 2.0 * (1.0 + factor.a().norm()).powi(2);
                    if c <= bound {
                        return Err(Error::GuardViolation(format!(
                            "sample {k} at param {param}: |c| = {c} <= 2(1+|a|)^2 = {bound}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

fn rebuild_factors(
    map: &HenonMap,
    target: usize,
    rebuild: impl Fn(&[Complex64], Complex64) -> Result<HenonFactor>,
) -> Result<Vec<HenonFactor>> {
    if target >= map.factors().len() {
        return Err(Error::Config(format!(
            "slot factor index {target} out of range ({} factors)",
            map.factors().len()
        )));
    }
    map.factors()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if i == target {
                rebuild(f.coeffs(), f.a())
            } else {
                HenonFactor::new(f.coeffs().to_vec(), f.a())
            }
        })
        .collect()
}

/// Full-pipeline evaluation of one family member: the dimension report and
/// the pressure error heuristic at its best maximizer.
fn evaluate_member(member: &FamilyMember, n_max: u32, tol: f64) -> Result<(DimensionReport, f64)> {
    match member {
        FamilyMember::Henon(map) => {
            let opts = EnumerateOpts {
                verify: VerifyMode::CanonicalOnly,
                ..EnumerateOpts::default()
            };
            let library = enumerate_orbits(map, n_max, &opts)?;
            let report = dimension_report(&library, n_max, tol)?;
            let t_best = report
                .maximizers
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|&(t, _)| t)
                .unwrap_or(report.t_u);
            let err_est = sample_at(&library, t_best, n_max)?.err_est;
            Ok((report, err_est))
        }
        FamilyMember::Linear(model) => Ok((model.exact_report()?, 0.0)),
    }
}

fn evaluate_param(family: &FamilySpec, param: Complex64, n_max: u32, tol: f64) -> SweepRecord {
    let outcome = family
        .instantiate(param)
        .and_then(|member| evaluate_member(&member, n_max, tol));
    match outcome {
        Ok((report, err_est)) => SweepRecord {
            param,
            t_u: report.t_u,
            t_s: report.t_s,
            dim_j: report.dim_j,
            d_g: report.d_g,
            gap: report.gap,
            n_max,
            status: "ok".into(),
            err_est,
        },
        Err(err) => SweepRecord {
            param,
            t_u: f64::NAN,
            t_s: f64::NAN,
            dim_j: f64::NAN,
            d_g: f64::NAN,
            gap: f64::NAN,
            n_max,
            status: err.tag().into(),
            err_est: f64::NAN,
        },
    }
}

/// Sweep the family: one record per sample, in sample order, computed with
/// fresh orbit libraries. Guard violations reject the family up front;
/// numerical failures on individual samples land in that record's status.
pub fn sweep(family: &FamilySpec, n_max: u32, tol: f64) -> Result<Vec<SweepRecord>> {
    let params = family.params();
    if params.is_empty() {
        return Err(Error::Config("family has no samples".into()));
    }
    family.validate_slot()?;
    family.validate_guard(&params)?;
    Ok(params
        .par_iter()
        .map(|&param| evaluate_param(family, param, n_max, tol))
        .collect())
}

/// `max |d_g(λ_{k+1}) − d_g(λ_k)|` over adjacent pairs of ok records.
pub fn continuity_statistic(records: &[SweepRecord]) -> f64 {
    records
        .windows(2)
        .filter(|w| w[0].is_ok() && w[1].is_ok())
        .map(|w| (w[1].d_g - w[0].d_g).abs())
        .fold(0.0f64, f64::max)
}

/// Sub-mean-value check on a circle family: compares `d_g` at the center
/// against its mean over the circle. Any failed sample fails the check.
pub fn submean_check(family: &FamilySpec, n_max: u32, tol: f64) -> Result<SubmeanReport> {
    let SampleShape::Circle {
        center,
        radius,
        samples,
    } = family.shape
    else {
        return Err(Error::Config(
            "the sub-mean-value check needs a circle family".into(),
        ));
    };
    if samples < 8 {
        return Err(Error::Config(format!(
            "the sub-mean-value check needs at least 8 circle samples, got {samples}"
        )));
    }
    let params = family.params();
    family.validate_slot()?;
    family.validate_guard(&params)?;
    family.validate_guard(&[center])?;

    let evaluated: Vec<(DimensionReport, f64)> = params
        .par_iter()
        .map(|&param| {
            let member = family.instantiate(param)?;
            evaluate_member(&member, n_max, tol)
        })
        .collect::<Result<_>>()?;
    let (center_report, center_err) =
        evaluate_member(&family.instantiate(center)?, n_max, tol)?;

    let mut mean = Kahan::default();
    let mut err_budget = center_err;
    for (report, err) in &evaluated {
        mean.add(report.d_g);
        err_budget = err_budget.max(*err);
    }
    let circle_mean = mean.value() / evaluated.len() as f64;
    let center_value = center_report.d_g;
    let margin = circle_mean - center_value;
    Ok(SubmeanReport {
        center,
        radius,
        samples,
        center_value,
        circle_mean,
        margin,
        err_budget,
        violation: margin < -2.0 * err_budget,
    })
}

fn csv_field(x: f64) -> String {
    if x.is_finite() {
        fmt_g17(x)
    } else {
        "nan".to_string()
    }
}

/// Atlas CSV: `param_re,param_im,t_u,t_s,dim_J,d_g,gap,n_max,status`.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "param_re,param_im,t_u,t_s,dim_J,d_g,gap,n_max,status")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_g17(r.param.re),
            fmt_g17(r.param.im),
            csv_field(r.t_u),
            csv_field(r.t_s),
            csv_field(r.dim_j),
            csv_field(r.d_g),
            csv_field(r.gap),
            r.n_max,
            r.status,
        )?;
    }
    Ok(())
}

/// Key-value rendering of the sub-mean-value report. Numbers print as the
/// shortest round-trip decimal, matching the dimension report.
pub fn render_submean(report: &SubmeanReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    kv("center_re", report.center.re.to_string());
    kv("center_im", report.center.im.to_string());
    kv("radius", report.radius.to_string());
    kv("samples", report.samples.to_string());
    kv("center_value", report.center_value.to_string());
    kv("circle_mean", report.circle_mean.to_string());
    kv("margin", report.margin.to_string());
    kv("err_budget", report.err_budget.to_string());
    kv("violation", report.violation.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn henon_family(shape: SampleShape) -> FamilySpec {
        let template = HenonMap::quadratic(Complex64::new(-7.0, 0.0), Complex64::new(0.2, 0.0))
            .unwrap();
        FamilySpec {
            template: FamilyTemplate::Henon(template),
            slot: ParamSlot::FactorCoeff {
                factor: 0,
                coeff: 0,
            },
            shape,
            guard: HorseshoeGuard::Degree2Default,
        }
    }

    fn linear_family(shape: SampleShape) -> FamilySpec {
        let model = LinearModel::two_branch(2f64.ln(), 8f64.ln(), 0.25f64.ln()).unwrap();
        FamilySpec {
            template: FamilyTemplate::Linear(model),
            slot: ParamSlot::BranchLog { branch: 1 },
            shape,
            guard: HorseshoeGuard::AssertedHyperbolic,
        }
    }

    #[test]
    fn segment_and_circle_sampling_are_deterministic() {
        let seg = henon_family(SampleShape::Segment {
            from: Complex64::new(-8.0, 0.0),
            to: Complex64::new(-6.0, 0.0),
            samples: 5,
        });
        let params = seg.params();
        assert_eq!(params.len(), 5);
        assert_eq!(params[0], Complex64::new(-8.0, 0.0));
        assert_eq!(params[4], Complex64::new(-6.0, 0.0));
        assert_eq!(params[2], Complex64::new(-7.0, 0.0));

        let circle = henon_family(SampleShape::Circle {
            center: Complex64::new(-7.0, 0.0),
            radius: 0.25,
            samples: 8,
        });
        let params = circle.params();
        assert_eq!(params.len(), 8);
        assert!((params[0] - Complex64::new(-6.75, 0.0)).norm() < 1e-15);
        assert!((params[4] - Complex64::new(-7.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn guard_rejects_small_constants_up_front() {
        let family = henon_family(SampleShape::Segment {
            from: Complex64::new(-8.0, 0.0),
            to: Complex64::new(-1.0, 0.0), // |c| = 1 fails |c| > 2(1+0.2)² = 2.88
            samples: 8,
        });
        match sweep(&family, 4, 1e-9) {
            Err(Error::GuardViolation(msg)) => {
                assert!(msg.contains("2(1+|a|)^2"), "unexpected message: {msg}")
            }
            other => panic!("expected guard violation, got {other:?}"),
        }
        // The default guard refuses templates it does not cover.
        let mut family = linear_family(SampleShape::Segment {
            from: Complex64::new(1.0, 0.0),
            to: Complex64::new(2.0, 0.0),
            samples: 3,
        });
        family.guard = HorseshoeGuard::Degree2Default;
        assert!(matches!(
            sweep(&family, 4, 1e-9),
            Err(Error::GuardViolation(_))
        ));

        // Slot/template mismatches and bad indices also abort up front.
        let mut bad = henon_family(SampleShape::Segment {
            from: Complex64::new(-8.0, 0.0),
            to: Complex64::new(-7.0, 0.0),
            samples: 3,
        });
        bad.slot = ParamSlot::BranchLog { branch: 0 };
        assert!(matches!(sweep(&bad, 4, 1e-9), Err(Error::Config(_))));
        bad.slot = ParamSlot::FactorCoeff {
            factor: 3,
            coeff: 0,
        };
        assert!(matches!(sweep(&bad, 4, 1e-9), Err(Error::Config(_))));
    }

    #[test]
    fn degenerate_segment_gives_identical_records() {
        let family = henon_family(SampleShape::Segment {
            from: Complex64::new(-7.0, 0.0),
            to: Complex64::new(-7.0, 0.0),
            samples: 3,
        });
        let records = sweep(&family, 4, 1e-9).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.is_ok()));
        for r in &records[1..] {
            assert_eq!(r.param, records[0].param);
            assert_eq!(r.t_u.to_bits(), records[0].t_u.to_bits());
            assert_eq!(r.d_g.to_bits(), records[0].d_g.to_bits());
        }
        assert_eq!(continuity_statistic(&records), 0.0);
    }

    #[test]
    fn henon_segment_sweep_is_reproducible_and_continuous() {
        let family = henon_family(SampleShape::Segment {
            from: Complex64::new(-8.0, 0.0),
            to: Complex64::new(-6.0, 0.0),
            samples: 5,
        });
        let records = sweep(&family, 5, 1e-9).unwrap();
        assert!(records.iter().all(|r| r.is_ok()));
        for r in &records {
            assert!(r.t_s <= r.t_u);
            assert!(r.gap >= -1e-9);
            assert!(r.err_est.is_finite());
        }
        // Determinism: a rerun yields byte-identical CSV.
        let again = sweep(&family, 5, 1e-9).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_sweep_csv(&records, &mut csv_a).unwrap();
        write_sweep_csv(&again, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        assert!(continuity_statistic(&records) > 0.0);

        // Distinct samples produce maps with distinct fingerprints.
        let FamilyMember::Henon(m0) = family.instantiate(records[0].param).unwrap() else {
            unreachable!()
        };
        let FamilyMember::Henon(m1) = family.instantiate(records[1].param).unwrap() else {
            unreachable!()
        };
        assert_ne!(m0.fingerprint(), m1.fingerprint());
    }

    #[test]
    fn oracle_segment_matches_the_closed_form_pointwise() {
        let family = linear_family(SampleShape::Segment {
            from: Complex64::new(8f64.ln(), 0.0),
            to: Complex64::new(16f64.ln(), 0.0),
            samples: 6,
        });
        let records = sweep(&family, 4, 1e-9).unwrap();
        assert!(records.iter().all(|r| r.is_ok()));
        for r in &records {
            let model =
                LinearModel::two_branch(2f64.ln(), r.param.re, 0.25f64.ln()).unwrap();
            let exact = model.exact_report().unwrap();
            assert!((r.d_g - exact.d_g).abs() <= 1e-8);
            assert!((r.dim_j - exact.dim_j).abs() <= 1e-8);
            assert_eq!(r.err_est, 0.0);
        }
        // d_g moves smoothly: adjacent steps stay small.
        assert!(continuity_statistic(&records) < 0.05);
    }

    #[test]
    fn submean_margin_is_nonnegative_for_convex_oracle_families() {
        let family = linear_family(SampleShape::Circle {
            center: Complex64::new(8f64.ln(), 0.0),
            radius: 0.3,
            samples: 16,
        });
        let report = submean_check(&family, 4, 1e-9).unwrap();
        assert!(!report.violation);
        assert!(report.margin >= -1e-12);
        // Shrinking the radius shrinks the margin toward zero.
        let tight = linear_family(SampleShape::Circle {
            center: Complex64::new(8f64.ln(), 0.0),
            radius: 0.01,
            samples: 16,
        });
        let tight_report = submean_check(&tight, 4, 1e-9).unwrap();
        assert!(tight_report.margin.abs() < report.margin.abs() + 1e-12);
        assert!(tight_report.margin.abs() < 1e-5);

        // Shape and sample-count validation.
        let seg = linear_family(SampleShape::Segment {
            from: Complex64::new(1.0, 0.0),
            to: Complex64::new(2.0, 0.0),
            samples: 16,
        });
        assert!(submean_check(&seg, 4, 1e-9).is_err());
        let small = linear_family(SampleShape::Circle {
            center: Complex64::new(8f64.ln(), 0.0),
            radius: 0.3,
            samples: 4,
        });
        assert!(submean_check(&small, 4, 1e-9).is_err());
    }

    #[test]
    fn failed_samples_are_recorded_not_fatal() {
        // The a-slot sweep passes through a = 0, which cannot build a map;
        // with the guard asserted the failure must land in the status.
        let template =
            HenonMap::quadratic(Complex64::new(-7.0, 0.0), Complex64::new(0.2, 0.0)).unwrap();
        let family = FamilySpec {
            template: FamilyTemplate::Henon(template),
            slot: ParamSlot::FactorA { factor: 0 },
            shape: SampleShape::Segment {
                from: Complex64::new(-0.2, 0.0),
                to: Complex64::new(0.2, 0.0),
                samples: 3,
            },
            guard: HorseshoeGuard::AssertedHyperbolic,
        };
        let records = sweep(&family, 4, 1e-9).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records[0].is_ok());
        assert!(!records[1].is_ok()); // a = 0
        assert!(records[2].is_ok());
        assert!(records[1].t_u.is_nan());

        let mut csv = Vec::new();
        write_sweep_csv(&records, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "param_re,param_im,t_u,t_s,dim_J,d_g,gap,n_max,status"
        );
        assert!(text.contains(",nan,"));
        assert!(text.lines().filter(|l| l.ends_with(",ok")).count() == 2);
    }

    #[test]
    fn submean_renders_key_value_text() {
        let family = linear_family(SampleShape::Circle {
            center: Complex64::new(8f64.ln(), 0.0),
            radius: 0.1,
            samples: 8,
        });
        let report = submean_check(&family, 4, 1e-9).unwrap();
        let text = render_submean(&report);
        for key in [
            "center_re=",
            "center_im=",
            "radius=",
            "samples=8",
            "center_value=",
            "circle_mean=",
            "margin=",
            "err_budget=",
            "violation=false",
        ] {
            assert!(text.contains(key), "missing `{key}` in:\n{text}");
        }
    }
}
