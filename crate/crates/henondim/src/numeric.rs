//! Small numeric kernels shared across the crate: compensated summation,
//! polynomial evaluation and root finding, a dense complex linear solver for
//! the cyclic Newton systems, and deterministic 1-D root/extremum searches.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Kahan compensated accumulator. Summation order is fixed by the caller, so
/// results are bit-stable across runs and thread counts.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Format with 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Evaluate a polynomial with ascending coefficients by Horner's rule.
pub fn poly_eval(coeffs: &[Complex64], w: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * w + c;
    }
    acc
}

/// Evaluate a polynomial and its derivative in one Horner pass.
pub fn poly_eval_with_deriv(coeffs: &[Complex64], w: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * w + p;
        p = p * w + c;
    }
    (p, dp)
}

/// All roots of a complex polynomial (ascending coefficients, leading
/// coefficient nonzero), sorted by (re, im). Durand–Kerner with a Newton
/// polish; deterministic initialization. Degrees 1 and 2 use closed forms.
pub fn poly_roots(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let deg = coeffs.len().checked_sub(1)?;
    let lead = *coeffs.last()?;
    if deg == 0 || lead.norm() == 0.0 {
        return None;
    }
    let mut roots = match deg {
        1 => vec![-coeffs[0] / coeffs[1]],
        2 => {
            let (a, b, c) = (coeffs[2], coeffs[1], coeffs[0]);
            let disc = (b * b - 4.0 * a * c).sqrt();
            // Pick the sign that avoids cancellation in -b ∓ disc.
            let q = if (b.conj() * disc).re >= 0.0 {
                -0.5 * (b + disc)
            } else {
                -0.5 * (b - disc)
            };
            if q.norm() == 0.0 {
                vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                vec![q / a, c / q]
            }
        }
        _ => durand_kerner(coeffs, deg)?,
    };
    // Newton polish and a deterministic total order.
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = poly_eval_with_deriv(coeffs, *r);
            if dp.norm() > 0.0 {
                *r -= p / dp;
            }
        }
        if !r.re.is_finite() || !r.im.is_finite() {
            return None;
        }
    }
    roots.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Some(roots)
}

fn durand_kerner(coeffs: &[Complex64], deg: usize) -> Option<Vec<Complex64>> {
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs.iter().map(|&c| c / lead).collect();
    let radius = 1.0
        + monic[..deg]
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg)
        .map(|k| radius * seed.powu(k as u32 + 1))
        .collect();
    for _ in 0..500 {
        let mut shift = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                // Perturb a collision deterministically and keep going.
                roots[i] += Complex64::new(1e-8, 1e-8);
                continue;
            }
            let delta = poly_eval(&monic, roots[i]) / denom;
            roots[i] -= delta;
            shift = shift.max(delta.norm());
        }
        if shift < 1e-13 {
            return Some(roots);
        }
    }
    Some(roots) // polish pass will tighten; callers validate residuals
}

/// Solve `A x = b` in place for a dense complex system by Gaussian elimination
/// with partial pivoting. `a` is row-major n×n; `b` has length n and receives
/// the solution. Returns false on a (numerically) singular matrix.
pub fn solve_dense(a: &mut [Complex64], b: &mut [Complex64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].norm();
        for row in col + 1..n {
            let mag = a[row * n + col].norm();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return false;
        }
        if pivot != col {
            for k in col..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor.norm() == 0.0 {
                continue;
            }
            a[row * n + col] = Complex64::new(0.0, 0.0);
            for k in col + 1..n {
                let sub = factor * a[col * n + k];
                a[row * n + k] -= sub;
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    true
}

/// Bracketed root search with secant acceleration and bisection fallback.
///
/// Requires `f(lo)` and `f(hi)` of opposite sign. Stops when `|f| <= f_tol`
/// or the bracket shrinks below 1e-15; hard cap of 200 iterations. The caller
/// supplies `err` to label a missing bracket.
pub fn bracket_root<F>(mut f: F, lo: f64, hi: f64, f_tol: f64, err: Error) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(err);
    }
    let mut x = a;
    for _ in 0..200 {
        // Secant candidate from the current bracket endpoints.
        let mid = 0.5 * (a + b);
        let secant = b - fb * (b - a) / (fb - fa);
        x = if secant.is_finite() && secant > a.min(b) && secant < a.max(b) {
            secant
        } else {
            mid
        };
        let fx = f(x)?;
        if fx.abs() <= f_tol || (b - a).abs() < 1e-15 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(x)
}

/// Golden-section maximum search on [lo, hi] for a unimodal function.
/// Deterministic; returns the abscissa after the interval shrinks below tol.
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() < tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// log(sum of c_i * exp(x_i)) with max shifting; terms visited in the order
/// given (callers pre-sort for determinism). Weights c_i must be positive.
pub fn log_sum_exp(terms: &[(f64, f64)]) -> f64 {
    let m = terms
        .iter()
        .map(|&(_, x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let mut acc = Kahan::default();
    for &(c, x) in terms {
        acc.add(c * (x - m).exp());
    }
    m + acc.value().ln()
}
