//! Anti-integrable seeding and backward branch iteration.
//!
//! At `a = 0` every factor degenerates to `(z, w) ↦ (w, P_i(w))`, so a cycle
//! is a cyclic chain `w_{j+1} = P_{i(j)}(w_j)` through the factor-level steps.
//! Prescribing the inverse branch at every step (the word) and iterating the
//! branch map backward is a contraction in the horseshoe regime; its fixed
//! chain seeds the Newton continuation. The same sweep with `a`-terms moved
//! to the right-hand side reconstructs a cycle from its itinerary at full
//! parameters (used by the cache loader).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::map::{HenonFactor, HenonMap};
use crate::orbits::{EnumerateOpts, Itinerary, SeedOrbit};

/// Factor applied at composition-level step `j` (factors cycle with index
/// `j mod m`).
pub(crate) fn factor_at(map: &HenonMap, j: usize) -> &HenonFactor {
    &map.factors()[j % map.factors().len()]
}

/// Expand full-map symbols into factor-level branch choices: the symbol at a
/// full step is a mixed-radix numeral whose least significant digit indexes
/// the branch of factor 1.
pub(crate) fn sub_symbols(map: &HenonMap, itinerary: &Itinerary) -> Vec<u8> {
    let m = map.factors().len();
    let mut subs = Vec::with_capacity(itinerary.symbols().len() * m);
    for &sigma in itinerary.symbols() {
        let mut rest = sigma as u64;
        for factor in map.factors() {
            let d_i = factor.degree() as u64;
            subs.push((rest % d_i) as u8);
            rest /= d_i;
        }
    }
    subs
}

/// One preimage of `v` under the factor polynomial, selected by branch index
/// (branches ordered by (re, im) of the root). Degree 2 uses the closed form.
pub(crate) fn preimage_branch(factor: &HenonFactor, v: Complex64, branch: u8) -> Option<Complex64> {
    if !v.re.is_finite() || !v.im.is_finite() {
        return None;
    }
    if factor.degree() == 2 {
        let c = factor.coeffs();
        let (c2, c1, c0) = (c[2], c[1], c[0] - v);
        let disc = (c1 * c1 - 4.0 * c2 * c0).sqrt();
        let q = if (c1.conj() * disc).re >= 0.0 {
            -0.5 * (c1 + disc)
        } else {
            -0.5 * (c1 - disc)
        };
        let (r0, r1) = if q.norm() == 0.0 {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (q / c2, c0 / q)
        };
        let (lo, hi) = if (r0.re, r0.im) <= (r1.re, r1.im) {
            (r0, r1)
        } else {
            (r1, r0)
        };
        return match branch {
            0 => Some(lo),
            1 => Some(hi),
            _ => None,
        };
    }
    let roots = factor.preimages(v)?;
    roots.get(branch as usize).copied()
}

/// Cyclic backward branch iteration at `a`-scale `scale`, starting from
/// `init`. Solves `w_{j+1} = P_{i(j)}(w_j) + scale·a_{i(j)}·w_{j−1}` by
/// updating `w_j ← branch_{s_j}(w_{j+1} − scale·a_{i(j)}·w_{j−1})` in
/// descending sweeps until the sup-norm update drops below `tol`.
pub(crate) fn backward_chain(
    map: &HenonMap,
    itinerary: &Itinerary,
    scale: f64,
    init: Complex64,
    tol: f64,
    max_sweeps: u32,
) -> Result<Vec<Complex64>> {
    let subs = sub_symbols(map, itinerary);
    let n_sub = subs.len();
    let mut chain = vec![init; n_sub];
    for sweep in 0..max_sweeps {
        let mut shift = 0.0f64;
        for j in (0..n_sub).rev() {
            let factor = factor_at(map, j);
            let succ = chain[(j + 1) % n_sub];
            let pred = chain[(j + n_sub - 1) % n_sub];
            let target = succ - scale * factor.a() * pred;
            let next = preimage_branch(factor, target, subs[j]).ok_or_else(|| {
                Error::SeedingDiverged {
                    word: itinerary.to_string(),
                    period: itinerary.period(),
                    sweeps: sweep,
                }
            })?;
            shift = shift.max((next - chain[j]).norm());
            chain[j] = next;
        }
        if shift < tol {
            return Ok(chain);
        }
    }
    Err(Error::SeedingDiverged {
        word: itinerary.to_string(),
        period: itinerary.period(),
        sweeps: max_sweeps,
    })
}

/// Anti-integrable seed for one word: converged backward chain at `a = 0`.
pub(crate) fn seed_word(map: &HenonMap, itinerary: &Itinerary, opts: &EnumerateOpts) -> Result<SeedOrbit> {
    let chain = backward_chain(
        map,
        itinerary,
        0.0,
        Complex64::new(0.0, 0.0),
        opts.seed_tol,
        opts.max_seed_sweeps,
    )?;
    Ok(SeedOrbit {
        itinerary: itinerary.clone(),
        chain,
    })
}

/// Seeds for all `d^n` words of length `n`, in lexicographic word order.
pub fn seed_itineraries(map: &HenonMap, n: u32) -> Result<Vec<SeedOrbit>> {
    let opts = EnumerateOpts::default();
    let d = map.degree();
    let words = d
        .checked_pow(n)
        .filter(|&c| c <= super::WORD_BUDGET)
        .ok_or(Error::BudgetExceeded {
            words: u64::MAX,
            budget: super::WORD_BUDGET,
        })?;
    (0..words)
        .map(|idx| {
            let itin = Itinerary::new(super::word_symbols(idx, n, d));
            seed_word(map, &itin, &opts)
        })
        .collect()
}
