//! Periodic-orbit machinery: symbolic itineraries, anti-integrable seeding,
//! Newton continuation, multiplier extraction, and the on-disk orbit cache.
//!
//! The central object is the [`OrbitLibrary`]: for each period `n <= n_max`
//! it holds every *primitive* period-`n` cycle of the map, tagged with its
//! canonical itinerary and unstable log-multiplier. Completeness is checked
//! against the algebraic fixed-point count `#Fix(g^n) = d^n` via the divisor
//! identity `Σ_{m|n} m · #prim(m) = d^n`.

mod cache;
mod newton;
mod seed;

pub use cache::{cache_load, cache_store, LibraryRebuild};
pub use newton::{cycle_multipliers, Multipliers};
pub use seed::seed_itineraries;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::{Complex2, HenonMap};

/// Word budget shared by enumeration and synthetic library generation.
pub const WORD_BUDGET: u64 = 1 << 22;

// ---------------------------------------------------------------------------
// Itineraries
// ---------------------------------------------------------------------------

/// A periodic symbol word over `{0, …, d−1}`.
///
/// The canonical form of a word is its lexicographically minimal rotation;
/// orbits are stored and deduplicated under that normal form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itinerary {
    symbols: Vec<u8>,
}

impl Itinerary {
    pub fn new(symbols: Vec<u8>) -> Self {
        Self { symbols }
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn period(&self) -> u32 {
        self.symbols.len() as u32
    }

    /// Rotation offset `r` minimizing the rotated word
    /// `k ↦ symbols[(k + r) mod n]`, compared lexicographically.
    pub fn canonical_offset(&self) -> usize {
        let n = self.symbols.len();
        let mut best = 0usize;
        for r in 1..n {
            for k in 0..n {
                let a = self.symbols[(k + r) % n];
                let b = self.symbols[(k + best) % n];
                match a.cmp(&b) {
                    std::cmp::Ordering::Less => {
                        best = r;
                        break;
                    }
                    std::cmp::Ordering::Greater => break,
                    std::cmp::Ordering::Equal => continue,
                }
            }
        }
        best
    }

    /// The canonical rotation and its offset.
    pub fn canonical(&self) -> (Itinerary, usize) {
        let r = self.canonical_offset();
        let n = self.symbols.len();
        let rotated = (0..n).map(|k| self.symbols[(k + r) % n]).collect();
        (Itinerary::new(rotated), r)
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical_offset() == 0
    }

    /// Smallest `p` dividing the period with `s[k] = s[(k+p) mod n]` for all k.
    pub fn primitive_period(&self) -> u32 {
        let n = self.symbols.len();
        for p in 1..=n {
            if !n.is_multiple_of(p) {
                continue;
            }
            if (0..n).all(|k| self.symbols[k] == self.symbols[(k + p) % n]) {
                return p as u32;
            }
        }
        n as u32
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive_period() == self.period()
    }

    /// Parse the textual form produced by `Display`.
    pub fn parse(text: &str, degree: u64) -> Result<Itinerary> {
        let symbols: Vec<u8> = if text.contains('.') {
            text.split('.')
                .map(|tok| {
                    tok.parse::<u8>()
                        .map_err(|_| Error::Config(format!("bad itinerary token {tok:?}")))
                })
                .collect::<Result<_>>()?
        } else {
            text.chars()
                .map(|ch| {
                    ch.to_digit(10)
                        .map(|v| v as u8)
                        .ok_or_else(|| Error::Config(format!("bad itinerary digit {ch:?}")))
                })
                .collect::<Result<_>>()?
        };
        if symbols.is_empty() || symbols.iter().any(|&s| (s as u64) >= degree) {
            return Err(Error::Config(format!(
                "itinerary {text:?} invalid for degree {degree}"
            )));
        }
        Ok(Itinerary::new(symbols))
    }
}

impl std::fmt::Display for Itinerary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.symbols.iter().all(|&s| s < 10) {
            for s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let toks: Vec<String> = self.symbols.iter().map(u8::to_string).collect();
            write!(f, "{}", toks.join("."))
        }
    }
}

// ---------------------------------------------------------------------------
// Orbits and the library
// ---------------------------------------------------------------------------

/// A refined primitive periodic orbit of the composed map.
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    /// Primitive period `n`.
    pub period: u32,
    /// Canonical itinerary of length `n`.
    pub itinerary: Itinerary,
    /// The `n` cycle points, aligned with the canonical itinerary.
    pub points: Vec<Complex2>,
    /// `log |λ^u|` over one full period (n steps of the composed map).
    pub log_mult_u: f64,
    /// Argument of the unstable multiplier.
    pub mult_u_arg: f64,
    /// Sup-norm residual of the cyclic fixed-point system at acceptance.
    pub residual: f64,
}

impl PeriodicOrbit {
    /// Per-step unstable expansion rate `log|λ^u| / n`.
    pub fn rate(&self) -> f64 {
        self.log_mult_u / f64::from(self.period)
    }
}

/// A backward-iteration seed: converged composition-level chain at the
/// anti-integrable limit, tagged with its word.
#[derive(Clone, Debug)]
pub struct SeedOrbit {
    pub itinerary: Itinerary,
    /// `w`-coordinates of the `n·m` factor-level steps.
    pub chain: Vec<Complex64>,
}

/// How much cross-validation `enumerate_orbits` performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    /// Refine every one of the `d^n` words per period and check that
    /// rotations and repetitions land on the expected primitive cycles.
    AllWords,
    /// Refine only canonical primitive words (completeness then follows from
    /// the divisor identity alone).
    CanonicalOnly,
}

/// Knobs for seeding, continuation, and verification.
#[derive(Clone, Copy, Debug)]
pub struct EnumerateOpts {
    /// Newton acceptance threshold on the cyclic residual.
    pub newton_tol: f64,
    /// Backward-iteration convergence threshold.
    pub seed_tol: f64,
    /// Geometric continuation steps from the anti-integrable limit.
    pub continuation_steps: u32,
    /// Newton iteration cap per continuation step.
    pub max_newton_iter: u32,
    /// Backward sweep cap during seeding.
    pub max_seed_sweeps: u32,
    pub verify: VerifyMode,
}

impl Default for EnumerateOpts {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            seed_tol: 1e-10,
            continuation_steps: 16,
            max_newton_iter: 50,
            max_seed_sweeps: 2000,
            verify: VerifyMode::AllWords,
        }
    }
}

/// All primitive periodic orbits of a map up to a period bound.
#[derive(Clone, Debug)]
pub struct OrbitLibrary {
    fingerprint: String,
    degree: u64,
    log_jac_mod: f64,
    n_max: u32,
    synthetic: bool,
    orbits: BTreeMap<u32, Vec<PeriodicOrbit>>,
}

impl OrbitLibrary {
    pub(crate) fn from_parts(
        fingerprint: String,
        degree: u64,
        log_jac_mod: f64,
        n_max: u32,
        synthetic: bool,
        orbits: BTreeMap<u32, Vec<PeriodicOrbit>>,
    ) -> Self {
        Self {
            fingerprint,
            degree,
            log_jac_mod,
            n_max,
            synthetic,
            orbits,
        }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    /// `log |a|` of the generating map (0 exactly when volume preserving).
    pub fn log_jac_mod(&self) -> f64 {
        self.log_jac_mod
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Synthetic libraries come from exactly solvable models: their points are
    /// placeholders and geometric (closure) checks do not apply.
    pub fn is_synthetic(&self) -> bool {
        self.synthetic
    }

    /// Primitive orbits of one period, sorted by canonical itinerary.
    pub fn orbits(&self, period: u32) -> &[PeriodicOrbit] {
        self.orbits.get(&period).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn periods(&self) -> impl Iterator<Item = u32> + '_ {
        self.orbits.keys().copied()
    }

    pub fn total_orbits(&self) -> usize {
        self.orbits.values().map(Vec::len).sum()
    }

    /// Expected `#Fix(g^n) = d^n`.
    pub fn expected_count(&self, n: u32) -> Option<u64> {
        self.degree.checked_pow(n)
    }

    /// `Σ_{m|n} m · #prim(m)` from the stored orbits.
    pub fn fixed_point_count(&self, n: u32) -> u64 {
        (1..=n)
            .filter(|&m| n.is_multiple_of(m))
            .map(|m| u64::from(m) * self.orbits(m).len() as u64)
            .sum()
    }

    /// Period `n` is complete when the divisor identity hits `d^n` exactly.
    pub fn is_complete(&self, n: u32) -> bool {
        n >= 1
            && n <= self.n_max
            && Some(self.fixed_point_count(n)) == self.expected_count(n)
    }

    /// All periods `1..=n_max` complete?
    pub fn is_fully_complete(&self) -> bool {
        (1..=self.n_max).all(|n| self.is_complete(n))
    }
}

// ---------------------------------------------------------------------------
// Refinement and enumeration
// ---------------------------------------------------------------------------

/// Refine one seed into a periodic orbit of the actual map by geometric
/// continuation in the factor constants. The returned orbit is canonicalized
/// (itinerary rotated to its minimal form, points rotated along).
pub fn refine_orbit(map: &HenonMap, seed: &SeedOrbit, opts: &EnumerateOpts) -> Result<PeriodicOrbit> {
    newton::refine_to_orbit(map, seed, opts, 1.0)
}

/// Backward-iteration seeds for every word of length `n`, then Newton
/// continuation for each; assembles the full library with verification.
pub fn enumerate_orbits(map: &HenonMap, n_max: u32, opts: &EnumerateOpts) -> Result<OrbitLibrary> {
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let d = map.degree();
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
        let words = d.checked_pow(n).expect("budget-checked above");
        // Refine words in index order; rayon preserves input order on collect,
        // so the outcome is independent of the worker count.
        let refined: Vec<Result<Option<(u64, PeriodicOrbit)>>> = (0..words)
            .into_par_iter()
            .map(|idx| {
                let word = word_symbols(idx, n, d);
                let itin = Itinerary::new(word);
                if opts.verify == VerifyMode::CanonicalOnly
                    && !(itin.is_canonical() && itin.is_primitive())
                {
                    return Ok(None);
                }
                let seed = seed::seed_word(map, &itin, opts)?;
                let orbit = newton::refine_to_orbit(map, &seed, opts, 1.0)?;
                Ok(Some((idx, orbit)))
            })
            .collect();

        let mut keep: Vec<PeriodicOrbit> = Vec::new();
        let mut others: Vec<(Itinerary, PeriodicOrbit)> = Vec::new();
        for item in refined {
            match item? {
                None => {}
                Some((idx, orbit)) => {
                    let original = Itinerary::new(word_symbols(idx, n, d));
                    let canonical_self = original.is_canonical() && original.is_primitive();
                    if canonical_self {
                        keep.push(orbit);
                    } else {
                        others.push((original, orbit));
                    }
                }
            }
        }
        keep.sort_by(|x, y| x.itinerary.cmp(&y.itinerary));
        check_no_duplicates(&keep, n)?;
        orbits.insert(n, keep);

        if opts.verify == VerifyMode::AllWords {
            verify_non_canonical(&orbits, &others, n)?;
        }
    }

    let lib = OrbitLibrary::from_parts(
        map.fingerprint(),
        d,
        map.log_jac_mod(),
        n_max,
        false,
        orbits,
    );
    for n in 1..=n_max {
        if !lib.is_complete(n) {
            return Err(Error::IncompleteLibrary { period: n });
        }
    }
    Ok(lib)
}

/// Symbols of word `idx` in base `d`, most significant digit first.
pub(crate) fn word_symbols(idx: u64, n: u32, d: u64) -> Vec<u8> {
    let mut symbols = vec![0u8; n as usize];
    let mut rest = idx;
    for slot in symbols.iter_mut().rev() {
        *slot = (rest % d) as u8;
        rest /= d;
    }
    symbols
}

/// Distinct canonical words must give geometrically distinct cycles; candidate
/// collisions are pre-filtered by multiplier agreement.
fn check_no_duplicates(orbits: &[PeriodicOrbit], period: u32) -> Result<()> {
    let mut by_mult: Vec<usize> = (0..orbits.len()).collect();
    by_mult.sort_by(|&i, &j| orbits[i].log_mult_u.partial_cmp(&orbits[j].log_mult_u).unwrap());
    for pair in by_mult.windows(2) {
        let (a, b) = (&orbits[pair[0]], &orbits[pair[1]]);
        if (a.log_mult_u - b.log_mult_u).abs() < 1e-9 && cycles_match(&a.points, &b.points, 1e-8) {
            return Err(Error::DuplicateOrbit {
                word_a: a.itinerary.to_string(),
                word_b: b.itinerary.to_string(),
                period,
            });
        }
    }
    Ok(())
}

/// Every non-canonical or non-primitive word must have landed on (a rotation
/// or repetition of) the primitive cycle its canonical form names.
fn verify_non_canonical(
    store: &BTreeMap<u32, Vec<PeriodicOrbit>>,
    others: &[(Itinerary, PeriodicOrbit)],
    period: u32,
) -> Result<()> {
    for (original, orbit) in others {
        let p = original.primitive_period();
        let root = Itinerary::new(original.symbols()[..p as usize].to_vec());
        let (canon, _) = root.canonical();
        let rep = store
            .get(&p)
            .and_then(|v| v.iter().find(|o| o.itinerary == canon))
            .ok_or(Error::IncompleteLibrary { period: p })?;
        let consistent = orbit.points.iter().all(|q| {
            rep.points.iter().any(|r| q.dist(r) <= 1e-8)
        });
        if !consistent {
            return Err(Error::DuplicateOrbit {
                word_a: original.to_string(),
                word_b: canon.to_string(),
                period,
            });
        }
    }
    Ok(())
}

/// True when the two cycles visit the same points up to a cyclic shift.
fn cycles_match(a: &[Complex2], b: &[Complex2], tol: f64) -> bool {
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| p.dist(q) <= tol))
}

#[cfg(test)]
mod tests;
