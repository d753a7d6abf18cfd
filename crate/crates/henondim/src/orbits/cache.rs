//! On-disk orbit cache.
//!
//! One text file per `(map fingerprint, n_max)` pair:
//!
//! ```text
//! # fingerprint: <sha-256 hex>
//! # n_max: 12
//! period,itinerary,z0_re,z0_im,w0_re,w0_im,log_mult_u,mult_u_arg,residual
//! 1,0,…
//! # rows: 697
//! ```
//!
//! Floats are written with 17 significant digits, so every stored field
//! round-trips bit-exactly and is adopted verbatim on reload. Only the anchor
//! point of each cycle is stored; the remaining points are rebuilt by cyclic
//! backward branch iteration from the itinerary (forward iteration would
//! amplify the anchor's rounding by `e^{n log λ}` and lose the cycle), then
//! Newton-polished and cross-checked against the stored anchor and
//! multiplier. Any disagreement marks the file corrupt rather than silently
//! recomputing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::map::{Complex2, HenonMap};
use crate::numeric::fmt_g17;
use crate::orbits::{newton, seed, Itinerary, OrbitLibrary, PeriodicOrbit};

const HEADER: &str = "period,itinerary,z0_re,z0_im,w0_re,w0_im,log_mult_u,mult_u_arg,residual";
/// Agreement required between reconstructed geometry and stored fields.
const RECON_TOL: f64 = 1e-8;
/// Backward-iteration sweep cap during reconstruction.
const RECON_SWEEPS: u32 = 5000;

/// What a cache file is validated against and how its geometry is rebuilt.
pub enum LibraryRebuild<'a> {
    /// Rebuild cycle points by backward iteration under this map.
    Henon(&'a HenonMap),
    /// Exactly solvable model: rows carry no geometry; stored scalars rule.
    Synthetic {
        fingerprint: String,
        degree: u64,
        log_jac_mod: f64,
    },
}

impl LibraryRebuild<'_> {
    fn fingerprint(&self) -> String {
        match self {
            LibraryRebuild::Henon(map) => map.fingerprint(),
            LibraryRebuild::Synthetic { fingerprint, .. } => fingerprint.clone(),
        }
    }

    fn degree(&self) -> u64 {
        match self {
            LibraryRebuild::Henon(map) => map.degree(),
            LibraryRebuild::Synthetic { degree, .. } => *degree,
        }
    }

    fn log_jac_mod(&self) -> f64 {
        match self {
            LibraryRebuild::Henon(map) => map.log_jac_mod(),
            LibraryRebuild::Synthetic { log_jac_mod, .. } => *log_jac_mod,
        }
    }

    fn is_synthetic(&self) -> bool {
        matches!(self, LibraryRebuild::Synthetic { .. })
    }
}

/// Serialize a library. The write is atomic (temp file + rename) so a crashed
/// run cannot leave a torn cache behind.
pub fn cache_store(path: &Path, library: &OrbitLibrary) -> Result<()> {
    let mut buf = String::new();
    buf.push_str(&format!("# fingerprint: {}\n", library.fingerprint()));
    buf.push_str(&format!("# n_max: {}\n", library.n_max()));
    buf.push_str(HEADER);
    buf.push('\n');
    let mut rows = 0usize;
    for period in library.periods() {
        for orbit in library.orbits(period) {
            let anchor = orbit
                .points
                .first()
                .copied()
                .unwrap_or_else(|| Complex2::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
            buf.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                orbit.period,
                orbit.itinerary,
                fmt_g17(anchor.z.re),
                fmt_g17(anchor.z.im),
                fmt_g17(anchor.w.re),
                fmt_g17(anchor.w.im),
                fmt_g17(orbit.log_mult_u),
                fmt_g17(orbit.mult_u_arg),
                fmt_g17(orbit.residual),
            ));
            rows += 1;
        }
    }
    buf.push_str(&format!("# rows: {rows}\n"));

    let display = path.display().to_string();
    let tmp = path.with_extension("orbits.tmp");
    fs::write(&tmp, buf.as_bytes()).map_err(|e| Error::io(&display, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(&display, e))
}

struct Row {
    line_no: usize,
    period: u32,
    itinerary: Itinerary,
    anchor: Complex2,
    log_mult_u: f64,
    mult_u_arg: f64,
    residual: f64,
}

fn corrupt(path: &str, row: impl ToString, detail: impl Into<String>) -> Error {
    Error::CorruptCache {
        path: path.to_string(),
        row: row.to_string(),
        detail: detail.into(),
    }
}

/// Load and verify a cache file against the configuration in `rebuild`.
pub fn cache_load(path: &Path, rebuild: LibraryRebuild<'_>) -> Result<OrbitLibrary> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;
    let mut lines = text.lines().enumerate();

    let found_fp = lines
        .next()
        .and_then(|(_, l)| l.strip_prefix("# fingerprint: "))
        .ok_or_else(|| corrupt(&display, 1, "missing fingerprint line"))?
        .to_string();
    let expected_fp = rebuild.fingerprint();
    if found_fp != expected_fp {
        return Err(Error::FingerprintMismatch {
            found: found_fp,
            expected: expected_fp,
        });
    }
    let n_max: u32 = lines
        .next()
        .and_then(|(_, l)| l.strip_prefix("# n_max: "))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| corrupt(&display, 2, "missing or malformed n_max line"))?;
    match lines.next() {
        Some((_, l)) if l == HEADER => {}
        _ => return Err(corrupt(&display, 3, "header line does not match schema")),
    }

    let degree = rebuild.degree();
    let mut rows: Vec<Row> = Vec::new();
    let mut declared: Option<usize> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if let Some(counted) = line.strip_prefix("# rows: ") {
            let n: usize = counted
                .parse()
                .map_err(|_| corrupt(&display, line_no, "malformed row-count trailer"))?;
            declared = Some(n);
            continue;
        }
        if declared.is_some() {
            if !line.trim().is_empty() {
                return Err(corrupt(&display, line_no, "content after row-count trailer"));
            }
            continue;
        }
        rows.push(parse_row(&display, line_no, line, degree)?);
    }
    let declared =
        declared.ok_or_else(|| corrupt(&display, "end", "missing row-count trailer (truncated file?)"))?;
    if rows.len() != declared {
        return Err(corrupt(
            &display,
            "end",
            format!("row-count trailer says {declared}, found {}", rows.len()),
        ));
    }

    let mut orbits: BTreeMap<u32, Vec<PeriodicOrbit>> = BTreeMap::new();
    for row in rows {
        if row.period > n_max {
            return Err(corrupt(
                &display,
                row.line_no,
                format!("period {} exceeds declared n_max {n_max}", row.period),
            ));
        }
        let orbit = match &rebuild {
            LibraryRebuild::Synthetic { .. } => PeriodicOrbit {
                period: row.period,
                itinerary: row.itinerary,
                points: Vec::new(),
                log_mult_u: row.log_mult_u,
                mult_u_arg: row.mult_u_arg,
                residual: row.residual,
            },
            LibraryRebuild::Henon(map) => reconstruct(&display, map, row)?,
        };
        orbits.entry(orbit.period).or_default().push(orbit);
    }
    for list in orbits.values_mut() {
        list.sort_by(|x, y| x.itinerary.cmp(&y.itinerary));
    }

    let lib = OrbitLibrary::from_parts(
        found_fp,
        degree,
        rebuild.log_jac_mod(),
        n_max,
        rebuild.is_synthetic(),
        orbits,
    );
    for n in 1..=n_max {
        if !lib.is_complete(n) {
            return Err(corrupt(
                &display,
                "end",
                format!("orbit counts fail the fixed-point identity at period {n}"),
            ));
        }
    }
    Ok(lib)
}

fn parse_row(path: &str, line_no: usize, line: &str, degree: u64) -> Result<Row> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 9 {
        return Err(corrupt(
            path,
            line_no,
            format!("expected 9 fields, found {}", fields.len()),
        ));
    }
    let period: u32 = fields[0]
        .parse()
        .map_err(|_| corrupt(path, line_no, "malformed period"))?;
    let itinerary = Itinerary::parse(fields[1], degree)
        .map_err(|e| corrupt(path, line_no, format!("bad itinerary: {e}")))?;
    if itinerary.period() != period {
        return Err(corrupt(path, line_no, "itinerary length disagrees with period"));
    }
    let mut nums = [0.0f64; 7];
    for (slot, field) in nums.iter_mut().zip(&fields[2..]) {
        *slot = field
            .parse()
            .map_err(|_| corrupt(path, line_no, format!("malformed float {field:?}")))?;
    }
    Ok(Row {
        line_no,
        period,
        itinerary,
        anchor: Complex2::new(
            Complex64::new(nums[0], nums[1]),
            Complex64::new(nums[2], nums[3]),
        ),
        log_mult_u: nums[4],
        mult_u_arg: nums[5],
        residual: nums[6],
    })
}

/// Rebuild one cycle's points from its itinerary and verify them against the
/// stored anchor and multiplier.
fn reconstruct(path: &str, map: &HenonMap, row: Row) -> Result<PeriodicOrbit> {
    let m = map.factors().len();
    let chain_result = seed::backward_chain(
        map,
        &row.itinerary,
        1.0,
        row.anchor.w,
        1e-10,
        RECON_SWEEPS,
    );
    let mut chain = chain_result
        .map_err(|e| corrupt(path, row.line_no, format!("reconstruction diverged: {e}")))?;
    newton::polish_chain(map, &mut chain, 1e-12, 50)
        .map_err(|res| corrupt(path, row.line_no, format!("polish stalled at residual {res:e}")))?;

    let n_sub = chain.len();
    let points: Vec<Complex2> = (0..row.period as usize)
        .map(|k| Complex2::new(chain[(k * m + n_sub - 1) % n_sub], chain[k * m]))
        .collect();
    let anchor_err = points[0].dist(&row.anchor);
    if anchor_err > RECON_TOL {
        return Err(corrupt(
            path,
            row.line_no,
            format!("reconstructed anchor off by {anchor_err:e}"),
        ));
    }
    let mult = newton::chain_multipliers(map, &chain, 1.0);
    let mult_err = (mult.log_u - row.log_mult_u).abs();
    if mult_err > RECON_TOL * row.log_mult_u.abs().max(1.0) {
        return Err(corrupt(
            path,
            row.line_no,
            format!("reconstructed multiplier off by {mult_err:e}"),
        ));
    }
    // The stored fields stay authoritative: adopt the anchor verbatim so a
    // loaded library re-serializes byte for byte.
    let mut points = points;
    points[0] = row.anchor;
    Ok(PeriodicOrbit {
        period: row.period,
        itinerary: row.itinerary,
        points,
        log_mult_u: row.log_mult_u,
        mult_u_arg: row.mult_u_arg,
        residual: row.residual,
    })
}
