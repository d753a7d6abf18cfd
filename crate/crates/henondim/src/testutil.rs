//! Shared test fixtures: hand-built synthetic orbit libraries with exactly
//! known multipliers.

use std::collections::BTreeMap;

use crate::orbits::{Itinerary, OrbitLibrary, PeriodicOrbit};

/// Synthetic two-branch library: branch `s` contributes the per-step
/// log-multiplier `branch_logs[s]`, so a word's multiplier is the sum over
/// its symbols. Points are placeholders (synthetic flag set).
pub(crate) fn two_branch_library(branch_logs: [f64; 2], log_a: f64, n_max: u32) -> OrbitLibrary {
    let mut orbits: BTreeMap<u32, Vec<PeriodicOrbit>> = BTreeMap::new();
    for n in 1..=n_max {
        let mut level = Vec::new();
        for idx in 0..2u64.pow(n) {
            let symbols: Vec<u8> = (0..n).rev().map(|k| ((idx >> k) & 1) as u8).collect();
            let itin = Itinerary::new(symbols);
            if !itin.is_canonical() || !itin.is_primitive() {
                continue;
            }
            let log_mult_u: f64 = itin
                .symbols()
                .iter()
                .map(|&s| branch_logs[s as usize])
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
    OrbitLibrary::from_parts("test-two-branch".into(), 2, log_a, n_max, true, orbits)
}
