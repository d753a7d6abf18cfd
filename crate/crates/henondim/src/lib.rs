//! Pressure curves, fractal dimensions, and maximal-dimension measures for
//! hyperbolic complex Hénon-family maps, computed from complete libraries of
//! periodic orbits.
//!
//! The pipeline: a polynomial automorphism of `C^2` given as a composition of
//! generalized Hénon factors `(z, w) ↦ (w, P(w) + a z)` is fed to
//! [`orbits::enumerate_orbits`], which finds every primitive cycle up to a
//! period bound by continuation from the anti-integrable limit. Periodic
//! sums over that library drive the thermodynamic layer ([`pressure`]): the
//! unstable/stable pressure curves, entropy, and the dimension curve `Δ(t)`.
//! Bowen-type root finding ([`dimension`]) then yields the stable/unstable
//! slice dimensions, the Julia-set dimension, the supremum of Hausdorff
//! dimensions of invariant measures together with its maximizer, and
//! diagnostics for when that supremum reaches full dimension. Exactly
//! solvable shift models ([`oracle`]) validate every stage, and [`sweep`]
//! tracks the dimension quantities across parameter families.

pub mod config;
pub mod dimension;
pub mod error;
pub mod map;
pub mod numeric;
pub mod oracle;
pub mod orbits;
pub mod pressure;
pub mod sweep;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
/// Complex scalar used throughout the public API, re-exported for callers.
pub use num_complex::Complex64;
