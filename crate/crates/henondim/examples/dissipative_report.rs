//! Minimal library walkthrough: enumerate the periodic orbits of a
//! dissipative quadratic horseshoe and print its dimension quantities.
//!
//! Run with `cargo run --example dissipative_report`.

use henondim::dimension::dimension_report;
use henondim::map::HenonMap;
use henondim::orbits::{enumerate_orbits, EnumerateOpts};
use henondim::Complex64;

fn main() -> Result<(), henondim::Error> {
    let map = HenonMap::quadratic(Complex64::new(-6.0, 0.0), Complex64::new(0.2, 0.0))?;
    let library = enumerate_orbits(&map, 12, &EnumerateOpts::default())?;
    let report = dimension_report(&library, 12, 1e-9)?;
    println!("dim_H J = {}, d(g) = {}", report.dim_j, report.d_g);
    Ok(())
}
