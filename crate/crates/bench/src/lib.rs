//! Shared fixtures for the criterion benches.

use interplab::{build_grid, fields, ScalarField, Space, WeightProfile};

/// `m x m` unit-square lattice with its tent function.
pub fn square_with_tent(m: usize) -> (Space, ScalarField) {
    let s = build_grid(&[m, m], 1.0 / m as f64, WeightProfile::Uniform).expect("valid lattice");
    let f = fields::tent(&s);
    (s, f)
}

/// Uniform `n`-point line on `[0, 1)` with a seeded smooth field.
pub fn line_with_smooth(n: usize, seed: u64) -> (Space, ScalarField) {
    let s = build_grid(&[n], 1.0 / n as f64, WeightProfile::Uniform).expect("valid lattice");
    let f = fields::random_smooth(&s, seed);
    (s, f)
}
