#![allow(dead_code)]

use std::sync::Arc;

use quasidyn::drmatrix::DynamicalTriple;
use quasidyn::liealg::QuadraticLieAlgebra;
use quasidyn::sample;

pub const GRID: [f64; 5] = [-1.2, -0.5, 0.3, 0.7, 1.2];

pub fn su2() -> Arc<QuadraticLieAlgebra<f64>> {
    Arc::new(QuadraticLieAlgebra::su2())
}

pub fn iso21() -> Arc<QuadraticLieAlgebra<f64>> {
    Arc::new(QuadraticLieAlgebra::iso21())
}

/// Ten points of `(-1.1, 1.1)` avoiding the origin.
pub fn alpha_grid() -> Vec<f64> {
    (0..10).map(|i| -1.1 + 0.22 * i as f64 + 0.07).collect()
}

/// A triple whose coefficients are random polynomials of degree at most two.
pub fn polynomial_triple(alg: Arc<QuadraticLieAlgebra<f64>>, k: usize, seed: u64) -> DynamicalTriple<f64> {
    sample::polynomial_triple(alg, k, &mut sample::rng(seed))
}
