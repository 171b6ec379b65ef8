//! Seeded sampling of points and smooth test functions.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::drmatrix::DynamicalTriple;
use crate::group::exponential;
use crate::liealg::QuadraticLieAlgebra;
use crate::manifold::{Point, ProductManifold, ScalarFn};
use crate::multivector::Multivector;
use crate::Scalar;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`, so that
/// sample `i` draws the same numbers however the samples are scheduled.
pub fn rng_stream(seed: u64, stream: u64) -> SampleRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn uniform<T: Scalar>(rng: &mut SampleRng, lo: f64, hi: f64) -> T {
    T::lit(rng.gen_range(lo..hi))
}

pub fn algebra_vector<T: Scalar>(rng: &mut SampleRng, n: usize, scale: f64) -> Vec<T> {
    (0..n).map(|_| uniform(rng, -scale, scale)).collect()
}

/// `exp(x)` for `x` uniform in the cube of half-width `scale`.
pub fn group_element<T: Scalar>(alg: &QuadraticLieAlgebra<T>, rng: &mut SampleRng, scale: f64) -> DMatrix<T> {
    exponential(alg, &algebra_vector(rng, alg.dim(), scale))
}

/// Random conjugate `h p h^-1` of a class base point.
pub fn class_point<T: Scalar>(
    alg: &QuadraticLieAlgebra<T>,
    rng: &mut SampleRng,
    base: &DMatrix<T>,
    scale: f64,
) -> DMatrix<T> {
    let h = group_element(alg, rng, scale);
    let hi = h.clone().try_inverse().expect("group elements are invertible");
    h * base * hi
}

/// Random point with chart coordinates in `[-chart_scale, chart_scale]` and
/// group slots `exp(x)`.
pub fn point<T: Scalar>(m: &ProductManifold<T>, rng: &mut SampleRng, chart_scale: f64, group_scale: f64) -> Point<T> {
    let chart = (0..m.chart_dim())
        .map(|_| uniform(rng, -chart_scale, chart_scale))
        .collect();
    let groups = (0..m.slots())
        .map(|_| group_element(m.alg(), rng, group_scale))
        .collect();
    Point::new(chart, groups)
}

fn random_matrix<T: Scalar>(rng: &mut SampleRng, m: usize) -> DMatrix<T> {
    DMatrix::from_fn(m, m, |_, _| uniform(rng, -1.0, 1.0))
}

fn trace_with<T: Scalar>(w: &DMatrix<T>, g: &DMatrix<T>) -> T {
    (w * g).trace()
}

/// A generic polynomial test function: quadratic in chart coordinates,
/// linear and quadratic in matrix entries, with chart-group and slot-slot
/// couplings.
pub fn function<T: Scalar>(m: &ProductManifold<T>, rng: &mut SampleRng) -> ScalarFn<T> {
    let k = m.chart_dim();
    let s = m.slots();
    let size = m.alg().rep_size();
    let lin: Vec<T> = (0..k).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let quad: Vec<Vec<T>> = (0..k)
        .map(|_| (0..k).map(|_| uniform(rng, -0.5, 0.5)).collect())
        .collect();
    let w1: Vec<DMatrix<T>> = (0..s).map(|_| random_matrix(rng, size)).collect();
    let w2: Vec<DMatrix<T>> = (0..s).map(|_| random_matrix(rng, size)).collect();
    let c2: Vec<T> = (0..s).map(|_| uniform(rng, -0.5, 0.5)).collect();
    let pair = random_matrix::<T>(rng, size);
    let cpair: T = uniform(rng, -0.5, 0.5);
    let mixed: T = uniform(rng, -0.5, 0.5);
    Arc::new(move |p: &Point<T>| {
        let mut v = T::zero();
        for i in 0..k {
            v += lin[i] * p.chart[i];
            for j in 0..k {
                v += quad[i][j] * p.chart[i] * p.chart[j];
            }
        }
        for j in 0..s {
            let t1 = trace_with(&w1[j], &p.groups[j]);
            let t2 = trace_with(&w2[j], &p.groups[j]);
            v += t1 + c2[j] * t2 * t2;
            if k > 0 {
                v += mixed * p.chart[0] * t2;
            }
        }
        if s >= 2 {
            v += cpair * trace_with(&pair, &(&p.groups[0] * &p.groups[1]));
        }
        v
    })
}

/// A test function invariant under simultaneous conjugation of every slot:
/// a polynomial in the chart coordinates plus traces of words in the slots.
pub fn invariant_function<T: Scalar>(m: &ProductManifold<T>, rng: &mut SampleRng) -> ScalarFn<T> {
    let k = m.chart_dim();
    let s = m.slots();
    let lin: Vec<T> = (0..k).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let cw: Vec<T> = (0..8).map(|_| uniform(rng, -1.0, 1.0)).collect();
    Arc::new(move |p: &Point<T>| {
        let mut v = T::zero();
        for i in 0..k {
            v += lin[i] * p.chart[i] * (T::one() + p.chart[i] * T::lit(0.3));
        }
        let g = &p.groups;
        let mut words = Vec::new();
        for j in 0..s {
            words.push(g[j].trace());
            words.push((&g[j] * &g[j]).trace());
        }
        for j in 0..s {
            for l in (j + 1)..s {
                words.push((&g[j] * &g[l]).trace());
            }
        }
        if s >= 3 {
            words.push((&g[0] * &g[1] * &g[2]).trace());
            words.push((&g[0] * &g[2] * &g[1] * &g[1]).trace());
        }
        for (i, w) in words.iter().enumerate() {
            v += cw[i % cw.len()] * *w;
        }
        if words.len() >= 2 {
            v += T::lit(0.25) * words[0] * words[words.len() - 1];
        }
        if k > 0 && !words.is_empty() {
            v += T::lit(0.5) * p.chart[0] * words[words.len() - 1];
        }
        v
    })
}

/// Polynomial of degree at most two in the chart coordinates, stored as
/// `[c, c_i, c_ij]`.
fn quadratic<T: Scalar>(c: &[T], a: &[T]) -> T {
    let k = a.len();
    let mut v = c[0];
    for i in 0..k {
        v += c[1 + i] * a[i];
        for j in 0..k {
            v += c[1 + k + i * k + j] * a[i] * a[j];
        }
    }
    v
}

/// A triple on the box `(-1, 1)^k` whose coefficients are random polynomials
/// of degree at most two. It solves no equation; it exercises the linear
/// algebra of assembly and decomposition.
pub fn polynomial_triple<T: Scalar>(
    alg: Arc<QuadraticLieAlgebra<T>>,
    k: usize,
    rng: &mut SampleRng,
) -> DynamicalTriple<T> {
    let n = alg.dim();
    let terms = 1 + k + k * k;
    let mut coeffs = |count: usize| -> Vec<Vec<T>> { (0..count).map(|_| algebra_vector(rng, terms, 0.8)).collect() };
    let pi_c = coeffs(k * k);
    let th_c = coeffs(k * n);
    let r_c = coeffs(n * n);
    DynamicalTriple::new(
        alg,
        vec![-1.0; k],
        vec![1.0; k],
        move |a: &[T]| {
            DMatrix::from_fn(k, k, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Less => quadratic(&pi_c[i * k + j], a),
                std::cmp::Ordering::Greater => -quadratic(&pi_c[j * k + i], a),
                std::cmp::Ordering::Equal => T::zero(),
            })
        },
        move |a: &[T]| DMatrix::from_fn(k, n, |i, b| quadratic(&th_c[i * n + b], a)),
        move |a: &[T]| {
            let mut r = Multivector::zero(2);
            for x in 0..n {
                for y in (x + 1)..n {
                    r.add_term(&[x, y], quadratic(&r_c[x * n + y], a));
                }
            }
            r
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_samples() {
        let alg = QuadraticLieAlgebra::<f64>::su2();
        let a = group_element(&alg, &mut rng(3), 1.0);
        let b = group_element(&alg, &mut rng(3), 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn invariant_functions_are_invariant() {
        let alg = Arc::new(QuadraticLieAlgebra::<f64>::su2());
        let m = ProductManifold::new(alg.clone(), 1, 3);
        let mut r = rng(1);
        let f = invariant_function(&m, &mut r);
        let x = point(&m, &mut r, 1.0, 1.0);
        let h = group_element(&alg, &mut r, 1.0);
        let hi = h.clone().try_inverse().unwrap();
        let y = Point::new(x.chart.clone(), x.groups.iter().map(|g| &h * g * &hi).collect());
        assert!((f(&x) - f(&y)).abs() < 1e-12);
    }
}
