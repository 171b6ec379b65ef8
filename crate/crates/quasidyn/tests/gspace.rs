mod common;

use std::sync::Arc;

use common::su2;
use nalgebra::DMatrix;
use quasidyn::drmatrix::defect_split;
use quasidyn::gspace::*;
use quasidyn::manifold::{FdConfig, Point, ScalarFn};
use quasidyn::multivector::Multivector;
use quasidyn::sample;

/// `A_r(x) = -b coth(2 b x) e1 ^ e2` over the Cartan line, paired with
/// `r0 = b e1 ^ e2` (and `-1/(2x)` when `b = 0`).
fn cartan_line(b: f64) -> (ClassicalDynamicalRMatrix<f64>, Multivector<f64>) {
    let cdr = ClassicalDynamicalRMatrix {
        alg: su2(),
        h: DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]),
        skew: Arc::new(move |x: &[f64]| {
            let a = if b == 0.0 {
                -0.5 / x[0]
            } else {
                -b / (2.0 * b * x[0]).tanh()
            };
            Multivector::monomial(&[0, 1], a)
        }),
        epsilon: 0.0,
        lower: vec![0.2],
        upper: vec![3.0],
    };
    (cdr, Multivector::monomial(&[0, 1], b))
}

fn sample_point(m: &quasidyn::manifold::ProductManifold<f64>, rng: &mut sample::SampleRng) -> Point<f64> {
    let mut x = sample::point(m, rng, 1.0, 1.0);
    x.chart[0] = 0.6 + x.chart[0].abs();
    x
}

#[test]
fn cartan_line_solves_the_dynamical_equation() {
    for b in [0.0, 0.4, 0.9] {
        let (cdr, r0) = cartan_line(b);
        let tr = cdr.as_triple().unwrap();
        let omega = su2().graded_bracket(&r0, &r0).unwrap().scale(0.5);
        for x in [0.5, 1.1, 2.0] {
            let s = defect_split(&tr, &omega, &[x], FdConfig::default()).unwrap();
            assert!(s.max_componentwise() < 1e-7, "b {b} x {x}: {s:?}");
        }
    }
}

#[test]
fn pi_r_is_poisson_for_a_dynamical_r_matrix() {
    for b in [0.0, 0.7] {
        let (cdr, r0) = cartan_line(b);
        let (m, pi) = build_pi_r_gspace(&cdr, &r0).unwrap();
        let mut rng = sample::rng(31);
        for _ in 0..3 {
            let x = sample_point(&m, &mut rng);
            let (f, g, h) = (
                sample::function(&m, &mut rng),
                sample::function(&m, &mut rng),
                sample::function(&m, &mut rng),
            );
            let j = m.jacobiator(&pi, &f, &g, &h, &x, FdConfig::new(1e-3, true)).unwrap();
            assert!(j.abs() < 1e-5, "b {b}: {j}");
        }
    }
}

#[test]
fn wrong_coefficient_breaks_the_poisson_property() {
    let (mut cdr, r0) = cartan_line(0.0);
    cdr.skew = Arc::new(|x: &[f64]| Multivector::monomial(&[0, 1], 0.5 / x[0]));
    let (m, pi) = build_pi_r_gspace(&cdr, &r0).unwrap();
    let mut rng = sample::rng(32);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let x = sample_point(&m, &mut rng);
        let (f, g, h) = (
            sample::function(&m, &mut rng),
            sample::function(&m, &mut rng),
            sample::function(&m, &mut rng),
        );
        worst = worst.max(m.jacobiator(&pi, &f, &g, &h, &x, FdConfig::nested()).unwrap().abs());
    }
    assert!(worst > 1e-3, "{worst}");
}

#[test]
fn left_multiplication_is_a_poisson_action() {
    let (cdr, r0) = cartan_line(0.7);
    let (m, pi) = build_pi_r_gspace(&cdr, &r0).unwrap();
    let (gm, pg) = build_sklyanin(cdr.alg.clone(), &r0);
    let mut rng = sample::rng(33);
    for _ in 0..5 {
        let x = sample_point(&m, &mut rng);
        let g1 = sample::group_element(&cdr.alg, &mut rng, 1.0);
        let f = sample::function(&m, &mut rng);
        let h = sample::function(&m, &mut rng);
        let d = poisson_action_defect(&m, &pi, &gm, &pg, &g1, &x, &f, &h, FdConfig::default()).unwrap();
        assert!(d.abs() < 1e-5, "{d}");
        let e = DMatrix::identity(4, 4);
        let d0 = poisson_action_defect(&m, &pi, &gm, &pg, &e, &x, &f, &h, FdConfig::default()).unwrap();
        assert!(d0.abs() < 1e-9);
    }
}

#[test]
fn pi_r_is_invariant_under_the_twisted_action() {
    let (cdr, r0) = cartan_line(0.7);
    let (m, pi) = build_pi_r_gspace(&cdr, &r0).unwrap();
    let mut rng = sample::rng(34);
    for u in [0.3, -1.1, 2.0] {
        let x = sample_point(&m, &mut rng);
        let f = sample::function(&m, &mut rng);
        let g = sample::function(&m, &mut rng);
        let d = h_invariance_defect(&cdr, &m, &pi, &[u], &x, &f, &g, FdConfig::default()).unwrap();
        assert!(d.abs() < 1e-5, "{d}");
    }
}

#[test]
fn kks_of_su2_reproduces_structure_constants() {
    let alg = su2();
    let (m, pi) = build_kks(alg.clone(), &DMatrix::identity(3, 3)).unwrap();
    let mut rng = sample::rng(35);
    let coord = |i: usize| -> ScalarFn<f64> { Arc::new(move |p: &Point<f64>| p.chart[i]) };
    for _ in 0..3 {
        let x = sample::point(&m, &mut rng, 2.0, 0.0);
        for a in 0..3 {
            for b in 0..3 {
                let v = m.evaluate(&pi, &[coord(a), coord(b)], &x, FdConfig::default()).unwrap();
                let want: f64 = (0..3).map(|c| alg.f(a, b, c) * x.chart[c]).sum();
                assert!((v - want).abs() < 1e-8);
            }
        }
        let (f, g, h) = (
            sample::function(&m, &mut rng),
            sample::function(&m, &mut rng),
            sample::function(&m, &mut rng),
        );
        let j = m.jacobiator(&pi, &f, &g, &h, &x, FdConfig::new(1e-3, true)).unwrap();
        assert!(j.abs() < 1e-8, "{j}");
    }
    let (am, api) = build_kks(
        common::iso21(),
        &DMatrix::from_fn(6, 3, |i, j| if i == j + 3 { 1.0 } else { 0.0 }),
    )
    .unwrap();
    let x = sample::point(&am, &mut rng, 1.0, 0.0);
    let f = sample::function(&am, &mut rng);
    let g = sample::function(&am, &mut rng);
    assert_eq!(am.evaluate(&api, &[f, g], &x, FdConfig::default()).unwrap(), 0.0);
}
