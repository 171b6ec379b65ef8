mod common;

use std::sync::Arc;

use common::su2;
use nalgebra::DMatrix;
use quasidyn::drmatrix::*;
use quasidyn::fockrosly::{fr_bracket, reduced_bracket, reduced_space, reduced_space_via_fr};
use quasidyn::group::{exponential, ConjugacyClass};
use quasidyn::manifold::{FdConfig, FramedField, ProductManifold};
use quasidyn::multivector::Multivector;
use quasidyn::quasipoisson::*;
use quasidyn::sample;

#[test]
fn pi_g_on_su2_is_quasi_poisson() {
    let s = build_pi_g(su2());
    let m = &s.manifold;
    let mut rng = sample::rng(20);
    let fd = FdConfig::new(1e-4, true);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = sample::point(m, &mut rng, 1.0, 2.0);
        for _ in 0..5 {
            let (f, g, h) = (
                sample::function(m, &mut rng),
                sample::function(m, &mut rng),
                sample::function(m, &mut rng),
            );
            worst = worst.max(quasi_defect(&s, &f, &g, &h, &x, fd).unwrap().abs());
        }
    }
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn fused_pair_has_nonzero_cartan_term_and_matches_it() {
    let alg = su2();
    let s = fuse(&build_pi_g(alg.clone()), &build_pi_g(alg)).unwrap();
    let m = &s.manifold;
    let mut rng = sample::rng(21);
    let fd = FdConfig::default();
    let x = sample::point(m, &mut rng, 1.0, 1.5);
    let fs: Vec<_> = (0..3).map(|_| sample::function(m, &mut rng)).collect();
    let phi = m.evaluate(&s.rho_phi(), &fs, &x, fd).unwrap();
    assert!(phi.abs() > 1e-3);
    assert!(quasi_defect(&s, &fs[0], &fs[1], &fs[2], &x, fd).unwrap().abs() < 1e-6);
}

#[test]
fn gauge_transform_is_covariant_on_brackets() {
    let alg = su2();
    let tr = moduli_triple(&su2_moduli(alg.clone()).unwrap());
    let a2 = alg.clone();
    let gmap: GaugeMap<f64> = Arc::new(move |a: &[f64]| exponential(&a2, &[a[0], 0.0, 0.0]));
    let gauged = gauge_transform(&tr, gmap.clone(), FdConfig::default());
    let target = build_pi_g(alg);
    let original = assemble_reduced(&tr, &target).unwrap();
    let moved = assemble_reduced(&gauged, &target).unwrap();
    let m = &original.manifold;
    let mut rng = sample::rng(7);
    for _ in 0..10 {
        let mut x = sample::point(m, &mut rng, 1.0, 1.5);
        x.chart[0] = x.chart[0].clamp(-1.2, 1.2);
        let f = sample::function(m, &mut rng);
        let h = sample::function(m, &mut rng);
        let d = gauge_covariance_defect(&original, &moved, gmap.clone(), &f, &h, &x, FdConfig::default()).unwrap();
        assert!(d.abs() < 1e-5, "{d}");
    }
}

#[test]
fn moduli_bracket_with_three_punctures_is_poisson() {
    let alg = su2();
    let tr = moduli_triple(&su2_moduli(alg).unwrap());
    let space = reduced_space(&tr, 1, 0).unwrap();
    let m = &space.manifold;
    let mut rng = sample::rng(8);
    let fd = FdConfig::nested();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut x = sample::point(m, &mut rng, 1.0, 1.5);
        x.chart[0] = x.chart[0].clamp(-1.2, 1.2);
        for _ in 0..5 {
            let (f, g, h) = (
                sample::function(m, &mut rng),
                sample::function(m, &mut rng),
                sample::function(m, &mut rng),
            );
            worst = worst.max(m.jacobiator(&space.pi, &f, &g, &h, &x, fd).unwrap().abs());
        }
    }
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn reduced_bracket_agrees_with_the_fock_rosly_form() {
    let alg = su2();
    let tr = moduli_triple(&su2_moduli(alg).unwrap());
    let space = reduced_space(&tr, 1, 1).unwrap();
    let via_fr = reduced_space_via_fr(&tr, 1, 1);
    let m = &space.manifold;
    let mut rng = sample::rng(9);
    let fd = FdConfig::default();
    for _ in 0..4 {
        let mut x = sample::point(m, &mut rng, 1.0, 1.5);
        x.chart[0] = x.chart[0].clamp(-1.2, 1.2);
        let f = sample::function(m, &mut rng);
        let h = sample::function(m, &mut rng);
        let a = reduced_bracket(&space, &f, &h, &x, fd).unwrap();
        let b = m.evaluate(&via_fr, &[f, h], &x, fd).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn fusion_and_fock_rosly_routes_coincide() {
    let alg = su2();
    let class = ConjugacyClass::new(&alg, exponential(&alg, &[0.0, 0.0, 0.9])).unwrap();
    let classes = [class.clone(), class];
    let fused = build_surface_quasi(alg.clone(), &classes, 0, SurfaceRoute::Fusion).unwrap();
    let fr = build_surface_quasi(alg, &classes, 0, SurfaceRoute::FockRosly).unwrap();
    let m = &fused.manifold;
    let mut rng = sample::rng(10);
    let fd = FdConfig::default();
    for _ in 0..10 {
        let x = sample::point(m, &mut rng, 1.0, 1.5);
        let f = sample::function(m, &mut rng);
        let h = sample::function(m, &mut rng);
        let a = m.evaluate(&fused.pi, &[f.clone(), h.clone()], &x, fd).unwrap();
        let b = m.evaluate(&fr.pi, &[f, h], &x, fd).unwrap();
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn invariant_functions_do_not_see_the_skew_part() {
    let alg = su2();
    let n = alg.dim();
    let (punctures, genus) = (2, 1);
    let m = ProductManifold::new(alg.clone(), 0, punctures + 2 * genus);
    let mut rng = sample::rng(11);
    let fd = FdConfig::default();
    for _ in 0..5 {
        let s1 = DMatrix::from_fn(n, n, |i, j| {
            if i < j {
                sample::uniform(&mut rng, -1.0, 1.0)
            } else {
                0.0
            }
        });
        let s2 = DMatrix::from_fn(n, n, |i, j| {
            if i < j {
                sample::uniform(&mut rng, -1.0, 1.0)
            } else {
                0.0
            }
        });
        let r1 = alg.casimir() + (&s1 - s1.transpose());
        let r2 = alg.casimir() + (&s2 - s2.transpose());
        let x = sample::point(&m, &mut rng, 1.0, 1.5);
        let f = sample::invariant_function(&m, &mut rng);
        let h = sample::function(&m, &mut rng);
        let a = fr_bracket(&m, punctures, genus, &r1, &f, &h, &x, fd).unwrap();
        let b = fr_bracket(&m, punctures, genus, &r2, &f, &h, &x, fd).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        // a generic function does see it
        let g = sample::function(&m, &mut rng);
        let c = fr_bracket(&m, punctures, genus, &r1, &g, &h, &x, fd).unwrap();
        let d = fr_bracket(&m, punctures, genus, &r2, &g, &h, &x, fd).unwrap();
        assert!((c - d).abs() > 1e-6);
    }
}

#[test]
fn sklyanin_bracket_on_iso21_needs_the_yang_baxter_equation() {
    let alg = common::iso21();
    let mut r0 = Multivector::zero(2);
    r0.add_term(&[0, 4], 0.7);
    r0.add_term(&[1, 2], -0.4);
    r0.add_term(&[3, 5], 0.9);
    assert!(quasidyn::fockrosly::cybe_check(&alg, &r0.to_skew(6)).unwrap() > 1e-3);
    let (m, pi) = quasidyn::gspace::build_sklyanin(alg, &r0);
    let mut rng = sample::rng(12);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let x = sample::point(&m, &mut rng, 1.0, 0.8);
        let (f, g, h) = (
            sample::function(&m, &mut rng),
            sample::function(&m, &mut rng),
            sample::function(&m, &mut rng),
        );
        worst = worst.max(m.jacobiator(&pi, &f, &g, &h, &x, FdConfig::nested()).unwrap().abs());
    }
    assert!(worst > 1e-3, "{worst}");
    let zero = FramedField::zero(2);
    let x = sample::point(&m, &mut rng, 1.0, 0.8);
    let f = sample::function(&m, &mut rng);
    assert_eq!(
        m.evaluate(&zero, &[f.clone(), f], &x, FdConfig::default()).unwrap(),
        0.0
    );
}
