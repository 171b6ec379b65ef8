mod common;

use std::sync::Arc;

use common::{alpha_grid, polynomial_triple, su2, GRID};
use nalgebra::DMatrix;
use quasidyn::drmatrix::*;
use quasidyn::group::{cayley_operator, exponential};
use quasidyn::manifold::FdConfig;
use quasidyn::multivector::Multivector;
use quasidyn::quasipoisson::{assemble_on_group, decompose_on_section, identity_section};

#[test]
fn su2_moduli_triple_closed_form() {
    let data = su2_moduli(su2()).unwrap();
    let tr = moduli_triple(&data);
    for &a in &GRID {
        let v = tr.at(&[a]);
        assert!(v.pi_u.amax() < 1e-12);
        let theta = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        assert!((&v.theta - theta).amax() < 1e-8, "{a}: {}", v.theta);
        // r lies along e1 ^ e2 with the tangent profile
        let expected = Multivector::monomial(&[0, 1], -0.5 * a.tan());
        assert!(v.r.distance(&expected) < 1e-8, "{a}: {:?}", v.r);
    }
}

#[test]
fn su2_projector_and_cayley_operator() {
    let data = su2_moduli(su2()).unwrap();
    for &a in &GRID {
        let h = data.h_at(&[a]).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, a.tan(), 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((&h - expected).amax() < 1e-8, "{a}: {h}");
        let x = data.section().point(&[a]).groups[0].clone();
        let c = cayley_operator(data.alg(), &x).unwrap();
        assert!(c.amax() < 1e-10, "{a}: {c}");
    }
}

#[test]
fn moduli_triple_passes_the_three_equations() {
    let alg = su2();
    let tr = moduli_triple(&su2_moduli(alg.clone()).unwrap());
    let omega = cartan_omega(&alg);
    let fd = FdConfig::default();
    for a in alpha_grid() {
        let s = defect_split(&tr, &omega, &[a], fd).unwrap();
        assert!(s.compat.max_abs() < 1e-6);
        assert!(s.gdybe.max_abs() < 1e-6);
        assert!(s.morphism.max_abs() < 1e-6);
        assert!(s.mismatch(1) < 1e-10);
        let c = compat_defect(&tr, &[a], None, fd).unwrap();
        assert!(c.distance(&s.compat) < 1e-12);
    }
}

#[test]
fn unified_defect_splits_into_componentwise_defects_for_random_triples() {
    let alg = su2();
    let omega = cartan_omega(&alg);
    for seed in 0..3 {
        let tr = polynomial_triple(alg.clone(), 2, seed);
        let s = defect_split(&tr, &omega, &[0.2, -0.4], FdConfig::default()).unwrap();
        assert!(s.mismatch(2) < 1e-10, "seed {seed}: {}", s.mismatch(2));
        let u = unified_defect(&tr, &omega, &[0.2, -0.4], FdConfig::default()).unwrap();
        assert!(u.distance(&s.unified) < 1e-12);
    }
}

#[test]
fn random_triple_survives_assembly_and_decomposition() {
    let alg = su2();
    for seed in [3, 17] {
        let tr = polynomial_triple(alg.clone(), 2, seed);
        let space = assemble_on_group(&tr);
        let section = identity_section(&tr);
        for (i, a) in alpha_grid().iter().enumerate() {
            let pt = [*a * 0.8, (-*a * 0.5 + 0.1 * i as f64).clamp(-0.9, 0.9)];
            let d = decompose_on_section(&space, &section, &pt).unwrap();
            let back = TripleValue {
                pi_u: d.pi_u,
                theta: d.theta,
                r: d.r,
            };
            let err = tr.at(&pt).distance(&back);
            assert!(err < 1e-8, "seed {seed} at {pt:?}: {err}");
        }
    }
}

#[test]
fn gauge_by_meridian_rotation_preserves_the_equations() {
    let alg = su2();
    let tr = moduli_triple(&su2_moduli(alg.clone()).unwrap());
    let a2 = alg.clone();
    let gauged = gauge_transform(
        &tr,
        Arc::new(move |a: &[f64]| exponential(&a2, &[a[0], 0.0, 0.0])),
        FdConfig::default(),
    );
    let omega = cartan_omega(&alg);
    for a in alpha_grid() {
        let s = defect_split(&gauged, &omega, &[a], FdConfig::nested()).unwrap();
        assert!(s.max_componentwise() < 1e-5, "{a}: {}", s.max_componentwise());
    }
}

#[test]
fn rescaled_r_breaks_the_dynamical_equation() {
    let alg = su2();
    let tr = moduli_triple(&su2_moduli(alg.clone()).unwrap()).scale_r(-2.0);
    let d = gdybe_defect(&tr, &cartan_omega(&alg), &[0.5], None, FdConfig::default()).unwrap();
    assert!(d.max_abs() > 1e-2);
}

#[test]
fn iso21_zero_template_is_compatible() {
    let alg = common::iso21();
    let mut maps = Iso21Maps::zero();
    maps.v = Arc::new(|_| [[0.4, 0.0, 1.0], [0.0, -0.7, 0.0], [0.2, 0.0, 0.5]]);
    let tr = iso21_triple(alg.clone(), vec![-1.0; 2], vec![1.0; 2], maps).unwrap();
    for pt in [[0.1, 0.2], [-0.5, 0.4], [0.6, -0.6]] {
        let c = compat_defect(&tr, &pt, None, FdConfig::default()).unwrap();
        assert!(c.max_abs() < 1e-10);
    }
    let zero = iso21_triple(alg, vec![-1.0; 2], vec![1.0; 2], Iso21Maps::zero()).unwrap();
    assert!(
        compat_defect(&zero, &[0.0, 0.0], None, FdConfig::default())
            .unwrap()
            .max_abs()
            == 0.0
    );
}

#[test]
fn evaluation_outside_the_chart_is_a_domain_error() {
    let tr = moduli_triple(&su2_moduli(su2()).unwrap());
    assert!(compat_defect(&tr, &[2.0], None, FdConfig::default()).is_err());
}
