mod common;

use common::su2;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use quasidyn::drmatrix::su2_moduli;
use quasidyn::group::{adjoint, exponential, logarithm};
use quasidyn::liealg::QuadraticLieAlgebra;
use quasidyn::multivector::Multivector;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
}

fn vec6() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 6)
}

fn bivector(n: usize, c: &[f64]) -> Multivector<f64> {
    let mut out = Multivector::zero(2);
    let mut it = c.iter();
    for a in 0..n {
        for b in (a + 1)..n {
            out.add_term(&[a, b], *it.next().unwrap());
        }
    }
    out
}

fn algebras() -> Vec<QuadraticLieAlgebra<f64>> {
    vec![
        QuadraticLieAlgebra::su2(),
        QuadraticLieAlgebra::iso21(),
        QuadraticLieAlgebra::abelian(4),
    ]
}

#[test]
fn presets_satisfy_structure_invariants() {
    for alg in algebras() {
        let rep = alg.invariants();
        assert!(
            rep.jacobi < 1e-12 && rep.ad_invariance < 1e-12,
            "{}: {rep:?}",
            alg.name()
        );
        assert!(
            rep.pairing_symmetry < 1e-12 && rep.rep_homomorphism < 1e-12,
            "{}: {rep:?}",
            alg.name()
        );
        let phi = alg.cartan_three_tensor();
        assert!(alg.invariance_residual(&phi) < 1e-12);
    }
}

#[test]
fn casimir_relations_are_exact() {
    for alg in algebras() {
        let n = alg.dim();
        let phi = alg.cartan_three_tensor();
        let comm = Multivector::from_dense(n, 3, &alg.casimir_commutator().data);
        assert!(comm.distance(&phi.scale(-2.0)) < 1e-12, "{}", alg.name());
        let cybe = alg.cybe_defect(alg.casimir()).unwrap();
        assert!(Multivector::from_dense(n, 3, &cybe.data).distance(&phi.scale(2.0)) < 1e-12);
    }
}

#[test]
fn iso21_phi_pairs_rotations_with_translations() {
    let alg = QuadraticLieAlgebra::<f64>::iso21();
    let phi = alg.cartan_three_tensor();
    for (idx, _) in phi.terms() {
        let translations = idx.iter().filter(|&&i| i >= 3).count();
        assert_ne!(translations, 3, "pure translation part at {idx:?}");
    }
    assert!(!phi.is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(x in vec6(), y in vec6(), z in vec6()) {
        let alg = QuadraticLieAlgebra::<f64>::iso21();
        let xy = alg.bracket(&x, &y).unwrap();
        let yx = alg.bracket(&y, &x).unwrap();
        prop_assert!((&xy + &yx).amax() < 1e-12);
        let br = |a: &[f64], b: &[f64]| alg.bracket(a, b).unwrap();
        let j = br(&x, br(&y, &z).as_slice()) + br(&y, br(&z, &x).as_slice()) + br(&z, br(&x, &y).as_slice());
        prop_assert!(j.amax() < 1e-12);
    }

    #[test]
    fn pairing_is_ad_invariant(x in vec6(), y in vec6(), z in vec6()) {
        let alg = QuadraticLieAlgebra::<f64>::iso21();
        let a = alg.pair(alg.bracket(&x, &y).unwrap().as_slice(), &z);
        let b = alg.pair(&x, alg.bracket(&y, &z).unwrap().as_slice());
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn wedge_is_graded_commutative_and_associative(a in vec6(), b in vec6(), c in vec6()) {
        let u = Multivector::from_vector(&a);
        let v = Multivector::from_vector(&b);
        let w = bivector(4, &c);
        prop_assert!((&u.wedge(&v) + &v.wedge(&u)).max_abs() < 1e-12);
        prop_assert!(u.wedge(&w).distance(&w.wedge(&u)) < 1e-12);
        prop_assert!(u.wedge(&v).wedge(&w).distance(&u.wedge(&v.wedge(&w))) < 1e-12);
    }

    #[test]
    fn skew_matrix_round_trip(c in vec6()) {
        let r = bivector(4, &c);
        let s = r.to_skew(4);
        prop_assert!((&s + s.transpose()).amax() == 0.0);
        prop_assert_eq!(Multivector::from_skew(&s), r);
    }

    #[test]
    fn graded_bracket_symmetry(a in vec3(), b in vec3(), c in vec3(), d in vec3()) {
        let alg = QuadraticLieAlgebra::<f64>::su2();
        let (x, y) = (Multivector::from_vector(&a), Multivector::from_vector(&b));
        let (r, s) = (bivector(3, &c), bivector(3, &d));
        // [A, B] = -(-1)^{(|A|-1)(|B|-1)} [B, A]
        let xy = alg.graded_bracket(&x, &y).unwrap();
        prop_assert!((&xy + &alg.graded_bracket(&y, &x).unwrap()).max_abs() < 1e-12);
        let xr = alg.graded_bracket(&x, &r).unwrap();
        prop_assert!((&xr + &alg.graded_bracket(&r, &x).unwrap()).max_abs() < 1e-12);
        let rs = alg.graded_bracket(&r, &s).unwrap();
        prop_assert!(rs.distance(&alg.graded_bracket(&s, &r).unwrap()) < 1e-12);
    }

    #[test]
    fn su2_bracket_of_a_bivector_with_itself_is_along_phi(c in vec3()) {
        let alg = QuadraticLieAlgebra::<f64>::su2();
        let r = bivector(3, &c);
        let rr = alg.graded_bracket(&r, &r).unwrap();
        let norm2: f64 = c.iter().map(|v| v * v).sum();
        prop_assert!(rr.distance(&alg.cartan_three_tensor().scale(4.0 * norm2)) < 1e-12);
    }

    #[test]
    fn exp_log_and_adjoint(x in vec3(), y in vec3()) {
        let alg = QuadraticLieAlgebra::<f64>::su2();
        let small: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
        let g = exponential(&alg, &small);
        let back = logarithm(&alg, &g).unwrap();
        prop_assert!((back - DVector::from_column_slice(&small)).amax() < 1e-10);
        let h = exponential(&alg, &y);
        let (ag, ah, agh) = (adjoint(&alg, &g).unwrap(), adjoint(&alg, &h).unwrap(), adjoint(&alg, &(&g * &h)).unwrap());
        prop_assert!((&ag * &ah - agh).amax() < 1e-10);
        // Ad preserves the pairing
        prop_assert!((ag.transpose() * alg.pairing() * &ag - alg.pairing()).amax() < 1e-10);
    }

    #[test]
    fn projector_is_idempotent(a in -1.3..1.3f64) {
        prop_assume!(a.abs() > 1e-3);
        let data = su2_moduli(su2()).unwrap();
        let h = data.h_at(&[a]).unwrap();
        prop_assert!((&h * &h - &h).amax() < 1e-9);
        prop_assert_eq!(h.rank(1e-8), 2);
    }

    #[test]
    fn cybe_vanishes_on_abelian_algebras(c in prop::collection::vec(-1.0..1.0f64, 16)) {
        let alg = QuadraticLieAlgebra::<f64>::abelian(4);
        let r = DMatrix::from_column_slice(4, 4, &c);
        prop_assert_eq!(alg.cybe_defect(&r).unwrap().max_abs(), 0.0);
    }
}

#[test]
fn single_precision_pipeline() {
    let alg = std::sync::Arc::new(QuadraticLieAlgebra::<f32>::su2());
    let data = su2_moduli(alg.clone()).unwrap();
    let v = data.value(&[0.5f32]).unwrap();
    assert!((v.theta[(0, 2)] - 1.0).abs() < 1e-4);
    let g = exponential(&alg, &[0.1f32, 0.2, -0.3]);
    assert!((g.determinant() - 1.0).abs() < 1e-4);
}
