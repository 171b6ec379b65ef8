//! Fock-Rosly bivector on `G^(n + 2g)` and the reduced moduli bracket.
//!
//! Holonomy slots are ordered `M_1..M_n, A_1, B_1, .., A_g, B_g`. Operator
//! indices (1-based) follow the ciliated ordering
//!
//! ```text
//! 2i-1      -> grad_R on M_i          2n+4i-3 -> grad_R on A_i
//! 2i        -> grad_L on M_i          2n+4i-2 -> grad_R on B_i
//!                                     2n+4i-1 -> grad_L on A_i
//!                                     2n+4i   -> grad_L on B_i
//! ```
//!
//! with `<grad_R, A> f(p) = d/dt f(p exp(-tA))` (the field `-L_A`) and
//! `<grad_L, A> f(p) = d/dt f(exp(tA) p)` (the field `R_A`).

use nalgebra::{DMatrix, DVector};

use crate::drmatrix::DynamicalTriple;
use crate::liealg::QuadraticLieAlgebra;
use crate::manifold::{FdConfig, FramedField, Point, ProductManifold, ScalarFn};
use crate::multivector::Multivector;
use crate::quasipoisson::{assemble_reduced, build_surface_quasi, QuasiPoissonSpace, SurfaceRoute};
use crate::{Error, Result, Scalar};

/// Normalisation of `<r, u ^ v>` in the bracket. With one half, the bivector
/// built from the Casimir on two punctures is the fusion product of two
/// copies of the group.
pub const PAIRING_FACTOR: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `grad_R`, the field `-L`.
    Right,
    /// `grad_L`, the field `R`.
    Left,
}

/// Slot and side of operator `i` (1-based).
pub fn operator_slot(n: usize, genus: usize, i: usize) -> Result<(usize, Side)> {
    let total = 2 * (n + 2 * genus);
    if i == 0 || i > total {
        return Err(Error::Input(format!("operator index {i} outside 1..={total}")));
    }
    if i <= 2 * n {
        let slot = (i - 1) / 2;
        return Ok((slot, if i % 2 == 1 { Side::Right } else { Side::Left }));
    }
    let j = i - 2 * n - 1;
    let handle = j / 4;
    let (a, b) = (n + 2 * handle, n + 2 * handle + 1);
    Ok(match j % 4 {
        0 => (a, Side::Right),
        1 => (b, Side::Right),
        2 => (a, Side::Left),
        _ => (b, Side::Left),
    })
}

/// Frame combination of the `a`-th component of operator `i`.
pub fn operator_field<T: Scalar>(
    m: &ProductManifold<T>,
    n: usize,
    genus: usize,
    i: usize,
    a: usize,
) -> Result<Multivector<T>> {
    let (slot, side) = operator_slot(n, genus, i)?;
    Ok(match side {
        Side::Right => Multivector::monomial(&[m.left(slot, a)], -T::one()),
        Side::Left => Multivector::basis(m.right(slot, a)),
    })
}

/// `grad_i f` at `x` as an algebra coefficient vector.
pub fn nabla<T: Scalar>(
    m: &ProductManifold<T>,
    n: usize,
    genus: usize,
    i: usize,
    f: &ScalarFn<T>,
    x: &Point<T>,
    fd: FdConfig,
) -> Result<DVector<T>> {
    let dim = m.alg().dim();
    let mut out = DVector::zeros(dim);
    for a in 0..dim {
        let v = operator_field(m, n, genus, i, a)?;
        out[a] = m.evaluate_at(&v, std::slice::from_ref(f), x, fd)?;
    }
    Ok(out)
}

/// `B_r = gamma (1/2 sum_i r^{ab} V_i^a ^ V_i^b + sum_{i<j} r^{ab} V_i^a ^ V_j^b)`
/// for an arbitrary (not necessarily skew) 2-tensor `r`.
pub fn fr_bivector<T: Scalar>(
    m: &ProductManifold<T>,
    n: usize,
    genus: usize,
    r: &DMatrix<T>,
    gamma: T,
) -> Multivector<T> {
    let dim = m.alg().dim();
    let ops = 2 * (n + 2 * genus);
    let fields: Vec<Vec<Multivector<T>>> = (1..=ops)
        .map(|i| {
            (0..dim)
                .map(|a| operator_field(m, n, genus, i, a).expect("index in range"))
                .collect()
        })
        .collect();
    let mut out = Multivector::zero(2);
    for i in 0..ops {
        for j in i..ops {
            let w = if i == j { T::lit(0.5) } else { T::one() } * gamma;
            for a in 0..dim {
                for b in 0..dim {
                    let c = r[(a, b)];
                    if c != T::zero() {
                        out = &out + &fields[i][a].wedge(&fields[j][b]).scale(w * c);
                    }
                }
            }
        }
    }
    out
}

/// `B_r(df, dh)` at `x`.
#[allow(clippy::too_many_arguments)]
pub fn fr_bracket<T: Scalar>(
    m: &ProductManifold<T>,
    n: usize,
    genus: usize,
    r: &DMatrix<T>,
    f: &ScalarFn<T>,
    h: &ScalarFn<T>,
    x: &Point<T>,
    fd: FdConfig,
) -> Result<T> {
    let b = fr_bivector(m, n, genus, r, T::lit(PAIRING_FACTOR));
    m.evaluate_at(&b, &[f.clone(), h.clone()], x, fd)
}

/// Bivector on `U x G^(n - 2 + 2g)`:
/// `pi_U - rho(theta-hat) + rho(r) + B_kappa`, `rho` the simultaneous
/// conjugation on the remaining holonomies.
pub fn reduced_space<T: Scalar>(
    triple: &DynamicalTriple<T>,
    remaining_punctures: usize,
    genus: usize,
) -> Result<QuasiPoissonSpace<T>> {
    let alg = triple.alg_arc().clone();
    let classes = vec![
        crate::group::ConjugacyClass::new(&alg, DMatrix::identity(alg.rep_size(), alg.rep_size()))?;
        remaining_punctures
    ];
    if remaining_punctures + genus == 0 {
        return Err(Error::Input(
            "reduced bracket needs at least three punctures or a handle".into(),
        ));
    }
    let rest = build_surface_quasi(alg, &classes, genus, SurfaceRoute::FockRosly)?;
    assemble_reduced(triple, &rest)
}

/// The reduced bracket `{F, H}` at a point of `U x G^(n - 2 + 2g)`.
pub fn reduced_bracket<T: Scalar>(
    space: &QuasiPoissonSpace<T>,
    f: &ScalarFn<T>,
    h: &ScalarFn<T>,
    x: &Point<T>,
    fd: FdConfig,
) -> Result<T> {
    space.manifold.evaluate(&space.pi, &[f.clone(), h.clone()], x, fd)
}

/// The same bivector written with the Fock-Rosly bivector of the dynamical
/// tensor: `pi_U - rho(theta-hat) + B_{s(r) + kappa}`, where `s(r)` is the
/// skew tensor with `B_{s(r)} = rho(r)`.
pub fn reduced_space_via_fr<T: Scalar>(
    triple: &DynamicalTriple<T>,
    remaining_punctures: usize,
    genus: usize,
) -> FramedField<T> {
    let k = triple.chart_dim();
    let m = ProductManifold::new(triple.alg_arc().clone(), k, remaining_punctures + 2 * genus);
    let dim = m.alg().dim();
    let kappa = m.alg().casimir().clone();
    let tr = triple.clone();
    let gamma = T::lit(PAIRING_FACTOR);
    FramedField::new(2, move |p: &Point<T>| {
        let v = tr.at(&p.chart[..k]);
        let mut out = crate::quasipoisson::chart_bivector(&v.pi_u, 0);
        for i in 0..k {
            for a in 0..dim {
                let mut rho = Multivector::zero(1);
                for slot in 0..m.slots() {
                    rho.add_term(&[m.left(slot, a)], T::one());
                    rho.add_term(&[m.right(slot, a)], -T::one());
                }
                out = &out - &Multivector::basis(i).wedge(&rho).scale(v.theta[(i, a)]);
            }
        }
        // B_S = gamma rho(s) for the skew matrix S of s
        let s = v.r.to_skew(dim) / gamma;
        let total = &s + &kappa;
        out = &out + &fr_bivector(&m, remaining_punctures, genus, &total, gamma);
        out
    })
}

/// Norm of the three-term CYBE defect of a constant 2-tensor.
pub fn cybe_check<T: Scalar>(alg: &QuadraticLieAlgebra<T>, r: &DMatrix<T>) -> Result<T> {
    Ok(alg.cybe_defect(r)?.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasipoisson::{build_pi_g, fuse};
    use crate::sample;
    use std::sync::Arc;

    fn su2() -> Arc<QuadraticLieAlgebra<f64>> {
        Arc::new(QuadraticLieAlgebra::su2())
    }

    #[test]
    fn operator_indexing_covers_every_slot_side() {
        let (n, g) = (2, 2);
        let mut seen = std::collections::BTreeSet::new();
        for i in 1..=2 * (n + 2 * g) {
            seen.insert(operator_slot(n, g, i).map(|(s, side)| (s, side == Side::Left)).unwrap());
        }
        assert_eq!(seen.len(), 2 * (n + 2 * g));
        assert!(operator_slot(n, g, 0).is_err());
        assert!(operator_slot(n, g, 13).is_err());
    }

    #[test]
    fn one_slot_casimir_is_pi_g() {
        let alg = su2();
        let m = ProductManifold::new(alg.clone(), 0, 1);
        let b = fr_bivector(&m, 1, 0, alg.casimir(), 0.5);
        let g = build_pi_g(alg);
        let x = Point::groups_only(vec![DMatrix::identity(4, 4)]);
        assert!(b.distance(&g.pi.at(&x)) < 1e-15);
    }

    #[test]
    fn two_slot_casimir_is_the_fusion_product() {
        let alg = su2();
        let m = ProductManifold::new(alg.clone(), 0, 2);
        let b = FramedField::constant(fr_bivector(&m, 2, 0, alg.casimir(), 0.5));
        let fused = fuse(&build_pi_g(alg.clone()), &build_pi_g(alg)).unwrap();
        let mut rng = sample::rng(4);
        let x = sample::point(&m, &mut rng, 1.0, 1.5);
        let f = sample::function(&m, &mut rng);
        let h = sample::function(&m, &mut rng);
        let fd = FdConfig::default();
        let a = m.evaluate(&b, &[f.clone(), h.clone()], &x, fd).unwrap();
        let c = m.evaluate(&fused.pi, &[f, h], &x, fd).unwrap();
        assert!((a - c).abs() < 1e-8, "{a} vs {c}");
    }

    #[test]
    fn cybe_of_zero_and_abelian() {
        let g = QuadraticLieAlgebra::<f64>::su2();
        assert_eq!(cybe_check(&g, &DMatrix::zeros(3, 3)).unwrap(), 0.0);
        let a = QuadraticLieAlgebra::<f64>::abelian(3);
        let r = DMatrix::from_fn(3, 3, |i, j| (i as f64) - (j as f64));
        assert_eq!(cybe_check(&a, &r).unwrap(), 0.0);
        assert!(cybe_check(&g, g.casimir()).unwrap() > 0.5);
    }
}
