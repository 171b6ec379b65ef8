//! Poisson structures attached to a classical dynamical r-matrix: the
//! Sklyanin bracket on the group, the linear (KKS) bracket on `h*`, the
//! bivector `pi_r` on `h* x G` and the defect of the left action being
//! Poisson.
//!
//! `h` is given by a basis matrix whose columns are algebra coefficient
//! vectors; chart coordinates on `h*` are `x_i = <x, h_i>`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::drmatrix::DynamicalTriple;
use crate::group::{adjoint, exponential};
use crate::liealg::QuadraticLieAlgebra;
use crate::manifold::{FdConfig, FramedField, Point, ProductManifold, ScalarFn};
use crate::multivector::Multivector;
use crate::{Error, Result, Scalar};

/// Structure constants `[h_a, h_b] = sum_c c_ab^c h_c` of the span of the
/// columns of `basis`, or an error when the span is not closed.
pub fn subalgebra_constants<T: Scalar>(alg: &QuadraticLieAlgebra<T>, basis: &DMatrix<T>) -> Result<Vec<DMatrix<T>>> {
    let m = basis.ncols();
    if basis.nrows() != alg.dim() {
        return Err(Error::Dimension {
            expected: alg.dim(),
            got: basis.nrows(),
        });
    }
    let pinv = basis
        .clone()
        .pseudo_inverse(T::lit(1e-12))
        .map_err(|e| Error::Input(e.to_string()))?;
    let mut out = vec![DMatrix::zeros(m, m); m];
    let mut worst = T::zero();
    for a in 0..m {
        for b in 0..m {
            let v = alg.bracket(basis.column(a).as_slice(), basis.column(b).as_slice())?;
            let c = &pinv * &v;
            worst = worst.max((basis * &c - &v).amax());
            for k in 0..m {
                out[k][(a, b)] = c[k];
            }
        }
    }
    if worst > T::lit(1e-10) {
        return Err(Error::NotSubalgebra(worst.as_f64()));
    }
    Ok(out)
}

/// `rho^L(r0) - rho^R(r0)` on one group slot.
pub fn build_sklyanin<T: Scalar>(
    alg: Arc<QuadraticLieAlgebra<T>>,
    r0: &Multivector<T>,
) -> (ProductManifold<T>, FramedField<T>) {
    let m = ProductManifold::new(alg, 0, 1);
    let pi = &r0.map_indices(|a| m.left(0, a)) - &r0.map_indices(|a| m.right(0, a));
    (m, FramedField::constant(pi))
}

/// Skew matrix of the linear bracket `{x_a, x_b} = sum_c c_ab^c x_c`.
fn kks_matrix<T: Scalar>(consts: &[DMatrix<T>], x: &[T]) -> DMatrix<T> {
    let m = x.len();
    let mut out = DMatrix::zeros(m, m);
    for (c, cm) in consts.iter().enumerate() {
        out += cm * x[c];
    }
    out
}

/// The KKS bivector on the chart `h*`.
pub fn build_kks<T: Scalar>(
    alg: Arc<QuadraticLieAlgebra<T>>,
    basis: &DMatrix<T>,
) -> Result<(ProductManifold<T>, FramedField<T>)> {
    let consts = subalgebra_constants(&alg, basis)?;
    let m = ProductManifold::new(alg, basis.ncols(), 0);
    let pi = FramedField::new(2, move |p: &Point<T>| {
        crate::quasipoisson::chart_bivector(&kks_matrix(&consts, &p.chart), 0)
    });
    Ok((m, pi))
}

pub type SkewPartFn<T> = Arc<dyn Fn(&[T]) -> Multivector<T> + Send + Sync>;

/// A classical dynamical r-matrix `(epsilon / 2) kappa + A_r(x)` over `h*`.
#[derive(Clone)]
pub struct ClassicalDynamicalRMatrix<T: Scalar> {
    pub alg: Arc<QuadraticLieAlgebra<T>>,
    /// Columns span `h`.
    pub h: DMatrix<T>,
    pub skew: SkewPartFn<T>,
    pub epsilon: T,
    /// Chart box used by the verifiers.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl<T: Scalar> std::fmt::Debug for ClassicalDynamicalRMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicalDynamicalRMatrix")
            .field("h", &self.h)
            .field("epsilon", &self.epsilon)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ClassicalDynamicalRMatrix<T> {
    pub fn chart_dim(&self) -> usize {
        self.h.ncols()
    }

    /// The triple `(pi_KKS, -sum d_i (x) h_i, A_r)` whose algebroid element
    /// maps to the left-invariant part of `pi_r`.
    pub fn as_triple(&self) -> Result<DynamicalTriple<T>> {
        let consts = subalgebra_constants(&self.alg, &self.h)?;
        let k = self.chart_dim();
        let theta = -self.h.transpose();
        let skew = self.skew.clone();
        Ok(DynamicalTriple::new(
            self.alg.clone(),
            self.lower.clone(),
            self.upper.clone(),
            move |x| kks_matrix(&consts, &x[..k]),
            move |_| theta.clone(),
            move |x| skew(x),
        ))
    }
}

/// `pi_KKS + rho^L(theta) + rho^L(A_r) - rho^R(r0)` on `h* x G`, with
/// `theta = sum d/dx_i (x) h_i`.
pub fn build_pi_r_gspace<T: Scalar>(
    cdr: &ClassicalDynamicalRMatrix<T>,
    r0: &Multivector<T>,
) -> Result<(ProductManifold<T>, FramedField<T>)> {
    let consts = subalgebra_constants(&cdr.alg, &cdr.h)?;
    let k = cdr.chart_dim();
    let m = ProductManifold::new(cdr.alg.clone(), k, 1);
    let n = cdr.alg.dim();
    let mm = m.clone();
    let h = cdr.h.clone();
    let skew = cdr.skew.clone();
    let right = r0.map_indices(|a| m.right(0, a));
    let pi = FramedField::new(2, move |p: &Point<T>| {
        let mut out = crate::quasipoisson::chart_bivector(&kks_matrix(&consts, &p.chart), 0);
        for i in 0..k {
            for a in 0..n {
                out.add_term(&[i, mm.left(0, a)], h[(a, i)]);
            }
        }
        out = &out + &skew(&p.chart).map_indices(|a| mm.left(0, a));
        &out - &right
    });
    Ok((m, pi))
}

fn pulled_back<T: Scalar>(f: &ScalarFn<T>, map: impl Fn(&Point<T>) -> Point<T> + Send + Sync + 'static) -> ScalarFn<T> {
    let f = f.clone();
    Arc::new(move |p: &Point<T>| f(&map(p)))
}

/// `pi_r(g1 . a) - (g1)_* pi_r(a) - a_* pi_G(g1)` evaluated on `(df, dh)`,
/// for the left action `g1 . (x, g) = (x, g1 g)` and `a_*` the push-forward
/// along `g' -> g' . a`.
#[allow(clippy::too_many_arguments)]
pub fn poisson_action_defect<T: Scalar>(
    m: &ProductManifold<T>,
    pi_r: &FramedField<T>,
    group: &ProductManifold<T>,
    pi_g: &FramedField<T>,
    g1: &DMatrix<T>,
    a: &Point<T>,
    f: &ScalarFn<T>,
    h: &ScalarFn<T>,
    fd: FdConfig,
) -> Result<T> {
    m.check_point(a)?;
    let moved = Point::new(a.chart.clone(), vec![g1 * &a.groups[0]]);
    let lhs = m.evaluate(pi_r, &[f.clone(), h.clone()], &moved, fd)?;
    let left = {
        let g1 = g1.clone();
        move |p: &Point<T>| Point::new(p.chart.clone(), vec![&g1 * &p.groups[0]])
    };
    let first = m.evaluate(pi_r, &[pulled_back(f, left.clone()), pulled_back(h, left)], a, fd)?;
    let orbit = {
        let a = a.clone();
        move |p: &Point<T>| Point::new(a.chart.clone(), vec![&p.groups[0] * &a.groups[0]])
    };
    let at_g1 = Point::groups_only(vec![g1.clone()]);
    let second = group.evaluate(
        pi_g,
        &[pulled_back(f, orbit.clone()), pulled_back(h, orbit)],
        &at_g1,
        fd,
    )?;
    Ok(lhs - first - second)
}

/// The twisted action `h . (x, g) = (Ad*_h x, g h^-1)` of `H = exp(h)` on
/// `h* x G`, for `h = exp(sum u_i h_i)`. With `(Ad*_h x)(v) = x(Ad_h^-1 v)`
/// this is a left action, and `sum d/dx_i ^ L_{h_i}` is invariant under it.
pub fn twisted_action<T: Scalar>(
    cdr: &ClassicalDynamicalRMatrix<T>,
    u: &[T],
) -> Result<impl Fn(&Point<T>) -> Point<T> + Send + Sync + Clone + 'static> {
    let alg = &cdr.alg;
    let elem = &cdr.h * nalgebra::DVector::from_column_slice(u);
    let hg = exponential(alg, elem.as_slice());
    let hinv = hg
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NonFinite("group element is not invertible".into()))?;
    let ad_inv = adjoint(alg, &hinv)?;
    let hinv = hinv.clone();
    // Ad_{h^-1} h_i = sum_j coad[(j, i)] h_j
    let pinv = cdr
        .h
        .clone()
        .pseudo_inverse(T::lit(1e-12))
        .map_err(|e| Error::Input(e.to_string()))?;
    let coad = &pinv * (&ad_inv * &cdr.h);
    Ok(move |p: &Point<T>| {
        let x = nalgebra::DVector::from_column_slice(&p.chart);
        let y = coad.transpose() * x;
        Point::new(y.as_slice().to_vec(), vec![&p.groups[0] * &hinv])
    })
}

/// `pi(F o Phi, G o Phi)(p) - pi(F, G)(Phi(p))` for the twisted action `Phi`.
#[allow(clippy::too_many_arguments)]
pub fn h_invariance_defect<T: Scalar>(
    cdr: &ClassicalDynamicalRMatrix<T>,
    m: &ProductManifold<T>,
    pi: &FramedField<T>,
    u: &[T],
    p: &Point<T>,
    f: &ScalarFn<T>,
    g: &ScalarFn<T>,
    fd: FdConfig,
) -> Result<T> {
    let phi = twisted_action(cdr, u)?;
    let lhs = m.evaluate(pi, &[pulled_back(f, phi.clone()), pulled_back(g, phi.clone())], p, fd)?;
    let rhs = m.evaluate(pi, &[f.clone(), g.clone()], &phi(p), fd)?;
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn su2() -> Arc<QuadraticLieAlgebra<f64>> {
        Arc::new(QuadraticLieAlgebra::su2())
    }

    fn full(alg: &Arc<QuadraticLieAlgebra<f64>>) -> ClassicalDynamicalRMatrix<f64> {
        ClassicalDynamicalRMatrix {
            alg: alg.clone(),
            h: DMatrix::identity(3, 3),
            skew: Arc::new(|_| Multivector::zero(2)),
            epsilon: 0.0,
            lower: vec![-2.0; 3],
            upper: vec![2.0; 3],
        }
    }

    #[test]
    fn kks_on_coordinates() {
        let alg = su2();
        let (m, pi) = build_kks(alg.clone(), &DMatrix::identity(3, 3)).unwrap();
        let x = Point::chart_only(vec![0.3, -0.7, 1.1]);
        let coord = |i: usize| -> ScalarFn<f64> { Arc::new(move |p: &Point<f64>| p.chart[i]) };
        for a in 0..3 {
            for b in 0..3 {
                let v = m.evaluate(&pi, &[coord(a), coord(b)], &x, FdConfig::default()).unwrap();
                let want: f64 = (0..3).map(|c| alg.f(a, b, c) * x.chart[c]).sum();
                assert!((v - want).abs() < 1e-9);
            }
        }
        let not_closed = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(build_kks(alg, &not_closed), Err(Error::NotSubalgebra(_))));
    }

    #[test]
    fn pi_r_with_trivial_data_is_poisson() {
        let alg = su2();
        let cdr = full(&alg);
        let (m, pi) = build_pi_r_gspace(&cdr, &Multivector::zero(2)).unwrap();
        let mut rng = sample::rng(21);
        for _ in 0..2 {
            let x = sample::point(&m, &mut rng, 1.0, 1.0);
            let f = sample::function(&m, &mut rng);
            let g = sample::function(&m, &mut rng);
            let h = sample::function(&m, &mut rng);
            let j = m.jacobiator(&pi, &f, &g, &h, &x, FdConfig::nested()).unwrap();
            assert!(j.abs() < 1e-5, "{j}");
        }
    }

    #[test]
    fn sklyanin_vanishes_at_identity() {
        let alg = su2();
        let (m, pi) = build_sklyanin(alg, &Multivector::monomial(&[0, 2], 0.5));
        let mut rng = sample::rng(3);
        let f = sample::function(&m, &mut rng);
        let g = sample::function(&m, &mut rng);
        let e = Point::groups_only(vec![DMatrix::identity(4, 4)]);
        assert!(m.evaluate(&pi, &[f, g], &e, FdConfig::default()).unwrap().abs() < 1e-9);
    }

    #[test]
    fn trivial_data_is_invariant_and_a_poisson_action() {
        let alg = su2();
        let cdr = full(&alg);
        let (m, pi) = build_pi_r_gspace(&cdr, &Multivector::zero(2)).unwrap();
        let (gm, pg) = build_sklyanin(alg.clone(), &Multivector::zero(2));
        let mut rng = sample::rng(8);
        let x = sample::point(&m, &mut rng, 1.0, 1.0);
        let f = sample::function(&m, &mut rng);
        let g = sample::function(&m, &mut rng);
        let g1 = sample::group_element(&alg, &mut rng, 1.0);
        let d = poisson_action_defect(&m, &pi, &gm, &pg, &g1, &x, &f, &g, FdConfig::default()).unwrap();
        assert!(d.abs() < 1e-6, "{d}");
        let inv = h_invariance_defect(&cdr, &m, &pi, &[0.3, -0.4, 0.2], &x, &f, &g, FdConfig::default()).unwrap();
        assert!(inv.abs() < 1e-6, "{inv}");
    }
}
