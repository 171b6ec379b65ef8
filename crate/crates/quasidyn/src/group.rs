//! Matrix group calculus: exponential and logarithm, adjoint action,
//! stabilizers of conjugation and the Cayley operator on conjugacy classes.

use nalgebra::{DMatrix, DVector};

use crate::liealg::QuadraticLieAlgebra;
use crate::multivector::Multivector;
use crate::{Error, Result, Scalar};

/// Default radius of `|g - 1|` (spectral norm) inside which the logarithm is
/// accepted.
pub const LOG_RADIUS: f64 = 0.9;

/// Relative singular-value threshold below which a direction counts as
/// belonging to the stabilizer.
pub const KERNEL_THRESHOLD: f64 = 1e-8;

/// `exp(sum x_a e_a)` in the algebra's representation (Pade approximant with
/// scaling and squaring, as provided by nalgebra).
pub fn exponential<T: Scalar>(alg: &QuadraticLieAlgebra<T>, x: &[T]) -> DMatrix<T> {
    alg.matrix(x).exp()
}

fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Matrix logarithm by inverse scaling and squaring: square roots (Denman-Beavers)
/// until the argument is close to the identity, then the series of
/// `log(1 + y)`.
pub fn matrix_log<T: Scalar>(g: &DMatrix<T>, radius: f64) -> Result<DMatrix<T>> {
    let m = g.nrows();
    let id = DMatrix::<T>::identity(m, m);
    let dist = spectral_norm(&(g - &id));
    if dist.as_f64() >= radius {
        return Err(Error::LogDomain {
            norm: dist.as_f64(),
            radius,
        });
    }
    let mut a = g.clone();
    let mut squarings = 0u32;
    while spectral_norm(&(&a - &id)) > T::lit(0.05) && squarings < 40 {
        a = sqrt_db(&a)?;
        squarings += 1;
    }
    let y = &a - &id;
    // log(1+y) = sum (-1)^(k+1) y^k / k
    let mut term = y.clone();
    let mut out = y.clone();
    for k in 2..200 {
        term = &term * &y;
        let c = T::lit(if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64);
        let add = &term * c;
        let small = add.amax() < T::default_epsilon() * T::lit(1e-2);
        out += add;
        if small {
            break;
        }
    }
    Ok(out * T::lit(2f64.powi(squarings as i32)))
}

/// Principal square root by the Denman-Beavers iteration.
fn sqrt_db<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let m = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<T>::identity(m, m);
    let half = T::lit(0.5);
    for _ in 0..100 {
        let yi = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NonFinite("square root iteration hit a singular matrix".into()))?;
        let zi = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NonFinite("square root iteration hit a singular matrix".into()))?;
        let yn = (&y + zi) * half;
        let zn = (&z + yi) * half;
        let delta = (&yn - &y).amax();
        y = yn;
        z = zn;
        if delta < T::default_epsilon() * T::lit(10.0) {
            break;
        }
    }
    Ok(y)
}

/// Algebra coordinates of `log g` for `g` near the identity.
pub fn logarithm<T: Scalar>(alg: &QuadraticLieAlgebra<T>, g: &DMatrix<T>) -> Result<DVector<T>> {
    logarithm_within(alg, g, LOG_RADIUS)
}

pub fn logarithm_within<T: Scalar>(alg: &QuadraticLieAlgebra<T>, g: &DMatrix<T>, radius: f64) -> Result<DVector<T>> {
    Ok(alg.coords(&matrix_log(g, radius)?))
}

/// Matrix of `x -> g x g^-1` in the algebra basis.
pub fn adjoint<T: Scalar>(alg: &QuadraticLieAlgebra<T>, g: &DMatrix<T>) -> Result<DMatrix<T>> {
    let gi = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Input("group element is not invertible".into()))?;
    let n = alg.dim();
    let cols: Vec<DVector<T>> = (0..n).map(|a| alg.coords(&(g * alg.rep(a) * &gi))).collect();
    Ok(if n == 0 {
        DMatrix::zeros(0, 0)
    } else {
        DMatrix::from_columns(&cols)
    })
}

/// Stabilizer algebra of `g` under conjugation and its `K`-orthogonal
/// complement.
#[derive(Clone, Debug)]
pub struct Stabilizer<T: Scalar> {
    /// Columns span `g_g = ker(Ad_g - 1)`.
    pub stab: DMatrix<T>,
    /// Columns span the `K`-orthogonal complement.
    pub perp: DMatrix<T>,
    /// Ratio of the largest discarded to the smallest kept singular value of
    /// `Ad_g - 1` (small means a clean gap).
    pub gap_ratio: f64,
    pub ad: DMatrix<T>,
}

impl<T: Scalar> Stabilizer<T> {
    pub fn stab_dim(&self) -> usize {
        self.stab.ncols()
    }

    /// Projection onto the complement along the stabilizer.
    pub fn perp_projector(&self) -> Result<DMatrix<T>> {
        let n = self.ad.nrows();
        if self.perp.ncols() == 0 {
            return Ok(DMatrix::zeros(n, n));
        }
        if self.stab.ncols() == 0 {
            return Ok(DMatrix::identity(n, n));
        }
        let basis = concat_columns(&self.stab, &self.perp);
        let inv = basis.try_inverse().ok_or({ Error::Degenerate(0.0) })?;
        let s = self.stab.ncols();
        let rows = inv.rows(s, n - s).into_owned();
        Ok(&self.perp * rows)
    }
}

pub(crate) fn concat_columns<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows().max(b.nrows()), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Right null space of `m` by singular-value thresholding relative to the
/// largest singular value. Returns the basis and the smallest kept singular
/// value next to the largest discarded one.
pub(crate) fn null_space<T: Scalar>(m: &DMatrix<T>, rel: f64) -> (DMatrix<T>, T, T) {
    let cols = m.ncols();
    // pad to a square so the SVD exposes every right singular vector
    let rows = m.nrows().max(cols);
    let mut sq = DMatrix::zeros(rows, cols);
    sq.rows_mut(0, m.nrows()).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let cut = T::lit(rel.max(T::noise_floor())) * smax.max(T::lit(1e-300));
    let mut kernel = Vec::new();
    let mut min_kept = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    let mut max_dropped = T::zero();
    for (i, &s) in sv.iter().enumerate() {
        if s <= cut || smax == T::zero() {
            kernel.push(vt.row(i).transpose());
            max_dropped = max_dropped.max(s);
        } else {
            min_kept = min_kept.min(s);
        }
    }
    let basis = if kernel.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&kernel)
    };
    (basis, min_kept, max_dropped)
}

pub fn stabilizer<T: Scalar>(alg: &QuadraticLieAlgebra<T>, g: &DMatrix<T>) -> Result<Stabilizer<T>> {
    stabilizer_with(alg, g, KERNEL_THRESHOLD)
}

pub fn stabilizer_with<T: Scalar>(alg: &QuadraticLieAlgebra<T>, g: &DMatrix<T>, rel: f64) -> Result<Stabilizer<T>> {
    let n = alg.dim();
    let ad = adjoint(alg, g)?;
    let a = &ad - DMatrix::identity(n, n);
    let (stab, min_kept, max_dropped) = null_space(&a, rel);
    let gap_ratio = if stab.ncols() == n || stab.ncols() == 0 {
        0.0
    } else {
        (max_dropped / min_kept).as_f64()
    };
    // K-orthogonal complement: null space of stab^T K
    let perp = if stab.ncols() == 0 {
        DMatrix::identity(n, n)
    } else {
        let c = stab.transpose() * alg.pairing();
        null_space(&c, 1e-10).0
    };
    if stab.ncols() + perp.ncols() != n {
        return Err(Error::Degenerate(0.0));
    }
    Ok(Stabilizer {
        stab,
        perp,
        gap_ratio,
        ad,
    })
}

/// A conjugacy class carried by its base point.
#[derive(Clone, Debug)]
pub struct ConjugacyClass<T: Scalar> {
    pub base: DMatrix<T>,
    pub stabilizer: Stabilizer<T>,
}

impl<T: Scalar> ConjugacyClass<T> {
    pub fn new(alg: &QuadraticLieAlgebra<T>, base: DMatrix<T>) -> Result<Self> {
        let stabilizer = stabilizer(alg, &base)?;
        Ok(Self { base, stabilizer })
    }

    /// Class dimension.
    pub fn dim(&self) -> usize {
        self.stabilizer.perp.ncols()
    }
}

/// `(Ad_g + 1)(Ad_g - 1)^-1` on the stabilizer complement, composed with the
/// projection onto that complement.
pub fn cayley_operator<T: Scalar>(alg: &QuadraticLieAlgebra<T>, g: &DMatrix<T>) -> Result<DMatrix<T>> {
    let st = stabilizer(alg, g)?;
    cayley_from(&st)
}

pub fn cayley_from<T: Scalar>(st: &Stabilizer<T>) -> Result<DMatrix<T>> {
    let n = st.ad.nrows();
    let p = st.perp.ncols();
    if p == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let id = DMatrix::<T>::identity(n, n);
    let m = (&st.ad - &id) * &st.perp;
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.min();
    let smax = svd.singular_values.max();
    if smin <= T::lit(1e-10f64.max(T::noise_floor())) * smax.max(T::one()) {
        return Err(Error::Degenerate(smin.as_f64()));
    }
    // y = (M^T M)^-1 M^T v solves M y = v for v in the complement
    let gram = m.transpose() * &m;
    let gi = gram.try_inverse().ok_or(Error::Degenerate(smin.as_f64()))?;
    let restricted_inv = &st.perp * gi * m.transpose();
    let pr = st.perp_projector()?;
    Ok((&st.ad + &id) * restricted_inv * pr)
}

/// Half the Cayley operator read as coefficients `c_ab` of `sum c_ab X_a ^ X_b`
/// in the conjugation frame. The class bivector is the restriction of
/// `sum R_a ^ L_a` to the class.
pub fn class_bivector<T: Scalar>(alg: &QuadraticLieAlgebra<T>, g: &DMatrix<T>) -> Result<Multivector<T>> {
    let c = cayley_operator(alg, g)?;
    let n = alg.dim();
    let mut out = Multivector::zero(2);
    for a in 0..n {
        for b in 0..n {
            out.add_term(&[a, b], T::lit(0.5) * c[(a, b)]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn su2() -> QuadraticLieAlgebra<f64> {
        QuadraticLieAlgebra::su2()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let g = su2();
        let e = exponential(&g, &[0.0, 0.0, 0.0]);
        assert!((e - DMatrix::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn exp_of_diagonal_generator() {
        let g = su2();
        let t = 0.3;
        let e = exponential(&g, &[0.0, t, 0.0]);
        // realified diag(e^{it}, e^{-it})
        let (c, s) = (t.cos(), t.sin());
        let mut want = DMatrix::zeros(4, 4);
        for (i, sign) in [(0, 1.0), (1, -1.0)] {
            want[(i, i)] = c;
            want[(i + 2, i + 2)] = c;
            want[(i + 2, i)] = sign * s;
            want[(i, i + 2)] = -sign * s;
        }
        assert!((e - want).amax() < 1e-14);
    }

    #[test]
    fn log_inverts_exp() {
        let g = su2();
        let x = [0.2, -0.3, 0.25];
        let e = exponential(&g, &x);
        let y = logarithm(&g, &e).unwrap();
        for a in 0..3 {
            assert!((y[a] - x[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn log_outside_radius_errors() {
        let g = su2();
        let e = exponential(&g, &[0.0, 1.5, 0.0]);
        assert!(matches!(logarithm(&g, &e), Err(Error::LogDomain { .. })));
    }

    #[test]
    fn adjoint_of_torus_rotates_by_twice_the_angle() {
        let g = su2();
        let beta = 0.4;
        let ad = adjoint(&g, &exponential(&g, &[0.0, beta, 0.0])).unwrap();
        assert!((ad[(1, 1)] - 1.0).abs() < 1e-13);
        let (c, s) = ((2.0 * beta).cos(), (2.0 * beta).sin());
        assert!((ad[(0, 0)] - c).abs() < 1e-13);
        assert!((ad[(2, 2)] - c).abs() < 1e-13);
        assert!((ad[(0, 2)].abs() - s).abs() < 1e-13);
    }

    #[test]
    fn stabilizer_of_torus_point() {
        let g = su2();
        let p = g.rep(1).clone();
        let st = stabilizer(&g, &p).unwrap();
        assert_eq!(st.stab_dim(), 1);
        assert!(st.stab[(0, 0)].abs() < 1e-12 && st.stab[(2, 0)].abs() < 1e-12);
        assert_eq!(st.perp.ncols(), 2);
        let id = stabilizer(&g, &DMatrix::identity(4, 4)).unwrap();
        assert_eq!(id.stab_dim(), 3);
        assert!(cayley_from(&id).unwrap().amax() == 0.0);
    }

    #[test]
    fn cayley_at_torus_element() {
        let g = su2();
        let beta = 0.4;
        let c = cayley_operator(&g, &exponential(&g, &[0.0, beta, 0.0])).unwrap();
        let cot = 1.0 / beta.tan();
        // -cot(beta) J on span{e1, e3}, zero on e2
        assert!(c[(0, 0)].abs() < 1e-12 && c[(2, 2)].abs() < 1e-12);
        assert!((c[(0, 2)].abs() - cot).abs() < 1e-12);
        assert!((c[(0, 2)] + c[(2, 0)]).abs() < 1e-12);
        assert!(c.column(1).amax() < 1e-12 && c.row(1).amax() < 1e-12);
    }
}
