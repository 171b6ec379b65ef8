//! Generalized dynamical r-matrices: triples `(pi_U, theta, r)` on a chart
//! `U`, the tensor operations entering their defining equations, the
//! verifiers, the projector onto the section-tangent part of the algebra, the
//! closed-form triple attached to a pair of conjugacy classes, gauge
//! transformations and the template triple for `iso(2,1)`.
//!
//! Mixed tensors in `Lambda(T U + g)` are [`Multivector`]s over the index set
//! `0..k` (chart directions) followed by `k..k+n` (algebra basis).
//!
//! Conventions: a triple describes the bivector
//! `pi_U + sum theta^{ia} d_i ^ rho(e_a) + rho(r)` for the homomorphic
//! generators `rho`. On the algebroid `T U + g` (algebra elements do not
//! differentiate functions on `U`) the element `Lambda = pi_U - theta-hat + r`
//! satisfies `1/2 [Lambda, Lambda] = Omega` exactly when the triple is a
//! generalized dynamical r-matrix for `Omega`; for triples coming from a
//! quasi-Poisson space, `Omega = -phi / 2`. The graded pieces of
//! `1/2 [Lambda, Lambda] - Omega` are, by number of chart legs:
//!
//! ```text
//! 3  1/2 [pi_U, pi_U]
//! 2  1/2 theta^theta + d_pi theta             (morphism defect)
//! 1  1/2 [theta, theta] - [r, theta] + pi#(dr) (compatibility defect)
//! 0  Alt(theta* dr) + 1/2 [r, r] - Omega       (dynamical YBE defect)
//! ```
//!
//! The signs in this table are checked by the unit tests.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::group::{adjoint, cayley_from, concat_columns, null_space, stabilizer, ConjugacyClass};
use crate::liealg::{Cobracket, QuadraticLieAlgebra};
use crate::manifold::{fd_matrix, fd_multivector, CrossSection, FdConfig, Point, ProductManifold};
use crate::multivector::Multivector;
use crate::schouten::{self, Derivatives, FrameAlgebra};
use crate::{Error, Result, Scalar};

pub type ChartMatrixFn<T> = Arc<dyn Fn(&[T]) -> DMatrix<T> + Send + Sync>;
pub type ChartMultivectorFn<T> = Arc<dyn Fn(&[T]) -> Multivector<T> + Send + Sync>;

/// `(pi_U, theta, r)` at one chart point.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleValue<T: Scalar> {
    /// Skew `k x k`.
    pub pi_u: DMatrix<T>,
    /// `k x n`, `theta = sum theta^{ia} d_i (x) e_a`.
    pub theta: DMatrix<T>,
    /// Degree 2 over the algebra indices.
    pub r: Multivector<T>,
}

impl<T: Scalar> TripleValue<T> {
    fn lin(a: &Self, b: &Self, ca: T, cb: T) -> Self {
        Self {
            pi_u: &a.pi_u * ca + &b.pi_u * cb,
            theta: &a.theta * ca + &b.theta * cb,
            r: &a.r.scale(ca) + &b.r.scale(cb),
        }
    }

    /// Largest absolute difference across the three components.
    pub fn distance(&self, other: &Self) -> T {
        let d1 = (&self.pi_u - &other.pi_u).amax();
        let d2 = (&self.theta - &other.theta).amax();
        d1.max(d2).max(self.r.distance(&other.r))
    }

    pub fn is_finite(&self) -> bool {
        self.pi_u.iter().chain(self.theta.iter()).all(|v| v.is_finite()) && self.r.terms().all(|(_, c)| c.is_finite())
    }

    /// `Lambda = pi_U - theta-hat + r` in mixed indices.
    pub fn lambda(&self) -> Multivector<T> {
        let k = self.pi_u.nrows();
        let mut out = Multivector::zero(2);
        for i in 0..k {
            for j in (i + 1)..k {
                out.add_term(&[i, j], self.pi_u[(i, j)]);
            }
            for a in 0..self.theta.ncols() {
                out.add_term(&[i, k + a], -self.theta[(i, a)]);
            }
        }
        &out + &self.r.map_indices(|a| a + k)
    }
}

/// A dynamical triple on an open box `U` of `R^k`.
#[derive(Clone)]
pub struct DynamicalTriple<T: Scalar> {
    alg: Arc<QuadraticLieAlgebra<T>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pi_u: ChartMatrixFn<T>,
    theta: ChartMatrixFn<T>,
    r: ChartMultivectorFn<T>,
}

impl<T: Scalar> std::fmt::Debug for DynamicalTriple<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DynamicalTriple")
            .field("algebra", &self.alg.name())
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> DynamicalTriple<T> {
    pub fn new(
        alg: Arc<QuadraticLieAlgebra<T>>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        pi_u: impl Fn(&[T]) -> DMatrix<T> + Send + Sync + 'static,
        theta: impl Fn(&[T]) -> DMatrix<T> + Send + Sync + 'static,
        r: impl Fn(&[T]) -> Multivector<T> + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(lower.len(), upper.len(), "chart box bounds differ in length");
        Self {
            alg,
            lower,
            upper,
            pi_u: Arc::new(pi_u),
            theta: Arc::new(theta),
            r: Arc::new(r),
        }
    }

    pub fn zero(alg: Arc<QuadraticLieAlgebra<T>>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let k = lower.len();
        let n = alg.dim();
        Self::new(
            alg,
            lower,
            upper,
            move |_| DMatrix::zeros(k, k),
            move |_| DMatrix::zeros(k, n),
            |_| Multivector::zero(2),
        )
    }

    /// A triple with constant components.
    pub fn constant(alg: Arc<QuadraticLieAlgebra<T>>, lower: Vec<f64>, upper: Vec<f64>, value: TripleValue<T>) -> Self {
        let (p, t, r) = (value.pi_u, value.theta, value.r);
        Self::new(
            alg,
            lower,
            upper,
            move |_| p.clone(),
            move |_| t.clone(),
            move |_| r.clone(),
        )
    }

    pub fn chart_dim(&self) -> usize {
        self.lower.len()
    }

    pub fn alg(&self) -> &QuadraticLieAlgebra<T> {
        &self.alg
    }

    pub fn alg_arc(&self) -> &Arc<QuadraticLieAlgebra<T>> {
        &self.alg
    }

    pub fn at(&self, alpha: &[T]) -> TripleValue<T> {
        TripleValue {
            pi_u: (self.pi_u)(alpha),
            theta: (self.theta)(alpha),
            r: (self.r)(alpha),
        }
    }

    /// Same triple with `r` replaced.
    pub fn with_r(&self, r: impl Fn(&[T]) -> Multivector<T> + Send + Sync + 'static) -> Self {
        let mut out = self.clone();
        out.r = Arc::new(r);
        out
    }

    /// Same triple with `r` multiplied by `s`.
    pub fn scale_r(&self, s: T) -> Self {
        let r = self.r.clone();
        self.with_r(move |a| r(a).scale(s))
    }

    pub fn check_interior(&self, alpha: &[T]) -> Result<()> {
        if alpha.len() != self.chart_dim() {
            return Err(Error::Dimension {
                expected: self.chart_dim(),
                got: alpha.len(),
            });
        }
        for (i, a) in alpha.iter().enumerate() {
            let v = a.as_f64();
            if !(v > self.lower[i] && v < self.upper[i]) {
                return Err(Error::Domain(format!(
                    "{:?}",
                    alpha.iter().map(|a| a.as_f64()).collect::<Vec<_>>()
                )));
            }
        }
        Ok(())
    }

    /// Value at `alpha` together with its partial derivatives.
    fn jet(&self, alpha: &[T], fd: FdConfig) -> Result<(TripleValue<T>, Vec<TripleValue<T>>)> {
        self.check_interior(alpha)?;
        let v = self.at(alpha);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("triple at {:?}", as_f64s(alpha))));
        }
        let shifted = |i: usize, h: T| {
            let mut a = alpha.to_vec();
            a[i] += h;
            a
        };
        let d = (0..self.chart_dim())
            .map(|i| TripleValue {
                pi_u: fd_matrix(fd, |h| (self.pi_u)(&shifted(i, h))),
                theta: fd_matrix(fd, |h| (self.theta)(&shifted(i, h))),
                r: fd_multivector(fd, |h| (self.r)(&shifted(i, h))),
            })
            .collect::<Vec<_>>();
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("triple derivative at {:?}", as_f64s(alpha))));
        }
        Ok((v, d))
    }

    /// Ratio test for smoothness: the largest relative change of the first
    /// derivatives when the step is halved. Below `0.1` counts as smooth.
    pub fn smoothness_ratio(&self, alpha: &[T], fd: FdConfig) -> Result<f64> {
        let (_, coarse) = self.jet(alpha, fd)?;
        let (_, fine) = self.jet(alpha, FdConfig::new(fd.step / 2.0, fd.richardson))?;
        let mut worst = 0.0f64;
        for (c, f) in coarse.iter().zip(&fine) {
            let scale = TripleValue::lin(f, f, T::one(), T::zero())
                .distance(&zero_like(f))
                .as_f64()
                .max(1e-8);
            worst = worst.max(c.distance(f).as_f64() / scale);
        }
        Ok(worst)
    }
}

fn zero_like<T: Scalar>(v: &TripleValue<T>) -> TripleValue<T> {
    TripleValue {
        pi_u: DMatrix::zeros(v.pi_u.nrows(), v.pi_u.ncols()),
        theta: DMatrix::zeros(v.theta.nrows(), v.theta.ncols()),
        r: Multivector::zero(2),
    }
}

fn as_f64s<T: Scalar>(a: &[T]) -> Vec<f64> {
    a.iter().map(|v| v.as_f64()).collect()
}

/// Frame of `T U + g`: chart directions commute with everything, algebra
/// indices close under the structure constants.
pub struct MixedFrame<'a, T: Scalar> {
    pub chart_dim: usize,
    pub alg: &'a QuadraticLieAlgebra<T>,
}

impl<T: Scalar> FrameAlgebra<T> for MixedFrame<'_, T> {
    fn frame_bracket(&self, i: usize, j: usize) -> Multivector<T> {
        let k = self.chart_dim;
        let mut out = Multivector::zero(1);
        if i >= k && j >= k {
            for c in 0..self.alg.dim() {
                out.add_term(&[k + c], self.alg.f(i - k, j - k, c));
            }
        }
        out
    }
}

/// Keeps the terms of a mixed tensor with exactly `legs` chart indices.
pub fn chart_legs<T: Scalar>(t: &Multivector<T>, k: usize, legs: usize) -> Multivector<T> {
    t.filter(|idx| idx.iter().filter(|&&i| i < k).count() == legs)
}

/// The tensor operations of the defining equations at one chart point, all
/// as mixed tensors.
#[derive(Clone, Debug)]
pub struct TensorOps<T: Scalar> {
    /// `[theta, theta] = sum_{a,b} [X_a, X_b] (x) e_a ^ e_b`, `X_a = sum_i theta^{ia} d_i`.
    pub theta_bracket: Multivector<T>,
    /// `theta ^ theta = sum_{a,b} X_a ^ X_b (x) [e_a, e_b]`.
    pub theta_wedge: Multivector<T>,
    /// `[r, theta] = sum_a X_a (x) ad_{e_a} r`.
    pub r_theta: Multivector<T>,
    /// `Alt(theta* dr) = sum_a e_a ^ X_a(r)`.
    pub alt_theta_dr: Multivector<T>,
    /// `pi#(dr) = sum_{i,j} pi^{ij} d_i (x) d_j r`.
    pub pi_sharp_dr: Multivector<T>,
    /// `d_pi theta = -sum_a [pi_U, X_a] (x) e_a`.
    pub d_pi_theta: Multivector<T>,
    /// `1/2 [r, r]` (Schouten bracket on the algebra).
    pub half_r_r: Multivector<T>,
}

fn vector_of_theta<T: Scalar>(theta: &DMatrix<T>, a: usize) -> Multivector<T> {
    let mut x = Multivector::zero(1);
    for i in 0..theta.nrows() {
        x.add_term(&[i], theta[(i, a)]);
    }
    x
}

fn chart_bivector<T: Scalar>(pi: &DMatrix<T>) -> Multivector<T> {
    crate::quasipoisson::chart_bivector(pi, 0)
}

pub fn tensor_ops<T: Scalar>(triple: &DynamicalTriple<T>, alpha: &[T], fd: FdConfig) -> Result<TensorOps<T>> {
    let (v, d) = triple.jet(alpha, fd)?;
    Ok(ops_from_jet(triple.alg(), &v, &d))
}

fn ops_from_jet<T: Scalar>(alg: &QuadraticLieAlgebra<T>, v: &TripleValue<T>, d: &[TripleValue<T>]) -> TensorOps<T> {
    let k = v.pi_u.nrows();
    let n = alg.dim();
    let th = &v.theta;
    let shift = |m: &Multivector<T>| m.map_indices(|a| a + k);
    let frame = MixedFrame { chart_dim: k, alg };

    let mut theta_bracket = Multivector::zero(3);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for i in 0..k {
                let mut c = T::zero();
                for j in 0..k {
                    c += th[(j, a)] * d[j].theta[(i, b)] - th[(j, b)] * d[j].theta[(i, a)];
                }
                theta_bracket.add_term(&[i, k + a, k + b], c);
            }
        }
    }

    let mut theta_wedge = Multivector::zero(3);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let f = alg.f(a, b, c);
                if f == T::zero() {
                    continue;
                }
                for i in 0..k {
                    for j in 0..k {
                        theta_wedge.add_term(&[i, j, k + c], f * th[(i, a)] * th[(j, b)]);
                    }
                }
            }
        }
    }

    let mut r_theta = Multivector::zero(3);
    let mut alt_theta_dr = Multivector::zero(3);
    let mut d_pi_theta = Multivector::zero(3);
    let pi = chart_bivector(&v.pi_u);
    let dpi: Derivatives<T> = (0..k).map(|j| (j, chart_bivector(&d[j].pi_u))).collect();
    for a in 0..n {
        let ea = alg.basis_vector(a);
        let ad_r = shift(&alg.ad_multivector(ea.as_slice(), &v.r));
        let xa = vector_of_theta(th, a);
        r_theta = &r_theta + &xa.wedge(&ad_r);
        let mut xr = Multivector::zero(2);
        for i in 0..k {
            xr = &xr + &d[i].r.scale(th[(i, a)]);
        }
        alt_theta_dr = &alt_theta_dr + &Multivector::basis(k + a).wedge(&shift(&xr));
        let dxa: Derivatives<T> = (0..k).map(|j| (j, vector_of_theta(&d[j].theta, a))).collect();
        let br = schouten::bracket(&frame, &pi, &dpi, &xa, &dxa);
        d_pi_theta = &d_pi_theta - &br.wedge(&Multivector::basis(k + a));
    }

    let mut pi_sharp_dr = Multivector::zero(3);
    for i in 0..k {
        for j in 0..k {
            let c = v.pi_u[(i, j)];
            if c != T::zero() {
                pi_sharp_dr = &pi_sharp_dr + &Multivector::basis(i).wedge(&shift(&d[j].r)).scale(c);
            }
        }
    }

    let half_r_r = shift(&schouten::algebraic_bracket(alg, &v.r, &v.r).scale(T::lit(0.5)));
    TensorOps {
        theta_bracket,
        theta_wedge,
        r_theta,
        alt_theta_dr,
        pi_sharp_dr,
        d_pi_theta,
        half_r_r,
    }
}

/// `Omega = -phi / 2` for the Cartan 3-tensor `phi`.
pub fn cartan_omega<T: Scalar>(alg: &QuadraticLieAlgebra<T>) -> Multivector<T> {
    alg.cartan_three_tensor().scale(T::lit(-0.5))
}

fn check_omega<T: Scalar>(alg: &QuadraticLieAlgebra<T>, omega: &Multivector<T>) -> Result<()> {
    if omega.degree() != 3 {
        return Err(Error::Input(format!(
            "Omega must have degree 3, got {}",
            omega.degree()
        )));
    }
    if omega.support().iter().any(|&i| i >= alg.dim()) {
        return Err(Error::NotImplemented(
            "Omega with components outside the algebra".into(),
        ));
    }
    Ok(())
}

/// `delta theta = sum theta^{ia} d_i (x) delta(e_a)`.
fn cobracket_of_theta<T: Scalar>(delta: &Cobracket<T>, theta: &DMatrix<T>) -> Multivector<T> {
    let k = theta.nrows();
    let mut out = Multivector::zero(3);
    for a in 0..theta.ncols() {
        let da = delta.of_basis(a).map_indices(|b| b + k);
        out = &out + &vector_of_theta(theta, a).wedge(&da);
    }
    out
}

/// `1/2 [theta, theta] - [r, theta] + pi#(dr)`, plus `delta theta` when a
/// cobracket is given.
pub fn compat_defect<T: Scalar>(
    triple: &DynamicalTriple<T>,
    alpha: &[T],
    delta: Option<&Cobracket<T>>,
    fd: FdConfig,
) -> Result<Multivector<T>> {
    let (v, d) = triple.jet(alpha, fd)?;
    let ops = ops_from_jet(triple.alg(), &v, &d);
    let mut out = &(&ops.theta_bracket.scale(T::lit(0.5)) - &ops.r_theta) + &ops.pi_sharp_dr;
    if let Some(delta) = delta {
        out = &out + &cobracket_of_theta(delta, &v.theta);
    }
    Ok(out)
}

/// `Alt(theta* dr) + 1/2 [r, r] - Omega`, plus `delta r` when a cobracket is
/// given. Returned over the algebra indices.
pub fn gdybe_defect<T: Scalar>(
    triple: &DynamicalTriple<T>,
    omega: &Multivector<T>,
    alpha: &[T],
    delta: Option<&Cobracket<T>>,
    fd: FdConfig,
) -> Result<Multivector<T>> {
    check_omega(triple.alg(), omega)?;
    let (v, d) = triple.jet(alpha, fd)?;
    let k = triple.chart_dim();
    let ops = ops_from_jet(triple.alg(), &v, &d);
    let mut out = &(&ops.alt_theta_dr + &ops.half_r_r) - &omega.map_indices(|a| a + k);
    if let Some(delta) = delta {
        out = &out + &delta.apply(&v.r)?.map_indices(|a| a + k);
    }
    Ok(out.map_indices(|i| i - k))
}

/// `1/2 theta ^ theta + d_pi theta`.
pub fn morphism_defect<T: Scalar>(triple: &DynamicalTriple<T>, alpha: &[T], fd: FdConfig) -> Result<Multivector<T>> {
    let ops = tensor_ops(triple, alpha, fd)?;
    Ok(&ops.theta_wedge.scale(T::lit(0.5)) + &ops.d_pi_theta)
}

/// `1/2 [Lambda, Lambda] - Omega` for `Lambda = pi_U - theta-hat + r`.
pub fn unified_defect<T: Scalar>(
    triple: &DynamicalTriple<T>,
    omega: &Multivector<T>,
    alpha: &[T],
    fd: FdConfig,
) -> Result<Multivector<T>> {
    check_omega(triple.alg(), omega)?;
    let (v, d) = triple.jet(alpha, fd)?;
    Ok(unified_from_jet(triple.alg(), omega, &v, &d))
}

fn unified_from_jet<T: Scalar>(
    alg: &QuadraticLieAlgebra<T>,
    omega: &Multivector<T>,
    v: &TripleValue<T>,
    d: &[TripleValue<T>],
) -> Multivector<T> {
    let k = v.pi_u.nrows();
    let lam = v.lambda();
    let dl: Derivatives<T> = d.iter().enumerate().map(|(i, x)| (i, x.lambda())).collect();
    let frame = MixedFrame { chart_dim: k, alg };
    let half = schouten::bracket(&frame, &lam, &dl, &lam, &dl).scale(T::lit(0.5));
    &half - &omega.map_indices(|a| a + k)
}

/// The unified defect next to the three componentwise defects, all from the
/// same finite-difference data.
#[derive(Clone, Debug)]
pub struct DefectSplit<T: Scalar> {
    pub unified: Multivector<T>,
    pub compat: Multivector<T>,
    /// Over the algebra indices.
    pub gdybe: Multivector<T>,
    pub morphism: Multivector<T>,
    /// `1/2 [pi_U, pi_U]`.
    pub chart: Multivector<T>,
}

impl<T: Scalar> DefectSplit<T> {
    /// Largest difference between each graded piece of the unified defect and
    /// the matching componentwise defect.
    pub fn mismatch(&self, k: usize) -> T {
        let u = &self.unified;
        let m0 = chart_legs(u, k, 0).distance(&self.gdybe.map_indices(|a| a + k));
        let m1 = chart_legs(u, k, 1).distance(&self.compat);
        let m2 = chart_legs(u, k, 2).distance(&self.morphism);
        let m3 = chart_legs(u, k, 3).distance(&self.chart);
        m0.max(m1).max(m2).max(m3)
    }

    pub fn max_componentwise(&self) -> T {
        self.compat
            .max_abs()
            .max(self.gdybe.max_abs())
            .max(self.morphism.max_abs())
    }
}

pub fn defect_split<T: Scalar>(
    triple: &DynamicalTriple<T>,
    omega: &Multivector<T>,
    alpha: &[T],
    fd: FdConfig,
) -> Result<DefectSplit<T>> {
    check_omega(triple.alg(), omega)?;
    let alg = triple.alg();
    let k = triple.chart_dim();
    let (v, d) = triple.jet(alpha, fd)?;
    let ops = ops_from_jet(alg, &v, &d);
    let compat = &(&ops.theta_bracket.scale(T::lit(0.5)) - &ops.r_theta) + &ops.pi_sharp_dr;
    let gdybe = (&(&ops.alt_theta_dr + &ops.half_r_r) - &omega.map_indices(|a| a + k)).map_indices(|i| i - k);
    let morphism = &ops.theta_wedge.scale(T::lit(0.5)) + &ops.d_pi_theta;
    let pi = chart_bivector(&v.pi_u);
    let dpi: Derivatives<T> = (0..k).map(|j| (j, chart_bivector(&d[j].pi_u))).collect();
    let frame = MixedFrame { chart_dim: k, alg };
    let chart = schouten::bracket(&frame, &pi, &dpi, &pi, &dpi).scale(T::lit(0.5));
    Ok(DefectSplit {
        unified: unified_from_jet(alg, omega, &v, &d),
        compat,
        gdybe,
        morphism,
        chart,
    })
}

// ---------------------------------------------------------------------------
// Projector and the closed-form triple of two conjugacy classes.

/// Matrix acting on `g` coefficient vectors as `u -> x u - u x`, read in the
/// ambient coordinates of a single group slot.
fn conjugation_generators<T: Scalar>(alg: &QuadraticLieAlgebra<T>, x: &DMatrix<T>) -> DMatrix<T> {
    let m = ProductManifold::new(Arc::new(alg.clone()), 0, 1);
    let p = Point::groups_only(vec![x.clone()]);
    let cols: Vec<DVector<T>> = (0..alg.dim())
        .map(|a| m.frame_vector(m.left(0, a), &p) - m.frame_vector(m.right(0, a), &p))
        .collect();
    DMatrix::from_columns(&cols)
}

/// Section of a single conjugacy class (one group slot, no chart).
fn section_frame<T: Scalar>(
    alg: &QuadraticLieAlgebra<T>,
    section: &CrossSection<T>,
    alpha: &[T],
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    section.check_interior(alpha)?;
    let m = ProductManifold::new(Arc::new(alg.clone()), 0, 1);
    let x = section.point(alpha);
    if x.groups.len() != 1 || !x.chart.is_empty() {
        return Err(Error::Input("class section must embed into a single group slot".into()));
    }
    let tangents = DMatrix::from_columns(&section.tangents(&m, alpha));
    Ok((x.groups[0].clone(), tangents))
}

/// Projection of `g` onto `g'_x = {u : u.x tangent to U}` along the
/// stabilizer `g_p` of `p`.
pub fn h_projector<T: Scalar>(
    alg: &QuadraticLieAlgebra<T>,
    section: &CrossSection<T>,
    p: &DMatrix<T>,
    alpha: &[T],
) -> Result<DMatrix<T>> {
    let (x, tangents) = section_frame(alg, section, alpha)?;
    let gp = stabilizer(alg, p)?.stab;
    h_from(alg, &x, &tangents, &gp)
}

fn h_from<T: Scalar>(
    alg: &QuadraticLieAlgebra<T>,
    x: &DMatrix<T>,
    tangents: &DMatrix<T>,
    gp: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let n = alg.dim();
    let gens = conjugation_generators(alg, x);
    // component of each generator normal to the section
    let tp = tangents
        .clone()
        .pseudo_inverse(T::lit(1e-12f64.max(T::noise_floor())))
        .map_err(|e| Error::Splitting(e.to_string()))?;
    let normal = &gens - tangents * (&tp * &gens);
    let (gprime, _, _) = null_space(&normal, 1e-8);
    if gprime.ncols() + gp.ncols() != n {
        return Err(Error::Splitting(format!(
            "dim g'_x = {} and dim g_p = {} do not add up to {n}",
            gprime.ncols(),
            gp.ncols()
        )));
    }
    let basis = concat_columns(&gprime, gp);
    let svd = basis.clone().svd(false, false);
    let cond = svd.singular_values.min() / svd.singular_values.max();
    if cond < T::lit(1e-8f64.max(T::noise_floor())) {
        return Err(Error::Splitting(format!(
            "g'_x and g_p nearly intersect (conditioning {:e})",
            cond.as_f64()
        )));
    }
    let inv = basis
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Splitting("singular splitting basis".into()))?;
    let mut keep = DMatrix::zeros(n, n);
    for i in 0..gprime.ncols() {
        keep[(i, i)] = T::one();
    }
    Ok(&basis * keep * inv)
}

/// Data for the closed-form triple of two classes `C_1 = class(p)` and
/// `C_2`, with a cross-section `U` of the `G_p`-action on `C_2`.
#[derive(Clone)]
pub struct ModuliData<T: Scalar> {
    alg: Arc<QuadraticLieAlgebra<T>>,
    p: DMatrix<T>,
    gp: DMatrix<T>,
    cayley_p: DMatrix<T>,
    section: CrossSection<T>,
}

/// Weight of the Cayley operator in the restriction of `pi_G` to a class,
/// written in the conjugation frame `X = L - R`: `pi = w sum C_ab X_a ^ X_b`.
pub const CLASS_CAYLEY_WEIGHT: f64 = 0.25;

impl<T: Scalar> ModuliData<T> {
    pub fn new(alg: Arc<QuadraticLieAlgebra<T>>, p: DMatrix<T>, section: CrossSection<T>) -> Result<Self> {
        let st = stabilizer(&alg, &p)?;
        let cayley_p = cayley_from(&st)?;
        Ok(Self {
            gp: st.stab,
            alg,
            p,
            cayley_p,
            section,
        })
    }

    pub fn alg(&self) -> &QuadraticLieAlgebra<T> {
        &self.alg
    }

    pub fn base_point(&self) -> &DMatrix<T> {
        &self.p
    }

    pub fn section(&self) -> &CrossSection<T> {
        &self.section
    }

    pub fn h_at(&self, alpha: &[T]) -> Result<DMatrix<T>> {
        let (x, tangents) = section_frame(&self.alg, &self.section, alpha)?;
        h_from(&self.alg, &x, &tangents, &self.gp)
    }

    /// The triple at `alpha`, from splitting the class generators along
    /// `T U` and the diagonal orbit:
    /// `X^1_a = -V_a + rho(H e_a)`, `X^2_a = V_a + rho(e_a - H e_a)` with
    /// `V_a` the tangent field of `H e_a` on `U`.
    pub fn value(&self, alpha: &[T]) -> Result<TripleValue<T>> {
        let alg = &*self.alg;
        let n = alg.dim();
        let k = self.section.dim;
        let (x, tangents) = section_frame(alg, &self.section, alpha)?;
        let h = h_from(alg, &x, &tangents, &self.gp)?;
        let cayley_x = cayley_from(&stabilizer(alg, &x)?)?;
        let gens = conjugation_generators(alg, &x);
        let svd = tangents.clone().svd(true, true);
        let v = svd
            .solve(&(&gens * &h), T::lit(1e-12f64.max(T::noise_floor())))
            .map_err(|e| Error::Transversality(e.to_string()))?;
        let id = DMatrix::<T>::identity(n, n);
        let b = &id - &h;
        let mixed = |chart: DVector<T>, alg_part: DVector<T>| {
            let mut dense = chart.as_slice().to_vec();
            dense.extend_from_slice(alg_part.as_slice());
            Multivector::from_vector(&dense)
        };
        let y1: Vec<Multivector<T>> = (0..n)
            .map(|a| mixed(-v.column(a).into_owned(), h.column(a).into_owned()))
            .collect();
        let y2: Vec<Multivector<T>> = (0..n)
            .map(|a| mixed(v.column(a).into_owned(), b.column(a).into_owned()))
            .collect();
        let w = T::lit(CLASS_CAYLEY_WEIGHT);
        let kinv = alg.casimir();
        let mut pi = Multivector::zero(2);
        for a in 0..n {
            for c in 0..n {
                let cp = self.cayley_p[(a, c)] * w;
                if cp != T::zero() {
                    pi = &pi + &y1[a].wedge(&y1[c]).scale(cp);
                }
                let cx = cayley_x[(a, c)] * w;
                if cx != T::zero() {
                    pi = &pi + &y2[a].wedge(&y2[c]).scale(cx);
                }
                let kk = kinv[(a, c)] * T::lit(0.5);
                if kk != T::zero() {
                    pi = &pi + &y1[a].wedge(&y2[c]).scale(kk);
                }
            }
        }
        let mut out = TripleValue {
            pi_u: DMatrix::zeros(k, k),
            theta: DMatrix::zeros(k, n),
            r: Multivector::zero(2),
        };
        for (idx, c) in pi.terms() {
            let (i, j) = (idx[0], idx[1]);
            match (i < k, j < k) {
                (true, true) => {
                    out.pi_u[(i, j)] += c;
                    out.pi_u[(j, i)] -= c;
                }
                (true, false) => out.theta[(i, j - k)] += c,
                _ => out.r.add_term(&[i - k, j - k], c),
            }
        }
        Ok(out)
    }

    /// The section `alpha -> (p, x(alpha))` of `C_1 x C_2`.
    pub fn pair_section(&self) -> CrossSection<T> {
        let p = self.p.clone();
        let inner = self.section.clone();
        let inner_t = self.section.clone();
        let alg = self.alg.clone();
        let size = alg.rep_size();
        let single = ProductManifold::new(alg, 0, 1);
        let mut s = CrossSection::new(inner.dim, inner.lower.clone(), inner.upper.clone(), move |a: &[T]| {
            let x = inner.point(a);
            Point::groups_only(vec![p.clone(), x.groups[0].clone()])
        });
        s = s.with_tangent(move |a: &[T]| {
            inner_t
                .tangents(&single, a)
                .into_iter()
                .map(|t| {
                    let mut v = DVector::zeros(2 * size * size);
                    v.rows_mut(size * size, size * size).copy_from(&t);
                    v
                })
                .collect()
        });
        s
    }
}

/// The closed-form triple of two conjugacy classes as a [`DynamicalTriple`].
/// Points where the construction breaks down evaluate to NaN, which the
/// verifiers report as non-finite.
pub fn moduli_triple<T: Scalar>(data: &ModuliData<T>) -> DynamicalTriple<T> {
    let k = data.section.dim;
    let n = data.alg.dim();
    let eval = {
        let d = data.clone();
        move |a: &[T]| {
            d.value(a).unwrap_or_else(|_| TripleValue {
                pi_u: DMatrix::from_element(k, k, T::lit(f64::NAN)),
                theta: DMatrix::from_element(k, n, T::lit(f64::NAN)),
                r: Multivector::monomial(&[0, 1], T::lit(f64::NAN)),
            })
        }
    };
    let (e1, e2, e3) = (eval.clone(), eval.clone(), eval);
    DynamicalTriple::new(
        data.alg.clone(),
        data.section.lower.clone(),
        data.section.upper.clone(),
        move |a| e1(a).pi_u,
        move |a| e2(a).theta,
        move |a| e3(a).r,
    )
}

/// The great half-circle `x(alpha) = cos(alpha) e_1 + sin(alpha) e_2`,
/// `|alpha| < pi/2`, in the class of `e_2` in `SU(2)`. It is a cross-section
/// for conjugation by the torus `exp(R e_2)`.
pub fn su2_meridian_section<T: Scalar>(alg: Arc<QuadraticLieAlgebra<T>>) -> CrossSection<T> {
    let half = std::f64::consts::FRAC_PI_2;
    let a1 = alg.clone();
    let size = alg.rep_size();
    CrossSection::new(1, vec![-half], vec![half], move |a: &[T]| {
        Point::groups_only(vec![a1.matrix(&[a[0].cos(), a[0].sin(), T::zero()])])
    })
    .with_tangent(move |a: &[T]| {
        let t = alg.matrix(&[-a[0].sin(), a[0].cos(), T::zero()]);
        debug_assert_eq!(t.nrows(), size);
        vec![DVector::from_column_slice(t.as_slice())]
    })
}

/// The base point `e_2` (a torus element) used with [`su2_meridian_section`].
pub fn su2_torus_point<T: Scalar>(alg: &QuadraticLieAlgebra<T>) -> DMatrix<T> {
    alg.matrix(&[T::zero(), T::one(), T::zero()])
}

/// `ModuliData` for `SU(2)`, both classes the class of `e_2`, with the
/// meridian section.
pub fn su2_moduli<T: Scalar>(alg: Arc<QuadraticLieAlgebra<T>>) -> Result<ModuliData<T>> {
    let p = su2_torus_point(&alg);
    let section = su2_meridian_section(alg.clone());
    ModuliData::new(alg, p, section)
}

/// The class of the base point as a [`ConjugacyClass`].
pub fn base_class<T: Scalar>(data: &ModuliData<T>) -> Result<ConjugacyClass<T>> {
    ConjugacyClass::new(&data.alg, data.p.clone())
}

// ---------------------------------------------------------------------------
// Gauge transformations.

pub type GaugeMap<T> = Arc<dyn Fn(&[T]) -> DMatrix<T> + Send + Sync>;

/// `Theta_i = g^-1 d_i g` as algebra coefficients.
pub fn pulled_back_maurer_cartan<T: Scalar>(
    alg: &QuadraticLieAlgebra<T>,
    g: &GaugeMap<T>,
    alpha: &[T],
    k: usize,
    fd: FdConfig,
) -> Result<DMatrix<T>> {
    let g0 = g(alpha);
    let gi = g0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NonFinite("gauge map is not invertible".into()))?;
    let mut out = DMatrix::zeros(k, alg.dim());
    for i in 0..k {
        let dg = fd_matrix(fd, |h| {
            let mut a = alpha.to_vec();
            a[i] += h;
            g(&a)
        });
        let c = alg.coords(&(&gi * dg));
        out.row_mut(i).copy_from(&c.transpose());
    }
    Ok(out)
}

/// Pushes an algebra multivector through a linear map of `g`.
pub fn push_multivector<T: Scalar>(m: &DMatrix<T>, a: &Multivector<T>) -> Multivector<T> {
    a.substitute(|i| Multivector::from_vector(m.column(i).as_slice()))
}

/// `theta^g_i = Ad_g(theta_i + sum_j pi^{ij} Theta_j)` and
/// `r^g = (Ad_g (x) Ad_g)(r + sum_i Theta_i ^ theta_i + 1/2 sum pi^{ij} Theta_i ^ Theta_j)`
/// with `Theta = g^-1 dg`. Here `theta_i` is row `i` of `theta` and the
/// wedge is antisymmetrised without a factor.
pub fn gauge_value<T: Scalar>(
    alg: &QuadraticLieAlgebra<T>,
    v: &TripleValue<T>,
    g: &DMatrix<T>,
    mc: &DMatrix<T>,
) -> Result<TripleValue<T>> {
    let k = v.pi_u.nrows();
    let ad = adjoint(alg, g)?;
    let shifted = &v.theta + &v.pi_u * mc;
    let theta = (&ad * shifted.transpose()).transpose();
    let mut r = v.r.clone();
    let row = |m: &DMatrix<T>, i: usize| Multivector::from_vector(m.row(i).transpose().as_slice());
    for i in 0..k {
        r = &r + &row(mc, i).wedge(&row(&v.theta, i));
        for j in 0..k {
            let c = v.pi_u[(i, j)] * T::lit(0.5);
            if c != T::zero() {
                r = &r + &row(mc, i).wedge(&row(mc, j)).scale(c);
            }
        }
    }
    Ok(TripleValue {
        pi_u: v.pi_u.clone(),
        theta,
        r: push_multivector(&ad, &r),
    })
}

pub fn gauge_transform<T: Scalar>(triple: &DynamicalTriple<T>, gmap: GaugeMap<T>, fd: FdConfig) -> DynamicalTriple<T> {
    let k = triple.chart_dim();
    let n = triple.alg().dim();
    let tr = triple.clone();
    let eval = move |a: &[T]| -> TripleValue<T> {
        let v = tr.at(a);
        let res = pulled_back_maurer_cartan(tr.alg(), &gmap, a, k, fd)
            .and_then(|mc| gauge_value(tr.alg(), &v, &gmap(a), &mc));
        res.unwrap_or_else(|_| TripleValue {
            pi_u: v.pi_u.clone(),
            theta: DMatrix::from_element(k, n, T::lit(f64::NAN)),
            r: Multivector::monomial(&[0, 1], T::lit(f64::NAN)),
        })
    };
    let eval = Arc::new(eval);
    let (e1, e2) = (eval.clone(), eval);
    let pi = triple.pi_u.clone();
    DynamicalTriple {
        alg: triple.alg.clone(),
        lower: triple.lower.clone(),
        upper: triple.upper.clone(),
        pi_u: pi,
        theta: Arc::new(move |a| e1(a).theta),
        r: Arc::new(move |a| e2(a).r),
    }
}

// ---------------------------------------------------------------------------
// iso(2,1) template.

pub type ChartVectorFn<T> = Arc<dyn Fn(&[T]) -> [T; 3] + Send + Sync>;
pub type ChartFrameFn<T> = Arc<dyn Fn(T) -> [[T; 3]; 3] + Send + Sync>;

/// Maps defining the `iso(2,1)` template on the chart `(psi, alpha)`.
#[derive(Clone)]
pub struct Iso21Maps<T: Scalar> {
    pub q_psi: ChartVectorFn<T>,
    pub q_alpha: ChartVectorFn<T>,
    pub q_delta: ChartVectorFn<T>,
    pub m: ChartVectorFn<T>,
    /// `V^{bc}(psi)`.
    pub v: ChartFrameFn<T>,
}

impl<T: Scalar> Iso21Maps<T> {
    pub fn zero() -> Self {
        let z: ChartVectorFn<T> = Arc::new(|_| [T::zero(); 3]);
        Self {
            q_psi: z.clone(),
            q_alpha: z.clone(),
            q_delta: z.clone(),
            m: z,
            v: Arc::new(|_| [[T::zero(); 3]; 3]),
        }
    }
}

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `theta = q_alpha^a d_alpha (x) J_a + q_psi^a d_psi (x) P_a + q_delta^a d_alpha (x) P_a`,
/// `r = -V^{bc} P_b ^ J^c + eps^{bcd} m_d P_b (x) P_c`, `pi_U = 0`, with
/// `J^c = eta^{cc} J_c`, `eta = diag(1, -1, -1)`, `eps_{012} = 1` and chart
/// order `(psi, alpha)`. The algebra must be `iso(2,1)` with basis
/// `J_0..J_2, P_0..P_2`.
pub fn iso21_triple<T: Scalar>(
    alg: Arc<QuadraticLieAlgebra<T>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    maps: Iso21Maps<T>,
) -> Result<DynamicalTriple<T>> {
    if alg.dim() != 6 || lower.len() != 2 || upper.len() != 2 {
        return Err(Error::Input(
            "the iso(2,1) template needs a 6-dimensional algebra and a 2-dimensional chart".into(),
        ));
    }
    let eta = [1.0, -1.0, -1.0];
    let mt = maps.clone();
    let theta = move |a: &[T]| {
        let (qp, qa, qd) = ((mt.q_psi)(a), (mt.q_alpha)(a), (mt.q_delta)(a));
        let mut t = DMatrix::zeros(2, 6);
        for c in 0..3 {
            t[(1, c)] = qa[c];
            t[(0, 3 + c)] = qp[c];
            t[(1, 3 + c)] = qd[c];
        }
        t
    };
    let r = move |a: &[T]| {
        let v = (maps.v)(a[0]);
        let m = (maps.m)(a);
        let mut out = Multivector::zero(2);
        for b in 0..3 {
            for c in 0..3 {
                out.add_term(&[3 + b, c], -v[b][c] * T::lit(eta[c]));
                for d in 0..3 {
                    // eps^{bcd} = eps_{bcd} after raising all three with eta
                    let e = levi_civita(b, c, d) * eta[b] * eta[c] * eta[d];
                    if e != 0.0 && b < c {
                        out.add_term(&[3 + b, 3 + c], T::lit(e) * m[d]);
                    }
                }
            }
        }
        out
    };
    Ok(DynamicalTriple::new(
        alg,
        lower,
        upper,
        |_| DMatrix::zeros(2, 2),
        theta,
        r,
    ))
}
