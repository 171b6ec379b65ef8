//! Product manifolds `R^k x G^s` with a global overcomplete frame, finite
//! differences along frame flows, multivector fields written in that frame and
//! their Schouten brackets.
//!
//! Frame layout for a manifold with chart dimension `k`, `s` group slots and
//! algebra dimension `n`:
//!
//! | index                 | field                       | flow                        |
//! |-----------------------|-----------------------------|-----------------------------|
//! | `i < k`               | `d/dx_i`                    | `x_i += t`                  |
//! | `k + 2 n j + a`       | `L_a` on slot `j`           | `g_j <- g_j exp(t e_a)`     |
//! | `k + 2 n j + n + a`   | `R_a` on slot `j`           | `g_j <- exp(t e_a) g_j`     |
//!
//! `[L_a, L_b] = L_[a,b]`, `[R_a, R_b] = -R_[a,b]`, every other pair commutes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::group::exponential;
use crate::liealg::QuadraticLieAlgebra;
use crate::multivector::Multivector;
use crate::schouten::{self, Derivatives, FrameAlgebra};
use crate::{Error, Result, Scalar};

/// A point of `R^k x G^s`; group slots hold matrices of the representation.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<T: Scalar> {
    pub chart: Vec<T>,
    pub groups: Vec<DMatrix<T>>,
}

impl<T: Scalar> Point<T> {
    pub fn new(chart: Vec<T>, groups: Vec<DMatrix<T>>) -> Self {
        Self { chart, groups }
    }

    pub fn chart_only(chart: Vec<T>) -> Self {
        Self {
            chart,
            groups: Vec::new(),
        }
    }

    pub fn groups_only(groups: Vec<DMatrix<T>>) -> Self {
        Self {
            chart: Vec::new(),
            groups,
        }
    }

    /// Flat list of every coordinate (chart first, then matrices column-major).
    pub fn ambient(&self) -> Vec<f64> {
        self.chart
            .iter()
            .chain(self.groups.iter().flat_map(|g| g.iter()))
            .map(|v| v.as_f64())
            .collect()
    }
}

pub type ScalarFn<T> = Arc<dyn Fn(&Point<T>) -> T + Send + Sync>;
pub type CoeffFn<T> = Arc<dyn Fn(&Point<T>) -> Multivector<T> + Send + Sync>;

/// Wraps a closure as a [`ScalarFn`].
pub fn scalar_fn<T: Scalar>(f: impl Fn(&Point<T>) -> T + Send + Sync + 'static) -> ScalarFn<T> {
    Arc::new(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameField {
    Chart(usize),
    Left { slot: usize, a: usize },
    Right { slot: usize, a: usize },
}

/// Finite-difference settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    /// Combine steps `h` and `h/2` to cancel the `h^2` error term.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            richardson: false,
        }
    }
}

impl FdConfig {
    pub fn new(step: f64, richardson: bool) -> Self {
        Self { step, richardson }
    }

    /// Step suited to nested differences (Jacobiators).
    pub fn nested() -> Self {
        Self {
            step: 1e-4,
            richardson: false,
        }
    }
}

/// Central difference of a vector-valued function of `t` at 0.
fn central<V, F>(fd: FdConfig, eval: F) -> V
where
    F: Fn(f64) -> V,
    V: Combine,
{
    let d = |h: f64| V::lin(&eval(h), &eval(-h), 0.5 / h, -0.5 / h);
    if fd.richardson {
        let coarse = d(fd.step);
        let fine = d(fd.step / 2.0);
        V::lin(&fine, &coarse, 4.0 / 3.0, -1.0 / 3.0)
    } else {
        d(fd.step)
    }
}

/// Values that can be linearly combined by the difference formulas.
trait Combine: Sized {
    fn lin(a: &Self, b: &Self, ca: f64, cb: f64) -> Self;
}

impl Combine for f64 {
    fn lin(a: &Self, b: &Self, ca: f64, cb: f64) -> Self {
        a * ca + b * cb
    }
}

struct Wrapped<T>(T);

impl<T: Scalar> Combine for Wrapped<T> {
    fn lin(a: &Self, b: &Self, ca: f64, cb: f64) -> Self {
        Wrapped(a.0 * T::lit(ca) + b.0 * T::lit(cb))
    }
}

impl<T: Scalar> Combine for Multivector<T> {
    fn lin(a: &Self, b: &Self, ca: f64, cb: f64) -> Self {
        &a.scale(T::lit(ca)) + &b.scale(T::lit(cb))
    }
}

impl<T: Scalar> Combine for DVector<T> {
    fn lin(a: &Self, b: &Self, ca: f64, cb: f64) -> Self {
        a * T::lit(ca) + b * T::lit(cb)
    }
}

impl<T: Scalar> Combine for DMatrix<T> {
    fn lin(a: &Self, b: &Self, ca: f64, cb: f64) -> Self {
        a * T::lit(ca) + b * T::lit(cb)
    }
}

/// Central difference of any function of one real variable at `t = 0`.
pub fn fd_scalar<T: Scalar>(fd: FdConfig, f: impl Fn(T) -> T) -> T {
    central(fd, |h| Wrapped(f(T::lit(h)))).0
}

pub fn fd_vector<T: Scalar>(fd: FdConfig, f: impl Fn(T) -> DVector<T>) -> DVector<T> {
    central(fd, |h| f(T::lit(h)))
}

pub fn fd_matrix<T: Scalar>(fd: FdConfig, f: impl Fn(T) -> DMatrix<T>) -> DMatrix<T> {
    central(fd, |h| f(T::lit(h)))
}

pub fn fd_multivector<T: Scalar>(fd: FdConfig, f: impl Fn(T) -> Multivector<T>) -> Multivector<T> {
    central(fd, |h| f(T::lit(h)))
}

/// `R^k x G^s` with the frame described in the module docs.
#[derive(Clone, Debug)]
pub struct ProductManifold<T: Scalar> {
    alg: Arc<QuadraticLieAlgebra<T>>,
    chart_dim: usize,
    slots: usize,
}

impl<T: Scalar> ProductManifold<T> {
    pub fn new(alg: Arc<QuadraticLieAlgebra<T>>, chart_dim: usize, slots: usize) -> Self {
        Self { alg, chart_dim, slots }
    }

    pub fn alg(&self) -> &QuadraticLieAlgebra<T> {
        &self.alg
    }

    pub fn alg_arc(&self) -> &Arc<QuadraticLieAlgebra<T>> {
        &self.alg
    }

    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn frame_len(&self) -> usize {
        self.chart_dim + 2 * self.alg.dim() * self.slots
    }

    pub fn left(&self, slot: usize, a: usize) -> usize {
        self.chart_dim + 2 * self.alg.dim() * slot + a
    }

    pub fn right(&self, slot: usize, a: usize) -> usize {
        self.chart_dim + 2 * self.alg.dim() * slot + self.alg.dim() + a
    }

    pub fn field(&self, i: usize) -> FrameField {
        if i < self.chart_dim {
            return FrameField::Chart(i);
        }
        let n = self.alg.dim();
        let j = i - self.chart_dim;
        let slot = j / (2 * n);
        let r = j % (2 * n);
        if r < n {
            FrameField::Left { slot, a: r }
        } else {
            FrameField::Right { slot, a: r - n }
        }
    }

    /// Checks that a point has the right shape.
    pub fn check_point(&self, x: &Point<T>) -> Result<()> {
        if x.chart.len() != self.chart_dim {
            return Err(Error::Dimension {
                expected: self.chart_dim,
                got: x.chart.len(),
            });
        }
        if x.groups.len() != self.slots {
            return Err(Error::Dimension {
                expected: self.slots,
                got: x.groups.len(),
            });
        }
        Ok(())
    }

    /// Time-`t` flow of frame field `i` starting at `x`.
    pub fn flow(&self, i: usize, x: &Point<T>, t: T) -> Point<T> {
        let mut y = x.clone();
        match self.field(i) {
            FrameField::Chart(c) => y.chart[c] += t,
            FrameField::Left { slot, a } => {
                let e = self.unit_exp(a, t);
                y.groups[slot] = &x.groups[slot] * e;
            }
            FrameField::Right { slot, a } => {
                let e = self.unit_exp(a, t);
                y.groups[slot] = e * &x.groups[slot];
            }
        }
        y
    }

    fn unit_exp(&self, a: usize, t: T) -> DMatrix<T> {
        let mut v = vec![T::zero(); self.alg.dim()];
        v[a] = t;
        exponential(&self.alg, &v)
    }

    /// Derivative of `f` along frame field `i` at `x`.
    pub fn derive(&self, i: usize, f: &ScalarFn<T>, x: &Point<T>, fd: FdConfig) -> Result<T> {
        let v = fd_scalar(fd, |t| f(&self.flow(i, x, t)));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "derivative along frame field {i} at {:?}",
                x.ambient()
            )));
        }
        Ok(v)
    }

    /// Derivative of a coefficient function along frame field `i`.
    pub fn derive_coeff(&self, i: usize, c: &CoeffFn<T>, x: &Point<T>, fd: FdConfig) -> Multivector<T> {
        fd_multivector(fd, |t| c(&self.flow(i, x, t)))
    }

    /// Contraction of a constant multivector at `x` with the differentials of
    /// `fs` (determinant pairing).
    pub fn evaluate_at(&self, mv: &Multivector<T>, fs: &[ScalarFn<T>], x: &Point<T>, fd: FdConfig) -> Result<T> {
        let d = mv.degree();
        if fs.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: fs.len(),
            });
        }
        if d == 0 {
            return Ok(mv.get(&[]));
        }
        let support = mv.support();
        let mut table = vec![vec![T::zero(); d]; self.frame_len()];
        for &i in &support {
            for (l, f) in fs.iter().enumerate() {
                table[i][l] = self.derive(i, f, x, fd)?;
            }
        }
        let mut total = T::zero();
        for (idx, c) in mv.terms() {
            total += c * det_small(|r, l| table[idx[r]][l], d);
        }
        Ok(total)
    }

    /// Evaluation of a framed field on the differentials of `fs`.
    pub fn evaluate(&self, field: &FramedField<T>, fs: &[ScalarFn<T>], x: &Point<T>, fd: FdConfig) -> Result<T> {
        self.evaluate_at(&field.at(x), fs, x, fd)
    }

    /// Schouten bracket of two framed fields at `x`, returned as frame
    /// coefficients.
    pub fn schouten(
        &self,
        a: &FramedField<T>,
        b: &FramedField<T>,
        x: &Point<T>,
        fd: FdConfig,
    ) -> Result<Multivector<T>> {
        if a.degree + b.degree > 4 {
            return Err(Error::NotImplemented(format!(
                "Schouten bracket of degrees {} and {}",
                a.degree, b.degree
            )));
        }
        let ca = a.at(x);
        let cb = b.at(x);
        let mut da = Derivatives::new();
        for v in cb.support() {
            da.insert(v, self.derive_coeff(v, &a.coeff, x, fd));
        }
        let mut db = Derivatives::new();
        for v in ca.support() {
            db.insert(v, self.derive_coeff(v, &b.coeff, x, fd));
        }
        Ok(schouten::bracket(self, &ca, &da, &cb, &db))
    }

    /// Bracket of two functions under a bivector field, as a new function.
    pub fn poisson_bracket(&self, pi: &FramedField<T>, f: &ScalarFn<T>, g: &ScalarFn<T>, fd: FdConfig) -> ScalarFn<T> {
        let m = self.clone();
        let pi = pi.clone();
        let (f, g) = (f.clone(), g.clone());
        Arc::new(move |p: &Point<T>| {
            m.evaluate(&pi, &[f.clone(), g.clone()], p, fd)
                .unwrap_or_else(|_| T::lit(f64::NAN))
        })
    }

    /// `{f,{g,h}} + {g,{h,f}} + {h,{f,g}}` by nested finite differences.
    pub fn jacobiator(
        &self,
        pi: &FramedField<T>,
        f: &ScalarFn<T>,
        g: &ScalarFn<T>,
        h: &ScalarFn<T>,
        x: &Point<T>,
        fd: FdConfig,
    ) -> Result<T> {
        if pi.degree != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: pi.degree,
            });
        }
        let gh = self.poisson_bracket(pi, g, h, fd);
        let hf = self.poisson_bracket(pi, h, f, fd);
        let fg = self.poisson_bracket(pi, f, g, fd);
        let a = self.evaluate(pi, &[f.clone(), gh], x, fd)?;
        let b = self.evaluate(pi, &[g.clone(), hf], x, fd)?;
        let c = self.evaluate(pi, &[h.clone(), fg], x, fd)?;
        Ok(a + b + c)
    }

    /// Size of the flattened coordinate space the manifold sits in.
    pub fn ambient_dim(&self) -> usize {
        let m = self.alg.rep_size();
        self.chart_dim + self.slots * m * m
    }

    /// Ambient image of frame field `i` at `x`.
    pub fn frame_vector(&self, i: usize, x: &Point<T>) -> DVector<T> {
        let m = self.alg.rep_size();
        let mut v = DVector::zeros(self.ambient_dim());
        let place = |v: &mut DVector<T>, slot: usize, mat: DMatrix<T>| {
            let off = self.chart_dim + slot * m * m;
            for (k, val) in mat.iter().enumerate() {
                v[off + k] = *val;
            }
        };
        match self.field(i) {
            FrameField::Chart(c) => v[c] = T::one(),
            FrameField::Left { slot, a } => place(&mut v, slot, &x.groups[slot] * self.alg.rep(a)),
            FrameField::Right { slot, a } => place(&mut v, slot, self.alg.rep(a) * &x.groups[slot]),
        }
        v
    }

    /// Ambient image of a degree-one frame combination.
    pub fn ambient_vector(&self, v: &Multivector<T>, x: &Point<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.ambient_dim());
        for (idx, c) in v.terms() {
            out += self.frame_vector(idx[0], x) * c;
        }
        out
    }

    /// Ambient components of a frame bivector, indexed by sorted pairs.
    pub fn ambient_bivector(&self, b: &Multivector<T>, x: &Point<T>) -> DVector<T> {
        let dim = self.ambient_dim();
        let mut dense = DMatrix::zeros(dim, dim);
        for (idx, c) in b.terms() {
            let u = self.frame_vector(idx[0], x);
            let w = self.frame_vector(idx[1], x);
            dense += (&u * w.transpose() - &w * u.transpose()) * c;
        }
        upper_triangle(&dense)
    }
}

/// Upper triangle (strictly above the diagonal) of a square matrix, row by row.
pub(crate) fn upper_triangle<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(m[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// `u ^ w` in the sorted-pair coordinates of [`upper_triangle`].
pub(crate) fn wedge_pairs<T: Scalar>(u: &DVector<T>, w: &DVector<T>) -> DVector<T> {
    upper_triangle(&(u * w.transpose() - w * u.transpose()))
}

/// Determinant of a `d x d` matrix given by an entry closure (`d <= 4`).
fn det_small<T: Scalar>(entry: impl Fn(usize, usize) -> T, d: usize) -> T {
    match d {
        0 => T::one(),
        1 => entry(0, 0),
        2 => entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(1, 0),
        _ => {
            let m = DMatrix::from_fn(d, d, entry);
            m.determinant()
        }
    }
}

impl<T: Scalar> FrameAlgebra<T> for ProductManifold<T> {
    fn frame_bracket(&self, i: usize, j: usize) -> Multivector<T> {
        let n = self.alg.dim();
        let mut out = Multivector::zero(1);
        match (self.field(i), self.field(j)) {
            (FrameField::Left { slot: s, a }, FrameField::Left { slot: t, a: b }) if s == t => {
                for c in 0..n {
                    out.add_term(&[self.left(s, c)], self.alg.f(a, b, c));
                }
            }
            (FrameField::Right { slot: s, a }, FrameField::Right { slot: t, a: b }) if s == t => {
                for c in 0..n {
                    out.add_term(&[self.right(s, c)], -self.alg.f(a, b, c));
                }
            }
            _ => {}
        }
        out
    }
}

/// A multivector field written in the frame of a [`ProductManifold`].
#[derive(Clone)]
pub struct FramedField<T: Scalar> {
    pub degree: usize,
    pub coeff: CoeffFn<T>,
}

impl<T: Scalar> std::fmt::Debug for FramedField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FramedField")
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> FramedField<T> {
    pub fn new(degree: usize, coeff: impl Fn(&Point<T>) -> Multivector<T> + Send + Sync + 'static) -> Self {
        Self {
            degree,
            coeff: Arc::new(coeff),
        }
    }

    pub fn zero(degree: usize) -> Self {
        Self::new(degree, move |_| Multivector::zero(degree))
    }

    pub fn constant(mv: Multivector<T>) -> Self {
        Self::new(mv.degree(), move |_| mv.clone())
    }

    pub fn at(&self, x: &Point<T>) -> Multivector<T> {
        (self.coeff)(x)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "adding fields of different degree");
        let (a, b) = (self.coeff.clone(), other.coeff.clone());
        Self::new(self.degree, move |p| &a(p) + &b(p))
    }

    pub fn scale(&self, s: T) -> Self {
        let a = self.coeff.clone();
        Self::new(self.degree, move |p| a(p).scale(s))
    }

    pub fn sum(degree: usize, parts: &[Self]) -> Self {
        parts.iter().fold(Self::zero(degree), |acc, p| acc.add(p))
    }

    /// Pulls the coefficients back along a point map and relabels the frame
    /// indices; used to embed a factor's field into a product.
    pub fn transport(
        &self,
        project: impl Fn(&Point<T>) -> Point<T> + Send + Sync + 'static,
        relabel: impl Fn(usize) -> usize + Send + Sync + 'static,
    ) -> Self {
        let a = self.coeff.clone();
        Self::new(self.degree, move |p| a(&project(p)).map_indices(&relabel))
    }
}

/// How a group slot is acted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotAction {
    /// `h . g = h g h^-1`, generator `L_a - R_a`.
    Conjugation,
    /// `h . g = h g`, generator `-R_a`.
    LeftMultiplication,
    /// `h . g = g h^-1`, generator `L_a`.
    RightMultiplication,
    Inert,
}

/// Infinitesimal action `rho: g -> vector fields`. Generators are normalised
/// so that `rho` is a Lie algebra homomorphism: the flow of `rho(e_a)` is
/// `t -> exp(-t e_a) . x`.
#[derive(Clone, Debug)]
pub struct ActionModel<T: Scalar> {
    pub slots: Vec<SlotAction>,
    /// Linear generators on chart coordinates: `rho(e_a) = (A_a x) . d/dx`.
    pub chart: Option<Vec<DMatrix<T>>>,
}

impl<T: Scalar> ActionModel<T> {
    pub fn uniform(action: SlotAction, slots: usize) -> Self {
        Self {
            slots: vec![action; slots],
            chart: None,
        }
    }

    /// Coadjoint-type chart action on `R^n = g*` (dual basis coordinates):
    /// `rho(e_a) = sum_{c,d} f_ac^d x_d d/dx_c`.
    pub fn coadjoint_chart(alg: &QuadraticLieAlgebra<T>) -> Vec<DMatrix<T>> {
        let n = alg.dim();
        (0..n).map(|a| DMatrix::from_fn(n, n, |c, d| alg.f(a, c, d))).collect()
    }

    /// `rho(e_a)` at `x` as frame coefficients.
    pub fn generator(&self, m: &ProductManifold<T>, a: usize, x: &Point<T>) -> Multivector<T> {
        let mut out = Multivector::zero(1);
        for (slot, act) in self.slots.iter().enumerate() {
            match act {
                SlotAction::Conjugation => {
                    out.add_term(&[m.left(slot, a)], T::one());
                    out.add_term(&[m.right(slot, a)], -T::one());
                }
                SlotAction::LeftMultiplication => out.add_term(&[m.right(slot, a)], -T::one()),
                SlotAction::RightMultiplication => out.add_term(&[m.left(slot, a)], T::one()),
                SlotAction::Inert => {}
            }
        }
        if let Some(gens) = &self.chart {
            let ax = &gens[a] * DVector::from_column_slice(&x.chart);
            for (i, v) in ax.iter().enumerate() {
                out.add_term(&[i], *v);
            }
        }
        out
    }

    /// `rho(u)` for a coefficient vector `u`.
    pub fn generator_of(&self, m: &ProductManifold<T>, u: &[T], x: &Point<T>) -> Multivector<T> {
        let mut out = Multivector::zero(1);
        for (a, &c) in u.iter().enumerate() {
            if c != T::zero() {
                out = &out + &self.generator(m, a, x).scale(c);
            }
        }
        out
    }

    /// Concatenation for a product with `self` first.
    pub fn product(&self, other: &Self, left_chart: usize, right_chart: usize) -> Self {
        let chart = match (&self.chart, &other.chart) {
            (None, None) => None,
            (a, b) => {
                let n = a.as_ref().or(b.as_ref()).map_or(0, |v| v.len());
                let k = left_chart + right_chart;
                Some(
                    (0..n)
                        .map(|i| {
                            let mut m = DMatrix::zeros(k, k);
                            if let Some(a) = a {
                                m.view_mut((0, 0), (left_chart, left_chart)).copy_from(&a[i]);
                            }
                            if let Some(b) = b {
                                m.view_mut((left_chart, left_chart), (right_chart, right_chart))
                                    .copy_from(&b[i]);
                            }
                            m
                        })
                        .collect(),
                )
            }
        };
        Self {
            slots: self.slots.iter().chain(&other.slots).copied().collect(),
            chart,
        }
    }
}

/// Substitutes frame vectors into an element of `Lambda(T U + g)`.
///
/// Mixed indices `i < k` are chart directions (mapped to chart frame field
/// `i`); index `k + a` is the algebra basis vector `e_a`, mapped to
/// `rho(e_a)`.
pub fn rho_extend<T: Scalar>(
    m: &ProductManifold<T>,
    action: &ActionModel<T>,
    elem: impl Fn(&Point<T>) -> Multivector<T> + Send + Sync + 'static,
    degree: usize,
) -> FramedField<T> {
    let m = m.clone();
    let action = action.clone();
    let k = m.chart_dim();
    FramedField::new(degree, move |p| {
        let e = elem(p);
        let gens: Vec<Multivector<T>> = (0..m.alg().dim()).map(|a| action.generator(&m, a, p)).collect();
        e.substitute(|i| {
            if i < k {
                Multivector::basis(i)
            } else {
                gens[i - k].clone()
            }
        })
    })
}

/// Algebra element (indices `0..n`) pushed through `rho`.
pub fn rho_of_algebra<T: Scalar>(
    m: &ProductManifold<T>,
    action: &ActionModel<T>,
    elem: Multivector<T>,
) -> FramedField<T> {
    let k = m.chart_dim();
    let d = elem.degree();
    let shifted = elem.map_indices(|a| a + k);
    rho_extend(m, action, move |_| shifted.clone(), d)
}

pub type EmbedFn<T> = Arc<dyn Fn(&[T]) -> Point<T> + Send + Sync>;
pub type TangentFn<T> = Arc<dyn Fn(&[T]) -> Vec<DVector<T>> + Send + Sync>;

/// A parametrised submanifold of a product manifold, defined on an open box.
#[derive(Clone)]
pub struct CrossSection<T: Scalar> {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub embed: EmbedFn<T>,
    /// Analytic ambient tangents `d embed / d alpha_i`; finite differences with
    /// step `1e-6` are used when absent.
    pub tangent: Option<TangentFn<T>>,
}

impl<T: Scalar> std::fmt::Debug for CrossSection<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CrossSection")
            .field("dim", &self.dim)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> CrossSection<T> {
    pub fn new(
        dim: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
        embed: impl Fn(&[T]) -> Point<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            lower,
            upper,
            embed: Arc::new(embed),
            tangent: None,
        }
    }

    pub fn with_tangent(mut self, t: impl Fn(&[T]) -> Vec<DVector<T>> + Send + Sync + 'static) -> Self {
        self.tangent = Some(Arc::new(t));
        self
    }

    pub fn point(&self, alpha: &[T]) -> Point<T> {
        (self.embed)(alpha)
    }

    /// Checks that `alpha` lies strictly inside the parameter box.
    pub fn check_interior(&self, alpha: &[T]) -> Result<()> {
        if alpha.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
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

    /// Ambient tangent vectors `d embed / d alpha_i`.
    pub fn tangents(&self, m: &ProductManifold<T>, alpha: &[T]) -> Vec<DVector<T>> {
        if let Some(t) = &self.tangent {
            return t(alpha);
        }
        let flat = |a: &[T]| -> DVector<T> {
            let p = self.point(a);
            let mut v = Vec::with_capacity(m.ambient_dim());
            v.extend_from_slice(&p.chart);
            for g in &p.groups {
                v.extend(g.iter().copied());
            }
            DVector::from_vec(v)
        };
        let fd = FdConfig::new(1e-6, false);
        (0..self.dim)
            .map(|i| {
                fd_vector(fd, |h| {
                    let mut a = alpha.to_vec();
                    a[i] += h;
                    flat(&a)
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn su2() -> Arc<QuadraticLieAlgebra<f64>> {
        Arc::new(QuadraticLieAlgebra::su2())
    }

    fn entry(slot: usize, i: usize, j: usize) -> ScalarFn<f64> {
        scalar_fn(move |p: &Point<f64>| p.groups[slot][(i, j)])
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let m = ProductManifold::new(su2(), 1, 1);
        let x = Point::new(vec![0.3], vec![DMatrix::identity(4, 4)]);
        let c = scalar_fn(|_| 2.0);
        for i in 0..m.frame_len() {
            assert_eq!(m.derive(i, &c, &x, FdConfig::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn left_derivative_of_entry_at_identity() {
        // L_{e2} of the (0,0) entry of realified diag(e^{it}, e^{-it}) is d/dt cos t = 0;
        // of the (2,0) entry (imaginary part) it is d/dt sin t = 1.
        let m = ProductManifold::new(su2(), 0, 1);
        let x = Point::groups_only(vec![DMatrix::identity(4, 4)]);
        let l2 = m.left(0, 1);
        let d00 = m.derive(l2, &entry(0, 0, 0), &x, FdConfig::default()).unwrap();
        let d20 = m.derive(l2, &entry(0, 2, 0), &x, FdConfig::default()).unwrap();
        assert!(d00.abs() < 1e-9);
        assert!((d20 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_values_are_reported() {
        let m = ProductManifold::new(su2(), 1, 0);
        let f = scalar_fn(|p: &Point<f64>| 1.0 / (p.chart[0] - p.chart[0]));
        let x = Point::chart_only(vec![0.0]);
        assert!(matches!(
            m.derive(0, &f, &x, FdConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn frame_relations_match_flows() {
        // [L_a, L_b] f = L_{[a,b]} f checked by nested differences
        let m = ProductManifold::new(su2(), 0, 1);
        let g = exponential(m.alg(), &[0.3, -0.2, 0.5]);
        let x = Point::groups_only(vec![g]);
        let f = scalar_fn(|p: &Point<f64>| {
            let g = &p.groups[0];
            g[(0, 1)] + 0.5 * g[(2, 0)] * g[(1, 3)] + g[(3, 3)].powi(2)
        });
        let fd = FdConfig::nested();
        for (ia, ib) in [
            (m.left(0, 0), m.left(0, 1)),
            (m.right(0, 0), m.right(0, 2)),
            (m.left(0, 1), m.right(0, 2)),
        ] {
            let mm = m.clone();
            let ff = f.clone();
            let db = scalar_fn(move |p| mm.derive(ib, &ff, p, fd).unwrap());
            let mm = m.clone();
            let ff = f.clone();
            let da = scalar_fn(move |p| mm.derive(ia, &ff, p, fd).unwrap());
            let lhs = m.derive(ia, &db, &x, fd).unwrap() - m.derive(ib, &da, &x, fd).unwrap();
            let br = m.frame_bracket(ia, ib);
            let rhs = m.evaluate_at(&br, std::slice::from_ref(&f), &x, fd).unwrap_or(0.0);
            assert!((lhs - rhs).abs() < 1e-6, "{ia} {ib}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn evaluation_is_antisymmetric() {
        let m = ProductManifold::new(su2(), 0, 1);
        let pi = FramedField::constant(Multivector::monomial(&[m.left(0, 0), m.right(0, 1)], 1.0));
        let x = Point::groups_only(vec![exponential(m.alg(), &[0.1, 0.2, 0.3])]);
        let f = entry(0, 0, 1);
        let g = entry(0, 2, 3);
        let fg = m
            .evaluate(&pi, &[f.clone(), g.clone()], &x, FdConfig::default())
            .unwrap();
        let gf = m.evaluate(&pi, &[g, f.clone()], &x, FdConfig::default()).unwrap();
        assert!((fg + gf).abs() < 1e-12);
        assert!(m.evaluate(&pi, &[f.clone(), f], &x, FdConfig::default()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn conjugation_generators_are_homomorphic() {
        let alg = su2();
        let m = ProductManifold::new(alg.clone(), 3, 1);
        let mut action = ActionModel::uniform(SlotAction::Conjugation, 1);
        action.chart = Some(ActionModel::coadjoint_chart(&alg));
        let x = Point::new(vec![0.2, -0.4, 0.7], vec![exponential(&alg, &[0.4, 0.1, -0.3])]);
        let fd = FdConfig::default();
        for a in 0..3 {
            for b in 0..3 {
                let ma = m.clone();
                let act_a = action.clone();
                let xa = FramedField::new(1, move |p| act_a.generator(&ma, a, p));
                let mb = m.clone();
                let act_b = action.clone();
                let xb = FramedField::new(1, move |p| act_b.generator(&mb, b, p));
                let br = m.schouten(&xa, &xb, &x, fd).unwrap();
                let col: Vec<f64> = (0..3).map(|c| alg.f(a, b, c)).collect();
                let want = action.generator_of(&m, &col, &x);
                let diff = m.ambient_vector(&(&br - &want), &x);
                assert!(diff.amax() < 1e-7, "{a} {b}: {}", diff.amax());
            }
        }
    }
}
