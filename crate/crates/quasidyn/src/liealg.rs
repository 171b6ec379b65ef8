//! Quadratic Lie algebras given by structure constants, an invariant pairing
//! and one faithful matrix representation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::multivector::Multivector;
use crate::schouten::{self, FrameAlgebra};
use crate::{Error, Result, Scalar};

/// Dense rank-3 array indexed `[a][b][c]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n * n],
        }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> T {
        self.data[(a * self.n + b) * self.n + c]
    }

    #[inline]
    pub fn add(&mut self, a: usize, b: usize, c: usize, v: T) {
        self.data[(a * self.n + b) * self.n + c] += v;
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn distance(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (a, b)| {
            let d = (*a - *b).abs();
            if d > m {
                d
            } else {
                m
            }
        })
    }

    /// The antisymmetric element with the same sorted components.
    pub fn to_multivector(&self) -> Multivector<T> {
        Multivector::from_dense(self.n, 3, &self.data)
    }

    /// Largest violation of total antisymmetry.
    pub fn antisymmetry_residual(&self) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v = self.get(a, b, c);
                    for w in [v + self.get(b, a, c), v + self.get(a, c, b), v + self.get(c, b, a)] {
                        worst = worst.max(w.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Serialized form of an algebra definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub dim: usize,
    #[serde(default)]
    pub labels: Vec<String>,
    pub f: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    pub rep: Vec<Vec<Vec<f64>>>,
}

/// Residuals of the constructor invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub ad_invariance: f64,
    pub pairing_symmetry: f64,
    pub pairing_min_singular: f64,
    pub rep_homomorphism: f64,
}

impl InvariantReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.antisymmetry,
            self.jacobi,
            self.ad_invariance,
            self.pairing_symmetry,
            self.rep_homomorphism,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct QuadraticLieAlgebra<T: Scalar> {
    name: String,
    dim: usize,
    labels: Vec<String>,
    f: Tensor3<T>,
    k: DMatrix<T>,
    k_inv: DMatrix<T>,
    rep: Vec<DMatrix<T>>,
    /// Left inverse of the flattened representation (maps an `m x m` matrix to
    /// algebra coordinates).
    rep_solve: DMatrix<T>,
}

/// Real 4x4 image of the complex 2x2 matrix `re + i im`.
fn realify<T: Scalar>(re: [[f64; 2]; 2], im: [[f64; 2]; 2]) -> DMatrix<T> {
    let mut m = DMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = T::lit(re[i][j]);
            m[(i + 2, j + 2)] = T::lit(re[i][j]);
            m[(i, j + 2)] = T::lit(-im[i][j]);
            m[(i + 2, j)] = T::lit(im[i][j]);
        }
    }
    m
}

fn flatten<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_iterator(m.len(), m.iter().copied())
}

impl<T: Scalar> QuadraticLieAlgebra<T> {
    /// Builds an algebra from raw data. Checks shapes and nondegeneracy of the
    /// pairing; the remaining invariants are reported by [`Self::invariants`].
    pub fn new(
        name: impl Into<String>,
        labels: Vec<String>,
        f: Tensor3<T>,
        k: DMatrix<T>,
        rep: Vec<DMatrix<T>>,
    ) -> Result<Self> {
        let n = f.n;
        if k.nrows() != n || k.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: k.nrows(),
            });
        }
        if rep.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: rep.len(),
            });
        }
        let m = rep.first().map_or(1, |r| r.nrows());
        if rep.iter().any(|r| r.nrows() != m || r.ncols() != m) {
            return Err(Error::Input(
                "representation matrices must share one square shape".into(),
            ));
        }
        let svd = k.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if n > 0 && (smin <= T::lit(1e-12) * smax.max(T::one())) {
            let det = k.determinant();
            return Err(Error::SingularPairing(det.as_f64()));
        }
        let k_inv = k.clone().try_inverse().ok_or(Error::SingularPairing(0.0))?;
        let labels = if labels.len() == n {
            labels
        } else {
            (1..=n).map(|i| format!("e{i}")).collect()
        };
        let rep_solve = if n == 0 {
            DMatrix::zeros(0, m * m)
        } else {
            let cols: Vec<DVector<T>> = rep.iter().map(flatten).collect();
            let b = DMatrix::from_columns(&cols);
            let gram = b.transpose() * &b;
            let gi = gram
                .try_inverse()
                .ok_or_else(|| Error::Input("representation is not faithful".into()))?;
            gi * b.transpose()
        };
        Ok(Self {
            name: name.into(),
            dim: n,
            labels,
            f,
            k,
            k_inv,
            rep,
            rep_solve,
        })
    }

    /// Builds an algebra from a representation alone: structure constants are
    /// read off commutators.
    pub fn from_representation(
        name: impl Into<String>,
        labels: Vec<String>,
        k: DMatrix<T>,
        rep: Vec<DMatrix<T>>,
    ) -> Result<Self> {
        let n = rep.len();
        let mut alg = Self::new(name, labels, Tensor3::zeros(n), k, rep)?;
        let mut f = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let c = &alg.rep[a] * &alg.rep[b] - &alg.rep[b] * &alg.rep[a];
                let x = alg.coords(&c);
                for (cc, v) in x.iter().enumerate() {
                    f.add(a, b, cc, *v);
                }
            }
        }
        alg.f = f;
        Ok(alg)
    }

    /// su(2) in the basis `e1 = [[0,i],[i,0]]`, `e2 = diag(i,-i)`,
    /// `e3 = [[0,1],[-1,0]]`, with pairing `<x,y> = -tr(xy)/2` (identity
    /// matrix in this basis). Represented on `R^4` by realifying `C^2`.
    pub fn su2() -> Self {
        let z = [[0.0, 0.0], [0.0, 0.0]];
        let rep = vec![
            realify::<T>(z, [[0.0, 1.0], [1.0, 0.0]]),
            realify::<T>(z, [[1.0, 0.0], [0.0, -1.0]]),
            realify::<T>([[0.0, 1.0], [-1.0, 0.0]], z),
        ];
        let labels = vec!["e1".into(), "e2".into(), "e3".into()];
        Self::from_representation("su2", labels, DMatrix::identity(3, 3), rep).expect("su(2) preset is well formed")
    }

    /// The Poincare algebra iso(2,1) with basis `J0, J1, J2, P0, P1, P2`,
    /// pairing `<J_a, P_b> = eta_ab` and represented by 4x4 affine matrices.
    pub fn iso21() -> Self {
        let eta = [1.0, -1.0, -1.0];
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        let mut rep = Vec::with_capacity(6);
        for a in 0..3 {
            // (J_a)_{cb} = eps_{ab}^c = eps_{abc} eta^{cc}
            let mut m = DMatrix::<T>::zeros(4, 4);
            for b in 0..3 {
                for c in 0..3 {
                    m[(c, b)] = T::lit(eps(a, b, c) * eta[c]);
                }
            }
            rep.push(m);
        }
        for a in 0..3 {
            let mut m = DMatrix::<T>::zeros(4, 4);
            m[(a, 3)] = T::one();
            rep.push(m);
        }
        let mut k = DMatrix::<T>::zeros(6, 6);
        for a in 0..3 {
            k[(a, a + 3)] = T::lit(eta[a]);
            k[(a + 3, a)] = T::lit(eta[a]);
        }
        let labels = ["J0", "J1", "J2", "P0", "P1", "P2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Self::from_representation("iso21", labels, k, rep).expect("iso(2,1) preset is well formed")
    }

    /// The abelian algebra `R^n`, represented by translations of `R^n`.
    pub fn abelian(n: usize) -> Self {
        let rep = (0..n)
            .map(|a| {
                let mut m = DMatrix::<T>::zeros(n + 1, n + 1);
                m[(a, n)] = T::one();
                m
            })
            .collect();
        Self::new(
            format!("abelian:{n}"),
            Vec::new(),
            Tensor3::zeros(n),
            DMatrix::identity(n, n),
            rep,
        )
        .expect("abelian preset is well formed")
    }

    /// Looks up `"su2"`, `"iso21"` or `"abelian:<n>"`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "su2" => Ok(Self::su2()),
            "iso21" => Ok(Self::iso21()),
            other => {
                if let Some(n) = other.strip_prefix("abelian:") {
                    let n: usize = n.parse().map_err(|_| Error::UnknownPreset(other.to_string()))?;
                    if n == 0 {
                        return Err(Error::Input("abelian algebra needs n >= 1".into()));
                    }
                    Ok(Self::abelian(n))
                } else {
                    Err(Error::UnknownPreset(other.to_string()))
                }
            }
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["su2", "iso21", "abelian:<n>"]
    }

    pub fn from_spec(name: impl Into<String>, spec: &AlgebraSpec) -> Result<Self> {
        let n = spec.dim;
        let bad = |what: &str| Error::Input(format!("algebra spec: `{what}` has the wrong shape"));
        if spec.f.len() != n
            || spec
                .f
                .iter()
                .any(|row| row.len() != n || row.iter().any(|c| c.len() != n))
        {
            return Err(bad("f"));
        }
        if spec.k.len() != n || spec.k.iter().any(|row| row.len() != n) {
            return Err(bad("K"));
        }
        if spec.rep.len() != n {
            return Err(bad("rep"));
        }
        let mut f = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    f.add(a, b, c, T::lit(spec.f[a][b][c]));
                }
            }
        }
        let k = DMatrix::from_fn(n, n, |i, j| T::lit(spec.k[i][j]));
        let rep = spec
            .rep
            .iter()
            .map(|m| {
                let s = m.len();
                if m.iter().any(|row| row.len() != s) {
                    return Err(bad("rep"));
                }
                Ok(DMatrix::from_fn(s, s, |i, j| T::lit(m[i][j])))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, spec.labels.clone(), f, k, rep)
    }

    pub fn from_json(name: impl Into<String>, json: &str) -> Result<Self> {
        let spec: AlgebraSpec = serde_json::from_str(json)?;
        Self::from_spec(name, &spec)
    }

    pub fn to_spec(&self) -> AlgebraSpec {
        let n = self.dim;
        AlgebraSpec {
            dim: n,
            labels: self.labels.clone(),
            f: (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| (0..n).map(|c| self.f.get(a, b, c).as_f64()).collect())
                        .collect()
                })
                .collect(),
            k: (0..n)
                .map(|i| (0..n).map(|j| self.k[(i, j)].as_f64()).collect())
                .collect(),
            rep: self
                .rep
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].as_f64()).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn structure_constants(&self) -> &Tensor3<T> {
        &self.f
    }

    /// Structure constant `f_ab^c`.
    #[inline]
    pub fn f(&self, a: usize, b: usize, c: usize) -> T {
        self.f.get(a, b, c)
    }

    pub fn pairing(&self) -> &DMatrix<T> {
        &self.k
    }

    /// Inverse pairing, i.e. the components `K^{ab}` of the Casimir element.
    pub fn casimir(&self) -> &DMatrix<T> {
        &self.k_inv
    }

    pub fn rep(&self, a: usize) -> &DMatrix<T> {
        &self.rep[a]
    }

    pub fn rep_size(&self) -> usize {
        self.rep.first().map_or(1, |m| m.nrows())
    }

    /// Matrix of `sum_a x_a e_a` in the representation.
    pub fn matrix(&self, x: &[T]) -> DMatrix<T> {
        let m = self.rep_size();
        let mut out = DMatrix::zeros(m, m);
        for (a, &c) in x.iter().enumerate() {
            if c != T::zero() {
                out += &self.rep[a] * c;
            }
        }
        out
    }

    /// Coordinates of a matrix in the image of the representation (least
    /// squares projection for matrices slightly off the image).
    pub fn coords(&self, m: &DMatrix<T>) -> DVector<T> {
        &self.rep_solve * flatten(m)
    }

    pub fn basis_vector(&self, a: usize) -> DVector<T> {
        let mut v = DVector::zeros(self.dim);
        v[a] = T::one();
        v
    }

    fn check_len(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `[x, y] = sum x_a y_b f_ab^c e_c`.
    pub fn bracket(&self, x: &[T], y: &[T]) -> Result<DVector<T>> {
        self.check_len(x)?;
        self.check_len(y)?;
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for a in 0..n {
            if x[a] == T::zero() {
                continue;
            }
            for b in 0..n {
                let w = x[a] * y[b];
                if w == T::zero() {
                    continue;
                }
                for c in 0..n {
                    out[c] += w * self.f(a, b, c);
                }
            }
        }
        Ok(out)
    }

    /// Matrix of `ad_x` acting on coordinate vectors.
    pub fn ad_matrix(&self, x: &[T]) -> DMatrix<T> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |c, b| (0..n).fold(T::zero(), |s, a| s + x[a] * self.f(a, b, c)))
    }

    /// Residuals of every constructor invariant.
    pub fn invariants(&self) -> InvariantReport {
        let n = self.dim;
        let mut anti = T::zero();
        let mut jac = T::zero();
        let mut adinv = T::zero();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    anti = anti.max((self.f(a, b, c) + self.f(b, a, c)).abs());
                    for e in 0..n {
                        let mut s = T::zero();
                        for d in 0..n {
                            s += self.f(a, b, d) * self.f(d, c, e)
                                + self.f(b, c, d) * self.f(d, a, e)
                                + self.f(c, a, d) * self.f(d, b, e);
                        }
                        jac = jac.max(s.abs());
                    }
                    let mut s = T::zero();
                    for d in 0..n {
                        s += self.f(a, b, d) * self.k[(d, c)] + self.f(a, c, d) * self.k[(b, d)];
                    }
                    adinv = adinv.max(s.abs());
                }
            }
        }
        let sym = (&self.k - self.k.transpose()).amax();
        let smin = if n == 0 {
            1.0
        } else {
            self.k.clone().svd(false, false).singular_values.min().as_f64()
        };
        let mut hom = T::zero();
        for a in 0..n {
            for b in 0..n {
                let lhs = &self.rep[a] * &self.rep[b] - &self.rep[b] * &self.rep[a];
                let col: Vec<T> = (0..n).map(|c| self.f(a, b, c)).collect();
                let rhs = self.matrix(&col);
                hom = hom.max((lhs - rhs).amax());
            }
        }
        InvariantReport {
            antisymmetry: anti.as_f64(),
            jacobi: jac.as_f64(),
            ad_invariance: adinv.as_f64(),
            pairing_symmetry: sym.as_f64(),
            pairing_min_singular: smin,
            rep_homomorphism: hom.as_f64(),
        }
    }

    /// `[kappa^12, kappa^23]` as a dense tensor, `kappa = sum K^{ab} e_a (x) e_b`.
    pub fn casimir_commutator(&self) -> Tensor3<T> {
        let n = self.dim;
        let kk = &self.k_inv;
        let mut t = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                if kk[(a, b)] == T::zero() {
                    continue;
                }
                for c in 0..n {
                    for d in 0..n {
                        let w = kk[(a, b)] * kk[(c, d)];
                        if w == T::zero() {
                            continue;
                        }
                        for m in 0..n {
                            t.add(a, m, d, w * self.f(b, c, m));
                        }
                    }
                }
            }
        }
        t
    }

    /// The invariant 3-tensor `phi = -[kappa^12, kappa^23] / 2`.
    ///
    /// With the unnormalised wedge this equals `(1/12) f_abc e_a ^ e_b ^ e_c`
    /// in an orthonormal basis, and it is the element for which the fusion of
    /// two copies of the group is quasi-Poisson (`[pi, pi] = rho(phi)`).
    pub fn cartan_three_tensor(&self) -> Multivector<T> {
        let t = self.casimir_commutator();
        let half = T::lit(-0.5);
        Multivector::from_dense(self.dim, 3, &t.data).scale(half)
    }

    /// Algebraic Schouten bracket on the exterior algebra of the algebra.
    ///
    /// Supported for degrees 1 and 2. For a skew `r`, `[r, r]` is twice the
    /// three-term sum `[r12,r13] + [r12,r23] + [r13,r23]`.
    pub fn graded_bracket(&self, a: &Multivector<T>, b: &Multivector<T>) -> Result<Multivector<T>> {
        let ok = |d: usize| d == 1 || d == 2;
        if !ok(a.degree()) || !ok(b.degree()) {
            return Err(Error::NotImplemented(format!(
                "graded bracket of degrees {} and {}",
                a.degree(),
                b.degree()
            )));
        }
        Ok(schouten::algebraic_bracket(self, a, b))
    }

    /// Adjoint action of `x` on a multivector of any degree (a derivation).
    pub fn ad_multivector(&self, x: &[T], a: &Multivector<T>) -> Multivector<T> {
        if a.degree() == 0 {
            return Multivector::zero(0);
        }
        schouten::algebraic_bracket(self, &Multivector::from_vector(x), a)
    }

    /// The three-term bracket `[r12,r13] + [r12,r23] + [r13,r23]` of an
    /// arbitrary (not necessarily skew) 2-tensor, without antisymmetrisation.
    pub fn cybe_defect(&self, r: &DMatrix<T>) -> Result<Tensor3<T>> {
        let n = self.dim;
        if r.nrows() != n || r.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: r.nrows(),
            });
        }
        let mut t = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let rab = r[(a, b)];
                if rab == T::zero() {
                    continue;
                }
                for c in 0..n {
                    for d in 0..n {
                        let w = rab * r[(c, d)];
                        if w == T::zero() {
                            continue;
                        }
                        for m in 0..n {
                            // [r12, r13]: [e_a, e_c] (x) e_b (x) e_d
                            t.add(m, b, d, w * self.f(a, c, m));
                            // [r12, r23]: e_a (x) [e_b, e_c] (x) e_d
                            t.add(a, m, d, w * self.f(b, c, m));
                            // [r13, r23]: e_a (x) e_c (x) [e_b, e_d]
                            t.add(a, c, m, w * self.f(b, d, m));
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    /// Largest residual of `[e_a, omega] = 0` over the basis.
    pub fn invariance_residual(&self, omega: &Multivector<T>) -> T {
        (0..self.dim)
            .map(|a| {
                let e: Vec<T> = (0..self.dim)
                    .map(|i| if i == a { T::one() } else { T::zero() })
                    .collect();
                self.ad_multivector(&e, omega).max_abs()
            })
            .fold(T::zero(), |m, v| m.max(v))
    }

    /// Pairs `K(x, y)`.
    pub fn pair(&self, x: &[T], y: &[T]) -> T {
        let n = self.dim;
        let mut s = T::zero();
        for a in 0..n {
            for b in 0..n {
                s += x[a] * self.k[(a, b)] * y[b];
            }
        }
        s
    }
}

impl<T: Scalar> FrameAlgebra<T> for QuadraticLieAlgebra<T> {
    fn frame_bracket(&self, i: usize, j: usize) -> Multivector<T> {
        let mut out = Multivector::zero(1);
        for c in 0..self.dim {
            out.add_term(&[c], self.f(i, j, c));
        }
        out
    }
}

/// A linear map `delta: g -> g ^ g`, `delta(e_a) = sum_{b,c} d[a][b][c] e_b ^ e_c`.
#[derive(Clone, Debug)]
pub struct Cobracket<T: Scalar> {
    pub d: Tensor3<T>,
}

impl<T: Scalar> Cobracket<T> {
    pub fn zero(n: usize) -> Self {
        Self { d: Tensor3::zeros(n) }
    }

    /// Image of a basis vector.
    pub fn of_basis(&self, a: usize) -> Multivector<T> {
        let n = self.d.n;
        let mut out = Multivector::zero(2);
        for b in 0..n {
            for c in 0..n {
                out.add_term(&[b, c], self.d.get(a, b, c));
            }
        }
        out
    }

    /// `delta` extended to `g` and `g ^ g` as a derivation of degree +1:
    /// `delta(x ^ y) = delta(x) ^ y - x ^ delta(y)`.
    pub fn apply(&self, a: &Multivector<T>) -> Result<Multivector<T>> {
        match a.degree() {
            1 => {
                let mut out = Multivector::zero(2);
                for (idx, c) in a.terms() {
                    out = &out + &self.of_basis(idx[0]).scale(c);
                }
                Ok(out)
            }
            2 => {
                let mut out = Multivector::zero(3);
                for (idx, c) in a.terms() {
                    let x = Multivector::basis(idx[0]);
                    let y = Multivector::basis(idx[1]);
                    let t = &self.of_basis(idx[0]).wedge(&y) - &x.wedge(&self.of_basis(idx[1]));
                    out = &out + &t.scale(c);
                }
                Ok(out)
            }
            d => Err(Error::NotImplemented(format!("cobracket on degree {d}"))),
        }
    }

    /// `max_a |delta(delta(e_a))|`; zero iff the co-Jacobi identity holds.
    pub fn cojacobi_residual(&self) -> T {
        (0..self.d.n)
            .map(|a| {
                self.apply(&self.of_basis(a))
                    .map(|m| m.max_abs())
                    .unwrap_or_else(|_| T::zero())
            })
            .fold(T::zero(), |m, v| m.max(v))
    }

    /// `max |delta[x,y] - ad_x delta(y) + ad_y delta(x)|` over basis pairs.
    pub fn cocycle_residual(&self, alg: &QuadraticLieAlgebra<T>) -> T {
        let n = alg.dim();
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..n {
                let ea: Vec<T> = (0..n).map(|i| if i == a { T::one() } else { T::zero() }).collect();
                let eb: Vec<T> = (0..n).map(|i| if i == b { T::one() } else { T::zero() }).collect();
                let br = alg.bracket(&ea, &eb).expect("basis vectors have the right length");
                let lhs = self
                    .apply(&Multivector::from_vector(br.as_slice()))
                    .expect("degree one");
                let rhs = &alg.ad_multivector(&ea, &self.of_basis(b)) - &alg.ad_multivector(&eb, &self.of_basis(a));
                worst = worst.max(lhs.distance(&rhs));
            }
        }
        worst
    }
}
