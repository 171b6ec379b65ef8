//! Sparse elements of an exterior algebra over an indexed frame.
//!
//! A `Multivector` of degree `d` stores coefficients of sorted wedge monomials
//! `v_{i1} ^ ... ^ v_{id}` with `i1 < ... < id`. The wedge carries no
//! normalising factor: `a ^ b = a (x) b - b (x) a`. With that convention the
//! coefficient of a sorted monomial equals the dense tensor component at the
//! same sorted index tuple, so conversion to and from dense arrays is a copy.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Multivector<T> {
    degree: usize,
    terms: BTreeMap<Vec<usize>, T>,
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats (the monomial vanishes).
pub fn sort_with_sign(idx: &mut [usize]) -> Option<bool> {
    let mut odd = false;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            odd = !odd;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(odd)
    }
}

impl<T: Scalar> Multivector<T> {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(c: T) -> Self {
        let mut m = Self::zero(0);
        m.add_term(&[], c);
        m
    }

    /// The degree-one element `v_i`.
    pub fn basis(i: usize) -> Self {
        Self::monomial(&[i], T::one())
    }

    /// `c * v_{idx[0]} ^ ... ^ v_{idx[d-1]}` for indices in any order.
    pub fn monomial(idx: &[usize], c: T) -> Self {
        let mut m = Self::zero(idx.len());
        m.add_term(idx, c);
        m
    }

    /// Degree-one element with the given coefficient vector.
    pub fn from_vector(v: &[T]) -> Self {
        let mut m = Self::zero(1);
        for (i, &c) in v.iter().enumerate() {
            m.add_term(&[i], c);
        }
        m
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], T)> + '_ {
        self.terms.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c` times the monomial with (unsorted) indices `idx`.
    pub fn add_term(&mut self, idx: &[usize], c: T) {
        assert_eq!(idx.len(), self.degree, "monomial degree mismatch");
        if c == T::zero() {
            return;
        }
        let mut key = idx.to_vec();
        let Some(odd) = sort_with_sign(&mut key) else {
            return;
        };
        let c = if odd { -c } else { c };
        match self.terms.entry(key) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == T::zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    /// Dense component at an arbitrary index tuple (antisymmetric extension).
    pub fn get(&self, idx: &[usize]) -> T {
        if idx.len() != self.degree {
            return T::zero();
        }
        let mut key = idx.to_vec();
        match sort_with_sign(&mut key) {
            None => T::zero(),
            Some(odd) => {
                let v = self.terms.get(&key).copied().unwrap_or_else(T::zero);
                if odd {
                    -v
                } else {
                    v
                }
            }
        }
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zero(self.degree);
        for (k, v) in self.terms() {
            out.add_term(k, v * s);
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.degree + other.degree);
        let mut buf = Vec::with_capacity(out.degree);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                buf.clear();
                buf.extend_from_slice(a);
                buf.extend_from_slice(b);
                out.add_term(&buf, ca * cb);
            }
        }
        out
    }

    /// Relabels every index through `f` (which must be injective).
    pub fn map_indices(&self, f: impl Fn(usize) -> usize) -> Self {
        let mut out = Self::zero(self.degree);
        let mut buf = Vec::with_capacity(self.degree);
        for (k, v) in self.terms() {
            buf.clear();
            buf.extend(k.iter().map(|&i| f(i)));
            out.add_term(&buf, v);
        }
        out
    }

    /// Substitutes a degree-one element for every index and expands.
    pub fn substitute(&self, image: impl Fn(usize) -> Multivector<T>) -> Self {
        let mut out = Self::zero(self.degree);
        for (k, v) in self.terms() {
            let mut prod = Self::scalar(v);
            for &i in k {
                prod = prod.wedge(&image(i));
            }
            out = &out + &prod;
        }
        out
    }

    /// Keeps the monomials accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&[usize]) -> bool) -> Self {
        let mut out = Self::zero(self.degree);
        for (k, v) in self.terms() {
            if keep(k) {
                out.add_term(k, v);
            }
        }
        out
    }

    /// Sorted set of indices appearing in any monomial.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.terms.keys().flatten().copied().collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn max_abs(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }

    /// Largest coefficient difference to `other`.
    pub fn distance(&self, other: &Self) -> T {
        (self - other).max_abs()
    }

    /// Dense row-major array of length `n^degree`.
    pub fn to_dense(&self, n: usize) -> Vec<T> {
        let d = self.degree;
        let total = n.pow(d as u32);
        let mut out = vec![T::zero(); total];
        let mut idx = vec![0usize; d];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            for p in (0..d).rev() {
                idx[p] = rem % n;
                rem /= n;
            }
            *slot = self.get(&idx);
        }
        out
    }

    /// Reads the sorted components of an antisymmetric dense array.
    pub fn from_dense(n: usize, degree: usize, dense: &[T]) -> Self {
        assert_eq!(dense.len(), n.pow(degree as u32));
        let mut out = Self::zero(degree);
        for (flat, &v) in dense.iter().enumerate() {
            let mut idx = vec![0usize; degree];
            let mut rem = flat;
            for p in (0..degree).rev() {
                idx[p] = rem % n;
                rem /= n;
            }
            if idx.windows(2).all(|w| w[0] < w[1]) {
                out.add_term(&idx, v);
            }
        }
        out
    }

    /// Degree-two element from a skew matrix (upper triangle is read).
    pub fn from_skew(m: &nalgebra::DMatrix<T>) -> Self {
        let mut out = Self::zero(2);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                out.add_term(&[i, j], m[(i, j)]);
            }
        }
        out
    }

    /// Dense skew matrix of a degree-two element.
    pub fn to_skew(&self, n: usize) -> nalgebra::DMatrix<T> {
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (k, v) in self.terms() {
            m[(k[0], k[1])] = v;
            m[(k[1], k[0])] = -v;
        }
        m
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: T) -> Self {
        self.filter_values(|v| v.abs() > tol)
    }

    fn filter_values(&self, keep: impl Fn(T) -> bool) -> Self {
        let mut out = Self::zero(self.degree);
        for (k, v) in self.terms() {
            if keep(v) {
                out.add_term(k, v);
            }
        }
        out
    }
}

impl<T: Scalar> Add for &Multivector<T> {
    type Output = Multivector<T>;
    fn add(self, rhs: Self) -> Multivector<T> {
        assert_eq!(self.degree, rhs.degree, "adding multivectors of different degree");
        let mut out = self.clone();
        for (k, v) in rhs.terms() {
            out.add_term(k, v);
        }
        out
    }
}

impl<T: Scalar> Sub for &Multivector<T> {
    type Output = Multivector<T>;
    fn sub(self, rhs: Self) -> Multivector<T> {
        assert_eq!(self.degree, rhs.degree, "subtracting multivectors of different degree");
        let mut out = self.clone();
        for (k, v) in rhs.terms() {
            out.add_term(k, -v);
        }
        out
    }
}

impl<T: Scalar> Neg for &Multivector<T> {
    type Output = Multivector<T>;
    fn neg(self) -> Multivector<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Mul<T> for &Multivector<T> {
    type Output = Multivector<T>;
    fn mul(self, s: T) -> Multivector<T> {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorting_sign() {
        let mut v = [2, 0, 1];
        assert_eq!(sort_with_sign(&mut v), Some(false));
        let mut v = [1, 0, 2];
        assert_eq!(sort_with_sign(&mut v), Some(true));
        let mut v = [1, 1];
        assert_eq!(sort_with_sign(&mut v), None);
    }

    #[test]
    fn wedge_is_graded_commutative() {
        let a = Multivector::<f64>::basis(0);
        let b = Multivector::<f64>::basis(3);
        assert_eq!(a.wedge(&b), -&b.wedge(&a));
        assert!(a.wedge(&a).is_zero());
    }

    #[test]
    fn dense_roundtrip_and_no_half_convention() {
        let m = Multivector::<f64>::monomial(&[1, 0], 2.0);
        let d = m.to_dense(2);
        // e1 ^ e0 = -(e0 (x) e1 - e1 (x) e0)
        assert_eq!(d, vec![0.0, -2.0, 2.0, 0.0]);
        assert_eq!(Multivector::from_dense(2, 2, &d), m);
    }

    #[test]
    fn substitution_is_multiplicative() {
        let m = Multivector::<f64>::monomial(&[0, 1], 1.0);
        let s = m.substitute(|i| {
            if i == 0 {
                &Multivector::basis(5) + &Multivector::basis(6)
            } else {
                Multivector::basis(7)
            }
        });
        assert_eq!(s.get(&[5, 7]), 1.0);
        assert_eq!(s.get(&[7, 6]), -1.0);
    }
}
