//! Pointwise Schouten bracket over a frame with constant structure functions.
//!
//! A field is written `A = sum_I a_I v_I` with `v_I` a sorted wedge monomial of
//! frame elements. The bracket is expanded as a graded biderivation:
//!
//! ```text
//! [a v_I, b v_J] = a sum_k (-1)^(p-k) v_{I_k}(b) v_{I\k} ^ v_J
//!                - b (-1)^((p-1)(q-1)) sum_l (-1)^(q-l) v_{J_l}(a) v_{J\l} ^ v_I
//!                + a b sum_{k,l} (-1)^(k+l) [v_{I_k}, v_{J_l}] ^ v_{I\k} ^ v_{J\l}
//! ```
//!
//! with 1-based positions `k`, `l`. This is the bracket for which
//! `[pi, pi](df, dg, dh)` equals twice the Jacobiator of `pi`.

use std::collections::HashMap;

use crate::multivector::Multivector;
use crate::Scalar;

/// Structure relations `[v_i, v_j] = sum_k c_ij^k v_k` of a frame.
pub trait FrameAlgebra<T: Scalar> {
    fn frame_bracket(&self, i: usize, j: usize) -> Multivector<T>;
}

/// Directional derivatives of a coefficient multivector along frame elements.
/// Missing entries are treated as zero (constant coefficients or anchors that
/// vanish).
pub type Derivatives<T> = HashMap<usize, Multivector<T>>;

fn without(idx: &[usize], pos: usize) -> impl Iterator<Item = usize> + '_ {
    idx.iter().enumerate().filter(move |&(p, _)| p != pos).map(|(_, &i)| i)
}

fn parity_sign<T: Scalar>(exp: i64) -> T {
    if exp.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Schouten bracket of two fields given their coefficients and first
/// derivatives at one point.
///
/// `da` must hold the derivatives of `a` along every frame index that occurs in
/// `b`, and `db` those of `b` along every index occurring in `a`.
pub fn bracket<T: Scalar, F: FrameAlgebra<T> + ?Sized>(
    frame: &F,
    a: &Multivector<T>,
    da: &Derivatives<T>,
    b: &Multivector<T>,
    db: &Derivatives<T>,
) -> Multivector<T> {
    let p = a.degree();
    let q = b.degree();
    let out_degree = (p + q).saturating_sub(1);
    let mut out = Multivector::zero(out_degree);
    if p + q == 0 {
        return out;
    }
    let (pi, qi) = (p as i64, q as i64);
    let mut buf = Vec::with_capacity(out_degree);
    for (ia, ca) in a.terms() {
        for (jb, cb) in b.terms() {
            // derivative of b's coefficient along the legs of a
            for (k, &v) in ia.iter().enumerate() {
                let Some(d) = db.get(&v) else { continue };
                let dv = d.get(jb);
                if dv == T::zero() {
                    continue;
                }
                let s: T = parity_sign(pi - (k as i64 + 1));
                buf.clear();
                buf.extend(without(ia, k));
                buf.extend_from_slice(jb);
                out.add_term(&buf, s * ca * dv);
            }
            // derivative of a's coefficient along the legs of b
            for (l, &v) in jb.iter().enumerate() {
                let Some(d) = da.get(&v) else { continue };
                let dv = d.get(ia);
                if dv == T::zero() {
                    continue;
                }
                let s: T = parity_sign((pi - 1) * (qi - 1) + qi - (l as i64 + 1) + 1);
                buf.clear();
                buf.extend(without(jb, l));
                buf.extend_from_slice(ia);
                out.add_term(&buf, s * cb * dv);
            }
            // structure relations of the frame
            for (k, &vi) in ia.iter().enumerate() {
                for (l, &vj) in jb.iter().enumerate() {
                    let br = frame.frame_bracket(vi, vj);
                    if br.is_zero() {
                        continue;
                    }
                    let s: T = parity_sign((k + l) as i64);
                    for (c, cc) in br.terms() {
                        buf.clear();
                        buf.push(c[0]);
                        buf.extend(without(ia, k));
                        buf.extend(without(jb, l));
                        out.add_term(&buf, s * ca * cb * cc);
                    }
                }
            }
        }
    }
    out
}

/// Bracket of constant-coefficient elements (only structure relations enter).
pub fn algebraic_bracket<T: Scalar, F: FrameAlgebra<T> + ?Sized>(
    frame: &F,
    a: &Multivector<T>,
    b: &Multivector<T>,
) -> Multivector<T> {
    let none = Derivatives::new();
    bracket(frame, a, &none, b, &none)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Commuting coordinate frame on R^n.
    struct Flat;
    impl FrameAlgebra<f64> for Flat {
        fn frame_bracket(&self, _: usize, _: usize) -> Multivector<f64> {
            Multivector::zero(1)
        }
    }

    #[test]
    fn vector_fields_give_lie_bracket() {
        // X = x1 d0 at a point with x1 = 2 ; Y = d1
        // [X, Y] = -(d1 x1) d0 = -d0
        let x = Multivector::monomial(&[0], 2.0);
        let mut dx = Derivatives::new();
        dx.insert(1, Multivector::monomial(&[0], 1.0));
        let y = Multivector::basis(1);
        let dy = Derivatives::new();
        let br = bracket(&Flat, &x, &dx, &y, &dy);
        assert_eq!(br.get(&[0]), -1.0);
    }

    #[test]
    fn function_bracket_is_directional_derivative() {
        // [X, f] = X f for X = d0, f with d0 f = 3
        let x = Multivector::basis(0);
        let f = Multivector::scalar(5.0);
        let mut df = Derivatives::new();
        df.insert(0, Multivector::scalar(3.0));
        let br = bracket(&Flat, &x, &Derivatives::new(), &f, &df);
        assert_eq!(br.degree(), 0);
        assert_eq!(br.get(&[]), 3.0);
    }
}
