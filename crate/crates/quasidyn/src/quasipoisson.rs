//! Quasi-Poisson spaces: the group itself, fusion products, surfaces, the
//! quasi-Poisson defect, decomposition along a cross-section and assembly of
//! bivectors from dynamical triples.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::drmatrix::{DynamicalTriple, GaugeMap};
use crate::fockrosly;
use crate::group::ConjugacyClass;
use crate::liealg::QuadraticLieAlgebra;
use crate::manifold::{
    rho_of_algebra, wedge_pairs, ActionModel, CrossSection, FdConfig, FramedField, Point, ProductManifold, ScalarFn,
    SlotAction,
};
use crate::multivector::Multivector;
use crate::{Error, Result, Scalar};

/// Whether a group slot ranges over the whole group or over one conjugacy
/// class (this decides which tangent vectors are available at a point).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Group,
    Class,
}

/// A manifold with a bivector and a distinguished action.
#[derive(Clone, Debug)]
pub struct QuasiPoissonSpace<T: Scalar> {
    pub manifold: ProductManifold<T>,
    pub pi: FramedField<T>,
    pub action: ActionModel<T>,
    pub kinds: Vec<SlotKind>,
}

impl<T: Scalar> QuasiPoissonSpace<T> {
    pub fn alg(&self) -> &QuadraticLieAlgebra<T> {
        self.manifold.alg()
    }

    /// `rho(e_a)` as a framed field.
    pub fn generator_field(&self, a: usize) -> FramedField<T> {
        let m = self.manifold.clone();
        let act = self.action.clone();
        FramedField::new(1, move |p| act.generator(&m, a, p))
    }

    /// `rho(phi)` for the Cartan 3-tensor.
    pub fn rho_phi(&self) -> FramedField<T> {
        rho_of_algebra(&self.manifold, &self.action, self.alg().cartan_three_tensor())
    }

    /// Ambient vectors spanning the tangent space at `x`.
    pub fn tangent_spanning_set(&self, x: &Point<T>) -> Vec<DVector<T>> {
        let m = &self.manifold;
        let n = m.alg().dim();
        let mut out: Vec<DVector<T>> = (0..m.chart_dim()).map(|i| m.frame_vector(i, x)).collect();
        for (slot, kind) in self.kinds.iter().enumerate() {
            for a in 0..n {
                let v = match kind {
                    SlotKind::Group => m.frame_vector(m.left(slot, a), x),
                    SlotKind::Class => m.frame_vector(m.left(slot, a), x) - m.frame_vector(m.right(slot, a), x),
                };
                out.push(v);
            }
        }
        out
    }
}

/// `pi_G = 1/2 sum K^{ab} R_a ^ L_b` on one slot.
fn group_bivector<T: Scalar>(m: &ProductManifold<T>, slot: usize) -> Multivector<T> {
    let alg = m.alg();
    let kinv = alg.casimir();
    let n = alg.dim();
    let mut pi = Multivector::zero(2);
    for a in 0..n {
        for b in 0..n {
            pi.add_term(&[m.right(slot, a), m.left(slot, b)], T::lit(0.5) * kinv[(a, b)]);
        }
    }
    pi
}

/// The group acting on itself by conjugation with `pi_G = 1/2 sum R_a ^ L_a`
/// (orthonormal basis; `K^{ab}` in general).
pub fn build_pi_g<T: Scalar>(alg: Arc<QuadraticLieAlgebra<T>>) -> QuasiPoissonSpace<T> {
    let m = ProductManifold::new(alg, 0, 1);
    let pi = FramedField::constant(group_bivector(&m, 0));
    QuasiPoissonSpace {
        manifold: m,
        pi,
        action: ActionModel::uniform(SlotAction::Conjugation, 1),
        kinds: vec![SlotKind::Group],
    }
}

/// The same bivector viewed on a single conjugacy class.
pub fn build_class_space<T: Scalar>(alg: Arc<QuadraticLieAlgebra<T>>) -> QuasiPoissonSpace<T> {
    let mut s = build_pi_g(alg);
    s.kinds = vec![SlotKind::Class];
    s
}

fn same_algebra<T: Scalar>(a: &QuadraticLieAlgebra<T>, b: &QuadraticLieAlgebra<T>) -> bool {
    a.dim() == b.dim() && a.structure_constants() == b.structure_constants() && a.pairing() == b.pairing()
}

/// Index maps and point projections placing two spaces side by side.
struct Juxtaposition<T: Scalar> {
    manifold: ProductManifold<T>,
    left_chart: usize,
    right_chart: usize,
    left_slots: usize,
}

impl<T: Scalar> Juxtaposition<T> {
    fn new(a: &ProductManifold<T>, b: &ProductManifold<T>) -> Self {
        Self {
            manifold: ProductManifold::new(
                a.alg_arc().clone(),
                a.chart_dim() + b.chart_dim(),
                a.slots() + b.slots(),
            ),
            left_chart: a.chart_dim(),
            right_chart: b.chart_dim(),
            left_slots: a.slots(),
        }
    }

    fn embed_left(&self, f: &FramedField<T>) -> FramedField<T> {
        let (ka, kb, sa) = (self.left_chart, self.right_chart, self.left_slots);
        f.transport(
            move |p| Point::new(p.chart[..ka].to_vec(), p.groups[..sa].to_vec()),
            move |i| if i < ka { i } else { i + kb },
        )
    }

    fn embed_right(&self, f: &FramedField<T>) -> FramedField<T> {
        let (ka, kb, sa) = (self.left_chart, self.right_chart, self.left_slots);
        let shift = ka + 2 * self.manifold.alg().dim() * sa;
        f.transport(
            move |p| Point::new(p.chart[ka..].to_vec(), p.groups[sa..].to_vec()),
            move |i| if i < kb { ka + i } else { i + shift },
        )
    }
}

/// Fusion product: `pi_A + pi_B + 1/2 sum K^{ab} rho_A(e_a) ^ rho_B(e_b)` with
/// the diagonal action. For two copies of the group this is
/// `1/2 sum (R1 ^ L1 + R2 ^ L2 + X1 ^ X2)`, `X = L - R`.
pub fn fuse<T: Scalar>(a: &QuasiPoissonSpace<T>, b: &QuasiPoissonSpace<T>) -> Result<QuasiPoissonSpace<T>> {
    if !same_algebra(a.alg(), b.alg()) {
        return Err(Error::Input("fusion needs both spaces over the same algebra".into()));
    }
    let jx = Juxtaposition::new(&a.manifold, &b.manifold);
    let n = a.alg().dim();
    let kinv = a.alg().casimir().clone();
    let ga: Vec<FramedField<T>> = (0..n).map(|i| jx.embed_left(&a.generator_field(i))).collect();
    let gb: Vec<FramedField<T>> = (0..n).map(|i| jx.embed_right(&b.generator_field(i))).collect();
    let coupling = FramedField::new(2, move |p| {
        let va: Vec<Multivector<T>> = ga.iter().map(|g| g.at(p)).collect();
        let vb: Vec<Multivector<T>> = gb.iter().map(|g| g.at(p)).collect();
        let mut out = Multivector::zero(2);
        for i in 0..n {
            for j in 0..n {
                let c = kinv[(i, j)];
                if c != T::zero() {
                    out = &out + &va[i].wedge(&vb[j]).scale(T::lit(0.5) * c);
                }
            }
        }
        out
    });
    let pi = FramedField::sum(2, &[jx.embed_left(&a.pi), jx.embed_right(&b.pi), coupling]);
    Ok(QuasiPoissonSpace {
        action: a
            .action
            .product(&b.action, a.manifold.chart_dim(), b.manifold.chart_dim()),
        kinds: a.kinds.iter().chain(&b.kinds).copied().collect(),
        manifold: jx.manifold,
        pi,
    })
}

/// How the surface bivector is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceRoute {
    /// Iterated fusion of the class factors (genus zero only).
    Fusion,
    /// Fock-Rosly bivector with the Casimir, restricted to the classes.
    FockRosly,
}

/// Quasi-Poisson space for a surface with `classes.len()` punctures and the
/// given genus: `n` class slots followed by `2 genus` group slots, with the
/// simultaneous conjugation action.
pub fn build_surface_quasi<T: Scalar>(
    alg: Arc<QuadraticLieAlgebra<T>>,
    classes: &[ConjugacyClass<T>],
    genus: usize,
    route: SurfaceRoute,
) -> Result<QuasiPoissonSpace<T>> {
    let n = classes.len();
    if n + genus == 0 {
        return Err(Error::Input("surface needs at least one puncture or handle".into()));
    }
    match route {
        SurfaceRoute::Fusion => {
            if genus > 0 {
                return Err(Error::NotImplemented(
                    "fusion route for positive genus (use the Fock-Rosly route)".into(),
                ));
            }
            let mut space = build_class_space(alg.clone());
            for _ in 1..n {
                space = fuse(&space, &build_class_space(alg.clone()))?;
            }
            Ok(space)
        }
        SurfaceRoute::FockRosly => {
            let slots = n + 2 * genus;
            let m = ProductManifold::new(alg.clone(), 0, slots);
            let kappa = alg.casimir().clone();
            let pi = fockrosly::fr_bivector(&m, n, genus, &kappa, T::lit(fockrosly::PAIRING_FACTOR));
            let mut kinds = vec![SlotKind::Class; n];
            kinds.extend(std::iter::repeat_n(SlotKind::Group, 2 * genus));
            Ok(QuasiPoissonSpace {
                manifold: m,
                pi: FramedField::constant(pi),
                action: ActionModel::uniform(SlotAction::Conjugation, slots),
                kinds,
            })
        }
    }
}

/// `([pi, pi] - rho(phi))(df, dg, dh)` at `x`, via the Schouten bracket.
pub fn quasi_defect<T: Scalar>(
    space: &QuasiPoissonSpace<T>,
    f: &ScalarFn<T>,
    g: &ScalarFn<T>,
    h: &ScalarFn<T>,
    x: &Point<T>,
    fd: FdConfig,
) -> Result<T> {
    let m = &space.manifold;
    let br = m.schouten(&space.pi, &space.pi, x, fd)?;
    let diff = &br - &space.rho_phi().at(x);
    m.evaluate_at(&diff, &[f.clone(), g.clone(), h.clone()], x, fd)
}

/// The same defect through nested brackets: `2 Jac(f,g,h) - rho(phi)(df,dg,dh)`.
pub fn quasi_defect_by_jacobiator<T: Scalar>(
    space: &QuasiPoissonSpace<T>,
    f: &ScalarFn<T>,
    g: &ScalarFn<T>,
    h: &ScalarFn<T>,
    x: &Point<T>,
    fd: FdConfig,
) -> Result<T> {
    let m = &space.manifold;
    let jac = m.jacobiator(&space.pi, f, g, h, x, fd)?;
    let phi = m.evaluate(&space.rho_phi(), &[f.clone(), g.clone(), h.clone()], x, fd)?;
    Ok(T::lit(2.0) * jac - phi)
}

/// `pi(x)` split along `T U (+) rho(g)`.
#[derive(Clone, Debug)]
pub struct Decomposition<T: Scalar> {
    /// Skew `k x k` matrix of the chart bivector.
    pub pi_u: DMatrix<T>,
    /// `k x n` coefficients of `theta = sum theta^{ia} d/dalpha_i (x) e_a`.
    pub theta: DMatrix<T>,
    pub r: Multivector<T>,
    /// Largest residual of the least-squares fit.
    pub residual: f64,
}

fn rank<T: Scalar>(vs: &[DVector<T>], rel: f64) -> (usize, T) {
    if vs.is_empty() {
        return (0, T::zero());
    }
    let m = DMatrix::from_columns(vs);
    let sv = m.svd(false, false).singular_values;
    let smax = sv.max();
    let cut = T::lit(rel) * smax;
    let kept: Vec<T> = sv.iter().copied().filter(|s| *s > cut).collect();
    let smin = kept.iter().copied().fold(smax, |a, b| a.min(b));
    (kept.len(), smin / smax.max(T::lit(1e-300)))
}

/// Splits `pi_M` at `embed(alpha)` as `pi_U + rho(theta-hat) + rho(r)`, with
/// `theta-hat = sum theta^{ia} d_i ^ e_a`, for the homomorphic generators
/// `rho`. Written with the generators `-rho` of the flows
/// `t -> exp(t e).x` this is `pi_U - rho'(theta-hat) + rho'(r)`.
pub fn decompose_on_section<T: Scalar>(
    space: &QuasiPoissonSpace<T>,
    section: &CrossSection<T>,
    alpha: &[T],
) -> Result<Decomposition<T>> {
    section.check_interior(alpha)?;
    let m = &space.manifold;
    let n = m.alg().dim();
    let k = section.dim;
    let x = section.point(alpha);
    m.check_point(&x)?;
    let u = section.tangents(m, alpha);
    let rho: Vec<DVector<T>> = (0..n)
        .map(|a| m.ambient_vector(&space.action.generator(m, a, &x), &x))
        .collect();
    let (rank_rho, smin) = rank(&rho, 1e-8);
    if rank_rho < n {
        return Err(Error::Stabilizer(smin.as_f64()));
    }
    let mut both = u.clone();
    both.extend(rho.iter().cloned());
    let (rank_both, _) = rank(&both, 1e-8);
    let (rank_tangent, _) = rank(&space.tangent_spanning_set(&x), 1e-8);
    if rank_both != k + n || rank_tangent != k + n {
        return Err(Error::Transversality(format!(
            "rank of T U + rho(g) is {rank_both}, expected {} (tangent space rank {rank_tangent})",
            k + n
        )));
    }
    let mut cols = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            cols.push(wedge_pairs(&u[i], &u[j]));
        }
    }
    for ui in &u {
        for ra in &rho {
            cols.push(wedge_pairs(ui, ra));
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            cols.push(wedge_pairs(&rho[a], &rho[b]));
        }
    }
    let target = m.ambient_bivector(&space.pi.at(&x), &x);
    let basis = DMatrix::from_columns(&cols);
    let svd = basis.clone().svd(true, true);
    let eps = svd.singular_values.max() * T::lit(1e-12);
    let y = svd
        .solve(&target, eps)
        .map_err(|e| Error::Transversality(e.to_string()))?;
    let residual = (&basis * &y - &target).amax().as_f64();
    let mut pos = 0;
    let mut pi_u = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            pi_u[(i, j)] = y[pos];
            pi_u[(j, i)] = -y[pos];
            pos += 1;
        }
    }
    let mut theta = DMatrix::zeros(k, n);
    for i in 0..k {
        for a in 0..n {
            theta[(i, a)] = y[pos];
            pos += 1;
        }
    }
    let mut r = Multivector::zero(2);
    for a in 0..n {
        for b in (a + 1)..n {
            r.add_term(&[a, b], y[pos]);
            pos += 1;
        }
    }
    Ok(Decomposition {
        pi_u,
        theta,
        r,
        residual,
    })
}

/// Chart bivector `sum_{i<j} pi^{ij} d_i ^ d_j` with frame indices shifted by `offset`.
pub(crate) fn chart_bivector<T: Scalar>(pi: &DMatrix<T>, offset: usize) -> Multivector<T> {
    let mut out = Multivector::zero(2);
    for i in 0..pi.nrows() {
        for j in (i + 1)..pi.ncols() {
            out.add_term(&[offset + i, offset + j], pi[(i, j)]);
        }
    }
    out
}

/// `pi_U - sum theta^{ia} d_i ^ L_a + sum r^{ab} L_a ^ L_b` on `U x G`.
///
/// This is quasi-Poisson for left multiplication on the group factor exactly
/// when the triple solves the generalized equations with the Cartan 3-tensor.
pub fn assemble_on_group<T: Scalar>(triple: &DynamicalTriple<T>) -> QuasiPoissonSpace<T> {
    let k = triple.chart_dim();
    let m = ProductManifold::new(triple.alg_arc().clone(), k, 1);
    let n = m.alg().dim();
    let tr = triple.clone();
    let mm = m.clone();
    let pi = FramedField::new(2, move |p: &Point<T>| {
        let alpha = &p.chart[..k];
        let v = tr.at(alpha);
        let mut out = chart_bivector(&v.pi_u, 0);
        for i in 0..k {
            for a in 0..n {
                out.add_term(&[i, mm.left(0, a)], -v.theta[(i, a)]);
            }
        }
        out = &out + &v.r.map_indices(|a| mm.left(0, a));
        out
    });
    QuasiPoissonSpace {
        manifold: m,
        pi,
        action: ActionModel::uniform(SlotAction::LeftMultiplication, 1),
        kinds: vec![SlotKind::Group],
    }
}

/// The section `alpha -> (alpha, e)` of `U x G`, with unit chart tangents.
pub fn identity_section<T: Scalar>(triple: &DynamicalTriple<T>) -> CrossSection<T> {
    let k = triple.chart_dim();
    let size = triple.alg().rep_size();
    let m = ProductManifold::new(triple.alg_arc().clone(), k, 1);
    let ambient = m.ambient_dim();
    CrossSection::new(k, triple.lower.clone(), triple.upper.clone(), move |a: &[T]| {
        Point::new(a.to_vec(), vec![DMatrix::identity(size, size)])
    })
    .with_tangent(move |_| {
        (0..k)
            .map(|i| {
                let mut v = DVector::zeros(ambient);
                v[i] = T::one();
                v
            })
            .collect()
    })
}

/// `pi_U - rho_N(theta-hat) + rho_N(r) + pi_N` on `U x N`, with the action of
/// `N` carried along (the `U` factor is not acted on).
pub fn assemble_reduced<T: Scalar>(
    triple: &DynamicalTriple<T>,
    target: &QuasiPoissonSpace<T>,
) -> Result<QuasiPoissonSpace<T>> {
    if !same_algebra(triple.alg(), target.alg()) {
        return Err(Error::Input("triple and target use different algebras".into()));
    }
    let k = triple.chart_dim();
    let u_space = ProductManifold::new(triple.alg_arc().clone(), k, 0);
    let jx = Juxtaposition::new(&u_space, &target.manifold);
    let m = jx.manifold.clone();
    let n = m.alg().dim();
    // generators of N moved into the product frame
    let gens: Vec<FramedField<T>> = (0..n).map(|a| jx.embed_right(&target.generator_field(a))).collect();
    let tr = triple.clone();
    let coupling = FramedField::new(2, move |p: &Point<T>| {
        let v = tr.at(&p.chart[..k]);
        let rho: Vec<Multivector<T>> = gens.iter().map(|g| g.at(p)).collect();
        let mut out = chart_bivector(&v.pi_u, 0);
        for i in 0..k {
            for a in 0..n {
                let c = v.theta[(i, a)];
                if c != T::zero() {
                    out = &out - &Multivector::basis(i).wedge(&rho[a]).scale(c);
                }
            }
        }
        for (idx, c) in v.r.terms() {
            out = &out + &rho[idx[0]].wedge(&rho[idx[1]]).scale(c);
        }
        out
    });
    let pi = coupling.add(&jx.embed_right(&target.pi));
    let action = ActionModel {
        slots: Vec::new(),
        chart: None,
    }
    .product(&target.action, k, target.manifold.chart_dim());
    let kinds = target.kinds.clone();
    Ok(QuasiPoissonSpace {
        manifold: m,
        pi,
        action,
        kinds,
    })
}

/// `Phi(alpha, n) = (alpha, g(alpha) n_i g(alpha)^-1)` on `U x N`, every
/// group slot conjugated by the gauge map.
pub fn gauge_conjugation<T: Scalar>(
    gmap: GaugeMap<T>,
    k: usize,
) -> impl Fn(&Point<T>) -> Point<T> + Send + Sync + Clone + 'static {
    move |p: &Point<T>| {
        let g = gmap(&p.chart[..k]);
        let gi = g
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(g.nrows(), g.ncols(), T::lit(f64::NAN)));
        let groups = p.groups.iter().map(|x| &g * x * &gi).collect();
        Point::new(p.chart.clone(), groups)
    }
}

/// `{F o Phi, H o Phi}_r (x) - {F, H}_{r^g} (Phi(x))` with `Phi` the gauge
/// conjugation, `original` assembled from the triple and `gauged` from its
/// gauge transform on the same target.
#[allow(clippy::too_many_arguments)]
pub fn gauge_covariance_defect<T: Scalar>(
    original: &QuasiPoissonSpace<T>,
    gauged: &QuasiPoissonSpace<T>,
    gmap: GaugeMap<T>,
    f: &ScalarFn<T>,
    h: &ScalarFn<T>,
    x: &Point<T>,
    fd: FdConfig,
) -> Result<T> {
    let m = &original.manifold;
    let phi = gauge_conjugation(gmap, m.chart_dim());
    let pull = |s: &ScalarFn<T>| -> ScalarFn<T> {
        let (s, phi) = (s.clone(), phi.clone());
        Arc::new(move |p: &Point<T>| s(&phi(p)))
    };
    let lhs = m.evaluate(&original.pi, &[pull(f), pull(h)], x, fd)?;
    let rhs = gauged
        .manifold
        .evaluate(&gauged.pi, &[f.clone(), h.clone()], &phi(x), fd)?;
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn su2() -> Arc<QuadraticLieAlgebra<f64>> {
        Arc::new(QuadraticLieAlgebra::su2())
    }

    #[test]
    fn pi_g_vanishes_at_identity() {
        let s = build_pi_g(su2());
        let x = Point::groups_only(vec![DMatrix::identity(4, 4)]);
        let mut rng = sample::rng(2);
        let f = sample::function(&s.manifold, &mut rng);
        let g = sample::function(&s.manifold, &mut rng);
        let v = s.manifold.evaluate(&s.pi, &[f, g], &x, FdConfig::default()).unwrap();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn pi_g_is_quasi_poisson() {
        let s = build_pi_g(su2());
        let mut rng = sample::rng(5);
        for _ in 0..3 {
            let x = sample::point(&s.manifold, &mut rng, 1.0, 1.5);
            let f = sample::function(&s.manifold, &mut rng);
            let g = sample::function(&s.manifold, &mut rng);
            let h = sample::function(&s.manifold, &mut rng);
            let d = quasi_defect(&s, &f, &g, &h, &x, FdConfig::default()).unwrap();
            assert!(d.abs() < 1e-6, "{d}");
            // conjugation orbits in SU(2) are 2-dimensional, so rho(phi) vanishes
            let j = quasi_defect_by_jacobiator(&s, &f, &g, &h, &x, FdConfig::nested()).unwrap();
            assert!(j.abs() < 1e-4, "{j}");
        }
    }

    #[test]
    fn fused_pair_is_quasi_poisson() {
        let alg = su2();
        let s = fuse(&build_pi_g(alg.clone()), &build_pi_g(alg)).unwrap();
        let mut rng = sample::rng(9);
        let x = sample::point(&s.manifold, &mut rng, 1.0, 1.5);
        let f = sample::function(&s.manifold, &mut rng);
        let g = sample::function(&s.manifold, &mut rng);
        let h = sample::function(&s.manifold, &mut rng);
        let d = quasi_defect(&s, &f, &g, &h, &x, FdConfig::default()).unwrap();
        assert!(d.abs() < 1e-6, "{d}");
        let phi = s
            .manifold
            .evaluate(&s.rho_phi(), &[f, g, h], &x, FdConfig::default())
            .unwrap();
        assert!(phi.abs() > 1e-3, "{phi}");
    }
}
