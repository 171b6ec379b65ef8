//! Scenario dispatch: each kind turns a config into a list of check records.
//!
//! Samples are evaluated in parallel. Sample `i` draws from its own stream of
//! the seeded generator, so the records do not depend on scheduling.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use nalgebra::DMatrix;
use quasidyn::drmatrix::{
    cartan_omega, defect_split, gauge_transform, iso21_triple, moduli_triple, su2_moduli, DynamicalTriple, GaugeMap,
    Iso21Maps, ModuliData, TripleValue,
};
use quasidyn::fockrosly::{fr_bracket, reduced_bracket, reduced_space, reduced_space_via_fr};
use quasidyn::group::{cayley_operator, exponential, ConjugacyClass};
use quasidyn::gspace::{
    build_pi_r_gspace, build_sklyanin, h_invariance_defect, poisson_action_defect, ClassicalDynamicalRMatrix,
};
use quasidyn::liealg::QuadraticLieAlgebra;
use quasidyn::manifold::{FdConfig, Point, ProductManifold};
use quasidyn::multivector::Multivector;
use quasidyn::quasipoisson::{
    assemble_on_group, assemble_reduced, build_pi_g, build_surface_quasi, decompose_on_section, fuse,
    gauge_covariance_defect, identity_section, quasi_defect, SurfaceRoute,
};
use quasidyn::sample;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CdrSpec, DecomposeSource, GoldenConvention, QuasiSpace, ScenarioConfig, ScenarioKind};
use crate::error::{CliError, Result};
use crate::report::{CheckRecord, DefectReport, Environment, TripleRow};

type Alg = Arc<QuadraticLieAlgebra<f64>>;

/// Default tolerances, overridable per check from the config.
fn default_tolerance(check: &str, kind: ScenarioKind) -> f64 {
    match (check, kind) {
        ("compat", ScenarioKind::Iso21) => 1e-10,
        ("compat" | "gdybe" | "morphism", ScenarioKind::ModuliTriple) => 1e-6,
        ("compat" | "gdybe" | "morphism", _) => 1e-5,
        ("cayley_zero" | "unified_split", _) => 1e-10,
        ("invariant_insensitivity", _) => 1e-6,
        (
            "closed_form" | "fit_residual" | "round_trip" | "theta_golden" | "pi_u_golden" | "r_golden"
            | "fock_rosly_form",
            _,
        ) => 1e-8,
        ("jacobi" | "ad_invariance" | "pairing_symmetry" | "rep_homomorphism", _) => 1e-12,
        _ => 1e-5,
    }
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    seed: u64,
    fd: FdConfig,
}

impl Ctx<'_> {
    fn tol(&self, check: &str) -> f64 {
        self.cfg.tolerance(check, default_tolerance(check, self.cfg.kind))
    }

    /// Step for second derivatives (Jacobiators, defects of gauged triples).
    fn nested(&self) -> FdConfig {
        FdConfig::new((self.fd.step * 10.0).max(1e-4), self.fd.richardson)
    }

    /// Evaluates one check, turning library errors and panics into failed
    /// records that keep the sample point.
    fn check(&self, name: &str, point: Value, eval: impl FnOnce() -> quasidyn::Result<f64>) -> CheckRecord {
        let tol = self.tol(name);
        match catch_unwind(AssertUnwindSafe(eval)) {
            Ok(Ok(v)) => CheckRecord::measured(name, point, v, tol),
            Ok(Err(e)) => CheckRecord::failed(name, point, tol, e.to_string()),
            Err(p) => {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "evaluation panicked".into());
                CheckRecord::failed(name, point, tol, msg)
            }
        }
    }

    fn per_sample(
        &self,
        run: impl Fn(usize, &mut sample::SampleRng) -> Vec<CheckRecord> + Sync + Send,
    ) -> Vec<CheckRecord> {
        let seed = self.seed;
        (0..self.cfg.samples)
            .into_par_iter()
            .map(|i| run(i, &mut sample::rng_stream(seed, i as u64)))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    fn per_grid(&self, run: impl Fn(f64) -> Vec<CheckRecord> + Sync + Send) -> Vec<CheckRecord> {
        self.cfg
            .grid
            .points()
            .into_par_iter()
            .map(run)
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| json!(r.iter().copied().collect::<Vec<f64>>()))
            .collect(),
    )
}

fn point_json(sample: usize, p: &Point<f64>, extra: Value) -> Value {
    let mut v = json!({
        "sample": sample,
        "chart": p.chart,
        "groups": p.groups.iter().map(matrix_json).collect::<Vec<_>>(),
    });
    if let (Value::Object(map), Value::Object(more)) = (&mut v, extra) {
        map.extend(more);
    }
    v
}

fn alpha_json(alpha: &[f64]) -> Value {
    json!({ "alpha": alpha })
}

fn value_distance(a: &TripleValue<f64>, b: &TripleValue<f64>) -> f64 {
    a.distance(b)
}

/// Rows of `r` and `theta` for a one-parameter triple over a 3-dimensional algebra.
fn triple_rows(tr: &DynamicalTriple<f64>, grid: &[f64]) -> Vec<TripleRow> {
    if tr.alg().dim() != 3 || tr.chart_dim() != 1 {
        return Vec::new();
    }
    grid.iter()
        .filter(|a| tr.check_interior(&[**a]).is_ok())
        .map(|&a| {
            let v = tr.at(&[a]);
            TripleRow {
                alpha: a,
                r_12: v.r.get(&[0, 1]),
                r_13: v.r.get(&[0, 2]),
                r_23: v.r.get(&[1, 2]),
                theta_1: v.theta[(0, 0)],
                theta_2: v.theta[(0, 1)],
                theta_3: v.theta[(0, 2)],
            }
        })
        .collect()
}

fn require_su2(alg: &Alg, cfg: &ScenarioConfig) -> Result<ModuliData<f64>> {
    if alg.name() != "su2" {
        return Err(CliError::config(
            "/algebra",
            format!("section `{}` is defined on su2, not `{}`", cfg.section, alg.name()),
        ));
    }
    Ok(su2_moduli(alg.clone())?)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<DefectReport> {
    cfg.validate()?;
    let alg = cfg.algebra.build()?;
    let ctx = Ctx {
        cfg,
        seed: cfg.seed.unwrap_or(0),
        fd: FdConfig::new(cfg.fd_step, cfg.richardson),
    };
    let (records, triple) = match cfg.kind {
        ScenarioKind::QuasiCheck => (quasi_check(&ctx, &alg)?, Vec::new()),
        ScenarioKind::Decompose => decompose(&ctx, &alg)?,
        ScenarioKind::ModuliTriple => moduli(&ctx, &alg)?,
        ScenarioKind::Gauge => gauge(&ctx, &alg)?,
        ScenarioKind::FockRosly => (fock_rosly(&ctx, &alg)?, Vec::new()),
        ScenarioKind::ReducedBracket => (reduced(&ctx, &alg)?, Vec::new()),
        ScenarioKind::Gspace => (gspace(&ctx, &alg)?, Vec::new()),
        ScenarioKind::Iso21 => (iso21(&ctx, &alg)?, Vec::new()),
    };
    let environment = Environment {
        algebra: cfg.algebra.label(),
        fd_step: cfg.fd_step,
        richardson: cfg.richardson,
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(DefectReport::new(
        cfg.id(),
        cfg.kind.name().to_string(),
        environment,
        records,
        triple,
    ))
}

fn quasi_check(ctx: &Ctx, alg: &Alg) -> Result<Vec<CheckRecord>> {
    let space = match ctx.cfg.space {
        QuasiSpace::Group => build_pi_g(alg.clone()),
        QuasiSpace::Double => fuse(&build_pi_g(alg.clone()), &build_pi_g(alg.clone()))?,
    };
    let m = &space.manifold;
    Ok(ctx.per_sample(|i, rng| {
        let x = sample::point(m, rng, 1.0, 1.5);
        (0..ctx.cfg.functions)
            .map(|j| {
                let (f, g, h) = (
                    sample::function(m, rng),
                    sample::function(m, rng),
                    sample::function(m, rng),
                );
                ctx.check("quasi_defect", point_json(i, &x, json!({ "functions": j })), || {
                    quasi_defect(&space, &f, &g, &h, &x, ctx.fd)
                })
            })
            .collect()
    }))
}

fn decompose(ctx: &Ctx, alg: &Alg) -> Result<(Vec<CheckRecord>, Vec<TripleRow>)> {
    match ctx.cfg.source {
        DecomposeSource::Moduli => {
            let data = require_su2(alg, ctx.cfg)?;
            let class = quasidyn::drmatrix::base_class(&data)?;
            let space = build_surface_quasi(alg.clone(), &[class.clone(), class], 0, SurfaceRoute::Fusion)?;
            let section = data.pair_section();
            let records = ctx.per_grid(|a| {
                let split = decompose_on_section(&space, &section, &[a]);
                let fit = match &split {
                    Ok(d) => Ok(d.residual),
                    Err(e) => Err(quasidyn::Error::Input(e.to_string())),
                };
                vec![
                    ctx.check("closed_form", alpha_json(&[a]), || {
                        let d = split?;
                        let dv = TripleValue {
                            pi_u: d.pi_u,
                            theta: d.theta,
                            r: d.r,
                        };
                        Ok(value_distance(&data.value(&[a])?, &dv))
                    }),
                    ctx.check("fit_residual", alpha_json(&[a]), || fit),
                ]
            });
            let tr = moduli_triple(&data);
            Ok((records, triple_rows(&tr, &ctx.cfg.grid.points())))
        }
        DecomposeSource::RandomTriple => {
            let k = ctx.cfg.chart_dim;
            if k == 0 {
                return Err(CliError::config("/chart_dim", "chart dimension must be positive"));
            }
            let tr = sample::polynomial_triple(alg.clone(), k, &mut sample::rng(ctx.seed));
            let space = assemble_on_group(&tr);
            let section = identity_section(&tr);
            let records = ctx.per_sample(|i, rng| {
                let pt: Vec<f64> = (0..k).map(|_| sample::uniform(rng, -0.9, 0.9)).collect();
                vec![ctx.check("round_trip", json!({ "sample": i, "alpha": pt }), || {
                    let d = decompose_on_section(&space, &section, &pt)?;
                    let back = TripleValue {
                        pi_u: d.pi_u,
                        theta: d.theta,
                        r: d.r,
                    };
                    Ok(value_distance(&tr.at(&pt), &back))
                })]
            });
            Ok((records, Vec::new()))
        }
    }
}

/// `r = tan(a) e1 ^ e2`, `theta = d/da (x) e3`, `pi_U = 0`, read in `convention`.
fn golden(alpha: f64, convention: GoldenConvention) -> TripleValue<f64> {
    let scale = match convention {
        GoldenConvention::Paper => 1.0,
        GoldenConvention::Library => -0.5,
    };
    TripleValue {
        pi_u: DMatrix::zeros(1, 1),
        theta: DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]),
        r: Multivector::monomial(&[0, 1], scale * alpha.tan()),
    }
}

fn defect_records(
    ctx: &Ctx,
    tr: &DynamicalTriple<f64>,
    omega: &Multivector<f64>,
    alpha: &[f64],
    fd: FdConfig,
) -> Vec<CheckRecord> {
    let split = defect_split(tr, omega, alpha, fd);
    let k = tr.chart_dim();
    let part = |f: &dyn Fn(&quasidyn::drmatrix::DefectSplit<f64>) -> f64| -> quasidyn::Result<f64> {
        match &split {
            Ok(s) => Ok(f(s)),
            Err(e) => Err(quasidyn::Error::Input(e.to_string())),
        }
    };
    vec![
        ctx.check("compat", alpha_json(alpha), || part(&|s| s.compat.max_abs())),
        ctx.check("gdybe", alpha_json(alpha), || part(&|s| s.gdybe.max_abs())),
        ctx.check("morphism", alpha_json(alpha), || part(&|s| s.morphism.max_abs())),
        ctx.check("unified_split", alpha_json(alpha), || part(&|s| s.mismatch(k))),
    ]
}

fn moduli(ctx: &Ctx, alg: &Alg) -> Result<(Vec<CheckRecord>, Vec<TripleRow>)> {
    let data = require_su2(alg, ctx.cfg)?;
    let tr = moduli_triple(&data);
    let omega = cartan_omega(alg);
    let convention = ctx.cfg.golden;
    let records = ctx.per_grid(|a| {
        let at = alpha_json(&[a]);
        let value = tr.check_interior(&[a]).and_then(|_| data.value(&[a]));
        let gold = golden(a, convention);
        let get = || match &value {
            Ok(v) => Ok(v.clone()),
            Err(e) => Err(quasidyn::Error::Input(e.to_string())),
        };
        let mut out = vec![
            ctx.check("theta_golden", at.clone(), || Ok((get()?.theta - &gold.theta).amax())),
            ctx.check("pi_u_golden", at.clone(), || Ok(get()?.pi_u.amax())),
            ctx.check("r_golden", at.clone(), || Ok(get()?.r.distance(&gold.r))),
            ctx.check("cayley_zero", at.clone(), || {
                tr.check_interior(&[a])?;
                let x = data.section().point(&[a]).groups[0].clone();
                Ok(cayley_operator(alg, &x)?.amax())
            }),
        ];
        out.extend(defect_records(ctx, &tr, &omega, &[a], ctx.fd));
        out
    });
    Ok((records, triple_rows(&tr, &ctx.cfg.grid.points())))
}

fn gauge_map(ctx: &Ctx, alg: &Alg) -> Result<GaugeMap<f64>> {
    let axis = ctx.cfg.gauge.axis.clone();
    if axis.len() != alg.dim() {
        return Err(CliError::config(
            "/gauge/axis",
            format!(
                "axis has {} entries, the algebra has dimension {}",
                axis.len(),
                alg.dim()
            ),
        ));
    }
    let rate = ctx.cfg.gauge.rate;
    let a2 = alg.clone();
    Ok(Arc::new(move |a: &[f64]| {
        let x: Vec<f64> = axis.iter().map(|c| c * rate * a[0]).collect();
        exponential(&a2, &x)
    }))
}

fn gauge(ctx: &Ctx, alg: &Alg) -> Result<(Vec<CheckRecord>, Vec<TripleRow>)> {
    let data = require_su2(alg, ctx.cfg)?;
    let tr = moduli_triple(&data);
    let gmap = gauge_map(ctx, alg)?;
    let gauged = gauge_transform(&tr, gmap.clone(), ctx.fd);
    let omega = cartan_omega(alg);
    let mut records = ctx.per_grid(|a| defect_records(ctx, &gauged, &omega, &[a], ctx.nested()));
    let target = build_pi_g(alg.clone());
    let original = assemble_reduced(&tr, &target)?;
    let moved = assemble_reduced(&gauged, &target)?;
    let m = &original.manifold;
    records.extend(ctx.per_sample(|i, rng| {
        let mut x = sample::point(m, rng, 1.2, 1.5);
        x.chart[0] = x.chart[0].clamp(-1.2, 1.2);
        (0..ctx.cfg.functions)
            .map(|j| {
                let (f, h) = (sample::function(m, rng), sample::function(m, rng));
                ctx.check("covariance", point_json(i, &x, json!({ "functions": j })), || {
                    gauge_covariance_defect(&original, &moved, gmap.clone(), &f, &h, &x, ctx.fd)
                })
            })
            .collect()
    }));
    Ok((records, triple_rows(&gauged, &ctx.cfg.grid.points())))
}

fn random_skew(rng: &mut sample::SampleRng, n: usize) -> DMatrix<f64> {
    let s = DMatrix::from_fn(n, n, |i, j| if i < j { sample::uniform(rng, -1.0, 1.0) } else { 0.0 });
    &s - s.transpose()
}

fn fock_rosly(ctx: &Ctx, alg: &Alg) -> Result<Vec<CheckRecord>> {
    let (n, genus) = (ctx.cfg.n, ctx.cfg.genus);
    if n + genus == 0 {
        return Err(CliError::config("/n", "need at least one puncture or handle"));
    }
    let dim = alg.dim();
    let mut setup = sample::rng_stream(ctx.seed, u64::MAX);
    let classes: Vec<ConjugacyClass<f64>> = (0..n)
        .map(|_| ConjugacyClass::new(alg, sample::group_element(alg, &mut setup, 1.0)))
        .collect::<quasidyn::Result<_>>()?;
    let fr = build_surface_quasi(alg.clone(), &classes, genus, SurfaceRoute::FockRosly)?;
    let fused = if genus == 0 {
        Some(build_surface_quasi(alg.clone(), &classes, 0, SurfaceRoute::Fusion)?)
    } else {
        None
    };
    let m = &fr.manifold;
    Ok(ctx.per_sample(|i, rng| {
        let x = sample::point(m, rng, 1.0, 1.5);
        let mut out = Vec::new();
        for j in 0..ctx.cfg.functions {
            let at = point_json(i, &x, json!({ "functions": j }));
            let (f, h, g) = (
                sample::function(m, rng),
                sample::function(m, rng),
                sample::function(m, rng),
            );
            if let Some(fused) = &fused {
                out.push(ctx.check("fusion_vs_fock_rosly", at.clone(), || {
                    let a = m.evaluate(&fused.pi, &[f.clone(), h.clone()], &x, ctx.fd)?;
                    let b = m.evaluate(&fr.pi, &[f.clone(), h.clone()], &x, ctx.fd)?;
                    Ok(a - b)
                }));
            }
            let inv = sample::invariant_function(m, rng);
            let (s1, s2) = (random_skew(rng, dim), random_skew(rng, dim));
            out.push(ctx.check("invariant_insensitivity", at.clone(), || {
                let r1 = alg.casimir() + s1;
                let r2 = alg.casimir() + s2;
                let a = fr_bracket(m, n, genus, &r1, &inv, &h, &x, ctx.fd)?;
                let b = fr_bracket(m, n, genus, &r2, &inv, &h, &x, ctx.fd)?;
                Ok(a - b)
            }));
            out.push(ctx.check("quasi_defect", at, || quasi_defect(&fr, &f, &h, &g, &x, ctx.fd)));
        }
        out
    }))
}

fn reduced(ctx: &Ctx, alg: &Alg) -> Result<Vec<CheckRecord>> {
    let data = require_su2(alg, ctx.cfg)?;
    let (n, genus) = (ctx.cfg.n, ctx.cfg.genus);
    if n < 2 || n - 2 + genus == 0 {
        return Err(CliError::config("/n", "need n >= 2 and n - 2 + genus >= 1"));
    }
    let tr = moduli_triple(&data);
    let space = reduced_space(&tr, n - 2, genus)?;
    let via_fr = reduced_space_via_fr(&tr, n - 2, genus);
    let m = &space.manifold;
    let nested = ctx.nested();
    Ok(ctx.per_sample(|i, rng| {
        let mut x = sample::point(m, rng, 1.2, 1.5);
        x.chart[0] = x.chart[0].clamp(-1.2, 1.2);
        let mut out = Vec::new();
        for j in 0..ctx.cfg.functions {
            let at = point_json(i, &x, json!({ "functions": j }));
            let (f, g, h) = (
                sample::function(m, rng),
                sample::function(m, rng),
                sample::function(m, rng),
            );
            out.push(ctx.check("jacobiator", at.clone(), || {
                m.jacobiator(&space.pi, &f, &g, &h, &x, nested)
            }));
            out.push(ctx.check("fock_rosly_form", at, || {
                let a = reduced_bracket(&space, &f, &g, &x, ctx.fd)?;
                let b = m.evaluate(&via_fr, &[f.clone(), g.clone()], &x, ctx.fd)?;
                Ok(a - b)
            }));
        }
        out
    }))
}

/// Laurent monomial `c prod x_i^{p_i}`.
fn monomial_value(coeff: f64, powers: &[i32], x: &[f64]) -> f64 {
    powers.iter().zip(x).fold(coeff, |acc, (p, v)| acc * v.powi(*p))
}

fn build_cdr(ctx: &Ctx, alg: &Alg) -> Result<(ClassicalDynamicalRMatrix<f64>, Multivector<f64>)> {
    match &ctx.cfg.cdr {
        CdrSpec::CartanLine { b } => {
            if alg.name() != "su2" {
                return Err(CliError::config("/cdr", "the cartan_line preset is defined on su2"));
            }
            let b = *b;
            let cdr = ClassicalDynamicalRMatrix {
                alg: alg.clone(),
                h: DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]),
                skew: Arc::new(move |x: &[f64]| {
                    let a = if b == 0.0 {
                        -0.5 / x[0]
                    } else {
                        -b / (2.0 * b * x[0]).tanh()
                    };
                    Multivector::monomial(&[0, 1], a)
                }),
                epsilon: 0.0,
                lower: vec![0.2],
                upper: vec![3.0],
            };
            Ok((cdr, Multivector::monomial(&[0, 1], b)))
        }
        CdrSpec::Inline {
            h,
            skew,
            r0,
            lower,
            upper,
        } => {
            let n = alg.dim();
            let k = h.len();
            if k == 0 || h.iter().any(|c| c.len() != n) {
                return Err(CliError::config("/cdr/h", format!("need columns of length {n}")));
            }
            if lower.len() != k || upper.len() != k {
                return Err(CliError::config("/cdr/lower", format!("chart box needs {k} bounds")));
            }
            for (idx, e) in skew.iter().enumerate() {
                if e.i >= n || e.j >= n || e.terms.iter().any(|t| t.powers.len() > k) {
                    return Err(CliError::config(
                        format!("/cdr/skew/{idx}"),
                        "index or power list out of range",
                    ));
                }
            }
            let mut r0m = Multivector::zero(2);
            for (idx, e) in r0.iter().enumerate() {
                if e.i >= n || e.j >= n {
                    return Err(CliError::config(format!("/cdr/r0/{idx}"), "index out of range"));
                }
                r0m.add_term(&[e.i, e.j], e.value);
            }
            let cols: Vec<f64> = h.iter().flatten().copied().collect();
            let skew = skew.clone();
            let cdr = ClassicalDynamicalRMatrix {
                alg: alg.clone(),
                h: DMatrix::from_column_slice(n, k, &cols),
                skew: Arc::new(move |x: &[f64]| {
                    let mut out = Multivector::zero(2);
                    for e in &skew {
                        let c: f64 = e.terms.iter().map(|t| monomial_value(t.coeff, &t.powers, x)).sum();
                        out.add_term(&[e.i, e.j], c);
                    }
                    out
                }),
                epsilon: 0.0,
                lower: lower.clone(),
                upper: upper.clone(),
            };
            Ok((cdr, r0m))
        }
    }
}

fn gspace(ctx: &Ctx, alg: &Alg) -> Result<Vec<CheckRecord>> {
    let (cdr, r0) = build_cdr(ctx, alg)?;
    let triple = cdr.as_triple()?;
    let omega = alg.graded_bracket(&r0, &r0)?.scale(0.5);
    let (m, pi) = build_pi_r_gspace(&cdr, &r0)?;
    let (gm, pg) = build_sklyanin(alg.clone(), &r0);
    let k = cdr.chart_dim();
    let nested = ctx.nested();
    Ok(ctx.per_sample(|i, rng| {
        let mut x = sample::point(&m, rng, 1.0, 1.0);
        for c in 0..k {
            let (lo, hi) = (cdr.lower[c], cdr.upper[c]);
            let pad = 0.1 * (hi - lo);
            x.chart[c] = sample::uniform(rng, lo + pad, hi - pad);
        }
        let mut out: Vec<CheckRecord> = defect_records(ctx, &triple, &omega, &x.chart, ctx.fd)
            .into_iter()
            .filter(|r| r.check != "unified_split")
            .map(|mut r| {
                r.point = point_json(i, &x, json!({}));
                r
            })
            .collect();
        for j in 0..ctx.cfg.functions {
            let at = point_json(i, &x, json!({ "functions": j }));
            let (f, g, h) = (
                sample::function(&m, rng),
                sample::function(&m, rng),
                sample::function(&m, rng),
            );
            let g1 = sample::group_element(alg, rng, 1.0);
            let u: Vec<f64> = sample::algebra_vector(rng, k, 1.5);
            out.push(ctx.check("jacobiator", at.clone(), || m.jacobiator(&pi, &f, &g, &h, &x, nested)));
            out.push(ctx.check("poisson_action", at.clone(), || {
                poisson_action_defect(&m, &pi, &gm, &pg, &g1, &x, &f, &g, ctx.fd)
            }));
            out.push(ctx.check("h_invariance", at, || {
                h_invariance_defect(&cdr, &m, &pi, &u, &x, &f, &g, ctx.fd)
            }));
        }
        out
    }))
}

fn iso21(ctx: &Ctx, alg: &Alg) -> Result<Vec<CheckRecord>> {
    if alg.name() != "iso21" {
        return Err(CliError::config(
            "/algebra",
            "the iso21 scenario needs the iso21 algebra",
        ));
    }
    let inv = alg.invariants();
    let mut records = vec![
        ctx.check("jacobi", json!({}), || Ok(inv.jacobi)),
        ctx.check("ad_invariance", json!({}), || Ok(inv.ad_invariance)),
        ctx.check("pairing_symmetry", json!({}), || Ok(inv.pairing_symmetry)),
        ctx.check("rep_homomorphism", json!({}), || Ok(inv.rep_homomorphism)),
    ];
    let spec = ctx.cfg.iso21.clone();
    let constant = |v: [f64; 3]| -> quasidyn::drmatrix::ChartVectorFn<f64> { Arc::new(move |_| v) };
    let v = spec.v;
    let maps = Iso21Maps {
        q_psi: constant(spec.q_psi),
        q_alpha: constant(spec.q_alpha),
        q_delta: constant(spec.q_delta),
        m: constant(spec.m),
        v: Arc::new(move |_| v),
    };
    let tr = iso21_triple(alg.clone(), vec![-2.0; 2], vec![2.0; 2], maps)?;
    records.extend(ctx.per_grid(|a| {
        let pt = [0.5 * a, a];
        vec![ctx.check("compat", alpha_json(&pt), || {
            Ok(quasidyn::drmatrix::compat_defect(&tr, &pt, None, ctx.fd)?.max_abs())
        })]
    }));
    Ok(records)
}

/// Samples of the su(2) moduli triple for plotting.
pub fn export_triple(grid: &[f64]) -> Result<Vec<TripleRow>> {
    let alg: Alg = Arc::new(QuadraticLieAlgebra::su2());
    let tr = moduli_triple(&su2_moduli(alg)?);
    Ok(triple_rows(&tr, grid))
}

/// One row of the bracket export.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BracketRow {
    pub sample: usize,
    pub alpha: f64,
    pub bracket: f64,
    pub bracket_fock_rosly: f64,
}

/// Reduced brackets of random function pairs on three-punctured spheres.
pub fn export_bracket(samples: usize, seed: u64, fd: FdConfig) -> Result<Vec<BracketRow>> {
    let alg: Alg = Arc::new(QuadraticLieAlgebra::su2());
    let tr = moduli_triple(&su2_moduli(alg)?);
    let space = reduced_space(&tr, 1, 0)?;
    let via_fr = reduced_space_via_fr(&tr, 1, 0);
    let m: &ProductManifold<f64> = &space.manifold;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample::rng_stream(seed, i as u64);
            let mut x = sample::point(m, &mut rng, 1.2, 1.5);
            x.chart[0] = x.chart[0].clamp(-1.2, 1.2);
            let f = sample::function(m, &mut rng);
            let g = sample::function(m, &mut rng);
            Ok(BracketRow {
                sample: i,
                alpha: x.chart[0],
                bracket: reduced_bracket(&space, &f, &g, &x, fd)?,
                bracket_fock_rosly: m.evaluate(&via_fr, &[f, g], &x, fd)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(json: &str) -> DefectReport {
        run_scenario(&ScenarioConfig::from_json(json).unwrap()).unwrap()
    }

    #[test]
    fn abelian_quasi_check_is_exactly_zero() {
        let r = run(r#"{"kind": "quasi_check", "algebra": "abelian:3", "samples": 3, "functions": 2, "seed": 1}"#);
        assert!(r.passed());
        assert!(r.records.iter().all(|c| c.residual == Some(0.0)));
        assert_eq!(r.records.len(), 6);
    }

    #[test]
    fn moduli_report_has_plot_rows() {
        let r = run(r#"{"kind": "moduli_triple", "golden": "library"}"#);
        assert!(r.passed(), "{}", r.to_markdown());
        assert_eq!(r.triple.len(), 5);
        let row = &r.triple[0];
        assert!((row.theta_3 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn failures_keep_their_point() {
        let r = run(r#"{"kind": "moduli_triple", "grid": [0.5]}"#);
        let bad: Vec<_> = r.records.iter().filter(|c| !c.pass).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].check, "r_golden");
        assert_eq!(bad[0].point["alpha"], json!([0.5]));
    }

    #[test]
    fn degenerate_points_become_failed_records() {
        // alpha = 1.6 lies outside the section chart
        let r = run(r#"{"kind": "moduli_triple", "golden": "library", "grid": [1.6]}"#);
        assert!(!r.passed());
        assert!(r.records.iter().all(|c| !c.pass && c.reason.is_some()));
    }

    #[test]
    fn wrong_algebra_is_a_config_error() {
        let cfg = ScenarioConfig::from_json(r#"{"kind": "gauge", "algebra": "iso21", "seed": 1}"#).unwrap();
        assert!(matches!(run_scenario(&cfg), Err(CliError::Config { .. })));
    }

    #[test]
    fn iso21_scenario_passes() {
        let r = run(r#"{"kind": "iso21", "algebra": "iso21", "iso21": {"v": [[0.3, 0, 1], [0, 2, 0], [1, 0, -1]]}}"#);
        assert!(r.passed(), "{}", r.to_markdown());
    }
}
