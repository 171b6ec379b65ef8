//! Scenario configuration: parsing, presets and validation.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use quasidyn::liealg::{AlgebraSpec, QuadraticLieAlgebra};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    QuasiCheck,
    Decompose,
    ModuliTriple,
    Gauge,
    FockRosly,
    ReducedBracket,
    Gspace,
    Iso21,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        Self::QuasiCheck,
        Self::Decompose,
        Self::ModuliTriple,
        Self::Gauge,
        Self::FockRosly,
        Self::ReducedBracket,
        Self::Gspace,
        Self::Iso21,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::QuasiCheck => "quasi_check",
            Self::Decompose => "decompose",
            Self::ModuliTriple => "moduli_triple",
            Self::Gauge => "gauge",
            Self::FockRosly => "fock_rosly",
            Self::ReducedBracket => "reduced_bracket",
            Self::Gspace => "gspace",
            Self::Iso21 => "iso21",
        }
    }

    /// Whether the scenario draws random points or functions.
    pub fn samples_randomly(self, cfg: &ScenarioConfig) -> bool {
        match self {
            Self::ModuliTriple | Self::Iso21 => false,
            Self::Decompose => cfg.source == DecomposeSource::RandomTriple,
            _ => true,
        }
    }
}

/// Named preset or inline definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Preset(String),
    Inline(AlgebraSpec),
}

impl Default for AlgebraRef {
    fn default() -> Self {
        Self::Preset("su2".into())
    }
}

impl AlgebraRef {
    pub fn label(&self) -> String {
        match self {
            Self::Preset(name) => name.clone(),
            Self::Inline(_) => "inline".into(),
        }
    }

    pub fn build(&self) -> Result<Arc<QuadraticLieAlgebra<f64>>> {
        let alg = match self {
            Self::Preset(name) => QuadraticLieAlgebra::preset(name).map_err(|e| match e {
                quasidyn::Error::UnknownPreset(n) => CliError::Lookup {
                    what: "algebra preset",
                    name: n,
                },
                other => CliError::config("/algebra", other.to_string()),
            })?,
            Self::Inline(spec) => QuadraticLieAlgebra::from_spec("inline", spec)
                .map_err(|e| CliError::config("/algebra", e.to_string()))?,
        };
        Ok(Arc::new(alg))
    }
}

/// A chart grid: explicit values, or `from..=to` by `step` with the points
/// `|a| < exclude_abs_below` dropped.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Range {
        from: f64,
        to: f64,
        step: f64,
        #[serde(default)]
        exclude_abs_below: f64,
    },
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Self::Values(v) => v.clone(),
            Self::Range {
                from,
                to,
                step,
                exclude_abs_below,
            } => {
                let count = ((to - from) / step + 1e-9).floor() as usize + 1;
                (0..count)
                    .map(|i| from + step * i as f64)
                    .filter(|a| a.abs() >= *exclude_abs_below)
                    .collect()
            }
        }
    }
}

fn default_grid() -> GridSpec {
    GridSpec::Values(vec![-1.2, -0.5, 0.3, 0.7, 1.2])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecomposeSource {
    /// The closed-form triple of two su(2) classes against the numerical split.
    #[default]
    Moduli,
    /// A random polynomial triple assembled on `U x G` and split again.
    RandomTriple,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuasiSpace {
    /// The group with `pi_G`.
    #[default]
    Group,
    /// The fusion product of two copies of the group.
    Double,
}

/// Which normalisation the golden values of the su(2) example are read in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldenConvention {
    /// `r = tan(a) e1 ^ e2` exactly as displayed in the source.
    #[default]
    Paper,
    /// The displayed values carried over to the library conventions
    /// (unnormalised wedge, `- rho(theta-hat)` in the splitting): `r = -tan(a)/2 e1 ^ e2`.
    Library,
}

/// Gauge map `g(alpha) = exp(rate alpha_0 axis)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    #[serde(default = "default_axis")]
    pub axis: Vec<f64>,
    #[serde(default = "one")]
    pub rate: f64,
}

fn default_axis() -> Vec<f64> {
    vec![1.0, 0.0, 0.0]
}

fn one() -> f64 {
    1.0
}

impl Default for GaugeSpec {
    fn default() -> Self {
        Self {
            axis: default_axis(),
            rate: 1.0,
        }
    }
}

/// One monomial `coeff * prod x_i^{powers_i}`; negative powers are allowed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    #[serde(default)]
    pub powers: Vec<i32>,
}

/// Coefficient of `e_i ^ e_j` as a Laurent polynomial in the chart.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewEntry {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<Monomial>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Classical dynamical r-matrix data for the `gspace` scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum CdrSpec {
    /// su(2) over the line spanned by `e3`: `A(x) = -b coth(2 b x) e1 ^ e2`
    /// with `r0 = b e1 ^ e2` (`-1/(2x)` when `b = 0`).
    CartanLine {
        #[serde(default)]
        b: f64,
    },
    /// `h` by columns, `A_r` by Laurent polynomials, `r0` constant.
    Inline {
        h: Vec<Vec<f64>>,
        #[serde(default)]
        skew: Vec<SkewEntry>,
        #[serde(default)]
        r0: Vec<ConstantEntry>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl Default for CdrSpec {
    fn default() -> Self {
        Self::CartanLine { b: 0.0 }
    }
}

/// Constant maps of the iso(2,1) template.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Iso21Spec {
    #[serde(default = "identity3")]
    pub v: [[f64; 3]; 3],
    #[serde(default)]
    pub q_psi: [f64; 3],
    #[serde(default)]
    pub q_alpha: [f64; 3],
    #[serde(default)]
    pub q_delta: [f64; 3],
    #[serde(default)]
    pub m: [f64; 3],
}

fn identity3() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

impl Default for Iso21Spec {
    fn default() -> Self {
        Self {
            v: identity3(),
            q_psi: [0.0; 3],
            q_alpha: [0.0; 3],
            q_delta: [0.0; 3],
            m: [0.0; 3],
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub md: Option<PathBuf>,
    /// Plot-ready samples of `r(alpha)` and `theta(alpha)`.
    pub triple_csv: Option<PathBuf>,
}

pub const SECTION_PRESETS: [&str; 1] = ["paper_su2"];
pub const CDR_PRESETS: [&str; 2] = ["cartan_line", "inline"];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub id: Option<String>,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub algebra: AlgebraRef,
    #[serde(default = "default_section")]
    pub section: String,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    /// Random sample points.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Test functions (or function tuples) per sample point.
    #[serde(default = "default_functions")]
    pub functions: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub richardson: bool,
    /// Per-check tolerance overrides.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Punctures of the surface (`fock_rosly`, `reduced_bracket`).
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub genus: usize,
    #[serde(default)]
    pub space: QuasiSpace,
    #[serde(default)]
    pub source: DecomposeSource,
    #[serde(default)]
    pub golden: GoldenConvention,
    #[serde(default)]
    pub gauge: GaugeSpec,
    #[serde(default)]
    pub cdr: CdrSpec,
    #[serde(default)]
    pub iso21: Iso21Spec,
    /// Chart dimension of the random triple in `decompose`.
    #[serde(default = "default_chart_dim")]
    pub chart_dim: usize,
    #[serde(default)]
    pub output: Outputs,
}

fn default_section() -> String {
    "paper_su2".into()
}

fn default_samples() -> usize {
    10
}

fn default_functions() -> usize {
    5
}

fn default_fd_step() -> f64 {
    1e-5
}

fn default_n() -> usize {
    3
}

fn default_chart_dim() -> usize {
    2
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub fd_step: Option<f64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl ScenarioConfig {
    /// Parses and validates, reporting the location of any violation as a
    /// JSON pointer.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Deserialises without the semantic checks, for callers that still
    /// apply overrides (a seed given on the command line, say).
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = path_to_pointer(e.path());
            CliError::config(pointer, e.inner().to_string())
        })
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(h) = o.fd_step {
            self.fd_step = h;
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(t) = o.tol {
            self.tolerances.insert("*".into(), t);
        }
        self.validate()?;
        Ok(self)
    }

    // negated comparisons reject NaN as well
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(CliError::config("/fd_step", "must be a positive number"));
        }
        for (name, t) in &self.tolerances {
            if !(t.is_finite() && *t > 0.0) {
                return Err(CliError::config(
                    format!("/tolerances/{}", escape(name)),
                    "tolerances must be positive",
                ));
            }
        }
        if let GridSpec::Range { from, to, step, .. } = &self.grid {
            if !(step.is_finite() && *step > 0.0) || !(from <= to) {
                return Err(CliError::config("/grid", "need from <= to and a positive step"));
            }
        }
        if self.grid.points().is_empty() {
            return Err(CliError::config("/grid", "grid has no points"));
        }
        if self.kind.samples_randomly(self) && self.samples > 0 && self.seed.is_none() {
            return Err(CliError::config("/seed", "random sampling requested without a seed"));
        }
        if !SECTION_PRESETS.contains(&self.section.as_str()) {
            return Err(CliError::Lookup {
                what: "section preset",
                name: self.section.clone(),
            });
        }
        if self.gauge.axis.is_empty() {
            return Err(CliError::config("/gauge/axis", "axis must not be empty"));
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| format!("{}:{}", self.kind.name(), self.algebra.label()))
    }

    /// Tolerance of `check`: the command-line override, then the config, then
    /// the default.
    pub fn tolerance(&self, check: &str, default: f64) -> f64 {
        self.tolerances
            .get("*")
            .or_else(|| self.tolerances.get(check))
            .copied()
            .unwrap_or(default)
    }
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn path_to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}
