//! Run configuration, verification reports, and the command suites driven by
//! the CLI and the Python bindings.
//!
//! Configuration is line-oriented `key=value` text; `#` starts a comment.
//! Command-line flags use the same keys and are applied afterwards.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::families::{
    make_clifford, make_counterexample, make_umbilical, BaseSurfaceSpec, CliffordSpec, Counterexample,
    CounterexampleSpec, FamilyError, UmbilicalSpec,
};
use crate::geodesic::{
    self, circle_params, closed_form_beta, closed_form_deviation, ell_sine_residual, flow_time_to_reach,
    half_range, integrate_vtop_flow, partition_and_obstruction, path_table, prediction_deviation,
    reparametrize_arclength, rows_to_tsv, split_v_curvature, GeodesicError, ObstructionVerdict, DEFAULT_DT,
    TAU_ANCHOR, TAU_CLASS,
};
use crate::geometry::{AmbientVector, ChartPoint, Hypersurface, SAMPLE_MARGIN};
use crate::lemma::{self, build_q, evaluation_matrix, independence_verdict, is_diagonal_nonzero, RationalLinear};
use crate::mesh::convergence_study;
use crate::quadrature::tensor_rule;
use crate::rng::Lcg64;
use crate::spectral::{
    self, classify, clifford_spectrum, dimension_bound_report, index_counts, index_sweep, index_test_constants,
    sphere_spectrum, spectrum_csv, sweep_csv, sweep_tsv, verify_minimal_jacobi, verify_test_functions,
    BoundFamilies, LineClass,
};
use crate::support::{check_gradient_identities, check_laplacian_identities, f_at, proportionality_scan, TAU_H};

pub const SCHEMA: u32 = 1;

/// Distance kept from the ends of a geodesic circle when integrating.
const FLOW_END_MARGIN: f64 = 0.02;
/// Margin used when comparing against the closed forms.
const CLOSED_FORM_MARGIN: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("no command given")]
    MissingCommand,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    Geodesics,
    Spectrum,
    IndexSweep,
    Counterexample,
    Lemma22,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Verify,
        Command::Geodesics,
        Command::Spectrum,
        Command::IndexSweep,
        Command::Counterexample,
        Command::Lemma22,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Geodesics => "geodesics",
            Command::Spectrum => "spectrum",
            Command::IndexSweep => "index-sweep",
            Command::Counterexample => "counterexample",
            Command::Lemma22 => "lemma22",
        }
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| bad_value("command", s))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Clifford,
    Umbilical,
    Counterexample,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Clifford => "clifford",
            Family::Umbilical => "umbilical",
            Family::Counterexample => "counterexample",
        }
    }
}

impl FromStr for Family {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clifford" => Ok(Family::Clifford),
            "umbilical" => Ok(Family::Umbilical),
            "counterexample" => Ok(Family::Counterexample),
            _ => Err(bad_value("family", s)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub gradient: f64,
    pub laplacian: f64,
    pub proportional: f64,
    pub constants: f64,
    pub geodesic: f64,
    pub closed_form: f64,
    pub ell_sine: f64,
    pub prediction: f64,
    pub eigen: f64,
    pub integral: f64,
    pub gram: f64,
    pub mesh_low: f64,
    pub mesh_high: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: 1e-8,
            laplacian: 1e-4,
            proportional: 1e-7,
            constants: 1e-9,
            geodesic: 1e-4,
            closed_form: 1e-4,
            ell_sine: 1e-6,
            prediction: 1e-4,
            eigen: 1e-4,
            integral: 1e-8,
            gram: 1e-6,
            mesh_low: 3.5,
            mesh_high: 4.5,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 13] = [
        "gradient",
        "laplacian",
        "proportional",
        "constants",
        "geodesic",
        "closed-form",
        "ell-sine",
        "prediction",
        "eigen",
        "integral",
        "gram",
        "mesh-low",
        "mesh-high",
    ];

    pub fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "gradient" => &mut self.gradient,
            "laplacian" => &mut self.laplacian,
            "proportional" => &mut self.proportional,
            "constants" => &mut self.constants,
            "geodesic" => &mut self.geodesic,
            "closed-form" => &mut self.closed_form,
            "ell-sine" => &mut self.ell_sine,
            "prediction" => &mut self.prediction,
            "eigen" => &mut self.eigen,
            "integral" => &mut self.integral,
            "gram" => &mut self.gram,
            "mesh-low" => &mut self.mesh_low,
            "mesh-high" => &mut self.mesh_high,
            _ => return None,
        })
    }

    fn get(&self, name: &str) -> f64 {
        let mut copy = *self;
        *copy.slot(name).expect("known tolerance key")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub family: Family,
    pub n: usize,
    pub k: usize,
    /// Clifford radii; one value except for `index-sweep`.
    pub r: Vec<f64>,
    pub c: f64,
    pub eps: f64,
    pub m_freq: u32,
    /// Umbilical axis; `e_1` when absent.
    pub v: Option<Vec<f64>>,
    pub samples: usize,
    pub seed: u64,
    pub out: Option<String>,
    pub grid: usize,
    pub j_max: Option<usize>,
    pub anchors: usize,
    pub tol: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            family: Family::Clifford,
            n: 2,
            k: 1,
            r: vec![0.6],
            c: 0.0,
            eps: 0.02,
            m_freq: 2,
            v: None,
            samples: 1000,
            seed: 1,
            out: None,
            grid: 32,
            j_max: None,
            anchors: 3,
            tol: Tolerances::default(),
        }
    }
}

fn bad_value(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| bad_value(key, value))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Parses `key=value` lines, skipping blanks and `#` comments.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        match key.as_str() {
            "command" => self.command = Some(value.trim().parse()?),
            "family" => self.family = value.trim().parse()?,
            "n" => self.n = parse_num(&key, value)?,
            "k" => self.k = parse_num(&key, value)?,
            "r" => self.r = parse_list(&key, value)?,
            "c" => self.c = parse_num(&key, value)?,
            "eps" => self.eps = parse_num(&key, value)?,
            "m-freq" => self.m_freq = parse_num(&key, value)?,
            "v" => self.v = Some(parse_list(&key, value)?),
            "samples" => self.samples = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "out" => self.out = Some(value.trim().to_string()).filter(|s| !s.is_empty()),
            "grid" => self.grid = parse_num(&key, value)?,
            "j-max" => self.j_max = Some(parse_num(&key, value)?),
            "anchors" => self.anchors = parse_num(&key, value)?,
            other => match other.strip_prefix("tol-").and_then(|t| self.tol.slot(t)) {
                Some(slot) => *slot = parse_num(&key, value)?,
                None => return Err(ConfigError::UnknownKey(other.to_string())),
            },
        }
        Ok(())
    }

    /// Config-file entries first, then overrides in order.
    pub fn from_sources(file_text: Option<&str>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(text) = file_text {
            for (k, v) in parse_config_text(text)? {
                cfg.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        for name in Tolerances::KEYS {
            let t = self.tol.get(name);
            if !(t > 0.0 && t.is_finite()) {
                return invalid(format!("tolerance tol-{name} must be positive (got {t})"));
            }
        }
        if self.tol.mesh_low >= self.tol.mesh_high {
            return invalid("tol-mesh-low must be below tol-mesh-high".into());
        }
        if self.samples == 0 || self.anchors == 0 {
            return invalid("samples and anchors must be positive".into());
        }
        if self.r.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(FamilyError::BadSpec(format!("radius outside (0, 1): {:?}", self.r)).into());
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return invalid(format!("eps must be >= 0 (got {})", self.eps));
        }
        Ok(())
    }

    fn single_r(&self) -> Result<f64, ConfigError> {
        match self.r.as_slice() {
            [r] => Ok(*r),
            [] => Err(ConfigError::Invalid("no radius given".into())),
            _ => Err(ConfigError::Invalid("this command takes a single radius".into())),
        }
    }

    pub fn clifford_spec(&self) -> Result<CliffordSpec, ConfigError> {
        let spec = CliffordSpec::new(self.n, self.k, self.single_r()?);
        spec.validate()?;
        Ok(spec)
    }

    pub fn umbilical_spec(&self) -> Result<UmbilicalSpec, ConfigError> {
        let v = self.v.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; self.n + 2];
            e[0] = 1.0;
            e
        });
        if v.len() != self.n + 2 {
            return Err(ConfigError::Invalid(format!(
                "v has {} entries, expected n + 2 = {}",
                v.len(),
                self.n + 2
            )));
        }
        let spec = UmbilicalSpec::new(v, self.c);
        spec.validate()?;
        Ok(spec)
    }

    pub fn counterexample_spec(&self) -> CounterexampleSpec {
        CounterexampleSpec {
            base: BaseSurfaceSpec::standard(self.n, self.eps, self.m_freq),
        }
    }

    /// Effective settings as strings, for echoing into reports.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        if let Some(c) = self.command {
            m.insert("command".into(), c.to_string());
        }
        m.insert("family".into(), self.family.name().into());
        m.insert("n".into(), self.n.to_string());
        m.insert("k".into(), self.k.to_string());
        m.insert("r".into(), list(&self.r));
        m.insert("c".into(), self.c.to_string());
        m.insert("eps".into(), self.eps.to_string());
        m.insert("m-freq".into(), self.m_freq.to_string());
        if let Some(v) = &self.v {
            m.insert("v".into(), list(v));
        }
        m.insert("samples".into(), self.samples.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("grid".into(), self.grid.to_string());
        m.insert("anchors".into(), self.anchors.to_string());
        if let Some(j) = self.j_max {
            m.insert("j-max".into(), j.to_string());
        }
        for name in Tolerances::KEYS {
            m.insert(format!("tol-{name}"), self.tol.get(name).to_string());
        }
        m
    }
}

/// Statement a check verifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Anchor {
    pub id: &'static str,
    pub text: &'static str,
}

pub const ANCHORS: &[Anchor] = &[
    Anchor { id: "umbilical-curvatures", text: "totally umbilical sphere: every principal curvature equals c/sqrt(1-c^2)" },
    Anchor { id: "clifford-curvatures", text: "Clifford hypersurface: curvatures -sqrt(1-r^2)/r (k times) and r/sqrt(1-r^2)" },
    Anchor { id: "support-relations", text: "f_w is a constant multiple of ell_w on umbilical and Clifford examples" },
    Anchor { id: "great-sphere-dimensions", text: "great sphere: dim V1 = n+1 and dim V2 = 1" },
    Anchor { id: "support-gradients", text: "grad ell_v = v_top and grad f_v = -A(v_top)" },
    Anchor { id: "support-laplacians", text: "Delta ell_v = -n ell_v + nH f_v and, for CMC, Delta f_v = -|A|^2 f_v + nH ell_v" },
    Anchor { id: "reparametrized-geodesics", text: "arc-length reparametrized integral curves of v_top are geodesics with beta'' = -beta - nu/lambda" },
    Anchor { id: "geodesic-circle-closed-form", text: "closed forms of beta_x(s) and nu(beta_x(s)) through a point of N" },
    Anchor { id: "support-along-circle", text: "ell_v(beta(s)) = w^-1 sin(ws - ws1) with w = sqrt(1 + lambda^-2)" },
    Anchor { id: "curvature-propagation", text: "principal curvatures transported along beta_x by the cos(ws) law" },
    Anchor { id: "cmc-partition", text: "I1/I2/I3 partition of curvatures on N with d(x) = 0 and I3 empty under CMC" },
    Anchor { id: "partial-fraction-lemma", text: "sum a_i/(b_i X + c_i) = d identically forces every a_i and d to vanish" },
    Anchor { id: "non-cmc-example", text: "non-CMC immersion with ell_v = f_v shows the CMC hypothesis is needed" },
    Anchor { id: "jacobi-index", text: "weak and strong index of J = Delta + |A|^2 + n from the product spectrum" },
    Anchor { id: "index-test-functions", text: "ell_v - alpha_+- f_v solve Delta u + mu_+- u = 0 with zero mean" },
    Anchor { id: "dimension-count", text: "negative directions counted from V1, V2 or U_+, U_-" },
    Anchor { id: "index-plateau", text: "weak index n+2 on the middle range of Clifford radii" },
    Anchor { id: "mesh-spectrum", text: "five-point flat torus Laplacian reproduces the analytic spectrum" },
];

pub fn anchor(id: &str) -> Option<&'static Anchor> {
    ANCHORS.iter().find(|a| a.id == id)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub anchor: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<CheckResult>,
    /// Text of every anchor referenced by a check.
    pub anchors: BTreeMap<&'static str, &'static str>,
}

impl VerificationReport {
    pub fn new(command: Command, config: &RunConfig) -> Self {
        Self {
            schema: SCHEMA,
            command: command.to_string(),
            config: config.entries(),
            checks: Vec::new(),
            anchors: BTreeMap::new(),
        }
    }

    fn push(&mut self, id: impl Into<String>, anchor_id: &'static str, status: Status, residual: Option<f64>, tolerance: Option<f64>, detail: impl Into<String>) {
        let a = anchor(anchor_id).unwrap_or_else(|| panic!("unregistered anchor {anchor_id}"));
        self.anchors.insert(a.id, a.text);
        self.checks.push(CheckResult {
            id: id.into(),
            status,
            residual: residual.filter(|r| r.is_finite()),
            tolerance,
            anchor: a.id,
            detail: detail.into(),
        });
    }

    /// Passes when `residual <= tolerance`.
    pub fn bound(&mut self, id: &str, anchor_id: &'static str, residual: f64, tolerance: f64, detail: impl Into<String>) {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        self.push(id, anchor_id, status, Some(residual), Some(tolerance), detail);
    }

    pub fn flag(&mut self, id: &str, anchor_id: &'static str, ok: bool, detail: impl Into<String>) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.push(id, anchor_id, status, None, None, detail);
    }

    pub fn skip(&mut self, id: &str, anchor_id: &'static str, detail: impl Into<String>) {
        self.push(id, anchor_id, Status::Skip, None, None, detail);
    }

    pub fn fail(&mut self, id: &str, anchor_id: &'static str, detail: impl Into<String>) {
        self.push(id, anchor_id, Status::Fail, None, None, detail);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One `STATUS id residual/tolerance` line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let num = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
            out.push_str(&format!(
                "{} {} {} / {}  {}\n",
                c.status.label(),
                c.id,
                num(c.residual),
                num(c.tolerance),
                c.detail
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: VerificationReport,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            0
        } else {
            1
        }
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput, ConfigError> {
    let command = config.command.ok_or(ConfigError::MissingCommand)?;
    config.validate()?;
    let mut out = RunOutput {
        report: VerificationReport::new(command, config),
        artifacts: Vec::new(),
    };
    match command {
        Command::Verify => verify_suite(config, &mut out)?,
        Command::Geodesics => geodesic_suite(config, &mut out)?,
        Command::Spectrum => spectrum_suite(config, &mut out)?,
        Command::IndexSweep => sweep_suite(config, &mut out)?,
        Command::Counterexample => {
            let cfg = RunConfig {
                family: Family::Counterexample,
                ..config.clone()
            };
            counterexample_suite(&cfg, &mut out)?;
            verify_suite(&cfg, &mut out)?;
            geodesic_suite(&cfg, &mut out)?;
        }
        Command::Lemma22 => lemma_suite(config, &mut out)?,
    }
    Ok(out)
}

enum Built {
    Clifford(CliffordSpec),
    Umbilical(UmbilicalSpec),
    Counterexample(Box<Counterexample>),
}

fn build(config: &RunConfig) -> Result<(Hypersurface, Built), ConfigError> {
    Ok(match config.family {
        Family::Clifford => {
            let spec = config.clifford_spec()?;
            (make_clifford(&spec)?, Built::Clifford(spec))
        }
        Family::Umbilical => {
            let spec = config.umbilical_spec()?;
            (make_umbilical(&spec)?, Built::Umbilical(spec))
        }
        Family::Counterexample => {
            let ce = make_counterexample(&config.counterexample_spec())?;
            (ce.surface.clone(), Built::Counterexample(Box::new(ce)))
        }
    })
}

fn basis(m: usize, i: usize) -> AmbientVector {
    let mut v = AmbientVector::zeros(m);
    v[i] = 1.0;
    v
}

fn sample_points(surface: &Hypersurface, count: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = Lcg64::new(seed);
    (0..count).map(|_| surface.domain().sample(&mut rng, SAMPLE_MARGIN)).collect()
}

/// Unit vector orthogonal to `axis`, built from the basis vector least
/// aligned with it.
fn orthogonal_to(axis: &AmbientVector) -> AmbientVector {
    let a = axis.normalize();
    let i = (0..a.len())
        .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
        .expect("nonempty axis");
    let e = basis(a.len(), i);
    let w = &e - e.dot(&a) * &a;
    w.normalize()
}

fn gram_nodes(surface: &Hypersurface) -> usize {
    if surface.dim() <= 2 {
        16
    } else {
        8
    }
}

fn verify_suite(config: &RunConfig, out: &mut RunOutput) -> Result<(), ConfigError> {
    let tol = config.tol;
    let (surface, built) = build(config)?;
    let report = &mut out.report;
    let m = surface.ambient_dim();
    let points = sample_points(&surface, config.samples, config.seed);
    let n = surface.dim();

    // closed-form curvatures
    let expected: Option<(&'static str, Vec<f64>)> = match &built {
        Built::Clifford(spec) => {
            let (a, b) = spec.principal_curvatures();
            let mut kappas = vec![a; spec.k];
            kappas.extend(vec![b; spec.n - spec.k]);
            Some(("clifford-curvatures", kappas))
        }
        Built::Umbilical(spec) => Some(("umbilical-curvatures", vec![spec.principal_curvature(); n])),
        Built::Counterexample(_) => None,
    };
    match expected {
        Some((anchor_id, mut kappas)) => {
            kappas.sort_by(f64::total_cmp);
            let h: f64 = kappas.iter().sum::<f64>() / n as f64;
            let a: f64 = kappas.iter().map(|k| k * k).sum();
            let mut worst: f64 = 0.0;
            for p in &points {
                match surface.shape_operator(p) {
                    Ok(c) => {
                        for (x, y) in c.kappas.iter().zip(&kappas) {
                            worst = worst.max((x - y).abs());
                        }
                        worst = worst.max((c.mean_h - h).abs()).max((c.norm_a_sq - a).abs());
                    }
                    Err(e) => {
                        report.fail("curvature-closed-forms", anchor_id, e.to_string());
                        worst = f64::NAN;
                        break;
                    }
                }
            }
            if !worst.is_nan() {
                report.bound(
                    "curvature-closed-forms",
                    anchor_id,
                    worst,
                    tol.constants,
                    format!("kappa = {kappas:?}, H = {h}, |A|^2 = {a}"),
                );
            }
        }
        None => report.skip("curvature-closed-forms", "non-cmc-example", "no closed form for the counter-example"),
    }

    // gradient and Laplacian identities for every basis vector
    let (mut grad, mut lap_ell, mut lap_f) = (0.0f64, 0.0f64, Some(0.0f64));
    let mut failure = None;
    'outer: for p in &points {
        for a in 0..m {
            let v = basis(m, a);
            let g = check_gradient_identities(&surface, p, &v);
            let l = check_laplacian_identities(&surface, p, &v);
            match (g, l) {
                (Ok(g), Ok(l)) => {
                    grad = grad.max(g.ell).max(g.f);
                    lap_ell = lap_ell.max(l.ell);
                    lap_f = match (lap_f, l.f) {
                        (Some(acc), Some(f)) => Some(acc.max(f)),
                        _ => None,
                    };
                }
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(e.to_string());
                    break 'outer;
                }
            }
        }
    }
    let detail = format!("{} points x {m} basis vectors", points.len());
    if let Some(e) = failure {
        report.fail("gradient-identities", "support-gradients", e.clone());
        report.fail("laplacian-ell", "support-laplacians", e);
    } else {
        report.bound("gradient-identities", "support-gradients", grad, tol.gradient, detail.clone());
        report.bound("laplacian-ell", "support-laplacians", lap_ell, tol.laplacian, detail.clone());
        match lap_f {
            Some(r) => report.bound("laplacian-f", "support-laplacians", r, tol.laplacian, detail),
            None => report.skip(
                "laplacian-f",
                "support-laplacians",
                format!("NotCMC: H spread {:.3e}", surface.curvature_profile().map_or(f64::NAN, |p| p.h_spread())),
            ),
        }
    }

    // proportionality relations
    let relations: Vec<(String, AmbientVector, Option<f64>, f64)> = match &built {
        Built::Clifford(spec) => {
            let (r, s) = (spec.r, spec.co_radius());
            vec![
                ("first factor".into(), basis(m, 0), Some(r / s), 0.0),
                ("second factor".into(), basis(m, spec.k + 1), Some(-s / r), 0.0),
            ]
        }
        Built::Umbilical(spec) => {
            let axis = AmbientVector::from_column_slice(&spec.v);
            let kappa = spec.principal_curvature();
            let lambda = (kappa != 0.0).then(|| -1.0 / kappa);
            vec![("orthogonal to axis".into(), orthogonal_to(&axis), lambda, -kappa)]
        }
        Built::Counterexample(ce) => vec![("axis".into(), ce.axis(), Some(1.0), 1.0)],
    };
    for (label, v, lambda, mu) in relations {
        let id = format!("proportionality-{}", label.replace(' ', "-"));
        match lambda {
            Some(lambda) => match proportionality_scan(&surface, &v, &points) {
                Ok(scan) => report.bound(
                    &id,
                    "support-relations",
                    scan.max_residual.max((scan.lambda - lambda).abs()),
                    tol.proportional,
                    format!("lambda fit {:.12} vs {:.12} over {} samples", scan.lambda, lambda, scan.samples),
                ),
                Err(e) => report.fail(&id, "support-relations", e.to_string()),
            },
            None => {
                // great sphere: f_w vanishes identically
                let worst = points
                    .iter()
                    .map(|p| f_at(&surface, p, &v).map(f64::abs).unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max);
                report.bound(&id, "support-relations", worst, tol.proportional, format!("f_w = {mu} ell_w"));
            }
        }
    }

    // Gram dimensions of V1 = {ell_v}, V2 = {f_v}
    let rule = match tensor_rule(&surface, gram_nodes(&surface)) {
        Ok(rule) => rule,
        Err(e) => {
            report.fail("gram-dimensions", "dimension-count", e.to_string());
            return Ok(());
        }
    };
    let dims = (
        crate::support::gram_dimension(&surface, crate::support::SupportFamily::V1, &rule),
        crate::support::gram_dimension(&surface, crate::support::SupportFamily::V2, &rule),
    );
    let (d1, d2) = match dims {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            report.fail("gram-dimensions", "dimension-count", e.to_string());
            return Ok(());
        }
    };
    let detail = format!("dim V1 = {d1}, dim V2 = {d2} ({} nodes)", rule.len());
    match &built {
        Built::Umbilical(spec) if spec.c == 0.0 => {
            report.flag("gram-dimensions", "great-sphere-dimensions", (d1, d2) == (n + 1, 1), detail)
        }
        Built::Counterexample(_) => report.skip("gram-dimensions", "dimension-count", detail),
        _ => report.flag("gram-dimensions", "dimension-count", (d1, d2) == (n + 2, n + 2), detail),
    }
    Ok(())
}

fn flow_span(lambda: f64) -> (f64, f64) {
    let t = flow_time_to_reach(lambda, half_range(lambda) - FLOW_END_MARGIN);
    (-t, t)
}

struct GeodesicSetup {
    v: AmbientVector,
    lambda: f64,
    anchors: Vec<ChartPoint>,
    off_level: ChartPoint,
    cmc: bool,
}

fn geodesic_setup(config: &RunConfig, surface: &Hypersurface, built: &Built) -> Result<GeodesicSetup, ConfigError> {
    let mut rng = Lcg64::new(config.seed);
    match built {
        Built::Clifford(spec) => {
            let lift = |mut p: ChartPoint, first: f64| {
                p.0[0] = first;
                p
            };
            let anchors = (0..config.anchors)
                .map(|_| lift(surface.domain().sample(&mut rng, SAMPLE_MARGIN), FRAC_PI_2))
                .collect();
            Ok(GeodesicSetup {
                v: basis(surface.ambient_dim(), 0),
                lambda: spec.r / spec.co_radius(),
                anchors,
                off_level: lift(surface.domain().center(), FRAC_PI_2 - 0.5),
                cmc: true,
            })
        }
        Built::Counterexample(ce) => {
            let base = ce.base.surface.domain();
            let anchors = (0..config.anchors)
                .map(|_| ce.chart_point(0.0, &base.sample(&mut rng, SAMPLE_MARGIN)))
                .collect();
            Ok(GeodesicSetup {
                v: ce.axis(),
                lambda: 1.0,
                anchors,
                off_level: ce.chart_point(0.3, &base.center()),
                cmc: false,
            })
        }
        Built::Umbilical(_) => Err(ConfigError::Invalid(
            "geodesics supports the clifford and counterexample families".into(),
        )),
    }
}

#[derive(Default)]
struct Worst {
    geodesic: f64,
    point: f64,
    ell: f64,
    prediction: f64,
    samples: usize,
}

fn geodesic_suite(config: &RunConfig, out: &mut RunOutput) -> Result<(), ConfigError> {
    let tol = config.tol;
    let (surface, built) = build(config)?;
    let setup = geodesic_setup(config, &surface, &built)?;
    let (v, lambda) = (&setup.v, setup.lambda);
    let mut worst = Worst::default();
    let mut errors: Vec<String> = Vec::new();
    let mut consistent = 0usize;
    let mut contradictions = 0usize;
    let mut h_drift: f64 = 0.0;

    for (i, anchor) in setup.anchors.iter().enumerate() {
        let mut run = || -> Result<(), GeodesicError> {
            let params = circle_params(&surface, anchor, v, lambda)?;
            let path = integrate_vtop_flow(&surface, anchor, v, flow_span(lambda), DEFAULT_DT)?;
            let arc = reparametrize_arclength(&path)?;
            worst.geodesic = worst
                .geodesic
                .max(geodesic::tangential_acceleration(&surface, &arc)?)
                .max(geodesic::acceleration_residual(&arc, lambda));
            let dev = closed_form_deviation(&arc, &params, CLOSED_FORM_MARGIN)?;
            worst.point = worst.point.max(dev.point).max(dev.normal);
            worst.samples += dev.samples;
            worst.ell = worst.ell.max(ell_sine_residual(&arc, &params));

            let curv = surface.shape_operator(anchor)?;
            let (_, rest) = split_v_curvature(&curv.kappas, lambda);
            let rows = path_table(&surface, &arc, v, lambda, Some(&rest), 20)?;
            worst.prediction = worst.prediction.max(prediction_deviation(&rows));
            out.artifacts.push(Artifact {
                name: format!("geodesic_{i}.tsv"),
                contents: rows_to_tsv(&rows),
            });

            let obstruction = partition_and_obstruction(&rest, lambda, curv.mean_h, TAU_CLASS)?;
            match obstruction.verdict {
                ObstructionVerdict::Consistent if obstruction.consistent => consistent += 1,
                ObstructionVerdict::Contradiction(_) if !obstruction.consistent => contradictions += 1,
                _ => {}
            }
            let hs: Vec<f64> = rows
                .iter()
                .step_by(5)
                .filter_map(|r| arc.nearest(r.s))
                .map(|s| surface.shape_operator(&s.chart).map(|c| c.mean_h))
                .collect::<Result<_, _>>()?;
            let (lo, hi) = hs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), h| (a.min(*h), b.max(*h)));
            h_drift = h_drift.max(hi - lo);
            Ok(())
        };
        if let Err(e) = run() {
            errors.push(format!("anchor {i}: {e}"));
        }
    }

    let report = &mut out.report;
    let count = setup.anchors.len();
    if !errors.is_empty() {
        report.fail("geodesic-anchors", "reparametrized-geodesics", errors.join("; "));
        return Ok(());
    }
    report.bound("geodesic-acceleration", "reparametrized-geodesics", worst.geodesic, tol.geodesic, format!("{count} anchors"));
    report.bound(
        "closed-form-deviation",
        "geodesic-circle-closed-form",
        worst.point,
        tol.closed_form,
        format!("{} samples over |s| < pi/(2w) - {CLOSED_FORM_MARGIN}", worst.samples),
    );
    report.bound("ell-sine-law", "support-along-circle", worst.ell, tol.ell_sine, format!("lambda = {lambda}"));
    report.bound("curvature-prediction", "curvature-propagation", worst.prediction, tol.prediction, format!("{count} anchors"));

    if setup.cmc {
        report.flag(
            "level-set-partition",
            "cmc-partition",
            consistent == count,
            format!("{consistent}/{count} anchors consistent (I3 empty, d = 0)"),
        );
    } else {
        // H moves along beta_x, and the exact verdict rules out constant H
        report.flag(
            "level-set-partition",
            "non-cmc-example",
            contradictions == count && h_drift > TAU_H,
            format!("{contradictions}/{count} anchors contradict constant H; H drift along circles {h_drift:.3e}"),
        );
    }

    match circle_params(&surface, &setup.off_level, v, lambda).map(|p| closed_form_beta(&p, 0.1)) {
        Ok(Err(GeodesicError::AnchorNotOnN(a))) => report.flag(
            "off-level-anchor-guard",
            "geodesic-circle-closed-form",
            true,
            format!("AnchorNotOnN raised (ell_v = {a:.6})"),
        ),
        other => report.fail("off-level-anchor-guard", "geodesic-circle-closed-form", format!("{other:?}")),
    }
    Ok(())
}

fn counterexample_suite(config: &RunConfig, out: &mut RunOutput) -> Result<(), ConfigError> {
    let ce = make_counterexample(&config.counterexample_spec())?;
    let spread = ce.surface.curvature_profile().map_or(f64::NAN, |p| p.h_spread());
    let report = &mut out.report;
    report.flag(
        "non-cmc",
        "non-cmc-example",
        spread > TAU_H,
        format!("H spread {spread:.6e} over the profile sample"),
    );
    report.flag(
        "base-curvature-bounds",
        "non-cmc-example",
        ce.base.kappa_min > 1.0 && ce.base.kappa_max < 2.0 && ce.min_factor > 0.0,
        format!(
            "base curvatures in [{:.6}, {:.6}], min transport factor {:.6}",
            ce.base.kappa_min, ce.base.kappa_max, ce.min_factor
        ),
    );
    Ok(())
}

/// Weak index of a round sphere of radius `sqrt(1 - c^2)` in `S^{n+1}`.
fn umbilical_index(spec: &UmbilicalSpec) -> Result<(u64, u64, Vec<usize>), ConfigError> {
    let n = spec.dim();
    let radius = (1.0 - spec.c * spec.c).sqrt();
    let threshold = spec.norm_a_sq() + n as f64;
    let lines = sphere_spectrum(n, radius, 8).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut weak = 0;
    let mut kernel = Vec::new();
    for l in lines.iter().skip(1) {
        match classify(l.eigenvalue, threshold) {
            LineClass::Neg => weak += l.multiplicity,
            LineClass::Kernel => kernel.push(l.label.0),
            LineClass::Pos => {}
        }
    }
    Ok((weak, weak + 1, kernel))
}

/// Brute-force count of negative nonconstant lines over a generous box.
fn enumerated_weak_index(spec: &CliffordSpec, j_max: usize) -> u64 {
    let (k, m2) = (spec.k, spec.n - spec.k);
    let (r2, s2) = (spec.r * spec.r, 1.0 - spec.r * spec.r);
    let threshold = spec.jacobi_threshold();
    let mut count = 0;
    for p in 0..=j_max {
        for q in 0..=j_max {
            let mu = (p * (p + k - 1)) as f64 / r2 + (q * (q + m2 - 1)) as f64 / s2;
            if (p, q) != (0, 0) && mu < threshold - spectral::TAU_TIE {
                count += spectral::harmonic_multiplicity(k, p) * spectral::harmonic_multiplicity(m2, q);
            }
        }
    }
    count
}

fn spectrum_suite(config: &RunConfig, out: &mut RunOutput) -> Result<(), ConfigError> {
    let tol = config.tol;
    let (surface, built) = build(config)?;
    let spec = match built {
        Built::Clifford(spec) => spec,
        Built::Umbilical(spec) => {
            let (weak, strong, kernel) = umbilical_index(&spec)?;
            out.report.flag(
                "index-counts",
                "jacobi-index",
                weak == 0 && kernel == [1],
                format!("weak {weak}, strong {strong}, kernel degrees {kernel:?}"),
            );
            return Ok(());
        }
        Built::Counterexample(_) => {
            return Err(ConfigError::Invalid("spectrum needs a clifford or umbilical family".into()));
        }
    };
    let index = index_counts(&spec, config.j_max).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let spectrum = clifford_spectrum(&spec, index.j_max).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    out.artifacts.push(Artifact {
        name: "spectrum.csv".into(),
        contents: spectrum_csv(&spectrum.lines, spectrum.threshold),
    });
    let report = &mut out.report;
    let brute = enumerated_weak_index(&spec, index.j_max + 20);
    let kernel: Vec<(usize, usize)> = index.kernel_lines.iter().map(|l| l.label).collect();
    report.flag(
        "index-counts",
        "jacobi-index",
        index.weak_index == brute && index.strong_index == index.weak_index + 1,
        format!(
            "weak {}, strong {}, kernel {kernel:?}, threshold {:.9}, enumeration {brute}",
            index.weak_index, index.strong_index, index.threshold
        ),
    );
    report.flag(
        "spectrum-truncation",
        "jacobi-index",
        spectrum.truncation_ok(spectral::TRUNCATION_MARGIN),
        format!("j_max {}, first omitted line {:.6}", spectrum.j_max, spectrum.first_omitted),
    );

    let h = spec.mean_curvature();
    let nodes = gram_nodes(&surface);
    let rule = tensor_rule(&surface, nodes).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let points = sample_points(&surface, config.samples.min(64), config.seed);
    if h.abs() > TAU_H {
        let c = index_test_constants(h, spec.norm_a_sq(), spec.n).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let lines = [spectrum.line(1, 0), spectrum.line(0, 1)].map(|l| l.map_or(f64::NAN, |l| l.eigenvalue));
        let gap = (c.mu_plus - lines[0]).abs().max((c.mu_minus - lines[1]).abs());
        report.bound(
            "test-constants",
            "index-test-functions",
            gap,
            tol.constants,
            format!(
                "alpha +- {:.9} / {:.9}, mu +- {:.9} / {:.9}, jac +- {:.9} / {:.9}",
                c.alpha_plus, c.alpha_minus, c.mu_plus, c.mu_minus, c.jac_plus, c.jac_minus
            ),
        );
        report.flag(
            "test-constants-order",
            "index-test-functions",
            c.jac_minus < c.jac_plus && c.jac_plus < 0.0,
            "jac_- < jac_+ < 0",
        );
        let periodic = surface.domain().axes().iter().all(|a| a.periodic);
        let m = surface.ambient_dim();
        let (mut residual, mut integral, mut degenerate) = (0.0f64, 0.0f64, 0usize);
        for a in 0..m {
            match verify_test_functions(&surface, &basis(m, a), &c, &points, &rule) {
                Ok(t) => {
                    for check in [t.plus, t.minus] {
                        if check.degenerate {
                            degenerate += 1;
                        } else {
                            residual = residual.max(check.residual);
                            integral = integral.max(check.integral);
                        }
                    }
                }
                Err(e) => report.fail("test-functions", "index-test-functions", e.to_string()),
            }
        }
        report.bound(
            "test-functions",
            "index-test-functions",
            residual,
            tol.eigen,
            format!("{} nondegenerate members, {degenerate} identically zero", 2 * m - degenerate),
        );
        if periodic {
            report.bound("test-functions-mean", "index-test-functions", integral, tol.integral, "|int u|");
        } else {
            report.skip(
                "test-functions-mean",
                "index-test-functions",
                format!("chart omits pole caps; |int u| = {integral:.3e}"),
            );
        }
    } else {
        match verify_minimal_jacobi(&surface, &basis(surface.ambient_dim(), 0), &points) {
            Ok(j) => report.bound(
                "minimal-jacobi",
                "index-test-functions",
                j.ell_residual.max(j.f_residual),
                tol.eigen,
                format!("J ell = |A|^2 ell with |A|^2 = {:.9}, J f = n f", j.norm_a_sq),
            ),
            Err(e) => report.fail("minimal-jacobi", "index-test-functions", e.to_string()),
        }
    }

    match dimension_bound_report(&surface, &rule) {
        Ok(b) => {
            let (first, second) = match b.families {
                BoundFamilies::Support => ("V1", "V2"),
                BoundFamilies::TestFunctions => ("U+", "U-"),
            };
            let expected = match b.families {
                BoundFamilies::Support => (spec.n + 2, spec.n + 2),
                BoundFamilies::TestFunctions => (spec.k + 1, spec.n - spec.k + 1),
            };
            report.flag(
                "family-ranks",
                "dimension-count",
                (b.rank_first, b.rank_second) == expected,
                format!(
                    "rank {first} = {}, rank {second} = {}, expected {expected:?}, dim({first} + {second}) = {}",
                    b.rank_first, b.rank_second, b.union_rank
                ),
            );
            report.bound(
                "family-orthogonality",
                "dimension-count",
                b.cross_gram,
                tol.gram,
                format!("cross Gram of {first} and {second}"),
            );
            report.flag(
                "negative-space-bound",
                "dimension-count",
                b.union_rank as u64 <= index.weak_index + 1,
                format!(
                    "dim({first} + {second}) = {} against weak index {}",
                    b.union_rank, index.weak_index
                ),
            );
        }
        Err(e) => report.fail("family-ranks", "dimension-count", e.to_string()),
    }

    if spec.n == 2 {
        match convergence_study(&spec, config.grid) {
            Ok(study) => {
                report.flag(
                    "mesh-convergence",
                    "mesh-spectrum",
                    study.second_order(tol.mesh_low, tol.mesh_high),
                    format!(
                        "grid {} -> {}: error ratios in [{:.4}, {:.4}], fitted C {:.4}",
                        study.coarse.grid, study.fine.grid, study.min_ratio, study.max_ratio, study.coarse.fitted_c
                    ),
                );
            }
            Err(e) => return Err(ConfigError::Invalid(e.to_string())),
        }
    } else {
        report.skip("mesh-convergence", "mesh-spectrum", "mesh cross-check needs n = 2");
    }
    Ok(())
}

fn sweep_suite(config: &RunConfig, out: &mut RunOutput) -> Result<(), ConfigError> {
    if config.family != Family::Clifford {
        return Err(ConfigError::Invalid("index-sweep needs the clifford family".into()));
    }
    if !(config.n == 2 || config.n == 3) {
        return Err(ConfigError::Invalid(format!("index-sweep needs n = 2 or 3 (got {})", config.n)));
    }
    if config.r.is_empty() {
        return Err(ConfigError::Invalid("empty radius grid".into()));
    }
    CliffordSpec::new(config.n, config.k, config.r[0]).validate()?;
    let summary = index_sweep(config.n, config.k, &config.r).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    out.artifacts.push(Artifact {
        name: "index_sweep.csv".into(),
        contents: sweep_csv(&summary),
    });
    out.artifacts.push(Artifact {
        name: "index_sweep.tsv".into(),
        contents: sweep_tsv(&summary),
    });
    let (lo, hi) = summary.expected_plateau;
    let target = (config.n + 2) as u64;
    let inside: Vec<_> = summary.rows.iter().filter(|r| r.r >= lo - 1e-9 && r.r <= hi + 1e-9).collect();
    let inside_ok = inside.iter().all(|r| r.weak_index == target);
    let outside_ok = summary
        .rows
        .iter()
        .filter(|r| r.r < lo - 1e-9 || r.r > hi + 1e-9)
        .all(|r| r.weak_index > target);
    let report = &mut out.report;
    report.flag(
        "plateau-values",
        "index-plateau",
        inside_ok && outside_ok && summary.min_weak_index >= target,
        format!(
            "weak indices {:?}; expected n+2 = {target} on [{lo:.6}, {hi:.6}]",
            summary.rows.iter().map(|r| (r.r, r.weak_index)).collect::<Vec<_>>()
        ),
    );
    report.flag(
        "plateau-detected",
        "index-plateau",
        inside.is_empty() || (summary.plateau.is_some() && (summary.monotone_outside || summary.rows.len() == 1)),
        format!("plateau over sampled radii {:?}", summary.plateau),
    );
    let kernel_rows = summary.rows.iter().filter(|r| !r.kernel.is_empty()).count();
    report.flag(
        "kernel-lines",
        "jacobi-index",
        summary.rows.iter().all(|r| r.kernel.contains(&(1, 1))),
        format!("{kernel_rows}/{} radii report kernel lines; (1,1) is always a tie", summary.rows.len()),
    );
    Ok(())
}

/// Counts of exact obstruction verdicts on synthetic data with nonempty `I_3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SyntheticTally {
    pub instances: usize,
    pub only_zero: usize,
    pub false_holds: usize,
    pub errors: usize,
}

pub fn synthetic_tally(count: usize, seed: u64) -> SyntheticTally {
    let mut rng = Lcg64::new(seed);
    let mut tally = SyntheticTally {
        instances: count,
        only_zero: 0,
        false_holds: 0,
        errors: 0,
    };
    for _ in 0..count {
        match lemma::synthetic_instance(&mut rng).verdict() {
            Ok(v) if v.holds() => tally.false_holds += 1,
            Ok(_) => tally.only_zero += 1,
            Err(_) => tally.errors += 1,
        }
    }
    tally
}

/// Obstruction verdicts at random level-set points of Clifford and
/// umbilical examples. Returns `(consistent, total)`.
pub fn level_set_consistency(count: usize, seed: u64) -> Result<(usize, usize), ConfigError> {
    let mut rng = Lcg64::new(seed);
    let mut consistent = 0;
    for i in 0..count {
        let n = rng.int_range(2, 4) as usize;
        let (surface, v, lambda, p) = if i % 2 == 0 {
            let k = rng.int_range(1, n as i64 - 1) as usize;
            let spec = CliffordSpec::new(n, k, rng.uniform(0.2, 0.9));
            let surface = make_clifford(&spec)?;
            let mut p = surface.domain().sample(&mut rng, SAMPLE_MARGIN);
            p.0[0] = FRAC_PI_2;
            (surface, basis(n + 2, 0), spec.r / spec.co_radius(), p)
        } else {
            let mut axis = vec![0.0; n + 2];
            axis[0] = 1.0;
            let spec = UmbilicalSpec::new(axis, rng.uniform(-0.8, 0.8));
            let surface = make_umbilical(&spec)?;
            let p = surface.domain().sample(&mut rng, SAMPLE_MARGIN);
            let v = surface
                .immersion_jet(&p)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?
                .d1[0]
                .normalize();
            let lambda = -1.0 / spec.principal_curvature();
            if !lambda.is_finite() {
                continue;
            }
            (surface, v, lambda, p)
        };
        let ell = v.dot(&surface.position(&p).map_err(|e| ConfigError::Invalid(e.to_string()))?);
        if ell.abs() > TAU_ANCHOR {
            continue;
        }
        let curv = surface.shape_operator(&p).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let (_, rest) = split_v_curvature(&curv.kappas, lambda);
        if let Ok(r) = partition_and_obstruction(&rest, lambda, curv.mean_h, TAU_CLASS) {
            if r.consistent && r.verdict == ObstructionVerdict::Consistent {
                consistent += 1;
            }
        }
    }
    Ok((consistent, count))
}

fn lemma_suite(config: &RunConfig, out: &mut RunOutput) -> Result<(), ConfigError> {
    let report = &mut out.report;
    let ps: Vec<RationalLinear> = (1..=3).map(|c| RationalLinear::from_ints(1, c)).collect();
    match build_q(&ps) {
        Ok(qs) => {
            let cert = independence_verdict(&qs);
            report.flag(
                "independence",
                "partial-fraction-lemma",
                cert.independent() && is_diagonal_nonzero(&evaluation_matrix(&ps, &qs)),
                format!("factors X+1, X+2, X+3: rank {} of {}", cert.rank, cert.k),
            );
        }
        Err(e) => report.fail("independence", "partial-fraction-lemma", e.to_string()),
    }
    let dup = [RationalLinear::from_ints(1, 1), RationalLinear::from_ints(2, 2)];
    report.flag(
        "duplicate-root-guard",
        "partial-fraction-lemma",
        matches!(build_q(&dup), Err(lemma::LemmaError::DuplicateRoot { .. })),
        "X+1 and 2X+2 share a root",
    );
    let tally = synthetic_tally(config.samples, config.seed);
    report.flag(
        "synthetic-obstructions",
        "partial-fraction-lemma",
        tally.only_zero == tally.instances && tally.false_holds == 0,
        format!(
            "{} instances: {} OnlyZeroSolution, {} IdentityHolds, {} errors",
            tally.instances, tally.only_zero, tally.false_holds, tally.errors
        ),
    );
    let (consistent, total) = level_set_consistency(config.anchors.max(20), config.seed)?;
    report.flag(
        "level-set-consistency",
        "cmc-partition",
        consistent == total,
        format!("{consistent}/{total} sampled Clifford/umbilical level-set points consistent"),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(&str, &str)]) -> RunConfig {
        let owned: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        RunConfig::from_sources(None, &owned).unwrap()
    }

    #[test]
    fn config_text_and_overrides() {
        let text = "# lab run\ncommand = spectrum\nfamily=clifford\nr=0.6\ntol-eigen=1e-3 # looser\n\n";
        let over = vec![("r".to_string(), "0.7".to_string())];
        let c = RunConfig::from_sources(Some(text), &over).unwrap();
        assert_eq!(c.command, Some(Command::Spectrum));
        assert_eq!(c.r, vec![0.7]);
        assert_eq!(c.tol.eigen, 1e-3);
        assert!(matches!(
            RunConfig::from_sources(Some("r 0.5"), &[]),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::from_sources(Some("colour=red"), &[]),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            RunConfig::from_sources(Some("tol-gradient=-1"), &[]),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            RunConfig::from_sources(Some("r=1.5"), &[]),
            Err(ConfigError::Family(FamilyError::BadSpec(_)))
        ));
        assert!(matches!(
            RunConfig::from_sources(Some("n=two"), &[]),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn every_tolerance_key_round_trips() {
        let mut c = RunConfig::default();
        for name in Tolerances::KEYS {
            c.set(&format!("tol-{name}"), "0.25").unwrap();
            assert_eq!(c.tol.get(name), 0.25);
        }
    }

    #[test]
    fn anchors_are_unique() {
        let mut ids: Vec<_> = ANCHORS.iter().map(|a| a.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), ANCHORS.len());
    }

    #[test]
    fn verify_clifford_passes() {
        let out = run(&cfg(&[("command", "verify"), ("samples", "200")])).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
        assert_eq!(out.exit_code(), 0);
        assert!(out.report.to_json().contains("\"schema\": 1"));
    }

    #[test]
    fn verify_counterexample_skips_f_laplacian() {
        let out = run(&cfg(&[("command", "verify"), ("family", "counterexample"), ("samples", "150")])).unwrap();
        assert_eq!(out.report.check("laplacian-f").unwrap().status, Status::Skip);
        let prop = out.report.check("proportionality-axis").unwrap();
        assert_eq!(prop.status, Status::Pass, "{}", out.report.summary());
    }

    #[test]
    fn verify_great_sphere_dimensions() {
        let out = run(&cfg(&[("command", "verify"), ("family", "umbilical"), ("samples", "150")])).unwrap();
        let g = out.report.check("gram-dimensions").unwrap();
        assert_eq!(g.anchor, "great-sphere-dimensions");
        assert!(out.report.passed(), "{}", out.report.summary());
    }

    #[test]
    fn geodesics_on_torus() {
        let out = run(&cfg(&[("command", "geodesics"), ("anchors", "2")])).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
        assert_eq!(out.artifacts.len(), 2);
        assert_eq!(out.report.check("off-level-anchor-guard").unwrap().status, Status::Pass);
    }

    #[test]
    fn sweep_default_grid() {
        let out = run(&cfg(&[("command", "index-sweep"), ("r", "0.2,0.3,0.5,0.6,0.707,0.8,0.866,0.95")])).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
        let csv = &out.artifacts[0].contents;
        assert!(csv.lines().nth(1).unwrap().starts_with("0.200000,10,11"));
        let single = run(&cfg(&[("command", "index-sweep")])).unwrap();
        assert!(single.artifacts[0].contents.contains("0.600000,4,5"));
    }

    #[test]
    fn empty_sweep_grid_is_a_config_error() {
        let c = cfg(&[("command", "index-sweep"), ("r", "")]);
        assert!(matches!(run(&c), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn lemma_suite_passes() {
        let out = run(&cfg(&[("command", "lemma22"), ("samples", "200")])).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
    }

    #[test]
    fn reports_are_deterministic() {
        let c = cfg(&[("command", "verify"), ("samples", "120"), ("seed", "9")]);
        assert_eq!(run(&c).unwrap().report.to_json(), run(&c).unwrap().report.to_json());
    }

    #[test]
    fn spectrum_on_torus() {
        let out = run(&cfg(&[("command", "spectrum"), ("samples", "16")])).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
        assert!(out.artifacts[0].contents.starts_with("p,q,mu,mult,jac,class\n"));
    }

    #[test]
    fn minimal_torus_support_families_coincide() {
        let out = run(&cfg(&[("command", "spectrum"), ("r", "0.7071067811865476"), ("samples", "16")])).unwrap();
        assert_eq!(out.report.check("family-ranks").unwrap().status, Status::Pass);
        // f_v = +-ell_v when |A|^2 = n, so V1 and V2 are not orthogonal
        assert_eq!(out.report.check("family-orthogonality").unwrap().status, Status::Fail);
        assert_eq!(out.exit_code(), 1);
    }

    #[test]
    fn umbilical_spectrum_has_one_kernel_degree() {
        let out = run(&cfg(&[("command", "spectrum"), ("family", "umbilical"), ("c", "0.4")])).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
    }

    #[test]
    fn counterexample_command() {
        let out = run(&cfg(&[("command", "counterexample"), ("samples", "120"), ("anchors", "2")])).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
        assert_eq!(out.report.check("non-cmc").unwrap().status, Status::Pass);
        assert_eq!(out.report.check("level-set-partition").unwrap().anchor, "non-cmc-example");
    }

    #[test]
    fn anchor_completeness() {
        let runs: &[&[(&str, &str)]] = &[
            &[("command", "verify"), ("samples", "100")],
            &[("command", "verify"), ("family", "umbilical"), ("samples", "100")],
            &[("command", "verify"), ("family", "umbilical"), ("c", "0.3"), ("samples", "100")],
            &[("command", "geodesics"), ("anchors", "1")],
            &[("command", "spectrum"), ("samples", "8")],
            &[("command", "index-sweep")],
            &[("command", "counterexample"), ("samples", "100"), ("anchors", "1")],
            &[("command", "lemma22"), ("samples", "50")],
        ];
        let mut seen = std::collections::BTreeSet::new();
        for pairs in runs {
            let out = run(&cfg(pairs)).unwrap();
            for c in &out.report.checks {
                assert!(out.report.anchors.contains_key(c.anchor));
                seen.insert(c.anchor);
            }
        }
        let all: std::collections::BTreeSet<_> = ANCHORS.iter().map(|a| a.id).collect();
        assert_eq!(seen, all);
    }
}
