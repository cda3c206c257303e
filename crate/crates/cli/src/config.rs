//! Experiment configuration: TOML parsing, defaults, validation and the
//! resolved form echoed next to every run.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sparsehw::bounds::{DEFAULT_C, DEFAULT_D, DEFAULT_D_NONCENTERED};
use sparsehw::simulation::bilinear::standard_normal_psi2;
use sparsehw::simulation::model::DEFAULT_BETA_DISPERSION;
use sparsehw::simulation::{
    JointPreset, MeasurementErrorSpec, MissingSpec, Observation, PopulationFamily, PopulationSpec,
    Scenario,
};
use sparsehw::Matrix;

/// Environment variable consulted for the seed when neither the flag nor
/// the config sets one.
pub const SEED_ENV: &str = "SPARSEHW_SEED";

/// A configuration problem, located in the source file where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub value: String,
    pub constraint: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config key `{}`", self.key)?;
        if let Some(line) = self.line {
            write!(f, " (line {line})")?;
        }
        if !self.value.is_empty() {
            write!(f, ": value {}", self.value)?;
        }
        write!(f, ": {}", self.constraint)
    }
}

impl std::error::Error for ConfigError {}

/// Either one value for every column or one value per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerColumn {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerColumn {
    fn expand(&self, len: usize) -> Option<Vec<f64>> {
        match self {
            PerColumn::Scalar(v) => Some(vec![*v; len]),
            PerColumn::List(v) if v.len() == len => Some(v.clone()),
            PerColumn::List(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[default]
    Complete,
    Missing,
    BoundedError,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Complete => "complete",
            ScenarioKind::Missing => "missing",
            ScenarioKind::BoundedError => "bounded-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub kind: ScenarioKind,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Entry `(k, ℓ)` whose deviation `tail` follows.
    #[serde(default)]
    pub entry: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub k: usize,
    pub l: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    #[serde(default = "default_family")]
    pub family: PopulationFamily,
    #[serde(default = "zero")]
    pub mu_x: PerColumn,
    #[serde(default = "zero")]
    pub mu_y: PerColumn,
    /// Full `p × q` cross-covariance; takes precedence over `signals`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_xy: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub signals: Vec<Signal>,
}

impl Default for PopulationSection {
    fn default() -> Self {
        PopulationSection {
            family: default_family(),
            mu_x: zero(),
            mu_y: zero(),
            sigma_xy: None,
            signals: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingSection {
    #[serde(default = "default_pi")]
    pub pi_x: PerColumn,
    #[serde(default = "default_pi")]
    pub pi_y: PerColumn,
    #[serde(default = "default_joint")]
    pub joint: JointPreset,
    /// Explicit `p × q` joint table; takes precedence over `joint`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_xy: Option<Vec<Vec<f64>>>,
}

impl Default for MissingSection {
    fn default() -> Self {
        MissingSection {
            pi_x: default_pi(),
            pi_y: default_pi(),
            joint: default_joint(),
            pi_xy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorsSection {
    #[serde(default = "default_u")]
    pub u_x: PerColumn,
    #[serde(default = "default_u")]
    pub u_y: PerColumn,
    #[serde(default = "default_b")]
    pub b_x: PerColumn,
    #[serde(default = "default_b")]
    pub b_y: PerColumn,
    #[serde(default = "default_dispersion")]
    pub dispersion: f64,
    #[serde(default)]
    pub rho: f64,
}

impl Default for ErrorsSection {
    fn default() -> Self {
        ErrorsSection {
            u_x: default_u(),
            u_y: default_u(),
            b_x: default_b(),
            b_y: default_b(),
            dispersion: default_dispersion(),
            rho: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSection {
    /// Explicit grid of positive thresholds; when absent the grid is built
    /// from the simulated deviations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for TailSection {
    fn default() -> Self {
        TailSection {
            grid: None,
            points: default_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    /// Exponent constant of the tail bounds.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Leading multiplier; defaults to 2 for complete data, 8 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Threshold constant of the cutoff rule.
    #[serde(rename = "C", default = "one")]
    pub big_c: f64,
    /// Constant of the sample-size condition.
    #[serde(default = "one")]
    pub d_cond: f64,
    /// Calibrate the constants on the run seed and validate on the next.
    #[serde(default)]
    pub calibrate: bool,
    /// Constants file written by `calibrate`; its values replace `c`/`C`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        ConstantsSection {
            c: default_c(),
            d: None,
            big_c: 1.0,
            d_cond: 1.0,
            calibrate: false,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckMgfSection {
    #[serde(default = "default_mgf_rho")]
    pub rho: f64,
    #[serde(default = "default_mgf_a")]
    pub a: Vec<f64>,
    /// `λ` values as fractions of the admissible limit `1/(4e K1 K2 |a|)`.
    #[serde(default = "default_lambda_fractions")]
    pub lambda_fractions: Vec<f64>,
    #[serde(default = "standard_normal_psi2")]
    pub k: f64,
    #[serde(default = "default_mgf_reps")]
    pub reps: usize,
    #[serde(default = "yes")]
    pub hoeffding: bool,
    #[serde(default = "default_hoeffding_n")]
    pub hoeffding_n: usize,
    #[serde(default = "default_hoeffding_pi")]
    pub hoeffding_pi: f64,
}

impl Default for CheckMgfSection {
    fn default() -> Self {
        CheckMgfSection {
            rho: default_mgf_rho(),
            a: default_mgf_a(),
            lambda_fractions: default_lambda_fractions(),
            k: standard_normal_psi2(),
            reps: default_mgf_reps(),
            hoeffding: true,
            hoeffding_n: default_hoeffding_n(),
            hoeffding_pi: default_hoeffding_pi(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NormsSection {
    /// Sample sizes of the centering matrices to tabulate; defaults to `n`.
    #[serde(default)]
    pub sizes: Vec<usize>,
}

/// The whole file. Every section but `[experiment]` is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<MissingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorsSection>,
    #[serde(default)]
    pub tail: TailSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub check_mgf: CheckMgfSection,
    #[serde(default)]
    pub norms: NormsSection,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_reps() -> usize {
    1000
}
fn default_out() -> PathBuf {
    PathBuf::from("sparsehw-out")
}
fn default_family() -> PopulationFamily {
    PopulationFamily::Gaussian
}
fn zero() -> PerColumn {
    PerColumn::Scalar(0.0)
}
fn default_pi() -> PerColumn {
    PerColumn::Scalar(0.7)
}
fn default_joint() -> JointPreset {
    JointPreset::Independent
}
fn default_u() -> PerColumn {
    PerColumn::Scalar(0.5)
}
fn default_b() -> PerColumn {
    PerColumn::Scalar(1.0)
}
fn default_dispersion() -> f64 {
    DEFAULT_BETA_DISPERSION
}
fn default_points() -> usize {
    25
}
fn default_c() -> f64 {
    DEFAULT_C
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_mgf_rho() -> f64 {
    0.5
}
fn default_mgf_a() -> Vec<f64> {
    vec![1.0, -1.0, 0.5, -0.5]
}
fn default_lambda_fractions() -> Vec<f64> {
    vec![-0.9, -0.45, 0.2, 0.45, 0.9]
}
fn default_mgf_reps() -> usize {
    1_000_000
}
fn default_hoeffding_n() -> usize {
    50
}
fn default_hoeffding_pi() -> f64 {
    0.7
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
}

/// A parsed, validated configuration together with the scenario it
/// describes.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub seed: u64,
    pub scenario: Scenario,
    /// Directory the relative paths of the file resolve against.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn kind(&self) -> ScenarioKind {
        self.raw.experiment.kind
    }

    pub fn out_dir(&self) -> &Path {
        &self.raw.experiment.out
    }

    /// Leading multiplier of the entrywise tail bound.
    pub fn d(&self) -> f64 {
        self.raw.constants.d.unwrap_or(match self.kind() {
            ScenarioKind::Complete => DEFAULT_D,
            _ => DEFAULT_D_NONCENTERED,
        })
    }

    /// The resolved configuration as TOML: all defaults filled in, the seed
    /// and overrides applied.
    pub fn resolved_toml(&self) -> String {
        let mut raw = self.raw.clone();
        raw.experiment.seed = Some(self.seed);
        toml::to_string(&raw).expect("configuration serializes")
    }

    /// SHA-256 of the resolved configuration, ignoring the output
    /// directory so that the same experiment hashes identically wherever it
    /// is written.
    pub fn content_hash(&self) -> String {
        let mut raw = self.raw.clone();
        raw.experiment.seed = Some(self.seed);
        raw.experiment.out = PathBuf::new();
        let text = toml::to_string(&raw).expect("configuration serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Reads and validates a configuration file.
pub fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let source = std::fs::read_to_string(path).map_err(|e| ConfigError {
        key: "--config".into(),
        line: None,
        value: path.display().to_string(),
        constraint: format!("readable file ({e})"),
    })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&source, &base_dir, overrides, std::env::var(SEED_ENV).ok().as_deref())
}

/// Parses and validates configuration text. `env_seed` is the value of the
/// seed environment variable, if any.
pub fn parse(
    source: &str,
    base_dir: &Path,
    overrides: &Overrides,
    env_seed: Option<&str>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut raw: RawConfig = toml::from_str(source).map_err(|e| parse_error(source, &e))?;
    let loc = Locator { source };

    if let Some(reps) = overrides.reps {
        raw.experiment.reps = reps;
        raw.check_mgf.reps = reps;
    }
    if let Some(out) = &overrides.out {
        raw.experiment.out = out.clone();
    }
    let seed = match (overrides.seed, env_seed, raw.experiment.seed) {
        (Some(s), _, _) => s,
        (None, Some(text), _) => text.trim().parse::<u64>().map_err(|_| ConfigError {
            key: SEED_ENV.into(),
            line: None,
            value: text.into(),
            constraint: "an unsigned 64-bit integer".into(),
        })?,
        (None, None, Some(s)) => s,
        (None, None, None) => {
            return Err(ConfigError {
                key: "experiment.seed".into(),
                line: None,
                value: String::new(),
                constraint: format!("required: set it in the file, via --seed or via {SEED_ENV}"),
            })
        }
    };
    if raw.norms.sizes.is_empty() {
        raw.norms.sizes = vec![raw.experiment.n];
    }
    match raw.experiment.kind {
        ScenarioKind::Missing => {
            raw.missing.get_or_insert_with(MissingSection::default);
        }
        ScenarioKind::BoundedError => {
            raw.errors.get_or_insert_with(ErrorsSection::default);
        }
        ScenarioKind::Complete => {}
    }
    validate(&raw, &loc)?;
    let scenario = build_scenario(&raw, &loc)?;
    Ok(ExperimentConfig {
        raw,
        seed,
        scenario,
        base_dir: base_dir.to_path_buf(),
    })
}

fn parse_error(source: &str, e: &toml::de::Error) -> ConfigError {
    let line = e
        .span()
        .map(|span| source[..span.start.min(source.len())].matches('\n').count() + 1);
    ConfigError {
        key: "(parse)".into(),
        line,
        value: String::new(),
        constraint: e.message().to_string(),
    }
}

/// Finds the line of `key` inside `[section]` by a textual scan.
struct Locator<'a> {
    source: &'a str,
}

impl Locator<'_> {
    fn line(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = String::new();
        for (i, line) in self.source.lines().enumerate() {
            let t = line.trim();
            if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = name.trim().to_string();
                continue;
            }
            if current == section {
                if let Some((k, _)) = t.split_once('=') {
                    if k.trim() == key {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    fn error(&self, path: &str, value: impl fmt::Display, constraint: impl Into<String>) -> ConfigError {
        let (section, key) = path.split_once('.').unwrap_or(("", path));
        ConfigError {
            key: path.into(),
            line: self.line(section, key),
            value: value.to_string(),
            constraint: constraint.into(),
        }
    }
}

fn validate(raw: &RawConfig, loc: &Locator) -> Result<(), ConfigError> {
    let e = &raw.experiment;
    if e.n < 2 {
        return Err(loc.error("experiment.n", e.n, "must be at least 2"));
    }
    if e.p == 0 {
        return Err(loc.error("experiment.p", e.p, "must be at least 1"));
    }
    if e.q == 0 {
        return Err(loc.error("experiment.q", e.q, "must be at least 1"));
    }
    if !(e.alpha > 0.0 && e.alpha < 1.0) {
        return Err(loc.error("experiment.alpha", e.alpha, "must lie in the open interval (0,1)"));
    }
    if e.reps == 0 {
        return Err(loc.error("experiment.reps", e.reps, "must be at least 1"));
    }
    if e.entry[0] >= e.p || e.entry[1] >= e.q {
        return Err(loc.error(
            "experiment.entry",
            format!("[{}, {}]", e.entry[0], e.entry[1]),
            format!("must index a cell of the {} x {} cross-covariance", e.p, e.q),
        ));
    }
    if let Some(grid) = &raw.tail.grid {
        if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(loc.error("tail.grid", format!("{grid:?}"), "must be a non-empty list of positive numbers"));
        }
    }
    if raw.tail.points < 2 {
        return Err(loc.error("tail.points", raw.tail.points, "must be at least 2"));
    }
    let c = &raw.constants;
    for (key, v) in [("constants.c", c.c), ("constants.C", c.big_c), ("constants.d_cond", c.d_cond)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(loc.error(key, v, "must be positive and finite"));
        }
    }
    if let Some(d) = c.d {
        if !(d > 0.0 && d.is_finite()) {
            return Err(loc.error("constants.d", d, "must be positive and finite"));
        }
    }
    let m = &raw.check_mgf;
    if !(-1.0..=1.0).contains(&m.rho) {
        return Err(loc.error("check_mgf.rho", m.rho, "must lie in [-1, 1]"));
    }
    if m.a.is_empty() || m.a.iter().any(|a| !a.is_finite() || *a == 0.0) {
        return Err(loc.error("check_mgf.a", format!("{:?}", m.a), "must be a non-empty list of nonzero numbers"));
    }
    if m.lambda_fractions.is_empty() || m.lambda_fractions.iter().any(|f| !(f.abs() < 1.0)) {
        return Err(loc.error(
            "check_mgf.lambda_fractions",
            format!("{:?}", m.lambda_fractions),
            "must be a non-empty list with every |value| < 1",
        ));
    }
    if !(m.k > 0.0 && m.k.is_finite()) {
        return Err(loc.error("check_mgf.k", m.k, "must be positive and finite"));
    }
    if m.reps < sparsehw::simulation::mgf::MIN_MGF_REPS {
        return Err(loc.error("check_mgf.reps", m.reps, "must be at least 10000"));
    }
    if m.hoeffding_n == 0 {
        return Err(loc.error("check_mgf.hoeffding_n", m.hoeffding_n, "must be at least 1"));
    }
    if !(m.hoeffding_pi > 0.0 && m.hoeffding_pi <= 1.0) {
        return Err(loc.error("check_mgf.hoeffding_pi", m.hoeffding_pi, "must lie in (0, 1]"));
    }
    if let Some(&n) = raw.norms.sizes.iter().find(|&&n| n < 2) {
        return Err(loc.error("norms.sizes", n, "every size must be at least 2"));
    }
    Ok(())
}

fn expand(loc: &Locator, key: &str, v: &PerColumn, len: usize) -> Result<Vec<f64>, ConfigError> {
    v.expand(len)
        .ok_or_else(|| loc.error(key, format!("{v:?}"), format!("must be a number or a list of {len} numbers")))
}

fn table(loc: &Locator, key: &str, rows: &[Vec<f64>], p: usize, q: usize) -> Result<Matrix, ConfigError> {
    if rows.len() != p || rows.iter().any(|r| r.len() != q) {
        return Err(loc.error(key, "", format!("must be a {p} x {q} table")));
    }
    Matrix::from_rows(rows).map_err(|e| loc.error(key, "", e.to_string()))
}

fn build_scenario(raw: &RawConfig, loc: &Locator) -> Result<Scenario, ConfigError> {
    let (n, p, q) = (raw.experiment.n, raw.experiment.p, raw.experiment.q);
    let pop = &raw.population;
    let mu_x = expand(loc, "population.mu_x", &pop.mu_x, p)?;
    let mu_y = expand(loc, "population.mu_y", &pop.mu_y, q)?;
    let sigma_xy = match &pop.sigma_xy {
        Some(rows) => table(loc, "population.sigma_xy", rows, p, q)?,
        None => {
            let mut m = Matrix::zeros(p, q);
            for s in &pop.signals {
                if s.k >= p || s.l >= q {
                    return Err(loc.error(
                        "population.signals",
                        format!("{{k = {}, l = {}}}", s.k, s.l),
                        format!("must index a cell of the {p} x {q} cross-covariance"),
                    ));
                }
                m[(s.k, s.l)] = s.value;
            }
            m
        }
    };
    let population = PopulationSpec::with_derived_k(
        mu_x,
        mu_y,
        Matrix::identity(p),
        Matrix::identity(q),
        sigma_xy,
        pop.family,
    )
    .map_err(|e| {
        let key = if pop.sigma_xy.is_some() { "population.sigma_xy" } else { "population.signals" };
        loc.error(key, "", format!("{e} (within-block covariances are identities)"))
    })?;

    let observation = match raw.experiment.kind {
        ScenarioKind::Complete => Observation::Complete,
        ScenarioKind::Missing => {
            let m = raw.missing.as_ref().expect("filled in by parse");
            let pi_x = expand(loc, "missing.pi_x", &m.pi_x, p)?;
            let pi_y = expand(loc, "missing.pi_y", &m.pi_y, q)?;
            let (key, spec) = match &m.pi_xy {
                Some(rows) => (
                    "missing.pi_xy",
                    MissingSpec::new(pi_x, pi_y, table(loc, "missing.pi_xy", rows, p, q)?),
                ),
                None => ("missing.joint", MissingSpec::preset(pi_x, pi_y, m.joint)),
            };
            Observation::Missing {
                spec: spec.map_err(|e| loc.error(key, "", e.to_string()))?,
            }
        }
        ScenarioKind::BoundedError => {
            let s = raw.errors.as_ref().expect("filled in by parse");
            let spec = MeasurementErrorSpec::beta_copula(
                expand(loc, "errors.u_x", &s.u_x, p)?,
                expand(loc, "errors.u_y", &s.u_y, q)?,
                expand(loc, "errors.b_x", &s.b_x, p)?,
                expand(loc, "errors.b_y", &s.b_y, q)?,
                s.dispersion,
                s.rho,
            )
            .map_err(|e| {
                let key = match &e {
                    sparsehw::Error::InvalidParameter { name, .. } if name == "rho" => "errors.rho",
                    sparsehw::Error::InvalidParameter { name, .. } if name == "dispersion" => {
                        "errors.dispersion"
                    }
                    _ => "errors.u_x",
                };
                loc.error(key, "", e.to_string())
            })?;
            Observation::BoundedError { spec }
        }
    };
    Scenario::new(n, population, observation).map_err(|e| {
        let key = match raw.experiment.kind {
            ScenarioKind::Missing => "missing.pi_xy",
            ScenarioKind::BoundedError => "errors",
            ScenarioKind::Complete => "experiment",
        };
        loc.error(key, "", e.to_string())
    })
}

/// Constants persisted by `calibrate` and read back through
/// `constants.file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub seed: u64,
    pub config_sha256: String,
    pub alpha: f64,
    pub reps: usize,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub quantile: f64,
    pub unit_cutoff: f64,
    pub cutoff: f64,
    /// Exponent constant of the entrywise tail bound, when calibrated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

/// Reads a constants file, resolving relative paths against `base`.
pub fn read_constants(base: &Path, path: &Path) -> Result<ConstantsFile, ConfigError> {
    let full = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
    let text = std::fs::read_to_string(&full).map_err(|e| ConfigError {
        key: "constants.file".into(),
        line: None,
        value: full.display().to_string(),
        constraint: format!("must name a readable file ({e})"),
    })?;
    toml::from_str(&text).map_err(|e| ConfigError {
        key: "constants.file".into(),
        line: None,
        value: full.display().to_string(),
        constraint: format!("must be a constants file written by `calibrate` ({})", e.message()),
    })
}
