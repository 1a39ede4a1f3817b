//! Run configuration: TOML file, `RIDESIM_*` environment overrides, defaults.
//!
//! Top-level keys mirror the scenario; `[choice]`, `[rating]`, `[graph]`,
//! `[sweep]` and `[sensitivity]` hold the rest. An empty file yields the
//! default experiment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ridesim_core::choice::{Attribute, ChoiceModel, DecisionContext};
use ridesim_core::netgraph::{RoadGraph, Router, DEFAULT_CACHE_LIMIT};
use ridesim_core::scenario::{ExperimentPlan, RatingDistribution, ScenarioConfig};
use ridesim_core::{ChoiceError, ScenarioError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "RIDESIM_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of the `run` subcommand.
    pub seed: u64,
    pub horizon_s: u64,
    pub n_drivers: usize,
    pub n_travellers: usize,
    pub behavioural_share: f64,
    pub fare_per_km_eur: f64,
    pub central_centre: Option<[f64; 2]>,
    pub central_radius_m: f64,
    pub central_speed_kmh: f64,
    pub outer_speed_kmh: f64,
    pub max_offer_rounds: u32,
    pub max_wait_s: Option<f64>,
    pub offer_response_s: f64,
    pub min_trip_m: f64,
    /// Random-class probability; calibrated on demand when absent.
    pub random_accept_prob: Option<f64>,
    pub behavioural_rule: String,
    pub baseline_rule: String,
    pub dispatch: String,
    pub arrivals: String,
    pub choice: ChoiceModel,
    pub rating: RatingDistribution,
    pub graph: GraphConfig,
    pub sweep: SweepConfig,
    pub sensitivity: SensitivityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            seed: 42,
            horizon_s: s.horizon_s,
            n_drivers: s.n_drivers,
            n_travellers: s.n_travellers,
            behavioural_share: s.behavioural_share,
            fare_per_km_eur: s.fare_per_km_eur,
            central_centre: s.central_centre.map(|(x, y)| [x, y]),
            central_radius_m: s.central_radius_m,
            central_speed_kmh: s.central_speed_kmh,
            outer_speed_kmh: s.outer_speed_kmh,
            max_offer_rounds: s.max_offer_rounds,
            max_wait_s: s.max_wait_s,
            offer_response_s: s.offer_response_s,
            min_trip_m: s.min_trip_m,
            random_accept_prob: s.random_accept_prob,
            behavioural_rule: s.behavioural_rule,
            baseline_rule: s.baseline_rule,
            dispatch: s.dispatch,
            arrivals: s.arrivals,
            choice: s.choice,
            rating: s.rating,
            graph: GraphConfig::default(),
            sweep: SweepConfig::default(),
            sensitivity: SensitivityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphSource {
    Grid,
    Files,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub source: GraphSource,
    pub rows: usize,
    pub cols: usize,
    pub edge_len_m: f64,
    /// Relative paths resolve against the config file's directory.
    pub nodes_file: Option<PathBuf>,
    pub edges_file: Option<PathBuf>,
    pub cache_limit: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            source: GraphSource::Grid,
            rows: 20,
            cols: 20,
            edge_len_m: 120.0,
            nodes_file: None,
            edges_file: None,
            cache_limit: DEFAULT_CACHE_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub shares: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core. Never affects outputs.
    pub jobs: usize,
    pub calibration_seeds: usize,
    /// Share whose cells feed the per-driver distribution file.
    pub distribution_share: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            shares: ExperimentPlan::default_shares(),
            replications: 10,
            master_seed: 42,
            jobs: 0,
            calibration_seeds: 10,
            distribution_share: 0.5,
        }
    }
}

/// Inclusive evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

const MAX_GRID_POINTS: f64 = 1e6;

impl GridRange {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let GridRange { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if step <= 0.0 {
            return Err(format!("step must be positive, got {step}"));
        }
        if stop < start {
            return Err(format!("stop {stop} is below start {start}"));
        }
        let n = ((stop - start) / step + 1e-9).floor();
        if n >= MAX_GRID_POINTS {
            return Err(format!("grid of {n} points is too large"));
        }
        Ok((0..=n as usize).map(|i| start + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceContext {
    pub pickup_min: f64,
    pub waiting_min: f64,
    pub time1_loc: bool,
    pub rlrd: f64,
}

impl Default for ReferenceContext {
    fn default() -> Self {
        Self { pickup_min: 0.0, waiting_min: 0.0, time1_loc: false, rlrd: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    /// Attributes not being swept are held here.
    pub reference: ReferenceContext,
    pub pickup: GridRange,
    pub waiting: GridRange,
    pub time1_loc: GridRange,
    pub rlrd: GridRange,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            reference: ReferenceContext::default(),
            pickup: GridRange { start: 0.0, stop: 30.0, step: 1.0 },
            waiting: GridRange { start: 0.0, stop: 60.0, step: 1.0 },
            time1_loc: GridRange { start: 0.0, stop: 1.0, step: 1.0 },
            rlrd: GridRange { start: 0.0, stop: 5.0, step: 0.5 },
        }
    }
}

impl SensitivityConfig {
    pub fn range(&self, attribute: Attribute) -> &GridRange {
        match attribute {
            Attribute::Pickup => &self.pickup,
            Attribute::Waiting => &self.waiting,
            Attribute::Time1Loc => &self.time1_loc,
            Attribute::Rlrd => &self.rlrd,
        }
    }

    pub fn reference(&self) -> DecisionContext {
        let r = self.reference;
        DecisionContext {
            pickup_time_min: r.pickup_min,
            waiting_time_min: r.waiting_min,
            time1_loc: r.time1_loc,
            rlrd: r.rlrd,
        }
    }
}

/// A validated configuration plus what is needed to report on it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    /// File name used in diagnostics.
    pub origin: String,
    source: String,
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            horizon_s: self.horizon_s,
            n_drivers: self.n_drivers,
            n_travellers: self.n_travellers,
            behavioural_share: self.behavioural_share,
            fare_per_km_eur: self.fare_per_km_eur,
            central_centre: self.central_centre.map(|[x, y]| (x, y)),
            central_radius_m: self.central_radius_m,
            central_speed_kmh: self.central_speed_kmh,
            outer_speed_kmh: self.outer_speed_kmh,
            rating: self.rating,
            max_offer_rounds: self.max_offer_rounds,
            max_wait_s: self.max_wait_s,
            offer_response_s: self.offer_response_s,
            min_trip_m: self.min_trip_m,
            random_accept_prob: self.random_accept_prob,
            choice: self.choice,
            behavioural_rule: self.behavioural_rule.clone(),
            baseline_rule: self.baseline_rule.clone(),
            dispatch: self.dispatch.clone(),
            arrivals: self.arrivals.clone(),
        }
    }

    pub fn plan(&self) -> Result<ExperimentPlan, ScenarioError> {
        ExperimentPlan::new(self.sweep.shares.clone(), self.sweep.replications, self.sweep.master_seed)
    }

    /// Hex SHA-256 of the canonical TOML rendering. `jobs` is excluded
    /// because it never changes results.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.sweep.jobs = 0;
        let text = toml::to_string(&canonical).expect("config serialises");
        let hash = Sha256::digest(text.as_bytes());
        hash.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn jobs(&self) -> usize {
        match self.sweep.jobs {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            j => j,
        }
    }

    /// Semantic checks. Errors name the offending key.
    pub fn validate(&self) -> Result<(), (String, String)> {
        if let Err(e) = self.scenario().validate() {
            let msg = match e {
                ScenarioError::Config(m) | ScenarioError::Choice(ChoiceError::Config(m)) => m,
                other => other.to_string(),
            };
            let key = msg.split_whitespace().next().unwrap_or("").trim_end_matches(':').to_string();
            let key = match key.as_str() {
                k if k.starts_with("beta_") => format!("choice.{k}"),
                "rating" => "rating".into(),
                k => k.into(),
            };
            return Err((key, msg));
        }
        let g = &self.graph;
        match g.source {
            GraphSource::Grid => {
                if g.rows < 2 || g.cols < 2 {
                    return Err((
                        "graph.rows".into(),
                        format!("grid needs at least 2x2 nodes, got {}x{}", g.rows, g.cols),
                    ));
                }
                if !(g.edge_len_m.is_finite() && g.edge_len_m > 0.0) {
                    return Err(("graph.edge_len_m".into(), format!("must be positive, got {}", g.edge_len_m)));
                }
            }
            GraphSource::Files => {
                if g.nodes_file.is_none() {
                    return Err(("graph.nodes_file".into(), "required when source = \"files\"".into()));
                }
                if g.edges_file.is_none() {
                    return Err(("graph.edges_file".into(), "required when source = \"files\"".into()));
                }
            }
        }
        let s = &self.sweep;
        if let Err(e) = self.plan() {
            let key = if s.replications == 0 { "sweep.replications" } else { "sweep.shares" };
            return Err((key.into(), e.to_string()));
        }
        if s.calibration_seeds == 0 {
            return Err(("sweep.calibration_seeds".into(), "must be positive".into()));
        }
        if !(0.0..=1.0).contains(&s.distribution_share) {
            return Err(("sweep.distribution_share".into(), format!("{} outside [0, 1]", s.distribution_share)));
        }
        for a in Attribute::ALL {
            let key = format!("sensitivity.{}", a.id());
            let values = self.sensitivity.range(a).values().map_err(|m| (key.clone(), m))?;
            let reference = self.sensitivity.reference();
            for v in values {
                reference.with(a, v).map_err(|e| (key.clone(), e.to_string()))?;
            }
        }
        Ok(())
    }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// First line defining dotted `key`, honouring `[section]` headers.
fn find_key_line(source: &str, key: &str) -> Option<usize> {
    let (section, leaf) = match key.rsplit_once('.') {
        Some((s, l)) => (s, l),
        None => ("", key),
    };
    let mut current = String::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            current = h.trim().to_string();
            if current == key {
                return Some(i + 1);
            }
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            let k = k.trim();
            let full = if current.is_empty() { k.to_string() } else { format!("{current}.{k}") };
            if (current == section && k == leaf) || full == key {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Key on the line containing `offset`, prefixed with its section.
fn key_at(source: &str, offset: usize) -> Option<String> {
    let line_no = line_of(source, offset);
    let mut section = String::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            section = h.trim().to_string();
        }
        if i + 1 == line_no {
            let k = line.split_once('=').map(|(k, _)| k.trim())?;
            return Some(if section.is_empty() { k.to_string() } else { format!("{section}.{k}") });
        }
    }
    None
}

fn toml_error(origin: &str, source: &str, e: &toml::de::Error) -> CliError {
    let (location, key) = match e.span() {
        Some(span) => (Some(format!("{origin}:{}", line_of(source, span.start))), key_at(source, span.start)),
        None => (Some(origin.to_string()), None),
    };
    CliError::Config { location, key, message: e.message().trim().to_string() }
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn env_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, var: &str, raw: &str) -> Result<(), CliError> {
    let path: Vec<String> = var[ENV_PREFIX.len()..].split("__").map(str::to_lowercase).collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::Config {
            location: Some(var.into()),
            key: None,
            message: "malformed override name".into(),
        });
    }
    let (leaf, sections) = path.split_last().expect("nonempty");
    let mut t = table;
    for s in sections {
        let entry = t.entry(s.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or_else(|| CliError::Config {
            location: Some(var.into()),
            key: Some(s.clone()),
            message: "is not a section".into(),
        })?;
    }
    t.insert(leaf.clone(), env_value(raw));
    Ok(())
}

impl Loaded {
    /// Parses `text`, applies `RIDESIM_*` overrides from `env`, and validates.
    pub fn from_str(
        text: &str,
        origin: &str,
        base_dir: &Path,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, CliError> {
        let from_file: RunConfig = toml::from_str(text).map_err(|e| toml_error(origin, text, &e))?;
        let mut overrides: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        overrides.sort();
        let config = if overrides.is_empty() {
            from_file
        } else {
            let mut table: toml::Table = text.parse().map_err(|e| toml_error(origin, text, &e))?;
            for (k, v) in &overrides {
                apply_override(&mut table, k, v)?;
            }
            let names: Vec<&str> = overrides.iter().map(|(k, _)| k.as_str()).collect();
            RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| CliError::Config {
                location: Some(format!("environment ({})", names.join(", "))),
                key: None,
                message: e.message().trim().to_string(),
            })?
        };
        let loaded =
            Self { config, origin: origin.to_string(), source: text.to_string(), base_dir: base_dir.to_path_buf() };
        loaded.check()?;
        Ok(loaded)
    }

    /// Reads `path`, or the defaults when `None`.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                Self::from_str(&text, &p.display().to_string(), &base, env)
            }
            None => Self::from_str("", "<defaults>", Path::new("."), env),
        }
    }

    /// Re-validates after programmatic edits such as command-line flags.
    pub fn check(&self) -> Result<(), CliError> {
        self.config.validate().map_err(|(key, message)| CliError::Config {
            location: Some(match find_key_line(&self.source, &key) {
                Some(line) => format!("{}:{line}", self.origin),
                None => self.origin.clone(),
            }),
            key: Some(key),
            message,
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads or generates the road graph and assigns zone speeds.
    pub fn graph(&self) -> Result<RoadGraph, CliError> {
        let g = &self.config.graph;
        let raw = match g.source {
            GraphSource::Grid => RoadGraph::generate_grid(g.rows, g.cols, g.edge_len_m)?,
            GraphSource::Files => {
                let nodes = self.resolve(g.nodes_file.as_deref().expect("validated"));
                let edges = self.resolve(g.edges_file.as_deref().expect("validated"));
                RoadGraph::load_csv(&nodes, &edges)?
            }
        };
        Ok(self.config.scenario().classify(raw)?)
    }

    pub fn router(&self) -> Result<Router, CliError> {
        Ok(Router::new(self.graph()?, self.config.graph.cache_limit))
    }
}
