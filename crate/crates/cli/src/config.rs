//! Run configuration: the JSON document, command-line overrides and the
//! tolerance registry.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use weyl_core::{catalog, Inertia, MetricKind, MetricSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Sample points: an explicit list or a seeded box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Points {
    List(Vec<Vec<f64>>),
    Random {
        count: usize,
        #[serde(rename = "box", default = "default_box")]
        bounds: [f64; 2],
        #[serde(default = "default_seed")]
        seed: u64,
    },
}

fn default_box() -> [f64; 2] {
    [0.1, 1.0]
}

fn default_seed() -> u64 {
    42
}

impl Default for Points {
    fn default() -> Self {
        Points::Random {
            count: 20,
            bounds: default_box(),
            seed: default_seed(),
        }
    }
}

impl Points {
    pub fn resolve(&self, n: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
        match self {
            Points::List(list) => {
                if let Some(bad) = list.iter().find(|p| p.len() != n) {
                    return Err(ConfigError::Invalid(format!(
                        "point {bad:?} has {} coordinates, expected {n}",
                        bad.len()
                    )));
                }
                Ok(list.clone())
            }
            Points::Random { count, bounds, seed } => {
                if !(bounds[0] < bounds[1]) {
                    return Err(ConfigError::Invalid(format!("empty sample box {bounds:?}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*count)
                    .map(|_| (0..n).map(|_| rng.random_range(bounds[0]..bounds[1])).collect())
                    .collect())
            }
        }
    }
}

/// Check groups selectable with `checks`.
pub const GROUPS: &[&str] = &[
    "curvature",
    "reference",
    "recurrence",
    "identities",
    "parallel",
    "c2",
    "ppwave",
    "iid",
    "electric",
    "rank_one",
    "decomposability",
    "synthetic",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checks {
    All(String),
    List(Vec<String>),
}

impl Default for Checks {
    fn default() -> Self {
        Checks::All("all".into())
    }
}

impl Checks {
    /// Normalized (lower-case) group list.
    pub fn groups(&self) -> Result<Vec<String>, ConfigError> {
        let raw: Vec<String> = match self {
            Checks::All(s) if s.eq_ignore_ascii_case("all") => {
                return Ok(GROUPS.iter().map(|s| s.to_string()).collect())
            }
            Checks::All(s) => s.split(',').map(str::to_string).collect(),
            Checks::List(v) => v.clone(),
        };
        let mut out = Vec::new();
        for g in raw {
            let g = g.trim().to_ascii_lowercase();
            if g == "all" {
                return Ok(GROUPS.iter().map(|s| s.to_string()).collect());
            }
            if !GROUPS.contains(&g.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "unknown check group '{g}' (known: {})",
                    GROUPS.join(", ")
                )));
            }
            if !out.contains(&g) {
                out.push(g);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Representation-battery instances.
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_synthetic_seed")]
    pub seed: u64,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    /// Random `(C, u)` pairs for the electric/magnetic split.
    #[serde(default = "default_em_pairs")]
    pub em_pairs: usize,
    /// Structured two-eigenvalue instances per dimension.
    #[serde(default = "default_structured")]
    pub structured: usize,
}

fn default_count() -> usize {
    200
}

fn default_synthetic_seed() -> u64 {
    7
}

fn default_dims() -> Vec<usize> {
    vec![5, 6, 7]
}

fn default_em_pairs() -> usize {
    50
}

fn default_structured() -> usize {
    8
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            count: default_count(),
            seed: default_synthetic_seed(),
            dims: default_dims(),
            em_pairs: default_em_pairs(),
            structured: default_structured(),
        }
    }
}

/// Step sizes for the finite-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_closedness_step")]
    pub closedness_step: f64,
    #[serde(default = "default_loop_size")]
    pub loop_size: f64,
    #[serde(default = "default_grad_step")]
    pub grad_g_step: f64,
}

fn default_closedness_step() -> f64 {
    1e-3
}

fn default_loop_size() -> f64 {
    1e-3
}

fn default_grad_step() -> f64 {
    1e-4
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            closedness_step: default_closedness_step(),
            loop_size: default_loop_size(),
            grad_g_step: default_grad_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// A catalog name, `{"name": ...}` (catalog parameters) or a full
    /// `{"name": ..., "params": ...}` object.
    #[serde(deserialize_with = "metric_or_name")]
    pub metric: MetricKind,
    pub n: usize,
    #[serde(default)]
    pub points: Points,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature_expectation: Option<Inertia>,
    #[serde(default)]
    pub numerics: Numerics,
    /// Report destination. Not echoed into the report, so two runs that
    /// differ only in where they write produce identical reports.
    #[serde(default, skip_serializing)]
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn spec(&self) -> MetricSpec {
        let mut s = MetricSpec::new(self.n, self.metric.clone());
        s.signature_expectation = self.signature_expectation;
        s
    }

    /// Everything that can be rejected before any point is evaluated.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.spec()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.checks.groups()?;
        Tolerances::new(&self.tolerances)?;
        self.points.resolve(self.n)?;
        if let Some(s) = &self.synthetic {
            if let Some(d) = s.dims.iter().find(|&&d| d < 5) {
                return Err(ConfigError::Invalid(format!("synthetic dimension {d} < 5")));
            }
        }
        Ok(())
    }

    pub fn group_enabled(&self, group: &str) -> bool {
        self.checks
            .groups()
            .map(|g| g.iter().any(|x| x == group))
            .unwrap_or(false)
    }
}

/// Command-line overrides; each `Some` replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub metric: Option<String>,
    pub n: Option<usize>,
    pub points: Option<String>,
    pub seed: Option<u64>,
    pub tol: Vec<(String, f64)>,
    pub checks: Option<String>,
    pub out: Option<PathBuf>,
}

/// Catalog example parameters for a metric name.
pub fn catalog_metric(name: &str) -> Result<MetricKind, ConfigError> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .map(|e| e.example)
        .ok_or_else(|| ConfigError::Invalid(format!("unknown metric '{name}'")))
}

pub fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VAL, got '{s}'"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|e| format!("bad tolerance value in '{s}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

impl Overrides {
    /// Applies the overrides on top of an optional file config.
    pub fn apply(&self, base: Option<RunConfig>) -> Result<RunConfig, ConfigError> {
        let mut cfg = match base {
            Some(c) => c,
            None => {
                let name = self
                    .metric
                    .as_deref()
                    .ok_or_else(|| ConfigError::Invalid("no --config given and no --metric".into()))?;
                RunConfig {
                    metric: metric_from_flag(name)?,
                    n: self.n.unwrap_or(5),
                    points: Points::default(),
                    tolerances: BTreeMap::new(),
                    checks: Checks::default(),
                    synthetic: None,
                    signature_expectation: None,
                    numerics: Numerics::default(),
                    output_path: None,
                }
            }
        };
        if let Some(m) = &self.metric {
            let kind = metric_from_flag(m)?;
            if kind.name() != cfg.metric.name() || m.trim_start().starts_with('{') {
                cfg.metric = kind;
            }
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(p) = &self.points {
            cfg.points = parse_points_flag(p, &cfg.points)?;
        }
        if let Some(seed) = self.seed {
            if let Points::Random { seed: s, .. } = &mut cfg.points {
                *s = seed;
            }
            if let Some(syn) = &mut cfg.synthetic {
                syn.seed = seed;
            }
        }
        for (k, v) in &self.tol {
            cfg.tolerances.insert(k.clone(), *v);
        }
        if let Some(c) = &self.checks {
            cfg.checks = Checks::List(c.split(',').map(|s| s.trim().to_string()).collect());
        }
        if let Some(o) = &self.out {
            cfg.output_path = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn metric_value(v: serde_json::Value) -> Result<MetricKind, ConfigError> {
    match &v {
        serde_json::Value::String(name) => catalog_metric(name),
        serde_json::Value::Object(o) if !o.contains_key("params") => match o.get("name") {
            Some(serde_json::Value::String(name)) if o.len() == 1 => catalog_metric(name),
            _ => Ok(serde_json::from_value(v)?),
        },
        _ => Ok(serde_json::from_value(v)?),
    }
}

fn metric_or_name<'de, D: serde::Deserializer<'de>>(d: D) -> Result<MetricKind, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    metric_value(v).map_err(serde::de::Error::custom)
}

/// `--metric` takes a catalog name or a JSON `{name, params}` object.
fn metric_from_flag(s: &str) -> Result<MetricKind, ConfigError> {
    if s.trim_start().starts_with('{') {
        metric_value(serde_json::from_str(s)?)
    } else {
        catalog_metric(s.trim())
    }
}

/// `--points` takes a count or a JSON list of coordinates.
fn parse_points_flag(s: &str, current: &Points) -> Result<Points, ConfigError> {
    if let Ok(count) = s.trim().parse::<usize>() {
        return Ok(match current {
            Points::Random { bounds, seed, .. } => Points::Random {
                count,
                bounds: *bounds,
                seed: *seed,
            },
            Points::List(_) => Points::Random {
                count,
                bounds: default_box(),
                seed: default_seed(),
            },
        });
    }
    Ok(serde_json::from_str(s)?)
}

/// One registered tolerance.
pub struct CheckDef {
    pub name: &'static str,
    pub tolerance: f64,
}

macro_rules! defs {
    ($($name:literal => $tol:expr),* $(,)?) => {
        &[$(CheckDef { name: $name, tolerance: $tol }),*]
    };
}

/// Default tolerances for every check that compares a defect.
pub const CHECKS: &[CheckDef] = defs![
    "curvature.first_bianchi" => 1e-10,
    "curvature.riemann_symmetry" => 1e-10,
    "curvature.second_bianchi" => 1e-9,
    "curvature.metric_compatibility" => 1e-11,
    "curvature.divergence_identity" => 1e-9,
    "curvature.weyl_trace" => 1e-10,
    "curvature.weyl_symmetry" => 1e-10,
    "curvature.signature" => 0.0,
    "curvature.ricci_identity_loop" => 1e-4,
    "reference.christoffel" => 1e-10,
    "reference.r1313" => 1e-10,
    "reference.r11" => 1e-10,
    "reference.scalar" => 1e-10,
    "reference.alpha" => 1e-8,
    "reference.alpha_sq" => 1e-9,
    "reference.null_alpha_sq" => 1e-10,
    "reference.null_ricci_coefficient" => 1e-9,
    "reference.galaev_ricci_coefficient" => 1e-9,
    "reference.constcurv_riemann" => 1e-10,
    "reference.flat_curvature" => 1e-12,
    "recurrence.residual" => 1e-8,
    "recurrence.gradient" => 1e-8,
    "recurrence.closedness" => 1e-5,
    "recurrence.riemann_recurrence" => 1e-9,
    "recurrence.alpha_alpha_riemann" => 1e-9,
    "recurrence.ricci_eigen" => 1e-9,
    "identities.cyclic_recurrence" => 1e-9,
    "identities.alpha_compatibility" => 1e-9,
    "identities.ricci_riemann_compatibility" => 1e-9,
    "identities.semisymmetry" => 1e-9,
    "identities.lovelock_alpha" => 1e-8,
    "identities.lovelock_symmetric" => 1e-8,
    "identities.lovelock_antisymmetric" => 1e-8,
    "identities.reconstruction" => 1e-8,
    "identities.electric_compatibility" => 1e-9,
    "identities.electric_invariants" => 1e-10,
    "identities.c2_relation" => 1e-10,
    "parallel.h_trace" => 1e-10,
    "parallel.nabla_h" => 1e-8,
    "parallel.h_alpha" => 1e-9,
    "parallel.commutation" => 1e-9,
    "parallel.h_weyl_compatibility" => 1e-9,
    "parallel.h_riemann_compatibility" => 1e-9,
    "parallel.grycak" => 1e-7,
    "parallel.scalar_split" => 1e-9,
    "parallel.ricci_spectrum" => 1e-9,
    "parallel.projector" => 1e-9,
    "parallel.grad_g" => 1e-4,
    "c2.vanishing" => 1e-10,
    "ppwave.trace" => 1e-10,
    "ppwave.cc" => 1e-11,
    "ppwave.conformal_harmonicity" => 1e-10,
    "ppwave.ricci_rank_one" => 1e-9,
    "ppwave.ricci_form" => 1e-9,
    "iid.defect" => 1e-9,
    "iid.alignment" => 1e-9,
    "electric.purely_electric" => 1e-9,
    "electric.consistency" => 0.0,
    "rank_one.fit" => 1e-9,
    "rank_one.antisymmetric" => 1e-9,
    "rank_one.riemann_divergence" => 1e-9,
    "decomposability.eigenvalue_mismatch" => 0.0,
    "synthetic.round_trip" => 1e-11,
    "synthetic.c2_relation" => 1e-10,
    "synthetic.electric_compatibility" => 1e-11,
    "synthetic.alpha_compatibility" => 1e-11,
    "synthetic.trace_free" => 1e-12,
    "synthetic.first_bianchi" => 1e-12,
    "synthetic.riemann_symmetry" => 1e-12,
    "synthetic.cyclic_recurrence" => 1e-9,
    "synthetic.recurrence_residual" => 1e-12,
    "synthetic.gradient" => 1e-10,
    "synthetic.h_trace" => 1e-10,
    "synthetic.nabla_h" => 1e-8,
    "synthetic.nabla_h_sensitivity" => 1e-4,
    "synthetic.h_alpha" => 1e-9,
    "synthetic.commutation" => 1e-9,
    "synthetic.h_weyl_compatibility" => 1e-9,
    "synthetic.h_riemann_compatibility" => 1e-9,
    "synthetic.grycak_residual" => 1e-7,
    "synthetic.grycak_g" => 1e-9,
    "synthetic.two_clusters" => 0.0,
    "synthetic.n_h" => 0.0,
    "synthetic.scalar_split" => 1e-9,
    "synthetic.ricci_spectrum" => 1e-9,
    "synthetic.projector_idempotence" => 1e-9,
    "synthetic.projector_trace" => 1e-9,
    "synthetic.h_square" => 1e-9,
    "synthetic.quasi_einstein" => 1e-9,
    "synthetic.h_prime_zero" => 1e-12,
    "synthetic.zero_second_eigenvalue" => 0.0,
    "synthetic.lovelock_baseline" => 1e-9,
    "synthetic.lovelock_sensitivity" => 1e-4,
    "synthetic.grad_g_relation" => 1e-10,
    "synthetic.em_split_sum" => 1e-10,
    "synthetic.purely_electric_consistency" => 0.0,
    "synthetic.timelike_purely_electric" => 1e-9,
    "synthetic.decomposability_mismatch" => 0.0,
    "synthetic.negative_compatibility" => 0.95,
    "synthetic.negative_purely_electric" => 0.95,
    "synthetic.negative_iid" => 0.95,
    "conformal_flatness" => 1e-10,
    "null" => 1e-10,
    "cluster" => 1e-6,
    "negative_threshold" => 0.05,
];

/// Resolved tolerance map (defaults plus overrides).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Tolerances {
    pub fn new(overrides: &BTreeMap<String, f64>) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, f64> = CHECKS.iter().map(|c| (c.name.to_string(), c.tolerance)).collect();
        for (k, v) in overrides {
            if !map.contains_key(k) {
                return Err(ConfigError::Invalid(format!("unknown tolerance key '{k}'")));
            }
            if !v.is_finite() || *v < 0.0 {
                return Err(ConfigError::Invalid(format!("tolerance '{k}' must be finite and >= 0")));
            }
            map.insert(k.clone(), *v);
        }
        Ok(Self(map))
    }

    pub fn map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }

    pub fn get(&self, name: &str) -> f64 {
        *self
            .0
            .get(name)
            .unwrap_or_else(|| panic!("unregistered check '{name}'"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::from_json(r#"{"metric": {"name": "flat"}, "n": 5}"#).unwrap();
        assert_eq!(c.points, Points::default());
        assert_eq!(c.checks.groups().unwrap().len(), GROUPS.len());
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_json(r#"{"metric": {"name": "flat"}, "n": 5, "bogus": 1}"#).is_err());
        let c = RunConfig::from_json(r#"{"metric": {"name": "flat"}, "n": 5, "tolerances": {"nope": 1.0}}"#).unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_json(r#"{"metric": {"name": "flat"}, "n": 5, "checks": ["c2", "warp"]}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let base = RunConfig::from_json(
            r#"{"metric": {"name": "flat"}, "n": 5, "points": {"count": 3, "seed": 1}, "checks": "all"}"#,
        )
        .unwrap();
        let o = Overrides {
            metric: Some("brinkmann_pq".into()),
            points: Some("4".into()),
            seed: Some(9),
            tol: vec![("recurrence.residual".into(), 1e-6)],
            checks: Some("IId,c2".into()),
            ..Default::default()
        };
        let c = o.apply(Some(base)).unwrap();
        assert_eq!(c.metric.name(), "brinkmann_pq");
        assert_eq!(
            c.points,
            Points::Random {
                count: 4,
                bounds: [0.1, 1.0],
                seed: 9
            }
        );
        assert_eq!(c.tolerances["recurrence.residual"], 1e-6);
        assert_eq!(c.checks.groups().unwrap(), vec!["iid".to_string(), "c2".to_string()]);
    }

    #[test]
    fn explicit_points_are_dimension_checked() {
        let c = RunConfig::from_json(r#"{"metric": {"name": "flat"}, "n": 5, "points": [[0.1, 0.2]]}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn tol_flag_parsing() {
        assert_eq!(parse_tol("a.b=1e-3").unwrap(), ("a.b".into(), 1e-3));
        assert!(parse_tol("a.b").is_err());
    }
}
