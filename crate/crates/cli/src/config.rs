//! Experiment configuration: TOML sections with flag and sweep overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const OBJECTIVES: [&str; 3] = ["quadratic", "logsumexp", "simplex-quadratic"];
pub const MAPS: [&str; 3] = ["euclidean", "entropy", "pth_power"];
pub const SETS: [&str; 4] = ["whole-space", "simplex", "box", "ball"];
pub const ALGORITHMS: [&str; 6] = [
    "md",
    "amd-unconstrained",
    "amd-constrained",
    "amd-higher-order",
    "flow-mirror",
    "flow-amd",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub objective: ObjectiveConfig,
    pub map: MapConfig,
    pub algorithm: AlgorithmConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub id: String,
    pub dim: usize,
    /// Smallest Hessian eigenvalue of the quadratics.
    pub eig_min: f64,
    /// Largest Hessian eigenvalue of the quadratics; equals `L`.
    pub eig_max: f64,
    /// Number of affine pieces of the log-sum-exp objective.
    pub terms: usize,
    /// Quadratic regularization weight of the log-sum-exp objective.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub id: String,
    /// Order of the p-th power map.
    pub p: u32,
    /// Feasible set of the Euclidean map.
    pub set: String,
    /// Box bounds, applied to every coordinate.
    pub lo: f64,
    pub hi: f64,
    /// Ball radius around the origin.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub id: String,
    /// Absolute step size; overrides `s_over_L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Step size as a multiple of `1/L`.
    #[serde(rename = "s_over_L")]
    pub s_over_l: f64,
    pub iters: usize,
    /// Step constant of the higher-order scheme; overrides `c_over_gate`.
    #[serde(rename = "const_C", skip_serializing_if = "Option::is_none")]
    pub const_c: Option<f64>,
    /// Step constant as a fraction of its largest admissible value.
    pub c_over_gate: f64,
    #[serde(rename = "const_M")]
    pub const_m: f64,
    pub t_end: f64,
    pub tol: f64,
    pub delta: f64,
    /// Gradient-correction weight of the accelerated flow; defaults to `sqrt(step)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sqrt_s: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub record_iterates: bool,
    /// Audit tolerance; defaults to 1e-9 for discrete and 1e-6 for flow runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_tolerance: Option<f64>,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            id: "quadratic".into(),
            dim: 8,
            eig_min: 1e-3,
            eig_max: 1.0,
            terms: 16,
            mu: 1e-2,
        }
    }
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig {
            id: "euclidean".into(),
            p: 3,
            set: "whole-space".into(),
            lo: -1.0,
            hi: 1.0,
            radius: 1.0,
        }
    }
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            id: "md".into(),
            step: None,
            s_over_l: 1.0,
            iters: 1000,
            const_c: None,
            c_over_gate: 0.5,
            const_m: 0.5,
            t_end: 100.0,
            tol: 1e-10,
            delta: mirrorlab::flows::DEFAULT_DELTA,
            sqrt_s: None,
            samples: 1000,
        }
    }
}

fn one_of(what: &str, value: &str, allowed: &[&str]) -> CliResult<()> {
    if allowed.contains(&value) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "unknown {what} id '{value}' (expected one of: {})",
            allowed.join(", ")
        )))
    }
}

fn positive(what: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{what} must be positive and finite, got {v}"
        )))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks identifiers and value ranges. Step gates are checked when the
    /// algorithm is constructed, since they depend on the problem.
    pub fn validate(&self) -> CliResult<()> {
        let o = &self.objective;
        let m = &self.map;
        let a = &self.algorithm;
        one_of("objective", &o.id, &OBJECTIVES)?;
        one_of("mirror map", &m.id, &MAPS)?;
        one_of("feasible set", &m.set, &SETS)?;
        one_of("algorithm", &a.id, &ALGORITHMS)?;
        if o.dim == 0 {
            return Err(CliError::Config("dim must be at least 1".into()));
        }
        positive("eig_min", o.eig_min)?;
        positive("eig_max", o.eig_max)?;
        if o.eig_min > o.eig_max {
            return Err(CliError::Config("eig_min must not exceed eig_max".into()));
        }
        if o.id == "logsumexp" {
            if o.terms == 0 {
                return Err(CliError::Config("terms must be at least 1".into()));
            }
            positive("mu", o.mu)?;
        }
        if m.id == "pth_power" && m.p < 2 {
            return Err(CliError::Config(format!(
                "p must be at least 2, got {}",
                m.p
            )));
        }
        if m.id != "euclidean" && m.set != "whole-space" {
            return Err(CliError::Config(format!(
                "feasible set '{}' applies to the euclidean map only",
                m.set
            )));
        }
        if m.set == "box" && !(m.lo < m.hi) {
            return Err(CliError::Config("box needs lo < hi".into()));
        }
        if m.set == "ball" {
            positive("radius", m.radius)?;
        }
        match a.step {
            Some(s) => positive("step", s)?,
            None => positive("s_over_L", a.s_over_l)?,
        }
        if let Some(c) = a.const_c {
            positive("const_C", c)?;
        }
        positive("c_over_gate", a.c_over_gate)?;
        positive("const_M", a.const_m)?;
        if a.id.starts_with("flow-") {
            positive("t_end", a.t_end)?;
            positive("tol", a.tol)?;
            positive("delta", a.delta)?;
            if a.samples == 0 {
                return Err(CliError::Config("samples must be at least 1".into()));
            }
            if let Some(r) = a.sqrt_s {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(CliError::Config(format!(
                        "sqrt_s must be nonnegative, got {r}"
                    )));
                }
            }
        }
        if let Some(t) = self.output.audit_tolerance {
            if !(t >= 0.0) {
                return Err(CliError::Config(format!(
                    "audit tolerance must be nonnegative, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Short directory name identifying the run.
    pub fn run_name(&self) -> String {
        format!(
            "{}-{}-{}-seed{}",
            self.algorithm.id, self.objective.id, self.map.id, self.seed
        )
    }

    /// Sets one key, addressed as `section.key` or by a key name that occurs
    /// in exactly one section. The value is parsed as a number, boolean or
    /// bare string.
    pub fn set_key(&mut self, key: &str, raw: &str) -> CliResult<()> {
        let mut tree = serde_json::to_value(&*self).expect("config serializes");
        let path = resolve_key(&tree, key)?;
        let value = parse_scalar(raw);
        let slot = match path.as_slice() {
            [top] => tree.as_object_mut().expect("object").entry(top.clone()),
            [section, leaf] => tree[section.as_str()]
                .as_object_mut()
                .expect("sections are tables")
                .entry(leaf.clone()),
            _ => unreachable!("keys are at most two levels deep"),
        };
        match slot {
            serde_json::map::Entry::Occupied(mut e) => {
                e.insert(value);
            }
            serde_json::map::Entry::Vacant(e) => {
                e.insert(value);
            }
        }
        *self = serde_json::from_value(tree)
            .map_err(|e| CliError::Config(format!("bad value '{raw}' for {key}: {e}")))?;
        Ok(())
    }
}

fn known_keys() -> serde_json::Value {
    let mut cfg = ExperimentConfig::default();
    cfg.algorithm.step = Some(1.0);
    cfg.algorithm.const_c = Some(1.0);
    cfg.algorithm.sqrt_s = Some(1.0);
    cfg.output.dir = Some(PathBuf::from("."));
    cfg.output.audit_tolerance = Some(0.0);
    serde_json::to_value(cfg).expect("config serializes")
}

fn resolve_key(tree: &serde_json::Value, key: &str) -> CliResult<Vec<String>> {
    let all = known_keys();
    let unknown = || CliError::Config(format!("unknown config key '{key}'"));
    if let Some((section, leaf)) = key.split_once('.') {
        let table = all
            .get(section)
            .and_then(|v| v.as_object())
            .ok_or_else(unknown)?;
        if !table.contains_key(leaf) {
            return Err(unknown());
        }
        return Ok(vec![section.to_string(), leaf.to_string()]);
    }
    if all.get(key).is_some_and(|v| !v.is_object()) {
        return Ok(vec![key.to_string()]);
    }
    let hits: Vec<&String> = tree
        .as_object()
        .expect("object")
        .keys()
        .filter(|s| {
            all[s.as_str()]
                .as_object()
                .is_some_and(|t| t.contains_key(key))
        })
        .collect();
    match hits.as_slice() {
        [one] => Ok(vec![(*one).clone(), key.to_string()]),
        [] => Err(unknown()),
        many => Err(CliError::Config(format!(
            "key '{key}' is ambiguous; qualify it with one of: {}",
            many.iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

fn parse_scalar(raw: &str) -> serde_json::Value {
    if let Ok(i) = raw.parse::<i64>() {
        return i.into();
    }
    if let Ok(f) = raw.parse::<f64>() {
        if let Some(n) = serde_json::Number::from_f64(f) {
            return serde_json::Value::Number(n);
        }
    }
    match raw {
        "true" => true.into(),
        "false" => false.into(),
        _ => raw.into(),
    }
}

/// Parses `key=v1,v2,...` into the key and its values.
pub fn parse_vary(spec: &str) -> CliResult<(String, Vec<String>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--vary expects key=v1,v2,..., got '{spec}'")))?;
    let values: Vec<String> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from)
        .collect();
    if key.trim().is_empty() || values.is_empty() {
        return Err(CliError::Config(format!(
            "--vary expects key=v1,v2,..., got '{spec}'"
        )));
    }
    Ok((key.trim().to_string(), values))
}
