//! Run and sweep configuration.
//!
//! Files are flat `key = value` lines; blank lines and `#` comments are
//! ignored. Command-line flags are applied afterwards through the same
//! [`RunConfig::set`], so both paths accept identical syntax:
//!
//! ```text
//! method = eep
//! epsilon = 0.01
//! h = 0.01
//! t_end = 10000
//! potential = axial-inverse:0.01
//! field = 0, 0, 1
//! x0 = 0.7, 1, 0.1
//! v0 = 0.9, 0.5, 0.4
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eep_core::quadrature::MAX_POINTS;
use eep_core::{FpSettings, GaussRule, Method, NamedPotential, Vec3};

use crate::error::{CliError, Result};

/// Rows written by default are capped at this count.
pub const MAX_DEFAULT_ROWS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub epsilon: f64,
    pub h: f64,
    pub t_end: f64,
    pub potential: NamedPotential,
    pub field: Vec3,
    pub x0: Vec3,
    pub v0: Vec3,
    pub quad_points: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// `None` picks the smallest stride giving at most [`MAX_DEFAULT_ROWS`] rows.
    pub sample_every: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    /// The axial inverse-distance experiment at `eps = 0.01`, `h = 0.01`, `T = 10000`.
    fn default() -> Self {
        let fp = FpSettings::default();
        RunConfig {
            method: Method::Eep,
            epsilon: 0.01,
            h: 0.01,
            t_end: 10_000.0,
            potential: NamedPotential::parse("axial-inverse").expect("built-in potential"),
            field: Vec3::new(0.0, 0.0, 1.0),
            x0: Vec3::new(0.7, 1.0, 0.1),
            v0: Vec3::new(0.9, 0.5, 0.4),
            quad_points: 4,
            fp_tol: fp.tol,
            fp_max_iter: fp.max_iter,
            sample_every: None,
            out: PathBuf::from("run.csv"),
        }
    }
}

fn canonical_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

fn parse_f64(field: &str, value: &str) -> Result<f64> {
    match value.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::config(
            field,
            format!("`{}` is not a finite number", value.trim()),
        )),
    }
}

fn parse_usize(field: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| CliError::config(field, format!("`{}` is not a non-negative integer", value.trim())))
}

pub(crate) fn parse_list(field: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|item| parse_f64(field, item)).collect()
}

fn parse_vec3(field: &str, value: &str) -> Result<Vec3> {
    match parse_list(field, value)?.as_slice() {
        [a, b, c] => Ok(Vec3::new(*a, *b, *c)),
        other => Err(CliError::config(
            field,
            format!("expected 3 comma-separated components, got {}", other.len()),
        )),
    }
}

fn is_positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn format_vec3(v: &Vec3) -> String {
    format!("{}, {}, {}", v[0], v[1], v[2])
}

/// Calls `set(key, value)` for every `key = value` line of `text`.
pub(crate) fn for_each_pair(text: &str, mut set: impl FnMut(&str, &str) -> Result<()>) -> Result<()> {
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(
                format!("line {}", number + 1),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        set(key, value)?;
    }
    Ok(())
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

impl RunConfig {
    /// Sets one field from its textual form. Keys may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = canonical_key(key);
        let k = key.as_str();
        let value = value.trim();
        match k {
            "method" => self.method = value.parse().map_err(CliError::from)?,
            "epsilon" | "eps" => self.epsilon = parse_f64("epsilon", value)?,
            "h" => self.h = parse_f64(k, value)?,
            "t_end" => self.t_end = parse_f64(k, value)?,
            "potential" => self.potential = NamedPotential::parse(value)?,
            "field" | "b" => self.field = parse_vec3("field", value)?,
            "x0" => self.x0 = parse_vec3(k, value)?,
            "v0" => self.v0 = parse_vec3(k, value)?,
            "quad_points" => self.quad_points = parse_usize(k, value)?,
            "fp_tol" => self.fp_tol = parse_f64(k, value)?,
            "fp_max_iter" => self.fp_max_iter = parse_usize(k, value)?,
            "sample_every" => {
                self.sample_every = match value {
                    "auto" => None,
                    v => Some(parse_usize(k, v)?),
                }
            }
            "out" => self.out = PathBuf::from(value),
            _ => return Err(CliError::config(key.clone(), "unknown configuration key")),
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for_each_pair(text, |k, v| cfg.set(k, v))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        RunConfig::from_kv(&read_file(path)?)
    }

    /// Canonical `key -> value` pairs; [`RunConfig::from_kv`] reads them back.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("method".into(), self.method.to_string());
        m.insert("epsilon".into(), self.epsilon.to_string());
        m.insert("h".into(), self.h.to_string());
        m.insert("t_end".into(), self.t_end.to_string());
        m.insert("potential".into(), self.potential.describe());
        m.insert("field".into(), format_vec3(&self.field));
        m.insert("x0".into(), format_vec3(&self.x0));
        m.insert("v0".into(), format_vec3(&self.v0));
        m.insert("quad_points".into(), self.quad_points.to_string());
        m.insert("fp_tol".into(), self.fp_tol.to_string());
        m.insert("fp_max_iter".into(), self.fp_max_iter.to_string());
        m.insert(
            "sample_every".into(),
            self.sample_every.map_or("auto".into(), |k| k.to_string()),
        );
        m.insert("out".into(), self.out.display().to_string());
        m
    }

    pub fn to_kv(&self) -> String {
        self.to_pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !is_positive(self.epsilon) {
            return Err(CliError::config(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if !is_positive(self.h) {
            return Err(CliError::config("h", format!("must be positive, got {}", self.h)));
        }
        if self.t_end.is_nan() || self.t_end < 0.0 {
            return Err(CliError::config(
                "t_end",
                format!("must not be negative, got {}", self.t_end),
            ));
        }
        if self.field.norm() == 0.0 {
            return Err(CliError::config(
                "field",
                "must be non-zero (the magnetic moment is undefined)",
            ));
        }
        if !(1..=MAX_POINTS).contains(&self.quad_points) {
            return Err(CliError::config(
                "quad_points",
                format!("must be in 1..={MAX_POINTS}, got {}", self.quad_points),
            ));
        }
        self.fp_settings().validate()?;
        if self.sample_every == Some(0) {
            return Err(CliError::config("sample_every", "must be at least 1"));
        }
        if self.out.as_os_str().is_empty() {
            return Err(CliError::config("out", "must not be empty"));
        }
        Ok(())
    }

    pub fn fp_settings(&self) -> FpSettings {
        FpSettings {
            tol: self.fp_tol,
            max_iter: self.fp_max_iter,
        }
    }

    pub fn rule(&self) -> Result<GaussRule> {
        Ok(GaussRule::new(self.quad_points)?)
    }

    /// `round(t_end / h)`.
    pub fn step_count(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }

    /// The configured stride, or the smallest one that keeps the row count
    /// (every stride-th step, step 0 and the final step) within the cap.
    pub fn effective_sample_every(&self) -> usize {
        if let Some(k) = self.sample_every {
            return k;
        }
        let n = self.step_count();
        let rows = |k: usize| n / k + 1 + usize::from(!n.is_multiple_of(k));
        let mut k = n.div_ceil(MAX_DEFAULT_ROWS).max(1);
        while rows(k) > MAX_DEFAULT_ROWS {
            k += 1;
        }
        k
    }

    /// `h |B| / eps`, the step measured in gyration angle.
    pub fn h_omega(&self) -> f64 {
        self.h * self.field.norm() / self.epsilon
    }
}

/// A family of runs compared against an RK4 reference at `t_end`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Stepsizes; empty means the base `h` only.
    pub h_list: Vec<f64>,
    /// Scalings; empty means the base `epsilon` only.
    pub epsilon_list: Vec<f64>,
    /// Reference stepsize; `None` applies [`SweepConfig::default_h_ref`].
    pub h_ref: Option<f64>,
}

impl SweepConfig {
    pub fn new(base: RunConfig) -> Self {
        SweepConfig {
            base,
            h_list: Vec::new(),
            epsilon_list: Vec::new(),
            h_ref: None,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match canonical_key(key).as_str() {
            "h_list" => self.h_list = parse_list("h_list", value)?,
            "epsilon_list" => self.epsilon_list = parse_list("epsilon_list", value)?,
            "h_ref" => self.h_ref = Some(parse_f64("h_ref", value)?),
            _ => self.base.set(key, value)?,
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::new(RunConfig::default());
        for_each_pair(text, |k, v| cfg.set(k, v))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        SweepConfig::from_kv(&read_file(path)?)
    }

    pub fn stepsizes(&self) -> Vec<f64> {
        if self.h_list.is_empty() {
            vec![self.base.h]
        } else {
            self.h_list.clone()
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        if self.epsilon_list.is_empty() {
            vec![self.base.epsilon]
        } else {
            self.epsilon_list.clone()
        }
    }

    /// `min(min_h / 16, 0.001 eps / |B|)`: a reference resolving each
    /// gyration with about 6000 steps and 16 steps per coarse step.
    pub fn default_h_ref(&self, epsilon: f64) -> f64 {
        let min_h = self.stepsizes().into_iter().fold(f64::INFINITY, f64::min);
        (min_h / 16.0).min(1e-3 * epsilon / self.base.field.norm())
    }

    pub fn validate(&self) -> Result<()> {
        for &eps in &self.epsilons() {
            let mut run = self.base.clone();
            run.epsilon = eps;
            for &h in &self.stepsizes() {
                run.h = h;
                run.validate().map_err(|e| match e {
                    CliError::Config { field, reason } if field == "h" => CliError::config("h_list", reason),
                    CliError::Config { field, reason } if field == "epsilon" => {
                        CliError::config("epsilon_list", reason)
                    }
                    other => other,
                })?;
                let n = run.step_count() as f64;
                if (n * h - run.t_end).abs() > 1e-9 * run.t_end.max(1.0) {
                    return Err(CliError::config(
                        "h_list",
                        format!("{h} does not divide t_end = {}", run.t_end),
                    ));
                }
            }
        }
        if let Some(h_ref) = self.h_ref {
            if !is_positive(h_ref) {
                return Err(CliError::config("h_ref", format!("must be positive, got {h_ref}")));
            }
        }
        Ok(())
    }
}
