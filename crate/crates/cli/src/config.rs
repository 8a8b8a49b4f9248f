//! Run configuration: one JSON document per run, overridable flag by flag.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use greenfn::distlab::Flavor;
use greenfn::firstorder::Convention;
use greenfn::freqdomain::ResponseDirection;
use greenfn::spectra::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Free,
    Well,
    Oscillator,
    Relativistic,
    Helmholtz,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Free => Model::Free,
            ModelArg::Well => Model::Well,
            ModelArg::Oscillator => Model::Oscillator,
            ModelArg::Relativistic => Model::Relativistic,
            ModelArg::Helmholtz => Model::Helmholtz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Auxiliary,
    Retarded,
    Advanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionArg {
    Consistent,
    MinusI,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Consistent => Convention::Consistent,
            ConventionArg::MinusI => Convention::MinusI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    Retarded,
    Advanced,
    Feynman,
}

impl From<DirectionArg> for ResponseDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Retarded => ResponseDirection::Retarded,
            DirectionArg::Advanced => ResponseDirection::Advanced,
            DirectionArg::Feynman => ResponseDirection::Feynman,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlavorArg {
    Arctan,
    Exponential,
    Linear,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Arctan => Flavor::Arctan,
            FlavorArg::Exponential => Flavor::Exponential,
            FlavorArg::Linear => Flavor::Linear,
        }
    }
}

/// Every parameter any subcommand reads. Unset fields take per-command
/// defaults, and the resolved document is written next to the outputs.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Well width.
    #[arg(long)]
    pub a: Option<f64>,
    /// Box length for plane-wave models.
    #[arg(long)]
    pub length: Option<f64>,
    /// Mode count for the well and the oscillator.
    #[arg(long)]
    pub n: Option<usize>,
    /// Momentum cutoff for plane-wave models.
    #[arg(long)]
    pub kmax: Option<usize>,

    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Mass.
    #[arg(long)]
    pub m: Option<f64>,
    /// Oscillator frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,

    /// Uniform oscillator grid on [-w, w] instead of the automatic one.
    #[arg(long)]
    pub grid_half_width: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,

    /// Kernel time samples.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, value_enum)]
    pub convention: Option<ConventionArg>,
    /// Declared tolerance for kernel residuals.
    #[arg(long)]
    pub tolerance: Option<f64>,

    /// Wave-packet centre, width and momentum.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,

    /// Field and point-charge demo: end time, time steps, distance, charge.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,

    /// Positions and momentum for frequency studies.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_prime: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub omega_points: Option<usize>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    /// Also evaluate the response by broadened-density convolution.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub convolution: Option<bool>,

    #[arg(long, value_enum, value_delimiter = ',')]
    pub flavors: Option<Vec<FlavorArg>>,

    /// Validation: criterion ids or groups to run.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, hide = true, num_args = 0..=1, default_missing_value = "true")]
    pub inject_eta_flip: Option<bool>,
}

/// Reads `--config` (if any) and lays the command-line flags over it.
pub fn resolve(file: Option<&Path>, flags: &RunConfig) -> Result<RunConfig> {
    let mut doc = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let value: Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            if !value.is_object() {
                bail!("config {} must be a JSON object", path.display());
            }
            serde_json::from_value::<RunConfig>(value.clone())
                .with_context(|| format!("config {} does not match the schema", path.display()))?;
            value
        }
        None => Value::Object(Default::default()),
    };
    let overrides = serde_json::to_value(flags)?;
    if let (Value::Object(base), Value::Object(over)) = (&mut doc, overrides) {
        for (key, v) in over {
            if !v.is_null() {
                base.insert(key, v);
            }
        }
    }
    let cfg: RunConfig = serde_json::from_value(doc).context("merged config is invalid")?;
    cfg.check()?;
    Ok(cfg)
}

impl RunConfig {
    /// Range checks that serde cannot express.
    pub fn check(&self) -> Result<()> {
        let positive = [
            ("a", self.a),
            ("length", self.length),
            ("hbar", self.hbar),
            ("c", self.c),
            ("m", self.m),
            ("omega", self.omega),
            ("eps0", self.eps0),
            ("grid_half_width", self.grid_half_width),
            ("tolerance", self.tolerance),
            ("sigma", self.sigma),
            ("t_end", self.t_end),
            ("r", self.r),
            ("eta", self.eta),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    bail!("{name} must be positive and finite, got {v}");
                }
            }
        }
        let finite = [
            ("x0", self.x0),
            ("p0", self.p0),
            ("q", self.q),
            ("x", self.x),
            ("x_prime", self.x_prime),
            ("k", self.k),
            ("omega_min", self.omega_min),
            ("omega_max", self.omega_max),
        ];
        for (name, v) in finite {
            if let Some(v) = v {
                if !v.is_finite() {
                    bail!("{name} must be finite");
                }
            }
        }
        for (name, v) in [
            ("n", self.n),
            ("kmax", self.kmax),
            ("steps", self.steps),
        ] {
            if v == Some(0) {
                bail!("{name} must be at least 1");
            }
        }
        if let Some(p) = self.grid_points {
            if p < 3 {
                bail!("grid_points must be at least 3");
            }
        }
        if let Some(p) = self.omega_points {
            if p < 2 {
                bail!("omega_points must be at least 2");
            }
        }
        if let (Some(lo), Some(hi)) = (self.omega_min, self.omega_max) {
            if lo >= hi {
                bail!("omega_min must be below omega_max");
            }
        }
        if let Some(t) = &self.times {
            if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
                bail!("times must be a non-empty list of finite numbers");
            }
        }
        if self.grid_half_width.is_some() != self.grid_points.is_some() {
            bail!("grid_half_width and grid_points go together");
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"model": "oscillator", "n": 8, "eta": 0.1}"#).unwrap();
        let flags = RunConfig {
            n: Some(12),
            ..Default::default()
        };
        let cfg = resolve(Some(&path), &flags).unwrap();
        assert_eq!(cfg.model, Some(ModelArg::Oscillator));
        assert_eq!(cfg.n, Some(12));
        assert_eq!(cfg.eta, Some(0.1));
    }

    #[test]
    fn unknown_keys_and_bad_ranges_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"modle": "well"}"#).unwrap();
        assert!(resolve(Some(&path), &RunConfig::default()).is_err());
        let flags = RunConfig {
            eta: Some(-1.0),
            ..Default::default()
        };
        assert!(resolve(None, &flags).is_err());
    }
}
