//! Experiment configuration: TOML files plus `--key value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use qlab_core::geometry::ModelManifold;
use qlab_core::potentials::Potential;
use serde::{Deserialize, Serialize};

/// Everything a run depends on. Echoed verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// `sphere-zonal`, `sphere-full-2d` or `torus`.
    #[serde(default)]
    pub manifold: Option<String>,
    /// Manifold dimension.
    #[serde(default)]
    pub n: Option<usize>,
    /// Potential description, e.g. `0`, `counterexample`, `truncated-counterexample(0.3)`, `10*cos(phi)`.
    #[serde(default, rename = "V")]
    pub potential: Option<String>,
    /// Route assembly of expression potentials through pole-graded quadrature.
    #[serde(default)]
    pub pole_singular: bool,
    /// Truncation degree.
    #[serde(default, rename = "K")]
    pub truncation: Option<usize>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
}

fn default_seed() -> u64 {
    17
}

/// Experiment-specific knobs; each experiment reads the ones it documents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Wave time.
    pub t: Option<f64>,
    /// Heat times.
    pub times: Option<Vec<f64>>,
    /// Bochner-Riesz orders.
    pub deltas: Option<Vec<f64>>,
    /// Strichartz ladder rungs and band degrees.
    pub ks: Option<Vec<f64>>,
    /// Truncations compared by the wave-speed experiment.
    pub truncations: Option<Vec<usize>>,
    /// Cone-leakage mollifier scale (defaults to `λ_max/4`).
    pub scale: Option<f64>,
    /// Battery preset: zonal-ladder, point-concentrated or random-band.
    pub battery: Option<String>,
    /// Multiplier family: imaginary-power, sharp-cutoff or smooth-cutoff.
    pub multiplier: Option<String>,
    /// Imaginary power `τ` or cutoff frequency.
    pub gamma: Option<f64>,
    /// Sobolev order of the windowed multiplier check.
    pub s: Option<f64>,
    pub windows: Option<usize>,
    pub resolutions: Option<Vec<usize>>,
    pub epsilon: Option<f64>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    /// Local Weyl cutoffs.
    pub mu: Option<Vec<f64>>,
    /// Kato radii.
    pub radii: Option<Vec<f64>>,
    /// Pole refinement levels for the counterexample growth check.
    pub levels: Option<Vec<u32>>,
    /// Disc radius of the kernel checks.
    pub delta: Option<f64>,
    pub near_lambda: Option<f64>,
    pub far_r: Option<f64>,
    /// Run the remainder-scale probe (the slowest part of `parametrix`).
    pub remainder: Option<bool>,
    pub restarts: Option<usize>,
}

/// Tolerances for slope verdicts; defaults are per experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub slope: Option<f64>,
    pub residual_cap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config with every optional field unset.
    pub fn bare(experiment: &str) -> Self {
        toml::from_str(&format!("experiment = {experiment:?}")).expect("bare config parses")
    }

    /// Parses TOML text; diagnostics name the offending line and key.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("{}", describe_toml_error(text, &e)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Applies `key = value` overrides. Keys may be dotted (`params.t`);
    /// values are read as TOML scalars or arrays, falling back to strings;
    /// string-valued keys keep the raw text.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = toml::Table::try_from(self).context("serializing config")?;
        for (key, raw) in overrides {
            let value = if STRING_KEYS.contains(&key.as_str()) {
                toml::Value::String(raw.clone())
            } else {
                parse_value(raw)
            };
            let mut slot = &mut table;
            let parts: Vec<&str> = key.split('.').collect();
            for part in &parts[..parts.len() - 1] {
                slot = slot
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| anyhow!("override key {key:?}: {part:?} is not a section"))?;
            }
            slot.insert(parts[parts.len() - 1].to_string(), value);
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| anyhow!("override rejected: {}", e.message()))
    }

    pub fn manifold(&self, default: &str) -> Result<ModelManifold> {
        let name = self.manifold.as_deref().unwrap_or(default);
        let text = match self.n {
            Some(n) => format!("{name}:{n}"),
            None => name.to_string(),
        };
        Ok(text.parse::<ModelManifold>()?)
    }

    pub fn potential_spec(&self) -> &str {
        self.potential.as_deref().unwrap_or("0")
    }

    pub fn potential(&self, manifold: ModelManifold) -> Result<Potential> {
        Ok(Potential::parse(self.potential_spec(), manifold, self.pole_singular)?)
    }

    pub fn truncation_or(&self, default: usize) -> usize {
        self.truncation.unwrap_or(default)
    }

    pub fn slope_tolerance(&self, default: f64) -> f64 {
        self.tolerances.slope.unwrap_or(default)
    }

    pub fn residual_cap(&self) -> f64 {
        self.tolerances.residual_cap.unwrap_or(0.25)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}

/// Splits `--key value` pairs (also `--key=value`).
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(key) = a.strip_prefix("--") else {
            bail!("unexpected argument {a:?}; overrides look like --key value");
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| anyhow!("override --{key} needs a value"))?;
                out.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

/// Keys whose values are always strings, so `--V 0` stays the potential `"0"`.
const STRING_KEYS: &[&str] = &["experiment", "manifold", "V", "output.dir", "params.battery"];
