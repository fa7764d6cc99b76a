//! Experiment configuration files. Every struct rejects unknown fields, and
//! paths inside a config resolve relative to the config file.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize};
use vague_core::random_measures::ModelSpec;
use vague_core::{GroundSpace, MetricChoice, Region};

use crate::ConfigError;

/// Reads and parses a config, naming the offending field on failure.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// Parses JSON text. Errors carry the path of the offending field.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        if field == "." {
            e.inner().to_string()
        } else {
            format!("field `{field}`: {}", e.inner())
        }
    })
}

/// Resolves `p` against the directory holding the config.
pub fn resolve(config: &Path, p: &Path) -> PathBuf {
    match config.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    Prohorov,
    RhoHat,
    RhoTilde,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    /// When given, both measures must live on this space.
    pub space: Option<GroundSpace>,
    pub mu: PathBuf,
    pub nu: PathBuf,
    /// Defaults to all three; Prohorov is then skipped for non-probability inputs.
    pub distances: Option<Vec<DistanceKind>>,
    #[serde(default)]
    pub metric: MetricChoice,
    /// Truncation tolerance for ρ̃.
    #[serde(default = "default_dist_tol")]
    pub tol: f64,
}

fn default_dist_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryKind {
    Lipschitz,
    Multiplicative,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    pub kind: BatteryKind,
    /// Member count for Lipschitz batteries, generator count for multiplicative families.
    pub size: usize,
    pub seed: u64,
}

/// One atom formula: coordinates and weight as expressions in `n`, optionally
/// repeated for integer `k` in `k_range`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomFormula {
    pub x: Vec<String>,
    #[serde(default = "default_weight")]
    pub w: String,
    pub k_range: Option<[String; 2]>,
}

fn default_weight() -> String {
    "1.0".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitAtom {
    pub x: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSequence {
    pub space: GroundSpace,
    pub atoms: Vec<AtomFormula>,
    /// Finite limit measure; empty means the null measure.
    #[serde(default)]
    pub limit: Vec<LimitAtom>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Catalogue(String),
    Inline(InlineSequence),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub space: Option<GroundSpace>,
    pub sequence: SequenceSpec,
    pub n_grid: Option<Vec<u64>>,
    pub tol: Option<f64>,
    /// Defaults to the catalogue battery, or Lipschitz(8, seed 1) inline.
    pub battery: Option<BatterySpec>,
    /// Required for inline sequences.
    pub regions: Option<Vec<Region>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub space: Option<GroundSpace>,
    pub model: ModelSpec,
    pub level: u32,
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub realizations: usize,
}

fn one() -> usize {
    1
}

/// n ↦ N_n for the Laplace tester.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LaplaceSequence {
    /// Empirical extremes with n taken from the grid.
    EmpiricalExtremes { alpha: f64 },
    /// The same model at every n.
    Constant { model: ModelSpec },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceConfig {
    pub space: Option<GroundSpace>,
    pub sequence: LaplaceSequence,
    pub target: ModelSpec,
    /// Defaults to Lipschitz(8, seed 1) on the target space.
    pub battery: Option<BatterySpec>,
    pub n_grid: Option<Vec<u64>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub z_threshold: Option<f64>,
    pub quad_tol: Option<f64>,
    #[serde(default)]
    pub require_monotone: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_name_the_field() {
        let e = parse::<DistConfig>(r#"{"mu":"a","nu":"b","tol":"x"}"#).unwrap_err();
        assert!(e.contains("`tol`"), "{e}");
        let e = parse::<DistConfig>(r#"{"mu":"a","nu":"b","extra":1}"#).unwrap_err();
        assert!(e.contains("extra"), "{e}");
        let e = parse::<LaplaceConfig>(r#"{"sequence":{"kind":"constant","model":{"kind":"poisson","c":1}},"target":{"kind":"poisson","c":1,"alpha":1}}"#)
            .unwrap_err();
        assert!(e.contains("`sequence`") && e.contains("alpha"), "{e}");
    }

    #[test]
    fn sequence_specs() {
        let c: ConvergeConfig = parse(r#"{"sequence":{"catalogue":"escape"}}"#).unwrap();
        assert!(matches!(c.sequence, SequenceSpec::Catalogue(ref s) if s == "escape"));
        let i: ConvergeConfig = parse(
            r#"{"sequence":{"inline":{"space":{"kind":"halfline_hl"},"atoms":[{"x":["1 + 1/n"]}],"limit":[{"x":[1.0],"w":1.0}]}},"regions":[{"type":"interval","lo":0.5,"hi":2.0}]}"#,
        )
        .unwrap();
        assert!(matches!(i.sequence, SequenceSpec::Inline(_)));
    }
}
