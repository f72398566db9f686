//! Experiment configuration: one JSON document plus `--set` overrides.

use std::fmt;
use std::path::Path;

use bautin_core::{Options, Params, Settings};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Bad input from the user. Mapped to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn default_model() -> Params {
    Params::new(2.5, 2.0, 0.0023073665, 1.01, 5.301432998).expect("reference parameters are valid")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Params,
    pub integration: Options,
    pub history: HistoryBlock,
    pub classification: Settings,
    pub hopf: HopfBlock,
    pub classify: ClassifyBlock,
    pub threshold: ThresholdBlock,
    pub sweep: SweepBlock,
    pub zones: ZonesBlock,
    pub plot: PlotSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: default_model(),
            integration: Options::default(),
            history: HistoryBlock::default(),
            classification: Settings::default(),
            hopf: HopfBlock::default(),
            classify: ClassifyBlock::default(),
            threshold: ThresholdBlock::default(),
            sweep: SweepBlock::default(),
            zones: ZonesBlock::default(),
            plot: PlotSpec::default(),
        }
    }
}

/// Amplitudes `c` of the eigenmode initial histories.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistoryBlock {
    pub c: Vec<f64>,
}

impl Default for HistoryBlock {
    fn default() -> Self {
        Self { c: vec![0.5] }
    }
}

/// A labelled `(δ, r)` point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub label: String,
    pub delta: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopfBlock {
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub samples: usize,
    pub markers: Vec<Point>,
}

impl Default for HopfBlock {
    fn default() -> Self {
        Self {
            delta_lo: 0.0012,
            delta_hi: 0.0026,
            samples: 141,
            markers: Vec::new(),
        }
    }
}

/// A point with its own list of history amplitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    pub label: String,
    pub delta: f64,
    pub r: f64,
    pub c: Vec<f64>,
}

/// Runs for `classify`; empty means the model point with `history.c`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyBlock {
    pub runs: Vec<Run>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdBlock {
    pub c_lo: f64,
    pub c_hi: f64,
    pub tol_c: f64,
}

impl Default for ThresholdBlock {
    fn default() -> Self {
        Self {
            c_lo: 0.1,
            c_hi: 0.6,
            tol_c: 0.005,
        }
    }
}

/// Cross product of `points` and `c`; empty `points` means the model point.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub points: Vec<Point>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZonesBlock {
    pub b1_lo: f64,
    pub b1_hi: f64,
    pub b2_lo: f64,
    pub b2_hi: f64,
    pub n_b1: usize,
    pub n_b2: usize,
}

impl Default for ZonesBlock {
    fn default() -> Self {
        Self {
            b1_lo: -0.1,
            b1_hi: 0.1,
            b2_lo: -0.8,
            b2_hi: 0.8,
            n_b1: 201,
            n_b2: 201,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotSpec {
    /// CSV rows per linear period `2π/ω`.
    pub samples_per_period: f64,
    pub t_range: Option<[f64; 2]>,
    pub x_range: Option<[f64; 2]>,
    pub xdot_range: Option<[f64; 2]>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            samples_per_period: 10.0,
            t_range: None,
            x_range: None,
            xdot_range: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads `path` (or starts from defaults), applies `overrides` of the form
    /// `a.b.c=value`, and validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let mut doc = serde_json::to_value(Self::default()).expect("defaults serialize");
        if let Some(p) = path {
            let text =
                std::fs::read_to_string(p).map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?;
            let file: Value = serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            if !file.is_object() {
                return Err(config_err(format!("{}: top level must be an object", p.display())));
            }
            merge(&mut doc, file);
        }
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        let config: Self = serde_json::from_value(doc).map_err(|e| config_err(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.integration
            .validate(self.model.r)
            .map_err(|e| config_err(format!("integration: {e}")))?;
        let check_range = |name: &str, range: Option<[f64; 2]>| match range {
            Some([lo, hi]) if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                Err(config_err(format!("plot.{name} must be finite and increasing")))
            }
            _ => Ok(()),
        };
        check_range("t_range", self.plot.t_range)?;
        check_range("x_range", self.plot.x_range)?;
        check_range("xdot_range", self.plot.xdot_range)?;
        let spp = self.plot.samples_per_period;
        if !spp.is_finite() || spp < 2.0 {
            return Err(config_err("plot.samples_per_period must be at least 2"));
        }
        if self.history.c.iter().any(|c| !c.is_finite()) {
            return Err(config_err("history.c must be finite"));
        }
        let z = &self.zones;
        if !(z.b1_lo < z.b1_hi && z.b2_lo < z.b2_hi) || z.n_b1 < 2 || z.n_b2 < 2 {
            return Err(config_err(
                "zones: ranges must be increasing with at least 2 samples per axis",
            ));
        }
        Ok(())
    }
}

/// Recursively overlays `top` onto `base`; non-object values replace.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets the dotted `key` in `doc` to `value`, creating objects on the way.
/// The value is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(doc: &mut Value, item: &str) -> anyhow::Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| config_err(format!("--set expects key=value, got `{item}`")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(config_err(format!("--set has an empty key segment in `{key}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let mut segments = key.split('.').peekable();
    while let Some(seg) = segments.next() {
        let obj = match node {
            Value::Object(map) => map,
            _ => return Err(config_err(format!("--set {key}: `{seg}` is inside a non-object"))),
        };
        if segments.peek().is_none() {
            obj.insert(seg.to_string(), value);
            return Ok(());
        }
        node = obj.entry(seg.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split always yields a segment")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_nested_keys() {
        let mut doc = json!({"model": {"delta": 0.002}});
        apply_override(&mut doc, "model.r=5.93").unwrap();
        apply_override(&mut doc, "history.c=[0.1,0.2]").unwrap();
        apply_override(&mut doc, "hopf.markers=[]").unwrap();
        assert_eq!(doc["model"]["r"], json!(5.93));
        assert_eq!(doc["history"]["c"], json!([0.1, 0.2]));
    }

    #[test]
    fn malformed_overrides_are_config_errors() {
        let mut doc = json!({"model": 1});
        for bad in ["model", "=1", "a..b=1", "model.r=2"] {
            let err = apply_override(&mut doc, bad).unwrap_err();
            assert!(err.downcast_ref::<ConfigError>().is_some(), "{bad}");
        }
    }

    #[test]
    fn defaults_validate_and_unknown_keys_fail() {
        assert!(ExperimentConfig::load(None, &[]).is_ok());
        let err = ExperimentConfig::load(None, &["model.bogus=1".into()]).unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
        let err = ExperimentConfig::load(None, &["plot.samples_per_period=1".into()]).unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
    }

    #[test]
    fn file_values_overlay_defaults() {
        let dir = std::env::temp_dir().join(format!("bautin-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"model": {"delta": 0.002, "r": 5.93}}"#).unwrap();
        let cfg = ExperimentConfig::load(Some(&path), &["model.r=6".into()]).unwrap();
        assert_eq!(cfg.model.delta, 0.002);
        assert_eq!(cfg.model.r, 6.0);
        assert_eq!(cfg.model.k, 1.01);
        std::fs::write(&path, r#"{"modle": {}}"#).unwrap();
        assert!(ExperimentConfig::load(Some(&path), &[]).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn partial_blocks_keep_defaults() {
        let cfg = ExperimentConfig::load(None, &["integration.t_end=500".into()]).unwrap();
        assert_eq!(cfg.integration.t_end, 500.0);
        assert_eq!(cfg.integration.rel_tol, Options::default().rel_tol);
    }
}
