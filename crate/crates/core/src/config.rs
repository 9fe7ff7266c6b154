//! Versioned run configuration shared by every pipeline stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::AggregateOp;
use crate::error::{Error, Result};
use crate::features::{CleaningConfig, FeatureConfig};
use crate::gbm::GbmParams;
use crate::screening::default_offsets;
use crate::signal::{FilterSpec, WINDOW_LEN};
use crate::synth::SynthConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub metadata: PathBuf,
    pub signals_dir: PathBuf,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self {
            metadata: PathBuf::from("data/metadata.csv"),
            signals_dir: PathBuf::from("data/signals"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub seed: u64,
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// Features to emit dependence data for; empty means the top
    /// `top_dependence` by mean |phi|.
    pub dependence_features: Vec<String>,
    pub top_dependence: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            dependence_features: Vec::new(),
            top_dependence: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Extra split seeds for a repeated-split summary; 0 disables it.
    pub repeat_splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub data: DataPaths,
    pub fs: f64,
    pub window_len: usize,
    pub filter: FilterSpec,
    pub features: FeatureConfig,
    pub cleaning: CleaningConfig,
    pub aggregation: Vec<AggregateOp>,
    pub split: SplitConfig,
    pub gbm: GbmParams,
    pub screening_offsets_g_l: Vec<f64>,
    pub explain: ExplainConfig,
    pub evaluation: EvaluationConfig,
    pub synth: SynthConfig,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            data: DataPaths::default(),
            fs: 100.0,
            window_len: WINDOW_LEN,
            filter: FilterSpec::default(),
            features: FeatureConfig::default(),
            cleaning: CleaningConfig::default(),
            aggregation: vec![AggregateOp::Mean, AggregateOp::Median],
            split: SplitConfig::default(),
            gbm: GbmParams::default(),
            screening_offsets_g_l: default_offsets(),
            explain: ExplainConfig::default(),
            evaluation: EvaluationConfig::default(),
            synth: SynthConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = crate::io::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field against the preconditions of the stage using it.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "config version {} unsupported, expected {CONFIG_VERSION}",
                self.version
            ));
        }
        if !(self.fs.is_finite() && self.fs > 10.0) {
            return bad(format!("fs {} must exceed 10 Hz", self.fs));
        }
        let nyquist = self.fs / 2.0;
        let f = &self.filter;
        if !(f.low_hz > 0.0 && f.low_hz < f.high_hz && f.high_hz < nyquist) {
            return bad(format!(
                "filter band [{}, {}] must satisfy 0 < low < high < {nyquist}",
                f.low_hz, f.high_hz
            ));
        }
        if f.order == 0 {
            return bad("filter order must be at least 1".into());
        }
        let (lo, hi) = self.features.band;
        if !(lo >= 0.0 && lo < hi && hi <= nyquist) {
            return bad(format!("feature band [{lo}, {hi}] invalid for fs {}", self.fs));
        }
        let w = &self.features.welch;
        if w.nperseg < 2 || w.nperseg > self.window_len {
            return bad(format!(
                "welch nperseg {} must be in [2, window_len {}]",
                w.nperseg, self.window_len
            ));
        }
        if !(0.0..1.0).contains(&w.overlap) {
            return bad(format!("welch overlap {} outside [0, 1)", w.overlap));
        }
        let p = &self.features.peaks;
        if !(p.max_rate_hz > 0.0 && p.prominence_sd >= 0.0) {
            return bad("peak max_rate_hz must be positive and prominence_sd non-negative".into());
        }
        let c = &self.cleaning;
        if !((0.0..=1.0).contains(&c.nan_frac_max) && c.var_min >= 0.0) {
            return bad("cleaning nan_frac_max must be in [0, 1] and var_min non-negative".into());
        }
        if self.aggregation.is_empty() {
            return bad("aggregation needs at least one operator".into());
        }
        for (i, op) in self.aggregation.iter().enumerate() {
            if self.aggregation[..i].contains(op) {
                return bad(format!("aggregation operator {} listed twice", op.suffix()));
            }
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return bad(format!("test_fraction {} outside (0, 1)", self.split.test_fraction));
        }
        let g = &self.gbm;
        if g.max_depth == 0 || g.min_samples_leaf == 0 {
            return bad("gbm max_depth and min_samples_leaf must be positive".into());
        }
        if !(g.learning_rate > 0.0 && g.learning_rate <= 1.0) {
            return bad(format!("gbm learning_rate {} outside (0, 1]", g.learning_rate));
        }
        if self.screening_offsets_g_l.iter().any(|o| !o.is_finite()) {
            return bad("screening offsets must be finite".into());
        }
        let paths = [&self.data.metadata, &self.data.signals_dir, &self.out_dir];
        for (i, p) in paths.iter().enumerate() {
            if paths[..i].contains(p) {
                return bad(format!("path {} is used for more than one role", p.display()));
            }
        }
        self.synth.validate().map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn out(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }
}
