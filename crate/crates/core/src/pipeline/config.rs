use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::CalibrationSettings;
use crate::data::{CellId, SplitSpec, TWO_MONTHS_HOURS};
use crate::error::{Error, Result};
use crate::features::{FeatureSettings, Variant};
use crate::multistep::{ExogenousPolicy, HorizonPlan, DEFAULT_HORIZONS};
use crate::nn::{GridPoint, TrainConfig};
use crate::synth::ScenarioConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Where cell data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    /// Generated from `[scenario]`. Without `handover`, the built-in GU14 cluster is used.
    Synthetic { handover: Option<PathBuf> },
    /// One `<CELL>.csv` per cell in `dir`.
    Csv { dir: PathBuf, handover: Option<PathBuf> },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic { handover: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldSettings {
    pub k: usize,
    pub shift: usize,
}

impl Default for FoldSettings {
    fn default() -> Self {
        Self {
            k: 3,
            shift: TWO_MONTHS_HOURS,
        }
    }
}

/// Hyperparameter grid; every combination is tried.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpace {
    pub hidden: Vec<usize>,
    pub layers: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub epochs: Vec<usize>,
    pub l2: Vec<f64>,
    pub batch_size: usize,
}

impl Default for GridSpace {
    fn default() -> Self {
        Self {
            hidden: vec![16],
            layers: vec![1],
            learning_rate: vec![3e-3, 1e-2],
            epochs: vec![20],
            l2: vec![0.0],
            batch_size: 32,
        }
    }
}

impl GridSpace {
    pub fn points(&self, seed: u64) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &hidden in &self.hidden {
            for &layers in &self.layers {
                for &learning_rate in &self.learning_rate {
                    for &epochs in &self.epochs {
                        for &l2 in &self.l2 {
                            out.push(GridPoint {
                                hidden,
                                layers,
                                train: TrainConfig {
                                    learning_rate,
                                    epochs,
                                    l2,
                                    batch_size: self.batch_size,
                                    seed,
                                },
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub target: CellId,
    pub out_dir: PathBuf,
    pub train_seed: u64,
    pub variants: Vec<Variant>,
    /// Target violation rates as fractions.
    pub sla_targets: Vec<f64>,
    pub horizons: Vec<usize>,
    pub handover_policy: ExogenousPolicy,
    /// Fail the calibrate stage when a target cannot be met within tolerance.
    pub fail_on_unsatisfied: bool,
    pub data: DataSource,
    pub scenario: ScenarioConfig,
    pub split: SplitSpec,
    pub folds: FoldSettings,
    pub features: FeatureSettings,
    pub grid: GridSpace,
    pub calibration: CalibrationSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            target: "GU14".parse().expect("valid id"),
            out_dir: PathBuf::from("out"),
            train_seed: 1,
            variants: Variant::ALL.to_vec(),
            sla_targets: vec![0.03, 0.05],
            horizons: DEFAULT_HORIZONS.to_vec(),
            handover_policy: ExogenousPolicy::SeasonalNaive,
            fail_on_unsatisfied: false,
            data: DataSource::default(),
            scenario: ScenarioConfig::default(),
            split: SplitSpec::default(),
            folds: FoldSettings::default(),
            features: FeatureSettings::default(),
            grid: GridSpace::default(),
            calibration: CalibrationSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if matches!(self.data, DataSource::Synthetic { .. }) {
            self.scenario.validate()?;
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no variants requested".into()));
        }
        if self.sla_targets.is_empty() || self.sla_targets.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::Config(format!("SLA targets must lie in (0, 1), got {:?}", self.sla_targets)));
        }
        self.plan().validate()?;
        if self.folds.k == 0 || self.folds.shift == 0 {
            return Err(Error::Config("folds.k and folds.shift must be positive".into()));
        }
        let points = self.grid.points(self.train_seed);
        if points.is_empty() {
            return Err(Error::Config("hyperparameter grid is empty".into()));
        }
        for p in &points {
            p.train.validate()?;
            if p.hidden == 0 || p.layers == 0 {
                return Err(Error::Config("hidden and layers must be positive".into()));
            }
        }
        let f = &self.features;
        if !(0.0..=1.0).contains(&f.correlation_threshold) || !(0.0..1.0).contains(&f.peak_threshold) || f.lookback == 0 {
            return Err(Error::Config("feature settings out of range".into()));
        }
        if !(self.calibration.tolerance >= 0.0) {
            return Err(Error::Config("calibration tolerance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn plan(&self) -> HorizonPlan {
        HorizonPlan {
            horizons: self.horizons.clone(),
            handover: self.handover_policy,
            ..HorizonPlan::default()
        }
    }

    /// Short digest of everything that affects results. The output directory
    /// is left out so identical runs in different places agree.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical)?;
        Ok(hex::encode(&Sha256::digest(json.as_bytes())[..8]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_default() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_sections() {
        let cfg = RunConfig::from_toml(
            "train_seed = 3\n[scenario]\nweeks = 10\n[grid]\nhidden = [4, 8]\n[data]\nsource = \"csv\"\ndir = \"cells\"\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario.weeks, 10);
        assert_eq!(cfg.scenario.seed, 7);
        assert_eq!(cfg.grid.points(3).len(), 4);
        assert!(matches!(cfg.data, DataSource::Csv { .. }));
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "schema_version = 2",
            "[scenario]\ntarget_correlation = 1.0",
            "sla_targets = [0.0]",
            "horizons = []",
            "nonsense = 1",
            "[grid]\nhidden = []",
            "handover_policy = \"calendar\"",
        ] {
            assert!(matches!(RunConfig::from_toml(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let b = RunConfig {
            out_dir: "elsewhere".into(),
            ..a.clone()
        };
        let c = RunConfig { train_seed: 9, ..a.clone() };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 16);
    }
}
