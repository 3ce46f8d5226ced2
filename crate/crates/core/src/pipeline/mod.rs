//! End-to-end workflow: data, features, grid search, calibration, forecasts,
//! evaluation and report. Each stage writes into its own directory under the
//! output root and is skipped on rerun when its manifest still verifies.

mod cache;
mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDateTime;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{sha256_hex, tree_digest, Manifest, MANIFEST};
pub use config::{DataSource, FoldSettings, GridSpace, RunConfig, SCHEMA_VERSION};

use cache::{check_stage, read_json, rebuild_stage, stage_key, write_file, write_json, CacheState};
use crate::calibration::{CalibrationResult, Calibrator};
use crate::data::{ingest_csv, make_folds, write_dataset_csv, CellDataset, CellId, TIMESTAMP_FORMAT};
use crate::error::{Error, Result};
use crate::eval::{build_report, plot_source_csv, EvalReport, PredictionSet, ReportMetadata};
use crate::features::{build_recipe, correlation_table, FeatureRecipe, InputMatrix, Variant};
use crate::handover::{table2_handover_matrix, HandoverMatrix};
use crate::multistep::{predict_multistep, rolling_origin, ExogenousPolicy, NeighborContext};
use crate::nn::{grid_search, train, ForecastModel, GridSearchResult, LossConfig, ModelData};
use crate::synth::generate_region;

const HANDOVER_FILE: &str = "handover.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Synth,
    Features,
    Train,
    Calibrate,
    Predict,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Synth,
        Stage::Features,
        Stage::Train,
        Stage::Calibrate,
        Stage::Predict,
        Stage::Eval,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Calibrate => "calibrate",
            Stage::Predict => "predict",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }

    /// Output directory name.
    pub fn dir(self) -> &'static str {
        match self {
            Stage::Synth => "data",
            Stage::Train => "grid",
            Stage::Calibrate => "models",
            Stage::Predict => "predictions",
            s => s.name(),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage '{s}'")))
    }
}

/// Grid-search outcome per variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TrainOutcome {
    Ok { search: GridSearchResult },
    Skipped { reason: String },
}

/// What a run did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub config_hash: String,
    /// Stages executed, with `true` when served from cache.
    pub stages: Vec<(Stage, bool)>,
    /// Calibrations that missed their target by more than the tolerance.
    pub unsatisfied: Vec<CalibrationResult>,
    pub report: Option<EvalReport>,
}

struct Region {
    cells: BTreeMap<CellId, CellDataset>,
    handover: Option<HandoverMatrix>,
}

impl Region {
    fn target(&self, cell: CellId) -> Result<&CellDataset> {
        self.cells
            .get(&cell)
            .ok_or_else(|| Error::Config(format!("no data for target cell {cell}")))
    }

    fn dl_series(&self) -> BTreeMap<CellId, Vec<f64>> {
        self.cells.iter().map(|(c, d)| (*c, d.dl_volume().to_vec())).collect()
    }
}

fn file_tag(variant: Variant, sla: f64) -> String {
    format!("{variant}_{sla}")
}

pub struct Pipeline {
    cfg: RunConfig,
    hash: String,
    out: PathBuf,
    keys: BTreeMap<Stage, String>,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash()?;
        let out = cfg.out_dir.clone();
        Ok(Self {
            cfg,
            hash,
            out,
            keys: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out.join(stage.dir())
    }

    /// Runs every stage up to and including `last`, reusing verified artifacts.
    pub fn run_until(&mut self, last: Stage) -> Result<RunSummary> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        // The output directory is left out so identical runs agree byte for byte.
        let canonical = RunConfig {
            out_dir: PathBuf::new(),
            ..self.cfg.clone()
        };
        let text = format!("# config {}\n{}", self.hash, canonical.to_toml()?);
        write_file(&self.out.join("config.toml"), text.as_bytes())?;
        let mut summary = RunSummary {
            config_hash: self.hash.clone(),
            ..RunSummary::default()
        };
        for stage in Stage::ALL.into_iter().filter(|s| *s <= last) {
            let cached = self.stage(stage).map_err(|e| e.in_stage(stage.name()))?;
            info!("stage {stage}: {}", if cached { "cached" } else { "done" });
            summary.stages.push((stage, cached));
        }
        if last >= Stage::Calibrate {
            summary.unsatisfied = self
                .calibrations()?
                .into_iter()
                .filter(|r| !r.satisfied)
                .collect();
        }
        if last >= Stage::Eval {
            summary.report = Some(self.load_report()?);
        }
        Ok(summary)
    }

    fn upstream(&self, stage: Stage) -> Vec<String> {
        Stage::ALL
            .into_iter()
            .filter(|s| *s < stage)
            .filter_map(|s| self.keys.get(&s).cloned())
            .collect()
    }

    /// Returns true when the stage was served from cache.
    fn stage(&mut self, stage: Stage) -> Result<bool> {
        let up = self.upstream(stage);
        let up: Vec<&str> = up.iter().map(String::as_str).collect();
        let key = stage_key(stage.name(), &self.hash, &up);
        let dir = self.stage_dir(stage);
        let cached = match check_stage(&dir, &self.hash, &key)? {
            CacheState::Fresh => true,
            CacheState::Stale => {
                rebuild_stage(&dir, stage.name(), &self.hash, &key, |d| match stage {
                    Stage::Synth => self.produce_data(d),
                    Stage::Features => self.produce_features(d),
                    Stage::Train => self.produce_grid(d),
                    Stage::Calibrate => self.produce_models(d),
                    Stage::Predict => self.produce_predictions(d),
                    Stage::Eval => self.produce_eval(d),
                    Stage::Report => self.produce_report(d),
                })?;
                false
            }
        };
        self.keys.insert(stage, key);
        Ok(cached)
    }

    fn ranges(&self, ds: &CellDataset) -> Result<[Range<usize>; 3]> {
        self.cfg.split.ranges(ds.len())
    }

    // ---- data

    fn produce_data(&self, dir: &Path) -> Result<()> {
        let (cells, handover) = match &self.cfg.data {
            DataSource::Synthetic { handover } => {
                let ho = match handover {
                    Some(p) => read_handover(p)?,
                    None => table2_handover_matrix(),
                };
                (generate_region(&self.cfg.scenario, &ho)?, Some(ho))
            }
            DataSource::Csv { dir: src, handover } => {
                let mut cells = BTreeMap::new();
                let mut paths: Vec<PathBuf> = fs::read_dir(src)
                    .map_err(|e| Error::io(src, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                    .filter(|p| Some(p.as_path()) != handover.as_deref())
                    .collect();
                paths.sort();
                for p in paths {
                    let ds = ingest_csv(&p)?;
                    cells.insert(ds.cell(), ds);
                }
                (cells, handover.as_deref().map(read_handover).transpose()?)
            }
        };
        if !cells.contains_key(&self.cfg.target) {
            return Err(Error::Config(format!("no data for target cell {}", self.cfg.target)));
        }
        for (cell, ds) in &cells {
            let path = dir.join(format!("{cell}.csv"));
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_dataset_csv(ds, f)?;
        }
        if let Some(ho) = handover {
            let path = dir.join(HANDOVER_FILE);
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            ho.write_csv(f)?;
        }
        Ok(())
    }

    fn load_region(&self) -> Result<Region> {
        let dir = self.stage_dir(Stage::Synth);
        let mut cells = BTreeMap::new();
        let mut handover = None;
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        for p in paths {
            if p.file_name().is_some_and(|n| n == HANDOVER_FILE) {
                handover = Some(read_handover(&p)?);
            } else {
                let ds = ingest_csv(&p)?;
                cells.insert(ds.cell(), ds);
            }
        }
        Ok(Region { cells, handover })
    }

    // ---- features

    fn handover_for(&self, region: &Region, v: Variant) -> Result<HandoverMatrix> {
        match (&region.handover, v.uses_handover()) {
            (Some(ho), _) => Ok(ho.clone()),
            (None, false) => HandoverMatrix::new(BTreeMap::new()),
            (None, true) => Err(Error::Config(format!(
                "variant '{v}' needs handover rates but the data source has no handover CSV"
            ))),
        }
    }

    fn produce_features(&self, dir: &Path) -> Result<()> {
        let region = self.load_region()?;
        let ds = region.target(self.cfg.target)?;
        let [train, _, _] = self.ranges(ds)?;
        let series = region.dl_series();
        for &v in &self.cfg.variants {
            let ho = self.handover_for(&region, v)?;
            let (recipe, _) = build_recipe(v, ds, train.clone(), &series, &ho, &self.cfg.features)?;
            write_json(dir, &format!("recipe_{v}.json"), &self.hash, &recipe)?;
        }
        let table = correlation_table(&ds.slice(train)?)?;
        let path = dir.join("correlation.csv");
        table.write_csv(fs::File::create(&path).map_err(|e| Error::io(&path, e))?)?;
        Ok(())
    }

    fn load_recipe(&self, v: Variant) -> Result<FeatureRecipe> {
        read_json(&self.stage_dir(Stage::Features).join(format!("recipe_{v}.json")), &self.hash)
    }

    fn matrix(&self, region: &Region, recipe: &FeatureRecipe) -> Result<InputMatrix> {
        recipe.materialize(region.target(self.cfg.target)?, &region.dl_series())
    }

    // ---- grid search

    /// Loss used to rank hyperparameters: the analytic weight of the loosest target.
    fn search_loss(&self) -> Result<LossConfig> {
        let p = self.cfg.sla_targets.iter().copied().fold(0.0, f64::max);
        LossConfig::for_target((1.0 - p) / p, p)
    }

    fn produce_grid(&self, dir: &Path) -> Result<()> {
        let region = self.load_region()?;
        let ds = region.target(self.cfg.target)?;
        let [_, val, _] = self.ranges(ds)?;
        let plan = make_folds(val.end, self.cfg.folds.k, self.cfg.folds.shift)?;
        let points = self.cfg.grid.points(self.cfg.train_seed);
        let loss = self.search_loss()?;
        let mut any_ok = false;
        for &v in &self.cfg.variants {
            let recipe = self.load_recipe(v)?;
            let matrix = self.matrix(&region, &recipe)?;
            let outcome = match grid_search(&points, &recipe, &matrix, &plan, &loss) {
                Ok(search) => {
                    any_ok = true;
                    TrainOutcome::Ok { search }
                }
                Err(e @ Error::AllDiverged) => {
                    warn!("{v}: {e}");
                    TrainOutcome::Skipped { reason: e.to_string() }
                }
                Err(e) => return Err(e),
            };
            write_json(dir, &format!("grid_{v}.json"), &self.hash, &outcome)?;
        }
        if !any_ok {
            return Err(Error::AllDiverged);
        }
        Ok(())
    }

    fn load_grid(&self, v: Variant) -> Result<TrainOutcome> {
        read_json(&self.stage_dir(Stage::Train).join(format!("grid_{v}.json")), &self.hash)
    }

    // ---- calibration

    fn produce_models(&self, dir: &Path) -> Result<()> {
        let region = self.load_region()?;
        let ds = region.target(self.cfg.target)?;
        let [train_r, val_r, _] = self.ranges(ds)?;
        let results: Vec<Result<Vec<(String, CalibrationResult, ForecastModel)>>> = self
            .cfg
            .variants
            .par_iter()
            .map(|&v| {
                let TrainOutcome::Ok { search } = self.load_grid(v)? else {
                    return Ok(Vec::new());
                };
                let recipe = self.load_recipe(v)?;
                let matrix = self.matrix(&region, &recipe)?;
                let data = ModelData::new(&recipe, &matrix, train_r.clone(), val_r.clone())?;
                let best = search.best;
                let cal = Calibrator::new(&data, best.hidden, best.layers, best.train);
                let mut out = Vec::new();
                for &p in &self.cfg.sla_targets {
                    let (result, model) = cal.calibrate(p, &self.cfg.calibration)?;
                    out.push((file_tag(v, p), result, model));
                }
                Ok(out)
            })
            .collect();
        for r in results {
            for (tag, result, model) in r? {
                if !result.satisfied {
                    warn!(
                        "{tag}: best validation violation rate {:.4} misses target {} by more than {}",
                        result.violation_rate, result.target, result.tolerance
                    );
                    if self.cfg.fail_on_unsatisfied {
                        return Err(Error::ConstraintUnsatisfied {
                            target: result.target,
                            rate: result.violation_rate,
                        });
                    }
                }
                write_json(dir, &format!("calibration_{tag}.json"), &self.hash, &result)?;
                write_json(dir, &format!("model_{tag}.json"), &self.hash, &model)?;
            }
        }
        if self.cfg.handover_policy == ExogenousPolicy::NeighborRecursive {
            self.produce_neighbor_models(dir, &region, train_r, val_r)?;
        }
        Ok(())
    }

    /// Univariate central forecasters for every handover neighbor of the target.
    fn produce_neighbor_models(&self, dir: &Path, region: &Region, train_r: Range<usize>, val_r: Range<usize>) -> Result<()> {
        let mut cells = Vec::new();
        for &v in self.cfg.variants.iter().filter(|v| v.uses_handover()) {
            if let Some(w) = self.load_recipe(v)?.handover {
                cells.extend(w.neighbors());
            }
        }
        cells.sort();
        cells.dedup();
        let point = match self.load_grid(Variant::Univariate) {
            Ok(TrainOutcome::Ok { search }) => search.best,
            _ => self.cfg.grid.points(self.cfg.train_seed)[0],
        };
        let lookback = self.cfg.features.lookback;
        let models: Vec<Result<(CellId, ForecastModel)>> = cells
            .par_iter()
            .map(|c| {
                let ds = region
                    .cells
                    .get(c)
                    .ok_or_else(|| Error::MissingNeighborSeries(c.to_string()))?;
                let recipe = FeatureRecipe::univariate(lookback);
                let matrix = recipe.materialize(ds, &BTreeMap::new())?;
                let data = ModelData::new(&recipe, &matrix, train_r.clone(), val_r.clone())?;
                Ok((*c, train(&data, point.hidden, point.layers, &point.train, &LossConfig::mae())?))
            })
            .collect();
        for m in models {
            let (c, model) = m?;
            write_json(dir, &format!("neighbor_{c}.json"), &self.hash, &model)?;
        }
        Ok(())
    }

    pub fn calibrations(&self) -> Result<Vec<CalibrationResult>> {
        let dir = self.stage_dir(Stage::Calibrate);
        let mut out = Vec::new();
        for &v in &self.cfg.variants {
            for &p in &self.cfg.sla_targets {
                let path = dir.join(format!("calibration_{}.json", file_tag(v, p)));
                if path.exists() {
                    out.push(read_json(&path, &self.hash)?);
                }
            }
        }
        Ok(out)
    }

    pub fn load_model(&self, v: Variant, sla: f64) -> Result<ForecastModel> {
        let path = self.stage_dir(Stage::Calibrate).join(format!("model_{}.json", file_tag(v, sla)));
        if !path.exists() {
            return Err(Error::MissingModel(format!("{v} at SLA {sla}")));
        }
        let model: ForecastModel = read_json(&path, &self.hash)?;
        model.validate()?;
        Ok(model)
    }

    fn load_neighbor_models(&self) -> Result<BTreeMap<CellId, ForecastModel>> {
        let dir = self.stage_dir(Stage::Calibrate);
        let mut out = BTreeMap::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if let Some(cell) = name.strip_prefix("neighbor_").and_then(|n| n.strip_suffix(".json")) {
                out.insert(cell.parse()?, read_json(&path, &self.hash)?);
            }
        }
        Ok(out)
    }

    // ---- forecasts

    fn produce_predictions(&self, dir: &Path) -> Result<()> {
        let region = self.load_region()?;
        let ds = region.target(self.cfg.target)?;
        let [_, _, test] = self.ranges(ds)?;
        let plan = self.cfg.plan();
        let series = region.dl_series();
        let neighbor_models = self.load_neighbor_models()?;
        let ctx = NeighborContext {
            models: &neighbor_models,
            series: &series,
        };
        for &v in &self.cfg.variants {
            for &p in &self.cfg.sla_targets {
                let model = match self.load_model(v, p) {
                    Ok(m) => m,
                    Err(Error::MissingModel(_)) => continue,
                    Err(e) => return Err(e),
                };
                let matrix = self.matrix(&region, &model.recipe)?;
                let set = PredictionSet {
                    variant: v,
                    sla_target: p,
                    w: model.loss.w,
                    target_scaler: model.target_scaler(),
                    series: rolling_origin(&model, &matrix, test.clone(), &plan, Some(ctx))?,
                };
                write_json(dir, &format!("predictions_{}.json", file_tag(v, p)), &self.hash, &set)?;
            }
        }
        Ok(())
    }

    fn load_predictions(&self) -> Result<Vec<PredictionSet>> {
        let dir = self.stage_dir(Stage::Predict);
        let mut out = Vec::new();
        for &v in &self.cfg.variants {
            for &p in &self.cfg.sla_targets {
                let path = dir.join(format!("predictions_{}.json", file_tag(v, p)));
                if path.exists() {
                    out.push(read_json(&path, &self.hash)?);
                }
            }
        }
        Ok(out)
    }

    /// Forecast of `steps` hours starting at `origin`, the first unobserved timestamp.
    pub fn forecast(&mut self, v: Variant, sla: f64, origin: NaiveDateTime, steps: usize) -> Result<String> {
        self.run_until(Stage::Calibrate)?;
        let region = self.load_region()?;
        let ds = region.target(self.cfg.target)?;
        let grid = ds.grid();
        let delta = origin.signed_duration_since(grid.start());
        if delta.num_seconds() < 0 || delta.num_seconds() % 3600 != 0 || delta.num_hours() as usize > grid.len() {
            return Err(Error::Config(format!(
                "origin {origin} must be an hour between {} and {}",
                grid.start(),
                grid.timestamp(grid.len())
            )));
        }
        let o = delta.num_hours() as usize;
        let model = self.load_model(v, sla)?;
        let matrix = self.matrix(&region, &model.recipe)?;
        let series = region.dl_series();
        let neighbor_models = self.load_neighbor_models()?;
        let ctx = NeighborContext {
            models: &neighbor_models,
            series: &series,
        };
        let pred = predict_multistep(&model, &matrix, o, steps, &self.cfg.plan(), Some(ctx))?;
        let mut csv = String::from("timestamp,step,prediction\n");
        for (k, y) in pred.iter().enumerate() {
            csv.push_str(&format!("{},{},{y}\n", grid.timestamp(o + k).format(TIMESTAMP_FORMAT), k + 1));
        }
        Ok(csv)
    }

    // ---- evaluation and report

    fn produce_eval(&self, dir: &Path) -> Result<()> {
        let sets = self.load_predictions()?;
        let mut skipped = Vec::new();
        for &v in &self.cfg.variants {
            if let TrainOutcome::Skipped { reason } = self.load_grid(v)? {
                for &p in &self.cfg.sla_targets {
                    skipped.push((v, p, reason.clone()));
                }
            }
        }
        let meta = ReportMetadata {
            config_hash: self.hash.clone(),
            scenario_seed: self.cfg.scenario.seed,
            train_seed: self.cfg.train_seed,
            cell: self.cfg.target.to_string(),
            unit: self.cfg.scenario.volume_unit.clone(),
        };
        let report = build_report(
            meta,
            &sets,
            &self.cfg.variants,
            &self.cfg.sla_targets,
            &self.cfg.horizons,
            &skipped,
        )?;
        write_file(&dir.join("report.json"), report.to_json()?.as_bytes())
    }

    pub fn load_report(&self) -> Result<EvalReport> {
        let path = self.stage_dir(Stage::Eval).join("report.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let report: EvalReport = serde_json::from_str(&text)?;
        if report.metadata.config_hash != self.hash {
            return Err(Error::ConfigMismatch {
                path,
                expected: self.hash.clone(),
                found: report.metadata.config_hash,
            });
        }
        Ok(report)
    }

    fn produce_report(&self, dir: &Path) -> Result<()> {
        let report = self.load_report()?;
        report.write_all(dir)?;
        let region = self.load_region()?;
        let grid = *region.target(self.cfg.target)?.grid();
        let sets = self.load_predictions()?;
        for &p in &self.cfg.sla_targets {
            for &h in &self.cfg.horizons {
                if sets.iter().any(|s| s.sla_target == p) {
                    let csv = plot_source_csv(&grid, &sets, p, h)?;
                    write_file(&dir.join(format!("plot_source_{p}_{h}h.csv")), csv.as_bytes())?;
                }
            }
        }
        Ok(())
    }
}

fn read_handover(path: &Path) -> Result<HandoverMatrix> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    HandoverMatrix::read_csv(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
        assert!("bogus".parse::<Stage>().is_err());
        assert!(Stage::Synth < Stage::Report);
    }

    #[test]
    fn csv_source_without_handover_fails_in_features() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("cells");
        fs::create_dir_all(&src).unwrap();
        let scenario = crate::synth::ScenarioConfig {
            weeks: 4,
            ..Default::default()
        };
        let region = generate_region(&scenario, &table2_handover_matrix()).unwrap();
        let gu14: CellId = "GU14".parse().unwrap();
        write_dataset_csv(&region[&gu14], fs::File::create(src.join("GU14.csv")).unwrap()).unwrap();
        let cfg = RunConfig {
            out_dir: tmp.path().join("out"),
            data: DataSource::Csv { dir: src, handover: None },
            variants: vec![Variant::Univariate, Variant::Handover],
            split: crate::data::SplitSpec {
                train_weeks: 2,
                val_weeks: 1,
                test_weeks: 1,
            },
            ..RunConfig::default()
        };
        let err = Pipeline::new(cfg).unwrap().run_until(Stage::Features).unwrap_err();
        assert!(matches!(&err, Error::Stage { stage, .. } if stage == "features"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn refuses_foreign_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let base = RunConfig {
            out_dir: tmp.path().to_path_buf(),
            scenario: crate::synth::ScenarioConfig {
                weeks: 4,
                ..Default::default()
            },
            ..RunConfig::default()
        };
        let first = Pipeline::new(base.clone()).unwrap().run_until(Stage::Synth).unwrap();
        assert_eq!(first.stages, vec![(Stage::Synth, false)]);
        let again = Pipeline::new(base.clone()).unwrap().run_until(Stage::Synth).unwrap();
        assert_eq!(again.stages, vec![(Stage::Synth, true)]);
        let other = RunConfig { train_seed: 99, ..base };
        let err = Pipeline::new(other).unwrap().run_until(Stage::Synth).unwrap_err();
        assert!(matches!(err.root(), Error::ConfigMismatch { .. }));
    }
}
