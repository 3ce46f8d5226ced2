use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{mae, mse, overprovisioning_volume, sla_violation_rate, test_loss};
use crate::data::{Stats, TimeGrid};
use crate::error::{Error, Result};
use crate::features::Variant;
use crate::multistep::HorizonSeries;

/// Forecasts of one calibrated model over the test slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub variant: Variant,
    pub sla_target: f64,
    pub w: f64,
    pub target_scaler: Stats,
    pub series: Vec<HorizonSeries>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    /// Mean weighted loss in normalized units.
    pub test_loss: f64,
    /// Percent of instants with prediction below demand.
    pub violation_rate: f64,
    pub overprovisioning: f64,
    pub overprovisioning_conditional: f64,
    pub mae: f64,
    pub mse: f64,
    pub samples: usize,
}

impl CellMetrics {
    pub fn compute(pred: &[f64], actual: &[f64], scaler: &Stats, w: f64) -> Result<Self> {
        let over = overprovisioning_volume(pred, actual)?;
        Ok(Self {
            test_loss: test_loss(pred, actual, scaler, w)?,
            violation_rate: sla_violation_rate(pred, actual)?,
            overprovisioning: over.unconditional,
            overprovisioning_conditional: over.conditional,
            mae: mae(pred, actual)?,
            mse: mse(pred, actual)?,
            samples: pred.len(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellStatus {
    Ok(CellMetrics),
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub variant: Variant,
    pub sla_target: f64,
    pub horizon: usize,
    pub w: Option<f64>,
    #[serde(flatten)]
    pub status: CellStatus,
}

/// Published one-hour results for the same model line-up, kept for side-by-side reading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub model: String,
    pub sla_target: f64,
    pub horizon: usize,
    pub test_loss: f64,
    pub overprovisioning: Option<f64>,
}

pub fn reference_rows() -> Vec<ReferenceRow> {
    let one_hour = [
        (Variant::Univariate, [(0.50, 42.61), (0.44, 36.92)]),
        (Variant::Ran, [(0.49, 42.74), (0.43, 37.65)]),
        (Variant::Peak, [(0.46, 39.23), (0.42, 34.75)]),
        (Variant::Handover, [(0.44, 38.08), (0.39, 31.28)]),
        (Variant::All, [(0.48, 39.55), (0.41, 33.23)]),
    ];
    let horizons = [
        (Variant::Univariate, [0.44, 0.61, 0.70, 0.87, 0.91]),
        (Variant::Ran, [0.43, 0.49, 0.56, 0.77, 1.00]),
        (Variant::Peak, [0.42, 0.66, 0.48, 0.65, 0.82]),
        (Variant::Handover, [0.39, 0.46, 0.57, 0.89, 1.07]),
        (Variant::All, [0.41, 0.54, 0.59, 0.69, 0.95]),
    ];
    let mut rows = Vec::new();
    for (v, cells) in one_hour {
        for (sla, (loss, vol)) in [0.03, 0.05].into_iter().zip(cells) {
            rows.push(ReferenceRow {
                model: v.model_name().into(),
                sla_target: sla,
                horizon: 1,
                test_loss: loss,
                overprovisioning: Some(vol),
            });
        }
    }
    for (v, losses) in horizons {
        for (h, loss) in [2, 4, 8, 24].into_iter().zip(&losses[1..]) {
            rows.push(ReferenceRow {
                model: v.model_name().into(),
                sla_target: 0.05,
                horizon: h,
                test_loss: *loss,
                overprovisioning: None,
            });
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub config_hash: String,
    pub scenario_seed: u64,
    pub train_seed: u64,
    pub cell: String,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metadata: ReportMetadata,
    pub variants: Vec<Variant>,
    pub sla_targets: Vec<f64>,
    pub horizons: Vec<usize>,
    pub cells: Vec<ReportCell>,
    pub reference: Vec<ReferenceRow>,
}

/// Scores every (variant, SLA, horizon) cell. A pair without predictions is an
/// error unless `skipped` names it with a reason.
pub fn build_report(
    metadata: ReportMetadata,
    sets: &[PredictionSet],
    variants: &[Variant],
    sla_targets: &[f64],
    horizons: &[usize],
    skipped: &[(Variant, f64, String)],
) -> Result<EvalReport> {
    let mut cells = Vec::with_capacity(variants.len() * sla_targets.len() * horizons.len());
    for &variant in variants {
        for &sla in sla_targets {
            let set = sets.iter().find(|s| s.variant == variant && s.sla_target == sla);
            let skip = skipped.iter().find(|(v, p, _)| *v == variant && *p == sla);
            for &h in horizons {
                let (w, status) = match (set, skip) {
                    (Some(set), _) => {
                        let series = set.series.iter().find(|s| s.horizon == h);
                        let status = match series {
                            Some(s) if !s.pred.is_empty() => {
                                CellStatus::Ok(CellMetrics::compute(&s.pred, &s.actual, &set.target_scaler, set.w)?)
                            }
                            _ => CellStatus::Skipped {
                                reason: format!("no {h}-hour forecasts in the evaluation window"),
                            },
                        };
                        (Some(set.w), status)
                    }
                    (None, Some((_, _, reason))) => (None, CellStatus::Skipped { reason: reason.clone() }),
                    (None, None) => return Err(Error::MissingModel(format!("{variant} at SLA {sla}"))),
                };
                cells.push(ReportCell {
                    variant,
                    sla_target: sla,
                    horizon: h,
                    w,
                    status,
                });
            }
        }
    }
    Ok(EvalReport {
        metadata,
        variants: variants.to_vec(),
        sla_targets: sla_targets.to_vec(),
        horizons: horizons.to_vec(),
        cells,
        reference: reference_rows(),
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

impl EvalReport {
    pub fn cell(&self, variant: Variant, sla: f64, horizon: usize) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.sla_target == sla && c.horizon == horizon)
    }

    pub fn metrics(&self, variant: Variant, sla: f64, horizon: usize) -> Option<&CellMetrics> {
        match &self.cell(variant, sla, horizon)?.status {
            CellStatus::Ok(m) => Some(m),
            CellStatus::Skipped { .. } => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per cell of the grid.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "variant,sla_target,horizon,w,status,test_loss,violation_rate,overprovisioning,overprovisioning_conditional,mae,mse,samples\n",
        );
        for c in &self.cells {
            let _ = write!(s, "{},{},{},{},", c.variant, c.sla_target, c.horizon, fmt_opt(c.w));
            match &c.status {
                CellStatus::Ok(m) => {
                    let _ = writeln!(
                        s,
                        "ok,{},{},{},{},{},{},{}",
                        m.test_loss,
                        m.violation_rate,
                        m.overprovisioning,
                        m.overprovisioning_conditional,
                        m.mae,
                        m.mse,
                        m.samples
                    );
                }
                CellStatus::Skipped { .. } => s.push_str("skipped,,,,,,,\n"),
            }
        }
        s
    }

    /// One-hour loss and volume per model, one column pair per SLA target.
    pub fn one_hour_table(&self) -> String {
        let mut s = String::from("model");
        for p in &self.sla_targets {
            let _ = write!(s, ",loss_{p},volume_{p}");
        }
        s.push('\n');
        for v in &self.variants {
            s.push_str(v.model_name());
            for p in &self.sla_targets {
                let m = self.metrics(*v, *p, 1);
                let _ = write!(
                    s,
                    ",{},{}",
                    fmt_opt(m.map(|m| m.test_loss)),
                    fmt_opt(m.map(|m| m.overprovisioning))
                );
            }
            s.push('\n');
        }
        s
    }

    /// Loss per model and horizon at one SLA target.
    pub fn horizon_table(&self, sla: f64) -> String {
        let mut s = String::from("model");
        for h in &self.horizons {
            let _ = write!(s, ",loss_{h}h");
        }
        s.push('\n');
        for v in &self.variants {
            s.push_str(v.model_name());
            for h in &self.horizons {
                let _ = write!(s, ",{}", fmt_opt(self.metrics(*v, sla, *h).map(|m| m.test_loss)));
            }
            s.push('\n');
        }
        s
    }

    /// Human-readable summary.
    pub fn to_markdown(&self) -> String {
        let mut s = format!(
            "# Evaluation report\n\ncell {}, unit {}, config {}\n\n## One hour ahead\n\n| model |",
            self.metadata.cell, self.metadata.unit, self.metadata.config_hash
        );
        for p in &self.sla_targets {
            let _ = write!(s, " loss {0}% | violation {0}% | volume {0}% |", p * 100.0);
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(3 * self.sla_targets.len()));
        s.push('\n');
        for v in &self.variants {
            let _ = write!(s, "| {} |", v.model_name());
            for p in &self.sla_targets {
                match self.metrics(*v, *p, 1) {
                    Some(m) => {
                        let _ = write!(s, " {:.3} | {:.2} | {:.3} |", m.test_loss, m.violation_rate, m.overprovisioning);
                    }
                    None => s.push_str(" - | - | - |"),
                }
            }
            s.push('\n');
        }
        for p in &self.sla_targets {
            let _ = write!(s, "\n## Loss by horizon, SLA {}%\n\n| model |", p * 100.0);
            for h in &self.horizons {
                let _ = write!(s, " {h}h |");
            }
            s.push_str("\n|---|");
            s.push_str(&"---|".repeat(self.horizons.len()));
            s.push('\n');
            for v in &self.variants {
                let _ = write!(s, "| {} |", v.model_name());
                for h in &self.horizons {
                    match self.metrics(*v, *p, *h) {
                        Some(m) => {
                            let _ = write!(s, " {:.3} |", m.test_loss);
                        }
                        None => s.push_str(" - |"),
                    }
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = vec![
            ("report.json".to_string(), self.to_json()?),
            ("report.csv".to_string(), self.to_csv()),
            ("report.md".to_string(), self.to_markdown()),
            ("table_one_hour.csv".to_string(), self.one_hour_table()),
        ];
        for p in &self.sla_targets {
            files.push((format!("table_horizons_{p}.csv"), self.horizon_table(*p)));
        }
        for (name, body) in &files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(files.into_iter().map(|(n, _)| n).collect())
    }
}

/// Actual and predicted DL volume per test timestamp for one SLA target and
/// horizon; columns `timestamp,actual,pred_<variant>`.
pub fn plot_source_csv(grid: &TimeGrid, sets: &[PredictionSet], sla: f64, horizon: usize) -> Result<String> {
    let chosen: Vec<(&PredictionSet, &HorizonSeries)> = sets
        .iter()
        .filter(|s| s.sla_target == sla)
        .filter_map(|s| s.series.iter().find(|h| h.horizon == horizon).map(|h| (s, h)))
        .collect();
    let Some((_, first)) = chosen.first() else {
        return Err(Error::MissingModel(format!("no predictions at SLA {sla}, horizon {horizon}")));
    };
    let mut s = String::from("timestamp,actual");
    for (set, series) in &chosen {
        if series.target_indices != first.target_indices {
            return Err(Error::ShapeMismatch {
                expected: format!("{} aligned targets", first.target_indices.len()),
                actual: format!("{} for {}", series.target_indices.len(), set.variant),
            });
        }
        let _ = write!(s, ",pred_{}", set.variant);
    }
    s.push('\n');
    for (i, t) in first.target_indices.iter().enumerate() {
        let _ = write!(s, "{},{}", grid.timestamp(*t).format(crate::data::TIMESTAMP_FORMAT), first.actual[i]);
        for (_, series) in &chosen {
            let _ = write!(s, ",{}", series.pred[i]);
        }
        s.push('\n');
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn meta() -> ReportMetadata {
        ReportMetadata {
            config_hash: "abc".into(),
            scenario_seed: 1,
            train_seed: 2,
            cell: "GU14".into(),
            unit: "GB".into(),
        }
    }

    fn set(variant: Variant, sla: f64, horizons: &[usize]) -> PredictionSet {
        PredictionSet {
            variant,
            sla_target: sla,
            w: 19.0,
            target_scaler: Stats { mean: 1.0, std: 2.0 },
            series: horizons
                .iter()
                .map(|&h| HorizonSeries {
                    horizon: h,
                    target_indices: vec![10, 11, 12],
                    pred: vec![5.0 + h as f64, 3.0, 6.0],
                    actual: vec![4.0, 4.0, 4.0],
                })
                .collect(),
        }
    }

    const H: [usize; 5] = [1, 2, 4, 8, 24];

    fn full() -> (Vec<PredictionSet>, EvalReport) {
        let sets: Vec<_> = Variant::ALL
            .iter()
            .flat_map(|v| [0.03, 0.05].map(|p| set(*v, p, &H)))
            .collect();
        let r = build_report(meta(), &sets, &Variant::ALL, &[0.03, 0.05], &H, &[]).unwrap();
        (sets, r)
    }

    #[test]
    fn grid_is_complete() {
        let (_, r) = full();
        assert_eq!(r.cells.len(), 50);
        for v in Variant::ALL {
            for p in [0.03, 0.05] {
                for h in H {
                    let m = r.metrics(v, p, h).unwrap();
                    assert!((0.0..=100.0).contains(&m.violation_rate));
                    assert!(m.overprovisioning >= 0.0);
                }
            }
        }
        assert_eq!(r.to_csv().lines().count(), 51);
    }

    #[test]
    fn reference_rows_carry_published_values() {
        let rows = reference_rows();
        let find = |m: &str, p: f64| rows.iter().find(|r| r.model == m && r.sla_target == p && r.horizon == 1).unwrap();
        let u = find("univariate LSTM", 0.05);
        assert_eq!((u.test_loss, u.overprovisioning), (0.44, Some(36.92)));
        let h = find("mvLSTM-handover", 0.03);
        assert_eq!((h.test_loss, h.overprovisioning), (0.44, Some(38.08)));
        assert_eq!(rows.len(), 30);
    }

    #[test]
    fn missing_and_skipped() {
        let sets = vec![set(Variant::Univariate, 0.05, &H)];
        assert!(matches!(
            build_report(meta(), &sets, &[Variant::Univariate, Variant::Ran], &[0.05], &H, &[]),
            Err(Error::MissingModel(_))
        ));
        let skipped = vec![(Variant::Ran, 0.05, "diverged".to_string())];
        let r = build_report(meta(), &sets, &[Variant::Univariate, Variant::Ran], &[0.05], &H, &skipped).unwrap();
        assert_eq!(r.cells.len(), 10);
        assert!(matches!(r.cell(Variant::Ran, 0.05, 4).unwrap().status, CellStatus::Skipped { .. }));
    }

    #[test]
    fn hand_counted_metrics() {
        let m = CellMetrics::compute(&[5.0, 3.0, 6.0], &[4.0, 4.0, 4.0], &Stats { mean: 0.0, std: 1.0 }, 1.0).unwrap();
        assert!((m.violation_rate - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.overprovisioning, 1.0);
        assert_eq!(m.overprovisioning_conditional, 1.5);
        assert_eq!(m.test_loss, m.mae);
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let (sets, a) = full();
        let b = build_report(meta(), &sets, &Variant::ALL, &[0.03, 0.05], &H, &[]).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.to_markdown(), b.to_markdown());
        let back: EvalReport = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn plot_source_layout() {
        let (sets, _) = full();
        let grid = TimeGrid::new(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(), 20).unwrap();
        let csv = plot_source_csv(&grid, &sets, 0.05, 1).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "timestamp,actual,pred_univariate,pred_ran,pred_peak,pred_handover,pred_all"
        );
        assert_eq!(lines.next().unwrap(), "2024-01-01T10:00:00,4,6,6,6,6,6");
        assert!(plot_source_csv(&grid, &sets, 0.5, 1).is_err());
    }

    #[test]
    fn tables() {
        let (_, r) = full();
        let t = r.one_hour_table();
        assert_eq!(t.lines().next().unwrap(), "model,loss_0.03,volume_0.03,loss_0.05,volume_0.05");
        assert_eq!(t.lines().count(), 6);
        assert!(r.horizon_table(0.05).starts_with("model,loss_1h,loss_2h,loss_4h,loss_8h,loss_24h\n"));
    }
}
