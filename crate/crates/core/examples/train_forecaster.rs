//! Trains a one-hour-ahead forecaster for GU14 and saves it as JSON.
//!
//! cargo run --release --example train_forecaster -- [variant] [w] [model.json]

use std::collections::BTreeMap;

use slacast::data::{CellId, SplitSpec};
use slacast::eval::{overprovisioning_volume, sla_violation_rate, test_loss};
use slacast::features::{build_recipe, FeatureSettings, Variant};
use slacast::handover::table2_handover_matrix;
use slacast::multistep::{rolling_origin, HorizonPlan};
use slacast::nn::{train, LossConfig, ModelData, TrainConfig};
use slacast::synth::{generate_region, ScenarioConfig};

fn main() -> slacast::Result<()> {
    let mut args = std::env::args().skip(1);
    let variant: Variant = args.next().unwrap_or_else(|| "handover".into()).parse()?;
    let w: f64 = args.next().map(|s| s.parse().expect("w")).unwrap_or(19.0);
    let path = args.next().unwrap_or_else(|| "model.json".into());

    let ho = table2_handover_matrix();
    let region = generate_region(&ScenarioConfig::default(), &ho)?;
    let target: CellId = "GU14".parse()?;
    let ds = &region[&target];
    let [tr, va, te] = SplitSpec::default().ranges(ds.len())?;
    let series: BTreeMap<CellId, Vec<f64>> = region.iter().map(|(c, d)| (*c, d.dl_volume().to_vec())).collect();

    let (recipe, matrix) = build_recipe(variant, ds, tr.clone(), &series, &ho, &FeatureSettings::default())?;
    let data = ModelData::new(&recipe, &matrix, tr, va)?;
    let cfg = TrainConfig::default();
    let model = train(&data, 16, 1, &cfg, &LossConfig::new(w)?)?;
    for (epoch, (t, v)) in model.history.train_loss.iter().zip(&model.history.val_loss).enumerate() {
        println!("epoch {:>2}  train {t:.4}  val {v:.4}", epoch + 1);
    }

    let r = &rolling_origin(&model, &matrix, te, &HorizonPlan::new(vec![1])?, None)?[0];
    println!(
        "{} test: loss {:.3}, violations {:.2}%, overprovisioning {:.3}",
        variant.model_name(),
        test_loss(&r.pred, &r.actual, &model.target_scaler(), w)?,
        sla_violation_rate(&r.pred, &r.actual)?,
        overprovisioning_volume(&r.pred, &r.actual)?.unconditional
    );
    model.save(&path)?;
    println!("saved {path}");
    Ok(())
}
