//! Searches the loss weight that meets 5% and 3% violation targets on the
//! validation weeks, then checks the chosen models on the test weeks.
//!
//! cargo run --release --example calibrate_sla

use std::collections::BTreeMap;

use slacast::calibration::{constant_predictor_oracle, CalibrationSettings, Calibrator};
use slacast::data::{CellId, SplitSpec};
use slacast::eval::{overprovisioning_volume, sla_violation_rate};
use slacast::features::{build_recipe, FeatureSettings, Variant};
use slacast::handover::table2_handover_matrix;
use slacast::multistep::{rolling_origin, HorizonPlan};
use slacast::nn::{ModelData, TrainConfig};
use slacast::synth::{generate_region, ScenarioConfig};

fn main() -> slacast::Result<()> {
    // A constant forecast lands on the w/(1+w) quantile.
    let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
    for w in [1.0, 19.0, 32.33] {
        let o = constant_predictor_oracle(&xs, w)?;
        println!("constant oracle w={w:<5}: c={} violations {:.1}%", o.c, o.violation_rate * 100.0);
    }

    let ho = table2_handover_matrix();
    let region = generate_region(&ScenarioConfig::default(), &ho)?;
    let target: CellId = "GU14".parse()?;
    let ds = &region[&target];
    let [tr, va, te] = SplitSpec::default().ranges(ds.len())?;
    let series: BTreeMap<CellId, Vec<f64>> = region.iter().map(|(c, d)| (*c, d.dl_volume().to_vec())).collect();
    let (recipe, matrix) = build_recipe(Variant::Univariate, ds, tr.clone(), &series, &ho, &FeatureSettings::default())?;
    let data = ModelData::new(&recipe, &matrix, tr, va)?;

    let cal = Calibrator::new(&data, 16, 1, TrainConfig::default());
    for p in [0.05, 0.03] {
        let (result, model) = cal.calibrate(p, &CalibrationSettings::default())?;
        let r = &rolling_origin(&model, &matrix, te.clone(), &HorizonPlan::new(vec![1])?, None)?[0];
        println!(
            "\ntarget {}%: w={:.2}, validation {:.2}% / {:.3}, test {:.2}% / {:.3}{}",
            p * 100.0,
            result.w,
            result.violation_rate * 100.0,
            result.overprovisioning,
            sla_violation_rate(&r.pred, &r.actual)?,
            overprovisioning_volume(&r.pred, &r.actual)?.unconditional,
            if result.satisfied { "" } else { " (unsatisfied)" }
        );
        for t in &result.trace {
            println!("  w {:>7.2}  violations {:>6.2}%  volume {:.3}", t.w, t.violation_rate * 100.0, t.overprovisioning);
        }
    }
    Ok(())
}
