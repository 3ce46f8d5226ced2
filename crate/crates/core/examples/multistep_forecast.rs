//! Recursive forecasts at 1 to 24 hours for the univariate and handover
//! models, with loss per horizon over the test weeks.
//!
//! cargo run --release --example multistep_forecast

use std::collections::BTreeMap;

use slacast::data::{CellId, SplitSpec};
use slacast::eval::test_loss;
use slacast::features::{build_recipe, FeatureSettings, Variant};
use slacast::handover::table2_handover_matrix;
use slacast::multistep::{predict_multistep, rolling_origin, HorizonPlan};
use slacast::nn::{train, LossConfig, ModelData, TrainConfig};
use slacast::synth::{generate_region, ScenarioConfig};

fn main() -> slacast::Result<()> {
    let ho = table2_handover_matrix();
    let region = generate_region(&ScenarioConfig::default(), &ho)?;
    let target: CellId = "GU14".parse()?;
    let ds = &region[&target];
    let [tr, va, te] = SplitSpec::default().ranges(ds.len())?;
    let series: BTreeMap<CellId, Vec<f64>> = region.iter().map(|(c, d)| (*c, d.dl_volume().to_vec())).collect();
    let loss = LossConfig::for_target(19.0, 0.05)?;
    let plan = HorizonPlan::default();

    for v in [Variant::Univariate, Variant::Handover] {
        let (recipe, matrix) = build_recipe(v, ds, tr.clone(), &series, &ho, &FeatureSettings::default())?;
        let data = ModelData::new(&recipe, &matrix, tr.clone(), va.clone())?;
        let model = train(&data, 16, 1, &TrainConfig::default(), &loss)?;

        let path = predict_multistep(&model, &matrix, te.start, 24, &plan, None)?;
        println!("{} from {}:", v.model_name(), ds.grid().timestamp(te.start));
        for (k, y) in path.iter().enumerate().step_by(3) {
            println!("  +{:>2}h  predicted {y:>7.2}  actual {:>7.2}", k + 1, matrix.columns[0].values[te.start + k]);
        }
        for r in rolling_origin(&model, &matrix, te.clone(), &plan, None)? {
            println!(
                "  horizon {:>2}h: loss {:.3} over {} origins",
                r.horizon,
                test_loss(&r.pred, &r.actual, &model.target_scaler(), loss.w)?,
                r.pred.len()
            );
        }
    }
    Ok(())
}
