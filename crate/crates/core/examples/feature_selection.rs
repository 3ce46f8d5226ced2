//! Builds every input recipe for GU14: correlation-selected RAN counters,
//! peak-hour profile and handover clusters.
//!
//! cargo run --release --example feature_selection

use std::collections::BTreeMap;

use slacast::data::{CellId, SplitSpec};
use slacast::features::{build_recipe, correlation_table, FeatureSettings, Variant};
use slacast::handover::table2_handover_matrix;
use slacast::synth::{generate_region, ScenarioConfig};

fn main() -> slacast::Result<()> {
    let ho = table2_handover_matrix();
    let region = generate_region(&ScenarioConfig::default(), &ho)?;
    let target: CellId = "GU14".parse()?;
    let ds = &region[&target];
    let [train, _, _] = SplitSpec::default().ranges(ds.len())?;
    let series: BTreeMap<CellId, Vec<f64>> = region.iter().map(|(c, d)| (*c, d.dl_volume().to_vec())).collect();

    let table = correlation_table(&ds.slice(train.clone())?)?;
    let f10 = table.labels.iter().position(|l| l.index() == 10).unwrap();
    println!("correlation with F10 on the training slice:");
    for (label, r) in table.labels.iter().zip(&table.values[f10]) {
        if let Some(r) = r {
            println!("  {label:<4} {:<45} {r:+.3}", label.name());
        }
    }

    let settings = FeatureSettings::default();
    for v in Variant::ALL {
        let (recipe, matrix) = build_recipe(v, ds, train.clone(), &series, &ho, &settings)?;
        let cols: Vec<String> = recipe.columns().iter().map(|c| c.name()).collect();
        println!("\n{}: {} columns [{}]", v.model_name(), matrix.width(), cols.join(", "));
        if let Some(p) = &recipe.peak {
            println!("  peak hours {:?} (threshold {})", p.peak_hours, p.threshold);
        }
        if let Some(h) = &recipe.handover {
            println!("  incoming weights:");
            for (c, w) in &h.incoming {
                println!("    {c} {w:.4}");
            }
        }
    }
    Ok(())
}
