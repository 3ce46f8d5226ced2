//! Generates the default synthetic region and writes one CSV per cell plus the
//! handover table.
//!
//! cargo run --release --example synth_region -- [out_dir] [weeks]

use std::fs::{self, File};
use std::path::PathBuf;

use slacast::data::write_dataset_csv;
use slacast::features::pearson;
use slacast::handover::table2_handover_matrix;
use slacast::synth::{generate_region, ScenarioConfig};

fn main() -> slacast::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/synth".into()));
    let weeks = args.next().map(|w| w.parse().expect("weeks")).unwrap_or(52);
    let cfg = ScenarioConfig { weeks, ..ScenarioConfig::default() };
    let ho = table2_handover_matrix();
    let region = generate_region(&cfg, &ho)?;

    fs::create_dir_all(&out).expect("create output dir");
    for (cell, ds) in &region {
        let f10 = ds.dl_volume();
        let mean = f10.iter().sum::<f64>() / f10.len() as f64;
        let lag24 = pearson(&f10[..f10.len() - 24], &f10[24..])?;
        println!("{cell}: {} hours, mean {mean:.2} {}, lag-24 autocorrelation {lag24:.3}", ds.len(), cfg.volume_unit);
        write_dataset_csv(ds, File::create(out.join(format!("{cell}.csv"))).expect("create csv"))?;
    }
    ho.write_csv(File::create(out.join("handover.csv")).expect("create csv"))?;
    println!("wrote {} cells to {}", region.len(), out.display());
    Ok(())
}
