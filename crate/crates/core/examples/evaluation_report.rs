//! Runs the whole pipeline from a config file and prints the report.
//!
//! cargo run --release --example evaluation_report -- [config.toml] [out_dir]

use std::path::PathBuf;

use slacast::eval::CellStatus;
use slacast::pipeline::{Pipeline, RunConfig, Stage};

fn main() -> slacast::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(
        args.next()
            .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke.toml").into()),
    );
    let mut cfg = RunConfig::load(&config)?;
    if let Some(out) = args.next() {
        cfg.out_dir = out.into();
    }
    let mut pipeline = Pipeline::new(cfg)?;
    let summary = pipeline.run_until(Stage::Report)?;
    for (stage, cached) in &summary.stages {
        println!("{stage:<10} {}", if *cached { "cached" } else { "built" });
    }
    let report = summary.report.expect("report stage ran");
    println!("\nvariant     SLA  horizon  loss    violations  volume");
    for c in &report.cells {
        if let CellStatus::Ok(m) = &c.status {
            println!(
                "{:<11} {:>3}% {:>5}h  {:.3}  {:>8.2}%  {:.3}",
                c.variant.to_string(),
                c.sla_target * 100.0,
                c.horizon,
                m.test_loss,
                m.violation_rate,
                m.overprovisioning
            );
        }
    }
    println!("\nreference one-hour rows:");
    for r in report.reference.iter().filter(|r| r.horizon == 1) {
        println!("  {:<16} {}%: loss {} volume {:?}", r.model, r.sla_target * 100.0, r.test_loss, r.overprovisioning);
    }
    println!("\nfiles in {}", pipeline.stage_dir(Stage::Report).display());
    Ok(())
}
