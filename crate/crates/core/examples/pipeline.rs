//! Run the full pipeline on the bundled configs and print each verdict.
//!
//!     cargo run --release --example pipeline [-- <config.json>]

use std::path::PathBuf;

use monsterlab::harness::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let configs: Vec<PathBuf> = match std::env::args().nth(1) {
        Some(p) => vec![p.into()],
        None => ["pipeline_trivial.json", "pipeline_tree.json", "pipeline_rotation.json"].iter().map(|f| data.join(f)).collect(),
    };
    for path in configs {
        let report = run_pipeline(&PipelineConfig::load(&path)?)?;
        println!("{}: {}", path.file_name().unwrap().to_string_lossy(), report.verdict);
        for s in &report.stages {
            println!("  {:<12} {:<14} {}", s.stage, s.status, s.detail);
        }
    }
    Ok(())
}
