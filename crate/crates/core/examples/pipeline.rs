// Runs the staged workflow from a JSON config and prints the barrier table.
//
//     cargo run --release --example pipeline [config.json] [out-dir]

use std::path::PathBuf;

use protonpipe::pipeline::{run_pipeline, PipelineConfig};

fn main() -> protonpipe::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/toy_pipeline.json"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("protonpipe-run"));

    let cfg = PipelineConfig::read(&config)?;
    let report = run_pipeline(&cfg, &out)?;
    for s in &report.manifest.stages {
        println!("{:<12} {:?}", s.stage, s.status);
    }
    println!();
    for b in &report.barriers {
        match b.sigma {
            Some(s) => println!("{:<12} ΔE = {:8.3} ± {:.3} mHa", b.method.as_str(), b.delta * 1e3, s * 1e3),
            None => println!("{:<12} ΔE = {:8.3} mHa", b.method.as_str(), b.delta * 1e3),
        }
    }
    for c in &report.checks {
        println!("check {:<32} {} ({:.2e} vs {:.2e})", c.name, if c.pass { "ok" } else { "FAIL" }, c.value, c.limit);
    }
    println!("\nartifacts in {}", out.display());
    Ok(())
}
