//! Two-dimensional Riemann problem in a closed box; writes VTK snapshots.
//!
//! cargo run --release --example riemann_2d -- c1 50 out/c1

use std::path::PathBuf;

use aleweno::runner::{run, RunConfig};

fn main() -> aleweno::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = RunConfig::default();
    config.set("case", &args.next().unwrap_or_else(|| "c1".into()))?;
    config.set("mesh", &args.next().unwrap_or_else(|| "50".into()))?;
    config.out = args.next().map_or_else(|| PathBuf::from("out/riemann_2d"), PathBuf::from);
    config.output_every = 25;
    let summary = run(&config)?;
    println!(
        "{} steps, {} elements, GCL max {:.2e}, {:.1} s",
        summary.steps, summary.elements, summary.gcl_max, summary.wall_time
    );
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
