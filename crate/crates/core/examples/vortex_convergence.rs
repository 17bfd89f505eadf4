//! Convergence table for the translating two-phase vortex.
//!
//! cargo run --release --example vortex_convergence -- 2 16,24,32

use aleweno::runner::{convergence_study, format_convergence_table, RunConfig};

fn main() -> aleweno::Result<()> {
    let mut args = std::env::args().skip(1);
    let degree: usize = args.next().map_or(2, |s| s.parse().expect("degree"));
    let meshes: Vec<usize> = args
        .next()
        .unwrap_or_else(|| "12,16,24".into())
        .split(',')
        .map(|s| s.parse().expect("mesh size"))
        .collect();
    let base = RunConfig {
        degree,
        ..RunConfig::default()
    };
    let rows = convergence_study(degree, &meshes, 2.0, &base)?;
    print!("{}", format_convergence_table(degree, &rows));
    Ok(())
}
