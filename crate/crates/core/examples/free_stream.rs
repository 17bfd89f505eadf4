//! Uniform flow on a mesh deformed by a swirling velocity field stays uniform.
//!
//! cargo run --release --example free_stream -- 50

use aleweno::cases::make_case;
use aleweno::runner::RunConfig;
use aleweno::scheme::Solver;

fn main() -> aleweno::Result<()> {
    let steps: usize = std::env::args().nth(1).map_or(50, |s| s.parse().expect("steps"));
    let case = make_case("freestream")?;
    let config = RunConfig::default().scheme_config(&case);
    let mut solver = Solver::new(case.mesh(None)?, case.system, config, |x| case.conserved(x))?;
    let q0 = solver.q[0];
    for _ in 0..steps {
        let dt = solver.compute_dt()?;
        let d = solver.step(dt)?;
        let drift = solver
            .q
            .iter()
            .flat_map(|q| q.iter().zip(&q0).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)))
            .fold(0.0, f64::max);
        println!(
            "step {:3}  t = {:.4}  min angle {:5.1}°  GCL {:.1e}  drift {:.1e}",
            d.step,
            d.time,
            solver.mesh.min_angle_degrees(solver.mesh.nodes()),
            d.gcl_max,
            drift
        );
    }
    Ok(())
}
