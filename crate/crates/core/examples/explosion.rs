//! Cylindrical explosion on a disc mesh; prints the radial cut and the
//! azimuthal spread of the solid density on the ring r = 1/2.
//!
//! cargo run --release --example explosion -- ep1 40

use aleweno::cases::{make_case, primitives, sample_line, sample_points};
use aleweno::runner::RunConfig;
use aleweno::scheme::Solver;

fn main() -> aleweno::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "ep1".into());
    let rings: usize = args.next().map_or(40, |s| s.parse().expect("rings"));
    let case = make_case(&name)?;
    let config = RunConfig::default().scheme_config(&case);
    let mut solver = Solver::new(case.mesh(Some(rings))?, case.system, config, |x| case.conserved(x))?;
    println!("{} elements", solver.mesh.n_elements());
    solver.run_until(case.t_end, |_, d| {
        if d.step % 25 == 0 {
            println!("step {:4}  t = {:.4}  GCL {:.1e}", d.step, d.time, d.gcl_max);
        }
    })?;
    let cut = sample_line(&solver, [0.0, 0.0], [1.0, 0.0], 50);
    for (s, w) in cut.iter().zip(primitives(&solver.system, &cut)?) {
        println!("{:6.3} rho_s {:9.5} rho_g {:9.5} phi_s {:7.4}", s.x[0], w[0], w[4], w[8]);
    }
    let points: Vec<_> = (0..180)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 90.0;
            [0.5 * a.cos(), 0.5 * a.sin()]
        })
        .collect();
    let ring: Vec<f64> = primitives(&solver.system, &sample_points(&solver, &points))?
        .iter()
        .map(|w| w[0])
        .collect();
    let mean = ring.iter().sum::<f64>() / ring.len() as f64;
    let sd = (ring.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / ring.len() as f64).sqrt();
    println!("ring r=0.5: mean rho_s {mean:.5}, std {sd:.2e}");
    Ok(())
}
