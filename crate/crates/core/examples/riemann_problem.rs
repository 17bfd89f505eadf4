//! A Riemann problem on the periodic strip, compared with the 1D reference.
//!
//! cargo run --release --example riemann_problem -- rp2 100

use aleweno::cases::{make_case, primitives, reference_1d_solve, sample_line};
use aleweno::runner::{RunConfig, PLOTTED_FIELDS};
use aleweno::scheme::Solver;

fn main() -> aleweno::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "rp1".into());
    let n: usize = args.next().map_or(100, |s| s.parse().expect("resolution"));
    let case = make_case(&name)?;
    let config = RunConfig::default().scheme_config(&case);
    let mut solver = Solver::new(case.mesh(Some(n))?, case.system, config, |x| case.conserved(x))?;
    solver.run_until(case.t_end, |_, d| {
        if d.step % 50 == 0 {
            println!("step {:4}  t = {:.4}", d.step, d.time);
        }
    })?;

    let reference = reference_1d_solve(&case, 4000, case.t_end)?;
    let samples = sample_line(&solver, [-0.5, 0.0], [0.5, 0.0], n);
    let num = primitives(&solver.system, &samples)?;
    let names = aleweno::model::System::primitive_names(&solver.system);
    println!("{:>8} {:>12} {:>12}", "x", names[0], names[8]);
    for (s, w) in samples.iter().zip(&num).step_by((n / 20).max(1)) {
        let r = reference.sample(s.x[0]);
        println!("{:8.3} {:12.5} {:12.5}   (ref {:.5}, {:.5})", s.x[0], w[0], w[8], r[0], r[8]);
    }
    for k in PLOTTED_FIELDS {
        let exact: Vec<_> = samples.iter().map(|s| reference.sample(s.x[0])).collect();
        let (lo, hi) = aleweno::cases::range(&exact, k);
        let d = aleweno::cases::l1_difference(&num, &exact, k) / (hi - lo).max(f64::MIN_POSITIVE);
        println!("L1/range {:>6}: {d:.4}", names[k]);
    }
    Ok(())
}
