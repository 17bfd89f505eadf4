//! Fine-grid 1D reference profile of a Riemann or explosion problem as CSV.
//!
//! cargo run --release --example reference_1d -- ep1 2000 ep1.csv

use std::path::Path;

use aleweno::cases::{make_case, reference_1d_solve};

fn main() -> aleweno::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "rp1".into());
    let cells: usize = args.next().map_or(2000, |s| s.parse().expect("cells"));
    let case = make_case(&name)?;
    let profile = reference_1d_solve(&case, cells, case.t_end)?;
    match args.next() {
        Some(path) => profile.write(Path::new(&path))?,
        None => {
            for x in [-0.4, -0.2, 0.0, 0.2, 0.4] {
                let w = profile.sample(x);
                println!("x = {x:5.2}  rho_s {:.5}  p_s {:.5}  rho_g {:.5}  phi_s {:.4}", w[0], w[3], w[4], w[8]);
            }
        }
    }
    Ok(())
}
