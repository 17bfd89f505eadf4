//! Mesh generation, export and WENO stencils.
//!
//! cargo run --release --example mesh_and_stencils -- 20 disc.mesh

use std::path::Path;

use aleweno::mesh::{disc, read_mesh, write_mesh, BoundaryKind, StencilSet, STENCIL_COUNT};

fn main() -> aleweno::Result<()> {
    let mut args = std::env::args().skip(1);
    let rings: usize = args.next().map_or(20, |s| s.parse().expect("rings"));
    let mesh = disc(1.0, rings, BoundaryKind::Wall)?;
    println!(
        "disc: {} nodes, {} triangles, area {:.6} (pi = {:.6}), min angle {:.1}°",
        mesh.n_nodes(),
        mesh.n_elements(),
        mesh.total_area(),
        std::f64::consts::PI,
        mesh.min_angle_degrees(mesh.nodes())
    );
    for degree in 1..=3 {
        let s = StencilSet::build(&mesh, degree);
        println!(
            "M = {degree}: {} stencils of {} elements per cell, {} completed centrally",
            STENCIL_COUNT,
            s.size(),
            s.starved.len()
        );
    }
    if let Some(path) = args.next() {
        write_mesh(&mesh, Path::new(&path))?;
        let back = read_mesh(Path::new(&path))?;
        println!("wrote {path}: {} triangles read back", back.n_elements());
    }
    Ok(())
}
