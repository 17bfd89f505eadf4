use std::collections::HashMap;
use std::f64::consts::TAU;

use super::{BoundaryKind, Mesh, Point};
use crate::error::{Error, Result};

/// Rectangle split into `nx × ny` squares, each cut into two triangles
/// along the diagonal from lower left to upper right.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSpec {
    pub nx: usize,
    pub ny: usize,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub periodic: [bool; 2],
    /// Tag of all non-periodic boundary edges.
    pub boundary: BoundaryKind,
}

impl StructuredSpec {
    pub fn periodic_square(n: usize, range: [f64; 2]) -> Self {
        Self {
            nx: n,
            ny: n,
            x: range,
            y: range,
            periodic: [true, true],
            boundary: BoundaryKind::Transmissive,
        }
    }
}

pub fn structured(spec: &StructuredSpec) -> Result<Mesh> {
    let StructuredSpec { nx, ny, .. } = *spec;
    if nx < 2 || ny < 2 {
        return Err(Error::MeshStructure("structured mesh needs at least 2×2 cells".into()));
    }
    if (spec.periodic[0] && nx < 3) || (spec.periodic[1] && ny < 3) {
        return Err(Error::MeshStructure("periodic direction needs at least 3 cells".into()));
    }
    let lx = spec.x[1] - spec.x[0];
    let ly = spec.y[1] - spec.y[0];
    let (cols, rows) = (
        if spec.periodic[0] { nx } else { nx + 1 },
        if spec.periodic[1] { ny } else { ny + 1 },
    );
    let mut nodes = Vec::with_capacity(cols * rows);
    for j in 0..rows {
        for i in 0..cols {
            nodes.push([
                spec.x[0] + lx * i as f64 / nx as f64,
                spec.y[0] + ly * j as f64 / ny as f64,
            ]);
        }
    }
    // lattice point (i, j) -> node index and period offset
    let node = |i: usize, j: usize| -> (usize, Point) {
        let (mut ii, mut jj, mut off) = (i, j, [0.0, 0.0]);
        if spec.periodic[0] && i == nx {
            ii = 0;
            off[0] = lx;
        }
        if spec.periodic[1] && j == ny {
            jj = 0;
            off[1] = ly;
        }
        (jj * cols + ii, off)
    };
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut offsets = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let p00 = node(i, j);
            let p10 = node(i + 1, j);
            let p11 = node(i + 1, j + 1);
            let p01 = node(i, j + 1);
            for tri in [[p00, p10, p11], [p00, p11, p01]] {
                triangles.push(tri.map(|p| p.0));
                offsets.push(tri.map(|p| p.1));
            }
        }
    }
    let mut boundary = HashMap::new();
    let mut tag = |a: (usize, Point), b: (usize, Point)| {
        boundary.insert((a.0.min(b.0), a.0.max(b.0)), spec.boundary);
    };
    if !spec.periodic[1] {
        for i in 0..nx {
            tag(node(i, 0), node(i + 1, 0));
            tag(node(i, ny), node(i + 1, ny));
        }
    }
    if !spec.periodic[0] {
        for j in 0..ny {
            tag(node(0, j), node(0, j + 1));
            tag(node(nx, j), node(nx, j + 1));
        }
    }
    let period = [
        spec.periodic[0].then_some(lx),
        spec.periodic[1].then_some(ly),
    ];
    Mesh::new(nodes, triangles, Some(offsets), &boundary, period)
}

/// Disc of radius `radius` centered at the origin, meshed by `rings`
/// concentric rings with `6k` nodes on ring `k`; spacing `h ≈ radius/rings`.
pub fn disc(radius: f64, rings: usize, boundary_kind: BoundaryKind) -> Result<Mesh> {
    if rings < 1 {
        return Err(Error::MeshStructure("disc mesh needs at least one ring".into()));
    }
    let mut nodes = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(nodes.len());
        let r = radius * k as f64 / rings as f64;
        for m in 0..6 * k {
            let a = TAU * m as f64 / (6 * k) as f64;
            nodes.push([r * a.cos(), r * a.sin()]);
        }
    }
    let ring_len = |k: usize| if k == 0 { 1 } else { 6 * k };
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for k in 1..=rings {
        let (ni, no) = (ring_len(k - 1), ring_len(k));
        let (si, so) = (ring_start[k - 1], ring_start[k]);
        let inner = |a: usize| si + a % ni;
        let outer = |b: usize| so + b % no;
        let (mut a, mut b) = (0usize, 0usize);
        while a < ni || b < no {
            let next_in = if k == 1 { f64::INFINITY } else { (a + 1) as f64 / ni as f64 };
            let next_out = (b + 1) as f64 / no as f64;
            if b < no && (a >= ni || next_out <= next_in) {
                triangles.push([inner(a), outer(b), outer(b + 1)]);
                b += 1;
            } else {
                triangles.push([inner(a), outer(b), inner(a + 1)]);
                a += 1;
            }
            if k == 1 && b == no {
                break;
            }
        }
    }
    let mut boundary = HashMap::new();
    let so = ring_start[rings];
    let no = ring_len(rings);
    for b in 0..no {
        let (p, q) = (so + b, so + (b + 1) % no);
        boundary.insert((p.min(q), p.max(q)), boundary_kind);
    }
    Mesh::new(nodes, triangles, None, &boundary, [None, None])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Neighbor;

    #[test]
    fn element_count_and_area() {
        let m = structured(&StructuredSpec::periodic_square(24, [-10.0, 10.0])).unwrap();
        assert_eq!(m.n_elements(), 1152);
        assert!((m.total_area() - 400.0).abs() < 1e-12 * 400.0);
    }

    #[test]
    fn incidence_count() {
        let m = structured(&StructuredSpec::periodic_square(24, [0.0, 1.0])).unwrap();
        let total: usize = (0..m.n_nodes()).map(|k| m.node_elements(k).len()).sum();
        assert_eq!(total, 3 * m.n_elements());
    }

    #[test]
    fn periodic_shifts_are_period_vectors() {
        let m = structured(&StructuredSpec::periodic_square(5, [0.0, 2.0])).unwrap();
        let mut seen = 0;
        for i in 0..m.n_elements() {
            for (e, n) in m.neighbors(i).iter().enumerate() {
                let Neighbor::Interior { element, edge, shift } = *n else {
                    panic!("periodic mesh has no boundary");
                };
                for s in shift {
                    assert!(s == 0.0 || s.abs() == 2.0);
                }
                if shift != [0.0, 0.0] {
                    seen += 1;
                }
                // shared edge endpoints coincide after the shift
                let vi = m.vertices(i);
                let vj = m.vertices(element);
                let a = vi[e];
                let b = vj[(edge + 1) % 3];
                assert!((a[0] - b[0] - shift[0]).abs() < 1e-14);
                assert!((a[1] - b[1] - shift[1]).abs() < 1e-14);
            }
        }
        assert_eq!(seen, 4 * 5);
    }

    #[test]
    fn interior_edges_have_two_records() {
        let spec = StructuredSpec {
            nx: 6,
            ny: 3,
            x: [0.0, 2.0],
            y: [0.0, 1.0],
            periodic: [false, false],
            boundary: BoundaryKind::Wall,
        };
        let m = structured(&spec).unwrap();
        let mut interior = 0;
        let mut walls = 0;
        for i in 0..m.n_elements() {
            for n in m.neighbors(i) {
                match n {
                    Neighbor::Interior { .. } => interior += 1,
                    Neighbor::Boundary(BoundaryKind::Wall) => walls += 1,
                    _ => panic!(),
                }
            }
        }
        assert_eq!(walls, 2 * (6 + 3));
        assert_eq!(interior % 2, 0);
    }

    #[test]
    fn disc_counts_and_area() {
        let rings = 20;
        let m = disc(1.0, rings, BoundaryKind::Transmissive).unwrap();
        assert_eq!(m.n_elements(), 6 * rings * rings);
        assert_eq!(m.n_nodes(), 1 + 3 * rings * (rings + 1));
        // polygon inscribed in the circle
        let n = 6 * rings;
        let polygon = 0.5 * n as f64 * (TAU / n as f64).sin();
        assert!((m.total_area() - polygon).abs() < 1e-12);
        assert!(m.min_angle_degrees(m.nodes()) > 20.0);
    }
}
