//! Unstructured triangular meshes with moving vertices.
//!
//! Periodic domains are stored as a torus: identified boundary nodes are a
//! single node, and every triangle vertex carries a fixed period offset so
//! that `position = node + offset`. Moving the shared node moves all of its
//! images at once, which keeps the period vector between them exact.

mod generate;
mod io;
mod stencil;

pub use generate::{disc, structured, StructuredSpec};
pub use io::{read_mesh, write_mesh};
pub use stencil::{StencilMember, StencilSet, STENCIL_COUNT};

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Physical boundary treatment of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Transmissive,
    Wall,
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transmissive" | "outflow" => Ok(Self::Transmissive),
            "wall" | "reflective" => Ok(Self::Wall),
            other => Err(Error::UnknownBoundaryTag(other.to_string())),
        }
    }
}

impl BoundaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Transmissive => "transmissive",
            Self::Wall => "wall",
        }
    }
}

/// What lies across local edge `e` (from vertex `e` to vertex `e+1 mod 3`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighbor {
    /// `shift` maps the neighbor's coordinates into this element's frame.
    Interior {
        element: usize,
        edge: usize,
        shift: Point,
    },
    Boundary(BoundaryKind),
}

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    offsets: Vec<[Point; 3]>,
    neighbors: Vec<[Neighbor; 3]>,
    /// Incident `(element, local vertex)` pairs per node, sorted.
    node_elements: Vec<Vec<(usize, usize)>>,
    period: [Option<f64>; 2],
}

impl Mesh {
    /// Builds connectivity. Boundary edges are looked up in `boundary`
    /// by their sorted node pair.
    pub fn new(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        offsets: Option<Vec<[Point; 3]>>,
        boundary: &HashMap<(usize, usize), BoundaryKind>,
        period: [Option<f64>; 2],
    ) -> Result<Self> {
        let offsets = offsets.unwrap_or_else(|| vec![[[0.0; 2]; 3]; triangles.len()]);
        if offsets.len() != triangles.len() {
            return Err(Error::MeshStructure("offset count differs from triangle count".into()));
        }
        let mut node_elements = vec![Vec::new(); nodes.len()];
        for (i, tri) in triangles.iter().enumerate() {
            for (v, &k) in tri.iter().enumerate() {
                if k >= nodes.len() {
                    return Err(Error::MeshStructure(format!(
                        "triangle {i} references missing node {k}"
                    )));
                }
                node_elements[k].push((i, v));
            }
        }
        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (i, tri) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                if a == b {
                    return Err(Error::MeshStructure(format!("triangle {i} is degenerate")));
                }
                edges.entry((a.min(b), a.max(b))).or_default().push((i, e));
            }
        }
        let mut neighbors = vec![[Neighbor::Boundary(BoundaryKind::Transmissive); 3]; triangles.len()];
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let list = &edges[&key];
            match list.as_slice() {
                [(i, e)] => {
                    let kind = boundary.get(&key).copied().ok_or_else(|| {
                        Error::MeshStructure(format!("boundary edge {key:?} has no tag"))
                    })?;
                    neighbors[*i][*e] = Neighbor::Boundary(kind);
                }
                [(i, ei), (j, ej)] => {
                    let va = triangles[*i][*ei];
                    let vj = triangles[*j].iter().position(|&k| k == va).unwrap();
                    let oi = offsets[*i][*ei];
                    let oj = offsets[*j][vj];
                    let shift = [oi[0] - oj[0], oi[1] - oj[1]];
                    neighbors[*i][*ei] = Neighbor::Interior {
                        element: *j,
                        edge: *ej,
                        shift,
                    };
                    neighbors[*j][*ej] = Neighbor::Interior {
                        element: *i,
                        edge: *ei,
                        shift: [-shift[0], -shift[1]],
                    };
                }
                _ => {
                    return Err(Error::MeshStructure(format!(
                        "edge {key:?} is shared by {} triangles",
                        list.len()
                    )))
                }
            }
        }
        let mesh = Self {
            nodes,
            triangles,
            offsets,
            neighbors,
            node_elements,
            period,
        };
        mesh.check_orientation(&mesh.nodes)?;
        let min_angle = mesh.min_angle_degrees(&mesh.nodes);
        if min_angle < 1.0 {
            log::warn!("mesh minimum angle {min_angle:.3} degrees");
        }
        Ok(mesh)
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn offsets(&self, i: usize) -> &[Point; 3] {
        &self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor; 3] {
        &self.neighbors[i]
    }

    pub fn node_elements(&self, k: usize) -> &[(usize, usize)] {
        &self.node_elements[k]
    }

    pub fn period(&self) -> [Option<f64>; 2] {
        self.period
    }

    /// Replaces node positions (all derived geometry is computed on demand).
    pub fn set_nodes(&mut self, nodes: Vec<Point>) -> Result<()> {
        if nodes.len() != self.nodes.len() {
            return Err(Error::MeshStructure("node count changed".into()));
        }
        self.check_orientation(&nodes)?;
        self.nodes = nodes;
        Ok(())
    }

    /// Positions after moving every node by `velocity · dt`; fails if any
    /// triangle loses positive area.
    pub fn moved_nodes(&self, velocity: &[Point], dt: f64) -> Result<Vec<Point>> {
        let nodes: Vec<Point> = self
            .nodes
            .iter()
            .zip(velocity)
            .map(|(x, v)| [x[0] + dt * v[0], x[1] + dt * v[1]])
            .collect();
        self.check_orientation(&nodes)?;
        Ok(nodes)
    }

    /// Vertex positions of element `i` for a given node array.
    #[inline]
    pub fn vertices_with(&self, nodes: &[Point], i: usize) -> [Point; 3] {
        let t = &self.triangles[i];
        let o = &self.offsets[i];
        std::array::from_fn(|v| [nodes[t[v]][0] + o[v][0], nodes[t[v]][1] + o[v][1]])
    }

    #[inline]
    pub fn vertices(&self, i: usize) -> [Point; 3] {
        self.vertices_with(&self.nodes, i)
    }

    pub fn area(&self, i: usize) -> f64 {
        signed_area(&self.vertices(i))
    }

    pub fn barycenter(&self, i: usize) -> Point {
        barycenter(&self.vertices(i))
    }

    pub fn incircle_radius(&self, i: usize) -> f64 {
        incircle_radius(&self.vertices(i))
    }

    /// `x = X₁ + (X₂ − X₁)ξ + (X₃ − X₁)η` on the current geometry.
    pub fn map_ref_to_phys(&self, i: usize, p: Point) -> Point {
        map_ref_to_phys(&self.vertices(i), p)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|i| self.area(i)).sum()
    }

    fn check_orientation(&self, nodes: &[Point]) -> Result<()> {
        for i in 0..self.n_elements() {
            let a = signed_area(&self.vertices_with(nodes, i));
            if !(a > 0.0) {
                return Err(Error::TangledMesh { element: i, area: a });
            }
        }
        Ok(())
    }

    pub fn min_angle_degrees(&self, nodes: &[Point]) -> f64 {
        (0..self.n_elements())
            .map(|i| min_angle(&self.vertices_with(nodes, i)))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    /// Element containing `p` (periodic images are tried as well).
    pub fn locate(&self, p: Point) -> Option<(usize, Point)> {
        let images = self.images(p);
        for i in 0..self.n_elements() {
            let v = self.vertices(i);
            for q in &images {
                let xi = phys_to_ref(&v, *q);
                let tol = -1e-12;
                if xi[0] >= tol && xi[1] >= tol && 1.0 - xi[0] - xi[1] >= tol {
                    return Some((i, xi));
                }
            }
        }
        None
    }

    /// Element with the nearest barycenter, for extrapolated sampling.
    pub fn nearest(&self, p: Point) -> (usize, Point) {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.n_elements() {
            let b = self.barycenter(i);
            let d = (b[0] - p[0]).hypot(b[1] - p[1]);
            if d < best.1 {
                best = (i, d);
            }
        }
        (best.0, phys_to_ref(&self.vertices(best.0), p))
    }

    fn images(&self, p: Point) -> Vec<Point> {
        let sx: Vec<f64> = match self.period[0] {
            Some(l) => vec![0.0, -l, l],
            None => vec![0.0],
        };
        let sy: Vec<f64> = match self.period[1] {
            Some(l) => vec![0.0, -l, l],
            None => vec![0.0],
        };
        sx.iter()
            .flat_map(|dx| sy.iter().map(move |dy| [p[0] + dx, p[1] + dy]))
            .collect()
    }
}

pub fn signed_area(v: &[Point; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

pub fn barycenter(v: &[Point; 3]) -> Point {
    [
        (v[0][0] + v[1][0] + v[2][0]) / 3.0,
        (v[0][1] + v[1][1] + v[2][1]) / 3.0,
    ]
}

pub fn incircle_radius(v: &[Point; 3]) -> f64 {
    let len = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]);
    let perimeter = len(v[0], v[1]) + len(v[1], v[2]) + len(v[2], v[0]);
    2.0 * signed_area(v) / perimeter
}

pub fn map_ref_to_phys(v: &[Point; 3], p: Point) -> Point {
    [
        v[0][0] + (v[1][0] - v[0][0]) * p[0] + (v[2][0] - v[0][0]) * p[1],
        v[0][1] + (v[1][1] - v[0][1]) * p[0] + (v[2][1] - v[0][1]) * p[1],
    ]
}

pub fn phys_to_ref(v: &[Point; 3], x: Point) -> Point {
    let (a, b) = (v[1][0] - v[0][0], v[2][0] - v[0][0]);
    let (c, d) = (v[1][1] - v[0][1], v[2][1] - v[0][1]);
    let det = a * d - b * c;
    let (rx, ry) = (x[0] - v[0][0], x[1] - v[0][1]);
    [(d * rx - b * ry) / det, (-c * rx + a * ry) / det]
}

fn min_angle(v: &[Point; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let a = v[k];
            let b = v[(k + 1) % 3];
            let c = v[(k + 2) % 3];
            let u = [b[0] - a[0], b[1] - a[1]];
            let w = [c[0] - a[0], c[1] - a[1]];
            let cross = u[0] * w[1] - u[1] * w[0];
            let dot = u[0] * w[0] + u[1] * w[1];
            cross.abs().atan2(dot)
        })
        .fold(f64::INFINITY, f64::min)
}
