use std::collections::{HashMap, VecDeque};

use super::{Mesh, Neighbor, Point};
use crate::basis::dof_count;

/// One central, three forward and three backward stencils per element.
pub const STENCIL_COUNT: usize = 7;

const MAX_RINGS: usize = 24;

/// Stencil element; `shift` maps its coordinates into the owner's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilMember {
    pub element: usize,
    pub shift: Point,
}

/// Reconstruction stencils of all elements, fixed for the whole run.
///
/// Stencil 0 is central, stencils 1..=3 are the forward sectors at local
/// vertices 0..=2 and 4..=6 the corresponding backward sectors. Every stencil
/// has exactly `size = 2ℳ` members, the first being the owner.
#[derive(Debug, Clone)]
pub struct StencilSet {
    size: usize,
    members: Vec<StencilMember>,
    /// `(element, stencil)` pairs completed by central growth.
    pub starved: Vec<(usize, usize)>,
}

struct Candidate {
    member: StencilMember,
    ring: usize,
    dir: Point,
    dist: f64,
}

impl StencilSet {
    pub fn build(mesh: &Mesh, degree: usize) -> Self {
        let size = 2 * dof_count(degree);
        let mut members = Vec::with_capacity(mesh.n_elements() * STENCIL_COUNT * size);
        let mut starved = Vec::new();
        for i in 0..mesh.n_elements() {
            let cands = candidates(mesh, i, 6 * size);
            let own = StencilMember {
                element: i,
                shift: [0.0, 0.0],
            };
            let central: Vec<&Candidate> = cands.iter().collect();
            let v = mesh.vertices(i);
            for s in 0..STENCIL_COUNT {
                let chosen: Vec<&Candidate> = if s == 0 {
                    central.iter().copied().take(size - 1).collect()
                } else {
                    let k = (s - 1) % 3;
                    let sign = if s <= 3 { 1.0 } else { -1.0 };
                    let e1 = sub(v[(k + 1) % 3], v[k]);
                    let e2 = sub(v[(k + 2) % 3], v[k]);
                    cands
                        .iter()
                        .filter(|c| in_cone(c.dir, e1, e2, sign))
                        .take(size - 1)
                        .collect()
                };
                members.push(own);
                members.extend(chosen.iter().map(|c| c.member));
                let mut missing = size - 1 - chosen.len();
                if missing > 0 {
                    starved.push((i, s));
                    for c in &central {
                        if missing == 0 {
                            break;
                        }
                        if !chosen.iter().any(|x| x.member.element == c.member.element) {
                            members.push(c.member);
                            missing -= 1;
                        }
                    }
                }
                assert_eq!(members.len() % size, 0, "mesh too small for stencils");
            }
        }
        if !starved.is_empty() {
            log::debug!("{} one-sided stencils completed by central growth", starved.len());
        }
        Self {
            size,
            members,
            starved,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stencil(&self, element: usize, s: usize) -> &[StencilMember] {
        let start = (element * STENCIL_COUNT + s) * self.size;
        &self.members[start..start + self.size]
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// `d = α e1 + β e2` with `sign·α ≥ 0` and `sign·β ≥ 0`.
fn in_cone(d: Point, e1: Point, e2: Point, sign: f64) -> bool {
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    let alpha = (d[0] * e2[1] - d[1] * e2[0]) / det;
    let beta = (e1[0] * d[1] - e1[1] * d[0]) / det;
    let tol = -1e-12 * (alpha.abs() + beta.abs());
    sign * alpha >= tol && sign * beta >= tol
}

/// Elements around `i` in breadth-first ring order, ties broken by distance
/// of barycenters and then by element index.
fn candidates(mesh: &Mesh, i: usize, wanted: usize) -> Vec<Candidate> {
    let bi = mesh.barycenter(i);
    let mut seen: HashMap<usize, ()> = HashMap::new();
    seen.insert(i, ());
    let mut frontier = VecDeque::from([(i, [0.0, 0.0])]);
    let mut out = Vec::new();
    for ring in 1..=MAX_RINGS {
        let mut next = VecDeque::new();
        let mut this_ring = Vec::new();
        for (e, shift) in frontier.drain(..) {
            for n in mesh.neighbors(e) {
                if let Neighbor::Interior {
                    element, shift: s, ..
                } = *n
                {
                    if seen.insert(element, ()).is_some() {
                        continue;
                    }
                    let total = [shift[0] + s[0], shift[1] + s[1]];
                    let b = mesh.barycenter(element);
                    let dir = [b[0] + total[0] - bi[0], b[1] + total[1] - bi[1]];
                    this_ring.push(Candidate {
                        member: StencilMember {
                            element,
                            shift: total,
                        },
                        ring,
                        dir,
                        dist: dir[0].hypot(dir[1]),
                    });
                    next.push_back((element, total));
                }
            }
        }
        this_ring.sort_by(|a, b| {
            a.dist
                .total_cmp(&b.dist)
                .then(a.member.element.cmp(&b.member.element))
        });
        out.extend(this_ring);
        frontier = next;
        if frontier.is_empty() || out.len() >= wanted {
            break;
        }
    }
    debug_assert!(out.windows(2).all(|w| w[0].ring <= w[1].ring));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{structured, BoundaryKind, StructuredSpec};

    #[test]
    fn sizes_and_ownership() {
        let m = structured(&StructuredSpec::periodic_square(8, [0.0, 1.0])).unwrap();
        for degree in 1..=3 {
            let s = StencilSet::build(&m, degree);
            assert_eq!(s.size(), 2 * dof_count(degree));
            for i in 0..m.n_elements() {
                for k in 0..STENCIL_COUNT {
                    let st = s.stencil(i, k);
                    assert_eq!(st.len(), s.size());
                    assert_eq!(st[0].element, i);
                    let mut ids: Vec<usize> = st.iter().map(|m| m.element).collect();
                    ids.sort_unstable();
                    ids.dedup();
                    assert_eq!(ids.len(), st.len());
                }
            }
            assert!(s.starved.is_empty());
        }
    }

    #[test]
    fn central_stencil_starts_with_neumann_neighbors() {
        let m = structured(&StructuredSpec::periodic_square(6, [0.0, 1.0])).unwrap();
        let s = StencilSet::build(&m, 1);
        for i in 0..m.n_elements() {
            let st = s.stencil(i, 0);
            let mut first: Vec<usize> = st[1..4].iter().map(|x| x.element).collect();
            let mut nb: Vec<usize> = m
                .neighbors(i)
                .iter()
                .map(|n| match n {
                    Neighbor::Interior { element, .. } => *element,
                    _ => unreachable!(),
                })
                .collect();
            first.sort_unstable();
            nb.sort_unstable();
            assert_eq!(first, nb);
        }
        // deterministic
        let again = StencilSet::build(&m, 1);
        assert_eq!(s.members, again.members);
    }

    #[test]
    fn sector_members_lie_in_their_cones() {
        let m = structured(&StructuredSpec::periodic_square(10, [0.0, 1.0])).unwrap();
        let s = StencilSet::build(&m, 2);
        let i = 37;
        let v = m.vertices(i);
        let bi = m.barycenter(i);
        for k in 1..STENCIL_COUNT {
            let vk = (k - 1) % 3;
            let sign = if k <= 3 { 1.0 } else { -1.0 };
            let e1 = sub(v[(vk + 1) % 3], v[vk]);
            let e2 = sub(v[(vk + 2) % 3], v[vk]);
            for mem in &s.stencil(i, k)[1..] {
                let b = m.barycenter(mem.element);
                let d = [b[0] + mem.shift[0] - bi[0], b[1] + mem.shift[1] - bi[1]];
                assert!(in_cone(d, e1, e2, sign));
            }
        }
    }

    #[test]
    fn boundary_starvation_is_flagged() {
        let spec = StructuredSpec {
            nx: 6,
            ny: 6,
            x: [0.0, 1.0],
            y: [0.0, 1.0],
            periodic: [false, false],
            boundary: BoundaryKind::Wall,
        };
        let m = structured(&spec).unwrap();
        let s = StencilSet::build(&m, 1);
        assert!(!s.starved.is_empty());
        for i in 0..m.n_elements() {
            for k in 0..STENCIL_COUNT {
                assert_eq!(s.stencil(i, k).len(), 6);
            }
        }
    }
}
