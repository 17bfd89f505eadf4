//! Test problems, error norms and line sampling.

mod reference1d;
mod vortex;

pub use reference1d::{reference_1d_solve, Geometry1D, Profile, Reference1D};
pub use vortex::{Vortex, VortexProfile};

use std::sync::Arc;

use crate::basis::triangle_rule;
use crate::error::{Error, Result};
use crate::mesh::{disc, map_ref_to_phys, structured, BoundaryKind, Mesh, Point, StructuredSpec};
use crate::model::{BaerNunziato, Phase, State, System};
use crate::predictor::MeshMotion;
use crate::scheme::{FluxKind, Solver};
use crate::weno::eval_modal;

/// Computational domain; `resolution` is the number of cells across the
/// first coordinate direction (rings for the disc).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Transmissive in `x`, periodic in `y`, square cells.
    Strip { x: [f64; 2], y: [f64; 2] },
    Disc { radius: f64, boundary: BoundaryKind },
    Square { range: [f64; 2], boundary: BoundaryKind },
    Periodic { range: [f64; 2] },
}

impl Domain {
    pub fn mesh(&self, resolution: usize) -> Result<Mesh> {
        match *self {
            Domain::Strip { x, y } => {
                let h = (x[1] - x[0]) / resolution as f64;
                structured(&StructuredSpec {
                    nx: resolution,
                    ny: ((y[1] - y[0]) / h).round().max(3.0) as usize,
                    x,
                    y,
                    periodic: [false, true],
                    boundary: BoundaryKind::Transmissive,
                })
            }
            Domain::Disc { radius, boundary } => disc(radius, resolution, boundary),
            Domain::Square { range, boundary } => structured(&StructuredSpec {
                nx: resolution,
                ny: resolution,
                x: range,
                y: range,
                periodic: [false, false],
                boundary,
            }),
            Domain::Periodic { range } => {
                structured(&StructuredSpec::periodic_square(resolution, range))
            }
        }
    }
}

/// Initial data in primitive variables.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `left` for `x < 0`, `right` otherwise.
    Riemann { left: State, right: State },
    /// `inner` for `|x| < radius`, `outer` otherwise.
    Explosion { inner: State, outer: State, radius: f64 },
    /// States in the quadrants `x>0∧y>0`, `x≤0∧y>0`, `x≤0∧y≤0`, `x>0∧y≤0`.
    Quadrants([State; 4]),
    Vortex(Vortex),
    Uniform(State),
}

impl InitialCondition {
    pub fn primitive(&self, x: Point, t: f64) -> Result<State> {
        Ok(match self {
            Self::Riemann { left, right } => {
                if x[0] < 0.0 {
                    *left
                } else {
                    *right
                }
            }
            Self::Explosion { inner, outer, radius } => {
                if x[0].hypot(x[1]) < *radius {
                    *inner
                } else {
                    *outer
                }
            }
            Self::Quadrants(q) => match (x[0] > 0.0, x[1] > 0.0) {
                (true, true) => q[0],
                (false, true) => q[1],
                (false, false) => q[2],
                (true, false) => q[3],
            },
            Self::Vortex(v) => v.primitive(x, t)?,
            Self::Uniform(q) => *q,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CaseDefinition {
    pub name: &'static str,
    pub description: &'static str,
    pub system: BaerNunziato,
    pub domain: Domain,
    pub resolution: usize,
    pub t_end: f64,
    pub initial: InitialCondition,
    pub flux: FluxKind,
    pub motion: MeshMotion,
}

impl CaseDefinition {
    pub fn mesh(&self, resolution: Option<usize>) -> Result<Mesh> {
        self.domain.mesh(resolution.unwrap_or(self.resolution))
    }

    /// Conserved initial state at `x`.
    pub fn conserved(&self, x: Point) -> Result<State> {
        self.system.from_primitive(&self.initial.primitive(x, 0.0)?)
    }

    /// Exact conserved solution, where one is known.
    pub fn exact(&self, x: Point, t: f64) -> Option<Result<State>> {
        match &self.initial {
            InitialCondition::Vortex(_) | InitialCondition::Uniform(_) => Some(
                self.initial
                    .primitive(x, t)
                    .and_then(|w| self.system.from_primitive(&w)),
            ),
            _ => None,
        }
    }
}

pub const CASES: [&str; 11] = [
    "rp1", "rp2", "rp3", "rp4", "ep1", "ep2", "ep3", "c1", "c2", "vortex", "freestream",
];

/// Table row `(ρ_s, u_s, p_s, ρ_g, u_g, p_g, φ_s)` as a planar primitive state.
pub fn planar(row: [f64; 7]) -> State {
    let [rs, us, ps, rg, ug, pg, phi] = row;
    [rs, us, 0.0, ps, rg, ug, 0.0, pg, phi]
}

struct Rp {
    solid: Phase,
    gas: Phase,
    left: [f64; 7],
    right: [f64; 7],
    t_end: f64,
}

fn riemann_table(k: usize) -> Rp {
    let ideal = Phase::new(1.4, 0.0);
    match k {
        1 => Rp {
            solid: ideal,
            gas: ideal,
            left: [1.0, 0.0, 1.0, 0.5, 0.0, 1.0, 0.4],
            right: [2.0, 0.0, 2.0, 1.5, 0.0, 2.0, 0.8],
            t_end: 0.1,
        },
        2 => Rp {
            solid: Phase::new(3.0, 100.0),
            gas: ideal,
            left: [800.0, 0.0, 500.0, 1.5, 0.0, 2.0, 0.4],
            right: [1000.0, 0.0, 600.0, 1.0, 0.0, 1.0, 0.3],
            t_end: 0.1,
        },
        3 => Rp {
            solid: ideal,
            gas: ideal,
            left: [1.0, 0.9, 2.5, 1.0, 0.0, 1.0, 0.9],
            right: [1.0, 0.0, 1.0, 1.2, 1.0, 2.0, 0.2],
            t_end: 0.1,
        },
        4 => Rp {
            solid: Phase::new(3.0, 3400.0),
            gas: Phase::new(1.35, 0.0),
            left: [1900.0, 0.0, 10.0, 2.0, 0.0, 3.0, 0.2],
            right: [1950.0, 0.0, 1000.0, 1.0, 0.0, 1.0, 0.9],
            t_end: 0.15,
        },
        _ => unreachable!(),
    }
}

/// Divergence-free periodic deformation field on the unit square.
pub fn swirl_velocity(amplitude: f64) -> crate::predictor::VelocityField {
    use std::f64::consts::PI;
    Arc::new(move |x: Point, _t: f64| {
        let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
        [
            -amplitude * sx * sx * (2.0 * PI * x[1]).sin(),
            amplitude * (2.0 * PI * x[0]).sin() * sy * sy,
        ]
    })
}

pub fn make_case(name: &str) -> Result<CaseDefinition> {
    let strip = Domain::Strip {
        x: [-0.5, 0.5],
        y: [-0.05, 0.05],
    };
    let case = |name, description, system, domain, resolution, t_end, initial| CaseDefinition {
        name,
        description,
        system,
        domain,
        resolution,
        t_end,
        initial,
        flux: FluxKind::Osher,
        motion: MeshMotion::Lagrangian,
    };
    let rp = |k: usize, name, description| {
        let t = riemann_table(k);
        case(
            name,
            description,
            BaerNunziato::new(t.solid, t.gas),
            strip,
            200,
            t.t_end,
            InitialCondition::Riemann {
                left: planar(t.left),
                right: planar(t.right),
            },
        )
    };
    let ep = |k: usize, name, description| {
        let t = riemann_table(k);
        case(
            name,
            description,
            BaerNunziato::new(t.solid, t.gas),
            Domain::Disc {
                radius: 1.0,
                boundary: BoundaryKind::Transmissive,
            },
            100,
            0.15,
            InitialCondition::Explosion {
                inner: planar(t.left),
                outer: planar(t.right),
                radius: 0.5,
            },
        )
    };
    let quadrants = |system, a: State, b: State, name, description| {
        case(
            name,
            description,
            system,
            Domain::Square {
                range: [-0.5, 0.5],
                boundary: BoundaryKind::Wall,
            },
            100,
            0.15,
            InitialCondition::Quadrants([a, b, a, b]),
        )
    };
    Ok(match name {
        "rp1" => rp(1, "rp1", "two ideal gases, shock tube"),
        "rp2" => rp(2, "rp2", "stiffened solid and ideal gas"),
        "rp3" => rp(3, "rp3", "two ideal gases with initial velocities"),
        "rp4" => rp(4, "rp4", "strong solid pressure jump"),
        "ep1" => ep(1, "ep1", "cylindrical explosion with the rp1 states"),
        "ep2" => ep(2, "ep2", "cylindrical explosion with the rp2 states"),
        "ep3" => ep(4, "ep3", "cylindrical explosion with the rp4 states"),
        "c1" => quadrants(
            BaerNunziato::new(Phase::new(1.4, 0.0), Phase::new(1.4, 0.0)),
            [2.0, 0.0, 0.0, 2.0, 1.5, 0.0, 0.0, 2.0, 0.8],
            [1.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.4],
            "c1",
            "2D Riemann problem, two ideal gases",
        ),
        "c2" => quadrants(
            BaerNunziato::new(Phase::new(3.0, 100.0), Phase::new(1.4, 0.0)),
            [1000.0, 0.0, 0.0, 600.0, 1.0, 0.0, 0.0, 1.0, 0.3],
            [800.0, 0.0, 0.0, 500.0, 1.5, 0.0, 0.0, 2.0, 0.4],
            "c2",
            "2D Riemann problem, stiffened solid",
        ),
        "vortex" => {
            let v = Vortex::default();
            case(
                "vortex",
                "translating two-phase vortex (smooth, exact solution)",
                v.system(),
                Domain::Periodic { range: v.domain },
                24,
                2.0,
                InitialCondition::Vortex(v),
            )
        }
        "freestream" => {
            let mut c = case(
                "freestream",
                "uniform flow on a mesh deformed by a swirling velocity",
                BaerNunziato::new(Phase::new(1.4, 0.0), Phase::new(1.4, 0.0)),
                Domain::Periodic { range: [0.0, 1.0] },
                32,
                0.1,
                InitialCondition::Uniform([1.0, 0.3, -0.2, 1.0, 0.5, 0.1, 0.4, 1.0, 0.4]),
            );
            c.motion = MeshMotion::LagrangianPlus(swirl_velocity(0.5));
            c
        }
        _ => {
            return Err(Error::UnknownCase {
                name: name.to_string(),
                available: CASES.join(", "),
            })
        }
    })
}

/// `sqrt(Σᵢ |Tᵢ| (Qᵢ − Q̄ᵢ)²)` for one conserved component, `Q̄ᵢ` being the
/// element average of `exact` by a rule of exactness `degree`.
pub fn l2_error(
    mesh: &Mesh,
    averages: &[State],
    component: usize,
    degree: usize,
    exact: impl Fn(Point) -> Result<State>,
) -> Result<f64> {
    let rule = triangle_rule(degree)?;
    let mut sum = 0.0;
    for (i, q) in averages.iter().enumerate() {
        let v = mesh.vertices(i);
        let mut avg = 0.0;
        for (p, w) in rule.iter() {
            avg += 2.0 * w * exact(map_ref_to_phys(&v, p))?[component];
        }
        sum += mesh.area(i) * (q[component] - avg).powi(2);
    }
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: Point,
    /// Conserved state of the reconstruction polynomial.
    pub q: State,
    pub element: usize,
    /// Point was outside the mesh and evaluated in the nearest element.
    pub extrapolated: bool,
}

/// Evaluates the reconstruction on `n` equidistant points of the segment
/// `a → b` (cell midpoints of `n` equal pieces).
pub fn sample_line<S: System>(solver: &Solver<S>, a: Point, b: Point, n: usize) -> Vec<Sample> {
    let points: Vec<Point> = (0..n)
        .map(|k| {
            let s = (k as f64 + 0.5) / n as f64;
            [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
        })
        .collect();
    sample_points(solver, &points)
}

/// Reconstructed state at arbitrary points; points outside the mesh take
/// the nearest element's polynomial.
pub fn sample_points<S: System>(solver: &Solver<S>, points: &[Point]) -> Vec<Sample> {
    let recon = solver.reconstruction();
    let re = solver.reference_element();
    points
        .iter()
        .map(|&x| {
            let (element, xi, extrapolated) = match solver.mesh.locate(x) {
                Some((e, xi)) => (e, xi, false),
                None => {
                    let (e, xi) = solver.mesh.nearest(x);
                    (e, xi, true)
                }
            };
            let psi = re.spatial.eval_all(xi);
            Sample {
                x,
                q: eval_modal(recon.element(element), &psi),
                element,
                extrapolated,
            }
        })
        .collect()
}

/// Conserved states to primitive ones, componentwise over a sample set.
pub fn primitives<S: System>(system: &S, samples: &[Sample]) -> Result<Vec<State>> {
    samples.iter().map(|s| system.to_primitive(&s.q)).collect()
}

/// Primitive state with the phase velocities in polar components
/// `(u_r, u_θ)` about the origin.
pub fn to_polar(x: Point, w: &State) -> State {
    let r = x[0].hypot(x[1]);
    let (c, s) = if r > 0.0 { (x[0] / r, x[1] / r) } else { (1.0, 0.0) };
    let mut out = *w;
    for o in [1, 5] {
        out[o] = c * w[o] + s * w[o + 1];
        out[o + 1] = -s * w[o] + c * w[o + 1];
    }
    out
}

/// `(min, max)` of component `k`.
pub fn range(values: &[State], k: usize) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v[k]), hi.max(v[k]))
    })
}

/// Mean absolute difference of component `k`.
pub fn l1_difference(a: &[State], b: &[State], k: usize) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x[k] - y[k]).abs()).sum::<f64>() / a.len().max(1) as f64
}
