//! Path-conservative one-step ALE finite volume scheme.
//!
//! Each step reconstructs the cell averages, evolves every element with the
//! space-time predictor, moves the nodes with the averaged vertex velocities
//! and integrates over the resulting space-time control volumes:
//!
//! ```text
//! |Tⁿ⁺¹| Qⁿ⁺¹ = |Tⁿ| Qⁿ − Σ_faces ∫ (G̃ + ½ D̃)·ñ dS + ∫∫ (S − B·∇Q) dx dt
//! ```

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{triangle_rule, LineRule, ReferenceElement};
use crate::error::{Error, Result};
use crate::linalg::Eigen;
use crate::mesh::{signed_area, BoundaryKind, Mesh, Neighbor, Point, StencilSet};
use crate::model::{State, System, NVAR};
use crate::predictor::{ElementPrediction, MeshMotion, Predictor, PredictorOptions};
use crate::weno::{Reconstruction, Weno, WenoConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxKind {
    Rusanov,
    Osher,
}

impl FromStr for FluxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rusanov" => Ok(Self::Rusanov),
            "osher" => Ok(Self::Osher),
            _ => Err(Error::Config(format!(
                "unknown flux `{s}` (expected rusanov or osher)"
            ))),
        }
    }
}

impl FluxKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rusanov => "rusanov",
            Self::Osher => "osher",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    /// Polynomial degree `M`; the scheme is of order `M + 1`.
    pub degree: usize,
    pub flux: FluxKind,
    pub weno: WenoConfig,
    pub motion: MeshMotion,
    pub cfl: f64,
    pub predictor: PredictorOptions,
    /// Gauss-Legendre points on the segment path.
    pub path_points: usize,
    /// Largest vertex displacement per step, relative to the incircle radius.
    pub max_displacement: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            flux: FluxKind::Osher,
            weno: WenoConfig::default(),
            motion: MeshMotion::Lagrangian,
            cfl: 0.5,
            predictor: PredictorOptions::default(),
            path_points: 3,
            max_displacement: 0.5,
        }
    }
}

/// Bilinear space-time face swept by the edge `a → b` from `tⁿ` to `tⁿ + Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeFace {
    pub a0: Point,
    pub b0: Point,
    pub a1: Point,
    pub b1: Point,
    pub dt: f64,
}

impl SpaceTimeFace {
    pub fn point(&self, chi: f64, tau: f64) -> Point {
        let p0 = lerp(self.a0, self.b0, chi);
        let p1 = lerp(self.a1, self.b1, chi);
        lerp(p0, p1, tau)
    }

    /// Edge velocity at `χ`.
    pub fn velocity(&self, chi: f64) -> Point {
        let d = lerp(
            [self.a1[0] - self.a0[0], self.a1[1] - self.a0[1]],
            [self.b1[0] - self.b0[0], self.b1[1] - self.b0[1]],
            chi,
        );
        [d[0] / self.dt, d[1] / self.dt]
    }

    /// Scaled outward normal `(y_χ Δt, −x_χ Δt, x_χ y_τ − y_χ x_τ)`; its
    /// length is the surface element `dS / (dχ dτ)`.
    pub fn normal(&self, chi: f64, tau: f64) -> [f64; 3] {
        let t0 = [self.b0[0] - self.a0[0], self.b0[1] - self.a0[1]];
        let t1 = [self.b1[0] - self.a1[0], self.b1[1] - self.a1[1]];
        let xc = lerp(t0, t1, tau);
        let v = self.velocity(chi);
        let xt = [v[0] * self.dt, v[1] * self.dt];
        [
            xc[1] * self.dt,
            -xc[0] * self.dt,
            xc[0] * xt[1] - xc[1] * xt[0],
        ]
    }
}

fn lerp(a: Point, b: Point, s: f64) -> Point {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Normal mesh velocity `V·n = −ñ_t / |(ñ_x, ñ_y)|`.
pub fn normal_velocity(n: [f64; 3]) -> f64 {
    -n[2] / n[0].hypot(n[1])
}

/// `F̃·ñ = f ñ_x + g ñ_y + Q ñ_t`.
pub fn space_time_flux<S: System + ?Sized>(system: &S, q: &State, n: [f64; 3]) -> State {
    let [f, g] = system.flux(q);
    std::array::from_fn(|k| f[k] * n[0] + g[k] * n[1] + q[k] * n[2])
}

/// `(∫₀¹ B(Ψ(s))·n ds)(q⁺ − q⁻)` along the segment `Ψ = q⁻ + s(q⁺ − q⁻)`.
pub fn segment_path_jump<S: System + ?Sized>(
    system: &S,
    qm: &State,
    qp: &State,
    n: [f64; 2],
    rule: &LineRule,
) -> Result<State> {
    let dq: State = std::array::from_fn(|k| qp[k] - qm[k]);
    let mut out = [0.0; NVAR];
    if dq.iter().all(|d| *d == 0.0) {
        return Ok(out);
    }
    for (s, w) in rule.iter() {
        let psi: State = std::array::from_fn(|k| qm[k] + s * dq[k]);
        system.validate(&psi).map_err(|_| Error::PathState)?;
        let b = system.ncp_apply(&psi, n, &dq);
        for k in 0..NVAR {
            out[k] += w * b[k];
        }
    }
    Ok(out)
}

/// Numerical flux `Φ` (conservative part with dissipation) and path jump
/// `D̂ = ∫B̃(Ψ)·ñ ds (q⁺ − q⁻)` at one face point, both for the scaled
/// normal `ñ` pointing from `q⁻` to `q⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceTerm {
    pub flux: State,
    pub jump: State,
}

impl FaceTerm {
    /// Contribution `Φ + ½ D̂` subtracted by the element on the `q⁻` side.
    pub fn minus_side(&self) -> State {
        std::array::from_fn(|k| self.flux[k] + 0.5 * self.jump[k])
    }

    /// Contribution subtracted by the element on the `q⁺` side.
    pub fn plus_side(&self) -> State {
        std::array::from_fn(|k| -self.flux[k] + 0.5 * self.jump[k])
    }
}

fn split_normal(n: [f64; 3]) -> Result<(f64, [f64; 2])> {
    let s = n[0].hypot(n[1]);
    if !(s > 0.0) {
        return Err(Error::DegenerateFace);
    }
    Ok((s, [n[0] / s, n[1] / s]))
}

fn central<S: System + ?Sized>(system: &S, qm: &State, qp: &State, n: [f64; 3]) -> State {
    let fm = space_time_flux(system, qm, n);
    let fp = space_time_flux(system, qp, n);
    std::array::from_fn(|k| 0.5 * (fm[k] + fp[k]))
}

pub fn rusanov<S: System + ?Sized>(
    system: &S,
    qm: &State,
    qp: &State,
    n: [f64; 3],
    rule: &LineRule,
) -> Result<FaceTerm> {
    let (s, unit) = split_normal(n)?;
    let shifted = |q: &State| {
        system
            .eigenvalues(q, unit)
            .iter()
            .fold(0.0f64, |m, l| m.max((s * l + n[2]).abs()))
    };
    let smax = shifted(qm).max(shifted(qp));
    let mut flux = central(system, qm, qp, n);
    for k in 0..NVAR {
        flux[k] -= 0.5 * smax * (qp[k] - qm[k]);
    }
    let jump = segment_path_jump(system, qm, qp, [n[0], n[1]], rule)?;
    Ok(FaceTerm { flux, jump })
}

pub fn osher<S: System + ?Sized>(
    system: &S,
    qm: &State,
    qp: &State,
    n: [f64; 3],
    rule: &LineRule,
) -> Result<FaceTerm> {
    let (s, unit) = split_normal(n)?;
    let dq: State = std::array::from_fn(|k| qp[k] - qm[k]);
    let mut flux = central(system, qm, qp, n);
    let mut jump = [0.0; NVAR];
    if dq.iter().any(|d| *d != 0.0) {
        for (x, w) in rule.iter() {
            let psi: State = std::array::from_fn(|k| qm[k] + x * dq[k]);
            system.validate(&psi).map_err(|_| Error::PathState)?;
            let eig: Eigen = system.eigen(&psi, unit)?;
            let diss = eig.apply_fn(&dq, |l| (s * l + n[2]).abs());
            let b = system.ncp_apply(&psi, [n[0], n[1]], &dq);
            for k in 0..NVAR {
                flux[k] -= 0.5 * w * diss[k];
                jump[k] += w * b[k];
            }
        }
    }
    Ok(FaceTerm { flux, jump })
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    /// `max_i |∮ñ dS| / Σ|∂Cᵢ|`.
    pub gcl_max: f64,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub first_order_elements: usize,
    pub predictor_fallbacks: usize,
    pub face_fallbacks: usize,
    pub osher_fallbacks: usize,
    pub predictor_iterations_max: usize,
    pub predictor_iterations_mean: f64,
    pub retries: usize,
}

#[derive(Debug, Clone, Copy)]
enum FaceKind {
    Interior { j: usize, f: usize },
    Boundary(BoundaryKind),
}

#[derive(Debug, Clone, Copy)]
struct Face {
    i: usize,
    e: usize,
    kind: FaceKind,
}

struct FaceResult {
    to_i: State,
    to_j: State,
    normal: [f64; 3],
    measure: f64,
    fallback: bool,
    osher_fallback: bool,
}

enum Attempt {
    Done(Box<Vec<State>>, Vec<Point>, Vec<Point>, StepDiagnostics),
    Retry(Error),
}

/// Solver state: mesh, cell averages and time.
pub struct Solver<S: System> {
    pub system: S,
    pub config: SchemeConfig,
    pub mesh: Mesh,
    pub q: Vec<State>,
    pub time: f64,
    pub steps: usize,
    /// Node velocities of the last accepted step.
    pub node_velocity: Vec<Point>,
    re: ReferenceElement,
    stencils: StencilSet,
    path_rule: LineRule,
    faces: Vec<Face>,
    wall_edges: Vec<Vec<(usize, usize)>>,
}

impl<S: System> Solver<S> {
    /// Sets up the solver with cell averages of the conserved field `init`.
    pub fn new(
        mesh: Mesh,
        system: S,
        config: SchemeConfig,
        init: impl Fn(Point) -> Result<State> + Sync,
    ) -> Result<Self> {
        if !(config.cfl > 0.0) {
            return Err(Error::ParameterDomain("CFL number must be positive"));
        }
        let re = ReferenceElement::new(config.degree)?;
        let stencils = StencilSet::build(&mesh, config.degree);
        let rule = triangle_rule((2 * config.degree + 2).max(8))?;
        let q = (0..mesh.n_elements())
            .into_par_iter()
            .map(|i| {
                let v = mesh.vertices(i);
                let mut avg = [0.0; NVAR];
                for (p, w) in rule.iter() {
                    let val = init(crate::mesh::map_ref_to_phys(&v, p))?;
                    for k in 0..NVAR {
                        avg[k] += 2.0 * w * val[k];
                    }
                }
                system.validate(&avg).map_err(|e| e.in_element(i))?;
                Ok(avg)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_averages(mesh, system, config, q, re, stencils)
    }

    /// Sets up the solver from given cell averages.
    pub fn from_averages(mesh: Mesh, system: S, config: SchemeConfig, q: Vec<State>) -> Result<Self> {
        let re = ReferenceElement::new(config.degree)?;
        let stencils = StencilSet::build(&mesh, config.degree);
        Self::with_averages(mesh, system, config, q, re, stencils)
    }

    fn with_averages(
        mesh: Mesh,
        system: S,
        config: SchemeConfig,
        q: Vec<State>,
        re: ReferenceElement,
        stencils: StencilSet,
    ) -> Result<Self> {
        if q.len() != mesh.n_elements() {
            return Err(Error::IndexOutOfRange {
                index: q.len(),
                size: mesh.n_elements(),
            });
        }
        let mut faces = Vec::new();
        let mut wall_edges = vec![Vec::new(); mesh.n_nodes()];
        for i in 0..mesh.n_elements() {
            for (e, nb) in mesh.neighbors(i).iter().enumerate() {
                match *nb {
                    Neighbor::Interior { element, edge, .. } => {
                        if (i, e) < (element, edge) {
                            faces.push(Face {
                                i,
                                e,
                                kind: FaceKind::Interior { j: element, f: edge },
                            });
                        }
                    }
                    Neighbor::Boundary(kind) => {
                        faces.push(Face {
                            i,
                            e,
                            kind: FaceKind::Boundary(kind),
                        });
                        if kind == BoundaryKind::Wall {
                            let t = mesh.triangles()[i];
                            wall_edges[t[e]].push((i, e));
                            wall_edges[t[(e + 1) % 3]].push((i, e));
                        }
                    }
                }
            }
        }
        let path_rule = LineRule::gauss_legendre(config.path_points);
        let n_nodes = mesh.n_nodes();
        Ok(Self {
            system,
            config,
            mesh,
            q,
            time: 0.0,
            steps: 0,
            node_velocity: vec![[0.0; 2]; n_nodes],
            re,
            stencils,
            path_rule,
            faces,
            wall_edges,
        })
    }

    pub fn reference_element(&self) -> &ReferenceElement {
        &self.re
    }

    pub fn stencils(&self) -> &StencilSet {
        &self.stencils
    }

    /// WENO reconstruction of the current cell averages.
    pub fn reconstruction(&self) -> Reconstruction {
        self.weno().reconstruct(&self.q)
    }

    fn weno(&self) -> Weno<'_, S> {
        Weno {
            mesh: &self.mesh,
            stencils: &self.stencils,
            re: &self.re,
            system: &self.system,
            config: self.config.weno,
        }
    }

    /// `Δt = CFL · minᵢ ρᵢ / λᵢ`, further limited so that no vertex moves
    /// farther than `max_displacement · ρᵢ` at the cell-average velocity.
    pub fn compute_dt(&self) -> Result<f64> {
        let dt = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|i| {
                let rho = self.mesh.incircle_radius(i);
                let lam = self.system.max_wave_speed(&self.q[i]);
                let mut dt = self.config.cfl * rho / lam;
                let v = self.config.motion.velocity(
                    &self.system,
                    &self.q[i],
                    self.mesh.barycenter(i),
                    self.time,
                );
                let speed = v[0].hypot(v[1]);
                if speed > 0.0 {
                    dt = dt.min(self.config.max_displacement * rho / speed);
                }
                dt
            })
            .reduce(|| f64::INFINITY, f64::min);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NonPositiveTimeStep(dt));
        }
        Ok(dt)
    }

    /// Advances to `t_end`, calling `observer` after every step.
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut observer: impl FnMut(&Self, &StepDiagnostics),
    ) -> Result<()> {
        while self.time < t_end * (1.0 - 1e-14) {
            let remaining = t_end - self.time;
            let dt = self.compute_dt()?.min(remaining);
            let mut d = self.step(dt)?;
            if d.dt == remaining {
                self.time = t_end;
                d.time = t_end;
            }
            observer(self, &d);
        }
        Ok(())
    }

    /// One step of size at most `dt`; the step is repeated with `Δt/2` after
    /// a predictor divergence or an excessive vertex displacement.
    pub fn step(&mut self, dt: f64) -> Result<StepDiagnostics> {
        let mut dt = dt;
        let mut retries = 0;
        let mut divergences = 0;
        loop {
            match self.try_step(dt)? {
                Attempt::Done(q, nodes, velocity, mut d) => {
                    self.q = *q;
                    self.mesh.set_nodes(nodes)?;
                    self.node_velocity = velocity;
                    self.time += dt;
                    self.steps += 1;
                    d.step = self.steps;
                    d.time = self.time;
                    d.retries = retries;
                    return Ok(d);
                }
                Attempt::Retry(err) => {
                    if matches!(err, Error::PredictorDivergence { .. }) {
                        divergences += 1;
                        if divergences > 1 {
                            return Err(err);
                        }
                    }
                    retries += 1;
                    if retries > 6 {
                        return Err(err);
                    }
                    log::warn!("step at t={} retried with dt/2: {err}", self.time);
                    dt *= 0.5;
                }
            }
        }
    }

    fn try_step(&self, dt: f64) -> Result<Attempt> {
        let mesh = &self.mesh;
        let re = &self.re;
        let ne = mesh.n_elements();
        let recon = self.reconstruction();
        let mut predictor = Predictor::new(re, &self.system, &self.config.motion);
        predictor.options = self.config.predictor;
        let psi0 = re.spatial.eval(0, [0.0, 0.0])?;
        let preds: Vec<Result<(ElementPrediction, bool)>> = (0..ne)
            .into_par_iter()
            .map(|i| {
                let v = mesh.vertices(i);
                match predictor.predict(i, recon.element(i), &v, self.time, dt) {
                    Ok(p) => Ok((p, false)),
                    Err(Error::InvalidState { .. }) => {
                        let mut w = vec![[0.0; NVAR]; re.n_modes()];
                        w[0] = self.q[i].map(|x| x / psi0);
                        predictor
                            .predict(i, &w, &v, self.time, dt)
                            .map(|p| (p, true))
                            .map_err(|e| e.in_element(i))
                    }
                    Err(e) => Err(e),
                }
            })
            .collect();
        let mut pred = Vec::with_capacity(ne);
        let mut predictor_fallbacks = 0;
        for r in preds {
            match r {
                Ok((p, fb)) => {
                    predictor_fallbacks += fb as usize;
                    pred.push(p);
                }
                Err(e @ Error::PredictorDivergence { .. }) => return Ok(Attempt::Retry(e)),
                Err(e) => return Err(e),
            }
        }

        let velocity = self.node_velocities(&pred);
        let old_nodes = mesh.nodes();
        let new_nodes: Vec<Point> = old_nodes
            .iter()
            .zip(&velocity)
            .map(|(x, v)| [x[0] + dt * v[0], x[1] + dt * v[1]])
            .collect();
        for i in 0..ne {
            let limit = self.config.max_displacement * mesh.incircle_radius(i);
            for &k in &mesh.triangles()[i] {
                let d = dt * velocity[k][0].hypot(velocity[k][1]);
                if d > limit * (1.0 + 1e-12) {
                    return Ok(Attempt::Retry(Error::TangledMesh {
                        element: i,
                        area: signed_area(&mesh.vertices_with(&new_nodes, i)),
                    }));
                }
            }
        }

        let results: Vec<Result<FaceResult>> = self
            .faces
            .par_iter()
            .map(|face| self.face_integral(face, &pred, &new_nodes, dt))
            .collect();
        let mut acc = vec![[0.0; NVAR]; ne];
        let mut gcl = vec![[0.0; 3]; ne];
        let mut measure = vec![0.0; ne];
        let (mut face_fallbacks, mut osher_fallbacks) = (0, 0);
        for (face, r) in self.faces.iter().zip(results) {
            let r = r?;
            face_fallbacks += r.fallback as usize;
            osher_fallbacks += r.osher_fallback as usize;
            for k in 0..NVAR {
                acc[face.i][k] += r.to_i[k];
            }
            for d in 0..3 {
                gcl[face.i][d] += r.normal[d];
            }
            measure[face.i] += r.measure;
            if let FaceKind::Interior { j, .. } = face.kind {
                for k in 0..NVAR {
                    acc[j][k] += r.to_j[k];
                }
                for d in 0..3 {
                    gcl[j][d] -= r.normal[d];
                }
                measure[j] += r.measure;
            }
        }

        let updated: Vec<Result<(State, f64)>> = (0..ne)
            .into_par_iter()
            .map(|i| {
                let a0 = mesh.area(i);
                let a1 = signed_area(&mesh.vertices_with(&new_nodes, i));
                if !(a1 > 0.0) {
                    return Err(Error::TangledMesh { element: i, area: a1 });
                }
                let vol = pred[i].volume_integral(re, dt, i)?;
                let mut q: State =
                    std::array::from_fn(|k| (a0 * self.q[i][k] - acc[i][k] + vol[k]) / a1);
                self.system.clamp_average(&mut q);
                self.system.validate(&q).map_err(|e| e.in_element(i))?;
                let g = gcl[i];
                let res = g[0].hypot(g[1]).hypot(g[2] + a1 - a0);
                Ok((q, res / (measure[i] + a0 + a1)))
            })
            .collect();
        let mut q_new = Vec::with_capacity(ne);
        let mut d = StepDiagnostics {
            dt,
            min: vec![f64::INFINITY; NVAR],
            max: vec![f64::NEG_INFINITY; NVAR],
            first_order_elements: recon.first_order.len(),
            predictor_fallbacks,
            face_fallbacks,
            osher_fallbacks,
            ..Default::default()
        };
        for r in updated {
            let (q, g) = r?;
            d.gcl_max = d.gcl_max.max(g);
            for k in 0..NVAR {
                d.min[k] = d.min[k].min(q[k]);
                d.max[k] = d.max[k].max(q[k]);
            }
            q_new.push(q);
        }
        let iters: Vec<usize> = pred.iter().map(|p| p.iterations).collect();
        d.predictor_iterations_max = iters.iter().copied().max().unwrap_or(0);
        d.predictor_iterations_mean = iters.iter().sum::<usize>() as f64 / ne.max(1) as f64;
        Ok(Attempt::Done(Box::new(q_new), new_nodes, velocity, d))
    }

    /// Vertex velocities averaged over the incident elements; wall nodes
    /// slide along the wall and wall corners stay fixed.
    fn node_velocities(&self, pred: &[ElementPrediction]) -> Vec<Point> {
        let mesh = &self.mesh;
        if self.config.motion.is_eulerian() {
            return vec![[0.0; 2]; mesh.n_nodes()];
        }
        (0..mesh.n_nodes())
            .into_par_iter()
            .map(|k| {
                let inc = mesh.node_elements(k);
                let mut v = [0.0; 2];
                for &(j, m) in inc {
                    let c = pred[j].vertex_velocity(&self.re, m);
                    v[0] += c[0];
                    v[1] += c[1];
                }
                let n = inc.len() as f64;
                let mut v = [v[0] / n, v[1] / n];
                let mut normals: Vec<Point> = Vec::new();
                for &(i, e) in &self.wall_edges[k] {
                    let p = mesh.vertices(i);
                    let (a, b) = (p[e], p[(e + 1) % 3]);
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let nrm = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
                    if normals
                        .iter()
                        .all(|o| (o[0] * nrm[1] - o[1] * nrm[0]).abs() > 1e-8)
                    {
                        normals.push(nrm);
                    }
                }
                match normals.len() {
                    0 => {}
                    1 => {
                        let vn = v[0] * normals[0][0] + v[1] * normals[0][1];
                        v = [v[0] - vn * normals[0][0], v[1] - vn * normals[0][1]];
                    }
                    _ => v = [0.0; 2],
                }
                v
            })
            .collect()
    }

    fn face_integral(
        &self,
        face: &Face,
        pred: &[ElementPrediction],
        new_nodes: &[Point],
        dt: f64,
    ) -> Result<FaceResult> {
        let re = &self.re;
        let mesh = &self.mesh;
        let v0 = mesh.vertices(face.i);
        let v1 = mesh.vertices_with(new_nodes, face.i);
        let e = face.e;
        let geo = SpaceTimeFace {
            a0: v0[e],
            b0: v0[(e + 1) % 3],
            a1: v1[e],
            b1: v1[(e + 1) % 3],
            dt,
        };
        let rule = &re.face_rule;
        let np = rule.len();
        let mut out = FaceResult {
            to_i: [0.0; NVAR],
            to_j: [0.0; NVAR],
            normal: [0.0; 3],
            measure: 0.0,
            fallback: false,
            osher_fallback: false,
        };
        let avg_i = self.q[face.i];
        let avg_j = match face.kind {
            FaceKind::Interior { j, .. } => Some(self.q[j]),
            FaceKind::Boundary(_) => None,
        };
        for g in 0..np {
            let chi = rule.points[g];
            for h in 0..np {
                let tau = rule.points[h];
                let w = rule.weights[g] * rule.weights[h];
                let n = geo.normal(chi, tau);
                let (s, unit) = split_normal(n).map_err(|e| e.in_element(face.i))?;
                let ghost = |q: &State| match face.kind {
                    FaceKind::Interior { .. } => unreachable!(),
                    FaceKind::Boundary(BoundaryKind::Transmissive) => *q,
                    FaceKind::Boundary(BoundaryKind::Wall) => {
                        self.system.reflect(q, unit, geo.velocity(chi))
                    }
                };
                let qm = pred[face.i].trace(re, e, g * np + h);
                let qp = match face.kind {
                    FaceKind::Interior { j, f } => pred[j].trace(re, f, (np - 1 - g) * np + h),
                    FaceKind::Boundary(BoundaryKind::Transmissive) => ghost(&avg_i),
                    FaceKind::Boundary(_) => ghost(&qm),
                };
                let high = if self.system.validate(&qm).is_ok() && self.system.validate(&qp).is_ok()
                {
                    self.point_term(&qm, &qp, n, &mut out.osher_fallback).ok()
                } else {
                    None
                };
                let term = match high {
                    Some(t) => t,
                    None => {
                        out.fallback = true;
                        let qp = avg_j.unwrap_or_else(|| ghost(&avg_i));
                        self.point_term(&avg_i, &qp, n, &mut out.osher_fallback)
                            .map_err(|e| e.in_element(face.i))?
                    }
                };
                let mi = term.minus_side();
                let pj = term.plus_side();
                for k in 0..NVAR {
                    out.to_i[k] += w * mi[k];
                    out.to_j[k] += w * pj[k];
                }
                for d in 0..3 {
                    out.normal[d] += w * n[d];
                }
                out.measure += w * s.hypot(n[2]);
            }
        }
        Ok(out)
    }

    fn point_term(&self, qm: &State, qp: &State, n: [f64; 3], osher_fb: &mut bool) -> Result<FaceTerm> {
        match self.config.flux {
            FluxKind::Rusanov => rusanov(&self.system, qm, qp, n, &self.path_rule),
            FluxKind::Osher => match osher(&self.system, qm, qp, n, &self.path_rule) {
                Ok(t) => Ok(t),
                Err(Error::PathState) => Err(Error::PathState),
                Err(_) => {
                    *osher_fb = true;
                    rusanov(&self.system, qm, qp, n, &self.path_rule)
                }
            },
        }
    }

    /// Sum of `|Tᵢ| Qᵢ` over all elements.
    pub fn totals(&self) -> State {
        let mut t = [0.0; NVAR];
        for i in 0..self.mesh.n_elements() {
            let a = self.mesh.area(i);
            for k in 0..NVAR {
                t[k] += a * self.q[i][k];
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{structured, StructuredSpec};
    use crate::model::{BaerNunziato, LinearAdvection, LinearSystem, Phase};

    fn bn() -> BaerNunziato {
        BaerNunziato::new(Phase::new(1.4, 0.0), Phase::new(1.4, 0.0))
    }

    #[test]
    fn static_face_normal() {
        let f = SpaceTimeFace {
            a0: [1.0, 0.0],
            b0: [1.0, 1.0],
            a1: [1.0, 0.0],
            b1: [1.0, 1.0],
            dt: 0.1,
        };
        let n = f.normal(0.3, 0.6);
        assert_eq!(n, [0.1, 0.0, 0.0]);
        assert_eq!(normal_velocity(n), 0.0);
    }

    #[test]
    fn translating_face_recovers_normal_velocity() {
        let v = [0.7, -1.3];
        let dt = 0.2;
        let (a, b) = ([0.0, 0.0], [0.6, 0.8]);
        let f = SpaceTimeFace {
            a0: a,
            b0: b,
            a1: [a[0] + v[0] * dt, a[1] + v[1] * dt],
            b1: [b[0] + v[0] * dt, b[1] + v[1] * dt],
            dt,
        };
        let n = f.normal(0.25, 0.5);
        let unit = [0.8, -0.6];
        assert!((normal_velocity(n) - (v[0] * unit[0] + v[1] * unit[1])).abs() < 1e-14);
    }

    #[test]
    fn moving_face_normal_matches_finite_differences() {
        let f = SpaceTimeFace {
            a0: [0.1, 0.2],
            b0: [0.9, 0.4],
            a1: [0.2, 0.1],
            b1: [1.1, 0.7],
            dt: 0.3,
        };
        let pos = |c: f64, t: f64| {
            let p = f.point(c, t);
            [p[0], p[1], t * f.dt]
        };
        let h = 1e-6;
        for (c, t) in [(0.2, 0.3), (0.7, 0.9), (0.5, 0.1)] {
            let dc: Vec<f64> = (0..3)
                .map(|k| (pos(c + h, t)[k] - pos(c - h, t)[k]) / (2.0 * h))
                .collect();
            let dtau: Vec<f64> = (0..3)
                .map(|k| (pos(c, t + h)[k] - pos(c, t - h)[k]) / (2.0 * h))
                .collect();
            let cross = [
                dc[1] * dtau[2] - dc[2] * dtau[1],
                dc[2] * dtau[0] - dc[0] * dtau[2],
                dc[0] * dtau[1] - dc[1] * dtau[0],
            ];
            let n = f.normal(c, t);
            for k in 0..3 {
                assert!((n[k] - cross[k]).abs() < 1e-10);
            }
        }
    }

    fn rp1() -> (State, State) {
        let s = bn();
        (
            s.from_primitive(&[1.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.4]).unwrap(),
            s.from_primitive(&[2.0, 0.0, 0.0, 2.0, 1.5, 0.0, 0.0, 2.0, 0.8]).unwrap(),
        )
    }

    #[test]
    fn path_jump_properties() {
        let s = bn();
        let rule = LineRule::gauss_legendre(3);
        let (l, _) = rp1();
        assert_eq!(segment_path_jump(&s, &l, &l, [1.0, 0.0], &rule).unwrap(), [0.0; NVAR]);
        // equal volume fractions: momentum and energy rows vanish
        let a = s.from_primitive(&[1.0, 0.2, 0.0, 1.0, 0.5, 0.0, 0.1, 1.0, 0.4]).unwrap();
        let b = s.from_primitive(&[2.0, -0.3, 0.5, 3.0, 1.0, 0.4, 0.0, 2.0, 0.4]).unwrap();
        let d = segment_path_jump(&s, &a, &b, [0.6, 0.8], &rule).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-14), "{d:?}");
        // φ row of the RP1 jump with moving solid: ū_I (φ⁺ − φ⁻)
        let l = s.from_primitive(&[1.0, 0.3, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.4]).unwrap();
        let r = s.from_primitive(&[2.0, -0.5, 0.0, 2.0, 1.5, 0.0, 0.0, 2.0, 0.8]).unwrap();
        let d = segment_path_jump(&s, &l, &r, [1.0, 0.0], &rule).unwrap();
        let fine = LineRule::gauss_legendre(64);
        let mut ubar = 0.0;
        for (x, w) in fine.iter() {
            let p: State = std::array::from_fn(|k| l[k] + x * (r[k] - l[k]));
            ubar += w * p[1] / p[0];
        }
        let d64 = segment_path_jump(&s, &l, &r, [1.0, 0.0], &fine).unwrap();
        assert!((d64[8] - ubar * 0.4).abs() < 1e-13);
        assert!((d[8] - ubar * 0.4).abs() < 1e-3);
    }

    #[test]
    fn flux_consistency() {
        let s = bn();
        let rule = LineRule::gauss_legendre(3);
        let (q, _) = rp1();
        let n = [0.3, -0.4, 0.05];
        let exact = space_time_flux(&s, &q, n);
        for t in [rusanov(&s, &q, &q, n, &rule).unwrap(), osher(&s, &q, &q, n, &rule).unwrap()] {
            for k in 0..NVAR {
                assert!((t.flux[k] - exact[k]).abs() < 1e-13 * (1.0 + exact[k].abs()));
                assert_eq!(t.jump[k], 0.0);
            }
        }
    }

    #[test]
    fn osher_is_exact_upwinding_for_linear_systems() {
        let r = crate::linalg::Mat9::from_fn(|i, j| {
            if i == j {
                2.0
            } else {
                0.1 * ((i * 3 + j * 7) % 5) as f64 - 0.2
            }
        });
        let lx = [-2.0, -1.0, -0.5, 0.0, 0.3, 0.5, 1.0, 1.5, 2.5];
        let ly = [1.0, 0.5, -0.5, 0.2, -1.3, 0.8, 0.0, -0.7, 2.0];
        let sys = LinearSystem::new(r, lx, ly, 0.4).unwrap();
        let rule = LineRule::gauss_legendre(3);
        let qm = [1.0, 2.0, -1.0, 0.5, 0.0, 3.0, 1.0, -2.0, 0.7];
        let qp = [0.5, 1.0, 1.0, 0.0, 2.0, -1.0, 0.3, 0.2, 0.1];
        let n = [0.6, 0.8, 0.0];
        let t = osher(&sys, &qm, &qp, n, &rule).unwrap();
        let a = sys.matrix([0.6, 0.8]);
        let eig = sys.eigen(&qm, [0.6, 0.8]).unwrap();
        let dq: State = std::array::from_fn(|k| qp[k] - qm[k]);
        let abs = eig.apply_fn(&dq, f64::abs);
        let c = central(&sys, &qm, &qp, n);
        // Φ + ½D on the minus side equals the upwind flux A⁺-split
        let am = crate::linalg::mat_vec(&a, &dq);
        for k in 0..NVAR {
            assert!((t.flux[k] - (c[k] - 0.5 * abs[k])).abs() < 1e-12);
        }
        let total: State = std::array::from_fn(|k| {
            space_time_flux(&sys, &qm, n)[k] - t.minus_side()[k] + 0.5 * (am[k] - abs[k])
        });
        assert!(total.iter().all(|v| v.abs() < 1e-12), "{total:?}");
    }

    #[test]
    fn rusanov_dissipation_vanishes_for_a_contact_in_its_frame() {
        let s = bn();
        let rule = LineRule::gauss_legendre(3);
        // solid contact moving with u = 0.4; gas at rest with the same state
        let l = s.from_primitive(&[1.0, 0.4, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.4]).unwrap();
        let r = s.from_primitive(&[3.0, 0.4, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.4]).unwrap();
        let n = [1.0, 0.0, -0.4];
        let t = osher(&s, &l, &r, n, &rule).unwrap();
        let c = central(&s, &l, &r, n);
        // characteristic upwinding: the contact wave has zero speed here
        assert!((t.flux[8] - c[8]).abs() < 1e-12);
        assert!((t.flux[4] - c[4]).abs() < 1e-12);
    }

    #[test]
    fn eulerian_advection_conserves_and_keeps_constants() {
        let mesh = structured(&StructuredSpec::periodic_square(8, [0.0, 1.0])).unwrap();
        let config = SchemeConfig {
            degree: 2,
            flux: FluxKind::Rusanov,
            motion: MeshMotion::Eulerian,
            ..Default::default()
        };
        let sys = LinearAdvection { velocity: [1.0, 0.5] };
        let mut solver = Solver::new(mesh, sys, config, |p| {
            Ok(std::array::from_fn(|k| {
                2.0 + (std::f64::consts::TAU * (p[0] + k as f64 * 0.1)).sin()
            }))
        })
        .unwrap();
        let before = solver.totals();
        for _ in 0..3 {
            let dt = solver.compute_dt().unwrap();
            let d = solver.step(dt).unwrap();
            assert!(d.gcl_max < 1e-12);
        }
        let after = solver.totals();
        for k in 0..NVAR {
            assert!((after[k] - before[k]).abs() < 1e-12 * before[k].abs());
        }
    }

    #[test]
    fn uniform_flow_on_moving_mesh_stays_uniform() {
        let s = bn();
        let q0 = s
            .from_primitive(&[1.0, 0.5, -0.3, 1.0, 0.5, 0.2, 0.1, 1.0, 0.4])
            .unwrap();
        let mesh = structured(&StructuredSpec::periodic_square(8, [0.0, 1.0])).unwrap();
        let config = SchemeConfig {
            degree: 2,
            flux: FluxKind::Osher,
            motion: MeshMotion::Lagrangian,
            ..Default::default()
        };
        let mut solver = Solver::new(mesh, s, config, |_| Ok(q0)).unwrap();
        for _ in 0..5 {
            let dt = solver.compute_dt().unwrap();
            let d = solver.step(dt).unwrap();
            assert!(d.gcl_max < 1e-12, "{}", d.gcl_max);
        }
        for q in &solver.q {
            for k in 0..NVAR {
                assert!((q[k] - q0[k]).abs() <= 1e-12 * (1.0 + q0[k].abs()), "{q:?}");
            }
        }
        assert!(solver.mesh.area(0) > 0.0);
    }

    #[test]
    fn dt_scales_with_wave_speed() {
        let s = bn();
        let mesh = structured(&StructuredSpec::periodic_square(4, [0.0, 1.0])).unwrap();
        let q = |p: f64| s.from_primitive(&[1.0, 0.0, 0.0, p, 1.0, 0.0, 0.0, p, 0.5]).unwrap();
        let config = SchemeConfig {
            motion: MeshMotion::Eulerian,
            ..Default::default()
        };
        let a = Solver::new(mesh.clone(), s, config.clone(), |_| Ok(q(1.0))).unwrap();
        let b = Solver::new(mesh, s, config, |_| Ok(q(4.0))).unwrap();
        let (da, db) = (a.compute_dt().unwrap(), b.compute_dt().unwrap());
        assert!((da / db - 2.0).abs() < 1e-12);
        let c = (1.4f64).sqrt();
        let rho = a.mesh.incircle_radius(0);
        assert!((da - 0.5 * rho / c).abs() < 1e-14);
    }
}
