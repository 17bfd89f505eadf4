//! Element-local space-time predictor on moving triangles.
//!
//! The reconstruction polynomial `w_h` of an element is evolved in the weak
//! sense inside the space-time element `T_e × [tⁿ, tⁿ⁺¹]`. Both the solution
//! and the geometry are nodal expansions in the space-time basis `θ` and are
//! found together by a fixed-point iteration
//!
//! ```text
//! q̂ = K1⁻¹ (F0 ŵ + M Ĥ(q̂, x̂)),     x̂ = x̂ⁿ + Δt K1⁻¹ M V̂(q̂, x̂)
//! ```
//!
//! where `Ĥ` holds the nodal values of `Δt (S − ∇·F − B·∇Q) + Δt V·∇Q`
//! written in reference coordinates.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::model::{State, System, NVAR};

/// Mesh velocity `V(x, t)` supplied by the caller.
pub type VelocityField = Arc<dyn Fn(Point, f64) -> Point + Send + Sync>;

/// Rule that assigns a velocity to every space-time node.
#[derive(Clone)]
pub enum MeshMotion {
    /// Fixed mesh.
    Eulerian,
    /// Nodes follow the velocity returned by [`System::lagrangian_velocity`].
    Lagrangian,
    /// Nodes follow an external field.
    Prescribed(VelocityField),
    /// Lagrangian velocity plus an external field.
    LagrangianPlus(VelocityField),
}

impl MeshMotion {
    pub fn velocity<S: System + ?Sized>(&self, system: &S, q: &State, x: Point, t: f64) -> Point {
        match self {
            Self::Eulerian => [0.0, 0.0],
            Self::Lagrangian => system.lagrangian_velocity(q),
            Self::Prescribed(f) => f(x, t),
            Self::LagrangianPlus(f) => {
                let u = system.lagrangian_velocity(q);
                let v = f(x, t);
                [u[0] + v[0], u[1] + v[1]]
            }
        }
    }

    pub fn is_eulerian(&self) -> bool {
        matches!(self, Self::Eulerian)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Eulerian => "eulerian",
            Self::Lagrangian => "lagrangian",
            Self::Prescribed(_) => "prescribed",
            Self::LagrangianPlus(_) => "lagrangian+prescribed",
        }
    }
}

impl fmt::Debug for MeshMotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshMotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lagrangian" => Ok(Self::Lagrangian),
            "eulerian" => Ok(Self::Eulerian),
            _ => Err(Error::Config(format!(
                "unknown mesh velocity `{s}` (expected lagrangian or eulerian)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorOptions {
    /// Bound on the scaled update between two iterates.
    pub tolerance: f64,
    /// Iteration cap; `None` means `2(M+1) + 4`.
    pub max_iterations: Option<usize>,
}

impl Default for PredictorOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: None,
        }
    }
}

impl PredictorOptions {
    pub fn cap(&self, degree: usize) -> usize {
        self.max_iterations.unwrap_or(2 * (degree + 1) + 4)
    }
}

/// Converged nodal data of one space-time element.
#[derive(Debug, Clone)]
pub struct ElementPrediction {
    pub q: Vec<State>,
    pub x: Vec<Point>,
    pub v: Vec<Point>,
    /// Nodal `S − B·∇Q`.
    pub sp: Vec<State>,
    pub iterations: usize,
    pub residual: f64,
}

impl ElementPrediction {
    /// `q_h` at space-time reference point `(ξ, η, τ)`.
    pub fn eval(&self, re: &ReferenceElement, p: [f64; 3]) -> State {
        combine(&re.spacetime.eval_all(p), &self.q)
    }

    /// `q_h` at face quadrature point `k` (index `g·n + h`) of local edge `e`.
    pub fn trace(&self, re: &ReferenceElement, edge: usize, k: usize) -> State {
        combine(&re.face_theta[edge][k], &self.q)
    }

    /// Time-averaged velocity of local vertex `m`.
    pub fn vertex_velocity(&self, re: &ReferenceElement, m: usize) -> Point {
        let w = &re.vertex_time_weights[m];
        let mut v = [0.0; 2];
        for (l, wl) in w.iter().enumerate() {
            v[0] += wl * self.v[l][0];
            v[1] += wl * self.v[l][1];
        }
        v
    }

    /// `∫∫ (S − B·∇Q) dx dt` over the predicted space-time element.
    pub fn volume_integral(&self, re: &ReferenceElement, dt: f64, element: usize) -> Result<State> {
        let mut out = [0.0; NVAR];
        for vp in &re.volume_points {
            let (mut xxi, mut xeta) = ([0.0; 2], [0.0; 2]);
            for l in 0..self.x.len() {
                for d in 0..2 {
                    xxi[d] += vp.d_xi[l] * self.x[l][d];
                    xeta[d] += vp.d_eta[l] * self.x[l][d];
                }
            }
            let det = xxi[0] * xeta[1] - xeta[0] * xxi[1];
            if !(det > 0.0) {
                return Err(Error::InvertedElement { element, det });
            }
            let f = vp.weight * det * dt;
            let val = combine(&vp.theta, &self.sp);
            for k in 0..NVAR {
                out[k] += f * val[k];
            }
        }
        Ok(out)
    }
}

fn combine(weights: &[f64], values: &[State]) -> State {
    let mut out = [0.0; NVAR];
    for (w, v) in weights.iter().zip(values) {
        if *w != 0.0 {
            for k in 0..NVAR {
                out[k] += w * v[k];
            }
        }
    }
    out
}

/// Space-time predictor for one system and mesh-motion rule.
pub struct Predictor<'a, S: ?Sized> {
    pub re: &'a ReferenceElement,
    pub system: &'a S,
    pub motion: &'a MeshMotion,
    pub options: PredictorOptions,
}

impl<'a, S: System + ?Sized> Predictor<'a, S> {
    pub fn new(re: &'a ReferenceElement, system: &'a S, motion: &'a MeshMotion) -> Self {
        Self {
            re,
            system,
            motion,
            options: PredictorOptions::default(),
        }
    }

    /// Evolves modal data `w` of `element`, whose vertices at `t` are
    /// `vertices`, over `[t, t + dt]`.
    pub fn predict(
        &self,
        element: usize,
        w: &[State],
        vertices: &[Point; 3],
        t: f64,
        dt: f64,
    ) -> Result<ElementPrediction> {
        let re = self.re;
        let n = re.n_nodes();
        let ns = re.spacetime.n_space();
        let taus = re.spacetime.time_nodes();

        let mut q0 = vec![[0.0; NVAR]; n];
        for (l, ql) in q0.iter_mut().enumerate() {
            *ql = combine(re.k1_inv_f0.row(l), w);
        }
        let x0: Vec<Point> = (0..n)
            .map(|l| {
                let [xi, eta] = re.spacetime.spatial_nodes()[l % ns];
                let (a, b, c) = (vertices[0], vertices[1], vertices[2]);
                [
                    a[0] + xi * (b[0] - a[0]) + eta * (c[0] - a[0]),
                    a[1] + xi * (b[1] - a[1]) + eta * (c[1] - a[1]),
                ]
            })
            .collect();
        let times: Vec<f64> = (0..n).map(|l| t + taus[l / ns] * dt).collect();

        let mut scale = [f64::MIN_POSITIVE; NVAR];
        for ql in &q0 {
            let s = self.system.residual_scale(ql);
            for k in 0..NVAR {
                scale[k] = scale[k].max(s[k]);
            }
        }
        let h = (2.0 * crate::mesh::signed_area(vertices).abs()).sqrt();

        let mut q = q0.clone();
        let mut x = x0.clone();
        let mut v = self.velocities(&q, &x, &times);
        let eulerian = self.motion.is_eulerian();
        let cap = self.options.cap(re.degree);
        let mut residual = f64::INFINITY;
        for it in 1..=cap {
            let mut x_new = x0.clone();
            if !eulerian {
                for (l, xl) in x_new.iter_mut().enumerate() {
                    let row = re.k1_inv_mass.row(l);
                    for (m, vm) in v.iter().enumerate() {
                        xl[0] += dt * row[m] * vm[0];
                        xl[1] += dt * row[m] * vm[1];
                    }
                }
            }
            let (hh, sp) = self.rates(element, &q, &x_new, dt)?;
            let mut q_new = q0.clone();
            for (l, ql) in q_new.iter_mut().enumerate() {
                let d = combine(re.k1_inv_mass.row(l), &hh);
                for k in 0..NVAR {
                    ql[k] += d[k];
                }
            }
            residual = 0.0f64;
            for l in 0..n {
                for k in 0..NVAR {
                    residual = residual.max((q_new[l][k] - q[l][k]).abs() / scale[k]);
                }
                for d in 0..2 {
                    residual = residual.max((x_new[l][d] - x[l][d]).abs() / h);
                }
            }
            if residual.is_nan() {
                residual = f64::INFINITY;
            }
            q = q_new;
            x = x_new;
            v = self.velocities(&q, &x, &times);
            if residual <= self.options.tolerance {
                for ql in &q {
                    self.system.validate(ql)?;
                }
                return Ok(ElementPrediction {
                    q,
                    x,
                    v,
                    sp,
                    iterations: it,
                    residual,
                });
            }
            if !residual.is_finite() {
                break;
            }
        }
        Err(Error::PredictorDivergence { element, residual })
    }

    fn velocities(&self, q: &[State], x: &[Point], times: &[f64]) -> Vec<Point> {
        q.iter()
            .zip(x)
            .zip(times)
            .map(|((ql, xl), tl)| self.motion.velocity(self.system, ql, *xl, *tl))
            .collect()
    }

    /// Nodal `Ĥ` and `S − B·∇Q` for the current iterates.
    fn rates(
        &self,
        element: usize,
        q: &[State],
        x: &[Point],
        dt: f64,
    ) -> Result<(Vec<State>, Vec<State>)> {
        let re = self.re;
        let ns = re.spacetime.n_space();
        let nt = re.spacetime.n_time();
        let fluxes: Vec<[State; 2]> = q.iter().map(|ql| self.system.flux(ql)).collect();
        let mut hh = vec![[0.0; NVAR]; ns * nt];
        let mut sp = vec![[0.0; NVAR]; ns * nt];
        for ti in 0..nt {
            for si in 0..ns {
                let l = ti * ns + si;
                let (mut xxi, mut xeta, mut xtau) = ([0.0; 2], [0.0; 2], [0.0; 2]);
                let mut qxi = [0.0; NVAR];
                let mut qeta = [0.0; NVAR];
                let mut div_xi = [[0.0; NVAR]; 2];
                let mut div_eta = [[0.0; NVAR]; 2];
                let (rxi, reta) = (re.d_xi_s.row(si), re.d_eta_s.row(si));
                for s2 in 0..ns {
                    let m = ti * ns + s2;
                    let (a, b) = (rxi[s2], reta[s2]);
                    for d in 0..2 {
                        xxi[d] += a * x[m][d];
                        xeta[d] += b * x[m][d];
                    }
                    for k in 0..NVAR {
                        qxi[k] += a * q[m][k];
                        qeta[k] += b * q[m][k];
                        for d in 0..2 {
                            div_xi[d][k] += a * fluxes[m][d][k];
                            div_eta[d][k] += b * fluxes[m][d][k];
                        }
                    }
                }
                let rtau = re.d_tau_t.row(ti);
                for t2 in 0..nt {
                    let m = t2 * ns + si;
                    for d in 0..2 {
                        xtau[d] += rtau[t2] * x[m][d];
                    }
                }
                let det = xxi[0] * xeta[1] - xeta[0] * xxi[1];
                if !(det > 0.0) {
                    return Err(Error::InvertedElement { element, det });
                }
                let (xi_x, xi_y) = (xeta[1] / det, -xeta[0] / det);
                let (eta_x, eta_y) = (-xxi[1] / det, xxi[0] / det);
                let xi_t = -(xi_x * xtau[0] + xi_y * xtau[1]);
                let eta_t = -(eta_x * xtau[0] + eta_y * xtau[1]);
                let mut qx = [0.0; NVAR];
                let mut qy = [0.0; NVAR];
                let mut div = [0.0; NVAR];
                for k in 0..NVAR {
                    qx[k] = qxi[k] * xi_x + qeta[k] * eta_x;
                    qy[k] = qxi[k] * xi_y + qeta[k] * eta_y;
                    div[k] = div_xi[0][k] * xi_x
                        + div_eta[0][k] * eta_x
                        + div_xi[1][k] * xi_y
                        + div_eta[1][k] * eta_y;
                }
                let p = self.system.ncp_product(&q[l], &qx, &qy);
                let s = self.system.source(&q[l]);
                for k in 0..NVAR {
                    sp[l][k] = s[k] - p[k];
                    hh[l][k] = dt * (sp[l][k] - div[k]) - (qxi[k] * xi_t + qeta[k] * eta_t);
                }
            }
        }
        Ok((hh, sp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BaerNunziato, LinearAdvection, Phase};

    const TRI: [Point; 3] = [[0.1, 0.2], [0.5, 0.25], [0.2, 0.6]];

    /// Modal coefficients of `f` on the triangle `v`.
    fn project(re: &ReferenceElement, v: &[Point; 3], f: impl Fn(Point) -> State) -> Vec<State> {
        let rule = crate::basis::triangle_rule(2 * re.degree + 2).unwrap();
        let mut w = vec![[0.0; NVAR]; re.n_modes()];
        for (p, wq) in rule.points.iter().zip(&rule.weights) {
            let val = f(crate::mesh::map_ref_to_phys(v, *p));
            for (m, wm) in w.iter_mut().enumerate() {
                let psi = re.spatial.eval(m, *p).unwrap();
                for k in 0..NVAR {
                    wm[k] += wq * psi * val[k];
                }
            }
        }
        w
    }

    fn poly(p: Point, degree: usize) -> State {
        let mut s = [0.0; NVAR];
        for (k, sk) in s.iter_mut().enumerate() {
            let c = 1.0 + 0.1 * k as f64;
            *sk = c + 0.7 * p[0] - 0.4 * p[1] + 0.3 * c * p[0].powi(degree as i32 - 1) * p[1]
                + 0.2 * p[1].powi(degree as i32);
        }
        s
    }

    #[test]
    fn linear_advection_matches_exact_solution() {
        let a = [0.8, -0.5];
        let sys = LinearAdvection { velocity: a };
        for degree in 1..=3 {
            let re = ReferenceElement::new(degree).unwrap();
            let w = project(&re, &TRI, |p| poly(p, degree));
            for motion in [MeshMotion::Eulerian, MeshMotion::Lagrangian] {
                let pr = Predictor::new(&re, &sys, &motion);
                let (t0, dt) = (0.3, 0.07);
                let out = pr.predict(0, &w, &TRI, t0, dt).unwrap();
                for l in 0..re.n_nodes() {
                    let tau = re.spacetime.node(l)[2];
                    let x = out.x[l];
                    let exact = poly([x[0] - a[0] * tau * dt, x[1] - a[1] * tau * dt], degree);
                    for k in 0..NVAR {
                        assert!(
                            (out.q[l][k] - exact[k]).abs() < 1e-10,
                            "M={degree} {motion:?} node {l}"
                        );
                    }
                }
                assert!(out.iterations <= pr.options.cap(degree));
            }
        }
    }

    #[test]
    fn translation_moves_geometry_exactly() {
        let sys = LinearAdvection { velocity: [1.5, 0.5] };
        let re = ReferenceElement::new(2).unwrap();
        let w = project(&re, &TRI, |p| poly(p, 2));
        let motion = MeshMotion::Lagrangian;
        let out = Predictor::new(&re, &sys, &motion)
            .predict(0, &w, &TRI, 0.0, 0.1)
            .unwrap();
        for l in 0..re.n_nodes() {
            let [xi, eta, tau] = re.spacetime.node(l);
            let p = crate::mesh::map_ref_to_phys(&TRI, [xi, eta]);
            assert!((out.x[l][0] - p[0] - 0.15 * tau).abs() < 1e-13);
            assert!((out.x[l][1] - p[1] - 0.05 * tau).abs() < 1e-13);
        }
        for m in 0..3 {
            let v = out.vertex_velocity(&re, m);
            assert!((v[0] - 1.5).abs() < 1e-13 && (v[1] - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn uniform_state_is_preserved_under_arbitrary_motion() {
        let sys = BaerNunziato::new(Phase::new(1.4, 0.0), Phase::new(1.4, 0.0));
        let q = sys
            .from_primitive(&[1.0, 0.3, -0.2, 1.0, 0.5, 0.1, 0.4, 1.0, 0.4])
            .unwrap();
        let re = ReferenceElement::new(2).unwrap();
        let mut w = vec![[0.0; NVAR]; re.n_modes()];
        w[0] = q.map(|v| v / std::f64::consts::SQRT_2);
        let field: VelocityField = Arc::new(|x, _| [-x[1], x[0] * x[0]]);
        let motion = MeshMotion::LagrangianPlus(field);
        let out = Predictor::new(&re, &sys, &motion)
            .predict(0, &w, &TRI, 0.0, 0.05)
            .unwrap();
        for ql in &out.q {
            for k in 0..NVAR {
                assert!((ql[k] - q[k]).abs() < 1e-13 * (1.0 + q[k].abs()));
            }
        }
        let vol = out.volume_integral(&re, 0.05, 0).unwrap();
        assert!(vol.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn smooth_two_phase_data_converges_within_cap() {
        let sys = BaerNunziato::new(Phase::new(1.4, 0.0), Phase::new(1.35, 0.0));
        let re = ReferenceElement::new(2).unwrap();
        let w = project(&re, &TRI, |p| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            sys.from_primitive(&[
                1.0 + 0.2 * r,
                0.5 - p[1],
                0.3 + p[0],
                1.0 + 0.1 * p[0],
                2.0,
                0.4,
                -0.3 * p[0],
                1.5 - 0.2 * p[1],
                0.4 + 0.1 * p[0] * p[1],
            ])
            .unwrap()
        });
        let motion = MeshMotion::Lagrangian;
        let pr = Predictor::new(&re, &sys, &motion);
        // CFL-like step for an element of size ~0.4 and speeds ~2
        let out = pr.predict(0, &w, &TRI, 0.0, 0.05).unwrap();
        assert!(out.iterations <= pr.options.cap(2), "{}", out.iterations);
        let mut bad = pr;
        bad.options.max_iterations = Some(1);
        assert!(matches!(
            bad.predict(0, &w, &TRI, 0.0, 0.05),
            Err(Error::PredictorDivergence { .. })
        ));
    }
}
