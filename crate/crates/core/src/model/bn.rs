use nalgebra::{Matrix4, RowVector4, Vector4};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, Eigen, Mat9, MAX_CONDITION};

use super::{State, System, NVAR};

/// Index of the solid volume fraction `φ₁` in the state vector.
pub const PHI: usize = 8;

/// Stiffened-gas parameters of one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub gamma: f64,
    pub pi: f64,
}

impl Phase {
    pub const fn new(gamma: f64, pi: f64) -> Self {
        Self { gamma, pi }
    }
}

/// Two-phase Baer-Nunziato model with `u_I = u₁`, `p_I = p₂`.
///
/// Conserved variables are
/// `(φ₁ρ₁, φ₁ρ₁u₁, φ₁ρ₁v₁, φ₁ρ₁E₁, φ₂ρ₂, φ₂ρ₂u₂, φ₂ρ₂v₂, φ₂ρ₂E₂, φ₁)`,
/// primitive variables `(ρ₁, u₁, v₁, p₁, ρ₂, u₂, v₂, p₂, φ₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaerNunziato {
    pub phases: [Phase; 2],
    /// Inter-phase drag coefficient.
    pub drag: f64,
    /// Pressure relaxation rate.
    pub relaxation: f64,
}

/// Per-phase quantities derived from a conserved state.
#[derive(Debug, Clone, Copy)]
struct PhaseState {
    phi: f64,
    a: f64,
    u: [f64; 2],
    eps: f64,
    p: f64,
    rho: f64,
}

const PHI_CLAMP: f64 = 1e-8;

impl BaerNunziato {
    pub fn new(solid: Phase, gas: Phase) -> Self {
        Self {
            phases: [solid, gas],
            drag: 0.0,
            relaxation: 0.0,
        }
    }

    pub fn with_relaxation(mut self, drag: f64, relaxation: f64) -> Self {
        self.drag = drag;
        self.relaxation = relaxation;
        self
    }

    #[inline]
    fn phase(&self, q: &State, k: usize) -> PhaseState {
        let o = 4 * k;
        let phi = if k == 0 { q[PHI] } else { 1.0 - q[PHI] };
        let a = q[o];
        let u = [q[o + 1] / a, q[o + 2] / a];
        let eps = q[o + 3];
        let Phase { gamma, pi } = self.phases[k];
        let rho = a / phi;
        let e = eps / a - 0.5 * (u[0] * u[0] + u[1] * u[1]);
        let p = (gamma - 1.0) * rho * e - gamma * pi;
        PhaseState {
            phi,
            a,
            u,
            eps,
            p,
            rho,
        }
    }

    /// Sound speed `sqrt(γ(p+π)/ρ)` of phase `k`.
    pub fn sound_speed(&self, k: usize, rho: f64, p: f64) -> f64 {
        let Phase { gamma, pi } = self.phases[k];
        (gamma * (p + pi) / rho).sqrt()
    }

    /// Specific internal energy `(p + γπ) / (ρ(γ-1))` of phase `k`.
    pub fn internal_energy(&self, k: usize, rho: f64, p: f64) -> f64 {
        let Phase { gamma, pi } = self.phases[k];
        (p + gamma * pi) / (rho * (gamma - 1.0))
    }

    /// Phase pressures `(p₁, p₂)`.
    pub fn pressures(&self, q: &State) -> [f64; 2] {
        [self.phase(q, 0).p, self.phase(q, 1).p]
    }

    fn phase_jacobian(&self, m: &mut Mat9, s: &PhaseState, k: usize, n: [f64; 2]) {
        let o = 4 * k;
        let Phase { gamma, pi } = self.phases[k];
        let g1 = gamma - 1.0;
        let u = s.u;
        let un = u[0] * n[0] + u[1] * n[1];
        let q2 = u[0] * u[0] + u[1] * u[1];
        let big_p = s.phi * s.p;
        let h = (s.eps + big_p) / s.a;
        let dp_da = 0.5 * g1 * q2;
        // ∂(φ_k p_k)/∂φ₁
        let dp_dphi = if k == 0 { -gamma * pi } else { gamma * pi };

        m[(o, o + 1)] = n[0];
        m[(o, o + 2)] = n[1];
        for i in 0..2 {
            let r = o + 1 + i;
            m[(r, o)] = -u[i] * un + n[i] * dp_da;
            for j in 0..2 {
                let delta = if i == j { un } else { 0.0 };
                m[(r, o + 1 + j)] = delta + u[i] * n[j] - g1 * n[i] * u[j];
            }
            m[(r, o + 3)] = g1 * n[i];
            m[(r, PHI)] = n[i] * dp_dphi;
        }
        m[(o + 3, o)] = un * (dp_da - h);
        for j in 0..2 {
            m[(o + 3, o + 1 + j)] = h * n[j] - g1 * u[j] * un;
        }
        m[(o + 3, o + 3)] = gamma * un;
        m[(o + 3, PHI)] = un * dp_dphi;
    }

    /// Column `φ₁` of `B_n`; all other columns vanish.
    fn ncp_column(&self, q: &State, n: [f64; 2]) -> State {
        let a1 = q[0];
        let ui = [q[1] / a1, q[2] / a1];
        let pi_ = self.phase(q, 1).p;
        let uin = ui[0] * n[0] + ui[1] * n[1];
        let mut c = [0.0; NVAR];
        c[1] = -pi_ * n[0];
        c[2] = -pi_ * n[1];
        c[3] = -pi_ * uin;
        c[5] = pi_ * n[0];
        c[6] = pi_ * n[1];
        c[7] = pi_ * uin;
        c[PHI] = uin;
        c
    }
}

impl System for BaerNunziato {
    fn flux(&self, q: &State) -> [State; 2] {
        let mut f = [0.0; NVAR];
        let mut g = [0.0; NVAR];
        for k in 0..2 {
            let s = self.phase(q, k);
            let o = 4 * k;
            let pp = s.phi * s.p;
            let [u, v] = s.u;
            f[o] = s.a * u;
            f[o + 1] = s.a * u * u + pp;
            f[o + 2] = s.a * u * v;
            f[o + 3] = (s.eps + pp) * u;
            g[o] = s.a * v;
            g[o + 1] = s.a * u * v;
            g[o + 2] = s.a * v * v + pp;
            g[o + 3] = (s.eps + pp) * v;
        }
        [f, g]
    }

    fn normal_flux(&self, q: &State, n: [f64; 2]) -> State {
        let mut f = [0.0; NVAR];
        for k in 0..2 {
            let s = self.phase(q, k);
            let o = 4 * k;
            let pp = s.phi * s.p;
            let un = s.u[0] * n[0] + s.u[1] * n[1];
            f[o] = s.a * un;
            f[o + 1] = s.a * s.u[0] * un + pp * n[0];
            f[o + 2] = s.a * s.u[1] * un + pp * n[1];
            f[o + 3] = (s.eps + pp) * un;
        }
        f
    }

    fn ncp_matrix(&self, q: &State, n: [f64; 2]) -> Mat9 {
        let c = self.ncp_column(q, n);
        let mut m = Mat9::zeros();
        for (i, v) in c.iter().enumerate() {
            m[(i, PHI)] = *v;
        }
        m
    }

    fn ncp_apply(&self, q: &State, n: [f64; 2], dq: &State) -> State {
        let c = self.ncp_column(q, n);
        c.map(|v| v * dq[PHI])
    }

    fn ncp_product(&self, q: &State, dqdx: &State, dqdy: &State) -> State {
        let a1 = q[0];
        let ui = [q[1] / a1, q[2] / a1];
        let pi_ = self.phase(q, 1).p;
        let (gx, gy) = (dqdx[PHI], dqdy[PHI]);
        let ui_grad = ui[0] * gx + ui[1] * gy;
        let mut c = [0.0; NVAR];
        c[1] = -pi_ * gx;
        c[2] = -pi_ * gy;
        c[3] = -pi_ * ui_grad;
        c[5] = pi_ * gx;
        c[6] = pi_ * gy;
        c[7] = pi_ * ui_grad;
        c[PHI] = ui_grad;
        c
    }

    fn flux_jacobian(&self, q: &State, n: [f64; 2]) -> Mat9 {
        let mut m = Mat9::zeros();
        for k in 0..2 {
            let s = self.phase(q, k);
            self.phase_jacobian(&mut m, &s, k, n);
        }
        m
    }

    fn source(&self, q: &State) -> State {
        let mut s = [0.0; NVAR];
        if self.drag == 0.0 && self.relaxation == 0.0 {
            return s;
        }
        let p1 = self.phase(q, 0);
        let p2 = self.phase(q, 1);
        let du = [p1.u[0] - p2.u[0], p1.u[1] - p2.u[1]];
        let ui_du = p1.u[0] * du[0] + p1.u[1] * du[1];
        let pi_ = p2.p;
        let relax = self.relaxation * (p1.p - p2.p);
        s[1] = -self.drag * du[0];
        s[2] = -self.drag * du[1];
        s[3] = -self.drag * ui_du - pi_ * relax;
        s[5] = self.drag * du[0];
        s[6] = self.drag * du[1];
        s[7] = self.drag * ui_du + pi_ * relax;
        s[PHI] = relax;
        s
    }

    fn eigenvalues(&self, q: &State, n: [f64; 2]) -> State {
        let mut l = [0.0; NVAR];
        for k in 0..2 {
            let s = self.phase(q, k);
            let un = s.u[0] * n[0] + s.u[1] * n[1];
            let c = self.sound_speed(k, s.rho, s.p);
            l[4 * k] = un - c;
            l[4 * k + 1] = un;
            l[4 * k + 2] = un;
            l[4 * k + 3] = un + c;
        }
        // volume-fraction wave travels with u_I = u₁
        l[PHI] = l[1];
        l
    }

    /// Block eigenbasis: Euler eigenvectors of each phase and one coupled
    /// vector for the volume-fraction wave.
    fn eigen(&self, q: &State, n: [f64; 2]) -> Result<Eigen> {
        let a = self.quasi_linear(q, n);
        let lambda = self.eigenvalues(q, n);
        let scale = norm_inf(&a).max(f64::MIN_POSITIVE);
        let ui = lambda[PHI];
        let mut r = Mat9::zeros();
        let mut r_inv = Mat9::zeros();
        r[(PHI, PHI)] = 1.0;
        r_inv[(PHI, PHI)] = 1.0;
        for k in 0..2 {
            let o = 4 * k;
            let s = self.phase(q, k);
            let c = self.sound_speed(k, s.rho, s.p);
            let h = (s.eps + s.phi * s.p) / s.a;
            let u = s.u;
            let un = u[0] * n[0] + u[1] * n[1];
            let t = [-n[1], n[0]];
            let rk = Matrix4::from_columns(&[
                Vector4::new(1.0, u[0] - c * n[0], u[1] - c * n[1], h - un * c),
                Vector4::new(1.0, u[0], u[1], 0.5 * (u[0] * u[0] + u[1] * u[1])),
                Vector4::new(0.0, t[0], t[1], u[0] * t[0] + u[1] * t[1]),
                Vector4::new(1.0, u[0] + c * n[0], u[1] + c * n[1], h + un * c),
            ]);
            if !(c > 0.0) {
                return Err(Error::DegenerateEigenstructure(f64::INFINITY));
            }
            let b1 = (self.phases[k].gamma - 1.0) / (c * c);
            let b2 = 0.5 * b1 * (u[0] * u[0] + u[1] * u[1]);
            let ut = u[0] * t[0] + u[1] * t[1];
            let rk_inv = Matrix4::from_rows(&[
                RowVector4::new(
                    0.5 * (b2 + un / c),
                    -0.5 * (b1 * u[0] + n[0] / c),
                    -0.5 * (b1 * u[1] + n[1] / c),
                    0.5 * b1,
                ),
                RowVector4::new(1.0 - b2, b1 * u[0], b1 * u[1], -b1),
                RowVector4::new(-ut, t[0], t[1], 0.0),
                RowVector4::new(
                    0.5 * (b2 - un / c),
                    0.5 * (n[0] / c - b1 * u[0]),
                    0.5 * (n[1] / c - b1 * u[1]),
                    0.5 * b1,
                ),
            ]);
            let col = Vector4::from_fn(|i, _| a[(o + i, PHI)]);
            let mut y = rk_inv * col;
            for i in 0..4 {
                let d = lambda[o + i] - ui;
                if d.abs() <= 1e-10 * scale {
                    if y[i].abs() > 1e-8 * scale {
                        return Err(Error::DegenerateEigenstructure(f64::INFINITY));
                    }
                    y[i] = 0.0;
                } else {
                    y[i] /= -d;
                }
            }
            let x = rk * y;
            for i in 0..4 {
                for j in 0..4 {
                    r[(o + i, o + j)] = rk[(i, j)];
                    r_inv[(o + i, o + j)] = rk_inv[(i, j)];
                }
                r[(o + i, PHI)] = x[i];
                r_inv[(o + i, PHI)] = -y[i];
            }
        }
        let cond = norm_inf(&r) * norm_inf(&r_inv);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::DegenerateEigenstructure(cond));
        }
        Ok(Eigen { r, r_inv, lambda })
    }

    fn max_abs_eigenvalue(&self, q: &State, n: [f64; 2]) -> f64 {
        (0..2)
            .map(|k| {
                let s = self.phase(q, k);
                let un = s.u[0] * n[0] + s.u[1] * n[1];
                un.abs() + self.sound_speed(k, s.rho, s.p)
            })
            .fold(0.0, f64::max)
    }

    fn max_wave_speed(&self, q: &State) -> f64 {
        (0..2)
            .map(|k| {
                let s = self.phase(q, k);
                s.u[0].hypot(s.u[1]) + self.sound_speed(k, s.rho, s.p)
            })
            .fold(0.0, f64::max)
    }

    fn validate(&self, q: &State) -> Result<()> {
        for (i, v) in q.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidState {
                    component: i,
                    value: *v,
                    reason: "non-finite value",
                });
            }
        }
        if !(q[PHI] > 0.0 && q[PHI] < 1.0) {
            return Err(Error::InvalidState {
                component: PHI,
                value: q[PHI],
                reason: "volume fraction outside (0, 1)",
            });
        }
        for k in 0..2 {
            if !(q[4 * k] > 0.0) {
                return Err(Error::InvalidState {
                    component: 4 * k,
                    value: q[4 * k],
                    reason: "nonpositive partial density",
                });
            }
            let s = self.phase(q, k);
            if !(s.p + self.phases[k].pi > 0.0) {
                return Err(Error::InvalidState {
                    component: 4 * k + 3,
                    value: s.p,
                    reason: "p + π <= 0",
                });
            }
        }
        Ok(())
    }

    fn lagrangian_velocity(&self, q: &State) -> [f64; 2] {
        [q[1] / q[0], q[2] / q[0]]
    }

    fn reflect(&self, q: &State, n: [f64; 2], wall_velocity: [f64; 2]) -> State {
        let mut out = *q;
        for k in 0..2 {
            let o = 4 * k;
            let a = q[o];
            let u = [q[o + 1] / a, q[o + 2] / a];
            let rel = (u[0] - wall_velocity[0]) * n[0] + (u[1] - wall_velocity[1]) * n[1];
            let ur = [u[0] - 2.0 * rel * n[0], u[1] - 2.0 * rel * n[1]];
            let ke = 0.5 * a * (u[0] * u[0] + u[1] * u[1]);
            let ke_r = 0.5 * a * (ur[0] * ur[0] + ur[1] * ur[1]);
            out[o + 1] = a * ur[0];
            out[o + 2] = a * ur[1];
            out[o + 3] = q[o + 3] - ke + ke_r;
        }
        out
    }

    fn to_primitive(&self, q: &State) -> Result<State> {
        self.validate(q)?;
        let mut w = [0.0; NVAR];
        for k in 0..2 {
            let s = self.phase(q, k);
            let o = 4 * k;
            w[o] = s.rho;
            w[o + 1] = s.u[0];
            w[o + 2] = s.u[1];
            w[o + 3] = s.p;
        }
        w[PHI] = q[PHI];
        Ok(w)
    }

    fn from_primitive(&self, w: &State) -> Result<State> {
        let phi1 = w[PHI];
        if !(phi1 > 0.0 && phi1 < 1.0) {
            return Err(Error::InvalidState {
                component: PHI,
                value: phi1,
                reason: "volume fraction outside (0, 1)",
            });
        }
        let mut q = [0.0; NVAR];
        for k in 0..2 {
            let o = 4 * k;
            let phi = if k == 0 { phi1 } else { 1.0 - phi1 };
            let (rho, u, v, p) = (w[o], w[o + 1], w[o + 2], w[o + 3]);
            if !(rho > 0.0) {
                return Err(Error::InvalidState {
                    component: o,
                    value: rho,
                    reason: "nonpositive density",
                });
            }
            if !(p + self.phases[k].pi > 0.0) {
                return Err(Error::InvalidState {
                    component: o + 3,
                    value: p,
                    reason: "p + π <= 0",
                });
            }
            let e = self.internal_energy(k, rho, p);
            let a = phi * rho;
            q[o] = a;
            q[o + 1] = a * u;
            q[o + 2] = a * v;
            q[o + 3] = a * (e + 0.5 * (u * u + v * v));
        }
        q[PHI] = phi1;
        Ok(q)
    }

    fn residual_scale(&self, q: &State) -> State {
        let mut s = [1.0; NVAR];
        for k in 0..2 {
            let o = 4 * k;
            let a = q[o].abs().max(f64::MIN_POSITIVE);
            let e = q[o + 3].abs().max(f64::MIN_POSITIVE);
            let m = (a * e).sqrt();
            s[o] = a;
            s[o + 1] = m.max(q[o + 1].abs());
            s[o + 2] = m.max(q[o + 2].abs());
            s[o + 3] = e;
        }
        s
    }

    fn clamp_average(&self, q: &mut State) {
        q[PHI] = q[PHI].clamp(PHI_CLAMP, 1.0 - PHI_CLAMP);
    }

    fn primitive_names(&self) -> [&'static str; NVAR] {
        ["rho_s", "u_s", "v_s", "p_s", "rho_g", "u_g", "v_g", "p_g", "phi_s"]
    }

    fn conserved_names(&self) -> [&'static str; NVAR] {
        [
            "phi_rho_s",
            "phi_rho_u_s",
            "phi_rho_v_s",
            "phi_rho_E_s",
            "phi_rho_g",
            "phi_rho_u_g",
            "phi_rho_v_g",
            "phi_rho_E_g",
            "phi_s",
        ]
    }
}
