//! Hyperbolic systems in the non-conservative form
//! `∂t Q + ∇·F(Q) + B(Q)·∇Q = S(Q)`.

mod bn;
mod surrogate;

pub use bn::{BaerNunziato, Phase, PHI};
pub use surrogate::{LinearAdvection, LinearSystem};

use crate::error::Result;
use crate::linalg::{self, Eigen, Mat9};

/// Number of state variables.
pub const NVAR: usize = 9;

/// Conserved state vector.
pub type State = [f64; NVAR];

/// Interface of a non-conservative hyperbolic system as seen by the scheme.
pub trait System: Send + Sync {
    /// Physical fluxes `(f, g)`.
    fn flux(&self, q: &State) -> [State; 2];

    /// `B_n(Q)`, the non-conservative matrix contracted with `n`.
    fn ncp_matrix(&self, q: &State, n: [f64; 2]) -> Mat9;

    /// `∂(F·n)/∂Q`.
    fn flux_jacobian(&self, q: &State, n: [f64; 2]) -> Mat9;

    fn source(&self, q: &State) -> State;

    /// Eigenvalues of `A_n` for a unit vector `n`.
    fn eigenvalues(&self, q: &State, n: [f64; 2]) -> State;

    fn validate(&self, q: &State) -> Result<()>;

    /// Velocity followed by the mesh in Lagrangian mode.
    fn lagrangian_velocity(&self, q: &State) -> [f64; 2];

    /// Ghost state for a wall moving with `wall_velocity`.
    fn reflect(&self, q: &State, n: [f64; 2], wall_velocity: [f64; 2]) -> State;

    /// Normal flux `F·n` (n need not be unit).
    fn normal_flux(&self, q: &State, n: [f64; 2]) -> State {
        let [f, g] = self.flux(q);
        std::array::from_fn(|k| f[k] * n[0] + g[k] * n[1])
    }

    /// `B_n(Q) dq`.
    fn ncp_apply(&self, q: &State, n: [f64; 2], dq: &State) -> State {
        linalg::mat_vec(&self.ncp_matrix(q, n), dq)
    }

    /// Non-conservative product `B(Q)·∇Q` from the two partial derivatives.
    fn ncp_product(&self, q: &State, dqdx: &State, dqdy: &State) -> State {
        let a = self.ncp_apply(q, [1.0, 0.0], dqdx);
        let b = self.ncp_apply(q, [0.0, 1.0], dqdy);
        std::array::from_fn(|k| a[k] + b[k])
    }

    /// Quasi-linear matrix `A_n = ∂(F·n)/∂Q + B_n`.
    fn quasi_linear(&self, q: &State, n: [f64; 2]) -> Mat9 {
        self.flux_jacobian(q, n) + self.ncp_matrix(q, n)
    }

    /// `max |λ_k|` over the spectrum of `A_n` for a unit `n`.
    fn max_abs_eigenvalue(&self, q: &State, n: [f64; 2]) -> f64 {
        self.eigenvalues(q, n).iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    /// Bound on `max |λ|` over all unit directions.
    fn max_wave_speed(&self, q: &State) -> f64 {
        (0..16)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / 16.0;
                self.max_abs_eigenvalue(q, [a.cos(), a.sin()])
            })
            .fold(0.0, f64::max)
    }

    /// `A_n = R Λ R⁻¹` for a unit `n`.
    fn eigen(&self, q: &State, n: [f64; 2]) -> Result<Eigen> {
        linalg::eigen_from_spectrum(&self.quasi_linear(q, n), &self.eigenvalues(q, n))
    }

    /// Primitive twin of the state, used for output.
    fn to_primitive(&self, q: &State) -> Result<State> {
        Ok(*q)
    }

    fn from_primitive(&self, w: &State) -> Result<State> {
        Ok(*w)
    }

    /// Projection of a cell average onto the admissible set before use.
    fn clamp_average(&self, _q: &mut State) {}

    /// Component magnitudes used to normalise iteration residuals.
    fn residual_scale(&self, q: &State) -> State {
        let m = q.iter().fold(f64::MIN_POSITIVE, |a, v| a.max(v.abs()));
        [m; NVAR]
    }

    fn primitive_names(&self) -> [&'static str; NVAR] {
        ["q0", "q1", "q2", "q3", "q4", "q5", "q6", "q7", "q8"]
    }

    fn conserved_names(&self) -> [&'static str; NVAR] {
        ["q0", "q1", "q2", "q3", "q4", "q5", "q6", "q7", "q8"]
    }
}
