//! Linear constant-coefficient systems with known exact behavior, used to
//! exercise the scheme independently of the two-phase model.

use crate::error::Result;
use crate::linalg::{self, Eigen, Mat9, N};

use super::{State, System, NVAR};

/// Every component advected with a constant velocity: `F = a_x Q`, `G = a_y Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearAdvection {
    pub velocity: [f64; 2],
}

impl System for LinearAdvection {
    fn flux(&self, q: &State) -> [State; 2] {
        [q.map(|v| self.velocity[0] * v), q.map(|v| self.velocity[1] * v)]
    }

    fn ncp_matrix(&self, _q: &State, _n: [f64; 2]) -> Mat9 {
        Mat9::zeros()
    }

    fn ncp_apply(&self, _q: &State, _n: [f64; 2], _dq: &State) -> State {
        [0.0; NVAR]
    }

    fn flux_jacobian(&self, _q: &State, n: [f64; 2]) -> Mat9 {
        Mat9::from_diagonal_element(self.velocity[0] * n[0] + self.velocity[1] * n[1])
    }

    fn source(&self, _q: &State) -> State {
        [0.0; NVAR]
    }

    fn eigenvalues(&self, _q: &State, n: [f64; 2]) -> State {
        [self.velocity[0] * n[0] + self.velocity[1] * n[1]; NVAR]
    }

    fn eigen(&self, q: &State, n: [f64; 2]) -> Result<Eigen> {
        Ok(Eigen {
            r: Mat9::identity(),
            r_inv: Mat9::identity(),
            lambda: self.eigenvalues(q, n),
        })
    }

    fn validate(&self, _q: &State) -> Result<()> {
        Ok(())
    }

    fn lagrangian_velocity(&self, _q: &State) -> [f64; 2] {
        self.velocity
    }

    fn reflect(&self, q: &State, _n: [f64; 2], _wall_velocity: [f64; 2]) -> State {
        *q
    }
}

/// Linear hyperbolic system `∂t Q + A_x ∂x Q + A_y ∂y Q = 0` with commuting
/// `A_x = R Λx R⁻¹`, `A_y = R Λy R⁻¹`. A fraction `ncp_fraction` of each
/// matrix is written in non-conservative form, the rest as a flux.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    r: Mat9,
    r_inv: Mat9,
    lambda: [[f64; N]; 2],
    a: [Mat9; 2],
    pub ncp_fraction: f64,
}

impl LinearSystem {
    pub fn new(r: Mat9, lambda_x: [f64; N], lambda_y: [f64; N], ncp_fraction: f64) -> Option<Self> {
        let r_inv = r.try_inverse()?;
        let diag = |l: &[f64; N]| Mat9::from_diagonal(&nalgebra::SVector::from_column_slice(l));
        let a = [r * diag(&lambda_x) * r_inv, r * diag(&lambda_y) * r_inv];
        Some(Self {
            r,
            r_inv,
            lambda: [lambda_x, lambda_y],
            a,
            ncp_fraction,
        })
    }

    /// `A_n = A_x n_x + A_y n_y`.
    pub fn matrix(&self, n: [f64; 2]) -> Mat9 {
        self.a[0] * n[0] + self.a[1] * n[1]
    }
}

impl System for LinearSystem {
    fn flux(&self, q: &State) -> [State; 2] {
        let c = 1.0 - self.ncp_fraction;
        [0, 1].map(|d| linalg::mat_vec(&self.a[d], q).map(|v| c * v))
    }

    fn ncp_matrix(&self, _q: &State, n: [f64; 2]) -> Mat9 {
        self.matrix(n) * self.ncp_fraction
    }

    fn flux_jacobian(&self, _q: &State, n: [f64; 2]) -> Mat9 {
        self.matrix(n) * (1.0 - self.ncp_fraction)
    }

    fn source(&self, _q: &State) -> State {
        [0.0; NVAR]
    }

    fn eigenvalues(&self, _q: &State, n: [f64; 2]) -> State {
        std::array::from_fn(|k| self.lambda[0][k] * n[0] + self.lambda[1][k] * n[1])
    }

    fn eigen(&self, q: &State, n: [f64; 2]) -> Result<Eigen> {
        Ok(Eigen {
            r: self.r,
            r_inv: self.r_inv,
            lambda: self.eigenvalues(q, n),
        })
    }

    fn validate(&self, _q: &State) -> Result<()> {
        Ok(())
    }

    fn lagrangian_velocity(&self, _q: &State) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn reflect(&self, q: &State, _n: [f64; 2], _wall_velocity: [f64; 2]) -> State {
        *q
    }
}
