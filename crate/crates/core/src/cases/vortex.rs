//! Stationary two-phase vortex superimposed on a uniform translation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::model::{BaerNunziato, Phase, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub gamma: [f64; 2],
    pub rho: [f64; 2],
    pub p0: [f64; 2],
    pub s: [f64; 2],
    pub velocity: Point,
    /// Periodic box `[lo, hi]²` the vortex lives in.
    pub domain: [f64; 2],
}

/// Radial profile at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexProfile {
    pub p: [f64; 2],
    pub phi: f64,
    /// Angular velocities `u_k^θ`.
    pub u_theta: [f64; 2],
}

impl Default for Vortex {
    fn default() -> Self {
        Self {
            gamma: [1.4, 1.35],
            rho: [1.0, 2.0],
            p0: [1.0, 1.5],
            s: [1.5, 1.4],
            velocity: [2.0, 2.0],
            domain: [-10.0, 10.0],
        }
    }
}

impl Vortex {
    pub fn system(&self) -> BaerNunziato {
        BaerNunziato::new(Phase::new(self.gamma[0], 0.0), Phase::new(self.gamma[1], 0.0))
    }

    pub fn pressure(&self, k: usize, r: f64) -> f64 {
        let s = self.s[k];
        self.p0[k] * (1.0 - 0.25 * (1.0 - r * r / (s * s)).exp())
    }

    pub fn volume_fraction(&self, r: f64) -> f64 {
        1.0 / 3.0 + (-0.5 * r * r).exp() / (2.0 * (2.0 * PI).sqrt())
    }

    /// Closed forms of `p_k`, `φ₁` and `u_k^θ`. The angular velocities balance
    /// the radial momentum equations
    /// `∂r(φ_k p_k) = p₂ ∂rφ_k + (u_k^θ)² φ_k ρ_k / r`.
    pub fn profile(&self, r: f64) -> Result<VortexProfile> {
        let [s1, s2] = self.s;
        let [p10, p20] = self.p0;
        let [rho1, rho2] = self.rho;
        let r2 = r * r;
        let h = |s: f64| (-(2.0 * r2 + r2 * s * s - 2.0 * s * s) / (2.0 * s * s)).exp();
        let f = |s: f64| (-(r - s) * (r + s) / (s * s)).exp();
        let g = (-0.5 * r2).exp();
        let sq = (2.0 * PI).sqrt();
        let d = rho1 * (2.0 * sq + 3.0 * g);
        let bracket = p10 * (4.0 * sq * f(s1) + 6.0 * h(s1) - 12.0 * g * s1 * s1 + 3.0 * h(s1) * s1 * s1)
            + 3.0 * p20 * s1 * s1 * (4.0 * g - h(s2));
        let rad1 = r2 * d * bracket;
        let rad2 = rho2 * p20 * f(s2);
        if rad1 < 0.0 || rad2 < 0.0 {
            return Err(Error::ParameterDomain("negative radicand in the vortex velocity"));
        }
        Ok(VortexProfile {
            p: [self.pressure(0, r), self.pressure(1, r)],
            phi: self.volume_fraction(r),
            u_theta: [
                rad1.sqrt() / (2.0 * s1 * d),
                r * 2f64.sqrt() / (2.0 * rho2 * s2) * rad2.sqrt(),
            ],
        })
    }

    /// Offset of `x` from the vortex center at time `t`, nearest periodic image.
    pub fn offset(&self, x: Point, t: f64) -> Point {
        let l = self.domain[1] - self.domain[0];
        std::array::from_fn(|d| {
            let dx = x[d] - self.velocity[d] * t;
            dx - l * (dx / l).round()
        })
    }

    /// Primitive state `(ρ₁,u₁,v₁,p₁,ρ₂,u₂,v₂,p₂,φ₁)` at `(x, t)`.
    pub fn primitive(&self, x: Point, t: f64) -> Result<State> {
        let [dx, dy] = self.offset(x, t);
        let r = dx.hypot(dy);
        let pr = self.profile(r)?;
        // unit tangential direction; u_k^θ vanishes linearly at r = 0
        let (ex, ey) = if r > 0.0 { (-dy / r, dx / r) } else { (0.0, 0.0) };
        let [u1, u2] = pr.u_theta;
        let [vx, vy] = self.velocity;
        Ok([
            self.rho[0],
            vx + u1 * ex,
            vy + u1 * ey,
            pr.p[0],
            self.rho[1],
            vx + u2 * ex,
            vy + u2 * ey,
            pr.p[1],
            pr.phi,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Eighth-order central difference.
    fn derivative(f: impl Fn(f64) -> f64, r: f64) -> f64 {
        let h = 1e-3;
        let c = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        c.iter()
            .enumerate()
            .map(|(k, ck)| {
                let s = (k + 1) as f64 * h;
                ck * (f(r + s) - f(r - s))
            })
            .sum::<f64>()
            / h
    }

    #[test]
    fn radial_momentum_balance_holds() {
        let v = Vortex::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let r: f64 = rng.gen_range(0.05..6.0);
            let pr = v.profile(r).unwrap();
            let phi = |r: f64| v.volume_fraction(r);
            let p = |k: usize, r: f64| v.pressure(k, r);
            let lhs1 = derivative(|r| phi(r) * p(0, r), r);
            let rhs1 = pr.p[1] * derivative(phi, r) + pr.u_theta[0].powi(2) * pr.phi * v.rho[0] / r;
            let lhs2 = derivative(|r| (1.0 - phi(r)) * p(1, r), r);
            let rhs2 = pr.p[1] * derivative(|r| 1.0 - phi(r), r)
                + pr.u_theta[1].powi(2) * (1.0 - pr.phi) * v.rho[1] / r;
            assert!((lhs1 - rhs1).abs() < 1e-10, "r={r} {}", lhs1 - rhs1);
            assert!((lhs2 - rhs2).abs() < 1e-10, "r={r} {}", lhs2 - rhs2);
        }
    }

    #[test]
    fn limits_and_landmarks() {
        let v = Vortex::default();
        let far = v.profile(30.0).unwrap();
        assert!((far.p[0] - 1.0).abs() < 1e-14 && (far.p[1] - 1.5).abs() < 1e-14);
        assert!((far.phi - 1.0 / 3.0).abs() < 1e-14);
        assert!(far.u_theta.iter().all(|u| u.abs() < 1e-14));
        assert_eq!(v.pressure(0, 1.5), 0.75);
        let c = v.profile(0.0).unwrap();
        assert_eq!(c.u_theta, [0.0, 0.0]);
        let q = v.primitive([4.0, 4.0], 2.0).unwrap();
        assert_eq!([q[1], q[2], q[5], q[6]], [2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn translation_is_periodic() {
        let v = Vortex::default();
        let a = v.primitive([1.0, -0.5], 0.0).unwrap();
        let b = v.primitive([1.0 + 2.0 * 12.0 - 20.0, -0.5 + 24.0 - 20.0], 12.0).unwrap();
        for k in 0..9 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }
}
