use nalgebra::DMatrix;

use super::poly::{Poly1, Poly2};
use super::quadrature::{triangle_rule, LineRule, TriangleRule};
use super::spatial::{dof_count, SpatialBasis};
use crate::error::{Error, Result};

/// Reference vertices of `T_e`.
pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Dense row-major table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                t.data[i * cols + j] = f(i, j);
            }
        }
        t
    }

    fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Nodal space-time basis `θ_l(ξ, η, τ)` on `T_e × [0, 1]`.
///
/// Nodes are the tensor product of the degree-`M` principal lattice of `T_e`
/// with `M + 1` equidistant time levels; node `l = t · ℳ + s` sits on spatial
/// lattice point `s` and time level `t`.
#[derive(Debug, Clone)]
pub struct SpaceTimeBasis {
    degree: usize,
    spatial_nodes: Vec<[f64; 2]>,
    time_nodes: Vec<f64>,
    spatial_lagrange: Vec<Poly2>,
    spatial_lagrange_grad: Vec<[Poly2; 2]>,
    temporal_lagrange: Vec<Poly1>,
    temporal_lagrange_deriv: Vec<Poly1>,
}

impl SpaceTimeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::UnsupportedOrder(degree));
        }
        let spatial = SpatialBasis::new(degree);
        let m = degree as f64;
        let mut spatial_nodes = Vec::new();
        for j in 0..=degree {
            for i in 0..=(degree - j) {
                spatial_nodes.push([i as f64 / m, j as f64 / m]);
            }
        }
        let n = spatial_nodes.len();
        // Vandermonde in the orthonormal basis, inverted once
        let vander = DMatrix::from_fn(n, n, |r, c| spatial.eval(c, spatial_nodes[r]).unwrap());
        let inv = vander
            .try_inverse()
            .ok_or(Error::SingularMatrix("spatial Vandermonde"))?;
        let spatial_lagrange: Vec<Poly2> = (0..n)
            .map(|s| {
                (0..n).fold(Poly2::constant(0.0), |acc, l| {
                    acc.add(&spatial.mode(l).scale(inv[(l, s)]))
                })
            })
            .collect();
        let spatial_lagrange_grad = spatial_lagrange
            .iter()
            .map(|p| [p.derivative(1, 0), p.derivative(0, 1)])
            .collect();

        let time_nodes: Vec<f64> = (0..=degree).map(|t| t as f64 / m).collect();
        let temporal_lagrange: Vec<Poly1> = (0..=degree)
            .map(|t| {
                let mut p = Poly1::constant(1.0);
                for (u, &tu) in time_nodes.iter().enumerate() {
                    if u == t {
                        continue;
                    }
                    let d = time_nodes[t] - tu;
                    // p *= (τ - τ_u) / d
                    let mut next = vec![0.0; p.0.len() + 1];
                    for (k, &c) in p.0.iter().enumerate() {
                        next[k + 1] += c / d;
                        next[k] -= c * tu / d;
                    }
                    p = Poly1(next);
                }
                p
            })
            .collect();
        let temporal_lagrange_deriv = temporal_lagrange.iter().map(Poly1::derivative).collect();
        Ok(Self {
            degree,
            spatial_nodes,
            time_nodes,
            spatial_lagrange,
            spatial_lagrange_grad,
            temporal_lagrange,
            temporal_lagrange_deriv,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_space(&self) -> usize {
        self.spatial_nodes.len()
    }

    pub fn n_time(&self) -> usize {
        self.time_nodes.len()
    }

    pub fn dof_count(&self) -> usize {
        self.n_space() * self.n_time()
    }

    pub fn spatial_nodes(&self) -> &[[f64; 2]] {
        &self.spatial_nodes
    }

    pub fn time_nodes(&self) -> &[f64] {
        &self.time_nodes
    }

    /// Reference space-time coordinates of node `l`.
    pub fn node(&self, l: usize) -> [f64; 3] {
        let s = l % self.n_space();
        let t = l / self.n_space();
        [self.spatial_nodes[s][0], self.spatial_nodes[s][1], self.time_nodes[t]]
    }

    pub fn eval(&self, l: usize, p: [f64; 3]) -> f64 {
        let s = l % self.n_space();
        let t = l / self.n_space();
        self.spatial_lagrange[s].eval(p[0], p[1]) * self.temporal_lagrange[t].eval(p[2])
    }

    /// Values of all basis functions at `p`.
    pub fn eval_all(&self, p: [f64; 3]) -> Vec<f64> {
        let sv: Vec<f64> = self.spatial_lagrange.iter().map(|q| q.eval(p[0], p[1])).collect();
        let tv: Vec<f64> = self.temporal_lagrange.iter().map(|q| q.eval(p[2])).collect();
        tv.iter().flat_map(|&t| sv.iter().map(move |&s| s * t)).collect()
    }

    /// `(∂ξ θ_l, ∂η θ_l, ∂τ θ_l)` for all `l` at `p`.
    pub fn grad_all(&self, p: [f64; 3]) -> Vec<[f64; 3]> {
        let sv: Vec<f64> = self.spatial_lagrange.iter().map(|q| q.eval(p[0], p[1])).collect();
        let sg: Vec<[f64; 2]> = self
            .spatial_lagrange_grad
            .iter()
            .map(|g| [g[0].eval(p[0], p[1]), g[1].eval(p[0], p[1])])
            .collect();
        let tv: Vec<f64> = self.temporal_lagrange.iter().map(|q| q.eval(p[2])).collect();
        let td: Vec<f64> = self.temporal_lagrange_deriv.iter().map(|q| q.eval(p[2])).collect();
        let mut out = Vec::with_capacity(sv.len() * tv.len());
        for t in 0..tv.len() {
            for s in 0..sv.len() {
                out.push([sg[s][0] * tv[t], sg[s][1] * tv[t], sv[s] * td[t]]);
            }
        }
        out
    }
}

/// Basis values at a quadrature point of the space-time volume.
#[derive(Debug, Clone)]
pub struct VolumePoint {
    pub weight: f64,
    pub theta: Vec<f64>,
    pub d_xi: Vec<f64>,
    pub d_eta: Vec<f64>,
}

/// Universal reference-element data for a fixed degree `M`: bases,
/// quadrature, the oscillation-indicator matrix and the space-time predictor
/// matrices `K1`, `F0`, `M`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub degree: usize,
    pub spatial: SpatialBasis,
    pub spacetime: SpaceTimeBasis,
    /// Oscillation indicator matrix `Σ` (ℳ × ℳ).
    pub sigma: Table,
    /// `K1 = [θ_k(·,1), θ_l(·,1)]¹ - ⟨∂τ θ_k, θ_l⟩`.
    pub k1: Table,
    /// `F0 = [θ_k(·,0), ψ_l]⁰`.
    pub f0: Table,
    /// `M = ⟨θ_k, θ_l⟩`.
    pub mass: Table,
    pub k1_inv_f0: Table,
    pub k1_inv_mass: Table,
    /// Nodal differentiation matrices: `d_*[l][m] = ∂θ_m(ξ̃_l)`.
    pub d_xi: Table,
    pub d_eta: Table,
    pub d_tau: Table,
    /// Spatial differentiation on one time level (ℳ × ℳ), `d_xi = I ⊗ d_xi_s`.
    pub d_xi_s: Table,
    pub d_eta_s: Table,
    /// Temporal differentiation along one lattice node ((M+1) × (M+1)).
    pub d_tau_t: Table,
    /// `ψ_mode` at the spatial lattice nodes (ℳ nodes × ℳ modes).
    pub modes_at_nodes: Table,
    /// `∫_0^1 θ_l(ξ_{e,m}, τ) dτ` per reference vertex `m`.
    pub vertex_time_weights: [Vec<f64>; 3],
    /// Gauss-Legendre rule with `M + 1` points used along and across faces.
    pub face_rule: LineRule,
    /// `face_theta[e][g * n + h]`: `θ_l` at edge `e`, `χ = χ_g`, `τ = τ_h`.
    pub face_theta: [Vec<Vec<f64>>; 3],
    pub volume_rule: TriangleRule,
    pub time_rule: LineRule,
    pub volume_points: Vec<VolumePoint>,
}

impl ReferenceElement {
    pub fn new(degree: usize) -> Result<Self> {
        let spacetime = SpaceTimeBasis::new(degree)?;
        let spatial = SpatialBasis::new(degree);
        let n_st = spacetime.dof_count();
        let n_modes = dof_count(degree);

        let sigma_rows = spatial.oscillation_matrix();
        let sigma = Table::from_fn(n_modes, n_modes, |i, j| sigma_rows[i][j]);

        let space_rule = triangle_rule(2 * degree + 2)?;
        let time_rule_exact = LineRule::with_exactness(2 * degree + 2);

        let mut k1 = DMatrix::<f64>::zeros(n_st, n_st);
        let mut f0 = DMatrix::<f64>::zeros(n_st, n_modes);
        let mut mass = DMatrix::<f64>::zeros(n_st, n_st);
        for (p, w) in space_rule.iter() {
            let top = spacetime.eval_all([p[0], p[1], 1.0]);
            let bottom = spacetime.eval_all([p[0], p[1], 0.0]);
            let psi = spatial.eval_all(p);
            for k in 0..n_st {
                for l in 0..n_st {
                    k1[(k, l)] += w * top[k] * top[l];
                }
                for l in 0..n_modes {
                    f0[(k, l)] += w * bottom[k] * psi[l];
                }
            }
            for (tau, wt) in time_rule_exact.iter() {
                let q = [p[0], p[1], tau];
                let vals = spacetime.eval_all(q);
                let grads = spacetime.grad_all(q);
                for k in 0..n_st {
                    for l in 0..n_st {
                        k1[(k, l)] -= w * wt * grads[k][2] * vals[l];
                        mass[(k, l)] += w * wt * vals[k] * vals[l];
                    }
                }
            }
        }
        let k1_inv = k1
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix("K1"))?;
        let k1_inv_f0 = &k1_inv * &f0;
        let k1_inv_mass = &k1_inv * &mass;

        let mut d_xi = Table::zeros(n_st, n_st);
        let mut d_eta = Table::zeros(n_st, n_st);
        let mut d_tau = Table::zeros(n_st, n_st);
        for l in 0..n_st {
            let g = spacetime.grad_all(spacetime.node(l));
            for m in 0..n_st {
                d_xi.data[l * n_st + m] = g[m][0];
                d_eta.data[l * n_st + m] = g[m][1];
                d_tau.data[l * n_st + m] = g[m][2];
            }
        }

        let n_s = spacetime.n_space();
        let n_t = spacetime.n_time();
        let d_xi_s = Table::from_fn(n_s, n_s, |a, b| d_xi.get(a, b));
        let d_eta_s = Table::from_fn(n_s, n_s, |a, b| d_eta.get(a, b));
        let d_tau_t = Table::from_fn(n_t, n_t, |a, b| d_tau.get(a * n_s, b * n_s));

        let modes_at_nodes = Table::from_fn(n_modes, n_modes, |s, l| {
            spatial.eval(l, spacetime.spatial_nodes()[s]).unwrap()
        });

        let vertex_time_weights = REF_VERTICES.map(|v| {
            let mut w = vec![0.0; n_st];
            for (tau, wt) in time_rule_exact.iter() {
                let vals = spacetime.eval_all([v[0], v[1], tau]);
                for (acc, val) in w.iter_mut().zip(vals) {
                    *acc += wt * val;
                }
            }
            w
        });

        let face_rule = LineRule::gauss_legendre(degree + 1);
        let face_theta = [0usize, 1, 2].map(|e| {
            let a = REF_VERTICES[e];
            let b = REF_VERTICES[(e + 1) % 3];
            let mut tab = Vec::with_capacity(face_rule.len() * face_rule.len());
            for &chi in &face_rule.points {
                for &tau in &face_rule.points {
                    let p = [a[0] + chi * (b[0] - a[0]), a[1] + chi * (b[1] - a[1]), tau];
                    tab.push(spacetime.eval_all(p));
                }
            }
            tab
        });

        let volume_rule = triangle_rule(2 * degree)?;
        let time_rule = LineRule::gauss_legendre(degree + 1);
        let mut volume_points = Vec::with_capacity(volume_rule.len() * time_rule.len());
        for (tau, wt) in time_rule.iter() {
            for (p, w) in volume_rule.iter() {
                let q = [p[0], p[1], tau];
                let grads = spacetime.grad_all(q);
                volume_points.push(VolumePoint {
                    weight: w * wt,
                    theta: spacetime.eval_all(q),
                    d_xi: grads.iter().map(|g| g[0]).collect(),
                    d_eta: grads.iter().map(|g| g[1]).collect(),
                });
            }
        }

        Ok(Self {
            degree,
            spatial,
            spacetime,
            sigma,
            k1: Table::from_dmatrix(&k1),
            f0: Table::from_dmatrix(&f0),
            mass: Table::from_dmatrix(&mass),
            k1_inv_f0: Table::from_dmatrix(&k1_inv_f0),
            k1_inv_mass: Table::from_dmatrix(&k1_inv_mass),
            d_xi,
            d_eta,
            d_tau,
            d_xi_s,
            d_eta_s,
            d_tau_t,
            modes_at_nodes,
            vertex_time_weights,
            face_rule,
            face_theta,
            volume_rule,
            time_rule,
            volume_points,
        })
    }

    /// Number of spatial modes ℳ.
    pub fn n_modes(&self) -> usize {
        self.spatial.len()
    }

    /// Number of space-time nodes.
    pub fn n_nodes(&self) -> usize {
        self.spacetime.dof_count()
    }

    pub fn n_face_points(&self) -> usize {
        self.face_rule.len() * self.face_rule.len()
    }
}
