//! Nonlinear WENO reconstruction on triangles from constrained least-squares
//! stencil polynomials.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{triangle_rule, ReferenceElement, TriangleRule, MAX_MODES};
use crate::error::{Error, Result};
use crate::mesh::{map_ref_to_phys, phys_to_ref, signed_area, Mesh, StencilMember, StencilSet, STENCIL_COUNT};
use crate::model::{State, System, NVAR};

/// Variables in which the nonlinear weights are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionMode {
    Componentwise,
    /// Projection with the eigenvectors of `A_x` and of `A_y`, averaged.
    Characteristic,
    /// Projection with the eigenvectors of `A_x` only.
    CharacteristicX,
}

impl ReconstructionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Componentwise => "comp",
            Self::Characteristic => "char",
            Self::CharacteristicX => "char-x",
        }
    }
}

impl std::str::FromStr for ReconstructionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comp" | "componentwise" => Ok(Self::Componentwise),
            "char" | "characteristic" => Ok(Self::Characteristic),
            "char-x" => Ok(Self::CharacteristicX),
            other => Err(Error::Config(format!("unknown reconstruction mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WenoConfig {
    pub epsilon: f64,
    pub exponent: i32,
    pub lambda_central: f64,
    pub lambda_sided: f64,
    pub mode: ReconstructionMode,
}

impl Default for WenoConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-14,
            exponent: 8,
            lambda_central: 1e5,
            lambda_sided: 1.0,
            mode: ReconstructionMode::Characteristic,
        }
    }
}

/// Modal coefficients `ŵ_l` of all elements, `ℳ` states per element.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    n_modes: usize,
    pub coeffs: Vec<State>,
    /// Elements reduced to first order (rank deficiency or invalid states).
    pub first_order: Vec<usize>,
    /// Elements whose characteristic projection failed.
    pub componentwise_fallback: Vec<usize>,
}

impl Reconstruction {
    /// Piecewise-constant reconstruction.
    pub fn first_order(re: &ReferenceElement, averages: &[State]) -> Self {
        let n_modes = re.n_modes();
        let psi0 = constant_mode(re);
        let mut coeffs = vec![[0.0; NVAR]; averages.len() * n_modes];
        for (i, q) in averages.iter().enumerate() {
            coeffs[i * n_modes] = q.map(|v| v / psi0);
        }
        Self {
            n_modes,
            coeffs,
            first_order: Vec::new(),
            componentwise_fallback: Vec::new(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn element(&self, i: usize) -> &[State] {
        &self.coeffs[i * self.n_modes..(i + 1) * self.n_modes]
    }

    /// `w_h(ξ, η)` on element `i`.
    pub fn eval(&self, re: &ReferenceElement, i: usize, p: [f64; 2]) -> State {
        let psi = re.spatial.eval_all(p);
        eval_modal(self.element(i), &psi)
    }
}

pub fn eval_modal(w: &[State], psi: &[f64]) -> State {
    let mut q = [0.0; NVAR];
    for (wl, p) in w.iter().zip(psi) {
        for k in 0..NVAR {
            q[k] += p * wl[k];
        }
    }
    q
}

fn constant_mode(re: &ReferenceElement) -> f64 {
    re.spatial.eval(0, [0.0, 0.0]).unwrap()
}

/// Per-step reconstruction driver.
pub struct Weno<'a, S: System> {
    pub mesh: &'a Mesh,
    pub stencils: &'a StencilSet,
    pub re: &'a ReferenceElement,
    pub system: &'a S,
    pub config: WenoConfig,
}

struct ElementResult {
    coeffs: Vec<State>,
    first_order: bool,
    comp_fallback: bool,
}

impl<'a, S: System> Weno<'a, S> {
    pub fn reconstruct(&self, averages: &[State]) -> Reconstruction {
        let rule = triangle_rule(self.re.degree).expect("supported degree");
        let results: Vec<ElementResult> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|i| self.reconstruct_element(i, averages, &rule))
            .collect();
        let n_modes = self.re.n_modes();
        let mut out = Reconstruction {
            n_modes,
            coeffs: Vec::with_capacity(averages.len() * n_modes),
            first_order: Vec::new(),
            componentwise_fallback: Vec::new(),
        };
        for (i, r) in results.into_iter().enumerate() {
            out.coeffs.extend(r.coeffs);
            if r.first_order {
                out.first_order.push(i);
            }
            if r.comp_fallback {
                out.componentwise_fallback.push(i);
            }
        }
        if !out.first_order.is_empty() {
            log::debug!("{} elements reconstructed at first order", out.first_order.len());
        }
        out
    }

    fn reconstruct_element(&self, i: usize, averages: &[State], rule: &TriangleRule) -> ElementResult {
        let n_modes = self.re.n_modes();
        let psi0 = constant_mode(self.re);
        let w0 = averages[i].map(|v| v / psi0);
        let fallback = |comp_fallback| {
            let mut coeffs = vec![[0.0; NVAR]; n_modes];
            coeffs[0] = w0;
            ElementResult {
                coeffs,
                first_order: true,
                comp_fallback,
            }
        };
        let stencil_polys = match self.stencil_polynomials(i, averages, rule) {
            Ok(p) => p,
            Err(_) => return fallback(false),
        };
        let (coeffs, comp_fallback) = match self.config.mode {
            ReconstructionMode::Componentwise => (self.blend(&stencil_polys), false),
            mode => {
                let dirs: &[[f64; 2]] = if mode == ReconstructionMode::Characteristic {
                    &[[1.0, 0.0], [0.0, 1.0]]
                } else {
                    &[[1.0, 0.0]]
                };
                match self.blend_characteristic(&averages[i], &stencil_polys, dirs) {
                    Some(c) => (c, false),
                    None => (self.blend(&stencil_polys), true),
                }
            }
        };
        let mut coeffs = coeffs;
        coeffs[0] = w0;
        if !self.is_admissible(&coeffs) {
            return fallback(comp_fallback);
        }
        ElementResult {
            coeffs,
            first_order: false,
            comp_fallback,
        }
    }

    /// Checks the polynomial at the lattice nodes and the edge Gauss points.
    fn is_admissible(&self, coeffs: &[State]) -> bool {
        let re = self.re;
        let check = |p: [f64; 2]| {
            let mut psi = [0.0; MAX_MODES];
            re.spatial.eval_into(p, &mut psi);
            let q = eval_modal(coeffs, &psi[..coeffs.len()]);
            self.system.validate(&q).is_ok()
        };
        re.spacetime.spatial_nodes().iter().all(|p| check(*p))
            && (0..3).all(|e| {
                let a = crate::basis::REF_VERTICES[e];
                let b = crate::basis::REF_VERTICES[(e + 1) % 3];
                re.face_rule
                    .points
                    .iter()
                    .all(|&c| check([a[0] + c * (b[0] - a[0]), a[1] + c * (b[1] - a[1])]))
            })
    }

    /// Constrained least-squares polynomial of each stencil, `ℳ` states each.
    pub fn stencil_polynomials(
        &self,
        i: usize,
        averages: &[State],
        rule: &TriangleRule,
    ) -> Result<Vec<Vec<State>>> {
        let n_modes = self.re.n_modes();
        let vi = self.mesh.vertices(i);
        // rows (1/|T_j|)∫_{T_j} ψ_l, computed once per distinct member
        let mut rows: Vec<(StencilMember, Vec<f64>)> = Vec::new();
        let mut index = vec![[0usize; 32]; STENCIL_COUNT];
        for (s, idx) in index.iter_mut().enumerate() {
            for (r, m) in self.stencils.stencil(i, s)[1..].iter().enumerate() {
                if let Some(k) = rows.iter().position(|(x, _)| x == m) {
                    idx[r] = k;
                    continue;
                }
                let mut vj = self.mesh.vertices(m.element);
                for v in vj.iter_mut() {
                    v[0] += m.shift[0];
                    v[1] += m.shift[1];
                }
                let mut moments = [0.0; MAX_MODES];
                let mut mono = [0.0; MAX_MODES];
                for (p, w) in rule.iter() {
                    let xi = phys_to_ref(&vi, map_ref_to_phys(&vj, p));
                    self.re.spatial.monomials_into(xi, &mut mono);
                    for (acc, v) in moments.iter_mut().zip(mono) {
                        *acc += 2.0 * w * v;
                    }
                }
                let mut row = vec![0.0; n_modes];
                self.re.spatial.combine_monomials(&moments, &mut row);
                debug_assert!(signed_area(&vj) > 0.0);
                idx[r] = rows.len();
                rows.push((*m, row));
            }
        }
        let mut out = Vec::with_capacity(STENCIL_COUNT);
        for s in 0..STENCIL_COUNT {
            let members = &self.stencils.stencil(i, s)[1..];
            let idx = &index[s];
            let nr = members.len();
            let nc = n_modes - 1;
            let mut a = DMatrix::<f64>::zeros(nr, nc);
            let mut b = DMatrix::<f64>::zeros(nr, NVAR);
            for (r, (m, &k)) in members.iter().zip(idx.iter()).enumerate() {
                for c in 0..nc {
                    a[(r, c)] = rows[k].1[c + 1];
                }
                for v in 0..NVAR {
                    b[(r, v)] = averages[m.element][v] - averages[i][v];
                }
            }
            let coeffs = solve_lsq(a, b).ok_or(Error::StencilConditioning(i))?;
            let mut poly = vec![[0.0; NVAR]; n_modes];
            for c in 0..nc {
                for v in 0..NVAR {
                    poly[c + 1][v] = coeffs[(c, v)];
                }
            }
            out.push(poly);
        }
        Ok(out)
    }

    /// Nonlinear weights of one variable across stencils.
    pub fn weights(&self, sigma: &[f64; STENCIL_COUNT]) -> [f64; STENCIL_COUNT] {
        let c = &self.config;
        weno_weights(sigma, c.lambda_central, c.lambda_sided, c.epsilon, c.exponent)
    }

    fn blend(&self, polys: &[Vec<State>]) -> Vec<State> {
        let n_modes = self.re.n_modes();
        let mut out = vec![[0.0; NVAR]; n_modes];
        for v in 0..NVAR {
            let sigma: [f64; STENCIL_COUNT] =
                std::array::from_fn(|s| indicator(&self.re.sigma, &polys[s], v));
            let w = self.weights(&sigma);
            for (s, ws) in w.iter().enumerate() {
                for l in 0..n_modes {
                    out[l][v] += ws * polys[s][l][v];
                }
            }
        }
        out
    }

    fn blend_characteristic(
        &self,
        qi: &State,
        polys: &[Vec<State>],
        dirs: &[[f64; 2]],
    ) -> Option<Vec<State>> {
        let n_modes = self.re.n_modes();
        let mut out = vec![[0.0; NVAR]; n_modes];
        for n in dirs {
            let eig = self.system.eigen(qi, *n).ok()?;
            let projected: Vec<Vec<State>> = polys
                .iter()
                .map(|p| p.iter().map(|w| eig.to_characteristic(w)).collect())
                .collect();
            let blended = self.blend(&projected);
            for (o, w) in out.iter_mut().zip(&blended) {
                let back = eig.from_characteristic(w);
                for k in 0..NVAR {
                    o[k] += back[k] / dirs.len() as f64;
                }
            }
        }
        Some(out)
    }
}

/// `σ = ŵᵀ Σ ŵ` for variable `v`.
pub fn indicator(sigma: &crate::basis::Table, poly: &[State], v: usize) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for l in 1..n {
        let row = sigma.row(l);
        let mut t = 0.0;
        for m in 1..n {
            t += row[m] * poly[m][v];
        }
        s += poly[l][v] * t;
    }
    s.max(0.0)
}

/// `ω_s = ω̃_s / Σ ω̃`, `ω̃_s = λ_s / (σ_s + ε)^r`, evaluated in log space.
pub fn weno_weights(
    sigma: &[f64; STENCIL_COUNT],
    lambda_central: f64,
    lambda_sided: f64,
    epsilon: f64,
    exponent: i32,
) -> [f64; STENCIL_COUNT] {
    let logs: [f64; STENCIL_COUNT] = std::array::from_fn(|s| {
        let lam = if s == 0 { lambda_central } else { lambda_sided };
        lam.ln() - exponent as f64 * (sigma[s] + epsilon).ln()
    });
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = logs.map(|l| (l - max).exp());
    let total: f64 = raw.iter().sum();
    raw.map(|r| r / total)
}

/// Least squares by Householder QR with column scaling; `None` if rank
/// deficient.
fn solve_lsq(mut a: DMatrix<f64>, b: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let nc = a.ncols();
    let mut scale = vec![1.0; nc];
    for (c, s) in scale.iter_mut().enumerate() {
        let norm = a.column(c).norm();
        if norm == 0.0 {
            return None;
        }
        *s = 1.0 / norm;
        a.column_mut(c).scale_mut(*s);
    }
    let qr = a.qr();
    let r = qr.r();
    let max = (0..nc).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if (0..nc).any(|k| r[(k, k)].abs() <= 1e-10 * max) {
        return None;
    }
    let mut qtb = b;
    qr.q_tr_mul(&mut qtb);
    let mut x = r.solve_upper_triangular(&qtb.rows(0, nc).into_owned())?;
    for (c, s) in scale.iter().enumerate() {
        x.row_mut(c).scale_mut(*s);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{structured, StructuredSpec};
    use crate::model::{BaerNunziato, LinearAdvection, Phase};

    fn setup(n: usize, degree: usize) -> (Mesh, StencilSet, ReferenceElement) {
        let mesh = structured(&StructuredSpec::periodic_square(n, [0.0, 1.0])).unwrap();
        let st = StencilSet::build(&mesh, degree);
        let re = ReferenceElement::new(degree).unwrap();
        (mesh, st, re)
    }

    fn cell_averages(mesh: &Mesh, f: impl Fn([f64; 2]) -> State) -> Vec<State> {
        let rule = triangle_rule(12).unwrap();
        (0..mesh.n_elements())
            .map(|i| {
                let v = mesh.vertices(i);
                let mut q = [0.0; NVAR];
                for (p, w) in rule.iter() {
                    let fx = f(map_ref_to_phys(&v, p));
                    for k in 0..NVAR {
                        q[k] += 2.0 * w * fx[k];
                    }
                }
                q
            })
            .collect()
    }

    #[test]
    fn constants_are_reproduced() {
        let (mesh, st, re) = setup(6, 2);
        let sys = LinearAdvection { velocity: [1.0, 0.0] };
        let weno = Weno {
            mesh: &mesh,
            stencils: &st,
            re: &re,
            system: &sys,
            config: WenoConfig::default(),
        };
        let avg = vec![[2.5; NVAR]; mesh.n_elements()];
        let rec = weno.reconstruct(&avg);
        for i in 0..mesh.n_elements() {
            let w = rec.element(i);
            assert!((w[0][0] * constant_mode(&re) - 2.5).abs() < 1e-12);
            for l in 1..re.n_modes() {
                assert!(w[l].iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn polynomials_of_degree_m_are_exact() {
        for degree in 1..=3 {
            let (mesh, st, re) = setup(16, degree);
            let sys = LinearAdvection { velocity: [1.0, 0.0] };
            let weno = Weno {
                mesh: &mesh,
                stencils: &st,
                re: &re,
                system: &sys,
                config: WenoConfig {
                    mode: ReconstructionMode::Componentwise,
                    ..WenoConfig::default()
                },
            };
            // a polynomial of degree M, evaluated away from the periodic seam
            let f = move |x: [f64; 2]| -> State {
                let v = 1.0 + 0.5 * x[0] - 0.3 * x[1] + 0.2 * x[0].powi(degree as i32 - 1) * x[1];
                [v; NVAR]
            };
            let avg = cell_averages(&mesh, f);
            let rule = triangle_rule(degree).unwrap();
            for i in 0..mesh.n_elements() {
                let b = mesh.barycenter(i);
                if b[0] < 0.4 || b[0] > 0.6 || b[1] < 0.4 || b[1] > 0.6 {
                    continue;
                }
                let polys = weno.stencil_polynomials(i, &avg, &rule).unwrap();
                let psi0 = constant_mode(&re);
                for poly in polys {
                    let mut poly = poly;
                    poly[0] = avg[i].map(|v| v / psi0);
                    for p in [[0.1, 0.2], [0.7, 0.1], [0.3, 0.3]] {
                        let q = eval_modal(&poly, &re.spatial.eval_all(p));
                        let exact = f(mesh.map_ref_to_phys(i, p));
                        assert!((q[0] - exact[0]).abs() < 1e-10, "M={degree}: {}", q[0] - exact[0]);
                    }
                }
            }
        }
    }

    #[test]
    fn mean_is_preserved() {
        let (mesh, st, re) = setup(8, 2);
        let sys = LinearAdvection { velocity: [1.0, 0.0] };
        let weno = Weno {
            mesh: &mesh,
            stencils: &st,
            re: &re,
            system: &sys,
            config: WenoConfig::default(),
        };
        let avg = cell_averages(&mesh, |x| [(6.0 * x[0]).sin() + (x[1] > 0.5) as u8 as f64; NVAR]);
        let rec = weno.reconstruct(&avg);
        let rule = triangle_rule(4).unwrap();
        for i in 0..mesh.n_elements() {
            let mean: f64 = rule.iter().map(|(p, w)| 2.0 * w * rec.eval(&re, i, p)[0]).sum();
            assert!((mean - avg[i][0]).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_properties() {
        let sigma = [1.0; STENCIL_COUNT];
        let w = weno_weights(&sigma, 1e5, 1.0, 1e-14, 8);
        assert!((w[0] - 1e5 / (1e5 + 6.0)).abs() < 1e-15);
        let sigma = [3e-3, 1.0, 2e-6, 5.0, 0.1, 1e-2, 7.0];
        let w = weno_weights(&sigma, 1e5, 1.0, 1e-14, 8);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let scaled = weno_weights(&sigma.map(|s| 10.0 * s), 1e5, 1.0, 1e-14, 8);
        for (a, b) in w.iter().zip(scaled) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_is_quadratic() {
        let re = ReferenceElement::new(2).unwrap();
        let mut poly = vec![[0.0; NVAR]; re.n_modes()];
        poly[0][0] = 3.0;
        assert_eq!(indicator(&re.sigma, &poly, 0), 0.0);
        poly[1][0] = 0.4;
        poly[4][0] = -0.2;
        let s1 = indicator(&re.sigma, &poly, 0);
        let scaled: Vec<State> = poly.iter().map(|w| w.map(|v| 3.0 * v)).collect();
        assert!((indicator(&re.sigma, &scaled, 0) - 9.0 * s1).abs() < 1e-12 * s1);
    }

    #[test]
    fn characteristic_mode_bounds_rp1_jump() {
        let bn = BaerNunziato::new(Phase { gamma: 1.4, pi: 0.0 }, Phase { gamma: 1.4, pi: 0.0 });
        let left = bn.from_primitive(&[1.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.4]).unwrap();
        let right = bn.from_primitive(&[2.0, 0.0, 0.0, 2.0, 1.5, 0.0, 0.0, 2.0, 0.8]).unwrap();
        let (mesh, st, re) = setup(20, 2);
        let weno = Weno {
            mesh: &mesh,
            stencils: &st,
            re: &re,
            system: &bn,
            config: WenoConfig::default(),
        };
        let avg: Vec<State> = (0..mesh.n_elements())
            .map(|i| if mesh.barycenter(i)[0] < 0.5 { left } else { right })
            .collect();
        let rec = weno.reconstruct(&avg);
        assert!(rec.componentwise_fallback.is_empty());
        let delta = 0.05 * 0.4;
        for i in 0..mesh.n_elements() {
            for p in re.spacetime.spatial_nodes() {
                let phi = rec.eval(&re, i, *p)[8];
                assert!(phi >= 0.4 - delta && phi <= 0.8 + delta, "{phi}");
            }
        }
    }
}
