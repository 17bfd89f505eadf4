use super::poly::{Poly1, Poly2};
use super::quadrature::triangle_rule;
use crate::error::{Error, Result};

/// Number of modes of a complete bivariate polynomial of degree `m`.
pub const fn dof_count(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Modes of the highest supported degree.
pub const MAX_MODES: usize = dof_count(3);

/// Orthonormal Dubiner basis on the reference triangle `T_e`.
///
/// Modes are ordered by total degree; mode 0 is the constant. Each mode is
/// stored in monomial form together with all its partial derivatives up to
/// order `M`, so evaluation of any derivative is a plain polynomial sum.
#[derive(Debug, Clone)]
pub struct SpatialBasis {
    degree: usize,
    /// `derivs[l][k]`: derivative `(α, β) = multi_index[k]` of mode `l`.
    derivs: Vec<Vec<Poly2>>,
    multi_index: Vec<(usize, usize)>,
    /// Monomial coefficients of the modes, `coeffs[l * n + k]` for the
    /// monomial `multi_index[k]`.
    coeffs: Vec<f64>,
}

impl SpatialBasis {
    pub fn new(degree: usize) -> Self {
        let mut modes = Vec::with_capacity(dof_count(degree));
        // collapsed coordinates: a = 2ξ/(1-η) - 1, b = 2η - 1
        let one_minus_eta = Poly2::affine(1.0, 0.0, -1.0);
        let a_numer = Poly2::affine(-1.0, 2.0, 1.0); // (1-η)·a
        let b = Poly2::affine(-1.0, 0.0, 2.0);
        for d in 0..=degree {
            for q in 0..=d {
                let p = d - q;
                // (1-η)^p P_p(a) expanded without division
                let leg = Poly1::jacobi(p, 0.0, 0.0);
                let mut first = Poly2::constant(0.0);
                for (k, &c) in leg.0.iter().enumerate() {
                    let term = a_numer.powi(k).mul(&one_minus_eta.powi(p - k)).scale(c);
                    first = first.add(&term);
                }
                let second = Poly2::compose(&Poly1::jacobi(q, 2.0 * p as f64 + 1.0, 0.0), &b);
                modes.push(first.mul(&second));
            }
        }
        // normalize to unit L2 norm on T_e
        let rule = triangle_rule(2 * degree).expect("supported degree");
        let modes: Vec<Poly2> = modes
            .into_iter()
            .map(|m| {
                let n2: f64 = rule.iter().map(|(p, w)| w * m.eval(p[0], p[1]).powi(2)).sum();
                m.scale(1.0 / n2.sqrt())
            })
            .collect();

        let mut multi_index = Vec::new();
        for order in 0..=degree {
            for beta in 0..=order {
                multi_index.push((order - beta, beta));
            }
        }
        let derivs = modes
            .iter()
            .map(|m| {
                multi_index
                    .iter()
                    .map(|&(a, b)| m.derivative(a, b))
                    .collect()
            })
            .collect();
        let coeffs = modes
            .iter()
            .flat_map(|m| multi_index.iter().map(|&(a, b)| m.coeff(a, b)))
            .collect();
        Self {
            degree,
            derivs,
            multi_index,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.derivs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.derivs.is_empty()
    }

    /// `ψ_l(ξ, η)`; `l` is 0-based.
    pub fn eval(&self, l: usize, p: [f64; 2]) -> Result<f64> {
        self.derivative(l, 0, 0, p)
    }

    /// `∂^{α+β} ψ_l / ∂ξ^α ∂η^β`. Orders above the basis degree are zero.
    pub fn derivative(&self, l: usize, alpha: usize, beta: usize, p: [f64; 2]) -> Result<f64> {
        let modes = self.derivs.get(l).ok_or(Error::IndexOutOfRange {
            index: l,
            size: self.len(),
        })?;
        if alpha + beta > self.degree {
            return Ok(0.0);
        }
        let k = self
            .multi_index
            .iter()
            .position(|&mi| mi == (alpha, beta))
            .unwrap();
        Ok(modes[k].eval(p[0], p[1]))
    }

    /// Gradient `(∂ξ ψ_l, ∂η ψ_l)`.
    pub fn gradient(&self, l: usize, p: [f64; 2]) -> [f64; 2] {
        if self.degree == 0 {
            return [0.0, 0.0];
        }
        let m = &self.derivs[l];
        [m[1].eval(p[0], p[1]), m[2].eval(p[0], p[1])]
    }

    /// All mode values at a point.
    pub fn eval_all(&self, p: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(p, &mut out);
        out
    }

    /// All mode values at a point, written to the first `len()` entries.
    pub fn eval_into(&self, p: [f64; 2], out: &mut [f64]) {
        if self.multi_index.len() > MAX_MODES {
            for (o, m) in out.iter_mut().zip(&self.derivs) {
                *o = m[0].eval(p[0], p[1]);
            }
            return;
        }
        let mut mono = [0.0; MAX_MODES];
        self.monomials_into(p, &mut mono);
        self.combine_monomials(&mono, out);
    }

    /// Monomials `ξ^α η^β` in the order of the mode coefficients (degree 3 at most).
    pub fn monomials_into(&self, p: [f64; 2], out: &mut [f64]) {
        let mut xp = [1.0; 4];
        let mut yp = [1.0; 4];
        for d in 1..=self.degree {
            xp[d] = xp[d - 1] * p[0];
            yp[d] = yp[d - 1] * p[1];
        }
        for (m, &(a, b)) in out.iter_mut().zip(&self.multi_index) {
            *m = xp[a] * yp[b];
        }
    }

    /// Mode values from monomial values (or any linear functional of them,
    /// such as averages over a region).
    pub fn combine_monomials(&self, mono: &[f64], out: &mut [f64]) {
        let n = self.multi_index.len();
        for (l, o) in out.iter_mut().take(self.len()).enumerate() {
            let row = &self.coeffs[l * n..(l + 1) * n];
            *o = row.iter().zip(&mono[..n]).map(|(c, m)| c * m).sum();
        }
    }

    pub(crate) fn mode(&self, l: usize) -> &Poly2 {
        &self.derivs[l][0]
    }

    /// Oscillation-indicator matrix
    /// `Σ_lm = Σ_{1 <= α+β <= M} ∫_{T_e} ∂^{α+β}ψ_l ∂^{α+β}ψ_m`.
    pub fn oscillation_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let rule = triangle_rule(2 * self.degree).expect("supported degree");
        let mut sigma = vec![vec![0.0; n]; n];
        for (k, &(a, b)) in self.multi_index.iter().enumerate() {
            if a + b == 0 {
                continue;
            }
            for (p, w) in rule.iter() {
                let vals: Vec<f64> = self.derivs.iter().map(|m| m[k].eval(p[0], p[1])).collect();
                for l in 0..n {
                    for m in 0..n {
                        sigma[l][m] += w * vals[l] * vals[m];
                    }
                }
            }
        }
        // exact symmetry
        for l in 0..n {
            for m in 0..l {
                let v = 0.5 * (sigma[l][m] + sigma[m][l]);
                sigma[l][m] = v;
                sigma[m][l] = v;
            }
        }
        sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_mode_is_constant() {
        let basis = SpatialBasis::new(3);
        let c = basis.eval(0, [0.1, 0.2]).unwrap();
        for p in [[0.0, 0.0], [0.7, 0.1], [0.3, 0.6]] {
            assert!((basis.eval(0, p).unwrap() - c).abs() < 1e-15);
        }
        assert!((c - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_on_reference_triangle() {
        for m in 1..=3 {
            let basis = SpatialBasis::new(m);
            let rule = triangle_rule(2 * m).unwrap();
            for l in 0..basis.len() {
                for k in 0..basis.len() {
                    let s: f64 = rule
                        .iter()
                        .map(|(p, w)| w * basis.eval(l, p).unwrap() * basis.eval(k, p).unwrap())
                        .sum();
                    let expected = if l == k { 1.0 } else { 0.0 };
                    assert!((s - expected).abs() < 1e-13, "M={m} l={l} k={k} s={s}");
                }
            }
        }
    }

    #[test]
    fn index_out_of_range() {
        let basis = SpatialBasis::new(2);
        assert!(matches!(
            basis.eval(6, [0.0, 0.0]),
            Err(Error::IndexOutOfRange { index: 6, size: 6 })
        ));
    }

    #[test]
    fn oscillation_matrix_annihilates_constants() {
        let basis = SpatialBasis::new(3);
        let sigma = basis.oscillation_matrix();
        for l in 0..basis.len() {
            assert_eq!(sigma[0][l], 0.0);
            assert_eq!(sigma[l][0], 0.0);
            for m in 0..basis.len() {
                assert_eq!(sigma[l][m], sigma[m][l]);
            }
        }
    }
}
