//! Dense polynomials in monomial form, used to build and differentiate the
//! reference-element bases exactly.

/// Univariate polynomial, `c[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly1(pub Vec<f64>);

impl Poly1 {
    pub fn constant(c: f64) -> Self {
        Self(vec![c])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() <= 1 {
            return Self(vec![0.0]);
        }
        Self(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    fn axpy_shifted(&mut self, a: f64, other: &Poly1, shift: usize) {
        if self.0.len() < other.0.len() + shift {
            self.0.resize(other.0.len() + shift, 0.0);
        }
        for (k, &c) in other.0.iter().enumerate() {
            self.0[k + shift] += a * c;
        }
    }

    /// Jacobi polynomial `P_n^{(α,β)}(x)` via the three-term recurrence.
    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Self {
        let p0 = Poly1::constant(1.0);
        if n == 0 {
            return p0;
        }
        let mut p1 = Poly1(vec![
            0.5 * (alpha - beta),
            0.5 * (alpha + beta + 2.0),
        ]);
        let mut prev = p0;
        for k in 2..=n {
            let k = k as f64;
            let s = 2.0 * k + alpha + beta;
            let a1 = 2.0 * k * (k + alpha + beta) * (s - 2.0);
            let a2 = (s - 1.0) * (alpha * alpha - beta * beta);
            let a3 = (s - 2.0) * (s - 1.0) * s;
            let a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
            let mut next = Poly1(vec![0.0]);
            next.axpy_shifted(a2 / a1, &p1, 0);
            next.axpy_shifted(a3 / a1, &p1, 1);
            next.axpy_shifted(-a4 / a1, &prev, 0);
            prev = p1;
            p1 = next;
        }
        p1
    }
}

/// Bivariate polynomial of total degree at most `degree`;
/// `c[a * (degree + 1) + b]` multiplies `ξ^a η^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    degree: usize,
    c: Vec<f64>,
}

impl Poly2 {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            c: vec![0.0; (degree + 1) * (degree + 1)],
        }
    }

    pub fn constant(v: f64) -> Self {
        let mut p = Self::zero(0);
        p.c[0] = v;
        p
    }

    /// `a0 + ax ξ + ay η`
    pub fn affine(a0: f64, ax: f64, ay: f64) -> Self {
        let mut p = Self::zero(1);
        p.set(0, 0, a0);
        p.set(1, 0, ax);
        p.set(0, 1, ay);
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        a * (self.degree + 1) + b
    }

    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.degree {
            0.0
        } else {
            self.c[self.idx(a, b)]
        }
    }

    fn set(&mut self, a: usize, b: usize, v: f64) {
        let i = self.idx(a, b);
        self.c[i] = v;
    }

    pub fn add(&self, other: &Poly2) -> Poly2 {
        let degree = self.degree.max(other.degree);
        let mut out = Poly2::zero(degree);
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                out.set(a, b, self.coeff(a, b) + other.coeff(a, b));
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly2 {
        Poly2 {
            degree: self.degree,
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let degree = self.degree + other.degree;
        let mut out = Poly2::zero(degree);
        for a in 0..=self.degree {
            for b in 0..=(self.degree - a) {
                let x = self.coeff(a, b);
                if x == 0.0 {
                    continue;
                }
                for c in 0..=other.degree {
                    for d in 0..=(other.degree - c) {
                        let i = out.idx(a + c, b + d);
                        out.c[i] += x * other.coeff(c, d);
                    }
                }
            }
        }
        out
    }

    pub fn powi(&self, n: usize) -> Poly2 {
        (0..n).fold(Poly2::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Substitute a univariate polynomial: `p(self)`.
    pub fn compose(p: &Poly1, inner: &Poly2) -> Poly2 {
        let mut out = Poly2::constant(0.0);
        let mut power = Poly2::constant(1.0);
        for &c in &p.0 {
            out = out.add(&power.scale(c));
            power = power.mul(inner);
        }
        out
    }

    /// `∂^{α+β} / ∂ξ^α ∂η^β`
    pub fn derivative(&self, alpha: usize, beta: usize) -> Poly2 {
        if alpha + beta > self.degree {
            return Poly2::zero(0);
        }
        let degree = self.degree - alpha - beta;
        let mut out = Poly2::zero(degree);
        let falling = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64);
        for a in alpha..=self.degree {
            for b in beta..=(self.degree - a) {
                let v = self.coeff(a, b) * falling(a, alpha) * falling(b, beta);
                out.set(a - alpha, b - beta, v);
            }
        }
        out
    }

    pub fn eval(&self, xi: f64, eta: f64) -> f64 {
        let mut acc = 0.0;
        let mut xa = 1.0;
        for a in 0..=self.degree {
            let mut term = 0.0;
            let mut yb = 1.0;
            for b in 0..=(self.degree - a) {
                term += self.c[self.idx(a, b)] * yb;
                yb *= eta;
            }
            acc += term * xa;
            xa *= xi;
        }
        acc
    }

    /// Exact integral over the reference triangle.
    pub fn integrate(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..=self.degree {
            for b in 0..=(self.degree - a) {
                s += self.coeff(a, b) * super::quadrature::monomial_integral(a, b);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_matches_closed_forms() {
        let p2 = Poly1::jacobi(2, 0.0, 0.0);
        let p3 = Poly1::jacobi(3, 0.0, 0.0);
        for &x in &[-0.7, 0.1, 0.9] {
            assert!((p2.eval(x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
            assert!((p3.eval(x) - 0.5 * (5.0 * x * x * x - 3.0 * x)).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobi_orthogonality_with_weight() {
        // ∫_{-1}^{1} (1-x)^α P_m P_n dx = 0, m != n
        let alpha = 3.0;
        let rule = crate::basis::quadrature::LineRule::gauss_legendre(12);
        for m in 0..4 {
            for n in 0..m {
                let pm = Poly1::jacobi(m, alpha, 0.0);
                let pn = Poly1::jacobi(n, alpha, 0.0);
                let s: f64 = rule
                    .iter()
                    .map(|(t, w)| {
                        let x = 2.0 * t - 1.0;
                        2.0 * w * (1.0 - x).powf(alpha) * pm.eval(x) * pn.eval(x)
                    })
                    .sum();
                assert!(s.abs() < 1e-12, "m={m} n={n}: {s}");
            }
        }
    }

    #[test]
    fn derivative_and_product() {
        let p = Poly2::affine(1.0, 2.0, 3.0);
        let q = p.mul(&p);
        let (x, y) = (0.3, 0.2);
        let v = 1.0 + 2.0 * x + 3.0 * y;
        assert!((q.eval(x, y) - v * v).abs() < 1e-14);
        assert!((q.derivative(1, 0).eval(x, y) - 4.0 * v).abs() < 1e-14);
        assert!((q.derivative(1, 1).eval(x, y) - 12.0).abs() < 1e-14);
        assert!((Poly2::constant(1.0).integrate() - 0.5).abs() < 1e-16);
    }
}
