//! Gauss-type quadrature on the unit interval and on the reference triangle
//! with vertices (0,0), (1,0), (0,1).

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Highest exactness degree served by [`triangle_rule`].
pub const MAX_TRIANGLE_DEGREE: usize = 40;

/// Quadrature rule on the unit interval [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    /// `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        let n = NonZeroUsize::new(n.max(1)).unwrap();
        let rule = GaussLegendre::new(n);
        let mut pairs: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize so that mirrored points agree bit-for-bit
        let len = pairs.len();
        for i in 0..len / 2 {
            let j = len - 1 - i;
            let x = 0.5 * (pairs[i].0 + (1.0 - pairs[j].0));
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (x, w);
            pairs[j] = (1.0 - x, w);
        }
        if len % 2 == 1 {
            pairs[len / 2].0 = 0.5;
        }
        Self {
            points: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Smallest Gauss-Legendre rule exact for degree `degree`.
    pub fn with_exactness(degree: usize) -> Self {
        Self::gauss_legendre(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Quadrature rule on the reference triangle. Weights sum to 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Rule integrating every monomial `ξ^a η^b` with `a + b <= degree` exactly.
///
/// Degrees 0 and 1 use the centroid rule. Higher degrees use a collapsed
/// (Duffy) tensor product of Gauss-Legendre rules.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    if degree <= 1 {
        return Ok(TriangleRule {
            degree,
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
        });
    }
    // ∫_T f = ∫_0^1 ∫_0^1 f(u (1 - v), v) (1 - v) du dv
    let along = LineRule::with_exactness(degree);
    let across = LineRule::with_exactness(degree + 1);
    let mut points = Vec::with_capacity(along.len() * across.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (v, wv) in across.iter() {
        for (u, wu) in along.iter() {
            points.push([u * (1.0 - v), v]);
            weights.push(wu * wv * (1.0 - v));
        }
    }
    Ok(TriangleRule {
        degree,
        points,
        weights,
    })
}

/// Closed form `∫_T ξ^a η^b = a! b! / (a + b + 2)!`.
pub fn monomial_integral(a: usize, b: usize) -> f64 {
    let fact = |n: usize| (1..=n).fold(1.0_f64, |acc, k| acc * k as f64);
    fact(a) * fact(b) / fact(a + b + 2)
}
