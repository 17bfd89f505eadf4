//! Small dense kernels for the 9×9 quasi-linear matrices: null spaces by
//! full-pivot elimination and eigendecompositions from known real spectra.

use nalgebra::SMatrix;

use crate::error::{Error, Result};

pub const N: usize = 9;
pub type Mat9 = SMatrix<f64, N, N>;

/// Condition number `‖R‖∞ ‖R⁻¹‖∞` above which an eigenbasis is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Right eigenvectors (columns of `r`), their inverse and eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub r: Mat9,
    pub r_inv: Mat9,
    pub lambda: [f64; N],
}

impl Eigen {
    /// `R f(Λ) R⁻¹ x`
    pub fn apply_fn(&self, x: &[f64; N], f: impl Fn(f64) -> f64) -> [f64; N] {
        let mut w = [0.0; N];
        for (i, wi) in w.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, xj) in x.iter().enumerate() {
                s += self.r_inv[(i, j)] * xj;
            }
            *wi = f(self.lambda[i]) * s;
        }
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, wj) in w.iter().enumerate() {
                s += self.r[(i, j)] * wj;
            }
            *yi = s;
        }
        y
    }

    pub fn to_characteristic(&self, x: &[f64; N]) -> [f64; N] {
        mat_vec(&self.r_inv, x)
    }

    pub fn from_characteristic(&self, w: &[f64; N]) -> [f64; N] {
        mat_vec(&self.r, w)
    }
}

pub fn mat_vec(m: &Mat9, x: &[f64; N]) -> [f64; N] {
    let mut y = [0.0; N];
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, xj) in x.iter().enumerate() {
            s += m[(i, j)] * xj;
        }
        *yi = s;
    }
    y
}

pub fn norm_inf(m: &Mat9) -> f64 {
    (0..N)
        .map(|i| (0..N).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Basis of the null space of `a`, assuming it has dimension `dim`.
///
/// Elimination stops after `N - dim` full pivots; the remaining block is
/// treated as zero. Returned vectors are scaled to unit max-norm.
pub fn null_space(a: &Mat9, dim: usize) -> Vec<[f64; N]> {
    let mut m = [[0.0; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[(i, j)];
        }
    }
    let mut col_perm: [usize; N] = std::array::from_fn(|j| j);
    let rank = N - dim;
    for k in 0..rank {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for (i, row) in m.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        m.swap(k, pi);
        if pj != k {
            for row in m.iter_mut() {
                row.swap(k, pj);
            }
            col_perm.swap(k, pj);
        }
        let piv = m[k][k];
        if piv == 0.0 {
            continue;
        }
        let inv = 1.0 / piv;
        for v in m[k].iter_mut() {
            *v *= inv;
        }
        let pivot_row = m[k];
        for (i, row) in m.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let f = row[k];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
    }
    (rank..N)
        .map(|free| {
            let mut v = [0.0; N];
            v[col_perm[free]] = 1.0;
            for k in 0..rank {
                v[col_perm[k]] = -m[k][free];
            }
            let s = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
            v.map(|x| x / s)
        })
        .collect()
}

/// Eigendecomposition of a diagonalizable matrix with known real spectrum.
///
/// Eigenvalues closer than `cluster_tol` are grouped and their common
/// eigenspace is extracted as a null space. Fails when an eigenspace is
/// deficient (residual check) or the eigenvector matrix is ill-conditioned.
pub fn eigen_from_spectrum(a: &Mat9, spectrum: &[f64; N]) -> Result<Eigen> {
    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| spectrum[i].total_cmp(&spectrum[j]));
    let scale = norm_inf(a).max(f64::MIN_POSITIVE);
    let cluster_tol = 1e-10 * scale;
    let residual_tol = 1e-8 * scale;

    let mut r = Mat9::zeros();
    let mut lambda = [0.0; N];
    let mut col = 0;
    let mut start = 0;
    while start < N {
        let mut end = start + 1;
        while end < N && spectrum[order[end]] - spectrum[order[end - 1]] <= cluster_tol {
            end += 1;
        }
        let dim = end - start;
        let mean = order[start..end].iter().map(|&i| spectrum[i]).sum::<f64>() / dim as f64;
        let mut shifted = *a;
        for i in 0..N {
            shifted[(i, i)] -= mean;
        }
        for v in null_space(&shifted, dim) {
            let res = mat_vec(&shifted, &v);
            if res.iter().any(|x| !(x.abs() <= residual_tol)) {
                return Err(Error::HyperbolicityLoss);
            }
            for (i, vi) in v.iter().enumerate() {
                r[(i, col)] = *vi;
            }
            lambda[col] = mean;
            col += 1;
        }
        start = end;
    }
    let r_inv = r
        .try_inverse()
        .ok_or(Error::DegenerateEigenstructure(f64::INFINITY))?;
    let cond = norm_inf(&r) * norm_inf(&r_inv);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateEigenstructure(cond));
    }
    Ok(Eigen { r, r_inv, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_similar(rng: &mut ChaCha8Rng, lambda: &[f64; N]) -> Mat9 {
        let p = Mat9::from_fn(|i, j| rng.gen_range(-1.0..1.0) + if i == j { 3.0 } else { 0.0 });
        let d = Mat9::from_diagonal(&nalgebra::SVector::<f64, N>::from_column_slice(lambda));
        p * d * p.try_inverse().unwrap()
    }

    #[test]
    fn null_space_of_rank_deficient_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lambda = [0.0, 0.0, 0.0, 1.0, 2.0, 3.0, -1.0, 4.0, 5.0];
        let a = random_similar(&mut rng, &lambda);
        let ns = null_space(&a, 3);
        assert_eq!(ns.len(), 3);
        for v in &ns {
            let r = mat_vec(&a, v);
            assert!(r.iter().all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn reconstructs_matrix_with_repeated_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lambda = [1.5, -0.5, 1.5, 1.5, 2.5, -2.0, 0.3, 0.3, 4.0];
        let a = random_similar(&mut rng, &lambda);
        let e = eigen_from_spectrum(&a, &lambda).unwrap();
        let d = Mat9::from_diagonal(&nalgebra::SVector::<f64, N>::from_column_slice(&e.lambda));
        let back = e.r * d * e.r_inv;
        assert!((back - a).amax() < 1e-9 * norm_inf(&a));
    }

    #[test]
    fn defective_matrix_is_rejected() {
        let mut a = Mat9::from_diagonal_element(2.0);
        a[(0, 1)] = 1.0;
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        let lambda = [1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0];
        assert!(eigen_from_spectrum(&a, &lambda).is_err());
    }

    #[test]
    fn apply_fn_abs_of_diagonal() {
        let lambda = [-1.0, 2.0, -3.0, 4.0, 5.0, -6.0, 7.0, 8.0, -9.0];
        let a = Mat9::from_diagonal(&nalgebra::SVector::<f64, N>::from_column_slice(&lambda));
        let e = eigen_from_spectrum(&a, &lambda).unwrap();
        let x = [1.0; N];
        let y = e.apply_fn(&x, f64::abs);
        for (yi, li) in y.iter().zip(lambda) {
            assert!((yi - li.abs()).abs() < 1e-14);
        }
    }
}
