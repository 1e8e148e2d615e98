//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// `A[perm[i], perm[j]]`.
pub fn permute_symmetric(a: &CMatrix, perm: &[usize]) -> CMatrix {
    let p = perm.len();
    CMatrix::from_fn(p, p, |i, j| a[(perm[i], perm[j])])
}

/// Inverse of [`permute_symmetric`].
pub fn unpermute_symmetric(a: &CMatrix, perm: &[usize]) -> CMatrix {
    let p = perm.len();
    let mut out = CMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            out[(perm[i], perm[j])] = a[(i, j)];
        }
    }
    out
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (pos, &v) in perm.iter().enumerate() {
        inv[v] = pos;
    }
    inv
}

pub fn is_permutation(perm: &[usize], p: usize) -> bool {
    if perm.len() != p {
        return false;
    }
    let mut seen = vec![false; p];
    for &v in perm {
        if v >= p || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

/// Moore–Penrose pseudo-inverse of a Hermitian matrix; eigenvalues below
/// `rel_cutoff * λ_max` are treated as zero.
pub fn pinv_hermitian(a: &CMatrix, rel_cutoff: f64) -> CMatrix {
    let n = a.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let herm = (a + a.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let cut = rel_cutoff * lmax;
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= cut || lam == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        out += (&v * v.adjoint()).scale(1.0 / lam);
    }
    out
}

/// Solves `A x = b` for Hermitian PSD `A`: Cholesky when the factorization is
/// numerically sound, pseudo-inverse otherwise.
pub struct HermitianSolver {
    chol: Option<nalgebra::Cholesky<C64, nalgebra::Dyn>>,
    pinv: Option<CMatrix>,
}

impl HermitianSolver {
    pub fn new(a: &CMatrix, rel_cutoff: f64) -> Self {
        let scale = trace_re(a).abs().max(f64::MIN_POSITIVE);
        if let Some(ch) = a.clone().cholesky() {
            let l = ch.l_dirty();
            let min_pivot = (0..a.nrows()).map(|i| l[(i, i)].re).fold(f64::INFINITY, f64::min);
            if min_pivot * min_pivot > rel_cutoff * scale {
                return Self { chol: Some(ch), pinv: None };
            }
        }
        Self { chol: None, pinv: Some(pinv_hermitian(a, rel_cutoff)) }
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        match (&self.chol, &self.pinv) {
            (Some(ch), _) => ch.solve(b),
            (None, Some(p)) => p * b,
            _ => unreachable!(),
        }
    }

    pub fn is_regular(&self) -> bool {
        self.chol.is_some()
    }
}

/// Lower Cholesky factor `G` of a Hermitian PD matrix (`A = G G^H`).
pub fn cholesky_lower(a: &CMatrix) -> Option<CMatrix> {
    a.clone().cholesky().map(|c| c.unpack())
}

/// Inverse of a nonsingular lower-triangular matrix.
pub fn lower_triangular_inverse(l: &CMatrix) -> Option<CMatrix> {
    let n = l.nrows();
    l.solve_lower_triangular(&CMatrix::identity(n, n))
}

/// Lower-triangular `L` with positive real diagonal such that `L^H L = A^{-1}`.
///
/// With `A = G G^H` the ordinary Cholesky factorization, `L = G^{-1}`.
pub fn inverse_cholesky_factor(a: &CMatrix) -> Option<CMatrix> {
    let g = cholesky_lower(a)?;
    let mut l = lower_triangular_inverse(&g)?;
    for i in 0..l.nrows() {
        for j in (i + 1)..l.ncols() {
            l[(i, j)] = ZERO;
        }
        l[(i, i)] = C64::new(l[(i, i)].re, 0.0);
    }
    Some(l)
}

/// Frobenius norm restricted to the strictly lower triangle.
pub fn strict_lower_norm_sqr(m: &CMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i.min(m.ncols()) {
            s += m[(i, j)].norm_sqr();
        }
    }
    s
}

/// Complex soft-thresholding `a · max(0, 1 − τ/|a|)`.
pub fn soft_threshold(a: C64, tau: f64) -> C64 {
    let r = a.norm();
    if r <= tau {
        ZERO
    } else {
        a.scale(1.0 - tau / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm_pd() -> CMatrix {
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64 * 0.3 - 0.5, (i as f64 - j as f64) * 0.2));
        &b * b.adjoint() + CMatrix::identity(3, 3)
    }

    #[test]
    fn inverse_cholesky_reconstructs_inverse() {
        let a = herm_pd();
        let l = inverse_cholesky_factor(&a).unwrap();
        let prod = l.adjoint() * &l * &a;
        assert!((prod - CMatrix::identity(3, 3)).norm() < 1e-12);
        for i in 0..3 {
            assert!(l[(i, i)].re > 0.0 && l[(i, i)].im == 0.0);
            for j in i + 1..3 {
                assert_eq!(l[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn pinv_of_singular_projector() {
        let v = CVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(0.0, 2.0)]);
        let a = &v * v.adjoint();
        let p = pinv_hermitian(&a, 1e-10);
        // A P A = A
        assert!((&a * &p * &a - &a).norm() < 1e-12);
    }

    #[test]
    fn soft_threshold_values() {
        let z = soft_threshold(C64::new(3.0, 4.0), 2.5);
        assert!((z - C64::new(1.5, 2.0)).norm() < 1e-15);
        assert_eq!(soft_threshold(C64::new(0.3, 0.4), 0.5), ZERO);
    }

    #[test]
    fn permutation_roundtrip() {
        let a = herm_pd();
        let perm = [2, 0, 1];
        let b = permute_symmetric(&a, &perm);
        assert_eq!(unpermute_symmetric(&b, &perm), a);
        assert_eq!(inverse_permutation(&perm), vec![1, 2, 0]);
        assert!(is_permutation(&perm, 3));
        assert!(!is_permutation(&[0, 0, 1], 3));
    }
}
