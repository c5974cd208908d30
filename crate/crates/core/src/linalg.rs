//! Dense complex linear algebra used by the numerical modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Residual allowed for dense solves, relative to `max(1, |A| |X|)`.
pub const LINEAR_SOLVE_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |m, &s| m.max(s))
}

/// Dense inverse by LU with an explicit singularity and residual check.
pub fn inverse_checked(a: &CMatrix, what: &str) -> Result<CMatrix> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let u = lu.u();
    let (mut min_piv, mut max_piv) = (f64::INFINITY, 0.0_f64);
    for i in 0..n {
        let p = u[(i, i)].norm();
        min_piv = min_piv.min(p);
        max_piv = max_piv.max(p);
    }
    if n > 0 && (min_piv == 0.0 || min_piv < 1e-14 * max_piv.max(1.0)) {
        return Err(Error::Singular {
            what: what.to_string(),
            pivot: min_piv,
        });
    }
    let inv = lu.try_inverse().ok_or_else(|| Error::Singular {
        what: what.to_string(),
        pivot: min_piv,
    })?;
    let residual = max_abs(&(a * &inv - identity(n)));
    let scale = (max_abs(a) * max_abs(&inv) * n as f64).max(1.0);
    if residual > LINEAR_SOLVE_TOL * scale {
        return Err(Error::Tolerance {
            what: format!("inverse residual of {what}"),
            value: residual,
            limit: LINEAR_SOLVE_TOL * scale,
        });
    }
    Ok(inv)
}

/// Hermitian part `(A + A^dagger) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    if h.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Matrix exponential (Pade scaling and squaring).
pub fn expm(a: &CMatrix) -> CMatrix {
    if a.is_empty() {
        return a.clone();
    }
    a.exp()
}

/// `exp(-i h H)` for Hermitian `H`, exactly unitary up to rounding.
pub fn unitary_exp(h: &CMatrix, step: f64) -> CMatrix {
    let n = h.nrows();
    if n == 0 {
        return h.clone();
    }
    let eig = h.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -step * l)),
    ));
    q * phases * q.adjoint()
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_of_diagonal() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), ZERO, ZERO, c(0.0, 4.0)]);
        let inv = inverse_checked(&a, "diag").unwrap();
        assert!((inv[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((inv[(1, 1)] - c(0.0, -0.25)).norm() < 1e-15);
    }

    #[test]
    fn singular_is_reported() {
        let a = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ONE, ONE]);
        assert!(matches!(inverse_checked(&a, "ones"), Err(Error::Singular { .. })));
    }

    #[test]
    fn expm_of_diagonal_and_unitary_exp_agree() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(-2.0, 0.0)]);
        let u1 = unitary_exp(&h, 0.7);
        let u2 = expm(&(h.clone() * c(0.0, -0.7)));
        assert!(max_abs(&(u1.clone() - u2)) < 1e-12);
        assert!(max_abs(&(u1.adjoint() * u1 - identity(2))) < 1e-14);
    }

    #[test]
    fn kron_shape_and_entries() {
        let a = CMatrix::from_row_slice(1, 2, &[ONE, c(2.0, 0.0)]);
        let b = identity(2);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (2, 4));
        assert_eq!(k[(1, 3)], c(2.0, 0.0));
    }
}
