//! Small dense helpers on top of `nalgebra`.
//!
//! Every solve goes through partial-pivoting LU and is followed by an explicit
//! residual check; a factorization whose smallest pivot is negligible relative
//! to the largest is treated as singular.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)] // float math for no_std; unused when std is linked
use num_traits::Float;

/// Relative pivot size below which a factorization is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Residual tolerance used by every oracle solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Solves `a x = b` with partial pivoting. Returns `None` when the matrix is
/// numerically singular.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    assert!(a.is_square() && a.nrows() == b.len());
    let lu = a.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..u.nrows() {
        let p = u[(i, i)].abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(hi > 0.0) || lo <= PIVOT_TOLERANCE * hi.max(1.0) {
        return None;
    }
    lu.solve(b)
}

/// Largest absolute entry of `a x − b`.
pub fn residual_inf(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a * x - b).amax()
}

/// Largest eigenvalue of the symmetric part `(a + aᵀ)/2`.
pub fn max_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.max()
}

/// Numerical rank from the singular values, relative tolerance `rel_tol`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Total-variation distance `½‖p − q‖₁`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve(&a, &DVector::from_vec(alloc::vec![1.0, 1.0])).is_none());
        assert!(solve(&DMatrix::zeros(2, 2), &DVector::zeros(2)).is_none());
    }

    #[test]
    fn solve_and_residual() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 2.0, 3.0]);
        let b = DVector::from_vec(alloc::vec![1.0, 2.0]);
        let x = solve(&a, &b).unwrap();
        assert!(residual_inf(&a, &x, &b) < 1e-14);
        assert!((x[0] - 0.1).abs() < 1e-14 && (x[1] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn symmetric_part_eigenvalue() {
        // Symmetric part of [[-1, 4], [0, -1]] is [[-1, 2], [2, -1]] with eigenvalues 1, -3.
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 4.0, 0.0, -1.0]);
        assert!((max_symmetric_eigenvalue(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_probe() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(rank(&a, 1e-10), 2);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(rank(&b, 1e-10), 1);
    }
}
