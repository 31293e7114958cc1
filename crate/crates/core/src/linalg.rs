//! Dense linear solves for the small systems the oracles and critics need.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major `n x n`.
pub fn solve<R: Real>(mut a: Vec<Vec<R>>, mut b: Vec<R>) -> Result<Vec<R>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::Domain(format!("solve: expected {n}x{n} system")));
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if !(a[pivot][col].abs() > R::zero()) {
            return Err(Error::Numeric(format!("solve: singular matrix at column {col}")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == R::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![R::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("solve: non-finite solution".into()));
    }
    Ok(x)
}

/// Ridge least squares: argmin_w ‖X w − y‖² + ridge·‖w‖².
pub fn ridge_least_squares<R: Real>(rows: &[Vec<R>], targets: &[R], ridge: R) -> Result<Vec<R>> {
    let Some(first) = rows.first() else {
        return Err(Error::Domain("ridge_least_squares: no rows".into()));
    };
    let d = first.len();
    let mut gram = vec![vec![R::zero(); d]; d];
    let mut rhs = vec![R::zero(); d];
    for (x, &y) in rows.iter().zip(targets) {
        for i in 0..d {
            rhs[i] += x[i] * y;
            for j in 0..d {
                gram[i][j] += x[i] * x[j];
            }
        }
    }
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += ridge;
    }
    solve(gram, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![2.0_f64, 1.0], vec![1.0, 3.0]];
        let x = solve(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn singular_is_an_error() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(solve(a, vec![1.0, 2.0]), Err(Error::Numeric(_))));
    }

    #[test]
    fn ridge_recovers_exact_fit() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 2.0 + 0.5 * i as f64).collect();
        let w = ridge_least_squares(&rows, &y, 0.0).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-10 && (w[1] - 0.5).abs() < 1e-10);
    }
}
