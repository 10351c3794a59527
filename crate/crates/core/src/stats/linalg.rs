//! Dense Gaussian elimination for the small normal-equation systems.
//! Matrices are square, row-major `n × n` slices.

use alloc::vec::Vec;

use super::StatsError;

/// Relative pivot threshold below which the matrix counts as singular.
const PIVOT_EPS: f64 = 1e-12;

fn scale(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)))
}

/// Solves `A x = b` with partial pivoting.
pub fn solve(a: &[f64], b: &[f64]) -> Result<Vec<f64>, StatsError> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix is not {n}x{n}");
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let tol = PIVOT_EPS * scale(a).max(f64::MIN_POSITIVE);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| libm::fabs(m[i * n + col]).total_cmp(&libm::fabs(m[j * n + col])))
            .unwrap();
        if libm::fabs(m[pivot * n + col]) <= tol {
            return Err(StatsError::Singular);
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let p = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| m[row * n + k] * x[k]).sum();
        x[row] = (x[row] - tail) / m[row * n + row];
    }
    Ok(x)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[f64], n: usize) -> Result<Vec<f64>, StatsError> {
    assert_eq!(a.len(), n * n, "matrix is not {n}x{n}");
    let mut m = a.to_vec();
    let mut inv = alloc::vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let tol = PIVOT_EPS * scale(a).max(f64::MIN_POSITIVE);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| libm::fabs(m[i * n + col]).total_cmp(&libm::fabs(m[j * n + col])))
            .unwrap();
        if libm::fabs(m[pivot * n + col]) <= tol {
            return Err(StatsError::Singular);
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let p = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                m[row * n + k] -= factor * m[col * n + k];
                inv[row * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    Ok(inv)
}
