//! Small dense symmetric eigenvalue routines.

use nalgebra::DMatrix;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
///
/// Intended for the small reference-element matrices (a handful of rows).
/// Only the upper triangle is read.
pub fn jacobi_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "jacobi_eigenvalues needs a square matrix");
    let mut a = matrix.clone();
    for i in 0..n {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum::<f64>() + off;
        if off <= f64::EPSILON * f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Largest eigenvalue of a symmetric positive semidefinite d×d matrix, which is
/// its spectral norm. Closed forms for d ≤ 2.
pub fn spd_spectral_norm(matrix: &DMatrix<f64>) -> f64 {
    match matrix.nrows() {
        1 => matrix[(0, 0)].abs(),
        2 => {
            let (lo, hi) = sym2_eigenvalues(matrix);
            hi.abs().max(lo.abs())
        }
        _ => jacobi_eigenvalues(matrix).into_iter().map(f64::abs).fold(0.0, f64::max),
    }
}

/// (smallest, largest) eigenvalue of a symmetric matrix of size ≤ 2, else via Jacobi.
pub fn symmetric_extremes(matrix: &DMatrix<f64>) -> (f64, f64) {
    match matrix.nrows() {
        1 => (matrix[(0, 0)], matrix[(0, 0)]),
        2 => sym2_eigenvalues(matrix),
        _ => {
            let e = jacobi_eigenvalues(matrix);
            (e[0], e[e.len() - 1])
        }
    }
}

fn sym2_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let c = m[(1, 1)];
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean - radius, mean + radius)
}

/// Smallest eigenvalue and spectral norm of a dense symmetric matrix.
pub(crate) fn dense_extremes(matrix: DMatrix<f64>) -> (f64, f64, nalgebra::DVector<f64>) {
    let eig = nalgebra::SymmetricEigen::new(matrix);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("empty matrix");
    let norm = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    (eig.eigenvalues[imin], norm, eig.eigenvectors.column(imin).into_owned())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
