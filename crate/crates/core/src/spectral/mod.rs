//! Largest eigenvalue of the pencil (A, M̃), bound evaluators and matrix inequality checks.
//!
//! With M̃ = Pᵀ L Lᵀ P the pencil is reduced to the symmetric operator
//! C = L⁻¹ P A Pᵀ L⁻ᵀ, which shares its spectrum with M̃⁻¹A.

pub mod bounds;
pub mod inequalities;
pub mod report;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cholesky::SpdFactor;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::sparse::CsrMatrix;

pub use bounds::{
    diag_ratio_bounds, geometric_bound, geometric_bound_refined, is_m_matrix, patch_bound, zhudu_bound, DiagRatioBounds,
};
pub use inequalities::{verify_matrix_inequalities, InequalityCheck, InequalityReport};
pub use report::{compute_report, BoundReport, ReportOptions};

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Lanczos with full reorthogonalization and explicit restarts.
    #[default]
    Lanczos,
    PowerIteration,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub method: EigenMethod,
    /// Relative tolerance: residual for Lanczos, extrapolated Rayleigh-quotient error for power iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Krylov basis size before a restart.
    pub max_basis: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::Lanczos,
            tol: 1e-10,
            max_iter: 10_000,
            max_basis: 400,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Generalized eigenvector u (A u = λ M̃ u) with uᵀM̃u = 1.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// ‖C y − λ y‖ for the symmetrized operator.
    pub residual: f64,
}

/// λ_max(M̃⁻¹A) to relative tolerance `tol` with default settings.
pub fn lambda_max_generalized(a: &CsrMatrix, m: &CsrMatrix, tol: f64) -> Result<f64> {
    let opts = EigenOptions {
        tol,
        ..EigenOptions::default()
    };
    Ok(top_eigenpair(a, m, &opts)?.value)
}

pub fn top_eigenpair(a: &CsrMatrix, m: &CsrMatrix, opts: &EigenOptions) -> Result<EigenPair> {
    let factor = SpdFactor::new(m)?;
    top_eigenpair_factored(a, &factor, opts)
}

pub(crate) fn top_eigenpair_factored(a: &CsrMatrix, factor: &SpdFactor, opts: &EigenOptions) -> Result<EigenPair> {
    let n = a.nrows();
    if n != factor.dim() || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "stiffness is {}x{}, surrogate mass is {}x{}",
            a.nrows(),
            a.ncols(),
            factor.dim(),
            factor.dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty system".into()));
    }
    let op = |y: &[f64]| factor.lower_solve(&a.apply(&factor.upper_solve(y)));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let (value, y, iterations, residual) = match opts.method {
        EigenMethod::Lanczos => lanczos(op, start, opts)?,
        EigenMethod::PowerIteration => power_iteration(op, start, opts)?,
    };
    Ok(EigenPair {
        value,
        vector: factor.upper_solve(&y),
        iterations,
        residual,
    })
}

type Estimate = (f64, Vec<f64>, usize, f64);

fn power_iteration(op: impl Fn(&[f64]) -> Vec<f64>, start: Vec<f64>, opts: &EigenOptions) -> Result<Estimate> {
    let mut x = normalized(start);
    let mut theta = 0.0;
    let mut residual = f64::INFINITY;
    let mut last_change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let cx = op(&x);
        let next = dot(&x, &cx);
        if !(next > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: it, value: next });
        }
        residual = cx
            .iter()
            .zip(&x)
            .map(|(c, v)| (c - next * v).powi(2))
            .sum::<f64>()
            .sqrt();
        // changes shrink geometrically with rate ρ, so the remaining error is about change·ρ/(1 − ρ)
        let change = (next - theta).abs();
        let rate = (change / last_change).min(1.0 - 1e-6);
        let remaining = change * rate / (1.0 - rate);
        let converged =
            change <= 64.0 * f64::EPSILON * next || (change <= opts.tol * next && remaining <= opts.tol * next);
        last_change = change;
        theta = next;
        x = normalized(cx);
        if converged {
            return Ok((theta, x, it, residual));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        estimate: theta,
        residual,
    })
}

fn lanczos(op: impl Fn(&[f64]) -> Vec<f64>, start: Vec<f64>, opts: &EigenOptions) -> Result<Estimate> {
    let n = start.len();
    let cap = opts.max_basis.max(2).min(n);
    let mut start = normalized(start);
    let mut total = 0;

    loop {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..cap {
            let mut w = op(&basis[j]);
            total += 1;
            let a = dot(&w, &basis[j]);
            if !(a > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: a });
            }
            alpha.push(a);
            // two passes of classical Gram–Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let b = norm2(&w);
            let (theta, s) = tridiagonal_top(&alpha, &beta);
            let residual = b * s[j].abs();

            let invariant = b <= 1e-13 * theta;
            if residual <= opts.tol * theta || invariant || j + 1 == n {
                let y = combine(&basis, &s);
                return Ok((theta, normalized(y), total, residual));
            }
            if total >= opts.max_iter {
                return Err(Error::NoConvergence {
                    iterations: total,
                    estimate: theta,
                    residual,
                });
            }
            if j + 1 == cap {
                log::debug!("lanczos restart after {total} iterations, residual {residual:e}");
                start = normalized(combine(&basis, &s));
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|v| *v /= b);
            basis.push(w);
        }
    }
}

fn combine(basis: &[Vec<f64>], s: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; basis[0].len()];
    for (q, &c) in basis.iter().zip(s) {
        y.iter_mut().zip(q).for_each(|(yi, qi)| *yi += c * qi);
    }
    y
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm2(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Number of eigenvalues of the tridiagonal T(α, β) strictly below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..alpha.len() {
        let off = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] / q };
        q = alpha[i] - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (alpha[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of T by Sturm bisection and its unit eigenvector by inverse iteration.
fn tridiagonal_top(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    if k == 1 {
        return (alpha[0], vec![1.0]);
    }
    let radius =
        |i: usize| (if i > 0 { beta[i - 1].abs() } else { 0.0 }) + (if i + 1 < k { beta[i].abs() } else { 0.0 });
    let mut lo = (0..k).map(|i| alpha[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|i| alpha[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    while hi - lo > 2.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = 0.5 * (lo + hi);

    let mut v = vec![1.0; k];
    for _ in 0..3 {
        v = normalized(shifted_tridiagonal_solve(alpha, beta, theta, v));
    }
    (theta, v)
}

/// Solves (T − σI) x = b by LU with partial pivoting (as in LAPACK's gttrf/gttrs).
fn shifted_tridiagonal_solve(alpha: &[f64], beta: &[f64], sigma: f64, mut b: Vec<f64>) -> Vec<f64> {
    let n = alpha.len();
    let scale = alpha
        .iter()
        .chain(beta)
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let mut d: Vec<f64> = alpha.iter().map(|a| a - sigma).collect();
    let mut dl = beta.to_vec();
    let mut du = beta.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }

    for i in 0..n - 1 {
        if swapped[i] {
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - dl[i] * b[i];
        } else {
            b[i + 1] -= dl[i] * b[i];
        }
    }
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    b
}
