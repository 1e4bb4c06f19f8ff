//! Lagrange P_m elements on the reference simplex.
//!
//! Basis functions are defined on the standard simplex (origin plus unit axis
//! points) with equispaced nodes; every reference integral is taken over a
//! unit-measure domain, i.e. the standard measure multiplied by d!.

pub mod quadrature;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigenvalues;
pub use quadrature::Quadrature;

/// Tolerance on barycentric coordinates for points that should lie in the simplex.
const INSIDE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub dim: usize,
    pub order: usize,
    /// Barycentric multi-indices α (length d+1, |α| = m) of the nodes, in local order.
    pub multi_indices: Vec<Vec<usize>>,
    /// Node coordinates in the standard simplex.
    pub nodes: Vec<Vec<f64>>,
    /// Rule exact to degree 2m.
    pub quadrature: Quadrature,
    /// Consistent reference mass matrix over the unit-measure simplex.
    pub mass: DMatrix<f64>,
    pub lambda_hat_min: f64,
    pub lambda_hat_max: f64,
    /// max_i |φ̂_i|²_{H¹}
    pub c_h1: f64,
    pub c_h1_diag: Vec<f64>,
    pub c_l2_diag: Vec<f64>,
}

/// Topological entity a node sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vertex,
    Edge,
    Interior,
}

impl ReferenceElement {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) || order == 0 || order > 8 {
            return Err(Error::Unsupported { dim, order });
        }

        let multi_indices = node_multi_indices(dim, order);
        let nodes = multi_indices
            .iter()
            .map(|alpha| alpha[1..].iter().map(|&a| a as f64 / order as f64).collect())
            .collect();
        let quadrature = Quadrature::simplex(dim, 2 * order)?;

        let mut elem = Self {
            dim,
            order,
            multi_indices,
            nodes,
            quadrature,
            mass: DMatrix::zeros(0, 0),
            lambda_hat_min: 0.0,
            lambda_hat_max: 0.0,
            c_h1: 0.0,
            c_h1_diag: Vec::new(),
            c_l2_diag: Vec::new(),
        };

        elem.mass = elem.mass_matrix_with(&elem.quadrature);
        let eig = jacobi_eigenvalues(&elem.mass);
        elem.lambda_hat_min = eig[0];
        elem.lambda_hat_max = eig[eig.len() - 1];
        if elem.lambda_hat_min <= 0.0 {
            return Err(Error::Unsupported { dim, order });
        }
        elem.c_l2_diag = (0..elem.node_count()).map(|i| elem.mass[(i, i)]).collect();

        let grad_rule = Quadrature::simplex(dim, 2 * (order - 1))?;
        let mut c_h1_diag = vec![0.0; elem.node_count()];
        for (xi, w) in grad_rule.iter() {
            let grads = elem.gradients_unchecked(xi);
            for (i, g) in grads.iter().enumerate() {
                c_h1_diag[i] += w * g.iter().map(|v| v * v).sum::<f64>();
            }
        }
        elem.c_h1 = c_h1_diag.iter().copied().fold(f64::MIN, f64::max);
        elem.c_h1_diag = c_h1_diag;
        Ok(elem)
    }

    /// η = binomial(m + d, d)
    pub fn node_count(&self) -> usize {
        self.multi_indices.len()
    }

    /// κ(M̂) of the consistent reference mass matrix.
    pub fn mass_condition_number(&self) -> f64 {
        self.lambda_hat_max / self.lambda_hat_min
    }

    pub fn node_kind(&self, local: usize) -> NodeKind {
        let nnz = self.multi_indices[local].iter().filter(|&&a| a > 0).count();
        if nnz == 1 {
            NodeKind::Vertex
        } else if nnz == self.dim + 1 {
            NodeKind::Interior
        } else {
            NodeKind::Edge
        }
    }

    /// Reference mass matrix computed with an arbitrary rule.
    pub fn mass_matrix_with(&self, rule: &Quadrature) -> DMatrix<f64> {
        let n = self.node_count();
        let mut mass = DMatrix::zeros(n, n);
        for (xi, w) in rule.iter() {
            let phi = self.values_unchecked(xi);
            for i in 0..n {
                for j in i..n {
                    mass[(i, j)] += w * phi[i] * phi[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                mass[(i, j)] = mass[(j, i)];
            }
        }
        mass
    }

    pub fn eval_basis(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_inside(xi)?;
        Ok(self.values_unchecked(xi))
    }

    /// Row i holds ∇̂φ̂_i with respect to the standard simplex coordinates.
    pub fn eval_basis_gradients(&self, xi: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_inside(xi)?;
        Ok(self.gradients_unchecked(xi))
    }

    fn check_inside(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "reference point has {} coordinates, element dimension is {}",
                xi.len(),
                self.dim
            )));
        }
        let worst = barycentric(xi).into_iter().fold(f64::INFINITY, f64::min);
        if worst < -INSIDE_TOL {
            return Err(Error::OutsideReference { coordinate: worst });
        }
        Ok(())
    }

    pub(crate) fn values_unchecked(&self, xi: &[f64]) -> Vec<f64> {
        let lambda = barycentric(xi);
        self.multi_indices
            .iter()
            .map(|alpha| {
                alpha
                    .iter()
                    .zip(&lambda)
                    .map(|(&a, &l)| lagrange_factor(self.order, a, l))
                    .product()
            })
            .collect()
    }

    pub(crate) fn gradients_unchecked(&self, xi: &[f64]) -> Vec<Vec<f64>> {
        let lambda = barycentric(xi);
        let m = self.order;
        self.multi_indices
            .iter()
            .map(|alpha| {
                let factors: Vec<f64> = alpha
                    .iter()
                    .zip(&lambda)
                    .map(|(&a, &l)| lagrange_factor(m, a, l))
                    .collect();
                // ∂φ/∂λ_k
                let dlambda: Vec<f64> = (0..alpha.len())
                    .map(|k| {
                        let others: f64 = (0..alpha.len()).filter(|&j| j != k).map(|j| factors[j]).product();
                        lagrange_factor_derivative(m, alpha[k], lambda[k]) * others
                    })
                    .collect();
                (1..alpha.len()).map(|k| dlambda[k] - dlambda[0]).collect()
            })
            .collect()
    }
}

/// λ_0 = 1 − Σ ξ_k, λ_k = ξ_k.
pub fn barycentric(xi: &[f64]) -> Vec<f64> {
    let mut lambda = Vec::with_capacity(xi.len() + 1);
    lambda.push(1.0 - xi.iter().sum::<f64>());
    lambda.extend_from_slice(xi);
    lambda
}

/// ℓ_a(t) = Π_{j<a} (m t − j)/(j + 1)
fn lagrange_factor(m: usize, a: usize, t: f64) -> f64 {
    (0..a).map(|j| (m as f64 * t - j as f64) / (j as f64 + 1.0)).product()
}

fn lagrange_factor_derivative(m: usize, a: usize, t: f64) -> f64 {
    let mf = m as f64;
    (0..a)
        .map(|l| {
            let rest: f64 = (0..a)
                .filter(|&j| j != l)
                .map(|j| (mf * t - j as f64) / (j as f64 + 1.0))
                .product();
            mf / (l as f64 + 1.0) * rest
        })
        .sum()
}

/// All α ∈ ℕ^{d+1} with |α| = m, ordered vertices first, then edge nodes, then
/// interior nodes; ties broken by support and then lexicographically.
fn node_multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, slots: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=remaining).rev() {
            prefix.push(a);
            rec(prefix, slots - 1, remaining - a, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    rec(&mut Vec::new(), dim + 1, order, &mut all);
    all.sort_by_key(|alpha| {
        let support: Vec<usize> = (0..alpha.len()).filter(|&k| alpha[k] > 0).collect();
        (support.len(), support, std::cmp::Reverse(alpha.clone()))
    });
    all
}

pub fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
