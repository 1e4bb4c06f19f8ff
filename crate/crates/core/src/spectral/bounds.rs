//! Closed-form bounds on λ_max(M̃⁻¹A).

use serde::{Deserialize, Serialize};

use crate::assembly::{element_alignment_factor, sample_points, AssembledSystem};
use crate::error::{Error, Result};
use crate::linalg::{spd_spectral_norm, symmetric_extremes};
use crate::reference::Quadrature;
use crate::sparse::CsrMatrix;

/// Sign-condition tolerance of the M-matrix test, relative to the matrix scale.
pub const M_MATRIX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRatioBounds {
    /// max_i A_ii / M̃_ii
    pub lower: f64,
    /// η κ(M̃_K̂) · lower
    pub upper: f64,
    pub m_matrix: bool,
    /// 2 κ(M̃_K̂) · lower, only when A is an M-matrix.
    pub upper_m_matrix: Option<f64>,
}

pub fn diag_ratio_bounds(system: &AssembledSystem) -> Result<DiagRatioBounds> {
    let a = system.diag_stiffness();
    let m = system.diag_surrogate();
    let mut lower: f64 = 0.0;
    for (i, (&aii, &mii)) in a.iter().zip(&m).enumerate() {
        if !(aii > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i, value: aii });
        }
        if !(mii > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i, value: mii });
        }
        lower = lower.max(aii / mii);
    }
    let eta = system.elem.node_count() as f64;
    let kappa = system.surrogate_ref.kappa();
    let m_matrix = is_m_matrix(&system.stiffness, M_MATRIX_TOL);
    Ok(DiagRatioBounds {
        lower,
        upper: eta * kappa * lower,
        m_matrix,
        upper_m_matrix: m_matrix.then_some(2.0 * kappa * lower),
    })
}

/// Nonpositive off-diagonals and nonnegative row sums, up to `tol` times the largest entry.
pub fn is_m_matrix(a: &CsrMatrix, tol: f64) -> bool {
    let eps = tol * a.max_abs();
    (0..a.nrows()).all(|i| {
        let mut sum = 0.0;
        for (j, v) in a.row(i) {
            if j != i && v > eps {
                return false;
            }
            sum += v;
        }
        sum >= -eps
    })
}

fn alignment_factors(system: &AssembledSystem) -> Result<Vec<f64>> {
    let rule = Quadrature::simplex(system.elem.dim, 2 * (system.elem.order - 1) + system.diffusion.degree())?;
    Ok(system
        .maps
        .iter()
        .map(|map| element_alignment_factor(map, &system.diffusion, &rule))
        .collect())
}

fn patch_max(system: &AssembledSystem, weight: impl Fn(usize, usize) -> f64) -> f64 {
    system
        .reduction
        .free
        .iter()
        .map(|&i| {
            let patch = &system.patches;
            let sum: f64 = patch.elements[i]
                .iter()
                .zip(&patch.local_index[i])
                .map(|(&k, &local)| system.maps[k].volume * weight(k, local))
                .sum();
            sum / patch.volumes[i]
        })
        .fold(0.0, f64::max)
}

/// η (C_H1 / λ̂_M̃) max_i Σ_{K∈ω_i} (|K|/|ω_i|) ‖(F′_K)⁻¹ D (F′_K)⁻ᵀ‖₂ with factor `eta`.
fn geometric_with(system: &AssembledSystem, eta: f64, per_node: bool) -> Result<f64> {
    let factors = alignment_factors(system)?;
    let elem = &system.elem;
    let lambda = system.surrogate_ref.lambda_min;
    Ok(if per_node {
        eta / lambda * patch_max(system, |k, local| elem.c_h1_diag[local] * factors[k])
    } else {
        eta * elem.c_h1 / lambda * patch_max(system, |k, _| factors[k])
    })
}

pub fn geometric_bound(system: &AssembledSystem) -> Result<f64> {
    geometric_with(system, system.elem.node_count() as f64, false)
}

/// Same bound with the per-node |φ̂_i|²_{H¹} in place of C_H1, and η → 2 when A is an M-matrix.
pub fn geometric_bound_refined(system: &AssembledSystem) -> Result<f64> {
    let eta = if is_m_matrix(&system.stiffness, M_MATRIX_TOL) {
        2.0
    } else {
        system.elem.node_count() as f64
    };
    geometric_with(system, eta, true)
}

/// η max_i A_ii / (λ̂_M̃ |ω_i|), the patch-level bound before the alignment estimate.
pub fn patch_bound(system: &AssembledSystem) -> f64 {
    let eta = system.elem.node_count() as f64;
    let diag = system.diag_stiffness();
    system
        .patch_volumes()
        .iter()
        .zip(&diag)
        .map(|(w, a)| a / (system.surrogate_ref.lambda_min * w))
        .fold(0.0, f64::max)
        * eta
}

/// max_K max_x λ_max(D(x)) ‖(F′_K)⁻¹(F′_K)⁻ᵀ‖₂
pub fn zhudu_bound(system: &AssembledSystem) -> Result<f64> {
    let rule = Quadrature::simplex(system.elem.dim, 2 * (system.elem.order - 1) + system.diffusion.degree())?;
    Ok(system
        .maps
        .iter()
        .map(|map| {
            let shape = spd_spectral_norm(&(&map.inv_jacobian * map.inv_jacobian.transpose()));
            let d_max = sample_points(map, &system.diffusion, &rule)
                .map(|x| symmetric_extremes(&system.diffusion.eval(&x)).1)
                .fold(0.0, f64::max);
            d_max * shape
        })
        .fold(0.0, f64::max))
}
