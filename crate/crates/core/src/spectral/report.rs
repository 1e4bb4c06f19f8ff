//! All bounds of one assembled system in a single serializable record.

use serde::{Deserialize, Serialize};

use super::bounds::{diag_ratio_bounds, geometric_bound, geometric_bound_refined, patch_bound, zhudu_bound};
use super::{top_eigenpair, EigenOptions};
use crate::assembly::AssembledSystem;
use crate::error::Result;

/// Relative slack allowed in the reported inequality flags.
pub const REPORT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    /// λ_max_exact is skipped above this many free DOFs.
    pub dof_cap: usize,
    pub eigen: EigenOptions,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            dof_cap: 5000,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub dim: usize,
    pub order: usize,
    pub policy: String,
    pub n_elements: usize,
    /// Free (non-Dirichlet) DOFs.
    pub n_dofs: usize,
    /// Basis functions per element.
    pub eta: usize,
    pub kappa_mass: f64,
    pub kappa_surrogate: f64,
    pub c_h1: f64,
    pub lambda_hat_min: f64,
    pub lambda_hat_max: f64,
    pub lambda_max_exact: Option<f64>,
    pub lower_diag_ratio: f64,
    pub upper_diag_ratio: f64,
    pub upper_geometric: f64,
    pub upper_zhudu: f64,
    /// η max_i A_ii / (λ̂ |ω_i|)
    pub upper_patch: f64,
    /// Geometric bound with per-node H¹ constants (and η → 2 for M-matrices).
    pub upper_geometric_refined: f64,
    pub m_matrix_refinement_applied: bool,
    pub upper_diag_ratio_m_matrix: Option<f64>,
    pub tightness_lower: Option<f64>,
    pub tightness_upper: Option<f64>,
    pub sandwich_satisfied: Option<bool>,
    pub geometric_satisfied: Option<bool>,
}

const COLUMNS: [&str; 25] = [
    "dim",
    "order",
    "policy",
    "n_elements",
    "n_dofs",
    "eta",
    "kappa_mass",
    "kappa_surrogate",
    "c_h1",
    "lambda_hat_min",
    "lambda_hat_max",
    "lambda_max_exact",
    "lower_diag_ratio",
    "upper_diag_ratio",
    "upper_geometric",
    "upper_zhudu",
    "upper_patch",
    "upper_geometric_refined",
    "m_matrix_refinement_applied",
    "upper_diag_ratio_m_matrix",
    "tightness_lower",
    "tightness_upper",
    "sandwich_satisfied",
    "geometric_satisfied",
    "zhudu_over_geometric",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn flag(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

impl BoundReport {
    pub fn csv_header() -> String {
        COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        [
            self.dim.to_string(),
            self.order.to_string(),
            self.policy.clone(),
            self.n_elements.to_string(),
            self.n_dofs.to_string(),
            self.eta.to_string(),
            num(self.kappa_mass),
            num(self.kappa_surrogate),
            num(self.c_h1),
            num(self.lambda_hat_min),
            num(self.lambda_hat_max),
            opt(self.lambda_max_exact),
            num(self.lower_diag_ratio),
            num(self.upper_diag_ratio),
            num(self.upper_geometric),
            num(self.upper_zhudu),
            num(self.upper_patch),
            num(self.upper_geometric_refined),
            self.m_matrix_refinement_applied.to_string(),
            opt(self.upper_diag_ratio_m_matrix),
            opt(self.tightness_lower),
            opt(self.tightness_upper),
            flag(self.sandwich_satisfied),
            flag(self.geometric_satisfied),
            num(self.upper_zhudu / self.upper_geometric),
        ]
        .join(",")
    }
}

pub fn compute_report(system: &AssembledSystem, opts: &ReportOptions) -> Result<BoundReport> {
    let diag = diag_ratio_bounds(system)?;
    let geometric = geometric_bound(system)?;
    let exact = if system.n_free() <= opts.dof_cap {
        Some(top_eigenpair(&system.stiffness, &system.surrogate, &opts.eigen)?.value)
    } else {
        log::info!(
            "skipping exact eigenvalue: {} free DOFs above cap {}",
            system.n_free(),
            opts.dof_cap
        );
        None
    };
    let r = &system.surrogate_ref;
    Ok(BoundReport {
        dim: system.elem.dim,
        order: system.elem.order,
        policy: r.policy.name().into(),
        n_elements: system.mesh.n_elements(),
        n_dofs: system.n_free(),
        eta: system.elem.node_count(),
        kappa_mass: system.elem.mass_condition_number(),
        kappa_surrogate: r.kappa(),
        c_h1: system.elem.c_h1,
        lambda_hat_min: r.lambda_min,
        lambda_hat_max: r.lambda_max,
        lambda_max_exact: exact,
        lower_diag_ratio: diag.lower,
        upper_diag_ratio: diag.upper,
        upper_geometric: geometric,
        upper_zhudu: zhudu_bound(system)?,
        upper_patch: patch_bound(system),
        upper_geometric_refined: geometric_bound_refined(system)?,
        m_matrix_refinement_applied: diag.m_matrix,
        upper_diag_ratio_m_matrix: diag.upper_m_matrix,
        tightness_lower: exact.map(|l| l / diag.lower),
        tightness_upper: exact.map(|l| diag.upper / l),
        sandwich_satisfied: exact
            .map(|l| diag.lower <= l * (1.0 + REPORT_SLACK) && l <= diag.upper * (1.0 + REPORT_SLACK)),
        geometric_satisfied: exact.map(|l| l <= geometric * (1.0 + REPORT_SLACK)),
    })
}
