//! Checks of the matrix inequalities behind the bounds, dense or by sampling.
//!
//! Each check states X ≤ Y in the quadratic-form sense. Small systems get a
//! dense eigensolve of Y − X; larger ones get random quadratic forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{element_alignment_factor, AssembledSystem};
use crate::error::{Error, Result};
use crate::linalg::dense_extremes;
use crate::reference::Quadrature;
use crate::sparse::CsrMatrix;

/// Largest reduced dimension checked by dense eigensolve.
pub const DENSE_LIMIT: usize = 200;
/// min eig(Y − X) ≥ −DENSE_TOL · max(‖X‖₂, ‖Y‖₂)
pub const DENSE_TOL: f64 = 1e-10;
/// vᵀ(Y − X)v ≥ −SAMPLE_TOL · max(vᵀXv, vᵀYv)
pub const SAMPLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub method: &'static str,
    /// Smallest eigenvalue of Y − X, or the smallest sampled vᵀ(Y − X)v.
    pub margin: f64,
    /// `margin` divided by the scale of the compared matrices.
    pub relative_margin: f64,
    pub passed: bool,
    #[serde(skip)]
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Turns the first failed check into an error.
    pub fn ensure(self) -> Result<Self> {
        if let Some(c) = self.checks.iter().find(|c| !c.passed) {
            return Err(Error::InequalityViolated {
                check: c.name.clone(),
                margin: c.margin,
                witness: c.witness.clone(),
            });
        }
        Ok(self)
    }
}

/// Σ c_k X_k
fn combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
    let n = terms[0].1.nrows();
    let mut triplets = Vec::new();
    for (c, m) in terms {
        for i in 0..n {
            triplets.extend(m.row(i).map(|(j, v)| (i, j, c * v)));
        }
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

fn dense_norm(m: &CsrMatrix) -> f64 {
    dense_extremes(m.to_dense()).1
}

/// Checks `lower ≤ upper`.
pub fn check_order(name: &str, lower: &CsrMatrix, upper: &CsrMatrix, n_samples: usize, seed: u64) -> InequalityCheck {
    let diff = combination(&[(1.0, upper), (-1.0, lower)]);
    let n = diff.nrows();
    if n <= DENSE_LIMIT {
        let scale = dense_norm(lower).max(dense_norm(upper));
        let (min_eig, _, vec) = dense_extremes(diff.to_dense());
        let relative = if scale > 0.0 { min_eig / scale } else { min_eig };
        InequalityCheck {
            name: name.into(),
            method: "dense",
            margin: min_eig,
            relative_margin: relative,
            passed: relative >= -DENSE_TOL,
            witness: vec.iter().copied().collect(),
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = (f64::INFINITY, f64::INFINITY, Vec::new());
        for _ in 0..n_samples {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = diff.quad_form(&v);
            let scale = lower.quad_form(&v).abs().max(upper.quad_form(&v).abs());
            let relative = if scale > 0.0 { q / scale } else { q };
            if relative < worst.1 {
                worst = (q, relative, v);
            }
        }
        InequalityCheck {
            name: name.into(),
            method: "sampled",
            margin: worst.0,
            relative_margin: worst.1,
            passed: worst.1 >= -SAMPLE_TOL,
            witness: worst.2,
        }
    }
}

/// Runs every inequality on the reduced system:
///
/// - `stiffness_diagonal`: A ≤ η A_D
/// - `stiffness_alignment`: A_ii ≤ C_H1 Σ_{K∈ω_i} |K| ‖(F′_K)⁻¹D(F′_K)⁻ᵀ‖₂ (entrywise)
/// - `surrogate_patch_lower` / `_upper`: λ̂ W ≤ M̃ ≤ Λ̂ W, W = diag(|ω_i|)
/// - `surrogate_diagonal_lower` / `_upper`: κ⁻¹ M̃_D ≤ M̃ ≤ κ M̃_D
/// - `consistent_vs_surrogate_lower` / `_upper`: (λ̂_M/Λ̂_M̃) M̃ ≤ M ≤ (Λ̂_M/λ̂_M̃) M̃
pub fn verify_matrix_inequalities(system: &AssembledSystem, n_samples: usize, seed: u64) -> Result<InequalityReport> {
    let eta = system.elem.node_count() as f64;
    let a = &system.stiffness;
    let mt = &system.surrogate;
    let a_diag = CsrMatrix::from_diagonal(&a.diagonal());
    let mt_diag = CsrMatrix::from_diagonal(&mt.diagonal());
    let w = CsrMatrix::from_diagonal(&system.patch_volumes());
    let r = &system.surrogate_ref;
    let kappa = r.kappa();
    let (mass_min, mass_max) = (system.elem.lambda_hat_min, system.elem.lambda_hat_max);

    let mut checks = vec![
        check_order("stiffness_diagonal", a, &a_diag.scaled(eta), n_samples, seed),
        alignment_check(system)?,
        check_order("surrogate_patch_lower", &w.scaled(r.lambda_min), mt, n_samples, seed),
        check_order("surrogate_patch_upper", mt, &w.scaled(r.lambda_max), n_samples, seed),
        check_order(
            "surrogate_diagonal_lower",
            &mt_diag.scaled(1.0 / kappa),
            mt,
            n_samples,
            seed,
        ),
        check_order("surrogate_diagonal_upper", mt, &mt_diag.scaled(kappa), n_samples, seed),
    ];
    checks.push(check_order(
        "consistent_vs_surrogate_lower",
        &mt.scaled(mass_min / r.lambda_max),
        &system.mass,
        n_samples,
        seed,
    ));
    checks.push(check_order(
        "consistent_vs_surrogate_upper",
        &system.mass,
        &mt.scaled(mass_max / r.lambda_min),
        n_samples,
        seed,
    ));
    Ok(InequalityReport { checks })
}

fn alignment_check(system: &AssembledSystem) -> Result<InequalityCheck> {
    let rule = Quadrature::simplex(system.elem.dim, 2 * (system.elem.order - 1) + system.diffusion.degree())?;
    let factors: Vec<f64> = system
        .maps
        .iter()
        .map(|m| element_alignment_factor(m, &system.diffusion, &rule))
        .collect();
    let diag = system.diag_stiffness();
    let mut worst = (f64::INFINITY, f64::INFINITY, 0);
    for (r, &i) in system.reduction.free.iter().enumerate() {
        let bound: f64 = system.elem.c_h1
            * system.patches.elements[i]
                .iter()
                .map(|&k| system.maps[k].volume * factors[k])
                .sum::<f64>();
        let margin = bound - diag[r];
        if margin / bound < worst.1 {
            worst = (margin, margin / bound, r);
        }
    }
    let mut witness = vec![0.0; diag.len()];
    witness[worst.2] = 1.0;
    Ok(InequalityCheck {
        name: "stiffness_alignment".into(),
        method: "entrywise",
        margin: worst.0,
        relative_margin: worst.1,
        passed: worst.1 >= -1e-12,
        witness,
    })
}
