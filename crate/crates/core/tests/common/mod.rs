#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use stepbound::mesh::MeshSpec;
use stepbound::{AssembledSystem, CsrMatrix, DiffusionSpec, ProblemSpec, SurrogatePolicy};

/// λ_max of (A, M) through M^{-1/2} A M^{-1/2}, both from dense symmetric eigensolves.
pub fn dense_lambda_max(a: &CsrMatrix, m: &CsrMatrix) -> f64 {
    let m_eig = SymmetricEigen::new(m.to_dense());
    assert!(m_eig.eigenvalues.min() > 0.0, "oracle: M not SPD");
    let inv_sqrt = DMatrix::from_diagonal(&m_eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let w = &m_eig.eigenvectors * inv_sqrt * m_eig.eigenvectors.transpose();
    let c = &w * a.to_dense() * &w;
    let c = (&c + c.transpose()) * 0.5;
    SymmetricEigen::new(c).eigenvalues.max()
}

pub fn rotated_d() -> DiffusionSpec {
    DiffusionSpec::RotatedAnisotropic {
        angle: std::f64::consts::PI / 6.0,
        eigenvalues: [1.0, 100.0],
    }
}

/// 1D stand-ins for the 2D stretched and perturbed families: graded (ratio 10) and jittered intervals.
pub fn meshes_1d(n: usize) -> Vec<(&'static str, MeshSpec)> {
    vec![
        ("uniform", MeshSpec::UniformInterval { n }),
        ("stretched", MeshSpec::GradedInterval { n, ratio: 10.0 }),
        (
            "random_perturbed",
            MeshSpec::PerturbedInterval {
                n,
                amplitude: 0.3 / n as f64,
                seed: 11,
            },
        ),
    ]
}

pub fn meshes_2d(n: usize) -> Vec<(&'static str, MeshSpec)> {
    vec![
        (
            "uniform",
            MeshSpec::Structured {
                nx: n,
                ny: n,
                pattern: Default::default(),
            },
        ),
        (
            "stretched",
            MeshSpec::Stretched {
                nx: n,
                ny: n,
                ratio: 10.0,
            },
        ),
        (
            "random_perturbed",
            MeshSpec::RandomPerturbed {
                nx: n,
                ny: n,
                amplitude: 0.2 / n as f64,
                seed: 11,
            },
        ),
    ]
}

pub struct Case {
    pub label: String,
    pub spec: ProblemSpec,
}

impl Case {
    pub fn assemble(&self) -> AssembledSystem {
        self.spec.assemble().unwrap_or_else(|e| panic!("{}: {e}", self.label))
    }
}

/// (d, orders, labelled meshes)
type Family = (usize, Vec<usize>, Vec<(&'static str, MeshSpec)>);

/// The configuration matrix: {1D P1–P3, 2D P1–P2} × 3 mesh families × {I, rotated} × {consistent, HRZ}.
pub fn configuration_matrix(n_1d: usize, n_2d: usize) -> Vec<Case> {
    let mut cases = Vec::new();
    let families: [Family; 2] = [(1, vec![1, 2, 3], meshes_1d(n_1d)), (2, vec![1, 2], meshes_2d(n_2d))];
    for (d, orders, meshes) in families {
        for m in orders {
            for (mesh_name, mesh) in &meshes {
                for (d_name, diffusion) in [("identity", DiffusionSpec::Identity), ("rotated", rotated_d())] {
                    for policy in [SurrogatePolicy::Consistent, SurrogatePolicy::HrzDiagonal] {
                        cases.push(Case {
                            label: format!("d{d} P{m} {mesh_name} {d_name} {policy}"),
                            spec: ProblemSpec {
                                mesh: mesh.clone(),
                                order: m,
                                diffusion: diffusion.clone(),
                                policy,
                            },
                        });
                    }
                }
            }
        }
    }
    cases
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
