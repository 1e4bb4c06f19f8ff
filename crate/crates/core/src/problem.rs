//! Serializable problem descriptions shared by the command line and the browser demo.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::{AssembledSystem, DiffusionField, SurrogatePolicy};
use crate::error::{Error, Result};
use crate::mesh::{generate_mesh, MeshSpec, SimplicialMesh};
use crate::reference::ReferenceElement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionSpec {
    #[default]
    Identity,
    Isotropic {
        value: f64,
    },
    /// Row-major d×d matrix.
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    RotatedAnisotropic {
        angle: f64,
        eigenvalues: [f64; 2],
    },
}

impl DiffusionSpec {
    pub fn to_field(&self, dim: usize) -> Result<DiffusionField> {
        Ok(match self {
            Self::Identity => DiffusionField::identity(dim),
            Self::Isotropic { value } => {
                if !(*value > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "diffusion value must be positive, got {value}"
                    )));
                }
                DiffusionField::isotropic(dim, *value)
            }
            Self::Constant { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidArgument(format!("diffusion matrix must be {dim}x{dim}")));
                }
                DiffusionField::Constant(DMatrix::from_fn(dim, dim, |i, j| matrix[i][j]))
            }
            Self::RotatedAnisotropic { angle, eigenvalues } => {
                if !(eigenvalues[0] > 0.0 && eigenvalues[1] > 0.0) {
                    return Err(Error::InvalidArgument("anisotropy eigenvalues must be positive".into()));
                }
                DiffusionField::RotatedAnisotropic {
                    angle: *angle,
                    eigenvalues: *eigenvalues,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub mesh: MeshSpec,
    pub order: usize,
    #[serde(default)]
    pub diffusion: DiffusionSpec,
    #[serde(default)]
    pub policy: SurrogatePolicy,
}

impl ProblemSpec {
    pub fn build_mesh(&self) -> Result<SimplicialMesh> {
        generate_mesh(&self.mesh)
    }

    pub fn assemble(&self) -> Result<AssembledSystem> {
        assemble_on(&self.build_mesh()?, self.order, &self.diffusion, self.policy)
    }
}

pub fn assemble_on(
    mesh: &SimplicialMesh,
    order: usize,
    diffusion: &DiffusionSpec,
    policy: SurrogatePolicy,
) -> Result<AssembledSystem> {
    let elem = ReferenceElement::new(mesh.dim(), order)?;
    let field = diffusion.to_field(mesh.dim())?;
    AssembledSystem::assemble(mesh, &elem, &field, policy)
}

/// Stretched n×n mesh with aspect ratio `a` and D = diag(1, a⁻²): element
/// Jacobians match D up to a common scale.
pub fn aligned_anisotropic(n: usize, a: f64, order: usize, policy: SurrogatePolicy) -> ProblemSpec {
    ProblemSpec {
        mesh: MeshSpec::Stretched { nx: n, ny: n, ratio: a },
        order,
        diffusion: DiffusionSpec::RotatedAnisotropic {
            angle: 0.0,
            eigenvalues: [1.0, 1.0 / (a * a)],
        },
        policy,
    }
}
