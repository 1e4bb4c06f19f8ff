//! Finite-element mass/stiffness assembly for anisotropic diffusion, bounds on the
//! largest eigenvalue of M̃⁻¹A and stable explicit Runge–Kutta time steps.

pub mod assembly;
pub mod cholesky;
pub mod dofs;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod reference;
pub mod rk;
pub mod sparse;
pub mod spectral;

pub use assembly::{AssembledSystem, DiffusionField, SurrogatePolicy, SurrogateReference};
pub use error::{Error, Result};
pub use mesh::{generate_mesh, MeshSpec, SimplicialMesh};
pub use problem::{DiffusionSpec, ProblemSpec};
pub use reference::ReferenceElement;
pub use rk::{BoundSource, IntegrationTrace, RkScheme};
pub use sparse::CsrMatrix;
pub use spectral::{compute_report, BoundReport, ReportOptions};
