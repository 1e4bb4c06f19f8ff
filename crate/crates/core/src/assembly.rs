//! Mass, stiffness and surrogate-mass assembly with Dirichlet elimination.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dofs::{DofMap, PatchTable};
use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigenvalues, spd_spectral_norm, symmetric_extremes};
use crate::mesh::{AffineMap, SimplicialMesh};
use crate::reference::{Quadrature, ReferenceElement};
use crate::sparse::CsrMatrix;

type TensorFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Diffusion tensor D(x), symmetric and uniformly positive definite.
#[derive(Clone)]
pub enum DiffusionField {
    Constant(DMatrix<f64>),
    /// R(θ) diag(k₁, k₂) R(θ)ᵀ. In 1D the tensor is the xx-entry, k₁cos²θ + k₂sin²θ.
    RotatedAnisotropic {
        angle: f64,
        eigenvalues: [f64; 2],
    },
    /// Spatially varying tensor. `degree` is the polynomial degree proxy q_D
    /// used to pick the stiffness quadrature.
    Variable {
        eval: Arc<TensorFn>,
        degree: usize,
    },
}

impl fmt::Debug for DiffusionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(d) => f.debug_tuple("Constant").field(d).finish(),
            Self::RotatedAnisotropic { angle, eigenvalues } => f
                .debug_struct("RotatedAnisotropic")
                .field("angle", angle)
                .field("eigenvalues", eigenvalues)
                .finish(),
            Self::Variable { degree, .. } => f
                .debug_struct("Variable")
                .field("degree", degree)
                .finish_non_exhaustive(),
        }
    }
}

impl DiffusionField {
    pub fn identity(dim: usize) -> Self {
        Self::Constant(DMatrix::identity(dim, dim))
    }

    pub fn isotropic(dim: usize, c: f64) -> Self {
        Self::Constant(DMatrix::identity(dim, dim) * c)
    }

    pub fn variable(degree: usize, eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self::Variable {
            eval: Arc::new(eval),
            degree,
        }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            Self::Constant(d) => d.clone(),
            Self::RotatedAnisotropic { angle, eigenvalues } => {
                let (s, c) = angle.sin_cos();
                let [k1, k2] = *eigenvalues;
                if x.len() == 1 {
                    DMatrix::from_element(1, 1, k1 * c * c + k2 * s * s)
                } else {
                    let xy = (k1 - k2) * c * s;
                    DMatrix::from_row_slice(2, 2, &[k1 * c * c + k2 * s * s, xy, xy, k1 * s * s + k2 * c * c])
                }
            }
            Self::Variable { eval, .. } => eval(x),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Self::Variable { degree, .. } => *degree,
            _ => 0,
        }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self, Self::Variable { .. })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Constant(d) => Self::Constant(d * factor),
            Self::RotatedAnisotropic { angle, eigenvalues } => Self::RotatedAnisotropic {
                angle: *angle,
                eigenvalues: [eigenvalues[0] * factor, eigenvalues[1] * factor],
            },
            Self::Variable { eval, degree } => {
                let eval = eval.clone();
                Self::variable(*degree, move |x| eval(x) * factor)
            }
        }
    }

    /// The tensor seen after rotating the domain by `angle` (2D): x ↦ R x, D ↦ R D Rᵀ.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        match self {
            Self::Constant(d) if d.nrows() == 2 => Self::Constant(&r * d * r.transpose()),
            Self::RotatedAnisotropic { angle: a, eigenvalues } => Self::RotatedAnisotropic {
                angle: a + angle,
                eigenvalues: *eigenvalues,
            },
            Self::Variable { eval, degree } => {
                let eval = eval.clone();
                Self::variable(*degree, move |x| {
                    if x.len() != 2 {
                        return eval(x);
                    }
                    let back = [c * x[0] + s * x[1], -s * x[0] + c * x[1]];
                    &r * eval(&back) * r.transpose()
                })
            }
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SurrogatePolicy {
    /// M̃ = M
    Consistent,
    /// Element diagonal of M_K scaled to preserve the element mass.
    #[default]
    HrzDiagonal,
    /// Diagonal from the nodal quadrature rule, weights ∫φ̂_i.
    NodeQuadrature,
}

impl SurrogatePolicy {
    pub const ALL: [SurrogatePolicy; 3] = [Self::Consistent, Self::HrzDiagonal, Self::NodeQuadrature];

    pub fn name(self) -> &'static str {
        match self {
            Self::Consistent => "consistent",
            Self::HrzDiagonal => "hrz_diagonal",
            Self::NodeQuadrature => "node_quadrature",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for SurrogatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The shared reference matrix M̃_K̂ of a surrogate and its extreme eigenvalues.
#[derive(Debug, Clone)]
pub struct SurrogateReference {
    pub policy: SurrogatePolicy,
    pub matrix: DMatrix<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SurrogateReference {
    pub fn new(elem: &ReferenceElement, policy: SurrogatePolicy) -> Result<Self> {
        let n = elem.node_count();
        let matrix = match policy {
            SurrogatePolicy::Consistent => elem.mass.clone(),
            SurrogatePolicy::HrzDiagonal => {
                let diag: Vec<f64> = (0..n).map(|i| elem.mass[(i, i)]).collect();
                let scale = 1.0 / diag.iter().sum::<f64>();
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, diag.iter().map(|d| d * scale)))
            }
            SurrogatePolicy::NodeQuadrature => {
                let weights: Vec<f64> = (0..n).map(|i| elem.mass.row(i).sum()).collect();
                if let Some((i, w)) = weights.iter().enumerate().find(|(_, &w)| w <= 1e-14) {
                    return Err(Error::M1Violated {
                        policy: policy.name().into(),
                        detail: format!("nodal weight {w:e} of basis function {i} is not positive"),
                    });
                }
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(weights))
            }
        };
        let eig = jacobi_eigenvalues(&matrix);
        let (lambda_min, lambda_max) = (eig[0], eig[eig.len() - 1]);
        if !(lambda_min > 0.0) {
            return Err(Error::M1Violated {
                policy: policy.name().into(),
                detail: format!("reference matrix has eigenvalue {lambda_min:e}"),
            });
        }
        Ok(Self {
            policy,
            matrix,
            lambda_min,
            lambda_max,
        })
    }

    /// κ(M̃_K̂)
    pub fn kappa(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    pub fn is_diagonal(&self) -> bool {
        self.policy != SurrogatePolicy::Consistent
    }
}

pub(crate) fn map_elements<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Scatters |K| · M̃_K̂ for every element.
pub fn assemble_mass(maps: &[AffineMap], dofs: &DofMap, reference: &SurrogateReference) -> CsrMatrix {
    let n = reference.matrix.nrows();
    let mut triplets = Vec::with_capacity(maps.len() * n * n);
    for (map, el) in maps.iter().zip(&dofs.element_dofs) {
        for i in 0..n {
            for j in 0..n {
                let v = reference.matrix[(i, j)];
                if v != 0.0 {
                    triplets.push((el[i], el[j], map.volume * v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(dofs.n_dofs, dofs.n_dofs, triplets)
}

/// A_ij = Σ_K |K| ∫_K̂ ∇̂φ̂_iᵀ (F′)⁻¹ D (F′)⁻ᵀ ∇̂φ̂_j, quadrature of degree 2(m−1) + q_D.
pub fn assemble_stiffness(
    maps: &[AffineMap],
    dofs: &DofMap,
    elem: &ReferenceElement,
    diffusion: &DiffusionField,
) -> Result<CsrMatrix> {
    let rule = Quadrature::simplex(elem.dim, 2 * (elem.order - 1) + diffusion.degree())?;
    let grads: Vec<Vec<Vec<f64>>> = rule.points.iter().map(|p| elem.gradients_unchecked(p)).collect();
    let n = elem.node_count();
    let d = elem.dim;

    let blocks = map_elements(maps.len(), |k| {
        let map = &maps[k];
        let mut local = DMatrix::<f64>::zeros(n, n);
        let constant = diffusion
            .is_constant()
            .then(|| diffusion.eval(&map.map_point(&vec![0.0; d])));
        for (q, (xi, w)) in rule.iter().enumerate() {
            let tensor = match &constant {
                Some(t) => t.clone(),
                None => diffusion.eval(&map.map_point(xi)),
            };
            if !is_spd(&tensor) {
                return Err(Error::DiffusionNotSpd { element: k, point: q });
            }
            let b = map.pull_back(&tensor);
            let g = &grads[q];
            for i in 0..n {
                let bgi: Vec<f64> = (0..d).map(|r| (0..d).map(|c| b[(r, c)] * g[i][c]).sum()).collect();
                for j in i..n {
                    let v: f64 = (0..d).map(|r| bgi[r] * g[j][r]).sum();
                    local[(i, j)] += w * map.volume * v;
                }
            }
        }
        let el = &dofs.element_dofs[k];
        let mut triplets = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = if j >= i { local[(i, j)] } else { local[(j, i)] };
                triplets.push((el[i], el[j], v));
            }
        }
        Ok(triplets)
    })?;
    Ok(CsrMatrix::from_triplets(
        dofs.n_dofs,
        dofs.n_dofs,
        blocks.into_iter().flatten().collect(),
    ))
}

fn is_spd(t: &DMatrix<f64>) -> bool {
    let scale = t.abs().max();
    let symmetric = (0..t.nrows()).all(|i| (0..i).all(|j| (t[(i, j)] - t[(j, i)]).abs() <= 1e-13 * scale));
    symmetric && symmetric_extremes(t).0 > 0.0
}

/// max over sample points of ‖(F′_K)⁻¹ D(x) (F′_K)⁻ᵀ‖₂.
///
/// Constant tensors are evaluated once; otherwise the images of the rule's
/// points and the element vertices are sampled.
pub fn element_alignment_factor(map: &AffineMap, diffusion: &DiffusionField, rule: &Quadrature) -> f64 {
    sample_points(map, diffusion, rule)
        .map(|x| spd_spectral_norm(&map.pull_back(&diffusion.eval(&x))))
        .fold(0.0, f64::max)
}

pub(crate) fn sample_points<'a>(
    map: &'a AffineMap,
    diffusion: &DiffusionField,
    rule: &'a Quadrature,
) -> Box<dyn Iterator<Item = Vec<f64>> + 'a> {
    let d = map.jacobian.nrows();
    if diffusion.is_constant() {
        return Box::new(std::iter::once(map.map_point(&vec![0.0; d])));
    }
    let vertices = (0..=d).map(move |v| {
        let mut xi = vec![0.0; d];
        if v > 0 {
            xi[v - 1] = 1.0;
        }
        map.map_point(&xi)
    });
    Box::new(rule.points.iter().map(move |p| map.map_point(p)).chain(vertices))
}

/// Full/reduced index bookkeeping for Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct DirichletReduction {
    /// full DOF → reduced index (None for Dirichlet DOFs)
    pub dof_map: Vec<Option<usize>>,
    /// reduced index → full DOF
    pub free: Vec<usize>,
}

impl DirichletReduction {
    pub fn new(dofs: &DofMap) -> Result<Self> {
        if dofs.n_dirichlet() == 0 {
            return Err(Error::NoDirichlet);
        }
        let free: Vec<usize> = (0..dofs.n_dofs).filter(|&i| !dofs.dirichlet[i]).collect();
        if free.is_empty() {
            return Err(Error::InvalidArgument("every degree of freedom is Dirichlet".into()));
        }
        let mut dof_map = vec![None; dofs.n_dofs];
        for (r, &i) in free.iter().enumerate() {
            dof_map[i] = Some(r);
        }
        Ok(Self { dof_map, free })
    }

    pub fn reduce(&self, full: &CsrMatrix) -> CsrMatrix {
        full.restrict(&self.free)
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dof_map.len()];
        for (r, &i) in self.free.iter().enumerate() {
            out[i] = reduced[r];
        }
        out
    }
}

/// Everything needed downstream: the mesh, element, matrices (full and reduced) and patches.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub mesh: SimplicialMesh,
    pub elem: ReferenceElement,
    pub diffusion: DiffusionField,
    pub maps: Vec<AffineMap>,
    pub dofs: DofMap,
    pub patches: PatchTable,
    pub surrogate_ref: SurrogateReference,
    pub full_mass: CsrMatrix,
    pub full_surrogate: CsrMatrix,
    pub full_stiffness: CsrMatrix,
    pub reduction: DirichletReduction,
    /// Consistent mass M on the free DOFs.
    pub mass: CsrMatrix,
    pub surrogate: CsrMatrix,
    pub stiffness: CsrMatrix,
}

impl AssembledSystem {
    pub fn assemble(
        mesh: &SimplicialMesh,
        elem: &ReferenceElement,
        diffusion: &DiffusionField,
        policy: SurrogatePolicy,
    ) -> Result<Self> {
        let maps = mesh.build_affine_maps()?;
        let dofs = DofMap::new(mesh, elem)?;
        let patches = PatchTable::build(mesh, &dofs)?;
        let surrogate_ref = SurrogateReference::new(elem, policy)?;
        let consistent_ref = SurrogateReference::new(elem, SurrogatePolicy::Consistent)?;

        let full_mass = assemble_mass(&maps, &dofs, &consistent_ref);
        let full_surrogate = if policy == SurrogatePolicy::Consistent {
            full_mass.clone()
        } else {
            assemble_mass(&maps, &dofs, &surrogate_ref)
        };
        let full_stiffness = assemble_stiffness(&maps, &dofs, elem, diffusion)?;
        let reduction = DirichletReduction::new(&dofs)?;

        Ok(Self {
            mass: reduction.reduce(&full_mass),
            surrogate: reduction.reduce(&full_surrogate),
            stiffness: reduction.reduce(&full_stiffness),
            mesh: mesh.clone(),
            elem: elem.clone(),
            diffusion: diffusion.clone(),
            maps,
            dofs,
            patches,
            surrogate_ref,
            full_mass,
            full_surrogate,
            full_stiffness,
            reduction,
        })
    }

    pub fn policy(&self) -> SurrogatePolicy {
        self.surrogate_ref.policy
    }

    /// Number of free (non-Dirichlet) DOFs.
    pub fn n_free(&self) -> usize {
        self.reduction.free.len()
    }

    pub fn diag_stiffness(&self) -> Vec<f64> {
        self.stiffness.diagonal()
    }

    pub fn diag_surrogate(&self) -> Vec<f64> {
        self.surrogate.diagonal()
    }

    /// |ω_i| for the free DOFs.
    pub fn patch_volumes(&self) -> Vec<f64> {
        self.reduction.free.iter().map(|&i| self.patches.volumes[i]).collect()
    }

    /// Coefficients of the L² projection of `f` onto the free DOFs (consistent mass).
    pub fn l2_projection(&self, f: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
        let rule = Quadrature::simplex(self.elem.dim, 2 * self.elem.order + 2)?;
        let values: Vec<Vec<f64>> = rule.points.iter().map(|p| self.elem.values_unchecked(p)).collect();
        let mut load = vec![0.0; self.dofs.n_dofs];
        for (map, el) in self.maps.iter().zip(&self.dofs.element_dofs) {
            for (q, (xi, w)) in rule.iter().enumerate() {
                let fx = f(&map.map_point(xi));
                for (local, &g) in el.iter().enumerate() {
                    load[g] += w * map.volume * fx * values[q][local];
                }
            }
        }
        let rhs: Vec<f64> = self.reduction.free.iter().map(|&i| load[i]).collect();
        let factor = crate::cholesky::SpdFactor::new(&self.mass)?;
        Ok(factor.solve(&rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, BoundaryFacet, BoundaryMarker, MeshSpec, TrianglePattern};

    fn system(spec: MeshSpec, m: usize, policy: SurrogatePolicy) -> AssembledSystem {
        let mesh = generate_mesh(&spec).unwrap();
        let elem = ReferenceElement::new(mesh.dim(), m).unwrap();
        AssembledSystem::assemble(&mesh, &elem, &DiffusionField::identity(mesh.dim()), policy).unwrap()
    }

    #[test]
    fn interval_consistent_mass() {
        let s = system(MeshSpec::UniformInterval { n: 2 }, 1, SurrogatePolicy::Consistent);
        let h = 0.5;
        let m = s.full_mass.to_dense();
        assert!((m[(1, 1)] - 4.0 * h / 6.0).abs() < 1e-15);
        assert!((m[(0, 0)] - 2.0 * h / 6.0).abs() < 1e-15);
        assert!((m[(0, 1)] - h / 6.0).abs() < 1e-15);
    }

    #[test]
    fn interval_hrz_mass() {
        let s = system(MeshSpec::UniformInterval { n: 2 }, 1, SurrogatePolicy::HrzDiagonal);
        assert!(s.full_surrogate.is_diagonal());
        assert!((s.full_surrogate.get(1, 1) - 0.5).abs() < 1e-15);
        assert!((s.surrogate_ref.kappa() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interval_stiffness() {
        let s = system(MeshSpec::UniformInterval { n: 4 }, 1, SurrogatePolicy::Consistent);
        let h = 0.25;
        let a = &s.full_stiffness;
        assert!((a.get(2, 2) - 2.0 / h).abs() < 1e-12);
        assert!((a.get(2, 1) + 1.0 / h).abs() < 1e-12);
        assert_eq!(s.stiffness.nrows(), 3);
    }

    #[test]
    fn single_triangle_stiffness() {
        let mesh = SimplicialMesh::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0, 1, 2]],
            vec![BoundaryFacet {
                vertices: vec![1, 2],
                marker: BoundaryMarker::Dirichlet,
            }],
        )
        .unwrap();
        let elem = ReferenceElement::new(2, 1).unwrap();
        let s =
            AssembledSystem::assemble(&mesh, &elem, &DiffusionField::identity(2), SurrogatePolicy::Consistent).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let a = s.full_stiffness.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stiffness_linear_in_diffusion() {
        let mesh = generate_mesh(&MeshSpec::RandomPerturbed {
            nx: 3,
            ny: 3,
            amplitude: 0.05,
            seed: 2,
        })
        .unwrap();
        let elem = ReferenceElement::new(2, 2).unwrap();
        let d = DiffusionField::RotatedAnisotropic {
            angle: 0.3,
            eigenvalues: [1.0, 20.0],
        };
        let a = AssembledSystem::assemble(&mesh, &elem, &d, SurrogatePolicy::Consistent).unwrap();
        let b = AssembledSystem::assemble(&mesh, &elem, &d.scaled(3.5), SurrogatePolicy::Consistent).unwrap();
        let diff = (a.full_stiffness.to_dense() * 3.5 - b.full_stiffness.to_dense())
            .abs()
            .max();
        assert!(diff < 1e-12 * b.full_stiffness.max_abs());
    }

    #[test]
    fn partition_of_unity_and_zero_row_sums() {
        for (spec, m) in [
            (MeshSpec::GradedInterval { n: 7, ratio: 5.0 }, 3),
            (
                MeshSpec::Structured {
                    nx: 3,
                    ny: 4,
                    pattern: TrianglePattern::Alternating,
                },
                2,
            ),
            (
                MeshSpec::RandomPerturbed {
                    nx: 4,
                    ny: 4,
                    amplitude: 0.04,
                    seed: 9,
                },
                3,
            ),
        ] {
            let s = system(spec, m, SurrogatePolicy::Consistent);
            let total: f64 = s.full_mass.row_sums().iter().sum();
            let omega = s.mesh.total_volume();
            assert!((total - omega).abs() < 1e-12 * omega);
            let tol = 1e-11 * s.full_stiffness.norm_inf();
            assert!(s.full_stiffness.row_sums().iter().all(|r| r.abs() <= tol));
            assert!(s.full_stiffness.is_symmetric(1e-14));
        }
    }

    #[test]
    fn node_quadrature_fails_for_p2_triangles() {
        let elem = ReferenceElement::new(2, 2).unwrap();
        assert!(matches!(
            SurrogateReference::new(&elem, SurrogatePolicy::NodeQuadrature),
            Err(Error::M1Violated { .. })
        ));
        // fine for P1 and for P2 on intervals (Simpson weights)
        for (d, m) in [(2, 1), (1, 2), (1, 3), (2, 3)] {
            let elem = ReferenceElement::new(d, m).unwrap();
            assert!(SurrogateReference::new(&elem, SurrogatePolicy::NodeQuadrature).is_ok());
        }
    }

    #[test]
    fn element_blocks_follow_reference_matrix() {
        let s = system(
            MeshSpec::RandomPerturbed {
                nx: 3,
                ny: 2,
                amplitude: 0.05,
                seed: 4,
            },
            2,
            SurrogatePolicy::HrzDiagonal,
        );
        // reassemble one element alone and compare with |K| M̃_K̂
        let single = assemble_mass(
            &s.maps[3..4],
            &DofMap {
                element_dofs: vec![s.dofs.element_dofs[3].clone()],
                ..s.dofs.clone()
            },
            &s.surrogate_ref,
        );
        let el = &s.dofs.element_dofs[3];
        for i in 0..6 {
            for j in 0..6 {
                let want = s.maps[3].volume * s.surrogate_ref.matrix[(i, j)];
                let got = single.get(el[i], el[j]);
                assert!((got - want).abs() <= 1e-13 * want.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn dirichlet_reduction() {
        let s = system(MeshSpec::UniformInterval { n: 4 }, 1, SurrogatePolicy::Consistent);
        assert_eq!(s.reduction.free, vec![1, 2, 3]);
        assert_eq!(s.stiffness.nrows(), 3);
        let min_eig = nalgebra::SymmetricEigen::new(s.stiffness.to_dense()).eigenvalues.min();
        assert!(min_eig > 0.0);
        assert_eq!(s.reduction.expand(&[1.0, 2.0, 3.0]), vec![0.0, 1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn all_neumann_rejected() {
        let mut mesh = generate_mesh(&MeshSpec::UniformInterval { n: 4 }).unwrap();
        mesh.mark_boundary(|_| BoundaryMarker::Neumann);
        let elem = ReferenceElement::new(1, 1).unwrap();
        let err = AssembledSystem::assemble(&mesh, &elem, &DiffusionField::identity(1), SurrogatePolicy::Consistent)
            .unwrap_err();
        assert!(matches!(err, Error::NoDirichlet));
    }

    #[test]
    fn non_spd_diffusion_rejected() {
        let mesh = generate_mesh(&MeshSpec::Structured {
            nx: 2,
            ny: 2,
            pattern: TrianglePattern::Diagonal,
        })
        .unwrap();
        let elem = ReferenceElement::new(2, 1).unwrap();
        let d = DiffusionField::variable(1, |x| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, if x[0] > 0.75 { -1.0 } else { 1.0 }])
        });
        let err = AssembledSystem::assemble(&mesh, &elem, &d, SurrogatePolicy::Consistent).unwrap_err();
        assert!(matches!(err, Error::DiffusionNotSpd { .. }));
    }

    #[test]
    fn alignment_factor_examples() {
        let rule = Quadrature::simplex(1, 0).unwrap();
        let mesh = generate_mesh(&MeshSpec::UniformInterval { n: 5 }).unwrap();
        let map = &mesh.build_affine_maps().unwrap()[0];
        let f = element_alignment_factor(map, &DiffusionField::identity(1), &rule);
        assert!((f - 25.0).abs() < 1e-12);

        // D = F′F′ᵀ gives exactly 1
        let mesh = generate_mesh(&MeshSpec::RandomPerturbed {
            nx: 2,
            ny: 2,
            amplitude: 0.1,
            seed: 5,
        })
        .unwrap();
        let rule = Quadrature::simplex(2, 0).unwrap();
        for map in mesh.build_affine_maps().unwrap() {
            let d = DiffusionField::Constant(&map.jacobian * map.jacobian.transpose());
            let f = element_alignment_factor(&map, &d, &rule);
            assert!((f - 1.0).abs() < 1e-12, "{f}");
        }
    }

    #[test]
    fn l2_projection_of_polynomial_is_exact() {
        let s = system(MeshSpec::UniformInterval { n: 5 }, 2, SurrogatePolicy::Consistent);
        // x(1 − x) lies in the P2 space and vanishes on the Dirichlet ends
        let u = s.l2_projection(|x| x[0] * (1.0 - x[0])).unwrap();
        for (r, &i) in s.reduction.free.iter().enumerate() {
            let x = s.dofs.coords[i][0];
            assert!((u[r] - x * (1.0 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for p in SurrogatePolicy::ALL {
            assert_eq!(SurrogatePolicy::parse(p.name()), Some(p));
        }
        assert_eq!(SurrogatePolicy::parse("lumped"), None);
    }
}
