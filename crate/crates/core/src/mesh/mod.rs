//! Simplicial meshes with boundary markers and per-element affine maps.

pub mod generate;
pub mod io;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{generate_mesh, MeshSpec, TrianglePattern};
pub use io::{mesh_to_string, parse_mesh, read_mesh, write_mesh};

/// Relative tolerance for rejecting flat elements, scaled by (max edge)^d.
pub const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryMarker {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    pub vertices: Vec<usize>,
    pub marker: BoundaryMarker,
}

/// Affine map F_K(ξ) = offset + jacobian · ξ from the standard simplex onto K.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub jacobian: DMatrix<f64>,
    pub inv_jacobian: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub det: f64,
    /// |K| = det(F′_K) / d!
    pub volume: f64,
}

impl AffineMap {
    pub fn map_point(&self, xi: &[f64]) -> Vec<f64> {
        let xi = DVector::from_column_slice(xi);
        (&self.offset + &self.jacobian * xi).iter().copied().collect()
    }

    /// (F′_K)⁻¹ D (F′_K)⁻ᵀ
    pub fn pull_back(&self, diffusion: &DMatrix<f64>) -> DMatrix<f64> {
        &self.inv_jacobian * diffusion * self.inv_jacobian.transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    elements: Vec<Vec<usize>>,
    boundary: Vec<BoundaryFacet>,
}

impl SimplicialMesh {
    /// Builds a mesh, checking index ranges, arities, orientation and degeneracy.
    ///
    /// Boundary facets that are not listed are treated as Neumann.
    pub fn new(
        dim: usize,
        vertices: Vec<Vec<f64>>,
        elements: Vec<Vec<usize>>,
        boundary: Vec<BoundaryFacet>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Structure(format!("unsupported dimension {dim}")));
        }
        if let Some(i) = vertices.iter().position(|v| v.len() != dim) {
            return Err(Error::Structure(format!(
                "vertex {i} has {} coordinates, expected {dim}",
                vertices[i].len()
            )));
        }
        for (k, el) in elements.iter().enumerate() {
            if el.len() != dim + 1 {
                return Err(Error::Structure(format!(
                    "element {k} has {} vertices, expected {}",
                    el.len(),
                    dim + 1
                )));
            }
            if let Some(&v) = el.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Structure(format!(
                    "element {k} references vertex {v} out of range (have {})",
                    vertices.len()
                )));
            }
        }
        let mesh = Self {
            dim,
            vertices,
            elements,
            boundary,
        };
        for k in 0..mesh.elements.len() {
            let det = mesh.signed_det(k);
            if det.abs() <= mesh.degenerate_threshold(k) {
                return Err(Error::DegenerateElement { element: k, det });
            }
            if det < 0.0 {
                return Err(Error::Structure(format!("element {k} is negatively oriented")));
            }
        }
        mesh.check_boundary_listing()?;
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    /// Explicitly listed boundary facets.
    pub fn boundary(&self) -> &[BoundaryFacet] {
        &self.boundary
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub(crate) fn signed_det(&self, k: usize) -> f64 {
        self.jacobian(k).determinant()
    }

    fn jacobian(&self, k: usize) -> DMatrix<f64> {
        let el = &self.elements[k];
        let v0 = &self.vertices[el[0]];
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.vertices[el[c + 1]][r] - v0[r])
    }

    fn degenerate_threshold(&self, k: usize) -> f64 {
        let el = &self.elements[k];
        let mut max_edge: f64 = 0.0;
        for a in 0..el.len() {
            for b in a + 1..el.len() {
                let (p, q) = (&self.vertices[el[a]], &self.vertices[el[b]]);
                let len = p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                max_edge = max_edge.max(len);
            }
        }
        DEGENERATE_TOL * max_edge.powi(self.dim as i32)
    }

    pub fn element_volume(&self, k: usize) -> f64 {
        self.signed_det(k) / factorial(self.dim)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.element_volume(k)).sum()
    }

    pub fn build_affine_maps(&self) -> Result<Vec<AffineMap>> {
        (0..self.n_elements())
            .map(|k| {
                let jacobian = self.jacobian(k);
                let det = jacobian.determinant();
                if det.abs() <= self.degenerate_threshold(k) {
                    return Err(Error::DegenerateElement { element: k, det });
                }
                let inv_jacobian = jacobian
                    .clone()
                    .try_inverse()
                    .ok_or(Error::DegenerateElement { element: k, det })?;
                Ok(AffineMap {
                    offset: DVector::from_column_slice(&self.vertices[self.elements[k][0]]),
                    volume: det / factorial(self.dim),
                    det,
                    jacobian,
                    inv_jacobian,
                })
            })
            .collect()
    }

    /// Facets (sorted vertex tuples) with the elements they belong to.
    pub fn facet_incidence(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (k, el) in self.elements.iter().enumerate() {
            for skip in 0..el.len() {
                let mut facet: Vec<usize> = el
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                facet.sort_unstable();
                map.entry(facet).or_default().push(k);
            }
        }
        map
    }

    /// Every boundary facet with its marker; unlisted facets default to Neumann.
    pub fn boundary_facets(&self) -> Vec<BoundaryFacet> {
        let listed: BTreeMap<Vec<usize>, BoundaryMarker> =
            self.boundary.iter().map(|f| (sorted(&f.vertices), f.marker)).collect();
        self.facet_incidence()
            .into_iter()
            .filter(|(_, els)| els.len() == 1)
            .map(|(facet, _)| BoundaryFacet {
                marker: listed.get(&facet).copied().unwrap_or(BoundaryMarker::Neumann),
                vertices: facet,
            })
            .collect()
    }

    pub fn dirichlet_facets(&self) -> Vec<Vec<usize>> {
        self.boundary
            .iter()
            .filter(|f| f.marker == BoundaryMarker::Dirichlet)
            .map(|f| sorted(&f.vertices))
            .collect()
    }

    /// Replaces all boundary markers by `marker(facet centroid)`.
    pub fn mark_boundary(&mut self, marker: impl Fn(&[f64]) -> BoundaryMarker) {
        let facets = self.boundary_facets();
        self.boundary = facets
            .into_iter()
            .map(|f| {
                let c = self.centroid(&f.vertices);
                BoundaryFacet {
                    marker: marker(&c),
                    vertices: f.vertices,
                }
            })
            .collect();
    }

    pub fn centroid(&self, vertices: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for &v in vertices {
            for (ci, x) in c.iter_mut().zip(&self.vertices[v]) {
                *ci += x;
            }
        }
        c.iter_mut().for_each(|ci| *ci /= vertices.len() as f64);
        c
    }

    fn check_boundary_listing(&self) -> Result<()> {
        if self.boundary.is_empty() {
            return Ok(());
        }
        let incidence = self.facet_incidence();
        let mut seen = BTreeSet::new();
        for (i, f) in self.boundary.iter().enumerate() {
            if f.vertices.len() != self.dim {
                return Err(Error::Structure(format!(
                    "boundary facet {i} has {} vertices, expected {}",
                    f.vertices.len(),
                    self.dim
                )));
            }
            let key = sorted(&f.vertices);
            match incidence.get(&key) {
                Some(els) if els.len() == 1 => {}
                Some(els) => {
                    return Err(Error::Structure(format!(
                        "boundary facet {i} {key:?} is shared by {} elements",
                        els.len()
                    )))
                }
                None => {
                    return Err(Error::Structure(format!(
                        "boundary facet {i} {key:?} is not a facet of any element"
                    )))
                }
            }
            if !seen.insert(key.clone()) {
                return Err(Error::Structure(format!("boundary facet {key:?} listed twice")));
            }
        }
        Ok(())
    }

    /// Conformity and boundary-condition checks beyond what `new` enforces.
    pub fn validate(&self) -> Result<()> {
        for (facet, els) in self.facet_incidence() {
            if els.len() > 2 {
                return Err(Error::Structure(format!(
                    "facet {facet:?} shared by {} elements (non-conforming or overlapping)",
                    els.len()
                )));
            }
        }
        if self.dirichlet_facets().is_empty() {
            return Err(Error::NoDirichlet);
        }
        let total = self.total_volume();
        let sum_abs: f64 = (0..self.n_elements()).map(|k| self.element_volume(k).abs()).sum();
        if (sum_abs - total).abs() > 1e-12 * sum_abs {
            return Err(Error::Structure("elements with inconsistent orientation".into()));
        }
        Ok(())
    }

    /// Rigid rotation about the origin (2D only; identity otherwise).
    pub fn rotated(&self, angle: f64) -> Self {
        if self.dim != 2 {
            return self.clone();
        }
        let (s, c) = angle.sin_cos();
        let mut out = self.clone();
        for v in &mut out.vertices {
            let (x, y) = (v[0], v[1]);
            v[0] = c * x - s * y;
            v[1] = s * x + c * y;
        }
        out
    }
}

pub(crate) fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
