//! Global degree-of-freedom numbering and element patches ω_i.
//!
//! Numbering: mesh vertices first, then edge nodes in sorted global-edge order,
//! then element-interior nodes in element order.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;
use crate::reference::{NodeKind, ReferenceElement};

#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_dofs: usize,
    /// Global DOF of each local node, per element, in reference-element order.
    pub element_dofs: Vec<Vec<usize>>,
    /// Physical coordinates of every DOF.
    pub coords: Vec<Vec<f64>>,
    /// True for DOFs lying on a Dirichlet facet.
    pub dirichlet: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &SimplicialMesh, elem: &ReferenceElement) -> Result<Self> {
        if mesh.dim() != elem.dim {
            return Err(Error::DimensionMismatch(format!(
                "mesh dimension {} vs element dimension {}",
                mesh.dim(),
                elem.dim
            )));
        }
        let m = elem.order;
        let n_vertices = mesh.n_vertices();

        let edges: BTreeMap<(usize, usize), usize> = if mesh.dim() >= 2 && m >= 2 {
            let set: BTreeSet<(usize, usize)> = mesh
                .elements()
                .iter()
                .flat_map(|el| {
                    (0..el.len())
                        .flat_map(move |a| (a + 1..el.len()).map(move |b| (el[a].min(el[b]), el[a].max(el[b]))))
                })
                .collect();
            set.into_iter().enumerate().map(|(i, e)| (e, i)).collect()
        } else {
            BTreeMap::new()
        };
        let per_edge = m.saturating_sub(1);
        let edge_base = n_vertices;
        let interior_base = edge_base + edges.len() * per_edge;
        let interior_local: Vec<usize> = (0..elem.node_count())
            .filter(|&i| elem.node_kind(i) == NodeKind::Interior)
            .collect();
        let n_dofs = interior_base + mesh.n_elements() * interior_local.len();

        let dirichlet_facets: BTreeSet<Vec<usize>> = mesh.dirichlet_facets().into_iter().collect();
        let dirichlet_vertices: BTreeSet<usize> = dirichlet_facets.iter().flatten().copied().collect();

        let maps = mesh.build_affine_maps()?;
        let mut coords = vec![Vec::new(); n_dofs];
        let mut dirichlet = vec![false; n_dofs];
        let mut element_dofs = Vec::with_capacity(mesh.n_elements());

        for (k, el) in mesh.elements().iter().enumerate() {
            let mut dofs = Vec::with_capacity(elem.node_count());
            for (local, alpha) in elem.multi_indices.iter().enumerate() {
                let support: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0).collect();
                let dof = match elem.node_kind(local) {
                    NodeKind::Vertex => {
                        let v = el[support[0]];
                        dirichlet[v] = dirichlet_vertices.contains(&v);
                        v
                    }
                    NodeKind::Edge => {
                        let (a, b) = (el[support[0]], el[support[1]]);
                        let key = (a.min(b), a.max(b));
                        // position counted from the lower-numbered endpoint
                        let hi_local = if a > b { support[0] } else { support[1] };
                        let dof = edge_base + edges[&key] * per_edge + alpha[hi_local] - 1;
                        dirichlet[dof] = mesh.dim() == 2 && dirichlet_facets.contains(&vec![key.0, key.1]);
                        dof
                    }
                    NodeKind::Interior => {
                        let rank = interior_local.iter().position(|&i| i == local).unwrap();
                        interior_base + k * interior_local.len() + rank
                    }
                };
                if coords[dof].is_empty() {
                    coords[dof] = maps[k].map_point(&elem.nodes[local]);
                }
                dofs.push(dof);
            }
            element_dofs.push(dofs);
        }

        if let Some(orphan) = coords.iter().position(Vec::is_empty) {
            return Err(Error::Structure(format!(
                "degree of freedom {orphan} has no incident element"
            )));
        }

        Ok(Self {
            n_dofs,
            element_dofs,
            coords,
            dirichlet,
        })
    }

    pub fn n_dirichlet(&self) -> usize {
        self.dirichlet.iter().filter(|&&d| d).count()
    }
}

/// Patch ω_i of every DOF: the elements on which φ_i is supported, and |ω_i|.
#[derive(Debug, Clone)]
pub struct PatchTable {
    pub elements: Vec<Vec<usize>>,
    pub volumes: Vec<f64>,
    /// Local index of DOF i within each element of its patch (parallel to `elements`).
    pub local_index: Vec<Vec<usize>>,
}

impl PatchTable {
    pub fn build(mesh: &SimplicialMesh, dofs: &DofMap) -> Result<Self> {
        let mut elements = vec![Vec::new(); dofs.n_dofs];
        let mut local_index = vec![Vec::new(); dofs.n_dofs];
        for (k, el_dofs) in dofs.element_dofs.iter().enumerate() {
            for (local, &i) in el_dofs.iter().enumerate() {
                elements[i].push(k);
                local_index[i].push(local);
            }
        }
        if let Some(orphan) = elements.iter().position(Vec::is_empty) {
            return Err(Error::Structure(format!(
                "degree of freedom {orphan} has an empty patch"
            )));
        }
        let volumes = elements
            .iter()
            .map(|patch| patch.iter().map(|&k| mesh.element_volume(k)).sum())
            .collect();
        Ok(Self {
            elements,
            volumes,
            local_index,
        })
    }
}
