//! Structured and perturbed test meshes. Every boundary facet is marked Dirichlet.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundaryFacet, BoundaryMarker, SimplicialMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrianglePattern {
    /// Every cell split along its south-west to north-east diagonal.
    #[default]
    Diagonal,
    AntiDiagonal,
    /// Split direction alternates in a checkerboard.
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    /// [0, 1] split into `n` equal elements.
    UniformInterval { n: usize },
    /// [0, 1] with geometrically graded elements, largest/smallest = `ratio`.
    GradedInterval { n: usize, ratio: f64 },
    /// Uniform interval with interior vertices shifted by U(−amplitude, amplitude).
    PerturbedInterval { n: usize, amplitude: f64, seed: u64 },
    /// Unit square, `nx × ny` cells, two triangles per cell.
    Structured {
        nx: usize,
        ny: usize,
        #[serde(default)]
        pattern: TrianglePattern,
    },
    /// Cells of width 1/nx and height 1/(nx·ratio): aspect ratio `ratio`.
    Stretched { nx: usize, ny: usize, ratio: f64 },
    /// Unit square with interior vertices shifted by U(−amplitude, amplitude)².
    RandomPerturbed {
        nx: usize,
        ny: usize,
        amplitude: f64,
        seed: u64,
    },
}

impl MeshSpec {
    pub fn dim(&self) -> usize {
        match self {
            MeshSpec::UniformInterval { .. } | MeshSpec::GradedInterval { .. } | MeshSpec::PerturbedInterval { .. } => {
                1
            }
            _ => 2,
        }
    }
}

pub fn generate_mesh(spec: &MeshSpec) -> Result<SimplicialMesh> {
    match *spec {
        MeshSpec::UniformInterval { n } => {
            check_count(n, "n")?;
            interval((0..=n).map(|i| i as f64 / n as f64).collect())
        }
        MeshSpec::GradedInterval { n, ratio } => {
            check_count(n, "n")?;
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "grading ratio must be positive, got {ratio}"
                )));
            }
            let q = if n > 1 { ratio.powf(1.0 / (n as f64 - 1.0)) } else { 1.0 };
            let sizes: Vec<f64> = (0..n).map(|k| q.powi(k as i32)).collect();
            let total: f64 = sizes.iter().sum();
            let mut x = vec![0.0];
            let mut acc = 0.0;
            for s in &sizes {
                acc += s / total;
                x.push(acc);
            }
            x[n] = 1.0;
            interval(x)
        }
        MeshSpec::PerturbedInterval { n, amplitude, seed } => {
            check_count(n, "n")?;
            let h = 1.0 / n as f64;
            check_amplitude(amplitude, h)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = (0..=n)
                .map(|i| {
                    let base = i as f64 * h;
                    if i == 0 || i == n || amplitude == 0.0 {
                        base
                    } else {
                        base + rng.gen_range(-amplitude..amplitude)
                    }
                })
                .collect();
            interval(x)
        }
        MeshSpec::Structured { nx, ny, pattern } => {
            check_count(nx, "nx")?;
            check_count(ny, "ny")?;
            grid(nx, ny, 1.0 / nx as f64, 1.0 / ny as f64, pattern, |_, _| [0.0, 0.0])
        }
        MeshSpec::Stretched { nx, ny, ratio } => {
            check_count(nx, "nx")?;
            check_count(ny, "ny")?;
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "stretch ratio must be positive, got {ratio}"
                )));
            }
            let dx = 1.0 / nx as f64;
            grid(nx, ny, dx, dx / ratio, TrianglePattern::Diagonal, |_, _| [0.0, 0.0])
        }
        MeshSpec::RandomPerturbed {
            nx,
            ny,
            amplitude,
            seed,
        } => {
            check_count(nx, "nx")?;
            check_count(ny, "ny")?;
            let (dx, dy) = (1.0 / nx as f64, 1.0 / ny as f64);
            check_amplitude(amplitude, dx.min(dy))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // draw in vertex order so the mesh is a pure function of the seed
            let mut shifts = vec![[0.0; 2]; (nx + 1) * (ny + 1)];
            for j in 1..ny {
                for i in 1..nx {
                    if amplitude > 0.0 {
                        shifts[j * (nx + 1) + i] = [
                            rng.gen_range(-amplitude..amplitude),
                            rng.gen_range(-amplitude..amplitude),
                        ];
                    }
                }
            }
            grid(nx, ny, dx, dy, TrianglePattern::Diagonal, |i, j| {
                shifts[j * (nx + 1) + i]
            })
        }
    }
}

fn check_count(n: usize, name: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidSpec(format!("{name} must be positive")));
    }
    Ok(())
}

fn check_amplitude(amplitude: f64, min_edge: f64) -> Result<()> {
    if !(amplitude >= 0.0) || amplitude >= 0.5 * min_edge {
        return Err(Error::InvalidSpec(format!(
            "perturbation amplitude {amplitude} must lie in [0, {})",
            0.5 * min_edge
        )));
    }
    Ok(())
}

fn interval(x: Vec<f64>) -> Result<SimplicialMesh> {
    let n = x.len() - 1;
    let vertices = x.into_iter().map(|v| vec![v]).collect();
    let elements = (0..n).map(|i| vec![i, i + 1]).collect();
    let boundary = vec![
        BoundaryFacet {
            vertices: vec![0],
            marker: BoundaryMarker::Dirichlet,
        },
        BoundaryFacet {
            vertices: vec![n],
            marker: BoundaryMarker::Dirichlet,
        },
    ];
    SimplicialMesh::new(1, vertices, elements, boundary)
}

fn grid(
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    pattern: TrianglePattern,
    shift: impl Fn(usize, usize) -> [f64; 2],
) -> Result<SimplicialMesh> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let s = shift(i, j);
            vertices.push(vec![i as f64 * dx + s[0], j as f64 * dy + s[1]]);
        }
    }
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let anti = match pattern {
                TrianglePattern::Diagonal => false,
                TrianglePattern::AntiDiagonal => true,
                TrianglePattern::Alternating => (i + j) % 2 == 1,
            };
            if anti {
                elements.push(vec![a, b, d]);
                elements.push(vec![b, c, d]);
            } else {
                elements.push(vec![a, b, c]);
                elements.push(vec![a, c, d]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    let mut push = |u: usize, v: usize| {
        boundary.push(BoundaryFacet {
            vertices: vec![u, v],
            marker: BoundaryMarker::Dirichlet,
        })
    };
    for i in 0..nx {
        push(id(i, 0), id(i + 1, 0));
        push(id(i, ny), id(i + 1, ny));
    }
    for j in 0..ny {
        push(id(0, j), id(0, j + 1));
        push(id(nx, j), id(nx, j + 1));
    }
    SimplicialMesh::new(2, vertices, elements, boundary)
}
