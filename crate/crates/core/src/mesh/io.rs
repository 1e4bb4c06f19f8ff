//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! DIMENSION 2
//! VERTICES 4
//! 0.0000000000000000e0 0.0000000000000000e0
//! ...
//! ELEMENTS 2
//! 0 1 2
//! ...
//! BOUNDARY 3
//! 0 1 D
//! ...
//! ```
//!
//! Indices are zero-based; markers are `D` (Dirichlet) or `N` (Neumann).
//! Coordinates are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryFacet, BoundaryMarker, SimplicialMesh};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &SimplicialMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<SimplicialMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn mesh_to_string(mesh: &SimplicialMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# stepbound simplicial mesh");
    let _ = writeln!(s, "DIMENSION {}", mesh.dim());
    let _ = writeln!(s, "VERTICES {}", mesh.n_vertices());
    for v in mesh.vertices() {
        let line: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    let _ = writeln!(s, "ELEMENTS {}", mesh.n_elements());
    for el in mesh.elements() {
        let line: Vec<String> = el.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    let _ = writeln!(s, "BOUNDARY {}", mesh.boundary().len());
    for f in mesh.boundary() {
        let line: Vec<String> = f.vertices.iter().map(usize::to_string).collect();
        let marker = match f.marker {
            BoundaryMarker::Dirichlet => "D",
            BoundaryMarker::Neumann => "N",
        };
        let _ = writeln!(s, "{} {marker}", line.join(" "));
    }
    s
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Vertices,
    Elements,
    Boundary,
}

pub fn parse_mesh(text: &str) -> Result<SimplicialMesh> {
    let mut dim: Option<usize> = None;
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut elements: Vec<Vec<usize>> = Vec::new();
    let mut boundary: Vec<BoundaryFacet> = Vec::new();
    let mut section: Option<(Section, usize, usize)> = None; // (kind, declared, header line)

    let close = |section: &Option<(Section, usize, usize)>,
                 v: &Vec<Vec<f64>>,
                 e: &Vec<Vec<usize>>,
                 b: &Vec<BoundaryFacet>|
     -> Result<()> {
        if let Some((kind, declared, line)) = *section {
            let got = match kind {
                Section::Vertices => v.len(),
                Section::Elements => e.len(),
                Section::Boundary => b.len(),
            };
            if got != declared {
                return Err(Error::Structure(format!(
                    "section declared on line {line} expects {declared} entries, found {got}"
                )));
            }
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse { line: line_no, message };

        let header = match tokens[0] {
            "DIMENSION" => Some(None),
            "VERTICES" => Some(Some(Section::Vertices)),
            "ELEMENTS" => Some(Some(Section::Elements)),
            "BOUNDARY" => Some(Some(Section::Boundary)),
            _ => None,
        };
        if let Some(kind) = header {
            if tokens.len() != 2 {
                return Err(parse_err(format!("`{}` expects one integer", tokens[0])));
            }
            let value: usize = tokens[1]
                .parse()
                .map_err(|_| parse_err(format!("invalid count `{}`", tokens[1])))?;
            close(&section, &vertices, &elements, &boundary)?;
            match kind {
                None => {
                    dim = Some(value);
                    section = None;
                }
                Some(kind) => {
                    if dim.is_none() {
                        return Err(parse_err("DIMENSION must come first".into()));
                    }
                    section = Some((kind, value, line_no));
                }
            }
            continue;
        }

        let d = dim.ok_or_else(|| parse_err("data before DIMENSION".into()))?;
        let Some((kind, declared, _)) = section else {
            return Err(parse_err(format!("unexpected line `{line}`")));
        };
        match kind {
            Section::Vertices => {
                if vertices.len() >= declared {
                    return Err(parse_err("more vertices than declared".into()));
                }
                if tokens.len() != d {
                    return Err(parse_err(format!("expected {d} coordinates, found {}", tokens.len())));
                }
                let v = tokens
                    .iter()
                    .map(|t| t.parse::<f64>().map_err(|_| parse_err(format!("invalid number `{t}`"))))
                    .collect::<Result<Vec<_>>>()?;
                vertices.push(v);
            }
            Section::Elements => {
                if elements.len() >= declared {
                    return Err(parse_err("more elements than declared".into()));
                }
                if tokens.len() != d + 1 {
                    return Err(parse_err(format!("expected {} indices, found {}", d + 1, tokens.len())));
                }
                elements.push(parse_indices(&tokens, line_no)?);
            }
            Section::Boundary => {
                if boundary.len() >= declared {
                    return Err(parse_err("more boundary facets than declared".into()));
                }
                if tokens.len() != d + 1 {
                    return Err(parse_err(format!(
                        "expected {d} indices and a marker, found {} tokens",
                        tokens.len()
                    )));
                }
                let marker = match tokens[d] {
                    "D" => BoundaryMarker::Dirichlet,
                    "N" => BoundaryMarker::Neumann,
                    other => return Err(parse_err(format!("unknown marker `{other}`"))),
                };
                boundary.push(BoundaryFacet {
                    vertices: parse_indices(&tokens[..d], line_no)?,
                    marker,
                });
            }
        }
    }
    close(&section, &vertices, &elements, &boundary)?;

    let dim = dim.ok_or(Error::Parse {
        line: 0,
        message: "missing DIMENSION".into(),
    })?;
    for (k, el) in elements.iter().enumerate() {
        if let Some(&v) = el.iter().find(|&&v| v >= vertices.len()) {
            return Err(Error::Structure(format!(
                "element {k} references vertex {v} out of range (have {})",
                vertices.len()
            )));
        }
    }
    // repair orientation before the constructor sees the elements
    for (k, el) in elements.iter_mut().enumerate() {
        if el.len() == dim + 1 && signed_measure(&vertices, el) < 0.0 {
            log::warn!("element {k} is negatively oriented; swapping its last two vertices");
            el.swap(dim - 1, dim);
        }
    }
    SimplicialMesh::new(dim, vertices, elements, boundary)
}

fn parse_indices(tokens: &[&str], line: usize) -> Result<Vec<usize>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("invalid index `{t}`"),
            })
        })
        .collect()
}

fn signed_measure(vertices: &[Vec<f64>], el: &[usize]) -> f64 {
    let d = el.len() - 1;
    let v0 = &vertices[el[0]];
    let j = nalgebra::DMatrix::from_fn(d, d, |r, c| vertices[el[c + 1]][r] - v0[r]);
    j.determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshSpec};

    #[test]
    fn round_trip_interval() {
        let mesh = generate_mesh(&MeshSpec::UniformInterval { n: 4 }).unwrap();
        let back = parse_mesh(&mesh_to_string(&mesh)).unwrap();
        assert_eq!(mesh, back);
    }

    #[test]
    fn round_trip_file() {
        let mesh = generate_mesh(&MeshSpec::RandomPerturbed {
            nx: 4,
            ny: 3,
            amplitude: 0.05,
            seed: 3,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mesh");
        write_mesh(&mesh, &path).unwrap();
        assert_eq!(read_mesh(&path).unwrap(), mesh);
    }

    #[test]
    fn out_of_range_index_names_element() {
        let text = "DIMENSION 1\nVERTICES 2\n0\n1\nELEMENTS 2\n0 1\n1 7\nBOUNDARY 0\n";
        let err = parse_mesh(text).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
        assert!(err.to_string().contains("element 1"), "{err}");
    }

    #[test]
    fn negative_orientation_is_repaired() {
        let text = "DIMENSION 2\nVERTICES 3\n0 0\n1 0\n0 1\nELEMENTS 1\n0 2 1\nBOUNDARY 1\n0 1 D\n";
        let mesh = parse_mesh(text).unwrap();
        assert_eq!(mesh.elements()[0], vec![0, 1, 2]);
        assert!(mesh.element_volume(0) > 0.0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "DIMENSION 1\nVERTICES 2\n0\nabc\n";
        match parse_mesh(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn count_mismatch_is_structural() {
        let text = "DIMENSION 1\nVERTICES 3\n0\n1\nELEMENTS 1\n0 1\n";
        assert!(matches!(parse_mesh(text), Err(Error::Structure(_))));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# hi\n\nDIMENSION 1 # dim\nVERTICES 2\n0\n1 # right\nELEMENTS 1\n0 1\nBOUNDARY 1\n0 D\n";
        let mesh = parse_mesh(text).unwrap();
        assert_eq!(mesh.n_elements(), 1);
        assert_eq!(mesh.dirichlet_facets(), vec![vec![0]]);
    }
}
