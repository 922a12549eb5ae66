//! Legacy ASCII VTK output.
//!
//! Each cell gets its own copy of its nodes, so the point field `u` keeps
//! the jumps of the discontinuous solution. The local node order of the
//! Lagrange basis coincides with VTK's quadratic (22) and Lagrange (69)
//! triangles. Curved elements are split once into four subcells of the same
//! degree so viewers that interpolate geometry linearly still show the bend.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

const QUADRATIC_TRIANGLE: u8 = 22;
const LAGRANGE_TRIANGLE: u8 = 69;

/// Reference vertices of the four subtriangles of a red refinement.
const SUBCELLS: [[[f64; 2]; 3]; 4] = [
    [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]],
    [[0.5, 0.0], [1.0, 0.0], [0.5, 0.5]],
    [[0.0, 0.5], [0.5, 0.5], [0.0, 1.0]],
    [[0.5, 0.5], [0.0, 0.5], [0.5, 0.0]],
];

/// Per-element scalar attached to the output; copied to every subcell.
pub struct CellField<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Output cells: owning element and reference coordinates of the nodes.
fn cells(mesh: &Mesh) -> Vec<(usize, Vec<[f64; 2]>)> {
    let nodes = mesh.geometry_basis().nodes();
    let mut out = Vec::new();
    for (t, el) in mesh.elements().iter().enumerate() {
        if !el.curved {
            out.push((t, nodes.to_vec()));
            continue;
        }
        for [a, b, c] in SUBCELLS {
            let pts = nodes
                .iter()
                .map(|n| {
                    [
                        a[0] + n[0] * (b[0] - a[0]) + n[1] * (c[0] - a[0]),
                        a[1] + n[0] * (b[1] - a[1]) + n[1] * (c[1] - a[1]),
                    ]
                })
                .collect();
            out.push((t, pts));
        }
    }
    out
}

/// Renders the mesh with an optional nodal field (isoparametric
/// coefficients in dof order) and any number of per-element fields.
pub fn render(
    mesh: &Mesh,
    title: &str,
    point_field: Option<(&str, &[f64])>,
    cell_fields: &[CellField<'_>],
) -> Result<String> {
    let n_el = mesh.n_elements();
    let basis = mesh.geometry_basis();
    let per = basis.len();
    let cell_type = match mesh.geometry_degree() {
        2 => QUADRATIC_TRIANGLE,
        _ => LAGRANGE_TRIANGLE,
    };
    if let Some((_, u)) = point_field {
        check(n_el * per, u.len())?;
    }
    for f in cell_fields {
        check(n_el, f.values.len())?;
    }
    let cells = cells(mesh);
    let n_cells = cells.len();
    let n_points = n_cells * per;

    let mut s = String::new();
    let title = title.replace(['\n', '\r'], " ");
    writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {n_points} double").unwrap();
    for (t, pts) in &cells {
        for &xi in pts {
            let x = mesh.map_point(*t, xi);
            writeln!(s, "{:.16e} {:.16e} 0", x.x, x.y).unwrap();
        }
    }
    writeln!(s, "CELLS {} {}", n_cells, n_cells * (per + 1)).unwrap();
    for c in 0..n_cells {
        let ids: Vec<String> = (c * per..(c + 1) * per).map(|i| i.to_string()).collect();
        writeln!(s, "{per} {}", ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {n_cells}").unwrap();
    for _ in 0..n_cells {
        writeln!(s, "{cell_type}").unwrap();
    }

    if let Some((name, u)) = point_field {
        writeln!(s, "POINT_DATA {n_points}\nSCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for (t, pts) in &cells {
            let local = &u[t * per..(t + 1) * per];
            for &xi in pts {
                let v: f64 = basis.values(xi).iter().zip(local).map(|(p, c)| p * c).sum();
                writeln!(s, "{v:.16e}").unwrap();
            }
        }
    }

    writeln!(s, "CELL_DATA {n_cells}").unwrap();
    for f in cell_fields {
        writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name).unwrap();
        for (t, _) in &cells {
            writeln!(s, "{:.16e}", f.values[*t]).unwrap();
        }
    }
    writeln!(s, "SCALARS element int 1\nLOOKUP_TABLE default").unwrap();
    for (t, _) in &cells {
        writeln!(s, "{t}").unwrap();
    }
    writeln!(s, "SCALARS subdomain int 1\nLOOKUP_TABLE default").unwrap();
    for (t, _) in &cells {
        writeln!(s, "{}", mesh.elements()[*t].subdomain).unwrap();
    }
    Ok(s)
}

fn check(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, got })
    }
}

pub fn write(
    path: &Path,
    mesh: &Mesh,
    title: &str,
    point_field: Option<(&str, &[f64])>,
    cell_fields: &[CellField<'_>],
) -> Result<()> {
    fs::write(path, render(mesh, title, point_field, cell_fields)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{InterfaceKind, InterfaceSpec};

    #[test]
    fn counts_and_cell_types() {
        let mesh = Mesh::structured(4, InterfaceSpec::new(InterfaceKind::Quadratic, 2), 2).unwrap();
        let curved = mesh.elements().iter().filter(|e| e.curved).count();
        let n_cells = mesh.n_elements() + 3 * curved;
        let u = vec![1.0; mesh.n_elements() * 6];
        let e = vec![0.5; mesh.n_elements()];
        let s = render(
            &mesh,
            "t",
            Some(("u", &u)),
            &[CellField {
                name: "energy_density",
                values: &e,
            }],
        )
        .unwrap();
        assert!(curved > 0);
        assert!(s.contains(&format!("POINTS {} double", n_cells * 6)));
        assert!(s.contains(&format!("CELLS {n_cells} {}", n_cells * 7)));
        let types = &s[s.find("CELL_TYPES").unwrap()..s.find("POINT_DATA").unwrap()];
        assert_eq!(types.lines().filter(|l| *l == "22").count(), n_cells);
        // A constant field stays constant on the subcells.
        let start = s.find("POINT_DATA").unwrap();
        let values: Vec<f64> = s[start..]
            .lines()
            .skip(3)
            .take(n_cells * 6)
            .map(|l| l.parse().unwrap())
            .collect();
        assert!(values.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(s.contains("SCALARS energy_density double 1"));
        assert!(s.contains("SCALARS subdomain int 1"));
    }

    #[test]
    fn cubic_uses_lagrange_cells() {
        let mesh = Mesh::two_triangles(3).unwrap();
        let s = render(&mesh, "t", None, &[]).unwrap();
        assert!(s.contains("POINTS 20 double"));
        assert_eq!(s.lines().filter(|l| *l == "69").count(), 2);
        assert!(!s.contains("POINT_DATA"));
    }

    #[test]
    fn rejects_wrong_field_length() {
        let mesh = Mesh::two_triangles(2).unwrap();
        assert!(render(&mesh, "t", Some(("u", &[0.0; 3])), &[]).is_err());
    }
}
