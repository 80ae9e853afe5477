//! VTK legacy ASCII export.

use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, NodalField};
use crate::{Error, Result};

const VTK_TETRA: u8 = 10;

/// Writes `mesh` as an UNSTRUCTURED_GRID with the given fields as POINT_DATA.
///
/// Only the vertex values of each field are written; for P2 fields the edge
/// midpoint coefficients are dropped.
pub fn write_vtk(mesh: &Mesh, fields: &[(&str, &NodalField)], path: impl AsRef<Path>) -> Result<()> {
    let nv = mesh.num_vertices();
    for (name, f) in fields {
        if f.num_nodes() < nv {
            return Err(Error::invalid(format!(
                "field `{name}` has {} nodes, mesh has {nv} vertices",
                f.num_nodes()
            )));
        }
        if name.contains(char::is_whitespace) {
            return Err(Error::invalid(format!("field name `{name}` contains whitespace")));
        }
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\ninvfem output\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {nv} double").unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:e} {:e} {:e}", v[0], v[1], v[2]).unwrap();
    }
    let nc = mesh.num_cells();
    writeln!(s, "CELLS {nc} {}", nc * 5).unwrap();
    for c in &mesh.cells {
        writeln!(s, "4 {} {} {} {}", c[0], c[1], c[2], c[3]).unwrap();
    }
    writeln!(s, "CELL_TYPES {nc}").unwrap();
    for _ in 0..nc {
        writeln!(s, "{VTK_TETRA}").unwrap();
    }
    if !fields.is_empty() {
        writeln!(s, "POINT_DATA {nv}").unwrap();
    }
    for (name, f) in fields {
        match f.value_dim {
            3 => {
                writeln!(s, "VECTORS {name} double").unwrap();
                for i in 0..nv {
                    let n = f.node(i);
                    writeln!(s, "{:e} {:e} {:e}", n[0], n[1], n[2]).unwrap();
                }
            }
            1 => {
                writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
                for i in 0..nv {
                    writeln!(s, "{:e}", f.node(i)[0]).unwrap();
                }
            }
            d => return Err(Error::invalid(format!("unsupported field dimension {d}"))),
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}
