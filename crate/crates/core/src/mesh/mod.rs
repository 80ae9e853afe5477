//! Tetrahedral meshes and nodal fields.

mod generators;
mod gmsh;
mod vtk;

use std::collections::BTreeMap;

pub use generators::{generate_box_mesh, generate_cylinder_mesh, generate_unit_tetrahedron};
pub use gmsh::{read_gmsh, read_gmsh_str, GmshMesh};
pub use vtk::write_vtk;

use crate::linalg::{cross, dot3, norm3, sub3, Vec3};
use crate::{Error, Result};

/// Tag given to boundary faces that an imported mesh does not label.
pub const UNTAGGED: i32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: [usize; 3],
    pub tag: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub cells: Vec<[usize; 4]>,
    pub boundary_facets: Vec<BoundaryFacet>,
    pub region_tags: Option<Vec<i32>>,
}

/// The four faces of a tetrahedron, each listed opposite its missing vertex.
pub(crate) const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

pub fn signed_volume(p: &[Vec3; 4]) -> f64 {
    let a = sub3(&p[1], &p[0]);
    let b = sub3(&p[2], &p[0]);
    let c = sub3(&p[3], &p[0]);
    dot3(&a, &cross(&b, &c)) / 6.0
}

pub fn triangle_area(p: &[Vec3; 3]) -> f64 {
    0.5 * norm3(&cross(&sub3(&p[1], &p[0]), &sub3(&p[2], &p[0])))
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

impl Mesh {
    /// Builds a mesh from cells, deriving the boundary facets topologically and
    /// labelling each one with `tagger` applied to its corner coordinates.
    pub fn from_cells(
        vertices: Vec<Vec3>,
        cells: Vec<[usize; 4]>,
        mut tagger: impl FnMut(&[Vec3; 3]) -> i32,
    ) -> Result<Self> {
        let faces = boundary_faces(&cells);
        let boundary_facets = faces
            .into_iter()
            .map(|f| {
                let pts = f.map(|v| vertices[v]);
                BoundaryFacet {
                    vertices: f,
                    tag: tagger(&pts),
                }
            })
            .collect();
        let mesh = Mesh {
            vertices,
            cells,
            boundary_facets,
            region_tags: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, c: usize) -> [Vec3; 4] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(&self.cell_points(c))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_volume(c)).sum()
    }

    pub fn facet_points(&self, f: &BoundaryFacet) -> [Vec3; 3] {
        f.vertices.map(|v| self.vertices[v])
    }

    /// Distinct facet tags in ascending order.
    pub fn facet_tags(&self) -> Vec<i32> {
        let mut tags: Vec<i32> = self.boundary_facets.iter().map(|f| f.tag).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    pub fn has_tag(&self, tag: i32) -> bool {
        self.boundary_facets.iter().any(|f| f.tag == tag)
    }

    /// Same topology and tags, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::invalid(format!(
                "vertex count mismatch: {} vs {}",
                vertices.len(),
                self.vertices.len()
            )));
        }
        Ok(Mesh {
            vertices,
            ..self.clone()
        })
    }

    /// Moves every vertex by the matching row of `displacement`.
    pub fn displaced(&self, displacement: &[Vec3]) -> Result<Self> {
        if displacement.len() != self.vertices.len() {
            return Err(Error::invalid("displacement length differs from vertex count"));
        }
        let moved = self
            .vertices
            .iter()
            .zip(displacement)
            .map(|(x, u)| [x[0] + u[0], x[1] + u[1], x[2] + u[2]])
            .collect();
        self.with_vertices(moved)
    }

    /// Checks index ranges, positive cell volumes and boundary closure.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (c, cell) in self.cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::invalid(format!("cell {c} references a missing vertex")));
            }
            let vol = self.cell_volume(c);
            if vol <= 0.0 || !vol.is_finite() {
                return Err(Error::invalid(format!("cell {c} has non-positive volume {vol:e}")));
            }
        }
        let boundary: Vec<[usize; 3]> = boundary_faces(&self.cells);
        let mut facets: Vec<[usize; 3]> = self
            .boundary_facets
            .iter()
            .map(|f| sorted3(f.vertices))
            .collect();
        facets.sort_unstable();
        let mut expected: Vec<[usize; 3]> = boundary.into_iter().map(sorted3).collect();
        expected.sort_unstable();
        if facets != expected {
            return Err(Error::invalid(
                "boundary facets do not match the topological boundary",
            ));
        }
        Ok(())
    }

    /// Bounding box as (min, max).
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}

/// Faces that belong to exactly one cell, in the vertex order of that cell,
/// sorted by their sorted vertex triple.
pub(crate) fn boundary_faces(cells: &[[usize; 4]]) -> Vec<[usize; 3]> {
    let mut seen: BTreeMap<[usize; 3], (usize, [usize; 3])> = BTreeMap::new();
    for cell in cells {
        for face in TET_FACES {
            let f = face.map(|k| cell[k]);
            seen.entry(sorted3(f))
                .and_modify(|e| e.0 += 1)
                .or_insert((1, f));
        }
    }
    seen.into_values()
        .filter(|(count, _)| *count == 1)
        .map(|(_, f)| f)
        .collect()
}

/// Nodal coefficients of a Lagrange field, node-major (`value_dim` values per node).
///
/// For P2 fields the first `num_vertices` nodes are the mesh vertices, followed by
/// the edge midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    pub degree: usize,
    pub value_dim: usize,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(degree: usize, value_dim: usize, num_nodes: usize) -> Self {
        NodalField {
            degree,
            value_dim,
            values: vec![0.0; num_nodes * value_dim],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len() / self.value_dim
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.value_dim..(i + 1) * self.value_dim]
    }

    /// First `n` nodes as 3-vectors (vector fields only).
    pub fn vertex_vectors(&self, n: usize) -> Vec<Vec3> {
        assert_eq!(self.value_dim, 3, "vertex_vectors needs a vector field");
        (0..n)
            .map(|i| [self.values[3 * i], self.values[3 * i + 1], self.values[3 * i + 2]])
            .collect()
    }
}
