use std::collections::BTreeMap;

use super::basis::{TET_EDGES, TRI_EDGES};
use crate::linalg::Vec3;
use crate::mesh::{Mesh, NodalField};
use crate::{Error, Result};

/// Continuous Lagrange space on a tetrahedral mesh.
///
/// Nodes are the mesh vertices (same indices) followed, for degree 2, by one
/// node per edge numbered in lexicographic order of the sorted vertex pair.
/// Degrees of freedom are node-major: `dof = node * value_dim + component`.
#[derive(Clone, Debug)]
pub struct FunctionSpace {
    pub degree: usize,
    pub value_dim: usize,
    pub num_vertices: usize,
    pub nodes_per_cell: usize,
    cell_nodes: Vec<usize>,
    pub node_coords: Vec<Vec3>,
    /// Nodes of each mesh boundary facet (3 or 6), aligned with `mesh.boundary_facets`.
    facet_nodes: Vec<Vec<usize>>,
    /// All nodes lying on facets with a given tag, sorted.
    boundary_nodes: BTreeMap<i32, Vec<usize>>,
}

pub fn build_space(mesh: &Mesh, degree: usize, value_dim: usize) -> Result<FunctionSpace> {
    if degree != 1 && degree != 2 {
        return Err(Error::invalid(format!("unsupported Lagrange degree {degree}")));
    }
    if value_dim != 1 && value_dim != 3 {
        return Err(Error::invalid(format!("unsupported value dimension {value_dim}")));
    }
    let nv = mesh.num_vertices();
    let mut node_coords = mesh.vertices.clone();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    if degree == 2 {
        for cell in &mesh.cells {
            for [i, j] in TET_EDGES {
                let (a, b) = (cell[i].min(cell[j]), cell[i].max(cell[j]));
                edges.push([a, b]);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        node_coords.extend(edges.iter().map(|&[a, b]| {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            std::array::from_fn(|k| 0.5 * (pa[k] + pb[k]))
        }));
    }
    let edge_node = |a: usize, b: usize| -> usize {
        let key = [a.min(b), a.max(b)];
        nv + edges.binary_search(&key).expect("edge registered")
    };
    let nodes_per_cell = if degree == 1 { 4 } else { 10 };
    let mut cell_nodes = Vec::with_capacity(nodes_per_cell * mesh.num_cells());
    for cell in &mesh.cells {
        cell_nodes.extend_from_slice(cell);
        if degree == 2 {
            cell_nodes.extend(TET_EDGES.iter().map(|&[i, j]| edge_node(cell[i], cell[j])));
        }
    }
    let facet_nodes: Vec<Vec<usize>> = mesh
        .boundary_facets
        .iter()
        .map(|f| {
            let mut n = f.vertices.to_vec();
            if degree == 2 {
                n.extend(TRI_EDGES.iter().map(|&[i, j]| edge_node(f.vertices[i], f.vertices[j])));
            }
            n
        })
        .collect();
    let mut boundary_nodes: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (f, nodes) in mesh.boundary_facets.iter().zip(&facet_nodes) {
        boundary_nodes.entry(f.tag).or_default().extend(nodes);
    }
    for nodes in boundary_nodes.values_mut() {
        nodes.sort_unstable();
        nodes.dedup();
    }
    Ok(FunctionSpace {
        degree,
        value_dim,
        num_vertices: nv,
        nodes_per_cell,
        cell_nodes,
        node_coords,
        facet_nodes,
        boundary_nodes,
    })
}

impl FunctionSpace {
    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_nodes() * self.value_dim
    }

    pub fn num_cells(&self) -> usize {
        self.cell_nodes.len() / self.nodes_per_cell
    }

    pub fn cell_nodes(&self, c: usize) -> &[usize] {
        &self.cell_nodes[c * self.nodes_per_cell..(c + 1) * self.nodes_per_cell]
    }

    pub fn facet_nodes(&self, facet: usize) -> &[usize] {
        &self.facet_nodes[facet]
    }

    /// Nodes on facets carrying `tag`; `None` if the tag is absent.
    pub fn boundary_nodes(&self, tag: i32) -> Option<&[usize]> {
        self.boundary_nodes.get(&tag).map(Vec::as_slice)
    }

    /// DOFs of the given components on facets carrying `tag`.
    pub fn boundary_dofs(&self, tag: i32, components: &[usize]) -> Option<Vec<usize>> {
        let nodes = self.boundary_nodes(tag)?;
        Some(
            nodes
                .iter()
                .flat_map(|&n| components.iter().map(move |&c| n * self.value_dim + c))
                .collect(),
        )
    }

    pub fn zero_field(&self) -> NodalField {
        NodalField::zeros(self.degree, self.value_dim, self.num_nodes())
    }

    /// Nodal interpolation of `f`, which must return `value_dim` values.
    pub fn interpolate(&self, f: impl Fn(&Vec3) -> Vec<f64>) -> NodalField {
        let mut field = self.zero_field();
        for (n, x) in self.node_coords.iter().enumerate() {
            let v = f(x);
            debug_assert_eq!(v.len(), self.value_dim);
            field.values[n * self.value_dim..(n + 1) * self.value_dim].copy_from_slice(&v);
        }
        field
    }

    pub fn check_field(&self, field: &NodalField, name: &str) -> Result<()> {
        if field.value_dim != self.value_dim || field.values.len() != self.num_dofs() {
            return Err(Error::invalid(format!(
                "field `{name}` has {} values of dimension {}, space expects {} of dimension {}",
                field.values.len(),
                field.value_dim,
                self.num_dofs(),
                self.value_dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{quadrature_tet, tabulate_basis};
    use crate::mesh::{generate_box_mesh, generate_unit_tetrahedron};

    #[test]
    fn dof_counts() {
        let t = generate_unit_tetrahedron();
        assert_eq!(build_space(&t, 1, 3).unwrap().num_dofs(), 12);
        assert_eq!(build_space(&t, 2, 3).unwrap().num_dofs(), 30);
        let b = generate_box_mesh([1.0; 3], [1, 1, 1]).unwrap();
        assert_eq!(build_space(&b, 1, 1).unwrap().num_dofs(), 8);
        // 8 vertices + 12 cube edges + 6 face diagonals + 1 body diagonal
        assert_eq!(build_space(&b, 2, 1).unwrap().num_nodes(), 27);
        assert!(build_space(&b, 3, 1).is_err());
        assert!(build_space(&b, 1, 2).is_err());
    }

    #[test]
    fn shared_nodes_and_boundary_sets() {
        let b = generate_box_mesh([1.0; 3], [2, 2, 2]).unwrap();
        let s = build_space(&b, 2, 3).unwrap();
        assert_eq!(s.num_nodes(), 125);
        // every tagged facet's nodes are in its tag's set
        for (i, f) in b.boundary_facets.iter().enumerate() {
            let set = s.boundary_nodes(f.tag).unwrap();
            for n in s.facet_nodes(i) {
                assert!(set.binary_search(n).is_ok());
            }
        }
        // x-min face of a 2×2 grid in P2: 5×5 nodes
        assert_eq!(s.boundary_nodes(1).unwrap().len(), 25);
        assert!(s.boundary_nodes(1).unwrap().iter().all(|&n| s.node_coords[n][0] == 0.0));
        assert!(s.boundary_nodes(42).is_none());
    }

    #[test]
    fn numbering_independent_of_cell_order() {
        let b = generate_box_mesh([1.0; 3], [2, 1, 1]).unwrap();
        let mut r = b.clone();
        r.cells.reverse();
        let s1 = build_space(&b, 2, 1).unwrap();
        let s2 = build_space(&r, 2, 1).unwrap();
        assert_eq!(s1.node_coords, s2.node_coords);
    }

    #[test]
    fn interpolation_reproduces_space_polynomials() {
        let m = generate_box_mesh([1.0, 2.0, 0.5], [2, 2, 1]).unwrap();
        let rule = quadrature_tet(4).unwrap();
        for degree in [1usize, 2] {
            let f = move |x: &Vec3| {
                if degree == 1 {
                    1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2]
                } else {
                    x[0] * x[1] - x[2] * x[2] + 3.0 * x[0]
                }
            };
            let s = build_space(&m, degree, 1).unwrap();
            let field = s.interpolate(|x| vec![f(x)]);
            let tab = tabulate_basis(degree, &rule.points).unwrap();
            for c in 0..m.num_cells() {
                let p = m.cell_points(c);
                for (q, xi) in rule.points.iter().enumerate() {
                    let x: Vec3 = std::array::from_fn(|k| {
                        p[0][k] + xi[0] * (p[1][k] - p[0][k]) + xi[1] * (p[2][k] - p[0][k]) + xi[2] * (p[3][k] - p[0][k])
                    });
                    let v: f64 = s
                        .cell_nodes(c)
                        .iter()
                        .zip(&tab.values[q])
                        .map(|(&n, phi)| field.values[n] * phi)
                        .sum();
                    assert!((v - f(&x)).abs() < 1e-12);
                }
            }
        }
    }
}
