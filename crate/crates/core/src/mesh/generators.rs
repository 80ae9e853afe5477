use std::f64::consts::PI;

use super::{signed_volume, Mesh};
use crate::linalg::Vec3;
use crate::{Error, Result};

fn orient(cell: &mut [usize; 4], vertices: &[Vec3]) {
    let p = cell.map(|v| vertices[v]);
    if signed_volume(&p) < 0.0 {
        cell.swap(2, 3);
    }
}

/// Structured box `[0, ex] × [0, ey] × [0, ez]`, each hexahedron split into the
/// six Kuhn tetrahedra that share its main diagonal.
///
/// Facet tags: 1 x-min, 2 x-max, 3 y-min, 4 y-max, 5 z-min, 6 z-max.
pub fn generate_box_mesh(extents: [f64; 3], divisions: [usize; 3]) -> Result<Mesh> {
    if extents.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::invalid(format!("box extents must be positive, got {extents:?}")));
    }
    if divisions.contains(&0) {
        return Err(Error::invalid(format!("box divisions must be >= 1, got {divisions:?}")));
    }
    let [nx, ny, nz] = divisions;
    let idx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    extents[0] * i as f64 / nx as f64,
                    extents[1] * j as f64 / ny as f64,
                    extents[2] * k as f64 / nz as f64,
                ]);
            }
        }
    }
    const AXIS_ORDERS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for order in AXIS_ORDERS {
                    let mut corner = [i, j, k];
                    let mut cell = [idx(i, j, k), 0, 0, 0];
                    for (step, axis) in order.iter().enumerate() {
                        corner[*axis] += 1;
                        cell[step + 1] = idx(corner[0], corner[1], corner[2]);
                    }
                    orient(&mut cell, &vertices);
                    cells.push(cell);
                }
            }
        }
    }
    let tol = 1e-12 * extents.iter().cloned().fold(0.0, f64::max);
    Mesh::from_cells(vertices, cells, |pts| {
        for axis in 0..3 {
            if pts.iter().all(|p| p[axis].abs() <= tol) {
                return 2 * axis as i32 + 1;
            }
            if pts.iter().all(|p| (p[axis] - extents[axis]).abs() <= tol) {
                return 2 * axis as i32 + 2;
            }
        }
        unreachable!("boundary facet of a box must lie on a face")
    })
}

/// Triangulated disc of unit radius: a centre vertex plus `layers` rings, ring
/// `l` carrying `6l` points. Returns (points, triangles), triangles counter-clockwise.
fn disc(layers: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut points = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for l in 1..=layers {
        ring_start.push(points.len());
        let n = 6 * l;
        let rho = l as f64 / layers as f64;
        for m in 0..n {
            let theta = 2.0 * PI * m as f64 / n as f64;
            points.push([rho * theta.cos(), rho * theta.sin()]);
        }
    }
    let ring = |l: usize, m: usize| -> usize {
        if l == 0 {
            0
        } else {
            ring_start[l] + m % (6 * l)
        }
    };
    let mut tris = Vec::with_capacity(6 * layers * layers);
    for l in 1..=layers {
        let n_in = 6 * (l - 1);
        let n_out = 6 * l;
        if n_in == 0 {
            for m in 0..n_out {
                tris.push([0, ring(l, m), ring(l, m + 1)]);
            }
            continue;
        }
        // Merge the two rings by angle; angles compared exactly as fractions.
        let (mut i, mut j) = (0usize, 0usize);
        while i < n_in || j < n_out {
            let advance_outer = j < n_out && (i == n_in || (j + 1) * n_in <= (i + 1) * n_out);
            if advance_outer {
                tris.push([ring(l - 1, i), ring(l, j), ring(l, j + 1)]);
                j += 1;
            } else {
                tris.push([ring(l - 1, i), ring(l, j), ring(l - 1, i + 1)]);
                i += 1;
            }
        }
    }
    for t in tris.iter_mut() {
        let [a, b, c] = t.map(|v| points[v]);
        let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if area2 < 0.0 {
            t.swap(1, 2);
        }
    }
    (points, tris)
}

/// Cylinder along +x with its axis through the origin, from `x = 0` to `x = length`.
///
/// The cross-section is a triangulated disc with `radial_layers` rings; each
/// extruded prism is split into three tetrahedra with diagonals chosen by global
/// vertex index so neighbouring prisms conform. Facet tag 1 is the `x = 0` end
/// cap, tag 2 everything else.
pub fn generate_cylinder_mesh(
    length: f64,
    diameter: f64,
    axial_divisions: usize,
    radial_layers: usize,
) -> Result<Mesh> {
    if !(length > 0.0) || !(diameter > 0.0) || !length.is_finite() || !diameter.is_finite() {
        return Err(Error::invalid(format!(
            "cylinder dimensions must be positive, got length {length}, diameter {diameter}"
        )));
    }
    if axial_divisions == 0 || radial_layers == 0 {
        return Err(Error::invalid("cylinder divisions must be >= 1"));
    }
    let radius = 0.5 * diameter;
    let (pts2, tris) = disc(radial_layers);
    let nd = pts2.len();
    let mut vertices = Vec::with_capacity(nd * (axial_divisions + 1));
    for k in 0..=axial_divisions {
        let x = length * k as f64 / axial_divisions as f64;
        for p in &pts2 {
            vertices.push([x, radius * p[0], radius * p[1]]);
        }
    }
    let mut cells = Vec::with_capacity(3 * tris.len() * axial_divisions);
    for k in 0..axial_divisions {
        for t in &tris {
            let mut bottom = t.map(|v| k * nd + v);
            bottom.sort_unstable();
            let top = bottom.map(|v| v + nd);
            let [v0, v1, v2] = bottom;
            let [w0, w1, w2] = top;
            for mut cell in [[v0, v1, v2, w2], [v0, v1, w1, w2], [v0, w0, w1, w2]] {
                orient(&mut cell, &vertices);
                cells.push(cell);
            }
        }
    }
    let tol = 1e-12 * length;
    Mesh::from_cells(vertices, cells, |pts| {
        if pts.iter().all(|p| p[0].abs() <= tol) {
            1
        } else {
            2
        }
    })
}

/// The reference tetrahedron with corners at the origin and the three unit points.
///
/// The facet in the `y = 0` plane is tagged 1, the other three 2.
pub fn generate_unit_tetrahedron() -> Mesh {
    let vertices = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];
    Mesh::from_cells(vertices, vec![[0, 1, 2, 3]], |pts| {
        if pts.iter().all(|p| p[1] == 0.0) {
            1
        } else {
            2
        }
    })
    .expect("reference tetrahedron is valid")
}
