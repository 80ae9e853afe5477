//! Residual and Jacobian assembly for the forward and inverse weak forms.
//!
//! Both directions run through the same element kernel. The material point
//! evaluation ([`point_response`]) supplies the stress-like flux paired with
//! test-function gradients on the mesh and the factor applied to `ρ₀ b`; the
//! kernel itself never looks at the direction.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::fem::{
    build_space, quadrature_tet, quadrature_triangle, tabulate_basis, tabulate_triangle_basis, FunctionSpace,
    QuadratureRule, Tabulation, DEFAULT_DEGREE,
};
use crate::kinematics::Direction;
use crate::linalg::{Mat3, Vec3};
use crate::materials::{point_response, MaterialSpec};
use crate::mesh::{triangle_area, Mesh, NodalField};
use crate::par::{map_chunks, Parallelism};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    #[serde(rename = "displacement")]
    DisplacementOnly,
    /// P2 displacement with P1 pressure.
    #[serde(rename = "mixed")]
    MixedUP,
}

/// Prescribed displacement on the facets with `tag`, for the masked components.
#[derive(Clone, Debug)]
pub struct DirichletBC {
    pub tag: i32,
    pub components: [bool; 3],
    pub exprs: [Expr; 3],
}

impl DirichletBC {
    /// `components` is any subset of `"xyz"`.
    pub fn new(tag: i32, components: &str, exprs: [&str; 3]) -> Result<Self> {
        Ok(DirichletBC {
            tag,
            components: parse_components(components)?,
            exprs: [crate::expr::parse(exprs[0])?, crate::expr::parse(exprs[1])?, crate::expr::parse(exprs[2])?],
        })
    }

    /// All components fixed at zero.
    pub fn clamped(tag: i32) -> Self {
        DirichletBC {
            tag,
            components: [true; 3],
            exprs: [Expr::zero(), Expr::zero(), Expr::zero()],
        }
    }
}

pub fn parse_components(mask: &str) -> Result<[bool; 3]> {
    let mut out = [false; 3];
    for ch in mask.chars() {
        let i = match ch {
            'x' => 0,
            'y' => 1,
            'z' => 2,
            _ => return Err(Error::invalid(format!("component mask `{mask}` may only contain x, y, z"))),
        };
        out[i] = true;
    }
    if !out.iter().any(|&b| b) {
        return Err(Error::invalid("empty component mask"));
    }
    Ok(out)
}

/// Dead surface load per unit mesh area on the facets with `tag`.
#[derive(Clone, Debug)]
pub struct Traction {
    pub tag: i32,
    pub exprs: [Expr; 3],
}

/// Compressed sparse row pattern; columns sorted within each row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePattern {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl SparsePattern {
    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (s, e) = (self.row_ptr[row], self.row_ptr[row + 1]);
        self.col_idx[s..e].binary_search(&col).ok().map(|k| s + k)
    }
}

/// Square sparse matrix with a right-hand side.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub pattern: Arc<SparsePattern>,
    pub values: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn num_dofs(&self) -> usize {
        self.pattern.nrows()
    }

    /// Builds a system from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != n {
            return Err(Error::invalid("right-hand side length differs from matrix size"));
        }
        let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
            }
            *entries.entry((i, j)).or_default() += v;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (&(i, j), &v) in &entries {
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseSystem {
            pattern: Arc::new(SparsePattern { row_ptr, col_idx }),
            values,
            rhs,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.pattern;
        (0..p.nrows())
            .map(|i| (p.row_ptr[i]..p.row_ptr[i + 1]).map(|k| self.values[k] * x[p.col_idx[k]]).sum())
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let p = &self.pattern;
        (0..p.nrows())
            .map(|i| (p.row_ptr[i]..p.row_ptr[i + 1]).map(|k| self.values[k].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.num_dofs();
        let mut d = vec![vec![0.0; n]; n];
        let p = &self.pattern;
        for (i, row) in d.iter_mut().enumerate() {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                row[p.col_idx[k]] += self.values[k];
            }
        }
        d
    }
}

/// One quadrature point of a solved field, for comparisons with closed forms.
#[derive(Clone, Debug)]
pub struct QuadratureSample {
    /// Position on the input mesh.
    pub point: Vec3,
    /// Quadrature weight times mesh volume measure.
    pub weight: f64,
    /// Strain energy per unit reference volume.
    pub energy: f64,
    pub cauchy: Mat3,
}

/// A fully specified boundary-value problem on one mesh.
///
/// The unknown vector stacks displacement DOFs (node-major, three per node)
/// followed by pressure DOFs for [`Formulation::MixedUP`].
#[derive(Clone, Debug)]
pub struct ProblemDefinition {
    pub direction: Direction,
    pub formulation: Formulation,
    pub mesh: Mesh,
    pub u_space: FunctionSpace,
    pub p_space: Option<FunctionSpace>,
    pub material: MaterialSpec,
    pub dirichlet: Vec<DirichletBC>,
    pub tractions: Vec<Traction>,
    pub body_force: [Expr; 3],
    pub load_scale: f64,
    pub parallelism: Parallelism,
    quadrature: QuadratureRule,
    tab_u: Tabulation,
    tab_p: Option<Tabulation>,
    pattern: OnceLock<Arc<SparsePattern>>,
}

const CELL_CHUNK: usize = 64;

impl ProblemDefinition {
    pub fn new(
        mesh: Mesh,
        direction: Direction,
        formulation: Formulation,
        u_degree: usize,
        material: MaterialSpec,
    ) -> Result<Self> {
        material.validate()?;
        if formulation == Formulation::MixedUP && u_degree != 2 {
            return Err(Error::invalid("the mixed formulation needs P2 displacement (P2/P1 pair)"));
        }
        if material.kind.is_mixed() != (formulation == Formulation::MixedUP) {
            return Err(Error::invalid(format!(
                "material {:?} does not match formulation {formulation:?}",
                material.kind
            )));
        }
        let u_space = build_space(&mesh, u_degree, 3)?;
        let p_space = match formulation {
            Formulation::MixedUP => Some(build_space(&mesh, 1, 1)?),
            Formulation::DisplacementOnly => None,
        };
        // P1 gradients are constant per cell, so a degree-2 rule already
        // integrates the stiffness exactly and the loads to second order.
        let quadrature = quadrature_tet(if u_degree == 1 { 2 } else { DEFAULT_DEGREE })?;
        let tab_u = tabulate_basis(u_degree, &quadrature.points)?;
        let tab_p = p_space.as_ref().map(|_| tabulate_basis(1, &quadrature.points)).transpose()?;
        Ok(ProblemDefinition {
            direction,
            formulation,
            mesh,
            u_space,
            p_space,
            material,
            dirichlet: Vec::new(),
            tractions: Vec::new(),
            body_force: [Expr::zero(), Expr::zero(), Expr::zero()],
            load_scale: 1.0,
            parallelism: Parallelism::default(),
            quadrature,
            tab_u,
            tab_p,
            pattern: OnceLock::new(),
        })
    }

    /// The same problem posed on another mesh with identical topology and tags.
    pub fn with_mesh(&self, mesh: Mesh) -> Result<Self> {
        let mut out = ProblemDefinition::new(mesh, self.direction, self.formulation, self.u_space.degree, self.material)?;
        out.dirichlet = self.dirichlet.clone();
        out.tractions = self.tractions.clone();
        out.body_force = self.body_force.clone();
        out.load_scale = self.load_scale;
        out.parallelism = self.parallelism;
        Ok(out)
    }

    /// The same problem with the other direction on the same mesh.
    pub fn with_direction(&self, direction: Direction) -> Self {
        let mut out = self.clone();
        out.direction = direction;
        out
    }

    fn check_tag(&self, tag: i32) -> Result<()> {
        if self.mesh.has_tag(tag) {
            Ok(())
        } else {
            Err(Error::invalid(format!("mesh has no boundary facets tagged {tag}")))
        }
    }

    pub fn with_dirichlet(mut self, bc: DirichletBC) -> Result<Self> {
        self.check_tag(bc.tag)?;
        self.dirichlet.push(bc);
        Ok(self)
    }

    pub fn with_traction(mut self, t: Traction) -> Result<Self> {
        self.check_tag(t.tag)?;
        self.tractions.push(t);
        Ok(self)
    }

    pub fn with_body_force(mut self, b: [Expr; 3]) -> Self {
        self.body_force = b;
        self
    }

    pub fn with_parallelism(mut self, mode: Parallelism) -> Self {
        self.parallelism = mode;
        self
    }

    pub fn num_u_dofs(&self) -> usize {
        self.u_space.num_dofs()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_u_dofs() + self.p_space.as_ref().map_or(0, FunctionSpace::num_dofs)
    }

    pub fn zero_state(&self) -> Vec<f64> {
        vec![0.0; self.num_dofs()]
    }

    /// Displacement and optional pressure fields of a solution vector.
    pub fn split_solution(&self, x: &[f64]) -> (NodalField, Option<NodalField>) {
        let nu = self.num_u_dofs();
        let mut u = self.u_space.zero_field();
        u.values.copy_from_slice(&x[..nu]);
        let p = self.p_space.as_ref().map(|ps| {
            let mut p = ps.zero_field();
            p.values.copy_from_slice(&x[nu..]);
            p
        });
        (u, p)
    }

    pub fn vertex_displacements(&self, x: &[f64]) -> Vec<Vec3> {
        (0..self.mesh.num_vertices())
            .map(|v| [x[3 * v], x[3 * v + 1], x[3 * v + 2]])
            .collect()
    }

    /// Constrained DOFs and their values at the current load scale. Where
    /// conditions overlap, the later one wins.
    pub fn dirichlet_values(&self) -> Result<BTreeMap<usize, f64>> {
        let mut out = BTreeMap::new();
        for bc in &self.dirichlet {
            let nodes = self
                .u_space
                .boundary_nodes(bc.tag)
                .ok_or_else(|| Error::invalid(format!("mesh has no boundary facets tagged {}", bc.tag)))?;
            for &n in nodes {
                let xn = self.u_space.node_coords[n];
                for c in 0..3 {
                    if bc.components[c] {
                        out.insert(3 * n + c, self.load_scale * bc.exprs[c].evaluate(&xn)?);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn constrained_mask(&self) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.num_dofs()];
        for d in self.dirichlet_values()?.into_keys() {
            mask[d] = true;
        }
        Ok(mask)
    }

    /// Writes the prescribed values into the constrained entries of `x`.
    pub fn apply_dirichlet(&self, x: &mut [f64]) -> Result<()> {
        self.check_state(x)?;
        for (d, v) in self.dirichlet_values()? {
            x[d] = v;
        }
        Ok(())
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_dofs() {
            return Err(Error::invalid(format!(
                "state has {} entries, problem has {} DOFs",
                x.len(),
                self.num_dofs()
            )));
        }
        Ok(())
    }

    /// Jacobian sparsity: every pair of DOFs sharing a cell.
    pub fn pattern(&self) -> Arc<SparsePattern> {
        self.pattern
            .get_or_init(|| {
                let n = self.num_dofs();
                let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
                let mut dofs = Vec::new();
                for c in 0..self.mesh.num_cells() {
                    self.cell_dofs(c, &mut dofs);
                    for &r in &dofs {
                        rows[r].extend_from_slice(&dofs);
                    }
                }
                let mut row_ptr = Vec::with_capacity(n + 1);
                row_ptr.push(0);
                let mut col_idx = Vec::new();
                for mut r in rows {
                    r.sort_unstable();
                    r.dedup();
                    col_idx.extend(r);
                    row_ptr.push(col_idx.len());
                }
                Arc::new(SparsePattern { row_ptr, col_idx })
            })
            .clone()
    }

    fn cell_dofs(&self, c: usize, out: &mut Vec<usize>) {
        out.clear();
        for &n in self.u_space.cell_nodes(c) {
            out.extend([3 * n, 3 * n + 1, 3 * n + 2]);
        }
        if let Some(ps) = &self.p_space {
            let off = self.num_u_dofs();
            out.extend(ps.cell_nodes(c).iter().map(|&n| off + n));
        }
    }

    /// Consistent nodal forces `s ∫ t·η` of the surface loads.
    pub fn traction_load(&self) -> Result<Vec<f64>> {
        let mut f = vec![0.0; self.num_dofs()];
        if self.tractions.is_empty() {
            return Ok(f);
        }
        let rule = quadrature_triangle();
        let tab = tabulate_triangle_basis(self.u_space.degree, &rule.points)?;
        for t in &self.tractions {
            for (i, facet) in self.mesh.boundary_facets.iter().enumerate() {
                if facet.tag != t.tag {
                    continue;
                }
                let pts = self.mesh.facet_points(facet);
                let area = triangle_area(&pts);
                let nodes = self.u_space.facet_nodes(i);
                for (q, w) in rule.weights.iter().enumerate() {
                    let xi = rule.points[q];
                    let bary = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
                    let x: Vec3 = std::array::from_fn(|k| (0..3).map(|v| bary[v] * pts[v][k]).sum());
                    let tv = [t.exprs[0].evaluate(&x)?, t.exprs[1].evaluate(&x)?, t.exprs[2].evaluate(&x)?];
                    let wq = 2.0 * area * w * self.load_scale;
                    for (a, &n) in nodes.iter().enumerate() {
                        for k in 0..3 {
                            f[3 * n + k] += wq * tv[k] * tab[q][a];
                        }
                    }
                }
            }
        }
        Ok(f)
    }

    fn body_force_at(&self, x: &Vec3) -> Result<Option<Vec3>> {
        if self.body_force.iter().all(Expr::is_zero) {
            return Ok(None);
        }
        Ok(Some([
            self.body_force[0].evaluate(x)?,
            self.body_force[1].evaluate(x)?,
            self.body_force[2].evaluate(x)?,
        ]))
    }

    fn cell_geometry(&self, c: usize) -> (Mat3, f64, [Vec3; 4]) {
        let p = self.mesh.cell_points(c);
        let jm = Mat3::from_fn(|i, j| p[j + 1][i] - p[0][i]);
        let det = jm.det();
        let inv = jm.inverse().expect("validated mesh has positive volumes");
        (inv, det, p)
    }

    /// Integrand data at every quadrature point of cell `c`, in quadrature order.
    fn element(&self, c: usize, x: &[f64], want_jacobian: bool) -> Result<ElementOutput> {
        let mut dofs = Vec::new();
        self.cell_dofs(c, &mut dofs);
        let nu = self.u_space.nodes_per_cell;
        let np = self.p_space.as_ref().map_or(0, |_| 4);
        let nd = 3 * nu + np;
        let ue: Vec<f64> = dofs[..3 * nu].iter().map(|&d| x[d]).collect();
        let pe: Vec<f64> = dofs[3 * nu..].iter().map(|&d| x[d]).collect();
        let (jinv, det, corners) = self.cell_geometry(c);
        let mut r = vec![0.0; nd];
        let mut k = if want_jacobian { vec![0.0; nd * nd] } else { Vec::new() };
        let mut grads = vec![[0.0; 3]; nu];
        let mut a_buf = vec![0.0; nu * 27];
        let s = self.load_scale;
        let rho0 = self.material.rho0;
        let tag_cell = |e: Error| match e {
            Error::ElementInversion { jacobian, .. } => Error::ElementInversion {
                jacobian,
                cell: Some(c),
            },
            other => other,
        };

        for (q, wq) in self.quadrature.weights.iter().enumerate() {
            let w = wq * det;
            let nvals = &self.tab_u.values[q];
            for (a, g) in grads.iter_mut().enumerate() {
                let gr = self.tab_u.gradients[q][a];
                *g = std::array::from_fn(|i| (0..3).map(|j| jinv.0[j][i] * gr[j]).sum());
            }
            let h = Mat3::from_fn(|i, j| (0..nu).map(|a| ue[3 * a + i] * grads[a][j]).sum());
            let pvals = self.tab_p.as_ref().map(|t| &t.values[q]);
            let p = pvals.map(|nv| (0..np).map(|b| nv[b] * pe[b]).sum::<f64>());
            let resp = point_response(&self.material, self.direction, &h, p, want_jacobian).map_err(tag_cell)?;
            let xi = self.quadrature.points[q];
            let bary = [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]];
            let xq: Vec3 = std::array::from_fn(|k| (0..4).map(|v| bary[v] * corners[v][k]).sum());
            let body = self.body_force_at(&xq)?;

            for a in 0..nu {
                for i in 0..3 {
                    let mut v: f64 = (0..3).map(|j| resp.flux[3 * i + j] * grads[a][j]).sum();
                    if let Some(b) = body {
                        v -= s * rho0 * resp.density_factor * b[i] * nvals[a];
                    }
                    r[3 * a + i] += w * v;
                }
            }
            if let Some(nv) = pvals {
                for b in 0..np {
                    r[3 * nu + b] += w * resp.pressure_residual * nv[b];
                }
            }

            let Some(t) = resp.tangent else { continue };
            // A[a][i][kl] = Σ_j ∂flux_ij/∂H_kl ∂_j N_a
            for a in 0..nu {
                for i in 0..3 {
                    for b in 0..9 {
                        a_buf[a * 27 + i * 9 + b] = (0..3).map(|j| t.flux_h[3 * i + j][b] * grads[a][j]).sum();
                    }
                }
            }
            for a in 0..nu {
                for i in 0..3 {
                    let row = (3 * a + i) * nd;
                    let body_i = body.map(|b| s * rho0 * b[i] * nvals[a]);
                    for cn in 0..nu {
                        for kk in 0..3 {
                            let mut v = 0.0;
                            for l in 0..3 {
                                v += a_buf[a * 27 + i * 9 + 3 * kk + l] * grads[cn][l];
                            }
                            if let Some(bi) = body_i {
                                let dd: f64 = (0..3).map(|l| t.density_h[3 * kk + l] * grads[cn][l]).sum();
                                v -= bi * dd;
                            }
                            k[row + 3 * cn + kk] += w * v;
                        }
                    }
                }
            }
            if let Some(nv) = pvals {
                for a in 0..nu {
                    for i in 0..3 {
                        let up: f64 = (0..3).map(|j| t.flux_p[3 * i + j] * grads[a][j]).sum();
                        for b in 0..np {
                            k[(3 * a + i) * nd + 3 * nu + b] += w * up * nv[b];
                        }
                    }
                }
                for b in 0..np {
                    let row = (3 * nu + b) * nd;
                    for cn in 0..nu {
                        for kk in 0..3 {
                            let pu: f64 = (0..3).map(|l| t.pressure_h[3 * kk + l] * grads[cn][l]).sum();
                            k[row + 3 * cn + kk] += w * nv[b] * pu;
                        }
                    }
                    for b2 in 0..np {
                        k[row + 3 * nu + b2] += w * nv[b] * nv[b2] * t.pressure_p;
                    }
                }
            }
        }
        Ok(ElementOutput { dofs, r, k })
    }

    /// Residual and, if requested, the Jacobian with Dirichlet rows and columns
    /// replaced by identity. Constrained residual entries hold `u − u_D`.
    pub fn assemble(&self, x: &[f64], want_jacobian: bool) -> Result<(Vec<f64>, Option<SparseSystem>)> {
        self.check_state(x)?;
        let n = self.num_dofs();
        let pattern = want_jacobian.then(|| self.pattern());
        let chunks = map_chunks(self.mesh.num_cells(), CELL_CHUNK, self.parallelism, |range| {
            range
                .map(|c| self.element(c, x, want_jacobian))
                .collect::<Result<Vec<_>>>()
        });
        let mut r = vec![0.0; n];
        let mut values = pattern.as_ref().map(|p| vec![0.0; p.nnz()]);
        for chunk in chunks {
            for el in chunk? {
                for (li, &gi) in el.dofs.iter().enumerate() {
                    r[gi] += el.r[li];
                }
                if let (Some(vals), Some(p)) = (values.as_mut(), pattern.as_ref()) {
                    let nd = el.dofs.len();
                    for (li, &gi) in el.dofs.iter().enumerate() {
                        let (s, e) = (p.row_ptr[gi], p.row_ptr[gi + 1]);
                        let cols = &p.col_idx[s..e];
                        for (lj, &gj) in el.dofs.iter().enumerate() {
                            let pos = s + cols.binary_search(&gj).expect("pattern covers cell couplings");
                            vals[pos] += el.k[li * nd + lj];
                        }
                    }
                }
            }
        }
        let f_t = self.traction_load()?;
        for (ri, fi) in r.iter_mut().zip(&f_t) {
            *ri -= fi;
        }
        let bc = self.dirichlet_values()?;
        for (&d, &v) in &bc {
            r[d] = x[d] - v;
        }
        let system = match (values, pattern) {
            (Some(mut vals), Some(p)) => {
                let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
                if !bc.is_empty() {
                    let mut mask = vec![false; n];
                    for &d in bc.keys() {
                        mask[d] = true;
                    }
                    // Lifting: a Newton step sets δ_c = −r_c on constrained DOFs,
                    // so their columns move to the free right-hand side before
                    // being cleared.
                    for i in 0..n {
                        for kk in p.row_ptr[i]..p.row_ptr[i + 1] {
                            let j = p.col_idx[kk];
                            if mask[i] || mask[j] {
                                if !mask[i] && r[j] != 0.0 {
                                    rhs[i] += vals[kk] * r[j];
                                }
                                vals[kk] = if i == j { 1.0 } else { 0.0 };
                            }
                        }
                    }
                }
                Some(SparseSystem {
                    pattern: p,
                    values: vals,
                    rhs,
                })
            }
            _ => None,
        };
        Ok((r, system))
    }

    pub fn assemble_residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.assemble(x, false)?.0)
    }

    /// Jacobian as a system whose right-hand side is the Newton right-hand side:
    /// the negated residual, with the effect of any pending Dirichlet
    /// increment carried over to the free rows.
    pub fn assemble_jacobian(&self, x: &[f64]) -> Result<SparseSystem> {
        Ok(self.assemble(x, true)?.1.expect("requested"))
    }

    /// Total potential energy `∫ψ − s(∫ρ₀b·u + ∫t₀·u)` of a forward
    /// displacement problem; its gradient is the unconstrained residual.
    pub fn potential_energy(&self, x: &[f64]) -> Result<f64> {
        if self.direction != Direction::Forward || self.formulation != Formulation::DisplacementOnly {
            return Err(Error::invalid("potential energy is defined for forward displacement problems only"));
        }
        self.check_state(x)?;
        let mut e = 0.0;
        let nu = self.u_space.nodes_per_cell;
        for c in 0..self.mesh.num_cells() {
            let nodes = self.u_space.cell_nodes(c);
            let (jinv, det, corners) = self.cell_geometry(c);
            for (q, wq) in self.quadrature.weights.iter().enumerate() {
                let grads: Vec<Vec3> = (0..nu)
                    .map(|a| {
                        let gr = self.tab_u.gradients[q][a];
                        std::array::from_fn(|i| (0..3).map(|j| jinv.0[j][i] * gr[j]).sum())
                    })
                    .collect();
                let h = Mat3::from_fn(|i, j| (0..nu).map(|a| x[3 * nodes[a] + i] * grads[a][j]).sum());
                let resp = point_response(&self.material, self.direction, &h, None, false)?;
                e += wq * det * resp.energy;
                let xi = self.quadrature.points[q];
                let bary = [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]];
                let xq: Vec3 = std::array::from_fn(|k| (0..4).map(|v| bary[v] * corners[v][k]).sum());
                if let Some(b) = self.body_force_at(&xq)? {
                    for a in 0..nu {
                        let na = self.tab_u.values[q][a];
                        for i in 0..3 {
                            e -= wq * det * self.load_scale * self.material.rho0 * b[i] * na * x[3 * nodes[a] + i];
                        }
                    }
                }
            }
        }
        let f_t = self.traction_load()?;
        e -= f_t.iter().zip(x).map(|(f, u)| f * u).sum::<f64>();
        Ok(e)
    }

    /// Energy density and Cauchy stress at every quadrature point.
    pub fn quadrature_samples(&self, x: &[f64]) -> Result<Vec<QuadratureSample>> {
        self.check_state(x)?;
        let mut out = Vec::with_capacity(self.mesh.num_cells() * self.quadrature.len());
        let nu = self.u_space.nodes_per_cell;
        let nu_dofs = self.num_u_dofs();
        for c in 0..self.mesh.num_cells() {
            let nodes = self.u_space.cell_nodes(c);
            let (jinv, det, corners) = self.cell_geometry(c);
            for (q, wq) in self.quadrature.weights.iter().enumerate() {
                let grads: Vec<Vec3> = (0..nu)
                    .map(|a| {
                        let gr = self.tab_u.gradients[q][a];
                        std::array::from_fn(|i| (0..3).map(|j| jinv.0[j][i] * gr[j]).sum())
                    })
                    .collect();
                let h = Mat3::from_fn(|i, j| (0..nu).map(|a| x[3 * nodes[a] + i] * grads[a][j]).sum());
                let p = match (&self.p_space, &self.tab_p) {
                    (Some(ps), Some(tp)) => Some(
                        ps.cell_nodes(c)
                            .iter()
                            .enumerate()
                            .map(|(b, &n)| tp.values[q][b] * x[nu_dofs + n])
                            .sum::<f64>(),
                    ),
                    _ => None,
                };
                let resp = point_response(&self.material, self.direction, &h, p, false)
                    .map_err(|e| match e {
                        Error::ElementInversion { jacobian, .. } => Error::ElementInversion {
                            jacobian,
                            cell: Some(c),
                        },
                        other => other,
                    })?;
                let flux = Mat3::from_fn(|i, j| resp.flux[3 * i + j]);
                let cauchy = match self.direction {
                    Direction::Inverse => flux,
                    Direction::Forward => {
                        let f = h.add(&Mat3::identity());
                        crate::kinematics::piola_transform(&flux, &f)?
                    }
                };
                let xi = self.quadrature.points[q];
                let bary = [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]];
                out.push(QuadratureSample {
                    point: std::array::from_fn(|k| (0..4).map(|v| bary[v] * corners[v][k]).sum()),
                    weight: wq * det,
                    energy: resp.energy,
                    cauchy,
                });
            }
        }
        Ok(out)
    }
}

struct ElementOutput {
    dofs: Vec<usize>,
    r: Vec<f64>,
    k: Vec<f64>,
}
