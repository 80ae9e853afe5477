//! Lagrange P1/P2 elements on tetrahedra, quadrature and global DOF maps.

mod basis;
mod quadrature;
mod space;

pub use basis::{tabulate_basis, tabulate_triangle_basis, Tabulation, TET_EDGES, TRI_EDGES};
pub use quadrature::{quadrature_tet, quadrature_triangle, QuadratureRule, DEFAULT_DEGREE};
pub use space::{build_space, FunctionSpace};
