//! Forward and one-shot inverse finite-strain hyperelasticity on tetrahedral meshes.
//!
//! The forward problem takes an undeformed geometry and loads and computes the
//! displacement `u`. The inverse problem takes the *deformed* geometry and the
//! same loads and computes `u'` so that `X = x + u'` is the unloaded shape. Both
//! share one assembly path; only the deformation gradient changes
//! (`F = I + ∇₀u` versus `F = (I + ∇u')⁻¹`).
//!
//! Module map:
//!
//! - [`mesh`]: tetrahedral meshes, generators, Gmsh import, VTK export
//! - [`fem`]: quadrature, Lagrange P1/P2 bases, function spaces
//! - [`kinematics`]: deformation measures and the Piola transform
//! - [`dual`], [`materials`]: hyper-dual AD and strain-energy densities
//! - [`expr`]: boundary-condition expressions
//! - [`assembly`], [`solver`]: residual/Jacobian assembly, Newton with continuation
//! - [`driver`]: forward, inverse and iterative-geometric entry points
//! - [`oracles`], [`verify`], [`bench`]: closed-form checks and benchmark harnesses
//! - [`config`]: JSON run configuration and reports

pub mod assembly;
pub mod bench;
pub mod config;
pub mod driver;
pub mod dual;
pub mod error;
pub mod expr;
pub mod fem;
pub mod kinematics;
pub mod linalg;
pub mod materials;
pub mod mesh;
pub mod oracles;
pub mod par;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
