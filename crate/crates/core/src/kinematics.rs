//! Deformation measures for forward and inverse analysis.
//!
//! Forward: the mesh is the undeformed body and `F = I + ∇₀u`.
//! Inverse: the mesh is the deformed body, the unknown is `u' = X − x` and
//! `F = (I + ∇u')⁻¹`.

use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::linalg::Mat3;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    /// Deformation gradient from the displacement gradient taken on the mesh.
    pub fn deformation_gradient<S: Scalar>(self, grad: &Mat3<S>) -> Result<Mat3<S>> {
        let g = grad.add(&Mat3::identity());
        match self {
            Direction::Forward => Ok(g),
            Direction::Inverse => {
                let det = g.det().value();
                if det <= 0.0 {
                    return Err(Error::inversion(det));
                }
                g.inverse().ok_or_else(|| Error::inversion(det))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformationState {
    pub f: Mat3,
    pub j: f64,
    /// Left Cauchy–Green tensor `F Fᵀ`.
    pub b: Mat3,
    /// Right Cauchy–Green tensor `Fᵀ F`.
    pub c: Mat3,
    pub invariants_c: [f64; 3],
    pub invariants_b: [f64; 3],
}

impl DeformationState {
    pub fn from_f(f: Mat3) -> Result<Self> {
        let j = f.det();
        if !(j > 0.0) {
            return Err(Error::inversion(j));
        }
        let b = f.matmul(&f.transpose());
        let c = f.transpose().matmul(&f);
        Ok(DeformationState {
            f,
            j,
            b,
            c,
            invariants_c: invariants(&c),
            invariants_b: invariants(&b),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrainTensors {
    pub e: Mat3,
}

pub fn deformation_gradient_direct(grad_u: &Mat3) -> Result<DeformationState> {
    DeformationState::from_f(Direction::Forward.deformation_gradient(grad_u)?)
}

pub fn deformation_gradient_inverse(grad_uprime: &Mat3) -> Result<DeformationState> {
    DeformationState::from_f(Direction::Inverse.deformation_gradient(grad_uprime)?)
}

/// Principal invariants `(tr C, ½((tr C)² − tr C²), det C)`.
pub fn invariants<S: Scalar>(c: &Mat3<S>) -> [S; 3] {
    let tr = c.trace();
    let tr2 = c.matmul(c).trace();
    [tr, (tr * tr - tr2) * 0.5, c.det()]
}

/// Green–Lagrange strain `E = ½(C − I)`.
pub fn green_lagrange(c: &Mat3) -> StrainTensors {
    StrainTensors {
        e: c.sub(&Mat3::identity()).scale(0.5),
    }
}

/// Cauchy stress `σ = J⁻¹ P Fᵀ`.
pub fn piola_transform(p: &Mat3, f: &Mat3) -> Result<Mat3> {
    let j = f.det();
    if !(j > 0.0) {
        return Err(Error::inversion(j));
    }
    Ok(p.matmul(&f.transpose()).scale(1.0 / j))
}
