//! Hyperelastic strain-energy densities and their derivatives.
//!
//! Every model is written once as [`energy`] over a generic [`Scalar`]; stresses
//! and tangents come from evaluating it with dual or hyper-dual numbers, so a
//! new model only needs a new arm in that function.

use serde::{Deserialize, Serialize};

use crate::dual::{Dual, HyperDual, Scalar};
use crate::kinematics::{DeformationState, Direction};
use crate::linalg::Mat3;
use crate::{Error, Result};

/// Smallest admissible `J` where a model takes `ln J`.
pub const LOG_J_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    NeoHookeanCompressible,
    MooneyRivlinCompressible,
    NeoHookeanMixed,
    MooneyRivlinMixed,
}

impl MaterialKind {
    pub fn is_mixed(self) -> bool {
        matches!(self, MaterialKind::NeoHookeanMixed | MaterialKind::MooneyRivlinMixed)
    }

    pub const ALL: [MaterialKind; 4] = [
        MaterialKind::NeoHookeanCompressible,
        MaterialKind::MooneyRivlinCompressible,
        MaterialKind::NeoHookeanMixed,
        MaterialKind::MooneyRivlinMixed,
    ];
}

/// Model and constants. Neo-Hookean uses `mu`, `lambda`; Mooney–Rivlin uses
/// `c1`, `c2` and `d1`, where `d1` multiplies `(J − 1)²` in the energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub kind: MaterialKind,
    pub mu: f64,
    pub lambda: f64,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    /// Reference (undeformed) density, kg/m³.
    pub rho0: f64,
}

impl MaterialSpec {
    pub fn neo_hookean(mu: f64, lambda: f64, rho0: f64, mixed: bool) -> Self {
        MaterialSpec {
            kind: if mixed {
                MaterialKind::NeoHookeanMixed
            } else {
                MaterialKind::NeoHookeanCompressible
            },
            mu,
            lambda,
            c1: 0.0,
            c2: 0.0,
            d1: 0.0,
            rho0,
        }
    }

    pub fn mooney_rivlin(c1: f64, c2: f64, d1: f64, rho0: f64, mixed: bool) -> Self {
        MaterialSpec {
            kind: if mixed {
                MaterialKind::MooneyRivlinMixed
            } else {
                MaterialKind::MooneyRivlinCompressible
            },
            mu: 0.0,
            lambda: 0.0,
            c1,
            c2,
            d1,
            rho0,
        }
    }

    /// Converts a compressibility parameter reported in the Abaqus convention
    /// (volumetric term `(J − 1)² / D`) into the `d1` coefficient used here.
    pub fn d1_from_abaqus(compressibility: f64) -> f64 {
        1.0 / compressibility
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(format!("{:?}: {m}", self.kind)));
        if !(self.rho0 > 0.0) {
            return bad("rho0 must be positive");
        }
        match self.kind {
            MaterialKind::NeoHookeanCompressible | MaterialKind::NeoHookeanMixed => {
                if !(self.mu > 0.0) {
                    return bad("mu must be positive");
                }
                if !(self.lambda >= 0.0) {
                    return bad("lambda must be non-negative");
                }
                if self.kind.is_mixed() && !(self.lambda > 0.0) {
                    return bad("the mixed form needs lambda > 0");
                }
            }
            MaterialKind::MooneyRivlinCompressible | MaterialKind::MooneyRivlinMixed => {
                if !(self.c1 + self.c2 > 0.0) || self.c1 < 0.0 || self.c2 < 0.0 {
                    return bad("c1, c2 must be non-negative with c1 + c2 > 0");
                }
                if !(self.d1 > 0.0) {
                    return bad("d1 must be positive");
                }
            }
        }
        Ok(())
    }

    /// Small-strain shear and bulk moduli `(G, K)`.
    pub fn small_strain_moduli(&self) -> (f64, f64) {
        match self.kind {
            MaterialKind::NeoHookeanCompressible | MaterialKind::NeoHookeanMixed => {
                (self.mu, self.lambda + 2.0 * self.mu / 3.0)
            }
            MaterialKind::MooneyRivlinCompressible | MaterialKind::MooneyRivlinMixed => {
                (2.0 * (self.c1 + self.c2), 2.0 * self.d1)
            }
        }
    }
}

/// Strain-energy density ψ(F, p). `p` must be given exactly for mixed kinds.
pub fn energy<S: Scalar>(spec: &MaterialSpec, f: &Mat3<S>, p: Option<S>) -> Result<S> {
    match (spec.kind.is_mixed(), p.is_some()) {
        (true, false) => return Err(Error::invalid("mixed material needs a pressure value")),
        (false, true) => return Err(Error::invalid("compressible material takes no pressure")),
        _ => {}
    }
    let j = f.det();
    let jv = j.value();
    if !(jv > 0.0) {
        return Err(Error::inversion(jv));
    }
    let b = f.matmul(&f.transpose());
    let i1 = b.trace();
    let psi = match spec.kind {
        MaterialKind::NeoHookeanCompressible | MaterialKind::NeoHookeanMixed => {
            if jv <= LOG_J_FLOOR {
                return Err(Error::inversion(jv));
            }
            let ln_j = j.ln();
            let iso = (i1 - 3.0) * (0.5 * spec.mu) - ln_j * spec.mu;
            match p {
                None => iso + ln_j * ln_j * (0.5 * spec.lambda),
                Some(p) => iso + p * ln_j - p * p * (0.5 / spec.lambda),
            }
        }
        MaterialKind::MooneyRivlinCompressible | MaterialKind::MooneyRivlinMixed => {
            let i2 = (i1 * i1 - b.matmul(&b).trace()) * 0.5;
            let iso = (j.powf(-2.0 / 3.0) * i1 - 3.0) * spec.c1 + (j.powf(-4.0 / 3.0) * i2 - 3.0) * spec.c2;
            let jm1 = j - 1.0;
            match p {
                None => iso + jm1 * jm1 * spec.d1,
                Some(p) => iso + p * jm1 - p * p * (0.25 / spec.d1),
            }
        }
    };
    Ok(psi)
}

pub fn energy_density(spec: &MaterialSpec, state: &DeformationState, p: Option<f64>) -> Result<f64> {
    energy(spec, &state.f, p)
}

fn seeded_dual(f: &Mat3) -> Mat3<Dual<9>> {
    Mat3::from_fn(|i, j| Dual::variable(f.0[i][j], 3 * i + j))
}

/// First Piola–Kirchhoff stress `P = ∂ψ/∂F` at fixed pressure.
pub fn first_pk_stress(spec: &MaterialSpec, state: &DeformationState, p: Option<f64>) -> Result<Mat3> {
    let psi = energy(spec, &seeded_dual(&state.f), p.map(Dual::constant))?;
    Ok(Mat3::from_fn(|i, j| psi.grad[3 * i + j]))
}

/// Second derivatives of ψ with respect to `(F, p)`; indices of `F` are row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialTangent {
    /// `∂P_ij / ∂F_kl` at `[3i+j][3k+l]`.
    pub stiffness: [[f64; 9]; 9],
    /// `∂²ψ / ∂F_ij ∂p`.
    pub pressure_coupling: [f64; 9],
    /// `∂²ψ / ∂p²`.
    pub pressure_pressure: f64,
    /// `∂ψ / ∂p`, the pointwise pressure equation.
    pub pressure_residual: f64,
}

fn seeded_hyper(g: &Mat3, p: Option<f64>) -> (Mat3<HyperDual<10>>, Option<HyperDual<10>>) {
    (
        Mat3::from_fn(|i, j| HyperDual::variable(g.0[i][j], 3 * i + j)),
        p.map(|p| HyperDual::variable(p, 9)),
    )
}

pub fn material_tangent(spec: &MaterialSpec, state: &DeformationState, p: Option<f64>) -> Result<MaterialTangent> {
    let (f, p) = seeded_hyper(&state.f, p);
    let psi = energy(spec, &f, p)?;
    Ok(MaterialTangent {
        stiffness: std::array::from_fn(|a| std::array::from_fn(|b| psi.hess[a][b])),
        pressure_coupling: std::array::from_fn(|a| psi.hess[a][9]),
        pressure_pressure: psi.hess[9][9],
        pressure_residual: psi.grad[9],
    })
}

type Derivatives = (f64, [f64; 9], f64, Option<[[f64; 10]; 10]>);

/// Energy, `∂ψ/∂G`, `∂ψ/∂p` and optionally the Hessian in `(G, p)`, with `G`
/// seeded in slots 0..9 and `p` in slot 9 when `N = 10`.
fn derivatives<const N: usize>(
    spec: &MaterialSpec,
    direction: Direction,
    g: &Mat3,
    p: Option<f64>,
    with_tangent: bool,
) -> Result<Derivatives> {
    let pad = |v: &[f64; N]| -> (f64, [f64; 9]) { (if N > 9 { v[9] } else { 0.0 }, std::array::from_fn(|a| v[a])) };
    if with_tangent {
        let gd: Mat3<HyperDual<N>> = Mat3::from_fn(|i, j| HyperDual::variable(g.0[i][j], 3 * i + j));
        let pd = p.map(|p| HyperDual::variable(p, 9));
        let fd = match direction {
            Direction::Forward => gd,
            Direction::Inverse => direction.deformation_gradient(&gd.sub(&Mat3::identity()))?,
        };
        let psi = energy(spec, &fd, pd)?;
        let (w_p, w_g) = pad(&psi.grad);
        let mut hess = [[0.0; 10]; 10];
        for a in 0..N {
            for b in 0..N {
                hess[a][b] = psi.hess[a][b];
            }
        }
        Ok((psi.value, w_g, w_p, Some(hess)))
    } else {
        let gd: Mat3<Dual<N>> = Mat3::from_fn(|i, j| Dual::variable(g.0[i][j], 3 * i + j));
        let pd = p.map(|p| Dual::variable(p, 9));
        let fd = match direction {
            Direction::Forward => gd,
            Direction::Inverse => direction.deformation_gradient(&gd.sub(&Mat3::identity()))?,
        };
        let psi = energy(spec, &fd, pd)?;
        let (w_p, w_g) = pad(&psi.grad);
        Ok((psi.value, w_g, w_p, None))
    }
}

/// Everything assembly needs at one quadrature point, expressed against the
/// displacement gradient `H` taken on the mesh.
///
/// The momentum integrand is `flux : ∇η` and the body-force integrand is
/// `density_factor · ρ₀ b · η`, both per unit mesh measure. Forward: flux = P,
/// density_factor = 1. Inverse: flux = σ, density_factor = det(I + H) = 1/J.
#[derive(Clone, Debug)]
pub struct PointResponse {
    pub energy: f64,
    pub flux: [f64; 9],
    pub density_factor: f64,
    pub pressure_residual: f64,
    pub tangent: Option<PointTangent>,
}

#[derive(Clone, Debug)]
pub struct PointTangent {
    /// `∂flux[a] / ∂H[b]`.
    pub flux_h: [[f64; 9]; 9],
    pub flux_p: [f64; 9],
    pub density_h: [f64; 9],
    pub pressure_h: [f64; 9],
    pub pressure_p: f64,
}

/// Evaluates the integrand data at displacement gradient `h` (and pressure).
///
/// In the inverse direction, with `G = I + H` and `F = G⁻¹`, the energy is
/// differentiated with respect to `G` through the matrix inverse; then
/// `σ = J⁻¹ P Fᵀ = −det(G) Gᵀ ∂ψ/∂G`, whose derivative follows from the
/// hyper-dual Hessian.
pub fn point_response(
    spec: &MaterialSpec,
    direction: Direction,
    h: &Mat3,
    p: Option<f64>,
    with_tangent: bool,
) -> Result<PointResponse> {
    let g = h.add(&Mat3::identity());
    let (energy_value, w_g, w_p, hess) = if p.is_some() {
        derivatives::<10>(spec, direction, &g, p, with_tangent)?
    } else {
        derivatives::<9>(spec, direction, &g, None, with_tangent)?
    };

    match direction {
        Direction::Forward => {
            let tangent = hess.map(|hs| PointTangent {
                flux_h: std::array::from_fn(|a| std::array::from_fn(|b| hs[a][b])),
                flux_p: std::array::from_fn(|a| hs[a][9]),
                density_h: [0.0; 9],
                pressure_h: std::array::from_fn(|b| hs[9][b]),
                pressure_p: hs[9][9],
            });
            Ok(PointResponse {
                energy: energy_value,
                flux: w_g,
                density_factor: 1.0,
                pressure_residual: w_p,
                tangent,
            })
        }
        Direction::Inverse => {
            let det_g = g.det();
            let g_inv_t = g.inverse().ok_or_else(|| Error::inversion(det_g))?.transpose();
            // S = Gᵀ W_G
            let s: [f64; 9] = std::array::from_fn(|a| {
                let (i, j) = (a / 3, a % 3);
                (0..3).map(|m| g.0[m][i] * w_g[3 * m + j]).sum()
            });
            let flux: [f64; 9] = std::array::from_fn(|a| -det_g * s[a]);
            let tangent = hess.map(|hs| {
                let mut flux_h = [[0.0; 9]; 9];
                let mut flux_p = [0.0; 9];
                for a in 0..9 {
                    let (i, j) = (a / 3, a % 3);
                    for b in 0..9 {
                        let (k, l) = (b / 3, b % 3);
                        let mut d = g_inv_t.0[k][l] * s[a];
                        if i == l {
                            d += w_g[3 * k + j];
                        }
                        d += (0..3).map(|m| g.0[m][i] * hs[3 * m + j][b]).sum::<f64>();
                        flux_h[a][b] = -det_g * d;
                    }
                    flux_p[a] = -det_g * (0..3).map(|m| g.0[m][i] * hs[3 * m + j][9]).sum::<f64>();
                }
                PointTangent {
                    flux_h,
                    flux_p,
                    density_h: std::array::from_fn(|b| det_g * g_inv_t.0[b / 3][b % 3]),
                    pressure_h: std::array::from_fn(|b| hs[9][b]),
                    pressure_p: hs[9][9],
                }
            });
            Ok(PointResponse {
                energy: energy_value,
                flux,
                density_factor: det_g,
                pressure_residual: w_p,
                tangent,
            })
        }
    }
}
