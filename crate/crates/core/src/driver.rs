//! Forward, one-shot inverse and iterative geometric solves.

use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::assembly::{DirichletBC, Formulation, ProblemDefinition};
use crate::expr::Expr;
use crate::kinematics::Direction;
use crate::linalg::{norm3, sub3, Vec3};
use crate::materials::MaterialSpec;
use crate::mesh::{Mesh, NodalField};
use crate::solver::{continuation_solve, ConvergenceRecord, SolverSettings};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct AnalysisResult {
    pub direction: Direction,
    pub input_mesh: Mesh,
    /// `u` (forward) or `u'` (inverse) on the input mesh.
    pub displacement: NodalField,
    pub pressure: Option<NodalField>,
    /// Input vertices moved by the displacement: the deformed shape for a
    /// forward solve, the recovered rest shape for an inverse solve.
    pub updated_mesh: Mesh,
    pub record: ConvergenceRecord,
    pub solution: Vec<f64>,
}

impl AnalysisResult {
    pub fn vertex_displacements(&self) -> Vec<Vec3> {
        self.displacement.vertex_vectors(self.input_mesh.num_vertices())
    }

    /// Largest vertex displacement magnitude.
    pub fn max_displacement(&self) -> f64 {
        self.vertex_displacements().iter().map(norm3).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalError {
    /// ℓ² norm of the stacked vertex differences.
    pub l2: f64,
    /// Largest single vertex distance.
    pub max: f64,
}

pub fn nodal_error(a: &Mesh, b: &Mesh) -> Result<NodalError> {
    nodal_error_points(&a.vertices, &b.vertices)
}

pub fn nodal_error_points(a: &[Vec3], b: &[Vec3]) -> Result<NodalError> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("vertex counts differ: {} vs {}", a.len(), b.len())));
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (p, q) in a.iter().zip(b) {
        let d = norm3(&sub3(p, q));
        sum += d * d;
        max = max.max(d);
    }
    Ok(NodalError { l2: sum.sqrt(), max })
}

fn run(prob: &ProblemDefinition, settings: &SolverSettings, expect: Direction) -> Result<AnalysisResult> {
    if prob.direction != expect {
        return Err(Error::invalid(format!("expected a {expect:?} problem, got {:?}", prob.direction)));
    }
    let (x, record) = continuation_solve(prob, settings)?;
    let (u, p) = prob.split_solution(&x);
    let updated_mesh = prob.mesh.displaced(&prob.vertex_displacements(&x))?;
    Ok(AnalysisResult {
        direction: prob.direction,
        input_mesh: prob.mesh.clone(),
        displacement: u,
        pressure: p,
        updated_mesh,
        record,
        solution: x,
    })
}

/// Solves on the reference geometry; `updated_mesh` is the deformed shape.
pub fn solve_forward(prob: &ProblemDefinition, settings: &SolverSettings) -> Result<AnalysisResult> {
    run(prob, settings, Direction::Forward)
}

/// Solves on the deformed geometry; `updated_mesh` is the recovered rest shape.
pub fn solve_inverse(prob: &ProblemDefinition, settings: &SolverSettings) -> Result<AnalysisResult> {
    run(prob, settings, Direction::Inverse)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IGASettings {
    /// Stop when the nodal ℓ² mismatch to the target falls to this value.
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for IGASettings {
    fn default() -> Self {
        IGASettings {
            epsilon: 1e-6,
            max_iterations: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IgaResult {
    /// The last forward solve; its `input_mesh` is the final rest-shape estimate.
    pub last: AnalysisResult,
    /// Final rest-shape estimate `X^j`.
    pub reference: Mesh,
    /// Nodal ℓ² mismatch `‖x^j − X^ini‖` after each forward solve.
    pub history: Vec<f64>,
    pub converged: bool,
    pub total_newton_iterations: usize,
    pub wall_time_s: f64,
}

impl IgaResult {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn final_error(&self) -> f64 {
        *self.history.last().expect("at least one iteration")
    }
}

/// Fixed-point geometry iteration: forward-solve from the current estimate,
/// then shift it by the mismatch between the computed deformed shape and the
/// target (the problem's mesh). `prob` must be a forward problem.
pub fn iga_solve(prob: &ProblemDefinition, settings: &SolverSettings, iga: &IGASettings) -> Result<IgaResult> {
    if prob.direction != Direction::Forward {
        return Err(Error::invalid("the iterative geometric algorithm runs forward problems"));
    }
    if !(iga.epsilon > 0.0) || iga.max_iterations == 0 {
        return Err(Error::invalid("IGA needs epsilon > 0 and max_iterations >= 1"));
    }
    let t0 = Instant::now();
    let target = prob.mesh.vertices.clone();
    let mut reference = prob.mesh.clone();
    let mut history = Vec::new();
    let mut newton = 0;
    loop {
        let j = history.len();
        let fail = |e: Error, history: &Vec<f64>| Error::Iga {
            iteration: j,
            history: history.clone(),
            source: Box::new(e),
        };
        let step = if j == 0 {
            prob.clone()
        } else {
            prob.with_mesh(reference.clone()).map_err(|e| fail(e, &history))?
        };
        let result = solve_forward(&step, settings).map_err(|e| fail(e, &history))?;
        newton += result.record.total_iterations;
        let deformed = &result.updated_mesh.vertices;
        let err = nodal_error_points(deformed, &target)?.l2;
        history.push(err);
        info!("IGA iteration {j}: mismatch {err:e}");
        let done = err <= iga.epsilon;
        if done || history.len() >= iga.max_iterations {
            return Ok(IgaResult {
                last: result,
                reference,
                history,
                converged: done,
                total_newton_iterations: newton,
                wall_time_s: t0.elapsed().as_secs_f64(),
            });
        }
        let next: Vec<Vec3> = reference
            .vertices
            .iter()
            .zip(deformed)
            .zip(&target)
            .map(|((x_ref, x_def), x_tgt)| std::array::from_fn(|k| x_ref[k] - (x_def[k] - x_tgt[k])))
            .collect();
        reference = reference.with_vertices(next).map_err(|e| fail(e, &history))?;
    }
}

/// Silicone beam constants: Mooney–Rivlin with the volumetric coefficient
/// taken as the reciprocal of the reported compressibility.
pub const BEAM_C1: f64 = 101_709.668;
pub const BEAM_C2: f64 = 151_065.460;
pub const BEAM_COMPRESSIBILITY: f64 = 7.965_272_689e-8;
pub const BEAM_RHO0: f64 = 965.0;
pub const BEAM_LENGTH: f64 = 0.182;
pub const BEAM_DIAMETER: f64 = 0.0085;
pub const GRAVITY: f64 = 9.81;
/// Tip deflection reported for the reference forward simulation, metres.
pub const BEAM_REFERENCE_DEFLECTION: f64 = 0.13252;

pub fn beam_material(mixed: bool) -> MaterialSpec {
    MaterialSpec::mooney_rivlin(
        BEAM_C1,
        BEAM_C2,
        MaterialSpec::d1_from_abaqus(BEAM_COMPRESSIBILITY),
        BEAM_RHO0,
        mixed,
    )
}

/// Cantilever under gravity along −y, clamped on facet tag 1 (the `x = 0` end
/// of [`crate::mesh::generate_cylinder_mesh`]), mixed P2/P1.
pub fn beam_problem(mesh: Mesh, direction: Direction) -> Result<ProblemDefinition> {
    ProblemDefinition::new(mesh, direction, Formulation::MixedUP, 2, beam_material(true))?
        .with_dirichlet(DirichletBC::clamped(1))
        .map(|p| p.with_body_force([Expr::zero(), Expr::constant(-GRAVITY), Expr::zero()]))
}
