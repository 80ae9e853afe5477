//! Shear verification suites: forward FE solutions against the closed forms in
//! [`crate::oracles`], and inverse solves that must recover the unit cube.

use serde::{Deserialize, Serialize};

use crate::assembly::{DirichletBC, Formulation, ProblemDefinition, QuadratureSample};
use crate::driver::{
    beam_problem, nodal_error, solve_forward, solve_inverse, AnalysisResult, NodalError, BEAM_DIAMETER, BEAM_LENGTH,
    BEAM_REFERENCE_DEFLECTION,
};
use crate::kinematics::Direction;
use crate::linalg::Mat3;
use crate::materials::MaterialSpec;
use crate::mesh::{generate_box_mesh, generate_cylinder_mesh, Mesh};
use crate::oracles::{field_relative_error, oracle_cauchy, oracle_energy, oracle_energy_at, ShearKind, ShearOracle};
use crate::solver::SolverSettings;
use crate::Result;

/// Volumetric stiffness of the shear materials relative to `C1 + C2`.
pub const SHEAR_BULK_RATIO: f64 = 1000.0;

const STRESS_COMPONENTS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearCase {
    pub kind: ShearKind,
    pub k: f64,
    pub c1: f64,
    pub c2: f64,
    pub divisions: usize,
    pub formulation: Formulation,
    /// Displacement degree.
    pub degree: usize,
    /// `D1 / (C1 + C2)`.
    pub bulk_ratio: f64,
}

impl ShearCase {
    pub fn oracle(&self) -> ShearOracle {
        ShearOracle::new(self.kind, self.k, self.c1, self.c2)
    }

    pub fn material(&self) -> MaterialSpec {
        let d1 = self.bulk_ratio * (self.c1 + self.c2);
        MaterialSpec::mooney_rivlin(self.c1, self.c2, d1, 1.0, self.formulation == Formulation::MixedUP)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearCaseResult {
    pub case: ShearCase,
    /// Relative L² error of the energy density against the pointwise closed form.
    pub energy_error: f64,
    /// Relative L² error of the six Cauchy components against the pointwise
    /// closed form (deviatoric part only for generalized shear).
    pub stress_error: f64,
    /// Relative error of the domain-averaged energy density.
    pub mean_energy_error: f64,
    /// Relative error (Frobenius) of the domain-averaged Cauchy stress.
    pub mean_stress_error: f64,
    pub newton_iterations: usize,
}

fn cube(divisions: usize) -> Result<Mesh> {
    generate_box_mesh([1.0, 1.0, 1.0], [divisions; 3])
}

/// Shear problem with the displacement prescribed on all six faces.
pub fn shear_problem(mesh: Mesh, case: &ShearCase, direction: Direction) -> Result<ProblemDefinition> {
    let sign = if direction == Direction::Forward { 1.0 } else { -1.0 };
    let exprs = case.oracle().displacement_exprs(sign);
    let mut prob = ProblemDefinition::new(mesh, direction, case.formulation, case.degree, case.material())?;
    for tag in 1..=6 {
        prob = prob.with_dirichlet(DirichletBC::new(tag, "xyz", [&exprs[0], &exprs[1], &exprs[2]])?)?;
    }
    Ok(prob)
}

fn deviator(s: &Mat3) -> Mat3 {
    let m = s.trace() / 3.0;
    s.sub(&Mat3::identity().scale(m))
}

/// Compares quadrature-point samples with the closed forms.
pub fn compare_with_oracle(case: &ShearCase, samples: &[QuadratureSample]) -> Result<[f64; 4]> {
    let o = case.oracle();
    let weights: Vec<f64> = samples.iter().map(|s| s.weight).collect();
    let fe_e: Vec<f64> = samples.iter().map(|s| s.energy).collect();
    let or_e: Vec<f64> = samples.iter().map(|s| oracle_energy_at(&o, s.point[1])).collect();
    // The generalized field is balanced by a pressure that varies along x, which
    // the closed form leaves out; compare its traceless part pointwise.
    let fe_stress = |s: &QuadratureSample| match case.kind {
        ShearKind::Simple => s.cauchy,
        ShearKind::Generalized => deviator(&s.cauchy),
    };
    let mut fe_s = Vec::with_capacity(6 * samples.len());
    let mut or_s = Vec::with_capacity(6 * samples.len());
    for s in samples {
        let a = fe_stress(s);
        let b = oracle_cauchy(&o, Some(s.point[1]));
        for (i, j) in STRESS_COMPONENTS {
            fe_s.push(a.0[i][j]);
            or_s.push(b.0[i][j]);
        }
    }
    let energy_error = field_relative_error(&fe_e, &or_e, &weights, 1)?.value;
    let stress_error = field_relative_error(&fe_s, &or_s, &weights, 6)?.value;

    let volume: f64 = weights.iter().sum();
    let mean_e = samples.iter().map(|s| s.weight * s.energy).sum::<f64>() / volume;
    let mut mean_s = Mat3::zeros();
    for s in samples {
        mean_s = mean_s.add(&s.cauchy.scale(s.weight / volume));
    }
    let ref_e = oracle_energy(&o);
    let ref_s = oracle_cauchy(&o, None);
    let rel = |d: f64, r: f64| if r == 0.0 { d } else { d / r };
    Ok([
        energy_error,
        stress_error,
        rel((mean_e - ref_e).abs(), ref_e.abs()),
        rel(mean_s.sub(&ref_s).norm(), ref_s.norm()),
    ])
}

/// Forward shear of the unit cube compared with the closed forms.
pub fn run_shear_case(case: &ShearCase, settings: &SolverSettings) -> Result<ShearCaseResult> {
    let prob = shear_problem(cube(case.divisions)?, case, Direction::Forward)?;
    let res = solve_forward(&prob, settings)?;
    let samples = prob.quadrature_samples(&res.solution)?;
    let [energy_error, stress_error, mean_energy_error, mean_stress_error] = compare_with_oracle(case, &samples)?;
    Ok(ShearCaseResult {
        case: *case,
        energy_error,
        stress_error,
        mean_energy_error,
        mean_stress_error,
        newton_iterations: res.record.total_iterations,
    })
}

pub const SIMPLE_SHEAR_K: [f64; 3] = [0.1, 0.5, 1.0];
pub const SHEAR_CONSTANTS: [(f64, f64); 3] = [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)];

/// Every `k` × `(C1, C2)` × {1, 2} divisions combination, compressible P2.
pub fn simple_shear_suite(settings: &SolverSettings) -> Result<Vec<ShearCaseResult>> {
    let mut out = Vec::new();
    for divisions in [1, 2] {
        for &(c1, c2) in &SHEAR_CONSTANTS {
            for &k in &SIMPLE_SHEAR_K {
                let case = ShearCase {
                    kind: ShearKind::Simple,
                    k,
                    c1,
                    c2,
                    divisions,
                    formulation: Formulation::DisplacementOnly,
                    degree: 2,
                    bulk_ratio: SHEAR_BULK_RATIO,
                };
                out.push(run_shear_case(&case, settings)?);
            }
        }
    }
    Ok(out)
}

/// `template` solved on each of the given cube subdivisions.
pub fn refinement_study(template: &ShearCase, divisions: &[usize], settings: &SolverSettings) -> Result<Vec<ShearCaseResult>> {
    divisions
        .iter()
        .map(|&divisions| run_shear_case(&ShearCase { divisions, ..*template }, settings))
        .collect()
}

/// Default generalized-shear refinement case: `k = 0.5`, `C1 = C2 = 1`.
pub fn generalized_template(formulation: Formulation, degree: usize, bulk_ratio: f64) -> ShearCase {
    ShearCase {
        kind: ShearKind::Generalized,
        k: 0.5,
        c1: 1.0,
        c2: 1.0,
        divisions: 1,
        formulation,
        degree,
        bulk_ratio,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseShearResult {
    pub case: ShearCase,
    /// Nodal ℓ² distance between the recovered rest shape and the unit cube mesh.
    pub nodal_error: f64,
    pub newton_iterations: usize,
}

/// Inverse shear: the deformed cube is given, its rest shape is recovered.
///
/// Simple shear starts from the exactly sheared cube. For generalized shear a
/// forward solve on the cube produces the deformed mesh; with P1 elements the
/// inverse solve on it reproduces the cube exactly.
pub fn run_inverse_shear(case: &ShearCase, settings: &SolverSettings) -> Result<InverseShearResult> {
    let reference = cube(case.divisions)?;
    let o = case.oracle();
    let (deformed, degree) = match case.kind {
        ShearKind::Simple => {
            let moved = reference.vertices.iter().map(|p| {
                let u = o.displacement(p);
                std::array::from_fn(|i| p[i] + u[i])
            });
            (reference.with_vertices(moved.collect())?, 2)
        }
        ShearKind::Generalized => {
            let fwd_case = ShearCase {
                formulation: Formulation::DisplacementOnly,
                degree: 1,
                ..*case
            };
            let mut fwd = ProblemDefinition::new(
                reference.clone(),
                Direction::Forward,
                Formulation::DisplacementOnly,
                1,
                fwd_case.material(),
            )?;
            fwd.dirichlet = shear_problem(reference.clone(), &fwd_case, Direction::Forward)?.dirichlet;
            (solve_forward(&fwd, settings)?.updated_mesh, 1)
        }
    };
    let inv_case = ShearCase {
        formulation: Formulation::DisplacementOnly,
        degree,
        ..*case
    };
    let mut prob = ProblemDefinition::new(
        deformed.clone(),
        Direction::Inverse,
        Formulation::DisplacementOnly,
        degree,
        inv_case.material(),
    )?;
    prob.dirichlet = shear_problem(deformed, &inv_case, Direction::Inverse)?.dirichlet;
    let res = solve_inverse(&prob, settings)?;
    Ok(InverseShearResult {
        case: inv_case,
        nodal_error: nodal_error(&res.updated_mesh, &reference)?.l2,
        newton_iterations: res.record.total_iterations,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShearReport {
    pub simple: Vec<ShearCaseResult>,
    pub generalized: Vec<ShearCaseResult>,
    pub inverse: Vec<InverseShearResult>,
}

impl ShearReport {
    pub fn max_simple_error(&self) -> f64 {
        self.simple
            .iter()
            .flat_map(|r| [r.energy_error, r.stress_error])
            .fold(0.0, f64::max)
    }

    /// Domain-averaged errors shrink with every refinement.
    pub fn generalized_monotone(&self) -> bool {
        self.generalized.windows(2).all(|w| {
            w[1].mean_energy_error < w[0].mean_energy_error && w[1].mean_stress_error < w[0].mean_stress_error
        })
    }

    /// Larger of the two averaged errors on the finest generalized mesh.
    pub fn generalized_finest_error(&self) -> Option<f64> {
        self.generalized
            .last()
            .map(|r| r.mean_energy_error.max(r.mean_stress_error))
    }
}

pub const GENERALIZED_DIVISIONS: [usize; 4] = [1, 2, 4, 8];

/// All shear suites with the default parameters.
pub fn shear_report(settings: &SolverSettings, generalized_divisions: &[usize]) -> Result<ShearReport> {
    let simple = simple_shear_suite(settings)?;
    let template = generalized_template(Formulation::DisplacementOnly, 1, SHEAR_BULK_RATIO);
    let generalized = refinement_study(&template, generalized_divisions, settings)?;
    let mut inverse = Vec::new();
    for kind in [ShearKind::Simple, ShearKind::Generalized] {
        for divisions in [1, 2, 4] {
            let case = ShearCase {
                kind,
                k: 0.5,
                c1: 1.0,
                c2: 1.0,
                divisions,
                formulation: Formulation::DisplacementOnly,
                degree: 2,
                bulk_ratio: SHEAR_BULK_RATIO,
            };
            inverse.push(run_inverse_shear(&case, settings)?);
        }
    }
    Ok(ShearReport {
        simple,
        generalized,
        inverse,
    })
}

/// Cylinder subdivisions `(axial, radial)` of the beam refinement study.
pub const BEAM_REFINEMENTS: [(usize, usize); 3] = [(12, 1), (24, 2), (36, 3)];
/// Mesh used for the beam forward/inverse round trip.
pub const BEAM_ROUND_TRIP_MESH: (usize, usize) = (24, 2);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamResult {
    pub axial: usize,
    pub radial: usize,
    pub dofs: usize,
    /// Largest vertex displacement, metres.
    pub tip_deflection: f64,
    pub newton_iterations: usize,
    pub wall_time_s: f64,
}

pub fn beam_forward(axial: usize, radial: usize, settings: &SolverSettings) -> Result<(BeamResult, AnalysisResult)> {
    let mesh = generate_cylinder_mesh(BEAM_LENGTH, BEAM_DIAMETER, axial, radial)?;
    let prob = beam_problem(mesh, Direction::Forward)?;
    let res = solve_forward(&prob, settings)?;
    let summary = BeamResult {
        axial,
        radial,
        dofs: prob.num_dofs(),
        tip_deflection: res.max_displacement(),
        newton_iterations: res.record.total_iterations,
        wall_time_s: res.record.wall_time_s,
    };
    Ok((summary, res))
}

pub fn beam_refinement(refinements: &[(usize, usize)], settings: &SolverSettings) -> Result<Vec<BeamResult>> {
    refinements
        .iter()
        .map(|&(a, r)| beam_forward(a, r, settings).map(|(s, _)| s))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamRoundTrip {
    pub forward: BeamResult,
    pub inverse_newton_iterations: usize,
    /// Recovered rest shape against the generator mesh.
    pub error: NodalError,
    /// Root-mean-square vertex distance.
    pub rms: f64,
    /// `error.l2` (stacked over all vertices) as a fraction of the beam length.
    pub relative_l2: f64,
    /// Largest vertex distance as a fraction of the beam length.
    pub relative_max: f64,
    pub wall_time_s: f64,
}

/// Deforms the straight beam forward, then recovers it with one inverse solve
/// on the deformed mesh.
pub fn beam_round_trip(axial: usize, radial: usize, settings: &SolverSettings) -> Result<BeamRoundTrip> {
    let (forward, fwd) = beam_forward(axial, radial, settings)?;
    let inv = solve_inverse(&beam_problem(fwd.updated_mesh.clone(), Direction::Inverse)?, settings)?;
    let error = nodal_error(&inv.updated_mesh, &fwd.input_mesh)?;
    Ok(BeamRoundTrip {
        wall_time_s: forward.wall_time_s + inv.record.wall_time_s,
        forward,
        inverse_newton_iterations: inv.record.total_iterations,
        rms: error.l2 / (fwd.input_mesh.num_vertices() as f64).sqrt(),
        relative_l2: error.l2 / BEAM_LENGTH,
        relative_max: error.max / BEAM_LENGTH,
        error,
    })
}

/// Largest admissible simple-shear relative error.
pub const SIMPLE_SHEAR_TOL: f64 = 1e-10;
/// Admissible averaged generalized-shear error on the finest mesh.
pub const GENERALIZED_SHEAR_TOL: f64 = 0.02;
/// Admissible nodal ℓ² error of inverse shear recovery.
pub const INVERSE_SHEAR_TOL: f64 = 1e-9;
/// Admissible relative deviation of the finest tip deflection from the reference.
pub const BEAM_TIP_TOL: f64 = 0.05;
/// Admissible round-trip vertex distance as a fraction of the beam length.
pub const BEAM_ROUND_TRIP_TOL: f64 = 0.005;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShearOptions {
    pub generalized_divisions: Vec<usize>,
    pub solver: SolverSettings,
}

impl Default for ShearOptions {
    fn default() -> Self {
        ShearOptions {
            generalized_divisions: GENERALIZED_DIVISIONS.to_vec(),
            solver: SolverSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearSummary {
    pub max_simple_error: f64,
    pub generalized_monotone: bool,
    pub generalized_finest_error: f64,
    pub max_inverse_error: f64,
    pub passed: bool,
}

impl ShearReport {
    pub fn summary(&self) -> ShearSummary {
        let max_simple_error = self.max_simple_error();
        let generalized_finest_error = self.generalized_finest_error().unwrap_or(f64::NAN);
        let max_inverse_error = self.inverse.iter().map(|r| r.nodal_error).fold(0.0, f64::max);
        let generalized_monotone = self.generalized_monotone();
        ShearSummary {
            passed: max_simple_error <= SIMPLE_SHEAR_TOL
                && generalized_monotone
                && generalized_finest_error < GENERALIZED_SHEAR_TOL
                && max_inverse_error <= INVERSE_SHEAR_TOL,
            max_simple_error,
            generalized_monotone,
            generalized_finest_error,
            max_inverse_error,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamOptions {
    pub refinements: Vec<(usize, usize)>,
    /// `None` skips the round trip.
    pub round_trip: Option<(usize, usize)>,
    pub solver: SolverSettings,
}

impl Default for BeamOptions {
    fn default() -> Self {
        BeamOptions {
            refinements: BEAM_REFINEMENTS.to_vec(),
            round_trip: Some(BEAM_ROUND_TRIP_MESH),
            solver: SolverSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamReport {
    pub refinement: Vec<BeamResult>,
    pub round_trip: Option<BeamRoundTrip>,
    pub reference_deflection: f64,
    /// `|tip − reference| / reference` on the finest mesh.
    pub finest_relative_error: f64,
    /// Tip deflections move in one direction under refinement with shrinking increments.
    pub monotone: bool,
    pub passed: bool,
}

/// Tip deflections change in one direction with shrinking steps.
pub fn monotone_convergence(values: &[f64]) -> bool {
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    d.windows(2).all(|w| w[0] * w[1] > 0.0 && w[1].abs() < w[0].abs())
        && (d.len() != 1 || d[0] != 0.0)
}

pub fn beam_report(opts: &BeamOptions) -> Result<BeamReport> {
    let refinement = beam_refinement(&opts.refinements, &opts.solver)?;
    let round_trip = opts
        .round_trip
        .map(|(a, r)| beam_round_trip(a, r, &opts.solver))
        .transpose()?;
    let tips: Vec<f64> = refinement.iter().map(|r| r.tip_deflection).collect();
    let finest_relative_error = tips
        .last()
        .map_or(f64::NAN, |t| (t - BEAM_REFERENCE_DEFLECTION).abs() / BEAM_REFERENCE_DEFLECTION);
    let monotone = monotone_convergence(&tips);
    let trip_ok = round_trip
        .as_ref()
        .map_or(true, |t| t.error.max <= BEAM_ROUND_TRIP_TOL * BEAM_LENGTH);
    Ok(BeamReport {
        passed: monotone && finest_relative_error <= BEAM_TIP_TOL && trip_ok,
        refinement,
        round_trip,
        reference_deflection: BEAM_REFERENCE_DEFLECTION,
        finest_relative_error,
        monotone,
    })
}
