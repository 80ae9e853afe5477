//! JSON run configuration, dotted-path overrides and run reports.
//!
//! Every schema struct rejects unknown keys. Parse and validation failures come
//! back as [`Error::Config`] carrying the path of the offending key, e.g.
//! `material.constants.mu` or `dirichlet[0].components`.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assembly::{parse_components, DirichletBC, Formulation, ProblemDefinition, Traction};
use crate::driver::{AnalysisResult, IGASettings, IgaResult};
use crate::expr::Expr;
use crate::kinematics::Direction;
use crate::materials::{MaterialKind, MaterialSpec};
use crate::mesh::{generate_box_mesh, generate_cylinder_mesh, generate_unit_tetrahedron, read_gmsh, Mesh};
use crate::solver::{ConvergenceRecord, SolverSettings};
use crate::{Error, Result};

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunDirection {
    Forward,
    Inverse,
    Iga,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshConfig {
    Box(BoxParams),
    Cylinder(CylinderParams),
    UnitTet(UnitTetParams),
    Gmsh(GmshParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxParams {
    pub extents: [f64; 3],
    pub divisions: [usize; 3],
}

impl Default for BoxParams {
    fn default() -> Self {
        BoxParams {
            extents: [1.0; 3],
            divisions: [1; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderParams {
    pub length: f64,
    pub diameter: f64,
    pub axial_divisions: usize,
    pub radial_layers: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitTetParams {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmshParams {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
}

/// Material constants; which ones are required depends on the kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    /// Coefficient of `(J − 1)²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    /// Abaqus-style compressibility `D`; `d1 = 1 / D`. Exclusive with `d1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressibility: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub kind: MaterialKind,
    pub constants: Constants,
    pub rho0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletConfig {
    pub tag: i32,
    /// Subset of `"xyz"`.
    pub components: String,
    pub exprs: [Expr; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionConfig {
    pub tag: i32,
    pub exprs: [Expr; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Absolute Newton tolerance on the ℓ² residual norm.
    pub tol: f64,
    pub max_iter: usize,
    pub continuation_steps: usize,
    pub relative_tol: f64,
    pub max_bisections: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        SolverConfig {
            tol: s.newton_tolerance,
            max_iter: s.max_newton_iterations,
            continuation_steps: s.continuation_steps,
            relative_tol: s.relative_tolerance,
            max_bisections: s.max_step_bisections,
        }
    }
}

impl SolverConfig {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            newton_tolerance: self.tol,
            relative_tolerance: self.relative_tol,
            max_newton_iterations: self.max_iter,
            continuation_steps: self.continuation_steps,
            max_step_bisections: self.max_bisections,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// `None` skips VTK output.
    pub vtk_path: Option<PathBuf>,
    pub report_path: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            vtk_path: Some("solution.vtk".into()),
            report_path: "report.json".into(),
        }
    }
}

fn default_body_force() -> [Expr; 3] {
    [Expr::zero(), Expr::zero(), Expr::zero()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub direction: RunDirection,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
    /// Displacement degree; defaults to 2. Mixed runs require 2.
    #[serde(default = "default_degree")]
    pub degree: usize,
    pub material: MaterialConfig,
    #[serde(default)]
    pub dirichlet: Vec<DirichletConfig>,
    #[serde(default)]
    pub tractions: Vec<TractionConfig>,
    #[serde(default = "default_body_force")]
    pub body_force: [Expr; 3],
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub iga: IGASettings,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_formulation() -> Formulation {
    Formulation::DisplacementOnly
}

fn default_degree() -> usize {
    2
}

/// Deserializes `value`, reporting the path of the first offending key.
pub fn from_value<T: DeserializeOwned>(value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

/// Parses JSON text into a [`Value`], mapping syntax errors to [`Error::Config`].
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| config_err("", format!("line {} column {}: {e}", e.line(), e.column())))
}

/// Applies one `key.path=value` override. The value is read as JSON when it
/// parses, otherwise as a bare string. Numeric segments index arrays; missing
/// object keys are created (and then rejected by the schema if unknown).
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(assignment, "override must look like key.path=value"))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(config_err(path, "empty segment in override path"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let mut walked = String::new();
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        if !walked.is_empty() {
            walked.push('.');
        }
        walked.push_str(seg);
        let last = i + 1 == segments.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| config_err(&walked, "array segment must be an index"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| config_err(&walked, format!("index out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(config_err(&walked, "cannot descend into a scalar")),
        };
    }
    unreachable!("loop returns on the last segment")
}

/// Reads a JSON file and applies the overrides in order.
pub fn load_value(path: &Path, overrides: &[String]) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    let mut value = parse_json(&text)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    Ok(value)
}

impl RunConfig {
    /// Parses and validates; relative mesh paths resolve against `base_dir`.
    pub fn from_value(mut value: Value, base_dir: &Path) -> Result<Self> {
        // generators whose parameters all have defaults may omit `params`
        if let Some(mesh) = value.get_mut("mesh").and_then(Value::as_object_mut) {
            mesh.entry("params").or_insert_with(|| Value::Object(Default::default()));
        }
        let mut cfg: RunConfig = from_value(value)?;
        if let MeshConfig::Gmsh(g) = &mut cfg.mesh {
            if g.path.is_relative() {
                g.path = base_dir.join(&g.path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_value(load_value(path, overrides)?, base)
    }

    fn validate(&self) -> Result<()> {
        if self.degree != 1 && self.degree != 2 {
            return Err(config_err("degree", "must be 1 or 2"));
        }
        let mixed = self.formulation == Formulation::MixedUP;
        if mixed && self.degree != 2 {
            return Err(config_err("degree", "the mixed formulation uses P2 displacement"));
        }
        if mixed != self.material.kind.is_mixed() {
            return Err(config_err(
                "material.kind",
                format!("{:?} does not match formulation {:?}", self.material.kind, self.formulation),
            ));
        }
        self.material()?;
        for (i, d) in self.dirichlet.iter().enumerate() {
            parse_components(&d.components).map_err(|e| config_err(format!("dirichlet[{i}].components"), e.to_string()))?;
        }
        self.solver
            .settings()
            .validate()
            .map_err(|e| config_err("solver", e.to_string()))?;
        if !(self.iga.epsilon > 0.0) || self.iga.max_iterations == 0 {
            return Err(config_err("iga", "epsilon must be positive and max_iterations at least 1"));
        }
        Ok(())
    }

    pub fn material(&self) -> Result<MaterialSpec> {
        let m = &self.material;
        let c = &m.constants;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| config_err(format!("material.constants.{name}"), format!("required for {:?}", m.kind)))
        };
        let forbid = |v: Option<f64>, name: &str| match v {
            Some(_) => Err(config_err(format!("material.constants.{name}"), format!("not used by {:?}", m.kind))),
            None => Ok(()),
        };
        let mixed = m.kind.is_mixed();
        let spec = match m.kind {
            MaterialKind::NeoHookeanCompressible | MaterialKind::NeoHookeanMixed => {
                for (v, n) in [(c.c1, "c1"), (c.c2, "c2"), (c.d1, "d1"), (c.compressibility, "compressibility")] {
                    forbid(v, n)?;
                }
                MaterialSpec::neo_hookean(need(c.mu, "mu")?, need(c.lambda, "lambda")?, m.rho0, mixed)
            }
            MaterialKind::MooneyRivlinCompressible | MaterialKind::MooneyRivlinMixed => {
                forbid(c.mu, "mu")?;
                forbid(c.lambda, "lambda")?;
                let d1 = match (c.d1, c.compressibility) {
                    (Some(d), None) => d,
                    (None, Some(dc)) => MaterialSpec::d1_from_abaqus(dc),
                    (Some(_), Some(_)) => {
                        return Err(config_err("material.constants", "give either d1 or compressibility, not both"))
                    }
                    (None, None) => return Err(config_err("material.constants.d1", format!("required for {:?}", m.kind))),
                };
                MaterialSpec::mooney_rivlin(need(c.c1, "c1")?, need(c.c2, "c2")?, d1, m.rho0, mixed)
            }
        };
        spec.validate().map_err(|e| config_err("material", e.to_string()))?;
        Ok(spec)
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let wrap = |e: Error| match e {
            Error::InvalidArgument(m) => config_err("mesh.params", m),
            other => other,
        };
        match &self.mesh {
            MeshConfig::Box(p) => generate_box_mesh(p.extents, p.divisions).map_err(wrap),
            MeshConfig::Cylinder(p) => {
                generate_cylinder_mesh(p.length, p.diameter, p.axial_divisions, p.radial_layers).map_err(wrap)
            }
            MeshConfig::UnitTet(_) => Ok(generate_unit_tetrahedron()),
            MeshConfig::Gmsh(p) => Ok(read_gmsh(&p.path)?.mesh),
        }
    }

    /// Problem on `mesh`. IGA runs are forward problems whose mesh is the target.
    pub fn build_problem(&self, mesh: Mesh) -> Result<ProblemDefinition> {
        let direction = match self.direction {
            RunDirection::Inverse => Direction::Inverse,
            RunDirection::Forward | RunDirection::Iga => Direction::Forward,
        };
        let mut prob = ProblemDefinition::new(mesh, direction, self.formulation, self.degree, self.material()?)
            .map_err(|e| config_err("formulation", e.to_string()))?;
        for (i, d) in self.dirichlet.iter().enumerate() {
            let bc = DirichletBC {
                tag: d.tag,
                components: parse_components(&d.components)?,
                exprs: d.exprs.clone(),
            };
            prob = prob
                .with_dirichlet(bc)
                .map_err(|e| config_err(format!("dirichlet[{i}].tag"), e.to_string()))?;
        }
        for (i, t) in self.tractions.iter().enumerate() {
            prob = prob
                .with_traction(Traction {
                    tag: t.tag,
                    exprs: t.exprs.clone(),
                })
                .map_err(|e| config_err(format!("tractions[{i}].tag"), e.to_string()))?;
        }
        Ok(prob.with_body_force(self.body_force.clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Converged,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub cells: usize,
    pub volume: f64,
}

impl MeshSummary {
    pub fn of(mesh: &Mesh) -> Self {
        MeshSummary {
            vertices: mesh.num_vertices(),
            cells: mesh.num_cells(),
            volume: mesh.total_volume(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSummary {
    /// Largest vertex displacement magnitude.
    pub max_magnitude: f64,
    /// Largest absolute vertex displacement per component.
    pub max_components: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgaSummary {
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub total_newton_iterations: usize,
    pub wall_time_s: f64,
}

/// JSON report of a forward, inverse or IGA run. Keys containing `time` are
/// timings; everything else is reproducible bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub direction: RunDirection,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub dofs: usize,
    pub input_mesh: MeshSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_mesh: Option<MeshSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub displacement: Option<DisplacementSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iga: Option<IgaSummary>,
    pub config: RunConfig,
}

/// Outcome of [`execute`]: the report plus the solution when there is one.
/// For IGA runs the analysis is the last forward solve, whose input mesh is
/// the rest-shape estimate.
pub struct RunOutcome {
    pub report: RunReport,
    pub analysis: Option<AnalysisResult>,
}

fn displacement_summary(a: &AnalysisResult) -> DisplacementSummary {
    let u = a.vertex_displacements();
    let mut comps = [0.0f64; 3];
    for v in &u {
        for k in 0..3 {
            comps[k] = comps[k].max(v[k].abs());
        }
    }
    DisplacementSummary {
        max_magnitude: a.max_displacement(),
        max_components: comps,
    }
}

fn iga_summary(r: &IgaResult) -> IgaSummary {
    IgaSummary {
        history: r.history.clone(),
        iterations: r.iterations(),
        converged: r.converged,
        total_newton_iterations: r.total_newton_iterations,
        wall_time_s: r.wall_time_s,
    }
}

/// Builds and solves the configured problem. Divergence is not an error here:
/// it yields a report with [`RunStatus::Diverged`]. Other failures propagate.
pub fn execute(cfg: &RunConfig, seed: u64) -> Result<RunOutcome> {
    let mesh = cfg.build_mesh()?;
    let prob = cfg.build_problem(mesh)?;
    let settings = cfg.solver.settings();
    let mut report = RunReport {
        direction: cfg.direction,
        seed,
        status: RunStatus::Converged,
        error: None,
        dofs: prob.num_dofs(),
        input_mesh: MeshSummary::of(&prob.mesh),
        output_mesh: None,
        displacement: None,
        convergence: None,
        iga: None,
        config: cfg.clone(),
    };
    let mut rest_estimate = None;
    let solved = match cfg.direction {
        RunDirection::Forward => crate::driver::solve_forward(&prob, &settings),
        RunDirection::Inverse => crate::driver::solve_inverse(&prob, &settings),
        RunDirection::Iga => crate::driver::iga_solve(&prob, &settings, &cfg.iga).map(|r| {
            report.iga = Some(iga_summary(&r));
            if !r.converged {
                report.status = RunStatus::Diverged;
                report.error = Some(format!(
                    "IGA did not reach epsilon {:e} in {} iterations",
                    cfg.iga.epsilon, cfg.iga.max_iterations
                ));
            }
            rest_estimate = Some(MeshSummary::of(&r.reference));
            r.last
        }),
    };
    match solved {
        Ok(a) => {
            // for IGA the interesting output is the rest shape, not the re-deformed target
            report.output_mesh = Some(rest_estimate.unwrap_or_else(|| MeshSummary::of(&a.updated_mesh)));
            report.displacement = Some(displacement_summary(&a));
            report.convergence = Some(a.record.clone());
            Ok(RunOutcome {
                report,
                analysis: Some(a),
            })
        }
        Err(e) => {
            let record = match &e {
                Error::Divergence { record, .. } => Some((**record).clone()),
                Error::Iga { source, history, .. } => match source.as_ref() {
                    Error::Divergence { record, .. } => {
                        report.iga = Some(IgaSummary {
                            history: history.clone(),
                            iterations: history.len(),
                            converged: false,
                            total_newton_iterations: 0,
                            wall_time_s: 0.0,
                        });
                        Some((**record).clone())
                    }
                    _ => None,
                },
                _ => None,
            };
            match record {
                Some(r) => {
                    report.status = RunStatus::Diverged;
                    report.error = Some(e.to_string());
                    report.convergence = Some(r);
                    Ok(RunOutcome { report, analysis: None })
                }
                None => Err(e),
            }
        }
    }
}

/// Removes every object key containing `time`, recursively.
pub fn strip_timings(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.retain(|k, _| !k.contains("time"));
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn tet_config() -> Value {
        json!({
            "mesh": {"generator": "unit_tet"},
            "direction": "forward",
            "degree": 1,
            "material": {"kind": "neo_hookean_compressible", "constants": {"mu": 20.0, "lambda": 30.0}, "rho0": 1.0},
            "dirichlet": [{"tag": 1, "components": "xyz", "exprs": ["0", "0", "0"]}],
            "body_force": [0, "1.5", 0]
        })
    }

    fn parse(v: Value) -> Result<RunConfig> {
        RunConfig::from_value(v, Path::new("."))
    }

    fn err_path(r: Result<RunConfig>) -> String {
        match r {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse(tet_config()).unwrap();
        assert_eq!(cfg.mesh, MeshConfig::UnitTet(UnitTetParams {}));
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.output.report_path, PathBuf::from("report.json"));
        assert_eq!(cfg.body_force[1].source(), "1.5");
        let prob = cfg.build_problem(cfg.build_mesh().unwrap()).unwrap();
        assert_eq!(prob.num_dofs(), 12);
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let mut v = tet_config();
        v["material"]["constants"]["nu"] = json!(0.3);
        assert_eq!(err_path(parse(v)), "material.constants.nu");
        let mut v = tet_config();
        v["solver"] = json!({"tol": 1e-9, "maxiter": 3});
        assert_eq!(err_path(parse(v)), "solver.maxiter");
        let mut v = tet_config();
        v["dirichlet"][0]["exprs"][1] = json!("y +");
        assert_eq!(err_path(parse(v)), "dirichlet[0].exprs[1]");
        let mut v = tet_config();
        v["mesh"] = json!({"generator": "sphere"});
        assert_eq!(err_path(parse(v)), "mesh.generator");
    }

    #[test]
    fn semantic_errors_report_their_path() {
        let mut v = tet_config();
        v["material"]["constants"] = json!({"mu": 1.0});
        assert_eq!(err_path(parse(v)), "material.constants.lambda");
        let mut v = tet_config();
        v["material"]["constants"]["c1"] = json!(1.0);
        assert_eq!(err_path(parse(v)), "material.constants.c1");
        let mut v = tet_config();
        v["dirichlet"][0]["components"] = json!("xw");
        assert_eq!(err_path(parse(v)), "dirichlet[0].components");
        let mut v = tet_config();
        v["formulation"] = json!("mixed");
        assert_eq!(err_path(parse(v)), "degree");
        let mut v = tet_config();
        v["solver"] = json!({"max_iter": 0});
        assert_eq!(err_path(parse(v)), "solver");
        let mut v = tet_config();
        v["dirichlet"][0]["tag"] = json!(9);
        let cfg = parse(v).unwrap();
        let e = cfg.build_problem(cfg.build_mesh().unwrap()).unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "dirichlet[0].tag"), "{e}");
    }

    #[test]
    fn mooney_rivlin_compressibility_convention() {
        let mut v = tet_config();
        v["material"] = json!({"kind": "mooney_rivlin_compressible", "constants": {"c1": 1.0, "c2": 2.0, "compressibility": 0.25}, "rho0": 1.0});
        assert_eq!(parse(v.clone()).unwrap().material().unwrap().d1, 4.0);
        v["material"]["constants"]["d1"] = json!(4.0);
        assert_eq!(err_path(parse(v)), "material.constants");
    }

    #[test]
    fn overrides() {
        let mut v = tet_config();
        apply_override(&mut v, "solver.continuation_steps=3").unwrap();
        apply_override(&mut v, "body_force.1=y*2").unwrap();
        apply_override(&mut v, "mesh={\"generator\":\"box\",\"params\":{\"divisions\":[2,1,1]}}").unwrap();
        apply_override(&mut v, "dirichlet.0.components=xy").unwrap();
        let cfg = parse(v.clone()).unwrap();
        assert_eq!(cfg.solver.continuation_steps, 3);
        assert_eq!(cfg.body_force[1].source(), "y*2");
        assert_eq!(cfg.dirichlet[0].components, "xy");
        assert!(matches!(cfg.mesh, MeshConfig::Box(BoxParams { divisions: [2, 1, 1], .. })));
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "dirichlet.5.tag=1").is_err());
        assert!(apply_override(&mut v, "degree.x=1").is_err());
        apply_override(&mut v, "solver.bogus=1").unwrap();
        assert_eq!(err_path(parse(v)), "solver.bogus");
    }

    #[test]
    fn execute_forward_and_inverse_round_trip() {
        let cfg = parse(tet_config()).unwrap();
        let fwd = execute(&cfg, 0).unwrap();
        assert_eq!(fwd.report.status, RunStatus::Converged);
        let a = fwd.analysis.unwrap();
        let mut inv_cfg = cfg.clone();
        inv_cfg.direction = RunDirection::Inverse;
        let prob = inv_cfg.build_problem(a.updated_mesh.clone()).unwrap();
        let back = crate::driver::solve_inverse(&prob, &inv_cfg.solver.settings()).unwrap();
        let err = crate::driver::nodal_error(&back.updated_mesh, &a.input_mesh).unwrap();
        assert!(err.l2 < 1e-10);
    }

    #[test]
    fn divergence_is_reported() {
        let mut v = tet_config();
        v["body_force"] = json!([0, "1e4", 0]);
        v["solver"] = json!({"max_iter": 3, "max_bisections": 1});
        let out = execute(&parse(v).unwrap(), 0).unwrap();
        assert_eq!(out.report.status, RunStatus::Diverged);
        assert!(out.report.convergence.is_some() && out.analysis.is_none());
    }

    #[test]
    fn reports_reproducible_without_timings() {
        let cfg = parse(tet_config()).unwrap();
        let mut a = serde_json::to_value(execute(&cfg, 7).unwrap().report).unwrap();
        let mut b = serde_json::to_value(execute(&cfg, 7).unwrap().report).unwrap();
        assert!(a["convergence"].get("wall_time_s").is_some());
        strip_timings(&mut a);
        strip_timings(&mut b);
        assert_eq!(a, b);
        assert!(a["convergence"].get("wall_time_s").is_none());
    }
}
