//! End-to-end paths through the public API: mesh IO, forward/inverse round
//! trips and a few randomized invariants.

use std::fmt::Write as _;

use invfem::assembly::{DirichletBC, Formulation, ProblemDefinition};
use invfem::config::{apply_override, RunConfig};
use invfem::driver::{iga_solve, nodal_error, solve_forward, solve_inverse, IGASettings};
use invfem::expr::Expr;
use invfem::kinematics::Direction;
use invfem::materials::MaterialSpec;
use invfem::mesh::{generate_box_mesh, generate_unit_tetrahedron, read_gmsh, write_vtk, Mesh};
use invfem::solver::SolverSettings;
use proptest::prelude::*;
use serde_json::json;

fn to_msh(mesh: &Mesh) -> String {
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    writeln!(s, "{}", mesh.num_vertices()).unwrap();
    for (i, v) in mesh.vertices.iter().enumerate() {
        writeln!(s, "{} {:.17e} {:.17e} {:.17e}", i + 1, v[0], v[1], v[2]).unwrap();
    }
    s.push_str("$EndNodes\n$Elements\n");
    writeln!(s, "{}", mesh.boundary_facets.len() + mesh.num_cells()).unwrap();
    let mut id = 1;
    for f in &mesh.boundary_facets {
        let [a, b, c] = f.vertices.map(|v| v + 1);
        writeln!(s, "{id} 2 2 {} {} {a} {b} {c}", f.tag, f.tag).unwrap();
        id += 1;
    }
    for cell in &mesh.cells {
        let [a, b, c, d] = cell.map(|v| v + 1);
        writeln!(s, "{id} 4 2 7 1 {a} {b} {c} {d}").unwrap();
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

fn loaded_box(mesh: Mesh, direction: Direction, degree: usize, material: MaterialSpec) -> ProblemDefinition {
    let formulation = if material.kind.is_mixed() {
        Formulation::MixedUP
    } else {
        Formulation::DisplacementOnly
    };
    ProblemDefinition::new(mesh, direction, formulation, degree, material)
        .unwrap()
        .with_dirichlet(DirichletBC::clamped(1))
        .unwrap()
        .with_body_force([Expr::zero(), Expr::constant(-0.2), Expr::constant(0.05)])
}

#[test]
fn gmsh_import_solve_and_vtk_export() {
    let dir = tempfile::tempdir().unwrap();
    let original = generate_box_mesh([1.0, 0.5, 0.5], [3, 2, 2]).unwrap();
    let msh = dir.path().join("box.msh");
    std::fs::write(&msh, to_msh(&original)).unwrap();

    let imported = read_gmsh(&msh).unwrap();
    assert_eq!(imported.skipped_elements, 0);
    assert_eq!(imported.reoriented_cells, 0);
    let mesh = imported.mesh;
    assert_eq!(mesh.vertices, original.vertices);
    assert_eq!(mesh.cells, original.cells);
    assert_eq!(mesh.facet_tags(), original.facet_tags());
    assert!((mesh.total_volume() - 0.25).abs() < 1e-14);

    let prob = loaded_box(mesh, Direction::Forward, 2, MaterialSpec::neo_hookean(1.0, 5.0, 1.0, false));
    let result = solve_forward(&prob, &SolverSettings::default()).unwrap();
    assert!(result.max_displacement() > 0.0);

    let vtk = dir.path().join("out.vtk");
    write_vtk(&result.input_mesh, &[("displacement", &result.displacement)], &vtk).unwrap();
    let text = std::fs::read_to_string(&vtk).unwrap();
    assert!(text.contains(&format!("POINTS {} double", original.num_vertices())));
    assert!(text.contains(&format!("CELL_TYPES {}", original.num_cells())));
    assert!(text.contains("VECTORS displacement double"));
    let data_lines = text.lines().skip_while(|l| !l.starts_with("VECTORS")).skip(1).count();
    assert_eq!(data_lines, original.num_vertices());
}

#[test]
fn p1_forward_then_inverse_recovers_rest_shape() {
    let material = MaterialSpec::mooney_rivlin(0.6, 0.2, 0.1, 1.0, false);
    let rest = generate_box_mesh([1.0, 1.0, 1.0], [2, 2, 2]).unwrap();
    let settings = SolverSettings::default();
    let fwd = solve_forward(&loaded_box(rest.clone(), Direction::Forward, 1, material.clone()), &settings).unwrap();
    let inv = solve_inverse(
        &loaded_box(fwd.updated_mesh.clone(), Direction::Inverse, 1, material),
        &settings,
    )
    .unwrap();
    let err = nodal_error(&inv.updated_mesh, &rest).unwrap();
    assert!(err.max < 1e-9, "round trip error {err:?}");
}

#[test]
fn p2_round_trip_and_iga_agree_on_the_rest_shape() {
    let material = MaterialSpec::neo_hookean(1.0, 20.0, 1.0, false);
    let rest = generate_box_mesh([1.0, 0.6, 0.6], [2, 1, 1]).unwrap();
    let settings = SolverSettings::default();
    let fwd = solve_forward(&loaded_box(rest.clone(), Direction::Forward, 2, material.clone()), &settings).unwrap();
    let target = fwd.updated_mesh.clone();
    let inv = solve_inverse(&loaded_box(target.clone(), Direction::Inverse, 2, material.clone()), &settings).unwrap();
    let iga = iga_solve(
        &loaded_box(target, Direction::Forward, 2, material),
        &settings,
        &IGASettings {
            epsilon: 1e-10,
            max_iterations: 60,
        },
    )
    .unwrap();
    assert!(iga.converged);
    // Both estimates sit within discretization error of the true rest shape.
    let scale = fwd.max_displacement();
    assert!(nodal_error(&inv.updated_mesh, &rest).unwrap().max < 0.05 * scale);
    assert!(nodal_error(&iga.reference, &rest).unwrap().max < 1e-8);
}

#[test]
fn config_file_drives_the_same_solve_as_the_api() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "mesh": {"generator": "unit_tet"},
        "direction": "forward",
        "degree": 1,
        "material": {"kind": "neo_hookean_compressible", "constants": {"mu": 1.0, "lambda": 2.0}, "rho0": 1.0},
        "dirichlet": [{"tag": 1, "components": "xyz", "exprs": ["0", "0", "0"]}],
        "body_force": ["0", "0.1", "0"]
    });
    let path = dir.path().join("run.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let cfg = RunConfig::load(&path, &[]).unwrap();
    let prob = cfg.build_problem(cfg.build_mesh().unwrap()).unwrap();
    let from_cfg = solve_forward(&prob, &cfg.solver.settings()).unwrap();

    let direct = ProblemDefinition::new(
        generate_unit_tetrahedron(),
        Direction::Forward,
        Formulation::DisplacementOnly,
        1,
        MaterialSpec::neo_hookean(1.0, 2.0, 1.0, false),
    )
    .unwrap()
    .with_dirichlet(DirichletBC::clamped(1))
    .unwrap()
    .with_body_force([Expr::zero(), Expr::constant(0.1), Expr::zero()]);
    let direct = solve_forward(&direct, &SolverSettings::default()).unwrap();
    assert_eq!(from_cfg.solution, direct.solution);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_tet_inverse_undoes_forward(
        log_mu in -1.0f64..1.0,
        ratio in 1.0f64..50.0,
        gy in -0.3f64..0.3,
        gz in -0.3f64..0.3,
    ) {
        let mu = 10f64.powf(log_mu);
        let material = MaterialSpec::neo_hookean(mu, ratio * mu, 1.0, false);
        let build = |mesh: Mesh, direction| {
            ProblemDefinition::new(mesh, direction, Formulation::DisplacementOnly, 1, material.clone())
                .unwrap()
                .with_dirichlet(DirichletBC::clamped(1))
                .unwrap()
                .with_body_force([Expr::zero(), Expr::constant(gy * mu), Expr::constant(gz * mu)])
        };
        let rest = generate_unit_tetrahedron();
        // Recovery is limited by the Newton tolerance relative to the stiffness.
        let settings = SolverSettings { newton_tolerance: 1e-13, ..SolverSettings::default() };
        let fwd = solve_forward(&build(rest.clone(), Direction::Forward), &settings).unwrap();
        let inv = solve_inverse(&build(fwd.updated_mesh.clone(), Direction::Inverse), &settings).unwrap();
        let err = nodal_error(&inv.updated_mesh, &rest).unwrap();
        prop_assert!(err.max < 1e-10, "error {:?}", err);
    }

    #[test]
    fn overrides_are_idempotent(a in -1e6f64..1e6, b in 0usize..100) {
        let mut v = json!({"solver": {"tol": 1.0}, "body_force": ["0", "0", "0"]});
        let sets = [format!("solver.tol={a:e}"), format!("body_force.1=\"{b}*x\"")];
        for s in &sets {
            apply_override(&mut v, s).unwrap();
        }
        let once = v.clone();
        for s in &sets {
            apply_override(&mut v, s).unwrap();
        }
        prop_assert_eq!(&v, &once);
        prop_assert_eq!(v["solver"]["tol"].as_f64().unwrap(), a);
        prop_assert_eq!(v["body_force"][1].as_str().unwrap(), format!("{b}*x"));
    }
}
