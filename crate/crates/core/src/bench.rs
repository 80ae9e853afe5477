//! Single-tetrahedron benchmark: one-shot inverse solves against the iterative
//! geometric algorithm over seeded random material draws.
//!
//! Part I deforms the unit tetrahedron forward and recovers it with each
//! method. Part II starts from the unit tetrahedron as the deformed shape,
//! solves inverse, then forward again. Gravity acts along `+y` on a tetrahedron
//! clamped on its `y = 0` face.

use std::time::Instant;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{DirichletBC, Formulation, ProblemDefinition};
use crate::driver::{iga_solve, nodal_error, solve_forward, solve_inverse, IGASettings, IgaResult};
use crate::expr::Expr;
use crate::kinematics::Direction;
use crate::materials::{MaterialKind, MaterialSpec};
use crate::mesh::{generate_unit_tetrahedron, Mesh};
use crate::solver::SolverSettings;
use crate::Result;

/// Default number of draws per part.
pub const DEFAULT_DRAWS: usize = 80;
/// Accuracy target of the first IGA run.
pub const IGA_EPSILON: f64 = 1e-6;
/// Floor for the IGA threshold matched to the one-shot accuracy.
pub const MATCHED_EPSILON_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub material: MaterialSpec,
    /// Nominal strain the gravity load is sized for.
    pub strain: f64,
    /// Acceleration along `+y`.
    pub gravity: f64,
}

/// Draws a compressible material and a load giving a nominal strain in
/// `[0.01, 0.08]`.
pub fn random_draw(rng: &mut ChaCha8Rng) -> Draw {
    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.gen_range(lo.ln()..hi.ln())).exp();
    let rho0 = rng.gen_range(900.0..1200.0);
    let (material, modulus) = if rng.gen_bool(0.5) {
        let mu = log_uniform(rng, 1e3, 1e6);
        let lambda = mu * rng.gen_range(0.5..20.0);
        (MaterialSpec::neo_hookean(mu, lambda, rho0, false), lambda + 2.0 * mu)
    } else {
        let c1 = log_uniform(rng, 1e3, 1e6);
        let c2 = c1 * rng.gen_range(0.0..1.5);
        let d1 = (c1 + c2) * rng.gen_range(1.0..20.0);
        let m = MaterialSpec::mooney_rivlin(c1, c2, d1, rho0, false);
        let (g, k) = m.small_strain_moduli();
        (m, k + 4.0 * g / 3.0)
    };
    let strain = rng.gen_range(0.01..0.08);
    Draw {
        material,
        strain,
        gravity: 4.0 * strain * modulus / rho0,
    }
}

pub fn tet_problem(mesh: Mesh, direction: Direction, draw: &Draw) -> Result<ProblemDefinition> {
    Ok(
        ProblemDefinition::new(mesh, direction, Formulation::DisplacementOnly, 1, draw.material)?
            .with_dirichlet(DirichletBC::clamped(1))?
            .with_body_force([Expr::zero(), Expr::constant(draw.gravity), Expr::zero()]),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgaOutcome {
    pub epsilon: f64,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Error history increased somewhere after the first iteration.
    pub non_monotone: bool,
    pub time_ms: f64,
}

impl IgaOutcome {
    fn from_result(epsilon: f64, r: &IgaResult, time_ms: f64) -> Self {
        IgaOutcome {
            epsilon,
            error: r.final_error(),
            iterations: r.iterations(),
            converged: r.converged,
            non_monotone: r.history.windows(2).skip(1).any(|w| w[1] > w[0]),
            time_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub part: usize,
    pub index: usize,
    pub kind: MaterialKind,
    pub draw: Draw,
    /// `‖u' + u‖` over vertices.
    pub one_shot_error: f64,
    pub one_shot_time_ms: f64,
    pub iga: Option<IgaOutcome>,
    /// IGA with its threshold matched to `one_shot_error`.
    pub iga_matched: Option<IgaOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Stats::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Stats {
            count: n,
            mean,
            sd: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub error: Stats,
    pub iterations: Stats,
    pub time_ms: Stats,
    /// Cases where IGA stopped at its iteration limit.
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSummary {
    pub part: usize,
    pub cases: usize,
    pub one_shot: MethodSummary,
    pub iga: MethodSummary,
    pub iga_matched: MethodSummary,
    /// Mean of per-case `IGA time / one-shot time` at matched accuracy.
    pub time_ratio_matched: f64,
    /// Fraction of cases where the one-shot solve was faster than matched IGA.
    pub one_shot_time_wins: f64,
    pub non_monotone_histories: usize,
    pub solver_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub draws_per_part: usize,
    pub parts: Vec<PartSummary>,
    pub cases: Vec<CaseResult>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchOptions {
    pub seed: u64,
    pub draws_per_part: usize,
    /// Timings take the fastest of this many repetitions.
    pub timing_repeats: usize,
    pub iga_max_iterations: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            seed: 42,
            draws_per_part: DEFAULT_DRAWS,
            timing_repeats: 3,
            iga_max_iterations: 50,
        }
    }
}

fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        let v = f()?;
        best = best.min(t.elapsed().as_secs_f64() * 1e3);
        out = Some(v);
    }
    Ok((out.expect("at least one run"), best))
}

fn run_case(part: usize, index: usize, draw: Draw, opts: &BenchOptions) -> Result<CaseResult> {
    let settings = SolverSettings::default();
    let unit = generate_unit_tetrahedron();
    // target deformed shape and the rest shape it should map back to
    let (target, rest, one_shot_error, one_shot_time_ms) = if part == 1 {
        let fwd = solve_forward(&tet_problem(unit.clone(), Direction::Forward, &draw)?, &settings)?;
        let inv_prob = tet_problem(fwd.updated_mesh.clone(), Direction::Inverse, &draw)?;
        let (inv, ms) = timed(opts.timing_repeats, || solve_inverse(&inv_prob, &settings))?;
        let err = nodal_error(&inv.updated_mesh, &unit)?.l2;
        (fwd.updated_mesh, unit, err, ms)
    } else {
        let inv_prob = tet_problem(unit.clone(), Direction::Inverse, &draw)?;
        let (inv, ms) = timed(opts.timing_repeats, || solve_inverse(&inv_prob, &settings))?;
        let fwd = solve_forward(&tet_problem(inv.updated_mesh.clone(), Direction::Forward, &draw)?, &settings)?;
        let err = nodal_error(&fwd.updated_mesh, &unit)?.l2;
        (unit, inv.updated_mesh, err, ms)
    };
    let _ = rest;
    let target_prob = tet_problem(target, Direction::Forward, &draw)?;
    let iga_run = |epsilon: f64| -> Result<IgaOutcome> {
        let iga = IGASettings {
            epsilon,
            max_iterations: opts.iga_max_iterations,
        };
        let (r, ms) = timed(opts.timing_repeats, || iga_solve(&target_prob, &settings, &iga))?;
        Ok(IgaOutcome::from_result(epsilon, &r, ms))
    };
    let mut failure = None;
    let iga = iga_run(IGA_EPSILON).map_err(|e| failure = Some(e.to_string())).ok();
    let iga_matched = iga_run(one_shot_error.max(MATCHED_EPSILON_FLOOR))
        .map_err(|e| failure = Some(e.to_string()))
        .ok();
    Ok(CaseResult {
        part,
        index,
        kind: draw.material.kind,
        draw,
        one_shot_error,
        one_shot_time_ms,
        iga,
        iga_matched,
        failure,
    })
}

fn summarize_method(outcomes: &[&IgaOutcome]) -> MethodSummary {
    let errs: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
    let its: Vec<f64> = outcomes.iter().map(|o| o.iterations as f64).collect();
    let ms: Vec<f64> = outcomes.iter().map(|o| o.time_ms).collect();
    MethodSummary {
        error: Stats::of(&errs),
        iterations: Stats::of(&its),
        time_ms: Stats::of(&ms),
        failures: outcomes.iter().filter(|o| !o.converged).count(),
    }
}

fn summarize(part: usize, cases: &[CaseResult], solver_failures: usize) -> PartSummary {
    let errs: Vec<f64> = cases.iter().map(|c| c.one_shot_error).collect();
    let ms: Vec<f64> = cases.iter().map(|c| c.one_shot_time_ms).collect();
    let iga: Vec<&IgaOutcome> = cases.iter().filter_map(|c| c.iga.as_ref()).collect();
    let matched: Vec<&IgaOutcome> = cases.iter().filter_map(|c| c.iga_matched.as_ref()).collect();
    let pairs: Vec<(f64, f64)> = cases
        .iter()
        .filter_map(|c| c.iga_matched.as_ref().map(|m| (c.one_shot_time_ms, m.time_ms)))
        .collect();
    let ratio = pairs.iter().map(|(a, b)| b / a).sum::<f64>() / pairs.len().max(1) as f64;
    let faster = pairs.iter().filter(|(a, b)| a < b).count() as f64 / pairs.len().max(1) as f64;
    PartSummary {
        part,
        cases: cases.len(),
        one_shot: MethodSummary {
            error: Stats::of(&errs),
            iterations: Stats::of(&vec![1.0; cases.len()]),
            time_ms: Stats::of(&ms),
            failures: 0,
        },
        iga: summarize_method(&iga),
        iga_matched: summarize_method(&matched),
        time_ratio_matched: ratio,
        one_shot_time_wins: faster,
        non_monotone_histories: iga.iter().filter(|o| o.non_monotone).count(),
        solver_failures,
    }
}

/// Runs both parts. Draws come from one ChaCha stream seeded with `seed`, so
/// everything but the timings is reproducible.
pub fn run_tet_bench(opts: &BenchOptions) -> Result<BenchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut parts = Vec::new();
    let mut all = Vec::new();
    for part in [1, 2] {
        let mut cases = Vec::new();
        let mut failures = 0;
        for index in 0..opts.draws_per_part {
            let draw = random_draw(&mut rng);
            match run_case(part, index, draw, opts) {
                Ok(c) => {
                    for o in [&c.iga, &c.iga_matched].into_iter().flatten() {
                        if o.non_monotone {
                            warn!("part {part} case {index}: IGA error history not monotone");
                        }
                    }
                    cases.push(c)
                }
                Err(e) => {
                    warn!("part {part} case {index} failed: {e}");
                    failures += 1;
                }
            }
        }
        parts.push(summarize(part, &cases, failures));
        all.extend(cases);
    }
    Ok(BenchReport {
        seed: opts.seed,
        draws_per_part: opts.draws_per_part,
        parts,
        cases: all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible_and_in_range() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (x, y) = (random_draw(&mut a), random_draw(&mut b));
            assert_eq!(x, y);
            assert!((0.01..0.08).contains(&x.strain));
            x.material.validate().unwrap();
            assert!(!x.material.kind.is_mixed());
        }
    }

    #[test]
    fn stats() {
        let s = Stats::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.sd, s.min, s.max, s.count), (2.0, 1.0, 1.0, 3.0, 2));
        assert_eq!(Stats::of(&[]).count, 0);
    }

    #[test]
    fn small_suite_runs() {
        let opts = BenchOptions {
            draws_per_part: 3,
            timing_repeats: 1,
            ..Default::default()
        };
        let r = run_tet_bench(&opts).unwrap();
        assert_eq!(r.cases.len(), 6);
        for p in &r.parts {
            assert!(p.one_shot.error.max < 1e-9, "{p:?}");
            assert!(p.iga.error.mean <= 1e-6);
        }
        let again = run_tet_bench(&opts).unwrap();
        for (x, y) in r.cases.iter().zip(&again.cases) {
            assert_eq!(x.one_shot_error, y.one_shot_error);
            assert_eq!(x.iga.as_ref().unwrap().iterations, y.iga.as_ref().unwrap().iterations);
        }
    }
}
