//! Sparse direct solves and Newton–Raphson with load continuation.

use std::sync::Arc;
use std::time::Instant;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Col, Conj};
use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::assembly::{ProblemDefinition, SparsePattern, SparseSystem};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Absolute tolerance on the ℓ² residual norm.
    pub newton_tolerance: f64,
    /// Tolerance relative to the first residual of a load step.
    pub relative_tolerance: f64,
    pub max_newton_iterations: usize,
    pub continuation_steps: usize,
    pub max_step_bisections: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            newton_tolerance: 1e-10,
            relative_tolerance: 1e-12,
            max_newton_iterations: 25,
            continuation_steps: 1,
            max_step_bisections: 8,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tolerance > 0.0) || !(self.relative_tolerance > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if self.max_newton_iterations == 0 || self.continuation_steps == 0 {
            return Err(Error::invalid("iteration and step counts must be positive"));
        }
        Ok(())
    }
}

/// One attempted load step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub load_scale: f64,
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    /// Number of times the nominal step had been halved when this step ran.
    pub bisection_level: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub steps: Vec<StepRecord>,
    pub total_iterations: usize,
    pub wall_time_s: f64,
}

impl ConvergenceRecord {
    pub fn converged_steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(|s| s.converged)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.steps.last().and_then(|s| s.residual_norms.last().copied())
    }
}

/// Sparse LU with partial pivoting that keeps the symbolic analysis between
/// solves on the same pattern.
#[derive(Default)]
pub struct LinearSolver {
    symbolic: Option<(Arc<SparsePattern>, SymbolicLu<usize>)>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `A x = rhs`. Errors if the factorization breaks down or the
    /// backward error exceeds `1e-10 (‖A‖‖x‖ + ‖b‖)`.
    pub fn solve(&mut self, system: &SparseSystem) -> Result<Vec<f64>> {
        let n = system.num_dofs();
        let p = &system.pattern;
        // CSR of A is CSC of Aᵀ; factor that and use the transposed solve.
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &p.row_ptr, None, &p.col_idx);
        let at = SparseColMatRef::new(sym, &system.values);
        let reuse = matches!(&self.symbolic, Some((cached, _)) if Arc::ptr_eq(cached, p));
        if !reuse {
            let s = SymbolicLu::try_new(sym).map_err(|e| Error::Factorization(format!("{e:?}")))?;
            self.symbolic = Some((p.clone(), s));
        }
        let symbolic = self.symbolic.as_ref().expect("set above").1.clone();
        let lu = Lu::try_new_with_symbolic(symbolic, at).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let solve_t = |b: &[f64]| -> Vec<f64> {
            let mut col = Col::<f64>::from_fn(n, |i| b[i]);
            lu.solve_transpose_in_place_with_conj(Conj::No, col.as_mat_mut());
            (0..n).map(|i| col[i]).collect()
        };
        let b = &system.rhs;
        let mut x = solve_t(b);
        let norm_a = system.norm_inf();
        let norm_b = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let check = |x: &[f64]| -> (f64, f64, Vec<f64>) {
            let ax = system.matvec(x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let norm_x = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (res, 1e-10 * (norm_a * norm_x + norm_b), r)
        };
        let finite = |x: &[f64]| x.iter().all(|v| v.is_finite());
        let (res, bound, r) = check(&x);
        if finite(&x) && res <= bound {
            return Ok(x);
        }
        // one step of iterative refinement before giving up
        if finite(&x) {
            let dx = solve_t(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            let (res, bound, _) = check(&x);
            if finite(&x) && res <= bound {
                return Ok(x);
            }
        }
        Err(Error::Factorization(format!(
            "matrix is singular or too ill-conditioned (residual {res:e} > {bound:e})"
        )))
    }
}

/// One-off sparse solve.
pub fn linear_solve(system: &SparseSystem) -> Result<Vec<f64>> {
    LinearSolver::new().solve(system)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Plain Newton at the problem's current load scale, starting from `x` with
/// Dirichlet values already imposed. Returns the residual history.
fn newton_iterations(
    prob: &ProblemDefinition,
    settings: &SolverSettings,
    x: &mut [f64],
    linear: &mut LinearSolver,
    norms: &mut Vec<f64>,
) -> Result<()> {
    let (mut r, mut sys) = prob.assemble(x, true)?;
    let r0 = norm2(&r);
    norms.push(r0);
    let target = settings.newton_tolerance.max(settings.relative_tolerance * r0);
    for it in 0..=settings.max_newton_iterations {
        let rn = *norms.last().expect("non-empty");
        if !rn.is_finite() {
            return Err(Error::inversion(f64::NAN));
        }
        if rn <= target {
            return Ok(());
        }
        if it == settings.max_newton_iterations {
            break;
        }
        if rn > 1e6 * r0.max(settings.newton_tolerance) {
            return Err(divergence(format!("residual grew to {rn:e}")));
        }
        let dx = linear.solve(sys.as_ref().expect("requested"))?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        (r, sys) = prob.assemble(x, true)?;
        norms.push(norm2(&r));
        debug!("newton {}: |r| = {:e}", it + 1, norms.last().unwrap());
    }
    Err(divergence(format!(
        "no convergence in {} iterations (|r| = {:e})",
        settings.max_newton_iterations,
        norms.last().unwrap()
    )))
}

fn divergence(message: String) -> Error {
    Error::Divergence {
        message,
        record: Box::default(),
    }
}

/// Solves from `x` at load `start` to `end` in `steps` uniform increments,
/// halving a failing increment up to `max_step_bisections` times.
fn solve_path(
    prob: &ProblemDefinition,
    settings: &SolverSettings,
    mut x: Vec<f64>,
    start: f64,
    end: f64,
    steps: usize,
) -> Result<(Vec<f64>, ConvergenceRecord)> {
    settings.validate()?;
    let t0 = Instant::now();
    let mut record = ConvergenceRecord::default();
    let mut work = prob.clone();
    let mut linear = LinearSolver::new();
    let nominal = (end - start) / steps as f64;
    let mut level = 0usize;
    let mut done = 0usize; // completed nominal steps, in units of 2^-level
    let mut s = start;
    let mut good_streak = 0;
    loop {
        let units = 1usize << level;
        if done >= steps * units {
            break;
        }
        let next_done = done + 1;
        let s_next = if next_done == steps * units {
            end
        } else {
            start + nominal * next_done as f64 / units as f64
        };
        work.load_scale = s_next;
        let mut trial = x.clone();
        let mut norms = Vec::new();
        // The new Dirichlet values enter through the first Newton step, which
        // also moves the interior consistently.
        let outcome = newton_iterations(&work, settings, &mut trial, &mut linear, &mut norms);
        record.total_iterations += norms.len().saturating_sub(1);
        match outcome {
            Ok(()) => {
                record.steps.push(StepRecord {
                    load_scale: s_next,
                    residual_norms: norms,
                    converged: true,
                    bisection_level: level,
                    failure: None,
                });
                x = trial;
                s = s_next;
                done = next_done;
                good_streak += 1;
                // grow back toward the nominal increment after two clean steps
                if level > 0 && good_streak >= 2 && done % 2 == 0 {
                    level -= 1;
                    done /= 2;
                    good_streak = 0;
                }
            }
            Err(e) if e.is_recoverable() => {
                warn!("load step to {s_next:.4} failed from {s:.4}: {e}");
                record.steps.push(StepRecord {
                    load_scale: s_next,
                    residual_norms: norms,
                    converged: false,
                    bisection_level: level,
                    failure: Some(e.to_string()),
                });
                good_streak = 0;
                if level >= settings.max_step_bisections {
                    record.wall_time_s = t0.elapsed().as_secs_f64();
                    return Err(Error::Divergence {
                        message: format!("load step at {s:.6} failed after {level} bisections: {e}"),
                        record: Box::new(record),
                    });
                }
                level += 1;
                done *= 2;
            }
            Err(e) => return Err(e),
        }
    }
    record.wall_time_s = t0.elapsed().as_secs_f64();
    info!(
        "solved to load {end} in {} steps, {} Newton iterations",
        record.steps.len(),
        record.total_iterations
    );
    Ok((x, record))
}

/// Newton at the problem's load scale from `initial`, which is taken to be in
/// equilibrium at zero load if the full step has to be bisected.
pub fn newton_solve(
    prob: &ProblemDefinition,
    settings: &SolverSettings,
    initial: Vec<f64>,
) -> Result<(Vec<f64>, ConvergenceRecord)> {
    if initial.len() != prob.num_dofs() {
        return Err(Error::invalid("initial state has the wrong length"));
    }
    solve_path(prob, settings, initial, 0.0, prob.load_scale, 1)
}

/// Uniform load schedule `s = i/N · load_scale` from the zero state.
pub fn continuation_solve(prob: &ProblemDefinition, settings: &SolverSettings) -> Result<(Vec<f64>, ConvergenceRecord)> {
    solve_path(
        prob,
        settings,
        prob.zero_state(),
        0.0,
        prob.load_scale,
        settings.continuation_steps,
    )
}
