//! Four-step multi-start strategy: maximize μ from many random starts, keep
//! only optima away from type-2 singularities, and fall back to the
//! singularity-aware objective when none survive.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jacobian::{type2_matrices, JacobianError, Type2};
use crate::linalg;
use crate::metrics::{self, MetricReport};
use crate::optimizer::design::{layout, DesignVector};
use crate::optimizer::interior_point::{
    interior_point_minimize, BoxProblem, OptResult, SolverOptions,
};
use crate::optimizer::objective::DesignProblem;
use crate::synthesis::{ObjectiveTag, RestartDiagnostics, SynthesisResult};
use crate::topology::Topology;

/// RNG stream offset separating the f2 draws from the f1 draws.
const F2_STREAM: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    pub n_restarts: usize,
    pub shortlist_cond_max: f64,
    pub shortlist_sigma_min: f64,
    pub rng_seed: u64,
    /// Extra single f2 draws allowed when no f2 optimum passes the final screen.
    pub max_redraws: usize,
    pub solver: SolverOptions,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            n_restarts: 100,
            shortlist_cond_max: 1000.0,
            shortlist_sigma_min: 1e-2,
            rng_seed: 0,
            max_redraws: 50,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("no acceptable optimum after {attempts} restarts")]
    ExhaustedRestarts { attempts: usize },
    #[error(transparent)]
    Jacobian(#[from] JacobianError),
    #[error("catalog is empty")]
    EmptyCatalog,
}

fn draw(problem: &DesignProblem, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    layout(problem.topology())
        .iter()
        .map(|c| rng.random_range(c.lower..c.upper))
        .collect()
}

fn bounds(problem: &DesignProblem) -> (Vec<f64>, Vec<f64>) {
    layout(problem.topology())
        .iter()
        .map(|c| (c.lower, c.upper))
        .unzip()
}

fn run_f1(problem: &DesignProblem, x0: &[f64], opts: &SolverOptions) -> OptResult {
    let (lower, upper) = bounds(problem);
    let p = BoxProblem::new(|x: &[f64]| problem.log_f1(x), lower, upper);
    interior_point_minimize(&p, x0, opts)
}

fn run_f2(problem: &DesignProblem, x0: &[f64], opts: &SolverOptions) -> OptResult {
    let (lower, upper) = bounds(problem);
    let p = BoxProblem::new(
        |x: &[f64]| problem.log_f2(x).unwrap_or(f64::INFINITY),
        lower,
        upper,
    );
    interior_point_minimize(&p, x0, opts)
}

/// μ, μ̄, κ and friends of the design `x`.
pub fn evaluate_design(problem: &DesignProblem, x: &[f64]) -> Result<MetricReport, JacobianError> {
    let cfg = problem
        .configuration(x)
        .expect("design vector length checked by the caller");
    let red = problem.system().jacobian(&cfg)?;
    Ok(metrics::evaluate(
        problem.topology(),
        &cfg,
        &red.jacobian,
        problem.system().task_space(),
    ))
}

/// Step-1 screen: Ã well conditioned and bounded away from singular.
fn passes_type2_screen(problem: &DesignProblem, x: &[f64], opts: &SynthesisOptions) -> bool {
    let Ok(cfg) = problem.configuration(x) else {
        return false;
    };
    let Ok(parts) = problem.system().assemble(&cfg) else {
        return false;
    };
    match type2_matrices(&parts) {
        Type2::Serial => true,
        Type2::Parallel { a_tilde, .. } => {
            let s = linalg::singular_values(&a_tilde);
            linalg::condition_number(&s) < opts.shortlist_cond_max
                && s.last().is_some_and(|&lo| lo > opts.shortlist_sigma_min)
        }
    }
}

/// Step-4 screen on the unscaled reduced Jacobian.
fn passes_jacobian_screen(problem: &DesignProblem, x: &[f64], opts: &SynthesisOptions) -> bool {
    let Ok(cfg) = problem.configuration(x) else {
        return false;
    };
    let Ok(red) = problem.system().jacobian(&cfg) else {
        return false;
    };
    let s = linalg::singular_values(&red.jacobian);
    linalg::condition_number(&s) < opts.shortlist_cond_max
        && s.last().is_some_and(|&lo| lo > opts.shortlist_sigma_min)
}

/// Index of the largest μ among `candidates`, first index on ties.
fn best_by_mu(problem: &DesignProblem, candidates: &[&OptResult]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, r) in candidates.iter().enumerate() {
        if let Some(mu) = problem.mu(&r.x) {
            if best.is_none_or(|(_, b)| mu > b) {
                best = Some((k, mu));
            }
        }
    }
    best.map(|(k, _)| k)
}

pub fn multi_start_synthesize(
    t: &Topology,
    task_point: Vector3<f64>,
    opts: &SynthesisOptions,
) -> Result<SynthesisResult, SynthesisError> {
    let problem = DesignProblem::new(t, task_point);
    let parallel = !problem.system().is_serial();
    // structural mismatches surface at any configuration
    if let Err(e @ JacobianError::NonSquareA2 { .. }) = problem.system().assemble(
        &problem
            .configuration(&draw(&problem, opts.rng_seed, 0))
            .expect("layout length"),
    ) {
        return Err(e.into());
    }

    let mut diag = RestartDiagnostics::default();

    // Step 1
    let step1: Vec<OptResult> = (0..opts.n_restarts as u64)
        .into_par_iter()
        .map(|i| run_f1(&problem, &draw(&problem, opts.rng_seed, i), &opts.solver))
        .collect();
    diag.f1_runs = step1.len();
    diag.f1_converged = step1
        .iter()
        .filter(|r| r.converged && r.f.is_finite())
        .count();
    let shortlist: Vec<&OptResult> = step1
        .iter()
        .filter(|r| r.converged && r.f.is_finite())
        .filter(|r| !parallel || passes_type2_screen(&problem, &r.x, opts))
        .collect();
    diag.shortlisted = shortlist.len();

    // Step 2
    if let Some(k) = best_by_mu(&problem, &shortlist) {
        return finish(&problem, &shortlist[k].x, ObjectiveTag::F1, diag);
    }
    if !parallel {
        return Err(SynthesisError::ExhaustedRestarts {
            attempts: diag.f1_runs,
        });
    }

    // Step 3
    let step3: Vec<OptResult> = (0..opts.n_restarts as u64)
        .into_par_iter()
        .map(|i| {
            run_f2(
                &problem,
                &draw(&problem, opts.rng_seed, F2_STREAM + i),
                &opts.solver,
            )
        })
        .collect();
    diag.f2_runs = step3.len();
    diag.f2_converged = step3
        .iter()
        .filter(|r| r.converged && r.f.is_finite())
        .count();

    // Step 4
    let accepted: Vec<&OptResult> = step3
        .iter()
        .filter(|r| r.converged && r.f.is_finite())
        .filter(|r| passes_jacobian_screen(&problem, &r.x, opts))
        .collect();
    diag.f2_accepted = accepted.len();
    if let Some(k) = best_by_mu(&problem, &accepted) {
        return finish(&problem, &accepted[k].x, ObjectiveTag::F2, diag);
    }
    for k in 0..opts.max_redraws as u64 {
        diag.redraws += 1;
        let x0 = draw(
            &problem,
            opts.rng_seed,
            F2_STREAM + opts.n_restarts as u64 + k,
        );
        let r = run_f2(&problem, &x0, &opts.solver);
        if r.converged && r.f.is_finite() && passes_jacobian_screen(&problem, &r.x, opts) {
            diag.f2_accepted = 1;
            return finish(&problem, &r.x, ObjectiveTag::F2, diag);
        }
    }
    Err(SynthesisError::ExhaustedRestarts {
        attempts: diag.f1_runs + diag.f2_runs + diag.redraws,
    })
}

fn finish(
    problem: &DesignProblem,
    x: &[f64],
    objective: ObjectiveTag,
    diagnostics: RestartDiagnostics,
) -> Result<SynthesisResult, SynthesisError> {
    let t = problem.topology();
    let report = evaluate_design(problem, x)?;
    let a = problem.task_point();
    Ok(SynthesisResult {
        name: t.name().to_owned(),
        task_point: [a.x, a.y, a.z],
        design: DesignVector::new(t, x.to_vec()).expect("optimizer preserves dimension"),
        mu: report.mu,
        mu_bar: report.mu_bar,
        kappa: report.kappa,
        length: report.length,
        det_scaled_mu: report.det_scaled_mu,
        objective,
        parallel: !problem.system().is_serial(),
        active: crate::jacobian::active_labels(t),
        diagnostics,
        warnings: report.warnings,
    })
}
