//! Synthesis objectives. Both are negated so that they are minimized:
//! `f1 = −μ(J̃)` and `f2 = −sqrt(det(ÃᵀÃ) · det(B̃ᵀB̃))`.

use nalgebra::Vector3;
use thiserror::Error;

use crate::jacobian::{type2_matrices, Configuration, KinematicSystem, TaskSpace, Type2};
use crate::linalg;
use crate::metrics;
use crate::optimizer::design::{self, DesignError};
use crate::topology::Topology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("f2 is undefined for the serial topology `{0}`")]
    SerialTopology(String),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// A topology, a task point and the precomputed kinematic analysis.
#[derive(Clone, Debug)]
pub struct DesignProblem {
    system: KinematicSystem,
    task_point: Vector3<f64>,
}

impl DesignProblem {
    pub fn new(t: &Topology, task_point: Vector3<f64>) -> Self {
        DesignProblem {
            system: KinematicSystem::new(t.clone(), TaskSpace::Spatial),
            task_point,
        }
    }

    pub fn system(&self) -> &KinematicSystem {
        &self.system
    }

    pub fn topology(&self) -> &Topology {
        self.system.topology()
    }

    pub fn task_point(&self) -> Vector3<f64> {
        self.task_point
    }

    pub fn dim(&self) -> usize {
        design::layout(self.topology()).len()
    }

    pub fn configuration(&self, x: &[f64]) -> Result<Configuration, DesignError> {
        design::unpack(self.topology(), x, self.task_point)
    }

    /// μ(J̃) at `x`, `None` at a type-2 singularity or assembly failure.
    pub fn mu(&self, x: &[f64]) -> Option<f64> {
        let cfg = self.configuration(x).ok()?;
        let red = self.system.jacobian(&cfg).ok()?;
        Some(metrics::manipulability(&red.jacobian))
    }

    pub fn f1(&self, x: &[f64]) -> f64 {
        self.mu(x).map_or(f64::INFINITY, |mu| -mu)
    }

    /// `(n_t · ln|det A2|, ln Πσ(B̃))`, or `None` when not applicable.
    fn f2_logs(&self, x: &[f64]) -> Result<Option<(f64, f64)>, ObjectiveError> {
        if self.system.is_serial() {
            return Err(ObjectiveError::SerialTopology(
                self.topology().name().to_owned(),
            ));
        }
        let cfg = self.configuration(x)?;
        let Ok(parts) = self.system.assemble(&cfg) else {
            return Ok(None);
        };
        match type2_matrices(&parts) {
            Type2::Serial => Err(ObjectiveError::SerialTopology(
                self.topology().name().to_owned(),
            )),
            Type2::Parallel {
                a_tilde,
                b_tilde,
                det_a2,
            } => {
                let a_term = a_tilde.nrows() as f64 * det_a2.abs().ln();
                let b_term: f64 = linalg::singular_values(&b_tilde)
                    .iter()
                    .map(|s| s.ln())
                    .sum();
                Ok(Some((a_term, b_term)))
            }
        }
    }

    pub fn f2(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(match self.f2_logs(x)? {
            Some((a, b)) => -(a + b).exp(),
            None => f64::INFINITY,
        })
    }

    /// `−ln μ`: same minimizers as `f1`, better scaled for the solver.
    pub fn log_f1(&self, x: &[f64]) -> f64 {
        match self.mu(x) {
            Some(mu) if mu > 0.0 => -mu.ln(),
            _ => f64::INFINITY,
        }
    }

    /// `−ln(−f2)`; infinite where `f2` vanishes.
    pub fn log_f2(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(match self.f2_logs(x)? {
            Some((a, b)) if (a + b).is_finite() => -(a + b),
            _ => f64::INFINITY,
        })
    }
}

/// `−μ(J̃)` for the design vector `x`; `+∞` at a type-2 singularity.
pub fn objective_f1(t: &Topology, x: &[f64], task_point: Vector3<f64>) -> f64 {
    DesignProblem::new(t, task_point).f1(x)
}

/// `−sqrt(det(ÃᵀÃ) det(B̃ᵀB̃))` for the design vector `x`.
pub fn objective_f2(
    t: &Topology,
    x: &[f64],
    task_point: Vector3<f64>,
) -> Result<f64, ObjectiveError> {
    DesignProblem::new(t, task_point).f2(x)
}
