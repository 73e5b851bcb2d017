//! Manipulability, characteristic length and the scaled-Jacobian metrics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jacobian::{Configuration, TaskSpace};
use crate::linalg;
use crate::topology::{JointKind, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("every joint is prismatic; no characteristic length")]
    AllPrismatic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricWarning {
    /// The characteristic length is zero, so μ̄ is undefined and κ is unscaled.
    ZeroCharacteristicLength,
    /// The Jacobian is rank deficient; κ is infinite.
    RankDeficient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mu: f64,
    /// Product of the singular values of the scaled Jacobian.
    pub mu_bar: Option<f64>,
    pub kappa: f64,
    /// `None` when every joint is prismatic.
    pub length: Option<f64>,
    /// Singular values of the scaled Jacobian, descending.
    pub sigma: Vec<f64>,
    /// `μ · det(S)`, i.e. μ divided by L to the number of linear rows.
    pub det_scaled_mu: Option<f64>,
    pub warnings: Vec<MetricWarning>,
}

/// `sqrt(det(J Jᵀ))` when joints outnumber task rows, else `sqrt(det(Jᵀ J))`.
///
/// Evaluated as the product of singular values, which is the same quantity.
pub fn manipulability(j: &DMatrix<f64>) -> f64 {
    linalg::singular_values(j).iter().product()
}

/// Mean over the non-prismatic joints of the distance from the task point to
/// the joint axis (R, C) or joint centre (S).
pub fn characteristic_length(t: &Topology, cfg: &Configuration) -> Result<f64, MetricsError> {
    let distances: Vec<f64> = t
        .joints()
        .iter()
        .zip(&cfg.joints)
        .filter_map(|(j, p)| {
            let arm = p.position - cfg.task_point;
            match j.kind {
                JointKind::Prismatic => None,
                JointKind::Spherical => Some(arm.norm()),
                JointKind::Revolute | JointKind::Cylindrical => Some(arm.cross(&p.axis()).norm()),
            }
        })
        .collect();
    if distances.is_empty() {
        return Err(MetricsError::AllPrismatic);
    }
    Ok(distances.iter().sum::<f64>() / distances.len() as f64)
}

/// Scales the linear rows by `1/L` and reports μ, μ̄, κ and σ.
///
/// `length = None` means scaling is skipped (all-prismatic topology).
pub fn scaled_metrics(j: &DMatrix<f64>, length: Option<f64>, task: TaskSpace) -> MetricReport {
    let mu = manipulability(j);
    let n_linear = task.linear_rows().len();
    assert_eq!(
        j.nrows(),
        task.dim(),
        "Jacobian rows do not match the task space"
    );
    let mut warnings = Vec::new();

    let (sigma, mu_bar, det_scaled_mu) = match length {
        Some(l) if l > 0.0 => {
            let mut js = j.clone();
            js.rows_mut(0, n_linear).scale_mut(1.0 / l);
            let sigma = linalg::singular_values(&js);
            let prod = sigma.iter().product();
            (sigma, Some(prod), Some(mu / l.powi(n_linear as i32)))
        }
        Some(_) => {
            warnings.push(MetricWarning::ZeroCharacteristicLength);
            (linalg::singular_values(j), None, None)
        }
        None => {
            let sigma = linalg::singular_values(j);
            (sigma, Some(mu), Some(mu))
        }
    };
    let kappa = linalg::condition_number(&sigma);
    if kappa.is_infinite() {
        warnings.push(MetricWarning::RankDeficient);
    }
    MetricReport {
        mu,
        mu_bar,
        kappa,
        length,
        sigma,
        det_scaled_mu,
        warnings,
    }
}

/// Characteristic length and scaled metrics in one call.
pub fn evaluate(
    t: &Topology,
    cfg: &Configuration,
    j: &DMatrix<f64>,
    task: TaskSpace,
) -> MetricReport {
    let length = characteristic_length(t, cfg).ok();
    scaled_metrics(j, length, task)
}
