//! Catalog-level synthesis, prescription ranking and link dimensions.

use std::cmp::Ordering;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::jacobian::Configuration;
use crate::metrics::MetricWarning;
use crate::optimizer::design::{self, DesignError, DesignVector};
use crate::optimizer::multistart::{multi_start_synthesize, SynthesisError, SynthesisOptions};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveTag {
    #[serde(rename = "f1")]
    F1,
    #[serde(rename = "f2")]
    F2,
}

impl ObjectiveTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveTag::F1 => "f1",
            ObjectiveTag::F2 => "f2",
        }
    }
}

/// Counts from the multi-start run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestartDiagnostics {
    pub f1_runs: usize,
    pub f1_converged: usize,
    pub shortlisted: usize,
    pub f2_runs: usize,
    pub f2_converged: usize,
    pub f2_accepted: usize,
    pub redraws: usize,
}

/// JSON has no infinity; store it as `null`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub name: String,
    pub task_point: [f64; 3],
    pub design: DesignVector,
    pub mu: f64,
    pub mu_bar: Option<f64>,
    #[serde(with = "extended_f64")]
    pub kappa: f64,
    pub length: Option<f64>,
    pub det_scaled_mu: Option<f64>,
    pub objective: ObjectiveTag,
    pub parallel: bool,
    /// Actuated rates, e.g. `theta_13`.
    pub active: Vec<String>,
    pub diagnostics: RestartDiagnostics,
    #[serde(default)]
    pub warnings: Vec<MetricWarning>,
}

impl SynthesisResult {
    pub fn task_point(&self) -> Vector3<f64> {
        Vector3::from(self.task_point)
    }
}

/// A catalog entry that could not be synthesized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub name: String,
    pub error: String,
}

pub type CatalogOutcome = Result<SynthesisResult, EntryFailure>;

/// Synthesizes every topology; one failure does not stop the batch.
pub fn run_catalog(
    catalog: &[Topology],
    task_point: Vector3<f64>,
    opts: &SynthesisOptions,
) -> Result<Vec<CatalogOutcome>, SynthesisError> {
    if catalog.is_empty() {
        return Err(SynthesisError::EmptyCatalog);
    }
    Ok(catalog
        .par_iter()
        .map(|t| {
            multi_start_synthesize(t, task_point, opts).map_err(|e| EntryFailure {
                name: t.name().to_owned(),
                error: e.to_string(),
            })
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrescriptionRow {
    /// 1-based position in the μ̄ ordering.
    pub s_no: usize,
    /// 1-based rank by ascending κ.
    pub i_kappa: usize,
    #[serde(flatten)]
    pub result: SynthesisResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prescription {
    pub rows: Vec<PrescriptionRow>,
}

fn by_mu_bar(a: &SynthesisResult, b: &SynthesisResult) -> Ordering {
    let key = |r: &SynthesisResult| r.mu_bar.unwrap_or(f64::NEG_INFINITY);
    key(b)
        .total_cmp(&key(a))
        .then_with(|| a.name.cmp(&b.name))
        .then_with(|| a.kappa.total_cmp(&b.kappa))
        .then_with(|| b.mu.total_cmp(&a.mu))
}

fn by_kappa(a: &SynthesisResult, b: &SynthesisResult) -> Ordering {
    a.kappa
        .total_cmp(&b.kappa)
        .then_with(|| a.name.cmp(&b.name))
        .then_with(|| by_mu_bar(a, b))
}

/// Orders results by descending μ̄ (ties by name) and attaches the κ rank.
pub fn rank_prescription(results: &[SynthesisResult]) -> Prescription {
    let mut sorted: Vec<&SynthesisResult> = results.iter().collect();
    sorted.sort_by(|a, b| by_mu_bar(a, b));
    let mut kappa_order: Vec<usize> = (0..sorted.len()).collect();
    kappa_order.sort_by(|&i, &j| by_kappa(sorted[i], sorted[j]));
    let mut i_kappa = vec![0; sorted.len()];
    for (rank, &i) in kappa_order.iter().enumerate() {
        i_kappa[i] = rank + 1;
    }
    Prescription {
        rows: sorted
            .into_iter()
            .enumerate()
            .map(|(k, r)| PrescriptionRow {
                s_no: k + 1,
                i_kappa: i_kappa[k],
                result: r.clone(),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSegment {
    pub link: String,
    /// Joint ids at the two ends; `a` stands for the task point.
    pub label: String,
    pub length: f64,
}

/// Distances between every pair of joints on each link, plus joint-to-task-point
/// distances on the end-effector link.
pub fn derive_link_lengths(t: &Topology, cfg: &Configuration) -> Vec<LinkSegment> {
    let mut out = Vec::new();
    for (l, link) in t.links().iter().enumerate() {
        let joints: Vec<usize> = t.incident_joints(l).collect();
        for (k, &i) in joints.iter().enumerate() {
            for &j in &joints[k + 1..] {
                out.push(LinkSegment {
                    link: link.0.clone(),
                    label: format!("{}-{}", t.joints()[i].id, t.joints()[j].id),
                    length: (cfg.joints[i].position - cfg.joints[j].position).norm(),
                });
            }
        }
        if l == t.end_effector() {
            for &i in &joints {
                out.push(LinkSegment {
                    link: link.0.clone(),
                    label: format!("{}-a", t.joints()[i].id),
                    length: (cfg.joints[i].position - cfg.task_point).norm(),
                });
            }
        }
    }
    out
}

/// `derive_link_lengths` on a packed design vector.
pub fn derive_link_lengths_from_design(
    t: &Topology,
    x: &[f64],
    task_point: Vector3<f64>,
) -> Result<Vec<LinkSegment>, DesignError> {
    Ok(derive_link_lengths(t, &design::unpack(t, x, task_point)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(name: &str, mu_bar: f64, kappa: f64) -> SynthesisResult {
        SynthesisResult {
            name: name.into(),
            task_point: [3.0, 4.0, 5.0],
            design: DesignVector {
                labels: vec![],
                values: vec![],
            },
            mu: 1.0,
            mu_bar: Some(mu_bar),
            kappa,
            length: Some(1.0),
            det_scaled_mu: Some(1.0),
            objective: ObjectiveTag::F1,
            parallel: false,
            active: vec![],
            diagnostics: RestartDiagnostics::default(),
            warnings: vec![],
        }
    }

    #[test]
    fn single_result_ranks_first() {
        let p = rank_prescription(&[result("x", 0.5, 3.0)]);
        assert_eq!(p.rows.len(), 1);
        assert_eq!((p.rows[0].s_no, p.rows[0].i_kappa), (1, 1));
    }

    #[test]
    fn ties_break_by_name() {
        let p = rank_prescription(&[result("b", 0.5, 2.0), result("a", 0.5, 2.0)]);
        let names: Vec<_> = p.rows.iter().map(|r| r.result.name.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
        assert_eq!(p.rows[0].i_kappa, 1);
        assert_eq!(p.rows[1].i_kappa, 2);
    }

    #[test]
    fn kappa_rank_is_independent_of_mu_bar_order() {
        let p = rank_prescription(&[
            result("M1", 1.0113, 1.4),
            result("M8", 1.0, 1.0),
            result("M2", 0.0962, 5.7),
        ]);
        let got: Vec<_> = p
            .rows
            .iter()
            .map(|r| (r.result.name.as_str(), r.i_kappa))
            .collect();
        assert_eq!(got, [("M1", 2), ("M8", 1), ("M2", 3)]);
    }

    #[test]
    fn undefined_mu_bar_sorts_last() {
        let mut r = result("z", 0.0, 1.0);
        r.mu_bar = None;
        let p = rank_prescription(&[r, result("y", 0.001, 1.0)]);
        assert_eq!(p.rows[1].result.name, "z");
    }

    #[test]
    fn infinite_kappa_survives_json() {
        let mut r = result("z", 0.0, f64::INFINITY);
        r.mu_bar = None;
        let s = serde_json::to_string(&r).unwrap();
        let back: SynthesisResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn empty_catalog_is_an_error() {
        assert_eq!(
            run_catalog(
                &[],
                Vector3::new(3.0, 4.0, 5.0),
                &SynthesisOptions::default()
            ),
            Err(SynthesisError::EmptyCatalog)
        );
    }
}
