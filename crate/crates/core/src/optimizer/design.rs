//! Packed optimization variables: joint positions in a cube plus axis angles.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jacobian::{Configuration, JointPlacement};
use crate::topology::Topology;

/// Edge length of the placement cube `[0, CUBE]³`.
pub const CUBE: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("design vector has {got} entries, topology `{topology}` needs {expected}")]
    DimensionMismatch {
        topology: String,
        expected: usize,
        got: usize,
    },
    #[error("design label `{got}` at position {index} does not match expected `{expected}`")]
    LabelMismatch {
        index: usize,
        expected: String,
        got: String,
    },
}

/// One coordinate of the design vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Coordinate {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
}

/// Coordinates in packing order: joints by id, then `rx, ry, rz, beta, phi`
/// (angles only for axis-bearing joints).
pub fn layout(t: &Topology) -> Vec<Coordinate> {
    let mut out = Vec::new();
    for j in t.joints() {
        for axis in ["rx", "ry", "rz"] {
            out.push(Coordinate {
                label: format!("{}.{axis}", j.id),
                lower: 0.0,
                upper: CUBE,
            });
        }
        if j.kind.has_axis() {
            out.push(Coordinate {
                label: format!("{}.beta", j.id),
                lower: 0.0,
                upper: PI,
            });
            out.push(Coordinate {
                label: format!("{}.phi", j.id),
                lower: 0.0,
                upper: TAU,
            });
        }
    }
    out
}

/// Design vector with labels, as exchanged with files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl DesignVector {
    pub fn new(t: &Topology, values: Vec<f64>) -> Result<Self, DesignError> {
        let labels: Vec<String> = layout(t).into_iter().map(|c| c.label).collect();
        if labels.len() != values.len() {
            return Err(DesignError::DimensionMismatch {
                topology: t.name().to_owned(),
                expected: labels.len(),
                got: values.len(),
            });
        }
        Ok(DesignVector { labels, values })
    }

    /// Checks that the labels match the topology's layout.
    pub fn validate(&self, t: &Topology) -> Result<(), DesignError> {
        let expected = layout(t);
        if expected.len() != self.values.len() || self.labels.len() != self.values.len() {
            return Err(DesignError::DimensionMismatch {
                topology: t.name().to_owned(),
                expected: expected.len(),
                got: self.values.len(),
            });
        }
        for (index, (e, g)) in expected.iter().zip(&self.labels).enumerate() {
            if &e.label != g {
                return Err(DesignError::LabelMismatch {
                    index,
                    expected: e.label.clone(),
                    got: g.clone(),
                });
            }
        }
        Ok(())
    }
}

pub fn pack(t: &Topology, cfg: &Configuration) -> Vec<f64> {
    let mut out = Vec::new();
    for (j, p) in t.joints().iter().zip(&cfg.joints) {
        out.extend(p.position.iter());
        if j.kind.has_axis() {
            out.push(p.beta);
            out.push(p.phi);
        }
    }
    out
}

pub fn unpack(
    t: &Topology,
    x: &[f64],
    task_point: Vector3<f64>,
) -> Result<Configuration, DesignError> {
    let expected: usize = t
        .joints()
        .iter()
        .map(|j| if j.kind.has_axis() { 5 } else { 3 })
        .sum();
    if x.len() != expected {
        return Err(DesignError::DimensionMismatch {
            topology: t.name().to_owned(),
            expected,
            got: x.len(),
        });
    }
    let mut k = 0;
    let joints = t
        .joints()
        .iter()
        .map(|j| {
            let position = Vector3::new(x[k], x[k + 1], x[k + 2]);
            k += 3;
            if j.kind.has_axis() {
                let p = JointPlacement::new(position, x[k], x[k + 1]);
                k += 2;
                p
            } else {
                JointPlacement::at(position)
            }
        })
        .collect();
    Ok(Configuration { joints, task_point })
}
