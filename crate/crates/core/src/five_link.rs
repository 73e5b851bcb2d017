//! Closed-form Jacobian of the planar five-link revolute mechanism, obtained
//! from a free-body force balance. Serves as an independent check of the
//! general engine.
//!
//! Conventions: joint 12 sits at the origin, links 2..5 follow head to tail
//! with absolute angles θ₂..θ₅ (joint 15 closes the loop at the far end of
//! link 5), actuators are joints 12 and 15, and the task point is the
//! midpoint of link 4.

use nalgebra::{DMatrix, Vector3};
use thiserror::Error;

use crate::jacobian::{Configuration, JointPlacement};
use crate::topology::{Component, JointKind, Topology, TopologySpec};

pub const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiveLinkConfig {
    /// Lengths l₂, l₃, l₄, l₅.
    pub lengths: [f64; 4],
    /// Absolute angles θ₂, θ₃, θ₄, θ₅ in radians.
    pub angles: [f64; 4],
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiveLinkError {
    #[error("singular five-link configuration: sin(θ3 − θ4) = {0:e}")]
    SingularConfiguration(f64),
}

/// The 3×2 map from (θ̇₁₂, θ̇₁₅) to (vx, vy, ωz) of link 4 at its midpoint.
pub fn closed_form_jacobian(c: &FiveLinkConfig) -> Result<DMatrix<f64>, FiveLinkError> {
    let [l2, _l3, l4, l5] = c.lengths;
    let [t2, t3, t4, t5] = c.angles;
    let s34 = (t3 - t4).sin();
    if s34.abs() < SINGULAR_TOLERANCE {
        return Err(FiveLinkError::SingularConfiguration(s34));
    }
    let s23 = (t2 - t3).sin();
    let k = l5 / (2.0 * s34);
    Ok(DMatrix::from_row_slice(
        3,
        2,
        &[
            l2 * t4.sin() * s23 / (2.0 * s34),
            k * ((-t3 + t4 + t5).cos() / 2.0 - (t3 - t4 + t5).cos() + (t3 + t4 - t5).cos() / 2.0),
            -l2 * s23 * t4.cos() / (2.0 * s34),
            k * ((-t3 + t4 + t5).sin() / 2.0 - (t3 - t4 + t5).sin() + (t3 + t4 - t5).sin() / 2.0),
            l2 * s23 / (l4 * s34),
            -l5 * (t3 - t5).sin() / (l4 * s34),
        ],
    ))
}

/// The five-link mechanism as a topology; evaluate it with `TaskSpace::Planar`.
pub fn planar_topology() -> Topology {
    let r = |id: &str, a: &str, b: &str| {
        (
            id.to_string(),
            JointKind::Revolute,
            a.to_string(),
            b.to_string(),
        )
    };
    Topology::build(&TopologySpec {
        name: "five-link".into(),
        dof: Some(2),
        links: ["L1", "L2", "L3", "L4", "L5"].map(String::from).to_vec(),
        joints: vec![
            r("12", "L1", "L2"),
            r("23", "L2", "L3"),
            r("34", "L3", "L4"),
            r("45", "L4", "L5"),
            r("15", "L1", "L5"),
        ],
        base: "L1".into(),
        end_effector: "L4".into(),
        actuated: vec![
            ("12".into(), Component::Rotation),
            ("15".into(), Component::Rotation),
        ],
    })
    .expect("five-link topology is valid")
}

/// Joint placements in the xy-plane, axes along +z, ordered like `planar_topology()`.
pub fn planar_configuration(c: &FiveLinkConfig) -> Configuration {
    let [l2, l3, l4, l5] = c.lengths;
    let [t2, t3, t4, t5] = c.angles;
    let u = |t: f64| Vector3::new(t.cos(), t.sin(), 0.0);
    let p2 = u(t2) * l2;
    let p3 = p2 + u(t3) * l3;
    let p4 = p3 + u(t4) * l4;
    let p5 = p4 + u(t5) * l5;
    let at = JointPlacement::at;
    // joint order by id: 12, 15, 23, 34, 45
    Configuration {
        joints: vec![at(Vector3::zeros()), at(p5), at(p2), at(p3), at(p4)],
        task_point: p3 + u(t4) * (l4 / 2.0),
    }
}
