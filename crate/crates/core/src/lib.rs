//! Velocity-transmission Jacobians, manipulability metrics and multi-start
//! dimensional synthesis for serial and parallel manipulator topologies.
//!
//! A [`topology::Topology`] is a multigraph of links joined by revolute,
//! prismatic, cylindrical and spherical joints. At a numeric
//! [`jacobian::Configuration`] the engine writes the end-effector twist along
//! every base-to-end-effector path, eliminates the passive joint rates and
//! returns the active-joint Jacobian together with the type-2 singularity
//! matrices. [`optimizer`] places and orients the joints to maximize
//! manipulability, and [`synthesis`] ranks a catalog of topologies.

pub mod cli;
pub mod five_link;
pub mod io;
pub mod jacobian;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod synthesis;
pub mod topology;

pub use jacobian::{Configuration, JacobianParts, JointPlacement, KinematicSystem, TaskSpace};
pub use metrics::MetricReport;
pub use synthesis::{Prescription, SynthesisResult};
pub use topology::{Component, JointKind, Topology, TopologySpec};
