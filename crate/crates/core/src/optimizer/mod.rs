//! Constrained minimization and the multi-start synthesis driver.

pub mod design;
pub mod interior_point;
pub mod multistart;
pub mod objective;

pub use design::{layout, pack, unpack, Coordinate, DesignError, DesignVector};
pub use interior_point::{
    finite_difference_gradient, interior_point_minimize, BoxProblem, OptResult, SolverOptions,
    Termination, Tolerances,
};
pub use multistart::{evaluate_design, multi_start_synthesize, SynthesisError, SynthesisOptions};
pub use objective::{objective_f1, objective_f2, DesignProblem, ObjectiveError};
