//! Velocity-transmission assembly: per-path twist descriptions, loop-closure
//! matrices, the reduced active-joint Jacobian and the type-2 singularity pair.

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::topology::{
    detect_superfluous, enumerate_paths, passive_velocity_inventory, JointKind, Path,
    SuperfluousAssembly, Topology, VelocityInventory,
};

/// Relative singularity threshold for `det(A2)`.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// Placement of one joint: position plus axis direction in spherical angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPlacement {
    pub position: Vector3<f64>,
    /// Polar angle from +z, radians.
    pub beta: f64,
    /// Azimuth in the xy-plane, radians.
    pub phi: f64,
}

impl JointPlacement {
    pub fn new(position: Vector3<f64>, beta: f64, phi: f64) -> Self {
        JointPlacement {
            position,
            beta,
            phi,
        }
    }

    /// Position only; the angles are left at zero (axis = +z).
    pub fn at(position: Vector3<f64>) -> Self {
        JointPlacement::new(position, 0.0, 0.0)
    }

    /// Builds the placement from an axis direction (need not be normalized).
    pub fn with_axis(position: Vector3<f64>, axis: Vector3<f64>) -> Self {
        let n = axis.normalize();
        let beta = n.z.clamp(-1.0, 1.0).acos();
        let mut phi = n.y.atan2(n.x);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        JointPlacement::new(position, beta, phi)
    }

    pub fn axis(&self) -> Vector3<f64> {
        let (sb, cb) = self.beta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(sb * cp, sb * sp, cb)
    }
}

/// Numeric placement of every joint of a topology (indexed like `Topology::joints`)
/// together with the task point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub joints: Vec<JointPlacement>,
    pub task_point: Vector3<f64>,
}

/// Which components of the end-effector twist `(vx, vy, vz, ωx, ωy, ωz)` are kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskSpace {
    #[default]
    Spatial,
    /// Motion in the xy-plane: rows `(vx, vy, ωz)`.
    Planar,
}

impl TaskSpace {
    pub fn linear_rows(self) -> &'static [usize] {
        match self {
            TaskSpace::Spatial => &[0, 1, 2],
            TaskSpace::Planar => &[0, 1],
        }
    }

    pub fn angular_rows(self) -> &'static [usize] {
        match self {
            TaskSpace::Spatial => &[3, 4, 5],
            TaskSpace::Planar => &[5],
        }
    }

    /// Kept twist rows, linear first.
    pub fn rows(self) -> Vec<usize> {
        self.linear_rows()
            .iter()
            .chain(self.angular_rows())
            .copied()
            .collect()
    }

    pub fn dim(self) -> usize {
        self.linear_rows().len() + self.angular_rows().len()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobianError {
    #[error("loop-closure matrix A2 is {rows}x{passive}; it must be square (topology/actuation mismatch)")]
    NonSquareA2 { rows: usize, passive: usize },
    #[error("type-2 singularity: det(A2) = {det:e} is below tolerance")]
    SingularA2 { det: f64 },
    #[error("configuration has {got} joint placements, topology has {expected} joints")]
    ConfigurationMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Append one spin-suppression row per superfluous assembly.
    pub superfluous_fix: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            superfluous_fix: true,
        }
    }
}

/// Twist columns `(v; ω)` a joint contributes at the task point, one per scalar rate.
///
/// `direction` is +1 when the joint is traversed from its inner to its outer link.
pub fn joint_contribution(
    kind: JointKind,
    direction: f64,
    position: &Vector3<f64>,
    axis: &Vector3<f64>,
    task_point: &Vector3<f64>,
) -> Vec<Vector6<f64>> {
    let arm = task_point - position;
    let revolute = |n: &Vector3<f64>| {
        let v = n.cross(&arm);
        Vector6::new(v.x, v.y, v.z, n.x, n.y, n.z) * direction
    };
    let prismatic = |n: &Vector3<f64>| Vector6::new(n.x, n.y, n.z, 0.0, 0.0, 0.0) * direction;
    match kind {
        JointKind::Revolute => vec![revolute(axis)],
        JointKind::Prismatic => vec![prismatic(axis)],
        JointKind::Cylindrical => vec![revolute(axis), prismatic(axis)],
        JointKind::Spherical => [Vector3::x(), Vector3::y(), Vector3::z()]
            .iter()
            .map(revolute)
            .collect(),
    }
}

/// The assembled velocity-transmission system at one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianParts {
    pub task_space: TaskSpace,
    /// Task rows x active rates, from the first path.
    pub j1: DMatrix<f64>,
    /// Task rows x passive rates, from the first path.
    pub j2: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
}

impl JacobianParts {
    pub fn is_serial(&self) -> bool {
        self.j2.ncols() == 0 && self.a2.nrows() == 0
    }
}

/// Result of eliminating the passive rates.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduced {
    pub jacobian: DMatrix<f64>,
    /// `None` for serial topologies.
    pub det_a2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Type2 {
    /// No loop closure, so no type-2 singularity matrices.
    Serial,
    Parallel {
        a_tilde: DMatrix<f64>,
        b_tilde: DMatrix<f64>,
        det_a2: f64,
    },
}

/// Topology-level analysis shared by every configuration: paths, rate
/// inventory and superfluous assemblies.
#[derive(Clone, Debug)]
pub struct KinematicSystem {
    topology: Topology,
    task_space: TaskSpace,
    paths: Vec<Path>,
    inventory: VelocityInventory,
    superfluous: Vec<SuperfluousAssembly>,
    /// Path from the base to each superfluous representative link.
    representative_paths: Vec<Path>,
    /// Column index of each (joint, component) in active-then-passive order.
    column: Vec<Vec<usize>>,
}

impl KinematicSystem {
    pub fn new(topology: Topology, task_space: TaskSpace) -> Self {
        let paths = enumerate_paths(&topology);
        let inventory = passive_velocity_inventory(&topology);
        let superfluous = detect_superfluous(&topology);
        let representative_paths = superfluous
            .iter()
            .map(|s| {
                topology
                    .paths_between(topology.base(), s.representative)
                    .into_iter()
                    .next()
                    .expect("connected graph has a path to every link")
            })
            .collect();
        let mut column: Vec<Vec<usize>> = topology
            .joints()
            .iter()
            .map(|j| vec![0; j.kind.arity()])
            .collect();
        for (c, v) in inventory.all().enumerate() {
            let kind = topology.joints()[v.joint].kind;
            let slot = kind
                .components()
                .iter()
                .position(|&k| k == v.component)
                .expect("inventory component belongs to the joint kind");
            column[v.joint][slot] = c;
        }
        KinematicSystem {
            topology,
            task_space,
            paths,
            inventory,
            superfluous,
            representative_paths,
            column,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn task_space(&self) -> TaskSpace {
        self.task_space
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn inventory(&self) -> &VelocityInventory {
        &self.inventory
    }

    pub fn superfluous(&self) -> &[SuperfluousAssembly] {
        &self.superfluous
    }

    pub fn is_serial(&self) -> bool {
        self.paths.len() == 1 && self.inventory.passive.is_empty()
    }

    pub fn n_active(&self) -> usize {
        self.inventory.active.len()
    }

    fn check(&self, cfg: &Configuration) -> Result<(), JacobianError> {
        let expected = self.topology.joints().len();
        if cfg.joints.len() != expected {
            return Err(JacobianError::ConfigurationMismatch {
                expected,
                got: cfg.joints.len(),
            });
        }
        Ok(())
    }

    /// Full 6-row twist description of a path: column `c` is the twist produced
    /// by a unit rate of variable `c` (active then passive order).
    fn path_twist_full(&self, path: &Path, cfg: &Configuration) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(6, self.inventory.len());
        for step in &path.steps {
            let joint = &self.topology.joints()[step.joint];
            let place = &cfg.joints[step.joint];
            let cols = joint_contribution(
                joint.kind,
                step.direction.sign(),
                &place.position,
                &place.axis(),
                &cfg.task_point,
            );
            for (slot, col) in cols.iter().enumerate() {
                m.set_column(self.column[step.joint][slot], col);
            }
        }
        m
    }

    fn restrict(&self, full: &DMatrix<f64>) -> DMatrix<f64> {
        full.select_rows(self.task_space.rows().iter())
    }

    /// Task-space twist description of every path, in path order.
    pub fn path_twists(&self, cfg: &Configuration) -> Result<Vec<DMatrix<f64>>, JacobianError> {
        self.check(cfg)?;
        Ok(self
            .paths
            .iter()
            .map(|p| self.restrict(&self.path_twist_full(p, cfg)))
            .collect())
    }

    pub fn assemble(&self, cfg: &Configuration) -> Result<JacobianParts, JacobianError> {
        self.assemble_with(cfg, AssemblyOptions::default())
    }

    pub fn assemble_with(
        &self,
        cfg: &Configuration,
        opts: AssemblyOptions,
    ) -> Result<JacobianParts, JacobianError> {
        self.check(cfg)?;
        let n_vars = self.inventory.len();
        let n_active = self.n_active();
        let full: Vec<DMatrix<f64>> = self
            .paths
            .iter()
            .map(|p| self.path_twist_full(p, cfg))
            .collect();
        let first = &full[0];

        let mut rows: Vec<DVector<f64>> = Vec::new();
        for block in [
            self.task_space.linear_rows(),
            self.task_space.angular_rows(),
        ] {
            for other in &full[1..] {
                for &r in block {
                    rows.push((other.row(r) - first.row(r)).transpose());
                }
            }
        }
        if opts.superfluous_fix {
            for (s, path) in self.superfluous.iter().zip(&self.representative_paths) {
                let omega = self.path_twist_full(path, cfg).rows(3, 3).into_owned();
                let (s1, s2) = s.spherical_joints;
                let chord = cfg.joints[s1].position - cfg.joints[s2].position;
                rows.push((chord.transpose() * omega).transpose());
            }
        }

        let n_passive = self.inventory.passive.len();
        if rows.len() != n_passive {
            return Err(JacobianError::NonSquareA2 {
                rows: rows.len(),
                passive: n_passive,
            });
        }
        let a = if rows.is_empty() {
            DMatrix::zeros(0, n_vars)
        } else {
            DMatrix::from_columns(&rows).transpose()
        };
        let j = self.restrict(first);
        Ok(JacobianParts {
            task_space: self.task_space,
            j1: j.columns(0, n_active).into_owned(),
            j2: j.columns(n_active, n_passive).into_owned(),
            a1: a.columns(0, n_active).into_owned(),
            a2: a.columns(n_active, n_passive).into_owned(),
        })
    }

    /// Shorthand for `assemble` followed by `reduced_jacobian`.
    pub fn jacobian(&self, cfg: &Configuration) -> Result<Reduced, JacobianError> {
        reduced_jacobian(&self.assemble(cfg)?)
    }
}

/// One-shot assembly without keeping the precomputed analysis.
pub fn assemble_system(
    t: &Topology,
    cfg: &Configuration,
    task_space: TaskSpace,
    opts: AssemblyOptions,
) -> Result<JacobianParts, JacobianError> {
    KinematicSystem::new(t.clone(), task_space).assemble_with(cfg, opts)
}

fn is_singular(a2: &DMatrix<f64>, det: f64) -> bool {
    let n = a2.nrows() as i32;
    let scale = linalg::frobenius(a2).powi(n);
    !det.is_finite() || det.abs() < SINGULAR_TOLERANCE * scale || scale == 0.0
}

/// `J̃ = J1 − J2 A2⁻¹ A1`, or `J1` for a serial topology.
pub fn reduced_jacobian(parts: &JacobianParts) -> Result<Reduced, JacobianError> {
    if parts.is_serial() {
        return Ok(Reduced {
            jacobian: parts.j1.clone(),
            det_a2: None,
        });
    }
    let det = linalg::det(&parts.a2);
    if is_singular(&parts.a2, det) {
        return Err(JacobianError::SingularA2 { det });
    }
    let x = parts
        .a2
        .clone()
        .lu()
        .solve(&parts.a1)
        .ok_or(JacobianError::SingularA2 { det })?;
    Ok(Reduced {
        jacobian: &parts.j1 - &parts.j2 * x,
        det_a2: Some(det),
    })
}

/// `Ã = det(A2) I` and `B̃ = J2 adj(A2) A1 − det(A2) J1`; defined at singular A2.
pub fn type2_matrices(parts: &JacobianParts) -> Type2 {
    if parts.is_serial() {
        return Type2::Serial;
    }
    let det = linalg::det(&parts.a2);
    let n = parts.j1.nrows();
    let a_tilde = DMatrix::identity(n, n) * det;
    let b_tilde = &parts.j2 * linalg::adjugate(&parts.a2) * &parts.a1 - &parts.j1 * det;
    Type2::Parallel {
        a_tilde,
        b_tilde,
        det_a2: det,
    }
}

/// Labels of the active rates, e.g. `theta_13`.
pub fn active_labels(t: &Topology) -> Vec<String> {
    passive_velocity_inventory(t)
        .active
        .iter()
        .map(|v| t.var_label(*v))
        .collect()
}
