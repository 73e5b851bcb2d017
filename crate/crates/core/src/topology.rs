//! Manipulator topologies: links joined by typed joints, forming an
//! undirected multigraph with a designated base and end-effector link.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kinematic joint types supported by the velocity formulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Cylindrical,
    Spherical,
}

impl JointKind {
    /// Scalar joint-rate components carried by this kind, in canonical order.
    pub fn components(self) -> &'static [Component] {
        match self {
            JointKind::Revolute => &[Component::Rotation],
            JointKind::Prismatic => &[Component::Translation],
            JointKind::Cylindrical => &[Component::Rotation, Component::Translation],
            JointKind::Spherical => &[Component::SpinX, Component::SpinY, Component::SpinZ],
        }
    }

    pub fn arity(self) -> usize {
        self.components().len()
    }

    /// Revolute, prismatic and cylindrical joints carry an axis; spherical joints do not.
    pub fn has_axis(self) -> bool {
        !matches!(self, JointKind::Spherical)
    }

    pub fn symbol(self) -> char {
        match self {
            JointKind::Revolute => 'R',
            JointKind::Prismatic => 'P',
            JointKind::Cylindrical => 'C',
            JointKind::Spherical => 'S',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r" | "revolute" => Some(JointKind::Revolute),
            "p" | "prismatic" => Some(JointKind::Prismatic),
            "c" | "cylindrical" => Some(JointKind::Cylindrical),
            "s" | "spherical" => Some(JointKind::Spherical),
            _ => None,
        }
    }
}

/// One scalar velocity component of a joint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    /// Rotation rate about the joint axis.
    Rotation,
    /// Sliding rate along the joint axis.
    Translation,
    SpinX,
    SpinY,
    SpinZ,
}

impl Component {
    pub fn symbol(self) -> &'static str {
        match self {
            Component::Rotation => "theta",
            Component::Translation => "d",
            Component::SpinX => "omega_x",
            Component::SpinY => "omega_y",
            Component::SpinZ => "omega_z",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s.trim() {
            "theta" | "rotation" => Some(Component::Rotation),
            "d" | "translation" => Some(Component::Translation),
            "omega_x" => Some(Component::SpinX),
            "omega_y" => Some(Component::SpinY),
            "omega_z" => Some(Component::SpinZ),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointId(pub String);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LinkId {
    fn from(s: &str) -> Self {
        LinkId(s.to_owned())
    }
}

impl From<&str> for JointId {
    fn from(s: &str) -> Self {
        JointId(s.to_owned())
    }
}

/// A joint connecting `links.0` (inner, the reference) to `links.1` (outer).
/// Joint rates describe the motion of the outer link relative to the inner one.
#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub id: JointId,
    pub kind: JointKind,
    pub links: (usize, usize),
}

/// A single scalar joint-rate variable: joint index plus component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VelocityVar {
    pub joint: usize,
    pub component: Component,
}

/// Unvalidated topology description, as read from a file or built in code.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TopologySpec {
    pub name: String,
    pub dof: Option<usize>,
    pub links: Vec<String>,
    /// (id, kind, inner link, outer link)
    pub joints: Vec<(String, JointKind, String, String)>,
    pub base: String,
    pub end_effector: String,
    /// (joint id, component)
    pub actuated: Vec<(String, Component)>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("graph is disconnected: {0}")]
    DisconnectedGraph(String),
    #[error("unknown link `{link}` referenced by {context}")]
    UnknownLink { link: String, context: String },
    #[error("invalid actuation selector: {0}")]
    InvalidActuationSelector(String),
    #[error("duplicate joint id `{0}`")]
    DuplicateJointId(String),
    #[error("duplicate link id `{0}`")]
    DuplicateLinkId(String),
}

/// A validated manipulator topology.
///
/// Links and joints are stored sorted by id; every index-based API in the crate
/// refers to these sorted positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    name: String,
    dof: Option<usize>,
    links: Vec<LinkId>,
    joints: Vec<Joint>,
    base: usize,
    end_effector: usize,
    actuated: BTreeSet<VelocityVar>,
}

impl Topology {
    pub fn build(spec: &TopologySpec) -> Result<Self, TopologyError> {
        let mut links: Vec<LinkId> = spec.links.iter().map(|l| LinkId(l.clone())).collect();
        links.sort();
        for w in links.windows(2) {
            if w[0] == w[1] {
                return Err(TopologyError::DuplicateLinkId(w[0].0.clone()));
            }
        }
        let link_index = |name: &str, context: &str| -> Result<usize, TopologyError> {
            links
                .binary_search_by(|l| l.0.as_str().cmp(name))
                .map_err(|_| TopologyError::UnknownLink {
                    link: name.to_owned(),
                    context: context.to_owned(),
                })
        };

        let base = link_index(&spec.base, "base")?;
        let end_effector = link_index(&spec.end_effector, "end_effector")?;
        if base == end_effector {
            return Err(TopologyError::DisconnectedGraph(
                "base and end-effector must be distinct links".into(),
            ));
        }

        let mut joints = Vec::with_capacity(spec.joints.len());
        for (id, kind, inner, outer) in &spec.joints {
            let ctx = format!("joint `{id}`");
            let i = link_index(inner, &ctx)?;
            let j = link_index(outer, &ctx)?;
            if i == j {
                return Err(TopologyError::DisconnectedGraph(format!(
                    "joint `{id}` connects link `{inner}` to itself"
                )));
            }
            joints.push(Joint {
                id: JointId(id.clone()),
                kind: *kind,
                links: (i, j),
            });
        }
        joints.sort_by(|a, b| a.id.cmp(&b.id));
        for w in joints.windows(2) {
            if w[0].id == w[1].id {
                return Err(TopologyError::DuplicateJointId(w[0].id.0.clone()));
            }
        }

        let mut actuated = BTreeSet::new();
        for (jid, component) in &spec.actuated {
            let joint = joints
                .binary_search_by(|j| j.id.0.as_str().cmp(jid))
                .map_err(|_| {
                    TopologyError::InvalidActuationSelector(format!("no joint with id `{jid}`"))
                })?;
            let kind = joints[joint].kind;
            let allowed = matches!(component, Component::Rotation | Component::Translation)
                && kind.components().contains(component);
            if !allowed {
                return Err(TopologyError::InvalidActuationSelector(format!(
                    "component `{}` cannot be actuated on {:?} joint `{jid}`",
                    component.symbol(),
                    kind
                )));
            }
            if !actuated.insert(VelocityVar {
                joint,
                component: *component,
            }) {
                return Err(TopologyError::InvalidActuationSelector(format!(
                    "`{}` of joint `{jid}` is actuated twice",
                    component.symbol()
                )));
            }
        }

        let topo = Topology {
            name: spec.name.clone(),
            dof: spec.dof,
            links,
            joints,
            base,
            end_effector,
            actuated,
        };
        let reach = topo.reachable_from(topo.base, &[]);
        if let Some(lost) = (0..topo.links.len()).find(|&l| !reach[l]) {
            return Err(TopologyError::DisconnectedGraph(format!(
                "link `{}` is not connected to the base",
                topo.links[lost]
            )));
        }
        Ok(topo)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> Option<usize> {
        self.dof
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn end_effector(&self) -> usize {
        self.end_effector
    }

    pub fn actuated(&self) -> &BTreeSet<VelocityVar> {
        &self.actuated
    }

    pub fn joint_index(&self, id: &str) -> Option<usize> {
        self.joints
            .binary_search_by(|j| j.id.0.as_str().cmp(id))
            .ok()
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.binary_search_by(|l| l.0.as_str().cmp(id)).ok()
    }

    /// Joint indices incident to `link`.
    pub fn incident_joints(&self, link: usize) -> impl Iterator<Item = usize> + '_ {
        self.joints
            .iter()
            .enumerate()
            .filter(move |(_, j)| j.links.0 == link || j.links.1 == link)
            .map(|(k, _)| k)
    }

    /// Converts back into an unvalidated spec (links and joints in id order).
    pub fn to_spec(&self) -> TopologySpec {
        TopologySpec {
            name: self.name.clone(),
            dof: self.dof,
            links: self.links.iter().map(|l| l.0.clone()).collect(),
            joints: self
                .joints
                .iter()
                .map(|j| {
                    (
                        j.id.0.clone(),
                        j.kind,
                        self.links[j.links.0].0.clone(),
                        self.links[j.links.1].0.clone(),
                    )
                })
                .collect(),
            base: self.links[self.base].0.clone(),
            end_effector: self.links[self.end_effector].0.clone(),
            actuated: self
                .actuated
                .iter()
                .map(|v| (self.joints[v.joint].id.0.clone(), v.component))
                .collect(),
        }
    }

    /// Human-readable label of a velocity variable, e.g. `theta_13`.
    pub fn var_label(&self, v: VelocityVar) -> String {
        format!("{}_{}", v.component.symbol(), self.joints[v.joint].id)
    }

    fn reachable_from(&self, start: usize, removed: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.links.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(l) = queue.pop_front() {
            for (k, j) in self.joints.iter().enumerate() {
                if removed.contains(&k) {
                    continue;
                }
                let other = if j.links.0 == l {
                    j.links.1
                } else if j.links.1 == l {
                    j.links.0
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    queue.push_back(other);
                }
            }
        }
        seen
    }

    /// Simple paths between two arbitrary links, lexicographically ordered by joint id sequence.
    pub fn paths_between(&self, from: usize, to: usize) -> Vec<Path> {
        let mut out = Vec::new();
        if from == to {
            return out;
        }
        let mut on_path = vec![false; self.links.len()];
        let mut links = vec![from];
        let mut steps = Vec::new();
        on_path[from] = true;
        self.dfs(to, &mut on_path, &mut links, &mut steps, &mut out);
        // joints are sorted by id, so index order is id order
        out.sort_by(|a, b| {
            a.steps
                .iter()
                .map(|s| s.joint)
                .cmp(b.steps.iter().map(|s| s.joint))
        });
        out
    }

    fn dfs(
        &self,
        target: usize,
        on_path: &mut [bool],
        links: &mut Vec<usize>,
        steps: &mut Vec<PathStep>,
        out: &mut Vec<Path>,
    ) {
        let here = *links.last().expect("path never empty");
        for (k, j) in self.joints.iter().enumerate() {
            let (next, direction) = if j.links.0 == here {
                (j.links.1, Direction::Forward)
            } else if j.links.1 == here {
                (j.links.0, Direction::Reverse)
            } else {
                continue;
            };
            if on_path[next] {
                continue;
            }
            steps.push(PathStep {
                joint: k,
                direction,
            });
            links.push(next);
            if next == target {
                out.push(Path {
                    links: links.clone(),
                    steps: steps.clone(),
                });
            } else {
                on_path[next] = true;
                self.dfs(target, on_path, links, steps, out);
                on_path[next] = false;
            }
            links.pop();
            steps.pop();
        }
    }
}

/// Traversal sense of a joint along a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Inner link to outer link, as declared.
    Forward,
    /// Outer link to inner link; joint contributions are negated.
    Reverse,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub joint: usize,
    pub direction: Direction,
}

/// Alternating link/joint sequence from one link to another.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    /// Visited links; `links.len() == steps.len() + 1`.
    pub links: Vec<usize>,
    pub steps: Vec<PathStep>,
}

impl Path {
    /// Renders the path as `L1-13-L3-35-L5`.
    pub fn describe(&self, t: &Topology) -> String {
        let mut s = t.links[self.links[0]].0.clone();
        for (step, link) in self.steps.iter().zip(&self.links[1..]) {
            s.push('-');
            s.push_str(&t.joints[step.joint].id.0);
            s.push('-');
            s.push_str(&t.links[*link].0);
        }
        s
    }
}

/// All simple base-to-end-effector paths, lexicographically ordered by joint id sequence.
pub fn enumerate_paths(t: &Topology) -> Vec<Path> {
    t.paths_between(t.base, t.end_effector)
}

/// Split of all scalar joint rates into actuated and passive variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VelocityInventory {
    pub active: Vec<VelocityVar>,
    pub passive: Vec<VelocityVar>,
}

impl VelocityInventory {
    pub fn len(&self) -> usize {
        self.active.len() + self.passive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Active variables followed by passive ones.
    pub fn all(&self) -> impl Iterator<Item = VelocityVar> + '_ {
        self.active.iter().chain(&self.passive).copied()
    }
}

/// Lists every scalar joint rate, joints in id order and components in canonical order.
pub fn passive_velocity_inventory(t: &Topology) -> VelocityInventory {
    let mut active = Vec::new();
    let mut passive = Vec::new();
    for (k, j) in t.joints.iter().enumerate() {
        for &component in j.kind.components() {
            let v = VelocityVar {
                joint: k,
                component,
            };
            if t.actuated.contains(&v) {
                active.push(v);
            } else {
                passive.push(v);
            }
        }
    }
    VelocityInventory { active, passive }
}

/// A link set that can spin freely about the line through its two bounding
/// spherical joints without affecting the end-effector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperfluousAssembly {
    /// Link indices, ascending.
    pub links: Vec<usize>,
    /// The two bounding spherical joints, ascending.
    pub spherical_joints: (usize, usize),
    /// Link whose absolute angular velocity carries the spin constraint.
    pub representative: usize,
}

/// Finds every maximal connected link set attached to the rest of the
/// mechanism only through exactly two spherical joints.
///
/// Sets containing the base or the end-effector are not reported.
pub fn detect_superfluous(t: &Topology) -> Vec<SuperfluousAssembly> {
    let spherical: Vec<usize> = t
        .joints
        .iter()
        .enumerate()
        .filter(|(_, j)| j.kind == JointKind::Spherical)
        .map(|(k, _)| k)
        .collect();
    let mut found: BTreeMap<Vec<usize>, SuperfluousAssembly> = BTreeMap::new();
    for (a, &s1) in spherical.iter().enumerate() {
        for &s2 in &spherical[a + 1..] {
            let removed = [s1, s2];
            let from_base = t.reachable_from(t.base, &removed);
            let mut assigned = from_base.clone();
            for start in 0..t.links.len() {
                if assigned[start] {
                    continue;
                }
                let comp = t.reachable_from(start, &removed);
                let members: Vec<usize> = (0..t.links.len()).filter(|&l| comp[l]).collect();
                for &m in &members {
                    assigned[m] = true;
                }
                if comp[t.end_effector] {
                    continue;
                }
                // boundary edges of the component in the full graph
                let crossing: Vec<usize> = t
                    .joints
                    .iter()
                    .enumerate()
                    .filter(|(_, j)| comp[j.links.0] != comp[j.links.1])
                    .map(|(k, _)| k)
                    .collect();
                if crossing != [s1, s2] {
                    continue;
                }
                let j1 = &t.joints[s1];
                let representative = if comp[j1.links.0] {
                    j1.links.0
                } else {
                    j1.links.1
                };
                found.entry(members.clone()).or_insert(SuperfluousAssembly {
                    links: members,
                    spherical_joints: (s1, s2),
                    representative,
                });
            }
        }
    }
    found.into_values().collect()
}
