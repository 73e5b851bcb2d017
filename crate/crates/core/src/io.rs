//! File formats: TOML topologies, catalogs and configurations, JSON design
//! vectors and prescriptions, CSV prescription tables.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::jacobian::{Configuration, JointPlacement};
use crate::synthesis::{EntryFailure, Prescription, PrescriptionRow, SynthesisResult};
use crate::topology::{Component, JointKind, Topology, TopologyError, TopologySpec};

/// Where a diagnostic points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Location {
    Line { line: usize, column: usize },
    Field(String),
    File,
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{}", render(.path, .location, .message))]
    Invalid {
        path: String,
        location: Location,
        message: String,
    },
}

fn render(path: &str, location: &Location, message: &str) -> String {
    match location {
        Location::Line { line, column } => format!("{path}:{line}:{column}: {message}"),
        Location::Field(f) => format!("{path}: field `{f}`: {message}"),
        Location::File => format!("{path}: {message}"),
    }
}

impl IoError {
    fn at(path: &str, src: &str, span: Option<Range<usize>>, message: impl fmt::Display) -> Self {
        let location = match span {
            Some(s) => {
                let (line, column) = line_col(src, s.start);
                Location::Line { line, column }
            }
            None => Location::File,
        };
        IoError::Invalid {
            path: path.to_owned(),
            location,
            message: message.to_string(),
        }
    }

    fn field(path: &str, field: impl Into<String>, message: impl fmt::Display) -> Self {
        IoError::Invalid {
            path: path.to_owned(),
            location: Location::Field(field.into()),
            message: message.to_string(),
        }
    }

    fn toml(path: &str, src: &str, e: toml::de::Error) -> Self {
        IoError::at(path, src, e.span(), e.message().trim())
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------- topology

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    name: String,
    #[serde(default)]
    dof: Option<usize>,
    links: Vec<String>,
    base: Spanned<String>,
    end_effector: Spanned<String>,
    #[serde(default)]
    joints: Vec<RawJoint>,
    #[serde(default)]
    actuated: Vec<RawActuated>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    id: Spanned<String>,
    kind: Spanned<String>,
    between: Spanned<[String; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActuated {
    joint: Spanned<String>,
    #[serde(default = "default_component")]
    component: Spanned<String>,
}

fn default_component() -> Spanned<String> {
    Spanned::new(0..0, "theta".to_owned())
}

#[derive(Serialize)]
struct OutTopology<'a> {
    name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    dof: Option<usize>,
    links: Vec<&'a str>,
    base: &'a str,
    end_effector: &'a str,
    joints: Vec<OutJoint<'a>>,
    actuated: Vec<OutActuated<'a>>,
}

#[derive(Serialize)]
struct OutJoint<'a> {
    id: &'a str,
    kind: String,
    between: [&'a str; 2],
}

#[derive(Serialize)]
struct OutActuated<'a> {
    joint: &'a str,
    component: &'a str,
}

fn span_of(s: Range<usize>) -> Option<Range<usize>> {
    (s.end > s.start).then_some(s)
}

fn build_topology(raw: RawTopology, path: &str, src: &str) -> Result<Topology, IoError> {
    let mut spec = TopologySpec {
        name: raw.name,
        dof: raw.dof,
        links: raw.links,
        base: raw.base.get_ref().clone(),
        end_effector: raw.end_effector.get_ref().clone(),
        ..Default::default()
    };
    for j in &raw.joints {
        let kind = JointKind::from_symbol(j.kind.get_ref()).ok_or_else(|| {
            IoError::at(
                path,
                src,
                span_of(j.kind.span()),
                format!(
                    "unknown joint kind `{}` (expected R, P, C or S)",
                    j.kind.get_ref()
                ),
            )
        })?;
        let [a, b] = j.between.get_ref().clone();
        spec.joints.push((j.id.get_ref().clone(), kind, a, b));
    }
    for a in &raw.actuated {
        let component = Component::from_symbol(a.component.get_ref()).ok_or_else(|| {
            IoError::at(
                path,
                src,
                span_of(a.component.span()),
                format!(
                    "unknown component `{}` (expected theta or d)",
                    a.component.get_ref()
                ),
            )
        })?;
        spec.actuated.push((a.joint.get_ref().clone(), component));
    }
    Topology::build(&spec).map_err(|e| {
        let span = match &e {
            TopologyError::UnknownLink { link, context } => {
                if context == "base" {
                    Some(raw.base.span())
                } else if context == "end_effector" {
                    Some(raw.end_effector.span())
                } else {
                    raw.joints
                        .iter()
                        .find(|j| j.between.get_ref().contains(link))
                        .map(|j| j.between.span())
                }
            }
            TopologyError::DuplicateJointId(id) => raw
                .joints
                .iter()
                .filter(|j| j.id.get_ref() == id)
                .nth(1)
                .map(|j| j.id.span()),
            TopologyError::InvalidActuationSelector(_) => {
                raw.actuated.first().map(|a| a.joint.span())
            }
            _ => None,
        };
        match span.and_then(span_of) {
            Some(s) => IoError::at(path, src, Some(s), &e),
            None => IoError::field(path, field_for(&e), &e),
        }
    })
}

fn field_for(e: &TopologyError) -> &'static str {
    match e {
        TopologyError::DisconnectedGraph(_) => "joints",
        TopologyError::UnknownLink { .. } => "links",
        TopologyError::InvalidActuationSelector(_) => "actuated",
        TopologyError::DuplicateJointId(_) => "joints",
        TopologyError::DuplicateLinkId(_) => "links",
    }
}

pub fn parse_topology(src: &str, path: &str) -> Result<Topology, IoError> {
    let raw: RawTopology = toml::from_str(src).map_err(|e| IoError::toml(path, src, e))?;
    build_topology(raw, path, src)
}

pub fn load_topology(path: &Path) -> Result<Topology, IoError> {
    parse_topology(&read(path)?, &path.display().to_string())
}

pub fn topology_to_toml(t: &Topology) -> String {
    let spec = t.to_spec();
    let out = OutTopology {
        name: &spec.name,
        dof: spec.dof,
        links: spec.links.iter().map(String::as_str).collect(),
        base: &spec.base,
        end_effector: &spec.end_effector,
        joints: spec
            .joints
            .iter()
            .map(|(id, kind, a, b)| OutJoint {
                id,
                kind: kind.symbol().to_string(),
                between: [a, b],
            })
            .collect(),
        actuated: spec
            .actuated
            .iter()
            .map(|(j, c)| OutActuated {
                joint: j,
                component: c.symbol(),
            })
            .collect(),
    };
    toml::to_string(&out).expect("topology serializes")
}

// ---------------------------------------------------------------- catalog

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    #[serde(default)]
    #[allow(dead_code)]
    name: Option<String>,
    #[serde(default)]
    include: Vec<Spanned<String>>,
    #[serde(default)]
    manipulator: Vec<RawTopology>,
}

/// Included files (resolved against the catalog's directory) followed by inline entries.
pub fn parse_catalog(src: &str, path: &str, base_dir: &Path) -> Result<Vec<Topology>, IoError> {
    let raw: RawCatalog = toml::from_str(src).map_err(|e| IoError::toml(path, src, e))?;
    let mut out = Vec::new();
    for inc in &raw.include {
        let file: PathBuf = base_dir.join(inc.get_ref());
        if !file.exists() {
            return Err(IoError::at(
                path,
                src,
                span_of(inc.span()),
                format!("included file `{}` not found", file.display()),
            ));
        }
        out.push(load_topology(&file)?);
    }
    for m in raw.manipulator {
        out.push(build_topology(m, path, src)?);
    }
    Ok(out)
}

pub fn load_catalog(path: &Path) -> Result<Vec<Topology>, IoError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_catalog(&read(path)?, &path.display().to_string(), dir)
}

// ---------------------------------------------------------------- configuration

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Deg,
    #[default]
    Rad,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    task_point: [f64; 3],
    #[serde(default)]
    angles: AngleUnit,
    #[serde(default)]
    joint: Vec<RawPlacement>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlacement {
    id: Spanned<String>,
    position: [f64; 3],
    beta: Option<f64>,
    phi: Option<f64>,
    axis: Option<[f64; 3]>,
}

pub fn parse_configuration(src: &str, path: &str, t: &Topology) -> Result<Configuration, IoError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| IoError::toml(path, src, e))?;
    let to_rad = |v: f64| match raw.angles {
        AngleUnit::Deg => v.to_radians(),
        AngleUnit::Rad => v,
    };
    let mut joints: Vec<Option<JointPlacement>> = vec![None; t.joints().len()];
    for p in &raw.joint {
        let span = span_of(p.id.span());
        let Some(k) = t.joint_index(p.id.get_ref()) else {
            return Err(IoError::at(
                path,
                src,
                span,
                format!("no joint `{}` in topology", p.id.get_ref()),
            ));
        };
        if joints[k].is_some() {
            return Err(IoError::at(
                path,
                src,
                span,
                format!("joint `{}` placed twice", p.id.get_ref()),
            ));
        }
        let position = Vector3::from(p.position);
        let placement = match (p.beta, p.phi, p.axis) {
            (_, _, Some(axis)) => {
                let axis = Vector3::from(axis);
                if axis.norm() == 0.0 {
                    return Err(IoError::at(path, src, span, "zero axis vector"));
                }
                JointPlacement::with_axis(position, axis)
            }
            (Some(b), Some(f), None) => JointPlacement::new(position, to_rad(b), to_rad(f)),
            (None, None, None) if !t.joints()[k].kind.has_axis() => JointPlacement::at(position),
            _ => {
                return Err(IoError::at(
                    path,
                    src,
                    span,
                    format!(
                        "joint `{}` needs `beta` and `phi`, or `axis`",
                        p.id.get_ref()
                    ),
                ))
            }
        };
        joints[k] = Some(placement);
    }
    let missing: Vec<&str> = t
        .joints()
        .iter()
        .zip(&joints)
        .filter(|(_, p)| p.is_none())
        .map(|(j, _)| j.id.0.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(IoError::field(
            path,
            "joint",
            format!("missing placements for {}", missing.join(", ")),
        ));
    }
    Ok(Configuration {
        joints: joints
            .into_iter()
            .map(|p| p.expect("checked above"))
            .collect(),
        task_point: Vector3::from(raw.task_point),
    })
}

pub fn load_configuration(path: &Path, t: &Topology) -> Result<Configuration, IoError> {
    parse_configuration(&read(path)?, &path.display().to_string(), t)
}

// ---------------------------------------------------------------- design vectors

/// A labelled design vector with its task point, as read by `evaluate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub task_point: [f64; 3],
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

/// Everything `evaluate` accepts as a design source.
#[derive(Clone, Debug, PartialEq)]
pub enum DesignSource {
    Vector(DesignFile),
    Configuration(Configuration),
}

/// Reads a design from a TOML configuration, a JSON design vector, a single
/// synthesis result, or a synthesis output array (picking `entry` by name, or
/// the topology's own name).
pub fn load_design(
    path: &Path,
    t: &Topology,
    entry: Option<&str>,
) -> Result<DesignSource, IoError> {
    let display = path.display().to_string();
    let src = read(path)?;
    if path.extension().is_some_and(|e| e == "toml") {
        return Ok(DesignSource::Configuration(parse_configuration(
            &src, &display, t,
        )?));
    }
    let json_err = |e: serde_json::Error| IoError::Invalid {
        path: display.clone(),
        location: Location::Line {
            line: e.line(),
            column: e.column(),
        },
        message: e.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(&src).map_err(json_err)?;
    let from_result = |r: SynthesisResult| {
        DesignSource::Vector(DesignFile {
            task_point: r.task_point,
            labels: r.design.labels,
            values: r.design.values,
        })
    };
    if value.is_array() {
        let rows: Vec<PrescriptionRow> = serde_json::from_str(&src).map_err(json_err)?;
        let want = entry.unwrap_or(t.name());
        let row = rows
            .into_iter()
            .find(|r| r.result.name == want)
            .ok_or_else(|| IoError::field(&display, "name", format!("no entry named `{want}`")))?;
        return Ok(from_result(row.result));
    }
    if value.get("design").is_some() {
        let r: SynthesisResult = serde_json::from_str(&src).map_err(json_err)?;
        return Ok(from_result(r));
    }
    Ok(DesignSource::Vector(
        serde_json::from_str(&src).map_err(json_err)?,
    ))
}

// ---------------------------------------------------------------- prescriptions

pub const CSV_HEADER: [&str; 7] = ["S.No.", "Name", "mu_bar", "kappa", "i_kappa", "mu", "f"];

fn fixed(v: f64, digits: usize) -> String {
    if v.is_finite() {
        format!("{v:.digits$}")
    } else {
        "inf".to_owned()
    }
}

/// Table rows rounded for presentation; failures are appended with `f = failed`.
pub fn prescription_csv(p: &Prescription, failures: &[EntryFailure]) -> String {
    let with_ajv = p.rows.iter().any(|r| r.result.parallel);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if with_ajv {
        header.push("AJV");
    }
    w.write_record(&header).expect("in-memory write");
    for row in &p.rows {
        let r = &row.result;
        let mut rec = vec![
            row.s_no.to_string(),
            r.name.clone(),
            r.mu_bar.map_or_else(|| "nan".to_owned(), |v| fixed(v, 4)),
            fixed(r.kappa, 1),
            row.i_kappa.to_string(),
            fixed(r.mu, 1),
            r.objective.as_str().to_owned(),
        ];
        if with_ajv {
            rec.push(if r.parallel {
                r.active.join(" ")
            } else {
                String::new()
            });
        }
        w.write_record(&rec).expect("in-memory write");
    }
    for (k, f) in failures.iter().enumerate() {
        let mut rec = vec![
            (p.rows.len() + k + 1).to_string(),
            f.name.clone(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            format!("failed: {}", f.error),
        ];
        if with_ajv {
            rec.push(String::new());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv output is utf-8")
}

pub fn prescription_json(p: &Prescription) -> String {
    serde_json::to_string_pretty(&p.rows).expect("prescription serializes")
}

pub fn parse_prescription_json(src: &str) -> Result<Vec<PrescriptionRow>, serde_json::Error> {
    serde_json::from_str(src)
}
