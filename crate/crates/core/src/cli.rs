//! Command implementations behind the `dimsynth` binary. Each returns the
//! process exit code: 0 success, 1 synthesis or singularity failure, 2 input error.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use serde::Serialize;

use crate::io::{self, DesignSource};
use crate::jacobian::{
    type2_matrices, Configuration, JacobianError, KinematicSystem, TaskSpace, Type2,
};
use crate::metrics::{self, MetricReport};
use crate::optimizer::{evaluate_design, DesignProblem, DesignVector, SynthesisOptions};
use crate::synthesis::{derive_link_lengths, rank_prescription, run_catalog, LinkSegment};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

fn write_matrix(out: &mut dyn Write, name: &str, m: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(out, "{name} ({}x{}):", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:>24e}", m[(r, c)]))
            .collect();
        writeln!(out, "  [{} ]", row.join(""))?;
    }
    Ok(())
}

fn write_report(out: &mut dyn Write, r: &MetricReport) -> std::io::Result<()> {
    writeln!(out, "mu     = {}", r.mu)?;
    match r.mu_bar {
        Some(v) => writeln!(out, "mu_bar = {v}")?,
        None => writeln!(out, "mu_bar = undefined")?,
    }
    writeln!(out, "kappa  = {}", r.kappa)?;
    match r.length {
        Some(l) => writeln!(out, "L      = {l}")?,
        None => writeln!(out, "L      = n/a (all joints prismatic)")?,
    }
    if let Some(d) = r.det_scaled_mu {
        writeln!(out, "mu/L^k = {d}")?;
    }
    let sigma: Vec<String> = r.sigma.iter().map(|s| s.to_string()).collect();
    writeln!(out, "sigma  = [{}]", sigma.join(", "))?;
    for w in &r.warnings {
        writeln!(out, "warning: {w:?}")?;
    }
    Ok(())
}

fn write_placements(
    out: &mut dyn Write,
    sys: &KinematicSystem,
    cfg: &Configuration,
) -> std::io::Result<()> {
    writeln!(out, "joints (angles in degrees):")?;
    for (j, p) in sys.topology().joints().iter().zip(&cfg.joints) {
        let r = p.position;
        if j.kind.has_axis() {
            writeln!(
                out,
                "  {:<6} {}  r = ({}, {}, {})  beta = {:.2}  phi = {:.2}",
                j.id,
                j.kind.symbol(),
                r.x,
                r.y,
                r.z,
                p.beta.to_degrees(),
                p.phi.to_degrees()
            )?;
        } else {
            writeln!(
                out,
                "  {:<6} {}  r = ({}, {}, {})",
                j.id,
                j.kind.symbol(),
                r.x,
                r.y,
                r.z
            )?;
        }
    }
    Ok(())
}

/// `jacobian TOPOLOGY CONFIG`
pub fn cmd_jacobian(
    topology: &Path,
    config: &Path,
    task: TaskSpace,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let t = match io::load_topology(topology) {
        Ok(t) => t,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let cfg = match io::load_configuration(config, &t) {
        Ok(c) => c,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let sys = KinematicSystem::new(t, task);
    let parts = match sys.assemble(&cfg) {
        Ok(p) => p,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    writeln!(
        out,
        "topology {}: {} path(s), {} active, {} passive",
        sys.topology().name(),
        sys.paths().len(),
        sys.inventory().active.len(),
        sys.inventory().passive.len()
    )?;
    for p in sys.paths() {
        writeln!(out, "  path {}", p.describe(sys.topology()))?;
    }
    let type2 = type2_matrices(&parts);
    let reduced = crate::jacobian::reduced_jacobian(&parts);
    match &type2 {
        Type2::Serial => writeln!(out, "serial: Ã/B̃ not applicable")?,
        Type2::Parallel {
            b_tilde, det_a2, ..
        } => {
            writeln!(out, "det(A2) = {det_a2:e}")?;
            writeln!(out, "Ã = det(A2)·I{}", parts.j1.nrows())?;
            write_matrix(out, "B̃", b_tilde)?;
            let sb = crate::linalg::singular_values(b_tilde);
            writeln!(out, "sigma(B̃) = {sb:?}")?;
        }
    }
    match reduced {
        Ok(red) => {
            write_matrix(out, "J̃", &red.jacobian)?;
            let report = metrics::evaluate(sys.topology(), &cfg, &red.jacobian, task);
            write_report(out, &report)?;
            Ok(EXIT_OK)
        }
        Err(JacobianError::SingularA2 { det }) => {
            writeln!(
                err,
                "error: type-2 singularity: A2 is singular (det = {det:e}); J̃ is undefined"
            )?;
            Ok(EXIT_FAILURE)
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            Ok(EXIT_INPUT)
        }
    }
}

#[derive(Serialize)]
struct Evaluation<'a> {
    name: &'a str,
    report: &'a MetricReport,
    segments: &'a [LinkSegment],
}

/// `evaluate TOPOLOGY DESIGN`
pub fn cmd_evaluate(
    topology: &Path,
    design: &Path,
    entry: Option<&str>,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let t = match io::load_topology(topology) {
        Ok(t) => t,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let source = match io::load_design(design, &t, entry) {
        Ok(s) => s,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let (cfg, report) = match source {
        DesignSource::Vector(file) => {
            let dv = DesignVector {
                labels: file.labels,
                values: file.values,
            };
            if let Err(e) = dv.validate(&t) {
                writeln!(err, "error: {e}")?;
                return Ok(EXIT_INPUT);
            }
            let problem = DesignProblem::new(&t, Vector3::from(file.task_point));
            let cfg = problem.configuration(&dv.values).expect("validated length");
            (cfg, evaluate_design(&problem, &dv.values))
        }
        DesignSource::Configuration(cfg) => {
            let sys = KinematicSystem::new(t.clone(), TaskSpace::Spatial);
            let report = sys
                .jacobian(&cfg)
                .map(|red| metrics::evaluate(&t, &cfg, &red.jacobian, TaskSpace::Spatial));
            (cfg, report)
        }
    };
    let segments = derive_link_lengths(&t, &cfg);
    let report = match report {
        Ok(r) => r,
        Err(JacobianError::SingularA2 { det }) => {
            writeln!(
                err,
                "warning: type-2 singularity (det(A2) = {det:e}); metrics undefined"
            )?;
            return Ok(EXIT_FAILURE);
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    match format {
        Format::Json => {
            let ev = Evaluation {
                name: t.name(),
                report: &report,
                segments: &segments,
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&ev).expect("serializable")
            )?;
        }
        Format::Text | Format::Csv => {
            writeln!(out, "topology {}", t.name())?;
            write_report(out, &report)?;
            let sys = KinematicSystem::new(t.clone(), TaskSpace::Spatial);
            write_placements(out, &sys, &cfg)?;
            writeln!(out, "link segments:")?;
            for s in &segments {
                writeln!(out, "  {:<4} {:<10} {:.4}", s.link, s.label, s.length)?;
            }
        }
    }
    Ok(EXIT_OK)
}

pub struct SynthesizeArgs<'a> {
    pub catalog: &'a Path,
    pub task_point: Vector3<f64>,
    pub options: SynthesisOptions,
    pub format: Format,
    pub out: Option<&'a Path>,
}

/// `synthesize CATALOG`
pub fn cmd_synthesize(
    args: &SynthesizeArgs<'_>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let catalog = match io::load_catalog(args.catalog) {
        Ok(c) => c,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let outcomes = match run_catalog(&catalog, args.task_point, &args.options) {
        Ok(o) => o,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(f) => {
                writeln!(err, "warning: {} failed: {}", f.name, f.error)?;
                failures.push(f);
            }
        }
    }
    let prescription = rank_prescription(&results);
    let text = match args.format {
        Format::Json => io::prescription_json(&prescription) + "\n",
        Format::Csv | Format::Text => io::prescription_csv(&prescription, &failures),
    };
    match args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                writeln!(err, "error: {}: {e}", path.display())?;
                return Ok(EXIT_INPUT);
            }
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(if results.is_empty() {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}
