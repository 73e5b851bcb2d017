//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! The exit status reflects the deterministic criteria only; the stochastic
//! reproduction check (7) is reported but not gating.

mod common;

use std::time::Instant;

use dimsynth::cli::{self, Format, SynthesizeArgs};
use dimsynth::five_link::{
    closed_form_jacobian, planar_configuration, planar_topology, FiveLinkConfig,
};
use dimsynth::jacobian::{AssemblyOptions, JacobianError};
use dimsynth::linalg;
use dimsynth::optimizer::{
    interior_point_minimize, multi_start_synthesize, BoxProblem, SolverOptions, SynthesisOptions,
};
use dimsynth::{io, Configuration, JointPlacement, KinematicSystem, TaskSpace, Topology};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn catalog_topologies() -> Vec<Topology> {
    let mut all = Vec::new();
    for name in ["dof1", "dof2", "dof3", "dof4"] {
        all.extend(io::load_catalog(&common::asset(&format!("catalogs/{name}.toml"))).unwrap());
    }
    all
}

/// Random configuration with a well-conditioned loop matrix, plus its J̃.
fn generic(sys: &KinematicSystem, rng: &mut ChaCha8Rng) -> (Configuration, DMatrix<f64>) {
    loop {
        let cfg = common::random_configuration(sys.topology(), common::task_point(), rng);
        let parts = sys.assemble(&cfg).unwrap();
        if !parts.is_serial() && linalg::condition_number(&linalg::singular_values(&parts.a2)) > 1e6
        {
            continue;
        }
        if let Ok(red) = sys.jacobian(&cfg) {
            return (cfg, red.jacobian);
        }
    }
}

fn two_link_determinant() -> Outcome {
    let start = Instant::now();
    let t = common::shipped("2r_planar");
    let (i12, i23) = (t.joint_index("12").unwrap(), t.joint_index("23").unwrap());
    let sys = KinematicSystem::new(t, TaskSpace::Planar);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (l1, l2): (f64, f64) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        let (t1, t2): (f64, f64) = (rng.random_range(-3.1..3.1), rng.random_range(-3.1..3.1));
        let elbow = Vector3::new(l1 * t1.cos(), l1 * t1.sin(), 0.0);
        let tip = elbow + Vector3::new(l2 * (t1 + t2).cos(), l2 * (t1 + t2).sin(), 0.0);
        let mut joints = vec![JointPlacement::with_axis(Vector3::zeros(), Vector3::z()); 2];
        joints[i12] = JointPlacement::with_axis(Vector3::zeros(), Vector3::z());
        joints[i23] = JointPlacement::with_axis(elbow, Vector3::z());
        let j = sys
            .jacobian(&Configuration {
                joints,
                task_point: tip,
            })
            .unwrap()
            .jacobian;
        let det = linalg::det(&j.view((0, 0), (2, 2)).into_owned());
        worst = worst.max((det - l1 * l2 * t2.sin()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-9 && secs < 1.0,
        format!("max |det − l1 l2 sin θ2| = {worst:.1e}, {secs:.3} s"),
    )
}

fn five_link_closed_form() -> Outcome {
    let start = Instant::now();
    let sys = KinematicSystem::new(planar_topology(), TaskSpace::Planar);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut n) = (0.0f64, 0);
    while n < 200 {
        let lengths = [(); 4].map(|_| rng.random_range(0.5..10.0));
        let angles = [(); 4].map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        if (angles[2] - angles[3]).sin().abs() < 0.05 {
            continue;
        }
        let c = FiveLinkConfig { lengths, angles };
        let expect = closed_form_jacobian(&c).unwrap();
        let got = sys.jacobian(&planar_configuration(&c)).unwrap().jacobian;
        worst = worst.max((expect - got).amax());
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-8 && secs < 1.0,
        format!("max entry error {worst:.1e}, {secs:.3} s"),
    )
}

fn power_conservation() -> Outcome {
    let systems: Vec<KinematicSystem> = catalog_topologies()
        .into_iter()
        .map(|t| KinematicSystem::new(t, TaskSpace::Spatial))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let sys = &systems[rng.random_range(0..systems.len())];
        let (_, j) = generic(sys, &mut rng);
        let wrench = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let rate = DVector::from_fn(j.ncols(), |_, _| rng.random_range(-1.0..1.0));
        let v = &j * &rate;
        let tau = j.transpose() * &wrench;
        worst = worst.max((wrench.dot(&v) - tau.dot(&rate)).abs());
    }
    outcome(
        worst < 1e-9,
        format!(
            "500 tuples over {} topologies, max |Fᵀv − τᵀθ̇| = {worst:.1e}",
            systems.len()
        ),
    )
}

fn path_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut names) = (0.0f64, Vec::new());
    for t in catalog_topologies() {
        let sys = KinematicSystem::new(t, TaskSpace::Spatial);
        if sys.is_serial() {
            continue;
        }
        names.push(sys.topology().name().to_owned());
        for _ in 0..50 {
            let (cfg, j) = generic(&sys, &mut rng);
            let parts = sys.assemble(&cfg).unwrap();
            let rate = DVector::from_fn(j.ncols(), |_, _| rng.random_range(-1.0..1.0));
            let passive = -parts.a2.clone().lu().solve(&(&parts.a1 * &rate)).unwrap();
            let q = DVector::from_iterator(
                rate.len() + passive.len(),
                rate.iter().chain(passive.iter()).copied(),
            );
            let twist = &j * &rate;
            for p in sys.path_twists(&cfg).unwrap() {
                worst = worst.max((&p * &q - &twist).amax());
            }
        }
    }
    outcome(
        worst < 1e-9,
        format!(
            "{} parallel topologies, max residual {worst:.1e}",
            names.join("/")
        ),
    )
}

fn superfluous_fix() -> Outcome {
    let sys = KinematicSystem::new(common::shipped("rssr"), TaskSpace::Spatial);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    for _ in 0..50 {
        let (cfg, j) = generic(&sys, &mut rng);
        let without = sys.assemble_with(
            &cfg,
            AssemblyOptions {
                superfluous_fix: false,
            },
        );
        ok &= matches!(
            without,
            Err(JacobianError::NonSquareA2 {
                rows: 6,
                passive: 7
            })
        );
        let parts = sys.assemble(&cfg).unwrap();
        ok &= parts.a2.shape() == (7, 7) && linalg::det(&parts.a2) != 0.0;
        ok &= dimsynth::metrics::manipulability(&j).is_finite();
    }
    outcome(
        ok,
        "50 configurations: 6x7 without the spin row, invertible 7x7 with it, μ finite",
    )
}

fn optimizer_suite() -> Outcome {
    let opts = SolverOptions::default();
    let mut notes = Vec::new();
    let mut ok = true;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_q = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=4);
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (lo, hi) = (vec![-1.0; n], vec![1.5; n]);
        let (hq, cq) = (h.clone(), c.clone());
        let f = move |x: &[f64]| -> f64 {
            (0..x.len())
                .map(|i| 0.5 * hq[i] * (x[i] - cq[i]).powi(2))
                .sum()
        };
        let r = interior_point_minimize(&BoxProblem::new(f, lo, hi), &vec![0.2; n], &opts);
        for (x, c) in r.x.iter().zip(&c) {
            worst_q = worst_q.max((x - c.clamp(-1.0, 1.5)).abs());
        }
    }
    ok &= worst_q < 1e-6;
    notes.push(format!("quadratics {worst_q:.1e}"));

    let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
    let r = interior_point_minimize(
        &BoxProblem::new(rosen, vec![-2.0; 2], vec![2.0; 2]),
        &[-1.2, 1.0],
        &opts,
    );
    let e = (r.x[0] - 1.0).abs().max((r.x[1] - 1.0).abs());
    ok &= e < 1e-4;
    notes.push(format!("Rosenbrock {e:.1e}"));

    let surrogate = |x: &[f64]| -x[0] * x[1] * x[2].sin();
    let p = BoxProblem::new(
        surrogate,
        vec![0.0; 3],
        vec![1.0, 1.0, std::f64::consts::PI],
    );
    let r = interior_point_minimize(&p, &[0.5, 0.5, 1.0], &opts);
    let e = (r.x[0] - 1.0)
        .abs()
        .max((r.x[1] - 1.0).abs())
        .max((r.x[2] - std::f64::consts::FRAC_PI_2).abs());
    ok &= e < 1e-4;
    notes.push(format!("−x1 x2 sin x3 {e:.1e}"));
    outcome(ok, notes.join(", "))
}

fn reproduction() -> Outcome {
    let opts = SynthesisOptions {
        n_restarts: 100,
        rng_seed: 1,
        ..Default::default()
    };
    let a = common::task_point();
    let run = |name: &str| multi_start_synthesize(&common::shipped(name), a, &opts).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();

    let start = Instant::now();
    let m71 = run("2d_m71");
    let (mu_ok, kappa_ok) = (m71.mu >= 164.0, (1.5..=2.6).contains(&m71.kappa));
    ok &= mu_ok && kappa_ok;
    notes.push(format!(
        "2D-M71 μ = {:.2} [{}] κ = {:.3} [{}] via {} ({:.0} s)",
        m71.mu,
        if mu_ok { "ok" } else { "low" },
        m71.kappa,
        if kappa_ok { "ok" } else { "outside 1.5..2.6" },
        m71.objective.as_str(),
        start.elapsed().as_secs_f64()
    ));

    let m1 = run("3d_m1");
    let mu_bar = m1.mu_bar.unwrap();
    ok &= mu_bar >= 0.97;
    notes.push(format!(
        "3D-M1 μ̄ = {mu_bar:.4} (μ/L³ = {:.4})",
        m1.det_scaled_mu.unwrap()
    ));

    let m645 = run("2d_m645");
    let e = (m645.mu_bar.unwrap() - 1.0)
        .abs()
        .max((m645.kappa - 1.0).abs());
    ok &= e < 1e-6;
    notes.push(format!("2D-M645 |μ̄ − 1|, |κ − 1| ≤ {e:.1e}"));

    let mut one = Vec::new();
    for name in ["1d_m10", "rssr", "1d_r"] {
        let r = run(name);
        ok &= r.kappa == 1.0;
        one.push(format!("{} κ = {}", r.name, r.kappa));
    }
    notes.push(one.join(", "));
    outcome(ok, notes.join("; "))
}

fn synthesize_to(
    catalog: &str,
    seed: u64,
    restarts: usize,
    format: Format,
    out: &std::path::Path,
) -> i32 {
    let catalog = common::asset(catalog);
    let args = SynthesizeArgs {
        catalog: &catalog,
        task_point: common::task_point(),
        options: SynthesisOptions {
            n_restarts: restarts,
            rng_seed: seed,
            ..Default::default()
        },
        format,
        out: Some(out),
    };
    cli::cmd_synthesize(&args, &mut std::io::sink(), &mut std::io::sink()).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut same = true;
    for (k, format) in [Format::Json, Format::Csv].into_iter().enumerate() {
        let (a, b) = (
            dir.path().join(format!("a{k}")),
            dir.path().join(format!("b{k}")),
        );
        synthesize_to("catalogs/dof3.toml", 7, 100, format, &a);
        synthesize_to("catalogs/dof3.toml", 7, 100, format, &b);
        same &= std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
    }
    outcome(
        same,
        "3-DOF catalog, seed 7, 100 restarts: JSON and CSV files byte-identical across runs",
    )
}

fn serialization() -> Outcome {
    let mut ok = true;
    let files = common::shipped_topology_files();
    for path in &files {
        let t = io::load_topology(path).unwrap();
        let back = io::parse_topology(&io::topology_to_toml(&t), "round-trip");
        ok &= back.is_ok_and(|b| b == t);
    }
    let dir = tempfile::tempdir().unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for catalog in ["catalogs/dof1.toml", "catalogs/quick.toml"] {
        let out = dir.path().join("p.json");
        ok &= synthesize_to(catalog, 11, 10, Format::Json, &out) == cli::EXIT_OK;
        let rows = io::parse_prescription_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
        for row in rows {
            let topo = files
                .iter()
                .find(|p| io::load_topology(p).unwrap().name() == row.result.name)
                .unwrap();
            let mut buf = Vec::new();
            let code = cli::cmd_evaluate(
                topo,
                &out,
                None,
                Format::Json,
                &mut buf,
                &mut std::io::sink(),
            )
            .unwrap();
            ok &= code == cli::EXIT_OK;
            let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
            let got = v["report"]["mu_bar"].as_f64().unwrap();
            worst = worst.max((got - row.result.mu_bar.unwrap()).abs());
            checked += 1;
        }
    }
    ok &= worst <= 1e-12;
    outcome(
        ok,
        format!("{} topology files round-trip; {checked} synthesized entries re-evaluated, max |Δμ̄| = {worst:.1e}", files.len()),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Check, bool); 9] = [
        (1, "2R planar determinant", two_link_determinant, true),
        (2, "five-link closed form", five_link_closed_form, true),
        (3, "power conservation", power_conservation, true),
        (4, "path consistency", path_consistency, true),
        (5, "superfluous-DOF fix", superfluous_fix, true),
        (6, "optimizer suite", optimizer_suite, true),
        (7, "reference-result reproduction", reproduction, false),
        (8, "determinism", determinism, true),
        (9, "serialization", serialization, true),
    ];
    let mut passed = 0;
    let mut gating_failures = 0;
    for (id, name, check, gating) in criteria {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} ({name}): {}", o.detail);
        if o.pass {
            passed += 1;
        } else if gating {
            gating_failures += 1;
        }
    }
    println!("{passed}/9 criteria passed");
    if gating_failures > 0 {
        std::process::exit(1);
    }
}
