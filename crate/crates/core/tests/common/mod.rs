#![allow(dead_code)]

use std::path::PathBuf;

use dimsynth::io;
use dimsynth::{Configuration, JointPlacement, Topology};
use nalgebra::Vector3;
use rand::Rng;

pub fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

pub fn shipped(name: &str) -> Topology {
    io::load_topology(&asset(&format!("topologies/{name}.toml"))).expect("shipped topology parses")
}

pub fn shipped_topology_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(asset("topologies"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

pub fn all_shipped() -> Vec<Topology> {
    shipped_topology_files()
        .iter()
        .map(|p| io::load_topology(p).unwrap())
        .collect()
}

pub fn task_point() -> Vector3<f64> {
    Vector3::new(3.0, 4.0, 5.0)
}

/// Uniform placement inside the design cube.
pub fn random_configuration(t: &Topology, a: Vector3<f64>, rng: &mut impl Rng) -> Configuration {
    let joints = t
        .joints()
        .iter()
        .map(|_| {
            let r = Vector3::new(
                rng.random_range(0.0..10.0),
                rng.random_range(0.0..10.0),
                rng.random_range(0.0..10.0),
            );
            JointPlacement::new(
                r,
                rng.random_range(0.0..std::f64::consts::PI),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Configuration {
        joints,
        task_point: a,
    }
}

pub fn max_abs_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax()
}
