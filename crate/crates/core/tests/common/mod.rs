#![allow(dead_code)]

use std::sync::OnceLock;

use betalab::pipeline::{Pipeline, PipelineOptions};
use betalab::potentials::PotentialSpec;

pub fn quartic(g: f64) -> Pipeline {
    Pipeline::build(&PotentialSpec::EvenQuartic { g }, &PipelineOptions::default()).unwrap()
}

pub fn gaussian() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| Pipeline::build(&PotentialSpec::Gaussian, &PipelineOptions::default()).unwrap())
}

pub fn quartic_01() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| quartic(0.1))
}

/// Equispaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
