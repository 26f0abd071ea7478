//! Shared fixtures for the benchmark suite.

use citecast_core::clustering::{make_shapes, CumulativeShape};
use citecast_core::synth::{class_templates, generate_cohort, NoiseKind, SynthSpec};

/// A reproducible noisy cohort for benchmarking fits and clustering.
pub fn bench_cohort(n_papers: usize) -> citecast_core::SynthCohort {
    let spec = SynthSpec {
        templates: class_templates().to_vec(),
        n_papers,
        horizon: 50,
        noise: NoiseKind::Poisson,
        param_jitter: 0.1,
        seed: 4242,
        sir_step: 0.01,
    };
    generate_cohort(&spec).expect("bench cohort generation")
}

/// Normalized shapes of a bench cohort, ready for clustering.
pub fn bench_shapes(n_papers: usize) -> Vec<CumulativeShape> {
    make_shapes(&bench_cohort(n_papers).histories()).expect("bench shapes")
}
