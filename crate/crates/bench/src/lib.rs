//! Shared fixtures for the benchmarks.

use sieve_core::{ExactCaps, StickBreakingMeasure, TransitionKernel};

/// The measures every benchmark runs on: a closed-form Beta law, a
/// two-atom law and a tabulated density.
pub fn measures() -> Vec<(&'static str, StickBreakingMeasure)> {
    let table = sieve_core::TabulatedDensity::new(vec![0.0, 0.3, 1.0], vec![0.5, 2.0, 0.8])
        .expect("valid table");
    vec![
        (
            "beta(1,2)",
            StickBreakingMeasure::beta(1.0, 2.0).expect("valid beta"),
        ),
        (
            "two-atom",
            StickBreakingMeasure::discrete(&[(0.3, 0.5), (0.7, 0.5)], false).expect("valid atoms"),
        ),
        ("table", StickBreakingMeasure::tabulated(table, "bench")),
    ]
}

pub fn kernel(measure: &StickBreakingMeasure) -> TransitionKernel {
    TransitionKernel::with_caps(measure.clone(), ExactCaps::default())
}
