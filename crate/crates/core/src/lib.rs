//! Exact and Monte Carlo computations for random compositions produced by
//! stick-breaking and sieving.

// Negated comparisons such as `!(x > 0.0)` are used on purpose: they also
// reject NaN. Index loops mirror the summation formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod bernstein;
pub mod error;
pub mod kernel;
pub mod measure;
pub mod quad;
pub mod sampler;
pub mod special;
pub mod stationary;
pub mod stats;

pub use asymptotics::{DiagnosticReport, DiagnosticTolerances, ExpansionConstants, Verdict};
pub use bernstein::HarmonicTables;
pub use error::{Result, SieveError};
pub use kernel::{
    Composition, ExactCaps, MomentSeries, OracleLaw, PartsLaw, PotentialTable, TransitionKernel,
};
pub use measure::{
    make_measure, Atom, LatticeReport, MeasureDescriptor, MeasureKind, MeasureOptions,
    MomentFunctionals, StickBreakingMeasure, TabulatedDensity,
};
pub use sampler::{
    MeasureSampler, MonteCarloConfig, MonteCarloSummary, Sampler, SieveSample,
    UncountedCellsSummary,
};
pub use stationary::{RewardResiduals, StationaryInverse, StationaryKernel};
