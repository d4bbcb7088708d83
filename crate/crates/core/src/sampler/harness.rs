//! Replicated runs. Replicate i draws from its own ChaCha stream (seed,
//! stream i), results are collected in replicate order and reduced
//! sequentially, so the output does not depend on the worker count.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    sample_game, sample_renewal, sample_stationary, sample_stickbreak, sample_uncounted_cells,
    MeasureSampler, Sampler,
};
use crate::error::{Result, SieveError};
use crate::kernel::{Composition, TransitionKernel};
use crate::measure::StickBreakingMeasure;
use crate::special::normal_cdf;
use crate::stationary::{StationaryInverse, StationaryKernel};
use crate::stats::{ks_distance, mean_variance};

/// The independent stream of replicate `rep` under master seed `seed`.
pub fn replicate_stream(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub sampler: Sampler,
    /// Compute the normalized K_n statistics; rejected for lattice measures.
    pub clt: bool,
    /// Keep every K_n in the summary.
    pub keep_samples: bool,
}

impl MonteCarloConfig {
    pub fn new(n: usize, reps: usize, seed: u64, sampler: Sampler) -> Self {
        Self {
            n,
            reps,
            seed,
            sampler,
            clt: false,
            keep_samples: false,
        }
    }

    pub fn with_clt(mut self) -> Self {
        self.clt = true;
        self
    }

    pub fn with_samples(mut self) -> Self {
        self.keep_samples = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub measure: String,
    pub sampler: Sampler,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub mean_k: f64,
    pub var_k: f64,
    /// Standard error of `mean_k`.
    pub se_k: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_kl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_kl: Option<f64>,
    /// Sample mean of |K_n − R_n|.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_abs_kr: Option<f64>,
    /// Sample mean and variance of the empty intervals of [0, log n].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_gaps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_gaps: Option<f64>,
    /// KS distance of (K_n − log n/μ)/(σ μ^{-3/2} √log n) from N(0,1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_normal: Option<f64>,
    /// KS distance of K_n standardized by its own sample mean and variance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_studentized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_samples: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Copy)]
struct CellCounts {
    l: u32,
    r: u32,
    gaps: u32,
}

struct CellMoments {
    l: f64,
    r: (f64, f64),
    kl: (f64, f64),
    abs_kr: f64,
    gaps: (f64, f64),
}

struct Context {
    draws: MeasureSampler,
    offset: Option<StationaryInverse>,
}

impl Context {
    fn new(measure: &StickBreakingMeasure, sampler: Sampler) -> Result<Self> {
        let offset = if sampler == Sampler::Stationary {
            let s = StationaryKernel::new(TransitionKernel::new(measure.clone()))?;
            Some(StationaryInverse::new(&s)?)
        } else {
            None
        };
        Ok(Self {
            draws: MeasureSampler::new(measure),
            offset,
        })
    }

    fn composition(&self, sampler: Sampler, n: usize, rng: &mut ChaCha8Rng) -> Result<Composition> {
        match sampler {
            Sampler::Game => sample_game(&self.draws, n, rng),
            Sampler::Stickbreak => sample_stickbreak(&self.draws, n, rng),
            Sampler::Renewal => Ok(sample_renewal(&self.draws, n, rng)?.composition),
            Sampler::Stationary => {
                sample_stationary(&self.draws, self.offset.as_ref().expect("built"), n, rng)
            }
        }
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(SieveError::OutOfRange("reps must be at least 1".into()));
    }
    Ok(())
}

/// Runs `reps` replicates and summarizes K_n, plus the cell statistics
/// when the renewal sampler is used.
pub fn run_monte_carlo(
    measure: &StickBreakingMeasure,
    config: &MonteCarloConfig,
) -> Result<MonteCarloSummary> {
    check_reps(config.reps)?;
    let n = config.n;
    let scale = if config.clt {
        if n < 2 {
            return Err(SieveError::OutOfRange(
                "normalized statistics need n ≥ 2".into(),
            ));
        }
        if measure.is_lattice() {
            return Err(SieveError::Hypothesis(
                "normal limit requires a nonlattice measure".into(),
            ));
        }
        let m = measure.log_moments()?;
        if !(m.mu.is_finite() && m.sigma2.is_finite() && m.sigma2 > 0.0) {
            return Err(SieveError::Hypothesis(format!(
                "normal limit requires finite μ and 0 < σ² < ∞ (μ = {}, σ² = {})",
                m.mu, m.sigma2
            )));
        }
        let ln = (n as f64).ln();
        Some((ln / m.mu, m.sigma2.sqrt() * m.mu.powf(-1.5) * ln.sqrt()))
    } else {
        None
    };
    let ctx = Context::new(measure, config.sampler)?;
    let rows: Vec<(u32, Option<CellCounts>)> = (0..config.reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(config.seed, i as u64);
            if config.sampler == Sampler::Renewal {
                let s = sample_renewal(&ctx.draws, n, &mut rng)?;
                Ok((
                    s.k,
                    Some(CellCounts {
                        l: s.l,
                        r: s.r,
                        gaps: s.gaps,
                    }),
                ))
            } else {
                Ok((
                    ctx.composition(config.sampler, n, &mut rng)?.k() as u32,
                    None,
                ))
            }
        })
        .collect::<Result<_>>()?;

    let ks: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let (mean_k, var_k) = mean_variance(&ks);
    let reps = config.reps as f64;
    let cells: Option<Vec<(f64, CellCounts)>> = rows
        .iter()
        .map(|(k, c)| c.map(|c| (*k as f64, c)))
        .collect();
    let cell_moments = cells.map(|cells| {
        let column = |f: &dyn Fn(&(f64, CellCounts)) -> f64| {
            mean_variance(&cells.iter().map(f).collect::<Vec<_>>())
        };
        CellMoments {
            l: column(&|c| c.1.l as f64).0,
            r: column(&|c| c.1.r as f64),
            kl: column(&|c| c.0 - c.1.l as f64),
            abs_kr: column(&|c| (c.0 - c.1.r as f64).abs()).0,
            gaps: column(&|c| c.1.gaps as f64),
        }
    });
    let (ks_normal, ks_studentized) = match scale {
        Some((centre, sd)) => {
            let z: Vec<f64> = ks.iter().map(|k| (k - centre) / sd).collect();
            let stud = if var_k > 0.0 {
                let s = var_k.sqrt();
                let z2: Vec<f64> = ks.iter().map(|k| (k - mean_k) / s).collect();
                Some(ks_distance(&z2, normal_cdf))
            } else {
                None
            };
            (Some(ks_distance(&z, normal_cdf)), stud)
        }
        None => (None, None),
    };
    Ok(MonteCarloSummary {
        measure: measure.descriptor().to_string(),
        sampler: config.sampler,
        n,
        reps: config.reps,
        seed: config.seed,
        mean_k,
        var_k,
        se_k: (var_k / reps).sqrt(),
        mean_l: cell_moments.as_ref().map(|c| c.l),
        mean_r: cell_moments.as_ref().map(|c| c.r.0),
        var_r: cell_moments.as_ref().map(|c| c.r.1),
        mean_kl: cell_moments.as_ref().map(|c| c.kl.0),
        var_kl: cell_moments.as_ref().map(|c| c.kl.1),
        mean_abs_kr: cell_moments.as_ref().map(|c| c.abs_kr),
        mean_gaps: cell_moments.as_ref().map(|c| c.gaps.0),
        var_gaps: cell_moments.as_ref().map(|c| c.gaps.1),
        ks_normal,
        ks_studentized,
        k_samples: config
            .keep_samples
            .then(|| rows.iter().map(|r| r.0).collect()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncountedCellsSummary {
    pub measure: String,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Sample mean of K_n − L_n.
    pub mean: f64,
    pub var: f64,
    /// Standard error of `mean`.
    pub se: f64,
}

/// Replicated K_n − L_n from the O(log n) sampler of the cells beyond log n.
pub fn run_uncounted_cells(
    measure: &StickBreakingMeasure,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<UncountedCellsSummary> {
    check_reps(reps)?;
    let draws = MeasureSampler::new(measure);
    let xs: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(seed, i as u64);
            sample_uncounted_cells(&draws, n, &mut rng).map(f64::from)
        })
        .collect::<Result<_>>()?;
    let (mean, var) = mean_variance(&xs);
    Ok(UncountedCellsSummary {
        measure: measure.descriptor().to_string(),
        n,
        reps,
        seed,
        mean,
        var,
        se: (var / reps as f64).sqrt(),
    })
}

fn compositions(
    measure: &StickBreakingMeasure,
    n: usize,
    reps: usize,
    seed: u64,
    sampler: Sampler,
) -> Result<Vec<Composition>> {
    check_reps(reps)?;
    let ctx = Context::new(measure, sampler)?;
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(seed, i as u64);
            ctx.composition(sampler, n, &mut rng)
        })
        .collect()
}

/// Counts of each composition of n over `reps` replicates.
pub fn composition_frequencies(
    measure: &StickBreakingMeasure,
    n: usize,
    reps: usize,
    seed: u64,
    sampler: Sampler,
) -> Result<BTreeMap<Vec<u32>, u64>> {
    let mut map = BTreeMap::new();
    for c in compositions(measure, n, reps, seed, sampler)? {
        *map.entry(c.parts).or_insert(0) += 1;
    }
    Ok(map)
}

/// Counts of the first part, indexed 0..=n (index 0 stays zero).
pub fn first_part_frequencies(
    measure: &StickBreakingMeasure,
    n: usize,
    reps: usize,
    seed: u64,
    sampler: Sampler,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; n + 1];
    for c in compositions(measure, n, reps, seed, sampler)? {
        counts[c.parts[0] as usize] += 1;
    }
    Ok(counts)
}
