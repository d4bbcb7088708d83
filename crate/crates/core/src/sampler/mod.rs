//! Samplers for the sieve composition C_n and its stationary version.
//!
//! Three constructions of C_n are provided and kept deliberately distinct so
//! that their agreement in law is a real test:
//!
//! * the coin-tossing game, with disqualified rounds redrawn;
//! * uniform tags dropped into the stick-breaking intervals;
//! * exponential order statistics clustered by a renewal process with
//!   increments −log(1 − X), which also reports cell statistics.

mod harness;

pub use harness::{
    composition_frequencies, first_part_frequencies, replicate_stream, run_monte_carlo,
    run_uncounted_cells, MonteCarloConfig, MonteCarloSummary, UncountedCellsSummary,
};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt};
use rand_distr::{Binomial, Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SieveError};
use crate::kernel::Composition;
use crate::measure::{MeasureKind, StickBreakingMeasure, TabulatedDensity};
use crate::stationary::StationaryInverse;

/// Draws from the stick-breaking measure ω, returning `(x, 1 - x)` with
/// both coordinates computed without cancellation.
#[derive(Debug, Clone)]
pub struct MeasureSampler {
    repr: DrawRepr,
}

#[derive(Debug, Clone)]
enum DrawRepr {
    Discrete {
        cumulative: Vec<f64>,
        atoms: Vec<(f64, f64, f64)>,
    },
    Beta {
        a: Gamma<f64>,
        b: Gamma<f64>,
    },
    Tabulated(TabulatedDensity),
}

impl MeasureSampler {
    pub fn new(measure: &StickBreakingMeasure) -> Self {
        let repr = match measure.kind() {
            MeasureKind::Discrete(atoms) => {
                let mut acc = 0.0;
                let cumulative = atoms
                    .iter()
                    .map(|a| {
                        acc += a.weight;
                        acc
                    })
                    .collect();
                DrawRepr::Discrete {
                    cumulative,
                    atoms: atoms.iter().map(|a| (a.x, a.one_minus_x, a.phi)).collect(),
                }
            }
            MeasureKind::Beta { alpha, beta, .. } => DrawRepr::Beta {
                a: Gamma::new(*alpha, 1.0).expect("validated shape"),
                b: Gamma::new(*beta, 1.0).expect("validated shape"),
            },
            MeasureKind::Tabulated(t) => DrawRepr::Tabulated(t.clone()),
        };
        Self { repr }
    }

    fn atom_index<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
        cumulative
            .partition_point(|c| *c <= u)
            .min(cumulative.len() - 1)
    }

    fn gamma_pair<R: Rng + ?Sized>(a: &Gamma<f64>, b: &Gamma<f64>, rng: &mut R) -> (f64, f64) {
        loop {
            let (ga, gb) = (a.sample(rng), b.sample(rng));
            if ga + gb > 0.0 {
                return (ga, gb);
            }
        }
    }

    /// One draw of X ~ ω as `(x, 1 - x)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match &self.repr {
            DrawRepr::Discrete { cumulative, atoms } => {
                let (x, y, _) = atoms[Self::atom_index(cumulative, rng)];
                (x, y)
            }
            DrawRepr::Beta { a, b } => {
                let (ga, gb) = Self::gamma_pair(a, b, rng);
                let s = ga + gb;
                (ga / s, gb / s)
            }
            DrawRepr::Tabulated(t) => t.quantile(rng.random::<f64>()),
        }
    }

    /// One renewal increment T = −log(1 − X); infinite when X = 1.
    pub fn draw_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.repr {
            DrawRepr::Discrete { cumulative, atoms } => atoms[Self::atom_index(cumulative, rng)].2,
            DrawRepr::Beta { a, b } => {
                let (ga, gb) = Self::gamma_pair(a, b, rng);
                if gb == 0.0 {
                    f64::INFINITY
                } else {
                    (ga / gb).ln_1p()
                }
            }
            DrawRepr::Tabulated(t) => {
                let (x, y) = t.quantile(rng.random::<f64>());
                if x < 0.5 {
                    -(-x).ln_1p()
                } else if y > 0.0 {
                    -y.ln()
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Which construction of C_n to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Game,
    Stickbreak,
    Renewal,
    Stationary,
}

impl Sampler {
    pub const ALL: [Sampler; 4] = [
        Sampler::Game,
        Sampler::Stickbreak,
        Sampler::Renewal,
        Sampler::Stationary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::Game => "game",
            Sampler::Stickbreak => "stickbreak",
            Sampler::Renewal => "renewal",
            Sampler::Stationary => "stationary",
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sampler {
    type Err = SieveError;

    fn from_str(s: &str) -> Result<Self> {
        Sampler::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                SieveError::Invalid(format!(
                    "unknown sampler '{s}' (game, stickbreak, renewal, stationary)"
                ))
            })
    }
}

/// A composition together with the cell statistics of the renewal
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveSample {
    pub composition: Composition,
    /// Number of parts K_n.
    pub k: u32,
    /// Occupied cells whose left endpoint is below log n.
    pub l: u32,
    /// Renewal points in [0, log n], counting 0.
    pub r: u32,
    /// Component intervals of [0, log n] minus the renewal points that
    /// hold no E_j.
    pub gaps: u32,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > u32::MAX as usize {
        return Err(SieveError::OutOfRange(format!(
            "n = {n} must be in 1..=2^32-1"
        )));
    }
    Ok(())
}

/// The coin-tossing game: each round draws X, and every remaining player
/// leaves with probability X. A round in which nobody leaves is discarded
/// and its X redrawn.
pub fn sample_game<R: Rng + ?Sized>(
    draws: &MeasureSampler,
    n: usize,
    rng: &mut R,
) -> Result<Composition> {
    check_n(n)?;
    let mut remaining = n as u64;
    let mut parts = Vec::new();
    while remaining > 0 {
        let (x, _) = draws.draw(rng);
        let d = if x >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, x)
                .expect("probability in [0,1]")
                .sample(rng)
        };
        if d == 0 {
            continue;
        }
        parts.push(d as u32);
        remaining -= d;
    }
    Composition::new(parts)
}

/// Uniform tags allocated to the stick-breaking intervals. Tag u falls in
/// box j when Π_{i<j}(1 − X_i) > 1 − u ≥ Π_{i≤j}(1 − X_i); the products are
/// extended lazily and empty boxes are skipped.
pub fn sample_stickbreak<R: Rng + ?Sized>(
    draws: &MeasureSampler,
    n: usize,
    rng: &mut R,
) -> Result<Composition> {
    check_n(n)?;
    // Survival tags v = 1 - u in (0, 1], visited from largest to smallest.
    let mut tags: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
    tags.sort_by(|a, b| b.total_cmp(a));
    let mut parts = Vec::new();
    let mut product = draws.draw(rng).1;
    let mut count = 0u32;
    for v in tags {
        while product > v {
            if count > 0 {
                parts.push(count);
                count = 0;
            }
            product *= draws.draw(rng).1;
        }
        count += 1;
    }
    parts.push(count);
    Composition::new(parts)
}

/// Cell statistics of one clustering pass.
struct Clustering {
    parts: Vec<u32>,
    /// Occupied cells with left endpoint below the threshold.
    low_cells: u32,
    /// Cells holding at least one point below the threshold.
    low_hits: u32,
    /// Boundaries in [0, threshold].
    boundaries: u32,
}

/// Clusters the increasing `points` by the boundaries `first, first + T_1,
/// ...`, with the first cell starting at 0. The origin counts as a
/// boundary when `count_origin` is set.
fn cluster<R: Rng + ?Sized>(
    draws: &MeasureSampler,
    points: impl Iterator<Item = f64>,
    first: f64,
    threshold: f64,
    count_origin: bool,
    rng: &mut R,
) -> Clustering {
    let mut boundaries = u32::from(count_origin) + u32::from(first <= threshold);
    let mut left = 0.0;
    let mut right = first;
    let mut parts = Vec::new();
    let mut low_cells = 0u32;
    let mut low_hits = 0u32;
    let mut count = 0u32;
    let mut hit = false;
    for e in points {
        while e >= right {
            if count > 0 {
                parts.push(count);
                low_cells += u32::from(left < threshold);
                low_hits += u32::from(hit);
                count = 0;
                hit = false;
            }
            left = right;
            right += draws.draw_increment(rng);
            boundaries += u32::from(right <= threshold);
        }
        count += 1;
        hit |= e < threshold;
    }
    if count > 0 {
        parts.push(count);
        low_cells += u32::from(left < threshold);
        low_hits += u32::from(hit);
    }
    while right <= threshold {
        right += draws.draw_increment(rng);
        boundaries += u32::from(right <= threshold);
    }
    Clustering {
        parts,
        low_cells,
        low_hits,
        boundaries,
    }
}

/// Increasing order statistics of n standard exponentials, generated from
/// independent spacings E_j − E_{j−1} ~ Exponential(n − j + 1).
fn exponential_order_statistics<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> impl Iterator<Item = f64> + '_ {
    let mut e = 0.0;
    (0..n).map(move |j| {
        let z: f64 = Exp1.sample(rng);
        e += z / (n - j) as f64;
        e
    })
}

/// The renewal construction: E_1 ≤ … ≤ E_n clustered by the range of the
/// renewal process with increments −log(1 − X).
pub fn sample_renewal<R: Rng + ?Sized>(
    draws: &MeasureSampler,
    n: usize,
    rng: &mut R,
) -> Result<SieveSample> {
    check_n(n)?;
    let threshold = (n as f64).ln();
    let first = draws.draw_increment(rng);
    let points: Vec<f64> = exponential_order_statistics(n, rng).collect();
    let c = cluster(draws, points.into_iter(), first, threshold, true, rng);
    let k = c.parts.len() as u32;
    Ok(SieveSample {
        composition: Composition::new(c.parts)?,
        k,
        l: c.low_cells,
        r: c.boundaries,
        gaps: c.boundaries - c.low_hits,
    })
}

/// The stationary construction: the renewal range shifted by Z₀ ~ Ω₀, so
/// that the first cell is [0, Z₀).
pub fn sample_stationary<R: Rng + ?Sized>(
    draws: &MeasureSampler,
    offset: &StationaryInverse,
    n: usize,
    rng: &mut R,
) -> Result<Composition> {
    check_n(n)?;
    let z0 = offset.quantile(rng.random::<f64>());
    let points: Vec<f64> = exponential_order_statistics(n, rng).collect();
    Composition::new(cluster(draws, points.into_iter(), z0, f64::NEG_INFINITY, false, rng).parts)
}

/// Distance from `z` to the first point of the shifted range Z₀ + ℛ lying
/// strictly beyond `z`.
pub fn stationary_overshoot<R: Rng + ?Sized>(
    draws: &MeasureSampler,
    offset: &StationaryInverse,
    z: f64,
    rng: &mut R,
) -> f64 {
    let mut s = offset.quantile(rng.random::<f64>());
    while s <= z {
        s += draws.draw_increment(rng);
    }
    s - z
}

/// Distance from `z` to the first point of the renewal range ℛ (started
/// at 0) lying strictly beyond `z`.
pub fn renewal_overshoot<R: Rng + ?Sized>(draws: &MeasureSampler, z: f64, rng: &mut R) -> f64 {
    let mut s = 0.0;
    while s <= z {
        s += draws.draw_increment(rng);
    }
    s - z
}

/// K_n − L_n: occupied cells whose left endpoint is at least log n.
///
/// Only the points beyond log n can fall in such cells. Their number is
/// Binomial(n, 1/n), and by memorylessness they sit at log n plus
/// independent standard exponentials, so the sample costs O(log n) rather
/// than O(n) while having the same law as the full renewal construction.
pub fn sample_uncounted_cells<R: Rng + ?Sized>(
    draws: &MeasureSampler,
    n: usize,
    rng: &mut R,
) -> Result<u32> {
    check_n(n)?;
    let t = (n as f64).ln();
    // First renewal point at or beyond log n.
    let mut start = 0.0;
    while start < t {
        start += draws.draw_increment(rng);
    }
    let m = if n == 1 {
        1
    } else {
        Binomial::new(n as u64, 1.0 / n as f64)
            .expect("valid")
            .sample(rng) as usize
    };
    let mut upper: Vec<f64> = (0..m)
        .map(|_| {
            let z: f64 = Exp1.sample(rng);
            t + z
        })
        .filter(|e| *e >= start)
        .collect();
    if upper.is_empty() {
        return Ok(0);
    }
    upper.sort_by(f64::total_cmp);
    let mut right = start;
    let mut cells = 0u32;
    let mut occupied = false;
    for e in upper {
        while e >= right {
            cells += u32::from(occupied);
            occupied = false;
            right += draws.draw_increment(rng);
        }
        occupied = true;
    }
    Ok(cells + u32::from(occupied))
}

/// K_n along one growing population: players arrive one at a time with
/// independent Exponential(1) positions, against a single renewal range.
/// Returns `(n, K_n)` at each checkpoint, which must be increasing.
pub fn growth_trajectory<R: Rng + ?Sized>(
    draws: &MeasureSampler,
    checkpoints: &[usize],
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.first() == Some(&0) {
        return Err(SieveError::Invalid(
            "checkpoints must be positive and increasing".into(),
        ));
    }
    let mut boundaries = vec![0.0];
    let mut occupied: Vec<bool> = Vec::new();
    let mut k = 0usize;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    let last = checkpoints.last().copied().unwrap_or(0);
    for player in 1..=last {
        let e: f64 = Exp1.sample(rng);
        while *boundaries.last().expect("nonempty") <= e {
            let b = boundaries.last().expect("nonempty") + draws.draw_increment(rng);
            boundaries.push(b);
            occupied.push(false);
        }
        // Cell i is [boundaries[i], boundaries[i+1]).
        let cell = boundaries.partition_point(|b| *b <= e) - 1;
        if !occupied[cell] {
            occupied[cell] = true;
            k += 1;
        }
        if next.peek() == Some(&&player) {
            out.push((player, k));
            next.next();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
