//! Goodness-of-fit statistics used by the Monte Carlo checks.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::function::gamma::gamma_ur;

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// the continuous distribution function `cdf`. Ties are handled by the
/// usual order-statistic formula, which measures the sup over both sides
/// of every jump.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    ks_distance_sorted(&sorted, cdf)
}

pub fn ks_distance_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    d.clamp(0.0, 1.0)
}

/// Largest empirical atom over two. Any continuous distribution function
/// sits within this of neither the left nor the right limit of the
/// empirical one at that atom, so it bounds `ks_distance` from below.
pub fn ks_atom_floor(samples: &[u32]) -> f64 {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for &k in samples {
        *counts.entry(k).or_insert(0) += 1;
    }
    let largest = counts.values().copied().max().unwrap_or(0);
    largest as f64 / (2.0 * samples.len().max(1) as f64)
}

/// Distance between the empirical law of integer samples and a continuous
/// approximation read with a continuity correction: the sup over integers
/// k of |F̂(k) − cdf(k + 1/2)|.
pub fn ks_distance_integer<F: Fn(f64) -> f64>(samples: &[u32], cdf: F) -> f64 {
    let (Some(&lo), Some(&hi)) = (samples.iter().min(), samples.iter().max()) else {
        return f64::NAN;
    };
    let mut counts = vec![0u64; (hi - lo) as usize + 1];
    for &k in samples {
        counts[(k - lo) as usize] += 1;
    }
    let n = samples.len() as f64;
    // Below the smallest sample F̂ = 0, above the largest F̂ = 1.
    let mut d = cdf(lo as f64 - 0.5);
    let mut below = 0u64;
    for (i, c) in counts.iter().enumerate() {
        below += c;
        let k = lo as f64 + i as f64;
        d = d.max((below as f64 / n - cdf(k + 0.5)).abs());
    }
    d.clamp(0.0, 1.0)
}

/// Asymptotic Kolmogorov tail probability P(√n D > t).
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    let t = d * (n as f64).sqrt();
    if t < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 || statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, statistic / 2.0)
}

/// Two-sample homogeneity test on categorical counts. Categories whose
/// pooled count is below `min_pooled` are merged into one bin.
pub fn chi_square_two_sample<K: Ord + Clone>(
    a: &BTreeMap<K, u64>,
    b: &BTreeMap<K, u64>,
    min_pooled: u64,
) -> ChiSquare {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut rest = (0.0, 0.0);
    for k in keys {
        let ca = *a.get(k).unwrap_or(&0) as f64;
        let cb = *b.get(k).unwrap_or(&0) as f64;
        if ((ca + cb) as u64) < min_pooled {
            rest.0 += ca;
            rest.1 += cb;
        } else {
            bins.push((ca, cb));
        }
    }
    if rest.0 + rest.1 > 0.0 {
        bins.push(rest);
    }
    let (na, nb) = (na as f64, nb as f64);
    let total = na + nb;
    let mut stat = 0.0;
    for (ca, cb) in &bins {
        let pooled = ca + cb;
        let ea = pooled * na / total;
        let eb = pooled * nb / total;
        if ea > 0.0 {
            stat += (ca - ea).powi(2) / ea;
        }
        if eb > 0.0 {
            stat += (cb - eb).powi(2) / eb;
        }
    }
    let dof = bins.len().saturating_sub(1);
    ChiSquare {
        statistic: stat,
        dof,
        p_value: chi_square_sf(stat, dof),
    }
}

/// Goodness of fit of `counts[i]` to probabilities `probs[i]`. Cells with
/// expected count below `min_expected` are merged.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], min_expected: f64) -> ChiSquare {
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut rest = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probs) {
        let e = p * nf;
        if e < min_expected {
            rest.0 += *c as f64;
            rest.1 += e;
        } else {
            bins.push((*c as f64, e));
        }
    }
    if rest.1 > 0.0 {
        bins.push(rest);
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len().saturating_sub(1);
    ChiSquare {
        statistic: stat,
        dof,
        p_value: chi_square_sf(stat, dof),
    }
}

/// Mean and unbiased variance with compensated accumulation.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = crate::special::compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = crate::special::compensated_sum(xs.iter().map(|x| (x - mean).powi(2)));
    (mean, ss / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ks_of_exact_quantiles_is_half_step() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert_abs_diff_eq!(ks_distance(&xs, |x| x), 0.5 / n as f64, epsilon = 1e-15);
    }

    #[test]
    fn ks_with_ties() {
        // All mass at 0.5 against U(0,1): the sup is 0.5.
        let xs = vec![0.5; 10];
        assert_abs_diff_eq!(ks_distance(&xs, |x| x), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn atom_floor_bounds_ks_from_below() {
        let xs: Vec<u32> = (0..1000).map(|i| (i % 7 + i % 3) as u32).collect();
        let floats: Vec<f64> = xs.iter().map(|&k| k as f64).collect();
        let floor = ks_atom_floor(&xs);
        for shift in [-1.0, 0.0, 0.3, 2.5] {
            let cdf = |x: f64| crate::special::normal_cdf((x - 4.0 - shift) / 2.0);
            assert!(ks_distance(&floats, cdf) >= floor - 1e-15);
        }
    }

    #[test]
    fn continuity_corrected_ks_of_exact_law_is_zero() {
        // Samples 0, 1, 2, 3 equally often against the cdf that puts 1/4 on
        // each unit interval (k − 1/2, k + 1/2].
        let xs: Vec<u32> = (0..400).map(|i| i % 4).collect();
        let cdf = |x: f64| ((x + 0.5) / 4.0).clamp(0.0, 1.0);
        assert_abs_diff_eq!(ks_distance_integer(&xs, cdf), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kolmogorov_tail() {
        // P(K > 1.358) ≈ 0.05.
        assert_abs_diff_eq!(
            kolmogorov_pvalue(1.358 / 100.0, 10_000),
            0.05,
            epsilon = 1e-3
        );
    }

    #[test]
    fn chi_square_identical_samples() {
        let a: BTreeMap<u32, u64> = [(1, 500), (2, 300), (3, 200)].into_iter().collect();
        let r = chi_square_two_sample(&a, &a, 10);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 2);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn chi_square_detects_difference() {
        let a: BTreeMap<u32, u64> = [(1, 600), (2, 400)].into_iter().collect();
        let b: BTreeMap<u32, u64> = [(1, 400), (2, 600)].into_iter().collect();
        assert!(chi_square_two_sample(&a, &b, 10).p_value < 1e-10);
    }

    #[test]
    fn chi_square_sf_matches_known_quantile() {
        // 95% quantile of χ²₃ is 7.8147.
        assert_abs_diff_eq!(chi_square_sf(7.814727903, 3), 0.05, epsilon = 1e-8);
        let r = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4], 5.0);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn moments() {
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert_abs_diff_eq!(v, 5.0 / 3.0, epsilon = 1e-15);
        assert_eq!(mean_variance(&[7.0]), (7.0, 0.0));
    }
}
