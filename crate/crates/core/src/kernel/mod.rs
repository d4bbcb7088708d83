//! Exact finite-n engine for the sieve chain n → n - m.
//!
//! Rows of the transition law are generated on demand in O(n) space; series
//! over a horizon N stream through the rows once, O(N²) time and O(N)
//! memory.

mod oracle;

use parking_lot::RwLock;
use serde::Serialize;

pub use oracle::OracleLaw;

use crate::error::{Result, SieveError};
use crate::measure::StickBreakingMeasure;
use crate::special::{compensated_dot, CompensatedSum};

/// Size limits for the super-linear exact computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactCaps {
    pub parts: usize,
    pub potential: usize,
    pub oracle: usize,
}

impl Default for ExactCaps {
    fn default() -> Self {
        Self {
            parts: 512,
            potential: 2000,
            oracle: 14,
        }
    }
}

impl ExactCaps {
    /// Defaults overridden by `SIEVE_PARTS_CAP`, `SIEVE_POTENTIAL_CAP` and
    /// `SIEVE_ORACLE_CAP` when those are set to integers.
    pub fn from_env() -> Self {
        let read = |key: &str, default: usize| {
            std::env::var(key)
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(default)
        };
        let d = Self::default();
        Self {
            parts: read("SIEVE_PARTS_CAP", d.parts),
            potential: read("SIEVE_POTENTIAL_CAP", d.potential),
            oracle: read("SIEVE_ORACLE_CAP", d.oracle),
        }
    }
}

/// An ordered list of positive parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Composition {
    pub parts: Vec<u32>,
}

impl Composition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() {
            return Err(SieveError::EmptyComposition);
        }
        if parts.contains(&0) {
            return Err(SieveError::Invalid(
                "composition parts must be positive".into(),
            ));
        }
        Ok(Self { parts })
    }

    pub fn n(&self) -> usize {
        self.parts.iter().map(|&p| p as usize).sum()
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }
}

/// a_n = E K_n, v_n = Var K_n and the inhomogeneous term of the variance
/// recursion. Index n holds the value for n balls; index 0 is the empty
/// state (all zero).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub horizon: usize,
    pub a: Vec<f64>,
    pub v: Vec<f64>,
    /// Σ_m q(n,m) (a_{n-m} - Σ_j q(n,j) a_{n-j})², which equals
    /// 2a_n - 1 - a_n² + Σ_m q(n,m) a_{n-m}² without the cancellation.
    pub bracket: Vec<f64>,
}

/// Law of the number of parts K_n; `p[k] = P(K_n = k)`, `p[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartsLaw {
    pub n: usize,
    pub p: Vec<f64>,
}

impl PartsLaw {
    pub fn total(&self) -> f64 {
        crate::special::compensated_sum(self.p.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        crate::special::compensated_sum(self.p.iter().enumerate().map(|(k, p)| k as f64 * p))
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        crate::special::compensated_sum(
            self.p
                .iter()
                .enumerate()
                .map(|(k, p)| (k as f64 - m).powi(2) * p),
        )
    }
}

/// Visit probabilities g(n, m) of the chain started at n; `g[0] = 1` since
/// the chain is always absorbed at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialTable {
    pub n: usize,
    pub g: Vec<f64>,
}

impl PotentialTable {
    /// r_n + Σ_{m<n} g(n,m) r_m for rewards `r[m-1] = r_m`.
    pub fn reward(&self, r: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for m in 1..=self.n {
            acc.add(self.g[m] * r[m - 1]);
        }
        acc.value()
    }
}

/// Transition law of the sieve chain for a fixed measure.
#[derive(Debug)]
pub struct TransitionKernel {
    measure: StickBreakingMeasure,
    caps: ExactCaps,
    // W(0..len); extended by recomputation, which is deterministic, so
    // concurrent writers always store identical values.
    w_memo: RwLock<Vec<f64>>,
}

impl Clone for TransitionKernel {
    fn clone(&self) -> Self {
        Self {
            measure: self.measure.clone(),
            caps: self.caps,
            w_memo: RwLock::new(self.w_memo.read().clone()),
        }
    }
}

impl TransitionKernel {
    pub fn new(measure: StickBreakingMeasure) -> Self {
        Self::with_caps(measure, ExactCaps::from_env())
    }

    pub fn with_caps(measure: StickBreakingMeasure, caps: ExactCaps) -> Self {
        Self {
            measure,
            caps,
            w_memo: RwLock::new(vec![0.0]),
        }
    }

    pub fn measure(&self) -> &StickBreakingMeasure {
        &self.measure
    }

    pub fn caps(&self) -> ExactCaps {
        self.caps
    }

    /// W(n) = 1 - w(n, 0), memoized.
    pub fn char_exponent(&self, n: usize) -> f64 {
        if let Some(w) = self.w_memo.read().get(n) {
            return *w;
        }
        let len = self.w_memo.read().len();
        let target = n.max(2 * len).max(64);
        let table = self.measure.char_exponent_table(target);
        let mut memo = self.w_memo.write();
        if memo.len() < table.len() {
            *memo = table;
        }
        memo[n]
    }

    /// W(0), ..., W(n) as a fresh vector.
    pub fn char_exponents(&self, n: usize) -> Vec<f64> {
        self.char_exponent(n);
        self.w_memo.read()[..=n].to_vec()
    }

    /// q(n, m) = w(n, m) / W(n) for 1 ≤ m ≤ n.
    pub fn transition(&self, n: usize, m: usize) -> Result<f64> {
        if m == 0 || m > n {
            return Err(SieveError::OutOfRange(format!(
                "transition n = {n}, m = {m}"
            )));
        }
        Ok(self.measure.binomial_moment(n, m)? / self.char_exponent(n))
    }

    /// Writes q(n, 0..=n) into `out` with `out[0] = 0`; the row is
    /// normalized by its own sum so it is stochastic to rounding.
    pub fn transition_row(&self, n: usize, out: &mut Vec<f64>) {
        self.measure.binomial_moment_row(n, out);
        out[0] = 0.0;
        let total = crate::special::compensated_sum(out.iter().copied());
        let inv = 1.0 / total;
        for q in out.iter_mut() {
            *q *= inv;
        }
    }

    /// Probability of an ordered composition under the decrement
    /// convention q(n, n₁) q(n - n₁, n₂) ···.
    pub fn composition_probability(&self, c: &Composition) -> Result<f64> {
        if c.parts.is_empty() {
            return Err(SieveError::EmptyComposition);
        }
        let mut state = c.n();
        let mut p = 1.0;
        for &part in &c.parts {
            let part = part as usize;
            if part == 0 {
                return Err(SieveError::Invalid(
                    "composition parts must be positive".into(),
                ));
            }
            p *= self.transition(state, part)?;
            state -= part;
        }
        Ok(p)
    }

    /// Calls `visit(n, row)` for n = 1..=horizon with `row` = q(n, ·).
    fn sweep<F: FnMut(usize, &[f64])>(&self, horizon: usize, mut visit: F) {
        let mut row = Vec::with_capacity(horizon + 1);
        for n in 1..=horizon {
            self.transition_row(n, &mut row);
            visit(n, &row);
        }
    }

    /// Σ_{m=1}^{n} q(n,m) x_{n-m} for a row and a history vector `x[0..n]`.
    fn expect_from(row: &[f64], x: &[f64]) -> f64 {
        let n = row.len() - 1;
        let mut acc = CompensatedSum::new();
        for m in 1..=n {
            acc.add(row[m] * x[n - m]);
        }
        acc.value()
    }

    /// a_n = 1 + Σ q(n,m) a_{n-m}, a_0 = 0, for n ≤ horizon.
    pub fn mean_series(&self, horizon: usize) -> Vec<f64> {
        let mut a = Vec::with_capacity(horizon + 1);
        a.push(0.0);
        self.sweep(horizon, |_, row| {
            let next = 1.0 + Self::expect_from(row, &a);
            a.push(next);
        });
        a
    }

    /// Means, variances and the variance-recursion inhomogeneity together.
    pub fn moment_series(&self, horizon: usize) -> MomentSeries {
        let mut a = vec![0.0];
        let mut v = vec![0.0];
        let mut bracket = vec![0.0];
        let mut centred = Vec::with_capacity(horizon + 1);
        self.sweep(horizon, |n, row| {
            let s1 = Self::expect_from(row, &a);
            centred.clear();
            centred.extend((1..=n).map(|m| (a[n - m] - s1).powi(2)));
            let t = compensated_dot(&row[1..], &centred);
            let vn = t + Self::expect_from(row, &v);
            a.push(1.0 + s1);
            v.push(vn.max(0.0));
            bracket.push(t);
        });
        MomentSeries {
            horizon,
            a,
            v,
            bracket,
        }
    }

    /// v_n, computed alongside a_n.
    pub fn variance_series(&self, horizon: usize) -> Vec<f64> {
        self.moment_series(horizon).v
    }

    /// b_n = r_n + Σ q(n,m) b_{n-m} with b_0 = `b0`; `r[n-1] = r_n`.
    /// Returns b_0..b_N.
    pub fn reward_series(&self, r: &[f64], b0: f64) -> Vec<f64> {
        let mut b = Vec::with_capacity(r.len() + 1);
        b.push(b0);
        self.sweep(r.len(), |n, row| {
            let next = r[n - 1] + Self::expect_from(row, &b);
            b.push(next);
        });
        b
    }

    /// Exact law of K_n by dynamic programming over (state, parts).
    pub fn parts_distribution(&self, n: usize) -> Result<PartsLaw> {
        if n == 0 {
            return Err(SieveError::Invalid("parts distribution needs n ≥ 1".into()));
        }
        if n > self.caps.parts {
            return Err(SieveError::CapExceeded {
                what: "parts-distribution n",
                n,
                cap: self.caps.parts,
            });
        }
        // f[j][k] = P(K_j = k); f[0] = δ₀.
        let mut f: Vec<Vec<f64>> = vec![vec![1.0]];
        let mut row = Vec::new();
        for j in 1..=n {
            self.transition_row(j, &mut row);
            let mut cur = vec![CompensatedSum::new(); j + 1];
            for m in 1..=j {
                let q = row[m];
                for (k, p) in f[j - m].iter().enumerate() {
                    cur[k + 1].add(q * p);
                }
            }
            f.push(cur.into_iter().map(|s| s.value()).collect());
        }
        Ok(PartsLaw {
            n,
            p: f.pop().expect("n ≥ 1"),
        })
    }

    /// g(n, m) by pushing visit mass down from n through each row once.
    pub fn potential_table(&self, n: usize) -> Result<PotentialTable> {
        if n > self.caps.potential {
            return Err(SieveError::CapExceeded {
                what: "potential-table n",
                n,
                cap: self.caps.potential,
            });
        }
        let mut acc = vec![CompensatedSum::new(); n + 1];
        let mut g = vec![0.0; n + 1];
        g[n] = 1.0;
        let mut row = Vec::new();
        for j in (1..=n).rev() {
            if j < n {
                g[j] = acc[j].value();
            }
            if g[j] == 0.0 {
                continue;
            }
            self.transition_row(j, &mut row);
            for (i, q) in row.iter().enumerate().take(j).skip(1) {
                acc[j - i].add(g[j] * q);
            }
        }
        g[0] = 1.0;
        Ok(PotentialTable { n, g })
    }

    /// Every composition of n with its probability.
    pub fn enumerate_oracle(&self, n: usize) -> Result<OracleLaw> {
        if n == 0 || n > self.caps.oracle {
            return Err(SieveError::CapExceeded {
                what: "oracle n",
                n,
                cap: self.caps.oracle,
            });
        }
        OracleLaw::enumerate(self, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn uniform() -> TransitionKernel {
        TransitionKernel::with_caps(StickBreakingMeasure::uniform(), ExactCaps::default())
    }

    fn coin() -> TransitionKernel {
        TransitionKernel::with_caps(
            StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap(),
            ExactCaps::default(),
        )
    }

    fn zoo() -> Vec<TransitionKernel> {
        let t = crate::measure::TabulatedDensity::new(vec![0.0, 0.4, 1.0], vec![1.0, 2.0, 0.5])
            .unwrap();
        [
            StickBreakingMeasure::uniform(),
            StickBreakingMeasure::beta(1.0, 2.0).unwrap(),
            StickBreakingMeasure::beta(0.5, 3.0).unwrap(),
            StickBreakingMeasure::discrete(&[(0.3, 0.5), (0.7, 0.5)], false).unwrap(),
            StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap(),
            StickBreakingMeasure::tabulated(t, "tent"),
        ]
        .into_iter()
        .map(|m| TransitionKernel::with_caps(m, ExactCaps::default()))
        .collect()
    }

    #[test]
    fn transition_examples() {
        assert_relative_eq!(
            uniform().transition(3, 1).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            coin().transition(2, 1).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            coin().transition(2, 2).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-14
        );
        for k in zoo() {
            assert_relative_eq!(k.transition(1, 1).unwrap(), 1.0, max_relative = 1e-14);
        }
        assert!(uniform().transition(3, 0).is_err());
        assert!(uniform().transition(3, 4).is_err());
    }

    #[test]
    fn rows_are_stochastic_and_positive() {
        let mut row = Vec::new();
        for k in zoo() {
            for n in [1, 2, 10, 333, 2000] {
                k.transition_row(n, &mut row);
                let s = crate::special::compensated_sum(row.iter().copied());
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
                assert!(row[1..].iter().all(|q| *q > 0.0 || n > 1000));
                assert_abs_diff_eq!(
                    row[n / 2 + 1],
                    k.transition(n, n / 2 + 1).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn composition_examples() {
        let u = uniform();
        let c = |p: Vec<u32>| Composition::new(p).unwrap();
        assert_relative_eq!(
            u.composition_probability(&c(vec![2, 1])).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            u.composition_probability(&c(vec![1, 2])).unwrap(),
            1.0 / 6.0,
            max_relative = 1e-14
        );
        for k in zoo() {
            assert_relative_eq!(
                k.composition_probability(&c(vec![7])).unwrap(),
                k.transition(7, 7).unwrap(),
                max_relative = 1e-14
            );
        }
        assert!(matches!(
            Composition::new(vec![]),
            Err(SieveError::EmptyComposition)
        ));
        let empty = Composition { parts: vec![] };
        assert!(matches!(
            u.composition_probability(&empty),
            Err(SieveError::EmptyComposition)
        ));
    }

    #[test]
    fn parts_distribution_examples() {
        let law = uniform().parts_distribution(3).unwrap();
        assert_abs_diff_eq!(law.p[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(law.p[2], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(law.p[3], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(law.mean(), 11.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(law.variance(), 17.0 / 36.0, epsilon = 1e-14);
        for k in zoo() {
            assert_eq!(k.parts_distribution(1).unwrap().p, vec![0.0, 1.0]);
        }
        assert!(matches!(
            uniform().parts_distribution(513),
            Err(SieveError::CapExceeded { .. })
        ));
    }

    #[test]
    fn harmonic_means_for_uniform() {
        let a = uniform().mean_series(5);
        let h = [0.0, 1.0, 1.5, 11.0 / 6.0, 25.0 / 12.0, 137.0 / 60.0];
        for (x, y) in a.iter().zip(h) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-14);
        }
        let a = uniform().mean_series(1000);
        let h1000: f64 = (1..=1000).map(|j| 1.0 / j as f64).sum();
        assert_relative_eq!(a[1000], h1000, max_relative = 1e-12);
    }

    #[test]
    fn series_agree_with_parts_distribution() {
        for k in zoo() {
            let s = k.moment_series(120);
            assert_eq!(s.a[1], 1.0);
            assert_eq!(s.v[1], 0.0);
            for n in [1, 2, 7, 50, 120] {
                let law = k.parts_distribution(n).unwrap();
                assert_abs_diff_eq!(law.total(), 1.0, epsilon = 1e-10);
                assert_abs_diff_eq!(law.mean(), s.a[n], epsilon = 1e-10);
                assert_abs_diff_eq!(law.variance(), s.v[n], epsilon = 1e-8);
            }
            for w in s.a.windows(2) {
                assert!(w[1] >= w[0]);
            }
            assert_eq!(k.mean_series(120), s.a);
        }
    }

    #[test]
    fn bracket_matches_the_printed_form() {
        let k = TransitionKernel::with_caps(
            StickBreakingMeasure::beta(1.0, 2.0).unwrap(),
            ExactCaps::default(),
        );
        let s = k.moment_series(60);
        let mut row = Vec::new();
        for n in 1..=60 {
            k.transition_row(n, &mut row);
            let sq: f64 = (1..=n).map(|m| row[m] * s.a[n - m].powi(2)).sum();
            let printed = 2.0 * s.a[n] - 1.0 - s.a[n].powi(2) + sq;
            assert_abs_diff_eq!(printed, s.bracket[n], epsilon = 1e-11);
        }
    }

    #[test]
    fn reward_series_special_cases() {
        for k in zoo() {
            let ones = vec![1.0; 80];
            assert_eq!(k.reward_series(&ones, 0.0), k.mean_series(80));
            assert!(k.reward_series(&[0.0; 40], 0.0).iter().all(|b| *b == 0.0));
        }
    }

    #[test]
    fn potential_examples() {
        let u = uniform();
        let t = u.potential_table(4).unwrap();
        assert_eq!(t.g[4], 1.0);
        assert_abs_diff_eq!(t.g[3], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(t.g[2], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.g[1], 0.5, epsilon = 1e-15);
        // For the uniform kernel g(n, m) = 1/(m+1) below the start.
        let t = u.potential_table(300).unwrap();
        for m in 1..300 {
            assert_relative_eq!(t.g[m], 1.0 / (m as f64 + 1.0), max_relative = 1e-12);
        }
        assert!(matches!(
            u.potential_table(2001),
            Err(SieveError::CapExceeded { .. })
        ));
    }

    #[test]
    fn potential_matches_path_enumeration() {
        for k in zoo() {
            let n = 8;
            let law = k.enumerate_oracle(n).unwrap();
            let t = k.potential_table(n).unwrap();
            for m in 1..=n {
                let visits = law.visit_probability(m);
                assert_abs_diff_eq!(t.g[m], visits, epsilon = 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn potential_reward_duality(
            seed_rewards in prop::collection::vec(-5.0f64..5.0, 1..200),
            which in 0usize..6,
        ) {
            let k = &zoo()[which];
            let n = seed_rewards.len();
            let b = k.reward_series(&seed_rewards, 0.0);
            let t = k.potential_table(n).unwrap();
            prop_assert!((t.reward(&seed_rewards) - b[n]).abs() <= 1e-9 * (1.0 + b[n].abs()));
        }
    }

    #[test]
    fn memo_is_consistent() {
        let k = TransitionKernel::with_caps(
            StickBreakingMeasure::beta(0.5, 3.0).unwrap(),
            ExactCaps::default(),
        );
        let big = k.char_exponent(5000);
        assert_eq!(big, k.measure().char_exponent(5000));
        assert_eq!(k.char_exponent(3), k.measure().char_exponent(3));
        assert_eq!(k.char_exponents(10).len(), 11);
    }
}
