//! Brute-force law of C_n over all 2^(n-1) compositions, used to check the
//! dynamic programs.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Composition, PartsLaw, TransitionKernel};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEntry {
    pub parts: Vec<u32>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleLaw {
    pub n: usize,
    /// Sorted lexicographically by parts.
    pub entries: Vec<OracleEntry>,
}

impl OracleLaw {
    pub(super) fn enumerate(kernel: &TransitionKernel, n: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..=n)
            .map(|j| {
                let mut row = Vec::new();
                if j > 0 {
                    kernel.transition_row(j, &mut row);
                }
                row
            })
            .collect();
        let mut entries = Vec::with_capacity(1 << (n - 1));
        let mut stack = Vec::new();
        walk(&rows, n, 1.0, &mut stack, &mut entries);
        entries.sort_by(|a, b| a.parts.cmp(&b.parts));
        Ok(Self { n, entries })
    }

    fn from_map(n: usize, map: BTreeMap<Vec<u32>, f64>) -> Self {
        Self {
            n,
            entries: map
                .into_iter()
                .map(|(parts, probability)| OracleEntry { parts, probability })
                .collect(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        crate::special::compensated_sum(self.entries.iter().map(|e| e.probability))
    }

    pub fn probability(&self, c: &Composition) -> f64 {
        self.entries
            .binary_search_by(|e| e.parts.cmp(&c.parts))
            .map(|i| self.entries[i].probability)
            .unwrap_or(0.0)
    }

    pub fn parts_law(&self) -> PartsLaw {
        let mut p = vec![0.0; self.n + 1];
        for e in &self.entries {
            p[e.parts.len()] += e.probability;
        }
        PartsLaw { n: self.n, p }
    }

    /// P(F_n = m) for m = 0..=n (index 0 is zero).
    pub fn first_part_law(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n + 1];
        for e in &self.entries {
            p[e.parts[0] as usize] += e.probability;
        }
        p
    }

    /// Law of the remaining parts given that the first part is m, for m < n.
    pub fn remainder_law(&self, m: usize) -> Self {
        let mut map = BTreeMap::new();
        let mut mass = 0.0;
        for e in &self.entries {
            if e.parts[0] as usize == m && e.parts.len() > 1 {
                *map.entry(e.parts[1..].to_vec()).or_insert(0.0) += e.probability;
                mass += e.probability;
            }
        }
        for p in map.values_mut() {
            *p /= mass;
        }
        Self::from_map(self.n - m, map)
    }

    /// Removes one of the n units uniformly at random: a part of size s is
    /// hit with probability s/n and shrinks by one, vanishing at zero.
    pub fn size_biased_decrement(&self) -> Self {
        let nf = self.n as f64;
        let mut map = BTreeMap::new();
        for e in &self.entries {
            for (i, &s) in e.parts.iter().enumerate() {
                let mut next = e.parts.clone();
                if s == 1 {
                    next.remove(i);
                } else {
                    next[i] -= 1;
                }
                *map.entry(next).or_insert(0.0) += e.probability * s as f64 / nf;
            }
        }
        Self::from_map(self.n - 1, map)
    }

    /// Probability that the chain started at n passes through state m.
    pub fn visit_probability(&self, m: usize) -> f64 {
        let mut acc = 0.0;
        for e in &self.entries {
            let mut state = self.n;
            let mut hit = state == m;
            for &p in &e.parts {
                state -= p as usize;
                hit |= state == m;
            }
            if hit {
                acc += e.probability;
            }
        }
        acc
    }

    /// Largest pointwise difference between two laws on compositions of the
    /// same integer.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut all: BTreeMap<&[u32], (f64, f64)> = BTreeMap::new();
        for e in &self.entries {
            all.entry(&e.parts).or_default().0 = e.probability;
        }
        for e in &other.entries {
            all.entry(&e.parts).or_default().1 = e.probability;
        }
        all.values().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn walk(rows: &[Vec<f64>], state: usize, p: f64, stack: &mut Vec<u32>, out: &mut Vec<OracleEntry>) {
    if state == 0 {
        out.push(OracleEntry {
            parts: stack.clone(),
            probability: p,
        });
        return;
    }
    for m in 1..=state {
        stack.push(m as u32);
        walk(rows, state - m, p * rows[state][m], stack, out);
        stack.pop();
    }
}
