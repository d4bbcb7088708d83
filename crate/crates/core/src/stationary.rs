//! The delayed (stationary) sieve: the chain started from an Ω₀-distributed
//! offset Z₀, where Ω₀ has density Ω(z, ∞)/μ.
//!
//! Integration by parts turns the occupancy integrals into tail sums of the
//! ordinary binomial-moment row:
//!
//! w₀(n, m) = Σ_{j>m} w(n, j) / (μ (n - m))              for m < n,
//! w₀(n, n) = (1/μ) ∫ Σ_{j>n} x^j / j ω(dx).
//!
//! Every term is positive, so no alternating binomial sum is ever formed.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Result, SieveError};
use crate::kernel::TransitionKernel;
use crate::measure::MeasureKind;
use crate::quad::{integrate, integrate_to_infinity};
use crate::special::CompensatedSum;

#[derive(Debug, Clone)]
pub struct StationaryKernel {
    base: Arc<TransitionKernel>,
    mu: f64,
}

/// Residuals of the finite-n reward identities for the stationary chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardResiduals {
    /// |Σ_{m<n} g₀(m) r_m - Σ_{m≥1} q₀(n,m) b_{n-m}|.
    pub excluding_start: f64,
    /// |g₀(n) r_n + Σ_{m<n} g₀(m) r_m - Σ_{m≥0} w₀(n,m) b_{n-m}|.
    pub including_start: f64,
    /// The same identity with weight 1 on r_n instead of g₀(n); this form
    /// is off by exactly r_n (1 - w₀(n, 0)).
    pub including_start_unit_weight: f64,
}

impl StationaryKernel {
    pub fn new(base: TransitionKernel) -> Result<Self> {
        Self::shared(Arc::new(base))
    }

    pub fn shared(base: Arc<TransitionKernel>) -> Result<Self> {
        let mu = base.measure().log_moments()?.mu;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(SieveError::Hypothesis(format!(
                "first log-moment must be finite and positive, got {mu}"
            )));
        }
        Ok(Self { base, mu })
    }

    pub fn base(&self) -> &TransitionKernel {
        &self.base
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Density of Ω₀ at z.
    pub fn stationary_density(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        self.base.measure().levy_survival(z) / self.mu
    }

    /// ∫₀^z Ω(ζ, ∞) dζ and ∫_z^∞ Ω(ζ, ∞) dζ.
    fn survival_integrals(&self, z: f64) -> Result<(f64, f64)> {
        let measure = self.base.measure();
        if let MeasureKind::Discrete(atoms) = measure.kind() {
            let mut lo = CompensatedSum::new();
            let mut hi = CompensatedSum::new();
            for a in atoms {
                lo.add(a.weight * a.phi.min(z));
                hi.add(a.weight * (a.phi - z).max(0.0));
            }
            return Ok((lo.value(), hi.value()));
        }
        let tol = measure.tolerance();
        let s = |t: f64| measure.levy_survival(t);
        let lo = integrate(s, 0.0, z, tol)?.value;
        let hi = integrate_to_infinity(s, z, tol)?.value;
        Ok((lo, hi))
    }

    /// Ω₀[0, z].
    pub fn stationary_cdf(&self, z: f64) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = self.survival_integrals(z)?;
        Ok(if lo <= hi {
            lo / self.mu
        } else {
            1.0 - hi / self.mu
        })
    }

    /// Ω₀(z, ∞).
    pub fn stationary_survival(&self, z: f64) -> Result<f64> {
        if z <= 0.0 {
            return Ok(1.0);
        }
        let (lo, hi) = self.survival_integrals(z)?;
        Ok(if hi <= lo {
            hi / self.mu
        } else {
            1.0 - lo / self.mu
        })
    }

    /// g₀(m) = W(m) / (μ m).
    pub fn stationary_potential(&self, m: usize) -> f64 {
        self.base.char_exponent(m) / (self.mu * m as f64)
    }

    /// g₀(m) in its second form, ∫ e^{-mz} Ω₀(dz), by quadrature.
    pub fn stationary_potential_by_integral(&self, m: usize) -> Result<f64> {
        let measure = self.base.measure();
        let mf = m as f64;
        let f = |z: f64| (-mf * z).exp() * measure.levy_survival(z);
        let v = match measure.kind() {
            MeasureKind::Discrete(atoms) => {
                let mut acc = CompensatedSum::new();
                for a in atoms {
                    acc.add(a.weight * -(-mf * a.phi).exp_m1() / mf);
                }
                acc.value()
            }
            _ => {
                let knee = 1.0 / mf;
                integrate(f, 0.0, knee, measure.tolerance())?.value
                    + integrate_to_infinity(f, knee, measure.tolerance())?.value
            }
        };
        Ok(v / self.mu)
    }

    /// w₀(n, 0..=n).
    pub fn initial_occupancy_row(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Ok(vec![1.0]);
        }
        let mut w = Vec::new();
        self.base.measure().binomial_moment_row(n, &mut w);
        let mut out = vec![0.0; n + 1];
        let mut tail = CompensatedSum::new();
        for m in (0..n).rev() {
            tail.add(w[m + 1]);
            out[m] = tail.value() / (self.mu * (n - m) as f64);
        }
        out[n] = self.base.measure().log_series_tail(n as u64)? / self.mu;
        Ok(out)
    }

    /// w₀(n, m).
    pub fn initial_occupancy(&self, n: usize, m: usize) -> Result<f64> {
        if m > n {
            return Err(SieveError::OutOfRange(format!("m = {m} exceeds n = {n}")));
        }
        if m == n {
            return Ok(self.base.measure().log_series_tail(n as u64)? / self.mu);
        }
        Ok(self.initial_occupancy_row(n)?[m])
    }

    /// q₀(n, 0..=n) with `q₀[0] = 0`: the first part of the stationary
    /// composition, q₀(n, m) = w₀(n, m) + w₀(n, 0) q(n, m).
    pub fn first_part_row(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(SieveError::Invalid("first part needs n ≥ 1".into()));
        }
        let w0 = self.initial_occupancy_row(n)?;
        let mut q = Vec::new();
        self.base.transition_row(n, &mut q);
        let mut out = vec![0.0; n + 1];
        for m in 1..=n {
            out[m] = w0[m] + w0[0] * q[m];
        }
        Ok(out)
    }

    pub fn first_part_stationary(&self, n: usize, m: usize) -> Result<f64> {
        if m == 0 || m > n {
            return Err(SieveError::OutOfRange(format!(
                "first part n = {n}, m = {m}"
            )));
        }
        Ok(self.first_part_row(n)?[m])
    }

    /// 1 + Σ_{m=1}^{n-1} W(m) / (m μ).
    pub fn stationary_mean_parts(&self, n: usize) -> f64 {
        let w = self.base.char_exponents(n.max(1));
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for (m, wm) in w.iter().enumerate().take(n).skip(1) {
            acc.add(wm / (m as f64 * self.mu));
        }
        acc.value()
    }

    /// Probability that the stationary chain from n visits each state
    /// m < n (first step by q₀, later steps by q); index n holds 1.
    pub fn stationary_visit_probabilities(&self, n: usize) -> Result<Vec<f64>> {
        let first = self.first_part_row(n)?;
        let mut acc = vec![CompensatedSum::new(); n + 1];
        for m in 1..=n {
            acc[n - m].add(first[m]);
        }
        let mut visits = vec![0.0; n + 1];
        visits[n] = 1.0;
        let mut row = Vec::new();
        for j in (1..n).rev() {
            visits[j] = acc[j].value();
            self.base.transition_row(j, &mut row);
            for i in 1..j {
                acc[j - i].add(visits[j] * row[i]);
            }
        }
        visits[0] = 1.0;
        Ok(visits)
    }

    /// Checks both reward identities for rewards `r[m-1] = r_m`, m ≤ n.
    pub fn reward_identity_residual(&self, r: &[f64], n: usize) -> Result<RewardResiduals> {
        if n == 0 || r.len() < n {
            return Err(SieveError::Invalid(format!(
                "need n ≥ 1 rewards, got n = {n}, len = {}",
                r.len()
            )));
        }
        let r = &r[..n];
        let b = self.base.reward_series(r, 0.0);
        let w0 = self.initial_occupancy_row(n)?;
        let q0 = self.first_part_row(n)?;
        let mut below = CompensatedSum::new();
        for m in 1..n {
            below.add(self.stationary_potential(m) * r[m - 1]);
        }
        let below = below.value();
        let mut via_q0 = CompensatedSum::new();
        for m in 1..=n {
            via_q0.add(q0[m] * b[n - m]);
        }
        let mut via_w0 = CompensatedSum::new();
        for m in 0..=n {
            via_w0.add(w0[m] * b[n - m]);
        }
        let rn = r[n - 1];
        Ok(RewardResiduals {
            excluding_start: (below - via_q0.value()).abs(),
            including_start: (w0[0] * rn + below - via_w0.value()).abs(),
            including_start_unit_weight: (rn + below - via_w0.value()).abs(),
        })
    }
}

/// Inverse distribution function of Ω₀, used to draw the stationary offset.
#[derive(Debug, Clone)]
pub struct StationaryInverse {
    repr: InverseRepr,
}

#[derive(Debug, Clone)]
enum InverseRepr {
    /// Ω₀ has the piecewise-linear cdf (1/μ) Σ p_i min(z, φ_i).
    Steps {
        knots: Vec<f64>,
        cdf: Vec<f64>,
        slopes: Vec<f64>,
    },
    /// Cumulative values and densities on a grid, interpolated by cubic
    /// Hermite polynomials.
    Grid {
        z: Vec<f64>,
        cdf: Vec<f64>,
        density: Vec<f64>,
    },
}

impl StationaryInverse {
    pub fn new(s: &StationaryKernel) -> Result<Self> {
        let measure = s.base.measure();
        if let MeasureKind::Discrete(atoms) = measure.kind() {
            let mut knots = vec![0.0];
            let mut cdf = vec![0.0];
            let mut slopes = Vec::new();
            let mut remaining = 1.0;
            for a in atoms.iter() {
                let last = *knots.last().expect("nonempty");
                if a.phi > last {
                    slopes.push(remaining / s.mu);
                    let (lo, _) = s.survival_integrals(a.phi)?;
                    knots.push(a.phi);
                    cdf.push(lo / s.mu);
                }
                remaining -= a.weight;
            }
            // Atoms are sorted by x, hence by φ.
            return Ok(Self {
                repr: InverseRepr::Steps { knots, cdf, slopes },
            });
        }
        let tol = measure.tolerance();
        let mut z = vec![0.0];
        // Geometric spacing near 0, where the density may have an infinite
        // derivative, then a uniform step.
        let mut t = 1e-9;
        while t < 0.5 {
            z.push(t);
            t *= 1.05;
        }
        let mut k = 50;
        loop {
            let zk = 0.01 * k as f64;
            z.push(zk);
            k += 1;
            if measure.levy_survival(zk) < 1e-17 || zk >= 800.0 {
                break;
            }
        }
        // Build cell by cell, halving any cell whose Hermite midpoint misses
        // the quadrature value.
        let mut grid = vec![0.0];
        let mut cdf = vec![0.0];
        let mut density = vec![s.stationary_density(0.0)];
        let mut acc = CompensatedSum::new();
        for w in z.windows(2) {
            let mut pending = vec![(w[0], w[1])];
            while let Some((a, b)) = pending.pop() {
                let mass = integrate(|u| measure.levy_survival(u), a, b, tol)?.value / s.mu;
                let mid = 0.5 * (a + b);
                let half = integrate(|u| measure.levy_survival(u), a, mid, tol)?.value / s.mu;
                let (da, db) = (s.stationary_density(a), s.stationary_density(b));
                let h = b - a;
                let predicted = 0.5 * mass + h * (da - db) / 8.0;
                if (predicted - half).abs() > 1e-13 && h > 1e-12 {
                    pending.push((mid, b));
                    pending.push((a, mid));
                    continue;
                }
                acc.add(mass);
                grid.push(b);
                cdf.push(acc.value());
                density.push(db);
            }
        }
        let z = grid;
        Ok(Self {
            repr: InverseRepr::Grid { z, cdf, density },
        })
    }

    /// Smallest z with Ω₀[0, z] ≥ u, for u in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.repr {
            InverseRepr::Steps { knots, cdf, slopes } => {
                let k = cdf
                    .partition_point(|c| *c <= u)
                    .saturating_sub(1)
                    .min(slopes.len() - 1);
                (knots[k] + (u - cdf[k]) / slopes[k]).min(knots[k + 1])
            }
            InverseRepr::Grid { z, cdf, density } => {
                let last = cdf.len() - 1;
                if u >= cdf[last] {
                    return z[last];
                }
                let k = cdf
                    .partition_point(|c| *c <= u)
                    .saturating_sub(1)
                    .min(last - 1);
                let (z0, z1) = (z[k], z[k + 1]);
                let h = z1 - z0;
                let (c0, c1, d0, d1) = (cdf[k], cdf[k + 1], density[k] * h, density[k + 1] * h);
                // Hermite cubic in s ∈ [0,1]; bracketed Newton on it.
                let eval = |s: f64| {
                    let s2 = s * s;
                    let s3 = s2 * s;
                    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * c0
                        + (s3 - 2.0 * s2 + s) * d0
                        + (-2.0 * s3 + 3.0 * s2) * c1
                        + (s3 - s2) * d1;
                    let dv = (6.0 * s2 - 6.0 * s) * c0
                        + (3.0 * s2 - 4.0 * s + 1.0) * d0
                        + (-6.0 * s2 + 6.0 * s) * c1
                        + (3.0 * s2 - 2.0 * s) * d1;
                    (v, dv)
                };
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                let mut s = if c1 > c0 {
                    ((u - c0) / (c1 - c0)).clamp(0.0, 1.0)
                } else {
                    0.5
                };
                for _ in 0..100 {
                    let (v, dv) = eval(s);
                    if v < u {
                        lo = s;
                    } else {
                        hi = s;
                    }
                    let mut next = if dv > 0.0 {
                        s - (v - u) / dv
                    } else {
                        0.5 * (lo + hi)
                    };
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - s).abs() * h <= 1e-12 * (z0 + h).max(1e-300) {
                        s = next;
                        break;
                    }
                    s = next;
                }
                z0 + s * h
            }
        }
    }
}
