//! Piecewise-linear densities on [0, 1].
//!
//! Every functional the crate needs reduces, segment by segment, to
//! integrals of `(a + b x)` against `x^m (1-x)^k` or `log` powers, which
//! have closed forms. Binomial moments are differences of binomial
//! distribution functions evaluated at the breakpoints.

use std::path::Path;

use crate::error::{Result, SieveError};
use crate::special::{binomial_pmf_row, CompensatedSum};

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    xs: Vec<f64>,
    fs: Vec<f64>,
    /// Mass to the left of each breakpoint.
    left: Vec<f64>,
    /// Mass to the right of each breakpoint, summed from the top so values
    /// near x = 1 keep full relative precision.
    right: Vec<f64>,
}

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

// Antiderivatives in one variable; all vanish at 0.
fn p0(t: f64) -> f64 {
    xlogx(t) - t
}
fn p1(t: f64) -> f64 {
    0.5 * t * xlogx(t) - 0.25 * t * t
}
fn q0(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let l = t.ln();
    t * (l * l - 2.0 * l + 2.0)
}
fn q1(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let l = t.ln();
    t * t * (0.5 * l * l - 0.5 * l + 0.25)
}

impl TabulatedDensity {
    /// Validates a grid and rescales the density to unit mass.
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() != fs.len() {
            return Err(SieveError::InvalidMeasure(
                "grid and density lengths differ".into(),
            ));
        }
        if xs.len() < 2 {
            return Err(SieveError::InvalidMeasure(
                "density grid needs at least two points".into(),
            ));
        }
        for w in xs.windows(2) {
            if !(w[0] < w[1]) {
                return Err(SieveError::InvalidMeasure(
                    "grid must be strictly increasing".into(),
                ));
            }
        }
        if !(xs[0] >= 0.0 && xs[xs.len() - 1] <= 1.0) {
            return Err(SieveError::InvalidMeasure("grid must lie in [0,1]".into()));
        }
        if fs.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(SieveError::InvalidMeasure(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let mut raw = Self {
            xs,
            fs,
            left: Vec::new(),
            right: Vec::new(),
        };
        let mass = raw.build_cumulative();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(SieveError::InvalidMeasure("unnormalizable density".into()));
        }
        for f in raw.fs.iter_mut() {
            *f /= mass;
        }
        raw.build_cumulative();
        Ok(raw)
    }

    /// Reads a two-column CSV of `x, density`. A non-numeric first row is
    /// taken as a header; `#` lines are comments.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(SieveError::InvalidMeasure(format!(
                    "{}: row {} has {} columns, expected 2",
                    path.display(),
                    i + 1,
                    rec.len()
                )));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(f)) => {
                    xs.push(x);
                    fs.push(f);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(SieveError::InvalidMeasure(format!(
                        "{}: row {} is not numeric",
                        path.display(),
                        i + 1
                    )))
                }
            }
        }
        Self::new(xs, fs)
    }

    fn seg_mass(&self, k: usize) -> f64 {
        0.5 * (self.fs[k] + self.fs[k + 1]) * (self.xs[k + 1] - self.xs[k])
    }

    fn build_cumulative(&mut self) -> f64 {
        let k = self.xs.len();
        self.left = vec![0.0; k];
        self.right = vec![0.0; k];
        let mut acc = CompensatedSum::new();
        for i in 1..k {
            acc.add(self.seg_mass(i - 1));
            self.left[i] = acc.value();
        }
        let mut acc = CompensatedSum::new();
        for i in (0..k - 1).rev() {
            acc.add(self.seg_mass(i));
            self.right[i] = acc.value();
        }
        self.left[k - 1]
    }

    pub fn grid(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.fs
    }

    fn slope(&self, k: usize) -> f64 {
        (self.fs[k + 1] - self.fs[k]) / (self.xs[k + 1] - self.xs[k])
    }

    /// Index of the segment holding `x`, which must lie inside the grid.
    fn locate(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|g| *g <= x);
        k.saturating_sub(1).min(self.xs.len() - 2)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.xs[0] || x > self.xs[self.xs.len() - 1] {
            return 0.0;
        }
        let k = self.locate(x);
        self.fs[k] + self.slope(k) * (x - self.xs[k])
    }

    /// ω[0, x].
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        if self.left_half(x) {
            let k = self.locate(x);
            let u = x - self.xs[k];
            (self.left[k] + u * self.fs[k] + 0.5 * self.slope(k) * u * u).min(1.0)
        } else {
            1.0 - self.survival(x)
        }
    }

    /// ω(x, 1].
    pub fn survival(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 1.0;
        }
        if x >= self.xs[n - 1] {
            return 0.0;
        }
        if self.left_half(x) {
            return 1.0 - self.cdf(x);
        }
        let k = self.locate(x);
        let u = self.xs[k + 1] - x;
        (self.right[k + 1] + u * self.fs[k + 1] - 0.5 * self.slope(k) * u * u).max(0.0)
    }

    fn left_half(&self, x: f64) -> bool {
        let k = self.locate(x);
        self.left[k] < 0.5
    }

    /// ω(x, 1] where `x = 1 - t`, keeping precision for tiny `t`.
    pub fn survival_complement(&self, t: f64) -> f64 {
        let x = 1.0 - t;
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 1.0;
        }
        if x >= self.xs[n - 1] {
            return 0.0;
        }
        let k = self.locate(x);
        if self.left[k] < 0.5 {
            return self.survival(x);
        }
        // Distance to the right breakpoint, measured in t.
        let u = t - (1.0 - self.xs[k + 1]);
        (self.right[k + 1] + u * self.fs[k + 1] - 0.5 * self.slope(k) * u * u).max(0.0)
    }

    /// Inverse distribution function; returns `(x, 1 - x)` for `r ∈ [0,1)`.
    pub fn quantile(&self, r: f64) -> (f64, f64) {
        let n = self.xs.len();
        let k = self
            .left
            .partition_point(|l| *l <= r)
            .saturating_sub(1)
            .min(n - 2);
        let target = r - self.left[k];
        let fc = self.fs[k];
        let s = self.slope(k);
        let width = self.xs[k + 1] - self.xs[k];
        // Solve fc u + s u²/2 = target by the cancellation-free root.
        let disc = (fc * fc + 2.0 * s * target).max(0.0);
        let denom = fc + disc.sqrt();
        let u = if denom > 0.0 {
            (2.0 * target / denom).clamp(0.0, width)
        } else {
            0.0
        };
        let x = self.xs[k] + u;
        let y = (1.0 - self.xs[k]) - u;
        (x, y.max(0.0))
    }

    /// Integral of `(1-x)^n` against the density.
    pub fn complement_power_moment(&self, n: u64) -> f64 {
        let nf = n as f64;
        let mut acc = CompensatedSum::new();
        for k in 0..self.xs.len() - 1 {
            let tc = 1.0 - self.xs[k];
            let td = 1.0 - self.xs[k + 1];
            let pow = |t: f64, e: f64| if t == 0.0 { 0.0 } else { (e * t.ln()).exp() };
            let t1 = (pow(tc, nf + 1.0) - pow(td, nf + 1.0)) / (nf + 1.0);
            let t2 = (pow(tc, nf + 2.0) - pow(td, nf + 2.0)) / (nf + 2.0);
            // f = fc + s (tc - t) in the variable t = 1 - x.
            let s = self.slope(k);
            acc.add(self.fs[k] * t1 + s * (tc * t1 - t2));
        }
        acc.value().clamp(0.0, 1.0)
    }

    /// Writes w(n, m) for m = 0..=n into `out`, normalized to unit mass.
    pub fn binomial_moment_row(&self, n: usize, out: &mut Vec<f64>) {
        let grid = self.xs.len();
        // Distribution functions of Bin(n+1, x_k) and Bin(n+2, x_k) at each
        // breakpoint, stored both as lower sums and upper sums.
        let mut pmf = Vec::new();
        let mut lower1 = Vec::with_capacity(grid);
        let mut upper1 = Vec::with_capacity(grid);
        let mut lower2 = Vec::with_capacity(grid);
        let mut upper2 = Vec::with_capacity(grid);
        for &x in &self.xs {
            for (size, lower, upper) in [
                (n + 1, &mut lower1, &mut upper1),
                (n + 2, &mut lower2, &mut upper2),
            ] {
                binomial_pmf_row(size, x, 1.0 - x, &mut pmf);
                let mut lo = vec![0.0; size + 1];
                let mut hi = vec![0.0; size + 2];
                let mut acc = CompensatedSum::new();
                for j in 0..=size {
                    acc.add(pmf[j]);
                    lo[j] = acc.value();
                }
                let mut acc = CompensatedSum::new();
                for j in (0..=size).rev() {
                    acc.add(pmf[j]);
                    hi[j] = acc.value();
                }
                lower.push(lo);
                upper.push(hi);
            }
        }
        // F_c(m) - F_d(m), picking the tail that avoids cancellation.
        let diff = |lower: &Vec<Vec<f64>>, upper: &Vec<Vec<f64>>, c: usize, d: usize, m: usize| {
            if lower[c][m] + lower[d][m] < 1.0 {
                lower[c][m] - lower[d][m]
            } else {
                upper[d][m + 1] - upper[c][m + 1]
            }
        };
        out.clear();
        out.resize(n + 1, 0.0);
        let nf = n as f64;
        for (m, slot) in out.iter_mut().enumerate() {
            let mf = m as f64;
            let mut acc = CompensatedSum::new();
            for k in 0..grid - 1 {
                let a = diff(&lower1, &upper1, k, k + 1, m) / (nf + 1.0);
                let b = (mf + 1.0) / ((nf + 1.0) * (nf + 2.0))
                    * diff(&lower2, &upper2, k, k + 1, m + 1);
                acc.add(self.fs[k] * a + self.slope(k) * (b - self.xs[k] * a));
            }
            *slot = acc.value().max(0.0);
        }
        let total: f64 = crate::special::compensated_sum(out.iter().copied());
        for p in out.iter_mut() {
            *p /= total;
        }
    }

    /// ∫ -log(1-x), ∫ log²(1-x), and ∫ log x against the density.
    pub fn log_moments(&self) -> (f64, f64, f64) {
        let mut mu = CompensatedSum::new();
        let mut nu = CompensatedSum::new();
        let mut lambda = CompensatedSum::new();
        for k in 0..self.xs.len() - 1 {
            let (c, d) = (self.xs[k], self.xs[k + 1]);
            let fc = self.fs[k];
            let s = self.slope(k);
            // In t = 1 - x the segment is [td, tc] and f = fc + s (tc - t).
            let (td, tc) = (1.0 - d, 1.0 - c);
            let i0 = p0(tc) - p0(td);
            let i1 = p1(tc) - p1(td);
            mu.add(-(fc * i0 + s * (tc * i0 - i1)));
            let j0 = q0(tc) - q0(td);
            let j1 = q1(tc) - q1(td);
            nu.add(fc * j0 + s * (tc * j0 - j1));
            // In x the density is fc + s (x - c).
            let l0 = p0(d) - p0(c);
            let l1 = p1(d) - p1(c);
            lambda.add(fc * l0 + s * (l1 - c * l0));
        }
        (mu.value(), nu.value(), lambda.value())
    }
}
