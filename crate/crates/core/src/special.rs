//! Numerical building blocks shared by the exact modules: compensated
//! summation, the trigamma function, and normalized binomial-type rows.

/// Euler–Mascheroni constant, 0.577215664901532860606512090082.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082;

/// Neumaier (improved Kahan–Babuška) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut s = CompensatedSum::new();
    s.extend(iter);
    s.value()
}

/// Compensated dot product of two equal-length slices.
pub fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        s.add(x * y);
    }
    s.value()
}

/// Trigamma function ψ'(x) for x > 0.
pub fn trigamma(mut x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // Asymptotic series in 1/x with Bernoulli-number coefficients.
    let tail = 1.0 / x
        + x2 / 2.0
        + (x2 / x)
            * (1.0 / 6.0
                + x2 * (-1.0 / 30.0
                    + x2 * (1.0 / 42.0
                        + x2 * (-1.0 / 30.0
                            + x2 * (5.0 / 66.0 + x2 * (-691.0 / 2730.0 + x2 * (7.0 / 6.0)))))));
    acc + tail
}

/// Writes the Binomial(n, x) probability mass function into `out[0..=n]`.
///
/// `y` must be `1 - x` computed as accurately as the caller can; the row is
/// generated outward from the mode by ratios and normalized to unit mass,
/// so no factorials are ever formed.
pub fn binomial_pmf_row(n: usize, x: f64, y: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(n + 1, 0.0);
    if x <= 0.0 {
        out[0] = 1.0;
        return;
    }
    if y <= 0.0 {
        out[n] = 1.0;
        return;
    }
    let nf = n as f64;
    let mode = (((nf + 1.0) * x).floor() as usize).min(n);
    let odds = x / y;
    out[mode] = 1.0;
    let mut v = 1.0;
    for m in mode..n {
        v *= (nf - m as f64) / (m as f64 + 1.0) * odds;
        if v < 1e-300 {
            break;
        }
        out[m + 1] = v;
    }
    v = 1.0;
    let inv_odds = y / x;
    for m in (1..=mode).rev() {
        v *= m as f64 / (nf - m as f64 + 1.0) * inv_odds;
        if v < 1e-300 {
            break;
        }
        out[m - 1] = v;
    }
    let total = compensated_sum(out.iter().copied());
    let inv = 1.0 / total;
    for p in out.iter_mut() {
        *p *= inv;
    }
}

/// Writes the beta-binomial(n; alpha, beta) mass function into `out[0..=n]`,
/// normalized to unit mass. This is the row of binomial moments of a
/// Beta(alpha, beta) measure.
pub fn beta_binomial_row(n: usize, alpha: f64, beta: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(n + 1, 0.0);
    let nf = n as f64;
    let mut v = 1.0f64;
    out[0] = 1.0;
    let mut underflowed = false;
    for m in 0..n {
        let mf = m as f64;
        let ratio = (nf - mf) * (mf + alpha) / ((mf + 1.0) * (nf - mf - 1.0 + beta));
        if v == 0.0 && ratio > 1.0 {
            underflowed = true;
            break;
        }
        v *= ratio;
        if v > 1e280 {
            for p in out[..=m].iter_mut() {
                *p *= 1e-280;
            }
            v *= 1e-280;
        }
        out[m + 1] = v;
    }
    if underflowed {
        beta_binomial_row_log(n, alpha, beta, out);
        return;
    }
    let total = compensated_sum(out.iter().copied());
    let inv = 1.0 / total;
    for p in out.iter_mut() {
        *p *= inv;
    }
}

fn beta_binomial_row_log(n: usize, alpha: f64, beta: f64, out: &mut [f64]) {
    let nf = n as f64;
    let mut acc = 0.0f64;
    out[0] = 0.0;
    for m in 0..n {
        let mf = m as f64;
        acc += ((nf - mf) * (mf + alpha) / ((mf + 1.0) * (nf - mf - 1.0 + beta))).ln();
        out[m + 1] = acc;
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for p in out.iter_mut() {
        *p = (*p - max).exp();
    }
    let total = compensated_sum(out.iter().copied());
    for p in out.iter_mut() {
        *p /= total;
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Natural log of the binomial coefficient.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}
