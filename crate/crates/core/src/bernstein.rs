//! Bernstein polynomials of log(1 − x) and log²(1 − x), and the two exact
//! summation identities that replace logarithms by harmonic numbers:
//!
//! Σ_{m<n} C(n,m) x^m (1−x)^{n−m} (h_{n−m} − h_n) − x^n h_n = −Σ_{j≤n} x^j/j,
//! Σ_{m<n} C(n,m) x^m (1−x)^{n−m} s_{n−m} = s_n − Σ_{j≤n} (x^j/j)(h_n − h_{j−1}).
//!
//! Each identity is checked twice: in exact rationals, and in floating
//! point through the binomial row.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Result, SieveError};
use crate::measure::StickBreakingMeasure;
use crate::special::{binomial_pmf_row, CompensatedSum};

fn check_open_unit(x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(SieveError::OutOfRange(format!(
            "x = {x} must lie in (0, 1)"
        )));
    }
    Ok(())
}

fn check_degree(n: usize) -> Result<()> {
    if n == 0 {
        return Err(SieveError::OutOfRange("degree must be at least 1".into()));
    }
    Ok(())
}

/// Σ_{m=1}^{n−1} C(n,m) x^m (1−x)^{n−m} f(1 − m/n) with the mass row built
/// from `(x, y = 1 − x)`.
fn bernstein_with<F: Fn(f64) -> f64>(n: usize, x: f64, y: f64, row: &mut Vec<f64>, f: F) -> f64 {
    binomial_pmf_row(n, x, y, row);
    let nf = n as f64;
    let mut acc = CompensatedSum::new();
    for (m, p) in row.iter().enumerate().take(n).skip(1) {
        if *p > 0.0 {
            acc.add(p * f((n - m) as f64 / nf));
        }
    }
    acc.value()
}

/// Bernstein polynomial of degree n for log(1 − x). The m = n node, where
/// the logarithm is infinite, is left out.
pub fn bernstein_log(n: usize, x: f64) -> Result<f64> {
    check_degree(n)?;
    check_open_unit(x)?;
    Ok(bernstein_with(n, x, 1.0 - x, &mut Vec::new(), f64::ln))
}

/// Bernstein polynomial of degree n for log²(1 − x), the m = n node again
/// left out.
pub fn bernstein_log_squared(n: usize, x: f64) -> Result<f64> {
    check_degree(n)?;
    check_open_unit(x)?;
    Ok(bernstein_with(n, x, 1.0 - x, &mut Vec::new(), |t| {
        t.ln().powi(2)
    }))
}

/// Harmonic numbers h_n and double harmonic sums s_n = Σ_{i≤j≤n} 1/(ij),
/// indexed from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTables {
    pub h: Vec<f64>,
    pub s: Vec<f64>,
}

impl HarmonicTables {
    pub fn new(n: usize) -> Self {
        let mut h = vec![0.0; n + 1];
        let mut s = vec![0.0; n + 1];
        let mut hs = CompensatedSum::new();
        let mut ss = CompensatedSum::new();
        for j in 1..=n {
            hs.add(1.0 / j as f64);
            h[j] = hs.value();
            // s_j − s_{j−1} = h_j / j.
            ss.add(h[j] / j as f64);
            s[j] = ss.value();
        }
        Self { h, s }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Exact harmonic tables over the rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactHarmonicTables {
    pub h: Vec<BigRational>,
    pub s: Vec<BigRational>,
}

impl ExactHarmonicTables {
    pub fn new(n: usize) -> Self {
        let mut h = vec![BigRational::zero()];
        let mut s = vec![BigRational::zero()];
        for j in 1..=n {
            let inv = BigRational::new(BigInt::one(), BigInt::from(j));
            let hj = &h[j - 1] + &inv;
            let sj = &s[j - 1] + &hj * &inv;
            h.push(hj);
            s.push(sj);
        }
        Self { h, s }
    }

    /// h_n² − 2 s_n + Σ_{j≤n} j^{−2}, which vanishes identically.
    pub fn square_identity_residual(&self, n: usize) -> BigRational {
        let mut squares = BigRational::zero();
        for j in 1..=n {
            squares += BigRational::new(BigInt::one(), BigInt::from(j) * BigInt::from(j));
        }
        &self.h[n] * &self.h[n] - BigRational::from_integer(BigInt::from(2)) * &self.s[n] + squares
    }
}

/// LHS − RHS of the first summation identity, in floating point.
pub fn firstsum_residual(n: usize, x: f64) -> Result<f64> {
    check_degree(n)?;
    check_open_unit(x)?;
    let t = HarmonicTables::new(n);
    Ok(firstsum_with(&t, n, x, &mut Vec::new()))
}

fn firstsum_with(t: &HarmonicTables, n: usize, x: f64, row: &mut Vec<f64>) -> f64 {
    binomial_pmf_row(n, x, 1.0 - x, row);
    let mut acc = CompensatedSum::new();
    for (m, p) in row.iter().enumerate().take(n) {
        acc.add(p * (t.h[n - m] - t.h[n]));
    }
    acc.add(-x.powi(n as i32) * t.h[n]);
    let mut xj = 1.0;
    for j in 1..=n {
        xj *= x;
        acc.add(xj / j as f64);
    }
    acc.value()
}

/// LHS − RHS of the second summation identity, in floating point.
pub fn secondsum_residual(n: usize, x: f64) -> Result<f64> {
    check_degree(n)?;
    check_open_unit(x)?;
    let t = HarmonicTables::new(n);
    Ok(secondsum_with(&t, n, x, &mut Vec::new()))
}

fn secondsum_with(t: &HarmonicTables, n: usize, x: f64, row: &mut Vec<f64>) -> f64 {
    binomial_pmf_row(n, x, 1.0 - x, row);
    let mut acc = CompensatedSum::new();
    for (m, p) in row.iter().enumerate().take(n) {
        acc.add(p * t.s[n - m]);
    }
    acc.add(-t.s[n]);
    let mut xj = 1.0;
    for j in 1..=n {
        xj *= x;
        acc.add(xj / j as f64 * (t.h[n] - t.h[j - 1]));
    }
    acc.value()
}

/// Largest |residual| of both identities over `xs` for every degree up to
/// `n_max`, as `(first, second)`.
pub fn max_identity_residuals(n_max: usize, xs: &[f64]) -> Result<(f64, f64)> {
    check_degree(n_max)?;
    for &x in xs {
        check_open_unit(x)?;
    }
    let t = HarmonicTables::new(n_max);
    let mut row = Vec::new();
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for n in 1..=n_max {
        for &x in xs {
            first = first.max(firstsum_with(&t, n, x, &mut row).abs());
            second = second.max(secondsum_with(&t, n, x, &mut row).abs());
        }
    }
    Ok((first, second))
}

fn rational_rows(n: usize, x: &BigRational) -> (Vec<BigRational>, Vec<BigRational>) {
    let y = BigRational::one() - x;
    let mut xp = vec![BigRational::one()];
    let mut yp = vec![BigRational::one()];
    for j in 1..=n {
        xp.push(&xp[j - 1] * x);
        yp.push(&yp[j - 1] * &y);
    }
    (xp, yp)
}

fn binomials(n: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::one()];
    for m in 1..=n {
        let next = &c[m - 1] * BigInt::from(n - m + 1) / BigInt::from(m);
        c.push(next);
    }
    c
}

/// LHS − RHS of the first identity in exact rational arithmetic.
pub fn firstsum_residual_exact(n: usize, x: &BigRational, t: &ExactHarmonicTables) -> BigRational {
    let (xp, yp) = rational_rows(n, x);
    let c = binomials(n);
    let mut acc = BigRational::zero();
    for m in 0..n {
        acc +=
            BigRational::from_integer(c[m].clone()) * &xp[m] * &yp[n - m] * (&t.h[n - m] - &t.h[n]);
    }
    acc -= &xp[n] * &t.h[n];
    for j in 1..=n {
        acc += &xp[j] / BigRational::from_integer(BigInt::from(j));
    }
    acc
}

/// LHS − RHS of the second identity in exact rational arithmetic.
pub fn secondsum_residual_exact(n: usize, x: &BigRational, t: &ExactHarmonicTables) -> BigRational {
    let (xp, yp) = rational_rows(n, x);
    let c = binomials(n);
    let mut acc = BigRational::zero();
    for m in 0..n {
        acc += BigRational::from_integer(c[m].clone()) * &xp[m] * &yp[n - m] * &t.s[n - m];
    }
    acc -= &t.s[n];
    for j in 1..=n {
        acc += &xp[j] / BigRational::from_integer(BigInt::from(j)) * (&t.h[n] - &t.h[j - 1]);
    }
    acc
}

fn require_finite_mu(measure: &StickBreakingMeasure) -> Result<()> {
    let m = measure.log_moments()?;
    if !m.mu.is_finite() {
        return Err(SieveError::Hypothesis(
            "the gap needs ∫ −log(1−x) ω(dx) < ∞".into(),
        ));
    }
    Ok(())
}

/// ∫ |B_n(x) − log(1 − x)| ω(dx).
pub fn l1_gap(measure: &StickBreakingMeasure, n: usize) -> Result<f64> {
    check_degree(n)?;
    require_finite_mu(measure)?;
    let mut row = Vec::new();
    measure.integrate(|x, y| {
        if y <= 0.0 || x <= 0.0 {
            return 0.0;
        }
        let log_y = if x < 0.5 { (-x).ln_1p() } else { y.ln() };
        (bernstein_with(n, x, y, &mut row, f64::ln) - log_y).abs()
    })
}

/// ∫ |B_n[log²](x) − log²(1 − x)| ω(dx), the analogous gap for the square
/// of the logarithm.
pub fn log2_gap(measure: &StickBreakingMeasure, n: usize) -> Result<f64> {
    check_degree(n)?;
    let m = measure.log_moments()?;
    if !m.nu.is_finite() {
        return Err(SieveError::Hypothesis(
            "the gap needs ∫ log²(1−x) ω(dx) < ∞".into(),
        ));
    }
    let mut row = Vec::new();
    measure.integrate(|x, y| {
        if y <= 0.0 || x <= 0.0 {
            return 0.0;
        }
        let log_y = if x < 0.5 { (-x).ln_1p() } else { y.ln() };
        (bernstein_with(n, x, y, &mut row, |t| t.ln().powi(2)) - log_y * log_y).abs()
    })
}

/// Σ_{j=1}^{n} x^j h_{j−1} / j, the Taylor partial sum of ½ log²(1 − x).
pub fn taylor_log2_partial(n: usize, x: f64) -> Result<f64> {
    check_degree(n)?;
    check_open_unit(x)?;
    let mut acc = CompensatedSum::new();
    let mut h = 0.0;
    let mut xj = 1.0;
    for j in 1..=n {
        xj *= x;
        acc.add(xj * h / j as f64);
        h += 1.0 / j as f64;
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn bernstein_examples() {
        assert_abs_diff_eq!(
            bernstein_log(2, 0.5).unwrap(),
            0.5 * 0.5f64.ln(),
            epsilon = 1e-15
        );
        assert!((bernstein_log(200, 0.3).unwrap() - 0.7f64.ln()).abs() < 0.02);
        assert!(bernstein_log(50, 1e-12).unwrap().abs() < 1e-10);
        assert!(bernstein_log(5, 0.0).is_err());
        assert!(bernstein_log(5, 1.0).is_err());
        assert!(bernstein_log(0, 0.5).is_err());
    }

    #[test]
    fn bernstein_brute_force() {
        let n = 40;
        let x: f64 = 0.62;
        let mut brute = 0.0;
        for m in 1..n {
            let c = statrs::function::factorial::binomial(n as u64, m as u64);
            brute += c
                * x.powi(m as i32)
                * (1.0 - x).powi((n - m) as i32)
                * (1.0 - m as f64 / n as f64).ln();
        }
        assert_abs_diff_eq!(bernstein_log(n, x).unwrap(), brute, epsilon = 1e-13);
    }

    #[test]
    fn identities_vanish_exactly() {
        let xs = [q(1, 7), q(1, 3), q(9, 10)];
        let t = ExactHarmonicTables::new(30);
        for n in 1..=30 {
            for x in &xs {
                assert!(firstsum_residual_exact(n, x, &t).is_zero(), "first n = {n}");
                assert!(
                    secondsum_residual_exact(n, x, &t).is_zero(),
                    "second n = {n}"
                );
            }
        }
    }

    #[test]
    fn square_identity_exact() {
        let t = ExactHarmonicTables::new(1000);
        for n in [0, 1, 2, 10, 250, 1000] {
            assert!(t.square_identity_residual(n).is_zero());
        }
    }

    #[test]
    fn identities_in_floating_point() {
        assert_eq!(firstsum_residual(1, 0.5).unwrap(), 0.0);
        assert!(secondsum_residual(1, 0.3).unwrap().abs() < 1e-16);
        assert!(firstsum_residual(12, 0.37).unwrap().abs() < 1e-12);
        assert!(firstsum_residual(30, 0.9).unwrap().abs() < 1e-10);
        assert!(secondsum_residual(12, 0.37).unwrap().abs() < 1e-12);
        assert!(secondsum_residual(25, 0.05).unwrap().abs() < 1e-12);
    }

    #[test]
    fn float_identities_on_grid() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64 / 21.0).collect();
        let (a, b) = max_identity_residuals(500, &xs).unwrap();
        assert!(a < 1e-10 && b < 1e-10, "{a} {b}");
    }

    #[test]
    fn harmonic_tables() {
        let t = HarmonicTables::new(3);
        assert_eq!(t.h[0], 0.0);
        assert_eq!(t.s[0], 0.0);
        assert_abs_diff_eq!(t.h[3], 11.0 / 6.0, epsilon = 1e-15);
        // s_2 = 1 + 1/2 + 1/4.
        assert_abs_diff_eq!(t.s[2], 1.75, epsilon = 1e-15);
        let big = HarmonicTables::new(1000);
        let squares: f64 = (1..=1000).map(|j| 1.0 / (j as f64 * j as f64)).sum();
        assert_abs_diff_eq!(
            big.h[1000].powi(2),
            2.0 * big.s[1000] - squares,
            epsilon = 1e-12
        );
    }

    #[test]
    fn taylor_partial_sums() {
        assert_eq!(taylor_log2_partial(1, 0.4).unwrap(), 0.0);
        assert_abs_diff_eq!(
            taylor_log2_partial(200, 0.5).unwrap(),
            0.5 * 2f64.ln().powi(2),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            taylor_log2_partial(10_000, 0.9).unwrap(),
            0.5 * 0.1f64.ln().powi(2),
            epsilon = 1e-6
        );
    }

    #[test]
    fn gaps_shrink() {
        let coin = StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap();
        assert!((bernstein_log(1000, 0.5).unwrap() - 0.5f64.ln()).abs() < 0.01);
        assert!(l1_gap(&coin, 400).unwrap() < l1_gap(&coin, 100).unwrap());
        for m in [
            coin,
            StickBreakingMeasure::uniform(),
            StickBreakingMeasure::beta(1.0, 2.0).unwrap(),
            StickBreakingMeasure::discrete(&[(0.3, 0.5), (0.7, 0.5)], false).unwrap(),
        ] {
            let g: Vec<f64> = [10, 100, 1000]
                .iter()
                .map(|&n| l1_gap(&m, n).unwrap())
                .collect();
            assert!(g[2] < g[1] && g[1] < g[0], "{}: {g:?}", m.descriptor());
            let g2: Vec<f64> = [10, 100, 1000]
                .iter()
                .map(|&n| log2_gap(&m, n).unwrap())
                .collect();
            assert!(g2[2] < g2[1] && g2[1] < g2[0], "{}: {g2:?}", m.descriptor());
        }
    }

    proptest! {
        #[test]
        fn bernstein_log_is_nonpositive_and_bounded(n in 1usize..300, x in 0.001f64..0.999) {
            let b = bernstein_log(n, x).unwrap();
            prop_assert!(b <= 0.0);
            // Every retained node has log(1 − m/n) ≥ −log n.
            prop_assert!(b >= -(n as f64).ln() - 1e-12);
        }

        #[test]
        fn float_identities_hold(n in 1usize..200, x in 0.01f64..0.99) {
            prop_assert!(firstsum_residual(n, x).unwrap().abs() < 1e-11);
            prop_assert!(secondsum_residual(n, x).unwrap().abs() < 1e-11);
        }
    }
}
