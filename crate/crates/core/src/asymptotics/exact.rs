//! Diagnostics built on the exact recursions.

use super::{expansion_constants, hypothesis_violation, DiagnosticReport, TrendPoint, Verdict};
use crate::error::{Result, SieveError};
use crate::kernel::{MomentSeries, TransitionKernel};
use crate::measure::StickBreakingMeasure;
use crate::special::CompensatedSum;

/// Horizons N/10, N/4, N/2, N, deduplicated and at least 1.
fn trend_horizons(n: usize) -> Vec<usize> {
    let mut h: Vec<usize> = [n / 10, n / 4, n / 2, n]
        .into_iter()
        .map(|m| m.max(1))
        .collect();
    h.dedup();
    h
}

fn trend<F: Fn(usize) -> f64>(n: usize, f: F) -> Vec<TrendPoint> {
    trend_horizons(n)
        .into_iter()
        .map(|m| TrendPoint { n: m, value: f(m) })
        .collect()
}

fn first_value(t: &[TrendPoint]) -> f64 {
    t.first().map(|p| p.value).unwrap_or(f64::NAN)
}

/// Compares a_N − log N/μ − γ/μ − b with zero, requiring the gap both to be
/// within `tol` and to have shrunk since N/10.
pub fn mean_report(measure: &StickBreakingMeasure, a: &[f64], tol: f64) -> DiagnosticReport {
    let n = a.len().saturating_sub(1);
    let mut r = DiagnosticReport::new("mean expansion", measure, n);
    let c = match expansion_constants(measure) {
        Ok(c) => c,
        Err(e) => return r.inconclusive(e.to_string()),
    };
    if n < 2 {
        return r.inconclusive("horizon too small");
    }
    r.trend = trend(n, |m| a[m] - c.mean_expansion(m as f64));
    r.predicted = 0.0;
    r.observed = a[n] - c.mean_expansion(n as f64);
    r.tolerance = tol;
    r.detail("a_N", a[n]);
    r.detail("b", c.b);
    r.detail("offset", c.mean_offset());
    let shrinking = r.observed.abs() < first_value(&r.trend).abs();
    r.verdict = Verdict::from_check(r.observed.abs() < tol && shrinking);
    r.note = format!("gap a_N − log N/μ − γ/μ − b; shrinking since N/10: {shrinking}");
    r
}

pub fn mean_diagnostic(kernel: &TransitionKernel, horizon: usize, tol: f64) -> DiagnosticReport {
    if let Some(reason) = hypothesis_violation(kernel.measure()) {
        return DiagnosticReport::new("mean expansion", kernel.measure(), horizon)
            .inconclusive(reason);
    }
    mean_report(kernel.measure(), &kernel.mean_series(horizon), tol)
}

/// (1/μ) Σ_n W(n) r_n / n over the supplied rewards `r[n-1] = r_n`.
pub fn reward_limit_value(kernel: &TransitionKernel, r: &[f64]) -> Result<f64> {
    let mu = kernel.measure().log_moments()?.mu;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(SieveError::Hypothesis(format!(
            "reward limit needs finite μ, got {mu}"
        )));
    }
    let w = kernel.char_exponents(r.len());
    let mut acc = CompensatedSum::new();
    for (i, ri) in r.iter().enumerate() {
        let n = i + 1;
        acc.add(w[n] * ri / n as f64);
    }
    Ok(acc.value() / mu)
}

/// b_N for the reward recursion b_n = r_n + Σ q(n,m) b_{n−m} against the
/// limit (1/μ) Σ W(n) r_n / n, the series truncated at `r.len()`.
pub fn reward_limit_diagnostic(
    kernel: &TransitionKernel,
    r: &[f64],
    horizon: usize,
    tol: f64,
) -> DiagnosticReport {
    let measure = kernel.measure();
    let mut rep = DiagnosticReport::new("reward limit", measure, horizon);
    if measure.is_lattice() {
        return rep.inconclusive("Ω is lattice");
    }
    if r.len() < horizon || horizon == 0 {
        return rep.inconclusive(format!(
            "need at least N = {horizon} rewards, got {}",
            r.len()
        ));
    }
    let limit = match reward_limit_value(kernel, r) {
        Ok(v) => v,
        Err(e) => return rep.inconclusive(e.to_string()),
    };
    let b = kernel.reward_series(&r[..horizon], 0.0);
    rep.trend = trend(horizon, |m| b[m]);
    rep.predicted = limit;
    rep.observed = b[horizon];
    rep.tolerance = tol;
    rep.detail("series_terms", r.len() as f64);
    rep.verdict = Verdict::from_check((rep.observed - limit).abs() < tol);
    rep.note = format!("limit series truncated after {} terms", r.len());
    rep
}

/// The bracketed inhomogeneity of the variance recursion at N against
/// ν/μ² − 1.
pub fn lemma2_report(
    measure: &StickBreakingMeasure,
    series: &MomentSeries,
    tol: f64,
) -> DiagnosticReport {
    let n = series.horizon;
    let mut r = DiagnosticReport::new("variance inhomogeneity", measure, n);
    let c = match expansion_constants(measure) {
        Ok(c) => c,
        Err(e) => return r.inconclusive(e.to_string()),
    };
    if n < 2 {
        return r.inconclusive("horizon too small");
    }
    r.trend = trend(n, |m| series.bracket[m]);
    r.predicted = c.bracket_limit();
    r.observed = series.bracket[n];
    r.tolerance = tol;
    r.verdict = Verdict::from_check((r.observed - r.predicted).abs() < tol);
    r.note = "Σ q(n,m)(a_{n−m} − Σ_j q(n,j) a_{n−j})² against ν/μ² − 1".into();
    r
}

pub fn lemma2_diagnostic(kernel: &TransitionKernel, horizon: usize, tol: f64) -> DiagnosticReport {
    if let Some(reason) = hypothesis_violation(kernel.measure()) {
        return DiagnosticReport::new("variance inhomogeneity", kernel.measure(), horizon)
            .inconclusive(reason);
    }
    lemma2_report(kernel.measure(), &kernel.moment_series(horizon), tol)
}

/// v_N / ((σ²/μ³) log N), required to lie within `band` of 1 and to be
/// closer to 1 than at N/10.
pub fn variance_report(
    measure: &StickBreakingMeasure,
    series: &MomentSeries,
    band: f64,
) -> DiagnosticReport {
    let n = series.horizon;
    let mut r = DiagnosticReport::new("variance rate", measure, n);
    let c = match expansion_constants(measure) {
        Ok(c) => c,
        Err(e) => return r.inconclusive(e.to_string()),
    };
    if !(c.sigma2 > 0.0) {
        return r.inconclusive("σ² = 0");
    }
    if n < 20 {
        return r.inconclusive("horizon too small");
    }
    let ratio = |m: usize| series.v[m] / (c.variance_rate() * (m as f64).ln());
    r.trend = trend(n, |m| if m > 1 { ratio(m) } else { f64::NAN });
    r.predicted = 1.0;
    r.observed = ratio(n);
    r.tolerance = band;
    r.detail("v_N", series.v[n]);
    r.detail("rate", c.variance_rate());
    let closer = (r.observed - 1.0).abs() < (first_value(&r.trend) - 1.0).abs();
    r.verdict = Verdict::from_check((r.observed - 1.0).abs() <= band && closer);
    r.note = format!("closer to 1 than at N/10: {closer}");
    r
}

pub fn variance_diagnostic(
    kernel: &TransitionKernel,
    horizon: usize,
    band: f64,
) -> DiagnosticReport {
    if let Some(reason) = hypothesis_violation(kernel.measure()) {
        return DiagnosticReport::new("variance rate", kernel.measure(), horizon)
            .inconclusive(reason);
    }
    variance_report(kernel.measure(), &kernel.moment_series(horizon), band)
}
