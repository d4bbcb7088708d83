//! Asymptotic constants of the sieve and diagnostics that confront them with
//! exact finite-n values and Monte Carlo estimates.
//!
//! Every diagnostic returns a [`DiagnosticReport`]. A report is
//! `Inconclusive` rather than `Fail` whenever the hypotheses behind the
//! prediction do not hold (lattice Ω, σ² = 0, infinite moments, or a
//! horizon too small for an asymptotic statement).

mod exact;
mod simulated;

pub use exact::{
    lemma2_diagnostic, lemma2_report, mean_diagnostic, mean_report, reward_limit_diagnostic,
    reward_limit_value, variance_diagnostic, variance_report,
};
pub use simulated::{
    bounded_gaps_diagnostic, clt_diagnostic, integrated_exp_integral, phi_integral,
    renewal_count_diagnostic, triangle_diagnostic, uncounted_cells_diagnostic, LimitCandidate,
    UncountedCellsReport,
};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Result, SieveError};
use crate::measure::StickBreakingMeasure;
pub use crate::special::EULER_GAMMA;

/// The constants entering the expansions of E K_n, Var K_n and E R_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionConstants {
    /// μ = E T for T = −log(1 − X).
    pub mu: f64,
    /// ν = E T².
    pub nu: f64,
    pub sigma2: f64,
    /// λ = ∫ log x ω(dx).
    pub lambda: f64,
    pub gamma_euler: f64,
    /// b = λ/μ + ν/(2μ²), the constant after log n/μ + γ/μ in E K_n.
    pub b: f64,
}

impl ExpansionConstants {
    /// Predicted E K_n − log n / μ in the limit.
    pub fn mean_offset(&self) -> f64 {
        self.gamma_euler / self.mu + self.b
    }

    /// Predicted E K_n up to o(1).
    pub fn mean_expansion(&self, n: f64) -> f64 {
        n.ln() / self.mu + self.mean_offset()
    }

    /// σ²/μ³, the rate of Var K_n against log n.
    pub fn variance_rate(&self) -> f64 {
        self.sigma2 / self.mu.powi(3)
    }

    /// Limit of Σ q(n,m)(a_{n−m} − E a_{n−F})², namely ν/μ² − 1.
    pub fn bracket_limit(&self) -> f64 {
        self.nu / (self.mu * self.mu) - 1.0
    }

    /// ν/(2μ²), the constant in E R_n = log n/μ + ν/(2μ²) + o(1).
    pub fn renewal_offset(&self) -> f64 {
        self.nu / (2.0 * self.mu * self.mu)
    }
}

/// Why the expansions cannot be applied to `measure`, if they cannot.
pub fn hypothesis_violation(measure: &StickBreakingMeasure) -> Option<String> {
    if measure.is_lattice() {
        return Some("Ω is lattice, so the renewal theorem gives no limit".into());
    }
    match measure.log_moments() {
        Err(e) => Some(format!("moments unavailable: {e}")),
        Ok(m) if !(m.mu.is_finite() && m.nu.is_finite() && m.lambda.is_finite()) => Some(format!(
            "needs finite μ, ν and λ (μ = {}, ν = {}, λ = {})",
            m.mu, m.nu, m.lambda
        )),
        Ok(_) => None,
    }
}

pub fn expansion_constants(measure: &StickBreakingMeasure) -> Result<ExpansionConstants> {
    if let Some(reason) = hypothesis_violation(measure) {
        return Err(SieveError::Hypothesis(reason));
    }
    let m = measure.log_moments()?;
    Ok(ExpansionConstants {
        mu: m.mu,
        nu: m.nu,
        sigma2: m.sigma2,
        lambda: m.lambda,
        gamma_euler: EULER_GAMMA,
        b: m.lambda / m.mu + m.nu / (2.0 * m.mu * m.mu),
    })
}

/// I(z) = ∫_z^∞ e^{−y}/y dy for z > 0. The power series
/// −γ − log z + Σ (−1)^{k+1} z^k/(k·k!) is used below 1.5 and a continued
/// fraction above.
pub fn exp_integral(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(SieveError::OutOfRange(format!(
            "exponential integral needs z > 0, got {z}"
        )));
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if z < 1.5 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -z / kf;
            let add = -term / kf;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        return Ok(-EULER_GAMMA - z.ln() + sum);
    }
    // Modified Lentz evaluation of e^{-z} / (z + 1 − 1²/(z + 3 − 2²/(z + 5 − …))).
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    Ok(h * (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_check(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendPoint {
    pub n: usize,
    pub value: f64,
}

/// The outcome of one diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub name: String,
    pub measure: String,
    /// Horizon N for exact checks, or n for simulated ones.
    pub horizon: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub predicted: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub trend: Vec<TrendPoint>,
    pub verdict: Verdict,
    pub note: String,
    pub details: BTreeMap<String, f64>,
}

impl DiagnosticReport {
    pub(crate) fn new(name: &str, measure: &StickBreakingMeasure, horizon: usize) -> Self {
        Self {
            name: name.to_string(),
            measure: measure.descriptor().to_string(),
            horizon,
            reps: None,
            seed: None,
            predicted: f64::NAN,
            observed: f64::NAN,
            tolerance: f64::NAN,
            trend: Vec::new(),
            verdict: Verdict::Inconclusive,
            note: String::new(),
            details: BTreeMap::new(),
        }
    }

    pub(crate) fn inconclusive(mut self, note: impl Into<String>) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.note = note.into();
        self
    }

    pub(crate) fn detail(&mut self, key: &str, value: f64) {
        self.details.insert(key.to_string(), value);
    }

    pub fn is_failure(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Default tolerances. None of them is implied by the limit theorems; the
/// convergence is on the log n scale, so bands are wide and the trend
/// checks (closer at the larger horizon) carry most of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticTolerances {
    pub mean_gap: f64,
    pub bracket: f64,
    pub variance_band: f64,
    pub reward: f64,
    pub ks: f64,
    /// Smallest n at which the normal approximation is judged.
    pub clt_min_n: usize,
    /// Standard errors allowed for a statistical match.
    pub match_se: f64,
    /// Agreement between the Φ_n integral and the matched candidate.
    pub phi_agreement: f64,
    /// Largest slope of the mean empty-gap count against log n, relative
    /// to the slope 1/μ of E R_n.
    pub gap_slope: f64,
}

impl Default for DiagnosticTolerances {
    fn default() -> Self {
        Self {
            mean_gap: 0.05,
            bracket: 0.05,
            variance_band: 0.2,
            reward: 1e-3,
            ks: 0.05,
            clt_min_n: 1000,
            match_se: 3.0,
            phi_agreement: 1e-3,
            gap_slope: 0.05,
        }
    }
}

#[cfg(test)]
mod tests;
