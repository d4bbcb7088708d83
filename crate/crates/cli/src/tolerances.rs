//! Tolerances used by `verify`, overridable with `--tol KEY=VALUE`.

use anyhow::{bail, Result};
use serde::Serialize;
use sieve_core::DiagnosticTolerances;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Asymptotic and statistical checks.
    #[serde(flatten)]
    pub asymptotic: DiagnosticTolerances,
    /// Total mass of the enumerated composition law.
    pub oracle_mass: f64,
    /// Enumerated K-marginal against the dynamic program.
    pub oracle_marginal: f64,
    /// Closed-form identities evaluated in floating point.
    pub identity: f64,
    /// Stationary potential and reward identities.
    pub stationary: f64,
    /// Smallest p-value accepted by the chi-square comparisons.
    pub chi_square_p: f64,
    /// Standard errors allowed between simulated and exact moments.
    pub moment_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            asymptotic: DiagnosticTolerances::default(),
            oracle_mass: 1e-10,
            oracle_marginal: 1e-9,
            identity: 1e-10,
            stationary: 1e-8,
            chi_square_p: 1e-3,
            moment_se: 4.0,
        }
    }
}

const KEYS: &[&str] = &[
    "mean_gap",
    "bracket",
    "variance_band",
    "reward",
    "ks",
    "clt_min_n",
    "match_se",
    "phi_agreement",
    "gap_slope",
    "oracle_mass",
    "oracle_marginal",
    "identity",
    "stationary",
    "chi_square_p",
    "moment_se",
];

impl Tolerances {
    pub fn from_overrides(items: &[String]) -> Result<Self> {
        let mut t = Self::default();
        for item in items {
            let Some((key, value)) = item.split_once('=') else {
                bail!(
                    "tolerance `{item}` is not KEY=VALUE; keys: {}",
                    KEYS.join(", ")
                );
            };
            let v: f64 = match value.trim().parse() {
                Ok(v) if v >= 0.0 => v,
                _ => bail!("tolerance `{key}` needs a non-negative number, got `{value}`"),
            };
            let a = &mut t.asymptotic;
            match key.trim() {
                "mean_gap" => a.mean_gap = v,
                "bracket" => a.bracket = v,
                "variance_band" => a.variance_band = v,
                "reward" => a.reward = v,
                "ks" => a.ks = v,
                "clt_min_n" => a.clt_min_n = v as usize,
                "match_se" => a.match_se = v,
                "phi_agreement" => a.phi_agreement = v,
                "gap_slope" => a.gap_slope = v,
                "oracle_mass" => t.oracle_mass = v,
                "oracle_marginal" => t.oracle_marginal = v,
                "identity" => t.identity = v,
                "stationary" => t.stationary = v,
                "chi_square_p" => t.chi_square_p = v,
                "moment_se" => t.moment_se = v,
                other => bail!("unknown tolerance `{other}`; keys: {}", KEYS.join(", ")),
            }
        }
        Ok(t)
    }
}
