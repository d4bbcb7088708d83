//! Diagnostics fed by Monte Carlo summaries.

use serde::Serialize;

use super::{
    exp_integral, expansion_constants, hypothesis_violation, DiagnosticReport,
    DiagnosticTolerances, TrendPoint, Verdict, EULER_GAMMA,
};
use crate::error::{Result, SieveError};
use crate::measure::StickBreakingMeasure;
use crate::quad::{integrate, Tolerance};
use crate::sampler::{MonteCarloSummary, Sampler, UncountedCellsSummary};
use crate::special::normal_cdf;
use crate::stats::{ks_atom_floor, ks_distance, ks_distance_integer};

/// KS distance of the normalized K_n from N(0,1).
pub fn clt_diagnostic(
    measure: &StickBreakingMeasure,
    summary: &MonteCarloSummary,
    tol: &DiagnosticTolerances,
) -> DiagnosticReport {
    let mut r = DiagnosticReport::new("normal limit", measure, summary.n);
    r.reps = Some(summary.reps);
    r.seed = Some(summary.seed);
    let c = match expansion_constants(measure) {
        Ok(c) => c,
        Err(e) => return r.inconclusive(e.to_string()),
    };
    if !(c.sigma2 > 0.0) {
        return r.inconclusive("σ² = 0");
    }
    if summary.n < tol.clt_min_n {
        return r.inconclusive(format!(
            "n = {} is below the asymptotic regime (n ≥ {})",
            summary.n, tol.clt_min_n
        ));
    }
    let Some(ks) = summary.ks_normal else {
        return r.inconclusive("summary carries no normalized statistic");
    };
    r.predicted = 0.0;
    r.observed = ks;
    r.tolerance = tol.ks;
    r.detail("ks_critical_5pct", 1.358 / (summary.reps as f64).sqrt());
    if let Some(s) = summary.ks_studentized {
        r.detail("ks_studentized", s);
    }
    if let Some(samples) = &summary.k_samples {
        // Centred by the two-term mean expansion instead of log n / μ alone.
        let n = summary.n as f64;
        let centre = c.mean_expansion(n);
        let sd = (c.variance_rate() * n.ln()).sqrt();
        let z: Vec<f64> = samples.iter().map(|&k| (k as f64 - centre) / sd).collect();
        r.detail("ks_expansion_centred", ks_distance(&z, normal_cdf));
        r.detail("centring_shift_sd", c.mean_offset() / sd);
        // K_n is integer valued, so no continuous law comes closer than
        // half its largest atom; the corrected distances compare on the
        // integers instead.
        r.detail("ks_atom_floor", ks_atom_floor(samples));
        let log_centre = n.ln() / c.mu;
        r.detail(
            "ks_continuity_corrected",
            ks_distance_integer(samples, |x| normal_cdf((x - log_centre) / sd)),
        );
        r.detail(
            "ks_continuity_corrected_expansion",
            ks_distance_integer(samples, |x| normal_cdf((x - centre) / sd)),
        );
    }
    r.verdict = Verdict::from_check(ks < tol.ks);
    r.note = "(K_n − log n/μ)/(σ μ^{-3/2} √log n) against N(0,1)".into();
    r
}

/// ∫ I(x) ω(dx).
pub fn integrated_exp_integral(measure: &StickBreakingMeasure) -> Result<f64> {
    let mut failure = None;
    let v = measure.integrate(|x, _| {
        if x <= 0.0 {
            return 0.0;
        }
        match exp_integral(x) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// (1/μ) ∫_{log n}^∞ Φ_n(z) dz for unit rewards, where
/// Φ_n(z) = Σ_m C(n,m) e^{−zm}(1 − e^{−z})^{n−m} W(m) = ∫ 1 − (1 − x e^{−z})^n ω(dx).
/// With ζ = n e^{−z} this is (1/μ) ∫ ω(dx) ∫_0^1 (1 − (1 − xζ/n)^n) dζ/ζ.
pub fn phi_integral(measure: &StickBreakingMeasure, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(SieveError::OutOfRange("n must be positive".into()));
    }
    let mu = measure.log_moments()?.mu;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(SieveError::Hypothesis(format!("needs finite μ, got {mu}")));
    }
    let nf = n as f64;
    let tol = Tolerance::new(1e-15, 1e-12);
    let mut failure = None;
    let outer = measure.integrate(|x, _| {
        let inner = integrate(
            |zeta| {
                if zeta <= 0.0 {
                    return x;
                }
                -(nf * (-x * zeta / nf).ln_1p()).exp_m1() / zeta
            },
            0.0,
            1.0,
            tol,
        );
        match inner {
            Ok(e) => e.value,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(outer / mu),
    }
}

/// One closed form γ/μ + λ/μ + c ∫ I(x) ω(dx) for the limit of E(K_n − L_n).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCandidate {
    pub label: String,
    pub coefficient: f64,
    pub value: f64,
    /// (estimate − value) / standard error.
    pub z_score: f64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncountedCellsReport {
    pub report: DiagnosticReport,
    pub candidates: Vec<LimitCandidate>,
    pub phi_integral: Option<f64>,
    pub matched: Option<String>,
}

/// Decides which coefficient c ∈ {1, γ/μ, 1/μ} in front of ∫ I dω agrees
/// with the simulated E(K_n − L_n), and checks the Φ_n integral against the
/// matched value.
pub fn uncounted_cells_diagnostic(
    measure: &StickBreakingMeasure,
    estimate: &UncountedCellsSummary,
    tol: &DiagnosticTolerances,
) -> UncountedCellsReport {
    let mut r = DiagnosticReport::new("uncounted cells", measure, estimate.n);
    r.reps = Some(estimate.reps);
    r.seed = Some(estimate.seed);
    r.observed = estimate.mean;
    r.detail("se", estimate.se);
    let empty = |r: DiagnosticReport| UncountedCellsReport {
        report: r,
        candidates: Vec::new(),
        phi_integral: None,
        matched: None,
    };
    let c = match expansion_constants(measure) {
        Ok(c) => c,
        Err(e) => return empty(r.inconclusive(e.to_string())),
    };
    if estimate.n < 2 {
        return empty(r.inconclusive("n = 1 has K_n − L_n = 1 identically"));
    }
    let j = match integrated_exp_integral(measure) {
        Ok(v) => v,
        Err(e) => return empty(r.inconclusive(format!("∫ I dω failed: {e}"))),
    };
    r.detail("integral_I", j);
    let base = EULER_GAMMA / c.mu + c.lambda / c.mu;
    let candidates: Vec<LimitCandidate> = [
        ("c = 1", 1.0),
        ("c = γ/μ", EULER_GAMMA / c.mu),
        ("c = 1/μ", 1.0 / c.mu),
    ]
    .into_iter()
    .map(|(label, coefficient)| {
        let value = base + coefficient * j;
        let z_score = (estimate.mean - value) / estimate.se;
        LimitCandidate {
            label: label.to_string(),
            coefficient,
            value,
            z_score,
            matches: z_score.abs() < tol.match_se,
        }
    })
    .collect();
    // Coefficients that coincide for this measure name one candidate.
    let mut distinct: Vec<&LimitCandidate> = Vec::new();
    for cand in candidates.iter().filter(|c| c.matches) {
        if !distinct
            .iter()
            .any(|d| (d.value - cand.value).abs() < 1e-12)
        {
            distinct.push(cand);
        }
    }
    let matched = if distinct.len() == 1 {
        Some(
            candidates
                .iter()
                .filter(|c| c.matches)
                .map(|c| c.label.clone())
                .collect::<Vec<_>>()
                .join(", "),
        )
    } else {
        None
    };
    let phi = phi_integral(measure, estimate.n).ok();
    r.tolerance = tol.match_se * estimate.se;
    r.predicted = distinct.first().map(|c| c.value).unwrap_or(f64::NAN);
    let phi_ok = match (phi, distinct.len()) {
        (Some(p), 1) => (p - distinct[0].value).abs() < tol.phi_agreement,
        _ => false,
    };
    if let Some(p) = phi {
        r.detail("phi_integral", p);
    }
    r.verdict = Verdict::from_check(matched.is_some() && phi_ok && estimate.mean < 1.0);
    r.note = match &matched {
        Some(m) => format!("estimate matches {m}; Φ_n integral agrees: {phi_ok}"),
        None => format!(
            "{} distinct candidates within {} SE",
            distinct.len(),
            tol.match_se
        ),
    };
    UncountedCellsReport {
        report: r,
        candidates,
        phi_integral: phi,
        matched,
    }
}

fn renewal_summary(s: &MonteCarloSummary) -> Result<(f64, f64, f64, f64, f64, f64)> {
    if s.sampler != Sampler::Renewal {
        return Err(SieveError::Invalid(
            "cell statistics need the renewal sampler".into(),
        ));
    }
    let get = |v: Option<f64>| {
        v.ok_or_else(|| SieveError::Invalid("summary lacks cell statistics".into()))
    };
    Ok((
        get(s.mean_l)?,
        get(s.mean_r)?,
        get(s.var_r)?,
        get(s.mean_kl)?,
        get(s.mean_abs_kr)?,
        get(s.mean_gaps)?,
    ))
}

/// E R_n − log n/μ against ν/(2μ²), within `match_se` + 1 standard errors.
pub fn renewal_count_diagnostic(
    measure: &StickBreakingMeasure,
    summary: &MonteCarloSummary,
    tol: &DiagnosticTolerances,
) -> DiagnosticReport {
    let mut r = DiagnosticReport::new("renewal count", measure, summary.n);
    r.reps = Some(summary.reps);
    r.seed = Some(summary.seed);
    let c = match expansion_constants(measure) {
        Ok(c) => c,
        Err(e) => return r.inconclusive(e.to_string()),
    };
    let (_, mean_r, var_r, ..) = match renewal_summary(summary) {
        Ok(v) => v,
        Err(e) => return r.inconclusive(e.to_string()),
    };
    let se = (var_r / summary.reps as f64).sqrt();
    r.predicted = c.renewal_offset();
    r.observed = mean_r - (summary.n as f64).ln() / c.mu;
    r.tolerance = (tol.match_se + 1.0) * se;
    r.detail("se", se);
    r.verdict = Verdict::from_check((r.observed - r.predicted).abs() < r.tolerance);
    r.note = "E R_n − log n/μ against ν/(2μ²)".into();
    r
}

fn sorted_by_n(summaries: &[MonteCarloSummary]) -> Vec<&MonteCarloSummary> {
    let mut v: Vec<&MonteCarloSummary> = summaries.iter().collect();
    v.sort_by_key(|s| s.n);
    v
}

/// The sandwich L_n ≤ K_n, L_n ≤ R_n along increasing n: E(K_n − L_n) < 1,
/// and the L¹ distances between K_n, L_n and R_n in units of √Var K_n
/// shrink from the smallest to the largest n.
pub fn triangle_diagnostic(
    measure: &StickBreakingMeasure,
    summaries: &[MonteCarloSummary],
) -> DiagnosticReport {
    let sorted = sorted_by_n(summaries);
    let horizon = sorted.last().map(|s| s.n).unwrap_or(0);
    let mut r = DiagnosticReport::new("renewal sandwich", measure, horizon);
    if let Some(reason) = hypothesis_violation(measure) {
        return r.inconclusive(reason);
    }
    if sorted.len() < 2 {
        return r.inconclusive("needs summaries at two or more n");
    }
    r.reps = sorted.first().map(|s| s.reps);
    r.seed = sorted.first().map(|s| s.seed);
    let mut rows = Vec::new();
    for s in &sorted {
        let (mean_l, mean_r, _, mean_kl, abs_kr, _) = match renewal_summary(s) {
            Ok(v) => v,
            Err(e) => return r.inconclusive(e.to_string()),
        };
        let sd = s.var_k.sqrt();
        let d = [mean_kl / sd, (mean_r - mean_l) / sd, abs_kr / sd];
        r.detail(&format!("d_kl@{}", s.n), d[0]);
        r.detail(&format!("d_rl@{}", s.n), d[1]);
        r.detail(&format!("d_kr@{}", s.n), d[2]);
        r.detail(&format!("mean_kl@{}", s.n), mean_kl);
        rows.push((s.n, mean_kl, d));
    }
    r.trend = rows
        .iter()
        .map(|(n, _, d)| TrendPoint { n: *n, value: d[2] })
        .collect();
    let first = rows[0].2;
    let last = rows[rows.len() - 1].2;
    let shrinking = (0..3).all(|i| last[i] < first[i]);
    let bounded = rows.iter().all(|(_, kl, _)| *kl < 1.0);
    r.predicted = 0.0;
    r.observed = last.iter().cloned().fold(0.0, f64::max);
    r.tolerance = 1.0;
    r.verdict = Verdict::from_check(shrinking && bounded);
    r.note = format!("E(K−L) < 1 throughout: {bounded}; scaled L¹ distances shrink: {shrinking}");
    r
}

/// The number of component intervals of [0, log n] ∖ ℛ holding no E_j
/// stays bounded: its mean, regressed on log n, has a slope below
/// `gap_slope / μ`.
pub fn bounded_gaps_diagnostic(
    measure: &StickBreakingMeasure,
    summaries: &[MonteCarloSummary],
    tol: &DiagnosticTolerances,
) -> DiagnosticReport {
    let sorted = sorted_by_n(summaries);
    let horizon = sorted.last().map(|s| s.n).unwrap_or(0);
    let mut r = DiagnosticReport::new("empty intervals", measure, horizon);
    let c = match expansion_constants(measure) {
        Ok(c) => c,
        Err(e) => return r.inconclusive(e.to_string()),
    };
    if sorted.len() < 2 {
        return r.inconclusive("needs summaries at two or more n");
    }
    r.reps = sorted.first().map(|s| s.reps);
    r.seed = sorted.first().map(|s| s.seed);
    let mut pts = Vec::new();
    for s in &sorted {
        match renewal_summary(s) {
            Ok(v) => pts.push(((s.n as f64).ln(), v.5, s.n)),
            Err(e) => return r.inconclusive(e.to_string()),
        }
    }
    r.trend = pts
        .iter()
        .map(|(_, m, n)| TrendPoint { n: *n, value: *m })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    r.predicted = 0.0;
    r.observed = slope * c.mu;
    r.tolerance = tol.gap_slope;
    if let Ok(j) = integrated_exp_integral(measure) {
        r.detail("renewal_minus_cells_limit", j / c.mu);
    }
    r.verdict = Verdict::from_check(r.observed < tol.gap_slope);
    r.note = "slope of the mean empty-interval count against log n, relative to 1/μ".into();
    r
}
