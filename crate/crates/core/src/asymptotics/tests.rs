use super::*;
use crate::kernel::{ExactCaps, TransitionKernel};
use crate::quad::{integrate, Tolerance};
use crate::sampler::{run_monte_carlo, run_uncounted_cells, MonteCarloConfig, Sampler};
use approx::assert_abs_diff_eq;

fn uniform() -> StickBreakingMeasure {
    StickBreakingMeasure::uniform()
}

fn beta12() -> StickBreakingMeasure {
    StickBreakingMeasure::beta(1.0, 2.0).unwrap()
}

fn coin() -> StickBreakingMeasure {
    StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap()
}

fn kernel(m: StickBreakingMeasure) -> TransitionKernel {
    TransitionKernel::with_caps(m, ExactCaps::default())
}

#[test]
fn constants() {
    let u = expansion_constants(&uniform()).unwrap();
    assert_abs_diff_eq!(u.b, 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(u.variance_rate(), 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(u.bracket_limit(), 1.0, epsilon = 1e-14);
    let b = expansion_constants(&beta12()).unwrap();
    assert_abs_diff_eq!(b.b, -2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(b.mu, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(b.bracket_limit(), 1.0, epsilon = 1e-13);
    assert_abs_diff_eq!(b.renewal_offset(), 1.0, epsilon = 1e-13);
    assert!(matches!(
        expansion_constants(&coin()),
        Err(SieveError::Hypothesis(_))
    ));
}

#[test]
fn exponential_integral_values() {
    assert_abs_diff_eq!(
        exp_integral(1.0).unwrap(),
        0.219_383_934_395_520_3,
        epsilon = 1e-15
    );
    for i in 1..400 {
        let z = 0.0125 * i as f64 * (1.0 + i as f64 / 40.0);
        let reference = statrs::function::exponential::integral(z, 1).unwrap();
        assert!(
            (exp_integral(z).unwrap() - reference).abs() <= 1e-12 * reference,
            "z = {z}"
        );
    }
    let below = exp_integral(1.5 - 1e-12).unwrap();
    let above = exp_integral(1.5).unwrap();
    assert!((below - above).abs() < 1e-12);
    assert_eq!(exp_integral(f64::INFINITY).unwrap(), 0.0);
    assert!(exp_integral(800.0).unwrap() < 1e-300);
    assert!(exp_integral(0.0).is_err());
    assert!(exp_integral(-1.0).is_err());
}

#[test]
fn exponential_integral_against_quadrature() {
    let tol = Tolerance::new(1e-15, 1e-13);
    for z in [0.3, 1.0, 2.5, 10.0] {
        let q = crate::quad::integrate_to_infinity(|y| (-y).exp() / y, z, tol)
            .unwrap()
            .value;
        assert_abs_diff_eq!(exp_integral(z).unwrap(), q, epsilon = 1e-12);
    }
    for x in [0.1, 1.0, 5.0] {
        let lhs = integrate(
            |y: f64| if y > 0.0 { -(-y).exp_m1() / y } else { 1.0 },
            0.0,
            x,
            tol,
        )
        .unwrap()
        .value;
        let residual = lhs - exp_integral(x).unwrap() - x.ln() - EULER_GAMMA;
        assert!(residual.abs() < 1e-10, "x = {x}: {residual}");
    }
}

#[test]
fn mean_diagnostics() {
    let r = mean_diagnostic(&kernel(uniform()), 10_000, 0.05);
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.observed.abs() < 1e-4);
    assert_abs_diff_eq!(r.observed, 1.0 / 20_000.0, epsilon = 1e-6);
    let r = mean_diagnostic(&kernel(beta12()), 2000, 0.05);
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    assert_eq!(
        mean_diagnostic(&kernel(coin()), 100, 0.05).verdict,
        Verdict::Inconclusive
    );
}

#[test]
fn reward_limits() {
    let k = kernel(uniform());
    let r: Vec<f64> = (1..=100_000).map(|n| 1.0 / (n as f64 * n as f64)).collect();
    let direct: f64 = (1..=100_000u64)
        .map(|n| n as f64 / (n as f64 + 1.0) / (n as f64).powi(3))
        .sum();
    assert_abs_diff_eq!(reward_limit_value(&k, &r).unwrap(), direct, epsilon = 1e-10);
    let rep = reward_limit_diagnostic(&k, &r, 2000, 1e-3);
    assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");

    let zero = vec![0.0; 500];
    let rep = reward_limit_diagnostic(&k, &zero, 500, 1e-12);
    assert_eq!(rep.observed, 0.0);
    assert_eq!(rep.predicted, 0.0);

    let kb = kernel(beta12());
    let mut single = vec![0.0; 3000];
    single[0] = 1.0;
    assert_abs_diff_eq!(
        reward_limit_value(&kb, &single).unwrap(),
        2.0 / 3.0,
        epsilon = 1e-12
    );
    let rep = reward_limit_diagnostic(&kb, &single, 3000, 1e-3);
    assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
}

#[test]
fn bracket_and_variance() {
    let k = kernel(uniform());
    let s = k.moment_series(5000);
    let l = lemma2_report(k.measure(), &s, 0.05);
    assert_eq!(l.verdict, Verdict::Pass, "{l:?}");
    let v = variance_report(k.measure(), &s, 0.2);
    assert_eq!(v.verdict, Verdict::Pass, "{v:?}");
    // ESF(1): Var K_n = h_n − h_n^{(2)}.
    let h: f64 = (1..=5000).map(|j| 1.0 / j as f64).sum();
    let h2: f64 = (1..=5000).map(|j| 1.0 / (j as f64 * j as f64)).sum();
    assert_abs_diff_eq!(s.v[5000], h - h2, epsilon = 1e-9);
    assert_eq!(
        lemma2_diagnostic(&kernel(coin()), 50, 0.05).verdict,
        Verdict::Inconclusive
    );
    assert_eq!(
        variance_diagnostic(&kernel(coin()), 50, 0.2).verdict,
        Verdict::Inconclusive
    );
}

#[test]
fn exp_integral_moments() {
    let j = integrated_exp_integral(&uniform()).unwrap();
    assert_abs_diff_eq!(
        j,
        exp_integral(1.0).unwrap() + 1.0 - (-1.0f64).exp(),
        epsilon = 1e-10
    );
    let jb = integrated_exp_integral(&beta12()).unwrap();
    // ∫ 2(1−x) I(x) dx = 2(I(1) + 1 − 1/e) − (I(1) + 1 − 2/e).
    let i1 = exp_integral(1.0).unwrap();
    assert_abs_diff_eq!(
        jb,
        2.0 * (i1 + 1.0 - (-1.0f64).exp()) - (i1 + 1.0 - 2.0 * (-1.0f64).exp()),
        epsilon = 1e-10
    );
}

#[test]
fn phi_integral_approaches_limit() {
    for m in [uniform(), beta12()] {
        let c = expansion_constants(&m).unwrap();
        let j = integrated_exp_integral(&m).unwrap();
        let limit = (EULER_GAMMA + c.lambda + j) / c.mu;
        let p = phi_integral(&m, 100_000).unwrap();
        assert!(
            (p - limit).abs() < 1e-4,
            "{}: {p} vs {limit}",
            m.descriptor()
        );
    }
}

#[test]
fn uncounted_cells_selects_one_coefficient() {
    let m = beta12();
    let est = run_uncounted_cells(&m, 10_000, 40_000, 9).unwrap();
    let rep = uncounted_cells_diagnostic(&m, &est, &DiagnosticTolerances::default());
    assert_eq!(rep.matched.as_deref(), Some("c = 1/μ"), "{rep:?}");
    assert_eq!(rep.report.verdict, Verdict::Pass);
    let one = run_uncounted_cells(&m, 1, 10, 9).unwrap();
    assert_eq!(
        uncounted_cells_diagnostic(&m, &one, &DiagnosticTolerances::default())
            .report
            .verdict,
        Verdict::Inconclusive
    );
}

#[test]
fn simulated_diagnostics() {
    let m = beta12();
    let tol = DiagnosticTolerances::default();
    let runs: Vec<_> = [1000, 10_000]
        .iter()
        .map(|&n| {
            run_monte_carlo(
                &m,
                &MonteCarloConfig::new(n, 2000, 77, Sampler::Renewal).with_clt(),
            )
            .unwrap()
        })
        .collect();
    assert_eq!(
        renewal_count_diagnostic(&m, &runs[1], &tol).verdict,
        Verdict::Pass
    );
    let t = triangle_diagnostic(&m, &runs);
    assert_eq!(t.verdict, Verdict::Pass, "{t:?}");
    let g = bounded_gaps_diagnostic(&m, &runs, &tol);
    assert_eq!(g.verdict, Verdict::Pass, "{g:?}");
    let small = run_monte_carlo(
        &m,
        &MonteCarloConfig::new(10, 100, 1, Sampler::Game).with_clt(),
    )
    .unwrap();
    assert_eq!(
        clt_diagnostic(&m, &small, &tol).verdict,
        Verdict::Inconclusive
    );
    let c = clt_diagnostic(&m, &runs[1], &tol);
    assert!(c.observed > 0.0 && c.observed < 1.0);
}
