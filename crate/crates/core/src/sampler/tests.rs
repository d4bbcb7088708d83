use super::*;
use crate::kernel::{ExactCaps, TransitionKernel};
use crate::stationary::StationaryKernel;
use crate::stats::{chi_square_gof, chi_square_two_sample, ks_distance};

fn uniform() -> StickBreakingMeasure {
    StickBreakingMeasure::uniform()
}

fn two_atom() -> StickBreakingMeasure {
    StickBreakingMeasure::discrete(&[(0.3, 0.5), (0.7, 0.5)], false).unwrap()
}

fn beta12() -> StickBreakingMeasure {
    StickBreakingMeasure::beta(1.0, 2.0).unwrap()
}

#[test]
fn single_player_is_one_part() {
    for m in [uniform(), two_atom(), beta12()] {
        let d = MeasureSampler::new(&m);
        let s = StationaryKernel::new(TransitionKernel::new(m.clone())).unwrap();
        let inv = StationaryInverse::new(&s).unwrap();
        let mut rng = replicate_stream(7, 0);
        for _ in 0..50 {
            assert_eq!(sample_game(&d, 1, &mut rng).unwrap().parts, vec![1]);
            assert_eq!(sample_stickbreak(&d, 1, &mut rng).unwrap().parts, vec![1]);
            let r = sample_renewal(&d, 1, &mut rng).unwrap();
            assert_eq!((r.composition.parts.clone(), r.k), (vec![1], 1));
            assert_eq!(
                sample_stationary(&d, &inv, 1, &mut rng).unwrap().parts,
                vec![1]
            );
        }
        assert!(sample_game(&d, 0, &mut rng).is_err());
    }
}

#[test]
fn coin_first_part_law() {
    let m = StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap();
    let reps = 1_000_000;
    let counts = first_part_frequencies(&m, 2, reps, 11, Sampler::Game).unwrap();
    for (mm, p) in [(1, 2.0 / 3.0), (2, 1.0 / 3.0)] {
        let freq = counts[mm] as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "m = {mm}: {freq} vs {p}");
    }
}

#[test]
fn uniform_three_matches_oracle() {
    let reps = 200_000;
    let law = TransitionKernel::with_caps(uniform(), ExactCaps::default())
        .enumerate_oracle(3)
        .unwrap();
    for sampler in [Sampler::Game, Sampler::Stickbreak, Sampler::Renewal] {
        let freq = composition_frequencies(&uniform(), 3, reps, 2024, sampler).unwrap();
        for e in &law.entries {
            let f = *freq.get(&e.parts).unwrap_or(&0) as f64 / reps as f64;
            let se = (e.probability * (1.0 - e.probability) / reps as f64).sqrt();
            assert!(
                (f - e.probability).abs() < 3.0 * se,
                "{sampler} {:?}: {f} vs {}",
                e.parts,
                e.probability
            );
        }
    }
}

#[test]
fn three_samplers_agree_in_law() {
    let reps = 100_000;
    for m in [uniform(), two_atom(), beta12()] {
        for n in [3, 5, 8] {
            let game = composition_frequencies(&m, n, reps, 100 + n as u64, Sampler::Game).unwrap();
            let stick =
                composition_frequencies(&m, n, reps, 200 + n as u64, Sampler::Stickbreak).unwrap();
            let renewal =
                composition_frequencies(&m, n, reps, 300 + n as u64, Sampler::Renewal).unwrap();
            for (a, b) in [(&game, &stick), (&game, &renewal), (&stick, &renewal)] {
                let t = chi_square_two_sample(a, b, 10);
                assert!(t.p_value > 1e-3, "{} n = {n}: {t:?}", m.descriptor());
            }
        }
    }
}

#[test]
fn sampled_laws_fit_exact_composition_probabilities() {
    let reps = 100_000;
    let m = two_atom();
    let law = TransitionKernel::with_caps(m.clone(), ExactCaps::default())
        .enumerate_oracle(5)
        .unwrap();
    let freq = composition_frequencies(&m, 5, reps, 5, Sampler::Renewal).unwrap();
    let counts: Vec<u64> = law
        .entries
        .iter()
        .map(|e| *freq.get(&e.parts).unwrap_or(&0))
        .collect();
    let probs: Vec<f64> = law.entries.iter().map(|e| e.probability).collect();
    assert!(chi_square_gof(&counts, &probs, 5.0).p_value > 1e-3);
}

#[test]
fn stationary_first_part_matches_exact_law() {
    let m = beta12();
    let s = StationaryKernel::new(TransitionKernel::new(m.clone())).unwrap();
    let row = s.first_part_row(6).unwrap();
    let counts = first_part_frequencies(&m, 6, 1_000_000, 17, Sampler::Stationary).unwrap();
    let t = chi_square_gof(&counts[1..], &row[1..], 5.0);
    assert!(t.p_value > 1e-3, "{t:?}");
}

#[test]
fn stationary_equals_ordinary_for_uniform() {
    let reps = 100_000;
    let a = composition_frequencies(&uniform(), 5, reps, 1, Sampler::Stationary).unwrap();
    let b = composition_frequencies(&uniform(), 5, reps, 2, Sampler::Game).unwrap();
    assert!(chi_square_two_sample(&a, &b, 10).p_value > 1e-3);
}

#[test]
fn stationary_differs_from_ordinary_for_two_atoms() {
    // Ω₀ ≠ Ω here, and at 10⁵ replicates the first-part laws separate.
    let m = two_atom();
    let s = StationaryKernel::new(TransitionKernel::new(m.clone())).unwrap();
    let q0 = s.first_part_row(5).unwrap();
    let mut q = Vec::new();
    TransitionKernel::new(m).transition_row(5, &mut q);
    let gap = q0
        .iter()
        .zip(&q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap > 1e-2);
}

#[test]
fn per_sample_cell_inequalities() {
    let mut rng = replicate_stream(99, 0);
    for m in [uniform(), two_atom(), beta12()] {
        let d = MeasureSampler::new(&m);
        for n in [1, 2, 5, 17, 100, 1000] {
            for _ in 0..200 {
                let s = sample_renewal(&d, n, &mut rng).unwrap();
                assert_eq!(s.composition.n(), n);
                assert_eq!(s.k as usize, s.composition.k());
                assert!(s.l <= s.k && s.l <= s.r, "{s:?}");
                assert!(s.r >= 1);
                assert!(s.gaps <= s.r && s.gaps + s.l >= s.r, "{s:?}");
            }
        }
    }
}

#[test]
fn uncounted_cells_sampler_matches_full_construction() {
    let reps = 200_000;
    for m in [uniform(), beta12(), two_atom()] {
        for n in [1, 3, 40] {
            let fast = run_uncounted_cells(&m, n, reps, 5).unwrap();
            let full =
                run_monte_carlo(&m, &MonteCarloConfig::new(n, reps, 6, Sampler::Renewal)).unwrap();
            let full_mean = full.mean_kl.unwrap();
            let se = (fast.var / reps as f64 + full.var_kl.unwrap() / reps as f64).sqrt();
            assert!(
                (fast.mean - full_mean).abs() < 4.0 * se + 1e-12,
                "{} n = {n}: {} vs {full_mean}",
                m.descriptor(),
                fast.mean
            );
            if n > 1 {
                assert!(fast.mean < 1.0);
            } else {
                assert_eq!(fast.mean, 1.0);
            }
        }
    }
}

#[test]
fn renewal_count_mean_for_uniform() {
    // Unit-rate Poisson process: E R_n = 1 + log n exactly.
    let n = 10_000;
    let reps = 20_000;
    let s = run_monte_carlo(
        &uniform(),
        &MonteCarloConfig::new(n, reps, 8, Sampler::Renewal),
    )
    .unwrap();
    let se = (s.var_r.unwrap() / reps as f64).sqrt();
    assert!((s.mean_r.unwrap() - (1.0 + (n as f64).ln())).abs() < 4.0 * se);
}

#[test]
fn overshoot_of_shifted_range_is_stationary() {
    for m in [beta12(), two_atom()] {
        let d = MeasureSampler::new(&m);
        let s = StationaryKernel::new(TransitionKernel::new(m.clone())).unwrap();
        let inv = StationaryInverse::new(&s).unwrap();
        for z in [1.0, 3.0] {
            let mut rng = replicate_stream(21, z as u64);
            let xs: Vec<f64> = (0..20_000)
                .map(|_| stationary_overshoot(&d, &inv, z, &mut rng))
                .collect();
            let d_ks = ks_distance(&xs, |x| s.stationary_cdf(x).unwrap());
            assert!(
                d_ks < 1.63 / (xs.len() as f64).sqrt(),
                "{} z = {z}: {d_ks}",
                m.descriptor()
            );
        }
    }
}

#[test]
fn growth_is_logarithmic() {
    let d = MeasureSampler::new(&uniform());
    let mut rng = replicate_stream(4, 0);
    let checkpoints: Vec<usize> = (2..=6).map(|e| 10usize.pow(e)).collect();
    let path = growth_trajectory(&d, &checkpoints, &mut rng).unwrap();
    assert_eq!(path.len(), 5);
    assert!(path.windows(2).all(|w| w[0].1 <= w[1].1));
    let (n, k) = path[4];
    assert!((k as f64 / (n as f64).ln() - 1.0).abs() < 0.5);
    assert!(growth_trajectory(&d, &[5, 3], &mut rng).is_err());
}

#[test]
fn summaries_are_deterministic_across_pools() {
    let m = beta12();
    let cfg = MonteCarloConfig::new(300, 2000, 42, Sampler::Renewal).with_clt();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_monte_carlo(&m, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert_eq!(a.mean_k.to_bits(), b.mean_k.to_bits());
}

#[test]
fn single_replicate_summary() {
    let m = beta12();
    let s = run_monte_carlo(
        &m,
        &MonteCarloConfig::new(50, 1, 3, Sampler::Renewal).with_samples(),
    )
    .unwrap();
    let mut rng = replicate_stream(3, 0);
    let one = sample_renewal(&MeasureSampler::new(&m), 50, &mut rng).unwrap();
    assert_eq!(s.mean_k, one.k as f64);
    assert_eq!(s.var_k, 0.0);
    assert_eq!(s.mean_kl, Some((one.k - one.l) as f64));
    assert_eq!(s.k_samples, Some(vec![one.k]));
}

#[test]
fn invalid_runs_are_rejected() {
    let cfg = MonteCarloConfig::new(10, 0, 1, Sampler::Game);
    assert!(matches!(
        run_monte_carlo(&uniform(), &cfg),
        Err(SieveError::OutOfRange(_))
    ));
    let cfg = MonteCarloConfig::new(10, 10, 1, Sampler::Game).with_clt();
    let lattice = StickBreakingMeasure::discrete(&[(0.5, 0.5), (0.75, 0.5)], false).unwrap();
    assert!(matches!(
        run_monte_carlo(&lattice, &cfg),
        Err(SieveError::Hypothesis(_))
    ));
    assert!(run_monte_carlo(&uniform(), &cfg).is_ok());
}

#[test]
fn sampler_names_round_trip() {
    for s in Sampler::ALL {
        assert_eq!(s.as_str().parse::<Sampler>().unwrap(), s);
    }
    assert!("coin".parse::<Sampler>().is_err());
}
