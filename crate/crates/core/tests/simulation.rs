use losscal_core::diagnostics::{
    build_curve, curve_from_columns, expected_calibration_error, regret_test, verify_sbr,
    BinScore, Binning, RegretForm, RegretOptions,
};
use losscal_core::{
    imbalance_preset, loss_correct_binary, simulate, LossSpec, ScoredDataset, SimulationConfig,
    WeightSpec,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(beta1: f64, loss: LossSpec, n: usize, seed: u64) -> SimulationConfig {
    SimulationConfig {
        experiment: imbalance_preset(0.02, 10, 1.0).unwrap(),
        loss,
        weights: WeightSpec::binary(beta1).unwrap(),
        sample_count: n,
        seed,
    }
}

#[test]
fn positive_rate_concentrates() {
    let sim = simulate(&config(0.99, LossSpec::log_loss(), 1_000_000, 11), false).unwrap();
    let rate = sim.dataset.label_counts()[1] as f64 / 1e6;
    assert!((rate - 0.02).abs() <= 5e-4, "{rate}");
}

#[test]
fn correction_recovers_posterior_row_by_row() {
    for beta in [0.5, 0.9, 0.99] {
        let sim = simulate(&config(beta, LossSpec::log_loss(), 200_000, 3), true).unwrap();
        let side = sim.sidecar.as_ref().unwrap();
        let scores = sim.dataset.binary_scores().unwrap();
        for (row, &a) in scores.iter().enumerate() {
            let g = loss_correct_binary(beta, a).unwrap();
            assert!((g - side.true_posterior(row).gamma1()).abs() <= 1e-12);
        }
    }
}

#[test]
fn score_map_is_injective_so_bins_are_signals() {
    let sim = simulate(&config(0.9, LossSpec::brier(), 100_000, 5), true).unwrap();
    let mut scores: Vec<f64> = sim
        .signal_scores
        .iter()
        .map(|s| match s {
            BinScore::Scalar(a) => *a,
            BinScore::Vector(_) => unreachable!(),
        })
        .collect();
    let before = scores.len();
    scores.dedup();
    assert_eq!(scores.len(), before);
    let report = regret_test(
        &sim.dataset,
        &LossSpec::brier(),
        &WeightSpec::binary(0.9).unwrap(),
        RegretOptions::with_binning(Binning::Distinct),
    )
    .unwrap();
    let observed = sim.sidecar.unwrap().signals;
    let mut distinct = observed.clone();
    distinct.sort_unstable();
    distinct.dedup();
    assert_eq!(report.per_bin.len(), distinct.len());
}

#[test]
fn simulated_presets_admit_sbr() {
    for beta in [0.5, 0.9, 0.99] {
        for loss in [LossSpec::log_loss(), LossSpec::brier()] {
            let sim = simulate(&config(beta, loss, 1_000_000, 21), false).unwrap();
            let weights = WeightSpec::binary(beta).unwrap();
            let verdict = verify_sbr(
                &sim.dataset,
                &loss,
                &weights,
                None,
                RegretOptions::with_binning(Binning::Distinct),
            )
            .unwrap();
            assert!(
                verdict.has_sbr,
                "beta={beta} {:?}: max regret {} > {}",
                loss.family, verdict.report.max_regret, verdict.tolerance
            );
            let canon = verdict.canonical.unwrap();
            let counts = sim.dataset.label_counts();
            assert!((canon.experiment.prior()[1] - counts[1] as f64 / 1e6).abs() < 1e-15);
        }
    }
}

#[test]
fn wrong_weights_are_detected() {
    let sim = simulate(&config(0.99, LossSpec::log_loss(), 1_000_000, 2), false).unwrap();
    let report = regret_test(
        &sim.dataset,
        &LossSpec::log_loss(),
        &WeightSpec::binary(0.5).unwrap(),
        RegretOptions::with_binning(Binning::Distinct),
    )
    .unwrap();
    assert!(report.max_regret > 0.05, "{}", report.max_regret);
}

#[test]
fn joint_and_conditional_regret_agree_on_simulated_data() {
    let sim = simulate(&config(0.9, LossSpec::log_loss(), 300_000, 9), false).unwrap();
    let w = WeightSpec::binary(0.9).unwrap();
    for binning in [Binning::EqualCount(10), Binning::EqualWidth(20), Binning::Distinct] {
        let cond = regret_test(&sim.dataset, &LossSpec::log_loss(), &w, RegretOptions::with_binning(binning)).unwrap();
        let joint = regret_test(
            &sim.dataset,
            &LossSpec::log_loss(),
            &w,
            RegretOptions {
                form: RegretForm::Joint,
                ..RegretOptions::with_binning(binning)
            },
        )
        .unwrap();
        assert_eq!(cond.per_bin.len(), joint.per_bin.len());
        for (c, j) in cond.per_bin.iter().zip(&joint.per_bin) {
            assert!((c.regret - j.regret).abs() <= 1e-12);
            assert!((c.realized_loss - j.realized_loss).abs() <= 1e-12);
            assert!((c.minimal_loss - j.minimal_loss).abs() <= 1e-12);
        }
    }
}

#[test]
fn curve_is_permutation_invariant() {
    let sim = simulate(&config(0.9, LossSpec::log_loss(), 50_000, 4), false).unwrap();
    let scores = sim.dataset.binary_scores().unwrap().to_vec();
    let labels = sim.dataset.labels().to_vec();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let shuffled = ScoredDataset::binary(
        order.iter().map(|&i| scores[i]).collect(),
        order.iter().map(|&i| labels[i]).collect(),
    )
    .unwrap();
    for binning in [Binning::EqualCount(10), Binning::EqualWidth(10), Binning::Distinct] {
        let a = build_curve(&sim.dataset, 1, binning).unwrap();
        let b = build_curve(&shuffled, 1, binning).unwrap();
        assert_eq!(a.bins.len(), b.bins.len());
        for (x, y) in a.bins.iter().zip(&b.bins) {
            assert_eq!(x.count, y.count);
            assert_eq!(x.empirical_freq, y.empirical_freq);
            assert!((x.mean_score - y.mean_score).abs() <= 1e-15);
        }
    }
}

#[test]
fn calibrated_bernoulli_data_stays_within_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 1_000_000;
    let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let hits: Vec<bool> = scores.iter().map(|&p| rng.random::<f64>() < p).collect();
    let curve = curve_from_columns(&scores, &hits, Binning::EqualCount(10)).unwrap();
    assert_eq!(curve.bins.len(), 10);
    assert!(curve.bins_within_ci(|s| s) >= 9);
    assert!(expected_calibration_error(&curve) < 0.01);
}

#[test]
fn weighted_curve_lies_below_diagonal() {
    let sim = simulate(&config(0.99, LossSpec::log_loss(), 1_000_000, 8), false).unwrap();
    let curve = build_curve(&sim.dataset, 1, Binning::EqualCount(10)).unwrap();
    assert!(curve.bins.iter().all(|b| b.empirical_freq < b.mean_score));
}

#[test]
fn higher_weight_moves_curve_further_from_diagonal() {
    let mut gaps = Vec::new();
    for beta in [0.5, 0.9, 0.99] {
        let sim = simulate(&config(beta, LossSpec::log_loss(), 200_000, 6), false).unwrap();
        let curve = build_curve(&sim.dataset, 1, Binning::EqualCount(10)).unwrap();
        gaps.push(expected_calibration_error(&curve));
    }
    assert!(gaps[0] < gaps[1] && gaps[1] < gaps[2], "{gaps:?}");
}
