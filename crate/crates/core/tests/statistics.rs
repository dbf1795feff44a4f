//! Monte Carlo checks against exact and limiting values. Seeds are fixed.

use allocsim::bias::{estimate_positions, last_agent_distribution, order_bias, estimate_matrix};
use allocsim::limits::{q_s_nb, urn_distribution, u_geometric_distribution, LimitTables};
use allocsim::mechanisms::{brute_force_distribution, run, run_with_trace, default_theta_grid};
use allocsim::trials::{map_trials, mean_columns};
use allocsim::welfare::{empirical_welfare_curve, normalized_welfare, welfare_limit_curve_with};
use allocsim::{Mechanism, RngSpec, ScoringRule};

const E1: f64 = 0.367_879_441_171_442_33;

#[test]
fn n5_estimates_match_exact_propagation() {
    let trials = 60_000u64;
    for mech in Mechanism::ALL {
        let exact = brute_force_distribution(mech, 5).unwrap();
        let est = estimate_matrix(mech, 5, trials, 55).unwrap();
        for (re, rm) in exact.probs.iter().zip(&est.probs) {
            for (&p, &m) in re.iter().zip(rm) {
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                assert!((m - p).abs() <= 4.0 * sigma + 1e-12, "{mech}: {p} vs {m}");
            }
        }
    }
}

#[test]
fn plurality_and_borda_welfare_at_large_n() {
    let n = 10_000;
    let spec = RngSpec::new(21);
    let rows = map_trials(100, |t| {
        let a = run(Mechanism::NaiveBoston, n, spec.with_trial(t))?;
        Ok(vec![
            normalized_welfare(&a, &ScoringRule::KApproval(1), 1.0)?,
            normalized_welfare(&a, &ScoringRule::Borda, 1.0)?,
        ])
    })
    .unwrap();
    let means = mean_columns(&rows);
    assert!((means[0] - (1.0 - E1)).abs() < 0.01, "{}", means[0]);
    assert!((means[1] - 1.0).abs() < 0.02, "{}", means[1]);
    for mech in [Mechanism::AdaptiveBoston, Mechanism::SerialDictatorship] {
        let a = run(mech, n, spec).unwrap();
        assert!((normalized_welfare(&a, &ScoringRule::Borda, 1.0).unwrap() - 1.0).abs() < 0.02);
    }
}

#[test]
fn welfare_error_shrinks_with_n() {
    let grid = default_theta_grid();
    let tables = LimitTables::new(40).unwrap();
    let rule = ScoringRule::KApproval(2);
    for mech in Mechanism::ALL {
        let limit = welfare_limit_curve_with(&tables, mech, &rule, &grid, 1e-10).unwrap();
        let mut errors = Vec::new();
        for n in [100usize, 1000, 10_000] {
            let spec = RngSpec::new(n as u64);
            let errs = map_trials(20, |t| {
                let a = run(mech, n, spec.with_trial(t))?;
                let c = empirical_welfare_curve(&a, &rule, &grid)?;
                Ok(c.values.iter().zip(&limit.values).map(|(e, l)| (e - l).abs()).fold(0.0, f64::max))
            })
            .unwrap();
            errors.push(errs.iter().sum::<f64>() / errs.len() as f64);
        }
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{mech}: {errors:?}");
    }
}

#[test]
fn nb_bias_at_large_n() {
    let d = estimate_positions(Mechanism::NaiveBoston, 10_000, 5000, 31, &[1, 10_000], 10).unwrap();
    let b = order_bias(&d, &ScoringRule::KApproval(1)).unwrap();
    assert!((b.bias - (1.0 - E1)).abs() < 0.02, "{b:?}");
}

#[test]
fn boston_borda_bias_decreases() {
    for mech in [Mechanism::NaiveBoston, Mechanism::AdaptiveBoston] {
        let biases: Vec<f64> = [100usize, 1000, 10_000]
            .iter()
            .map(|&n| {
                let d = estimate_positions(mech, n, 1000, 41, &[1, n], n).unwrap();
                order_bias(&d, &ScoringRule::Borda).unwrap().bias
            })
            .collect();
        assert!(biases[0] > biases[1] && biases[1] > biases[2], "{mech}: {biases:?}");
    }
}

#[test]
fn last_agent_distributions() {
    let nb = last_agent_distribution(Mechanism::NaiveBoston, 10_000, 20_000, 51, 5).unwrap();
    assert!((nb.probs[0][0] - q_s_nb(1, 1.0).unwrap()).abs() < 0.01);
    assert!((nb.probs[0][0] - E1).abs() < 0.01);

    let n = 10_000;
    let sd = last_agent_distribution(Mechanism::SerialDictatorship, n, 20_000, 52, n).unwrap();
    // Uniform over ranks: check deciles.
    for decile in sd.probs[0].chunks(n / 10) {
        let mass: f64 = decile.iter().sum();
        let sigma = (0.1 * 0.9 / 20_000f64).sqrt();
        assert!((mass - 0.1).abs() < 4.0 * sigma, "{mass}");
    }
}

#[test]
fn nb_round_one_variance_is_below_mean() {
    let n = 1000;
    let spec = RngSpec::new(61);
    let counts: Vec<f64> = map_trials(2000, |t| {
        let a = run(Mechanism::NaiveBoston, n, spec.with_trial(t))?;
        Ok(a.records.iter().filter(|r| r.position <= n / 2 && r.exit_round == 1).count() as f64)
    })
    .unwrap();
    let m = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / m;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0);
    assert!(var <= mean);
}

#[test]
fn ab_survivors_after_four_rounds() {
    let n = 10_000;
    let spec = RngSpec::new(71);
    let fractions = map_trials(100, |t| {
        let (_, trace) = run_with_trace(Mechanism::AdaptiveBoston, n, spec.with_trial(t), &[1.0])?;
        Ok(vec![trace.remaining_at(5) as f64 / n as f64])
    })
    .unwrap();
    let mean = mean_columns(&fractions)[0];
    assert!((mean - (-4.0f64).exp()).abs() < 0.005, "{mean}");
}

#[test]
fn urn_converges_to_geometric_limit() {
    let n = 10_000;
    let p2 = E1;
    let list = [n, (n as f64 * p2).floor() as usize];
    let urn = urn_distribution(&list, 10).unwrap();
    let geo = u_geometric_distribution(&[1.0, p2], 10).unwrap();
    let err = urn.iter().zip(&geo).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-2);
    let coarse = urn_distribution(&[100, 36], 10).unwrap();
    let coarse_err = coarse.iter().zip(&geo).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < coarse_err);
}
