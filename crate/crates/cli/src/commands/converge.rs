//! Sup-over-grid error between a simulated statistic and its limit, per n.

use allocsim::limits::{adaptive_limits, naive_limits, LimitTables, DEFAULT_QUAD_TOL};
use allocsim::mechanisms::RoundTrace;
use allocsim::preferences::splitmix64;
use allocsim::trials::{map_trials, mean_columns};
use allocsim::welfare::{empirical_welfare_curve, welfare_limit_curve_with};
use allocsim::{run, Mechanism, RngSpec, ScoringRule};

use crate::config::{RunConfig, Statistic};
use crate::error::CliError;
use crate::output::Table;

pub fn table(cfg: &RunConfig, rule: &ScoringRule, limits: &LimitTables) -> Result<Table, CliError> {
    let statistic = cfg.statistic.expect("statistic is validated");
    let trials = cfg.trials.unwrap_or(1);
    let grid = &cfg.theta;
    let name = match statistic {
        Statistic::Survivors => "converge_survivors",
        Statistic::Welfare => "converge_welfare",
    };
    let mut t = Table::new(
        name,
        ["mechanism", "n", "trials", "median_error", "mean_error", "max_error"],
    );
    for &mech in &cfg.mechanisms {
        let limit = match statistic {
            Statistic::Survivors => survivor_limit(mech, cfg.round.unwrap_or(1), grid)?,
            Statistic::Welfare => {
                welfare_limit_curve_with(limits, mech, rule, grid, DEFAULT_QUAD_TOL)?.values
            }
        };
        for &n in &cfg.n {
            // Independent streams per size.
            let rng = RngSpec::new(splitmix64(cfg.seed ^ n as u64));
            let errors = map_trials(trials, |trial| {
                let a = run(mech, n, rng.with_trial(trial))?;
                let empirical = match statistic {
                    Statistic::Survivors => {
                        let r = cfg.round.unwrap_or(1);
                        let trace = RoundTrace::from_assignment(&a, grid)?;
                        (0..grid.len())
                            .map(|j| trace.remaining_theta_at(r, j) as f64 / n as f64)
                            .collect()
                    }
                    Statistic::Welfare => empirical_welfare_curve(&a, rule, grid)?.values,
                };
                Ok(sup_distance(&empirical, &limit))
            })?;
            let mean = mean_columns(&errors.iter().map(|&e| vec![e]).collect::<Vec<_>>())[0];
            let max = errors.iter().copied().fold(0.0, f64::max);
            t.push(vec![
                mech.tag().into(),
                n.into(),
                trials.into(),
                median(errors).into(),
                mean.into(),
                max.into(),
            ]);
        }
    }
    Ok(t)
}

/// Limit of `N_n(r, theta) / n` on the grid.
fn survivor_limit(mech: Mechanism, r: usize, grid: &[f64]) -> Result<Vec<f64>, CliError> {
    grid.iter()
        .map(|&theta| {
            Ok(match mech {
                Mechanism::NaiveBoston => naive_limits(theta, r)?.z(r),
                Mechanism::AdaptiveBoston => adaptive_limits(theta, r)?.y(r),
                // Everyone is matched in the first round.
                Mechanism::SerialDictatorship if r == 1 => theta,
                Mechanism::SerialDictatorship => 0.0,
            })
        })
        .collect()
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}
