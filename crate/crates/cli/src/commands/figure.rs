//! Series for re-plotting the figures. Each table has an `x` column
//! followed by one column per curve.

use allocsim::limits::{adaptive_limits, naive_limits, LimitTables};
use allocsim::{Mechanism, ScoringRule};

use super::limits::by_k;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};

pub fn table(cfg: &RunConfig, limits: &LimitTables) -> Result<Table, CliError> {
    let id = cfg.figure.expect("figure id is validated");
    let series = cfg.ranks.unwrap_or(1);
    let grid: Vec<f64> = {
        let steps = cfg.steps.unwrap_or(1);
        (0..=steps).map(|i| i as f64 / steps as f64).collect()
    };
    let name = format!("figure{id}");
    match id {
        1 => survivors(&name, &grid, series),
        2 => exit_probabilities(&name, limits, Mechanism::NaiveBoston, &grid, series),
        3 => exit_probabilities(&name, limits, Mechanism::AdaptiveBoston, &grid, series),
        4 => last_agent_round_two(&name, limits, series),
        5 => by_k(&name, &cfg.k, |m, k| limits.welfare_limit_kapproval(m, k)).map(transpose),
        6 => by_k(&name, &cfg.k, |m, k| {
            limits.order_bias_limit(m, &ScoringRule::KApproval(k))
        })
        .map(transpose),
        _ => Err(CliError::usage(format!("unknown figure {id}"))),
    }
}

/// `z_r(theta)` and `y_r(theta)`.
fn survivors(name: &str, grid: &[f64], rounds: usize) -> Result<Table, CliError> {
    let mut columns = vec!["theta".to_owned()];
    columns.extend((1..=rounds).map(|r| format!("nb_r{r}")));
    columns.extend((1..=rounds).map(|r| format!("ab_r{r}")));
    let mut t = Table::new(name, columns);
    for &theta in grid {
        let (nb, ab) = (naive_limits(theta, rounds)?, adaptive_limits(theta, rounds)?);
        let mut row: Vec<Cell> = vec![theta.into()];
        row.extend((1..=rounds).map(|r| Cell::from(nb.z(r))));
        row.extend((1..=rounds).map(|r| Cell::from(ab.y(r))));
        t.push(row);
    }
    Ok(t)
}

/// `q_s(theta)`.
fn exit_probabilities(
    name: &str,
    limits: &LimitTables,
    mech: Mechanism,
    grid: &[f64],
    ranks: usize,
) -> Result<Table, CliError> {
    let mut columns = vec!["theta".to_owned()];
    columns.extend((1..=ranks).map(|s| format!("q{s}")));
    let mut t = Table::new(name, columns);
    for &theta in grid {
        let mut row: Vec<Cell> = vec![theta.into()];
        row.extend(limits.q_prefix(mech, theta, ranks)?.into_iter().map(Cell::from));
        t.push(row);
    }
    Ok(t)
}

/// Adaptive Boston, last agent, round 2. `bid` is `u_{2,s}`; `success` is
/// the chance of winning with rank `s` given the agent takes part in round 2;
/// `success_overall` multiplies by the chance of taking part.
fn last_agent_round_two(name: &str, limits: &LimitTables, ranks: usize) -> Result<Table, CliError> {
    let state = adaptive_limits(1.0, 2)?;
    let win = (-state.scaled(2)).exp();
    let mut t = Table::new(name, ["s", "bid", "success", "success_overall"]);
    for s in 1..=ranks {
        let u = limits.u().get(2, s);
        t.push(vec![
            s.into(),
            u.into(),
            (u * win).into(),
            (u * state.exit_weight(2)).into(),
        ]);
    }
    Ok(t)
}

/// Mechanism rows to `k` rows: `k, nb, ab, sd`.
fn transpose(t: Table) -> Table {
    let mut out = Table::new(t.name.clone(), ["k", "nb", "ab", "sd"]);
    for (j, col) in t.columns.iter().enumerate().skip(1) {
        let k: usize = col[1..].parse().expect("k column");
        let mut row: Vec<Cell> = vec![k.into()];
        row.extend(t.rows.iter().map(|r| r[j].clone()));
        out.push(row);
    }
    out
}
