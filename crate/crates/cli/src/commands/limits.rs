use allocsim::limits::{adaptive_limits, naive_limits, LimitTables};
use allocsim::{Mechanism, ScoringRule};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};

pub fn tables(cfg: &RunConfig, limits: &LimitTables) -> Result<Vec<Table>, CliError> {
    let wanted = |t: u8| cfg.table.is_none_or(|x| x == t);
    let mut out = Vec::new();
    if wanted(1) {
        out.push(table1(cfg, limits)?);
    }
    if wanted(2) {
        out.push(table2(cfg)?);
        out.push(table2_u(cfg, limits));
    }
    if wanted(3) {
        out.push(by_k("table3", &cfg.k, |m, k| limits.welfare_limit_kapproval(m, k))?);
    }
    if wanted(4) {
        out.push(by_k("table4", &cfg.k, |m, k| {
            limits.order_bias_limit(m, &ScoringRule::KApproval(k))
        })?);
    }
    Ok(out)
}

/// Naive Boston: `omega_r`, `z_r`, `z'_r`, `f_r`.
fn table1(cfg: &RunConfig, limits: &LimitTables) -> Result<Table, CliError> {
    let rounds = cfg.rounds.unwrap_or(1);
    let mut t = Table::new("table1", ["theta", "r", "omega", "z", "z_prime", "f"]);
    for &theta in &cfg.theta {
        let state = naive_limits(theta, rounds)?;
        for r in 1..=rounds {
            t.push(vec![
                theta.into(),
                r.into(),
                limits.omega().get(r).into(),
                state.z(r).into(),
                state.z_prime(r).into(),
                state.f(r).into(),
            ]);
        }
    }
    Ok(t)
}

/// Adaptive Boston: `y_r`, `y'_r`, `g_r`.
fn table2(cfg: &RunConfig) -> Result<Table, CliError> {
    let rounds = cfg.rounds.unwrap_or(1);
    let mut t = Table::new("table2", ["theta", "r", "y", "y_prime", "g"]);
    for &theta in &cfg.theta {
        let state = adaptive_limits(theta, rounds)?;
        for r in 1..=rounds {
            t.push(vec![
                theta.into(),
                r.into(),
                state.y(r).into(),
                state.y_prime(r).into(),
                state.g(r).into(),
            ]);
        }
    }
    Ok(t)
}

/// `u_{rs}`, one row per round.
fn table2_u(cfg: &RunConfig, limits: &LimitTables) -> Table {
    let rounds = cfg.rounds.unwrap_or(1);
    let ranks = cfg.ranks.unwrap_or(1);
    let mut columns = vec!["r".to_owned()];
    columns.extend((1..=ranks).map(|s| format!("s{s}")));
    let mut t = Table::new("table2_u", columns);
    for r in 1..=rounds {
        let mut row: Vec<Cell> = vec![r.into()];
        row.extend((1..=ranks).map(|s| Cell::from(limits.u().get(r, s))));
        t.push(row);
    }
    t
}

/// One row per mechanism, one column per `k`.
pub fn by_k(
    name: &str,
    ks: &[usize],
    value: impl Fn(Mechanism, usize) -> allocsim::Result<f64>,
) -> Result<Table, CliError> {
    let mut columns = vec!["mechanism".to_owned()];
    columns.extend(ks.iter().map(|k| format!("k{k}")));
    let mut t = Table::new(name, columns);
    for m in Mechanism::ALL {
        let mut row: Vec<Cell> = vec![m.tag().into()];
        for &k in ks {
            row.push(value(m, k)?.into());
        }
        t.push(row);
    }
    Ok(t)
}
