//! Monte Carlo runs summarized next to their analytic limits.

use allocsim::bias::{order_bias, Provenance, RankDistribution};
use allocsim::limits::{adaptive_limits, LimitTables, DEFAULT_QUAD_TOL};
use allocsim::trials::{map_trials, mean_columns};
use allocsim::welfare::{empirical_welfare_curve, welfare_limit_curve_with};
use allocsim::{run, Error, Mechanism, RngSpec, ScoringRule};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};

struct Spec<'a> {
    n: usize,
    trials: u64,
    rounds: usize,
    ranks: usize,
    /// Rank columns kept for the first and last agents.
    bias_width: usize,
    rules: &'a [ScoringRule],
    theta: &'a [f64],
    records: bool,
}

/// Everything kept from one trial.
struct TrialSummary {
    rounds: u32,
    survivors: Vec<f64>,
    /// Counts for ranks `1..=ranks`, then the overflow.
    rank_counts: Vec<u64>,
    mean_rank: f64,
    /// Per rule, normalized welfare on the theta grid.
    welfare: Vec<Vec<f64>>,
    first_rank: u32,
    last_rank: u32,
    records: Vec<[u64; 4]>,
}

pub fn tables(
    cfg: &RunConfig,
    rules: &[ScoringRule],
    records: bool,
    limits: &LimitTables,
) -> Result<Vec<Table>, CliError> {
    let n = cfg.n[0];
    let spec = Spec {
        n,
        trials: cfg.trials.unwrap_or(1),
        rounds: cfg.rounds.unwrap_or(1),
        ranks: cfg.ranks.unwrap_or(1).min(n),
        bias_width: n.min(cfg.s_max),
        rules,
        theta: &cfg.theta,
        records,
    };
    let mut out = Vec::new();
    for &mech in &cfg.mechanisms {
        let rng = RngSpec::new(cfg.seed);
        let summaries = map_trials(spec.trials, |t| summarize(mech, &spec, rng.with_trial(t)))?;
        let tag = mech.tag();
        out.push(trial_table(tag, &spec, &summaries));
        out.push(survivor_table(tag, mech, &spec, &summaries)?);
        out.push(rank_table(tag, mech, &spec, &summaries, limits)?);
        out.push(welfare_table(tag, mech, &spec, &summaries, limits)?);
        out.push(bias_table(tag, mech, &spec, &summaries, limits, cfg.seed)?);
        if records {
            out.push(record_table(tag, &summaries));
        }
    }
    Ok(out)
}

fn summarize(mech: Mechanism, spec: &Spec, rng: RngSpec) -> allocsim::Result<TrialSummary> {
    let a = run(mech, spec.n, rng)?;
    let n = spec.n as f64;
    let survivors = (1..=spec.rounds as u32)
        .map(|r| a.remaining_at(r) as f64 / n)
        .collect();
    let mut rank_counts = vec![0u64; spec.ranks + 1];
    let mut rank_sum = 0u64;
    for rank in a.ranks() {
        rank_counts[(rank as usize).min(spec.ranks + 1) - 1] += 1;
        rank_sum += u64::from(rank);
    }
    let welfare = spec
        .rules
        .iter()
        .map(|rule| Ok(empirical_welfare_curve(&a, rule, spec.theta)?.values))
        .collect::<allocsim::Result<_>>()?;
    let records = if spec.records {
        a.records
            .iter()
            .map(|r| [r.position as u64, r.item as u64, r.rank.into(), r.exit_round.into()])
            .collect()
    } else {
        Vec::new()
    };
    Ok(TrialSummary {
        rounds: a.rounds(),
        survivors,
        rank_counts,
        mean_rank: rank_sum as f64 / n,
        welfare,
        first_rank: a.records[0].rank,
        last_rank: a.records[spec.n - 1].rank,
        records,
    })
}

/// Mean and standard error of the mean, in trial order.
fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, Option<f64>) {
    let rows: Vec<Vec<f64>> = values.clone().map(|v| vec![v]).collect();
    let m = rows.len();
    let mean = mean_columns(&rows)[0];
    if m < 2 {
        return (mean, None);
    }
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    (mean, Some((ss / (m - 1) as f64 / m as f64).sqrt()))
}

fn rule_column(rule: &ScoringRule) -> String {
    format!("welfare_{rule}")
}

fn trial_table(tag: &str, spec: &Spec, s: &[TrialSummary]) -> Table {
    let mut columns: Vec<String> = ["trial", "rounds", "mean_rank", "first_choice"]
        .map(String::from)
        .into();
    columns.extend(spec.rules.iter().map(rule_column));
    let mut t = Table::new(format!("simulate_{tag}_trials"), columns);
    for (i, tr) in s.iter().enumerate() {
        let mut row: Vec<Cell> = vec![
            i.into(),
            tr.rounds.into(),
            tr.mean_rank.into(),
            (tr.rank_counts[0] as f64 / spec.n as f64).into(),
        ];
        // Welfare of the whole population: the last grid point if it is 1.
        let whole = spec.theta.last() == Some(&1.0);
        row.extend(tr.welfare.iter().map(|w| {
            if whole {
                Cell::from(*w.last().unwrap())
            } else {
                Cell::Empty
            }
        }));
        t.push(row);
    }
    t
}

/// `N_n(r) / n` against its limit.
fn survivor_table(tag: &str, mech: Mechanism, spec: &Spec, s: &[TrialSummary]) -> Result<Table, CliError> {
    let ab = adaptive_limits(1.0, spec.rounds)?;
    let mut t = Table::new(format!("simulate_{tag}_survivors"), ["r", "mean", "stderr", "limit"]);
    for r in 1..=spec.rounds {
        let (mean, se) = mean_se(s.iter().map(|tr| tr.survivors[r - 1]));
        let limit = match mech {
            Mechanism::NaiveBoston => allocsim::limits::omega(r)?,
            Mechanism::AdaptiveBoston => ab.y(r),
            Mechanism::SerialDictatorship => f64::from(r == 1),
        };
        t.push(vec![r.into(), mean.into(), se.into(), limit.into()]);
    }
    Ok(t)
}

/// Fraction of all agents obtaining rank `s`, against `int_0^1 q_s`.
fn rank_table(
    tag: &str,
    mech: Mechanism,
    spec: &Spec,
    s: &[TrialSummary],
    limits: &LimitTables,
) -> Result<Table, CliError> {
    let total = spec.n as f64 * spec.trials as f64;
    let mut t = Table::new(format!("simulate_{tag}_ranks"), ["s", "fraction", "limit"]);
    for rank in 1..=spec.ranks {
        let count: u64 = s.iter().map(|tr| tr.rank_counts[rank - 1]).sum();
        let limit = limits.cumulative_q(mech, rank, 1.0, DEFAULT_QUAD_TOL)?;
        t.push(vec![rank.into(), (count as f64 / total).into(), limit.into()]);
    }
    Ok(t)
}

fn welfare_table(
    tag: &str,
    mech: Mechanism,
    spec: &Spec,
    s: &[TrialSummary],
    limits: &LimitTables,
) -> Result<Table, CliError> {
    let mut t = Table::new(
        format!("simulate_{tag}_welfare"),
        ["rule", "theta", "mean", "stderr", "limit"],
    );
    for (i, rule) in spec.rules.iter().enumerate() {
        let limit = welfare_limit_curve_with(limits, mech, rule, spec.theta, DEFAULT_QUAD_TOL)?;
        for (j, &theta) in spec.theta.iter().enumerate() {
            let (mean, se) = mean_se(s.iter().map(|tr| tr.welfare[i][j]));
            t.push(vec![
                rule.to_string().into(),
                theta.into(),
                mean.into(),
                se.into(),
                limit.values[j].into(),
            ]);
        }
    }
    Ok(t)
}

/// Order bias between the first and last agents. Rules that give every
/// rank the same score at this `n` leave the estimate blank.
fn bias_table(
    tag: &str,
    mech: Mechanism,
    spec: &Spec,
    s: &[TrialSummary],
    limits: &LimitTables,
    seed: u64,
) -> Result<Table, CliError> {
    let width = spec.bias_width;
    let total = spec.trials as f64;
    let row_of = |rank: &dyn Fn(&TrialSummary) -> u32| {
        let mut counts = vec![0u64; width + 1];
        for tr in s {
            counts[(rank(tr) as usize).min(width + 1) - 1] += 1;
        }
        let probs: Vec<f64> = counts[..width].iter().map(|&c| c as f64 / total).collect();
        (probs, counts[width] as f64 / total)
    };
    let (first, first_over) = row_of(&|tr| tr.first_rank);
    let (last, last_over) = row_of(&|tr| tr.last_rank);
    let (positions, probs, overflow) = if spec.n == 1 {
        (vec![1], vec![first], vec![first_over])
    } else {
        (vec![1, spec.n], vec![first, last], vec![first_over, last_over])
    };
    let dist = RankDistribution {
        n: spec.n,
        positions,
        probs,
        overflow,
        provenance: Provenance::Estimated {
            trials: spec.trials,
            seed,
        },
    };
    let mut t = Table::new(
        format!("simulate_{tag}_bias"),
        ["rule", "bias", "endpoint_bias", "interval_low", "interval_high", "flagged", "limit"],
    );
    for rule in spec.rules {
        let limit = Cell::from(limits.order_bias_limit(mech, rule)?);
        let mut row: Vec<Cell> = vec![rule.to_string().into()];
        match order_bias(&dist, rule) {
            Ok(b) => row.extend([
                b.bias.into(),
                b.endpoint_bias.into(),
                b.interval.map(|i| i.0).into(),
                b.interval.map(|i| i.1).into(),
                b.flagged.into(),
            ]),
            Err(Error::DegenerateRule) => row.extend(std::iter::repeat_n(Cell::Empty, 5)),
            Err(e) => return Err(e.into()),
        }
        row.push(limit);
        t.push(row);
    }
    Ok(t)
}

fn record_table(tag: &str, s: &[TrialSummary]) -> Table {
    let mut t = Table::new(
        format!("simulate_{tag}_records"),
        ["trial", "position", "item", "rank", "exit_round"],
    );
    for (i, tr) in s.iter().enumerate() {
        for rec in &tr.records {
            let mut row: Vec<Cell> = vec![i.into()];
            row.extend(rec.iter().map(|&v| Cell::from(v)));
            t.push(row);
        }
    }
    t
}
