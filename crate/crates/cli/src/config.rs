//! Command-line arguments and the validated run configuration.

use std::path::PathBuf;
use std::str::FromStr;

use allocsim::limits::{DEFAULT_S_MAX, MAX_ADAPTIVE_ROUNDS};
use allocsim::{Mechanism, ScoringRule};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::CliError;
use crate::output::Format;

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Refuse simulations with more than this many agent-trials unless
/// `--allow-large` is given.
pub const WORK_CAP: u64 = 200_000_000;

#[derive(Debug, Parser)]
#[command(name = "allocsim", version, about = "Housing allocation mechanisms under random preferences")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Master seed, or `random` to draw one (the drawn value is recorded).
    #[arg(long, global = true, default_value_t = SeedArg::Fixed(DEFAULT_SEED))]
    pub seed: SeedArg,
    /// Worker threads for trials. Output does not depend on this.
    #[arg(long, global = true, env = "ALLOCSIM_THREADS")]
    pub threads: Option<usize>,
    /// Preference ranks carried explicitly in limit computations.
    #[arg(long, global = true, default_value_t = DEFAULT_S_MAX)]
    pub s_max: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limiting quantities for the early rounds, welfare and order bias.
    Limits(LimitsArgs),
    /// Plot-ready series: survivors, q_s curves, round-2 bids, welfare and bias by k.
    Figure(FigureArgs),
    /// Monte Carlo runs with the matching limits alongside.
    Simulate(SimulateArgs),
    /// Error between simulation and limit as n grows.
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    /// Emit only this table (1-4); all four by default.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub table: Option<u8>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1")]
    pub theta: Vec<f64>,
    /// Rounds listed in tables 1 and 2.
    #[arg(long, default_value_t = 5)]
    pub rounds: usize,
    /// Preference ranks listed in the u table.
    #[arg(long, default_value_t = 8)]
    pub ranks: usize,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_parser = clap::value_parser!(u8).range(1..=6))]
    pub id: u8,
    /// Largest k for figures 5 and 6.
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// Series count: rounds for figure 1, ranks for figures 2-4.
    #[arg(long, default_value_t = 6)]
    pub series: usize,
    /// Intervals in the theta grid.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_delimiter = ',', default_value = "nb,ab,sd")]
    pub mech: Vec<Mechanism>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, value_delimiter = ',', default_value = "plurality,borda")]
    pub rule: Vec<ScoringRule>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub theta: Vec<f64>,
    /// Rounds reported in the survivor table.
    #[arg(long, default_value_t = 6)]
    pub rounds: usize,
    /// Ranks reported in the rank histogram.
    #[arg(long, default_value_t = 10)]
    pub ranks: usize,
    /// Also write every agent's outcome in every trial.
    #[arg(long)]
    pub records: bool,
    #[arg(long)]
    pub allow_large: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// `N_n(r, theta) / n` for the round given by `--round`.
    Survivors,
    /// Normalized welfare `W_n(theta) / n` under `--rule`.
    Welfare,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long, value_delimiter = ',', default_value = "nb,ab,sd")]
    pub mech: Vec<Mechanism>,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = Statistic::Survivors)]
    pub statistic: Statistic,
    #[arg(long, default_value_t = 2)]
    pub round: usize,
    #[arg(long, default_value = "borda")]
    pub rule: ScoringRule,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub theta: Vec<f64>,
    #[arg(long)]
    pub allow_large: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedArg {
    Fixed(u64),
    Random,
}

impl SeedArg {
    pub fn resolve(self) -> u64 {
        match self {
            SeedArg::Fixed(s) => s,
            SeedArg::Random => rand::random(),
        }
    }
}

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(SeedArg::Random);
        }
        s.parse()
            .map(SeedArg::Fixed)
            .map_err(|_| format!("expected an unsigned integer or `random`, got {s:?}"))
    }
}

impl std::fmt::Display for SeedArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedArg::Fixed(s) => write!(f, "{s}"),
            SeedArg::Random => f.write_str("random"),
        }
    }
}

/// Everything that determines the numbers in an output file. Output
/// location, format and thread count are deliberately absent: they do not
/// change the payload.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub seed: u64,
    pub s_max: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mechanisms: Vec<Mechanism>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<Statistic>,
    /// Round index for the converge survivor statistic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    /// Largest round listed (`R_max`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl RunConfig {
    fn base(command: &'static str, common: &Common) -> Result<Self, CliError> {
        if common.s_max == 0 || common.s_max >= MAX_ADAPTIVE_ROUNDS {
            return Err(CliError::usage(format!(
                "--s-max must be in 1..{MAX_ADAPTIVE_ROUNDS}"
            )));
        }
        if common.threads == Some(0) {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        Ok(RunConfig {
            command,
            seed: common.seed.resolve(),
            s_max: common.s_max,
            mechanisms: Vec::new(),
            n: Vec::new(),
            trials: None,
            theta: Vec::new(),
            k: Vec::new(),
            rules: Vec::new(),
            table: None,
            figure: None,
            statistic: None,
            round: None,
            rounds: None,
            ranks: None,
            steps: None,
        })
    }

    pub fn limits(common: &Common, a: &LimitsArgs) -> Result<Self, CliError> {
        check_theta(&a.theta, false)?;
        check_k(&a.k, common.s_max)?;
        check_positive("--rounds", a.rounds)?;
        check_positive("--ranks", a.ranks)?;
        if a.rounds > common.s_max || a.ranks > common.s_max {
            return Err(CliError::usage("--rounds and --ranks must not exceed --s-max"));
        }
        Ok(RunConfig {
            theta: a.theta.clone(),
            k: a.k.clone(),
            table: a.table,
            rounds: Some(a.rounds),
            ranks: Some(a.ranks),
            ..Self::base("limits", common)?
        })
    }

    pub fn figure(common: &Common, a: &FigureArgs) -> Result<Self, CliError> {
        check_positive("--k-max", a.k_max)?;
        check_positive("--series", a.series)?;
        check_positive("--steps", a.steps)?;
        if a.k_max > common.s_max || a.series > common.s_max {
            return Err(CliError::usage("--k-max and --series must not exceed --s-max"));
        }
        Ok(RunConfig {
            figure: Some(a.id),
            k: if a.id >= 5 { (1..=a.k_max).collect() } else { Vec::new() },
            ranks: Some(a.series),
            steps: Some(a.steps),
            ..Self::base("figure", common)?
        })
    }

    pub fn simulate(common: &Common, a: &SimulateArgs) -> Result<Self, CliError> {
        check_mechanisms(&a.mech)?;
        check_positive("--n", a.n)?;
        check_trials(a.trials, a.n, a.allow_large, a.mech.len())?;
        check_theta(&a.theta, true)?;
        check_positive("--rounds", a.rounds)?;
        check_positive("--ranks", a.ranks)?;
        if a.rule.is_empty() {
            return Err(CliError::usage("at least one --rule is required"));
        }
        if a.ranks > common.s_max || a.rounds >= MAX_ADAPTIVE_ROUNDS {
            return Err(CliError::usage(format!(
                "--ranks must not exceed --s-max and --rounds must be below {MAX_ADAPTIVE_ROUNDS}"
            )));
        }
        check_rules(&a.rule, common.s_max)?;
        if a.records && a.n as u64 * a.trials > 10_000_000 && !a.allow_large {
            return Err(CliError::usage(
                "--records with more than 10^7 agent-trials needs --allow-large",
            ));
        }
        Ok(RunConfig {
            mechanisms: a.mech.clone(),
            n: vec![a.n],
            trials: Some(a.trials),
            theta: a.theta.clone(),
            rules: a.rule.iter().map(ToString::to_string).collect(),
            rounds: Some(a.rounds),
            ranks: Some(a.ranks),
            ..Self::base("simulate", common)?
        })
    }

    pub fn converge(common: &Common, a: &ConvergeArgs) -> Result<Self, CliError> {
        check_mechanisms(&a.mech)?;
        if a.n.is_empty() || a.n.contains(&0) {
            return Err(CliError::usage("--n needs one or more positive sizes"));
        }
        let total: usize = a.n.iter().sum();
        check_trials(a.trials, total, a.allow_large, a.mech.len())?;
        check_theta(&a.theta, true)?;
        match a.statistic {
            Statistic::Survivors => {
                check_positive("--round", a.round)?;
                if a.round > common.s_max {
                    return Err(CliError::usage("--round must not exceed --s-max"));
                }
            }
            Statistic::Welfare => check_rules(std::slice::from_ref(&a.rule), common.s_max)?,
        }
        let survivors = a.statistic == Statistic::Survivors;
        Ok(RunConfig {
            mechanisms: a.mech.clone(),
            n: a.n.clone(),
            trials: Some(a.trials),
            theta: a.theta.clone(),
            statistic: Some(a.statistic),
            round: survivors.then_some(a.round),
            rules: if survivors { Vec::new() } else { vec![a.rule.to_string()] },
            ..Self::base("converge", common)?
        })
    }
}

fn check_positive(flag: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(CliError::usage(format!("{flag} must be at least 1")));
    }
    Ok(())
}

fn check_theta(theta: &[f64], sorted: bool) -> Result<(), CliError> {
    if theta.is_empty() || theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(CliError::usage("--theta values must lie in [0, 1]"));
    }
    if sorted && theta.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::usage("--theta values must be sorted"));
    }
    Ok(())
}

fn check_k(k: &[usize], s_max: usize) -> Result<(), CliError> {
    if k.is_empty() || k.iter().any(|&k| k == 0 || k >= s_max) {
        return Err(CliError::usage(format!("--k values must lie in 1..{s_max}")));
    }
    Ok(())
}

fn check_rules(rules: &[ScoringRule], s_max: usize) -> Result<(), CliError> {
    for rule in rules {
        if let ScoringRule::KApproval(k) = rule {
            check_k(&[*k], s_max)?;
        }
    }
    Ok(())
}

fn check_mechanisms(mechs: &[Mechanism]) -> Result<(), CliError> {
    if mechs.is_empty() {
        return Err(CliError::usage("at least one --mech is required"));
    }
    let mut seen = mechs.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != mechs.len() {
        return Err(CliError::usage("--mech lists a mechanism twice"));
    }
    Ok(())
}

fn check_trials(trials: u64, n_total: usize, allow_large: bool, mechs: usize) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let work = (n_total as u64).saturating_mul(trials).saturating_mul(mechs as u64);
    if work > WORK_CAP && !allow_large {
        return Err(CliError::usage(format!(
            "{work} agent-trials exceeds the cap of {WORK_CAP}; pass --allow-large to run anyway"
        )));
    }
    Ok(())
}
