//! Serial Dictatorship, Naive Boston and Adaptive Boston.
//!
//! Agents are identified by their position in the choosing order, so agent
//! index `a` has position `a + 1` and earlier agents win ties. Any other
//! order is simulated by relabelling agents before the run.
//!
//! The engines are generic over [`Preferences`], which lets the same code run
//! on lazily generated IC preferences and on explicit profiles.

mod exact;
mod trace;
mod tracked;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preferences::{Preferences, RngSpec};

pub use exact::{brute_force_counts, brute_force_distribution, exact_distribution, BRUTE_FORCE_MAX_N};
pub use trace::{default_theta_grid, segment_len, validate_theta_grid, BidCounts, RoundTrace};
pub use tracked::{run_tracked, TrackedOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "sd")]
    SerialDictatorship,
    #[serde(rename = "nb")]
    NaiveBoston,
    #[serde(rename = "ab")]
    AdaptiveBoston,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [
        Mechanism::NaiveBoston,
        Mechanism::AdaptiveBoston,
        Mechanism::SerialDictatorship,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Mechanism::SerialDictatorship => "sd",
            Mechanism::NaiveBoston => "nb",
            Mechanism::AdaptiveBoston => "ab",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sd" | "serial-dictatorship" => Ok(Mechanism::SerialDictatorship),
            "nb" | "naive-boston" => Ok(Mechanism::NaiveBoston),
            "ab" | "adaptive-boston" => Ok(Mechanism::AdaptiveBoston),
            other => Err(Error::InvalidParameter(format!("unknown mechanism {other:?}"))),
        }
    }
}

/// One bid: round, preference rank of the item bid for, and whether it won.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bid {
    pub round: u32,
    pub rank: u32,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    /// 1-based position in the choosing order.
    pub position: usize,
    pub item: usize,
    pub exit_round: u32,
    /// Rank of `item` in the agent's preference order (1 = favourite).
    pub rank: u32,
    pub bids: Vec<Bid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub n: usize,
    pub mechanism: Mechanism,
    pub seed: Option<RngSpec>,
    pub records: Vec<OutcomeRecord>,
}

impl Assignment {
    /// Number of rounds the mechanism ran for.
    pub fn rounds(&self) -> u32 {
        self.records.iter().map(|r| r.exit_round).max().unwrap_or(0)
    }

    /// `N_n(r)`: agents still unmatched at the start of round `r`.
    pub fn remaining_at(&self, round: u32) -> usize {
        self.records.iter().filter(|r| r.exit_round >= round).count()
    }

    pub fn ranks(&self) -> impl Iterator<Item = u32> + '_ {
        self.records.iter().map(|r| r.rank)
    }

    /// Checks the structural invariants every run must satisfy.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.records.len() != self.n {
            return bad(format!("{} records for n = {}", self.records.len(), self.n));
        }
        let mut taken = vec![false; self.n];
        for (idx, rec) in self.records.iter().enumerate() {
            if rec.position != idx + 1 {
                return bad(format!("record {idx} has position {}", rec.position));
            }
            if rec.item >= self.n || std::mem::replace(&mut taken[rec.item], true) {
                return bad(format!("item {} assigned twice or out of range", rec.item));
            }
            if rec.rank == 0 || rec.rank as usize > self.n || rec.exit_round == 0 {
                return bad(format!("agent {} has rank {} round {}", rec.position, rec.rank, rec.exit_round));
            }
            let last = rec.bids.last();
            if last.map(|b| (b.round, b.rank, b.success)) != Some((rec.exit_round, rec.rank, true)) {
                return bad(format!("agent {} final bid does not match outcome", rec.position));
            }
            if rec.bids.iter().rev().skip(1).any(|b| b.success) {
                return bad(format!("agent {} won more than once", rec.position));
            }
            match self.mechanism {
                Mechanism::NaiveBoston if rec.rank != rec.exit_round => {
                    return bad(format!("NB agent {} has rank != round", rec.position));
                }
                Mechanism::AdaptiveBoston if rec.rank < rec.exit_round => {
                    return bad(format!("AB agent {} has rank < round", rec.position));
                }
                Mechanism::SerialDictatorship if rec.exit_round != 1 => {
                    return bad(format!("SD agent {} exits after round 1", rec.position));
                }
                _ => {}
            }
        }
        if self.n > 0 && self.records[0].rank != 1 {
            return bad("first agent did not get its first choice".into());
        }
        Ok(())
    }
}

fn check_square<P: Preferences>(prefs: &[P]) -> Result<usize> {
    let n = prefs.len();
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    if let Some(p) = prefs.iter().find(|p| p.n_items() != n) {
        return Err(Error::SizeMismatch {
            agents: n,
            items: p.n_items(),
        });
    }
    Ok(n)
}

fn pending(n: usize) -> Vec<OutcomeRecord> {
    (0..n)
        .map(|a| OutcomeRecord {
            position: a + 1,
            item: usize::MAX,
            exit_round: 0,
            rank: 0,
            bids: Vec::new(),
        })
        .collect()
}

/// Serial Dictatorship: each agent in turn takes its favourite remaining item.
pub fn serial_dictatorship<P: Preferences>(prefs: &mut [P]) -> Result<Vec<OutcomeRecord>> {
    let n = check_square(prefs)?;
    let mut available = vec![true; n];
    let mut records = pending(n);
    for (a, rec) in records.iter_mut().enumerate() {
        prefs[a].reveal_next_in(&available)?;
        let rank = prefs[a].revealed().len() as u32;
        let item = *prefs[a].revealed().last().expect("just revealed") as usize;
        available[item] = false;
        rec.item = item;
        rec.rank = rank;
        rec.exit_round = 1;
        rec.bids.push(Bid {
            round: 1,
            rank,
            success: true,
        });
    }
    Ok(records)
}

/// Naive Boston: in round `r` every unmatched agent bids for its `r`th
/// preference and each still-available item goes to its earliest bidder.
pub fn naive_boston<P: Preferences>(prefs: &mut [P]) -> Result<Vec<OutcomeRecord>> {
    let n = check_square(prefs)?;
    let mut available = vec![true; n];
    let mut records = pending(n);
    let mut active: Vec<usize> = (0..n).collect();
    let mut round = 0u32;
    while !active.is_empty() {
        round += 1;
        assert!(round as usize <= n, "naive Boston agent unmatched after round n");
        // Bids never depend on availability, so claims can be resolved in
        // choosing order as bids arrive.
        active.retain(|&a| {
            let item = prefs[a].reveal_next().expect("an unmatched agent has unbid items");
            let success = available[item];
            let rec = &mut records[a];
            rec.bids.push(Bid {
                round,
                rank: round,
                success,
            });
            if success {
                available[item] = false;
                rec.item = item;
                rec.rank = round;
                rec.exit_round = round;
            }
            !success
        });
    }
    Ok(records)
}

/// Adaptive Boston: in each round every unmatched agent bids for its
/// favourite among the items available at the start of the round.
pub fn adaptive_boston<P: Preferences>(prefs: &mut [P]) -> Result<Vec<OutcomeRecord>> {
    let n = check_square(prefs)?;
    let mut available = vec![true; n];
    let mut records = pending(n);
    let mut active: Vec<usize> = (0..n).collect();
    let mut bids: Vec<(usize, u32)> = Vec::with_capacity(n);
    let mut round = 0u32;
    while !active.is_empty() {
        round += 1;
        assert!(round as usize <= n, "adaptive Boston agent unmatched after round n");
        bids.clear();
        for &a in &active {
            let (item, _) = prefs[a].reveal_next_in(&available)?;
            bids.push((item, prefs[a].revealed().len() as u32));
        }
        let mut next = Vec::with_capacity(active.len());
        for (&a, &(item, rank)) in active.iter().zip(&bids) {
            let success = available[item];
            let rec = &mut records[a];
            rec.bids.push(Bid {
                round,
                rank,
                success,
            });
            if success {
                available[item] = false;
                rec.item = item;
                rec.rank = rank;
                rec.exit_round = round;
            } else {
                next.push(a);
            }
        }
        active = next;
    }
    Ok(records)
}

pub fn run_with<P: Preferences>(mechanism: Mechanism, prefs: &mut [P]) -> Result<Vec<OutcomeRecord>> {
    match mechanism {
        Mechanism::SerialDictatorship => serial_dictatorship(prefs),
        Mechanism::NaiveBoston => naive_boston(prefs),
        Mechanism::AdaptiveBoston => adaptive_boston(prefs),
    }
}

/// Runs `mechanism` on `n` agents with IC preferences drawn from `rng`.
pub fn run(mechanism: Mechanism, n: usize, rng: RngSpec) -> Result<Assignment> {
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let mut sources = rng.sources(n, n);
    let records = run_with(mechanism, &mut sources)?;
    Ok(Assignment {
        n,
        mechanism,
        seed: Some(rng),
        records,
    })
}

pub fn run_sd(n: usize, rng: RngSpec) -> Result<Assignment> {
    run(Mechanism::SerialDictatorship, n, rng)
}

pub fn run_nb(n: usize, rng: RngSpec) -> Result<Assignment> {
    run(Mechanism::NaiveBoston, n, rng)
}

pub fn run_ab(n: usize, rng: RngSpec) -> Result<Assignment> {
    run(Mechanism::AdaptiveBoston, n, rng)
}

/// Runs a mechanism and derives the round-by-round trace on `theta_grid`.
pub fn run_with_trace(
    mechanism: Mechanism,
    n: usize,
    rng: RngSpec,
    theta_grid: &[f64],
) -> Result<(Assignment, RoundTrace)> {
    validate_theta_grid(theta_grid)?;
    let assignment = run(mechanism, n, rng)?;
    let trace = RoundTrace::from_assignment(&assignment, theta_grid)?;
    Ok((assignment, trace))
}
