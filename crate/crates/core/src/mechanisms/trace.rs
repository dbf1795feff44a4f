use std::collections::BTreeMap;

use serde::Serialize;

use super::Assignment;
use crate::error::{Error, Result};

/// `0, 0.05, 0.10, ..., 1.00`.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

pub fn validate_theta_grid(grid: &[f64]) -> Result<()> {
    let in_range = grid.iter().all(|t| (0.0..=1.0).contains(t));
    let sorted = grid.windows(2).all(|w| w[0] <= w[1]);
    if grid.is_empty() || !in_range || !sorted {
        return Err(Error::BadThetaGrid);
    }
    Ok(())
}

/// `floor(n * theta)`, robust to representation error such as `0.29 * 100`.
pub fn segment_len(n: usize, theta: f64) -> usize {
    let x = n as f64 * theta;
    ((x + 1e-9 * x.max(1.0)).floor() as usize).min(n)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BidCounts {
    pub bids: usize,
    pub unsuccessful: usize,
    pub successful: usize,
}

/// Round-by-round counts for the initial segments `A_n(theta)`.
///
/// Everything here is a function of the outcome records, so a trace can be
/// rebuilt from any stored [`Assignment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrace {
    pub n: usize,
    pub theta_grid: Vec<f64>,
    /// `floor(n * theta)` for each grid point.
    pub segment: Vec<usize>,
    /// `remaining[r - 1]` is `N_n(r)`, for `r = 1 ..= rounds + 1`.
    pub remaining: Vec<usize>,
    /// `remaining_theta[r - 1][j]` is `N_n(r, theta_j)`.
    pub remaining_theta: Vec<Vec<usize>>,
    /// Per `(round, rank bid)`: counts per grid point of bids, failures, wins.
    pub bids: BTreeMap<(u32, u32), Vec<BidCounts>>,
}

impl RoundTrace {
    pub fn from_assignment(assignment: &Assignment, theta_grid: &[f64]) -> Result<Self> {
        validate_theta_grid(theta_grid)?;
        let n = assignment.n;
        let segment: Vec<usize> = theta_grid.iter().map(|&t| segment_len(n, t)).collect();
        let rounds = assignment.rounds() as usize;
        let width = theta_grid.len();

        // exits[r][j]: agents of A_n(theta_j) leaving in round r (1-based r).
        let mut exits = vec![vec![0usize; width]; rounds + 1];
        let mut bids: BTreeMap<(u32, u32), Vec<BidCounts>> = BTreeMap::new();
        for rec in &assignment.records {
            // Grid points whose segment contains this agent form a suffix.
            let first = segment.partition_point(|&len| len < rec.position);
            if first == width {
                continue;
            }
            for j in first..width {
                exits[rec.exit_round as usize][j] += 1;
            }
            for bid in &rec.bids {
                let row = bids
                    .entry((bid.round, bid.rank))
                    .or_insert_with(|| vec![BidCounts::default(); width]);
                for cell in &mut row[first..] {
                    cell.bids += 1;
                    if bid.success {
                        cell.successful += 1;
                    } else {
                        cell.unsuccessful += 1;
                    }
                }
            }
        }

        let mut remaining_theta = Vec::with_capacity(rounds + 1);
        let mut current = segment.clone();
        remaining_theta.push(current.clone());
        for exit in exits.iter().skip(1) {
            for (c, e) in current.iter_mut().zip(exit) {
                *c -= e;
            }
            remaining_theta.push(current.clone());
        }
        let remaining = (1..=rounds as u32 + 1)
            .map(|r| assignment.remaining_at(r))
            .collect();

        Ok(Self {
            n,
            theta_grid: theta_grid.to_vec(),
            segment,
            remaining,
            remaining_theta,
            bids,
        })
    }

    pub fn rounds(&self) -> usize {
        self.remaining.len() - 1
    }

    /// `N_n(r)`, zero after the last round.
    pub fn remaining_at(&self, round: usize) -> usize {
        self.remaining.get(round - 1).copied().unwrap_or(0)
    }

    /// `N_n(r, theta_j)`.
    pub fn remaining_theta_at(&self, round: usize, j: usize) -> usize {
        self.remaining_theta.get(round - 1).map_or(0, |row| row[j])
    }

    /// `N_n(r, s, theta_j)`, `U_n(r, s, theta_j)`, `S_n(r, s, theta_j)`.
    pub fn bid_counts(&self, round: u32, rank: u32, j: usize) -> BidCounts {
        self.bids
            .get(&(round, rank))
            .map_or_else(BidCounts::default, |row| row[j])
    }
}
