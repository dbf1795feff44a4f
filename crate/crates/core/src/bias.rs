//! Expected rank distributions and order bias.
//!
//! `D(p, s)` is the probability that the agent at position `p` receives its
//! `s`th choice. Order bias compares the expected utility of the best and
//! worst placed positions, normalized by the utility range of the rule.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{run_tracked, Mechanism};
use crate::preferences::RngSpec;
use crate::trials::count_trials;
use crate::welfare::ScoringRule;

/// Overflow mass above which bias is reported as an interval.
pub const OVERFLOW_REPORT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Exact,
    Estimated { trials: u64, seed: u64 },
}

/// Rows are positions, columns ranks `1..=width`; mass at ranks beyond the
/// width is kept per row in `overflow`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankDistribution {
    pub n: usize,
    /// 1-based position of each row.
    pub positions: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
    pub overflow: Vec<f64>,
    pub provenance: Provenance,
}

impl RankDistribution {
    /// Full square matrix with known probabilities.
    pub fn exact(probs: Vec<Vec<f64>>) -> Self {
        let n = probs.len();
        Self {
            n,
            positions: (1..=n).collect(),
            overflow: vec![0.0; n],
            probs,
            provenance: Provenance::Exact,
        }
    }

    pub fn width(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    pub fn row_of(&self, position: usize) -> Option<usize> {
        self.positions.iter().position(|&p| p == position)
    }

    /// `D(p, s)`; zero beyond the stored width.
    pub fn get(&self, position: usize, s: usize) -> f64 {
        self.row_of(position)
            .and_then(|row| self.probs[row].get(s - 1).copied())
            .unwrap_or(0.0)
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        self.probs[row].iter().sum::<f64>() + self.overflow[row]
    }

    /// Binomial standard error of a cell; zero for exact matrices.
    pub fn stderr(&self, row: usize, s: usize) -> f64 {
        match self.provenance {
            Provenance::Exact => 0.0,
            Provenance::Estimated { trials, .. } => {
                let p = self.probs[row][s - 1];
                (p * (1.0 - p) / trials as f64).sqrt()
            }
        }
    }

    /// Largest amount by which a later row's CDF exceeds an earlier row's.
    /// Nonpositive when every row's survival function dominates the next one.
    pub fn dominance_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for pair in self.probs.windows(2) {
            let (mut upper, mut lower) = (0.0, 0.0);
            for (a, b) in pair[0].iter().zip(&pair[1]) {
                upper += a;
                lower += b;
                worst = worst.max(lower - upper);
            }
        }
        worst
    }

    /// Expected utility of a row, as bounds when mass overflows the width.
    fn utility_bounds(&self, row: usize, sigma: &[f64]) -> (f64, f64) {
        let base: f64 = self.probs[row].iter().zip(sigma).map(|(p, u)| p * u).sum();
        let over = self.overflow[row];
        let best = sigma.get(self.width()).copied().unwrap_or(0.0);
        let worst = *sigma.last().expect("n >= 1");
        (base + over * worst, base + over * best)
    }
}

/// Exact SD matrix: the agent at position `k` finds `k - 1` items gone, a
/// uniform random subset, and takes its first choice outside it.
pub fn sd_exact_matrix(n: usize) -> Result<RankDistribution> {
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let probs = (1..=n)
        .map(|k| {
            let taken = k - 1;
            let mut row = vec![0.0; n];
            // P(first s-1 choices all taken), built up factor by factor.
            let mut all_taken = 1.0;
            for s in 1..=taken + 1 {
                let free = (n - taken) as f64 / (n - s + 1) as f64;
                row[s - 1] = all_taken * free;
                all_taken *= (taken - (s - 1)) as f64 / (n - (s - 1)) as f64;
            }
            row
        })
        .collect();
    Ok(RankDistribution::exact(probs))
}

/// Monte Carlo `D(p, s)` for the given positions, ranks truncated at `width`.
pub fn estimate_positions(
    mechanism: Mechanism,
    n: usize,
    trials: u64,
    seed: u64,
    positions: &[usize],
    width: usize,
) -> Result<RankDistribution> {
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut positions = positions.to_vec();
    positions.sort_unstable();
    positions.dedup();
    if positions.is_empty() {
        return Err(Error::InvalidParameter("no positions requested".into()));
    }
    let width = width.clamp(1, n);
    let cols = width + 1;
    let spec = RngSpec::new(seed);
    let counts = count_trials(trials, positions.len() * cols, |t, acc| {
        let outcomes = run_tracked(mechanism, n, spec.with_trial(t), &positions)?;
        for (row, o) in outcomes.iter().enumerate() {
            let col = (o.rank as usize).min(cols) - 1;
            acc[row * cols + col] += 1;
        }
        Ok(())
    })?;
    let total = trials as f64;
    let (probs, overflow) = counts
        .chunks(cols)
        .map(|row| {
            let probs = row[..width].iter().map(|&c| c as f64 / total).collect::<Vec<_>>();
            (probs, row[width] as f64 / total)
        })
        .unzip();
    Ok(RankDistribution {
        n,
        positions,
        probs,
        overflow,
        provenance: Provenance::Estimated { trials, seed },
    })
}

/// Full `n x n` Monte Carlo matrix.
pub fn estimate_matrix(mechanism: Mechanism, n: usize, trials: u64, seed: u64) -> Result<RankDistribution> {
    let positions: Vec<usize> = (1..=n).collect();
    estimate_positions(mechanism, n, trials, seed, &positions, n)
}

/// Rank distribution of the last agent, ranks truncated at `width`.
pub fn last_agent_distribution(
    mechanism: Mechanism,
    n: usize,
    trials: u64,
    seed: u64,
    width: usize,
) -> Result<RankDistribution> {
    estimate_positions(mechanism, n, trials, seed, &[n], width)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    /// `max_{p,q} |U(p) - U(q)| / (u(1) - u(n))` over the stored rows.
    pub bias: f64,
    /// `(U(first row) - U(last row)) / (u(1) - u(n))`.
    pub endpoint_bias: f64,
    /// Bounds on `bias` when overflow mass exceeds the report threshold.
    pub interval: Option<(f64, f64)>,
    /// Set for estimated matrices when the two forms differ by more than
    /// three standard errors.
    pub flagged: bool,
}

pub fn order_bias(dist: &RankDistribution, rule: &ScoringRule) -> Result<BiasReport> {
    let sigma = rule.materialize(dist.n)?;
    let range = sigma[0] - sigma[dist.n - 1];
    if range <= 0.0 {
        return Err(Error::DegenerateRule);
    }
    if dist.probs.is_empty() {
        return Err(Error::InvalidParameter("empty rank distribution".into()));
    }
    let bounds: Vec<(f64, f64)> = (0..dist.probs.len())
        .map(|row| dist.utility_bounds(row, &sigma))
        .collect();
    let mid: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let max_of = |v: &mut dyn Iterator<Item = f64>| v.fold(f64::NEG_INFINITY, f64::max);
    let min_of = |v: &mut dyn Iterator<Item = f64>| v.fold(f64::INFINITY, f64::min);

    let bias = (max_of(&mut mid.iter().copied()) - min_of(&mut mid.iter().copied())) / range;
    let endpoint_bias = (mid[0] - mid[mid.len() - 1]) / range;

    let overflowing = dist.overflow.iter().any(|&o| o > OVERFLOW_REPORT_THRESHOLD);
    let interval = overflowing.then(|| {
        let lo = max_of(&mut bounds.iter().map(|b| b.0)) - min_of(&mut bounds.iter().map(|b| b.1));
        let hi = max_of(&mut bounds.iter().map(|b| b.1)) - min_of(&mut bounds.iter().map(|b| b.0));
        (lo.max(0.0) / range, hi / range)
    });

    let flagged = match dist.provenance {
        Provenance::Exact => false,
        Provenance::Estimated { trials, .. } => {
            let se = |row: usize| {
                let second: f64 = dist.probs[row].iter().zip(&sigma).map(|(p, u)| p * u * u).sum();
                ((second - mid[row] * mid[row]).max(0.0) / trials as f64).sqrt()
            };
            let combined = (0..mid.len()).map(se).fold(0.0, f64::max) * std::f64::consts::SQRT_2;
            (bias - endpoint_bias) * range > 3.0 * combined
        }
    };

    Ok(BiasReport {
        bias,
        endpoint_bias,
        interval,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::exact_distribution;

    fn binomial(n: u64, k: u64) -> u128 {
        if k > n {
            return 0;
        }
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
    }

    #[test]
    fn sd_matrix_matches_binomial_ratios() {
        for n in 1..=30u64 {
            let d = sd_exact_matrix(n as usize).unwrap();
            for k in 1..=n {
                for s in 1..=n {
                    let num = if s <= k { binomial(n - s, k - s) } else { 0 };
                    let expected = num as f64 / binomial(n, k - 1) as f64;
                    let got = d.probs[k as usize - 1][s as usize - 1];
                    assert!((got - expected).abs() < 1e-13, "n={n} k={k} s={s}");
                }
                assert!((d.row_sum(k as usize - 1) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sd_matrix_small_cases() {
        assert_eq!(sd_exact_matrix(1).unwrap().probs, vec![vec![1.0]]);
        assert_eq!(sd_exact_matrix(2).unwrap().probs, vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        let d = sd_exact_matrix(9).unwrap();
        assert!(d.probs[8].iter().all(|&p| (p - 1.0 / 9.0).abs() < 1e-15));
        let prop = exact_distribution(Mechanism::SerialDictatorship, 6).unwrap();
        let direct = sd_exact_matrix(6).unwrap();
        for (a, b) in prop.probs.iter().flatten().zip(direct.probs.iter().flatten()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(sd_exact_matrix(0).unwrap_err(), Error::EmptyInstance);
    }

    #[test]
    fn sd_bias_closed_forms() {
        for n in 2..=40 {
            let d = sd_exact_matrix(n).unwrap();
            let borda = order_bias(&d, &ScoringRule::Borda).unwrap();
            assert!((borda.bias - 0.5).abs() < 1e-12, "n={n}");
            assert!((borda.endpoint_bias - 0.5).abs() < 1e-12);
            for k in 1..n {
                let b = order_bias(&d, &ScoringRule::KApproval(k)).unwrap();
                assert!((b.bias - (1.0 - k as f64 / n as f64)).abs() < 1e-12);
                assert!(b.interval.is_none() && !b.flagged);
            }
        }
        let d = sd_exact_matrix(10).unwrap();
        assert!((order_bias(&d, &ScoringRule::KApproval(3)).unwrap().bias - 0.7).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rules() {
        let d = sd_exact_matrix(3).unwrap();
        assert_eq!(order_bias(&d, &ScoringRule::KApproval(3)), Err(Error::DegenerateRule));
        let d = sd_exact_matrix(1).unwrap();
        assert_eq!(order_bias(&d, &ScoringRule::Borda), Err(Error::DegenerateRule));
    }

    #[test]
    fn estimates_are_reproducible_and_first_row_exact() {
        for mech in Mechanism::ALL {
            let a = estimate_matrix(mech, 7, 2000, 11).unwrap();
            let b = estimate_matrix(mech, 7, 2000, 11).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.probs[0][0], 1.0);
            assert!(a.probs[0][1..].iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn overflow_gives_interval() {
        let d = last_agent_distribution(Mechanism::SerialDictatorship, 50, 400, 3, 5).unwrap();
        assert!(d.overflow[0] > 0.5);
        let both = estimate_positions(Mechanism::SerialDictatorship, 50, 400, 3, &[1, 50], 5).unwrap();
        let report = order_bias(&both, &ScoringRule::Borda).unwrap();
        let (lo, hi) = report.interval.unwrap();
        assert!(lo <= report.bias && report.bias <= hi);
        assert!(lo <= 0.5 && 0.5 <= hi);
    }

    #[test]
    fn dominance_of_exact_matrices() {
        for mech in Mechanism::ALL {
            for n in 1..=6 {
                assert!(exact_distribution(mech, n).unwrap().dominance_violation() <= 1e-12);
            }
        }
        let flipped = RankDistribution::exact(vec![vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert!(flipped.dominance_violation() > 0.4);
    }
}
