//! Exact rank distributions for small instances.
//!
//! Two independent routes:
//!
//! * [`brute_force_counts`] runs the engines on every one of the `(n!)^n`
//!   profiles and counts outcomes. Feasible for `n <= 4`.
//! * [`exact_distribution`] propagates probabilities through the bidding
//!   process with items lumped by availability: given the history, every
//!   available item is equally likely to be any unmatched agent's next pick,
//!   so the state is just which agents remain (plus, for AB, how many items
//!   each has already considered). Feasible for `n <= 6`.

use std::collections::BTreeMap;

use super::{run_with, Mechanism};
use crate::bias::RankDistribution;
use crate::error::{Error, Result};
use crate::preferences::FixedOrder;

pub const BRUTE_FORCE_MAX_N: usize = 6;
const FULL_ENUMERATION_MAX_N: usize = 4;

fn permutations(n: usize) -> Vec<Vec<u32>> {
    fn extend(prefix: &mut Vec<u32>, used: &mut [bool], out: &mut Vec<Vec<u32>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i as u32);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Outcome counts over all `(n!)^n` profiles: `counts[p - 1][s - 1]` is the
/// number of profiles in which position `p` gets its `s`th choice.
pub fn brute_force_counts(mechanism: Mechanism, n: usize) -> Result<(Vec<Vec<u64>>, u64)> {
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    if n > FULL_ENUMERATION_MAX_N {
        return Err(Error::OracleTooLarge {
            n,
            max: FULL_ENUMERATION_MAX_N,
        });
    }
    let perms = permutations(n);
    let mut counts = vec![vec![0u64; n]; n];
    let mut choice = vec![0usize; n];
    let mut total = 0u64;
    loop {
        let mut prefs: Vec<FixedOrder> = choice
            .iter()
            .map(|&c| FixedOrder::new(perms[c].clone()).expect("permutation"))
            .collect();
        for rec in run_with(mechanism, &mut prefs)? {
            counts[rec.position - 1][rec.rank as usize - 1] += 1;
        }
        total += 1;
        // Odometer over profile indices.
        let mut digit = 0;
        loop {
            if digit == n {
                return Ok((counts, total));
            }
            choice[digit] += 1;
            if choice[digit] < perms.len() {
                break;
            }
            choice[digit] = 0;
            digit += 1;
        }
    }
}

/// P(G = g) for g = 1.. when drawing without replacement from `pool` items of
/// which `good` are good, stopping at the first good one.
fn first_good_draw(pool: usize, good: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(pool - good + 1);
    let mut miss = 1.0;
    for g in 1..=pool - good + 1 {
        let left = (pool - g + 1) as f64;
        out.push(miss * good as f64 / left);
        miss *= 1.0 - good as f64 / left;
    }
    out
}

fn exact_sd(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|taken| {
            let mut row = vec![0.0; n];
            for (g, p) in first_good_draw(n, n - taken).into_iter().enumerate() {
                row[g] = p;
            }
            row
        })
        .collect()
}

fn exact_nb(n: usize) -> Vec<Vec<f64>> {
    fn step(
        agents: &[usize],
        idx: usize,
        claimed: usize,
        pool: usize,
        round: usize,
        prob: f64,
        survivors: u64,
        dist: &mut [Vec<f64>],
        next: &mut BTreeMap<u64, f64>,
    ) {
        if idx == agents.len() {
            if survivors != 0 {
                *next.entry(survivors).or_insert(0.0) += prob;
            }
            return;
        }
        let a = agents[idx];
        let m = agents.len();
        let win = (m - claimed) as f64 / pool as f64;
        if win > 0.0 {
            dist[a][round - 1] += prob * win;
            step(agents, idx + 1, claimed + 1, pool, round, prob * win, survivors, dist, next);
        }
        if win < 1.0 {
            let lose = prob * (1.0 - win);
            step(agents, idx + 1, claimed, pool, round, lose, survivors | 1 << a, dist, next);
        }
    }

    let mut dist = vec![vec![0.0; n]; n];
    let mut states = BTreeMap::from([((1u64 << n) - 1, 1.0)]);
    for round in 1..=n {
        let mut next = BTreeMap::new();
        for (&mask, &prob) in &states {
            let agents: Vec<usize> = (0..n).filter(|a| mask >> a & 1 == 1).collect();
            step(&agents, 0, 0, n - round + 1, round, prob, 0, &mut dist, &mut next);
        }
        states = next;
    }
    debug_assert!(states.is_empty());
    dist
}

fn exact_ab(n: usize) -> Vec<Vec<f64>> {
    // State: unmatched agents in choosing order with the number of items each
    // has considered so far.
    type State = Vec<(usize, usize)>;

    fn step(
        state: &[(usize, usize)],
        idx: usize,
        claimed: usize,
        n: usize,
        prob: f64,
        survivors: &mut State,
        dist: &mut [Vec<f64>],
        next: &mut BTreeMap<State, f64>,
    ) {
        if idx == state.len() {
            if !survivors.is_empty() {
                *next.entry(survivors.clone()).or_insert(0.0) += prob;
            }
            return;
        }
        let (a, seen) = state[idx];
        let m = state.len();
        let win = (m - claimed) as f64 / m as f64;
        for (g, pg) in first_good_draw(n - seen, m).into_iter().enumerate() {
            let drawn = g + 1;
            if pg == 0.0 {
                continue;
            }
            dist[a][seen + drawn - 1] += prob * pg * win;
            step(state, idx + 1, claimed + 1, n, prob * pg * win, survivors, dist, next);
            if claimed > 0 {
                survivors.push((a, seen + drawn));
                step(state, idx + 1, claimed, n, prob * pg * (1.0 - win), survivors, dist, next);
                survivors.pop();
            }
        }
    }

    let mut dist = vec![vec![0.0; n]; n];
    let mut states: BTreeMap<State, f64> = BTreeMap::from([((0..n).map(|a| (a, 0)).collect(), 1.0)]);
    while !states.is_empty() {
        let mut next = BTreeMap::new();
        for (state, &prob) in &states {
            step(state, 0, 0, n, prob, &mut Vec::new(), &mut dist, &mut next);
        }
        states = next;
    }
    dist
}

/// Exact `D(p, s)` by probability propagation, `n <= 6`.
pub fn exact_distribution(mechanism: Mechanism, n: usize) -> Result<RankDistribution> {
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::OracleTooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let matrix = match mechanism {
        Mechanism::SerialDictatorship => exact_sd(n),
        Mechanism::NaiveBoston => exact_nb(n),
        Mechanism::AdaptiveBoston => exact_ab(n),
    };
    Ok(RankDistribution::exact(matrix))
}

/// Exact rank distribution for `n <= 6`: full profile enumeration up to
/// `n = 4`, probability propagation above that.
pub fn brute_force_distribution(mechanism: Mechanism, n: usize) -> Result<RankDistribution> {
    if n <= FULL_ENUMERATION_MAX_N {
        let (counts, total) = brute_force_counts(mechanism, n)?;
        let matrix = counts
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as f64 / total as f64).collect())
            .collect();
        Ok(RankDistribution::exact(matrix))
    } else {
        exact_distribution(mechanism, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &RankDistribution, b: &RankDistribution, tol: f64) {
        for (ra, rb) in a.probs.iter().zip(&b.probs) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() < tol, "{:?} vs {:?}", a.probs, b.probs);
            }
        }
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn trivial_and_two_agent_cases() {
        for mech in Mechanism::ALL {
            let d = brute_force_distribution(mech, 1).unwrap();
            assert_eq!(d.probs, vec![vec![1.0]]);
            // Agent 2 loses only when both share a first choice.
            let d = brute_force_distribution(mech, 2).unwrap();
            assert_eq!(d.probs, vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        }
    }

    #[test]
    fn size_limits() {
        assert_eq!(
            brute_force_distribution(Mechanism::NaiveBoston, 7).unwrap_err(),
            Error::OracleTooLarge { n: 7, max: 6 }
        );
        assert_eq!(
            brute_force_distribution(Mechanism::NaiveBoston, 0).unwrap_err(),
            Error::EmptyInstance
        );
    }

    #[test]
    fn propagation_matches_enumeration() {
        for mech in Mechanism::ALL {
            for n in 1..=4 {
                let enumerated = brute_force_distribution(mech, n).unwrap();
                let propagated = exact_distribution(mech, n).unwrap();
                assert_close(&enumerated, &propagated, 1e-12);
            }
        }
    }

    #[test]
    fn rows_are_distributions() {
        for mech in Mechanism::ALL {
            for n in 5..=6 {
                let d = exact_distribution(mech, n).unwrap();
                for row in &d.probs {
                    assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    assert!(row.iter().all(|&p| p >= 0.0));
                }
                assert_eq!(d.probs[0][0], 1.0);
            }
        }
    }

    #[test]
    fn nb_rank_three_example() {
        let (counts, total) = brute_force_counts(Mechanism::NaiveBoston, 3).unwrap();
        assert_eq!(total, 216);
        assert_eq!(counts[0], vec![216, 0, 0]);
        // Agent 2 loses round 1 iff it shares agent 1's top choice (1/3).
        assert_eq!(counts[1][0], 144);
    }
}
