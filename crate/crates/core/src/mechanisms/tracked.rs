//! Runs that follow the preferences of a few positions only.
//!
//! Untracked agents never need their preference orders, only their bids, and
//! those have a simple exchangeable law:
//!
//! * SD: the pick of an untracked agent is uniform over the remaining items.
//! * NB: in round `r` an unmatched agent has bid only for items that are now
//!   gone, so its next bid is uniform over its `n - r + 1` unbid items, which
//!   contain every available item.
//! * AB: the bid is uniform over the items available at the start of the round.
//!
//! Tracked agents draw from their own [`PreferenceSource`], exactly as in a
//! full run, so their ranks are exact. Untracked bids use the trial's shared
//! stream. The joint law of every agent's outcome matches [`super::run`]; the
//! individual sample paths do not.

use rand::Rng;

use super::Mechanism;
use crate::error::{Error, Result};
use crate::preferences::{PreferenceSource, Preferences, RngSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackedOutcome {
    pub position: usize,
    pub rank: u32,
    pub exit_round: u32,
}

/// Available items as a list with O(1) removal and O(1) uniform choice.
struct ItemPool {
    items: Vec<u32>,
    slot: Vec<u32>,
    available: Vec<bool>,
}

impl ItemPool {
    fn full(n: usize) -> Self {
        Self {
            items: (0..n as u32).collect(),
            slot: (0..n as u32).collect(),
            available: vec![true; n],
        }
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn remove(&mut self, item: usize) {
        debug_assert!(self.available[item]);
        let idx = self.slot[item] as usize;
        let last = *self.items.last().expect("non-empty");
        self.items.swap_remove(idx);
        if idx < self.items.len() {
            self.slot[last as usize] = idx as u32;
        }
        self.available[item] = false;
    }
}

/// Runs `mechanism` tracking only `positions` (1-based, any order).
///
/// Returns one outcome per tracked position, sorted by position.
pub fn run_tracked(
    mechanism: Mechanism,
    n: usize,
    rng: RngSpec,
    positions: &[usize],
) -> Result<Vec<TrackedOutcome>> {
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let mut tracked: Vec<usize> = positions.to_vec();
    tracked.sort_unstable();
    tracked.dedup();
    if let Some(&p) = tracked.iter().find(|&&p| p == 0 || p > n) {
        return Err(Error::BadIndex(p));
    }
    let mut sources: Vec<Option<PreferenceSource>> = vec![None; n];
    for &p in &tracked {
        sources[p - 1] = Some(PreferenceSource::new(n, rng.agent_rng((p - 1) as u64)));
    }
    let mut shared = rng.shared_rng();
    let mut outcome = vec![(0u32, 0u32); n];
    let mut pool = ItemPool::full(n);

    match mechanism {
        Mechanism::SerialDictatorship => {
            for a in 0..n {
                let item = match &mut sources[a] {
                    Some(src) => {
                        let (item, _) = src.reveal_next_in(&pool.available)?;
                        outcome[a] = (src.revealed().len() as u32, 1);
                        item
                    }
                    None => pool.items[shared.random_range(0..pool.len())] as usize,
                };
                pool.remove(item);
            }
        }
        Mechanism::NaiveBoston | Mechanism::AdaptiveBoston => {
            let adaptive = mechanism == Mechanism::AdaptiveBoston;
            // Round in which an item was last claimed; avoids O(n) resets.
            let mut claimed_in = vec![0u32; n];
            let mut active: Vec<usize> = (0..n).collect();
            let mut won: Vec<usize> = Vec::new();
            let mut round = 0u32;
            while !active.is_empty() {
                round += 1;
                assert!(round as usize <= n, "agent unmatched after round n");
                let m = pool.len();
                let unbid = n - round as usize + 1;
                won.clear();
                let mut next = Vec::with_capacity(active.len());
                for &a in &active {
                    let bid = match &mut sources[a] {
                        Some(src) => {
                            let item = if adaptive {
                                src.reveal_next_in(&pool.available)?.0
                            } else {
                                src.reveal_next()?
                            };
                            Some((item, src.revealed().len() as u32))
                        }
                        None => {
                            let range = if adaptive { m } else { unbid };
                            let u = shared.random_range(0..range);
                            (u < m).then(|| (pool.items[u] as usize, 0))
                        }
                    };
                    match bid {
                        Some((item, rank)) if pool.available[item] && claimed_in[item] != round => {
                            claimed_in[item] = round;
                            won.push(item);
                            outcome[a] = (if adaptive { rank } else { round }, round);
                        }
                        _ => next.push(a),
                    }
                }
                for &item in &won {
                    pool.remove(item);
                }
                active = next;
            }
        }
    }

    Ok(tracked
        .into_iter()
        .map(|p| TrackedOutcome {
            position: p,
            rank: outcome[p - 1].0,
            exit_round: outcome[p - 1].1,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::run;

    #[test]
    fn rejects_bad_positions() {
        assert_eq!(
            run_tracked(Mechanism::NaiveBoston, 5, RngSpec::new(1), &[6]),
            Err(Error::BadIndex(6))
        );
        assert_eq!(
            run_tracked(Mechanism::NaiveBoston, 0, RngSpec::new(1), &[1]),
            Err(Error::EmptyInstance)
        );
    }

    #[test]
    fn tracking_everyone_reproduces_the_full_run() {
        // With every agent tracked the shared stream is never used, so the
        // sample path must coincide with the full engine.
        for mech in Mechanism::ALL {
            let spec = RngSpec::new(99).with_trial(3);
            let full = run(mech, 60, spec).unwrap();
            let positions: Vec<usize> = (1..=60).collect();
            let tracked = run_tracked(mech, 60, spec, &positions).unwrap();
            for (rec, t) in full.records.iter().zip(&tracked) {
                assert_eq!((rec.rank, rec.exit_round), (t.rank, t.exit_round), "{mech}");
            }
        }
    }

    #[test]
    fn first_position_always_gets_first_choice() {
        for mech in Mechanism::ALL {
            for t in 0..20 {
                let out = run_tracked(mech, 50, RngSpec::new(4).with_trial(t), &[1, 50]).unwrap();
                assert_eq!(out[0].rank, 1);
                assert!(out[1].rank >= 1 && out[1].rank <= 50);
                if mech == Mechanism::NaiveBoston {
                    assert_eq!(out[1].rank, out[1].exit_round);
                }
            }
        }
    }
}
