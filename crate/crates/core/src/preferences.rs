//! Impartial Culture preferences, generated lazily.
//!
//! Under IC every agent's ranking is an independent uniform permutation of the
//! items. The mechanisms never need more than a prefix of each ranking, so a
//! [`PreferenceSource`] reveals the ranking one item at a time: each call draws
//! uniformly from the items not yet revealed for that agent.
//!
//! # Stream derivation
//!
//! Every agent owns an independent PCG stream (`Pcg64Mcg`) seeded with
//!
//! ```text
//! trial_key  = splitmix64(master_seed ^ splitmix64(trial))
//! agent_seed = splitmix64(trial_key ^ splitmix64(agent + 0x5851_F42D_4C95_7F2D))
//! ```
//!
//! where `splitmix64` is the standard SplitMix64 finalizer. The stream reserved
//! for draws that are not tied to a single agent uses `agent = u64::MAX`. The
//! rule depends only on `(master_seed, trial, agent)`, never on evaluation
//! order or thread count, and is part of the stable output contract.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many revealed items membership checks switch from a linear scan
/// to a hash set.
const LINEAR_SCAN_LIMIT: usize = 16;

/// Agent index reserved for the shared per-trial stream.
pub const SHARED_STREAM: u64 = u64::MAX;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed plus trial index; everything random in a trial derives from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub trial: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            trial: 0,
        }
    }

    pub fn with_trial(self, trial: u64) -> Self {
        Self { trial, ..self }
    }

    pub fn agent_seed(&self, agent: u64) -> u64 {
        let trial_key = splitmix64(self.master_seed ^ splitmix64(self.trial));
        splitmix64(trial_key ^ splitmix64(agent.wrapping_add(0x5851_F42D_4C95_7F2D)))
    }

    pub fn agent_rng(&self, agent: u64) -> Pcg64Mcg {
        Pcg64Mcg::seed_from_u64(self.agent_seed(agent))
    }

    pub fn shared_rng(&self) -> Pcg64Mcg {
        self.agent_rng(SHARED_STREAM)
    }

    /// Lazy sources for agents `0..n_agents` over `n_items` items.
    pub fn sources(&self, n_agents: usize, n_items: usize) -> Vec<PreferenceSource> {
        (0..n_agents)
            .map(|a| PreferenceSource::new(n_items, self.agent_rng(a as u64)))
            .collect()
    }
}

/// Incremental access to one agent's preference order.
///
/// `revealed()` is the prefix determined so far, most preferred first, so the
/// rank of the most recently revealed item is `revealed().len()`.
pub trait Preferences {
    fn n_items(&self) -> usize;

    fn revealed(&self) -> &[u32];

    /// Reveals the next item in the preference order.
    fn reveal_next(&mut self) -> Result<usize>;

    /// Reveals items until one with `available[item] == true` appears.
    ///
    /// Returns that item and the number of items revealed by this call,
    /// including the returned one. Every revealed item stays consumed.
    fn reveal_next_in(&mut self, available: &[bool]) -> Result<(usize, usize)> {
        let mut draws = 0;
        loop {
            let item = match self.reveal_next() {
                Ok(item) => item,
                Err(Error::ExhaustedPreferences { .. }) => return Err(Error::NoAvailableItem),
                Err(e) => return Err(e),
            };
            draws += 1;
            if available[item] {
                return Ok((item, draws));
            }
        }
    }
}

/// Lazily generated IC preference order for a single agent.
///
/// Sparse phase: rejection sampling against the revealed prefix. Once more
/// than half of the items are revealed the complement is materialized and
/// drawn from by swap-removal (partial Fisher-Yates).
#[derive(Debug, Clone)]
pub struct PreferenceSource {
    n_items: usize,
    rng: Pcg64Mcg,
    revealed: Vec<u32>,
    lookup: Option<HashSet<u32>>,
    pool: Option<Vec<u32>>,
}

impl PreferenceSource {
    pub fn new(n_items: usize, rng: Pcg64Mcg) -> Self {
        assert!(n_items <= u32::MAX as usize, "item ids are stored as u32");
        Self {
            n_items,
            rng,
            revealed: Vec::new(),
            lookup: None,
            pool: None,
        }
    }

    pub fn from_seed(n_items: usize, seed: u64) -> Self {
        Self::new(n_items, Pcg64Mcg::seed_from_u64(seed))
    }

    pub fn is_consumed(&self, item: usize) -> bool {
        let item = item as u32;
        match &self.lookup {
            Some(set) => set.contains(&item),
            None => self.revealed.contains(&item),
        }
    }

    fn record(&mut self, item: u32) {
        self.revealed.push(item);
        if let Some(set) = &mut self.lookup {
            set.insert(item);
        } else if self.revealed.len() > LINEAR_SCAN_LIMIT && self.pool.is_none() {
            self.lookup = Some(self.revealed.iter().copied().collect());
        }
    }

    fn densify(&mut self) {
        let pool = (0..self.n_items as u32)
            .filter(|&i| !self.is_consumed(i as usize))
            .collect();
        self.pool = Some(pool);
        self.lookup = None;
    }
}

impl Preferences for PreferenceSource {
    fn n_items(&self) -> usize {
        self.n_items
    }

    fn revealed(&self) -> &[u32] {
        &self.revealed
    }

    fn reveal_next(&mut self) -> Result<usize> {
        if self.revealed.len() >= self.n_items {
            return Err(Error::ExhaustedPreferences {
                n_items: self.n_items,
            });
        }
        if self.pool.is_none() && 2 * (self.revealed.len() + 1) > self.n_items {
            self.densify();
        }
        let item = match &mut self.pool {
            Some(pool) => {
                let idx = self.rng.random_range(0..pool.len());
                pool.swap_remove(idx)
            }
            None => loop {
                let candidate = self.rng.random_range(0..self.n_items);
                if !self.is_consumed(candidate) {
                    break candidate as u32;
                }
            },
        };
        self.record(item);
        Ok(item as usize)
    }
}

/// An explicit, fully specified preference order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedOrder {
    order: Vec<u32>,
    cursor: usize,
}

impl FixedOrder {
    /// `order` must be a permutation of `0..order.len()`.
    pub fn new(order: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &item in &order {
            let slot = seen
                .get_mut(item as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("item {item} out of range")))?;
            if *slot {
                return Err(Error::InvalidParameter(format!("item {item} repeated")));
            }
            *slot = true;
        }
        Ok(Self { order, cursor: 0 })
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }
}

impl Preferences for FixedOrder {
    fn n_items(&self) -> usize {
        self.order.len()
    }

    fn revealed(&self) -> &[u32] {
        &self.order[..self.cursor]
    }

    fn reveal_next(&mut self) -> Result<usize> {
        let item = *self
            .order
            .get(self.cursor)
            .ok_or(Error::ExhaustedPreferences {
                n_items: self.order.len(),
            })?;
        self.cursor += 1;
        Ok(item as usize)
    }
}

/// Complete IC profile for `n` agents over `n` items, agent `a` drawing from
/// the same stream a lazy run with `RngSpec::new(seed)` would give it.
///
/// Meant for small brute-force comparisons.
pub fn full_profile(n: usize, seed: u64) -> Vec<Vec<u32>> {
    RngSpec::new(seed)
        .sources(n, n)
        .into_iter()
        .map(|mut src| {
            while src.reveal_next().is_ok() {}
            src.revealed().to_vec()
        })
        .collect()
}
