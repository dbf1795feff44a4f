//! Rank of the item bid for under adaptive Boston.
//!
//! An agent present at round `r` builds its bid by sampling unconsidered
//! items until it hits one still available. The exact law of the cumulative
//! number of samples is the urn distribution `H(n_1, ..., n_r)`; its large-`n`
//! limit is a sum of independent geometrics, and with `p_i = e^{1-i}` that
//! limit is the table `u_{rs}`.

use crate::error::{Error, Result};

/// `u_{rs}` for `1 <= r <= s <= s_max`, with the survival function
/// `T_r(s) = sum_{s' > s} u_{rs'}` computed by its own recurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct UTable {
    s_max: usize,
    u: Vec<f64>,
    survival: Vec<f64>,
}

impl UTable {
    fn idx(&self, r: usize, s: usize) -> usize {
        r * (self.s_max + 1) + s
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    /// `u_{rs}`; zero for `s < r` and outside the table.
    pub fn get(&self, r: usize, s: usize) -> f64 {
        if r == 0 || s < r || s > self.s_max {
            return 0.0;
        }
        self.u[self.idx(r, s)]
    }

    /// `T_r(s)`, the mass of row `r` beyond rank `s`.
    pub fn survival(&self, r: usize, s: usize) -> f64 {
        assert!(r >= 1 && r <= self.s_max && s <= self.s_max);
        if s < r {
            return 1.0;
        }
        self.survival[self.idx(r, s)]
    }

    /// Mass of row `r` lost to truncation at `s_max`.
    pub fn tail(&self, r: usize) -> f64 {
        self.survival(r, self.s_max)
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        (r..=self.s_max).map(|s| self.get(r, s)).sum()
    }
}

/// Builds `u_{rs}` from `u_{11} = 1` and
/// `u_{rs} = e^{1-r} u_{r-1,s-1} + (1 - e^{1-r}) u_{r,s-1}`.
pub fn u_table(s_max: usize) -> UTable {
    let s_max = s_max.max(1);
    let width = s_max + 1;
    let mut table = UTable {
        s_max,
        u: vec![0.0; width * width],
        survival: vec![0.0; width * width],
    };
    let idx = |r: usize, s: usize| r * width + s;
    table.u[idx(1, 1)] = 1.0;
    // Row 1 is a point mass at s = 1, so T_1(s) = 0 for s >= 1.
    for r in 2..=s_max {
        let p = (1.0 - r as f64).exp();
        for s in r..=s_max {
            let stay = if s > r { table.u[idx(r, s - 1)] } else { 0.0 };
            table.u[idx(r, s)] = p * table.u[idx(r - 1, s - 1)] + (1.0 - p) * stay;
            let prev_row = if s - 1 < r - 1 { 1.0 } else { table.survival[idx(r - 1, s - 1)] };
            let prev_rank = if s - 1 < r { 1.0 } else { table.survival[idx(r, s - 1)] };
            table.survival[idx(r, s)] = p * prev_row + (1.0 - p) * prev_rank;
        }
    }
    table
}

fn check_urn(n_list: &[usize]) -> Result<()> {
    let decreasing = n_list.windows(2).all(|w| w[0] > w[1]);
    if n_list.is_empty() || !decreasing || *n_list.last().expect("non-empty") == 0 {
        return Err(Error::BadUrnSpec);
    }
    Ok(())
}

/// `q(s; n_1, ..., n_r)` for `s = 1 ..= s_max` (index `s - 1`).
///
/// `n_1` balls; in stage `i` the `n_i` lowest-numbered remaining balls are
/// good and balls are drawn without replacement until a good one appears.
/// The value is the law of the total number of balls drawn.
pub fn urn_distribution(n_list: &[usize], s_max: usize) -> Result<Vec<f64>> {
    check_urn(n_list)?;
    let n1 = n_list[0];
    let mut q = vec![0.0; s_max + 1];
    if s_max >= 1 {
        q[1] = 1.0;
    }
    for &good in &n_list[1..] {
        let mut next = vec![0.0; s_max + 1];
        for t in 1..=s_max {
            if q[t] == 0.0 {
                continue;
            }
            let mut miss = 1.0;
            for s in t + 1..=s_max {
                let left = (n1 - (s - 1)) as f64;
                let hit = good as f64 / left;
                next[s] += q[t] * miss * hit;
                miss *= 1.0 - hit;
                if miss <= 0.0 {
                    break;
                }
            }
        }
        q = next;
    }
    q.remove(0);
    Ok(q)
}

pub fn urn_exact(s: usize, n_list: &[usize]) -> Result<f64> {
    check_urn(n_list)?;
    if s == 0 {
        return Ok(0.0);
    }
    Ok(urn_distribution(n_list, s)?[s - 1])
}

/// Law of `r + G_1 + ... + G_r` with independent `G_i ~ Geometric(p_i)` on
/// `{0, 1, ...}`, for `s = 1 ..= s_max` (index `s - 1`).
pub fn u_geometric_distribution(p_list: &[f64], s_max: usize) -> Result<Vec<f64>> {
    if let Some(&p) = p_list.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::BadProb(p));
    }
    if p_list.is_empty() {
        return Err(Error::BadProb(f64::NAN));
    }
    let geometric = |p: f64, len: usize| -> Vec<f64> {
        let mut v = Vec::with_capacity(len);
        let mut w = p;
        for _ in 0..len {
            v.push(w);
            w *= 1.0 - p;
        }
        v
    };
    // dist[s] = P(total = s)
    let mut dist = vec![0.0; s_max + 1];
    for (k, w) in geometric(p_list[0], s_max).into_iter().enumerate() {
        dist[k + 1] = w;
    }
    for &p in &p_list[1..] {
        let step = geometric(p, s_max);
        let mut next = vec![0.0; s_max + 1];
        for t in 1..=s_max {
            if dist[t] == 0.0 {
                continue;
            }
            for s in t + 1..=s_max {
                next[s] += dist[t] * step[s - t - 1];
            }
        }
        dist = next;
    }
    dist.remove(0);
    Ok(dist)
}

pub fn u_geometric(s: usize, p_list: &[f64]) -> Result<f64> {
    if s == 0 {
        u_geometric_distribution(p_list, 1)?;
        return Ok(0.0);
    }
    Ok(u_geometric_distribution(p_list, s)?[s - 1])
}
