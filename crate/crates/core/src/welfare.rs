//! Positional scoring rules and utilitarian welfare.
//!
//! A rule assigns utility `sigma_n(s)` to an agent that receives its `s`th
//! choice; welfare of the initial segment `A_n(theta)` is the total utility
//! of its members. Empirical curves are computed from assignments and limit
//! curves from the limiting exit distributions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{bisect, LimitTables, DEFAULT_QUAD_TOL};
use crate::mechanisms::{segment_len, validate_theta_grid, Assignment, Mechanism};

/// Limit `lambda_s` of `sigma_n(s)` as `n` grows: explicit values for the
/// first ranks, then a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitWeights {
    pub prefix: Vec<f64>,
    pub tail: f64,
}

impl LimitWeights {
    pub fn at(&self, s: usize) -> f64 {
        self.prefix.get(s - 1).copied().unwrap_or(self.tail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomRule {
    scores: Vec<f64>,
    limit: Option<LimitWeights>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringRule {
    KApproval(usize),
    Borda,
    Custom(CustomRule),
}

fn check_scores(scores: &[f64]) -> Result<()> {
    let bounded = scores.iter().all(|s| (0.0..=1.0).contains(s));
    let monotone = scores.windows(2).all(|w| w[1] <= w[0]);
    if !bounded || !monotone {
        return Err(Error::InvalidRule(
            "scores must be nonincreasing and within [0, 1]".into(),
        ));
    }
    Ok(())
}

impl ScoringRule {
    /// `scores[s - 1]` is the utility of rank `s` for instances of size
    /// `scores.len()`. Limit curves and limit bias need `limit`.
    pub fn custom(scores: Vec<f64>, limit: Option<LimitWeights>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidRule("empty score vector".into()));
        }
        check_scores(&scores)?;
        if let Some(l) = &limit {
            let mut all = l.prefix.clone();
            all.push(l.tail);
            check_scores(&all)?;
        }
        Ok(Self::Custom(CustomRule { scores, limit }))
    }

    pub fn k_approval(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidRule("k-approval needs k >= 1".into()));
        }
        Ok(Self::KApproval(k))
    }

    /// `sigma_n(1), ..., sigma_n(n)`.
    pub fn materialize(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptyInstance);
        }
        match self {
            Self::KApproval(0) => Err(Error::InvalidRule("k-approval needs k >= 1".into())),
            &Self::KApproval(k) => Ok((1..=n).map(|s| if s <= k { 1.0 } else { 0.0 }).collect()),
            // A single agent always gets its first choice.
            Self::Borda if n == 1 => Ok(vec![1.0]),
            Self::Borda => Ok((1..=n).map(|s| (n - s) as f64 / (n - 1) as f64).collect()),
            Self::Custom(c) if c.scores.len() == n => Ok(c.scores.clone()),
            Self::Custom(c) => Err(Error::InvalidRule(format!(
                "custom rule has {} scores, instance has {n} agents",
                c.scores.len()
            ))),
        }
    }

    pub fn limit_weights(&self) -> Result<LimitWeights> {
        match self {
            Self::KApproval(0) => Err(Error::InvalidRule("k-approval needs k >= 1".into())),
            &Self::KApproval(k) => Ok(LimitWeights {
                prefix: vec![1.0; k],
                tail: 0.0,
            }),
            Self::Borda => Ok(LimitWeights {
                prefix: Vec::new(),
                tail: 1.0,
            }),
            Self::Custom(c) => c.limit.clone().ok_or(Error::NoLimitRule),
        }
    }
}

impl fmt::Display for ScoringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::KApproval(k) => write!(f, "{k}-approval"),
            Self::Borda => f.write_str("borda"),
            Self::Custom(_) => f.write_str("custom"),
        }
    }
}

impl FromStr for ScoringRule {
    type Err = Error;

    /// `borda`, `plurality`, `k3` or `3-approval`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let k = match s.as_str() {
            "borda" => return Ok(Self::Borda),
            "plurality" => Some(1),
            _ => s
                .strip_prefix('k')
                .or_else(|| s.strip_suffix("-approval"))
                .and_then(|d| d.parse().ok()),
        };
        match k {
            Some(k) => Self::k_approval(k),
            None => Err(Error::InvalidRule(format!("unrecognized rule {s:?}"))),
        }
    }
}

/// `W_n(theta)`: total utility of agents at positions `<= floor(n theta)`.
pub fn welfare_of(assignment: &Assignment, rule: &ScoringRule, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::BadTheta(theta));
    }
    let sigma = rule.materialize(assignment.n)?;
    let len = segment_len(assignment.n, theta);
    Ok(assignment
        .records
        .iter()
        .filter(|r| r.position <= len)
        .map(|r| sigma[r.rank as usize - 1])
        .sum())
}

/// `W_n(theta) / n`.
pub fn normalized_welfare(assignment: &Assignment, rule: &ScoringRule, theta: f64) -> Result<f64> {
    Ok(welfare_of(assignment, rule, theta)? / assignment.n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CurveSource {
    Empirical { n: usize },
    Limit { s_max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareCurve {
    pub mechanism: Mechanism,
    pub rule: String,
    pub source: CurveSource,
    pub theta: Vec<f64>,
    /// Normalized welfare.
    pub values: Vec<f64>,
    /// For limit curves, the integrated mass of ranks beyond the truncation
    /// (already included in `values` at weight `lambda_inf`).
    pub tail_mass: Vec<f64>,
}

/// Normalized welfare of one assignment on a grid; raw totals are
/// `values[j] * n`.
pub fn empirical_welfare_curve(
    assignment: &Assignment,
    rule: &ScoringRule,
    theta_grid: &[f64],
) -> Result<WelfareCurve> {
    validate_theta_grid(theta_grid)?;
    let n = assignment.n;
    let sigma = rule.materialize(n)?;
    let mut by_position = vec![0.0; n + 1];
    for r in &assignment.records {
        by_position[r.position] = sigma[r.rank as usize - 1];
    }
    let mut prefix = vec![0.0; n + 1];
    for p in 1..=n {
        prefix[p] = prefix[p - 1] + by_position[p];
    }
    Ok(WelfareCurve {
        mechanism: assignment.mechanism,
        rule: rule.to_string(),
        source: CurveSource::Empirical { n },
        theta: theta_grid.to_vec(),
        values: theta_grid
            .iter()
            .map(|&t| prefix[segment_len(n, t)] / n as f64)
            .collect(),
        tail_mass: vec![0.0; theta_grid.len()],
    })
}

/// Ranks included explicitly in the limit integrand.
fn explicit_len(weights: &LimitWeights, s_max: usize) -> Result<usize> {
    if weights.prefix.len() > s_max {
        return Err(Error::InvalidParameter(format!(
            "rule weights {} ranks explicitly, beyond s_max = {s_max}",
            weights.prefix.len()
        )));
    }
    Ok(if weights.tail == 0.0 {
        weights.prefix.len()
    } else {
        s_max
    })
}

/// Limit of `W_n(theta) / n` and the truncated integrated mass.
pub fn welfare_limit_at(
    tables: &LimitTables,
    mechanism: Mechanism,
    rule: &ScoringRule,
    theta: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let weights = rule.limit_weights()?;
    let len = explicit_len(&weights, tables.s_max())?;
    let lambda: Vec<f64> = (1..=len).map(|s| weights.at(s)).collect();
    let head = tables.integrate_weighted(mechanism, &lambda, theta, tol)?;
    if len == 0 {
        return Ok((head, 0.0));
    }
    let tail = tables.integrated_tail_beyond(mechanism, theta, len)?;
    Ok((head + weights.tail * tail, tail))
}

pub fn welfare_limit_curve(
    mechanism: Mechanism,
    rule: &ScoringRule,
    theta_grid: &[f64],
    s_max: usize,
) -> Result<WelfareCurve> {
    welfare_limit_curve_with(&LimitTables::new(s_max)?, mechanism, rule, theta_grid, DEFAULT_QUAD_TOL)
}

/// As [`welfare_limit_curve`], reusing precomputed tables. The integral is
/// accumulated across consecutive grid intervals.
pub fn welfare_limit_curve_with(
    tables: &LimitTables,
    mechanism: Mechanism,
    rule: &ScoringRule,
    theta_grid: &[f64],
    tol: f64,
) -> Result<WelfareCurve> {
    validate_theta_grid(theta_grid)?;
    let weights = rule.limit_weights()?;
    let len = explicit_len(&weights, tables.s_max())?;
    let lambda: Vec<f64> = (1..=len).map(|s| weights.at(s)).collect();
    let mut values = Vec::with_capacity(theta_grid.len());
    let mut tail_mass = Vec::with_capacity(theta_grid.len());
    let (mut head, mut prev) = (0.0, 0.0);
    for &theta in theta_grid {
        if len > 0 {
            let piece = crate::limits::adaptive_simpson(
                |phi| {
                    tables
                        .q_prefix(mechanism, phi, len)
                        .map(|q| q.iter().zip(&lambda).map(|(q, w)| q * w).sum())
                        .unwrap_or(f64::NAN)
                },
                prev,
                theta,
                tol,
            )?;
            head += piece;
        }
        prev = theta;
        let tail = if len > 0 {
            tables.integrated_tail_beyond(mechanism, theta, len)?
        } else {
            0.0
        };
        values.push(head + weights.tail * tail);
        tail_mass.push(tail);
    }
    Ok(WelfareCurve {
        mechanism,
        rule: rule.to_string(),
        source: CurveSource::Limit {
            s_max: tables.s_max(),
        },
        theta: theta_grid.to_vec(),
        values,
        tail_mass,
    })
}

/// The `theta` at which the limit curve reaches half its value at 1.
pub fn welfare_median(tables: &LimitTables, mechanism: Mechanism, rule: &ScoringRule) -> Result<f64> {
    let total = welfare_limit_at(tables, mechanism, rule, 1.0, DEFAULT_QUAD_TOL)?.0;
    if total <= 0.0 {
        return Err(Error::DegenerateRule);
    }
    bisect(
        |theta| {
            welfare_limit_at(tables, mechanism, rule, theta, DEFAULT_QUAD_TOL)
                .map_or(f64::NAN, |(v, _)| v - total / 2.0)
        },
        0.0,
        1.0,
        1e-9,
    )
}
