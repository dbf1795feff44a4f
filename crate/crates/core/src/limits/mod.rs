//! Large-`n` limits of the three mechanisms.
//!
//! Every quantity here is a deterministic function of `theta` (relative
//! position in the choosing order) and small integer indices. Rank sums are
//! truncated at `s_max`; the mass beyond the truncation is always available
//! in closed form and is reported rather than bounded.

mod quadrature;
mod recursions;
mod urn;

pub use quadrature::{adaptive_simpson, bisect, DEFAULT_QUAD_TOL};
pub use recursions::{
    adaptive_limits, naive_limits, omega, AdaptiveLimitState, NaiveLimitState, OmegaSequence,
    MAX_ADAPTIVE_ROUNDS,
};
pub use urn::{u_geometric, u_geometric_distribution, u_table, urn_distribution, urn_exact, UTable};

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::welfare::ScoringRule;
use recursions::{check_theta, naive_limits_with};

pub const DEFAULT_S_MAX: usize = 200;

/// Memoized `w_r` and `u_{rs}` up to a rank truncation `s_max`.
///
/// Read-only after construction, so one instance can be shared across threads.
#[derive(Debug, Clone)]
pub struct LimitTables {
    s_max: usize,
    omega: OmegaSequence,
    u: UTable,
}

impl Default for LimitTables {
    fn default() -> Self {
        Self::new(DEFAULT_S_MAX).expect("default truncation is valid")
    }
}

impl LimitTables {
    /// `s_max` must leave room for one adaptive round past the truncation.
    pub fn new(s_max: usize) -> Result<Self> {
        if s_max == 0 || s_max >= MAX_ADAPTIVE_ROUNDS {
            return Err(Error::InvalidParameter(format!(
                "s_max must be in 1..{MAX_ADAPTIVE_ROUNDS}, got {s_max}"
            )));
        }
        Ok(Self {
            s_max,
            omega: OmegaSequence::new(s_max + 1),
            u: u_table(s_max),
        })
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn omega(&self) -> &OmegaSequence {
        &self.omega
    }

    pub fn u(&self) -> &UTable {
        &self.u
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == 0 || len > self.s_max {
            return Err(Error::BadIndex(len));
        }
        Ok(())
    }

    /// `q_1(theta), ..., q_len(theta)`.
    pub fn q_prefix(&self, mechanism: Mechanism, theta: f64, len: usize) -> Result<Vec<f64>> {
        check_theta(theta)?;
        self.check_len(len)?;
        Ok(match mechanism {
            Mechanism::NaiveBoston => {
                let state = naive_limits_with(theta, &self.omega, len);
                (1..=len).map(|s| state.exit_probability(s, &self.omega)).collect()
            }
            Mechanism::AdaptiveBoston => {
                let state = adaptive_limits(theta, len)?;
                let weights: Vec<f64> = (1..=len).map(|r| state.exit_weight(r)).collect();
                (1..=len)
                    .map(|s| (1..=s).map(|r| self.u.get(r, s) * weights[r - 1]).sum())
                    .collect()
            }
            Mechanism::SerialDictatorship => {
                let mut out = Vec::with_capacity(len);
                let mut power = 1.0;
                for _ in 0..len {
                    out.push(power * (1.0 - theta));
                    power *= theta;
                }
                out
            }
        })
    }

    pub fn q(&self, mechanism: Mechanism, s: usize, theta: f64) -> Result<f64> {
        self.check_len(s)?;
        Ok(self.q_prefix(mechanism, theta, s)?[s - 1])
    }

    pub fn q_all(&self, mechanism: Mechanism, theta: f64) -> Result<Vec<f64>> {
        self.q_prefix(mechanism, theta, self.s_max)
    }

    /// `sum_{s > len} q_s(theta)`, in closed form.
    pub fn tail_beyond(&self, mechanism: Mechanism, theta: f64, len: usize) -> Result<f64> {
        check_theta(theta)?;
        self.check_len(len)?;
        Ok(match mechanism {
            Mechanism::NaiveBoston => naive_limits_with(theta, &self.omega, len + 1).z_prime(len + 1),
            Mechanism::AdaptiveBoston => {
                let state = adaptive_limits(theta, len + 1)?;
                let within: f64 = (1..=len)
                    .map(|r| state.exit_weight(r) * self.u.survival(r, len))
                    .sum();
                within + state.y_prime(len + 1)
            }
            Mechanism::SerialDictatorship => theta.powi(len as i32),
        })
    }

    /// Truncation mass at `s_max`.
    pub fn tail(&self, mechanism: Mechanism, theta: f64) -> Result<f64> {
        self.tail_beyond(mechanism, theta, self.s_max)
    }

    /// `int_0^theta sum_{s > len} q_s(phi) dphi`, in closed form.
    pub fn integrated_tail_beyond(&self, mechanism: Mechanism, theta: f64, len: usize) -> Result<f64> {
        check_theta(theta)?;
        self.check_len(len)?;
        Ok(match mechanism {
            Mechanism::NaiveBoston => naive_limits_with(theta, &self.omega, len + 1).z(len + 1),
            Mechanism::AdaptiveBoston => {
                let state = adaptive_limits(theta, len + 1)?;
                let within: f64 = (1..=len)
                    .map(|r| (state.y(r) - state.y(r + 1)) * self.u.survival(r, len))
                    .sum();
                within + state.y(len + 1)
            }
            Mechanism::SerialDictatorship => theta.powi(len as i32 + 1) / (len as f64 + 1.0),
        })
    }

    /// `int_0^theta q_s(phi) dphi` by adaptive Simpson.
    pub fn cumulative_q(&self, mechanism: Mechanism, s: usize, theta: f64, tol: f64) -> Result<f64> {
        check_theta(theta)?;
        self.check_len(s)?;
        // Arguments are validated above, so evaluation inside [0, theta] cannot fail.
        adaptive_simpson(
            |phi| self.q(mechanism, s, phi).unwrap_or(f64::NAN),
            0.0,
            theta,
            tol,
        )
    }

    /// `int_0^theta sum_s weights[s - 1] q_s(phi) dphi`, `weights.len() <= s_max`.
    pub fn integrate_weighted(
        &self,
        mechanism: Mechanism,
        weights: &[f64],
        theta: f64,
        tol: f64,
    ) -> Result<f64> {
        check_theta(theta)?;
        if weights.is_empty() {
            return Ok(0.0);
        }
        self.check_len(weights.len())?;
        let integrand = |phi: f64| -> f64 {
            self.q_prefix(mechanism, phi, weights.len())
                .map(|q| q.iter().zip(weights).map(|(q, w)| q * w).sum())
                .unwrap_or(f64::NAN)
        };
        adaptive_simpson(integrand, 0.0, theta, tol)
    }

    /// Limiting normalized k-approval welfare of the whole population.
    pub fn welfare_limit_kapproval(&self, mechanism: Mechanism, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidRule("k-approval needs k >= 1".into()));
        }
        Ok(match mechanism {
            Mechanism::NaiveBoston => 1.0 - self.omega_at(k + 1)?,
            Mechanism::AdaptiveBoston => {
                self.check_len(k)?;
                let sum: f64 = (1..=k)
                    .flat_map(|s| (1..=s).map(move |r| (r, s)))
                    .map(|(r, s)| (1.0 - r as f64).exp() * self.u.get(r, s))
                    .sum();
                (1.0 - (-1.0f64).exp()) * sum
            }
            Mechanism::SerialDictatorship => k as f64 / (k as f64 + 1.0),
        })
    }

    fn omega_at(&self, r: usize) -> Result<f64> {
        if r <= self.omega.len() {
            Ok(self.omega.get(r))
        } else {
            Err(Error::BadIndex(r))
        }
    }

    /// Limiting order bias between the first and last positions.
    pub fn order_bias_limit(&self, mechanism: Mechanism, rule: &ScoringRule) -> Result<f64> {
        match rule {
            ScoringRule::Borda => Ok(match mechanism {
                Mechanism::SerialDictatorship => 0.5,
                _ => 0.0,
            }),
            ScoringRule::KApproval(0) => Err(Error::InvalidRule("k-approval needs k >= 1".into())),
            &ScoringRule::KApproval(k) => {
                self.check_len(k)?;
                Ok(match mechanism {
                    Mechanism::NaiveBoston => naive_limits_with(1.0, &self.omega, k + 1).z_prime(k + 1),
                    Mechanism::AdaptiveBoston => {
                        let g1 = 1.0 - 1.0 / E;
                        let sum: f64 = (1..=k)
                            .flat_map(|s| (1..=s).map(move |r| (r, s)))
                            .map(|(r, s)| g1.powi(r as i32 - 1) * self.u.get(r, s))
                            .sum();
                        1.0 - sum / E
                    }
                    Mechanism::SerialDictatorship => 1.0,
                })
            }
            ScoringRule::Custom(_) => Err(Error::NoLimitRule),
        }
    }
}

fn tables_for(len: usize) -> Result<LimitTables> {
    if len == 0 {
        return Err(Error::BadIndex(0));
    }
    LimitTables::new(len).map_err(|_| Error::BadIndex(len))
}

pub fn q_s(mechanism: Mechanism, s: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    tables_for(s)?.q(mechanism, s, theta)
}

pub fn q_s_nb(s: usize, theta: f64) -> Result<f64> {
    q_s(Mechanism::NaiveBoston, s, theta)
}

pub fn q_s_ab(s: usize, theta: f64) -> Result<f64> {
    q_s(Mechanism::AdaptiveBoston, s, theta)
}

pub fn q_s_sd(s: usize, theta: f64) -> Result<f64> {
    q_s(Mechanism::SerialDictatorship, s, theta)
}

pub fn cumulative_q(mechanism: Mechanism, s: usize, theta: f64, tol: f64) -> Result<f64> {
    check_theta(theta)?;
    tables_for(s)?.cumulative_q(mechanism, s, theta, tol)
}

pub fn welfare_limit_kapproval(mechanism: Mechanism, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidRule("k-approval needs k >= 1".into()));
    }
    tables_for(k)?.welfare_limit_kapproval(mechanism, k)
}

pub fn order_bias_limit(mechanism: Mechanism, rule: &ScoringRule) -> Result<f64> {
    let len = match rule {
        ScoringRule::KApproval(k) => (*k).max(1),
        _ => 1,
    };
    tables_for(len)?.order_bias_limit(mechanism, rule)
}
