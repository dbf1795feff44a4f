//! The survival recursions for naive and adaptive Boston.
//!
//! Both recursions are evaluated in forms that avoid cancellation:
//!
//! * NB: `z_{r+1} = z_r (1 - w_r) + w_r h(z_r)`
//! * AB: with `x_r = e^{r-1} y_r`, `x_{r+1} = e h(x_r)` and `g_r = -expm1(-x_r)`
//!
//! where `h(x) = x - 1 + e^{-x}` is summed as a series near zero.

use crate::error::{Error, Result};

/// Adaptive recursions scale by `e^{r-1}`; beyond this the scale overflows.
pub const MAX_ADAPTIVE_ROUNDS: usize = 500;

/// `x - 1 + e^{-x}` without cancellation for small `x`.
pub(crate) fn exp_residual(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // sum_{k>=2} (-x)^k / k!
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..30 {
            term *= -x / k as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (-x).exp_m1() + x
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::BadTheta(theta))
    }
}

/// `w_1 = 1`, `w_{r+1} = w_r e^{-w_r}`: the limiting fraction of agents left
/// at the start of naive Boston round `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSequence {
    values: Vec<f64>,
}

impl OmegaSequence {
    /// Memoizes `w_1 ..= w_len`.
    pub fn new(len: usize) -> Self {
        let mut values = Vec::with_capacity(len);
        let mut w = 1.0f64;
        for _ in 0..len {
            values.push(w);
            w *= (-w).exp();
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `w_r`, 1-based. Panics outside `1..=len`.
    pub fn get(&self, r: usize) -> f64 {
        self.values[r - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

pub fn omega(r: usize) -> Result<f64> {
    if r == 0 {
        return Err(Error::BadIndex(0));
    }
    Ok(*OmegaSequence::new(r).values.last().expect("r >= 1"))
}

/// `z_r(theta)`, `z'_r(theta)` and `f_r(theta)` for `r = 1 ..= rounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveLimitState {
    pub theta: f64,
    z: Vec<f64>,
    z_prime: Vec<f64>,
    f: Vec<f64>,
}

impl NaiveLimitState {
    pub fn rounds(&self) -> usize {
        self.z.len()
    }

    /// Limiting fraction of all agents that are in `A(theta)` and present at round `r`.
    pub fn z(&self, r: usize) -> f64 {
        self.z[r - 1]
    }

    /// Limiting probability that the agent at `theta` is present at round `r`.
    pub fn z_prime(&self, r: usize) -> f64 {
        self.z_prime[r - 1]
    }

    /// Limiting probability that the agent at `theta`, present at round `r`, stays unmatched.
    pub fn f(&self, r: usize) -> f64 {
        self.f[r - 1]
    }

    /// `q_s(theta) = z'_s w_s e^{-z_s}`, for `s <= rounds`.
    pub fn exit_probability(&self, s: usize, omega: &OmegaSequence) -> f64 {
        self.z_prime(s) * omega.get(s) * (-self.z(s)).exp()
    }
}

pub(crate) fn naive_limits_with(theta: f64, omega: &OmegaSequence, rounds: usize) -> NaiveLimitState {
    assert!(rounds <= omega.len());
    let mut z = Vec::with_capacity(rounds);
    let mut z_prime = Vec::with_capacity(rounds);
    let mut f = Vec::with_capacity(rounds);
    let (mut zr, mut zpr) = (theta, 1.0f64);
    for &w in &omega.as_slice()[..rounds] {
        let fr = 1.0 - w * (-zr).exp();
        z.push(zr);
        z_prime.push(zpr);
        f.push(fr);
        zr = zr * (1.0 - w) + w * exp_residual(zr);
        zpr *= fr;
    }
    NaiveLimitState {
        theta,
        z,
        z_prime,
        f,
    }
}

pub fn naive_limits(theta: f64, rounds: usize) -> Result<NaiveLimitState> {
    check_theta(theta)?;
    if rounds == 0 {
        return Err(Error::BadIndex(0));
    }
    Ok(naive_limits_with(theta, &OmegaSequence::new(rounds), rounds))
}

/// `y_r(theta)`, `y'_r(theta)` and `g_r(theta)` for `r = 1 ..= rounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveLimitState {
    pub theta: f64,
    scaled: Vec<f64>,
    y: Vec<f64>,
    y_prime: Vec<f64>,
    g: Vec<f64>,
}

impl AdaptiveLimitState {
    pub fn rounds(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self, r: usize) -> f64 {
        self.y[r - 1]
    }

    pub fn y_prime(&self, r: usize) -> f64 {
        self.y_prime[r - 1]
    }

    pub fn g(&self, r: usize) -> f64 {
        self.g[r - 1]
    }

    /// `e^{r-1} y_r(theta)`: the segment's survivors per available item.
    pub fn scaled(&self, r: usize) -> f64 {
        self.scaled[r - 1]
    }

    /// `y'_r - y'_{r+1} = y'_r exp(-e^{r-1} y_r)`: limiting probability that
    /// the agent at `theta` is matched in round `r`.
    pub fn exit_weight(&self, r: usize) -> f64 {
        self.y_prime(r) * (-self.scaled(r)).exp()
    }
}

pub fn adaptive_limits(theta: f64, rounds: usize) -> Result<AdaptiveLimitState> {
    check_theta(theta)?;
    if rounds == 0 || rounds > MAX_ADAPTIVE_ROUNDS {
        return Err(Error::BadIndex(rounds));
    }
    let mut state = AdaptiveLimitState {
        theta,
        scaled: Vec::with_capacity(rounds),
        y: Vec::with_capacity(rounds),
        y_prime: Vec::with_capacity(rounds),
        g: Vec::with_capacity(rounds),
    };
    let (mut x, mut yp) = (theta, 1.0f64);
    for r in 1..=rounds {
        let g = -(-x).exp_m1();
        state.scaled.push(x);
        state.y.push(x * (1.0 - r as f64).exp());
        state.y_prime.push(yp);
        state.g.push(g);
        // x_r(theta) <= x_r(1) = 1; the fixed point at 1 is repelling.
        x = (std::f64::consts::E * exp_residual(x)).min(1.0);
        yp *= g;
    }
    Ok(state)
}
