//! Payoffs, acceptance and interaction probabilities.
//!
//! Everything here is a pure function of its arguments. Rewards are kept as
//! exact integer counts of the two payoff quanta (`1` and `c/b`) so that
//! equality between accumulated rewards never depends on float rounding.

use std::fmt;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound of the inequity sensitivity.
pub const LAMBDA_MIN: f64 = 0.0;
/// Upper bound of the inequity sensitivity.
pub const LAMBDA_MAX: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Cooperator,
    Defector,
}

impl Strategy {
    pub fn is_cooperator(self) -> bool {
        self == Strategy::Cooperator
    }

    pub fn as_char(self) -> char {
        match self {
            Strategy::Cooperator => 'C',
            Strategy::Defector => 'D',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'C' => Some(Strategy::Cooperator),
            'D' => Some(Strategy::Defector),
            _ => None,
        }
    }

    /// Row/column index into the payoff matrix.
    fn index(self) -> usize {
        match self {
            Strategy::Cooperator => 0,
            Strategy::Defector => 1,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Accumulated reward as `units · 1 + cb_units · (c/b)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reward {
    pub units: u64,
    pub cb_units: u64,
}

impl Reward {
    pub const ZERO: Reward = Reward {
        units: 0,
        cb_units: 0,
    };

    pub const fn new(units: u64, cb_units: u64) -> Self {
        Reward { units, cb_units }
    }

    pub fn value(self, cb: f64) -> f64 {
        self.units as f64 + self.cb_units as f64 * cb
    }

    /// `|value(self) - value(other)|`, computed from the integer difference.
    ///
    /// The result is bitwise symmetric in its arguments, so identical
    /// difference pairs always produce identical distances.
    pub fn distance(self, other: Reward, cb: f64) -> f64 {
        let du = self.units as i64 - other.units as i64;
        let dc = self.cb_units as i64 - other.cb_units as i64;
        (du as f64 + dc as f64 * cb).abs()
    }

    pub fn is_zero(self) -> bool {
        self == Reward::ZERO
    }
}

impl AddAssign for Reward {
    fn add_assign(&mut self, rhs: Reward) {
        self.units += rhs.units;
        self.cb_units += rhs.cb_units;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub strategy: Strategy,
    pub lambda: f64,
    pub reward: Reward,
}

impl AgentState {
    pub fn new(strategy: Strategy, lambda: f64) -> Self {
        AgentState {
            strategy,
            lambda,
            reward: Reward::ZERO,
        }
    }

    pub fn with_reward(mut self, reward: Reward) -> Self {
        self.reward = reward;
        self
    }
}

/// The single cost-to-benefit ratio `c/b` of the normalized game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayoffParams {
    cb: f64,
}

impl PayoffParams {
    pub fn new(cb: f64) -> Result<Self> {
        if cb > 0.0 && cb < 1.0 {
            Ok(PayoffParams { cb })
        } else {
            Err(Error::InvalidParams(format!(
                "cost-to-benefit ratio {cb} violates 0 < c/b < 1"
            )))
        }
    }

    pub fn cb(self) -> f64 {
        self.cb
    }
}

/// Normalized prisoner's dilemma matrix, indexed `[focal][opponent]` with
/// cooperator first: `[[1, 0], [1 + c/b, c/b]]`.
pub fn normalized_payoffs(p: PayoffParams) -> [[f64; 2]; 2] {
    [[1.0, 0.0], [1.0 + p.cb, p.cb]]
}

/// Reward increments for the focal player `i` and opponent `j`.
///
/// C-C pays `(1,0)` each, C-D pays nothing to the cooperator and `(1,1)` to
/// the defector, D-D pays `(0,1)` each.
pub fn payoff(s_i: Strategy, s_j: Strategy) -> (Reward, Reward) {
    (increment(s_i, s_j), increment(s_j, s_i))
}

fn increment(me: Strategy, other: Strategy) -> Reward {
    // Integer image of `normalized_payoffs`.
    const TABLE: [[Reward; 2]; 2] = [
        [Reward::new(1, 0), Reward::new(0, 0)],
        [Reward::new(1, 1), Reward::new(0, 1)],
    ];
    TABLE[me.index()][other.index()]
}

/// Probability that `i` accepts `j`: `exp(-λ_i |r_i - r_j|)`.
pub fn accept_probability(lambda_i: f64, r_i: Reward, r_j: Reward, p: PayoffParams) -> f64 {
    (-lambda_i * r_i.distance(r_j, p.cb)).exp()
}

/// Mutual-consent probability `exp(-(λ_i + λ_j) |r_i - r_j|)`.
pub fn interaction_probability(
    lambda_i: f64,
    lambda_j: f64,
    r_i: Reward,
    r_j: Reward,
    p: PayoffParams,
) -> f64 {
    (-(lambda_i + lambda_j) * r_i.distance(r_j, p.cb)).exp()
}

/// Coefficients of the Fehr–Schmidt inequity-averse utility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FehrSchmidtParams {
    k1: f64,
    k2: f64,
}

impl FehrSchmidtParams {
    /// Requires `k1 < k2` and `0 <= k2 <= 1`.
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if k1.partial_cmp(&k2) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidParams(format!(
                "k1 = {k1} must be < k2 = {k2}"
            )));
        }
        if !(0.0..=1.0).contains(&k2) {
            return Err(Error::InvalidParams(format!(
                "k2 = {k2} must lie in [0, 1]"
            )));
        }
        Ok(FehrSchmidtParams { k1, k2 })
    }

    pub fn k1(self) -> f64 {
        self.k1
    }

    pub fn k2(self) -> f64 {
        self.k2
    }
}

/// `x_i - k1·max(x_j - x_i, 0) - k2·max(x_i - x_j, 0)`.
///
/// Reference only; the simulation dynamics never consult it.
pub fn fehr_schmidt_utility(x_i: f64, x_j: f64, k: FehrSchmidtParams) -> f64 {
    x_i - k.k1 * (x_j - x_i).max(0.0) - k.k2 * (x_i - x_j).max(0.0)
}
