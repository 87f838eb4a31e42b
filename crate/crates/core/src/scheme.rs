//! Initial weights, the linear reinforcement scheme and the recurrence
//! classification of the walk.
//!
//! Edge `{x, x+1}` starts with weight `x^alpha` (and weight 1 for the edge
//! at the origin); every traversal adds `delta` to it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model parameters `(alpha, delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWalkConfig")]
pub struct WalkConfig {
    alpha: f64,
    delta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWalkConfig {
    alpha: f64,
    delta: f64,
}

impl TryFrom<RawWalkConfig> for WalkConfig {
    type Error = Error;

    fn try_from(raw: RawWalkConfig) -> Result<Self> {
        WalkConfig::new(raw.alpha, raw.delta)
    }
}

/// Exponents up to this size are evaluated with exact repeated multiplication.
const MAX_INTEGER_POWER: f64 = 64.0;

impl WalkConfig {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be finite, got {alpha}")));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "delta must be finite and non-negative, got {delta}"
            )));
        }
        Ok(Self { alpha, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// True when `alpha` is an integer, so every initial weight is rational.
    pub fn has_integer_alpha(&self) -> bool {
        self.alpha.fract() == 0.0 && self.alpha.abs() <= MAX_INTEGER_POWER
    }

    /// `f(0, x) = x^alpha ∨ 1`: weight 1 at the origin, `x^alpha` elsewhere.
    pub fn initial_weight(&self, x: u64) -> f64 {
        if x == 0 {
            return 1.0;
        }
        if self.has_integer_alpha() {
            let p = (x as f64).powi(self.alpha.abs() as i32);
            if self.alpha < 0.0 {
                1.0 / p
            } else {
                p
            }
        } else {
            (self.alpha * (x as f64).ln()).exp()
        }
    }

    /// `f(ell, x) = f(0, x) + ell * delta`.
    pub fn scheme_weight(&self, ell: u64, x: u64) -> f64 {
        self.initial_weight(x) + ell as f64 * self.delta
    }

    /// Recurrence verdict plus the partial sum of `1/f(0, x)` over `0..=cutoff`.
    ///
    /// The verdict is analytic (`alpha <= 1`); the partial sum is only a
    /// diagnostic.
    pub fn classify(&self, cutoff: u64) -> Classification {
        let verdict = if self.alpha <= 1.0 {
            Recurrence::Recurrent
        } else {
            Recurrence::Transient
        };
        let partial_sum = (0..=cutoff).map(|x| 1.0 / self.initial_weight(x)).sum();
        Classification {
            verdict,
            partial_sum,
            cutoff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recurrence {
    Recurrent,
    Transient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Recurrence,
    /// `sum_{x=0}^{cutoff} 1/f(0, x)`.
    pub partial_sum: f64,
    pub cutoff: u64,
}
