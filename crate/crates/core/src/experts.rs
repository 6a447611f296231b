//! Expert update rules over a finite action set.
//!
//! [`SleepingExpertState`] runs (unweighted) AdaNormalHedge, where experts
//! that are asleep in a round neither contribute nor get updated.
//! [`HedgeState`] is a plain full-information Hedge that becomes a
//! sleeping-expert algorithm through [`sleeping_reward_completion`]: asleep
//! entries are filled with the expected reward of the awake ones, so the
//! Hedge learner cannot tell the difference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents above this switch weight arithmetic to log space.
const LOG_SPACE_THRESHOLD: f64 = 500.0;

fn hinge_exponents(regret: f64, magnitude: f64) -> (f64, f64) {
    let denom = 3.0 * (magnitude + 1.0);
    let up = (regret + 1.0).max(0.0);
    let down = (regret - 1.0).max(0.0);
    (up * up / denom, down * down / denom)
}

/// AdaNormalHedge weight `½ (exp([R+1]₊² / 3(C+1)) − exp([R−1]₊² / 3(C+1)))`.
pub fn ada_weight(regret: f64, magnitude: f64) -> f64 {
    let (a, b) = hinge_exponents(regret, magnitude);
    if a == 0.0 {
        return 0.0;
    }
    if a > LOG_SPACE_THRESHOLD {
        return ada_log_weight(regret, magnitude).map_or(0.0, f64::exp);
    }
    0.5 * (a.exp() - b.exp())
}

/// Natural log of [`ada_weight`], `None` when the weight is zero.
pub fn ada_log_weight(regret: f64, magnitude: f64) -> Option<f64> {
    let (a, b) = hinge_exponents(regret, magnitude);
    if a == 0.0 {
        return None;
    }
    // w = ½ eᵃ (1 − e^{b−a}), with b < a whenever R > −1.
    Some(a + (-(b - a).exp_m1()).ln() - std::f64::consts::LN_2)
}

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Restricts `p` to the entries where `mask` is true and renormalizes.
/// Falls back to uniform over the masked-in set when the surviving mass is 0.
pub fn renormalize(p: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    if p.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: mask.len(),
        });
    }
    let awake = mask.iter().filter(|m| **m).count();
    if awake == 0 {
        return Err(Error::NoFeasibleAction);
    }
    let mass: f64 = p.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| *v).sum();
    if mass > 0.0 {
        Ok(p.iter()
            .zip(mask)
            .map(|(v, m)| if *m { v / mass } else { 0.0 })
            .collect())
    } else {
        let u = 1.0 / awake as f64;
        Ok(mask.iter().map(|m| if *m { u } else { 0.0 }).collect())
    }
}

/// Cumulative regret `R` and magnitude `C` per expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleepingExpertState {
    regrets: Vec<f64>,
    magnitudes: Vec<f64>,
}

impl SleepingExpertState {
    pub fn new(num_experts: usize) -> Self {
        Self {
            regrets: vec![0.0; num_experts],
            magnitudes: vec![0.0; num_experts],
        }
    }

    pub fn from_parts(regrets: Vec<f64>, magnitudes: Vec<f64>) -> Result<Self> {
        if regrets.len() != magnitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: regrets.len(),
                got: magnitudes.len(),
            });
        }
        if let Some(c) = magnitudes.iter().find(|c| !(**c >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "magnitudes must be non-negative, got {c}"
            )));
        }
        Ok(Self {
            regrets,
            magnitudes,
        })
    }

    pub fn num_experts(&self) -> usize {
        self.regrets.len()
    }

    pub fn regrets(&self) -> &[f64] {
        &self.regrets
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// `p[a] ∝ w(R[a], C[a])`, uniform when every weight is zero.
    pub fn predict(&self) -> Vec<f64> {
        let k = self.num_experts();
        let max_exponent = self
            .regrets
            .iter()
            .zip(&self.magnitudes)
            .map(|(r, c)| hinge_exponents(*r, *c).0)
            .fold(0.0, f64::max);
        if max_exponent == 0.0 {
            return uniform(k);
        }
        if max_exponent <= LOG_SPACE_THRESHOLD {
            let w: Vec<f64> = self
                .regrets
                .iter()
                .zip(&self.magnitudes)
                .map(|(r, c)| ada_weight(*r, *c))
                .collect();
            let total: f64 = w.iter().sum();
            if total > 0.0 && total.is_finite() {
                return w.into_iter().map(|v| v / total).collect();
            }
        }
        let logs: Vec<Option<f64>> = self
            .regrets
            .iter()
            .zip(&self.magnitudes)
            .map(|(r, c)| ada_log_weight(*r, *c))
            .collect();
        let top = logs.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return uniform(k);
        }
        let w: Vec<f64> = logs
            .iter()
            .map(|l| l.map_or(0.0, |v| (v - top).exp()))
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    /// Applies one round: for each awake `a`, `R[a] += r̂[a] − p̄ᵀr̂` and
    /// `C[a] += |r̂[a] − p̄ᵀr̂|`.
    pub fn update(&mut self, awake: &[bool], rewards: &[f64], sampling: &[f64]) -> Result<()> {
        let k = self.num_experts();
        for len in [awake.len(), rewards.len(), sampling.len()] {
            if len != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: len,
                });
            }
        }
        for (a, (&m, &p)) in awake.iter().zip(sampling).enumerate() {
            if !m && p != 0.0 {
                return Err(Error::MassOnAsleep { action: a, mass: p });
            }
        }
        if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(Error::NonFiniteTarget(*r));
        }
        let expected: f64 = sampling.iter().zip(rewards).map(|(p, r)| p * r).sum();
        for a in 0..k {
            if awake[a] {
                let delta = rewards[a] - expected;
                self.regrets[a] += delta;
                self.magnitudes[a] += delta.abs();
            }
        }
        Ok(())
    }
}

/// Completes a reward vector for a full-information expert algorithm.
///
/// Awake entries get `min(1, ucb)` clamped at 0; asleep entries get the
/// expected awake reward under `p` renormalized to the awake set, so that
/// `pᵀr̂` equals the awake-restricted expectation.
pub fn sleeping_reward_completion(ucb_rewards: &[f64], awake: &[bool], p: &[f64]) -> Result<Vec<f64>> {
    if ucb_rewards.len() != awake.len() {
        return Err(Error::DimensionMismatch {
            expected: ucb_rewards.len(),
            got: awake.len(),
        });
    }
    let restricted = renormalize(p, awake)?;
    let mut completed: Vec<f64> = ucb_rewards
        .iter()
        .map(|u| u.clamp(0.0, 1.0))
        .collect();
    let fill: f64 = completed
        .iter()
        .zip(&restricted)
        .zip(awake)
        .filter(|(_, m)| **m)
        .map(|((r, q), _)| r * q)
        .sum();
    for (r, m) in completed.iter_mut().zip(awake) {
        if !*m {
            *r = fill;
        }
    }
    Ok(completed)
}

/// Hedge with step size `η_t = 2 √(ln K / t)` on its own round count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeState {
    log_weights: Vec<f64>,
    rounds_seen: usize,
}

impl HedgeState {
    pub fn new(num_experts: usize) -> Self {
        Self {
            log_weights: vec![0.0; num_experts],
            rounds_seen: 0,
        }
    }

    pub fn rounds_seen(&self) -> usize {
        self.rounds_seen
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn step_size(num_experts: usize, rounds: usize) -> f64 {
        if rounds == 0 {
            return 0.0;
        }
        2.0 * ((num_experts as f64).ln() / rounds as f64).sqrt()
    }

    pub fn predict(&self) -> Vec<f64> {
        let top = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    pub fn update(&mut self, rewards: &[f64]) -> Result<()> {
        if rewards.len() != self.log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.log_weights.len(),
                got: rewards.len(),
            });
        }
        if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(Error::NonFiniteTarget(*r));
        }
        self.rounds_seen += 1;
        let eta = Self::step_size(self.log_weights.len(), self.rounds_seen);
        for (l, r) in self.log_weights.iter_mut().zip(rewards) {
            *l += eta * r;
        }
        Ok(())
    }
}
