//! Node-selection policies.
//!
//! [`Toof`] is the learner: every node keeps an online Newton-step estimate
//! `w̄` of its weights and a design matrix `Z`, and the node maximizing
//! `w̄ᵀx + √γ·‖x‖_{Z⁻¹}` gets the task. The baselines are Greedy (same rule
//! with `Z` frozen at `λI`), Round-Robin, and the Optimal oracle that knows
//! the true weights.
//!
//! Slots are 1-indexed (`t = 1, 2, …`), arms are 0-indexed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{grad_log_likelihood, FeatureVector, Feedback, WeightVector};
use crate::quadform::{dot, PsdMatrix};

/// `1 / (2(1 + e))`, the curvature constant of the logistic log-likelihood on the unit ball.
pub fn default_beta() -> f64 {
    1.0 / (2.0 * (1.0 + std::f64::consts::E))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// High-probability confidence width with failure probability `delta`.
    Theoretical { delta: f64 },
    /// `c · log(det Z / det Z₁)`.
    Tuned { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToofConfig {
    pub lambda: f64,
    pub beta: f64,
    pub gamma_mode: GammaMode,
}

impl Default for ToofConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            beta: default_beta(),
            gamma_mode: GammaMode::Tuned { c: 0.01 },
        }
    }
}

impl ToofConfig {
    pub fn theoretical(delta: f64) -> Self {
        Self {
            gamma_mode: GammaMode::Theoretical { delta },
            ..Self::default()
        }
    }

    pub fn tuned(c: f64) -> Self {
        Self {
            gamma_mode: GammaMode::Tuned { c },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        match self.gamma_mode {
            GammaMode::Theoretical { delta } if !(delta > 0.0 && delta < 1.0) => Err(
                Error::invalid(format!("delta must lie in (0, 1), got {delta}")),
            ),
            GammaMode::Tuned { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::invalid(format!("c must be positive, got {c}")))
            }
            _ => Ok(()),
        }
    }

    /// Confidence width for an arm at slot `t` given its current log-det ratio.
    pub fn gamma(&self, t: u64, logdet_ratio: f64) -> f64 {
        match self.gamma_mode {
            GammaMode::Theoretical { delta } => {
                gamma_theoretical(t, logdet_ratio, self.beta, self.lambda, delta)
            }
            GammaMode::Tuned { c } => gamma_tuned(logdet_ratio, c),
        }
    }
}

/// `τ_t = log(2⌈2 log₂ t⌉ t² / δ)`; `t = 1` is evaluated as `t = 2`, where
/// the ceiling would otherwise vanish.
pub fn tau(t: u64, delta: f64) -> f64 {
    let t = t.max(2) as f64;
    let ceil = (2.0 * t.log2()).ceil();
    (2.0 * ceil * t * t / delta).ln()
}

/// `[8 + (8/β + 16/3)·τ_t + (2/β)·logdet_ratio] + λ`.
pub fn gamma_theoretical(t: u64, logdet_ratio: f64, beta: f64, lambda: f64, delta: f64) -> f64 {
    8.0 + (8.0 / beta + 16.0 / 3.0) * tau(t, delta) + (2.0 / beta) * logdet_ratio + lambda
}

pub fn gamma_tuned(logdet_ratio: f64, c: f64) -> f64 {
    c * logdet_ratio
}

/// Per-node learner state.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    pub w_bar: WeightVector,
    pub z: PsdMatrix,
    pub pulls: u64,
}

impl ArmState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        Ok(Self {
            w_bar: WeightVector::zeros(dim),
            z: PsdMatrix::new_scaled_identity(dim, lambda)?,
            pulls: 0,
        })
    }

    /// `‖w̄ − w‖²_Z`.
    pub fn estimation_error(&self, truth: &[f64]) -> Result<f64> {
        let diff: Vec<f64> = self.w_bar.iter().zip(truth).map(|(a, b)| a - b).collect();
        self.z.quad(&diff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub arm: usize,
    pub score: f64,
    pub bonus: f64,
    pub gamma: f64,
}

/// Index of the largest value, lowest index on ties.
fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

fn check_arms(states: usize, features: usize) -> Result<()> {
    if states == 0 {
        return Err(Error::invalid("at least one arm is required"));
    }
    if states != features {
        return Err(Error::invalid(format!(
            "{states} arm states but {features} feature vectors"
        )));
    }
    Ok(())
}

/// UCB score of every arm at slot `t`, as `Decision`s with `arm` set to the arm index.
pub fn toof_scores(
    states: &[ArmState],
    features: &[FeatureVector],
    t: u64,
    cfg: &ToofConfig,
) -> Result<Vec<Decision>> {
    check_arms(states.len(), features.len())?;
    states
        .iter()
        .zip(features)
        .enumerate()
        .map(|(arm, (state, x))| {
            let gamma = cfg.gamma(t, state.z.logdet_ratio());
            let bonus = gamma.sqrt() * state.z.quad_inv(x)?.sqrt();
            let estimate = dot(&state.w_bar, x);
            Ok(Decision {
                arm,
                score: estimate + bonus,
                bonus,
                gamma,
            })
        })
        .collect()
}

/// Picks the arm for slot `t`: arm `t − 1` during the first `K` slots, the
/// UCB maximizer afterwards.
pub fn toof_select(
    states: &[ArmState],
    features: &[FeatureVector],
    t: u64,
    cfg: &ToofConfig,
) -> Result<Decision> {
    if t == 0 {
        return Err(Error::invalid("slots are 1-indexed"));
    }
    let scores = toof_scores(states, features, t, cfg)?;
    let k = scores.len() as u64;
    let arm = if t <= k {
        (t - 1) as usize
    } else {
        argmax(scores.iter().map(|d| d.score)).expect("non-empty")
    };
    Ok(scores[arm])
}

/// Greedy uses the TOOF rule on states whose design matrix never moves.
pub fn greedy_select(
    states: &[ArmState],
    features: &[FeatureVector],
    t: u64,
    cfg: &ToofConfig,
) -> Result<Decision> {
    toof_select(states, features, t, cfg)
}

/// Sequential-MLE step on the chosen arm, then `Z ← Z + (β/2)·x·xᵀ`.
///
/// The projection uses the pre-update `Z`.
pub fn toof_update(
    state: &mut ArmState,
    x: &FeatureVector,
    y: Feedback,
    cfg: &ToofConfig,
) -> Result<()> {
    newton_step(state, x, y)?;
    state.z.rank_one_update(x, cfg.beta / 2.0)?;
    state.pulls += 1;
    Ok(())
}

/// Same weight step as [`toof_update`], `Z` left untouched.
pub fn greedy_update(state: &mut ArmState, x: &FeatureVector, y: Feedback) -> Result<()> {
    newton_step(state, x, y)?;
    state.pulls += 1;
    Ok(())
}

fn newton_step(state: &mut ArmState, x: &FeatureVector, y: Feedback) -> Result<()> {
    let g = grad_log_likelihood(&state.w_bar, x, y)?;
    let d = g.len();
    let inv = state.z.inverse();
    let w_raw: Vec<f64> = (0..d)
        .map(|j| state.w_bar[j] + dot(&inv[j * d..(j + 1) * d], &g))
        .collect();
    state.w_bar = state.z.project_unit_ball(&w_raw)?;
    Ok(())
}

pub fn round_robin_select(t: u64, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::invalid("at least one arm is required"));
    }
    if t == 0 {
        return Err(Error::invalid("slots are 1-indexed"));
    }
    Ok(((t - 1) % k as u64) as usize)
}

/// `argmax_i w_iᵀx_i`, lowest index on ties.
pub fn oracle_select(weights: &[WeightVector], features: &[FeatureVector]) -> Result<usize> {
    check_arms(weights.len(), features.len())?;
    Ok(argmax(weights.iter().zip(features).map(|(w, x)| dot(w, x))).expect("non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Toof,
    Greedy,
    RoundRobin,
    Optimal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Toof,
        Algorithm::Greedy,
        Algorithm::RoundRobin,
        Algorithm::Optimal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Toof => "toof",
            Algorithm::Greedy => "greedy",
            Algorithm::RoundRobin => "round_robin",
            Algorithm::Optimal => "optimal",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toof" => Ok(Algorithm::Toof),
            "greedy" => Ok(Algorithm::Greedy),
            "round_robin" => Ok(Algorithm::RoundRobin),
            "optimal" => Ok(Algorithm::Optimal),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Common driver contract: select with all features visible, then observe
/// the chosen arm's bit.
pub trait Policy {
    fn algorithm(&self) -> Algorithm;

    fn select(&mut self, t: u64, features: &[FeatureVector]) -> Result<Decision>;

    fn observe(&mut self, arm: usize, x: &FeatureVector, y: Feedback) -> Result<()>;

    /// Per-arm learner state, for policies that estimate weights.
    fn arm_states(&self) -> Option<&[ArmState]> {
        None
    }
}

/// TOOF learner, or Greedy when built with [`Toof::greedy`].
#[derive(Debug, Clone)]
pub struct Toof {
    cfg: ToofConfig,
    states: Vec<ArmState>,
    frozen_design: bool,
}

impl Toof {
    pub fn new(arms: usize, dim: usize, cfg: ToofConfig) -> Result<Self> {
        Self::build(arms, dim, cfg, false)
    }

    pub fn greedy(arms: usize, dim: usize, cfg: ToofConfig) -> Result<Self> {
        Self::build(arms, dim, cfg, true)
    }

    fn build(arms: usize, dim: usize, cfg: ToofConfig, frozen_design: bool) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("at least one arm is required"));
        }
        cfg.validate()?;
        let states = (0..arms)
            .map(|_| ArmState::new(dim, cfg.lambda))
            .collect::<Result<_>>()?;
        Ok(Self {
            cfg,
            states,
            frozen_design,
        })
    }

    pub fn config(&self) -> &ToofConfig {
        &self.cfg
    }

    pub fn states(&self) -> &[ArmState] {
        &self.states
    }
}

impl Policy for Toof {
    fn algorithm(&self) -> Algorithm {
        if self.frozen_design {
            Algorithm::Greedy
        } else {
            Algorithm::Toof
        }
    }

    fn select(&mut self, t: u64, features: &[FeatureVector]) -> Result<Decision> {
        toof_select(&self.states, features, t, &self.cfg)
    }

    fn observe(&mut self, arm: usize, x: &FeatureVector, y: Feedback) -> Result<()> {
        let k = self.states.len();
        let state = self
            .states
            .get_mut(arm)
            .ok_or_else(|| Error::invalid(format!("arm {arm} out of range for {k} arms")))?;
        if self.frozen_design {
            greedy_update(state, x, y)
        } else {
            toof_update(state, x, y, &self.cfg)
        }
    }

    fn arm_states(&self) -> Option<&[ArmState]> {
        Some(&self.states)
    }
}

#[derive(Debug, Clone)]
pub struct RoundRobin {
    arms: usize,
}

impl RoundRobin {
    pub fn new(arms: usize) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("at least one arm is required"));
        }
        Ok(Self { arms })
    }
}

impl Policy for RoundRobin {
    fn algorithm(&self) -> Algorithm {
        Algorithm::RoundRobin
    }

    fn select(&mut self, t: u64, _features: &[FeatureVector]) -> Result<Decision> {
        Ok(Decision {
            arm: round_robin_select(t, self.arms)?,
            score: 0.0,
            bonus: 0.0,
            gamma: 0.0,
        })
    }

    fn observe(&mut self, _arm: usize, _x: &FeatureVector, _y: Feedback) -> Result<()> {
        Ok(())
    }
}

/// Perfect-knowledge policy.
#[derive(Debug, Clone)]
pub struct Oracle {
    weights: Vec<WeightVector>,
}

impl Oracle {
    pub fn new(weights: Vec<WeightVector>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("at least one arm is required"));
        }
        Ok(Self { weights })
    }
}

impl Policy for Oracle {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Optimal
    }

    fn select(&mut self, _t: u64, features: &[FeatureVector]) -> Result<Decision> {
        let arm = oracle_select(&self.weights, features)?;
        Ok(Decision {
            arm,
            score: dot(&self.weights[arm], &features[arm]),
            bonus: 0.0,
            gamma: 0.0,
        })
    }

    fn observe(&mut self, _arm: usize, _x: &FeatureVector, _y: Feedback) -> Result<()> {
        Ok(())
    }
}
