//! Logistic one-bit feedback.
//!
//! A node with weights `w` receives a task with features `x` and answers
//! `y = ±1` with `Pr[y] = 1 / (1 + exp(−y·wᵀx))`.

use std::ops::Deref;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quadform::{dot, norm};

const UNIT_BALL_TOL: f64 = 1e-12;

fn check_unit_ball(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{what} must be non-empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    let n = norm(values);
    if n > 1.0 + UNIT_BALL_TOL {
        return Err(Error::invalid(format!(
            "{what} norm {n} exceeds the unit ball"
        )));
    }
    Ok(())
}

/// Normalized per-node feature vector, `‖x‖₂ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_unit_ball(&values, "feature vector")?;
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Node weight vector, `‖w‖₂ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_unit_ball(&values, "weight vector")?;
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Output of the metric projection, feasible by construction.
    pub(crate) fn from_projected(values: Vec<f64>) -> Self {
        debug_assert!(norm(&values) <= 1.0 + 1e-9);
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feedback {
    Happy,
    Unhappy,
}

impl Feedback {
    /// `+1` for happy, `−1` for unhappy.
    pub fn sign(self) -> f64 {
        match self {
            Feedback::Happy => 1.0,
            Feedback::Unhappy => -1.0,
        }
    }

    pub fn from_sign(y: i32) -> Result<Self> {
        match y {
            1 => Ok(Feedback::Happy),
            -1 => Ok(Feedback::Unhappy),
            other => Err(Error::invalid(format!("feedback must be ±1, got {other}"))),
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Feedback::Happy => 1,
            Feedback::Unhappy => -1,
        }
    }

    pub fn is_happy(self) -> bool {
        self == Feedback::Happy
    }
}

fn margin(w: &[f64], x: &[f64]) -> Result<f64> {
    if w.len() != x.len() {
        return Err(Error::invalid(format!(
            "weight length {} does not match feature length {}",
            w.len(),
            x.len()
        )));
    }
    Ok(dot(w, x))
}

/// `1 / (1 + e^{−z})` without overflow in either tail.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^{a})` without overflow.
fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

/// `Pr[y | x]` under weights `w`.
pub fn happy_probability(w: &[f64], x: &[f64], y: Feedback) -> Result<f64> {
    Ok(sigmoid(y.sign() * margin(w, x)?))
}

/// Draws one feedback bit, consuming exactly one uniform variate.
pub fn sample_feedback<R: Rng + ?Sized>(w: &[f64], x: &[f64], rng: &mut R) -> Result<Feedback> {
    let p = happy_probability(w, x, Feedback::Happy)?;
    let u: f64 = rng.random();
    Ok(if u < p {
        Feedback::Happy
    } else {
        Feedback::Unhappy
    })
}

/// Per-slot log-likelihood `−log(1 + exp(−y·wᵀx))`.
pub fn log_likelihood(w: &[f64], x: &[f64], y: Feedback) -> Result<f64> {
    Ok(-softplus(-y.sign() * margin(w, x)?))
}

/// Gradient of [`log_likelihood`] in `w`: `y·x / (1 + exp(y·wᵀx))`.
pub fn grad_log_likelihood(w: &[f64], x: &[f64], y: Feedback) -> Result<Vec<f64>> {
    let s = y.sign();
    let factor = s * sigmoid(-s * margin(w, x)?);
    Ok(x.iter().map(|xi| factor * xi).collect())
}
