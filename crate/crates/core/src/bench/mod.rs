//! Experiment runner and analytics.
//!
//! An episode plays `T` slots of one algorithm against one seeded fog
//! environment. Every seed spawns three independent ChaCha streams (weights,
//! environment, feedback), so all algorithms run under the same seed face the
//! same true weights, the same task sequence and the same uniform variates
//! behind their feedback bits.

mod appendix;
mod check;
mod config;
mod export;
mod metrics;

pub use appendix::{check_appendix_identities, AppendixReport};
pub use check::{run_checks, CheckReport};
pub use config::{GammaModeName, RunConfig};
pub use export::{export_summary_csv, export_trace_csv, write_summary_csv, write_trace_csv};
pub use export::{SUMMARY_HEADER, TRACE_HEADER};
pub use metrics::{aggregate, average_regret, average_reward, prop2_bound, AlgorithmSummary, Summary};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feedback::{sample_feedback, Feedback};
use crate::fogsim::{FogEnvironment, FEATURE_DIM};
use crate::policy::{gamma_theoretical, Algorithm, Oracle, Policy, RoundRobin, Toof, ToofConfig};
use crate::quadform::PsdMatrix;

const WEIGHT_STREAM: u64 = 1;
const ENV_STREAM: u64 = 2;
const FEEDBACK_STREAM: u64 = 3;

/// Named sub-stream of a master seed.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub t: u64,
    pub algorithm: Algorithm,
    pub arm: usize,
    pub y: Feedback,
    pub regret: f64,
    pub cum_regret: f64,
    pub bonus: f64,
    pub gamma: f64,
    /// Chosen arm's design log-det ratio at the start of the slot.
    pub logdet_ratio: f64,
    /// `xᵀZ⁻¹x` of the chosen arm's features under its pre-update design matrix.
    pub quad_inv: f64,
}

/// Everything a single (algorithm, seed) run produces.
#[derive(Debug, Clone)]
pub struct Episode {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub beta: f64,
    pub records: Vec<SlotRecord>,
    /// Final per-arm design matrices `λI + Σ (β/2)·x·xᵀ` over the arm's pulls.
    pub design: Vec<PsdMatrix>,
    /// Regret bound after every slot, evaluated with the theoretical width.
    pub bound: Vec<f64>,
    /// `Σ_i log(det Z_i / det Z_i⁽¹⁾)` of the maintained design matrices after every slot.
    pub ratio_sum: Vec<f64>,
    /// For TOOF: whether every arm's true weights stayed inside its
    /// theoretical confidence ellipsoid after every slot.
    pub containment: Option<Containment>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub held: bool,
    /// `min over t, i of γ_i − ‖w̄_i − w_i‖²_{Z_i}`.
    pub worst_margin: f64,
}

impl Episode {
    pub fn horizon(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn average_regret(&self, t: u64) -> Result<f64> {
        average_regret(&self.records, t)
    }

    pub fn average_reward(&self, t: u64) -> Result<f64> {
        average_reward(&self.records, t)
    }
}

fn build_policy(
    algorithm: Algorithm,
    arms: usize,
    cfg: &ToofConfig,
    env: &FogEnvironment<ChaCha8Rng>,
) -> Result<Box<dyn Policy>> {
    Ok(match algorithm {
        Algorithm::Toof => Box::new(Toof::new(arms, FEATURE_DIM, *cfg)?),
        Algorithm::Greedy => Box::new(Toof::greedy(arms, FEATURE_DIM, *cfg)?),
        Algorithm::RoundRobin => Box::new(RoundRobin::new(arms)?),
        Algorithm::Optimal => Box::new(Oracle::new(env.weights().0.clone())?),
    })
}

/// Plays one episode.
pub fn run_episode(cfg: &RunConfig, algorithm: Algorithm, seed: u64) -> Result<Episode> {
    cfg.validate()?;
    let toof_cfg = cfg.toof_config();
    let arms = cfg.arms;
    let delta = cfg.delta;

    let mut weight_rng = substream(seed, WEIGHT_STREAM);
    let mut env = FogEnvironment::new(cfg.env, arms, &mut weight_rng, substream(seed, ENV_STREAM))?;
    let mut feedback_rng = substream(seed, FEEDBACK_STREAM);
    let mut policy = build_policy(algorithm, arms, &toof_cfg, &env)?;

    let half_beta = toof_cfg.beta / 2.0;
    let mut design: Vec<PsdMatrix> = (0..arms)
        .map(|_| PsdMatrix::new_scaled_identity(FEATURE_DIM, toof_cfg.lambda))
        .collect::<Result<_>>()?;
    let mut ratio_sum = 0.0;
    let mut ratio_max: f64 = 0.0;

    let mut containment = (algorithm == Algorithm::Toof).then_some(Containment {
        held: true,
        worst_margin: f64::INFINITY,
    });

    let horizon = cfg.horizon as usize;
    let mut records = Vec::with_capacity(horizon);
    let mut bound = Vec::with_capacity(horizon);
    let mut ratio_sums = Vec::with_capacity(horizon);
    let mut cum_regret = 0.0;

    let fail = |t: u64, arm: Option<usize>, e: Error| -> Error {
        let at = match arm {
            Some(a) => format!("{algorithm} seed {seed} slot {t} arm {a}"),
            None => format!("{algorithm} seed {seed} slot {t}"),
        };
        match e {
            Error::Numerics(msg) => Error::Numerics(format!("{at}: {msg}")),
            Error::InvalidArgument(msg) => Error::InvalidArgument(format!("{at}: {msg}")),
            other => other,
        }
    };

    for t in 1..=cfg.horizon {
        let obs = env.observe().map_err(|e| fail(t, None, e))?;
        let decision = policy.select(t, &obs.features).map_err(|e| fail(t, None, e))?;
        let arm = decision.arm;
        let x = &obs.features[arm];

        // one uniform variate per slot, whichever arm was chosen
        let y = sample_feedback(&env.weights().0[arm], x, &mut feedback_rng)
            .map_err(|e| fail(t, Some(arm), e))?;
        let regret = env.regret(&obs, arm).map_err(|e| fail(t, Some(arm), e))?;
        policy.observe(arm, x, y).map_err(|e| fail(t, Some(arm), e))?;

        let logdet_before = design[arm].logdet_ratio();
        let quad_inv = design[arm].quad_inv(x).map_err(|e| fail(t, Some(arm), e))?;
        design[arm]
            .rank_one_update(x, half_beta)
            .map_err(|e| fail(t, Some(arm), e))?;
        let ratio_after = design[arm].logdet_ratio();
        ratio_sum += ratio_after - logdet_before;
        ratio_max = ratio_max.max(ratio_after);

        let gamma_max = gamma_theoretical(t, ratio_max, toof_cfg.beta, toof_cfg.lambda, delta);
        bound.push(prop2_bound(gamma_max, toof_cfg.beta, t, ratio_sum));
        ratio_sums.push(ratio_sum);

        if let (Some(c), Some(states)) = (containment.as_mut(), policy.arm_states()) {
            let truth = env.weights();
            for (state, w) in states.iter().zip(truth.as_slice()) {
                let err = state.estimation_error(w).map_err(|e| fail(t, Some(arm), e))?;
                let width = gamma_theoretical(
                    t,
                    state.z.logdet_ratio(),
                    toof_cfg.beta,
                    toof_cfg.lambda,
                    delta,
                );
                let margin = width - err;
                c.worst_margin = c.worst_margin.min(margin);
                if margin < 0.0 {
                    c.held = false;
                }
            }
        }

        env.advance(arm, &obs.task).map_err(|e| fail(t, Some(arm), e))?;

        cum_regret += regret;
        records.push(SlotRecord {
            t,
            algorithm,
            arm,
            y,
            regret,
            cum_regret,
            bonus: decision.bonus,
            gamma: decision.gamma,
            logdet_ratio: logdet_before,
            quad_inv,
        });
    }

    Ok(Episode {
        algorithm,
        seed,
        beta: toof_cfg.beta,
        records,
        design,
        bound,
        ratio_sum: ratio_sums,
        containment,
    })
}

/// Every (algorithm, seed) episode of a configuration, ordered by algorithm then seed.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<Episode>> {
    cfg.validate()?;
    let mut algorithms = cfg.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();
    let mut episodes = Vec::with_capacity(algorithms.len() * cfg.seeds.len());
    for &algorithm in &algorithms {
        for &seed in &cfg.seeds {
            episodes.push(run_episode(cfg, algorithm, seed)?);
        }
    }
    Ok(episodes)
}
