//! Synthetic fog network.
//!
//! Each node has a static CPU frequency and mean channel quality plus a FIFO
//! backlog. Every slot the task node draws one task, and each node's feature
//! vector is
//!
//! ```text
//! (data_kb / 15, complexity, min(queue, Q_max) / Q_max, cpu_freq, cqi) / √5
//! ```
//!
//! Every coordinate lies in `[0, 1]`, so the `√5` divisor keeps `‖x‖₂ ≤ 1`.
//! The first three features hurt a node's happiness and the last two help it,
//! which fixes the sign pattern of the true weights.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{FeatureVector, WeightVector};
use crate::policy::oracle_select;
use crate::quadform::{dot, norm};

/// Feature count of the fog model.
pub const FEATURE_DIM: usize = 5;
pub const FEATURE_NAMES: [&str; FEATURE_DIM] =
    ["task_length", "task_complexity", "queue_length", "cpu_frequency", "cqi"];
pub const MIN_DATA_KB: f64 = 1.0;
pub const MAX_DATA_KB: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvParams {
    pub q_max_kb: f64,
    pub service_kb_per_slot: f64,
    pub cqi_jitter: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            q_max_kb: 100.0,
            service_kb_per_slot: 6.0,
            cqi_jitter: 0.1,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_max_kb > 0.0 && self.q_max_kb.is_finite()) {
            return Err(Error::Config(format!("q_max_kb must be positive, got {}", self.q_max_kb)));
        }
        if !(self.service_kb_per_slot >= 0.0 && self.service_kb_per_slot.is_finite()) {
            return Err(Error::Config(format!(
                "service_kb_per_slot must be non-negative, got {}",
                self.service_kb_per_slot
            )));
        }
        if !(0.0..=1.0).contains(&self.cqi_jitter) {
            return Err(Error::Config(format!(
                "cqi_jitter must lie in [0, 1], got {}",
                self.cqi_jitter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub queue_kb: f64,
    pub cpu_freq: f64,
    pub cqi_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    pub data_kb: f64,
    pub complexity: f64,
}

/// Per-node true weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueWeights(pub Vec<WeightVector>);

impl TrueWeights {
    pub fn as_slice(&self) -> &[WeightVector] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotObservation {
    pub features: Vec<FeatureVector>,
    pub task: TaskSpec,
}

/// Sign of weight coordinate `j`: the first three features are harmful.
pub fn feature_sign(j: usize) -> f64 {
    if j < 3 {
        -1.0
    } else {
        1.0
    }
}

/// Uniform draw on `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Per node: coordinate magnitudes uniform on `(0, 1]` with the fixed sign
/// pattern, rescaled to a norm drawn uniformly from `[0.5, 1]`.
pub fn draw_true_weights<R: Rng + ?Sized>(rng: &mut R, arms: usize, dim: usize) -> Result<TrueWeights> {
    if arms == 0 {
        return Err(Error::invalid("at least one node is required"));
    }
    if dim == 0 {
        return Err(Error::invalid("weight dimension must be positive"));
    }
    let weights = (0..arms)
        .map(|_| {
            let raw: Vec<f64> = (0..dim).map(|j| feature_sign(j) * open_unit(rng)).collect();
            let radius = rng.random_range(0.5..=1.0);
            let n = norm(&raw);
            let scaled: Vec<f64> = raw.iter().map(|v| v / n * radius).collect();
            WeightVector::new(scaled)
        })
        .collect::<Result<_>>()?;
    Ok(TrueWeights(weights))
}

/// Lower end of the uniform CPU-frequency and mean-CQI draws.
pub const NODE_PARAM_MIN: f64 = 0.8;

/// Static node parameters: CPU frequency and mean CQI uniform on
/// `[NODE_PARAM_MIN, 1]`, empty queues.
pub fn draw_nodes<R: Rng + ?Sized>(rng: &mut R, arms: usize) -> Result<Vec<NodeState>> {
    if arms == 0 {
        return Err(Error::invalid("at least one node is required"));
    }
    Ok((0..arms)
        .map(|_| NodeState {
            queue_kb: 0.0,
            cpu_freq: rng.random_range(NODE_PARAM_MIN..=1.0),
            cqi_mean: rng.random_range(NODE_PARAM_MIN..=1.0),
        })
        .collect())
}

/// Draws the slot's task and every node's feature vector.
pub fn gen_slot<R: Rng + ?Sized>(
    rng: &mut R,
    nodes: &[NodeState],
    params: &EnvParams,
) -> Result<SlotObservation> {
    if nodes.is_empty() {
        return Err(Error::invalid("at least one node is required"));
    }
    let task = TaskSpec {
        data_kb: rng.random_range(MIN_DATA_KB..=MAX_DATA_KB),
        complexity: open_unit(rng),
    };
    let scale = (FEATURE_DIM as f64).sqrt();
    let features = nodes
        .iter()
        .map(|node| {
            let jitter = if params.cqi_jitter > 0.0 {
                rng.random_range(-params.cqi_jitter..=params.cqi_jitter)
            } else {
                0.0
            };
            let raw = [
                task.data_kb / MAX_DATA_KB,
                task.complexity,
                node.queue_kb.min(params.q_max_kb) / params.q_max_kb,
                node.cpu_freq,
                node.cqi_mean + jitter,
            ];
            FeatureVector::new(raw.iter().map(|v| v.clamp(0.0, 1.0) / scale).collect())
        })
        .collect::<Result<_>>()?;
    Ok(SlotObservation { features, task })
}

/// The chosen node receives the task, then every node serves
/// `service_kb_per_slot · cpu_freq`, floored at an empty queue.
pub fn advance_queues(
    nodes: &mut [NodeState],
    chosen: usize,
    task: &TaskSpec,
    params: &EnvParams,
) -> Result<()> {
    let k = nodes.len();
    let node = nodes
        .get_mut(chosen)
        .ok_or_else(|| Error::invalid(format!("node {chosen} out of range for {k} nodes")))?;
    node.queue_kb += task.data_kb;
    for node in nodes.iter_mut() {
        node.queue_kb = (node.queue_kb - params.service_kb_per_slot * node.cpu_freq).max(0.0);
    }
    Ok(())
}

/// `w_{i*}ᵀx_{i*} − w_chosenᵀx_chosen` with `i*` the oracle choice.
pub fn instantaneous_regret(
    weights: &TrueWeights,
    obs: &SlotObservation,
    chosen: usize,
) -> Result<f64> {
    let k = weights.len();
    if chosen >= k || chosen >= obs.features.len() {
        return Err(Error::invalid(format!("arm {chosen} out of range for {k} arms")));
    }
    let best = oracle_select(weights.as_slice(), &obs.features)?;
    let value = |i: usize| dot(&weights.0[i], &obs.features[i]);
    Ok((value(best) - value(chosen)).max(0.0))
}

/// One run's environment: true weights, node states, and the stream feeding
/// slot generation.
#[derive(Debug, Clone)]
pub struct FogEnvironment<R> {
    params: EnvParams,
    weights: TrueWeights,
    nodes: Vec<NodeState>,
    rng: R,
}

impl<R: Rng> FogEnvironment<R> {
    /// Weights come from `weight_rng`; node statics and all slot randomness from `env_rng`.
    pub fn new<W: Rng + ?Sized>(
        params: EnvParams,
        arms: usize,
        weight_rng: &mut W,
        mut env_rng: R,
    ) -> Result<Self> {
        params.validate()?;
        let weights = draw_true_weights(weight_rng, arms, FEATURE_DIM)?;
        let nodes = draw_nodes(&mut env_rng, arms)?;
        Ok(Self {
            params,
            weights,
            nodes,
            rng: env_rng,
        })
    }

    pub fn weights(&self) -> &TrueWeights {
        &self.weights
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn observe(&mut self) -> Result<SlotObservation> {
        gen_slot(&mut self.rng, &self.nodes, &self.params)
    }

    pub fn regret(&self, obs: &SlotObservation, chosen: usize) -> Result<f64> {
        instantaneous_regret(&self.weights, obs, chosen)
    }

    pub fn advance(&mut self, chosen: usize, task: &TaskSpec) -> Result<()> {
        advance_queues(&mut self.nodes, chosen, task, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn canonical_weights_have_sign_pattern() {
        let w = draw_true_weights(&mut rng(1), 10, 5).unwrap();
        assert_eq!(w.len(), 10);
        for wi in w.as_slice() {
            let n = norm(wi);
            assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&n));
            assert!(wi[0] <= 0.0 && wi[1] <= 0.0 && wi[2] <= 0.0);
            assert!(wi[3] >= 0.0 && wi[4] >= 0.0);
        }
        assert_ne!(w, draw_true_weights(&mut rng(2), 10, 5).unwrap());
        assert!(draw_true_weights(&mut rng(1), 0, 5).is_err());
    }

    #[test]
    fn data_length_distribution() {
        let mut r = rng(3);
        let nodes = draw_nodes(&mut r, 2).unwrap();
        let params = EnvParams::default();
        let n = 100_000;
        let (mut lo, mut hi, mut sum) = (f64::MAX, f64::MIN, 0.0);
        for _ in 0..n {
            let obs = gen_slot(&mut r, &nodes, &params).unwrap();
            lo = lo.min(obs.task.data_kb);
            hi = hi.max(obs.task.data_kb);
            sum += obs.task.data_kb;
            assert!(obs.features.iter().all(|x| norm(x) <= 1.0));
        }
        assert!(lo >= 1.0 && hi <= 15.0);
        assert!((sum / n as f64 - 8.0).abs() <= 0.1);
    }

    #[test]
    fn slot_generation_is_deterministic() {
        let nodes = draw_nodes(&mut rng(4), 5).unwrap();
        let params = EnvParams::default();
        let a = gen_slot(&mut rng(9), &nodes, &params).unwrap();
        let b = gen_slot(&mut rng(9), &nodes, &params).unwrap();
        assert_eq!(a, b);
        assert!(gen_slot(&mut rng(9), &[], &params).is_err());
    }

    #[test]
    fn feature_layout() {
        let nodes = [NodeState {
            queue_kb: 250.0,
            cpu_freq: 0.5,
            cqi_mean: 0.7,
        }];
        let params = EnvParams {
            cqi_jitter: 0.0,
            ..EnvParams::default()
        };
        let obs = gen_slot(&mut rng(5), &nodes, &params).unwrap();
        let s = 5f64.sqrt();
        let x = &obs.features[0];
        assert!((x[0] - obs.task.data_kb / 15.0 / s).abs() < 1e-15);
        assert!((x[1] - obs.task.complexity / s).abs() < 1e-15);
        assert!((x[2] - 1.0 / s).abs() < 1e-15);
        assert!((x[3] - 0.5 / s).abs() < 1e-15);
        assert!((x[4] - 0.7 / s).abs() < 1e-15);
    }

    #[test]
    fn queue_dynamics() {
        let params = EnvParams::default();
        let task = TaskSpec {
            data_kb: 15.0,
            complexity: 0.5,
        };
        let mut idle = vec![
            NodeState { queue_kb: 0.0, cpu_freq: 1.0, cqi_mean: 0.5 },
            NodeState { queue_kb: 0.0, cpu_freq: 0.3, cqi_mean: 0.5 },
        ];
        let no_arrival = TaskSpec { data_kb: 0.0, complexity: 0.5 };
        advance_queues(&mut idle, 0, &no_arrival, &params).unwrap();
        assert!(idle.iter().all(|n| n.queue_kb == 0.0));

        let mut nodes = vec![
            NodeState { queue_kb: 10.0, cpu_freq: 1.0, cqi_mean: 0.5 },
            NodeState { queue_kb: 10.0, cpu_freq: 0.5, cqi_mean: 0.5 },
        ];
        advance_queues(&mut nodes, 0, &task, &params).unwrap();
        assert!((nodes[0].queue_kb - 19.0).abs() < 1e-12);
        assert!((nodes[1].queue_kb - 7.0).abs() < 1e-12);
        assert!(advance_queues(&mut nodes, 2, &task, &params).is_err());
    }

    #[test]
    fn regret_examples() {
        let weights = TrueWeights(vec![
            WeightVector::new(vec![0.3, 0.0]).unwrap(),
            WeightVector::new(vec![-0.1, 0.0]).unwrap(),
        ]);
        let obs = SlotObservation {
            features: vec![
                FeatureVector::new(vec![1.0, 0.0]).unwrap(),
                FeatureVector::new(vec![1.0, 0.0]).unwrap(),
            ],
            task: TaskSpec { data_kb: 1.0, complexity: 1.0 },
        };
        assert_eq!(instantaneous_regret(&weights, &obs, 0).unwrap(), 0.0);
        assert!((instantaneous_regret(&weights, &obs, 1).unwrap() - 0.4).abs() < 1e-15);
        assert!(instantaneous_regret(&weights, &obs, 2).is_err());
    }

    #[test]
    fn env_params_validation() {
        assert!(EnvParams::default().validate().is_ok());
        assert!(EnvParams { q_max_kb: 0.0, ..Default::default() }.validate().is_err());
        assert!(EnvParams { cqi_jitter: 1.5, ..Default::default() }.validate().is_err());
        assert!(EnvParams { service_kb_per_slot: -1.0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn regret_matches_exhaustive_scan(seed in 0u64..10_000, k in 1usize..12) {
            let mut r = rng(seed);
            let weights = draw_true_weights(&mut r, k, 5).unwrap();
            let mut nodes = draw_nodes(&mut r, k).unwrap();
            for n in nodes.iter_mut() {
                n.queue_kb = r.random_range(0.0..150.0);
            }
            let obs = gen_slot(&mut r, &nodes, &EnvParams::default()).unwrap();
            let values: Vec<f64> = (0..k).map(|i| dot(&weights.0[i], &obs.features[i])).collect();
            let best = values.iter().cloned().fold(f64::MIN, f64::max);
            for chosen in 0..k {
                let r_t = instantaneous_regret(&weights, &obs, chosen).unwrap();
                prop_assert!((r_t - (best - values[chosen])).abs() <= 1e-15);
                prop_assert!((0.0..=2.0).contains(&r_t));
            }
        }
    }
}
