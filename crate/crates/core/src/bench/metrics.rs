use std::collections::BTreeMap;

use super::{Episode, SlotRecord};
use crate::error::{Error, Result};
use crate::policy::Algorithm;

fn check_prefix(records: &[SlotRecord], t: u64) -> Result<usize> {
    if t == 0 || t as usize > records.len() {
        return Err(Error::invalid(format!(
            "prefix length {t} outside 1..={}",
            records.len()
        )));
    }
    Ok(t as usize)
}

/// `R(t) = (1/t) Σ_{s ≤ t} r_s`.
pub fn average_regret(records: &[SlotRecord], t: u64) -> Result<f64> {
    let n = check_prefix(records, t)?;
    Ok(records[..n].iter().map(|r| r.regret).sum::<f64>() / n as f64)
}

/// `R̃(t) = (1/t) Σ_{s ≤ t} 𝟙{y_s = +1}`.
pub fn average_reward(records: &[SlotRecord], t: u64) -> Result<f64> {
    let n = check_prefix(records, t)?;
    let happy = records[..n].iter().filter(|r| r.y.is_happy()).count();
    Ok(happy as f64 / n as f64)
}

/// `4·√((γ/(β·T))·Σ_i log(det Z_i / det Z_i⁽¹⁾))`, with `γ` the largest arm width.
pub fn prop2_bound(gamma_max: f64, beta: f64, horizon: u64, logdet_ratio_sum: f64) -> f64 {
    4.0 * (gamma_max / (beta * horizon as f64) * logdet_ratio_sum.max(0.0)).sqrt()
}

/// Cross-seed curves of one algorithm, indexed by `t − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub mean_avg_regret: Vec<f64>,
    pub std_avg_regret: Vec<f64>,
    pub mean_avg_reward: Vec<f64>,
    pub std_avg_reward: Vec<f64>,
    /// Mean over seeds of `(1/t) Σ y_s` with `y ∈ {+1, −1}`.
    pub mean_y: Vec<f64>,
    pub prop2_bound_mean: Vec<f64>,
    /// Fraction of seeds with `R(t) ≤` that seed's regret bound.
    pub bound_satisfied_frac: Vec<f64>,
    /// Fraction of seeds whose confidence ellipsoids contained the truth throughout (TOOF only).
    pub containment_frac: Option<f64>,
}

impl AlgorithmSummary {
    pub fn horizon(&self) -> usize {
        self.mean_avg_regret.len()
    }

    /// Standard error of the mean of `R(t)`.
    pub fn sem_avg_regret(&self, t: u64) -> f64 {
        self.std_avg_regret[t as usize - 1] / (self.seeds.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub horizon: u64,
    pub algorithms: Vec<AlgorithmSummary>,
}

impl Summary {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|s| s.algorithm == algorithm)
    }
}

/// Pointwise mean and sample (n − 1) standard deviation.
fn mean_std(columns: &[Vec<f64>], horizon: usize) -> (Vec<f64>, Vec<f64>) {
    let n = columns.len() as f64;
    let mut mean = vec![0.0; horizon];
    let mut std = vec![0.0; horizon];
    for i in 0..horizon {
        let m = columns.iter().map(|c| c[i]).sum::<f64>() / n;
        mean[i] = m;
        if columns.len() > 1 {
            let ss = columns.iter().map(|c| (c[i] - m).powi(2)).sum::<f64>();
            std[i] = (ss / (n - 1.0)).sqrt();
        }
    }
    (mean, std)
}

fn prefix_means(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

/// Folds episodes into per-algorithm curves. Algorithms come out in their
/// canonical order and seeds in input order, so the result does not depend
/// on how episodes were scheduled as long as each algorithm's seeds arrive
/// in the same order.
pub fn aggregate(episodes: &[Episode]) -> Result<Summary> {
    let first = episodes
        .first()
        .ok_or_else(|| Error::invalid("no episodes to aggregate"))?;
    let horizon = first.records.len();
    if horizon == 0 {
        return Err(Error::invalid("episodes have no slots"));
    }
    let mut groups: BTreeMap<Algorithm, Vec<&Episode>> = BTreeMap::new();
    for ep in episodes {
        if ep.records.len() != horizon || ep.bound.len() != horizon {
            return Err(Error::invalid(format!(
                "{} seed {} has horizon {}, expected {horizon}",
                ep.algorithm,
                ep.seed,
                ep.records.len()
            )));
        }
        groups.entry(ep.algorithm).or_default().push(ep);
    }

    let algorithms = groups
        .into_iter()
        .map(|(algorithm, eps)| {
            let regret: Vec<Vec<f64>> = eps
                .iter()
                .map(|e| prefix_means(e.records.iter().map(|r| r.regret)))
                .collect();
            let reward: Vec<Vec<f64>> = eps
                .iter()
                .map(|e| prefix_means(e.records.iter().map(|r| if r.y.is_happy() { 1.0 } else { 0.0 })))
                .collect();
            let signed: Vec<Vec<f64>> = eps
                .iter()
                .map(|e| prefix_means(e.records.iter().map(|r| r.y.sign())))
                .collect();
            let bounds: Vec<Vec<f64>> = eps.iter().map(|e| e.bound.clone()).collect();

            let (mean_avg_regret, std_avg_regret) = mean_std(&regret, horizon);
            let (mean_avg_reward, std_avg_reward) = mean_std(&reward, horizon);
            let (mean_y, _) = mean_std(&signed, horizon);
            let (prop2_bound_mean, _) = mean_std(&bounds, horizon);
            let n = eps.len() as f64;
            let bound_satisfied_frac = (0..horizon)
                .map(|i| {
                    regret
                        .iter()
                        .zip(&bounds)
                        .filter(|(r, b)| r[i] <= b[i])
                        .count() as f64
                        / n
                })
                .collect();
            let containment: Vec<bool> = eps
                .iter()
                .filter_map(|e| e.containment.map(|c| c.held))
                .collect();
            let containment_frac = (!containment.is_empty())
                .then(|| containment.iter().filter(|h| **h).count() as f64 / containment.len() as f64);

            AlgorithmSummary {
                algorithm,
                seeds: eps.iter().map(|e| e.seed).collect(),
                mean_avg_regret,
                std_avg_regret,
                mean_avg_reward,
                std_avg_reward,
                mean_y,
                prop2_bound_mean,
                bound_satisfied_frac,
                containment_frac,
            }
        })
        .collect();

    Ok(Summary {
        horizon: horizon as u64,
        algorithms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{run_episode, RunConfig};
    use crate::feedback::Feedback;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(t: u64, regret: f64, y: Feedback) -> SlotRecord {
        SlotRecord {
            t,
            algorithm: Algorithm::Toof,
            arm: 0,
            y,
            regret,
            cum_regret: 0.0,
            bonus: 0.0,
            gamma: 0.0,
            logdet_ratio: 0.0,
            quad_inv: 0.0,
        }
    }

    #[test]
    fn trivial_prefix_means() {
        let recs: Vec<_> = (1..=10).map(|t| record(t, 0.0, Feedback::Happy)).collect();
        assert_eq!(average_regret(&recs, 10).unwrap(), 0.0);
        assert_eq!(average_reward(&recs, 10).unwrap(), 1.0);
        assert!(average_regret(&recs, 0).is_err());
        assert!(average_reward(&recs, 11).is_err());
    }

    #[test]
    fn prefix_means_match_naive_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let recs: Vec<_> = (1..=500)
            .map(|t| {
                let y = if rng.random::<bool>() { Feedback::Happy } else { Feedback::Unhappy };
                record(t, rng.random_range(0.0..2.0), y)
            })
            .collect();
        for t in [1u64, 7, 100, 500] {
            let mut sum = 0.0;
            let mut happy = 0.0;
            for r in &recs[..t as usize] {
                sum += r.regret;
                if r.y == Feedback::Happy {
                    happy += 1.0;
                }
            }
            assert!((average_regret(&recs, t).unwrap() - sum / t as f64).abs() <= 1e-12);
            assert!((average_reward(&recs, t).unwrap() - happy / t as f64).abs() <= 1e-12);
        }
    }

    #[test]
    fn prop2_bound_examples() {
        assert_eq!(prop2_bound(500.0, 0.134471, 100, 0.0), 0.0);
        let b = prop2_bound(1.0, 0.134471, 100, 1.0);
        assert!((b - 4.0 * (1.0f64 / 13.4471).sqrt()).abs() < 1e-12);
        assert!((b - 1.0909).abs() < 1e-4);
        let b4 = prop2_bound(1.0, 0.134471, 400, 1.0);
        assert!((b / b4 - 2.0).abs() < 1e-12);
    }

    fn small_cfg() -> RunConfig {
        RunConfig {
            arms: 3,
            horizon: 60,
            ..RunConfig::default()
        }
    }

    #[test]
    fn single_seed_has_zero_spread() {
        let eps = vec![run_episode(&small_cfg(), Algorithm::Toof, 1).unwrap()];
        let s = aggregate(&eps).unwrap();
        let a = s.get(Algorithm::Toof).unwrap();
        assert_eq!(a.horizon(), 60);
        assert!(a.std_avg_regret.iter().all(|v| *v == 0.0));
        assert!(a.std_avg_reward.iter().all(|v| *v == 0.0));
        assert_eq!(a.mean_avg_regret[59], eps[0].average_regret(60).unwrap());
        assert_eq!(a.containment_frac, Some(1.0));
    }

    #[test]
    fn duplicated_seeds_have_zero_spread() {
        let one = run_episode(&small_cfg(), Algorithm::Greedy, 4).unwrap();
        let s1 = aggregate(std::slice::from_ref(&one)).unwrap();
        let s2 = aggregate(&[one.clone(), one.clone(), one]).unwrap();
        let (a, b) = (&s1.algorithms[0], &s2.algorithms[0]);
        for i in 0..60 {
            assert!((a.mean_avg_regret[i] - b.mean_avg_regret[i]).abs() <= 1e-15);
            assert!(b.std_avg_regret[i] <= 1e-15);
        }
        assert_eq!(b.containment_frac, None);
    }

    #[test]
    fn reward_and_signed_mean_are_consistent() {
        let cfg = small_cfg();
        let eps: Vec<_> = (0..5).map(|s| run_episode(&cfg, Algorithm::RoundRobin, s).unwrap()).collect();
        let s = aggregate(&eps).unwrap();
        let a = &s.algorithms[0];
        for i in 0..60 {
            assert!((a.mean_y[i] - (2.0 * a.mean_avg_reward[i] - 1.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn mismatched_horizons_are_rejected() {
        let a = run_episode(&small_cfg(), Algorithm::Toof, 1).unwrap();
        let cfg = RunConfig { horizon: 30, ..small_cfg() };
        let b = run_episode(&cfg, Algorithm::Toof, 2).unwrap();
        assert!(matches!(aggregate(&[a, b]), Err(Error::InvalidArgument(_))));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn averaging_reduces_spread() {
        let cfg = RunConfig { arms: 5, horizon: 300, ..RunConfig::default() };
        let eps: Vec<_> = (0..50).map(|s| run_episode(&cfg, Algorithm::Toof, s).unwrap()).collect();
        let s = aggregate(&eps).unwrap();
        let a = &s.algorithms[0];
        // standard error of the 50-seed mean is the single-seed spread over √50
        let sem = a.sem_avg_regret(300);
        assert!((sem * 50f64.sqrt() - a.std_avg_regret[299]).abs() <= 1e-12);
        let roughness = |c: &[f64]| c.windows(2).skip(50).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
        let single = prefix_means(eps[0].records.iter().map(|r| r.regret));
        assert!(roughness(&a.mean_avg_regret) < roughness(&single));
    }
}
