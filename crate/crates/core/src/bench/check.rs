use super::{check_appendix_identities, run_all, run_episode, AppendixReport, GammaModeName, RunConfig};
use crate::error::Result;
use crate::policy::Algorithm;

/// Allowance for Monte-Carlo noise on the `1 − δ` coverage targets.
pub const COVERAGE_SLACK: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub appendix: Vec<(Algorithm, u64, AppendixReport)>,
    /// Fraction of seeds where TOOF with theoretical widths kept every arm's
    /// truth inside its ellipsoid for the whole run.
    pub coverage_frac: f64,
    /// Fraction of those seeds with `R(T)` at or below the regret bound.
    pub bound_frac: f64,
    pub required_frac: f64,
}

impl CheckReport {
    pub fn appendix_ok(&self) -> bool {
        self.appendix.iter().all(|(_, _, r)| r.passed())
    }

    pub fn coverage_ok(&self) -> bool {
        self.coverage_frac >= self.required_frac
    }

    pub fn bound_ok(&self) -> bool {
        self.bound_frac >= self.required_frac
    }

    pub fn passed(&self) -> bool {
        self.appendix_ok() && self.coverage_ok() && self.bound_ok()
    }
}

/// Appendix identities on every configured episode, then confidence
/// coverage and the regret bound for TOOF with theoretical widths on every
/// configured seed.
pub fn run_checks(cfg: &RunConfig) -> Result<CheckReport> {
    let appendix = run_all(cfg)?
        .iter()
        .map(|ep| Ok((ep.algorithm, ep.seed, check_appendix_identities(ep)?)))
        .collect::<Result<Vec<_>>>()?;

    let theoretical = RunConfig {
        gamma_mode: GammaModeName::Theoretical,
        ..cfg.clone()
    };
    let mut covered = 0usize;
    let mut bounded = 0usize;
    for &seed in &cfg.seeds {
        let ep = run_episode(&theoretical, Algorithm::Toof, seed)?;
        if ep.containment.is_some_and(|c| c.held) {
            covered += 1;
        }
        let horizon = ep.horizon();
        if ep.average_regret(horizon)? <= ep.bound[horizon as usize - 1] {
            bounded += 1;
        }
    }
    let n = cfg.seeds.len() as f64;
    Ok(CheckReport {
        appendix,
        coverage_frac: covered as f64 / n,
        bound_frac: bounded as f64 / n,
        required_frac: 1.0 - cfg.delta - COVERAGE_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_check_passes() {
        let cfg = RunConfig {
            arms: 4,
            horizon: 200,
            seeds: (0..10).collect(),
            ..RunConfig::default()
        };
        let report = run_checks(&cfg).unwrap();
        assert_eq!(report.appendix.len(), 4 * 10);
        assert!((report.required_frac - 0.92).abs() < 1e-12);
        assert!(report.passed(), "{report:?}");
    }
}
