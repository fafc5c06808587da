//! Runtime checks of the determinant identities behind the regret bound.
//!
//! (a) Telescoping: for every arm, `log det Z_i⁽ᵀ⁺¹⁾ − log det Z_i⁽¹⁾` equals
//!     `Σ_t log(1 + (β/2)·‖x_t‖²_{Z⁻¹})` over the slots where the arm was pulled.
//!     The left side is taken from a fresh Cholesky factorization, the right
//!     side from the per-slot log.
//! (b) Sum–min: after every slot `t`,
//!     `Σ_{s ≤ t} min((β/2)·‖x_s‖²_{Z⁻¹}, 1) ≤ 2·Σ_i log(det Z_i / det Z_i⁽¹⁾)`.

use super::Episode;
use crate::error::{Error, Result};

/// Relative tolerance of the telescoping check.
pub const TELESCOPING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixReport {
    pub telescoping_ok: bool,
    pub worst_relative_error: f64,
    pub sum_min_ok: bool,
    /// `min over t of 2·Σ log-det ratios − Σ min(...)`; non-negative when the inequality holds.
    pub worst_sum_min_margin: f64,
    pub slots_checked: usize,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.telescoping_ok && self.sum_min_ok
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn check_appendix_identities(episode: &Episode) -> Result<AppendixReport> {
    let records = &episode.records;
    if episode.design.is_empty() {
        return Err(Error::invalid("episode carries no design matrices"));
    }
    if episode.ratio_sum.len() != records.len() {
        return Err(Error::invalid(format!(
            "{} log-det entries logged for {} slots",
            episode.ratio_sum.len(),
            records.len()
        )));
    }
    let half_beta = episode.beta / 2.0;
    let arms = episode.design.len();

    let mut increments = vec![0.0; arms];
    let mut lhs = 0.0;
    let mut worst_margin = f64::INFINITY;
    for (record, &ratio_sum) in records.iter().zip(&episode.ratio_sum) {
        if record.arm >= arms {
            return Err(Error::invalid(format!("slot {} logs arm {}", record.t, record.arm)));
        }
        let a = half_beta * record.quad_inv;
        increments[record.arm] += a.ln_1p();
        lhs += a.min(1.0);
        worst_margin = worst_margin.min(2.0 * ratio_sum - lhs);
    }
    if records.is_empty() {
        worst_margin = 0.0;
    }

    let mut worst_rel = 0.0f64;
    for (z, logged) in episode.design.iter().zip(&increments) {
        let direct = z.direct_logdet()? - z.initial_logdet();
        worst_rel = worst_rel
            .max(relative_error(direct, *logged))
            .max(relative_error(z.logdet_ratio(), *logged));
    }

    Ok(AppendixReport {
        telescoping_ok: worst_rel <= TELESCOPING_TOL,
        worst_relative_error: worst_rel,
        sum_min_ok: worst_margin >= 0.0,
        worst_sum_min_margin: worst_margin,
        slots_checked: records.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{run_episode, RunConfig};
    use crate::policy::Algorithm;
    use crate::quadform::PsdMatrix;

    fn empty_episode() -> Episode {
        Episode {
            algorithm: Algorithm::Toof,
            seed: 0,
            beta: crate::policy::default_beta(),
            records: vec![],
            design: vec![PsdMatrix::new_scaled_identity(5, 1.0).unwrap(); 3],
            bound: vec![],
            ratio_sum: vec![],
            containment: None,
        }
    }

    #[test]
    fn empty_trace_passes_vacuously() {
        let report = check_appendix_identities(&empty_episode()).unwrap();
        assert!(report.passed());
        assert_eq!(report.worst_sum_min_margin, 0.0);
        assert_eq!(report.worst_relative_error, 0.0);
    }

    #[test]
    fn missing_logs_are_rejected() {
        let mut ep = empty_episode();
        ep.design.clear();
        assert!(matches!(check_appendix_identities(&ep), Err(Error::InvalidArgument(_))));
        let mut ep = empty_episode();
        ep.ratio_sum.push(0.0);
        assert!(check_appendix_identities(&ep).is_err());
    }

    #[test]
    fn single_update_reduces_to_determinant_lemma() {
        let cfg = RunConfig { arms: 1, horizon: 1, ..RunConfig::default() };
        let ep = run_episode(&cfg, Algorithm::Toof, 3).unwrap();
        let report = check_appendix_identities(&ep).unwrap();
        assert!(report.passed());
        let q = ep.records[0].quad_inv;
        let lemma = (1.0 + ep.beta / 2.0 * q).ln();
        let direct = ep.design[0].direct_logdet().unwrap();
        assert!((direct - lemma).abs() <= 1e-12);
    }

    #[test]
    fn canonical_runs_satisfy_identities() {
        let cfg = RunConfig::default();
        for alg in Algorithm::ALL {
            let ep = run_episode(&cfg, alg, 17).unwrap();
            let report = check_appendix_identities(&ep).unwrap();
            assert!(report.passed(), "{alg}: {report:?}");
            assert_eq!(report.slots_checked, 2000);
        }
    }

    #[test]
    fn corrupted_log_is_detected() {
        let cfg = RunConfig { arms: 3, horizon: 100, ..RunConfig::default() };
        let mut ep = run_episode(&cfg, Algorithm::Toof, 3).unwrap();
        ep.records[50].quad_inv *= 2.0;
        assert!(!check_appendix_identities(&ep).unwrap().telescoping_ok);
    }
}
