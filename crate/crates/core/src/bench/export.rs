use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Episode, Summary};
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str =
    "algorithm,seed,t,arm,y,r_t,cum_regret,avg_regret,avg_reward,bonus,gamma,logdet_ratio";
pub const SUMMARY_HEADER: &str = "algorithm,t,mean_avg_regret,std_avg_regret,mean_avg_reward,std_avg_reward,mean_y,prop2_bound_mean,bound_satisfied_frac";

/// One row per slot per episode, in episode order.
pub fn write_trace_csv<W: Write>(out: &mut W, episodes: &[Episode]) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for ep in episodes {
        let mut happy = 0u64;
        for r in &ep.records {
            if r.y.is_happy() {
                happy += 1;
            }
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                ep.algorithm,
                ep.seed,
                r.t,
                r.arm,
                r.y.as_i32(),
                r.regret,
                r.cum_regret,
                r.cum_regret / r.t as f64,
                happy as f64 / r.t as f64,
                r.bonus,
                r.gamma,
                r.logdet_ratio,
            )?;
        }
    }
    Ok(())
}

/// One row per slot per algorithm.
pub fn write_summary_csv<W: Write>(out: &mut W, summary: &Summary) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in &summary.algorithms {
        for i in 0..s.horizon() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.algorithm,
                i + 1,
                s.mean_avg_regret[i],
                s.std_avg_regret[i],
                s.mean_avg_reward[i],
                s.std_avg_reward[i],
                s.mean_y[i],
                s.prop2_bound_mean[i],
                s.bound_satisfied_frac[i],
            )?;
        }
    }
    Ok(())
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn export_trace_csv(episodes: &[Episode], path: &Path) -> Result<()> {
    write_file(path, |out| write_trace_csv(out, episodes))
}

pub fn export_summary_csv(summary: &Summary, path: &Path) -> Result<()> {
    write_file(path, |out| write_summary_csv(out, summary))
}
