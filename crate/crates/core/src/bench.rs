//! Log-growth benchmark: raw versus pruned log size as a workload runs.

use std::fmt::Write as _;
use std::time::Instant;

use crate::call::FunctionId;
use crate::codec::{encode_binary, encode_image};
use crate::error::SessionError;
use crate::prune::prune;
use crate::replay::replay_digests;
use crate::session::Session;
use crate::workload::{generate, WorkloadProfile};

pub const DEFAULT_SAMPLE_POINTS: [u64; 10] = [5, 10, 20, 30, 45, 60, 75, 90, 105, 120];

pub const CSV_HEADER: &str = "frames,rawLogBytes,prunedLogBytes,pruneMillis,replayMillis,ckptBytes";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub frames: u64,
    pub raw_log_bytes: u64,
    pub pruned_log_bytes: u64,
    pub prune_millis: f64,
    pub replay_millis: f64,
    pub ckpt_bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// Timings are the best of this many runs.
const TIMING_RUNS: usize = 3;

fn best_millis(mut f: impl FnMut()) -> f64 {
    (0..TIMING_RUNS)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64() * 1e3
        })
        .fold(f64::INFINITY, f64::min)
}

/// Records the profile's workload and samples the log after the given
/// numbers of application frames (`SwapBuffers` calls). Log sizes are
/// binary-encoded sizes.
pub fn run_bench(profile: &WorkloadProfile, sample_points: &[u64]) -> Result<BenchReport, SessionError> {
    let mut points: Vec<u64> = sample_points.to_vec();
    points.sort_unstable();
    points.dedup();
    let last = points.last().copied().unwrap_or(0);
    let calls = generate(&WorkloadProfile {
        frames: last,
        ..profile.clone()
    });

    let mut session = Session::new();
    let mut rows = Vec::new();
    let mut swaps = 0;
    let mut next = points.iter().peekable();
    for call in &calls {
        session.record(call)?;
        if call.func != FunctionId::SwapBuffers {
            continue;
        }
        swaps += 1;
        if next.peek() != Some(&&swaps) {
            continue;
        }
        next.next();
        let log = session.log();
        let mut pruned = prune(log);
        let prune_millis = best_millis(|| pruned = prune(log));
        let mut replay_err = None;
        let replay_millis = best_millis(|| {
            if let Err(e) = replay_digests(&pruned, 1) {
                replay_err = Some(e);
            }
        });
        if let Some(e) = replay_err {
            return Err(e.into());
        }
        let raw_log_bytes = encode_binary(log).len() as u64;
        let pruned_log_bytes = encode_binary(&pruned).len() as u64;
        let ckpt_bytes = encode_image(&session.image()?).len() as u64;
        log::info!("frame {swaps}: raw {raw_log_bytes} pruned {pruned_log_bytes}");
        rows.push(BenchRow {
            frames: swaps,
            raw_log_bytes,
            pruned_log_bytes,
            prune_millis,
            replay_millis,
            ckpt_bytes,
        });
    }
    Ok(BenchReport { rows })
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{:.3},{}",
                r.frames, r.raw_log_bytes, r.pruned_log_bytes, r.prune_millis, r.replay_millis, r.ckpt_bytes
            );
        }
        out
    }

    /// Human-readable table with sizes in KB.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>7} {:>12} {:>12} {:>8} {:>10} {:>11} {:>11}",
            "frames", "raw KB", "pruned KB", "ratio", "prune ms", "replay ms", "ckpt KB"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>7} {:>12.1} {:>12.1} {:>7.1}x {:>10.3} {:>11.3} {:>11.1}",
                r.frames,
                r.raw_log_bytes as f64 / 1024.0,
                r.pruned_log_bytes as f64 / 1024.0,
                r.raw_log_bytes as f64 / r.pruned_log_bytes.max(1) as f64,
                r.prune_millis,
                r.replay_millis,
                r.ckpt_bytes as f64 / 1024.0,
            );
        }
        out
    }

    pub fn row(&self, frames: u64) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.frames == frames)
    }

    /// Slope of log(pruneMillis) against log(rawLogBytes).
    pub fn prune_time_exponent(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.prune_millis > 0.0 && r.raw_log_bytes > 0)
            .map(|r| (r.raw_log_bytes as f64, r.prune_millis))
            .collect();
        loglog_slope(&pts)
    }
}

/// Least-squares slope of ln(y) on ln(x). Needs two distinct x values.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    if logs.len() < 2 {
        return None;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let linear: Vec<_> = (1..6).map(|i| (i as f64, 3.0 * i as f64)).collect();
        assert!((loglog_slope(&linear).unwrap() - 1.0).abs() < 1e-12);
        let square: Vec<_> = (1..6).map(|i| (i as f64, (i * i) as f64)).collect();
        assert!((loglog_slope(&square).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(1.0, 1.0)]), None);
        assert_eq!(loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]), None);
    }

    #[test]
    fn small_bench_rows() {
        let profile = WorkloadProfile {
            upload_bytes: 256,
            ..Default::default()
        };
        let report = run_bench(&profile, &[4, 2, 8]).unwrap();
        let frames: Vec<u64> = report.rows.iter().map(|r| r.frames).collect();
        assert_eq!(frames, vec![2, 4, 8]);
        for w in report.rows.windows(2) {
            assert!(w[0].raw_log_bytes < w[1].raw_log_bytes);
        }
        for r in &report.rows {
            assert!(r.pruned_log_bytes < r.raw_log_bytes);
            assert!(r.ckpt_bytes > r.pruned_log_bytes);
        }
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 3);
        assert_eq!(report.to_table().lines().count(), 4);
    }
}
