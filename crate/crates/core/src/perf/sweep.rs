use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::device::ArrayConfig;
use crate::error::{Error, Result};

use super::model::{sustained_mttkrp, OpsConvention, PerfQuery, PerfReport};

/// Rank used at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankPolicy {
    /// Rank equals the point's channel count, so every lane pass is full.
    #[default]
    MatchChannels,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepQuery {
    pub dims: Vec<usize>,
    pub mode: usize,
    pub rank: RankPolicy,
    pub convention: OpsConvention,
    pub double_buffering: bool,
}

impl Default for SweepQuery {
    fn default() -> Self {
        Self {
            dims: vec![1_000_000; 3],
            mode: 0,
            rank: RankPolicy::MatchChannels,
            convention: OpsConvention::MacAsTwo,
            double_buffering: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub freq_hz: f64,
    pub channels: usize,
    pub report: PerfReport,
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub freq_hz: f64,
    pub channels: usize,
    pub rows: usize,
    pub word_cols: usize,
    pub peak_ops: f64,
    pub sustained_ops: f64,
    pub utilization: f64,
    pub total_cycles: u128,
    pub energy_j: f64,
}

pub const SWEEP_CSV_HEADER: &str =
    "freq_hz,channels,rows,word_cols,peak_ops,sustained_ops,utilization,total_cycles,energy_j";

impl SweepPoint {
    pub fn row(&self, cfg: &ArrayConfig) -> SweepRow {
        SweepRow {
            freq_hz: self.freq_hz,
            channels: self.channels,
            rows: cfg.rows,
            word_cols: cfg.word_cols(),
            peak_ops: self.report.peak_ops_per_s,
            sustained_ops: self.report.sustained_ops_per_s,
            utilization: self.report.utilization,
            total_cycles: self.report.total_cycles,
            energy_j: self.report.total_energy_j,
        }
    }
}

/// Evaluates every (frequency, channels) grid point, frequency-major.
/// Frequencies set both the compute and the write clock. Points that do not
/// form a valid configuration are skipped.
pub fn sweep(
    freqs_hz: &[f64],
    channels: &[usize],
    base: &ArrayConfig,
    query: &SweepQuery,
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &f in freqs_hz {
        for &ch in channels {
            let cfg = ArrayConfig {
                channels: ch,
                compute_freq_hz: f,
                write_freq_hz: f,
                ..base.clone()
            };
            if cfg.validate().is_err() {
                continue;
            }
            let rank = match query.rank {
                RankPolicy::MatchChannels => ch,
                RankPolicy::Fixed(r) => r,
            };
            let report = sustained_mttkrp(&PerfQuery {
                config: cfg,
                dims: query.dims.clone(),
                rank,
                mode: query.mode,
                convention: query.convention,
                double_buffering: query.double_buffering,
            })?;
            out.push(SweepPoint {
                freq_hz: f,
                channels: ch,
                report,
            });
        }
    }
    Ok(out)
}

/// `start, start + step, ...` up to and including `end` (within a relative
/// 1e-9 of a step).
pub fn float_range(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && end.is_finite() && step.is_finite()) {
        return Err(Error::invalid("range bounds must be finite"));
    }
    if end < start {
        return Err(Error::invalid(format!("inverted range {start}:{end}")));
    }
    if step <= 0.0 {
        return Err(Error::invalid("range step must be positive"));
    }
    let n = ((end - start) / step + 1e-9).floor() as u64;
    if n > 1_000_000 {
        return Err(Error::invalid("range has more than a million points"));
    }
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

pub fn int_range(start: usize, end: usize, step: usize) -> Result<Vec<usize>> {
    if end < start {
        return Err(Error::invalid(format!("inverted range {start}:{end}")));
    }
    if step == 0 {
        return Err(Error::invalid("range step must be positive"));
    }
    Ok((start..=end).step_by(step).collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(SWEEP_CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != SWEEP_CSV_HEADER {
        return Err(Error::invalid(format!(
            "unexpected sweep header {:?}",
            header.join(",")
        )));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}
