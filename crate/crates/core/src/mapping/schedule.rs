use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::device::ArrayConfig;
use crate::error::{Error, Result};

/// Wavelength lanes per rank slot in the scaling stage: two signs of the
/// Hadamard value times two base-`2^word_bits` digits of its magnitude.
pub const LANES_PER_RANK: usize = 4;

/// Decodes a scaling-stage lane into (rank, negative, digit).
pub fn decode_lane(lane: usize) -> (usize, bool, u32) {
    (
        lane / LANES_PER_RANK,
        (lane / 2) % 2 == 1,
        (lane % 2) as u32,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Write,
    Cp1,
    Cp2Cp3,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Write => "WRITE",
            OpKind::Cp1 => "CP1",
            OpKind::Cp2Cp3 => "CP2CP3",
        }
    }
}

/// Sign class of tensor elements stored by a scaling-stage write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn matches(self, v: i64) -> bool {
        match self {
            Sign::Positive => v > 0,
            Sign::Negative => v < 0,
        }
    }

    pub fn factor(self) -> i64 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// What an op reads or stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    /// Write `|S[j, r]|` to word `(rows.start + r - ranks.start, cols.start + j - idx.start)`.
    Stationary {
        idx: Range<usize>,
        ranks: Range<usize>,
    },
    /// Write `|X[i, p]|` (0 unless its sign matches) to word
    /// `(rows.start + p - pairs.start, cols.start + i - outputs.start)`.
    Tensor {
        outputs: Range<usize>,
        pairs: Range<usize>,
        sign: Sign,
    },
    /// Stream `|T[idx, r]|` for `r` in `ranks` onto the stationary rank rows.
    Streamed { idx: usize, ranks: Range<usize> },
    /// Stream the Hadamard digits of `lanes` onto every stored pair row.
    Lanes { lanes: Range<usize> },
}

/// Channel assignment of a compute op.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMap {
    /// Driven row `rows.start + t` carries only channel `t`.
    Interleaved,
    /// Every driven row carries channels `0..n`.
    Broadcast(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveOp {
    pub kind: OpKind,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub operand: Operand,
    /// Channel plan; `None` for writes.
    pub channels: Option<ChannelMap>,
    /// Index of the write whose words a compute op reads.
    pub depends_on: Option<usize>,
}

impl PrimitiveOp {
    pub fn is_compute(&self) -> bool {
        self.kind != OpKind::Write
    }

    /// `(row, channel)` pairs driven by a compute op.
    pub fn drives(&self) -> Vec<(usize, usize)> {
        match self.channels {
            None => Vec::new(),
            Some(ChannelMap::Interleaved) => self
                .rows
                .clone()
                .enumerate()
                .map(|(t, row)| (row, t))
                .collect(),
            Some(ChannelMap::Broadcast(n)) => self
                .rows
                .clone()
                .flat_map(|row| (0..n).map(move |c| (row, c)))
                .collect(),
        }
    }

    /// Distinct channels used.
    pub fn channel_count(&self) -> usize {
        match self.channels {
            None => 0,
            Some(ChannelMap::Interleaved) => self.rows.len(),
            Some(ChannelMap::Broadcast(n)) => n,
        }
    }

    /// Largest number of rows sharing one channel, which is the number of
    /// products summed on each (column, channel) readout.
    pub fn fan_in(&self) -> usize {
        let mut per_channel = vec![0usize; self.channel_count()];
        for (_, c) in self.drives() {
            per_channel[c] += 1;
        }
        per_channel.into_iter().max().unwrap_or(0)
    }

    /// Word-channel slots occupied by one compute cycle.
    pub fn active_slots(&self) -> u128 {
        if !self.is_compute() {
            return 0;
        }
        self.cols.len() as u128 * self.drives().len() as u128
    }

    /// ADC full scale: the largest accumulation the op's operands allow.
    pub fn full_scale(&self, cfg: &ArrayConfig) -> f64 {
        let m = cfg.max_level() as f64;
        self.fan_in().max(1) as f64 * m * m
    }

    pub fn words(&self) -> u64 {
        if self.kind == OpKind::Write {
            (self.rows.len() * self.cols.len()) as u64
        } else {
            0
        }
    }
}

/// Operand extents a schedule was compiled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    /// Rows of the output factor (`I`).
    pub outputs: usize,
    /// Rows of the column-stationary factor (`J`).
    pub stationary: usize,
    /// Rows of the streamed factor (`K`).
    pub streamed: usize,
    pub rank: usize,
}

impl Geometry {
    /// Pair index `p = j + J * k` of the Khatri-Rao rows.
    pub fn pairs(&self) -> usize {
        self.stationary * self.streamed
    }

    pub fn lanes(&self) -> usize {
        self.rank * LANES_PER_RANK
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub geometry: Geometry,
    pub ops: Vec<PrimitiveOp>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScheduleTotals {
    pub write_ops: u64,
    pub cp1_cycles: u64,
    pub cp2_cycles: u64,
    pub words_written: u64,
    pub active_slots: u128,
}

impl ScheduleTotals {
    pub fn compute_cycles(&self) -> u64 {
        self.cp1_cycles + self.cp2_cycles
    }
}

fn chunks(n: usize, size: usize) -> impl Iterator<Item = Range<usize>> {
    (0..n.div_ceil(size)).map(move |c| c * size..((c + 1) * size).min(n))
}

impl Schedule {
    /// Hadamard stage: the stationary factor's rows occupy word columns (one
    /// row per column) with rank slots down the wordlines; each streamed row
    /// is broadcast with one wavelength per wordline.
    pub fn push_cp1(&mut self, cfg: &ArrayConfig) {
        let g = self.geometry;
        for idx in chunks(g.stationary, cfg.word_cols()) {
            for ranks in chunks(g.rank, cfg.rows) {
                let write = self.ops.len();
                let cols = 0..idx.len();
                self.ops.push(PrimitiveOp {
                    kind: OpKind::Write,
                    rows: 0..ranks.len(),
                    cols: cols.clone(),
                    operand: Operand::Stationary {
                        idx: idx.clone(),
                        ranks: ranks.clone(),
                    },
                    channels: None,
                    depends_on: None,
                });
                for k in 0..g.streamed {
                    for pass in chunks(ranks.len(), cfg.channels) {
                        self.ops.push(PrimitiveOp {
                            kind: OpKind::Cp1,
                            rows: pass.clone(),
                            cols: cols.clone(),
                            operand: Operand::Streamed {
                                idx: k,
                                ranks: ranks.start + pass.start..ranks.start + pass.end,
                            },
                            channels: Some(ChannelMap::Interleaved),
                            depends_on: Some(write),
                        });
                    }
                }
            }
        }
    }

    /// Scaling and accumulation stage, output-mode-major: tensor elements are
    /// stored with outputs across word columns and pairs down the wordlines;
    /// Hadamard digits are broadcast so each column sums its pairs per lane.
    pub fn push_cp2_cp3(&mut self, cfg: &ArrayConfig) {
        let g = self.geometry;
        for outputs in chunks(g.outputs, cfg.word_cols()) {
            for pairs in chunks(g.pairs(), cfg.rows) {
                for sign in [Sign::Positive, Sign::Negative] {
                    let write = self.ops.len();
                    let rows = 0..pairs.len();
                    let cols = 0..outputs.len();
                    self.ops.push(PrimitiveOp {
                        kind: OpKind::Write,
                        rows: rows.clone(),
                        cols: cols.clone(),
                        operand: Operand::Tensor {
                            outputs: outputs.clone(),
                            pairs: pairs.clone(),
                            sign,
                        },
                        channels: None,
                        depends_on: None,
                    });
                    for lanes in chunks(g.lanes(), cfg.channels) {
                        self.ops.push(PrimitiveOp {
                            kind: OpKind::Cp2Cp3,
                            rows: rows.clone(),
                            cols: cols.clone(),
                            channels: Some(ChannelMap::Broadcast(lanes.len())),
                            operand: Operand::Lanes { lanes },
                            depends_on: Some(write),
                        });
                    }
                }
            }
        }
    }

    pub fn totals(&self) -> ScheduleTotals {
        let mut t = ScheduleTotals::default();
        for op in &self.ops {
            match op.kind {
                OpKind::Write => {
                    t.write_ops += 1;
                    t.words_written += op.words();
                }
                OpKind::Cp1 => t.cp1_cycles += 1,
                OpKind::Cp2Cp3 => t.cp2_cycles += 1,
            }
            t.active_slots += op.active_slots();
        }
        t
    }

    /// Checks shapes against `cfg`, single fan-in of every Hadamard op, and
    /// that each compute op reads exactly the words of the latest write.
    pub fn validate(&self, cfg: &ArrayConfig) -> Result<()> {
        let g = self.geometry;
        let fail = |i: usize, m: String| Err(Error::invalid(format!("schedule op {i}: {m}")));
        let within = |r: &Range<usize>, n: usize| r.start < r.end && r.end <= n;
        let mut last_write: Option<usize> = None;
        for (i, op) in self.ops.iter().enumerate() {
            if !within(&op.rows, cfg.rows) || !within(&op.cols, cfg.word_cols()) {
                return fail(
                    i,
                    format!("tile {:?}x{:?} outside the array", op.rows, op.cols),
                );
            }
            if op.channel_count() > cfg.channels {
                return fail(i, format!("uses {} channels", op.channel_count()));
            }
            match (&op.kind, &op.operand) {
                (OpKind::Write, Operand::Stationary { idx, ranks }) => {
                    if !within(idx, g.stationary) || !within(ranks, g.rank) {
                        return fail(i, "stationary operand out of range".into());
                    }
                    if idx.len() != op.cols.len() || ranks.len() != op.rows.len() {
                        return fail(i, "stationary operand does not fill its tile".into());
                    }
                }
                (OpKind::Write, Operand::Tensor { outputs, pairs, .. }) => {
                    if !within(outputs, g.outputs) || !within(pairs, g.pairs()) {
                        return fail(i, "tensor operand out of range".into());
                    }
                    if outputs.len() != op.cols.len() || pairs.len() != op.rows.len() {
                        return fail(i, "tensor operand does not fill its tile".into());
                    }
                }
                (OpKind::Cp1, Operand::Streamed { idx, ranks }) => {
                    let Some(w) = last_write else {
                        return fail(i, "compute before any write".into());
                    };
                    let wop = &self.ops[w];
                    let Operand::Stationary { ranks: wr, .. } = &wop.operand else {
                        return fail(i, "CP1 must follow a stationary write".into());
                    };
                    if *idx >= g.streamed || op.channels != Some(ChannelMap::Interleaved) {
                        return fail(i, "malformed CP1 stream".into());
                    }
                    let offset = wr.start as isize - wop.rows.start as isize;
                    let expect = (op.rows.start as isize + offset) as usize
                        ..(op.rows.end as isize + offset) as usize;
                    if *ranks != expect
                        || op.rows.end > wop.rows.end
                        || op.rows.start < wop.rows.start
                    {
                        return fail(i, "CP1 ranks do not match the stored rank rows".into());
                    }
                    if op.cols != wop.cols {
                        return fail(i, "CP1 columns differ from the stored tile".into());
                    }
                    if op.fan_in() != 1 {
                        return fail(i, format!("CP1 fan-in {} != 1", op.fan_in()));
                    }
                }
                (OpKind::Cp2Cp3, Operand::Lanes { lanes }) => {
                    let Some(w) = last_write else {
                        return fail(i, "compute before any write".into());
                    };
                    let wop = &self.ops[w];
                    if !matches!(wop.operand, Operand::Tensor { .. }) {
                        return fail(i, "CP2CP3 must follow a tensor write".into());
                    }
                    if !within(lanes, g.lanes())
                        || op.channels != Some(ChannelMap::Broadcast(lanes.len()))
                    {
                        return fail(i, "malformed lane pass".into());
                    }
                    if op.rows != wop.rows || op.cols != wop.cols {
                        return fail(i, "CP2CP3 tile differs from the stored tile".into());
                    }
                }
                _ => return fail(i, format!("{} op with mismatched operand", op.kind.name())),
            }
            if op.kind == OpKind::Write {
                if op.depends_on.is_some() {
                    return fail(i, "writes have no dependency".into());
                }
                last_write = Some(i);
            } else if op.depends_on != last_write {
                return fail(
                    i,
                    format!(
                        "reads write {:?} but the latest write is {:?}",
                        op.depends_on, last_write
                    ),
                );
            }
        }
        Ok(())
    }
}

/// Schedule computing MTTKRP for a 3-mode tensor: all Hadamard rows first,
/// then the scaling/accumulation stage.
pub fn mttkrp_schedule(
    shape: &[usize],
    mode: usize,
    rank: usize,
    cfg: &ArrayConfig,
) -> Result<Schedule> {
    let (i, j, k) = three_mode_extents(shape, mode)?;
    let mut s = Schedule {
        geometry: Geometry {
            outputs: i,
            stationary: j,
            streamed: k,
            rank: check_rank(rank)?,
        },
        ops: Vec::new(),
    };
    s.push_cp1(cfg);
    s.push_cp2_cp3(cfg);
    Ok(s)
}

/// (output, stationary, streamed) extents for target `mode`; the stationary
/// mode is the lower-numbered of the other two.
pub fn three_mode_extents(shape: &[usize], mode: usize) -> Result<(usize, usize, usize)> {
    if shape.len() != 3 {
        return Err(Error::invalid(format!(
            "the array mapping handles 3-mode tensors, got {} modes",
            shape.len()
        )));
    }
    if mode >= 3 {
        return Err(Error::invalid(format!(
            "mode {mode} out of range for a 3-mode tensor"
        )));
    }
    if shape.contains(&0) {
        return Err(Error::invalid("tensor extents must be positive"));
    }
    let others: Vec<usize> = (0..3).filter(|&m| m != mode).collect();
    Ok((shape[mode], shape[others[0]], shape[others[1]]))
}

fn check_rank(rank: usize) -> Result<usize> {
    if rank == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    Ok(rank)
}

fn check_channels(cfg: &ArrayConfig) -> Result<()> {
    if cfg.channels == 0 {
        return Err(Error::invalid(
            "at least one wavelength channel is required",
        ));
    }
    cfg.validate()
}

/// Hadamard products of `b_row` with each of `c_rows`.
pub fn map_cp1(b_row: &[i64], c_rows: &[Vec<i64>], cfg: &ArrayConfig) -> Result<Schedule> {
    check_channels(cfg)?;
    let rank = check_rank(b_row.len())?;
    if c_rows.iter().any(|c| c.len() != rank) {
        return Err(Error::invalid("CP1 operands must have equal length"));
    }
    let mut s = Schedule {
        geometry: Geometry {
            outputs: 0,
            stationary: 1,
            streamed: c_rows.len(),
            rank,
        },
        ops: Vec::new(),
    };
    s.push_cp1(cfg);
    Ok(s)
}

/// `a_row + sum_t xs[t] * hadamards[t]` for one output row.
pub fn map_cp2_cp3(
    a_row: &[i64],
    xs: &[i64],
    hadamards: &[Vec<i64>],
    cfg: &ArrayConfig,
) -> Result<Schedule> {
    check_channels(cfg)?;
    let rank = check_rank(a_row.len())?;
    if xs.len() != hadamards.len() || xs.is_empty() {
        return Err(Error::invalid("need one Hadamard row per tensor element"));
    }
    if hadamards.iter().any(|h| h.len() != rank) {
        return Err(Error::invalid("Hadamard rows must match the output length"));
    }
    let mut s = Schedule {
        geometry: Geometry {
            outputs: 1,
            stationary: xs.len(),
            streamed: 1,
            rank,
        },
        ops: Vec::new(),
    };
    s.push_cp2_cp3(cfg);
    Ok(s)
}

// Text form: a header line then one op per line, e.g.
//   schedule outputs=6 stationary=5 streamed=4 rank=8
//   WRITE rows=0..8 cols=0..5 src=stationary[0..5;0..8]
//   CP1 rows=0..8 cols=0..5 src=streamed[3;0..8] ch=interleaved dep=0
//   WRITE rows=0..20 cols=0..6 src=tensor[0..6;0..20;+]
//   CP2CP3 rows=0..20 cols=0..6 src=lanes[0..32] ch=broadcast:32 dep=5

struct R<'a>(&'a Range<usize>);

impl fmt::Display for R<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.0.start, self.0.end)
    }
}

impl fmt::Display for PrimitiveOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} rows={} cols={} src=",
            self.kind.name(),
            R(&self.rows),
            R(&self.cols)
        )?;
        match &self.operand {
            Operand::Stationary { idx, ranks } => write!(f, "stationary[{};{}]", R(idx), R(ranks))?,
            Operand::Tensor {
                outputs,
                pairs,
                sign,
            } => {
                let s = if *sign == Sign::Positive { '+' } else { '-' };
                write!(f, "tensor[{};{};{s}]", R(outputs), R(pairs))?
            }
            Operand::Streamed { idx, ranks } => write!(f, "streamed[{idx};{}]", R(ranks))?,
            Operand::Lanes { lanes } => write!(f, "lanes[{}]", R(lanes))?,
        }
        match self.channels {
            Some(ChannelMap::Interleaved) => write!(f, " ch=interleaved")?,
            Some(ChannelMap::Broadcast(n)) => write!(f, " ch=broadcast:{n}")?,
            None => {}
        }
        if let Some(d) = self.depends_on {
            write!(f, " dep={d}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.geometry;
        writeln!(
            f,
            "schedule outputs={} stationary={} streamed={} rank={}",
            g.outputs, g.stationary, g.streamed, g.rank
        )?;
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

fn parse_range(s: &str) -> std::result::Result<Range<usize>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a range, got {s:?}"))?;
    let a = a.parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b = b.parse().map_err(|_| format!("bad range end {b:?}"))?;
    Ok(a..b)
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse()
        .map_err(|_| format!("expected an integer, got {s:?}"))
}

fn bracketed<'a>(s: &'a str, name: &str) -> Option<Vec<&'a str>> {
    s.strip_prefix(name)?
        .strip_prefix('[')?
        .strip_suffix(']')
        .map(|inner| inner.split(';').collect())
}

fn parse_operand(s: &str) -> std::result::Result<Operand, String> {
    if let Some(p) = bracketed(s, "stationary") {
        if let [idx, ranks] = p[..] {
            return Ok(Operand::Stationary {
                idx: parse_range(idx)?,
                ranks: parse_range(ranks)?,
            });
        }
    } else if let Some(p) = bracketed(s, "tensor") {
        if let [outputs, pairs, sign] = p[..] {
            let sign = match sign {
                "+" => Sign::Positive,
                "-" => Sign::Negative,
                _ => return Err(format!("bad sign {sign:?}")),
            };
            return Ok(Operand::Tensor {
                outputs: parse_range(outputs)?,
                pairs: parse_range(pairs)?,
                sign,
            });
        }
    } else if let Some(p) = bracketed(s, "streamed") {
        if let [idx, ranks] = p[..] {
            return Ok(Operand::Streamed {
                idx: parse_usize(idx)?,
                ranks: parse_range(ranks)?,
            });
        }
    } else if let Some(p) = bracketed(s, "lanes") {
        if let [lanes] = p[..] {
            return Ok(Operand::Lanes {
                lanes: parse_range(lanes)?,
            });
        }
    }
    Err(format!("unrecognized operand {s:?}"))
}

impl FromStr for PrimitiveOp {
    type Err = String;

    fn from_str(line: &str) -> std::result::Result<Self, String> {
        let mut tokens = line.split_whitespace();
        let kind = match tokens.next() {
            Some("WRITE") => OpKind::Write,
            Some("CP1") => OpKind::Cp1,
            Some("CP2CP3") => OpKind::Cp2Cp3,
            other => return Err(format!("unknown op kind {other:?}")),
        };
        let (mut rows, mut cols, mut operand, mut channels, mut depends_on) =
            (None, None, None, None, None);
        for tok in tokens {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {tok:?}"))?;
            match key {
                "rows" => rows = Some(parse_range(value)?),
                "cols" => cols = Some(parse_range(value)?),
                "src" => operand = Some(parse_operand(value)?),
                "dep" => depends_on = Some(parse_usize(value)?),
                "ch" => {
                    channels = Some(if value == "interleaved" {
                        ChannelMap::Interleaved
                    } else if let Some(n) = value.strip_prefix("broadcast:") {
                        ChannelMap::Broadcast(parse_usize(n)?)
                    } else {
                        return Err(format!("bad channel map {value:?}"));
                    })
                }
                _ => return Err(format!("unknown field {key:?}")),
            }
        }
        Ok(PrimitiveOp {
            kind,
            rows: rows.ok_or("missing rows=")?,
            cols: cols.ok_or("missing cols=")?,
            operand: operand.ok_or("missing src=")?,
            channels,
            depends_on,
        })
    }
}

impl Schedule {
    /// Parses the text form produced by `Display`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str, source_name: &str) -> Result<Schedule> {
        let err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut geometry = None;
        let mut ops = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if geometry.is_none() {
                let rest = line
                    .strip_prefix("schedule")
                    .ok_or_else(|| err(n + 1, "expected a schedule header".into()))?;
                let mut g = [None; 4];
                for tok in rest.split_whitespace() {
                    let (k, v) = tok
                        .split_once('=')
                        .ok_or_else(|| err(n + 1, format!("bad header field {tok:?}")))?;
                    let slot = match k {
                        "outputs" => 0,
                        "stationary" => 1,
                        "streamed" => 2,
                        "rank" => 3,
                        _ => return Err(err(n + 1, format!("unknown header field {k:?}"))),
                    };
                    g[slot] = Some(parse_usize(v).map_err(|m| err(n + 1, m))?);
                }
                let [Some(outputs), Some(stationary), Some(streamed), Some(rank)] = g else {
                    return Err(err(n + 1, "incomplete schedule header".into()));
                };
                geometry = Some(Geometry {
                    outputs,
                    stationary,
                    streamed,
                    rank,
                });
                continue;
            }
            ops.push(line.parse().map_err(|m| err(n + 1, m))?);
        }
        let geometry = geometry.ok_or_else(|| err(0, "empty schedule".into()))?;
        Ok(Schedule { geometry, ops })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rows: usize, word_cols: usize, channels: usize) -> ArrayConfig {
        ArrayConfig {
            rows,
            bit_cols: word_cols * 8,
            channels,
            ..Default::default()
        }
    }

    #[test]
    fn lane_layout() {
        assert_eq!(decode_lane(0), (0, false, 0));
        assert_eq!(decode_lane(1), (0, false, 1));
        assert_eq!(decode_lane(2), (0, true, 0));
        assert_eq!(decode_lane(7), (1, true, 1));
    }

    #[test]
    fn cp1_passes_split_rank_by_channels() {
        let s = map_cp1(&[1; 104], &[vec![1; 104]], &ArrayConfig::default()).unwrap();
        let cp1: Vec<_> = s.ops.iter().filter(|o| o.kind == OpKind::Cp1).collect();
        assert_eq!(cp1.len(), 2);
        assert!(cp1
            .iter()
            .all(|o| o.fan_in() == 1 && o.channel_count() == 52));
        s.validate(&ArrayConfig::default()).unwrap();
    }

    #[test]
    fn mttkrp_schedule_is_valid_and_round_trips() {
        let c = cfg(8, 4, 5);
        let s = mttkrp_schedule(&[6, 5, 7], 1, 9, &c).unwrap();
        s.validate(&c).unwrap();
        let back = Schedule::parse(&s.to_string(), "dump").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn hazard_and_fan_in_violations_are_caught() {
        let c = cfg(8, 4, 5);
        let mut s = mttkrp_schedule(&[2, 2, 2], 0, 3, &c).unwrap();
        s.ops.swap(0, 1);
        assert!(s.validate(&c).is_err());

        let mut s = mttkrp_schedule(&[2, 2, 2], 0, 3, &c).unwrap();
        let cp1 = s.ops.iter_mut().find(|o| o.kind == OpKind::Cp1).unwrap();
        cp1.channels = Some(ChannelMap::Broadcast(3));
        assert!(s.validate(&c).is_err());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "schedule outputs=1 stationary=1 streamed=1 rank=1\nWRITE rows=0..1\n";
        let e = Schedule::parse(text, "s.txt").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn non_three_mode_rejected() {
        assert!(mttkrp_schedule(&[2, 2], 0, 1, &ArrayConfig::default()).is_err());
        assert!(mttkrp_schedule(&[2, 2, 2], 3, 1, &ArrayConfig::default()).is_err());
    }
}
