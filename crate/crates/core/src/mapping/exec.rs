use crate::device::{ArrayConfig, ArrayState, EnergyLedger, ReadMode, WavelengthInput, WordWrite};
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix, MttkrpKernel, Tensor};

use super::plan::{tile_plan, Timing};
use super::quant::{quantize_matrix, quantize_tensor, CodeMatrix};
use super::schedule::{decode_lane, map_cp1, map_cp2_cp3, mttkrp_schedule, Operand, Schedule};

/// Cycle budget beyond which functional simulation is refused.
pub const MAX_SIMULATED_CYCLES: u128 = 1 << 48;
/// Schedule length beyond which functional simulation is refused.
pub const MAX_SIMULATED_OPS: u128 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayRunOptions {
    pub read_mode: ReadMode,
    pub double_buffering: bool,
    pub seed: u64,
}

impl Default for ArrayRunOptions {
    fn default() -> Self {
        Self {
            read_mode: ReadMode::Ideal,
            double_buffering: true,
            seed: 0,
        }
    }
}

/// Integer operands of a schedule.
#[derive(Debug, Clone)]
pub struct ScheduleOperands {
    /// `J x R` codes of the column-stationary factor.
    pub stationary: CodeMatrix,
    /// `K x R` codes of the streamed factor.
    pub streamed: CodeMatrix,
    /// `I x (J K)` tensor codes, column `p = j + J k`.
    pub tensor: CodeMatrix,
    /// `(J K) x R` Hadamard rows; overwritten by any Hadamard ops.
    pub hadamard: CodeMatrix,
    /// `I x R` initial output rows.
    pub accumulator: CodeMatrix,
}

impl ScheduleOperands {
    fn check(&self, s: &Schedule, cfg: &ArrayConfig) -> Result<()> {
        let g = s.geometry;
        let want = [
            ("stationary", &self.stationary, g.stationary, g.rank),
            ("streamed", &self.streamed, g.streamed, g.rank),
            ("tensor", &self.tensor, g.outputs, g.pairs()),
            ("hadamard", &self.hadamard, g.pairs(), g.rank),
            ("accumulator", &self.accumulator, g.outputs, g.rank),
        ];
        for (name, m, r, c) in want {
            if (m.rows(), m.cols()) != (r, c) {
                return Err(Error::invalid(format!(
                    "{name} operand is {}x{}, schedule needs {r}x{c}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let word = cfg.max_level() as i64;
        for (name, m, lim) in [
            ("stationary", &self.stationary, word),
            ("streamed", &self.streamed, word),
            ("tensor", &self.tensor, word),
            ("hadamard", &self.hadamard, word * word),
        ] {
            if m.max_abs() > lim {
                return Err(Error::invalid(format!(
                    "{name} codes exceed magnitude {lim}"
                )));
            }
        }
        Ok(())
    }
}

/// Outputs and measured costs of executing a schedule.
#[derive(Debug, Clone)]
pub struct ScheduleRun {
    pub hadamard: CodeMatrix,
    pub accumulator: CodeMatrix,
    pub ledger: EnergyLedger,
    pub timing: Timing,
    pub cp1_compute_cycles: u64,
    pub cp2_compute_cycles: u64,
    pub active_slots: u128,
    /// Average fraction of word-channel slots busy per compute cycle.
    pub utilization: f64,
    /// Per-output bound (in codes) on analog error if every readout stays
    /// within three standard deviations. `None` in ideal mode.
    pub noise_bound: Option<Matrix>,
}

fn three_sigma(mode: ReadMode, full_scale: f64) -> f64 {
    match mode {
        ReadMode::Ideal => 0.0,
        ReadMode::Analog { sigma } => (3.0 * sigma * full_scale).ceil(),
    }
}

/// Executes `schedule` on a fresh array.
pub fn run_schedule(
    schedule: &Schedule,
    cfg: &ArrayConfig,
    operands: &ScheduleOperands,
    opts: &ArrayRunOptions,
) -> Result<ScheduleRun> {
    schedule.validate(cfg)?;
    operands.check(schedule, cfg)?;
    let g = schedule.geometry;
    let analog = matches!(opts.read_mode, ReadMode::Analog { .. });
    let top = cfg.max_level() as i64;
    let digit_bits = cfg.word_bits;

    let mut array = ArrayState::new(cfg.clone(), opts.seed)?;
    let mut y = operands.hadamard.clone();
    let mut a = operands.accumulator.clone();
    let mut y_bound = vec![0.0f64; g.pairs() * g.rank];
    let mut a_bound = vec![0.0f64; g.outputs * g.rank];
    let mut steps: Vec<(u128, u128)> = Vec::new();
    let (mut cp1_cycles, mut cp2_cycles, mut slots) = (0u64, 0u64, 0u128);

    for op in &schedule.ops {
        match &op.operand {
            Operand::Stationary { idx, ranks } => {
                let mut words = Vec::with_capacity(idx.len() * ranks.len());
                for (lr, r) in ranks.clone().enumerate() {
                    for (lc, j) in idx.clone().enumerate() {
                        words.push(WordWrite {
                            row: op.rows.start + lr,
                            col: op.cols.start + lc,
                            value: operands.stationary.get(j, r).unsigned_abs() as u32,
                        });
                    }
                }
                let cost = array.write_words(&words)?;
                steps.push((cost.write_cycles as u128, 0));
            }
            Operand::Tensor {
                outputs,
                pairs,
                sign,
            } => {
                let mut words = Vec::with_capacity(outputs.len() * pairs.len());
                for (lp, p) in pairs.clone().enumerate() {
                    for (lc, i) in outputs.clone().enumerate() {
                        let x = operands.tensor.get(i, p);
                        let value = if sign.matches(x) {
                            x.unsigned_abs() as u32
                        } else {
                            0
                        };
                        words.push(WordWrite {
                            row: op.rows.start + lp,
                            col: op.cols.start + lc,
                            value,
                        });
                        if analog && value > 0 {
                            for r in 0..g.rank {
                                a_bound[i * g.rank + r] += value as f64 * y_bound[p * g.rank + r];
                            }
                        }
                    }
                }
                let cost = array.write_words(&words)?;
                steps.push((cost.write_cycles as u128, 0));
            }
            Operand::Streamed { idx: k, ranks } => {
                let w = &schedule.ops[op.depends_on.expect("validated")];
                let Operand::Stationary { idx: js, .. } = &w.operand else {
                    unreachable!("validated")
                };
                let mut input = WavelengthInput::new();
                for (t, r) in ranks.clone().enumerate() {
                    let level = operands.streamed.get(*k, r).unsigned_abs() as u32;
                    input.drive(op.rows.start + t, t, level);
                }
                let fs = op.full_scale(cfg);
                let (out, _) = array.compute_cycle(&input, opts.read_mode, fs)?;
                let bound = three_sigma(opts.read_mode, fs);
                for (lc, j) in js.clone().enumerate() {
                    let p = j + g.stationary * k;
                    for (t, r) in ranks.clone().enumerate() {
                        let mag = (out.level(w.cols.start + lc, t) as i64).min(top * top);
                        let sign = operands.stationary.get(j, r).signum()
                            * operands.streamed.get(*k, r).signum();
                        y.set(p, r, sign * mag);
                        y_bound[p * g.rank + r] = bound;
                    }
                }
                cp1_cycles += 1;
            }
            Operand::Lanes { lanes } => {
                let w = &schedule.ops[op.depends_on.expect("validated")];
                let Operand::Tensor {
                    outputs,
                    pairs,
                    sign,
                } = &w.operand
                else {
                    unreachable!("validated")
                };
                let mut input = WavelengthInput::new();
                for (t, p) in pairs.clone().enumerate() {
                    for (c, lane) in lanes.clone().enumerate() {
                        let (r, negative, digit) = decode_lane(lane);
                        let v = y.get(p, r);
                        if (v < 0) != negative || v == 0 {
                            continue;
                        }
                        let level =
                            ((v.unsigned_abs() >> (digit_bits * digit)) & top as u64) as u32;
                        if level > 0 {
                            input.drive(op.rows.start + t, c, level);
                        }
                    }
                }
                let fs = op.full_scale(cfg);
                let (out, _) = array.compute_cycle(&input, opts.read_mode, fs)?;
                let bound = three_sigma(opts.read_mode, fs);
                for (lc, i) in outputs.clone().enumerate() {
                    for (c, lane) in lanes.clone().enumerate() {
                        let (r, negative, digit) = decode_lane(lane);
                        let weight = 1i64 << (digit_bits * digit);
                        let s = sign.factor() * if negative { -1 } else { 1 };
                        a.add(i, r, s * weight * out.level(op.cols.start + lc, c) as i64);
                        if analog {
                            a_bound[i * g.rank + r] += weight as f64 * bound;
                        }
                    }
                }
                cp2_cycles += 1;
            }
        }
        if op.is_compute() {
            slots += op.active_slots();
            if let Some(last) = steps.last_mut() {
                last.1 += 1;
            }
        }
    }

    let timing = Timing::from_steps(&steps, cfg, opts.double_buffering);
    let cap = (cfg.rows * cfg.word_cols() * cfg.channels) as f64;
    let utilization = if timing.compute_cycles == 0 {
        0.0
    } else {
        slots as f64 / (cap * timing.compute_cycles as f64)
    };
    Ok(ScheduleRun {
        hadamard: y,
        accumulator: a,
        ledger: *array.ledger(),
        timing,
        cp1_compute_cycles: cp1_cycles,
        cp2_compute_cycles: cp2_cycles,
        active_slots: slots,
        utilization,
        noise_bound: analog.then(|| Matrix::from_vec(g.outputs, g.rank, a_bound).expect("sized")),
    })
}

/// Elementwise products `b_row * c` for each `c` in `c_rows`, one output row
/// per streamed row.
pub fn hadamard_on_array(
    b_row: &[i64],
    c_rows: &[Vec<i64>],
    cfg: &ArrayConfig,
    opts: &ArrayRunOptions,
) -> Result<CodeMatrix> {
    let s = map_cp1(b_row, c_rows, cfg)?;
    let r = b_row.len();
    let operands = ScheduleOperands {
        stationary: CodeMatrix::from_vec(1, r, b_row.to_vec())?,
        streamed: CodeMatrix::from_rows(c_rows)?,
        tensor: CodeMatrix::zeros(0, c_rows.len()),
        hadamard: CodeMatrix::zeros(c_rows.len(), r),
        accumulator: CodeMatrix::zeros(0, r),
    };
    Ok(run_schedule(&s, cfg, &operands, opts)?.hadamard)
}

/// `a_row + sum_t xs[t] * hadamards[t]`, accumulated in the array columns.
pub fn scale_accumulate_on_array(
    a_row: &[i64],
    xs: &[i64],
    hadamards: &[Vec<i64>],
    cfg: &ArrayConfig,
    opts: &ArrayRunOptions,
) -> Result<Vec<i64>> {
    let s = map_cp2_cp3(a_row, xs, hadamards, cfg)?;
    let r = a_row.len();
    let operands = ScheduleOperands {
        stationary: CodeMatrix::zeros(xs.len(), r),
        streamed: CodeMatrix::zeros(1, r),
        tensor: CodeMatrix::from_vec(1, xs.len(), xs.to_vec())?,
        hadamard: CodeMatrix::from_rows(hadamards)?,
        accumulator: CodeMatrix::from_vec(1, r, a_row.to_vec())?,
    };
    Ok(run_schedule(&s, cfg, &operands, opts)?
        .accumulator
        .row(0)
        .to_vec())
}

/// MTTKRP computed on the simulated array.
#[derive(Debug, Clone)]
pub struct ExecutionResult {
    /// `codes * scale`.
    pub values: Matrix,
    pub codes: CodeMatrix,
    pub scale: f64,
    pub schedule: Schedule,
    pub run: ScheduleRun,
    scale_num: f64,
    scale_den: f64,
}

impl ExecutionResult {
    /// Real values of `codes` under this result's operand scaling.
    pub fn dequantize(&self, codes: &CodeMatrix) -> Matrix {
        Matrix::from_fn(codes.rows(), codes.cols(), |i, r| {
            codes.get(i, r) as f64 * self.scale_num / self.scale_den
        })
    }
}

/// Unfolds integer tensor codes for `mode` with column `p = j + J k`.
fn unfold_codes(t: &DenseTensor, mode: usize) -> CodeMatrix {
    let shape = t.shape();
    let others: Vec<usize> = (0..3).filter(|&m| m != mode).collect();
    let j_len = shape[others[0]];
    let mut out = CodeMatrix::zeros(shape[mode], j_len * shape[others[1]]);
    t.for_each_indexed(|idx, v| {
        out.set(idx[mode], idx[others[0]] + j_len * idx[others[1]], v as i64)
    });
    out
}

/// Quantizes the operands, compiles and executes the schedule for `mode`.
/// Each factor is quantized independently; the factor for `mode` is unused.
pub fn mttkrp_on_array(
    tensor: &DenseTensor,
    factors: &[Matrix],
    mode: usize,
    cfg: &ArrayConfig,
    opts: &ArrayRunOptions,
) -> Result<ExecutionResult> {
    let rank = crate::tensor::check_factors(tensor.shape(), factors, mode)?;
    let plan = tile_plan(tensor.shape(), rank, mode, cfg, opts.double_buffering)?;
    if plan.timing.total_cycles > MAX_SIMULATED_CYCLES || plan.ops > MAX_SIMULATED_OPS {
        return Err(Error::TooLarge(format!(
            "{:?} at rank {rank} needs {} cycles in {} ops",
            tensor.shape(),
            plan.timing.total_cycles,
            plan.ops
        )));
    }
    let schedule = mttkrp_schedule(tensor.shape(), mode, rank, cfg)?;
    let others: Vec<usize> = (0..3).filter(|&m| m != mode).collect();
    let (tq, ts) = quantize_tensor(tensor, cfg.word_bits);
    let tensor_max = tensor.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (stationary, s1) = quantize_matrix(&factors[others[0]], cfg.word_bits);
    let (streamed, s2) = quantize_matrix(&factors[others[1]], cfg.word_bits);
    let g = schedule.geometry;
    let operands = ScheduleOperands {
        stationary,
        streamed,
        tensor: unfold_codes(&tq, mode),
        hadamard: CodeMatrix::zeros(g.pairs(), rank),
        accumulator: CodeMatrix::zeros(g.outputs, rank),
    };
    let run = run_schedule(&schedule, cfg, &operands, opts)?;
    let scale = ts * s1 * s2;
    // Divide once at the end so exactly representable results stay exact.
    let top = cfg.max_level() as f64;
    let span = |m: f64| if m > 0.0 { m } else { top };
    let num =
        span(tensor_max) * span(factors[others[0]].max_abs()) * span(factors[others[1]].max_abs());
    let den = top * top * top;
    let values = Matrix::from_fn(g.outputs, rank, |i, r| {
        run.accumulator.get(i, r) as f64 * num / den
    });
    Ok(ExecutionResult {
        values,
        codes: run.accumulator.clone(),
        scale,
        schedule,
        run,
        scale_num: num,
        scale_den: den,
    })
}

/// MTTKRP kernel backed by the simulated array. Sparse inputs are densified.
#[derive(Debug, Clone)]
pub struct ArrayKernel {
    pub config: ArrayConfig,
    pub options: ArrayRunOptions,
    /// Costs accumulated over every call.
    pub ledger: EnergyLedger,
    pub total_cycles: u128,
    pub calls: usize,
}

impl ArrayKernel {
    pub fn new(config: ArrayConfig, options: ArrayRunOptions) -> Self {
        Self {
            config,
            options,
            ledger: EnergyLedger::default(),
            total_cycles: 0,
            calls: 0,
        }
    }
}

impl MttkrpKernel for ArrayKernel {
    fn mttkrp(&mut self, tensor: &Tensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
        let dense;
        let t = match tensor {
            Tensor::Dense(d) => d,
            Tensor::Sparse(s) => {
                dense = s.to_dense();
                &dense
            }
        };
        let mut opts = self.options;
        opts.seed = opts.seed.wrapping_add(self.calls as u64);
        let res = mttkrp_on_array(t, factors, mode, &self.config, &opts)?;
        self.ledger += &res.run.ledger;
        self.total_cycles += res.run.timing.total_cycles;
        self.calls += 1;
        Ok(res.values)
    }
}
