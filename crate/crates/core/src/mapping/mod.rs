//! Compiles MTTKRP into schedules of array primitives and runs them on the
//! device model.
//!
//! Two stages cover a 3-mode MTTKRP along mode `n` (other modes `m1 < m2`,
//! extents `J`, `K`):
//!
//! 1. Hadamard rows (CP1). Rows of the `m1` factor sit in word columns, rank
//!    slots down the wordlines. Each row of the `m2` factor is streamed with
//!    a distinct wavelength per wordline, so every (column, channel) readout
//!    is a single product `b[j,r] * c[k,r]`.
//! 2. Scaling and accumulation (CP2/CP3). Tensor elements sit in words with
//!    output indices across columns and pairs `p = j + J k` down the
//!    wordlines. Hadamard values are streamed on shared wavelengths, so each
//!    column sums `x[i,p] * y[p,r]` over its pairs.
//!
//! Optical intensities are nonnegative, so operands are sign-magnitude
//! codes. Tensor elements are stored in two passes (positive, then negative)
//! and each rank slot uses four lanes: two signs of `y` times two
//! `word_bits`-wide digits of `|y|`. Signs and digit weights are applied
//! after the ADC.

mod exec;
mod plan;
mod quant;
mod schedule;

pub use exec::{
    hadamard_on_array, mttkrp_on_array, run_schedule, scale_accumulate_on_array, ArrayKernel,
    ArrayRunOptions, ExecutionResult, ScheduleOperands, ScheduleRun, MAX_SIMULATED_CYCLES,
    MAX_SIMULATED_OPS,
};
pub use plan::{hidden_write_cycles, tile_plan, StagePlan, TilePlan, Timing};
pub use quant::{
    quantization_scale, quantize_matrix, quantize_tensor, quantized_reference, CodeMatrix,
};
pub use schedule::{
    decode_lane, map_cp1, map_cp2_cp3, mttkrp_schedule, three_mode_extents, ChannelMap, Geometry,
    OpKind, Operand, PrimitiveOp, Schedule, ScheduleTotals, Sign, LANES_PER_RANK,
};
