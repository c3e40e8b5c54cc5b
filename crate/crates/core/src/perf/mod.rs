//! Closed-form throughput and energy of MTTKRP on the array, and sweeps over
//! channel count and clock frequency.
//!
//! Peak throughput counts every word multiplying every wavelength once per
//! compute cycle. Sustained throughput uses the same slot count as the tile
//! plan, so it matches what the simulator measures on small problems. Energy
//! figures are projections from the device coefficients.

mod model;
mod plot;
mod sweep;

pub use model::{
    peak_throughput, sustained_mttkrp, KindCost, OpsConvention, PerfQuery, PerfReport,
};
pub use plot::{plot_references, render_sweep_svg};
pub use sweep::{
    float_range, int_range, read_sweep_csv, sweep, write_sweep_csv, RankPolicy, SweepPoint,
    SweepQuery, SweepRow, SWEEP_CSV_HEADER,
};
