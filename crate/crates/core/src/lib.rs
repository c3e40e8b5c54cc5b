//! Functional and performance simulator for a photonic SRAM (pSRAM)
//! in-memory compute array running MTTKRP and CP-ALS.
//!
//! The crate is layered bottom-up:
//!
//! - [`tensor`]: exact reference tensors, matricization, Khatri-Rao products,
//!   MTTKRP and the CP-ALS driver. These are the oracles for everything else.
//! - [`device`]: behavioral model of the pSRAM crossbar: stored words,
//!   wavelength-multiplexed intensity inputs, per-channel column accumulation,
//!   ADC and energy/cycle accounting.
//! - [`mapping`]: compiles MTTKRP into schedules of the three computational
//!   primitives (Hadamard of factor rows, scaling by tensor elements, and
//!   accumulation into the output rows) and executes them on the device.
//! - [`perf`]: closed-form throughput/energy model and parameter sweeps.
//! - [`io`]: tensor, factor-matrix and CSV file formats.
//!
//! ```no_run
//! use psram_core::device::ArrayConfig;
//! use psram_core::perf::{peak_throughput, OpsConvention};
//!
//! let cfg = ArrayConfig::default();
//! let peak = peak_throughput(&cfg, OpsConvention::MacAsTwo);
//! assert!((peak - 1.703936e16).abs() < 1.0);
//! ```

pub mod device;
pub mod error;
pub mod io;
pub mod mapping;
pub mod perf;
pub mod tensor;

pub use error::{Error, Result};
