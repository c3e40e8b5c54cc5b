//! Behavioral model of a photonic SRAM array: stored words, WDM compute
//! cycles, ADC readout and the cycle/energy ledger.

mod adc;
mod array;
mod config;
mod ledger;

pub use adc::{adc_quantize, adc_value, encode_intensity};
pub use array::{ArrayState, ColumnReadout, Drive, ReadMode, WavelengthInput, WordWrite};
pub use config::ArrayConfig;
pub use ledger::{EnergyLedger, OpCost};
