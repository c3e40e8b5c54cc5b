//! File formats: coordinate (`.tns`) and dense text tensors, factor and
//! result CSVs.

mod csvio;
mod tns;

pub use csvio::{
    create_output, read_factor_csv, write_factor_csv, write_fit_trace, write_ledger_csv,
    write_mttkrp_csv, FIT_TRACE_HEADER, MTTKRP_CSV_HEADER,
};
pub use tns::{format_dense, format_tns, parse_dense, parse_tns, read_tensor};
