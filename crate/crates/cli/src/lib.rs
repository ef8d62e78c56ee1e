//! Library side of the `tddsim` binary: result loading and chart output.

pub mod plot;

pub use plot::{emit_plots, load_rows, PlotError};
