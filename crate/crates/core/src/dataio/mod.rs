// SPDX-License-Identifier: Apache-2.0

//! Training records, netlists, reports and run configuration.

pub mod config;
mod report;
mod samples;
pub mod verilog;

pub use config::{FileConfig, ModelOverrides, PolicySpec, ProfileSpec};
pub use report::{emit_report, parse_report};
pub use samples::{
    emit_jsonl, parse_jsonl, synthesize_samples, SampleMetadata, TrainingSample, Turn,
    THINK_PLACEHOLDER,
};
pub use verilog::{emit_verilog, Netlist, Style};
