//! File formats: traces, error maps, key-value configs and report emitters.
//!
//! Traces and error maps are comma-separated text with a leading `#key=value`
//! comment block. Floating-point fields in those files use the shortest
//! representation that parses back to the same bits, so a write/parse cycle
//! is lossless. Reports use fixed six-decimal formatting.

mod config;
mod errormap;
mod kv;
mod report;
mod trace;

use std::path::Path;

use crate::error::{Error, Result};

pub use config::{parse_cost_table, parse_run_config, parse_synth_config, write_cost_table, PolicySpec, RunConfig};
pub use errormap::{parse_error_map, read_error_map, write_error_map, write_error_map_file};
pub use report::{
    emit_report, points_to_csv, render_svg, report_to_csv, report_to_svg, ReportFormat, SvgSeries, CSV_COLUMNS,
};
pub use trace::{parse_trace, read_trace, trace_header, write_trace, write_trace_file};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
