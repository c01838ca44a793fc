//! Trace-driven policy engine and benchmark harness for adaptive big/little
//! inference cascades in streaming pose regression.
//!
//! A [`Trace`](domain::Trace) holds precomputed per-frame outputs of a small
//! and a big regressor plus an auxiliary head-localization classifier. The
//! [`policy`] module replays a decision policy over it, [`cost`] turns the
//! resulting decision stream into expected per-frame latency, energy and
//! cycles, and [`sweep`] enumerates thresholds and extracts Pareto fronts.

pub mod cost;
pub mod domain;
pub mod error;
pub mod error_map;
pub mod io;
pub mod metrics;
pub mod policy;
pub mod sweep;
pub mod synth;

pub use cost::{CostDimension, CostReport};
pub use domain::{Cell, CostTable, FrameRecord, GridSpec, ModelCost, PoseVector, ScalerParams, Split, Trace};
pub use error::{Error, Result};
pub use error_map::{build_error_map, ErrorMap};
pub use metrics::MaeBreakdown;
pub use policy::{Decision, PolicyConfig, PolicyKind};
pub use sweep::{compare_policies, evaluate, pareto_front, sweep, ComparisonReport, OperatingPoint};
pub use synth::{generate, SynthConfig, SynthSplits};
