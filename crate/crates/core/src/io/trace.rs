use std::fmt::Write as _;
use std::path::Path;

use super::kv::{exact, KvBlock};
use super::{read_to_string, write_file};
use crate::domain::{normalize_probabilities, FrameRecord, GridSpec, PoseVector, ScalerParams, Split, Trace, VarRange, VAR_NAMES};
use crate::error::{Error, Result};

/// Column names for a trace over `grid`.
pub fn trace_header(grid: &GridSpec) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "gt_x", "gt_y", "gt_z", "gt_phi", "head_u", "head_v"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for model in ["small", "big"] {
        cols.extend(VAR_NAMES.iter().map(|v| format!("{model}_{v}")));
    }
    cols.extend((0..grid.n_cells()).map(|k| format!("aux_p_{k}")));
    cols
}

/// Serializes a trace. Output is canonical: `parse_trace(write_trace(t)) == t`.
pub fn write_trace(trace: &Trace) -> String {
    let g = trace.grid();
    let s = trace.scaler();
    let mut out = String::new();
    let _ = writeln!(out, "#split={}", trace.split().as_str());
    let _ = writeln!(out, "#grid_cols={}", g.cols);
    let _ = writeln!(out, "#grid_rows={}", g.rows);
    let _ = writeln!(out, "#image_width={}", g.image_width);
    let _ = writeln!(out, "#image_height={}", g.image_height);
    for (name, r) in VAR_NAMES.iter().zip(s.ranges()) {
        let _ = writeln!(out, "#scaler_{name}_min={}", exact(r.min));
        let _ = writeln!(out, "#scaler_{name}_max={}", exact(r.max));
    }
    out.push_str(&trace_header(g).join(","));
    out.push('\n');
    for f in trace.frames() {
        let _ = write!(out, "{}", f.t);
        let nums = f
            .gt
            .to_array()
            .into_iter()
            .chain([f.head_u, f.head_v])
            .chain(f.small_pred.to_array())
            .chain(f.big_pred.to_array())
            .chain(f.aux_probs.iter().copied());
        for v in nums {
            out.push(',');
            out.push_str(&exact(v));
        }
        out.push('\n');
    }
    out
}

pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<()> {
    write_file(path, &write_trace(trace))
}

struct TraceMeta {
    grid: GridSpec,
    scaler: ScalerParams,
    split: Split,
}

fn parse_meta(mut kv: KvBlock, header_line: usize) -> Result<TraceMeta> {
    let at_header = |e: Error| match e {
        Error::Parse { line: 0, msg } => Error::parse(header_line, msg),
        Error::Domain(msg) | Error::Config(msg) => Error::parse(header_line, msg),
        other => other,
    };
    let split: Split = kv.require("split").map_err(at_header)?;
    let grid = GridSpec {
        cols: kv.require("grid_cols").map_err(at_header)?,
        rows: kv.require("grid_rows").map_err(at_header)?,
        image_width: kv.require("image_width").map_err(at_header)?,
        image_height: kv.require("image_height").map_err(at_header)?,
    };
    grid.validate().map_err(at_header)?;
    let mut ranges = [VarRange::new(0.0, 0.0); 4];
    for (name, r) in VAR_NAMES.iter().zip(ranges.iter_mut()) {
        r.min = kv.require(&format!("scaler_{name}_min")).map_err(at_header)?;
        r.max = kv.require(&format!("scaler_{name}_max")).map_err(at_header)?;
    }
    let scaler = ScalerParams::new(ranges[0], ranges[1], ranges[2], ranges[3]).map_err(at_header)?;
    kv.finish()?;
    Ok(TraceMeta { grid, scaler, split })
}

fn parse_row(line: usize, text: &str, meta: &TraceMeta, n_cols: usize) -> Result<FrameRecord> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() != n_cols {
        return Err(Error::parse(line, format!("expected {n_cols} fields, got {}", fields.len())));
    }
    let t: u64 = fields[0]
        .parse()
        .map_err(|_| Error::parse(line, format!("frame index {:?} is not a non-negative integer", fields[0])))?;
    let mut nums = Vec::with_capacity(n_cols - 1);
    for (k, s) in fields[1..].iter().enumerate() {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::parse(line, format!("field {} ({s:?}) is not a number", k + 2)))?;
        if !v.is_finite() {
            return Err(Error::parse(line, format!("field {} is not finite", k + 2)));
        }
        nums.push(v);
    }
    let pose = |at: usize| PoseVector::new(nums[at], nums[at + 1], nums[at + 2], nums[at + 3]);
    let mut aux_probs = nums[14..].to_vec();
    normalize_probabilities(&mut aux_probs).map_err(|e| Error::parse(line, e.to_string()))?;
    let frame = FrameRecord {
        t,
        gt: pose(0),
        head_u: nums[4],
        head_v: nums[5],
        small_pred: pose(6),
        big_pred: pose(10),
        aux_probs,
    };
    frame.true_cell(&meta.grid).map_err(|e| Error::parse(line, e.to_string()))?;
    Ok(frame)
}

/// Parses trace text, enforcing every trace invariant with line-numbered errors.
pub fn parse_trace(text: &str) -> Result<Trace> {
    let mut kv = KvBlock::default();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut header = None;
    for (line, l) in lines.by_ref() {
        if l.is_empty() {
            continue;
        }
        match l.strip_prefix('#') {
            Some(comment) => kv.insert(line, comment.trim())?,
            None => {
                header = Some((line, l));
                break;
            }
        }
    }
    let (header_line, header) = header.ok_or_else(|| Error::parse(0, "missing header line"))?;
    let meta = parse_meta(kv, header_line)?;
    let expected = trace_header(&meta.grid);
    let got: Vec<&str> = header.split(',').map(str::trim).collect();
    if got != expected {
        return Err(Error::parse(
            header_line,
            format!("header does not match a {}x{} grid: expected {}", meta.grid.cols, meta.grid.rows, expected.join(",")),
        ));
    }

    let mut frames: Vec<FrameRecord> = Vec::new();
    let mut last_line = header_line;
    for (line, l) in lines {
        if l.is_empty() {
            continue;
        }
        last_line = line;
        let frame = parse_row(line, l, &meta, expected.len())?;
        if let Some(prev) = frames.last() {
            if frame.t <= prev.t {
                return Err(Error::parse(
                    line,
                    format!("frame index {} does not increase (previous {})", frame.t, prev.t),
                ));
            }
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(Error::parse(header_line, "trace has no frames"));
    }
    Trace::new(meta.grid, meta.scaler, frames, meta.split).map_err(|e| Error::parse(last_line, e.to_string()))
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    parse_trace(&read_to_string(path)?)
}
