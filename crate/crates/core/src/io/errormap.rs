use std::fmt::Write as _;
use std::path::Path;

use super::kv::{exact, KvBlock};
use super::{read_to_string, write_file};
use crate::domain::{Cell, GridSpec};
use crate::error::{Error, Result};
use crate::error_map::ErrorMap;

const HEADER: &str = "col,row,value,support";

/// Serializes a map as one `col,row,value,support` row per cell, row-major.
pub fn write_error_map(map: &ErrorMap) -> String {
    let g = map.grid();
    let mut out = String::new();
    let _ = writeln!(out, "#grid_cols={}", g.cols);
    let _ = writeln!(out, "#grid_rows={}", g.rows);
    let _ = writeln!(out, "#image_width={}", g.image_width);
    let _ = writeln!(out, "#image_height={}", g.image_height);
    let _ = writeln!(out, "#fallback={}", exact(map.fallback()));
    out.push_str(HEADER);
    out.push('\n');
    for (k, (v, s)) in map.values().iter().zip(map.support()).enumerate() {
        let c = g.cell_at(k);
        let _ = writeln!(out, "{},{},{},{}", c.col, c.row, exact(*v), s);
    }
    out
}

pub fn write_error_map_file(map: &ErrorMap, path: &Path) -> Result<()> {
    write_file(path, &write_error_map(map))
}

pub fn parse_error_map(text: &str) -> Result<ErrorMap> {
    let mut kv = KvBlock::default();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut header_line = 0;
    for (line, l) in lines.by_ref() {
        if l.is_empty() {
            continue;
        }
        if let Some(c) = l.strip_prefix('#') {
            kv.insert(line, c.trim())?;
            continue;
        }
        if l != HEADER {
            return Err(Error::parse(line, format!("expected header {HEADER:?}")));
        }
        header_line = line;
        break;
    }
    if header_line == 0 {
        return Err(Error::parse(0, "missing header line"));
    }
    let at_header = |e: Error| match e {
        Error::Parse { line: 0, msg } | Error::Domain(msg) => Error::parse(header_line, msg),
        other => other,
    };
    let grid = GridSpec {
        cols: kv.require("grid_cols").map_err(at_header)?,
        rows: kv.require("grid_rows").map_err(at_header)?,
        image_width: kv.require("image_width").map_err(at_header)?,
        image_height: kv.require("image_height").map_err(at_header)?,
    };
    grid.validate().map_err(at_header)?;
    let fallback: f64 = kv.require("fallback").map_err(at_header)?;
    kv.finish()?;

    let n = grid.n_cells();
    let mut values = vec![None; n];
    let mut support = vec![0u64; n];
    let mut last_line = header_line;
    for (line, l) in lines {
        if l.is_empty() {
            continue;
        }
        last_line = line;
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(Error::parse(line, format!("expected 4 fields, got {}", f.len())));
        }
        let bad = |what: &str| Error::parse(line, format!("bad {what}"));
        let col: usize = f[0].parse().map_err(|_| bad("column"))?;
        let row: usize = f[1].parse().map_err(|_| bad("row"))?;
        let value: f64 = f[2].parse().map_err(|_| bad("value"))?;
        let count: u64 = f[3].parse().map_err(|_| bad("support"))?;
        let cell = Cell::new(col, row);
        if !grid.contains(cell) {
            return Err(Error::parse(line, format!("cell {cell} outside the grid")));
        }
        let k = grid.flat_index(cell);
        if values[k].is_some() {
            return Err(Error::parse(line, format!("cell {cell} listed twice")));
        }
        values[k] = Some(value);
        support[k] = count;
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(k, v)| v.ok_or_else(|| Error::parse(last_line, format!("cell {} missing", grid.cell_at(k)))))
        .collect::<Result<Vec<f64>>>()?;
    ErrorMap::from_parts(grid, values, support, fallback).map_err(|e| Error::parse(last_line, e.to_string()))
}

pub fn read_error_map(path: &Path) -> Result<ErrorMap> {
    parse_error_map(&read_to_string(path)?)
}
