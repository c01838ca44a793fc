//! Independent reference implementations used to cross-check the library.
#![allow(dead_code)]

use cascade_core::sweep::OperatingPoint;
use cascade_core::{PoseVector, SynthConfig, SynthSplits, Trace};

pub fn synth(n_frames: usize, seed: u64) -> SynthSplits {
    cascade_core::generate(&SynthConfig {
        n_frames,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

pub fn hard_borders(n_frames: usize, seed: u64) -> SynthSplits {
    cascade_core::generate(&SynthConfig {
        n_frames,
        seed,
        ..SynthConfig::hard_borders()
    })
    .unwrap()
}

fn err_sum(p: PoseVector, g: PoseVector) -> f64 {
    (p.x - g.x).abs() + (p.y - g.y).abs() + (p.z - g.z).abs() + (p.phi - g.phi).abs()
}

/// Per-component MAE and their sum, by plain accumulation.
pub fn brute_mae(outputs: &[PoseVector], gts: &[PoseVector]) -> [f64; 5] {
    assert_eq!(outputs.len(), gts.len());
    let mut acc = [0.0f64; 4];
    for (o, g) in outputs.iter().zip(gts) {
        acc[0] += (o.x - g.x).abs();
        acc[1] += (o.y - g.y).abs();
        acc[2] += (o.z - g.z).abs();
        acc[3] += (o.phi - g.phi).abs();
    }
    let n = outputs.len() as f64;
    let m = acc.map(|a| a / n);
    [m[0], m[1], m[2], m[3], m.iter().sum()]
}

/// Ground-truth cell as (col, row), by pixel-width division.
pub fn pixel_cell(trace: &Trace, u: f64, v: f64) -> (usize, usize) {
    let g = trace.grid();
    let cw = f64::from(g.image_width) / g.cols as f64;
    let ch = f64::from(g.image_height) / g.rows as f64;
    let mut col = 0;
    while col + 1 < g.cols && u >= (col + 1) as f64 * cw {
        col += 1;
    }
    let mut row = 0;
    while row + 1 < g.rows && v >= (row + 1) as f64 * ch {
        row += 1;
    }
    (col, row)
}

pub struct RefMap {
    pub values: Vec<f64>,
    pub support: Vec<u64>,
    pub fallback: f64,
}

/// First pass collects frame indices per cell, second pass averages each bucket.
pub fn two_pass_error_map(trace: &Trace) -> RefMap {
    let g = trace.grid();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); g.cols * g.rows];
    for (i, f) in trace.frames().iter().enumerate() {
        let (c, r) = pixel_cell(trace, f.head_u, f.head_v);
        buckets[r * g.cols + c].push(i);
    }
    let frames = trace.frames();
    let mut values = vec![f64::NAN; buckets.len()];
    let mut weighted = 0.0;
    for (k, b) in buckets.iter().enumerate() {
        if b.is_empty() {
            continue;
        }
        let small: f64 = b.iter().map(|&i| err_sum(frames[i].small_pred, frames[i].gt)).sum::<f64>() / b.len() as f64;
        let big: f64 = b.iter().map(|&i| err_sum(frames[i].big_pred, frames[i].gt)).sum::<f64>() / b.len() as f64;
        values[k] = small - big;
        weighted += values[k] * b.len() as f64;
    }
    let fallback = weighted / frames.len() as f64;
    for v in values.iter_mut().filter(|v| v.is_nan()) {
        *v = fallback;
    }
    RefMap {
        values,
        support: buckets.iter().map(|b| b.len() as u64).collect(),
        fallback,
    }
}

/// Indices of points not dominated by any other point in (cost, mae).
/// Among exact duplicates only the first occurrence survives.
pub fn domination_front(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let (ci, mi) = points[i];
            !points.iter().enumerate().any(|(j, &(cj, mj))| {
                let dominates = cj <= ci && mj <= mi && (cj < ci || mj < mi);
                dominates || (j < i && cj == ci && mj == mi)
            })
        })
        .collect()
}

pub fn cost_mae(points: &[OperatingPoint], dim: cascade_core::CostDimension) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.cost_in(dim), p.mae.mae_sum)).collect()
}

/// Oracle per-frame choice between two candidate streams, as an output stream.
pub fn per_frame_best(trace: &Trace, a: impl Fn(usize) -> PoseVector, b: impl Fn(usize) -> PoseVector) -> Vec<PoseVector> {
    trace
        .frames()
        .iter()
        .enumerate()
        .map(|(i, f)| if err_sum(b(i), f.gt) < err_sum(a(i), f.gt) { b(i) } else { a(i) })
        .collect()
}

pub fn gts(trace: &Trace) -> Vec<PoseVector> {
    trace.frames().iter().map(|f| f.gt).collect()
}
