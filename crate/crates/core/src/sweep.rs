//! Threshold sweeps, Pareto fronts and multi-policy comparison.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::cost::{report, CostDimension, CostReport};
use crate::domain::{CostTable, Trace};
use crate::error::{Error, Result};
use crate::metrics::MaeBreakdown;
use crate::policy::{decisions_mae, op_score, run, score_margin, PolicyConfig, PolicyKind};

/// Step of the `p_big` grid swept for the random baseline.
pub const RANDOM_STEP: f64 = 0.05;

/// One evaluated (threshold, error, cost) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub policy: String,
    pub kind: PolicyKind,
    pub threshold: f64,
    pub mae: MaeBreakdown,
    pub big_fraction: f64,
    pub cost: CostReport,
}

impl OperatingPoint {
    pub fn cost_in(&self, dim: CostDimension) -> f64 {
        self.cost.get(dim)
    }
}

/// Series label: the policy name plus any non-default variant flag.
pub fn policy_label(cfg: &PolicyConfig<'_>) -> String {
    match cfg {
        PolicyConfig::Op { absolute: false, .. } => "op:signed".to_string(),
        PolicyConfig::Oracle { ensemble_average: true } => "oracle:avg".to_string(),
        other => other.kind().as_str().to_string(),
    }
}

/// Runs one configured policy and measures it.
pub fn evaluate(trace: &Trace, cfg: &PolicyConfig<'_>, costs: &CostTable) -> Result<OperatingPoint> {
    let decisions = run(trace, cfg)?;
    let mae = decisions_mae(trace, &decisions)?;
    let cost = report(&decisions, costs, cfg.kind())?;
    Ok(OperatingPoint {
        policy: policy_label(cfg),
        kind: cfg.kind(),
        threshold: cfg.threshold(),
        mae,
        big_fraction: cost.big_fraction,
        cost,
    })
}

/// Per-frame scores a thresholded policy compares against its threshold.
/// The OP bootstrap frame has no score.
pub fn policy_scores(trace: &Trace, cfg: &PolicyConfig<'_>) -> Result<Vec<f64>> {
    let frames = trace.frames();
    match *cfg {
        PolicyConfig::Op { absolute, .. } => Ok(frames
            .windows(2)
            .map(|w| op_score(w[1].small_pred, w[0].small_pred, trace.scaler(), absolute))
            .collect()),
        PolicyConfig::AuxSm { .. } => frames.iter().map(|f| score_margin(&f.aux_probs)).collect(),
        PolicyConfig::AuxHlc { map, .. } => {
            if !map.matches(trace.grid()) {
                return Err(Error::config("error map grid does not match trace grid"));
            }
            frames
                .iter()
                .map(|f| map.lookup(f.predicted_cell(trace.grid())?))
                .collect()
        }
        _ => Ok(Vec::new()),
    }
}

/// Thresholds that enumerate every decision pattern the policy can produce on
/// this trace: each distinct observed score plus one sentinel on either side.
///
/// Random sweeps `p_big` over a fixed grid; fixed policies get a single 0.
pub fn candidate_thresholds(trace: &Trace, cfg: &PolicyConfig<'_>) -> Result<Vec<f64>> {
    match cfg.kind() {
        PolicyKind::Random => {
            let steps = (1.0 / RANDOM_STEP).round() as usize;
            return Ok((0..=steps).map(|i| i as f64 / steps as f64).collect());
        }
        k if !k.is_thresholded() => return Ok(vec![0.0]),
        _ => {}
    }
    let mut scores = policy_scores(trace, cfg)?;
    if scores.is_empty() {
        return Ok(vec![0.0]);
    }
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let lo = scores[0] - 1.0;
    let hi = scores[scores.len() - 1] + 1.0;
    let mut out = Vec::with_capacity(scores.len() + 2);
    out.push(lo);
    out.extend(scores);
    out.push(hi);
    Ok(out)
}

/// One operating point per candidate threshold, in threshold order.
pub fn sweep(trace: &Trace, cfg: &PolicyConfig<'_>, costs: &CostTable) -> Result<Vec<OperatingPoint>> {
    let thresholds = candidate_thresholds(trace, cfg)?;
    thresholds
        .par_iter()
        .map(|&th| evaluate(trace, &cfg.with_threshold(th), costs))
        .collect()
}

fn front_order(dim: CostDimension) -> impl Fn(&OperatingPoint, &OperatingPoint) -> Ordering {
    move |a, b| {
        a.cost_in(dim)
            .total_cmp(&b.cost_in(dim))
            .then(a.mae.mae_sum.total_cmp(&b.mae.mae_sum))
            .then(a.threshold.total_cmp(&b.threshold))
            .then_with(|| a.policy.cmp(&b.policy))
    }
}

/// Non-dominated subset in the (cost, MAE sum) plane, sorted by ascending cost.
/// Exact ties keep the lowest threshold.
pub fn pareto_front(points: &[OperatingPoint], dim: CostDimension) -> Vec<OperatingPoint> {
    let mut sorted: Vec<&OperatingPoint> = points.iter().collect();
    sorted.sort_by(|a, b| front_order(dim)(a, b));
    let mut front: Vec<OperatingPoint> = Vec::new();
    let mut best = f64::INFINITY;
    for p in sorted {
        if p.mae.mae_sum < best {
            best = p.mae.mae_sum;
            front.push(p.clone());
        }
    }
    front
}

/// Linear interpolation of MAE sum as a function of big fraction over `points`,
/// using the lower envelope when several points share a fraction. `None` when
/// `f` lies outside the covered range.
pub fn mae_at_fraction(points: &[OperatingPoint], f: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.big_fraction, p.mae.mae_sum)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|later, earlier| later.0 == earlier.0);
    let first = pts.first()?;
    let last = pts.last()?;
    if f < first.0 || f > last.0 {
        return None;
    }
    for w in pts.windows(2) {
        let ((f0, m0), (f1, m1)) = (w[0], w[1]);
        if f >= f0 && f <= f1 {
            return Some(if f1 == f0 { m0 } else { m0 + (m1 - m0) * (f - f0) / (f1 - f0) });
        }
    }
    Some(first.1)
}

/// Sweep results of one policy.
#[derive(Debug, Clone)]
pub struct PolicySeries {
    pub label: String,
    pub kind: PolicyKind,
    pub points: Vec<OperatingPoint>,
    pub front: Vec<OperatingPoint>,
}

/// Fronts of several policies plus static baselines and the oracle on one trace.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub dimension: CostDimension,
    pub series: Vec<PolicySeries>,
    pub static_small: OperatingPoint,
    pub static_big: OperatingPoint,
    pub oracle: OperatingPoint,
}

impl ComparisonReport {
    pub fn series(&self, label: &str) -> Option<&PolicySeries> {
        self.series.iter().find(|s| s.label == label)
    }

    /// Every reported point: fronts in series order, then static small, static big, oracle.
    pub fn rows(&self) -> Vec<&OperatingPoint> {
        let mut rows: Vec<&OperatingPoint> = self.series.iter().flat_map(|s| s.front.iter()).collect();
        rows.extend([&self.static_small, &self.static_big, &self.oracle]);
        rows
    }

    /// Cheapest deployable point whose MAE sum is within `tol` of `target`.
    /// The oracle is not deployable and never selected.
    pub fn iso_mae(&self, target: f64, tol: f64) -> Option<&OperatingPoint> {
        let dim = self.dimension;
        self.series
            .iter()
            .flat_map(|s| s.points.iter())
            .chain([&self.static_small, &self.static_big])
            .filter(|p| p.kind != PolicyKind::Oracle && (p.mae.mae_sum - target).abs() <= tol)
            .min_by(|a, b| front_order(dim)(a, b))
    }
}

/// Sweeps each policy and assembles fronts, static baselines and the oracle.
pub fn compare_policies(
    trace: &Trace,
    costs: &CostTable,
    policies: &[PolicyConfig<'_>],
    dim: CostDimension,
) -> Result<ComparisonReport> {
    let series = policies
        .iter()
        .map(|cfg| {
            let points = sweep(trace, cfg, costs)?;
            let front = pareto_front(&points, dim);
            Ok(PolicySeries {
                label: policy_label(cfg),
                kind: cfg.kind(),
                points,
                front,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        dimension: dim,
        series,
        static_small: evaluate(trace, &PolicyConfig::StaticSmall, costs)?,
        static_big: evaluate(trace, &PolicyConfig::StaticBig, costs)?,
        oracle: evaluate(trace, &PolicyConfig::Oracle { ensemble_average: false }, costs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FrameRecord, GridSpec, PoseVector, ScalerParams, Split, VarRange};
    use proptest::prelude::*;

    fn point(cost: f64, mae: f64, th: f64) -> OperatingPoint {
        OperatingPoint {
            policy: "p".into(),
            kind: PolicyKind::Op,
            threshold: th,
            mae: MaeBreakdown {
                mae_sum: mae,
                ..Default::default()
            },
            big_fraction: 0.0,
            cost: CostReport {
                latency_ms: cost,
                ..Default::default()
            },
        }
    }

    fn pairs(front: &[OperatingPoint]) -> Vec<(f64, f64)> {
        front.iter().map(|p| (p.cost.latency_ms, p.mae.mae_sum)).collect()
    }

    #[test]
    fn front_examples() {
        let d = CostDimension::Latency;
        assert_eq!(pairs(&pareto_front(&[point(1.0, 1.0, 0.0), point(2.0, 2.0, 0.0)], d)), vec![(1.0, 1.0)]);
        assert_eq!(
            pairs(&pareto_front(&[point(2.0, 1.0, 0.0), point(1.0, 2.0, 0.0)], d)),
            vec![(1.0, 2.0), (2.0, 1.0)]
        );
        let tied = pareto_front(&[point(1.0, 1.0, 0.7), point(1.0, 1.0, 0.2)], d);
        assert_eq!(tied.len(), 1);
        assert_eq!(tied[0].threshold, 0.2);
        // equal cost, higher error is dominated
        assert_eq!(pairs(&pareto_front(&[point(1.0, 2.0, 0.0), point(1.0, 1.0, 0.0)], d)), vec![(1.0, 1.0)]);
    }

    proptest! {
        #[test]
        fn front_is_permutation_invariant_and_ignores_dominated(
            raw in prop::collection::vec((0u8..20, 0u8..20), 1..60),
            seed in any::<u64>(),
        ) {
            let d = CostDimension::Latency;
            let pts: Vec<_> = raw.iter().enumerate()
                .map(|(i, &(c, m))| point(c as f64, m as f64, i as f64)).collect();
            let front = pareto_front(&pts, d);
            let mut shuffled = pts.clone();
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(&pareto_front(&shuffled, d), &front);
            let worst = front.last().unwrap();
            let mut plus = pts.clone();
            plus.push(point(worst.cost.latency_ms + 1.0, worst.mae.mae_sum + 1.0, -1.0));
            prop_assert_eq!(&pareto_front(&plus, d), &front);
            for p in &front {
                prop_assert!(pts.contains(p));
            }
        }
    }

    fn sm_trace(margins: &[f64]) -> Trace {
        let r = VarRange::new(0.0, 1.0);
        let s = ScalerParams::new(r, r, r, r).unwrap();
        let g = GridSpec::new(3, 1, 30, 10).unwrap();
        let frames = margins
            .iter()
            .enumerate()
            .map(|(t, &m)| {
                let second = (1.0 - m) / 2.0;
                FrameRecord {
                    t: t as u64,
                    gt: PoseVector::ZERO,
                    small_pred: PoseVector::new(0.3, 0.0, 0.0, 0.0),
                    big_pred: PoseVector::new(0.1, 0.0, 0.0, 0.0),
                    head_u: 1.0,
                    head_v: 1.0,
                    aux_probs: vec![second + m, second, 0.0],
                }
            })
            .collect();
        Trace::new(g, s, frames, Split::Test).unwrap()
    }

    #[test]
    fn candidates_include_sentinels() {
        let tr = sm_trace(&[0.5, 0.1, 0.9, 0.5]);
        let c = candidate_thresholds(&tr, &PolicyConfig::AuxSm { threshold: 0.0 }).unwrap();
        assert_eq!(c.len(), 5);
        assert!(c[0] < 0.1 && c[4] > 0.9);
        assert!((c[1] - 0.1).abs() < 1e-12 && (c[3] - 0.9).abs() < 1e-12);
        let flat = sm_trace(&[0.4, 0.4, 0.4]);
        assert_eq!(candidate_thresholds(&flat, &PolicyConfig::AuxSm { threshold: 0.0 }).unwrap().len(), 3);
    }

    #[test]
    fn static_sweep_is_one_point() {
        let tr = sm_trace(&[0.5, 0.1]);
        let pts = sweep(&tr, &PolicyConfig::StaticSmall, &CostTable::d1()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].cost.latency_ms, CostTable::d1().small.latency_ms);
        assert!((pts[0].mae.mae_sum - 0.3).abs() < 1e-12);
    }

    #[test]
    fn interpolation_over_fractions() {
        let mut a = point(0.0, 2.0, 0.0);
        a.big_fraction = 0.0;
        let mut b = point(0.0, 1.0, 0.0);
        b.big_fraction = 1.0;
        assert_eq!(mae_at_fraction(&[a.clone(), b.clone()], 0.25), Some(1.75));
        assert_eq!(mae_at_fraction(&[b.clone(), a.clone()], 1.0), Some(1.0));
        assert_eq!(mae_at_fraction(&[b], 0.5), None);
    }
}
