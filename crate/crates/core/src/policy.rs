//! Per-frame decision policies for a small/big model cascade.
//!
//! Every policy is a pure function of `(trace, config)` and yields exactly one
//! [`Decision`] per frame. Scores follow one convention: for OP and Aux-HLC the
//! big model runs when the score is strictly above the threshold, for Aux-SM
//! when the score margin is at or below it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{PoseVector, ScalerParams, Trace};
use crate::error::{Error, Result};
use crate::error_map::ErrorMap;
use crate::metrics::{abs_error_sum, mae_iter, scale, MaeBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    StaticSmall,
    StaticBig,
    Random,
    Op,
    AuxSm,
    AuxHlc,
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::StaticSmall,
        PolicyKind::StaticBig,
        PolicyKind::Random,
        PolicyKind::Op,
        PolicyKind::AuxSm,
        PolicyKind::AuxHlc,
        PolicyKind::Oracle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::StaticSmall => "static_small",
            PolicyKind::StaticBig => "static_big",
            PolicyKind::Random => "random",
            PolicyKind::Op => "op",
            PolicyKind::AuxSm => "aux_sm",
            PolicyKind::AuxHlc => "aux_hlc",
            PolicyKind::Oracle => "oracle",
        }
    }

    /// Whether the policy is driven by a tunable score threshold.
    pub fn is_thresholded(&self) -> bool {
        matches!(self, PolicyKind::Op | PolicyKind::AuxSm | PolicyKind::AuxHlc)
    }

    /// Whether the auxiliary head-localization network runs on every frame.
    pub fn uses_aux(&self) -> bool {
        matches!(self, PolicyKind::AuxSm | PolicyKind::AuxHlc)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown policy {s:?}")))
    }
}

/// A fully parameterized policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyConfig<'a> {
    StaticSmall,
    StaticBig,
    Random { p_big: f64, seed: u64 },
    Op { threshold: f64, absolute: bool },
    AuxSm { threshold: f64 },
    AuxHlc { threshold: f64, map: &'a ErrorMap },
    Oracle { ensemble_average: bool },
}

impl PolicyConfig<'_> {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicyConfig::StaticSmall => PolicyKind::StaticSmall,
            PolicyConfig::StaticBig => PolicyKind::StaticBig,
            PolicyConfig::Random { .. } => PolicyKind::Random,
            PolicyConfig::Op { .. } => PolicyKind::Op,
            PolicyConfig::AuxSm { .. } => PolicyKind::AuxSm,
            PolicyConfig::AuxHlc { .. } => PolicyKind::AuxHlc,
            PolicyConfig::Oracle { .. } => PolicyKind::Oracle,
        }
    }

    /// The tunable parameter: the threshold, or `p_big` for random, 0 otherwise.
    pub fn threshold(&self) -> f64 {
        match *self {
            PolicyConfig::Op { threshold, .. }
            | PolicyConfig::AuxSm { threshold }
            | PolicyConfig::AuxHlc { threshold, .. } => threshold,
            PolicyConfig::Random { p_big, .. } => p_big,
            _ => 0.0,
        }
    }

    /// Same policy with its tunable parameter replaced; fixed policies are returned unchanged.
    pub fn with_threshold(self, th: f64) -> Self {
        match self {
            PolicyConfig::Op { absolute, .. } => PolicyConfig::Op { threshold: th, absolute },
            PolicyConfig::AuxSm { .. } => PolicyConfig::AuxSm { threshold: th },
            PolicyConfig::AuxHlc { map, .. } => PolicyConfig::AuxHlc { threshold: th, map },
            PolicyConfig::Random { seed, .. } => PolicyConfig::Random { p_big: th, seed },
            fixed => fixed,
        }
    }
}

/// What the policy did on one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub frame_t: u64,
    pub invoked_big: bool,
    pub invoked_small: bool,
    pub invoked_aux: bool,
    pub output: PoseVector,
    pub score: f64,
}

/// Sum of the four min-max scaled components.
pub fn scaled_sum(p: PoseVector, s: &ScalerParams) -> f64 {
    scale(p, s).component_sum()
}

/// Change of the scaled output sum between consecutive small-model predictions.
pub fn op_score(current: PoseVector, previous: PoseVector, s: &ScalerParams, absolute: bool) -> f64 {
    let d = scaled_sum(current, s) - scaled_sum(previous, s);
    if absolute {
        d.abs()
    } else {
        d
    }
}

/// Top-1 minus top-2 probability.
pub fn score_margin(probs: &[f64]) -> Result<f64> {
    if probs.len() < 2 {
        return Err(Error::domain(format!(
            "score margin needs at least 2 probabilities, got {}",
            probs.len()
        )));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &p in probs {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    Ok(first - second)
}

fn check_threshold(th: f64) -> Result<()> {
    if th.is_nan() {
        return Err(Error::config("threshold is NaN"));
    }
    Ok(())
}

fn exclusive(t: u64, big: bool, aux: bool, small_pred: PoseVector, big_pred: PoseVector, score: f64) -> Decision {
    Decision {
        frame_t: t,
        invoked_big: big,
        invoked_small: !big,
        invoked_aux: aux,
        output: if big { big_pred } else { small_pred },
        score,
    }
}

pub fn run_static(trace: &Trace, big: bool) -> Vec<Decision> {
    trace
        .frames()
        .iter()
        .map(|f| exclusive(f.t, big, false, f.small_pred, f.big_pred, 0.0))
        .collect()
}

/// Output-based partitioning. The small model runs on every frame; the big model
/// also runs on the first frame and whenever the OP score exceeds `threshold`,
/// in which case the output is the mean of both predictions.
pub fn run_op_policy(trace: &Trace, threshold: f64, absolute: bool) -> Result<Vec<Decision>> {
    check_threshold(threshold)?;
    let s = trace.scaler();
    let frames = trace.frames();
    let mut out = Vec::with_capacity(frames.len());
    let mut previous: Option<PoseVector> = None;
    for f in frames {
        let (score, big) = match previous {
            None => (0.0, true),
            Some(prev) => {
                let score = op_score(f.small_pred, prev, s, absolute);
                (score, score > threshold)
            }
        };
        out.push(Decision {
            frame_t: f.t,
            invoked_big: big,
            invoked_small: true,
            invoked_aux: false,
            output: if big { f.small_pred.midpoint(f.big_pred) } else { f.small_pred },
            score,
        });
        previous = Some(f.small_pred);
    }
    Ok(out)
}

/// Aux-SM: big model iff the auxiliary score margin is `<= threshold`.
pub fn run_aux_sm_policy(trace: &Trace, threshold: f64) -> Result<Vec<Decision>> {
    check_threshold(threshold)?;
    trace
        .frames()
        .iter()
        .map(|f| {
            let sm = score_margin(&f.aux_probs)
                .map_err(|e| Error::domain(format!("frame {}: {e}", f.t)))?;
            Ok(exclusive(f.t, sm <= threshold, true, f.small_pred, f.big_pred, sm))
        })
        .collect()
}

/// Aux-HLC: big model iff the error map value at the predicted head cell is
/// `> threshold`.
pub fn run_aux_hlc_policy(trace: &Trace, threshold: f64, map: &ErrorMap) -> Result<Vec<Decision>> {
    check_threshold(threshold)?;
    let grid = trace.grid();
    if !map.matches(grid) {
        let m = map.grid();
        return Err(Error::config(format!(
            "error map grid {}x{} on {}x{} does not match trace grid {}x{} on {}x{}",
            m.cols, m.rows, m.image_width, m.image_height, grid.cols, grid.rows, grid.image_width, grid.image_height
        )));
    }
    trace
        .frames()
        .iter()
        .map(|f| {
            let e = map.lookup(f.predicted_cell(grid)?)?;
            Ok(exclusive(f.t, e > threshold, true, f.small_pred, f.big_pred, e))
        })
        .collect()
}

/// Zero-cost baseline: big model with probability `p_big`, seeded.
pub fn run_random_policy(trace: &Trace, p_big: f64, seed: u64) -> Result<Vec<Decision>> {
    if !(0.0..=1.0).contains(&p_big) {
        return Err(Error::config(format!("p_big must be in [0, 1], got {p_big}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(trace
        .frames()
        .iter()
        .map(|f| {
            let big = rng.random::<f64>() < p_big;
            exclusive(f.t, big, false, f.small_pred, f.big_pred, 0.0)
        })
        .collect())
}

/// Ideal selector with ground-truth access: takes the big path iff its
/// absolute-error sum is strictly lower than the small model's.
pub fn run_oracle_policy(trace: &Trace, ensemble_average: bool) -> Vec<Decision> {
    trace
        .frames()
        .iter()
        .map(|f| {
            let candidate = if ensemble_average {
                f.small_pred.midpoint(f.big_pred)
            } else {
                f.big_pred
            };
            let small_err = abs_error_sum(f.small_pred, f.gt);
            let gain = small_err - abs_error_sum(candidate, f.gt);
            let big = gain > 0.0;
            Decision {
                frame_t: f.t,
                invoked_big: big,
                invoked_small: !big || ensemble_average,
                invoked_aux: false,
                output: if big { candidate } else { f.small_pred },
                score: gain,
            }
        })
        .collect()
}

/// Runs any configured policy over the trace.
pub fn run(trace: &Trace, cfg: &PolicyConfig<'_>) -> Result<Vec<Decision>> {
    match *cfg {
        PolicyConfig::StaticSmall => Ok(run_static(trace, false)),
        PolicyConfig::StaticBig => Ok(run_static(trace, true)),
        PolicyConfig::Random { p_big, seed } => run_random_policy(trace, p_big, seed),
        PolicyConfig::Op { threshold, absolute } => run_op_policy(trace, threshold, absolute),
        PolicyConfig::AuxSm { threshold } => run_aux_sm_policy(trace, threshold),
        PolicyConfig::AuxHlc { threshold, map } => run_aux_hlc_policy(trace, threshold, map),
        PolicyConfig::Oracle { ensemble_average } => Ok(run_oracle_policy(trace, ensemble_average)),
    }
}

/// MAE of the adaptive output stream against the trace's ground truth.
pub fn decisions_mae(trace: &Trace, decisions: &[Decision]) -> Result<MaeBreakdown> {
    if decisions.len() != trace.len() {
        return Err(Error::domain(format!(
            "{} decisions for a {}-frame trace",
            decisions.len(),
            trace.len()
        )));
    }
    mae_iter(decisions.iter().zip(trace.frames()).map(|(d, f)| (d.output, f.gt)))
}

/// Fraction of frames on which the big model ran.
pub fn big_fraction(decisions: &[Decision]) -> f64 {
    if decisions.is_empty() {
        return 0.0;
    }
    decisions.iter().filter(|d| d.invoked_big).count() as f64 / decisions.len() as f64
}
