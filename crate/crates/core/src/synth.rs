//! Seeded synthetic traces with controllable model-error structure.
//!
//! Ground-truth poses and the head pixel follow reflective Gaussian random
//! walks. Predictions are ground truth plus Gaussian noise; the small model's
//! noise is multiplied by `1 + (border_penalty - 1) * k`, where `k` counts the
//! image borders (0, 1 or 2) the true head cell touches. Corners therefore see
//! the largest small-vs-big gap, then edges, then the interior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::domain::{CellClass, FrameRecord, GridSpec, PoseVector, ScalerParams, Split, Trace, VarRange};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_frames: usize,
    pub seed: u64,
    pub grid: GridSpec,
    pub scaler: ScalerParams,
    /// Per-frame random-walk step (standard deviation) of each ground-truth variable.
    pub motion: PoseVector,
    pub small_noise_sigma: PoseVector,
    pub big_noise_sigma: PoseVector,
    pub border_penalty: f64,
    /// Probability that the auxiliary argmax is the true head cell.
    pub aux_accuracy: f64,
    /// Probability mass placed on the chosen cell.
    pub aux_confidence: f64,
    /// Per-frame relative reduction of `aux_confidence`, drawn uniformly in `[0, aux_jitter]`.
    pub aux_jitter: f64,
    /// Head-pixel walk step as a fraction of the image dimension.
    pub head_step: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_frames: 10_000,
            seed: 0,
            grid: GridSpec {
                cols: 8,
                rows: 6,
                image_width: 320,
                image_height: 240,
            },
            scaler: ScalerParams {
                x: VarRange::new(0.5, 3.0),
                y: VarRange::new(-1.5, 1.5),
                z: VarRange::new(-0.6, 0.6),
                phi: VarRange::new(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            },
            motion: PoseVector::new(0.04, 0.05, 0.02, 0.06),
            small_noise_sigma: PoseVector::new(0.30, 0.30, 0.32, 0.62),
            big_noise_sigma: PoseVector::new(0.24, 0.18, 0.29, 0.60),
            border_penalty: 1.5,
            aux_accuracy: 0.85,
            aux_confidence: 0.8,
            aux_jitter: 0.3,
            head_step: 0.05,
        }
    }
}

impl SynthConfig {
    /// Strong border effect with a perfect head classifier.
    pub fn hard_borders() -> Self {
        SynthConfig {
            border_penalty: 3.0,
            aux_accuracy: 1.0,
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.scaler.validate()?;
        if self.n_frames < 10 {
            return Err(Error::domain(format!(
                "need at least 10 frames to fill three splits, got {}",
                self.n_frames
            )));
        }
        let arrays = [
            ("motion", self.motion),
            ("small_noise_sigma", self.small_noise_sigma),
            ("big_noise_sigma", self.big_noise_sigma),
        ];
        for (name, v) in arrays {
            if v.to_array().iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(Error::domain(format!("{name} entries must be finite and >= 0")));
            }
        }
        let (small, big) = (self.small_noise_sigma.to_array(), self.big_noise_sigma.to_array());
        if small.iter().zip(big).any(|(s, b)| b > *s) {
            return Err(Error::domain("big_noise_sigma must not exceed small_noise_sigma"));
        }
        if !(self.border_penalty.is_finite() && self.border_penalty >= 0.0) {
            return Err(Error::domain("border_penalty must be finite and >= 0"));
        }
        for (name, v) in [
            ("aux_accuracy", self.aux_accuracy),
            ("aux_confidence", self.aux_confidence),
            ("aux_jitter", self.aux_jitter),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(self.head_step.is_finite() && self.head_step >= 0.0) {
            return Err(Error::domain("head_step must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Train, validation and test splits of one generated stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSplits {
    pub train: Trace,
    pub validation: Trace,
    pub test: Trace,
}

/// Folds `v` into `[lo, hi]` as if reflected at both walls.
fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    let period = 2.0 * span;
    let m = (v - lo).rem_euclid(period);
    if m <= span {
        lo + m
    } else {
        hi - (m - span)
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn noisy(rng: &mut ChaCha8Rng, base: PoseVector, sigma: PoseVector, factor: f64) -> PoseVector {
    let mut out = base.to_array();
    for (o, s) in out.iter_mut().zip(sigma.to_array()) {
        *o += factor * s * gaussian(rng);
    }
    PoseVector::from_array(out)
}

fn aux_probs(rng: &mut ChaCha8Rng, cfg: &SynthConfig, true_flat: usize) -> Vec<f64> {
    let k = cfg.grid.n_cells();
    if k == 1 {
        return vec![1.0];
    }
    let correct = rng.random::<f64>() < cfg.aux_accuracy;
    let chosen = if correct {
        true_flat
    } else {
        // uniform over the k - 1 wrong cells
        let w = rng.random_range(0..k - 1);
        if w >= true_flat {
            w + 1
        } else {
            w
        }
    };
    let peak = cfg.aux_confidence * (1.0 - cfg.aux_jitter * rng.random::<f64>());
    let rest = (1.0 - peak) / (k - 1) as f64;
    let mut probs = vec![rest; k];
    probs[chosen] = peak;
    probs
}

/// Generates one stream and splits it 70/20/10 by frame count.
pub fn generate(cfg: &SynthConfig) -> Result<SynthSplits> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ranges = cfg.scaler.ranges();
    let (w, h) = (f64::from(cfg.grid.image_width), f64::from(cfg.grid.image_height));
    // keep pixels strictly inside the image
    let (u_max, v_max) = (w * (1.0 - 1e-9), h * (1.0 - 1e-9));

    let mut gt = ranges.map(|r| r.min + rng.random::<f64>() * r.span());
    let mut head_u = rng.random::<f64>() * u_max;
    let mut head_v = rng.random::<f64>() * v_max;

    let mut frames = Vec::with_capacity(cfg.n_frames);
    for t in 0..cfg.n_frames {
        if t > 0 {
            for ((g, r), step) in gt.iter_mut().zip(ranges).zip(cfg.motion.to_array()) {
                *g = reflect(*g + step * gaussian(&mut rng), r.min, r.max);
            }
            head_u = reflect(head_u + cfg.head_step * w * gaussian(&mut rng), 0.0, u_max);
            head_v = reflect(head_v + cfg.head_step * h * gaussian(&mut rng), 0.0, v_max);
        }
        let gt_pose = PoseVector::from_array(gt);
        let cell = cfg.grid.head_cell(head_u, head_v)?;
        let borders = match cfg.grid.classify(cell) {
            CellClass::Interior => 0.0,
            CellClass::Edge => 1.0,
            CellClass::Corner => 2.0,
        };
        let small_factor = 1.0 + (cfg.border_penalty - 1.0) * borders;
        let small_pred = noisy(&mut rng, gt_pose, cfg.small_noise_sigma, small_factor);
        let big_pred = noisy(&mut rng, gt_pose, cfg.big_noise_sigma, 1.0);
        let probs = aux_probs(&mut rng, cfg, cfg.grid.flat_index(cell));
        frames.push(FrameRecord {
            t: t as u64,
            gt: gt_pose,
            small_pred,
            big_pred,
            head_u,
            head_v,
            aux_probs: probs,
        });
    }

    let n_train = cfg.n_frames * 7 / 10;
    let n_val = cfg.n_frames * 2 / 10;
    let test = frames.split_off(n_train + n_val);
    let validation = frames.split_off(n_train);
    let make = |frames, split| Trace::new(cfg.grid, cfg.scaler, frames, split);
    Ok(SynthSplits {
        train: make(frames, Split::Train)?,
        validation: make(validation, Split::Validation)?,
        test: make(test, Split::Test)?,
    })
}
