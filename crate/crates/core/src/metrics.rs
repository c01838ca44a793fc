//! Min-max scaling and MAE metrics.
//!
//! MAE is reported in physical units (meters for x, y, z and radians for phi)
//! and summed across variables into a single scalar. Scaling is only used by
//! the output-difference score of the OP policy.

use crate::domain::{PoseVector, ScalerParams};
use crate::error::{Error, Result};

/// Per-variable mean absolute error and its sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MaeBreakdown {
    pub mae_x: f64,
    pub mae_y: f64,
    pub mae_z: f64,
    pub mae_phi: f64,
    pub mae_sum: f64,
}

impl MaeBreakdown {
    pub fn from_components(p: PoseVector) -> Self {
        MaeBreakdown {
            mae_x: p.x,
            mae_y: p.y,
            mae_z: p.z,
            mae_phi: p.phi,
            mae_sum: p.component_sum(),
        }
    }

    pub fn components(&self) -> PoseVector {
        PoseVector::new(self.mae_x, self.mae_y, self.mae_z, self.mae_phi)
    }
}

/// Min-max scales each component. Values outside the range are not clamped.
pub fn scale(p: PoseVector, s: &ScalerParams) -> PoseVector {
    PoseVector::new(
        (p.x - s.x.min) / s.x.span(),
        (p.y - s.y.min) / s.y.span(),
        (p.z - s.z.min) / s.z.span(),
        (p.phi - s.phi.min) / s.phi.span(),
    )
}

/// Inverse of [`scale`].
pub fn unscale(p: PoseVector, s: &ScalerParams) -> PoseVector {
    PoseVector::new(
        p.x * s.x.span() + s.x.min,
        p.y * s.y.span() + s.y.min,
        p.z * s.z.span() + s.z.min,
        p.phi * s.phi.span() + s.phi.min,
    )
}

/// Component-wise `|pred - gt|`. Angles are not wrapped.
pub fn abs_error(pred: PoseVector, gt: PoseVector) -> PoseVector {
    pred.zip_with(gt, |a, b| (a - b).abs())
}

/// Sum of the four absolute errors of one frame.
pub fn abs_error_sum(pred: PoseVector, gt: PoseVector) -> f64 {
    abs_error(pred, gt).component_sum()
}

/// Per-variable MAE over paired output and ground-truth streams.
pub fn mae(outputs: &[PoseVector], gts: &[PoseVector]) -> Result<MaeBreakdown> {
    if outputs.len() != gts.len() {
        return Err(Error::domain(format!(
            "MAE needs equal-length streams (got {} outputs, {} ground truths)",
            outputs.len(),
            gts.len()
        )));
    }
    mae_iter(outputs.iter().copied().zip(gts.iter().copied()))
}

/// MAE over an iterator of `(output, ground_truth)` pairs.
pub fn mae_iter(pairs: impl IntoIterator<Item = (PoseVector, PoseVector)>) -> Result<MaeBreakdown> {
    let mut total = PoseVector::ZERO;
    let mut n = 0usize;
    for (out, gt) in pairs {
        total = total.zip_with(abs_error(out, gt), |a, b| a + b);
        n += 1;
    }
    if n == 0 {
        return Err(Error::domain("MAE of an empty sequence"));
    }
    let mean = total.map(|v| v / n as f64);
    Ok(MaeBreakdown::from_components(mean))
}
