//! Core data types shared by every other module.

use std::fmt;

use crate::error::{Error, Result};

/// Probability sums within this distance of 1 are accepted as-is.
pub const PROB_SUM_TOL: f64 = 1e-6;
/// Probability sums within this distance of 1 are renormalized at load; worse is rejected.
pub const PROB_RENORM_TOL: f64 = 1e-3;

/// A head pose: 3D position in meters plus the rotation angle in radians.
///
/// The same type carries the dimensionless min-max scaled form.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
}

impl PoseVector {
    pub const ZERO: PoseVector = PoseVector::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64, phi: f64) -> Self {
        PoseVector { x, y, z, phi }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PoseVector::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.phi]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        PoseVector::new(f(self.x), f(self.y), f(self.z), f(self.phi))
    }

    pub fn zip_with(self, other: PoseVector, f: impl Fn(f64, f64) -> f64) -> Self {
        PoseVector::new(
            f(self.x, other.x),
            f(self.y, other.y),
            f(self.z, other.z),
            f(self.phi, other.phi),
        )
    }

    /// Sum of the four components.
    pub fn component_sum(&self) -> f64 {
        self.x + self.y + self.z + self.phi
    }

    /// Component-wise arithmetic mean of two poses.
    pub fn midpoint(self, other: PoseVector) -> Self {
        self.zip_with(other, |a, b| (a + b) / 2.0)
    }
}

/// Closed `[min, max]` range of one regressed variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarRange {
    pub min: f64,
    pub max: f64,
}

impl VarRange {
    pub const fn new(min: f64, max: f64) -> Self {
        VarRange { min, max }
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

/// Per-variable min-max scaler parameters, fitted externally on a training split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalerParams {
    pub x: VarRange,
    pub y: VarRange,
    pub z: VarRange,
    pub phi: VarRange,
}

impl ScalerParams {
    pub fn new(x: VarRange, y: VarRange, z: VarRange, phi: VarRange) -> Result<Self> {
        let s = ScalerParams { x, y, z, phi };
        s.validate()?;
        Ok(s)
    }

    pub fn ranges(&self) -> [VarRange; 4] {
        [self.x, self.y, self.z, self.phi]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in VAR_NAMES.iter().zip(self.ranges()) {
            if !(r.min.is_finite() && r.max.is_finite()) {
                return Err(Error::domain(format!("scaler range for {name} is not finite")));
            }
            if r.max <= r.min {
                return Err(Error::domain(format!(
                    "scaler range for {name} needs max > min (got min={}, max={})",
                    r.min, r.max
                )));
            }
        }
        Ok(())
    }
}

/// Variable names in canonical order.
pub const VAR_NAMES: [&str; 4] = ["x", "y", "z", "phi"];

/// A grid cell, `col` along the image width and `row` along the height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// How many grid borders a cell touches: 0 interior, 1 edge, 2 corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Interior,
    Edge,
    Corner,
}

/// Grid superimposed on the camera image for head localization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub cols: usize,
    pub rows: usize,
    pub image_width: u32,
    pub image_height: u32,
}

impl GridSpec {
    pub fn new(cols: usize, rows: usize, image_width: u32, image_height: u32) -> Result<Self> {
        let g = GridSpec {
            cols,
            rows,
            image_width,
            image_height,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cols == 0 || self.rows == 0 {
            return Err(Error::domain(format!(
                "grid needs at least one column and one row (got {}x{})",
                self.cols, self.rows
            )));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::domain(format!(
                "image dimensions must be positive (got {}x{})",
                self.image_width, self.image_height
            )));
        }
        Ok(())
    }

    /// Number of cells, which is also the number of auxiliary probabilities per frame.
    pub fn n_cells(&self) -> usize {
        self.cols * self.rows
    }

    /// Row-major flat index.
    pub fn flat_index(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn cell_at(&self, flat: usize) -> Cell {
        Cell::new(flat % self.cols, flat / self.cols)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.col < self.cols && cell.row < self.rows
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.n_cells()).map(|k| self.cell_at(k))
    }

    pub fn classify(&self, cell: Cell) -> CellClass {
        let on_col_border = cell.col == 0 || cell.col + 1 == self.cols;
        let on_row_border = cell.row == 0 || cell.row + 1 == self.rows;
        match (on_col_border, on_row_border) {
            (true, true) => CellClass::Corner,
            (false, false) => CellClass::Interior,
            _ => CellClass::Edge,
        }
    }

    pub fn is_border(&self, cell: Cell) -> bool {
        self.classify(cell) != CellClass::Interior
    }

    /// Grid cell containing the head pixel.
    pub fn head_cell(&self, head_u: f64, head_v: f64) -> Result<Cell> {
        let (w, h) = (f64::from(self.image_width), f64::from(self.image_height));
        if !(head_u >= 0.0 && head_u < w && head_v >= 0.0 && head_v < h) {
            return Err(Error::domain(format!(
                "head pixel ({head_u}, {head_v}) outside {}x{} image",
                self.image_width, self.image_height
            )));
        }
        // Clamp guards the u -> w rounding case for u just below w.
        let col = ((head_u * self.cols as f64 / w).floor() as usize).min(self.cols - 1);
        let row = ((head_v * self.rows as f64 / h).floor() as usize).min(self.rows - 1);
        Ok(Cell::new(col, row))
    }

    /// Cell predicted by the auxiliary classifier: row-major argmax, lowest index on ties.
    pub fn predicted_cell(&self, aux_probs: &[f64]) -> Result<Cell> {
        if aux_probs.len() != self.n_cells() {
            return Err(Error::domain(format!(
                "expected {} auxiliary probabilities for a {}x{} grid, got {}",
                self.n_cells(),
                self.cols,
                self.rows,
                aux_probs.len()
            )));
        }
        let mut best = 0;
        for (k, &p) in aux_probs.iter().enumerate().skip(1) {
            if p > aux_probs[best] {
                best = k;
            }
        }
        Ok(self.cell_at(best))
    }
}

/// One timestamped trace sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub t: u64,
    pub gt: PoseVector,
    pub small_pred: PoseVector,
    pub big_pred: PoseVector,
    pub head_u: f64,
    pub head_v: f64,
    pub aux_probs: Vec<f64>,
}

impl FrameRecord {
    /// Ground-truth head cell; errors name the frame.
    pub fn true_cell(&self, grid: &GridSpec) -> Result<Cell> {
        grid.head_cell(self.head_u, self.head_v)
            .map_err(|e| Error::domain(format!("frame {}: {}", self.t, strip_domain(&e))))
    }

    pub fn predicted_cell(&self, grid: &GridSpec) -> Result<Cell> {
        grid.predicted_cell(&self.aux_probs)
            .map_err(|e| Error::domain(format!("frame {}: {}", self.t, strip_domain(&e))))
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        for (what, p) in [
            ("ground truth", &self.gt),
            ("small prediction", &self.small_pred),
            ("big prediction", &self.big_pred),
        ] {
            if !p.is_finite() {
                return Err(Error::domain(format!("frame {}: {what} is not finite", self.t)));
            }
        }
        self.true_cell(grid)?;
        if self.aux_probs.len() != grid.n_cells() {
            return Err(Error::domain(format!(
                "frame {}: expected {} auxiliary probabilities, got {}",
                self.t,
                grid.n_cells(),
                self.aux_probs.len()
            )));
        }
        check_probabilities(&self.aux_probs, PROB_SUM_TOL)
            .map(|_| ())
            .map_err(|e| Error::domain(format!("frame {}: {}", self.t, strip_domain(&e))))
    }
}

fn strip_domain(e: &Error) -> String {
    match e {
        Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

fn check_probabilities(probs: &[f64], tol: f64) -> Result<f64> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::domain(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(sum)
}

/// Accepts a probability vector summing to 1 within [`PROB_SUM_TOL`], rescales one
/// within [`PROB_RENORM_TOL`], and rejects anything else.
pub fn normalize_probabilities(probs: &mut [f64]) -> Result<()> {
    let sum = check_probabilities(probs, PROB_RENORM_TOL)?;
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::domain(format!("unknown split tag {other:?}"))),
        }
    }
}

/// A validated, immutable sequence of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    grid: GridSpec,
    scaler: ScalerParams,
    frames: Vec<FrameRecord>,
    split: Split,
}

impl Trace {
    pub fn new(
        grid: GridSpec,
        scaler: ScalerParams,
        frames: Vec<FrameRecord>,
        split: Split,
    ) -> Result<Self> {
        grid.validate()?;
        scaler.validate()?;
        if frames.is_empty() {
            return Err(Error::domain("trace has no frames"));
        }
        for pair in frames.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::domain(format!(
                    "frame indices must strictly increase ({} follows {})",
                    pair[1].t, pair[0].t
                )));
            }
        }
        for f in &frames {
            f.validate(&grid)?;
        }
        Ok(Trace {
            grid,
            scaler,
            frames,
            split,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn scaler(&self) -> &ScalerParams {
        &self.scaler
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false for a constructed trace.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<FrameRecord> {
        self.frames
    }
}

/// Static cost figures of one deployed network.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelCost {
    pub latency_ms: f64,
    pub energy_mj: f64,
    pub cycles: f64,
    pub weight_bytes: u64,
    pub activation_bytes: u64,
}

impl ModelCost {
    /// Cycles implied by a latency at the 170 MHz cluster clock.
    pub fn from_latency(latency_ms: f64, energy_mj: f64, weight_bytes: u64, activation_bytes: u64) -> Self {
        ModelCost {
            latency_ms,
            energy_mj,
            cycles: (latency_ms * CLOCK_HZ / 1000.0).round(),
            weight_bytes,
            activation_bytes,
        }
    }
}

/// Clock frequency used to derive default cycle counts.
pub const CLOCK_HZ: f64 = 170e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Small,
    Big,
    Aux,
}

/// Per-model costs of one small/big(/aux) deployment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostTable {
    pub small: ModelCost,
    pub big: ModelCost,
    pub aux: ModelCost,
}

// Weights are 8-bit parameters; activation buffers fill the remainder of each
// static model's measured memory so that pairwise deployments reproduce the
// measured ensemble totals (250 kB, 280 kB, 289 kB).
const F1: (f64, f64, u64, u64) = (7.06, 0.57, 14_800, 138_200);
const F2: (f64, f64, u64, u64) = (8.82, 0.71, 44_500, 138_500);
const M10: (f64, f64, u64, u64) = (21.76, 1.92, 46_800, 188_200);
// Calibrated: latency and energy from inverting the aux cascade cost at 39.1% big.
// The activation size is unconstrained while it stays below the big model's.
const AUX_8X6: (f64, f64, u64, u64) = (0.43, 0.04, 39_200, 40_000);

fn model(m: (f64, f64, u64, u64)) -> ModelCost {
    ModelCost::from_latency(m.0, m.1, m.2, m.3)
}

impl CostTable {
    /// F1 small, M1.0 big, 8x6 head-localization aux network.
    pub fn d1() -> Self {
        CostTable {
            small: model(F1),
            big: model(M10),
            aux: model(AUX_8X6),
        }
    }

    /// F2 small, M1.0 big, same aux network as D1.
    pub fn d2() -> Self {
        CostTable {
            small: model(F2),
            big: model(M10),
            aux: model(AUX_8X6),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "d1" => Some(Self::d1()),
            "d2" => Some(Self::d2()),
            _ => None,
        }
    }

    pub fn get(&self, m: Model) -> &ModelCost {
        match m {
            Model::Small => &self.small,
            Model::Big => &self.big,
            Model::Aux => &self.aux,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("small", &self.small), ("big", &self.big), ("aux", &self.aux)] {
            for (field, v) in [
                ("latency_ms", c.latency_ms),
                ("energy_mj", c.energy_mj),
                ("cycles", c.cycles),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::domain(format!("{name}.{field} must be finite and >= 0 (got {v})")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid86() -> GridSpec {
        GridSpec::new(8, 6, 320, 240).unwrap()
    }

    #[test]
    fn head_cell_corners_and_midpoint() {
        let g = grid86();
        assert_eq!(g.head_cell(0.0, 0.0).unwrap(), Cell::new(0, 0));
        assert_eq!(g.head_cell(319.0, 239.0).unwrap(), Cell::new(7, 5));
        assert_eq!(g.head_cell(160.0, 120.0).unwrap(), Cell::new(4, 3));
    }

    #[test]
    fn head_cell_out_of_bounds_names_frame() {
        let g = grid86();
        assert!(g.head_cell(320.0, 0.0).is_err());
        assert!(g.head_cell(-0.5, 0.0).is_err());
        assert!(g.head_cell(0.0, f64::NAN).is_err());
        let f = FrameRecord {
            t: 42,
            gt: PoseVector::ZERO,
            small_pred: PoseVector::ZERO,
            big_pred: PoseVector::ZERO,
            head_u: 400.0,
            head_v: 10.0,
            aux_probs: vec![],
        };
        let msg = f.true_cell(&g).unwrap_err().to_string();
        assert!(msg.contains("frame 42"), "{msg}");
    }

    #[test]
    fn predicted_cell_examples() {
        let g2 = GridSpec::new(2, 2, 10, 10).unwrap();
        assert_eq!(g2.predicted_cell(&[1.0, 0.0, 0.0, 0.0]).unwrap(), Cell::new(0, 0));
        assert_eq!(g2.predicted_cell(&[0.1, 0.2, 0.6, 0.1]).unwrap(), Cell::new(0, 1));
        let g3 = GridSpec::new(3, 3, 10, 10).unwrap();
        assert_eq!(g3.predicted_cell(&[1.0 / 9.0; 9]).unwrap(), Cell::new(0, 0));
        assert!(g3.predicted_cell(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn classify_cells() {
        let g = grid86();
        assert_eq!(g.classify(Cell::new(0, 0)), CellClass::Corner);
        assert_eq!(g.classify(Cell::new(7, 5)), CellClass::Corner);
        assert_eq!(g.classify(Cell::new(3, 0)), CellClass::Edge);
        assert_eq!(g.classify(Cell::new(7, 2)), CellClass::Edge);
        assert_eq!(g.classify(Cell::new(3, 2)), CellClass::Interior);
        let counts = g.cells().fold([0; 3], |mut acc, c| {
            acc[g.classify(c) as usize] += 1;
            acc
        });
        assert_eq!(counts, [24, 20, 4]);
    }

    #[test]
    fn invalid_grid_and_scaler() {
        assert!(GridSpec::new(0, 3, 10, 10).is_err());
        assert!(GridSpec::new(3, 3, 0, 10).is_err());
        let r = VarRange::new(0.0, 1.0);
        assert!(ScalerParams::new(r, r, VarRange::new(1.0, 1.0), r).is_err());
        assert!(ScalerParams::new(r, r, r, VarRange::new(0.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn normalization_rules() {
        let mut exact = vec![0.25; 4];
        normalize_probabilities(&mut exact).unwrap();
        assert_eq!(exact, vec![0.25; 4]);

        let mut close = vec![0.2502, 0.25, 0.25, 0.25];
        normalize_probabilities(&mut close).unwrap();
        assert!((close.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut far = vec![0.3, 0.25, 0.25, 0.25];
        assert!(normalize_probabilities(&mut far).is_err());
        let mut negative = vec![1.1, -0.1];
        assert!(normalize_probabilities(&mut negative).is_err());
    }

    #[test]
    fn trace_rejects_bad_frames() {
        let g = GridSpec::new(1, 1, 4, 4).unwrap();
        let r = VarRange::new(0.0, 1.0);
        let s = ScalerParams::new(r, r, r, r).unwrap();
        let frame = |t| FrameRecord {
            t,
            gt: PoseVector::ZERO,
            small_pred: PoseVector::ZERO,
            big_pred: PoseVector::ZERO,
            head_u: 1.0,
            head_v: 1.0,
            aux_probs: vec![1.0],
        };
        assert!(Trace::new(g, s, vec![], Split::Test).is_err());
        assert!(Trace::new(g, s, vec![frame(1), frame(1)], Split::Test).is_err());
        let mut nan = frame(0);
        nan.big_pred.z = f64::NAN;
        assert!(Trace::new(g, s, vec![nan], Split::Test).is_err());
        let mut bad_len = frame(0);
        bad_len.aux_probs = vec![0.5, 0.5];
        assert!(Trace::new(g, s, vec![bad_len], Split::Test).is_err());
        assert_eq!(Trace::new(g, s, vec![frame(0), frame(3)], Split::Test).unwrap().len(), 2);
    }

    #[test]
    fn presets_reproduce_deployment_memory_totals() {
        let d1 = CostTable::d1();
        let d2 = CostTable::d2();
        let total = |c: &ModelCost| c.weight_bytes + c.activation_bytes;
        assert_eq!(total(&d1.small), 153_000);
        assert_eq!(total(&d2.small), 183_000);
        assert_eq!(total(&d1.big), 235_000);
        assert_eq!(d1.small.cycles, 1_200_200.0);
    }

    proptest! {
        #[test]
        fn head_cell_monotone_and_in_bounds(
            cols in 1usize..12, rows in 1usize..12,
            w in 1u32..640, h in 1u32..480,
            a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0,
        ) {
            let g = GridSpec::new(cols, rows, w, h).unwrap();
            let (u1, u2) = ((a.min(b)) * w as f64, (a.max(b)) * w as f64);
            let v = c * h as f64;
            let c1 = g.head_cell(u1, v).unwrap();
            let c2 = g.head_cell(u2, v).unwrap();
            prop_assert!(g.contains(c1) && g.contains(c2));
            prop_assert!(c1.col <= c2.col);
            prop_assert_eq!(c1.row, c2.row);
        }

        #[test]
        fn predicted_cell_is_scale_invariant(
            probs in proptest::collection::vec(0.0f64..1.0, 6),
            k in 0.01f64..100.0,
        ) {
            let g = GridSpec::new(3, 2, 30, 20).unwrap();
            let scaled: Vec<f64> = probs.iter().map(|p| p * k).collect();
            prop_assert_eq!(g.predicted_cell(&probs).unwrap(), g.predicted_cell(&scaled).unwrap());
        }
    }

    #[test]
    fn head_cell_is_surjective_over_full_image() {
        let g = GridSpec::new(8, 6, 320, 240).unwrap();
        let mut seen = std::collections::HashSet::new();
        for u in 0..320 {
            for v in 0..240 {
                seen.insert(g.head_cell(u as f64, v as f64).unwrap());
            }
        }
        assert_eq!(seen.len(), g.n_cells());
    }
}
