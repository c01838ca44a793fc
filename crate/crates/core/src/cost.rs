//! Expected per-frame cost of a policy run and deployed memory footprint.
//!
//! Two cost forms exist. In a *cascade* the small model runs on every frame
//! and the big one on a fraction `f` of them: `C_small + f * C_big`. In an
//! *exclusive* scheme exactly one of the two runs per frame, optionally after
//! an auxiliary network: `C_aux + (1 - f) * C_small + f * C_big`.

use std::fmt;
use std::str::FromStr;

use crate::domain::{CostTable, Model};
use crate::error::{Error, Result};
use crate::policy::{big_fraction, Decision, PolicyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CostDimension {
    #[default]
    Latency,
    Energy,
    Cycles,
}

impl CostDimension {
    pub fn as_str(&self) -> &'static str {
        match self {
            CostDimension::Latency => "latency",
            CostDimension::Energy => "energy",
            CostDimension::Cycles => "cycles",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            CostDimension::Latency => "ms",
            CostDimension::Energy => "mJ",
            CostDimension::Cycles => "cycles",
        }
    }
}

impl fmt::Display for CostDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostDimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latency" => Ok(CostDimension::Latency),
            "energy" => Ok(CostDimension::Energy),
            "cycles" => Ok(CostDimension::Cycles),
            other => Err(Error::config(format!("unknown cost dimension {other:?}"))),
        }
    }
}

fn unit_cost(costs: &CostTable, m: Model, dim: CostDimension) -> f64 {
    let c = costs.get(m);
    match dim {
        CostDimension::Latency => c.latency_ms,
        CostDimension::Energy => c.energy_mj,
        CostDimension::Cycles => c.cycles,
    }
}

/// Cascade cost: small model always, big model on a fraction `f_big` of frames.
pub fn cost_op(f_big: f64, costs: &CostTable, dim: CostDimension) -> f64 {
    unit_cost(costs, Model::Small, dim) + f_big * unit_cost(costs, Model::Big, dim)
}

/// Exclusive cost with the table's auxiliary network in front.
pub fn cost_aux(f_big: f64, costs: &CostTable, dim: CostDimension) -> f64 {
    unit_cost(costs, Model::Aux, dim) + cost_exclusive(f_big, costs, dim)
}

/// Exclusive cost without an auxiliary network (random, static and oracle baselines).
pub fn cost_exclusive(f_big: f64, costs: &CostTable, dim: CostDimension) -> f64 {
    (1.0 - f_big) * unit_cost(costs, Model::Small, dim) + f_big * unit_cost(costs, Model::Big, dim)
}

/// Weights of every deployed model plus the largest single activation buffer.
pub fn memory_footprint(models: &[Model], costs: &CostTable) -> Result<u64> {
    if models.is_empty() {
        return Err(Error::domain("memory footprint of an empty deployment"));
    }
    let mut seen = Vec::with_capacity(3);
    for &m in models {
        if !seen.contains(&m) {
            seen.push(m);
        }
    }
    let weights: u64 = seen.iter().map(|&m| costs.get(m).weight_bytes).sum();
    let activations = seen.iter().map(|&m| costs.get(m).activation_bytes).max().unwrap_or(0);
    Ok(weights + activations)
}

/// Models a policy keeps resident.
pub fn deployed_models(kind: PolicyKind) -> &'static [Model] {
    match kind {
        PolicyKind::StaticSmall => &[Model::Small],
        PolicyKind::StaticBig => &[Model::Big],
        PolicyKind::AuxSm | PolicyKind::AuxHlc => &[Model::Small, Model::Big, Model::Aux],
        PolicyKind::Random | PolicyKind::Op | PolicyKind::Oracle => &[Model::Small, Model::Big],
    }
}

/// Which cost form a decision stream follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostScheme {
    Cascade,
    Exclusive { aux: bool },
}

impl CostScheme {
    pub fn cost(&self, f_big: f64, costs: &CostTable, dim: CostDimension) -> f64 {
        match self {
            CostScheme::Cascade => cost_op(f_big, costs, dim),
            CostScheme::Exclusive { aux: true } => cost_aux(f_big, costs, dim),
            CostScheme::Exclusive { aux: false } => cost_exclusive(f_big, costs, dim),
        }
    }
}

/// Expected per-frame cost of one policy run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostReport {
    pub big_fraction: f64,
    pub latency_ms: f64,
    pub energy_mj: f64,
    pub cycles: f64,
    pub memory_bytes: u64,
}

impl CostReport {
    pub fn get(&self, dim: CostDimension) -> f64 {
        match dim {
            CostDimension::Latency => self.latency_ms,
            CostDimension::Energy => self.energy_mj,
            CostDimension::Cycles => self.cycles,
        }
    }

    pub fn from_fraction(f_big: f64, scheme: CostScheme, kind: PolicyKind, costs: &CostTable) -> Result<Self> {
        if !(0.0..=1.0).contains(&f_big) {
            return Err(Error::domain(format!("big fraction {f_big} outside [0, 1]")));
        }
        Ok(CostReport {
            big_fraction: f_big,
            latency_ms: scheme.cost(f_big, costs, CostDimension::Latency),
            energy_mj: scheme.cost(f_big, costs, CostDimension::Energy),
            cycles: scheme.cost(f_big, costs, CostDimension::Cycles),
            memory_bytes: memory_footprint(deployed_models(kind), costs)?,
        })
    }
}

/// Infers the cost form from a decision stream, checking it is consistent with `kind`.
pub fn cost_scheme(decisions: &[Decision], kind: PolicyKind) -> Result<CostScheme> {
    if let Some(d) = decisions.iter().find(|d| !d.invoked_small && !d.invoked_big) {
        return Err(Error::domain(format!("frame {} invokes neither model", d.frame_t)));
    }
    let all_small = decisions.iter().all(|d| d.invoked_small);
    let one_model = decisions.iter().all(|d| d.invoked_small != d.invoked_big);
    let aux_frames = decisions.iter().filter(|d| d.invoked_aux).count();
    let inconsistent = |why: &str| Error::domain(format!("{kind} decisions are inconsistent: {why}"));

    if kind.uses_aux() {
        if aux_frames != decisions.len() {
            return Err(inconsistent("auxiliary network skipped on some frames"));
        }
        if !one_model {
            return Err(inconsistent("expected exactly one regressor per frame"));
        }
        return Ok(CostScheme::Exclusive { aux: true });
    }
    if aux_frames > 0 {
        return Err(inconsistent("auxiliary network invoked"));
    }
    match kind {
        PolicyKind::Op => {
            if !all_small {
                return Err(inconsistent("small model skipped on some frames"));
            }
            Ok(CostScheme::Cascade)
        }
        PolicyKind::Oracle if all_small && !one_model => Ok(CostScheme::Cascade),
        _ => {
            if !one_model {
                return Err(inconsistent("expected exactly one regressor per frame"));
            }
            Ok(CostScheme::Exclusive { aux: false })
        }
    }
}

/// Cost report of a policy run.
pub fn report(decisions: &[Decision], costs: &CostTable, kind: PolicyKind) -> Result<CostReport> {
    if decisions.is_empty() {
        return Err(Error::domain("cost report of an empty decision stream"));
    }
    let scheme = cost_scheme(decisions, kind)?;
    CostReport::from_fraction(big_fraction(decisions), scheme, kind, costs)
}
