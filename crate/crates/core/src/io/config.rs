use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::kv::{exact, KvBlock};
use crate::cost::CostDimension;
use crate::domain::{CostTable, ModelCost, PoseVector, VarRange, CLOCK_HZ, VAR_NAMES};
use crate::error::{Error, Result};
use crate::error_map::ErrorMap;
use crate::policy::{PolicyConfig, PolicyKind};
use crate::synth::SynthConfig;

/// A policy named on the command line or in a run config:
/// `name[:threshold][:signed|:abs][:avg]`, e.g. `op:0.2`, `op:signed`, `random:0.5`, `oracle:avg`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Threshold, or `p_big` for the random policy.
    pub param: Option<f64>,
    pub absolute: bool,
    pub ensemble_average: bool,
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':').map(str::trim);
        let kind: PolicyKind = parts.next().unwrap_or_default().parse()?;
        let mut spec = PolicySpec {
            kind,
            param: None,
            absolute: true,
            ensemble_average: false,
        };
        for tok in parts {
            match tok {
                "signed" if kind == PolicyKind::Op => spec.absolute = false,
                "abs" if kind == PolicyKind::Op => spec.absolute = true,
                "avg" if kind == PolicyKind::Oracle => spec.ensemble_average = true,
                num if (kind.is_thresholded() || kind == PolicyKind::Random) && spec.param.is_none() => {
                    let v: f64 = match num {
                        "inf" | "+inf" => f64::INFINITY,
                        "-inf" => f64::NEG_INFINITY,
                        n => n
                            .parse()
                            .map_err(|_| Error::config(format!("bad parameter {n:?} in policy {s:?}")))?,
                    };
                    if v.is_nan() {
                        return Err(Error::config(format!("NaN parameter in policy {s:?}")));
                    }
                    spec.param = Some(v);
                }
                other => return Err(Error::config(format!("unexpected token {other:?} in policy {s:?}"))),
            }
        }
        Ok(spec)
    }
}

impl PolicySpec {
    /// Builds a runnable policy. Thresholded policies default to 0 when no
    /// parameter was given (sweeps replace it), random to `p_big = 0.5`.
    pub fn to_config<'a>(&self, map: Option<&'a ErrorMap>, seed: u64) -> Result<PolicyConfig<'a>> {
        let th = self.param.unwrap_or(0.0);
        Ok(match self.kind {
            PolicyKind::StaticSmall => PolicyConfig::StaticSmall,
            PolicyKind::StaticBig => PolicyConfig::StaticBig,
            PolicyKind::Random => PolicyConfig::Random {
                p_big: self.param.unwrap_or(0.5),
                seed,
            },
            PolicyKind::Op => PolicyConfig::Op {
                threshold: th,
                absolute: self.absolute,
            },
            PolicyKind::AuxSm => PolicyConfig::AuxSm { threshold: th },
            PolicyKind::AuxHlc => PolicyConfig::AuxHlc {
                threshold: th,
                map: map.ok_or_else(|| Error::config("policy aux_hlc needs an error map (--map)"))?,
            },
            PolicyKind::Oracle => PolicyConfig::Oracle {
                ensemble_average: self.ensemble_average,
            },
        })
    }
}

const COST_FIELDS: [&str; 5] = ["latency_ms", "energy_mj", "cycles", "weight_bytes", "activation_bytes"];

/// Parses a cost table. `preset=d1|d2` provides base values that other keys
/// override; without a preset every small/big field except `cycles` is
/// required, `cycles` defaults to latency at 170 MHz and aux fields to zero.
pub fn parse_cost_table(text: &str) -> Result<CostTable> {
    let mut kv = KvBlock::parse(text)?;
    let base = match kv.take_str("preset") {
        Some((line, name)) => {
            Some(CostTable::preset(&name).ok_or_else(|| Error::parse(line, format!("unknown cost preset {name:?}")))?)
        }
        None => None,
    };
    let mut table = base.unwrap_or_default();
    for (model, slot) in [("small", &mut table.small), ("big", &mut table.big), ("aux", &mut table.aux)] {
        let required = base.is_none() && model != "aux";
        let mut f64_field = |field: &str, current: f64| -> Result<Option<f64>> {
            let key = format!("{model}.{field}");
            match kv.take::<f64>(&key)? {
                Some(v) => Ok(Some(v)),
                None if required && field != "cycles" => Err(Error::parse(0, format!("missing required key {key:?}"))),
                None => Ok(if base.is_some() { Some(current) } else { None }),
            }
        };
        let latency = f64_field("latency_ms", slot.latency_ms)?;
        let energy = f64_field("energy_mj", slot.energy_mj)?;
        let cycles = f64_field("cycles", slot.cycles)?;
        let mut u64_field = |field: &str, current: u64| -> Result<u64> {
            let key = format!("{model}.{field}");
            match kv.take::<u64>(&key)? {
                Some(v) => Ok(v),
                None if required => Err(Error::parse(0, format!("missing required key {key:?}"))),
                None => Ok(current),
            }
        };
        let weight = u64_field("weight_bytes", slot.weight_bytes)?;
        let activation = u64_field("activation_bytes", slot.activation_bytes)?;
        let latency = latency.unwrap_or(0.0);
        *slot = ModelCost {
            latency_ms: latency,
            energy_mj: energy.unwrap_or(0.0),
            cycles: cycles.unwrap_or((latency * CLOCK_HZ / 1000.0).round()),
            weight_bytes: weight,
            activation_bytes: activation,
        };
    }
    kv.finish()?;
    table.validate()?;
    Ok(table)
}

pub fn write_cost_table(costs: &CostTable) -> String {
    let mut out = String::new();
    for (model, c) in [("small", &costs.small), ("big", &costs.big), ("aux", &costs.aux)] {
        let vals = [
            exact(c.latency_ms),
            exact(c.energy_mj),
            exact(c.cycles),
            c.weight_bytes.to_string(),
            c.activation_bytes.to_string(),
        ];
        for (field, v) in COST_FIELDS.iter().zip(vals) {
            let _ = writeln!(out, "{model}.{field}={v}");
        }
    }
    out
}

fn take_pose(kv: &mut KvBlock, prefix: &str, current: PoseVector) -> Result<PoseVector> {
    let mut a = current.to_array();
    for (name, slot) in VAR_NAMES.iter().zip(a.iter_mut()) {
        if let Some(v) = kv.take::<f64>(&format!("{prefix}.{name}"))? {
            *slot = v;
        }
    }
    Ok(PoseVector::from_array(a))
}

/// Parses a generator config; unspecified keys keep the chosen preset's values.
pub fn parse_synth_config(text: &str) -> Result<SynthConfig> {
    let mut kv = KvBlock::parse(text)?;
    let mut cfg = match kv.take_str("preset") {
        None => SynthConfig::default(),
        Some((_, p)) if p == "default" => SynthConfig::default(),
        Some((_, p)) if p == "hard_borders" => SynthConfig::hard_borders(),
        Some((line, p)) => return Err(Error::parse(line, format!("unknown synth preset {p:?}"))),
    };
    macro_rules! field {
        ($key:literal, $slot:expr) => {
            if let Some(v) = kv.take($key)? {
                $slot = v;
            }
        };
    }
    field!("n_frames", cfg.n_frames);
    field!("seed", cfg.seed);
    field!("grid_cols", cfg.grid.cols);
    field!("grid_rows", cfg.grid.rows);
    field!("image_width", cfg.grid.image_width);
    field!("image_height", cfg.grid.image_height);
    field!("border_penalty", cfg.border_penalty);
    field!("aux_accuracy", cfg.aux_accuracy);
    field!("aux_confidence", cfg.aux_confidence);
    field!("aux_jitter", cfg.aux_jitter);
    field!("head_step", cfg.head_step);
    let mut ranges = cfg.scaler.ranges();
    for (name, r) in VAR_NAMES.iter().zip(ranges.iter_mut()) {
        let min = kv.take::<f64>(&format!("scaler.{name}.min"))?.unwrap_or(r.min);
        let max = kv.take::<f64>(&format!("scaler.{name}.max"))?.unwrap_or(r.max);
        *r = VarRange::new(min, max);
    }
    cfg.scaler.x = ranges[0];
    cfg.scaler.y = ranges[1];
    cfg.scaler.z = ranges[2];
    cfg.scaler.phi = ranges[3];
    cfg.motion = take_pose(&mut kv, "motion", cfg.motion)?;
    cfg.small_noise_sigma = take_pose(&mut kv, "small_sigma", cfg.small_noise_sigma)?;
    cfg.big_noise_sigma = take_pose(&mut kv, "big_sigma", cfg.big_noise_sigma)?;
    kv.finish()?;
    cfg.validate()?;
    Ok(cfg)
}

/// Everything `compare` needs, with paths resolved against the config's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: PathBuf,
    pub error_map: Option<PathBuf>,
    pub costs: CostTable,
    pub policies: Vec<PolicySpec>,
    pub cost_dimension: CostDimension,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// Parses a run config. Keys: `train`, `validation`, `test`, `error_map`,
/// `costs` (preset name or cost file), repeated `policy`, `cost_dimension`,
/// `output_dir`, `seed`.
pub fn parse_run_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let mut kv = KvBlock::parse(text)?;
    let resolve = |p: String| -> PathBuf {
        let p = PathBuf::from(p);
        if p.is_absolute() {
            p
        } else {
            base_dir.join(p)
        }
    };
    let train = kv.take_str("train").map(|(_, p)| resolve(p));
    let validation = kv.take_str("validation").map(|(_, p)| resolve(p));
    let test = kv
        .take_str("test")
        .map(|(_, p)| resolve(p))
        .ok_or_else(|| Error::parse(0, "missing required key \"test\""))?;
    let error_map = kv.take_str("error_map").map(|(_, p)| resolve(p));
    let costs = match kv.take_str("costs") {
        None => CostTable::d1(),
        Some((line, c)) => match CostTable::preset(&c) {
            Some(t) => t,
            None => {
                let path = resolve(c);
                let text = super::read_to_string(&path)?;
                parse_cost_table(&text).map_err(|e| Error::parse(line, format!("{}: {e}", path.display())))?
            }
        },
    };
    let mut policies = Vec::new();
    for (line, p) in kv.take_repeated("policy") {
        policies.push(p.parse::<PolicySpec>().map_err(|e| Error::parse(line, e.to_string()))?);
    }
    if policies.is_empty() {
        return Err(Error::parse(0, "run config lists no policy"));
    }
    if policies.iter().any(|p| p.kind == PolicyKind::AuxHlc) && error_map.is_none() && validation.is_none() {
        return Err(Error::config("aux_hlc needs error_map or a validation trace to build one"));
    }
    let cost_dimension = kv.take("cost_dimension")?.unwrap_or(CostDimension::Cycles);
    let output_dir = kv
        .take_str("output_dir")
        .map(|(_, p)| resolve(p))
        .unwrap_or_else(|| base_dir.join("out"));
    let seed = kv.take("seed")?.unwrap_or(0);
    kv.finish()?;
    Ok(RunConfig {
        train,
        validation,
        test,
        error_map,
        costs,
        policies,
        cost_dimension,
        output_dir,
        seed,
    })
}
