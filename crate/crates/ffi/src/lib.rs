//! C ABI over `cascade_core`.
//!
//! Every fallible function returns a [`CascadeStatus`]; on failure the message is
//! available from [`cascade_last_error_message`] on the same thread. Handles are
//! opaque, created by `*_load`/`*_build`/`*_generate`/`cascade_sweep` and released
//! with the matching `*_free`, which accepts null.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cascade_core::cost::{cost_aux, cost_op};
use cascade_core::domain::{Cell, ModelCost};
use cascade_core::sweep::OperatingPoint;
use cascade_core::{io, CostDimension, CostTable, Error, ErrorMap, PolicyConfig, PolicyKind, SynthConfig, Trace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Config = 4,
    Parse = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadePolicyKind {
    StaticSmall = 0,
    StaticBig = 1,
    Random = 2,
    Op = 3,
    AuxSm = 4,
    AuxHlc = 5,
    Oracle = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeCostDimension {
    Latency = 0,
    Energy = 1,
    Cycles = 2,
}

/// Policy descriptor. `param` is the threshold, or `p_big` for random; it is
/// ignored by static and oracle policies. `absolute` applies to OP only,
/// `ensemble_average` to the oracle only.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CascadePolicy {
    pub kind: CascadePolicyKind,
    pub param: f64,
    pub seed: u64,
    pub absolute: bool,
    pub ensemble_average: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CascadeModelCost {
    pub latency_ms: f64,
    pub energy_mj: f64,
    pub cycles: f64,
    pub weight_bytes: u64,
    pub activation_bytes: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CascadeCostTable {
    pub small: CascadeModelCost,
    pub big: CascadeModelCost,
    pub aux: CascadeModelCost,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CascadeOperatingPoint {
    pub kind: CascadePolicyKind,
    pub threshold: f64,
    pub big_fraction: f64,
    pub mae_x: f64,
    pub mae_y: f64,
    pub mae_z: f64,
    pub mae_phi: f64,
    pub mae_sum: f64,
    pub latency_ms: f64,
    pub energy_mj: f64,
    pub cycles: f64,
    pub memory_bytes: u64,
}

pub struct CascadeTrace(Trace);
pub struct CascadeErrorMap(ErrorMap);
pub struct CascadeSweep(Vec<OperatingPoint>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CascadeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => CascadeStatus::Domain,
            Error::Config(_) => CascadeStatus::Config,
            Error::Parse { .. } => CascadeStatus::Parse,
            Error::Io { .. } => CascadeStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

fn set_last_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|e| {
        let mut bytes = e.into_vec();
        bytes.retain(|&b| b != 0);
        CString::new(bytes).expect("nul bytes removed")
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> CascadeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CascadeStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CascadeStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CascadeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> FfiResult<&'a Path> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(CascadeStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

impl From<CascadePolicyKind> for PolicyKind {
    fn from(k: CascadePolicyKind) -> Self {
        match k {
            CascadePolicyKind::StaticSmall => PolicyKind::StaticSmall,
            CascadePolicyKind::StaticBig => PolicyKind::StaticBig,
            CascadePolicyKind::Random => PolicyKind::Random,
            CascadePolicyKind::Op => PolicyKind::Op,
            CascadePolicyKind::AuxSm => PolicyKind::AuxSm,
            CascadePolicyKind::AuxHlc => PolicyKind::AuxHlc,
            CascadePolicyKind::Oracle => PolicyKind::Oracle,
        }
    }
}

impl From<PolicyKind> for CascadePolicyKind {
    fn from(k: PolicyKind) -> Self {
        match k {
            PolicyKind::StaticSmall => CascadePolicyKind::StaticSmall,
            PolicyKind::StaticBig => CascadePolicyKind::StaticBig,
            PolicyKind::Random => CascadePolicyKind::Random,
            PolicyKind::Op => CascadePolicyKind::Op,
            PolicyKind::AuxSm => CascadePolicyKind::AuxSm,
            PolicyKind::AuxHlc => CascadePolicyKind::AuxHlc,
            PolicyKind::Oracle => CascadePolicyKind::Oracle,
        }
    }
}

impl From<CascadeCostDimension> for CostDimension {
    fn from(d: CascadeCostDimension) -> Self {
        match d {
            CascadeCostDimension::Latency => CostDimension::Latency,
            CascadeCostDimension::Energy => CostDimension::Energy,
            CascadeCostDimension::Cycles => CostDimension::Cycles,
        }
    }
}

impl From<&ModelCost> for CascadeModelCost {
    fn from(m: &ModelCost) -> Self {
        CascadeModelCost {
            latency_ms: m.latency_ms,
            energy_mj: m.energy_mj,
            cycles: m.cycles,
            weight_bytes: m.weight_bytes,
            activation_bytes: m.activation_bytes,
        }
    }
}

impl From<&CascadeModelCost> for ModelCost {
    fn from(m: &CascadeModelCost) -> Self {
        ModelCost {
            latency_ms: m.latency_ms,
            energy_mj: m.energy_mj,
            cycles: m.cycles,
            weight_bytes: m.weight_bytes,
            activation_bytes: m.activation_bytes,
        }
    }
}

impl From<&CostTable> for CascadeCostTable {
    fn from(t: &CostTable) -> Self {
        CascadeCostTable {
            small: (&t.small).into(),
            big: (&t.big).into(),
            aux: (&t.aux).into(),
        }
    }
}

fn cost_table(t: &CascadeCostTable) -> FfiResult<CostTable> {
    let table = CostTable {
        small: (&t.small).into(),
        big: (&t.big).into(),
        aux: (&t.aux).into(),
    };
    table.validate()?;
    Ok(table)
}

impl From<&OperatingPoint> for CascadeOperatingPoint {
    fn from(p: &OperatingPoint) -> Self {
        CascadeOperatingPoint {
            kind: p.kind.into(),
            threshold: p.threshold,
            big_fraction: p.big_fraction,
            mae_x: p.mae.mae_x,
            mae_y: p.mae.mae_y,
            mae_z: p.mae.mae_z,
            mae_phi: p.mae.mae_phi,
            mae_sum: p.mae.mae_sum,
            latency_ms: p.cost.latency_ms,
            energy_mj: p.cost.energy_mj,
            cycles: p.cost.cycles,
            memory_bytes: p.cost.memory_bytes,
        }
    }
}

fn policy_config<'a>(p: &CascadePolicy, map: Option<&'a ErrorMap>) -> FfiResult<PolicyConfig<'a>> {
    Ok(match p.kind {
        CascadePolicyKind::StaticSmall => PolicyConfig::StaticSmall,
        CascadePolicyKind::StaticBig => PolicyConfig::StaticBig,
        CascadePolicyKind::Random => PolicyConfig::Random {
            p_big: p.param,
            seed: p.seed,
        },
        CascadePolicyKind::Op => PolicyConfig::Op {
            threshold: p.param,
            absolute: p.absolute,
        },
        CascadePolicyKind::AuxSm => PolicyConfig::AuxSm { threshold: p.param },
        CascadePolicyKind::AuxHlc => PolicyConfig::AuxHlc {
            threshold: p.param,
            map: map.ok_or_else(|| Failure(CascadeStatus::Config, "aux_hlc needs an error map".into()))?,
        },
        CascadePolicyKind::Oracle => PolicyConfig::Oracle {
            ensemble_average: p.ensemble_average,
        },
    })
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cascade_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `path` must be a nul-terminated string and `out_trace` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cascade_trace_load(path: *const c_char, out_trace: *mut *mut CascadeTrace) -> CascadeStatus {
    guard(|| {
        let slot = out(out_trace, "out_trace")?;
        let trace = io::read_trace(path_arg(path)?)?;
        *slot = boxed(CascadeTrace(trace));
        Ok(())
    })
}

/// # Safety
/// `trace` must come from this library; `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn cascade_trace_save(trace: *const CascadeTrace, path: *const c_char) -> CascadeStatus {
    guard(|| {
        let t = as_ref(trace, "trace")?;
        io::write_trace_file(&t.0, path_arg(path)?)?;
        Ok(())
    })
}

/// Number of frames, 0 for null.
///
/// # Safety
/// `trace` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cascade_trace_len(trace: *const CascadeTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cascade_trace_free(trace: *mut CascadeTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Generates a synthetic stream with default settings (or the hard-borders
/// preset) and returns its train/validation/test splits.
///
/// # Safety
/// The three output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_synth_generate(
    n_frames: usize,
    seed: u64,
    hard_borders: bool,
    out_train: *mut *mut CascadeTrace,
    out_validation: *mut *mut CascadeTrace,
    out_test: *mut *mut CascadeTrace,
) -> CascadeStatus {
    guard(|| {
        let (train, validation, test) = (
            out(out_train, "out_train")?,
            out(out_validation, "out_validation")?,
            out(out_test, "out_test")?,
        );
        let base = if hard_borders {
            SynthConfig::hard_borders()
        } else {
            SynthConfig::default()
        };
        let splits = cascade_core::generate(&SynthConfig { n_frames, seed, ..base })?;
        *train = boxed(CascadeTrace(splits.train));
        *validation = boxed(CascadeTrace(splits.validation));
        *test = boxed(CascadeTrace(splits.test));
        Ok(())
    })
}

/// # Safety
/// `validation` must come from this library and `out_map` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_errormap_build(
    validation: *const CascadeTrace,
    out_map: *mut *mut CascadeErrorMap,
) -> CascadeStatus {
    guard(|| {
        let slot = out(out_map, "out_map")?;
        let map = cascade_core::build_error_map(&as_ref(validation, "validation")?.0)?;
        *slot = boxed(CascadeErrorMap(map));
        Ok(())
    })
}

/// # Safety
/// `path` must be nul-terminated and `out_map` valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_errormap_load(path: *const c_char, out_map: *mut *mut CascadeErrorMap) -> CascadeStatus {
    guard(|| {
        let slot = out(out_map, "out_map")?;
        let map = io::read_error_map(path_arg(path)?)?;
        *slot = boxed(CascadeErrorMap(map));
        Ok(())
    })
}

/// # Safety
/// `map` must come from this library; `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn cascade_errormap_save(map: *const CascadeErrorMap, path: *const c_char) -> CascadeStatus {
    guard(|| {
        io::write_error_map_file(&as_ref(map, "map")?.0, path_arg(path)?)?;
        Ok(())
    })
}

/// Map value at grid cell (`col`, `row`).
///
/// # Safety
/// `map` must come from this library and `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_errormap_lookup(
    map: *const CascadeErrorMap,
    col: usize,
    row: usize,
    out_value: *mut f64,
) -> CascadeStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = as_ref(map, "map")?.0.lookup(Cell::new(col, row))?;
        Ok(())
    })
}

/// # Safety
/// `map` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cascade_errormap_free(map: *mut CascadeErrorMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Fills `out_costs` with a named deployment preset (`"d1"` or `"d2"`).
///
/// # Safety
/// `name` must be nul-terminated and `out_costs` valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_cost_preset(name: *const c_char, out_costs: *mut CascadeCostTable) -> CascadeStatus {
    guard(|| {
        let slot = out(out_costs, "out_costs")?;
        let name = as_ref(name, "name").map(|p| CStr::from_ptr(p).to_string_lossy())?;
        let table = CostTable::preset(&name)
            .ok_or_else(|| Failure(CascadeStatus::InvalidArgument, format!("unknown cost preset {name:?}")))?;
        *slot = (&table).into();
        Ok(())
    })
}

unsafe fn expected_cost(
    f: fn(f64, &CostTable, CostDimension) -> f64,
    f_big: f64,
    costs: *const CascadeCostTable,
    dim: CascadeCostDimension,
    out_cost: *mut f64,
) -> CascadeStatus {
    guard(|| {
        let slot = out(out_cost, "out_cost")?;
        if !(0.0..=1.0).contains(&f_big) {
            return Err(Failure(CascadeStatus::InvalidArgument, format!("f_big must be in [0, 1], got {f_big}")));
        }
        *slot = f(f_big, &cost_table(as_ref(costs, "costs")?)?, dim.into());
        Ok(())
    })
}

/// Expected per-frame cost when the small model always runs and the big one on `f_big` of frames.
///
/// # Safety
/// `costs` and `out_cost` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_cost_op(
    f_big: f64,
    costs: *const CascadeCostTable,
    dim: CascadeCostDimension,
    out_cost: *mut f64,
) -> CascadeStatus {
    expected_cost(cost_op, f_big, costs, dim, out_cost)
}

/// Expected per-frame cost when the aux network always runs and exactly one model follows.
///
/// # Safety
/// `costs` and `out_cost` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_cost_aux(
    f_big: f64,
    costs: *const CascadeCostTable,
    dim: CascadeCostDimension,
    out_cost: *mut f64,
) -> CascadeStatus {
    expected_cost(cost_aux, f_big, costs, dim, out_cost)
}

/// Top-1 minus top-2 of `len` probabilities.
///
/// # Safety
/// `probs` must point to `len` doubles and `out_margin` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_score_margin(probs: *const f64, len: usize, out_margin: *mut f64) -> CascadeStatus {
    guard(|| {
        let slot = out(out_margin, "out_margin")?;
        if probs.is_null() {
            return Err(null("probs"));
        }
        *slot = cascade_core::policy::score_margin(std::slice::from_raw_parts(probs, len))?;
        Ok(())
    })
}

/// Runs one policy over a trace. `map` may be null unless the policy is Aux-HLC.
///
/// # Safety
/// Handles must come from this library; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_evaluate(
    trace: *const CascadeTrace,
    policy: *const CascadePolicy,
    map: *const CascadeErrorMap,
    costs: *const CascadeCostTable,
    out_point: *mut CascadeOperatingPoint,
) -> CascadeStatus {
    guard(|| {
        let slot = out(out_point, "out_point")?;
        let map = map.as_ref().map(|m| &m.0);
        let cfg = policy_config(as_ref(policy, "policy")?, map)?;
        let p = cascade_core::evaluate(&as_ref(trace, "trace")?.0, &cfg, &cost_table(as_ref(costs, "costs")?)?)?;
        *slot = (&p).into();
        Ok(())
    })
}

/// Sweeps the policy's parameter over every candidate value. The descriptor's
/// own `param` is ignored.
///
/// # Safety
/// Handles must come from this library; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_sweep(
    trace: *const CascadeTrace,
    policy: *const CascadePolicy,
    map: *const CascadeErrorMap,
    costs: *const CascadeCostTable,
    out_sweep: *mut *mut CascadeSweep,
) -> CascadeStatus {
    guard(|| {
        let slot = out(out_sweep, "out_sweep")?;
        let map = map.as_ref().map(|m| &m.0);
        let cfg = policy_config(as_ref(policy, "policy")?, map)?;
        let points = cascade_core::sweep(&as_ref(trace, "trace")?.0, &cfg, &cost_table(as_ref(costs, "costs")?)?)?;
        *slot = boxed(CascadeSweep(points));
        Ok(())
    })
}

/// Pareto-optimal subset of a sweep in the (cost, MAE sum) plane, as a new handle.
///
/// # Safety
/// `sweep` must come from this library and `out_front` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_sweep_pareto(
    sweep: *const CascadeSweep,
    dim: CascadeCostDimension,
    out_front: *mut *mut CascadeSweep,
) -> CascadeStatus {
    guard(|| {
        let slot = out(out_front, "out_front")?;
        let front = cascade_core::pareto_front(&as_ref(sweep, "sweep")?.0, dim.into());
        *slot = boxed(CascadeSweep(front));
        Ok(())
    })
}

/// Number of points, 0 for null.
///
/// # Safety
/// `sweep` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cascade_sweep_len(sweep: *const CascadeSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `sweep` must come from this library and `out_point` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_sweep_get(
    sweep: *const CascadeSweep,
    index: usize,
    out_point: *mut CascadeOperatingPoint,
) -> CascadeStatus {
    guard(|| {
        let slot = out(out_point, "out_point")?;
        let points = &as_ref(sweep, "sweep")?.0;
        let p = points.get(index).ok_or_else(|| {
            Failure(CascadeStatus::InvalidArgument, format!("index {index} out of range for {} points", points.len()))
        })?;
        *slot = p.into();
        Ok(())
    })
}

/// # Safety
/// `sweep` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cascade_sweep_free(sweep: *mut CascadeSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}
