//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use cascade_core::cost::{cost_aux, cost_exclusive, cost_op, memory_footprint, deployed_models};
use cascade_core::domain::{CellClass, FrameRecord, Model, ScalerParams, VarRange};
use cascade_core::io::report_to_csv;
use cascade_core::policy::{run, run_aux_hlc_policy, run_op_policy, run_static};
use cascade_core::sweep::{candidate_thresholds, mae_at_fraction, policy_scores, OperatingPoint};
use cascade_core::{
    build_error_map, compare_policies, evaluate, pareto_front, sweep, CostDimension, CostTable, GridSpec,
    PolicyConfig, PolicyKind, PoseVector, Split, Trace,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<String, String> {
    if (got - want).abs() <= tol {
        Ok(format!("{name} {got:.4} vs {want} (tol {tol:e})"))
    } else {
        Err(format!("{name} {got:.6} not within {tol} of {want}"))
    }
}

fn cost_parity() -> Outcome {
    let d1 = CostTable::d1();
    let d2 = CostTable::d2();
    let mut notes = vec![
        within("op latency", cost_op(0.314, &d2, CostDimension::Latency), 15.66, 0.02)?,
        within("op energy", cost_op(0.314, &d2, CostDimension::Energy), 1.32, 0.01)?,
        within("random latency", cost_exclusive(0.5, &d1, CostDimension::Latency), 14.41, 0.005)?,
    ];
    // Random's expected error is the fraction-weighted mix of the two static errors.
    let grid = GridSpec::new(2, 1, 2, 1).unwrap();
    let r = VarRange::new(-5.0, 5.0);
    let scaler = ScalerParams::new(r, r, r, r).unwrap();
    let frames: Vec<FrameRecord> = (0..10_000u64)
        .map(|t| FrameRecord {
            t,
            gt: PoseVector::ZERO,
            small_pred: PoseVector::new(0.27, 0.27, 0.28, 0.52),
            big_pred: PoseVector::new(-0.19, 0.14, -0.23, 0.48),
            head_u: 0.5,
            head_v: 0.5,
            aux_probs: vec![0.5, 0.5],
        })
        .collect();
    let tr = Trace::new(grid, scaler, frames, Split::Test).unwrap();
    let small = evaluate(&tr, &PolicyConfig::StaticSmall, &d1).map_err(|e| e.to_string())?;
    let big = evaluate(&tr, &PolicyConfig::StaticBig, &d1).map_err(|e| e.to_string())?;
    notes.push(within("static small mae", small.mae.mae_sum, 1.34, 1e-9)?);
    notes.push(within("static big mae", big.mae.mae_sum, 1.04, 1e-9)?);
    let random = evaluate(&tr, &PolicyConfig::Random { p_big: 0.5, seed: 0 }, &d1).map_err(|e| e.to_string())?;
    let f = random.big_fraction;
    within("random mae mix", random.mae.mae_sum, (1.0 - f) * 1.34 + f * 1.04, 1e-9)?;
    notes.push(within("mae at f=0.5", 0.5 * 1.34 + 0.5 * 1.04, 1.19, 1e-12)?);
    let mem = |k: PolicyKind, c: &CostTable| memory_footprint(deployed_models(k), c).unwrap() as f64 / 1000.0;
    for (got, want) in [
        (mem(PolicyKind::StaticSmall, &d1), 153.0),
        (mem(PolicyKind::StaticBig, &d1), 235.0),
        (mem(PolicyKind::Random, &d1), 250.0),
        (mem(PolicyKind::AuxHlc, &d1), 289.0),
        (mem(PolicyKind::Op, &d2), 280.0),
    ] {
        within("memory kB", got, want, 0.5)?;
    }
    Ok(notes.join("; "))
}

fn aux_inversion() -> Outcome {
    let d1 = CostTable::d1();
    let lat = within("aux latency", cost_aux(0.391, &d1, CostDimension::Latency), 13.24, 0.01)?;
    let energy = within("aux energy", cost_aux(0.391, &d1, CostDimension::Energy), 1.14, 0.01)?;
    if d1.get(Model::Aux).latency_ms != 0.43 {
        return Err("preset aux latency is not 0.43 ms".into());
    }
    Ok(format!("{lat}; {energy}"))
}

fn oracle_dominance() -> Outcome {
    let mut checked = 0usize;
    for seed in 0..20 {
        let s = synth(50_000, seed);
        let tr = &s.test;
        let map = build_error_map(&s.validation).map_err(|e| e.to_string())?;
        let costs = CostTable::d1();
        let ev = |cfg: &PolicyConfig<'_>| evaluate(tr, cfg, &costs).map_err(|e| e.to_string());
        let oracle = ev(&PolicyConfig::Oracle { ensemble_average: false })?.mae.mae_sum;
        let oracle_avg = ev(&PolicyConfig::Oracle { ensemble_average: true })?.mae.mae_sum;
        let small = ev(&PolicyConfig::StaticSmall)?.mae.mae_sum;
        let big = ev(&PolicyConfig::StaticBig)?.mae.mae_sum;
        if oracle > small.min(big) {
            return Err(format!("seed {seed}: oracle {oracle} > min static {}", small.min(big)));
        }
        // Each policy is held to the oracle choosing between the same two outputs:
        // exclusive policies pick small or big, OP picks small or the average.
        let policies = [
            (PolicyConfig::Random { p_big: 0.0, seed }, oracle),
            (PolicyConfig::AuxSm { threshold: 0.0 }, oracle),
            (PolicyConfig::AuxHlc { threshold: 0.0, map: &map }, oracle),
            (PolicyConfig::Op { threshold: 0.0, absolute: true }, oracle_avg),
            (PolicyConfig::Op { threshold: 0.0, absolute: false }, oracle_avg),
        ];
        for (cfg, bound) in policies {
            for p in sweep(tr, &cfg, &costs).map_err(|e| e.to_string())? {
                checked += 1;
                if bound > p.mae.mae_sum {
                    return Err(format!("seed {seed}: {} th={} mae {} beats oracle {bound}", p.policy, p.threshold, p.mae.mae_sum));
                }
            }
        }
    }
    Ok(format!("20 traces of 5000 frames, {checked} operating points, 0 violations"))
}

fn threshold_extremes() -> Outcome {
    let mut mismatches = 0usize;
    let mut frames = 0usize;
    for seed in 0..5 {
        let s = synth(20_000, 100 + seed);
        let tr = &s.test;
        let map = build_error_map(&s.validation).map_err(|e| e.to_string())?;
        let small = run_static(tr, false);
        let big = run_static(tr, true);
        let bits = |p: PoseVector| p.to_array().map(f64::to_bits);
        let op = run_op_policy(tr, f64::INFINITY, true).map_err(|e| e.to_string())?;
        mismatches += op.iter().zip(&small).skip(1).filter(|(a, b)| bits(a.output) != bits(b.output)).count();
        let sm = run(tr, &PolicyConfig::AuxSm { threshold: 1.0 }).map_err(|e| e.to_string())?;
        mismatches += sm.iter().zip(&big).filter(|(a, b)| bits(a.output) != bits(b.output)).count();
        let hlc = run_aux_hlc_policy(tr, f64::NEG_INFINITY, &map).map_err(|e| e.to_string())?;
        mismatches += hlc.iter().zip(&big).filter(|(a, b)| bits(a.output) != bits(b.output)).count();
        frames += 3 * tr.len() - 1;
    }
    if mismatches == 0 {
        Ok(format!("{frames} frame comparisons, 0 mismatches"))
    } else {
        Err(format!("{mismatches} mismatches over {frames} frame comparisons"))
    }
}

fn sweep_completeness() -> Outcome {
    let s = synth(10_000, 5);
    let map = build_error_map(&s.validation).map_err(|e| e.to_string())?;
    let frames: Vec<FrameRecord> = s.test.frames()[..50].to_vec();
    let tr = Trace::new(*s.test.grid(), *s.test.scaler(), frames, Split::Test).map_err(|e| e.to_string())?;
    let count = |cfg: &PolicyConfig<'_>, th: f64| run(&tr, &cfg.with_threshold(th)).unwrap().iter().filter(|d| d.invoked_big).count();
    let mut notes = Vec::new();
    for cfg in [
        PolicyConfig::Op { threshold: 0.0, absolute: true },
        PolicyConfig::AuxSm { threshold: 0.0 },
        PolicyConfig::AuxHlc { threshold: 0.0, map: &map },
    ] {
        let scores = policy_scores(&tr, &cfg).map_err(|e| e.to_string())?;
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        // Scores closer than 1e-4 need a finer brute-force grid to be separable.
        let step = 1e-4f64.min(gap / 2.0);
        let lo = sorted[0] - 2.0 * step;
        let n = ((sorted[sorted.len() - 1] + 2.0 * step - lo) / step).ceil() as usize;
        let grid: BTreeSet<usize> = (0..=n).map(|i| count(&cfg, lo + i as f64 * step)).collect();
        let cands: BTreeSet<usize> = candidate_thresholds(&tr, &cfg)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|th| count(&cfg, th))
            .collect();
        if grid != cands {
            return Err(format!("{}: grid {:?} vs candidates {:?}", cfg.kind(), grid, cands));
        }
        notes.push(format!("{} {} fractions (step {step:.1e})", cfg.kind(), cands.len()));
    }
    Ok(notes.join(", "))
}

fn pareto_correctness() -> Outcome {
    let template = evaluate(&synth(10, 0).test, &PolicyConfig::StaticSmall, &CostTable::d1()).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<OperatingPoint> = (0..200)
            .map(|i| {
                let mut p = template.clone();
                p.cost.cycles = rng.random::<f64>() * 4e6;
                p.mae.mae_sum = 0.8 + rng.random::<f64>();
                p.threshold = i as f64;
                p
            })
            .collect();
        let got: BTreeSet<usize> = pareto_front(&points, CostDimension::Cycles).iter().map(|p| p.threshold as usize).collect();
        let want: BTreeSet<usize> = domination_front(&cost_mae(&points, CostDimension::Cycles)).into_iter().collect();
        if got != want {
            return Err(format!("seed {seed}: front {got:?} vs oracle {want:?}"));
        }
    }
    Ok("100 clouds of 200 points match the pairwise domination oracle".into())
}

fn error_map_oracle() -> Outcome {
    let s = synth(5_000, 42);
    let map = build_error_map(&s.validation).map_err(|e| e.to_string())?;
    let reference = two_pass_error_map(&s.validation);
    if map.support() != &reference.support[..] {
        return Err("support counts differ".into());
    }
    let worst = map
        .values()
        .iter()
        .zip(&reference.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst <= 1e-9 {
        Ok(format!("{} frames, max cell difference {worst:.1e}", s.validation.len()))
    } else {
        Err(format!("max cell difference {worst:e} exceeds 1e-9"))
    }
}

fn policy_structure() -> Outcome {
    let s = hard_borders(50_000, 7);
    let map = build_error_map(&s.validation).map_err(|e| e.to_string())?;
    let costs = CostTable::d1();
    let tr = &s.test;
    let hlc = sweep(tr, &PolicyConfig::AuxHlc { threshold: 0.0, map: &map }, &costs).map_err(|e| e.to_string())?;
    let random = sweep(tr, &PolicyConfig::Random { p_big: 0.0, seed: 7 }, &costs).map_err(|e| e.to_string())?;
    let hlc_front = pareto_front(&hlc, CostDimension::Latency);
    let random_front = pareto_front(&random, CostDimension::Latency);
    for p in &random_front {
        let m = mae_at_fraction(&hlc_front, p.big_fraction).ok_or("hlc front does not span the random front")?;
        if m > p.mae.mae_sum {
            return Err(format!("at big fraction {:.3}: hlc {m:.4} > random {:.4}", p.big_fraction, p.mae.mae_sum));
        }
    }

    // Threshold fixed from the validation map alone: the cut between sorted cell
    // values that best separates border from interior cells, weighted by support.
    let grid = *tr.grid();
    let mut cells: Vec<(f64, bool, u64)> = grid
        .cells()
        .map(|c| (map.lookup(c).unwrap(), grid.is_border(c), map.support_at(c).unwrap()))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (0u64, f64::NEG_INFINITY);
    for k in 0..=cells.len() {
        let th = match k {
            0 => cells[0].0 - 1.0,
            k if k == cells.len() => cells[k - 1].0 + 1.0,
            k => 0.5 * (cells[k - 1].0 + cells[k].0),
        };
        let agree: u64 = cells.iter().filter(|(v, b, _)| (*v > th) == *b).map(|c| c.2).sum();
        if agree > best.0 {
            best = (agree, th);
        }
    }
    let d = run_aux_hlc_policy(tr, best.1, &map).map_err(|e| e.to_string())?;
    let agree = tr
        .frames()
        .iter()
        .zip(&d)
        .filter(|(f, d)| d.invoked_big == grid.is_border(f.true_cell(&grid).unwrap()))
        .count();
    let rate = agree as f64 / tr.len() as f64;
    if rate < 0.99 {
        return Err(format!("big/border agreement {:.2}% < 99%", rate * 100.0));
    }
    Ok(format!(
        "hlc front at or below random at {} matched fractions; big/border agreement {:.2}%",
        random_front.len(),
        rate * 100.0
    ))
}

fn determinism() -> Outcome {
    let once = || -> Result<String, String> {
        let s = synth(5_000, 77);
        let map = build_error_map(&s.validation).map_err(|e| e.to_string())?;
        let policies = [
            PolicyConfig::Op { threshold: 0.0, absolute: true },
            PolicyConfig::AuxSm { threshold: 0.0 },
            PolicyConfig::AuxHlc { threshold: 0.0, map: &map },
            PolicyConfig::Random { p_big: 0.0, seed: 77 },
        ];
        let report = compare_policies(&s.test, &CostTable::d1(), &policies, CostDimension::Cycles).map_err(|e| e.to_string())?;
        Ok(report_to_csv(&report))
    };
    let (a, b) = (once()?, once()?);
    if a == b {
        Ok(format!("{} bytes identical across two runs", a.len()))
    } else {
        Err("CSV reports differ between runs".into())
    }
}

fn border_ordering() -> Outcome {
    let start = Instant::now();
    let s = hard_borders(50_000, 0);
    let map = build_error_map(&s.validation).map_err(|e| e.to_string())?;
    let grid = *map.grid();
    let mean_of = |class: CellClass| {
        let v: Vec<f64> = grid.cells().filter(|&c| grid.classify(c) == class).map(|c| map.lookup(c).unwrap()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (corner, edge, interior) = (mean_of(CellClass::Corner), mean_of(CellClass::Edge), mean_of(CellClass::Interior));
    let secs = start.elapsed().as_secs_f64();
    let summary = format!(
        "{} validation frames: corner {corner:.3} > edge {edge:.3} > interior {interior:.3} in {secs:.2}s",
        s.validation.len()
    );
    if corner > edge && edge > interior && secs < 10.0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 cost-model parity with the deployment table", cost_parity),
        ("2 aux cost inversion at 39.1% big", aux_inversion),
        ("3a oracle dominance", oracle_dominance),
        ("3b threshold-extreme equivalences", threshold_extremes),
        ("3c sweep completeness", sweep_completeness),
        ("3d pareto correctness", pareto_correctness),
        ("3e error-map oracle equivalence", error_map_oracle),
        ("3f policy-structure sanity on hard borders", policy_structure),
        ("3g determinism", determinism),
        ("4 border error ordering", border_ordering),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
