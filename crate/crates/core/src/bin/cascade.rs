use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cascade_core::io::{self, PolicySpec};
use cascade_core::sweep::pareto_front;
use cascade_core::{build_error_map, compare_policies, evaluate, generate, sweep, CostDimension, CostTable, Error, ErrorMap, Result};

#[derive(Parser)]
#[command(name = "cascade", version, about = "Replay and benchmark big/little inference policies on recorded traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/validation/test synthetic traces.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an Aux-HLC error map from a validation trace.
    Errormap {
        #[arg(long)]
        validation: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one policy and print its operating point as CSV.
    Eval {
        #[arg(long)]
        trace: PathBuf,
        /// e.g. static_big, op:0.2, aux_sm:0.3, aux_hlc:0.1, random:0.5, oracle
        #[arg(long)]
        policy: String,
        #[arg(long)]
        map: Option<PathBuf>,
        /// Cost file, or a preset name (d1, d2).
        #[arg(long)]
        costs: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep a policy's threshold and write every operating point.
    Sweep {
        #[arg(long)]
        trace: PathBuf,
        /// Policy without threshold, e.g. op, op:signed, aux_sm, aux_hlc, random
        #[arg(long)]
        policy: String,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        costs: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "cycles")]
        dimension: CostDimension,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Keep only Pareto-optimal points.
        #[arg(long)]
        front_only: bool,
    },
    /// Compare several policies as configured in a run file.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Report the cheapest point whose MAE sum is within --tol of this value.
        #[arg(long, requires = "tol")]
        iso_mae: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn load_costs(arg: &str) -> Result<CostTable> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(t) = CostTable::preset(arg) {
            return Ok(t);
        }
    }
    io::parse_cost_table(&std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?)
}

fn load_map(path: Option<&Path>) -> Result<Option<ErrorMap>> {
    path.map(io::read_error_map).transpose()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::Io { path: config.clone(), source: e })?;
            let cfg = io::parse_synth_config(&text)?;
            let splits = generate(&cfg)?;
            for (name, trace) in [("train", &splits.train), ("validation", &splits.validation), ("test", &splits.test)] {
                let path = out.join(format!("{name}.csv"));
                io::write_trace_file(trace, &path)?;
                eprintln!("wrote {} ({} frames)", path.display(), trace.len());
            }
        }
        Command::Errormap { validation, out } => {
            let map = build_error_map(&io::read_trace(&validation)?)?;
            io::write_error_map_file(&map, &out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Eval { trace, policy, map, costs, seed } => {
            let spec: PolicySpec = policy.parse()?;
            if spec.kind.is_thresholded() && spec.param.is_none() {
                return Err(Error::Config(format!("policy {policy:?} needs a threshold, e.g. {}:0.1", spec.kind)));
            }
            let trace = io::read_trace(&trace)?;
            let costs = load_costs(&costs)?;
            let map = load_map(map.as_deref())?;
            let point = evaluate(&trace, &spec.to_config(map.as_ref(), seed)?, &costs)?;
            print!("{}", io::points_to_csv([&point]));
        }
        Command::Sweep {
            trace,
            policy,
            map,
            costs,
            seed,
            dimension,
            out,
            svg,
            front_only,
        } => {
            let spec: PolicySpec = policy.parse()?;
            if spec.param.is_some() {
                return Err(Error::Config("sweep chooses thresholds itself; drop the numeric parameter".into()));
            }
            let trace = io::read_trace(&trace)?;
            let costs = load_costs(&costs)?;
            let map = load_map(map.as_deref())?;
            let cfg = spec.to_config(map.as_ref(), seed)?;
            let mut points = sweep(&trace, &cfg, &costs)?;
            if front_only {
                points = pareto_front(&points, dimension);
            }
            let csv = io::points_to_csv(&points);
            match out {
                Some(path) => io::write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
            if let Some(path) = svg {
                let front = pareto_front(&points, dimension);
                let series = io::SvgSeries::line(
                    points.first().map(|p| p.policy.clone()).unwrap_or_default(),
                    front.iter().map(|p| (p.cost_in(dimension), p.mae.mae_sum)).collect(),
                );
                io::write_file(&path, &io::render_svg(&[series], dimension))?;
            }
        }
        Command::Compare { config, iso_mae, tol } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::Io { path: config.clone(), source: e })?;
            let base = config.parent().unwrap_or(Path::new("."));
            let rc = io::parse_run_config(&text, base)?;
            let test = io::read_trace(&rc.test)?;
            let needs_map = rc.policies.iter().any(|p| p.kind == cascade_core::PolicyKind::AuxHlc);
            let map = match (&rc.error_map, &rc.validation) {
                _ if !needs_map => None,
                (Some(path), _) => Some(io::read_error_map(path)?),
                (None, Some(val)) => Some(build_error_map(&io::read_trace(val)?)?),
                (None, None) => unreachable!("checked by parse_run_config"),
            };
            let configs = rc
                .policies
                .iter()
                .map(|p| p.to_config(map.as_ref(), rc.seed))
                .collect::<Result<Vec<_>>>()?;
            let report = compare_policies(&test, &rc.costs, &configs, rc.cost_dimension)?;
            let formats = [io::ReportFormat::Csv, io::ReportFormat::Svg];
            for path in io::emit_report(&report, &formats, &rc.output_dir, "compare")? {
                eprintln!("wrote {}", path.display());
            }
            if let Some(target) = iso_mae {
                let tol = tol.unwrap_or(0.0);
                match report.iso_mae(target, tol) {
                    Some(p) => {
                        println!("# cheapest point with |mae_sum - {target}| <= {tol}");
                        print!("{}", io::points_to_csv([p]));
                    }
                    None => return Err(Error::Config(format!("no operating point within {tol} of MAE {target}"))),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
