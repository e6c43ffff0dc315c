//! `fairbound`: certified enclosures of the claim-weighted maxmin partition
//! value, from the command line.
//!
//! Exit codes: 0 success, 2 unreadable or invalid instance, 3 output I/O
//! failure. Reports go to stdout as JSON; a short summary goes to stderr.

use clap::{Parser, Subcommand};
use fairbound_cli::{sig6, RunReport};
use fairbound_core::bounds::{compute_bounds, legut_bounds, single_evv_bounds, EvvBasis};
use fairbound_core::evv::{compute_evv, EvvRecord, WeightVector};
use fairbound_core::measure::Instance;
use fairbound_core::oracle::{discretize, oracle_value};
use fairbound_core::refine::{refine_random, refine_subgradient, StepRule, SubgradientConfig};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_INVALID_INSTANCE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fairbound",
    about = "Guaranteed two-sided bounds on the claim-weighted maxmin partition value",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds from explicitly chosen maxsum weight vectors
    Bounds {
        /// instance file (JSON)
        instance: PathBuf,
        /// uniform-weight single-EVV bounds for probability measures
        #[arg(long, conflicts_with_all = ["single", "betas"])]
        legut: bool,
        /// single-EVV bounds at the given weights, e.g. --single 0.4,0.3,0.3
        #[arg(long, value_name = "B1,B2,...", conflicts_with = "betas")]
        single: Option<String>,
        /// weight vector for the multi-EVV bounds; repeatable
        #[arg(long = "beta", value_name = "B1,B2,...")]
        betas: Vec<String>,
        /// rescale densities to probability measures first
        #[arg(long)]
        normalize: bool,
    },
    /// Iterative refinement of both bounds
    Refine {
        instance: PathBuf,
        /// candidate generation: uniform sampling or subgradient steps
        #[arg(long, default_value = "random")]
        mode: RefineMode,
        /// iteration budget
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        /// RNG seed (random mode)
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// stop once upper - lower falls below this (subgradient mode)
        #[arg(long, default_value_t = 1e-3)]
        gap: f64,
        /// step constant of the subgradient schedule c / sqrt(t)
        #[arg(long, default_value_t = 0.5)]
        step_c: f64,
        /// where to write the per-iteration CSV trace
        #[arg(long, default_value = "trace.csv")]
        trace: PathBuf,
    },
    /// Exact LP value of the discretized instance
    Oracle {
        instance: PathBuf,
        /// uniform cell count (refined by density piece endpoints)
        #[arg(long, default_value_t = 400)]
        cells: usize,
    },
    /// Density curve samples and bound-evolution series for plotting
    Plotdata {
        instance: PathBuf,
        /// output directory for the CSV files
        #[arg(long)]
        out: PathBuf,
        /// an existing refinement trace to convert into a bounds series
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum RefineMode {
    Random,
    Subgradient,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> CliError {
    CliError {
        code,
        message: message.into(),
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("FAIRBOUND_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn load_instance(path: &Path) -> Result<(Instance, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| {
        fail(
            EXIT_INVALID_INSTANCE,
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    let digest = format!("sha256:{:x}", Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| {
        fail(
            EXIT_INVALID_INSTANCE,
            format!("{} is not UTF-8", path.display()),
        )
    })?;
    let instance =
        Instance::from_json_str(&text).map_err(|e| fail(EXIT_INVALID_INSTANCE, format!("{e}")))?;
    Ok((instance, digest))
}

fn parse_weights(raw: &str, n: usize) -> Result<WeightVector, CliError> {
    let parts: Result<Vec<f64>, _> = raw.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let parts = parts.map_err(|e| {
        fail(
            EXIT_INVALID_INSTANCE,
            format!("bad weight list '{raw}': {e}"),
        )
    })?;
    if parts.len() != n {
        return Err(fail(
            EXIT_INVALID_INSTANCE,
            format!(
                "weight list '{raw}' has {} entries for {n} agents",
                parts.len()
            ),
        ));
    }
    WeightVector::new(parts).map_err(|e| {
        fail(
            EXIT_INVALID_INSTANCE,
            format!("bad weight list '{raw}': {e}"),
        )
    })
}

fn emit(report: &RunReport) {
    println!("{}", report.to_json());
    let lower = report.lower.map_or("-".to_string(), sig6);
    let upper = report.upper.map_or("-".to_string(), sig6);
    let mut line = format!("{}: lower {} upper {}", report.mode, lower, upper);
    if let Some(v) = report.oracle_value {
        line.push_str(&format!(" oracle {}", sig6(v)));
    }
    eprintln!("{line}");
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bounds {
            instance,
            legut,
            single,
            betas,
            normalize,
        } => {
            let start = Instant::now();
            let (mut inst, digest) = load_instance(&instance)?;
            if normalize {
                inst = inst.normalized();
            }
            let claims = inst.claims().to_vec();
            let mut report;
            if legut {
                let rec = compute_evv(&inst, &WeightVector::uniform(inst.n()));
                let bounds = legut_bounds(&inst, &rec, &claims)
                    .map_err(|e| fail(1, format!("{e} (try --normalize)")))?;
                report = RunReport::new(digest, "bounds-legut", claims).with_bounds(&bounds);
            } else if let Some(raw) = single {
                let beta = parse_weights(&raw, inst.n())?;
                let rec = compute_evv(&inst, &beta);
                let bounds =
                    single_evv_bounds(&inst, &rec, &claims).map_err(|e| fail(1, format!("{e}")))?;
                report = RunReport::new(digest, "bounds-single", claims).with_bounds(&bounds);
            } else {
                if betas.is_empty() {
                    return Err(fail(
                        EXIT_INVALID_INSTANCE,
                        "bounds needs --legut, --single or at least one --beta",
                    ));
                }
                let weights: Result<Vec<WeightVector>, CliError> =
                    betas.iter().map(|b| parse_weights(b, inst.n())).collect();
                let weights = weights?;
                let evvs: Vec<EvvRecord> = if weights.len() > 1 {
                    use rayon::prelude::*;
                    weights.par_iter().map(|b| compute_evv(&inst, b)).collect()
                } else {
                    weights.iter().map(|b| compute_evv(&inst, b)).collect()
                };
                let (basis, dropped) =
                    EvvBasis::new_pruning(evvs.clone()).map_err(|e| fail(1, format!("{e}")))?;
                if !dropped.is_empty() {
                    eprintln!(
                        "note: dropped dependent EVV column(s) {dropped:?} from the lower-bound basis"
                    );
                }
                let bounds = compute_bounds(&basis, &evvs, &claims);
                report = RunReport::new(digest, "bounds-multi", claims).with_bounds(&bounds);
            }
            report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            emit(&report);
            Ok(())
        }
        Command::Refine {
            instance,
            mode,
            iters,
            seed,
            gap,
            step_c,
            trace,
        } => {
            let start = Instant::now();
            let (inst, digest) = load_instance(&instance)?;
            let claims = inst.claims().to_vec();
            let (bounds, trace_data, iterations, gap_met, mode_name) = match mode {
                RefineMode::Random => {
                    let (bounds, trace_data) = refine_random(&inst, &claims, iters, seed);
                    (bounds, trace_data, iters, None, "refine-random")
                }
                RefineMode::Subgradient => {
                    let config = SubgradientConfig {
                        max_iter: iters,
                        gap_tol: gap,
                        step: StepRule::SqrtDecay { c: step_c },
                        ..SubgradientConfig::default()
                    };
                    let out = refine_subgradient(&inst, &claims, &config);
                    (
                        out.bounds,
                        out.trace,
                        out.iterations,
                        Some(out.gap_met),
                        "refine-subgradient",
                    )
                }
            };
            let file = std::fs::File::create(&trace)
                .map_err(|e| fail(EXIT_IO, format!("cannot write {}: {e}", trace.display())))?;
            trace_data
                .write_csv(std::io::BufWriter::new(file))
                .map_err(|e| fail(EXIT_IO, format!("cannot write {}: {e}", trace.display())))?;
            let mut report = RunReport::new(digest, mode_name, claims).with_bounds(&bounds);
            report.iterations = Some(iterations as u64);
            report.gap_met = gap_met;
            report.trace_path = Some(trace.display().to_string());
            report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            emit(&report);
            Ok(())
        }
        Command::Oracle { instance, cells } => {
            let start = Instant::now();
            let (inst, digest) = load_instance(&instance)?;
            if cells < inst.n() {
                return Err(fail(
                    EXIT_INVALID_INSTANCE,
                    format!("--cells {cells} is below the agent count {}", inst.n()),
                ));
            }
            let d = discretize(&inst, cells);
            let sol = oracle_value(&d).map_err(|e| fail(1, format!("{e}")))?;
            let mut report = RunReport::new(digest, "oracle", inst.claims().to_vec());
            report.oracle_value = Some(sol.value);
            report.oracle_cells = Some(d.n_cells());
            report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            emit(&report);
            Ok(())
        }
        Command::Plotdata {
            instance,
            out,
            trace,
        } => {
            let start = Instant::now();
            let (inst, digest) = load_instance(&instance)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| fail(EXIT_IO, format!("cannot create {}: {e}", out.display())))?;

            let mut densities = String::from("x");
            for f in inst.densities() {
                densities.push(',');
                densities.push_str(f.name());
            }
            densities.push('\n');
            const SAMPLES: usize = 512;
            for k in 0..SAMPLES {
                let x = k as f64 / (SAMPLES - 1) as f64;
                densities.push_str(&format!("{x}"));
                for f in inst.densities() {
                    densities.push_str(&format!(",{}", f.eval(x).expect("x in [0,1]")));
                }
                densities.push('\n');
            }
            let density_path = out.join("densities.csv");
            std::fs::write(&density_path, densities).map_err(|e| {
                fail(
                    EXIT_IO,
                    format!("cannot write {}: {e}", density_path.display()),
                )
            })?;

            if let Some(trace_path) = &trace {
                let text = std::fs::read_to_string(trace_path).map_err(|e| {
                    fail(
                        EXIT_IO,
                        format!("cannot read {}: {e}", trace_path.display()),
                    )
                })?;
                let mut series = String::from("iteration,lower,upper\n");
                for line in text.lines().skip(1) {
                    let fields: Vec<&str> = line.split(',').collect();
                    if fields.len() >= 3 {
                        let iteration = fields[0];
                        let lower = fields[fields.len() - 2];
                        let upper = fields[fields.len() - 1];
                        series.push_str(&format!("{iteration},{lower},{upper}\n"));
                    }
                }
                let bounds_path = out.join("bounds.csv");
                std::fs::write(&bounds_path, series).map_err(|e| {
                    fail(
                        EXIT_IO,
                        format!("cannot write {}: {e}", bounds_path.display()),
                    )
                })?;
            }

            let mut report = RunReport::new(digest, "plotdata", inst.claims().to_vec());
            report.trace_path = trace.map(|t| t.display().to_string());
            report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            emit(&report);
            Ok(())
        }
    }
}
