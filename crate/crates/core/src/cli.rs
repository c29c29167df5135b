//! Command-line front end: `gen`, `sim`, `sweep`, `explore`, `report`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
//! Stdout carries the primary JSON output; diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, SEED_ENV_VAR};
use crate::cpu::simulate;
use crate::dse::{self, report, Axis, StagedReport, SweepSpec, Workload};
use crate::kernels::{gen_kernel, KernelKind, KernelSpec};
use crate::trace::{parse_trace, write_trace};

#[derive(Parser)]
#[command(name = "uarch-dse", version, about = "Trace-driven superscalar timing simulation and design-space exploration")]
struct Cli {
    /// Worker threads for sweeps (output is identical for any value).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a benchmark kernel trace.
    Gen(GenArgs),
    /// Simulate a trace file; prints the result JSON on stdout.
    Sim {
        #[arg(short, long)]
        config: PathBuf,
        trace: PathBuf,
    },
    /// Sweep one axis over its configured grid.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// One of: l1_kb, l2_kb, phys_regs, rob, iq, lsq.
        #[arg(long)]
        axis: String,
        /// Overrides the config's output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the staged cache -> register-file -> superscalar exploration.
    Explore {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-emit CSV and .dat files from a saved combined report JSON.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    /// One of: dijkstra, string_search, susan_corners, flow_class,
    /// ipv4_trie, ipsec_aes.
    kernel: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Trace output path.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    n_nodes: Option<u64>,
    #[arg(long)]
    haystack: Option<u64>,
    #[arg(long)]
    needle_len: Option<u64>,
    #[arg(long)]
    n_needles: Option<u64>,
    #[arg(long)]
    width: Option<u64>,
    #[arg(long)]
    height: Option<u64>,
    #[arg(long)]
    n_packets: Option<u64>,
    #[arg(long)]
    n_buckets: Option<u64>,
    #[arg(long)]
    n_routes: Option<u64>,
    #[arg(long)]
    n_lookups: Option<u64>,
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long)]
    n_blocks: Option<u64>,
}

enum CliError {
    /// Bad arguments or invalid configuration: exit 2.
    Usage(String),
    /// Runtime failure (I/O, simulation, stage failure): exit 1.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Entry point used by `main`.
pub fn run() -> i32 {
    run_with(std::env::args_os())
}

/// Testable entry point.
pub fn run_with<I>(args: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };

    let go = || match cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Sim { config, trace } => cmd_sim(&config, &trace),
        Cmd::Sweep { config, axis, output } => cmd_sweep(&config, &axis, output.as_deref()),
        Cmd::Explore { config, output } => cmd_explore(&config, output.as_deref()),
        Cmd::Report { input, output } => cmd_report(&input, &output),
    };

    let outcome = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(go),
            Err(e) => Err(runtime(format!("cannot build thread pool: {e}"))),
        },
        None => go(),
    };

    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("uarch-dse: {}", e.message());
            e.code()
        }
    }
}

fn gen_spec(args: &GenArgs) -> Result<KernelSpec, CliError> {
    let kind = KernelKind::from_name(&args.kernel).ok_or_else(|| {
        let names: Vec<&str> = KernelKind::all().iter().map(|k| k.name()).collect();
        usage(format!("unknown kernel `{}` (expected one of: {})", args.kernel, names.join(", ")))
    })?;
    let env_seed = std::env::var(SEED_ENV_VAR).ok().and_then(|v| v.parse::<u64>().ok());
    let mut spec = KernelSpec::new(kind, args.seed.or(env_seed).unwrap_or(1));

    let flags: [(&str, Option<u64>); 12] = [
        ("n_nodes", args.n_nodes),
        ("haystack", args.haystack),
        ("needle_len", args.needle_len),
        ("n_needles", args.n_needles),
        ("width", args.width),
        ("height", args.height),
        ("n_packets", args.n_packets),
        ("n_buckets", args.n_buckets),
        ("n_routes", args.n_routes),
        ("n_lookups", args.n_lookups),
        ("stride", args.stride),
        ("n_blocks", args.n_blocks),
    ];
    let schema = crate::kernels::list_kernels()
        .into_iter()
        .find(|k| k.kind == kind)
        .expect("kernel is listed");
    for (name, value) in flags {
        if let Some(v) = value {
            if !schema.params.iter().any(|p| p.name == name) {
                return Err(usage(format!("parameter --{} is not valid for kernel {}", name.replace('_', "-"), schema.name)));
            }
            spec.params.insert(name.to_string(), v);
        }
    }
    Ok(spec)
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let spec = gen_spec(&args)?;
    let trace = gen_kernel(&spec).map_err(usage)?;
    let file = fs::File::create(&args.output)
        .map_err(|e| runtime(format!("cannot create {}: {e}", args.output.display())))?;
    let mut w = std::io::BufWriter::new(file);
    write_trace(&trace, &mut w).map_err(|e| runtime(format!("write failed: {e}")))?;
    use std::io::Write;
    w.flush().map_err(|e| runtime(format!("write failed: {e}")))?;
    println!("{}", trace.num_instructions());
    Ok(())
}

fn cmd_sim(config_path: &Path, trace_path: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path).map_err(usage)?;
    let file = fs::File::open(trace_path)
        .map_err(|e| runtime(format!("cannot open {}: {e}", trace_path.display())))?;
    let trace = parse_trace(BufReader::new(file)).map_err(runtime)?;
    let hier = cfg.platform().map_err(usage)?.hierarchy().map_err(runtime)?;
    let result = simulate(&trace, &cfg.core_config(), &hier).map_err(runtime)?;
    let json = serde_json::to_string_pretty(&result).map_err(runtime)?;
    println!("{json}");
    Ok(())
}

fn load_workloads(cfg: &RunConfig) -> Result<Vec<Workload>, CliError> {
    Workload::generate(&cfg.benchmark_specs()).map_err(runtime)
}

fn cmd_sweep(config_path: &Path, axis_name: &str, output: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path).map_err(usage)?;
    let axis = Axis::from_name(axis_name).ok_or_else(|| usage(format!("unknown axis `{axis_name}`")))?;
    let values = match axis {
        Axis::L1Kb => cfg.sweep.l1_kb.clone(),
        Axis::L2Kb => cfg.sweep.l2_kb.clone(),
        Axis::PhysRegs => cfg.sweep.phys_regs.clone(),
        Axis::Rob => cfg.sweep.rob.clone(),
        Axis::Iq => cfg.sweep.iq.clone(),
        Axis::Lsq => cfg.sweep.lsq.clone(),
    };
    let spec = SweepSpec {
        axis,
        values,
        core: cfg.core_config(),
        platform: cfg.platform().map_err(usage)?,
    };
    let workloads = load_workloads(&cfg)?;
    let result = dse::run_sweep(&spec, &workloads).map_err(runtime)?;
    let dir = output.unwrap_or(&cfg.output_dir);
    report::emit_sweep(&result, dir).map_err(|e| runtime(format!("cannot write reports: {e}")))?;
    let json = serde_json::to_string_pretty(&result).map_err(runtime)?;
    println!("{json}");
    Ok(())
}

fn cmd_explore(config_path: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path).map_err(usage)?;
    let workloads = load_workloads(&cfg)?;
    let report_data = dse::staged_explore(
        &cfg.core_config(),
        &cfg.platform().map_err(usage)?,
        &cfg.sweep,
        &workloads,
    )
    .map_err(runtime)?;
    let dir = output.unwrap_or(&cfg.output_dir);
    report::emit_report(&report_data, dir).map_err(|e| runtime(format!("cannot write reports: {e}")))?;
    let summary = serde_json::json!({
        "chosen": report_data.chosen,
        "area": report_data.area,
        "output_dir": dir,
    });
    println!("{}", serde_json::to_string_pretty(&summary).map_err(runtime)?);
    Ok(())
}

fn cmd_report(input: &Path, output: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(input).map_err(|e| runtime(format!("cannot read {}: {e}", input.display())))?;
    let report_data: StagedReport =
        serde_json::from_str(&text).map_err(|e| runtime(format!("bad report JSON: {e}")))?;
    let paths = report::emit_report(&report_data, output).map_err(|e| runtime(format!("cannot write reports: {e}")))?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}
