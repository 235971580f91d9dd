//! Command-line front end. All behavior lives in the library; this module
//! parses arguments, wires files to harness calls, and maps errors onto
//! the exit-code contract: 0 success, 2 config error, 3 invariant
//! violation detected during a run.
//!
//! Seed precedence: `--seed` flag, then the `RIGA_SEED` environment
//! variable, then the config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::Num;

use crate::gatewaysim::table2_default_specs;
use crate::harness::{
    self, cmd_gen, cmd_plan, load_campaign, load_gateway_specs, run_availability,
    run_gateway_matrix, run_simulation, ExperimentKind, HarnessError, PlanRequest, SimConfig,
};
use crate::probe::{run_plan, LiveTransport, ProbePlan, ShimTransport, Transport};
use crate::rigacore::{production_prime, CounterDomain, DEFAULT_DOMAIN_UPPER, DEFAULT_TICK_SECONDS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

static CANCEL: AtomicBool = AtomicBool::new(false);

extern "C" fn handle_sigint(_: libc::c_int) {
    CANCEL.store(true, Ordering::SeqCst);
}

#[derive(Debug, Parser)]
#[command(
    name = "riga",
    about = "Campaign planning, address generation, desk-scale network simulation, and gateway measurement",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan a campaign: hash payload files, fit the generator, write the campaign file
    Plan(PlanArgs),
    /// Print "counter<TAB>cid" lines for a counter range of a campaign
    Gen(GenArgs),
    /// Run the full agent/gateway/store simulation
    Sim(SimArgs),
    /// Run a calibrated experiment (availability or gateway matrix)
    Experiment(ExperimentArgs),
    /// Measure gateways with sequential rate-limited fetches
    Probe(ProbeArgs),
    /// Run the simulation and dump the final store state for forensics
    Dump(DumpArgs),
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Payload file; repeat once per anchor, paired with --counter by position
    #[arg(long = "payload", required = true)]
    payloads: Vec<String>,
    /// Anchor counter; repeat once per anchor
    #[arg(long = "counter", required = true)]
    counters: Vec<u64>,
    /// Campaign file to write
    #[arg(long)]
    out: PathBuf,
    /// Field modulus as a decimal string; defaults to the production prime
    #[arg(long)]
    prime: Option<String>,
    #[arg(long, default_value_t = 0)]
    domain_start: u64,
    #[arg(long, default_value_t = DEFAULT_DOMAIN_UPPER)]
    domain_upper: u64,
    #[arg(long, default_value_t = DEFAULT_TICK_SECONDS)]
    tick_seconds: u64,
    #[arg(long, default_value_t = 0)]
    shuffle_seed: u64,
    /// Wrap payloads in signed command envelopes with a key derived from
    /// this seed before hashing
    #[arg(long)]
    envelope_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    campaign: PathBuf,
    #[arg(long)]
    from: u64,
    #[arg(long)]
    to: u64,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides RIGA_SEED and the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Run report JSON
    #[arg(long)]
    out: Option<PathBuf>,
    /// Execution trace as JSON lines
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Store snapshot JSON after the run
    #[arg(long)]
    dump_store: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentKindArg {
    Availability,
    GatewayMatrix,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the experiment named in the config
    #[arg(long, value_enum)]
    kind: Option<ExperimentKindArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Experiment report JSON
    #[arg(long)]
    out: Option<PathBuf>,
    /// Raw samples, one per line, ready for box plotting
    #[arg(long)]
    samples_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[command(subcommand)]
    command: ProbeCommand,
}

#[derive(Debug, Subcommand)]
enum ProbeCommand {
    /// Execute a probe plan
    Run(ProbeRunArgs),
}

#[derive(Debug, Args)]
struct ProbeRunArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the plan's timeout
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Overrides the plan's rate limit (seconds between request starts)
    #[arg(long)]
    rate_s: Option<f64>,
    /// Required to set a rate below the 1 s floor
    #[arg(long, default_value_t = false)]
    allow_fast_rate: bool,
    /// Test mode: run against deterministic in-process gateway models
    /// (fixed 100 ms per gateway) instead of the network
    #[arg(long, default_value_t = false)]
    shim: bool,
}

#[derive(Debug, Args)]
struct DumpArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot JSON
    #[arg(long)]
    out: PathBuf,
}

/// Testable entry point; `main` passes `std::env::args()`.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version as "errors" with success status
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(CliError::Invariant(msg)) => {
            eprintln!("invariant violation: {msg}");
            EXIT_INVARIANT
        }
    }
}

enum CliError {
    Config(String),
    Invariant(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(m) => CliError::Config(m),
            HarnessError::Invariant(m) => CliError::Invariant(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn effective_seed(flag: Option<u64>, config_seed: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("RIGA_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|e| CliError::Config(format!("RIGA_SEED={text:?}: {e}"))),
        Err(_) => Ok(config_seed),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Plan(args) => plan(args),
        Command::Gen(args) => gen(args),
        Command::Sim(args) => sim(args),
        Command::Experiment(args) => experiment(args),
        Command::Probe(args) => match args.command {
            ProbeCommand::Run(run_args) => probe_run(run_args),
        },
        Command::Dump(args) => dump(args),
    }
}

fn plan(args: PlanArgs) -> Result<i32, CliError> {
    let prime = match &args.prime {
        Some(text) => BigUint::from_str_radix(text, 10)
            .map_err(|e| CliError::Config(format!("--prime {text:?}: {e}")))?,
        None => production_prime().clone(),
    };
    let domain = CounterDomain::new(args.domain_start, args.domain_upper, args.tick_seconds)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let plan = cmd_plan(&PlanRequest {
        payload_paths: args.payloads,
        counters: args.counters,
        prime,
        domain,
        shuffle_seed: args.shuffle_seed,
        envelope_seed: args.envelope_seed,
    })?;
    write_json(&args.out, &plan.campaign)?;
    for (anchor, cid) in plan.campaign.anchors.iter().zip(&plan.anchor_cids) {
        println!("{}\t{}", anchor.counter, cid);
    }
    Ok(EXIT_OK)
}

fn gen(args: GenArgs) -> Result<i32, CliError> {
    let campaign = load_campaign(&args.campaign)?;
    for line in cmd_gen(&campaign, args.from, args.to)? {
        println!("{line}");
    }
    Ok(EXIT_OK)
}

fn sim(args: SimArgs) -> Result<i32, CliError> {
    let config = SimConfig::load(&args.config)?;
    let seed = effective_seed(args.seed, config.master_seed)?;
    let outcome = run_simulation(&config, seed)?;
    let report = &outcome.report;

    if let Some(out) = &args.out {
        write_json(out, report)?;
    }
    if let Some(trace_path) = &args.trace {
        let mut text = String::new();
        for line in &report.traces {
            text.push_str(&line.to_jsonl());
            text.push('\n');
        }
        fs::write(trace_path, text)?;
    }
    if let Some(dump_path) = &args.dump_store {
        write_json(dump_path, &outcome.store.snapshot())?;
    }
    println!(
        "bots={} ticks={} executions={} resolve_fraction={:.6} all_anchors_reached={}",
        report.summary.bots,
        report.summary.ticks,
        report.summary.executions,
        report.summary.resolve_fraction,
        report.summary.all_anchors_reached
    );
    if config.require_all_anchors && !report.summary.all_anchors_reached {
        return Ok(EXIT_FAILURE);
    }
    Ok(EXIT_OK)
}

fn experiment(args: ExperimentArgs) -> Result<i32, CliError> {
    let config = SimConfig::load(&args.config)?;
    let seed = effective_seed(args.seed, config.master_seed)?;
    let kind = match args.kind {
        Some(ExperimentKindArg::Availability) => ExperimentKind::Availability,
        Some(ExperimentKindArg::GatewayMatrix) => ExperimentKind::GatewayMatrix,
        None => config.experiment,
    };
    let specs = match &config.gateways {
        Some(path) => load_gateway_specs(Path::new(path))?,
        None => table2_default_specs(),
    };
    match kind {
        ExperimentKind::None => Err(CliError::Config(
            "no experiment named; set \"experiment\" in the config or pass --kind".into(),
        )),
        ExperimentKind::Availability => {
            let report = run_availability(&config.experiment_params, &specs, seed)?;
            if let Some(out) = &args.out {
                write_json(out, &report)?;
            }
            if let Some(samples_out) = &args.samples_out {
                let mut text = String::new();
                for s in &report.samples {
                    text.push_str(&format!("{s}\n"));
                }
                fs::write(samples_out, text)?;
            }
            println!("files\tmean_ms\tstd_ms\tgateways");
            println!(
                "{}\t{:.3}\t{:.3}\t{}",
                report.files,
                report.mean_ms,
                report.std_ms,
                report.gateways_used.join(",")
            );
            Ok(EXIT_OK)
        }
        ExperimentKind::GatewayMatrix => {
            let report = run_gateway_matrix(&config.experiment_params, &specs, seed)?;
            if let Some(out) = &args.out {
                write_json(out, &report)?;
            }
            print!("{}", report.to_tsv());
            Ok(EXIT_OK)
        }
    }
}

fn probe_run(args: ProbeRunArgs) -> Result<i32, CliError> {
    let text = fs::read_to_string(&args.plan)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.plan.display())))?;
    let mut plan: ProbePlan = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.plan.display())))?;
    if let Some(t) = args.timeout_ms {
        plan.timeout_ms = t;
    }
    if let Some(r) = args.rate_s {
        plan.rate_limit_s = r;
    }

    unsafe {
        libc::signal(
            libc::SIGINT,
            handle_sigint as *const () as libc::sighandler_t,
        );
    }
    CANCEL.store(false, Ordering::SeqCst);

    let mut transport: Box<dyn Transport> = if args.shim {
        let models: Vec<(&str, f64)> = plan.gateways.iter().map(|g| (g.as_str(), 100.0)).collect();
        Box::new(ShimTransport::fixed(&models))
    } else {
        Box::new(LiveTransport::new().map_err(|e| CliError::Config(e.to_string()))?)
    };
    let report = run_plan(&plan, transport.as_mut(), args.allow_fast_rate, &CANCEL)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_json(&args.out, &report)?;
    println!("gateway\ttotal_time_ms\tdropped\trequests");
    for gw in &report.per_gateway {
        println!(
            "{}\t{:.3}\t{}\t{}",
            gw.gateway,
            gw.total_time_ms,
            gw.dropped_count,
            gw.requests.len()
        );
    }
    if !report.complete {
        eprintln!("interrupted: partial report written");
    }
    Ok(EXIT_OK)
}

fn dump(args: DumpArgs) -> Result<i32, CliError> {
    let config = SimConfig::load(&args.config)?;
    let seed = effective_seed(args.seed, config.master_seed)?;
    let outcome = run_simulation(&config, seed)?;
    write_json(&args.out, &outcome.store.snapshot())?;
    println!(
        "store snapshot written to {} ({} objects)",
        args.out.display(),
        outcome.store.snapshot().objects.len()
    );
    Ok(EXIT_OK)
}

// keep the exit-code constants wired to the harness error kinds
#[allow(dead_code)]
fn _exit_code_contract(e: &harness::HarnessError) -> i32 {
    match e {
        harness::HarnessError::Config(_) => EXIT_CONFIG,
        harness::HarnessError::Invariant(_) => EXIT_INVARIANT,
    }
}
