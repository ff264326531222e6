use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pground::config::{load_config, RunMode};
use pground::error::{Error, Result};
use pground::instance::{run_instance, KPI_FILE, VERDICT_FILE};
use pground::runner::{run_campaign, wire, write_report, Executor, RunOptions};
use pground::scripts::{emit_job_script, Scheduler};
use pground::trace::replay;
use pground_core::kpi::write_kpi_csv;

#[derive(Parser)]
#[command(name = "pground", version, about = "Virtual proving ground for AEB test campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a campaign, or one batch of it.
    Run(RunArgs),
    /// Recompute the KPI log and verdict of a recorded trace.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        /// Write kpi.csv and verdict.txt here instead of printing the verdict.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare against the kpi.csv and verdict.txt next to the trace.
        #[arg(long)]
        check: bool,
    },
    /// Rebuild report.csv and report.txt from a campaign directory.
    Report {
        #[arg(long)]
        campaign: PathBuf,
    },
    /// Print a PBS or SLURM job-array script for the campaign.
    EmitScript {
        #[arg(long)]
        scheduler: String,
        #[arg(long)]
        config: PathBuf,
        /// Write the script to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print the campaign shape.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a single case. Used by `run`; not meant to be called directly.
    #[command(hide = true)]
    Worker {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        case: usize,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// headless, record or stream. Defaults to the config value.
    #[arg(long)]
    mode: Option<String>,
    /// Defaults to the config value.
    #[arg(long)]
    workers: Option<usize>,
    /// 1-based batch number or `all`.
    #[arg(long, default_value = "all")]
    batch: String,
    /// Output root; the campaign directory is created under it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run cases as threads of this process instead of child processes.
    #[arg(long)]
    in_process: bool,
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let mut cfg = load_config(&args.config)?;
    if let Some(out) = args.out {
        cfg.campaign.output_dir = out;
    }
    let mode = match args.mode {
        Some(m) => m.parse()?,
        None => cfg.campaign.mode,
    };
    let batch = match args.batch.as_str() {
        "all" => None,
        k => Some(k.parse::<usize>().map_err(|_| Error::Config(format!("--batch expects a number or `all`, got `{k}`")))?),
    };
    let executor = if args.in_process {
        Executor::Thread
    } else {
        let program = std::env::current_exe().map_err(|e| Error::Execution(format!("cannot locate own executable: {e}")))?;
        Executor::Process { program }
    };
    let opts = RunOptions { mode, workers: args.workers.unwrap_or(cfg.campaign.workers), batch, executor };
    let outcome = run_campaign(&cfg, &opts)?;
    print!("{}", outcome.report.to_text());
    println!("\noutputs: {}", outcome.campaign_dir.display());
    for (case, reason) in &outcome.failures {
        eprintln!("case {case} failed to execute: {reason}");
    }
    Ok(if outcome.success() { 0 } else { 1 })
}

fn cmd_replay(trace: PathBuf, out: Option<PathBuf>, check: bool) -> Result<i32> {
    let r = replay(&trace)?;
    let csv = write_kpi_csv(&r.records);
    let text = r.verdict.to_text();
    if check {
        let dir = trace.parent().unwrap_or(std::path::Path::new("."));
        let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| Error::io(dir.join(name), e));
        let kpi_ok = read(KPI_FILE)? == csv;
        let verdict_ok = read(VERDICT_FILE)? == text;
        println!("kpi.csv: {}", if kpi_ok { "identical" } else { "DIFFERS" });
        println!("verdict.txt: {}", if verdict_ok { "identical" } else { "DIFFERS" });
        if !(kpi_ok && verdict_ok) {
            return Ok(1);
        }
    }
    match out {
        Some(dir) => {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            std::fs::write(dir.join(KPI_FILE), csv).map_err(|e| Error::io(dir.join(KPI_FILE), e))?;
            std::fs::write(dir.join(VERDICT_FILE), &text).map_err(|e| Error::io(dir.join(VERDICT_FILE), e))?;
        }
        None if !check => print!("{text}"),
        None => {}
    }
    Ok(0)
}

fn cmd_worker(config: PathBuf, case_id: usize, mode: &str, dir: PathBuf) -> Result<i32> {
    let cfg = load_config(&config)?;
    let mode: RunMode = mode.parse()?;
    let cases = cfg.cases()?;
    let case = cases
        .get(case_id)
        .ok_or_else(|| Error::Config(format!("case {case_id} does not exist ({} cases)", cases.len())))?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let streaming = mode == RunMode::LiveStream;
    let mut on_trace = |line: &str| {
        if streaming {
            let _ = writeln!(lock, "{}{line}", wire::TRACE);
        }
    };
    let result = run_instance(case, &cfg, mode, &dir, &mut on_trace);
    drop(on_trace);
    match result {
        Ok(r) => {
            let json = serde_json::to_string(&r.verdict).map_err(|e| Error::Execution(e.to_string()))?;
            let _ = writeln!(lock, "{}{json}", wire::DONE);
            let _ = lock.flush();
            Ok(0)
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(lock, "{}{msg}", wire::FAILED);
            let _ = lock.flush();
            Err(e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Replay { trace, out, check } => cmd_replay(trace, out, check),
        Cmd::Report { campaign } => {
            let report = write_report(&campaign)?;
            print!("{}", report.to_text());
            Ok(if report.failed_cases.is_empty() { 0 } else { 1 })
        }
        Cmd::EmitScript { scheduler, config, out } => {
            let scheduler: Scheduler = scheduler.parse()?;
            let cfg = load_config(&config)?;
            let script = emit_job_script(&cfg, scheduler)?;
            match out {
                Some(p) => std::fs::write(&p, script).map_err(|e| Error::io(&p, e))?,
                None => print!("{script}"),
            }
            Ok(0)
        }
        Cmd::Validate { config } => {
            let cfg = load_config(&config)?;
            let cases = cfg.cases()?;
            let plan = cfg.batches()?;
            println!(
                "{}: ok, {} cases in {} batches of up to {}, {} SUT variants",
                config.display(),
                cases.len(),
                plan.len(),
                cfg.matrix.batch_size,
                cfg.matrix.sut_variants.len()
            );
            Ok(0)
        }
        Cmd::Worker { config, case, mode, dir } => cmd_worker(config, case, &mode, dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
