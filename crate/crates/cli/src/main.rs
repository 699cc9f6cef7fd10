//! `rpr`: record, prune, replay and checkpoint synthetic graphics call logs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use rpr_core::bench::{run_bench, DEFAULT_SAMPLE_POINTS};
use rpr_core::codec::{self, Format};
use rpr_core::error::{CodecError, SessionError};
use rpr_core::prune::prune;
use rpr_core::replay::{replay_digests, Digests};
use rpr_core::session::{PruneSchedule, Session};
use rpr_core::workload::{generate, WorkloadProfile};
use rpr_core::TraceLog;

#[derive(Parser)]
#[command(name = "rpr", version, about = "Record-prune-replay for graphics call logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record a synthetic workload into a log.
    Record {
        #[command(flatten)]
        workload: WorkloadArgs,
        #[arg(long)]
        background_prune: bool,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Prune a log to its last frame root.
    Prune {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Replay a log into a fresh driver and print its digests.
    Replay { input: PathBuf },
    /// Check that a pruned log replays to the same state as the full log.
    Verify {
        input: PathBuf,
        /// Pruned log to check; computed from the input when omitted.
        #[arg(long)]
        pruned: Option<PathBuf>,
    },
    /// Write a checkpoint image from a log, or from a freshly recorded workload.
    Checkpoint {
        input: Option<PathBuf>,
        #[command(flatten)]
        workload: WorkloadArgs,
        #[arg(long)]
        background_prune: bool,
        /// After checkpointing, reset the driver and replay the pruned log.
        #[arg(long)]
        simulate_resume: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Restart from a checkpoint image.
    Restore {
        input: PathBuf,
        /// Keep recording the workload until this many frames.
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        profile: Option<PathBuf>,
        /// First real id handed out by the restarted driver.
        #[arg(long, default_value_t = 1)]
        real_id_base: u64,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Write the restarted session's log.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Measure raw and pruned log growth; CSV on standard output.
    Bench {
        #[command(flatten)]
        workload: WorkloadArgs,
        /// Comma-separated frame counts to sample at.
        #[arg(long, value_delimiter = ',')]
        samples: Option<Vec<u64>>,
        #[arg(long)]
        table: bool,
    },
    /// Convert a log between the text and binary formats.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

#[derive(Args, Clone, Default)]
struct WorkloadArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    frames: Option<u64>,
    /// Workload profile as a flat key = value file.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Binary,
}

enum Failure {
    Mismatch(String),
    Format(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Io(e) => Failure::Other(e.into()),
            e => Failure::Format(e.to_string()),
        }
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Codec(e) => e.into(),
            SessionError::ReplayMismatch(m) => Failure::Mismatch(m),
            SessionError::Replay(e) => Failure::Mismatch(e.to_string()),
            e => Failure::Other(e.into()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RPR_LOG_LEVEL", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch(m)) => {
            eprintln!("mismatch: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Format(m)) => {
            eprintln!("format error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Record {
            workload,
            background_prune,
            format,
            output,
        } => {
            let profile = load_profile(&workload)?;
            let session = record(&profile, background_prune)?;
            write_log(&output, session.log(), format)?;
            println!("recorded {} calls, {} frames", session.next_seq(), session.frame_count());
            Ok(())
        }
        Command::Prune { input, format, output } => {
            let log = read_log(&input)?;
            let pruned = prune(&log);
            write_log(&output, &pruned, format)?;
            println!("pruned {} -> {} records", log.len(), pruned.len());
            Ok(())
        }
        Command::Replay { input } => {
            let log = read_log(&input)?;
            let d = replay_digests(&log, 1).map_err(|e| Failure::Format(e.to_string()))?;
            println!("records {}", log.len());
            print_digests("", &d);
            Ok(())
        }
        Command::Verify { input, pruned } => verify(&input, pruned.as_deref()),
        Command::Checkpoint {
            input,
            workload,
            background_prune,
            simulate_resume,
            output,
        } => {
            let mut session = match input {
                Some(path) => Session::from_log(read_log(&path)?)?,
                None => record(&load_profile(&workload)?, background_prune)?,
            };
            let image = session.checkpoint(&output)?;
            println!(
                "checkpoint: {} of {} records, frame {}",
                image.pruned_log.len(),
                session.log().len(),
                image.meta.frame_count
            );
            print_digests("", &session.digests()?);
            if simulate_resume {
                let t = Instant::now();
                session.simulate_resume()?;
                println!("resume replay {:.3} ms", t.elapsed().as_secs_f64() * 1e3);
            }
            Ok(())
        }
        Command::Restore {
            input,
            frames,
            seed,
            profile,
            real_id_base,
            format,
            output,
        } => {
            let t = Instant::now();
            let mut session = Session::restore_with_base(&input, real_id_base)?;
            println!(
                "restored {} records at frame {} in {:.3} ms",
                session.log().len(),
                session.frame_count(),
                t.elapsed().as_secs_f64() * 1e3
            );
            if frames.is_some() {
                let profile = load_profile(&WorkloadArgs { seed, frames, profile })?;
                let calls = generate(&profile);
                let done = usize::try_from(session.next_seq()).unwrap_or(usize::MAX);
                for call in calls.iter().skip(done) {
                    session.record(call)?;
                }
                println!("continued to seq {}", session.next_seq());
            }
            print_digests("", &session.digests()?);
            if let Some(out) = output {
                write_log(&out, session.log(), format)?;
            }
            Ok(())
        }
        Command::Bench {
            workload,
            samples,
            table,
        } => {
            let profile = load_profile(&workload)?;
            let points = samples.unwrap_or_else(|| match workload.frames {
                Some(f) => {
                    let mut p: Vec<u64> = DEFAULT_SAMPLE_POINTS.iter().copied().filter(|p| *p < f).collect();
                    p.push(f);
                    p
                }
                None => DEFAULT_SAMPLE_POINTS.to_vec(),
            });
            let report = run_bench(&profile, &points)?;
            if table {
                print!("{}", report.to_table());
                if let Some(k) = report.prune_time_exponent() {
                    println!("prune time ~ rawLogBytes^{k:.2}");
                }
            } else {
                print!("{}", report.to_csv());
            }
            Ok(())
        }
        Command::Convert { input, output, format } => {
            let log = read_log(&input)?;
            write_log(&output, &log, format)?;
            Ok(())
        }
    }
}

fn load_profile(args: &WorkloadArgs) -> Result<WorkloadProfile, Failure> {
    let mut profile = match &args.profile {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            WorkloadProfile::parse(&text).map_err(Failure::Format)?
        }
        None => WorkloadProfile::default(),
    };
    if let Some(seed) = args.seed {
        profile.seed = seed;
    }
    if let Some(frames) = args.frames {
        profile.frames = frames;
    }
    Ok(profile)
}

fn record(profile: &WorkloadProfile, background_prune: bool) -> Result<Session, Failure> {
    let mut session = Session::new();
    if background_prune {
        session = session.with_schedule(PruneSchedule::default());
    }
    for call in generate(profile) {
        session.record(&call)?;
    }
    session.wait_for_prune();
    let stats = session.stats();
    info!(
        "{} prunes applied, peak log length {}",
        stats.prunes_applied, stats.max_log_len
    );
    Ok(session)
}

fn read_log(path: &Path) -> Result<TraceLog, Failure> {
    codec::read_log(path).map_err(|e| match e {
        CodecError::Io(e) => Failure::Other(anyhow::Error::new(e).context(format!("reading {}", path.display()))),
        e => e.into(),
    })
}

fn output_format(path: &Path, format: Option<FormatArg>) -> Format {
    match format {
        Some(FormatArg::Text) => Format::Text,
        Some(FormatArg::Binary) => Format::Binary,
        None => Format::from_path(path).unwrap_or(Format::Binary),
    }
}

fn write_log(path: &Path, log: &TraceLog, format: Option<FormatArg>) -> CmdResult {
    codec::write_log(path, log, output_format(path, format))?;
    Ok(())
}

fn print_digests(prefix: &str, d: &Digests) {
    println!("{prefix}state {}", d.state);
    println!("{prefix}frame {}", d.frame);
}

fn verify(input: &Path, pruned_path: Option<&Path>) -> CmdResult {
    let log = read_log(input)?;
    let pruned = match pruned_path {
        Some(p) => read_log(p)?,
        None => prune(&log),
    };
    let full = replay_digests(&log, 1).map_err(|e| Failure::Format(format!("full log: {e}")))?;
    println!("full   ({} records)", log.len());
    print_digests("  ", &full);
    let short = match replay_digests(&pruned, 1) {
        Ok(d) => d,
        Err(e) => return Err(Failure::Mismatch(format!("pruned log does not replay: {e}"))),
    };
    println!("pruned ({} records)", pruned.len());
    print_digests("  ", &short);
    if full != short {
        return Err(Failure::Mismatch("digests differ".into()));
    }
    println!("ok");
    Ok(())
}
