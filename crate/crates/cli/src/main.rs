//! `cedir` command-line front end.

mod commands;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cedir", version, about = "Center-direction fields: encode, synthesize, localize, evaluate")]
struct Cli {
    /// Print wall-clock stage durations to stderr.
    #[arg(long, global = true)]
    time: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a points CSV into a 2-channel CDF1 direction field.
    Encode(commands::EncodeArgs),
    /// Generate numbered synthetic scenes.
    Synth(commands::SynthArgs),
    /// Zero a blob-shaped fraction of a direction field.
    Corrupt(commands::CorruptArgs),
    /// Extract detections from direction fields or score maps.
    Localize(commands::LocalizeArgs),
    /// Match detections against ground truth and write a metrics report.
    Eval(commands::EvalArgs),
    /// Find the score threshold with the best mean F1.
    Sweep(commands::SweepArgs),
    /// Check every loss gradient against central finite differences.
    Gradcheck(commands::GradcheckArgs),
    /// Export channel, angle and response previews as PGM.
    Viz(commands::VizArgs),
}

/// Stage timer; reports go to stderr so data on stdout stays clean.
pub(crate) struct Timer {
    enabled: bool,
    last: Instant,
}

impl Timer {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            last: Instant::now(),
        }
    }

    pub(crate) fn stage(&mut self, name: &str) {
        let now = Instant::now();
        if self.enabled {
            eprintln!("[time] {name}: {:.3} ms", (now - self.last).as_secs_f64() * 1e3);
        }
        self.last = now;
    }
}

fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("CEDIR_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let mut timer = Timer::new(cli.time);
    let result = match &cli.command {
        Command::Encode(a) => commands::encode(a, &mut timer),
        Command::Synth(a) => commands::synth(a, &mut timer),
        Command::Corrupt(a) => commands::corrupt(a, &mut timer),
        Command::Localize(a) => commands::localize(a, &mut timer),
        Command::Eval(a) => commands::eval(a, &mut timer),
        Command::Sweep(a) => commands::sweep(a, &mut timer),
        Command::Gradcheck(a) => commands::gradcheck(a, &mut timer),
        Command::Viz(a) => commands::viz(a, &mut timer),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Usage problems detected after parsing still exit 1.
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
