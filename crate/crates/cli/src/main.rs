mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Overrides;

/// Exit status for an answer produced by the zero-shot fallback.
pub const EXIT_FALLBACK: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "imgthought", version, about = "Plan, draw and answer: multimodal reasoning with visual rationales")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML settings file; flags and environment take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Model transport: live, record or replay.
    #[arg(long, global = true)]
    transport: Option<String>,
    /// Fixture directory for record and replay.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// hybrid, text_only or zero_shot.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Concurrent tasks in a benchmark run.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output root; traces go to <out>/traces.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Benchmark kind: multiple_choice, yes_no or open_ended.
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true)]
    max_steps: Option<usize>,
    /// `stub` for the built-in tool, or the base URL of a vision sidecar.
    #[arg(long, global = true)]
    tools: Option<String>,
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            transport: self.transport.clone(),
            fixtures: self.fixtures.clone(),
            mode: self.mode.clone(),
            workers: self.workers,
            out: self.out.clone(),
            kind: self.kind.clone(),
            max_steps: self.max_steps,
            tools: self.tools.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Answer one question about one image.
    Ask {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        question: String,
        /// Answer option; repeat for each, labelled A, B, C... in order.
        #[arg(long = "option")]
        options: Vec<String>,
    },
    /// Run and score a benchmark TSV.
    Bench {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Show the stored trace of one task.
    Trace {
        task_id: String,
        /// Trace root; defaults to <out>/traces.
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Also write a self-contained HTML page.
        #[arg(long)]
        export_html: Option<PathBuf>,
    },
    /// Count planned actions over a trace corpus.
    Stats {
        #[arg(long)]
        traces: Option<PathBuf>,
        /// json, csv or md.
        #[arg(long, default_value = "md")]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::dispatch(&cli.global.overrides(), cli.global.config.as_deref(), cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
