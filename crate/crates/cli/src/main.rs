//! `tmacro`: compose temporal macro-actions, build effect-safe tasks,
//! validate, plan and refine.

mod commands;
mod limits;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit status: 0 success, 1 not a solution or unsolved, 2 input error,
/// 3 certification failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    Unsolved = 1,
    InputError = 2,
    CertificationFailure = 3,
}

#[derive(Parser)]
#[command(name = "tmacro", version, about = "Sequential temporal macro-actions toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct TaskInput {
    /// Domain file.
    pub domain: PathBuf,
    /// Problem file.
    pub problem: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Compose the macro recipes of a config file into lifted macro schemas.
    Compose {
        domain: PathBuf,
        recipes: PathBuf,
        /// Check every grounding over this problem's objects.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Where to write the macro manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Ground a macro domain and emit its effect-safe task.
    Transform {
        #[command(flatten)]
        input: TaskInput,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        problem_out: PathBuf,
        /// Manifest extended with the mutex atoms of every ground macro.
        #[arg(long)]
        manifest_out: Option<PathBuf>,
    },
    /// Ground a domain and emit it with parameterless actions.
    Ground {
        #[command(flatten)]
        input: TaskInput,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        problem_out: PathBuf,
    },
    /// Check plans against a task.
    Validate {
        #[command(flatten)]
        input: TaskInput,
        #[arg(required = true)]
        plans: Vec<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Write the induced trace (JSON for `.json`, text otherwise).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Unfold the macros of a plan for the effect-safe task and certify it.
    Refine {
        #[command(flatten)]
        input: TaskInput,
        plan: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write one line per refinement step.
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Search for a plan.
    Plan {
        #[command(flatten)]
        input: TaskInput,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Plan for the effect-safe task.
        #[arg(long)]
        effect_safe: bool,
        /// `steps=K,horizon=Q,eps=Q,budget=N`
        #[arg(long)]
        limits: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replace a move schema by direct moves along shortest paths.
    ShortestPaths {
        #[command(flatten)]
        input: TaskInput,
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        problem_out: PathBuf,
    },
    /// compose, transform, plan, refine and validate in one go.
    Pipeline {
        #[command(flatten)]
        input: TaskInput,
        recipes: PathBuf,
        #[arg(long)]
        limits: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Keep intermediate artifacts here.
        #[arg(long)]
        workdir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compose {
            domain,
            recipes,
            problem,
            output,
            manifest,
        } => commands::compose(&domain, &recipes, problem.as_deref(), output.as_deref(), manifest.as_deref()),
        Command::Transform {
            input,
            manifest,
            output,
            problem_out,
            manifest_out,
        } => commands::transform(&input, manifest.as_deref(), &output, &problem_out, manifest_out.as_deref()),
        Command::Ground {
            input,
            manifest,
            output,
            problem_out,
        } => commands::ground(&input, manifest.as_deref(), &output, &problem_out),
        Command::Validate {
            input,
            plans,
            manifest,
            trace,
            jobs,
        } => commands::validate(&input, &plans, manifest.as_deref(), trace.as_deref(), jobs),
        Command::Refine {
            input,
            plan,
            manifest,
            output,
            audit,
        } => commands::refine(&input, &plan, &manifest, output.as_deref(), audit.as_deref()),
        Command::Plan {
            input,
            manifest,
            effect_safe,
            limits,
            output,
        } => commands::plan(&input, manifest.as_deref(), effect_safe, limits.as_deref(), output.as_deref()),
        Command::ShortestPaths {
            input,
            config,
            output,
            problem_out,
        } => commands::shortest_paths(&input, &config, &output, &problem_out),
        Command::Pipeline {
            input,
            recipes,
            limits,
            output,
            workdir,
        } => commands::pipeline(&input, &recipes, limits.as_deref(), output.as_deref(), workdir.as_deref()),
    };
    let status = match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e:#}");
            Status::InputError
        }
    };
    ExitCode::from(status as u8)
}
