//! `genent`: construct states, run entanglement analyses, verify certificates.

mod analyze;
mod failure;
mod recipe;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use failure::Failure;
use report::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "genent", version, about = "Multipartite entanglement construction and certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Tolerance override, e.g. `--tol psd=1e-8`. Repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL", global = true)]
    tol: Vec<String>,

    /// Random restarts for distillability searches.
    #[arg(long, global = true, default_value_t = 20)]
    restarts: usize,

    /// Iteration cap for the PPT-mixture search.
    #[arg(long = "max-iters", global = true, default_value_t = 20_000)]
    max_iters: usize,

    /// Output file (state file for `construct`, report otherwise). Defaults to stdout for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a state from a recipe file and report on it.
    Construct {
        recipe: PathBuf,
        /// Where to write the construction report (stdout if absent).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run one analysis pipeline on a state file.
    #[command(group(ArgGroup::new("pipeline").required(true).args(["ppt", "werner", "distill", "ge", "lemma5", "cascade"])))]
    Analyze {
        /// State file. With `--lemma5` it is the state β and may be omitted.
        state: Option<PathBuf>,
        /// PPT test across the cut given as comma-separated labels.
        #[arg(long, value_name = "CUT")]
        ppt: Option<String>,
        /// Fit to the Werner family and classify.
        #[arg(long)]
        werner: bool,
        /// One-copy distillability search across the cut.
        #[arg(long, value_name = "CUT")]
        distill: Option<String>,
        /// Genuine multipartite entanglement certification.
        #[arg(long)]
        ge: bool,
        /// Parameter file for the lemma5 analyzer.
        #[arg(long, value_name = "PARAMS")]
        lemma5: Option<PathBuf>,
        /// Projection cascade against an EB basis file.
        #[arg(long, value_name = "EBBASIS")]
        cascade: Option<PathBuf>,
    },
    /// Re-check a certificate (or a report holding one) against a state.
    Verify { certificate: PathBuf, state: PathBuf },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = RunConfig::new(&cli.tol, cli.seed, cli.restarts, cli.max_iters)?;
    match cli.command {
        Command::Construct { recipe, report } => {
            let out =
                cli.out.ok_or_else(|| Failure::input(anyhow::anyhow!("construct needs --out for the state file")))?;
            recipe::construct(&config, &recipe, &out, report.as_deref())
        }
        Command::Analyze { state, ppt, werner, distill, ge, lemma5, cascade } => {
            let pipeline = if let Some(cut) = ppt {
                analyze::Pipeline::Ppt(cut)
            } else if werner {
                analyze::Pipeline::Werner
            } else if let Some(cut) = distill {
                analyze::Pipeline::Distill(cut)
            } else if ge {
                analyze::Pipeline::Ge
            } else if let Some(params) = lemma5 {
                analyze::Pipeline::Lemma5(params)
            } else if let Some(basis) = cascade {
                analyze::Pipeline::Cascade(basis)
            } else {
                unreachable!("clap enforces one pipeline")
            };
            analyze::analyze(&config, state.as_deref(), &pipeline, cli.out.as_deref())
        }
        Command::Verify { certificate, state } => verify::verify(&config, &certificate, &state, cli.out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("genent: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
