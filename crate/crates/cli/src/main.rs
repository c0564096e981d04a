use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use elastowave::solver::Backend;
use elastowave_cli::{run, Overrides, RunFile, Suite};

#[derive(Parser)]
#[command(name = "elastowave", version, about = "Incompressible neo-Hookean elastodynamics: solvers and probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Picard,
    Stepper,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Nullform,
    Product,
    Ld4,
}

#[derive(clap::Args)]
struct OutArg {
    /// run directory
    #[arg(long, env = "ELASTOWAVE_OUT", default_value = "run")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured backend(s), monitors and probes
    Run {
        /// TOML run file, or a manifest.json to rerun
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run probe suites alone (all configured suites by default)
    Probe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "suite", value_enum)]
        suites: Vec<SuiteArg>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Continue the stepper of a run directory from a checkpoint
    Resume {
        /// checkpoint to restart from; defaults to the last one in the manifest
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Summarise a run directory
    Report {
        #[command(flatten)]
        out: OutArg,
    },
}

fn load(path: &PathBuf, seed: Option<u64>, backend: Option<BackendArg>) -> anyhow::Result<RunFile> {
    let mut file = RunFile::load(path)?;
    let backend = backend.map(|b| match b {
        BackendArg::Picard => Backend::Picard,
        BackendArg::Stepper => Backend::Stepper,
        BackendArg::Both => Backend::Both,
    });
    Overrides { seed, backend }.apply(&mut file);
    Ok(file)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, backend, out } => load(&config, seed, backend).and_then(|f| run::run(&f, &out.out)),
        Command::Probe { config, seed, suites, out } => load(&config, seed, None).and_then(|f| {
            let mut s: Vec<Suite> = suites
                .iter()
                .map(|s| match s {
                    SuiteArg::Nullform => Suite::Nullform,
                    SuiteArg::Product => Suite::Product,
                    SuiteArg::Ld4 => Suite::Ld4,
                })
                .collect();
            if s.is_empty() {
                s = vec![Suite::Nullform, Suite::Product, Suite::Ld4];
            }
            run::probe(&f, &out.out, &s)
        }),
        Command::Resume { checkpoint, out } => run::resume(&out.out, checkpoint.as_deref()),
        Command::Report { out } => run::report(&out.out).map(|r| print!("{r}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
