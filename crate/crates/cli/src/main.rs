use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use setgc::commands::{self, AnalyzeConfig, SimulateConfig};
use setgc::CliError;
use setgc_core::lagcov::Conditioning;
use setgc_core::{BlockLength, BootstrapConfig, Method, Ridge, SimKind, SimSpec, XStream};

#[derive(Parser)]
#[command(name = "setgc", version, about = "Granger causality between sets of time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct BootArgs {
    /// Bootstrap replicates per edge.
    #[arg(long, default_value_t = 1000)]
    bootstraps: usize,
    /// `auto` or a positive integer.
    #[arg(long, default_value = "auto", value_parser = parse_block_length)]
    block_length: BlockLength,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Condition on series that belong to no set.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    include_unassigned_in_x: bool,
    /// Which stream carries the conditioning columns when resampling.
    #[arg(long, value_enum, default_value_t = XStreamArg::Effect)]
    x_stream: XStreamArg,
    /// Relative ridge on the conditioning covariance (0 = pseudo-inverse only).
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum XStreamArg {
    Effect,
    Cause,
    Independent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Sim1,
    Sim2,
}

#[derive(Subcommand)]
enum Command {
    /// Test every ordered pair of sets in a panel and write the graph.
    Analyze {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        skip_self_loops: bool,
        #[command(flatten)]
        boot: BootArgs,
    },
    /// Monte Carlo detection rates on a simulated system.
    Simulate {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value_t = 500)]
        runs: u64,
        /// Comma-separated: pcca, wald, wald-f.
        #[arg(long, default_value = "pcca,wald", value_delimiter = ',', value_parser = parse_method)]
        methods: Vec<Method>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        length: usize,
        #[arg(long, default_value_t = 100)]
        burn_in: usize,
        /// Coupling coefficient (defaults to the system's own value).
        #[arg(long)]
        coefficient: Option<f64>,
        #[command(flatten)]
        boot: BootArgs,
    },
    /// Internal consistency checks on a small simulated panel.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_block_length(s: &str) -> Result<BlockLength, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(BlockLength::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(BlockLength::Fixed(n)),
        _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::from_tag(s.trim()).ok_or_else(|| format!("unknown method `{s}` (expected pcca, wald or wald-f)"))
}

impl BootArgs {
    fn config(&self) -> Result<BootstrapConfig, CliError> {
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(CliError::Usage(format!("--ridge must be a finite non-negative number, got {}", self.ridge)));
        }
        let cfg = BootstrapConfig {
            replicates: self.bootstraps,
            block_length: self.block_length,
            alpha: self.alpha,
            seed: self.seed,
            x_stream: match self.x_stream {
                XStreamArg::Effect => XStream::Effect,
                XStreamArg::Cause => XStream::Cause,
                XStreamArg::Independent => XStream::Independent,
            },
            conditioning: Conditioning { include_unassigned: self.include_unassigned_in_x },
            ridge: if self.ridge > 0.0 { Ridge::Relative(self.ridge) } else { Ridge::None },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { panel, partition, out, skip_self_loops, boot } => {
            let cfg = AnalyzeConfig { panel, partition, out, bootstrap: boot.config()?, skip_self_loops, workers: boot.workers };
            let analysis = commands::cmd_analyze(&cfg)?;
            eprintln!("tested {} edges; results in {}", analysis.tests.len(), cfg.out.display());
        }
        Command::Simulate { which, runs, methods, out, length, burn_in, coefficient, boot } => {
            let kind = match which {
                Which::Sim1 => SimKind::Sim1,
                Which::Sim2 => SimKind::Sim2,
            };
            let bootstrap = boot.config()?;
            let spec = SimSpec {
                length,
                burn_in,
                coefficient: coefficient.unwrap_or(kind.default_coefficient()),
                ..SimSpec::new(kind).with_seed(bootstrap.seed)
            };
            let cfg = SimulateConfig { spec, methods, runs, out, bootstrap, workers: boot.workers };
            let mats = commands::cmd_simulate(&cfg)?;
            let (report, _) = commands::calibration_report(kind, &mats, cfg.bootstrap.alpha);
            print!("{report}");
        }
        Command::Selftest { seed } => {
            let (report, ok) = commands::cmd_selftest(seed);
            print!("{report}");
            if !ok {
                return Err(CliError::Usage("selftest failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
