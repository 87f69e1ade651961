//! Command-line front end: run and validate scenario files, generate
//! topologies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compute_congestion::output::{self, Format};
use compute_congestion::topology::{self, CapacityProfile};
use compute_congestion::Scenario;

#[derive(Parser)]
#[command(name = "ccsim", version, about = "Computation congestion control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its reports.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the replicate count.
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Topology utilities.
    Topo {
        #[command(subcommand)]
        command: TopoCommand,
    },
}

#[derive(Subcommand)]
enum TopoCommand {
    /// Print a generated topology in the text file format.
    Gen {
        #[command(subcommand)]
        shape: Shape,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1.0)]
    cpu: f64,
    #[arg(long, default_value_t = 1.0)]
    mem: f64,
    #[arg(long, default_value_t = topology::DEFAULT_LINK_DELAY_MS)]
    delay_ms: f64,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Shape {
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// `row,col` of the client's edge router.
        #[arg(long, value_parser = parse_coord, default_value = "0,0")]
        client_at: (usize, usize),
        /// `row,col` of the server's edge router; defaults to the far corner.
        #[arg(long, value_parser = parse_coord)]
        server_at: Option<(usize, usize)>,
        #[command(flatten)]
        common: Common,
    },
    Line {
        #[arg(long)]
        routers: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn parse_coord(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(',').ok_or("expected row,col")?;
    Ok((
        r.trim().parse().map_err(|e| format!("row: {e}"))?,
        c.trim().parse().map_err(|e| format!("col: {e}"))?,
    ))
}

const USAGE: u8 = 2;
const RUNTIME: u8 = 1;

fn fail(code: u8, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn load(path: &PathBuf) -> Result<Scenario, ExitCode> {
    Scenario::load(path).map_err(|e| fail(USAGE, e))
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Validate { scenario } => {
            let s = load(&scenario)?;
            println!(
                "{}: ok ({} nodes, digest {})",
                scenario.display(),
                s.topology.nodes().len(),
                s.digest()
            );
        }
        Command::Run {
            scenario,
            seed,
            replicates,
            out,
            format,
        } => {
            let mut s = load(&scenario)?;
            if let Some(seed) = seed {
                s = s.with_seed(seed).map_err(|e| fail(USAGE, e))?;
            }
            if let Some(n) = replicates {
                s = s.with_replicates(n).map_err(|e| fail(USAGE, e))?;
            }
            let reports = s.run_all().map_err(|e| fail(RUNTIME, e))?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            output::emit(&reports, format, &out).map_err(|e| fail(RUNTIME, e))?;
            log::info!("wrote {} report(s) to {}", reports.len(), out.display());
        }
        Command::Topo {
            command: TopoCommand::Gen { shape },
        } => {
            let (topo, common) = match shape {
                Shape::Grid {
                    rows,
                    cols,
                    client_at,
                    server_at,
                    common,
                } => {
                    let server_at = server_at.unwrap_or((rows.saturating_sub(1), cols.saturating_sub(1)));
                    let profile = CapacityProfile::uniform(common.cpu, common.mem);
                    (
                        topology::grid(rows, cols, &profile, client_at, server_at, common.delay_ms),
                        common,
                    )
                }
                Shape::Line { routers, common } => {
                    let profile = CapacityProfile::uniform(common.cpu, common.mem);
                    (topology::line(routers, &profile, common.delay_ms), common)
                }
            };
            let text = topo.map_err(|e| fail(USAGE, e))?.to_text();
            match common.out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|e| fail(RUNTIME, format!("{}: {e}", path.display())))?
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
