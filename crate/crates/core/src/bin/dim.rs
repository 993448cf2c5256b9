use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracdim::catalog::CATALOG;
use fracdim::figure::emit_figure;
use fracdim::record::{run, verify_record_file, RunConfig};
use fracdim::Error;

#[derive(Debug, Parser)]
#[command(name = "dim", version, about = "Certified Hausdorff dimension intervals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bracket the dimension of a catalog system.
    Run {
        #[arg(long)]
        system: Option<String>,
        /// Target mesh size.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        truncation: Option<f64>,
        #[arg(long = "width-goal")]
        width_goal: Option<f64>,
        /// Result record (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Draw generations up to this depth next to the record.
        #[arg(long)]
        figure: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        /// TOML configuration; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-check a result record from its stored witnesses.
    Verify { record: PathBuf },
    /// List the built-in systems.
    Catalog,
}

const EXIT_CERTIFICATION: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::Range(_) | Error::UnsupportedDimension(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_CERTIFICATION,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("dim: {e}");
    ExitCode::from(exit_code(&e))
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    system: Option<String>,
    h: Option<f64>,
    truncation: Option<f64>,
    width_goal: Option<f64>,
    out: Option<PathBuf>,
    figure: Option<usize>,
    config: Option<PathBuf>,
) -> Result<RunConfig, Error> {
    let mut c = match config {
        Some(path) => RunConfig::load(&path)?,
        None => {
            let name = system.clone().ok_or_else(|| Error::Config("--system is required without --config".into()))?;
            let h = h.ok_or_else(|| Error::Config("--h is required without --config".into()))?;
            RunConfig::for_system(&name, h)
        }
    };
    if let Some(name) = system {
        c.system.name = Some(name);
        c.system.similitude = None;
    }
    if let Some(h) = h {
        c.mesh.h = h;
    }
    if truncation.is_some() {
        c.system.truncation = truncation;
    }
    if width_goal.is_some() {
        c.solver.width_goal = width_goal;
    }
    if out.is_some() {
        c.output.record = out;
    }
    if figure.is_some() {
        c.output.figure_depth = figure;
    }
    if c.output.figure_depth.is_some() && c.output.figure.is_none() {
        let base = c.output.record.clone().unwrap_or_else(|| PathBuf::from("dim-result.json"));
        c.output.figure = Some(base.with_extension("svg"));
    }
    c.check()?;
    Ok(c)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Catalog => {
            println!("{:<18} {:>3} {:>8} {:>14}  {}", "name", "n", "eta", "published", "description");
            for e in CATALOG.iter() {
                println!(
                    "{:<18} {:>3} {:>8.5} {:>14}  {}",
                    e.name,
                    e.dim,
                    e.eta,
                    format!("{}", e.table_value),
                    e.description
                );
            }
            ExitCode::SUCCESS
        }
        Command::Verify { record } => match verify_record_file(&record) {
            Ok(()) => {
                println!("{}: verified", record.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run { system, h, truncation, width_goal, out, figure, jobs, config } => {
            if let Some(k) = jobs {
                if k == 0 {
                    return fail(Error::Config("--jobs must be at least 1".into()));
                }
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
                    return fail(Error::Config(e.to_string()));
                }
            }
            let config = match build_config(system, h, truncation, width_goal, out, figure, config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let outcome = match run(&config) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            let summary = outcome.record.summary();
            print!("{summary}");
            if let Some(path) = &config.output.summary {
                if let Err(e) = std::fs::write(path, &summary) {
                    return fail(e.into());
                }
            }
            if let Some(path) = &config.output.record {
                if let Err(e) = outcome.record.write(path) {
                    return fail(e);
                }
                println!("record        {}", path.display());
            }
            if let (Some(depth), Some(path)) = (config.output.figure_depth, &config.output.figure) {
                if let Err(e) = emit_figure(&outcome.system.spec, depth, path) {
                    return fail(e);
                }
                println!("figure        {}", path.display());
            }
            ExitCode::SUCCESS
        }
    }
}
