mod args;
mod build;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Parser;
use digisplit::config::ExperimentFile;
use digisplit::experiment::{run_experiment, sweep_k, sweep_n};
use digisplit::report::{emit_report, write_report, ReportFormat, ReportRow};

use args::{Cli, Command, Common, FormatArg};
use build::{experiments, require_ams, Preset};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.command.common().clone();
    let (rows, file) = match &cli.command {
        Command::Price(c) => run_all(c, Preset::PRICE)?,
        Command::Extreme(c) => run_all(c, Preset::EXTREME)?,
        Command::MultiAsset(c) => run_all(c, Preset::MULTI_ASSET)?,
        Command::Bench(c) => {
            if c.spec.is_none() {
                bail!("bench needs an experiment file (--spec)");
            }
            run_all(c, Preset::PRICE)?
        }
        Command::SweepK { common, k_values } => {
            let (specs, file) = experiments(common, Preset::PRICE)?;
            let mut rows = Vec::new();
            for spec in &specs {
                require_ams(spec)?;
                rows.extend(sweep_k(spec, k_values)?.into_iter().map(|o| o.row));
            }
            (rows, file)
        }
        Command::SweepN { common, n_values } => {
            let (specs, file) = experiments(common, Preset::PRICE)?;
            let mut rows = Vec::new();
            for spec in &specs {
                require_ams(spec)?;
                for r in sweep_n(spec, n_values)? {
                    eprintln!("{}: work/(N ln N (-ln p)) = {:.4}", r.outcome.row.experiment, r.prefactor);
                    rows.push(r.outcome.row);
                }
            }
            (rows, file)
        }
    };
    write_output(&rows, &common, file.as_ref())
}

fn run_all(c: &Common, preset: Preset) -> Result<(Vec<ReportRow>, Option<ExperimentFile>)> {
    let (specs, file) = experiments(c, preset)?;
    let rows = specs
        .iter()
        .map(|s| {
            log::info!("running {}", s.id);
            let out = run_experiment(s)?;
            if out.failures() > 0 {
                log::warn!("{}: {} of {} runs failed", s.id, out.failures(), out.runs.len());
            }
            Ok(out.row)
        })
        .collect::<Result<_>>()?;
    Ok((rows, file))
}

fn write_output(rows: &[ReportRow], c: &Common, file: Option<&ExperimentFile>) -> Result<()> {
    let from_file = file.and_then(|f| f.output.as_ref());
    let format = match c.format {
        Some(FormatArg::Csv) => ReportFormat::Csv,
        Some(FormatArg::Json) => ReportFormat::Json,
        None => from_file.map(|o| o.format).unwrap_or_default(),
    };
    match c.out.as_ref().or(from_file.map(|o| &o.path)) {
        Some(path) => emit_report(rows, format, path)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            write_report(rows, format, &mut stdout)?;
            stdout.flush()?;
        }
    }
    Ok(())
}
