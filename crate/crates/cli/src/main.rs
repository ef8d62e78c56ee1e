use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use tdd_sim::experiment::{
    self, parse_experiment, rows_for, write_rows, ExperimentSpec, RESULTS_FILE,
};
use tdd_sim::trace::{CsvTrace, TraceLevel};
use tdd_sim::{Scheme, Simulation};

/// Dynamic-TDD pico-cell simulator with interference-aware UL power control.
#[derive(Parser)]
#[command(name = "tddsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One replication of the base configuration.
    Run {
        /// Experiment file; only the simulation settings are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// off, period or subframe.
        #[arg(long, default_value = "off")]
        trace: TraceLevel,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Option<Scheme>,
        /// Overrides the downlink arrival rate (UL is half of it).
        #[arg(long)]
        lambda_dl: Option<f64>,
    },
    /// Sweep loads, schemes and seeds and write results.csv.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run this single seed instead of the file's seed list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Draw the average and 5th-percentile charts from a results CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "baseline" => Ok(Scheme::Baseline),
        "proposed" => Ok(Scheme::Proposed),
        _ => Err(format!("unknown scheme {s:?} (baseline, proposed)")),
    }
}

fn load_spec(config: Option<&Path>) -> Result<ExperimentSpec> {
    match config {
        Some(path) => parse_experiment(path)
            .with_context(|| format!("invalid experiment file {}", path.display())),
        None => Ok(ExperimentSpec::default()),
    }
}

fn run_one(
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    trace: TraceLevel,
    scheme: Option<Scheme>,
    lambda_dl: Option<f64>,
) -> Result<()> {
    let mut cfg = load_spec(config)?.base;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(scheme) = scheme {
        cfg.scheme = scheme;
    }
    if let Some(l) = lambda_dl {
        cfg.traffic.lambda_dl = l;
    }
    let sim = Simulation::new(cfg.clone())?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let layout_path = out.join("layout.txt");
    let mut layout_file = BufWriter::new(File::create(&layout_path)?);
    sim.layout().write_table(&mut layout_file)?;
    layout_file.flush()?;

    let open = |name: &str| -> Result<BufWriter<File>> {
        let p = out.join(name);
        Ok(BufWriter::new(
            File::create(&p).with_context(|| format!("creating {}", p.display()))?,
        ))
    };
    let periods = if trace >= TraceLevel::Period {
        Some(open("period_trace.csv")?)
    } else {
        None
    };
    let subframes = if trace >= TraceLevel::Subframe {
        Some(open("subframe_trace.csv")?)
    } else {
        None
    };
    let mut sink = CsvTrace::new(periods, subframes);
    let metrics = sim.run_traced(&mut sink)?;
    sink.finish().context("writing trace")?;

    let rows = rows_for(&cfg, &metrics);
    let csv_path = out.join(RESULTS_FILE);
    write_rows(BufWriter::new(File::create(&csv_path)?), &rows)?;

    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "scheme={} seed={} lambda_dl={} cells={} ues={}",
        cfg.scheme,
        cfg.seed,
        cfg.traffic.lambda_dl,
        sim.layout().n_cells(),
        sim.layout().n_ues()
    )?;
    for r in &rows {
        writeln!(
            stdout,
            "{:<2} avg {:8.3} Mbps  p5 {:8.3} Mbps  completed {:5.1}%  mean delta {:.2} dB",
            r.direction.label(),
            r.avg_tput_mbps,
            r.p5_tput_mbps,
            100.0 * r.completion_ratio,
            r.mean_delta_db
        )?;
    }
    writeln!(stdout, "wrote {}", csv_path.display())?;
    Ok(())
}

fn sweep(
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<()> {
    let mut spec = load_spec(config)?;
    if let Some(seed) = seed {
        spec.seeds = vec![seed];
    }
    if let Some(out) = out {
        spec.output_dir = out;
    }
    if workers.is_some() {
        spec.workers = workers;
    }
    let path = experiment::run_experiment(&spec)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            trace,
            scheme,
            lambda_dl,
        } => run_one(config.as_deref(), seed, &out, trace, scheme, lambda_dl),
        Command::Sweep {
            config,
            seed,
            out,
            workers,
        } => sweep(config.as_deref(), seed, out, workers),
        Command::Plot { csv, out } => tdd_sim_cli::emit_plots(&csv, &out)
            .map(|files| {
                for f in files {
                    println!("wrote {}", f.display());
                }
            })
            .map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
