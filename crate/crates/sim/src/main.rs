use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use selfcal_core::Mode;
use selfcal_sim::{build_run, parse_pin, parse_seed_range, run_scenario, ScenarioReport, SimConfig};

#[derive(Parser)]
#[command(name = "selfcal-sim", about = "Closed-loop simulations of self-calibrating PIN entry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Known,
    Buttons9,
    Touch,
    Sketch,
    Audio,
}

impl CliMode {
    fn mode(self) -> Mode {
        match self {
            CliMode::Known => Mode::KnownButtons,
            CliMode::Buttons9 => Mode::SelfCalButtons,
            CliMode::Touch => Mode::TouchMap,
            CliMode::Sketch => Mode::Sketch,
            CliMode::Audio => Mode::Audio,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario per seed and report per-digit outcomes.
    Run {
        #[arg(long, value_enum)]
        mode: CliMode,
        /// Four digits; drawn per seed when omitted.
        #[arg(long)]
        pin: Option<String>,
        /// `N` or `A..B`, inclusive.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        /// TOML file with [engine], [user] and [run] tables.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Line-delimited JSON, one report per seed.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> anyhow::Result<()> {
    let Command::Run {
        mode,
        pin,
        seeds,
        config,
        report,
    } = Cli::parse().command;
    let mut cfg = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SimConfig::from_toml(&text)?
        }
        None => SimConfig::default(),
    };
    let pin = pin.as_deref().map(parse_pin).transpose()?;
    let seeds: Vec<u64> = parse_seed_range(&seeds)?.collect();
    if matches!(mode, CliMode::Buttons9) {
        cfg.run.button_count.get_or_insert(9);
    }
    execute(mode.mode(), &cfg, pin, &seeds, report)
}

fn execute(
    mode: Mode,
    cfg: &SimConfig,
    pin: Option<[u8; 4]>,
    seeds: &[u64],
    report: Option<PathBuf>,
) -> anyhow::Result<()> {
    let started = Instant::now();
    let reports: Vec<(u64, ScenarioReport)> = seeds
        .par_iter()
        .map(|&seed| {
            let (mut user, setup) = build_run(mode, cfg, pin, seed);
            (seed, run_scenario(&mut user, &setup))
        })
        .collect();
    if let Some(path) = report {
        let mut out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        for (seed, r) in &reports {
            let mut line = serde_json::to_value(r)?;
            line["seed"] = (*seed).into();
            writeln!(out, "{line}")?;
        }
        out.flush()?;
    }
    print_summary(&reports, started.elapsed().as_secs_f64());
    Ok(())
}

fn print_summary(reports: &[(u64, ScenarioReport)], seconds: f64) {
    println!("{:>5} {:>6} {:>8} {:>8} {:>9} {:>10}", "slot", "runs", "median", "mean", "accuracy", "exhausted");
    for slot in 0..4 {
        let outcomes: Vec<_> = reports.iter().filter_map(|(_, r)| r.digits.get(slot)).collect();
        if outcomes.is_empty() {
            continue;
        }
        let mut clicks: Vec<usize> = outcomes.iter().map(|o| o.clicks).collect();
        clicks.sort_unstable();
        let mean = clicks.iter().sum::<usize>() as f64 / clicks.len() as f64;
        let correct = outcomes.iter().filter(|o| o.correct).count();
        let exhausted = outcomes.iter().filter(|o| o.budget_exhausted).count();
        println!(
            "{:>5} {:>6} {:>8} {:>8.2} {:>8.1}% {:>10}",
            slot + 1,
            outcomes.len(),
            clicks[clicks.len() / 2],
            mean,
            100.0 * correct as f64 / outcomes.len() as f64,
            exhausted
        );
    }
    let errors = reports.iter().filter(|(_, r)| r.error.is_some()).count();
    let complete = reports.iter().filter(|(_, r)| r.all_correct()).count();
    println!("{complete}/{} PINs fully correct, {errors} engine errors, {seconds:.1}s", reports.len());
}
