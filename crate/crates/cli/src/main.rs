use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linkpc_core::config::{parse_config, Strategy};
use linkpc_core::harness::{self, HarnessError, OutputFormat};

/// Link-aware passive clustering simulator.
#[derive(Parser)]
#[command(name = "linkpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Directory for artifacts.
    #[arg(long, default_value = "linkpc-out")]
    out: PathBuf,
    /// csv, json or both.
    #[arg(long, default_value = "both")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run several strategies over the same seeds.
    Compare {
        config: PathBuf,
        /// Comma-separated strategy names.
        #[arg(long)]
        strategies: String,
        /// Inclusive range `a..b` or comma-separated list.
        #[arg(long)]
        seeds: String,
        #[command(flatten)]
        output: Output,
    },
    /// Run once per value of one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = || HarnessError::Usage(format!("bad seed list `{spec}` (use `1..20` or `1,2,3`)"));
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

fn parse_list(spec: &str) -> Vec<String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, HarnessError> {
    match cli.command {
        Command::Run { config, output } => {
            let format: OutputFormat = output.format.parse()?;
            let cfg = parse_config(&config)?;
            let art = harness::run(&cfg)?;
            warn_all(&art.summary.warnings);
            let s = &art.summary;
            println!(
                "{} seed {}: lifetime {} s, delivered {}/{} ({:.4}), energy {:.6} J",
                s.strategy, s.seed, s.network_lifetime_s, s.reports_delivered, s.reports_sent, s.final_delivery_ratio, s.total_energy_j
            );
            let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
            art.write(&output.out, stem, format)
        }
        Command::Compare {
            config,
            strategies,
            seeds,
            output,
        } => {
            let format: OutputFormat = output.format.parse()?;
            let cfg = parse_config(&config)?;
            let strategies = parse_list(&strategies)
                .iter()
                .map(|s| s.parse::<Strategy>())
                .collect::<Result<Vec<_>, _>>()?;
            let seeds = parse_seeds(&seeds)?;
            let cmp = harness::compare(&cfg, &strategies, &seeds)?;
            for runs in &cmp.runs {
                for r in runs {
                    for w in &r.warnings {
                        eprintln!("warning: {} seed {}: {w}", r.strategy, r.seed);
                    }
                }
            }
            for a in &cmp.aggregates {
                println!(
                    "{:<10} lifetime {:.3} ± {:.3} s, active {:.2} ± {:.2}, delivery {:.4}",
                    a.strategy.to_string(),
                    a.network_lifetime_s.mean,
                    a.network_lifetime_s.std,
                    a.final_active_nodes.mean,
                    a.final_active_nodes.std,
                    a.final_delivery_ratio.mean
                );
            }
            for p in &cmp.paired {
                println!(
                    "{} vs {}: lifetime {}W/{}L (p={:.4}), energy/report {}W/{}L (p={:.4})",
                    p.candidate, p.reference, p.lifetime.wins, p.lifetime.losses, p.lifetime.p_value,
                    p.energy_per_report.wins, p.energy_per_report.losses, p.energy_per_report.p_value
                );
            }
            cmp.write(&output.out, format)
        }
        Command::Sweep {
            config,
            param,
            values,
            output,
        } => {
            let format: OutputFormat = output.format.parse()?;
            let cfg = parse_config(&config)?;
            let sweep = harness::sweep(&cfg, &param, &parse_list(&values))?;
            for (v, art) in &sweep.points {
                warn_all(&art.summary.warnings);
                println!(
                    "{param}={v}: lifetime {} s, delivery {:.4}",
                    art.summary.network_lifetime_s, art.summary.final_delivery_ratio
                );
            }
            sweep.write(&output.out, format)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
