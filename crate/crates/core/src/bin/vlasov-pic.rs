use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vlasov_pic::diagnostics::fit_decay;
use vlasov_pic::harness::{run_convergence_study, run_simulation};
use vlasov_pic::output::{emit_outputs, read_diagnostics};
use vlasov_pic::{Error, RunConfig};

#[derive(Parser)]
#[command(
    name = "vlasov-pic",
    about = "1D Vlasov-Poisson particle method with an infinite-mass background"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write diagnostics.csv, field snapshots and manifest.json.
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Built-in configuration: desk, full or steady.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Steady-state error table on successively halved meshes.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Power-law fit of the sup-field envelope in a diagnostics file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Time window as `a,b`.
        #[arg(long, value_parser = parse_window)]
        window: (f64, f64),
        /// Fit the monitor-window column instead of the valid-interval sup-field.
        #[arg(long)]
        monitor: bool,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn load(config: Option<PathBuf>, preset: Option<String>) -> Result<RunConfig, Error> {
    match (config, preset) {
        (Some(path), _) => RunConfig::load(&path),
        (None, Some(name)) => RunConfig::preset(&name),
        (None, None) => Err(Error::InvalidConfig(
            "either --config or --preset is required".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            preset,
            output_dir,
        } => {
            let mut cfg = load(config, preset)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let out = run_simulation(&cfg)?;
            let manifest =
                emit_outputs(&out.series, &out.snapshots, &out.manifest, &cfg.output_dir)?;
            println!(
                "{}: {} steps in {:.2} s, exhaustion step {}",
                manifest.scenario,
                manifest.total_steps,
                manifest.wall_clock_seconds,
                manifest
                    .exhaustion_step
                    .map_or_else(|| "none".to_string(), |s| s.to_string())
            );
            println!(
                "max relative energy drift {:.4e}",
                out.series.max_relative_energy_drift()
            );
            println!(
                "wrote {} (sha256 {})",
                cfg.output_dir.display(),
                manifest.checksum
            );
        }
        Command::Converge {
            config,
            levels,
            output_dir,
        } => {
            let cfg = RunConfig::load(&config)?;
            let table = run_convergence_study(&cfg.sim, levels, cfg.force_sign)?;
            let mut text = String::from("mesh");
            for t in &table.times {
                text.push_str(&format!(",t={t}"));
            }
            text.push('\n');
            for (h, errs) in table.meshes.iter().zip(&table.errors) {
                text.push_str(&h.to_string());
                for e in errs {
                    text.push_str(&format!(",{e}"));
                }
                text.push('\n');
            }
            text.push_str("rate");
            for r in &table.rates {
                text.push_str(&format!(
                    ",{}",
                    r.map(|r| r.to_string()).unwrap_or_default()
                ));
            }
            text.push('\n');
            print!("{text}");
            let dir = output_dir.unwrap_or(cfg.output_dir);
            std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            let path = dir.join("convergence.csv");
            std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
        }
        Command::Fit {
            input,
            window,
            monitor,
        } => {
            let series = read_diagnostics(&input)?;
            let fit = if monitor {
                fit_decay(&series.times, &series.monitor_sup_field, window)?
            } else {
                let (times, values) = series.valid_samples();
                fit_decay(&times, &values, window)?
            };
            println!("coefficient {:e}", fit.coefficient);
            println!("exponent {}", fit.exponent);
            println!("residual {:e}", fit.residual);
            println!("t,sup_field,sup_field*t");
            for (t, s) in &fit.peaks {
                println!("{t},{s:e},{:e}", s * t);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
