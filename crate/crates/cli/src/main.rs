use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rsma_cli::scenario::{Scheme, SweepParameter};
use rsma_cli::{evaluate_point, load_scenario, run_sweep, write_csv, write_svg, CliError, RunOptions};
use rsma_core::McMode;

#[derive(Parser)]
#[command(name = "rsma", version, about = "Ergodic-rate sweeps for downlink RSMA and NOMA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file.
    Validate { scenario: PathBuf },
    /// Evaluate a scenario over its sweep grid and write `<out>/<name>.csv`.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Monte-Carlo samples per point (overrides the file and RSMA_MC_SAMPLES).
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Closed forms only.
        #[arg(long)]
        no_mc: bool,
        /// Also write `<out>/<name>.svg`.
        #[arg(long)]
        plot: bool,
    },
    /// Print every metric of the base configuration at one transmit power.
    Point {
        scenario: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        power: f64,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_mc: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            println!(
                "{}: ok ({} variant(s), {} grid point(s), schemes {})",
                scenario.display(),
                s.variants.len(),
                s.sweep.grid().len(),
                s.schemes.iter().map(|x| x.name()).collect::<Vec<_>>().join(",")
            );
        }
        Command::Sweep {
            scenario,
            out,
            samples,
            seed,
            no_mc,
            plot,
        } => {
            let mut s = load_scenario(&scenario)?;
            s.override_mc(samples, seed)?;
            let result = run_sweep(&s, RunOptions { monte_carlo: !no_mc })?;
            std::fs::create_dir_all(&out).map_err(|e| CliError::Io {
                path: out.clone(),
                source: e,
            })?;
            let csv = out.join(format!("{}.csv", s.name));
            write_csv(&result, &csv)?;
            println!("wrote {} ({} rows)", csv.display(), result.rows.len());
            if plot {
                let svg = out.join(format!("{}.svg", s.name));
                write_svg(&result, &s.name, &svg)?;
                println!("wrote {}", svg.display());
            }
        }
        Command::Point {
            scenario,
            power,
            samples,
            seed,
            no_mc,
        } => {
            let mut s = load_scenario(&scenario)?;
            s.override_mc(samples, seed)?;
            s.sweep.parameter = SweepParameter::TxPowerDbm;
            for &scheme in &s.schemes {
                for (v, variant) in s.variants.iter().enumerate() {
                    let eval = evaluate_point(&s, scheme, v, power, RunOptions { monte_carlo: !no_mc })?;
                    println!("{} / {} at {power} dBm", scheme.name(), variant.label);
                    println!("  user  closed_form  common     private    mc_exact            mc_approx");
                    for (u, rate) in eval.closed_form.iter().enumerate() {
                        let (c, p) = match (&eval.split, scheme) {
                            (Some(split), Scheme::Rsma) => (format!("{:.6}", split[u].0), format!("{:.6}", split[u].1)),
                            _ => ("-".into(), "-".into()),
                        };
                        let mc = |mode| {
                            eval.simulated.as_ref().map_or("-".to_string(), |sim| {
                                let e = sim[u].get(mode);
                                format!("{:.6}±{:.6}", e.mean, e.stderr)
                            })
                        };
                        println!(
                            "  {:<4}  {rate:<11.6}  {c:<9}  {p:<9}  {:<18}  {}",
                            u + 1,
                            mc(McMode::ExactLog),
                            mc(McMode::TopsoeApprox)
                        );
                    }
                    let jfi = eval.jfi().map_or("-".to_string(), |j| format!("{j:.6}"));
                    println!("  sum_rate {:.6}  ee {:.6}  jfi {jfi}", eval.sum_rate(), eval.ee());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.chain().find_map(|e| e.downcast_ref::<CliError>()).map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
