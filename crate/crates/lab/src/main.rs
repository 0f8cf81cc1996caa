use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_core::cpwl::{extract_regions_1d, regions_to_csv};
use spectral_core::relunet::ReluNet;
use spectral_core::spectra::SpectrumTrace;
use spectral_lab::config::parse_seeds;
use spectral_lab::runners::common::trace_heatmap_clipped;
use spectral_lab::{run_to_dir, ExperimentConfig, LabError, LabResult, Profile};

#[derive(Parser)]
#[command(name = "lab", version, about = "Spectral-bias experiments for ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its artifacts plus manifest.json.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Profile overlay from the config's `profiles` object.
        #[arg(long)]
        profile: Option<String>,
        /// Comma-separated seeds replacing the configured list.
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Render a spectrum-trace CSV as an SVG heatmap.
    Render {
        trace: PathBuf,
        /// Colour range as `lo,hi`.
        #[arg(long, default_value = "0,1")]
        clip: String,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Print the linear regions of a checkpointed network along a segment.
    Regions {
        checkpoint: PathBuf,
        /// Segment endpoints, start coordinates then end coordinates.
        #[arg(long, allow_hyphen_values = true)]
        line: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

fn floats(s: &str, what: &str) -> LabResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| LabError::Config(format!("bad number {t:?} in {what}")))
        })
        .collect()
}

fn read(path: &PathBuf) -> LabResult<String> {
    std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))
}

fn write(path: &PathBuf, text: &str) -> LabResult<()> {
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn dispatch(cmd: Command) -> LabResult<()> {
    match cmd {
        Command::Run {
            config,
            out,
            profile,
            seeds,
        } => {
            let profile = profile.map(|p| p.parse::<Profile>()).transpose()?;
            let mut cfg = ExperimentConfig::load(&config, profile)?;
            if let Some(s) = seeds {
                cfg.seeds = parse_seeds(&s)?;
                cfg.validate()?;
            }
            let dir = out
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(cfg.kind.name()));
            let (report, manifest) = run_to_dir(&cfg, &dir)?;
            eprintln!(
                "{}: {} files in {} (config {})",
                manifest.kind,
                manifest.files.len(),
                dir.display(),
                &manifest.config_hash[..12]
            );
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Render { trace, clip, output } => {
            let c = floats(&clip, "--clip")?;
            if c.len() != 2 {
                return Err(LabError::Config("--clip takes lo,hi".into()));
            }
            let t = SpectrumTrace::<f64>::from_csv(&read(&trace)?)?;
            let title = trace.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            write(&output, &trace_heatmap_clipped(&t, &title, "frequency k", (c[0], c[1]))?)
        }
        Command::Regions {
            checkpoint,
            line,
            output,
        } => {
            let net = ReluNet::<f64>::from_json(&read(&checkpoint)?)?;
            let p = floats(&line, "--line")?;
            let d = net.input_dim();
            if p.len() != 2 * d {
                return Err(LabError::Config(format!(
                    "--line needs {} numbers for a {d}-input network, got {}",
                    2 * d,
                    p.len()
                )));
            }
            let csv = regions_to_csv(&extract_regions_1d(&net, &p[..d], &p[d..])?);
            match output {
                Some(o) => write(&o, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
