use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use coupling_lab::config::ExperimentConfig;
use coupling_lab::output::write_file;
use coupling_lab::plot::plot_from_csv;
use coupling_lab::presets::{find, PRESETS};
use coupling_lab::runner::run_experiment;
use coupling_lab::verify::{run_criterion, Suite, CRITERIA};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "coupling-lab", version, about = "Couplings of sub-Riemannian Brownian motions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config or a named preset.
    Run {
        /// Path to the experiment config.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria.
    Verify {
        #[arg(long, default_value = "fast")]
        suite: Suite,
        /// Run only these criteria.
        #[arg(long = "criterion", value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// List the preset experiments, or write them as TOML files.
    Presets {
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Render a results CSV as an SVG plot.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        logy: bool,
    },
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("COUPLING_LAB_THREADS") else { return Ok(()) };
    let n: usize = match v.trim().parse() {
        Ok(n) if n >= 1 => n,
        _ => bail!("COUPLING_LAB_THREADS must be a positive integer, got {v:?}"),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when a check failed.
fn real_main() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    init_threads()?;
    match cli.command {
        Command::Run { config, preset, out } => {
            let cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(&path)?,
                (None, Some(name)) => find(&name)
                    .with_context(|| format!("unknown preset {name:?}; see `coupling-lab presets`"))?
                    .config()?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            let exp = cfg.validate()?;
            let m = run_experiment(&exp, &dir)?;
            println!("{} ({:.1}s) -> {}", m.name, m.wall_time_seconds, dir.display());
            for (k, v) in &m.summary {
                println!("  {k} = {v}");
            }
            for a in &m.assertions {
                println!("  [{}] {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
            Ok(m.pass)
        }
        Command::Verify { suite, only } => {
            let ids: Vec<u8> = if only.is_empty() { CRITERIA.to_vec() } else { only };
            if let Some(bad) = ids.iter().find(|id| !CRITERIA.contains(id)) {
                bail!("no criterion {bad}; valid ids are 1 to {}", CRITERIA.len());
            }
            let mut pass = true;
            for id in ids {
                let r = run_criterion(id, suite);
                pass &= r.pass;
                println!("{r}");
            }
            Ok(pass)
        }
        Command::Presets { emit } => {
            for p in PRESETS {
                let cfg = p.config()?;
                println!("{:<22} {}", p.name, cfg.anchor.as_deref().unwrap_or(""));
                if let Some(dir) = &emit {
                    let path = dir.join(format!("{}.toml", p.name));
                    write_file(&path, p.toml.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
                }
            }
            Ok(true)
        }
        Command::Plot { csv, out, logy } => {
            let bytes = std::fs::read(&csv).with_context(|| format!("reading {}", csv.display()))?;
            let svg = plot_from_csv(&bytes, logy)?.to_svg();
            write_file(&out, svg.as_bytes()).with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }
    }
}
