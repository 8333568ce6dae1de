//! `limitomo` command line: configuration-driven forward transform,
//! reconstruction and artifact analysis.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use limitomo::config::{load_config, RunConfig};
use limitomo::io::{read_raster, read_sinogram, write_json, write_raster, write_reports_csv, write_sinogram, RasterFormat};
use limitomo::phantom::rasterize;
use limitomo::pipeline::{run_pipeline, run_study, Stage};
use limitomo::selftest::selftest;
use limitomo::{artifact_report, forward, reconstruct, Source};

#[derive(Parser)]
#[command(name = "limitomo", version, about = "Weighted X-ray transform with limited angular data")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "LIMITOMO_THREADS")]
    threads: Option<usize>,

    /// More log output on stderr (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Args)]
struct FormatArg {
    /// Raster format: raw-f32 or pgm16. Defaults to output.raster_format.
    #[arg(long)]
    format: Option<RasterFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Every stage in order, writing all outputs to output.dir.
    Run(ConfigArg),
    /// Rasterize the configured phantom (3x3 supersampled).
    Phantom {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        format: FormatArg,
        /// Output raster.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Forward transform R_mu of the configured phantom, or of a raster.
    Forward {
        #[command(flatten)]
        config: ConfigArg,
        /// Transform this raster instead of the analytic phantom.
        #[arg(long)]
        raster: Option<PathBuf>,
        /// Output sinogram (.lts).
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Apply the configured operator to a sinogram.
    Reconstruct {
        #[command(flatten)]
        config: ConfigArg,
        /// Input sinogram (.lts).
        #[arg(short, long)]
        sinogram: PathBuf,
        #[command(flatten)]
        format: FormatArg,
        /// Output raster.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Artifact report for a reconstruction against the configured phantom and window.
    Analyze {
        #[command(flatten)]
        config: ConfigArg,
        /// Reconstruction in raw-f32 format.
        #[arg(short, long)]
        recon: PathBuf,
        /// Report JSON.
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the per-line CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Artifact strength against cutoff order over analysis.k_list.
    Study(ConfigArg),
    /// Built-in filter, cutoff and symbol checks, run twice and compared.
    Selftest,
}

/// A failure tagged with the stage that produced it.
struct Failure {
    stage: String,
    error: limitomo::Error,
}

fn at(stage: impl ToString) -> impl FnOnce(limitomo::Error) -> Failure {
    move |error| Failure {
        stage: stage.to_string(),
        error,
    }
}

fn config(arg: &ConfigArg) -> Result<RunConfig, Failure> {
    load_config(&arg.config).map_err(at("config"))
}

fn format_of(cfg: &RunConfig, arg: &FormatArg) -> RasterFormat {
    arg.format.unwrap_or(cfg.raster_format)
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir)
            .map_err(|e| limitomo::Error::io(dir, e))
            .map_err(at(Stage::Write)),
        _ => Ok(()),
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(arg) => {
            let cfg = config(&arg)?;
            let out = run_pipeline(&cfg).map_err(|e| Failure {
                stage: e.stage.to_string(),
                error: e.source,
            })?;
            println!("config hash {}", out.summary.config_hash);
            if let Some(r) = &out.report {
                println!(
                    "max line strength {:.6e}, max edge strength {:.6e}, ratio {:.6e}",
                    r.max_line_strength(),
                    r.max_edge_strength(),
                    r.ratio()
                );
            }
            println!("wrote {} files to {}", out.summary.files.len(), cfg.output_dir.display());
        }
        Command::Phantom { config: arg, format, out } => {
            let cfg = config(&arg)?;
            let img = rasterize(&cfg.phantom, cfg.image, true).map_err(at(Stage::Phantom))?;
            ensure_parent(&out)?;
            write_raster(&img, &out, format_of(&cfg, &format)).map_err(at(Stage::Write))?;
        }
        Command::Forward { config: arg, raster, out } => {
            let cfg = config(&arg)?;
            let sino = match raster {
                Some(path) => {
                    let img = read_raster(&path).map_err(at(Stage::Forward))?;
                    forward(Source::Raster(&img), &cfg.recon.mu, cfg.sinogram)
                }
                None => forward(Source::Phantom(&cfg.phantom), &cfg.recon.mu, cfg.sinogram),
            }
            .map_err(at(Stage::Forward))?;
            ensure_parent(&out)?;
            write_sinogram(&sino, &out).map_err(at(Stage::Write))?;
        }
        Command::Reconstruct {
            config: arg,
            sinogram,
            format,
            out,
        } => {
            let cfg = config(&arg)?;
            let sino = read_sinogram(&sinogram).map_err(at(Stage::Reconstruct))?;
            let img = reconstruct(&sino, &cfg.recon, cfg.image).map_err(at(Stage::Reconstruct))?;
            ensure_parent(&out)?;
            write_raster(&img, &out, format_of(&cfg, &format)).map_err(at(Stage::Write))?;
        }
        Command::Analyze {
            config: arg,
            recon,
            out,
            csv,
        } => {
            let cfg = config(&arg)?;
            let window = cfg.window().ok_or_else(|| Failure {
                stage: Stage::Analyze.to_string(),
                error: limitomo::Error::Config("analyze needs a limited-angle window, not cutoff = \"full\"".into()),
            })?;
            let img = read_raster(&recon).map_err(at(Stage::Analyze))?;
            let mut report =
                artifact_report(&img, &cfg.phantom, &window, cfg.exclusion_radius).map_err(at(Stage::Analyze))?;
            report.metadata.config_hash = Some(cfg.hash());
            ensure_parent(&out)?;
            write_json(&report, &out).map_err(at(Stage::Write))?;
            if let Some(path) = csv {
                ensure_parent(&path)?;
                write_reports_csv(std::slice::from_ref(&report), &path).map_err(at(Stage::Write))?;
            }
            println!(
                "{} lines, max line strength {:.6e}, max edge strength {:.6e}, ratio {:.6e}",
                report.lines.len(),
                report.max_line_strength(),
                report.max_edge_strength(),
                report.ratio()
            );
        }
        Command::Study(arg) => {
            let cfg = config(&arg)?;
            let study = run_study(&cfg).map_err(|e| Failure {
                stage: e.stage.to_string(),
                error: e.source,
            })?;
            println!("k,max_line_strength,max_edge_strength,ratio");
            for r in &study.rows {
                println!("{},{:.6e},{:.6e},{:.6e}", r.k, r.max_line_strength, r.max_edge_strength, r.ratio);
            }
        }
        Command::Selftest => {
            let out = selftest();
            for c in &out.checks {
                println!("{:<16} {}  {}", c.name, if c.passed { "ok" } else { "FAILED" }, c.detail);
            }
            println!(
                "determinism      {}  {} raw bytes compared",
                if out.deterministic { "ok" } else { "FAILED" },
                out.raw_len
            );
            if !out.passed() {
                return Err(Failure {
                    stage: "selftest".into(),
                    error: limitomo::Error::Precondition("one or more checks failed".into()),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not configure {n} threads: {e}");
        }
    }

    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: stage {}: {}", f.stage, f.error);
            ExitCode::FAILURE
        }
    }
}
