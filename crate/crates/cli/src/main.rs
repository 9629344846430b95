use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use tristruct_core::editing::EditScript;
use tristruct_core::fitting::FitConfig;
use tristruct_core::imaging::{export_cloud, load_image, save_image};
use tristruct_core::pipeline::{fit_image, parse_axis, recolor_image, Init};
use tristruct_core::testkit::fixtures;
use tristruct_core::{Error, TriangularStructure};
use tristruct_service::ServiceConfig;

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "tristruct", version, about = "Fit and edit triangular color structures of images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a structure to an image and write it as JSON.
    Fit {
        image: PathBuf,
        #[arg(long)]
        k: usize,
        /// "gray" or "ar,ag,ab:br,bg,bb" in linear RGB.
        #[arg(long, default_value = "gray")]
        axis: String,
        /// "uniform" or comma-separated angles in degrees.
        #[arg(long, default_value = "uniform")]
        init: String,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-4)]
        angle_tol: f64,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 4 if the fit does not converge.
        #[arg(long)]
        strict: bool,
    },
    /// Apply an edit script to an image.
    Recolor {
        image: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        /// Edit script JSON; identity when omitted.
        #[arg(long)]
        edits: Option<PathBuf>,
        /// Overrides the script's filter scale.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the image color cloud as PLY.
    Cloud {
        image: PathBuf,
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        max_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the local editing service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 40.0)]
        max_megapixels: f64,
        /// Idle session lifetime in seconds.
        #[arg(long, default_value_t = 1800)]
        idle_timeout: u64,
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Write the built-in fixture images as PNG.
    #[command(hide = true)]
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        names: Vec<String>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } | Error::Codec(_) | Error::EmptyImage { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        let message = match &e {
            Error::InvalidStructure(v) => {
                let lines: Vec<String> = v.iter().map(|x| format!("  - {x}")).collect();
                format!("invalid structure:\n{}", lines.join("\n"))
            }
            Error::InvalidEdit(v) => format!("invalid edit script:\n  - {}", v.join("\n  - ")),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Fit { image, k, axis, init, stride, max_iters, angle_tol, out, strict } => {
            if k == 0 {
                return Err(Failure::usage("--k must be at least 1"));
            }
            let axis = parse_axis(&axis)?;
            let initial = Init::parse(&init)?.structure(axis, k)?;
            let cfg = FitConfig { max_iters, angle_tol, stride, ..FitConfig::default() };
            cfg.validate()?;
            let img = load_image(&image)?;
            let outcome = fit_image(&img, &initial, &cfg)?;
            outcome.structure.save(&out)?;
            let r = &outcome.report;
            println!("iters={} objective={:.9e} converged={}", r.iterations, r.final_objective, r.converged);
            if strict && !r.converged {
                eprintln!("error: fit did not converge in {} iterations", r.iterations);
                return Ok(EXIT_NOT_CONVERGED);
            }
            Ok(0)
        }
        Command::Recolor { image, structure, edits, scale, out } => {
            check_output(&out)?;
            let s = TriangularStructure::load(&structure)?;
            let mut script = match edits {
                Some(p) => EditScript::load(&p)?,
                None => EditScript::identity(),
            };
            if let Some(scale) = scale {
                script.filter_scale = scale;
            }
            let img = load_image(&image)?;
            let result = recolor_image(&img, &s, &script)?;
            save_image(&result, &out)?;
            Ok(0)
        }
        Command::Cloud { image, structure, max_points, out } => {
            if max_points == 0 {
                return Err(Failure::usage("--max-points must be at least 1"));
            }
            let s = structure.map(|p| TriangularStructure::load(&p)).transpose()?;
            let img = load_image(&image)?;
            let export = export_cloud(&img, s.as_ref(), max_points)?;
            export.write_ply(&out)?;
            println!("points={} stride={}", export.points.len(), export.stride);
            Ok(0)
        }
        Command::Serve { port, max_megapixels, idle_timeout, cors_origin } => {
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let config = ServiceConfig {
                port,
                max_megapixels,
                idle_timeout: Duration::from_secs(idle_timeout),
                cors_origin,
                ..ServiceConfig::default()
            };
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| Failure { code: EXIT_IO, message: e.to_string() })?;
            rt.block_on(tristruct_service::serve(config))
                .map_err(|e| Failure { code: EXIT_IO, message: format!("serve: {e}") })?;
            Ok(0)
        }
        Command::Synth { out_dir, names } => {
            let wanted: Vec<&str> = if names.is_empty() {
                fixtures::NAMES.to_vec()
            } else {
                names.iter().map(String::as_str).collect()
            };
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Failure { code: EXIT_IO, message: format!("{}: {e}", out_dir.display()) })?;
            for name in wanted {
                let img = fixtures::fixture(name)
                    .ok_or_else(|| Failure::usage(format!("unknown fixture {name}")))?;
                save_image(&img, &out_dir.join(format!("{name}.png")))?;
                println!("{name}");
            }
            Ok(0)
        }
    }
}

fn check_output(path: &Path) -> Result<(), Failure> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => Ok(()),
        _ => Err(Failure::usage(format!("{}: output must be a .png file", path.display()))),
    }
}
