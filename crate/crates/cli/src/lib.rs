//! Driver for the `hstab` command line: calibration and identity checks,
//! ε-sweeps of interaction quantities, the two-bubble sharp example,
//! coercivity sweeps, and bubble fitting of grid functions read from disk.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! and I/O errors, 3 when a numerical method does not converge.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_coercivity, cmd_fit, cmd_identities, cmd_scaling, cmd_sharp_example};
pub use config::RunConfig;
pub use report::{Check, Report};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] hstab_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hstab_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                E::Io(_) | E::Format(_) | E::InvalidArgument(_) | E::DimensionMismatch { .. } | E::Grid(_) => {
                    EXIT_USAGE
                }
                E::NonConvergence { .. }
                | E::ContractionFailure { .. }
                | E::BubbleCollision { .. }
                | E::Quadrature(_)
                | E::Calibration(_) => EXIT_NUMERICAL,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hstab", version, about = "Bubble numerics on the Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate c0 and check the bubble equation, its linearisation, the
    /// Euler identity and the group law.
    Identities,
    /// ε-sweeps of the interaction quantities with slope verdicts.
    Scaling,
    /// Two bubbles plus the correction: deficit, fitted distance and quotient.
    SharpExample,
    /// Lower bound of the linearised operator off the bubble modes.
    Coercivity,
    /// Fit bubbles to a grid function file (or report its deficit alone).
    Fit,
}

/// Every config key can be given on the command line as `--key value`.
#[derive(Debug, Args)]
struct Overrides {
    /// Plain `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    n: Option<String>,
    /// Comma-separated interaction parameters.
    #[arg(long, global = true)]
    eps: Option<String>,
    #[arg(long, global = true)]
    resolution: Option<String>,
    #[arg(long, global = true)]
    box_radius: Option<String>,
    #[arg(long, global = true)]
    quad_tolerance: Option<String>,
    #[arg(long, global = true)]
    cg_tolerance: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    samples: Option<String>,
    #[arg(long, global = true)]
    kernel_check: Option<String>,
    /// Seconds; later sweep points are skipped once exceeded.
    #[arg(long, global = true)]
    budget: Option<String>,
    #[arg(long, global = true)]
    c0_scale: Option<String>,
    #[arg(long, global = true)]
    points: Option<String>,
    /// HGF1 grid function file for `fit`.
    #[arg(long, global = true)]
    input: Option<String>,
    /// Initial bubbles as `lambda:t0` pairs separated by commas.
    #[arg(long, global = true, allow_hyphen_values = true)]
    init: Option<String>,
    #[arg(long, global = true)]
    deficit_only: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        let pairs = [
            ("out", &self.out),
            ("n", &self.n),
            ("eps", &self.eps),
            ("resolution", &self.resolution),
            ("box_radius", &self.box_radius),
            ("quad_tolerance", &self.quad_tolerance),
            ("cg_tolerance", &self.cg_tolerance),
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("kernel_check", &self.kernel_check),
            ("budget", &self.budget),
            ("c0_scale", &self.c0_scale),
            ("points", &self.points),
            ("input", &self.input),
            ("init", &self.init),
            ("deficit_only", &self.deficit_only),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        Ok(())
    }
}

/// Run the command line and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let mut cfg = RunConfig::default();
    let resolved = (|| {
        if let Some(path) = &cli.overrides.config {
            cfg.load(path)?;
        }
        cli.overrides.apply(&mut cfg)?;
        cfg.validate()
    })();
    if let Err(e) = resolved {
        eprintln!("hstab: {e}");
        return e.exit_code();
    }
    let (stem, result) = match cli.command {
        Command::Identities => ("identities", cmd_identities(&cfg)),
        Command::Scaling => ("scaling", cmd_scaling(&cfg)),
        Command::SharpExample => ("sharp_example", cmd_sharp_example(&cfg)),
        Command::Coercivity => ("coercivity", cmd_coercivity(&cfg)),
        Command::Fit => ("fit", cmd_fit(&cfg)),
    };
    let report = match result.and_then(|r| r.write(&cfg.out, stem).map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("hstab: {e}");
            return e.exit_code();
        }
    };
    for line in report.summary() {
        println!("{line}");
    }
    println!("wrote {}/{stem}.json", cfg.out.display());
    if report.passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
