//! Command-line surface for twist-map analyses: builds families from
//! config files and flags, runs the library's analyses, and emits
//! machine-readable JSON and CSV.

mod commands;
mod config;
mod family;
mod json;
mod verify;

use clap::{Args, Parser, Subcommand};
use config::{CliError, Settings};
use std::path::PathBuf;
use std::process::ExitCode;
use twistlab::families::Profile;

#[derive(Parser)]
#[command(
    name = "twistlab",
    version,
    about = "Rotation numbers, rotation sets, twist intervals, mode locking, and invariant-curve diagnostics for annulus twist maps"
)]
struct Cli {
    /// Config file with [family] / [run] sections of key = value lines.
    /// Command-line flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all randomized sampling; defaults to 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count; falls back to TWISTLAB_THREADS, then the
    /// config file, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path for the command's CSV or JSON payload.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct FamilyArgs {
    /// Family kind: rigid, arnold, shear, float, locked, eye, billiard.
    #[arg(long)]
    family: Option<String>,
    /// Monotone profile for shear/float: y, y2, sqrt, sine, const:C, affine:A:B.
    #[arg(long)]
    phi: Option<Profile>,
    /// Fiber homeomorphism for float maps (fixes 0 and 1).
    #[arg(long)]
    psi: Option<Profile>,
    /// Arnold family rotation offset.
    #[arg(long)]
    omega: Option<f64>,
    /// Arnold family nonlinearity in [0, 1).
    #[arg(long)]
    eps: Option<f64>,
    /// Locked rational numerator.
    #[arg(long)]
    p: Option<i64>,
    /// Locked rational denominator.
    #[arg(long)]
    q: Option<u64>,
    /// Suspension band width (locked, eye families).
    #[arg(long)]
    eps0: Option<f64>,
    /// Eye-map completion dip amplitude.
    #[arg(long)]
    dip: Option<f64>,
    /// Ellipse semi-major axis.
    #[arg(long)]
    a: Option<f64>,
    /// Ellipse semi-minor axis.
    #[arg(long)]
    b: Option<f64>,
    /// Rigid rotation amount.
    #[arg(long)]
    alpha: Option<f64>,
    /// Boundary index (0 or 1) when a circle map is taken from an annulus
    /// family.
    #[arg(long)]
    boundary: Option<u8>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rotation number of a circle family or an annulus boundary.
    Rotnum {
        #[command(flatten)]
        fam: FamilyArgs,
        /// Target enclosure halfwidth.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Boundary rotation numbers and the separation verdict.
    TwistInterval {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Per-point rotation samples over a grid: CSV samples plus JSON summary.
    RotationSet {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        /// Iterations per grid point.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        bins: Option<usize>,
        /// Checkpoints kept for the limsup/liminf extremes.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Orbit dump for plotting: orbit_id, step, x, y.
    PhasePortrait {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        orbits: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Mode-locking interval of a one-parameter circle family.
    Tongue {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        t_lo: Option<f64>,
        #[arg(long)]
        t_hi: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Trace invariant-curve candidates, verify the Lipschitz graph
    /// property, and compare rotation numbers.
    Curves {
        #[command(flatten)]
        fam: FamilyArgs,
        /// Comma-separated curve seed heights.
        #[arg(long, value_delimiter = ',')]
        y_seeds: Option<Vec<f64>>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Working Lipschitz bound; defaults to 4x the observed twist slope.
        #[arg(long)]
        lipschitz: Option<f64>,
    },
    /// Flag grid points whose orbits re-enter their epsilon-ball.
    Recurrence {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        eps_ball: Option<f64>,
    },
    /// Run the built-in claims harness; exit 1 if any claim misses its
    /// expected verdict.
    Verify {
        /// Add a deliberately mislabeled family so the separation claim
        /// fails (for testing the failure path).
        #[arg(long)]
        negative_control: bool,
    },
}

impl FamilyArgs {
    fn into_overlay(self) -> Settings {
        let FamilyArgs { family, phi, psi, omega, eps, p, q, eps0, dip, a, b, alpha, boundary } =
            self;
        Settings {
            kind: family,
            phi,
            psi,
            omega,
            eps,
            p,
            q,
            eps0,
            dip,
            a,
            b,
            alpha,
            boundary,
            ..Settings::default()
        }
    }
}

/// Precedence: --threads flag, then TWISTLAB_THREADS, then the config file.
fn configure_threads(flag: Option<usize>, file: Option<usize>) {
    let n = flag
        .or_else(|| {
            std::env::var("TWISTLAB_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .or(file);
    if let Some(n) = n {
        // A second initialization (e.g. in tests) is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut settings = match &cli.config {
        Some(path) => Settings::from_config_file(path)?,
        None => Settings::default(),
    };
    if cli.seed.is_some() {
        settings.seed = cli.seed;
    }
    if cli.out.is_some() {
        settings.out = cli.out.clone();
    }
    configure_threads(cli.threads, settings.threads);

    match cli.command {
        Cmd::Rotnum { fam, tol } => {
            let settings = settings.merge(Settings { tol, ..fam.into_overlay() });
            commands::cmd_rotnum(&settings)?;
            Ok(0)
        }
        Cmd::TwistInterval { fam, tol } => {
            let settings = settings.merge(Settings { tol, ..fam.into_overlay() });
            commands::cmd_twist_interval(&settings)?;
            Ok(0)
        }
        Cmd::RotationSet { fam, tol, nx, ny, n, bins, window } => {
            let settings =
                settings.merge(Settings { tol, nx, ny, n, bins, window, ..fam.into_overlay() });
            commands::cmd_rotation_set(&settings)?;
            Ok(0)
        }
        Cmd::PhasePortrait { fam, orbits, steps } => {
            let settings = settings.merge(Settings { orbits, steps, ..fam.into_overlay() });
            commands::cmd_phase_portrait(&settings)?;
            Ok(0)
        }
        Cmd::Tongue { fam, t_lo, t_hi, tol } => {
            let settings = settings.merge(Settings { t_lo, t_hi, tol, ..fam.into_overlay() });
            commands::cmd_tongue(&settings)?;
            Ok(0)
        }
        Cmd::Curves { fam, y_seeds, steps, tol, lipschitz } => {
            let settings = settings
                .merge(Settings { y_seeds, steps, tol, lipschitz, ..fam.into_overlay() });
            commands::cmd_curves(&settings)?;
            Ok(0)
        }
        Cmd::Recurrence { fam, nx, ny, n_max, eps_ball } => {
            let settings =
                settings.merge(Settings { nx, ny, n_max, eps_ball, ..fam.into_overlay() });
            commands::cmd_recurrence(&settings)?;
            Ok(0)
        }
        Cmd::Verify { negative_control } => {
            let settings = settings.merge(Settings {
                negative_control: if negative_control { Some(true) } else { None },
                ..Settings::default()
            });
            let all_expected = verify::cmd_verify(&settings)?;
            Ok(if all_expected { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
