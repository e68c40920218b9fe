use std::path::PathBuf;
use std::process::exit;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use phasesep::FlowVariant;
use phasesep_cli::commands;
use phasesep_cli::config::Scenario;

/// Gaussian phase-space dynamics for damped particles: disentanglement
/// times for a single free particle and finite-time separability
/// certificates for a harmonically coupled pair.
#[derive(Parser)]
#[command(name = "phasesep", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone, Debug, Default)]
struct CommonOpts {
    /// Scenario file with `key = value` lines; flags override its values.
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// Write CSV output to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flow variant: `printed` (published matrices) or `ode`.
    #[arg(long)]
    variant: Option<String>,
    /// Seed for any randomized scan.
    #[arg(long)]
    seed: Option<u64>,
    /// Mass.
    #[arg(long)]
    m: Option<f64>,
    /// Damping rate γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Temperature energy kT.
    #[arg(long = "kT")]
    k_t: Option<f64>,
    /// Well frequency Ω.
    #[arg(long = "Omega")]
    omega: Option<f64>,
    /// Inter-particle coupling frequency ω.
    #[arg(long = "omega-c")]
    omega_c: Option<f64>,
    /// Momentum diffusion D_pp.
    #[arg(long)]
    dpp: Option<f64>,
    /// Position diffusion D_qq.
    #[arg(long)]
    dqq: Option<f64>,
    /// Cross diffusion D_qp.
    #[arg(long)]
    dqp: Option<f64>,
    /// Use the minimal-Lindblad diffusion built from (m, γ, kT).
    #[arg(long)]
    minimal: bool,
    /// Scan horizon.
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Number of scan samples.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Clone, Debug)]
struct TauScanOpts {
    #[command(flatten)]
    common: CommonOpts,
    /// Comma-separated γt0 values to scan.
    #[arg(long = "gamma-t0", value_delimiter = ',')]
    gamma_t0: Option<Vec<f64>>,
}

#[derive(Args, Clone, Debug)]
struct EprOpts {
    #[command(flatten)]
    common: CommonOpts,
    /// Two-mode squeezing parameter of the initial state.
    #[arg(short, long)]
    r: Option<f64>,
}

#[derive(Args, Clone, Debug)]
struct OracleOpts {
    #[command(flatten)]
    common: CommonOpts,
    /// Inject an artificial offset into the closed forms (sensitivity hook).
    #[arg(long)]
    perturb: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a diffusion matrix against the Lindblad bound det D >= γ²/(4m²).
    LindbladCheck(CommonOpts),
    /// Trace the single-particle disentanglement criterion over time (CSV).
    SingleTrace(CommonOpts),
    /// Solve for the first time the disentanglement criterion holds.
    DisentangleTime(CommonOpts),
    /// The undamped momentum-diffusion timescale 1.97 sqrt(m/(2 D_pp)).
    Kiefer(CommonOpts),
    /// Compare numerical and series τ* over a γt0 list (CSV).
    TauStarScan(TauScanOpts),
    /// Certify finite-time separation of the coupled pair (CSV + onset).
    CoupledCertify(CommonOpts),
    /// Evolve a two-mode squeezed state and track its separation (CSV).
    EprDemo(EprOpts),
    /// Cross-check closed forms against quadrature and ODE oracles.
    OracleVerify(OracleOpts),
}

fn scenario_from(common: &CommonOpts) -> Result<Scenario, String> {
    let base = match &common.config {
        Some(path) => Scenario::from_file(path)?,
        None => Scenario::default(),
    };
    let variant = match &common.variant {
        Some(v) => Some(FlowVariant::from_str(v)?),
        None => None,
    };
    let flags = Scenario {
        m: common.m,
        gamma: common.gamma,
        k_t: common.k_t,
        omega_well: common.omega,
        omega_c: common.omega_c,
        dpp: common.dpp,
        dqq: common.dqq,
        dqp: common.dqp,
        t_max: common.t_max,
        samples: common.samples,
        variant,
        seed: common.seed,
        minimal: if common.minimal { Some(true) } else { None },
        r: None,
        gamma_t0: None,
    };
    Ok(base.merged_with(&flags))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 2 on usage errors, 0 on --help/--version
        Err(e) => e.exit(),
    };
    let code = match cli.cmd {
        Command::LindbladCheck(c) => with_scenario(&c, |s| commands::lindblad_check(&s)),
        Command::SingleTrace(c) => with_scenario(&c, |s| commands::single_trace(&s, &c.out)),
        Command::DisentangleTime(c) => with_scenario(&c, |s| commands::disentangle_time(&s)),
        Command::Kiefer(c) => with_scenario(&c, |s| commands::kiefer(&s)),
        Command::TauStarScan(opts) => with_scenario(&opts.common, |mut s| {
            if opts.gamma_t0.is_some() {
                s.gamma_t0 = opts.gamma_t0.clone();
            }
            commands::tau_star_scan(&s, &opts.common.out)
        }),
        Command::CoupledCertify(c) => with_scenario(&c, |s| commands::coupled_certify(&s, &c.out)),
        Command::EprDemo(opts) => with_scenario(&opts.common, |mut s| {
            if opts.r.is_some() {
                s.r = opts.r;
            }
            commands::epr_demo(&s, &opts.common.out)
        }),
        Command::OracleVerify(opts) => with_scenario(&opts.common, |s| {
            let printed = matches!(s.variant, Some(FlowVariant::PaperPrinted));
            commands::oracle_verify(&s, opts.perturb.unwrap_or(0.0), printed)
        }),
    };
    exit(code);
}

fn with_scenario<F: FnOnce(Scenario) -> i32>(common: &CommonOpts, f: F) -> i32 {
    match scenario_from(common) {
        Ok(s) => f(s),
        Err(e) => {
            eprintln!("error: {e}");
            commands::EXIT_USAGE
        }
    }
}
