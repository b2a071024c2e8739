use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crnrd::equilibria::{Classification, CERT_TOL, DEFAULT_TOL_CB};
use crnrd::harness::{self, VerifyOptions, DEFAULT_TOL_FIT};
use crnrd::solver::{self, SimConfig, SimOptions};
use crnrd::{parse_network, Domain, Error, ReactionNetwork, Result, StoichData};

#[derive(Parser)]
#[command(name = "crnrd", version, about = "Reaction network analysis and reaction-diffusion verification")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Complex balance tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_CB)]
    tol_cb: f64,
    /// Allowed relative shortfall of the fitted rate.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_FIT)]
    tol_fit: f64,
    /// Fit window `a,b` in time units.
    #[arg(long, global = true, value_parser = parse_window)]
    fit_window: Option<[f64; 2]>,
    #[arg(long, global = true, env = "CRNRD_THREADS", default_value_t = 1)]
    threads: usize,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Stoichiometry and classification.
    Analyze { network: PathBuf },
    /// Complex balanced equilibrium in a compatibility class.
    Equilibrium {
        network: PathBuf,
        /// Conservation vector, comma separated.
        #[arg(long, conflicts_with = "from_u0")]
        mass: Option<String>,
        /// File holding an initial state; its conservation vector is used.
        #[arg(long)]
        from_u0: Option<PathBuf>,
    },
    /// Linearization and spectral gap certificate.
    Spectrum {
        network: PathBuf,
        #[arg(long)]
        diffusion: String,
        /// `interval:L` or `rect:AxB`.
        #[arg(long)]
        domain: String,
    },
    /// Run a simulation and write the time series.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Simulate, fit the decay rate and compare with the certificate.
    Verify {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn parse_window(s: &str) -> std::result::Result<[f64; 2], String> {
    let v = parse_list(s).map_err(|e| e.to_string())?;
    match v[..] {
        [a, b] if a < b => Ok([a, b]),
        _ => Err(format!("expected a,b with a < b, got {s:?}")),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number: {t:?}")))
        })
        .collect()
}

fn load_network(path: &Path) -> Result<ReactionNetwork> {
    Ok(parse_network(&solver::read_text(path)?)?)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    print!("{}", harness::to_json(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let g = cli.global;
    match cli.command {
        Command::Analyze { network } => {
            let report = harness::analysis_report(&load_network(&network)?, g.tol_cb)?;
            print_json(&report)?;
            Ok(true)
        }
        Command::Equilibrium { network, mass, from_u0 } => {
            let net = load_network(&network)?;
            let mass = mass.as_deref().map(parse_list).transpose()?;
            let u0 = match from_u0 {
                Some(p) => Some(parse_list(&solver::read_text(&p)?)?),
                None => None,
            };
            let report = harness::equilibrium_report(&net, mass.as_deref(), u0.as_deref(), g.tol_cb)?;
            print_json(&report)?;
            let e = &report.equilibrium;
            Ok(e.classification != Classification::NotComplexBalanced
                && e.cb_residual <= CERT_TOL
                && e.mass_residual <= CERT_TOL)
        }
        Command::Spectrum { network, diffusion, domain } => {
            let net = load_network(&network)?;
            let d = parse_list(&diffusion)?;
            let domain: Domain = domain.parse()?;
            print_json(&harness::spectrum_report(&net, &d, &domain, g.tol_cb, g.seed)?)?;
            Ok(true)
        }
        Command::Simulate { config, out } => {
            let cfg = SimConfig::load(&config)?;
            let net = cfg.load_network()?;
            let opts = SimOptions {
                threads: g.threads,
                tol_cb: g.tol_cb,
                lp_exponent: None,
            };
            let sim = solver::simulate_network(&net, &cfg, &opts)?;
            let m = StoichData::analyze(&net).m();
            harness::write_series(&out, &sim, m)?;
            for w in &sim.warnings {
                eprintln!("WARN: {w}");
            }
            Ok(true)
        }
        Command::Verify { config, out } => {
            let cfg = SimConfig::load(&config)?;
            let opts = VerifyOptions {
                threads: g.threads,
                tol_cb: g.tol_cb,
                tol_fit: g.tol_fit,
                fit_window: g.fit_window,
            };
            let v = harness::run_verification(&cfg, &opts)?;
            harness::write_verification(&out, &v)?;
            let r = &v.report;
            eprintln!(
                "{}: fitted {:.6} target {:.6} ratio {:.4} drift {:e} clamps {} -> {}",
                r.network,
                r.fitted_rate,
                r.target,
                r.ratio,
                r.conservation_drift,
                r.clamps,
                if r.pass { "PASS" } else { "FAIL" }
            );
            Ok(r.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
