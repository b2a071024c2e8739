//! Regime formulas, decay-rate fitting and end-to-end verification runs.

use std::path::Path;

use num_rational::Rational64;
use serde::Serialize;

use crate::equilibria::{self, Classification, EquilibriumCertificate, DEFAULT_TOL_CB};
use crate::error::{Error, Result};
use crate::network::{self, ReactionNetwork};
use crate::solver::{self, SimConfig, SimOptions, SimResult};
use crate::spectral::{self, Domain, SpectralReport};
use crate::stoich::{StoichData, StoichReport};

pub const MIN_FIT_ROWS: usize = 10;
pub const DEFAULT_TOL_FIT: f64 = 0.05;
pub const DRIFT_TOL: f64 = 1e-10;
pub const DEFAULT_WINDOW: [f64; 2] = [0.2, 0.9];

/// Least-squares slope of `-ln y` against `t` over rows with `t` in `window`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: [f64; 2]) -> Result<f64> {
    let rows: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window[0] && t <= window[1])
        .collect();
    if rows.len() < MIN_FIT_ROWS {
        return Err(Error::InsufficientData {
            rows: rows.len(),
            needed: MIN_FIT_ROWS,
        });
    }
    if let Some(&(t, value)) = rows.iter().find(|&&(_, y)| !(y > 0.0)) {
        return Err(Error::NonpositiveSeries { t, value });
    }
    Ok(log_slope(&rows))
}

fn log_slope(rows: &[(f64, f64)]) -> f64 {
    let n = rows.len() as f64;
    let tm = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let lm = rows.iter().map(|r| r.1.ln()).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for &(t, y) in rows {
        sxy += (t - tm) * (y.ln() - lm);
        sxx += (t - tm) * (t - tm);
    }
    -sxy / sxx
}

/// Interior local maxima of `y` within the window.
pub fn envelope_peaks(series: &[(f64, f64)], window: [f64; 2]) -> Vec<(f64, f64)> {
    let rows: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window[0] && t <= window[1])
        .collect();
    rows.windows(3)
        .filter(|w| w[1].1 >= w[0].1 && w[1].1 > w[2].1)
        .map(|w| w[1])
        .collect()
}

/// Decay rate of the upper envelope. Oscillating series (three or more
/// interior peaks in the window) are fitted on their peaks; anything else
/// goes to [`fit_decay_rate`].
pub fn fit_envelope_rate(series: &[(f64, f64)], window: [f64; 2]) -> Result<(f64, bool)> {
    let peaks = envelope_peaks(series, window);
    if peaks.len() >= 3 && peaks.iter().all(|p| p.1 > 0.0) {
        return Ok((log_slope(&peaks), true));
    }
    Ok((fit_decay_rate(series, window)?, false))
}

/// `(d + 4) / d` and whether `d` lies in the range `1..=4` the formula was
/// established for.
pub fn admissible_mu(d: u32) -> (Rational64, bool) {
    assert!(d >= 1, "dimension must be positive");
    (Rational64::new(d as i64 + 4, d as i64), d <= 4)
}

/// `d (mu - 1) / 2` and whether `d >= 3`.
pub fn critical_p0(d: u32, mu: f64) -> (f64, bool) {
    (d as f64 * (mu - 1.0) / 2.0, d >= 3)
}

/// `delta` with `1 + delta = min(2, smallest stoichiometric coefficient above 1)`.
pub fn perturbation_exponent_delta(net: &ReactionNetwork) -> f64 {
    let smallest = net
        .complexes()
        .iter()
        .flat_map(|c| c.coeffs().iter().copied())
        .filter(|&y| y > 1.0)
        .fold(2.0, f64::min);
    smallest - 1.0
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub beta: f64,
    pub poincare: f64,
    pub min_diffusion: f64,
    pub lambda: f64,
    pub beta_volume_scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuRegime {
    pub dimension: u32,
    pub mu: f64,
    pub admissible_mu: String,
    pub dimension_in_range: bool,
    pub satisfied: bool,
    pub delta: f64,
}

/// Observed `sup_t sum_i |u_i - u_inf,i|_{L^p0}`. Reported as evidence only.
#[derive(Debug, Clone, Serialize)]
pub struct LpEvidence {
    pub p0: f64,
    pub p0_in_range: bool,
    pub sup_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    pub rate: bool,
    pub drift: bool,
    pub clamps: bool,
    pub linf_decay: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub network: String,
    pub species: Vec<String>,
    pub classification: Classification,
    pub u_inf: Vec<f64>,
    pub certificate: CertificateSummary,
    pub fit_window: [f64; 2],
    pub envelope_fit: bool,
    pub fitted_rate: f64,
    pub target: f64,
    pub ratio: f64,
    pub tol_fit: f64,
    pub conservation_drift: f64,
    pub clamps: usize,
    pub linf_initial: f64,
    pub linf_final: f64,
    pub mu_regime: MuRegime,
    pub lp_evidence: LpEvidence,
    pub checks: Checks,
    pub pass: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub threads: usize,
    pub tol_cb: f64,
    pub tol_fit: f64,
    pub fit_window: Option<[f64; 2]>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            threads: 1,
            tol_cb: DEFAULT_TOL_CB,
            tol_fit: DEFAULT_TOL_FIT,
            fit_window: None,
        }
    }
}

pub struct Verification {
    pub report: VerificationReport,
    pub simulation: SimResult,
    pub m: usize,
}

/// Parse, analyze, certify, simulate and fit. Errors carry the stage name.
pub fn run_verification(config: &SimConfig, opts: &VerifyOptions) -> Result<Verification> {
    let net = config.load_network().map_err(Error::at("parse"))?;
    let id = config
        .network
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    verify_network(&net, &id, config, opts)
}

pub fn verify_network(
    net: &ReactionNetwork,
    id: &str,
    config: &SimConfig,
    opts: &VerifyOptions,
) -> Result<Verification> {
    let stoich = StoichData::analyze(net);
    let cert = equilibria::certify(net, &stoich, config.mass.as_deref(), opts.tol_cb)
        .map_err(Error::at("equilibrium"))?;
    let u_inf = cert.equilibrium().map_err(|e| Error::at("equilibrium")(e))?.to_vec();
    let domain = config.domain();
    let gap = spectral::gap_certificate(net, &u_inf, &config.diffusion, &stoich, &domain)
        .map_err(Error::at("certificate"))?;

    let dim = domain.dim() as u32;
    let mu = network::nonlinearity_order(net);
    let (mu_adm, within) = admissible_mu(dim);
    let mu_adm_f = *mu_adm.numer() as f64 / *mu_adm.denom() as f64;
    let (p0, p0_in_range) = critical_p0(dim, mu);
    let lp = (p0 >= 1.0).then_some(p0);

    let grid = solver::build_grid(&domain, &config.grid.cells).map_err(Error::at("simulate"))?;
    let sim_opts = SimOptions {
        threads: opts.threads,
        tol_cb: opts.tol_cb,
        lp_exponent: lp,
    };
    let sim = solver::simulate_at(net, &stoich, &grid, &u_inf, config, &sim_opts).map_err(Error::at("simulate"))?;

    let window = opts
        .fit_window
        .or(config.fit_window)
        .unwrap_or([DEFAULT_WINDOW[0] * config.t_end, DEFAULT_WINDOW[1] * config.t_end]);
    let (fitted, envelope) = fit_envelope_rate(&sim.l2_series(), window).map_err(Error::at("fit"))?;
    let target = gap.decay_rate();
    let ratio = fitted / target;
    let linf_initial = sim.rows.first().map_or(0.0, |r| r.linf);
    let linf_final = sim.rows.last().map_or(0.0, |r| r.linf);
    let checks = Checks {
        rate: ratio >= 1.0 - opts.tol_fit,
        drift: sim.conservation_drift <= DRIFT_TOL,
        clamps: sim.clamps == 0,
        linf_decay: linf_final <= linf_initial,
    };
    let pass = checks.rate && checks.drift && checks.clamps;
    let mut warnings = sim.warnings.clone();
    if !within {
        warnings.push(format!("dimension {dim} lies outside the range 1..=4"));
    }
    let report = VerificationReport {
        network: id.to_string(),
        species: net.species_names().into_iter().map(String::from).collect(),
        classification: cert.classification,
        u_inf,
        certificate: CertificateSummary {
            beta: gap.beta,
            poincare: gap.poincare,
            min_diffusion: gap.min_diffusion,
            lambda: gap.lambda,
            beta_volume_scaled: gap.beta_volume_scaled,
        },
        fit_window: window,
        envelope_fit: envelope,
        fitted_rate: fitted,
        target,
        ratio,
        tol_fit: opts.tol_fit,
        conservation_drift: sim.conservation_drift,
        clamps: sim.clamps,
        linf_initial,
        linf_final,
        mu_regime: MuRegime {
            dimension: dim,
            mu,
            admissible_mu: mu_adm.to_string(),
            dimension_in_range: within,
            satisfied: mu <= mu_adm_f,
            delta: perturbation_exponent_delta(net),
        },
        lp_evidence: LpEvidence {
            p0,
            p0_in_range,
            sup_distance: sim.lp_sup,
        },
        checks,
        pass,
        warnings,
    };
    Ok(Verification {
        report,
        m: stoich.m(),
        simulation: sim,
    })
}

/// Writes `report.json`, `series.csv` and `series.dat` into `dir`.
pub fn write_verification(dir: &Path, v: &Verification) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    solver::write_atomic(&dir.join("report.json"), &to_json(&v.report)?)?;
    write_series(dir, &v.simulation, v.m)
}

/// Writes `series.csv` and `series.dat` into `dir`.
pub fn write_series(dir: &Path, sim: &SimResult, m: usize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    solver::write_csv(&dir.join("series.csv"), &sim.rows, m)?;
    solver::write_gnuplot(&dir.join("series.dat"), &sim.rows)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub stoichiometry: StoichReport,
    pub classification: Classification,
    pub nonlinearity_order: f64,
    pub growth_constant: f64,
    pub delta: f64,
}

pub fn analysis_report(net: &ReactionNetwork, tol_cb: f64) -> Result<AnalysisReport> {
    let stoich = StoichData::analyze(net);
    let cert = equilibria::certify(net, &stoich, None, tol_cb)?;
    Ok(AnalysisReport {
        stoichiometry: stoich.report(net),
        classification: cert.classification,
        nonlinearity_order: network::nonlinearity_order(net),
        growth_constant: network::growth_constant(net),
        delta: perturbation_exponent_delta(net),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub species: Vec<String>,
    pub equilibrium: EquilibriumCertificate,
}

/// Equilibrium for an explicit conservation vector, or for the one implied
/// by an initial state.
pub fn equilibrium_report(
    net: &ReactionNetwork,
    mass: Option<&[f64]>,
    u0: Option<&[f64]>,
    tol_cb: f64,
) -> Result<EquilibriumReport> {
    let stoich = StoichData::analyze(net);
    let mass = match (mass, u0) {
        (Some(m), _) => {
            if m.len() != stoich.m() {
                return Err(Error::DimensionMismatch {
                    expected: stoich.m(),
                    got: m.len(),
                });
            }
            Some(m.to_vec())
        }
        (None, Some(u)) => Some(crate::stoich::mass_vector(stoich.q(), u)?.values),
        (None, None) => None,
    };
    Ok(EquilibriumReport {
        species: net.species_names().into_iter().map(String::from).collect(),
        equilibrium: equilibria::certify(net, &stoich, mass.as_deref(), tol_cb)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub species: Vec<String>,
    pub u_inf: Vec<f64>,
    pub spectral: SpectralReport,
}

pub fn spectrum_report(
    net: &ReactionNetwork,
    diffusion: &[f64],
    domain: &Domain,
    tol_cb: f64,
    seed: u64,
) -> Result<SpectrumReport> {
    let stoich = StoichData::analyze(net);
    let u_inf = equilibria::reference_equilibrium(net, &stoich, tol_cb).map_err(Error::at("equilibrium"))?;
    let spectral = spectral::spectral_report(net, &u_inf, diffusion, &stoich, domain, seed)
        .map_err(Error::at("certificate"))?;
    Ok(SpectrumReport {
        species: net.species_names().into_iter().map(String::from).collect(),
        u_inf,
        spectral,
    })
}

/// Process exit status for an error: 2 for bad input, 1 for a failed check.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Parse(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Config(_)
        | Error::InvalidNetwork(_)
        | Error::DimensionMismatch { .. }
        | Error::NegativeConcentration { .. }
        | Error::NonpositiveConcentration { .. }
        | Error::UnsupportedDomain(_)
        | Error::GridTooCoarse { .. }
        | Error::NonpositiveMass { .. } => 2,
        _ => 1,
    }
}
