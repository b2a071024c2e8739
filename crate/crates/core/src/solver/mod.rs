//! IMEX finite-volume solver for the Neumann reaction-diffusion system
//! `du_i/dt - d_i Lap u_i = f_i(u)`.
//!
//! Each step applies an explicit Euler reaction update followed by an
//! implicit diffusion solve per species. Both sub-steps preserve the cell
//! sums of `Q u` in exact arithmetic. Norms and conservation moments are
//! accumulated sequentially, so results do not depend on the worker count.

mod grid;
mod output;
mod tridiag;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use grid::{build_grid, Field, Grid, MIN_CELLS};
pub use output::{csv_header, render_csv, render_gnuplot, write_atomic, write_csv, write_gnuplot};
pub use tridiag::solve_neumann;

use crate::equilibria::{self, DEFAULT_TOL_CB};
use crate::error::{Error, Result};
use crate::network::{self, ReactionNetwork};
use crate::spectral::Domain;
use crate::stoich::StoichData;

/// What to do with negative concentrations after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicy {
    /// Set to zero and count.
    #[default]
    Clamp,
    /// Abort with [`Error::NegativeState`].
    Abort,
}

/// Reaction step followed by the implicit diffusion solve, evaluated on
/// the current rayon pool. Returns the new field and the number of clamped
/// entries.
pub fn imex_step(
    net: &ReactionNetwork,
    grid: &Grid,
    diffusion: &[f64],
    field: &Field,
    dt: f64,
    clamp: ClampPolicy,
) -> Result<(Field, usize)> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let mut stepper = Stepper::new(net, grid, diffusion);
    let mut next = field.clone();
    let clamps = stepper.step(&mut next, dt, clamp)?;
    Ok((next, clamps))
}

struct Stepper<'a> {
    net: &'a ReactionNetwork,
    grid: &'a Grid,
    diffusion: &'a [f64],
    cell_major: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(net: &'a ReactionNetwork, grid: &'a Grid, diffusion: &'a [f64]) -> Self {
        Self {
            net,
            grid,
            diffusion,
            cell_major: vec![0.0; net.num_species() * grid.total_cells()],
        }
    }

    fn step(&mut self, field: &mut Field, dt: f64, clamp: ClampPolicy) -> Result<usize> {
        let n = field.n_species;
        let nc = field.n_cells;
        let net = self.net;
        {
            let values = &field.values;
            self.cell_major.par_chunks_mut(n).enumerate().for_each_init(
                || (vec![0.0; n], vec![0.0; n]),
                |(u, f), (c, out)| {
                    for i in 0..n {
                        u[i] = values[i * nc + c];
                    }
                    network::rhs_into(net, u, f);
                    for i in 0..n {
                        out[i] = u[i] + dt * f[i];
                    }
                },
            );
        }
        let cell_major = &self.cell_major;
        let grid = self.grid;
        let diffusion = self.diffusion;
        field
            .values
            .par_chunks_mut(nc)
            .enumerate()
            .for_each(|(i, species)| {
                for (c, v) in species.iter_mut().enumerate() {
                    *v = cell_major[c * n + i];
                }
                diffuse(grid, diffusion[i] * dt, species);
            });
        field.t += dt;

        let mut clamps = 0;
        for (idx, v) in field.values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteState {
                    t: field.t,
                    species: idx / nc,
                    cell: idx % nc,
                });
            }
            if *v < 0.0 {
                match clamp {
                    ClampPolicy::Clamp => {
                        *v = 0.0;
                        clamps += 1;
                    }
                    ClampPolicy::Abort => {
                        return Err(Error::NegativeState {
                            t: field.t,
                            species: idx / nc,
                            cell: idx % nc,
                        })
                    }
                }
            }
        }
        Ok(clamps)
    }
}

/// `(I - coeff * Lap_h)^{-1}` on one species; alternating sweeps in 2D.
fn diffuse(grid: &Grid, coeff: f64, u: &mut [f64]) {
    let nx = grid.cells[0];
    let theta_x = coeff / (grid.dx[0] * grid.dx[0]);
    if grid.dim() == 1 {
        let mut scratch = vec![0.0; nx];
        solve_neumann(theta_x, u, &mut scratch);
        return;
    }
    let ny = grid.cells[1];
    let theta_y = coeff / (grid.dx[1] * grid.dx[1]);
    let mut scratch = vec![0.0; nx.max(ny)];
    for row in u.chunks_mut(nx) {
        solve_neumann(theta_x, row, &mut scratch[..nx]);
    }
    let mut line = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            line[y] = u[y * nx + x];
        }
        solve_neumann(theta_y, &mut line, &mut scratch[..ny]);
        for y in 0..ny {
            u[y * nx + x] = line[y];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

/// One perturbation mode `amplitude * weights_i * cos(index pi x / L_x) * cos(index_y pi y / L_y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub index: usize,
    #[serde(default)]
    pub index_y: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// `u_0 = u_inf + epsilon * phi / sum_i |phi_i|_{L^2}` with `phi` the sum of
/// the modes, so that `sum_i |u_{i,0} - u_{i,inf}|_{L^2} = epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub epsilon: f64,
    #[serde(default)]
    pub modes: Vec<Mode>,
}

/// Simulation input, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Path to the `.crn` file, relative to the config file.
    pub network: PathBuf,
    pub diffusion: Vec<f64>,
    pub grid: GridSpec,
    pub initial: InitialCondition,
    /// Conservation vector `Q u_inf`; the reference equilibrium is used
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<Vec<f64>>,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "one_usize")]
    pub stride: usize,
    #[serde(default)]
    pub clamp: ClampPolicy,
    /// Fit window `[a, b]` for verification; defaults to `[0.2, 0.9] * t_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
}

fn one_usize() -> usize {
    1
}

impl SimConfig {
    /// Reads a JSON config and resolves the network path against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut cfg: SimConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.network.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.network = dir.join(&cfg.network);
            }
        }
        Ok(cfg)
    }

    pub fn load_network(&self) -> Result<ReactionNetwork> {
        Ok(crate::parse_network(&read_text(&self.network)?)?)
    }

    pub fn domain(&self) -> Domain {
        Domain {
            lengths: self.grid.lengths.clone(),
        }
    }

    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
            ratio.round() as usize
        } else {
            ratio.floor() as usize
        }
    }

    fn validate(&self, n_species: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.diffusion.len() != n_species {
            return bad(format!("{} diffusion coefficients for {n_species} species", self.diffusion.len()));
        }
        if self.diffusion.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return bad("diffusion coefficients must be positive".into());
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return bad(format!("need dt > 0 and t_end >= 0, got dt={} t_end={}", self.dt, self.t_end));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if !(self.initial.epsilon >= 0.0) {
            return bad("epsilon must be nonnegative".into());
        }
        for (k, m) in self.initial.modes.iter().enumerate() {
            if m.weights.len() != n_species {
                return bad(format!("mode {k} has {} weights for {n_species} species", m.weights.len()));
            }
            if m.index_y != 0 && self.grid.lengths.len() < 2 {
                return bad(format!("mode {k} has a y index on a 1D grid"));
            }
        }
        Ok(())
    }
}

/// Reads a file, naming it in the error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// Options that do not change the computed numbers.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub threads: usize,
    pub tol_cb: f64,
    /// Also track `sup_t sum_i |u_i - u_inf,i|_{L^p}` for this `p`.
    pub lp_exponent: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            threads: 1,
            tol_cb: DEFAULT_TOL_CB,
            lp_exponent: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    /// `sum_i |u_i - u_inf,i|_2^2 / u_inf,i`
    pub l2w_sq: f64,
    /// `max_{i,x} |u_i(x) - u_inf,i|`
    pub linf: f64,
    /// `Q` times the spatial means.
    pub mass: Vec<f64>,
    pub min_u: f64,
    /// Cumulative clamp count.
    pub clamps: usize,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub rows: Vec<Row>,
    pub final_field: Field,
    pub u_inf: Vec<f64>,
    pub steps: usize,
    pub clamps: usize,
    /// `max_t |Q u_bar(t) - Q u_bar(0)|_inf`
    pub conservation_drift: f64,
    pub lp_sup: Option<f64>,
    pub warnings: Vec<String>,
}

impl SimResult {
    /// `(t, l2w_sq)` pairs.
    pub fn l2_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.l2w_sq)).collect()
    }
}

fn initial_field(cfg: &SimConfig, grid: &Grid, stoich: &StoichData, u_inf: &[f64]) -> Result<Field> {
    let n = u_inf.len();
    let nc = grid.total_cells();
    let mut phi = vec![0.0; n * nc];
    for (k, mode) in cfg.initial.modes.iter().enumerate() {
        if mode.index == 0 && mode.index_y == 0 {
            let qa = stoich.q() * nalgebra::DVector::from_column_slice(&mode.weights);
            let scale = mode.weights.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
            if qa.amax() > 1e-12 * scale {
                return Err(Error::Config(format!(
                    "uniform mode {k} changes the conserved quantities (|Q a| = {:e})",
                    qa.amax()
                )));
            }
        }
        for c in 0..nc {
            let (ix, iy) = grid.unravel(c);
            let mut shape = (mode.index as f64 * std::f64::consts::PI * grid.center(0, ix) / grid.lengths[0]).cos();
            if grid.dim() == 2 {
                shape *= (mode.index_y as f64 * std::f64::consts::PI * grid.center(1, iy) / grid.lengths[1]).cos();
            }
            for i in 0..n {
                phi[i * nc + c] += mode.amplitude * mode.weights[i] * shape;
            }
        }
    }
    let vol = grid.cell_volume();
    let norm: f64 = (0..n)
        .map(|i| (phi[i * nc..(i + 1) * nc].iter().map(|v| v * v).sum::<f64>() * vol).sqrt())
        .sum();
    let mut field = Field::uniform(u_inf, nc);
    let eps = cfg.initial.epsilon;
    if eps > 0.0 {
        if norm == 0.0 {
            return Err(Error::Config("epsilon > 0 but the perturbation modes vanish".into()));
        }
        for (v, p) in field.values.iter_mut().zip(&phi) {
            *v += eps * p / norm;
        }
    }
    if let Some(idx) = field.values.iter().position(|&v| v < 0.0) {
        return Err(Error::Config(format!(
            "initial data is negative for species {} (reduce epsilon)",
            idx / nc
        )));
    }
    Ok(field)
}

fn measure(field: &Field, grid: &Grid, u_inf: &[f64], q: &nalgebra::DMatrix<f64>, clamps: usize) -> Row {
    let nc = field.n_cells;
    let vol = grid.cell_volume();
    let mut l2w_sq = 0.0;
    let mut linf = 0.0f64;
    let mut min_u = f64::INFINITY;
    for (i, &ui) in u_inf.iter().enumerate() {
        let mut s = 0.0;
        for &v in field.species(i) {
            let d = v - ui;
            s += d * d;
            linf = linf.max(d.abs());
            min_u = min_u.min(v);
        }
        l2w_sq += s * vol / ui;
    }
    let means: Vec<f64> = (0..field.n_species)
        .map(|i| field.species(i).iter().sum::<f64>() / nc as f64)
        .collect();
    let mass = (0..q.nrows())
        .map(|j| (0..q.ncols()).map(|i| q[(j, i)] * means[i]).sum())
        .collect();
    Row {
        t: field.t,
        l2w_sq,
        linf,
        mass,
        min_u,
        clamps,
    }
}

fn lp_distance(field: &Field, grid: &Grid, u_inf: &[f64], p: f64) -> f64 {
    let vol = grid.cell_volume();
    u_inf
        .iter()
        .enumerate()
        .map(|(i, &ui)| {
            let s: f64 = field.species(i).iter().map(|v| (v - ui).abs().powf(p)).sum();
            (s * vol).powf(1.0 / p)
        })
        .sum()
}

/// Equilibrium selected by the config: the reference equilibrium, projected
/// onto `mass` when one is given.
pub fn target_equilibrium(net: &ReactionNetwork, stoich: &StoichData, cfg: &SimConfig, tol_cb: f64) -> Result<Vec<f64>> {
    let u_ref = equilibria::reference_equilibrium(net, stoich, tol_cb)?;
    match &cfg.mass {
        Some(mass) => Ok(equilibria::birch_project(stoich, &u_ref, mass)?.u_inf),
        None => Ok(u_ref),
    }
}

/// Loads the network named in the config and runs the simulation.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    let net = cfg.load_network()?;
    simulate_network(&net, cfg, &SimOptions::default())
}

pub fn simulate_network(net: &ReactionNetwork, cfg: &SimConfig, opts: &SimOptions) -> Result<SimResult> {
    cfg.validate(net.num_species())?;
    let grid = build_grid(&cfg.domain(), &cfg.grid.cells)?;
    let stoich = StoichData::analyze(net);
    let u_inf = target_equilibrium(net, &stoich, cfg, opts.tol_cb)?;
    simulate_at(net, &stoich, &grid, &u_inf, cfg, opts)
}

/// Runs the simulation around a given equilibrium.
pub fn simulate_at(
    net: &ReactionNetwork,
    stoich: &StoichData,
    grid: &Grid,
    u_inf: &[f64],
    cfg: &SimConfig,
    opts: &SimOptions,
) -> Result<SimResult> {
    cfg.validate(net.num_species())?;
    let mut warnings = Vec::new();
    let jac = network::jacobian_unchecked(net, u_inf);
    let norm_inf = (0..jac.nrows())
        .map(|i| jac.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm_inf > 0.0 && cfg.dt > 0.2 / norm_inf {
        warnings.push(format!(
            "dt = {} exceeds the reaction stability heuristic 0.2/|L|_inf = {:e}",
            cfg.dt,
            0.2 / norm_inf
        ));
    }
    let mut field = initial_field(cfg, grid, stoich, u_inf)?;
    let q = stoich.q();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let steps = cfg.steps();
    let mut rows = vec![measure(&field, grid, u_inf, q, 0)];
    let mut lp_sup = opts.lp_exponent.map(|p| lp_distance(&field, grid, u_inf, p));
    let mut clamps = 0;
    pool.install(|| -> Result<()> {
        let mut stepper = Stepper::new(net, grid, &cfg.diffusion);
        for s in 1..=steps {
            clamps += stepper.step(&mut field, cfg.dt, cfg.clamp)?;
            field.t = s as f64 * cfg.dt;
            if s % cfg.stride == 0 {
                rows.push(measure(&field, grid, u_inf, q, clamps));
                if let (Some(p), Some(sup)) = (opts.lp_exponent, lp_sup.as_mut()) {
                    *sup = sup.max(lp_distance(&field, grid, u_inf, p));
                }
            }
        }
        Ok(())
    })?;
    let m0 = rows[0].mass.clone();
    let conservation_drift = rows
        .iter()
        .flat_map(|r| r.mass.iter().zip(&m0).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    if clamps > 0 {
        warnings.push(format!("{clamps} negative entries clamped to zero"));
    }
    Ok(SimResult {
        rows,
        final_field: field,
        u_inf: u_inf.to_vec(),
        steps,
        clamps,
        conservation_drift,
        lp_sup,
        warnings,
    })
}
