use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Domain;

pub const MIN_CELLS: usize = 8;

/// Cell-centred grid on an interval or rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
    pub dx: Vec<f64>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn total_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx.iter().product()
    }

    pub fn domain(&self) -> Domain {
        Domain {
            lengths: self.lengths.clone(),
        }
    }

    /// Centre of cell `k` along `axis`.
    pub fn center(&self, axis: usize, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dx[axis]
    }

    /// Axis indices of a linear cell index (x fastest).
    pub fn unravel(&self, cell: usize) -> (usize, usize) {
        let nx = self.cells[0];
        (cell % nx, cell / nx)
    }
}

pub fn build_grid(domain: &Domain, cells: &[usize]) -> Result<Grid> {
    domain.validate()?;
    if cells.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: cells.len(),
        });
    }
    if let Some(&n) = cells.iter().find(|&&n| n < MIN_CELLS) {
        return Err(Error::GridTooCoarse { cells: n });
    }
    Ok(Grid {
        lengths: domain.lengths.clone(),
        cells: cells.to_vec(),
        dx: domain
            .lengths
            .iter()
            .zip(cells)
            .map(|(l, &n)| l / n as f64)
            .collect(),
    })
}

/// Concentrations of all species on the grid, species-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub n_species: usize,
    pub n_cells: usize,
    pub t: f64,
}

impl Field {
    pub fn uniform(u: &[f64], n_cells: usize) -> Self {
        Self {
            values: u.iter().flat_map(|&v| std::iter::repeat_n(v, n_cells)).collect(),
            n_species: u.len(),
            n_cells,
            t: 0.0,
        }
    }

    pub fn species(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cells..(i + 1) * self.n_cells]
    }

    pub fn species_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.n_cells..(i + 1) * self.n_cells]
    }

    /// Spatial mean of every species.
    pub fn means(&self) -> Vec<f64> {
        (0..self.n_species)
            .map(|i| self.species(i).iter().sum::<f64>() / self.n_cells as f64)
            .collect()
    }
}
