//! Finite-difference cross-check of the flat Clifford torus spectrum.
//!
//! For `n = 2` the metric is `r^2 dtheta^2 + (1 - r^2) dphi^2`, so the
//! five-point periodic Laplacian is a Kronecker sum of two scaled 1D
//! second-difference operators. The 1D operator is diagonalised densely and
//! its eigenvalues are labelled by sorted position.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::families::CliffordSpec;
use crate::spectral::{clifford_spectrum, sorted_eigenvalues, SpectralError};

pub const MIN_GRID: usize = 16;
pub const MAX_GRID: usize = 128;
/// Lines compared, constant mode excluded.
pub const LINES_COMPARED: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("grid {0} outside [{MIN_GRID}, {MAX_GRID}]")]
    BadGrid(usize),
    #[error("mesh cross-check needs n = 2 (got n = {0})")]
    BadDimension(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeshRow {
    pub label: (usize, usize),
    pub multiplicity: u64,
    pub analytic: f64,
    pub discrete: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshComparison {
    pub grid: usize,
    pub r: f64,
    /// Rayleigh quotient of the constant vector.
    pub constant_mode: f64,
    pub rows: Vec<MeshRow>,
    pub max_rel_error: f64,
    /// `max rel_error * grid^2`.
    pub fitted_c: f64,
}

/// Periodic second-difference matrix on the unit circle, sign chosen so the
/// spectrum is non-negative.
pub fn periodic_laplacian_1d(grid: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / grid as f64;
    let inv = 1.0 / (h * h);
    let mut m = DMatrix::zeros(grid, grid);
    for i in 0..grid {
        m[(i, i)] = 2.0 * inv;
        m[(i, (i + 1) % grid)] -= inv;
        m[(i, (i + grid - 1) % grid)] -= inv;
    }
    m
}

/// Dense five-point matrix of the flat torus; size `grid^2`.
pub fn torus_laplacian(grid: usize, r: f64) -> DMatrix<f64> {
    let one = periodic_laplacian_1d(grid);
    let id = DMatrix::<f64>::identity(grid, grid);
    one.kronecker(&id) / (r * r) + id.kronecker(&one) / (1.0 - r * r)
}

/// 1D eigenvalues indexed by Fourier degree: entry `j` holds the pair at
/// sorted positions `2j - 1, 2j`.
fn degree_eigenvalues(grid: usize) -> Vec<f64> {
    let ev = sorted_eigenvalues(periodic_laplacian_1d(grid));
    (0..=grid / 2)
        .map(|j| if j == 0 { ev[0] } else { ev[(2 * j - 1).min(grid - 1)] })
        .collect()
}

fn check_inputs(spec: &CliffordSpec, grid: usize) -> Result<(), MeshError> {
    if spec.n != 2 {
        return Err(MeshError::BadDimension(spec.n));
    }
    if !(MIN_GRID..=MAX_GRID).contains(&grid) {
        return Err(MeshError::BadGrid(grid));
    }
    spec.validate().map_err(SpectralError::from)?;
    Ok(())
}

pub fn mesh_laplacian_crosscheck(spec: &CliffordSpec, grid: usize) -> Result<MeshComparison, MeshError> {
    check_inputs(spec, grid)?;
    let (r2, s2) = (spec.r * spec.r, 1.0 - spec.r * spec.r);
    let one = periodic_laplacian_1d(grid);
    let ones = nalgebra::DVector::from_element(grid, 1.0);
    let constant_mode = (&one * &ones).dot(&ones) / grid as f64 * (1.0 / r2 + 1.0 / s2);
    let degrees = degree_eigenvalues(grid);
    let spectrum = clifford_spectrum(spec, 6)?;
    let rows: Vec<MeshRow> = spectrum
        .lines
        .iter()
        .filter(|l| l.label != (0, 0))
        .take(LINES_COMPARED)
        .map(|l| {
            let (p, q) = l.label;
            let discrete = degrees[p] / r2 + degrees[q] / s2;
            MeshRow {
                label: l.label,
                multiplicity: l.multiplicity,
                analytic: l.eigenvalue,
                discrete,
                rel_error: (discrete - l.eigenvalue).abs() / l.eigenvalue,
            }
        })
        .collect();
    let max_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    Ok(MeshComparison {
        grid,
        r: spec.r,
        constant_mode,
        max_rel_error,
        fitted_c: max_rel_error * (grid * grid) as f64,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub coarse: MeshComparison,
    pub fine: MeshComparison,
    /// Per-line `rel_error(grid) / rel_error(2 grid)`.
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl ConvergenceStudy {
    pub fn second_order(&self, lo: f64, hi: f64) -> bool {
        self.min_ratio >= lo && self.max_ratio <= hi
    }
}

pub fn convergence_study(spec: &CliffordSpec, grid: usize) -> Result<ConvergenceStudy, MeshError> {
    let coarse = mesh_laplacian_crosscheck(spec, grid)?;
    let fine = mesh_laplacian_crosscheck(spec, 2 * grid)?;
    let ratios: Vec<f64> = coarse
        .rows
        .iter()
        .zip(&fine.rows)
        .map(|(a, b)| a.rel_error / b.rel_error)
        .collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ConvergenceStudy {
        coarse,
        fine,
        ratios,
        min_ratio,
        max_ratio,
    })
}
