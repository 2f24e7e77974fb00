//! Sparse matrix-free linear algebra.

mod cg;
mod scaling;
mod sparse;
mod spectral;

pub use cg::{cg_solve, cg_solve_with, check_symmetric, CgResult};
pub use scaling::{pock_chambolle_scaling, ruiz_scaling, DiagonalScaling};
pub use sparse::SparseMatrix;
pub use spectral::{
    estimate_spectra, power_iteration, singular_values, SpectralEstimates, SpectralMethod,
    SpectralOptions,
};

use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// y ← y + alpha·x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|v| alpha * v).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `‖(x,y)‖_N = √(‖x‖²/τ + ‖y‖²/σ)`
pub fn n_norm(x: &[f64], y: &[f64], tau: f64, sigma: f64) -> f64 {
    (dot(x, x) / tau + dot(y, y) / sigma).sqrt()
}

/// `‖(x,y)‖_M` for the PDHG matrix `[[I/τ, Aᵀ], [A, I/σ]]`, the metric in
/// which OnePDHG is a proximal-point step.
///
/// Fails when the quadratic form is negative beyond round-off, which
/// means the step sizes violate `τσ‖A‖² ≤ 1`.
pub fn m_norm(x: &[f64], y: &[f64], tau: f64, sigma: f64, a: &SparseMatrix) -> Result<f64> {
    if x.len() != a.ncols() || y.len() != a.nrows() {
        return Err(Error::input(format!(
            "m_norm: got ({}, {}) for a {}x{} matrix",
            x.len(),
            y.len(),
            a.nrows(),
            a.ncols()
        )));
    }
    let ax = a.spmv(x)?;
    m_norm_with_ax(x, y, &ax, tau, sigma)
}

/// Same as [`m_norm`] with `Ax` already available.
pub fn m_norm_with_ax(x: &[f64], y: &[f64], ax: &[f64], tau: f64, sigma: f64) -> Result<f64> {
    let diag = dot(x, x) / tau + dot(y, y) / sigma;
    let val = diag + 2.0 * dot(y, ax);
    if val >= 0.0 {
        Ok(val.sqrt())
    } else if val >= -1e-12 * diag {
        Ok(0.0)
    } else {
        Err(Error::numerical(format!(
            "M-norm squared is {val:e}; step sizes violate tau*sigma*lambda_max^2 <= 1"
        )))
    }
}
