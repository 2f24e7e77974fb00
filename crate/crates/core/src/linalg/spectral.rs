use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, norm, SparseMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMethod {
    PowerIteration,
    DenseSvd,
}

/// Largest and smallest positive singular values of `A`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralEstimates {
    pub lambda_max: f64,
    /// Absent when the matrix is too large for a dense SVD.
    pub lambda_min: Option<f64>,
    pub kappa: Option<f64>,
    pub method: SpectralMethod,
    /// Power-iteration estimate of `lambda_max`, always computed.
    pub lambda_max_power: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SpectralOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub dense_threshold: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 20_000, seed: 0x5eed, dense_threshold: 512 }
    }
}

/// Power iteration on `AAᵀ` (or `AᵀA`, whichever is smaller).
/// Returns `(sigma_max, converged, iterations)`.
pub fn power_iteration(a: &SparseMatrix, tol: f64, max_iter: usize, seed: u64) -> (f64, bool, usize) {
    let (m, n) = (a.nrows(), a.ncols());
    let small = m.min(n);
    if small == 0 {
        return (0.0, true, 0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..small).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut tmp_m = vec![0.0; m];
    let mut tmp_n = vec![0.0; n];
    let mut w = vec![0.0; small];
    let mut lam = 0.0;
    for it in 1..=max_iter {
        if m <= n {
            a.spmv_t_into(&v, &mut tmp_n);
            a.spmv_into(&tmp_n, &mut w);
        } else {
            a.spmv_into(&v, &mut tmp_m);
            a.spmv_t_into(&tmp_m, &mut w);
        }
        let new_lam = dot(&v, &w);
        let nw = norm(&w);
        if nw == 0.0 {
            return (0.0, true, it);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if it > 1 && (new_lam - lam).abs() <= tol * new_lam {
            return (new_lam.max(0.0).sqrt(), true, it);
        }
        lam = new_lam;
    }
    (lam.max(0.0).sqrt(), false, max_iter)
}

/// All singular values, descending, from a dense SVD.
pub fn singular_values(a: &SparseMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    let sv = a.to_dense().svd(false, false).singular_values;
    let mut out: Vec<f64> = sv.iter().copied().collect();
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    out
}

/// λ_max, λ_min⁺ and κ. When the dense SVD is affordable its values are
/// reported (they are exact); the power-iteration value is kept alongside.
pub fn estimate_spectra(a: &SparseMatrix, opts: &SpectralOptions) -> Result<SpectralEstimates> {
    if a.is_zero() {
        return Err(Error::input("spectral estimate of a zero matrix"));
    }
    let (pmax, converged, _) = power_iteration(a, opts.tol, opts.max_iter, opts.seed);
    if a.nrows().min(a.ncols()) <= opts.dense_threshold {
        let sv = singular_values(a);
        let smax = sv[0];
        let smin = sv
            .iter()
            .copied()
            .filter(|&s| s > 1e-10 * smax)
            .fold(f64::INFINITY, f64::min);
        Ok(SpectralEstimates {
            lambda_max: smax,
            lambda_min: Some(smin),
            kappa: Some(smax / smin),
            method: SpectralMethod::DenseSvd,
            lambda_max_power: pmax,
            converged,
        })
    } else {
        Ok(SpectralEstimates {
            lambda_max: pmax,
            lambda_min: None,
            kappa: None,
            method: SpectralMethod::PowerIteration,
            lambda_max_power: pmax,
            converged,
        })
    }
}
