use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, norm};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True residual `‖apply(x) - b‖` of the returned iterate.
    pub residual: f64,
    pub rhs_norm: f64,
    pub converged: bool,
}

impl CgResult {
    pub fn relative_residual(&self) -> f64 {
        if self.rhs_norm > 0.0 {
            self.residual / self.rhs_norm
        } else {
            self.residual
        }
    }
}

/// Jacobi-preconditioned CG; stops at `‖r‖ ≤ tol·‖b‖`.
///
/// `precond` holds the diagonal of the operator; nonpositive entries are
/// treated as 1.
pub fn cg_solve<F>(apply: F, b: &[f64], precond: Option<&[f64]>, tol: f64, max_iter: usize) -> CgResult
where
    F: FnMut(&[f64], &mut [f64]),
{
    let bn = norm(b);
    cg_solve_with(apply, b, precond, None, max_iter, |_, r| r <= tol * bn)
}

/// CG with a caller-supplied stopping rule `stop(iteration, ‖r‖)`.
/// The returned iterate is the one with the smallest recursive residual.
pub fn cg_solve_with<F, S>(
    mut apply: F,
    b: &[f64],
    precond: Option<&[f64]>,
    x0: Option<&[f64]>,
    max_iter: usize,
    mut stop: S,
) -> CgResult
where
    F: FnMut(&[f64], &mut [f64]),
    S: FnMut(usize, f64) -> bool,
{
    let n = b.len();
    let rhs_norm = norm(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut ap = vec![0.0; n];
    let mut r = b.to_vec();
    if x0.is_some() {
        apply(&x, &mut ap);
        for i in 0..n {
            r[i] -= ap[i];
        }
    }
    let minv = |v: &[f64], out: &mut [f64]| match precond {
        Some(d) => {
            for i in 0..v.len() {
                out[i] = if d[i] > 0.0 { v[i] / d[i] } else { v[i] };
            }
        }
        None => out.copy_from_slice(v),
    };

    let mut rn = norm(&r);
    let mut best_x = x.clone();
    let mut best_rn = rn;
    let mut iterations = 0;
    let mut converged = stop(0, rn);
    if !converged {
        let mut z = vec![0.0; n];
        minv(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=max_iter {
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 || !pap.is_finite() {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations = it;
            rn = norm(&r);
            if rn < best_rn {
                best_rn = rn;
                best_x.copy_from_slice(&x);
            }
            if stop(it, rn) {
                converged = true;
                break;
            }
            minv(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if converged {
            best_x = x;
        }
    }
    apply(&best_x, &mut ap);
    let residual = ap.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    CgResult { x: best_x, iterations, residual, rhs_norm, converged }
}

/// Randomized symmetry test `⟨Au, v⟩ = ⟨u, Av⟩`.
pub fn check_symmetric<F>(mut apply: F, n: usize, seed: u64, rtol: f64) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut au = vec![0.0; n];
    let mut av = vec![0.0; n];
    apply(&u, &mut au);
    apply(&v, &mut av);
    let (l, r) = (dot(&au, &v), dot(&u, &av));
    if (l - r).abs() > rtol * (norm(&au) * norm(&v) + norm(&av) * norm(&u) + f64::MIN_POSITIVE) {
        return Err(Error::input(format!("operator is not symmetric: {l} vs {r}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_apply(m: Vec<Vec<f64>>) -> impl FnMut(&[f64], &mut [f64]) {
        move |x, y| {
            for (i, row) in m.iter().enumerate() {
                y[i] = dot(row, x);
            }
        }
    }

    #[test]
    fn two_by_two() {
        let op = dense_apply(vec![vec![4.0, 1.0], vec![1.0, 3.0]]);
        let res = cg_solve(op, &[1.0, 2.0], None, 1e-14, 10);
        assert!(res.converged);
        assert!((res.x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((res.x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn identity_one_step() {
        let b = vec![3.0, -1.0, 2.0];
        let res = cg_solve(|x, y| y.copy_from_slice(x), &b, None, 1e-14, 10);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.x, b);
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let res = cg_solve(|x, y| y.copy_from_slice(x), &[0.0, 0.0], None, 1e-10, 10);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.x, vec![0.0, 0.0]);
    }

    #[test]
    fn jacobi_preconditioner_on_badly_scaled_diagonal() {
        let d = [1e-3, 1.0, 1e3];
        let res = cg_solve(
            |x, y| {
                for i in 0..3 {
                    y[i] = d[i] * x[i];
                }
            },
            &[1.0, 1.0, 1.0],
            Some(&d),
            1e-14,
            5,
        );
        assert_eq!(res.iterations, 1);
        assert!((res.x[0] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn detects_asymmetry() {
        let op = dense_apply(vec![vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(check_symmetric(op, 2, 1, 1e-12).is_err());
        let op = dense_apply(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!(check_symmetric(op, 2, 1, 1e-12).is_ok());
    }
}
