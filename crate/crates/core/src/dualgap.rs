//! Normalized duality gap `ρ(r; z)`.
//!
//! `ρ(r; z) = (1/r) max { hᵀ(ẑ - z) : ẑ ∈ K × ℝᵐ, ‖ẑ - z‖ ≤ r }` with
//! `h = (Aᵀy - c, b - Ax)`. The maximizer is found by root finding on the
//! penalty parameter `t` of `max_ẑ t·hᵀ(ẑ - z) - ‖ẑ - z‖²`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::linalg::{n_norm, SparseMatrix};
use crate::model::ClpInstance;
use crate::{Error, Result};

/// Doubling stops at `t = 2^MAX_DOUBLINGS`.
pub const MAX_DOUBLINGS: i32 = 60;
/// Relative bracket width at which bisection stops.
pub const BISECTION_RTOL: f64 = 1e-10;
/// Radius used when the requested radius is zero, relative to the point scale.
pub const ZERO_RADIUS: f64 = 1e-16;

const PGA_TOL: f64 = 1e-9;
const PGA_MAX_ITER: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapNorm {
    M,
    N,
}

#[derive(Clone, Copy, Debug)]
pub struct GapQuery<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub r: f64,
    pub tau: f64,
    pub sigma: f64,
    pub norm: GapNorm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapCertificate {
    pub rho: f64,
    /// `(x̂, ŷ)` attaining the value.
    pub maximizer: Option<(Vec<f64>, Vec<f64>)>,
    pub t_star: f64,
    /// Bound on `|rho - ρ(r; z)|`.
    pub error_bound: f64,
}

/// `h = (Aᵀy - c, b - Ax)`.
pub fn gap_direction(inst: &ClpInstance, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let aty = inst.a().spmv_t(y).expect("dims");
    let ax = inst.a().spmv(x).expect("dims");
    let h1 = aty.iter().zip(inst.c()).map(|(a, c)| a - c).collect();
    let h2 = inst.b().iter().zip(&ax).map(|(b, a)| b - a).collect();
    (h1, h2)
}

fn check_query(inst: &ClpInstance, q: &GapQuery) -> Result<()> {
    if !(q.r > 0.0) || !q.r.is_finite() {
        return Err(Error::input(format!("radius must be positive, got {}", q.r)));
    }
    if !(q.tau > 0.0 && q.sigma > 0.0) {
        return Err(Error::input("step sizes must be positive"));
    }
    if q.x.len() != inst.n() || q.y.len() != inst.m() {
        return Err(Error::input("gap query dimensions do not match the instance"));
    }
    Ok(())
}

/// Solves the penalized problem for one `t`, returning `(z(t), ‖z(t) - z‖)`.
trait Penalized {
    fn solve(&mut self, t: f64) -> (Vec<f64>, Vec<f64>, f64);
}

struct NPenalized<'a> {
    cone: &'a ConeSpec,
    x: &'a [f64],
    y: &'a [f64],
    h1: &'a [f64],
    h2: &'a [f64],
    tau: f64,
    sigma: f64,
}

impl Penalized for NPenalized<'_> {
    fn solve(&mut self, t: f64) -> (Vec<f64>, Vec<f64>, f64) {
        let a = 0.5 * t * self.tau;
        let mut xt: Vec<f64> = self.x.iter().zip(self.h1).map(|(x, h)| x + a * h).collect();
        self.cone.project_in_place(&mut xt);
        let b = 0.5 * t * self.sigma;
        let yt: Vec<f64> = self.y.iter().zip(self.h2).map(|(y, h)| y + b * h).collect();
        let dx: Vec<f64> = xt.iter().zip(self.x).map(|(u, v)| u - v).collect();
        let dy: Vec<f64> = yt.iter().zip(self.y).map(|(u, v)| u - v).collect();
        let d = n_norm(&dx, &dy, self.tau, self.sigma);
        (xt, yt, d)
    }
}

/// Doubling + bisection on `f(t) = ‖z(t) - z‖ - r`.
fn root_find<P: Penalized>(p: &mut P, x: &[f64], y: &[f64], h1: &[f64], h2: &[f64], r: f64) -> GapCertificate {
    let value = |xt: &[f64], yt: &[f64]| -> f64 {
        let a: f64 = h1.iter().zip(xt.iter().zip(x)).map(|(h, (u, v))| h * (u - v)).sum();
        let b: f64 = h2.iter().zip(yt.iter().zip(y)).map(|(h, (u, v))| h * (u - v)).sum();
        (a + b).max(0.0)
    };
    // bracket [lo, hi] with f(lo) < 0 ≤ f(hi)
    let mut lo = 0.0;
    let mut lo_sol: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut hi = None;
    let first = p.solve(1.0);
    if first.2 >= r {
        hi = Some(1.0);
        let mut t = 1.0;
        for _ in 0..MAX_DOUBLINGS {
            t *= 0.5;
            let s = p.solve(t);
            if s.2 < r {
                lo = t;
                lo_sol = Some(s);
                break;
            }
            hi = Some(t);
        }
    } else {
        lo = 1.0;
        lo_sol = Some(first);
        let mut t = 1.0;
        for _ in 0..MAX_DOUBLINGS {
            t *= 2.0;
            let s = p.solve(t);
            if s.2 >= r {
                hi = Some(t);
                break;
            }
            lo = t;
            lo_sol = Some(s);
        }
    }
    let Some(mut hi) = hi else {
        // f(t) < 0 up to the cap
        let (xt, yt, d) = lo_sol.expect("set when no root bracketed");
        let rho = value(&xt, &yt) / r;
        return GapCertificate {
            rho,
            maximizer: Some((xt, yt)),
            t_star: lo,
            error_bound: (r * r - d * d).max(0.0) / (r * lo),
        };
    };
    if lo_sol.is_none() {
        // f(2^-60) ≥ 0 as well: the ball is tiny compared with h
        let (xt, yt, _) = p.solve(hi);
        return GapCertificate { rho: value(&xt, &yt) / r, maximizer: Some((xt, yt)), t_star: hi, error_bound: f64::NAN };
    }
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        let s = p.solve(mid);
        if s.2 < r {
            lo = mid;
            lo_sol = Some(s);
        } else {
            hi = mid;
        }
    }
    let (xt, yt, d) = lo_sol.unwrap();
    let rho = value(&xt, &yt) / r;
    GapCertificate { rho, maximizer: Some((xt, yt)), t_star: lo, error_bound: (r * r - d * d).max(0.0) / (r * lo) }
}

/// `ρ_N(r; z)` from a precomputed direction `h = (h1, h2)`.
#[allow(clippy::too_many_arguments)]
pub fn rho_n_raw(
    cone: &ConeSpec,
    x: &[f64],
    y: &[f64],
    h1: &[f64],
    h2: &[f64],
    r: f64,
    tau: f64,
    sigma: f64,
) -> GapCertificate {
    let mut p = NPenalized { cone, x, y, h1, h2, tau, sigma };
    root_find(&mut p, x, y, h1, h2, r)
}

/// Normalized duality gap in the N-norm; each trial `t` costs one cone projection.
pub fn rho_n(inst: &ClpInstance, q: &GapQuery) -> Result<GapCertificate> {
    check_query(inst, q)?;
    let (h1, h2) = gap_direction(inst, q.x, q.y);
    Ok(rho_n_raw(inst.cone(), q.x, q.y, &h1, &h2, q.r, q.tau, q.sigma))
}

/// Dense `M = [[I/τ, -Aᵀ], [-A, I/σ]]`.
pub fn m_matrix(a: &SparseMatrix, tau: f64, sigma: f64) -> DMatrix<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    let ad = a.to_dense();
    let mut mm = DMatrix::zeros(n + m, n + m);
    for j in 0..n {
        mm[(j, j)] = 1.0 / tau;
    }
    for i in 0..m {
        mm[(n + i, n + i)] = 1.0 / sigma;
        for j in 0..n {
            mm[(n + i, j)] = ad[(i, j)];
            mm[(j, n + i)] = ad[(i, j)];
        }
    }
    mm
}

struct MPenalized<'a> {
    cone: &'a ConeSpec,
    n: usize,
    z: Vec<f64>,
    h: Vec<f64>,
    mm: DMatrix<f64>,
    /// `diag(N⁻¹)`: τ on x, σ on y.
    ninv: Vec<f64>,
    /// Step for the N-preconditioned iteration, `1/(2·λ_max(N^{-1/2} M N^{-1/2}))`.
    step: f64,
    warm: Vec<f64>,
    iters: usize,
}

impl MPenalized<'_> {
    fn new<'a>(cone: &'a ConeSpec, a: &SparseMatrix, x: &[f64], y: &[f64], h: Vec<f64>, tau: f64, sigma: f64, lambda_max: f64) -> MPenalized<'a> {
        let n = x.len();
        let z: Vec<f64> = x.iter().chain(y).copied().collect();
        let ninv = (0..z.len()).map(|i| if i < n { tau } else { sigma }).collect();
        MPenalized {
            cone,
            n,
            warm: z.clone(),
            z,
            h,
            mm: m_matrix(a, tau, sigma),
            ninv,
            step: 1.0 / (2.0 * (1.0 + (tau * sigma).sqrt() * lambda_max)),
            iters: 0,
        }
    }

    fn m_dist(&self, d: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(d);
        (v.dot(&(&self.mm * &v))).max(0.0).sqrt()
    }
}

impl Penalized for MPenalized<'_> {
    /// Accelerated projected gradient ascent on `t·hᵀ(w - z) - ‖w - z‖²_M`,
    /// preconditioned by `N` (the projection onto `K × ℝᵐ` is unchanged by
    /// the blockwise-scalar metric).
    fn solve(&mut self, t: f64) -> (Vec<f64>, Vec<f64>, f64) {
        let dim = self.z.len();
        let scale = 1.0 + n_norm(&self.z[..self.n], &self.z[self.n..], self.ninv[0].max(1e-300), self.ninv[dim - 1].max(1e-300))
            + t * self.h.iter().zip(&self.ninv).map(|(h, s)| h * h * s).sum::<f64>().sqrt();
        let mut w = self.warm.clone();
        let mut v = w.clone();
        let mut theta = 1.0f64;
        let mut next = vec![0.0; dim];
        for _ in 0..PGA_MAX_ITER {
            self.iters += 1;
            let d = nalgebra::DVector::from_iterator(dim, v.iter().zip(&self.z).map(|(a, b)| a - b));
            let md = &self.mm * d;
            for i in 0..dim {
                next[i] = v[i] + self.step * self.ninv[i] * (t * self.h[i] - 2.0 * md[i]);
            }
            self.cone.project_in_place(&mut next[..self.n]);
            // gradient-map size in the N-norm
            let gm = (0..dim).map(|i| (next[i] - v[i]).powi(2) / self.ninv[i]).sum::<f64>().sqrt() / self.step;
            // momentum restart when the step opposes the last move
            let opp: f64 = (0..dim).map(|i| (v[i] - next[i]) * (next[i] - w[i])).sum();
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = if opp > 0.0 { 0.0 } else { (theta - 1.0) / theta_next };
            theta = if opp > 0.0 { 1.0 } else { theta_next };
            for i in 0..dim {
                v[i] = next[i] + beta * (next[i] - w[i]);
            }
            std::mem::swap(&mut w, &mut next);
            if gm <= PGA_TOL * scale {
                break;
            }
        }
        self.warm = w.clone();
        let d: Vec<f64> = w.iter().zip(&self.z).map(|(a, b)| a - b).collect();
        let dist = self.m_dist(&d);
        let y = w.split_off(self.n);
        (w, y, dist)
    }
}

/// Normalized duality gap in the M-norm (dense; small instances only).
pub fn rho_m(inst: &ClpInstance, q: &GapQuery) -> Result<GapCertificate> {
    check_query(inst, q)?;
    let lam = inst.spectra()?.lambda_max;
    if q.tau * q.sigma * lam * lam >= 1.0 {
        return Err(Error::Unsupported(
            "rho_m needs tau*sigma*lambda_max^2 < 1 so that M is positive definite".into(),
        ));
    }
    let (h1, h2) = gap_direction(inst, q.x, q.y);
    let h: Vec<f64> = h1.iter().chain(&h2).copied().collect();
    let mut p = MPenalized::new(inst.cone(), inst.a(), q.x, q.y, h, q.tau, q.sigma, lam);
    Ok(root_find(&mut p, q.x, q.y, &h1, &h2, q.r))
}

pub fn rho(inst: &ClpInstance, q: &GapQuery) -> Result<GapCertificate> {
    match q.norm {
        GapNorm::N => rho_n(inst, q),
        GapNorm::M => rho_m(inst, q),
    }
}

/// `ρ_N` at `r = ‖candidate - anchor‖_N` as used by the restart test.
/// A zero radius is replaced by `ZERO_RADIUS·(1 + ‖candidate‖_N)`.
#[allow(clippy::too_many_arguments)]
pub fn rho_for_restart(
    cone: &ConeSpec,
    x: &[f64],
    y: &[f64],
    h1: &[f64],
    h2: &[f64],
    anchor_x: &[f64],
    anchor_y: &[f64],
    tau: f64,
    sigma: f64,
) -> (f64, f64) {
    let dx: Vec<f64> = x.iter().zip(anchor_x).map(|(a, b)| a - b).collect();
    let dy: Vec<f64> = y.iter().zip(anchor_y).map(|(a, b)| a - b).collect();
    let mut r = n_norm(&dx, &dy, tau, sigma);
    if r <= 0.0 {
        r = ZERO_RADIUS * (1.0 + n_norm(x, y, tau, sigma));
    }
    (rho_n_raw(cone, x, y, h1, h2, r, tau, sigma).rho, r)
}
