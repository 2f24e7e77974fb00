//! PDHG and restarted PDHG.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dualgap::{rho_for_restart, rho_m, GapNorm, GapQuery};
use crate::linalg::{n_norm, norm};
use crate::model::{check_eps_tolerance, relative_error_cached, ClpInstance, ErrorParts, QualityReport};
use crate::{Error, Result};

pub const DEFAULT_BETA: f64 = 0.367_879_441_171_442_33;
/// Inner iterations between restart checks once past the early powers of two.
pub const CHECK_CADENCE: usize = 64;
pub const PRACTICAL_STEP: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepProvenance {
    Theorem,
    Practical,
    Learned,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    pub tau: f64,
    pub sigma: f64,
    pub provenance: StepProvenance,
}

impl StepSizes {
    pub fn new(tau: f64, sigma: f64, provenance: StepProvenance) -> Result<Self> {
        if !(tau > 0.0 && sigma > 0.0 && tau.is_finite() && sigma.is_finite()) {
            return Err(Error::input("step sizes must be positive and finite"));
        }
        Ok(Self { tau, sigma, provenance })
    }

    /// `τσλ²_max ≤ 1` up to round-off.
    pub fn is_valid_for(&self, lambda_max: f64) -> bool {
        self.tau * self.sigma * lambda_max * lambda_max <= 1.0 + 1e-12
    }
}

/// `τ = 1/κ`, `σ = 1/(λ_max λ_min)`, or `τ = σ = 0.8/λ_max` when `λ_min` is unknown.
pub fn default_step_sizes(inst: &ClpInstance) -> Result<StepSizes> {
    let sp = inst.spectra()?;
    match (sp.lambda_min, sp.kappa) {
        (Some(lmin), Some(kappa)) => StepSizes::new(1.0 / kappa, 1.0 / (sp.lambda_max * lmin), StepProvenance::Theorem),
        _ => practical_step_sizes(inst),
    }
}

pub fn practical_step_sizes(inst: &ClpInstance) -> Result<StepSizes> {
    let lam = inst.spectra()?.lambda_max;
    StepSizes::new(PRACTICAL_STEP / lam, PRACTICAL_STEP / lam, StepProvenance::Practical)
}

/// `(10^ℓ/(2λ), 10^-ℓ/(2λ))` for `ℓ = -2..=2`.
pub fn learned_step_pairs(lambda_max: f64) -> Vec<StepSizes> {
    (-2..=2)
        .map(|l| {
            let f = 10f64.powi(l);
            StepSizes { tau: f / (2.0 * lambda_max), sigma: 1.0 / (f * 2.0 * lambda_max), provenance: StepProvenance::Learned }
        })
        .collect()
}

/// Runs each learned pair for `iters` iterations from `z0` and keeps the
/// pair with the smallest final relative error. Returns the choice and
/// the per-pair errors.
pub fn select_learned_steps(
    inst: &ClpInstance,
    z0: Option<(&[f64], &[f64])>,
    iters: usize,
    flexible: bool,
) -> Result<(StepSizes, Vec<f64>)> {
    let lam = inst.spectra()?.lambda_max;
    let pairs = learned_step_pairs(lam);
    let opts = RpdhgOptions { eps_rel: 0.0, max_iters: iters, flexible, ..RpdhgOptions::default() };
    let mut errs = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let e = match solve_rpdhg(inst, p, &opts, z0) {
            Ok(res) => res.error.max(),
            Err(_) => f64::INFINITY,
        };
        errs.push(e);
    }
    let best = errs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    Ok((pairs[best], errs))
}

/// One PDHG step:
/// `x⁺ = P_K(x - τ(c - Aᵀy))`, `y⁺ = y + σ(b - A(2x⁺ - x))`.
pub fn one_pdhg(inst: &ClpInstance, x: &[f64], y: &[f64], steps: &StepSizes) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != inst.n() || y.len() != inst.m() {
        return Err(Error::input("one_pdhg: iterate dimensions do not match the instance"));
    }
    let aty = inst.a().spmv_t(y)?;
    let mut xp: Vec<f64> = (0..x.len()).map(|j| x[j] - steps.tau * (inst.c()[j] - aty[j])).collect();
    inst.cone().project_in_place(&mut xp);
    let ext: Vec<f64> = xp.iter().zip(x).map(|(a, b)| 2.0 * a - b).collect();
    let aext = inst.a().spmv(&ext)?;
    let yp: Vec<f64> = (0..y.len()).map(|i| y[i] + steps.sigma * (inst.b()[i] - aext[i])).collect();
    if xp.iter().chain(&yp).any(|v| !v.is_finite()) {
        return Err(Error::numerical("one_pdhg produced non-finite values"));
    }
    Ok((xp, yp))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    OptimalAtTolerance,
    IterationLimit,
    TimeLimit,
    /// Stopped by a caller-supplied anchor hook.
    Stopped,
}

#[derive(Clone, Debug)]
pub struct RpdhgOptions {
    pub beta: f64,
    pub flexible: bool,
    pub eps_rel: f64,
    pub max_iters: usize,
    pub time_limit: Option<f64>,
    /// Divergence guard factor on `1 + ‖z⁰‖`.
    pub divergence_factor: f64,
}

impl Default for RpdhgOptions {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            flexible: true,
            eps_rel: 1e-8,
            max_iters: 1_000_000,
            time_limit: None,
            divergence_factor: 1e12,
        }
    }
}

impl RpdhgOptions {
    /// Plain β-restart on the average, as in the complexity analysis.
    pub fn theory() -> Self {
        Self { flexible: false, ..Self::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub outer: usize,
    pub e_r: f64,
    pub rho: f64,
    pub restarted: bool,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub status: Status,
    pub iterations: usize,
    pub restarts: usize,
    /// Relative error of the returned point (from the error monitor when one is set).
    pub error: ErrorParts,
    pub quality: QualityReport,
    pub matvecs: usize,
    pub trace: Vec<TraceRow>,
    pub steps: StepSizes,
    pub wall_time_s: f64,
}

/// Per-iteration view handed to observers.
pub struct IterView<'a> {
    /// Total PDHG steps so far.
    pub total: usize,
    pub outer: usize,
    pub inner: usize,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub xbar: &'a [f64],
    pub ybar: &'a [f64],
    pub anchor_x: &'a [f64],
    pub anchor_y: &'a [f64],
}

/// A new restart anchor `z^{n,0}`.
pub struct AnchorView<'a> {
    pub total: usize,
    pub outer: usize,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub rho: f64,
}

pub type ErrorMonitor<'a> = &'a mut dyn FnMut(&[f64], &[f64]) -> ErrorParts;

#[derive(Default)]
pub struct Hooks<'a> {
    pub observer: Option<&'a mut dyn FnMut(&IterView)>,
    /// Return `true` to stop at this anchor.
    pub on_anchor: Option<&'a mut dyn FnMut(&AnchorView) -> bool>,
    /// Replaces the relative error of the working instance, e.g. to measure
    /// progress on the original problem during a rescaled solve.
    pub error_monitor: Option<ErrorMonitor<'a>>,
}

fn is_check_point(k: usize) -> bool {
    if k < CHECK_CADENCE {
        k.is_power_of_two()
    } else {
        k % CHECK_CADENCE == 0
    }
}

/// Iterate with cached products.
#[derive(Clone)]
struct Pt {
    x: Vec<f64>,
    y: Vec<f64>,
    ax: Vec<f64>,
    aty: Vec<f64>,
}

impl Pt {
    fn h(&self, inst: &ClpInstance) -> (Vec<f64>, Vec<f64>) {
        let h1 = self.aty.iter().zip(inst.c()).map(|(a, c)| a - c).collect();
        let h2 = inst.b().iter().zip(&self.ax).map(|(b, a)| b - a).collect();
        (h1, h2)
    }
}

pub fn solve_rpdhg(
    inst: &ClpInstance,
    steps: &StepSizes,
    opts: &RpdhgOptions,
    z0: Option<(&[f64], &[f64])>,
) -> Result<SolveResult> {
    solve_rpdhg_with(inst, steps, opts, z0, Hooks::default())
}

/// Restarted PDHG. Restart checks use `ρ_N`; the first outer loop restarts after one step.
pub fn solve_rpdhg_with(
    inst: &ClpInstance,
    steps: &StepSizes,
    opts: &RpdhgOptions,
    z0: Option<(&[f64], &[f64])>,
    mut hooks: Hooks,
) -> Result<SolveResult> {
    let (m, n) = (inst.m(), inst.n());
    let a = inst.a();
    let (tau, sigma) = (steps.tau, steps.sigma);
    if !(opts.beta > 0.0 && opts.beta < 1.0) {
        return Err(Error::input("beta must lie in (0, 1)"));
    }
    let start = Instant::now();
    let (mut x, y) = match z0 {
        Some((x0, y0)) => {
            if x0.len() != n || y0.len() != m {
                return Err(Error::input("starting point dimensions do not match the instance"));
            }
            (x0.to_vec(), y0.to_vec())
        }
        None => (vec![0.0; n], vec![0.0; m]),
    };
    inst.cone().project_in_place(&mut x);
    let guard = opts.divergence_factor * (1.0 + n_norm(&x, &y, 1.0, 1.0));
    let mut matvecs = 2;
    let mut cur = Pt { ax: a.spmv(&x)?, aty: a.spmv_t(&y)?, x, y };
    let mut anchor = cur.clone();
    let mut rho_anchor = f64::INFINITY;
    let mut avg = Pt { x: vec![0.0; n], y: vec![0.0; m], ax: vec![0.0; m], aty: vec![0.0; n] };
    let mut outer = 0usize;
    let mut inner = 0usize;
    let mut total = 0usize;
    let mut restarts = 0usize;
    let mut trace = Vec::new();
    let mut xn = vec![0.0; n];
    let mut axn = vec![0.0; m];
    let mut best: Option<(Pt, ErrorParts)> = None;

    let measure = |p: &Pt, hooks: &mut Hooks| -> ErrorParts {
        match hooks.error_monitor.as_mut() {
            Some(f) => f(&p.x, &p.y),
            None => relative_error_cached(inst, &p.x, &p.y, &p.ax, &p.aty),
        }
    };

    let status = loop {
        if total >= opts.max_iters {
            break Status::IterationLimit;
        }
        if let Some(tl) = opts.time_limit {
            if start.elapsed().as_secs_f64() >= tl {
                break Status::TimeLimit;
            }
        }
        // one PDHG step with cached Aᵀy and Ax
        for j in 0..n {
            xn[j] = cur.x[j] - tau * (inst.c()[j] - cur.aty[j]);
        }
        inst.cone().project_in_place(&mut xn);
        a.spmv_into(&xn, &mut axn);
        for i in 0..m {
            cur.y[i] += sigma * (inst.b()[i] - (2.0 * axn[i] - cur.ax[i]));
        }
        std::mem::swap(&mut cur.x, &mut xn);
        std::mem::swap(&mut cur.ax, &mut axn);
        a.spmv_t_into(&cur.y, &mut cur.aty);
        matvecs += 2;
        total += 1;
        inner += 1;
        let zn = n_norm(&cur.x, &cur.y, 1.0, 1.0);
        if !zn.is_finite() {
            return Err(Error::numerical(format!("non-finite iterate at iteration {total}")));
        }
        if zn > guard {
            return Err(Error::numerical(format!(
                "iterates diverged at iteration {total} (|z| = {zn:e}); the problem may be infeasible"
            )));
        }
        // running average of the inner iterates
        let w = 1.0 / inner as f64;
        for (ab, c) in [(&mut avg.x, &cur.x), (&mut avg.aty, &cur.aty)] {
            for j in 0..n {
                ab[j] += (c[j] - ab[j]) * w;
            }
        }
        for (ab, c) in [(&mut avg.y, &cur.y), (&mut avg.ax, &cur.ax)] {
            for i in 0..m {
                ab[i] += (c[i] - ab[i]) * w;
            }
        }
        if let Some(obs) = hooks.observer.as_mut() {
            obs(&IterView {
                total,
                outer,
                inner,
                x: &cur.x,
                y: &cur.y,
                xbar: &avg.x,
                ybar: &avg.y,
                anchor_x: &anchor.x,
                anchor_y: &anchor.y,
            });
        }
        if !is_check_point(inner) {
            continue;
        }

        // restart test
        let mut restart_to: Option<(bool, f64)> = None; // (use current iterate, rho)
        let mut rho_trace = f64::NAN;
        if outer == 0 {
            if inner == 1 {
                let (h1, h2) = avg.h(inst);
                let (rho, _) = rho_for_restart(inst.cone(), &avg.x, &avg.y, &h1, &h2, &anchor.x, &anchor.y, tau, sigma);
                restart_to = Some((false, rho));
                rho_trace = rho;
            }
        } else {
            let (h1, h2) = avg.h(inst);
            let (rho_avg, _) = rho_for_restart(inst.cone(), &avg.x, &avg.y, &h1, &h2, &anchor.x, &anchor.y, tau, sigma);
            rho_trace = rho_avg;
            if rho_avg <= opts.beta * rho_anchor {
                restart_to = Some((false, rho_avg));
            }
            if opts.flexible {
                let (h1, h2) = cur.h(inst);
                let (rho_cur, _) = rho_for_restart(inst.cone(), &cur.x, &cur.y, &h1, &h2, &anchor.x, &anchor.y, tau, sigma);
                if rho_cur <= opts.beta * rho_anchor && restart_to.is_none_or(|(_, r)| rho_cur < r) {
                    restart_to = Some((true, rho_cur));
                }
            }
        }

        let e_cur = measure(&cur, &mut hooks);
        let e_avg = measure(&avg, &mut hooks);
        for (p, e) in [(&cur, e_cur), (&avg, e_avg)] {
            if best.as_ref().is_none_or(|(_, b)| e.max() < b.max()) {
                best = Some((p.clone(), e));
            }
        }
        trace.push(TraceRow {
            iter: total,
            outer,
            e_r: e_cur.max().min(e_avg.max()),
            rho: rho_trace,
            restarted: restart_to.is_some(),
            wall_time_s: start.elapsed().as_secs_f64(),
        });

        if let Some((use_cur, rho)) = restart_to {
            anchor = if use_cur { cur.clone() } else { avg.clone() };
            cur = anchor.clone();
            rho_anchor = rho;
            outer += 1;
            inner = 0;
            restarts += 1;
            for v in avg.x.iter_mut().chain(avg.y.iter_mut()).chain(avg.ax.iter_mut()).chain(avg.aty.iter_mut()) {
                *v = 0.0;
            }
            if let Some(hook) = hooks.on_anchor.as_mut() {
                if hook(&AnchorView { total, outer, x: &anchor.x, y: &anchor.y, rho }) {
                    best = Some((anchor.clone(), measure(&anchor, &mut hooks)));
                    break Status::Stopped;
                }
            }
        }
        if let Some((_, e)) = &best {
            if e.max() <= opts.eps_rel {
                break Status::OptimalAtTolerance;
            }
        }
    };

    let (pt, error) = match (status, best) {
        (Status::OptimalAtTolerance | Status::Stopped, Some(b)) => b,
        (_, best) => {
            // limits: report the better of the last iterate and the best checked point
            let e = measure(&cur, &mut hooks);
            match best {
                Some((bp, be)) if be.max() < e.max() => (bp, be),
                _ => (cur, e),
            }
        }
    };
    let s: Vec<f64> = inst.c().iter().zip(&pt.aty).map(|(c, v)| c - v).collect();
    let (_, mut quality) = check_eps_tolerance(inst, &pt.x, &s, &crate::model::ToleranceTriple::uniform(opts.eps_rel.max(f64::MIN_POSITIVE)), 0.0);
    quality.e_obj = None;
    quality.relative_error = Some(error.max());
    Ok(SolveResult {
        x: pt.x,
        y: pt.y,
        s,
        status,
        iterations: total,
        restarts,
        error,
        quality,
        matvecs,
        trace,
        steps: *steps,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Envelope check `ρ(‖z̄ᵏ - z⁰‖_M; z̄ᵏ) ≤ 8·Dist_M(z⁰, Z*)/k` along plain
/// PDHG (no restarts) for `iters` steps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SublinearReport {
    pub iterations: usize,
    pub violations: usize,
    /// `max_k ρ_k·k / (8·Dist_M)`.
    pub worst_ratio: f64,
    /// Iterations where the cheap `ρ_N` upper bound did not settle the check.
    pub exact_evaluations: usize,
}

pub fn sublinear_check(
    inst: &ClpInstance,
    steps: &StepSizes,
    z0: (&[f64], &[f64]),
    dist_m: f64,
    iters: usize,
) -> Result<SublinearReport> {
    let lam = inst.spectra()?.lambda_max;
    let q = (steps.tau * steps.sigma).sqrt() * lam;
    if q >= 1.0 {
        return Err(Error::Unsupported("sublinear check needs tau*sigma*lambda_max^2 < 1".into()));
    }
    let upper_factor = 1.0 / (1.0 - q).sqrt();
    let (mut x, mut y) = (z0.0.to_vec(), z0.1.to_vec());
    let (mut xb, mut yb) = (vec![0.0; x.len()], vec![0.0; y.len()]);
    let mut rep = SublinearReport { iterations: iters, violations: 0, worst_ratio: 0.0, exact_evaluations: 0 };
    for k in 1..=iters {
        let (xn, yn) = one_pdhg(inst, &x, &y, steps)?;
        x = xn;
        y = yn;
        let w = 1.0 / k as f64;
        for j in 0..x.len() {
            xb[j] += (x[j] - xb[j]) * w;
        }
        for i in 0..y.len() {
            yb[i] += (y[i] - yb[i]) * w;
        }
        let dx: Vec<f64> = xb.iter().zip(z0.0).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = yb.iter().zip(z0.1).map(|(a, b)| a - b).collect();
        let r = crate::linalg::m_norm(&dx, &dy, steps.tau, steps.sigma, inst.a())?;
        let env = 8.0 * dist_m / k as f64;
        if r <= 0.0 {
            continue;
        }
        // ρ_M(r) ≤ upper_factor·ρ_N(r)
        let qn = GapQuery { x: &xb, y: &yb, r, tau: steps.tau, sigma: steps.sigma, norm: GapNorm::N };
        let rn = crate::dualgap::rho_n(inst, &qn)?.rho;
        let rho = if upper_factor * rn <= env {
            upper_factor * rn
        } else {
            rep.exact_evaluations += 1;
            rho_m(inst, &GapQuery { norm: GapNorm::M, ..qn })?.rho
        };
        let ratio = if env > 0.0 { rho / env } else if rho > 0.0 { f64::INFINITY } else { 0.0 };
        rep.worst_ratio = rep.worst_ratio.max(ratio);
        if rho > env * (1.0 + 1e-9) + 1e-12 {
            rep.violations += 1;
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NonexpansiveReport {
    /// Largest `(‖z⁺ - z*‖_M - ‖z - z*‖_M) / ‖z - z*‖_M` over measured steps.
    pub worst: f64,
    pub measured: usize,
    /// Steps where both distances sit below `1e-12·(1 + ‖z*‖)`, where
    /// round-off in the iterates dominates the distance itself.
    pub unresolved: usize,
}

/// `‖z⁺ - z*‖_M ≤ ‖z - z*‖_M` along `iters` PDHG steps from `z0`.
pub fn nonexpansive_violation(
    inst: &ClpInstance,
    steps: &StepSizes,
    z0: (&[f64], &[f64]),
    zstar: (&[f64], &[f64]),
    iters: usize,
) -> Result<NonexpansiveReport> {
    let dist = |x: &[f64], y: &[f64]| -> Result<f64> {
        let dx: Vec<f64> = x.iter().zip(zstar.0).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = y.iter().zip(zstar.1).map(|(a, b)| a - b).collect();
        crate::linalg::m_norm(&dx, &dy, steps.tau, steps.sigma, inst.a())
    };
    let floor = 1e-12 * (1.0 + norm(zstar.0) + norm(zstar.1));
    let (mut x, mut y) = (z0.0.to_vec(), z0.1.to_vec());
    let mut prev = dist(&x, &y)?;
    let mut rep = NonexpansiveReport::default();
    for _ in 0..iters {
        let (xn, yn) = one_pdhg(inst, &x, &y, steps)?;
        x = xn;
        y = yn;
        let d = dist(&x, &y)?;
        if prev.max(d) <= floor {
            rep.unresolved += 1;
        } else {
            rep.measured += 1;
            rep.worst = rep.worst.max((d - prev) / prev.max(floor));
        }
        prev = d;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::ConeSpec;
    use crate::linalg::SparseMatrix;
    use crate::model::{nu_family, relative_error};

    fn one_d() -> ClpInstance {
        ClpInstance::new("1d", SparseMatrix::from_dense(&[vec![1.0]]), vec![1.0], vec![0.0], ConeSpec::nonneg(1)).unwrap()
    }

    #[test]
    fn one_step_hand_arithmetic() {
        let s = StepSizes::new(0.5, 0.5, StepProvenance::Practical).unwrap();
        let (x, y) = one_pdhg(&one_d(), &[0.0], &[0.0], &s).unwrap();
        assert_eq!((x[0], y[0]), (0.0, 0.5));
    }

    #[test]
    fn saddle_point_is_fixed() {
        let s = StepSizes::new(0.5, 0.5, StepProvenance::Practical).unwrap();
        let (x, y) = one_pdhg(&one_d(), &[1.0], &[0.0], &s).unwrap();
        assert_eq!((x[0], y[0]), (1.0, 0.0));
    }

    #[test]
    fn theorem_steps_for_nu_family() {
        let s = default_step_sizes(&nu_family(1e-4)).unwrap();
        assert_eq!(s.provenance, StepProvenance::Theorem);
        assert!((s.tau - 1.0).abs() < 1e-12);
        assert!((s.sigma - 1.0 / 102.0).abs() < 1e-14);
        assert!((s.tau * s.sigma * 102.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn learned_pairs() {
        let p = learned_step_pairs(0.5);
        assert_eq!(p.len(), 5);
        assert!((p[2].tau - 1.0).abs() < 1e-15 && (p[2].sigma - 1.0).abs() < 1e-15);
        for s in &p {
            assert!((s.tau * s.sigma - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solved_start_restarts_once() {
        let inst = one_d();
        let s = StepSizes::new(0.5, 0.5, StepProvenance::Practical).unwrap();
        let r = solve_rpdhg(&inst, &s, &RpdhgOptions::default(), Some((&[1.0], &[0.0]))).unwrap();
        assert_eq!(r.status, Status::OptimalAtTolerance);
        assert_eq!(r.restarts, 1);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn converges_on_nu_family() {
        let inst = nu_family(1e-4);
        let s = default_step_sizes(&inst).unwrap();
        let r = solve_rpdhg(&inst, &s, &RpdhgOptions::theory(), None).unwrap();
        assert_eq!(r.status, Status::OptimalAtTolerance);
        assert!(relative_error(&inst, &r.x, &r.y) <= 1e-8);
        // optimum x = (0, 1, 0)
        assert!((r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn restart_gaps_shrink_by_beta() {
        let inst = nu_family(1e-4);
        let s = default_step_sizes(&inst).unwrap();
        let mut rhos = Vec::new();
        let mut hook = |a: &AnchorView| {
            rhos.push(a.rho);
            false
        };
        let hooks = Hooks { on_anchor: Some(&mut hook), ..Hooks::default() };
        solve_rpdhg_with(&inst, &s, &RpdhgOptions::theory(), None, hooks).unwrap();
        assert!(rhos.len() > 2);
        for w in rhos.windows(2).skip(1) {
            assert!(w[1] <= DEFAULT_BETA * w[0] * (1.0 + 1e-12), "{} > β·{}", w[1], w[0]);
        }
    }

    #[test]
    fn deterministic_traces() {
        let inst = nu_family(1e-2);
        let s = practical_step_sizes(&inst).unwrap();
        let a = solve_rpdhg(&inst, &s, &RpdhgOptions::default(), None).unwrap();
        let b = solve_rpdhg(&inst, &s, &RpdhgOptions::default(), None).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
        let ea: Vec<f64> = a.trace.iter().map(|t| t.e_r).collect();
        let eb: Vec<f64> = b.trace.iter().map(|t| t.e_r).collect();
        assert_eq!(ea, eb);
    }

    #[test]
    fn average_matches_stored_iterates() {
        let inst = nu_family(0.1);
        let s = practical_step_sizes(&inst).unwrap();
        let mut xs: Vec<Vec<f64>> = Vec::new();
        let mut worst = 0.0f64;
        let mut obs = |v: &IterView| {
            if v.outer == 1 {
                xs.push(v.x.to_vec());
                let mean: Vec<f64> = (0..3).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / xs.len() as f64).collect();
                for j in 0..3 {
                    worst = worst.max((mean[j] - v.xbar[j]).abs());
                }
            }
        };
        let opts = RpdhgOptions { flexible: false, max_iters: 300, eps_rel: 0.0, ..RpdhgOptions::default() };
        solve_rpdhg_with(&inst, &s, &opts, None, Hooks { observer: Some(&mut obs), ..Hooks::default() }).unwrap();
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn infeasible_problem_diverges_loudly() {
        // x1 + x2 = -1, x ≥ 0
        let inst = ClpInstance::new("inf", SparseMatrix::from_dense(&[vec![1.0, 1.0]]), vec![-1.0], vec![1.0, 1.0], ConeSpec::nonneg(2)).unwrap();
        let s = practical_step_sizes(&inst).unwrap();
        let opts = RpdhgOptions { divergence_factor: 1e3, max_iters: 1_000_000, ..RpdhgOptions::default() };
        assert!(matches!(solve_rpdhg(&inst, &s, &opts, None), Err(Error::Numerical(_))));
    }
}
