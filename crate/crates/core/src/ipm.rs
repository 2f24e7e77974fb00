//! CP-CGM: Mehrotra predictor-corrector interior-point method for LPs whose
//! normal equations are solved by Jacobi-preconditioned CG.

use std::cell::Cell;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::linalg::{cg_solve, cg_solve_with, dot, norm, ruiz_scaling, SparseMatrix};
use crate::model::{relative_error_parts, ClpInstance};
use crate::{Error, Result};

pub const STATE_VERSION: u32 = 1;
/// Matvec multiply-adds per simulated second in deterministic mode.
pub const OPS_PER_SECOND: f64 = 1e8;
pub const STEP_DAMPING: f64 = 0.9;
pub const CENTERING_EXPONENT: i32 = 3;
pub const RUIZ_ITERS: usize = 10;
pub const START_CG_ITERS: usize = 1000;
pub const STALL_LIMIT: usize = 5;
/// Relative error at which the method stops on its own.
pub const CONVERGED_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpmIterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub mu: f64,
    pub rel_error: f64,
    pub outer: usize,
    pub wall_time_s: f64,
    pub ops: u64,
}

/// Limits for one call. Time and outer-iteration limits add to the
/// allowance carried in the state, so that resumed runs are equivalent to
/// one longer run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpmBudget {
    pub time_limit_s: Option<f64>,
    pub max_outer: Option<usize>,
    pub target_rel_error: Option<f64>,
    /// Measure time in matvec operations (`OPS_PER_SECOND`) instead of the wall clock.
    pub deterministic: bool,
}

impl IpmBudget {
    pub fn seconds(t: f64, deterministic: bool) -> Self {
        Self { time_limit_s: Some(t), max_outer: None, target_rel_error: None, deterministic }
    }

    pub fn outer(k: usize) -> Self {
        Self { time_limit_s: None, max_outer: Some(k), target_rel_error: None, deterministic: true }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_rel_error = Some(target);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.time_limit_s.is_none() && self.max_outer.is_none() && self.target_rel_error.is_none() {
            return Err(Error::input("IPM budget needs at least one limit"));
        }
        if let Some(t) = self.time_limit_s {
            if !(t >= 0.0) {
                return Err(Error::input("IPM time limit must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpmStatus {
    TargetReached,
    Converged,
    BudgetExhausted,
    Stalled,
    LostInteriority,
}

/// Serializable solver state; all vectors live in the Ruiz-scaled space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpmState {
    pub version: u32,
    pub m: usize,
    pub n: usize,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub mu: f64,
    pub rel_error: f64,
    pub outer: usize,
    pub ops: u64,
    pub elapsed_s: f64,
    pub allowance_ops: f64,
    pub allowance_s: f64,
    pub allowance_outer: usize,
    pub best_mu: f64,
    pub stall: usize,
    pub lost_interiority: bool,
}

impl IpmState {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let st: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if st.version != STATE_VERSION {
            return Err(Error::input(format!("IPM state version {} (expected {STATE_VERSION})", st.version)));
        }
        Ok(st)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpmLogRow {
    pub outer: usize,
    pub mu: f64,
    pub rel_error: f64,
    pub sigma: f64,
    pub alpha_primal: f64,
    pub alpha_dual: f64,
    pub cg_iters: [usize; 2],
    /// Both CG solves met the residual rule or used the full `m` iterations.
    pub cg_rule_ok: bool,
}

#[derive(Clone, Debug)]
pub struct IpmRun {
    pub iterate: IpmIterate,
    pub state: IpmState,
    pub status: IpmStatus,
    pub log: Vec<IpmLogRow>,
}

struct Scaled {
    a: SparseMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    ops: Cell<u64>,
}

impl Scaled {
    fn new(inst: &ClpInstance, row: &[f64], col: &[f64]) -> Self {
        Self {
            a: inst.a().scale(row, col),
            b: inst.b().iter().zip(row).map(|(v, r)| v * r).collect(),
            c: inst.c().iter().zip(col).map(|(v, d)| v * d).collect(),
            ops: Cell::new(0),
        }
    }

    fn count(&self) {
        self.ops.set(self.ops.get() + self.a.nnz().max(1) as u64);
    }

    fn av(&self, x: &[f64]) -> Vec<f64> {
        self.count();
        self.a.spmv(x).expect("dims")
    }

    fn atv(&self, y: &[f64]) -> Vec<f64> {
        self.count();
        self.a.spmv_t(y).expect("dims")
    }

    /// `(AAᵀ)⁻¹v` by CG.
    fn gram_solve(&self, v: &[f64]) -> Vec<f64> {
        let diag: Vec<f64> = (0..self.a.nrows()).map(|i| dot(self.a.row(i).1, self.a.row(i).1)).collect();
        let mut tmp = vec![0.0; self.a.ncols()];
        cg_solve(
            |p, out| {
                self.count();
                self.count();
                self.a.spmv_t_into(p, &mut tmp);
                self.a.spmv_into(&tmp, out);
            },
            v,
            Some(&diag),
            1e-13,
            START_CG_ITERS,
        )
        .x
    }
}

fn starting_point(sc: &Scaled) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let u = sc.gram_solve(&sc.b);
    let mut x = sc.atv(&u);
    let ac = sc.av(&sc.c);
    let y = sc.gram_solve(&ac);
    let aty = sc.atv(&y);
    let mut s: Vec<f64> = sc.c.iter().zip(&aty).map(|(c, v)| c - v).collect();
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let dx = (-1.5 * min(&x)).max(0.0);
    let ds = (-1.5 * min(&s)).max(0.0);
    x.iter_mut().for_each(|v| *v += dx);
    s.iter_mut().for_each(|v| *v += ds);
    let xs = dot(&x, &s);
    let sx: f64 = x.iter().sum();
    let ss: f64 = s.iter().sum();
    if ss > 0.0 && sx > 0.0 {
        let dx2 = 0.5 * xs / ss;
        let ds2 = 0.5 * xs / sx;
        x.iter_mut().for_each(|v| *v += dx2);
        s.iter_mut().for_each(|v| *v += ds2);
    }
    let floor = |v: &mut Vec<f64>| {
        let scale = v.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        v.iter_mut().for_each(|t| {
            if !(*t > 1e-2 * scale) || !t.is_finite() {
                *t = 1e-2 * scale;
            }
        });
    };
    floor(&mut x);
    floor(&mut s);
    (x, y, s)
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter().zip(dv).filter(|(_, d)| **d < 0.0).map(|(a, d)| -a / d).fold(1.0, f64::min)
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    cg_iters: usize,
    rule_ok: bool,
}

/// Solves `AD²AᵀΔy = -r_b - AD²r_c + AS⁻¹r_xs`, then recovers `Δs`, `Δx`.
fn direction(sc: &Scaled, x: &[f64], s: &[f64], rb: &[f64], rc: &[f64], rxs: &[f64], k: usize) -> Direction {
    let m = sc.a.nrows();
    let d2: Vec<f64> = x.iter().zip(s).map(|(a, b)| a / b).collect();
    let t: Vec<f64> = (0..x.len()).map(|j| rxs[j] / s[j] - d2[j] * rc[j]).collect();
    let at = sc.av(&t);
    let rhs: Vec<f64> = rb.iter().zip(&at).map(|(r, v)| -r + v).collect();
    let diag: Vec<f64> = (0..m)
        .map(|i| {
            let (cols, vals) = sc.a.row(i);
            cols.iter().zip(vals).map(|(&j, &v)| v * v * d2[j]).sum()
        })
        .collect();
    let kkt = (dot(rb, rb) + dot(rc, rc) + dot(rxs, rxs)).sqrt();
    let tol = 0.1 / (k as f64).sqrt() * kkt;
    let mut tmp = vec![0.0; x.len()];
    let res = cg_solve_with(
        |p, out| {
            sc.count();
            sc.count();
            sc.a.spmv_t_into(p, &mut tmp);
            tmp.iter_mut().zip(&d2).for_each(|(v, d)| *v *= d);
            sc.a.spmv_into(&tmp, out);
        },
        &rhs,
        Some(&diag),
        None,
        m.max(1),
        |_, r| r <= tol,
    );
    let rule_ok = res.residual <= tol * (1.0 + 1e-12) || res.iterations >= m;
    let dy = res.x;
    let atdy = sc.atv(&dy);
    let ds: Vec<f64> = rc.iter().zip(&atdy).map(|(r, v)| -r - v).collect();
    let dx: Vec<f64> = (0..x.len()).map(|j| -rxs[j] / s[j] - d2[j] * ds[j]).collect();
    Direction { dx, dy, ds, cg_iters: res.iterations, rule_ok }
}

fn unscale(st: &IpmState, x: &[f64], y: &[f64], s: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        x.iter().zip(&st.col_scale).map(|(v, d)| v * d).collect(),
        y.iter().zip(&st.row_scale).map(|(v, r)| v * r).collect(),
        s.iter().zip(&st.col_scale).map(|(v, d)| v / d).collect(),
    )
}

fn measure(inst: &ClpInstance, st: &IpmState, sc: &Scaled, x: &[f64], y: &[f64], s: &[f64]) -> f64 {
    let (xo, yo, _) = unscale(st, x, y, s);
    sc.count();
    sc.count();
    relative_error_parts(inst, &xo, &yo).max()
}

fn iterate_of(st: &IpmState) -> IpmIterate {
    let (x, y, s) = unscale(st, &st.x, &st.y, &st.s);
    IpmIterate { x, y, s, mu: st.mu, rel_error: st.rel_error, outer: st.outer, wall_time_s: st.elapsed_s, ops: st.ops }
}

/// Fresh state: Ruiz scaling and the least-squares starting point.
pub fn initial_state(inst: &ClpInstance) -> Result<IpmState> {
    if !inst.cone().is_lp() {
        return Err(Error::Unsupported("CP-CGM handles nonnegative cones only".into()));
    }
    let sc0 = ruiz_scaling(inst.a(), RUIZ_ITERS);
    let sc = Scaled::new(inst, &sc0.row_scale, &sc0.col_scale);
    let (x, y, s) = starting_point(&sc);
    let n = inst.n().max(1) as f64;
    let mu = dot(&x, &s) / n;
    let mut st = IpmState {
        version: STATE_VERSION,
        m: inst.m(),
        n: inst.n(),
        row_scale: sc0.row_scale,
        col_scale: sc0.col_scale,
        x,
        y,
        s,
        mu,
        rel_error: f64::INFINITY,
        outer: 0,
        ops: 0,
        elapsed_s: 0.0,
        allowance_ops: 0.0,
        allowance_s: 0.0,
        allowance_outer: 0,
        best_mu: mu,
        stall: 0,
        lost_interiority: false,
    };
    st.rel_error = measure(inst, &st, &sc, &st.x, &st.y, &st.s);
    st.ops = sc.ops.get();
    Ok(st)
}

/// Runs CP-CGM from `resume` (or a fresh start) until a limit in `budget`
/// is hit. The returned iterate is expressed in the original variables.
pub fn cp_cgm(inst: &ClpInstance, budget: &IpmBudget, resume: Option<IpmState>) -> Result<IpmRun> {
    budget.validate()?;
    let mut st = match resume {
        Some(st) => {
            if st.m != inst.m() || st.n != inst.n() {
                return Err(Error::input("IPM state does not match the instance dimensions"));
            }
            if !inst.cone().is_lp() {
                return Err(Error::Unsupported("CP-CGM handles nonnegative cones only".into()));
            }
            st
        }
        None => initial_state(inst)?,
    };
    let clock = Instant::now();
    let elapsed0 = st.elapsed_s;
    if let Some(t) = budget.time_limit_s {
        if budget.deterministic {
            st.allowance_ops += t * OPS_PER_SECOND;
        } else {
            st.allowance_s += t;
        }
    }
    if let Some(k) = budget.max_outer {
        st.allowance_outer = st.outer + k;
    }
    let sc = Scaled::new(inst, &st.row_scale, &st.col_scale);
    sc.ops.set(st.ops);
    let n = inst.n().max(1) as f64;
    let mut log = Vec::new();

    let status = loop {
        st.elapsed_s = elapsed0 + clock.elapsed().as_secs_f64();
        if st.lost_interiority {
            break IpmStatus::LostInteriority;
        }
        if let Some(t) = budget.target_rel_error {
            if st.rel_error <= t {
                break IpmStatus::TargetReached;
            }
        }
        if st.rel_error <= CONVERGED_TOL {
            break IpmStatus::Converged;
        }
        if st.stall >= STALL_LIMIT {
            break IpmStatus::Stalled;
        }
        if budget.time_limit_s.is_some() {
            let out = if budget.deterministic {
                st.ops as f64 >= st.allowance_ops
            } else {
                st.elapsed_s >= st.allowance_s
            };
            if out {
                break IpmStatus::BudgetExhausted;
            }
        }
        if budget.max_outer.is_some() && st.outer >= st.allowance_outer {
            break IpmStatus::BudgetExhausted;
        }

        let k = st.outer + 1;
        let (x, y, s) = (&st.x, &st.y, &st.s);
        let ax = sc.av(x);
        let aty = sc.atv(y);
        let rb: Vec<f64> = ax.iter().zip(&sc.b).map(|(u, v)| u - v).collect();
        let rc: Vec<f64> = (0..x.len()).map(|j| aty[j] + s[j] - sc.c[j]).collect();
        let mu = dot(x, s) / n;

        let rxs: Vec<f64> = x.iter().zip(s).map(|(a, b)| a * b).collect();
        let aff = direction(&sc, x, s, &rb, &rc, &rxs, k);
        let ap = max_step(x, &aff.dx);
        let ad = max_step(s, &aff.ds);
        let mu_aff = (0..x.len()).map(|j| (x[j] + ap * aff.dx[j]) * (s[j] + ad * aff.ds[j])).sum::<f64>() / n;
        let sigma = (mu_aff / mu).max(0.0).powi(CENTERING_EXPONENT).min(1.0);

        let rxs2: Vec<f64> = (0..x.len()).map(|j| rxs[j] + aff.dx[j] * aff.ds[j] - sigma * mu).collect();
        let cor = direction(&sc, x, s, &rb, &rc, &rxs2, k);
        let alpha_p = (STEP_DAMPING * max_step(x, &cor.dx)).min(1.0);
        let alpha_d = (STEP_DAMPING * max_step(s, &cor.ds)).min(1.0);

        let xn: Vec<f64> = (0..x.len()).map(|j| x[j] + alpha_p * cor.dx[j]).collect();
        let sn: Vec<f64> = (0..x.len()).map(|j| s[j] + alpha_d * cor.ds[j]).collect();
        let yn: Vec<f64> = (0..y.len()).map(|i| y[i] + alpha_d * cor.dy[i]).collect();
        let interior = xn.iter().chain(&sn).all(|v| *v > 0.0 && v.is_finite()) && yn.iter().all(|v| v.is_finite());
        if !interior {
            log::warn!("CP-CGM lost interiority at outer iteration {k}");
            st.lost_interiority = true;
            st.ops = sc.ops.get();
            continue;
        }
        let mu_new = dot(&xn, &sn) / n;
        let rel = measure(inst, &st, &sc, &xn, &yn, &sn);
        if mu_new < st.best_mu {
            st.best_mu = mu_new;
            st.stall = 0;
        } else {
            st.stall += 1;
        }
        st.x = xn;
        st.y = yn;
        st.s = sn;
        st.mu = mu_new;
        st.rel_error = rel;
        st.outer = k;
        st.ops = sc.ops.get();
        log.push(IpmLogRow {
            outer: k,
            mu: mu_new,
            rel_error: rel,
            sigma,
            alpha_primal: alpha_p,
            alpha_dual: alpha_d,
            cg_iters: [aff.cg_iters, cor.cg_iters],
            cg_rule_ok: aff.rule_ok && cor.rule_ok,
        });
    };
    st.elapsed_s = elapsed0 + clock.elapsed().as_secs_f64();
    Ok(IpmRun { iterate: iterate_of(&st), state: st, status, log })
}

/// First iterate with relative error `≤ delta`. If the budget runs out
/// first, the iterate with the smallest relative error seen is returned
/// and the status is not `TargetReached`.
pub fn interior_point_at_gap(inst: &ClpInstance, delta: f64, limits: &IpmBudget) -> Result<IpmRun> {
    if !(delta > 0.0) {
        return Err(Error::input("target relative error must be positive"));
    }
    let mut state = initial_state(inst)?;
    let mut best = iterate_of(&state);
    let mut log = Vec::new();
    let step = IpmBudget { time_limit_s: None, max_outer: Some(1), target_rel_error: Some(delta), deterministic: true };
    loop {
        let out_of_budget = limits.max_outer.is_some_and(|k| state.outer >= k)
            || limits.time_limit_s.is_some_and(|t| {
                if limits.deterministic {
                    state.ops as f64 >= t * OPS_PER_SECOND
                } else {
                    state.elapsed_s >= t
                }
            });
        let run = if out_of_budget {
            IpmRun { iterate: iterate_of(&state), state: state.clone(), status: IpmStatus::BudgetExhausted, log: vec![] }
        } else {
            cp_cgm(inst, &step, Some(state))?
        };
        log.extend(run.log);
        if run.iterate.rel_error < best.rel_error {
            best = run.iterate.clone();
        }
        state = run.state;
        match run.status {
            IpmStatus::TargetReached => return Ok(IpmRun { iterate: run.iterate, state, status: run.status, log }),
            IpmStatus::BudgetExhausted if !out_of_budget => continue,
            status => {
                log::warn!("CP-CGM stopped ({status:?}) before reaching relative error {delta:e}");
                return Ok(IpmRun { iterate: best, state, status, log });
            }
        }
    }
}

/// `‖Ax - b‖` relative to `1 + ‖b‖` for an IPM iterate.
pub fn primal_residual(inst: &ClpInstance, x: &[f64]) -> f64 {
    let ax = inst.a().spmv(x).expect("dims");
    let r: Vec<f64> = ax.iter().zip(inst.b()).map(|(u, v)| u - v).collect();
    norm(&r) / (1.0 + norm(inst.b()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::ConeSpec;
    use crate::model::nu_family;
    use crate::rescale::{hessian_rescaling, EtaMode};

    fn toy() -> ClpInstance {
        ClpInstance::new("toy", SparseMatrix::from_dense(&[vec![1.0, 1.0]]), vec![1.0], vec![1.0, 0.0], ConeSpec::nonneg(2))
            .unwrap()
    }

    #[test]
    fn toy_lp_converges_with_decreasing_mu() {
        let run = cp_cgm(&toy(), &IpmBudget::seconds(1.0, true), None).unwrap();
        assert!(matches!(run.status, IpmStatus::Converged), "{:?}", run.status);
        assert!(run.iterate.rel_error <= 1e-6);
        assert!((run.iterate.x[1] - 1.0).abs() < 1e-6 && run.iterate.x[0].abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for r in &run.log {
            assert!(r.mu < prev);
            assert!(r.cg_rule_ok);
            prev = r.mu;
        }
        assert!(run.iterate.x.iter().chain(&run.iterate.s).all(|v| *v > 0.0));
    }

    #[test]
    fn resume_matches_single_run() {
        let inst = nu_family(1e-4);
        let t = 2e-6;
        let one = cp_cgm(&inst, &IpmBudget::seconds(2.0 * t, true), None).unwrap();
        let a = cp_cgm(&inst, &IpmBudget::seconds(t, true), None).unwrap();
        assert!(a.state.outer < one.state.outer, "{} {}", a.state.outer, one.state.outer);
        let json = serde_json::to_string(&a.state).unwrap();
        let back: IpmState = serde_json::from_str(&json).unwrap();
        let b = cp_cgm(&inst, &IpmBudget::seconds(t, true), Some(back)).unwrap();
        assert_eq!(b.state.outer, one.state.outer);
        assert_eq!(b.iterate.x, one.iterate.x);
        assert_eq!(b.iterate.y, one.iterate.y);
        assert_eq!(b.state.ops, one.state.ops);
    }

    #[test]
    fn nu_family_stays_interior_with_decreasing_gap() {
        let run = cp_cgm(&nu_family(1e-4), &IpmBudget::outer(30), None).unwrap();
        let mut prev = f64::INFINITY;
        for r in &run.log {
            assert!(r.mu < prev);
            prev = r.mu;
        }
        assert!(run.iterate.x.iter().all(|v| *v > 0.0));
        assert!(run.iterate.rel_error < 1e-6);
    }

    #[test]
    fn central_delta_points() {
        let inst = nu_family(1e-4);
        let lim = IpmBudget::outer(100);
        let loose = interior_point_at_gap(&inst, 0.5, &lim).unwrap();
        let tight = interior_point_at_gap(&inst, 0.01, &lim).unwrap();
        assert_eq!(loose.status, IpmStatus::TargetReached);
        assert_eq!(tight.status, IpmStatus::TargetReached);
        assert!(loose.iterate.outer <= 3);
        assert!(tight.iterate.rel_error <= loose.iterate.rel_error);
        assert!(tight.iterate.rel_error <= 0.01);
        for p in [&loose.iterate, &tight.iterate] {
            hessian_rescaling(&inst, &p.x, &p.s, EtaMode::Theory, false).unwrap();
        }
    }

    #[test]
    fn soc_is_unsupported() {
        let inst = ClpInstance::new("s", SparseMatrix::from_dense(&[vec![1.0, 0.0, 0.0]]), vec![1.0], vec![1.0, 0.0, 0.0], ConeSpec::soc(3))
            .unwrap();
        assert!(matches!(cp_cgm(&inst, &IpmBudget::outer(3), None), Err(Error::Unsupported(_))));
    }

    #[test]
    fn budget_needs_a_limit() {
        let b = IpmBudget { time_limit_s: None, max_outer: None, target_rel_error: None, deterministic: true };
        assert!(cp_cgm(&toy(), &b, None).is_err());
    }

    #[test]
    fn state_file_round_trip() {
        let run = cp_cgm(&toy(), &IpmBudget::outer(2), None).unwrap();
        let dir = std::env::temp_dir().join(format!("ipm_state_{}.json", std::process::id()));
        run.state.save(&dir).unwrap();
        let back = IpmState::load(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(back, run.state);
    }
}
