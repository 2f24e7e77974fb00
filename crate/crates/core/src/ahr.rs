//! rPDHG with adaptive Hessian rescaling: CP-CGM time slices of doubling
//! length produce interior points, each is turned into a rescaling, and a
//! short rPDHG run judges it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ipm::{cp_cgm, IpmBudget, IpmIterate, IpmState, IpmStatus, OPS_PER_SECOND};
use crate::model::{check_eps_tolerance, relative_error_parts, ClpInstance, ToleranceTriple};
use crate::pdhg::{
    learned_step_pairs, practical_step_sizes, select_learned_steps, solve_rpdhg_with, Hooks, RpdhgOptions,
    SolveResult, Status, StepSizes,
};
use crate::rescale::{
    build_rescaled, easy_column_rescaling, hessian_rescaling, ruiz_pc_rescaling, EtaMode, RescaledInstance,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Five-pair learning at round 1; the chosen primal weight is reused.
    Learned,
    Practical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhrConfig {
    pub t0: f64,
    pub omega: f64,
    pub eps: f64,
    pub eps_bar: f64,
    pub eps_hat: f64,
    /// Budgets in simulated seconds (matvec operations) instead of the wall clock.
    pub deterministic: bool,
    /// Compose the Hessian rescaling with Ruiz and Pock-Chambolle scaling.
    pub further_scaling: bool,
    pub step_rule: StepRule,
    pub learn_iters: usize,
    pub flexible: bool,
    pub max_rounds: usize,
    /// Cap on OnePDHG iterations over all phases.
    pub max_pdhg_iters: usize,
}

impl Default for AhrConfig {
    fn default() -> Self {
        Self::with_eps(1e-8)
    }
}

impl AhrConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            t0: 0.5,
            omega: 6.0,
            eps,
            eps_bar: eps.sqrt(),
            eps_hat: eps.powf(0.2),
            deterministic: true,
            further_scaling: true,
            step_rule: StepRule::Learned,
            learn_iters: 10_000,
            flexible: true,
            max_rounds: 20,
            max_pdhg_iters: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.eps && self.eps < self.eps_bar && self.eps_bar < self.eps_hat && self.eps_hat < 1.0) {
            return Err(Error::input("AHR tolerances need 0 < eps < eps_bar < eps_hat < 1"));
        }
        if !(self.t0 > 0.0 && self.omega > 0.0) {
            return Err(Error::input("AHR needs t0 > 0 and omega > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Continue,
    AcceptNew,
    Revert,
}

/// Exit tests of the round loop, kept free of any solver state.
#[derive(Clone, Debug)]
pub struct AhrController {
    eps_bar: f64,
    eps_hat: f64,
    prev: f64,
    round: usize,
}

impl AhrController {
    pub fn new(cfg: &AhrConfig) -> Self {
        Self { eps_bar: cfg.eps_bar, eps_hat: cfg.eps_hat, prev: f64::INFINITY, round: 0 }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// (a) `ε_k ≤ ε̄` accepts the new rescaling; (b) `ε_k > ε_{k-1}` with
    /// `ε_{k-1} ≤ ε̂` reverts to the previous one.
    pub fn decide(&mut self, eps_k: f64) -> Decision {
        self.round += 1;
        let d = if eps_k <= self.eps_bar {
            Decision::AcceptNew
        } else if eps_k > self.prev && self.prev <= self.eps_hat {
            Decision::Revert
        } else {
            Decision::Continue
        };
        self.prev = eps_k;
        d
    }

    /// Feeds a scripted sequence; returns the decisions and the round whose
    /// rescaling is kept (if the loop ended).
    pub fn replay(cfg: &AhrConfig, eps: &[f64]) -> (Vec<Decision>, Option<usize>) {
        let mut c = Self::new(cfg);
        let mut out = Vec::new();
        for &e in eps {
            let d = c.decide(e);
            out.push(d);
            match d {
                Decision::AcceptNew => return (out, Some(c.round)),
                Decision::Revert => return (out, Some(c.round - 1)),
                Decision::Continue => {}
            }
        }
        (out, None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhrRoundLog {
    pub round: usize,
    pub t_ipm_s: f64,
    pub ipm_mu: f64,
    pub eps_k: f64,
    pub decision: Decision,
}

pub fn round_log_csv(rows: &[AhrRoundLog]) -> String {
    let mut s = String::from("round,t_ipm_s,ipm_mu,eps_k,decision\n");
    for r in rows {
        let d = match r.decision {
            Decision::Continue => "continue",
            Decision::AcceptNew => "accept-new",
            Decision::Revert => "revert",
        };
        let _ = writeln!(s, "{},{:e},{:e},{:e},{}", r.round, r.t_ipm_s, r.ipm_mu, r.eps_k, d);
    }
    s
}

#[derive(Clone, Debug)]
pub struct AhrResult {
    /// Solution in the original variables; `iterations` counts the OnePDHG
    /// steps of all rounds and the final run, without step-size learning.
    pub result: SolveResult,
    pub rounds: Vec<AhrRoundLog>,
    /// Round whose rescaling was used for the final run (0 for the fallback).
    pub chosen_round: usize,
    pub fallback: bool,
    pub learn_iterations: usize,
    pub ipm_outer: usize,
    pub steps: Option<StepSizes>,
}

struct RoundData {
    resc: RescaledInstance,
    steps: StepSizes,
    res: SolveResult,
}

fn ipm_seconds(st: &IpmState, deterministic: bool) -> f64 {
    if deterministic {
        st.ops as f64 / OPS_PER_SECOND
    } else {
        st.elapsed_s
    }
}

/// rPDHG options for a run lasting `seconds` (simulated in deterministic mode).
fn timed_options(cfg: &AhrConfig, inst: &ClpInstance, seconds: f64, iter_cap: usize) -> RpdhgOptions {
    let mut opts = RpdhgOptions { eps_rel: cfg.eps, flexible: cfg.flexible, ..RpdhgOptions::default() };
    if cfg.deterministic {
        let per_iter = 2.0 * inst.a().nnz().max(1) as f64;
        let iters = (seconds * OPS_PER_SECOND / per_iter).ceil() as usize;
        opts.max_iters = iters.clamp(1, iter_cap.max(1));
    } else {
        opts.time_limit = Some(seconds);
        opts.max_iters = iter_cap.max(1);
    }
    opts
}

fn run_on(resc: &RescaledInstance, steps: &StepSizes, opts: &RpdhgOptions, z0: (&[f64], &[f64])) -> Result<SolveResult> {
    let mut mon = |x: &[f64], y: &[f64]| resc.original_error(x, y);
    let hooks = Hooks { error_monitor: Some(&mut mon), ..Hooks::default() };
    solve_rpdhg_with(&resc.instance, steps, opts, Some(z0), hooks)
}

/// Rescaled instance built from an IPM iterate (η = sᵀx, clipped).
pub fn rescaling_from_ipm(inst: &ClpInstance, it: &IpmIterate, further_scaling: bool) -> Result<RescaledInstance> {
    let r = hessian_rescaling(inst, &it.x, &it.s, EtaMode::Ahr, true)?;
    let r = if further_scaling { ruiz_pc_rescaling(inst, Some(r))? } else { r };
    build_rescaled(inst, &r, true)
}

/// Warm start: the φ-transform of the IPM iterate.
pub fn warm_start(resc: &RescaledInstance, it: &IpmIterate) -> (Vec<f64>, Vec<f64>) {
    resc.to_rescaled(&it.x, &it.y)
}

fn finish(original: &ClpInstance, resc: &RescaledInstance, res: SolveResult, iterations: usize, matvecs: usize, eps: f64) -> SolveResult {
    let p = resc.map_back(&res.x, &res.y, false);
    let error = relative_error_parts(original, &p.x, &p.y);
    let (_, mut quality) = check_eps_tolerance(original, &p.x, &p.s, &ToleranceTriple::uniform(eps), 0.0);
    quality.e_obj = None;
    quality.relative_error = Some(error.max());
    let status = if error.max() <= eps {
        Status::OptimalAtTolerance
    } else if res.status == Status::OptimalAtTolerance {
        Status::IterationLimit
    } else {
        res.status
    };
    SolveResult { x: p.x, y: p.y, s: p.s, status, iterations, error, quality, matvecs, ..res }
}

fn fallback(inst: &ClpInstance, cfg: &AhrConfig, rounds: Vec<AhrRoundLog>, ipm_outer: usize) -> Result<AhrResult> {
    log::warn!("AHR falls back to easy-column + Ruiz/Pock-Chambolle rescaling");
    let r = ruiz_pc_rescaling(inst, Some(easy_column_rescaling(inst)))?;
    let resc = build_rescaled(inst, &r, true)?;
    let steps = practical_step_sizes(&resc.instance)?;
    let opts = RpdhgOptions { eps_rel: cfg.eps, flexible: cfg.flexible, max_iters: cfg.max_pdhg_iters, ..RpdhgOptions::default() };
    let x0 = vec![0.0; inst.n()];
    let y0 = vec![0.0; inst.m()];
    let (x0, y0) = resc.to_rescaled(&x0, &y0);
    let res = run_on(&resc, &steps, &opts, (&x0, &y0))?;
    let (it, mv) = (res.iterations, res.matvecs);
    Ok(AhrResult {
        result: finish(inst, &resc, res, it, mv, cfg.eps),
        rounds,
        chosen_round: 0,
        fallback: true,
        learn_iterations: 0,
        ipm_outer,
        steps: Some(steps),
    })
}

/// Runs the adaptive scheme to `cfg.eps` relative error on `inst`.
pub fn solve_ahr(inst: &ClpInstance, cfg: &AhrConfig) -> Result<AhrResult> {
    cfg.validate()?;
    if !inst.cone().is_lp() {
        return fallback(inst, cfg, vec![], 0);
    }
    let mut ctl = AhrController::new(cfg);
    let mut t = cfg.t0;
    let mut state: Option<IpmState> = None;
    let mut rounds = Vec::new();
    let mut prev: Option<RoundData> = None;
    let mut used_iters = 0usize;
    let mut matvecs = 0usize;
    let mut learn_iterations = 0usize;
    let mut weight: Option<f64> = None;

    loop {
        let k = ctl.round() + 1;
        let run = match cp_cgm(inst, &IpmBudget::seconds(t, cfg.deterministic), state.take()) {
            Ok(r) => r,
            Err(Error::Unsupported(_)) if k == 1 => return fallback(inst, cfg, rounds, 0),
            Err(e) => return Err(e),
        };
        if k == 1 && matches!(run.status, IpmStatus::Stalled | IpmStatus::LostInteriority) {
            return fallback(inst, cfg, rounds, run.state.outer);
        }
        let resc = match rescaling_from_ipm(inst, &run.iterate, cfg.further_scaling) {
            Ok(r) => r,
            Err(_) if k == 1 => return fallback(inst, cfg, rounds, run.state.outer),
            Err(e) => return Err(e),
        };
        let (x0, y0) = warm_start(&resc, &run.iterate);
        let lam = resc.instance.spectra()?.lambda_max;
        let steps = match (cfg.step_rule, weight) {
            (StepRule::Practical, _) => practical_step_sizes(&resc.instance)?,
            (StepRule::Learned, Some(f)) => StepSizes { tau: f / (2.0 * lam), sigma: 1.0 / (2.0 * f * lam), ..learned_step_pairs(lam)[0] },
            (StepRule::Learned, None) => {
                let (s, _) = select_learned_steps(&resc.instance, Some((&x0, &y0)), cfg.learn_iters, cfg.flexible)?;
                learn_iterations += 5 * cfg.learn_iters;
                weight = Some(s.tau * 2.0 * lam);
                s
            }
        };
        let opts = timed_options(cfg, &resc.instance, cfg.omega * t, cfg.max_pdhg_iters.saturating_sub(used_iters));
        let res = run_on(&resc, &steps, &opts, (&x0, &y0))?;
        used_iters += res.iterations;
        matvecs += res.matvecs;
        let eps_k = res.error.max();
        let decision = if k >= cfg.max_rounds || used_iters >= cfg.max_pdhg_iters {
            if prev.as_ref().is_some_and(|p| p.res.error.max() < eps_k) { Decision::Revert } else { Decision::AcceptNew }
        } else {
            ctl.decide(eps_k)
        };
        rounds.push(AhrRoundLog { round: k, t_ipm_s: ipm_seconds(&run.state, cfg.deterministic), ipm_mu: run.iterate.mu, eps_k, decision });
        log::info!("AHR round {k}: ipm mu {:e}, eps_k {eps_k:e}, {decision:?}", run.iterate.mu);
        let ipm_outer = run.state.outer;
        state = Some(run.state);
        t *= 2.0;
        let this = RoundData { resc, steps, res };
        let (chosen, chosen_round) = match decision {
            Decision::Continue => {
                prev = Some(this);
                continue;
            }
            Decision::AcceptNew => (this, k),
            Decision::Revert => (prev.take().expect("revert needs a previous round"), k - 1),
        };
        let RoundData { resc, steps, res } = chosen;
        let res = if res.status == Status::OptimalAtTolerance {
            res
        } else {
            let opts = RpdhgOptions {
                eps_rel: cfg.eps,
                flexible: cfg.flexible,
                max_iters: cfg.max_pdhg_iters.saturating_sub(used_iters).max(1),
                ..RpdhgOptions::default()
            };
            let r = run_on(&resc, &steps, &opts, (&res.x, &res.y))?;
            used_iters += r.iterations;
            matvecs += r.matvecs;
            r
        };
        return Ok(AhrResult {
            result: finish(inst, &resc, res, used_iters, matvecs, cfg.eps),
            rounds,
            chosen_round,
            fallback: false,
            learn_iterations,
            ipm_outer,
            steps: Some(steps),
        });
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealEntry {
    pub budget_s: f64,
    pub ipm_time_s: f64,
    pub ipm_mu: f64,
    pub eta: f64,
    pub pdhg_iterations: usize,
    pub pdhg_time_s: f64,
    pub rel_error: f64,
    pub reached: bool,
    pub total_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealReport {
    pub instance: String,
    pub eps: f64,
    pub entries: Vec<IdealEntry>,
    /// Index of the entry with the smallest `t_i + t̂_i` among those that reached the target.
    pub best: Option<usize>,
}

/// Budgets `t_i = 2^i/4` for `i = 1..=count`.
pub fn ideal_budgets(count: usize) -> Vec<f64> {
    (1..=count).map(|i| 2f64.powi(i as i32) / 4.0).collect()
}

/// For each CP-CGM budget: rescale at the resulting iterate and time a
/// warm-started rPDHG solve to `cfg.eps`.
pub fn ideal_sweep(inst: &ClpInstance, cfg: &AhrConfig, budgets: &[f64]) -> Result<IdealReport> {
    cfg.validate()?;
    let mut entries = Vec::with_capacity(budgets.len());
    for &b in budgets {
        let run = cp_cgm(inst, &IpmBudget::seconds(b, cfg.deterministic), None)?;
        let resc = rescaling_from_ipm(inst, &run.iterate, cfg.further_scaling)?;
        let (x0, y0) = warm_start(&resc, &run.iterate);
        let steps = match cfg.step_rule {
            StepRule::Practical => practical_step_sizes(&resc.instance)?,
            StepRule::Learned => select_learned_steps(&resc.instance, Some((&x0, &y0)), cfg.learn_iters, cfg.flexible)?.0,
        };
        let opts = RpdhgOptions { eps_rel: cfg.eps, flexible: cfg.flexible, max_iters: cfg.max_pdhg_iters, ..RpdhgOptions::default() };
        let res = run_on(&resc, &steps, &opts, (&x0, &y0))?;
        let ipm_time_s = ipm_seconds(&run.state, cfg.deterministic);
        let pdhg_time_s = if cfg.deterministic {
            res.matvecs as f64 * resc.instance.a().nnz().max(1) as f64 / OPS_PER_SECOND
        } else {
            res.wall_time_s
        };
        entries.push(IdealEntry {
            budget_s: b,
            ipm_time_s,
            ipm_mu: run.iterate.mu,
            eta: resc.rescaling.eta.unwrap_or(f64::NAN),
            pdhg_iterations: res.iterations,
            pdhg_time_s,
            rel_error: res.error.max(),
            reached: res.status == Status::OptimalAtTolerance,
            total_s: ipm_time_s + pdhg_time_s,
        });
    }
    let best = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.reached)
        .min_by(|a, b| a.1.total_s.total_cmp(&b.1.total_s))
        .map(|(i, _)| i);
    Ok(IdealReport { instance: inst.name().to_string(), eps: cfg.eps, entries, best })
}
