//! Command-line front end: `solve`, `analyze` and `bench`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use clp_core::ahr::{ideal_budgets, ideal_sweep, solve_ahr, AhrConfig, StepRule};
use clp_core::geolab::{delta_grid, sweep_csv, GeometryReport, LpGeometry, SandwichCheck, SweepRow};
use clp_core::ipm::{cp_cgm, IpmBudget, IpmState, IpmStatus};
use clp_core::model::{
    nu_family, project_c_to_nullspace, read_instance_json, read_mps, relative_error, to_standard_form, ClpInstance,
    StandardForm, ToleranceTriple,
};
use clp_core::pdhg::{
    default_step_sizes, practical_step_sizes, select_learned_steps, solve_rpdhg_with, Hooks, RpdhgOptions, Status,
    StepSizes, TraceRow,
};
use clp_core::rescale::{
    build_rescaled, central_delta_rescaling, easy_column_rescaling, ruiz_pc_rescaling, with_row_transform, D2Choice,
    Rescaling,
};

pub const SCHEMA_VERSION: u32 = 1;
/// Worker count for `bench`.
pub const WORKERS_ENV: &str = "CLP_WORKERS";
/// Solved flag threshold in bench rows.
pub const BENCH_SOLVED_TOL: f64 = 1e-8;
const LEARN_ITERS: usize = 10_000;
const CENTRAL_IPM_OUTER: usize = 200;
const DEFAULT_TIME_LIMIT: f64 = 600.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_LIMIT: i32 = 2;

#[derive(Parser, Debug, Clone)]
#[command(name = "clp", version, about = "Restarted PDHG for conic linear programs, with geometry analysis")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Replace every time budget by an operation-count budget.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Solve one instance and write the solution JSON
    Solve(SolveArgs),
    /// Geometry report (κ, δ̄, D, r, bounds) and optional δ-sweep
    Analyze(AnalyzeArgs),
    /// Run several methods over a directory of instances
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rpdhg,
    RpdhgAhr,
    CpCgm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum D2Arg {
    Identity,
    Complete,
    RuizPc,
}

impl From<D2Arg> for D2Choice {
    fn from(d: D2Arg) -> Self {
        match d {
            D2Arg::Identity => D2Choice::Identity,
            D2Arg::Complete => D2Choice::Complete,
            D2Arg::RuizPc => D2Choice::RuizPc,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepArg {
    Theory,
    Practical,
    Learned,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RescalingArg {
    None,
    EasyColumn,
    RuizPc,
    /// Central-δ: Hessian rescaling at an interior point with gap about δ.
    Hessian(f64),
    Ahr,
}

impl FromStr for RescalingArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "easy-column" => Ok(Self::EasyColumn),
            "ruiz-pc" => Ok(Self::RuizPc),
            "ahr" => Ok(Self::Ahr),
            _ => {
                let Some(v) = s.strip_prefix("hessian:") else {
                    return Err(format!("unknown rescaling '{s}' (none, easy-column, ruiz-pc, hessian:<delta>, ahr)"));
                };
                let d: f64 = v.parse().map_err(|_| format!("bad delta in '{s}'"))?;
                if !(d > 0.0 && d.is_finite()) {
                    return Err(format!("delta must be positive in '{s}'"));
                }
                Ok(Self::Hessian(d))
            }
        }
    }
}

impl fmt::Display for RescalingArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => write!(f, "none"),
            Self::EasyColumn => write!(f, "easy-column"),
            Self::RuizPc => write!(f, "ruiz-pc"),
            Self::Hessian(d) => write!(f, "hessian:{d}"),
            Self::Ahr => write!(f, "ahr"),
        }
    }
}

fn parse_triple(s: &str) -> Result<ToleranceTriple, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v.as_slice() {
        [e] => Ok(ToleranceTriple::uniform(*e)),
        [a, b, c] => ToleranceTriple::new(*a, *b, *c).map_err(|e| e.to_string()),
        _ => Err("expected one value or eps_cons,eps_gap,eps_obj".into()),
    }
}

/// Settings shared by `solve` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "rpdhg")]
    pub method: Method,
    /// none | easy-column | ruiz-pc | hessian:<delta> | ahr
    #[arg(long, default_value = "none")]
    pub rescaling: RescalingArg,
    #[arg(long, value_enum, default_value = "identity")]
    pub d2: D2Arg,
    #[arg(long, value_enum)]
    pub steps: Option<StepArg>,
    #[arg(long, default_value_t = 1e-8)]
    pub eps_rel: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Seconds (simulated seconds with --deterministic).
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Initial CP-CGM budget of the AHR driver.
    #[arg(long, default_value_t = 0.5)]
    pub t0: f64,
    /// CP-CGM stopping target on the relative error.
    #[arg(long)]
    pub target: Option<f64>,
}

impl SolverArgs {
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.eps_rel > 0.0) {
            bail!("--eps-rel must be positive");
        }
        match (self.method, self.rescaling) {
            (Method::Rpdhg, RescalingArg::Ahr) => bail!("--rescaling ahr needs --method rpdhg-ahr"),
            (Method::RpdhgAhr, RescalingArg::None | RescalingArg::Ahr) => {}
            (Method::RpdhgAhr, r) => bail!("--method rpdhg-ahr chooses its own rescaling (got {r})"),
            (Method::CpCgm, RescalingArg::None) => {}
            (Method::CpCgm, r) => bail!("--method cp-cgm does not take a rescaling (got {r})"),
            _ => {}
        }
        if self.method != Method::Rpdhg && self.d2 != D2Arg::Identity {
            bail!("--d2 applies to --method rpdhg only");
        }
        if self.target.is_some() && self.method != Method::CpCgm {
            bail!("--target applies to --method cp-cgm only");
        }
        if self.method == Method::CpCgm && self.steps.is_some() {
            bail!("--steps does not apply to --method cp-cgm");
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.method {
            Method::Rpdhg => format!("rpdhg/{}/{}", self.rescaling, d2_name(self.d2)),
            Method::RpdhgAhr => "rpdhg-ahr".into(),
            Method::CpCgm => "cp-cgm".into(),
        }
    }
}

fn d2_name(d: D2Arg) -> &'static str {
    match d {
        D2Arg::Identity => "identity",
        D2Arg::Complete => "complete",
        D2Arg::RuizPc => "ruiz-pc",
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// MPS file, instance JSON, or `nu:<value>` for the built-in three-variable family.
    pub input: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Solution JSON path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restart trace CSV path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Resumable CP-CGM state file.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Resume CP-CGM from a saved state.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    pub input: String,
    /// Report at this δ instead of δ̄.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Tolerances for MErr and the bounds: one value or eps_cons,eps_gap,eps_obj.
    #[arg(long, value_parser = parse_triple, default_value = "1e-8")]
    pub eps: ToleranceTriple,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON path (stdout when absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// δ-sweep CSV path (delta,D_over_r,dH).
    #[arg(long)]
    pub sweep: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Directory of .mps / .json instances.
    pub dir: PathBuf,
    /// Comma-separated `method[/rescaling[/d2]]` entries.
    #[arg(long, default_value = "rpdhg/easy-column,rpdhg-ahr")]
    pub methods: String,
    #[arg(long, value_enum)]
    pub steps: Option<StepArg>,
    #[arg(long, default_value_t = 1e-8)]
    pub eps_rel: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub t0: f64,
    /// CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also run the ideal-budget sweep and write one JSON report per instance here.
    #[arg(long)]
    pub ideal: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    pub ideal_count: usize,
}

impl BenchArgs {
    pub fn solver_args(&self) -> anyhow::Result<Vec<SolverArgs>> {
        self.methods
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|spec| {
                let parts: Vec<&str> = spec.trim().split('/').collect();
                let method = Method::from_str(parts[0], true).map_err(|e| anyhow::anyhow!("{e}"))?;
                let rescaling = match parts.get(1) {
                    Some(r) => r.parse().map_err(|e: String| anyhow::anyhow!(e))?,
                    None => RescalingArg::None,
                };
                let d2 = match parts.get(2) {
                    Some(d) => D2Arg::from_str(d, true).map_err(|e| anyhow::anyhow!("{e}"))?,
                    None => D2Arg::Identity,
                };
                if parts.len() > 3 {
                    bail!("bad method entry '{spec}'");
                }
                let a = SolverArgs {
                    method,
                    rescaling,
                    d2,
                    steps: if method == Method::CpCgm { None } else { self.steps },
                    eps_rel: self.eps_rel,
                    max_iters: self.max_iters,
                    time_limit: self.time_limit,
                    t0: self.t0,
                    target: None,
                };
                a.validate().with_context(|| format!("method entry '{spec}'"))?;
                Ok(a)
            })
            .collect()
    }
}

// ---------------------------------------------------------------- input

pub struct LoadedInstance {
    pub instance: ClpInstance,
    /// Present for MPS input.
    pub standard_form: Option<StandardForm>,
}

pub fn load_instance(input: &str) -> anyhow::Result<LoadedInstance> {
    if let Some(v) = input.strip_prefix("nu:") {
        let nu: f64 = v.parse().with_context(|| format!("bad nu value '{v}'"))?;
        if !(nu >= 0.0) {
            bail!("nu must be nonnegative");
        }
        return Ok(LoadedInstance { instance: nu_family(nu), standard_form: None });
    }
    let path = Path::new(input);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let instance = read_instance_json(path).with_context(|| format!("reading {input}"))?;
        return Ok(LoadedInstance { instance, standard_form: None });
    }
    let raw = read_mps(path).with_context(|| format!("reading {input}"))?;
    let sf = to_standard_form(&raw).with_context(|| format!("converting {input}"))?;
    for w in &sf.warnings {
        log::warn!("{input}: {w}");
    }
    Ok(LoadedInstance { instance: sf.instance.clone(), standard_form: Some(sf) })
}

// ---------------------------------------------------------------- solve

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionJson {
    pub schema_version: u32,
    pub instance: String,
    pub method: String,
    pub status: String,
    pub optimal: bool,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
    #[serde(rename = "E_r")]
    pub e_r: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub matvecs: usize,
    /// OnePDHG steps spent on step-size learning, not included in `iterations`.
    pub learn_iterations: usize,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<StepSizes>,
    /// Values of the original MPS variables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_x: Option<Vec<(String, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescaling: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

pub struct SolveOutcome {
    pub solution: SolutionJson,
    pub trace: Vec<TraceRow>,
    pub exit_code: i32,
    /// CP-CGM state for resuming.
    pub ipm_state: Option<IpmState>,
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::OptimalAtTolerance => "optimal",
        Status::IterationLimit => "iteration-limit",
        Status::TimeLimit => "time-limit",
        Status::Stopped => "stopped",
    }
}

fn ipm_status_name(s: IpmStatus) -> &'static str {
    match s {
        IpmStatus::TargetReached => "target-reached",
        IpmStatus::Converged => "converged",
        IpmStatus::BudgetExhausted => "budget-exhausted",
        IpmStatus::Stalled => "stalled",
        IpmStatus::LostInteriority => "lost-interiority",
    }
}

fn choose_steps(inst: &ClpInstance, rule: StepArg, flexible: bool) -> anyhow::Result<(StepSizes, usize)> {
    Ok(match rule {
        StepArg::Theory => (default_step_sizes(inst)?, 0),
        StepArg::Practical => (practical_step_sizes(inst)?, 0),
        StepArg::Learned => (select_learned_steps(inst, None, LEARN_ITERS, flexible)?.0, 5 * LEARN_ITERS),
    })
}

fn column_rescaling(inst: &ClpInstance, a: &SolverArgs) -> anyhow::Result<Rescaling> {
    let d2: D2Choice = a.d2.into();
    Ok(match a.rescaling {
        RescalingArg::None => with_row_transform(inst, Rescaling::identity(inst.m(), inst.n()), d2)?,
        RescalingArg::EasyColumn => with_row_transform(inst, easy_column_rescaling(inst), d2)?,
        RescalingArg::RuizPc => with_row_transform(inst, ruiz_pc_rescaling(inst, None)?, d2)?,
        RescalingArg::Hessian(delta) => central_delta_rescaling(inst, delta, d2, &IpmBudget::outer(CENTRAL_IPM_OUTER))?,
        RescalingArg::Ahr => unreachable!("validated"),
    })
}

/// Runs one solve. Errors are input, model or numerical failures (exit 1).
pub fn run_solve(
    loaded: &LoadedInstance,
    a: &SolverArgs,
    deterministic: bool,
    resume: Option<IpmState>,
) -> anyhow::Result<SolveOutcome> {
    a.validate()?;
    let inst = &loaded.instance;
    let mut out = match a.method {
        Method::Rpdhg => solve_plain(inst, a, deterministic)?,
        Method::RpdhgAhr => solve_with_ahr(inst, a, deterministic)?,
        Method::CpCgm => solve_cp_cgm(inst, a, deterministic, resume)?,
    };
    if let Some(sf) = &loaded.standard_form {
        let orig = sf.map_back(&out.solution.x);
        out.solution.original_x = Some(sf.var_names.iter().cloned().zip(orig).collect());
        out.solution.objective = sf.original_objective(&out.solution.x);
    }
    Ok(out)
}

fn solve_plain(inst: &ClpInstance, a: &SolverArgs, deterministic: bool) -> anyhow::Result<SolveOutcome> {
    let resc = column_rescaling(inst, a)?;
    let t = build_rescaled(inst, &resc, true)?;
    let rule = a.steps.unwrap_or(StepArg::Practical);
    let mut opts = if rule == StepArg::Theory { RpdhgOptions::theory() } else { RpdhgOptions::default() };
    opts.eps_rel = a.eps_rel;
    if let Some(k) = a.max_iters {
        opts.max_iters = k;
    }
    opts.time_limit = if deterministic { None } else { a.time_limit };
    let (steps, learn) = choose_steps(&t.instance, rule, opts.flexible)?;
    let mut mon = |x: &[f64], y: &[f64]| t.original_error(x, y);
    let hooks = Hooks { error_monitor: Some(&mut mon), ..Hooks::default() };
    let r = solve_rpdhg_with(&t.instance, &steps, &opts, None, hooks)?;
    let p = t.map_back(&r.x, &r.y, false);
    let e_r = relative_error(inst, &p.x, &p.y);
    let optimal = r.status == Status::OptimalAtTolerance;
    let solution = SolutionJson {
        schema_version: SCHEMA_VERSION,
        instance: inst.name().to_string(),
        method: a.label(),
        status: status_name(r.status).into(),
        optimal,
        objective: inst.objective(&p.x),
        x: p.x,
        y: p.y,
        s: p.s,
        e_r,
        iterations: r.iterations,
        restarts: r.restarts,
        matvecs: r.matvecs,
        learn_iterations: learn,
        wall_time: r.wall_time_s,
        steps: Some(steps),
        original_x: None,
        rescaling: Some(resc.dump()),
        details: None,
    };
    Ok(SolveOutcome { solution, trace: r.trace, exit_code: if optimal { EXIT_OK } else { EXIT_LIMIT }, ipm_state: None })
}

fn solve_with_ahr(inst: &ClpInstance, a: &SolverArgs, deterministic: bool) -> anyhow::Result<SolveOutcome> {
    let mut cfg = AhrConfig::with_eps(a.eps_rel);
    cfg.t0 = a.t0;
    cfg.deterministic = deterministic;
    cfg.step_rule = match a.steps.unwrap_or(StepArg::Learned) {
        StepArg::Learned => StepRule::Learned,
        StepArg::Practical => StepRule::Practical,
        StepArg::Theory => bail!("--method rpdhg-ahr supports learned or practical steps"),
    };
    if let Some(k) = a.max_iters {
        cfg.max_pdhg_iters = k;
    }
    let res = solve_ahr(inst, &cfg)?;
    let r = &res.result;
    let e_r = relative_error(inst, &r.x, &r.y);
    let optimal = r.status == Status::OptimalAtTolerance;
    let details = serde_json::json!({
        "rounds": res.rounds,
        "chosen_round": res.chosen_round,
        "fallback": res.fallback,
        "ipm_outer": res.ipm_outer,
    });
    let solution = SolutionJson {
        schema_version: SCHEMA_VERSION,
        instance: inst.name().to_string(),
        method: a.label(),
        status: status_name(r.status).into(),
        optimal,
        objective: inst.objective(&r.x),
        x: r.x.clone(),
        y: r.y.clone(),
        s: r.s.clone(),
        e_r,
        iterations: r.iterations,
        restarts: r.restarts,
        matvecs: r.matvecs,
        learn_iterations: res.learn_iterations,
        wall_time: r.wall_time_s,
        steps: res.steps,
        original_x: None,
        rescaling: None,
        details: Some(details),
    };
    Ok(SolveOutcome {
        solution,
        trace: r.trace.clone(),
        exit_code: if optimal { EXIT_OK } else { EXIT_LIMIT },
        ipm_state: None,
    })
}

fn solve_cp_cgm(inst: &ClpInstance, a: &SolverArgs, deterministic: bool, resume: Option<IpmState>) -> anyhow::Result<SolveOutcome> {
    let target = a.target.unwrap_or(a.eps_rel);
    let mut budget = IpmBudget::seconds(a.time_limit.unwrap_or(DEFAULT_TIME_LIMIT), deterministic).with_target(target);
    if let Some(k) = a.max_iters {
        budget.max_outer = Some(k);
    }
    let run = cp_cgm(inst, &budget, resume)?;
    let it = &run.iterate;
    let e_r = relative_error(inst, &it.x, &it.y);
    let reached = matches!(run.status, IpmStatus::TargetReached | IpmStatus::Converged) && e_r <= target;
    let optimal = e_r <= a.eps_rel;
    let status = if optimal {
        "optimal".to_string()
    } else {
        ipm_status_name(run.status).to_string()
    };
    let details = serde_json::json!({ "mu": it.mu, "outer": it.outer, "ops": it.ops, "target": target, "log": run.log });
    let solution = SolutionJson {
        schema_version: SCHEMA_VERSION,
        instance: inst.name().to_string(),
        method: a.label(),
        status,
        optimal,
        objective: inst.objective(&it.x),
        x: it.x.clone(),
        y: it.y.clone(),
        s: it.s.clone(),
        e_r,
        iterations: it.outer,
        restarts: 0,
        matvecs: 0,
        learn_iterations: 0,
        wall_time: it.wall_time_s,
        steps: None,
        original_x: None,
        rescaling: None,
        details: Some(details),
    };
    Ok(SolveOutcome {
        solution,
        trace: Vec::new(),
        exit_code: if reached || optimal { EXIT_OK } else { EXIT_LIMIT },
        ipm_state: Some(run.state),
    })
}

pub fn trace_csv(rows: &[TraceRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["iter", "outer", "e_r", "rho", "restarted", "wall_time_s"])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn write_or_print(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_solve(args: &SolveArgs, deterministic: bool) -> anyhow::Result<i32> {
    args.solver.validate()?;
    if args.resume.is_some() && args.solver.method != Method::CpCgm {
        bail!("--resume applies to --method cp-cgm only");
    }
    let loaded = load_instance(&args.input)?;
    let resume = match &args.resume {
        Some(p) => Some(IpmState::load(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let out = run_solve(&loaded, &args.solver, deterministic, resume)?;
    write_or_print(args.out.as_deref(), &serde_json::to_string_pretty(&out.solution)?)?;
    if let Some(p) = &args.trace {
        std::fs::write(p, trace_csv(&out.trace)?).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(state) = &out.ipm_state {
        let path = match (&args.snapshot, &args.out) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(o)) if args.solver.target.is_some() => Some(o.with_extension("ipm.json")),
            (None, None) if args.solver.target.is_some() => Some(PathBuf::from("ipm_snapshot.json")),
            _ => None,
        };
        if let Some(p) = path {
            state.save(&p).with_context(|| format!("writing {}", p.display()))?;
            log::info!("CP-CGM state written to {}", p.display());
        }
    }
    Ok(out.exit_code)
}

// ---------------------------------------------------------------- analyze

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableRow {
    pub kappa: f64,
    pub delta_bar: Option<f64>,
    pub d: f64,
    pub r: f64,
    pub d_over_r: f64,
    pub max_norm_wstar: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub instance: String,
    /// κ, δ̄ and the geometry at δ̄ (or at `--delta`).
    pub table: TableRow,
    pub geometry: GeometryReport,
    pub sandwich: SandwichCheck,
    pub ordering_holds: bool,
    /// The same quantities with `c` projected onto `Null(A)`.
    pub projected_c: TableRow,
    pub error_bound_worst_ratio: Option<f64>,
}

fn table_row(g: &LpGeometry, delta: f64) -> anyhow::Result<TableRow> {
    let d = g.diameter(delta)?;
    let (r, _) = g.conic_radius(delta)?;
    Ok(TableRow { kappa: g.kappa, delta_bar: g.delta_bar, d, r, d_over_r: d / r, max_norm_wstar: g.max_norm_wstar })
}

pub fn run_analyze(inst: &ClpInstance, args: &AnalyzeArgs) -> anyhow::Result<(AnalyzeReport, Vec<SweepRow>)> {
    let g = LpGeometry::new(inst)?;
    let delta = args.delta.unwrap_or_else(|| g.delta_bar.unwrap_or(1.0));
    if !(delta > 0.0) {
        bail!("--delta must be positive");
    }
    let geometry = g.report(delta, Some(&args.eps))?;
    let gp = LpGeometry::new(&project_c_to_nullspace(inst))?;
    let (checked, worst) = g.error_bound_spot_check(delta, 200, args.seed)?;
    let report = AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        instance: inst.name().to_string(),
        table: table_row(&g, delta)?,
        sandwich: g.sandwich()?,
        ordering_holds: geometry.ordering_holds(),
        geometry,
        projected_c: table_row(&gp, delta)?,
        error_bound_worst_ratio: (checked > 0).then_some(worst),
    };
    let rows = if args.sweep.is_some() {
        let grid = if args.delta.is_some() { vec![delta] } else { delta_grid(g.delta_bar.unwrap_or(1.0)) };
        g.sweep(&grid)?
    } else {
        Vec::new()
    };
    Ok((report, rows))
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> anyhow::Result<i32> {
    let loaded = load_instance(&args.input)?;
    let (report, rows) = run_analyze(&loaded.instance, args)?;
    write_or_print(args.report.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    if let Some(p) = &args.sweep {
        std::fs::write(p, sweep_csv(&rows)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- bench

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub method: String,
    pub status: String,
    pub iterations: Option<usize>,
    pub matvecs: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub solved: bool,
    pub e_r: Option<f64>,
    /// matvecs of the first method divided by matvecs of this one.
    pub speedup: Option<f64>,
}

pub fn bench_instances(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| ["mps", "json"].contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|v| *v > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn bench_one(path: &Path, methods: &[SolverArgs], deterministic: bool) -> Vec<BenchRow> {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let loaded = match load_instance(&path.to_string_lossy()) {
        Ok(l) => l,
        Err(e) => {
            return methods
                .iter()
                .map(|m| BenchRow {
                    instance: name.clone(),
                    method: m.label(),
                    status: format!("error: {e:#}"),
                    iterations: None,
                    matvecs: None,
                    wall_time_s: None,
                    solved: false,
                    e_r: None,
                    speedup: None,
                })
                .collect()
        }
    };
    let mut rows: Vec<BenchRow> = methods
        .iter()
        .map(|m| match run_solve(&loaded, m, deterministic, None) {
            Ok(o) => BenchRow {
                instance: name.clone(),
                method: m.label(),
                status: o.solution.status.clone(),
                iterations: Some(o.solution.iterations),
                matvecs: Some(o.solution.matvecs),
                wall_time_s: Some(o.solution.wall_time),
                solved: o.solution.e_r <= BENCH_SOLVED_TOL,
                e_r: Some(o.solution.e_r),
                speedup: None,
            },
            Err(e) => BenchRow {
                instance: name.clone(),
                method: m.label(),
                status: format!("error: {e:#}"),
                iterations: None,
                matvecs: None,
                wall_time_s: None,
                solved: false,
                e_r: None,
                speedup: None,
            },
        })
        .collect();
    let base = rows.first().and_then(|r| r.matvecs);
    for r in rows.iter_mut() {
        r.speedup = match (base, r.matvecs) {
            (Some(a), Some(b)) if b > 0 => Some(a as f64 / b as f64),
            _ => None,
        };
    }
    rows
}

/// Solves every instance with every method; rows are ordered by instance name
/// and then by method order.
pub fn run_bench(files: &[PathBuf], methods: &[SolverArgs], deterministic: bool, workers: usize) -> Vec<BenchRow> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Vec<BenchRow>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(files.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= files.len() {
                    break;
                }
                let rows = bench_one(&files[i], methods, deterministic);
                results.lock().expect("bench results lock").push((i, rows));
            });
        }
    });
    let mut res = results.into_inner().expect("bench results lock");
    res.sort_by_key(|(i, _)| *i);
    res.into_iter().flat_map(|(_, r)| r).collect()
}

pub fn bench_csv(rows: &[BenchRow]) -> anyhow::Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["instance", "method", "status", "iterations", "matvecs", "wall_time_s", "solved", "e_r", "speedup"])?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn cmd_bench(args: &BenchArgs, deterministic: bool) -> anyhow::Result<i32> {
    let methods = args.solver_args()?;
    if methods.is_empty() {
        bail!("--methods is empty");
    }
    let files = bench_instances(&args.dir)?;
    if files.is_empty() {
        log::warn!("no .mps or .json instances in {}", args.dir.display());
    }
    let rows = run_bench(&files, &methods, deterministic, worker_count());
    let text = bench_csv(&rows)?;
    match &args.out {
        Some(p) => std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    if let Some(dir) = &args.ideal {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut cfg = AhrConfig::with_eps(args.eps_rel);
        cfg.deterministic = deterministic;
        for f in &files {
            let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let result = load_instance(&f.to_string_lossy())
                .and_then(|l| Ok(ideal_sweep(&l.instance, &cfg, &ideal_budgets(args.ideal_count))?));
            match result {
                Ok(rep) => std::fs::write(dir.join(format!("{stem}.ideal.json")), serde_json::to_string_pretty(&rep)?)?,
                Err(e) => log::warn!("ideal sweep on {}: {e:#}", f.display()),
            }
        }
    }
    Ok(EXIT_OK)
}

pub fn run(cfg: &CliConfig) -> anyhow::Result<i32> {
    match &cfg.command {
        Command::Solve(a) => cmd_solve(a, cfg.deterministic),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Bench(a) => cmd_bench(a, cfg.deterministic),
    }
}
