//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so that every line is printed; exits non-zero if any criterion fails.

use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clp_cli::{load_instance, run_analyze, run_solve, AnalyzeArgs, D2Arg, Method, RescalingArg, SolverArgs};
use clp_core::ahr::{solve_ahr, AhrConfig, AhrController, Decision};
use clp_core::cones::ConeSpec;
use clp_core::dualgap::{gap_direction, rho_m, rho_n, GapNorm, GapQuery};
use clp_core::geolab::{central_point, delta_grid, rescaled_geometry_check, simplex, LpGeometry, LpOutcome};
use clp_core::ipm::{cp_cgm, IpmBudget};
use clp_core::linalg::{m_norm, SparseMatrix};
use clp_core::model::{check_eps_tolerance, e_obj, gap, nu_family, relative_error, ClpInstance, ToleranceTriple};
use clp_core::pdhg::{
    default_step_sizes, nonexpansive_violation, practical_step_sizes, solve_rpdhg_with, sublinear_check, AnchorView,
    Hooks, IterView, RpdhgOptions,
};
use clp_core::rescale::{build_rescaled, complete_preconditioner, hessian_rescaling_with_eta, phi};

type Outcome = (bool, String);

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Random `m×n` LP with `b = Ax⁰`, `c = Aᵀy⁰ + s⁰`, `x⁰, s⁰ > 0`.
fn random_lp(seed: u64, m: usize, n: usize) -> ClpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.5)).collect();
    let y0: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s0: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.5)).collect();
    let b = (0..m).map(|i| (0..n).map(|j| a[i][j] * x0[j]).sum()).collect();
    let c = (0..n).map(|j| (0..m).map(|i| a[i][j] * y0[i]).sum::<f64>() + s0[j]).collect();
    ClpInstance::new(format!("random_{seed}"), SparseMatrix::from_dense(&a), b, c, ConeSpec::nonneg(n)).unwrap()
}

/// Primal and dual optimal solutions from the dense simplex.
fn oracle_saddle(inst: &ClpInstance) -> (Vec<f64>, Vec<f64>, f64) {
    let a = inst.a().to_dense();
    let (m, n) = a.shape();
    let LpOutcome::Optimal { x, objective } = simplex(inst.c(), &a, inst.b()) else { panic!("oracle primal") };
    // max bᵀy s.t. Aᵀy + s = c, s ≥ 0, with y = y⁺ - y⁻
    let mut e = DMatrix::zeros(n, 2 * m + n);
    for j in 0..n {
        for i in 0..m {
            e[(j, i)] = a[(i, j)];
            e[(j, m + i)] = -a[(i, j)];
        }
        e[(j, 2 * m + j)] = 1.0;
    }
    let mut cost = vec![0.0; 2 * m + n];
    for i in 0..m {
        cost[i] = -inst.b()[i];
        cost[m + i] = inst.b()[i];
    }
    let LpOutcome::Optimal { x: z, .. } = simplex(&cost, &e, inst.c()) else { panic!("oracle dual") };
    let y = (0..m).map(|i| z[i] - z[m + i]).collect();
    (x, y, objective)
}

fn sig2(v: f64) -> String {
    format!("{v:.1e}")
}

fn sig2_match(ours: f64, paper: f64) -> bool {
    sig2(ours) == sig2(paper)
}

// ---------------------------------------------------------------- criteria

fn c1_reference_geometry() -> Outcome {
    let t = Instant::now();
    let rows = [("nu:0", [1.0, 5.1e-1, 1.6e0, 4.6e-2, 5.7e1, 1.0e1]), ("nu:1e-4", [1.0, 5.0e-5, 2.4e-1, 4.5e-6, 5.3e4, 1.0e1])];
    let names = ["kappa", "delta_bar", "D", "r", "D/r", "max|w*|"];
    let mut ok = true;
    let mut detail = Vec::new();
    for (input, paper) in rows {
        let inst = load_instance(input).unwrap().instance;
        let args = AnalyzeArgs {
            input: input.into(),
            delta: None,
            eps: ToleranceTriple::uniform(1e-8),
            seed: 0,
            report: None,
            sweep: None,
        };
        let (rep, _) = run_analyze(&inst, &args).unwrap();
        let tb = &rep.table;
        let ours = [tb.kappa, tb.delta_bar.unwrap_or(f64::INFINITY), tb.d, tb.r, tb.d_over_r, tb.max_norm_wstar];
        let bad: Vec<String> = (0..6)
            .filter(|&i| !sig2_match(ours[i], paper[i]))
            .map(|i| format!("{}={} (expected {})", names[i], sig2(ours[i]), sig2(paper[i])))
            .collect();
        ok &= bad.is_empty();
        detail.push(format!("{input}: {}", if bad.is_empty() { "all match".into() } else { bad.join(", ") }));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    (ok, format!("{}; {secs:.2}s", detail.join("; ")))
}

fn c2_sweep_shape() -> Outcome {
    let g = LpGeometry::new(&nu_family(1e-4)).unwrap();
    let db = g.delta_bar.unwrap();
    let rows = g.sweep(&delta_grid(db)).unwrap();
    let dh_monotone = rows.windows(2).all(|w| w[1].dh >= w[0].dh * (1.0 - 1e-9));
    let below: Vec<f64> = rows.iter().filter(|r| r.delta <= db).map(|r| r.d_over_r).collect();
    let above: Vec<f64> = rows.iter().filter(|r| r.delta >= db).map(|r| r.d_over_r).collect();
    let (lo, hi) = below.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let plateau = hi <= 1.1 * lo;
    let falling = above.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let last = *above.last().unwrap();
    let regime = plateau && falling && last <= lo / 10.0;
    (
        dh_monotone && regime,
        format!(
            "{} points; dH non-decreasing: {dh_monotone}; D/r in [{lo:.3e}, {hi:.3e}] for delta <= delta_bar, non-increasing above: {falling}, {last:.3e} at delta = {:.1e}",
            rows.len(),
            rows.last().unwrap().delta
        ),
    )
}

fn c3_iteration_bounds() -> Outcome {
    let t = Instant::now();
    let inst = nu_family(1e-4);
    let g = LpGeometry::new(&inst).unwrap();
    let grid = delta_grid(g.delta_bar.unwrap());
    let rows = g.sweep(&grid).unwrap();
    let cap: Vec<f64> = grid.iter().copied().filter(|d| *d <= g.delta_bar.unwrap()).collect();
    let lp_rows = g.sweep(&cap).unwrap();
    let epss: Vec<f64> = (1..=7).map(|k| 10f64.powi(-k)).collect();
    let found: RefCell<Vec<Option<usize>>> = RefCell::new(vec![None; epss.len()]);
    let steps = default_step_sizes(&inst).unwrap();
    let opts = RpdhgOptions { eps_rel: 0.0, max_iters: 3_000_000, ..RpdhgOptions::theory() };
    let f_star = g.f_star;
    let mut observer = |v: &IterView| {
        let mut f = found.borrow_mut();
        if f.iter().all(|x| x.is_some()) {
            return;
        }
        let s = inst.slack(v.ybar);
        for (i, &e) in epss.iter().enumerate() {
            if f[i].is_none() && check_eps_tolerance(&inst, v.xbar, &s, &ToleranceTriple::uniform(e), f_star).0 {
                f[i] = Some(v.total);
            }
        }
    };
    let mut stop = |_: &AnchorView| found.borrow().iter().all(|x| x.is_some());
    let hooks = Hooks { observer: Some(&mut observer), on_anchor: Some(&mut stop), error_monitor: None };
    solve_rpdhg_with(&inst, &steps, &opts, None, hooks).unwrap();
    let found = found.into_inner();
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, &e) in epss.iter().enumerate() {
        let eps = ToleranceTriple::uniform(e);
        let (t_clp, _) = g.bound_t_clp(&rows, &eps).unwrap();
        let t_lp = g.bound_t_lp(&lp_rows, &eps).unwrap();
        let hit = found[i];
        let pass = hit.is_some_and(|k| (k as f64) <= t_clp && (k as f64) <= t_lp);
        ok &= pass;
        detail.push(format!("{e:.0e}: {} <= ({t_clp:.2e}, {t_lp:.2e})", hit.map_or("none".into(), |k| k.to_string())));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    (ok, format!("{}; {secs:.1}s", detail.join(", ")))
}

fn suite() -> Vec<(ClpInstance, Vec<f64>, Vec<f64>)> {
    (0..20u64)
        .map(|seed| {
            let inst = random_lp(1000 + seed, 3, 6);
            let (x, y, _) = oracle_saddle(&inst);
            (inst, x, y)
        })
        .collect()
}

fn c4_nonexpansive() -> Outcome {
    let mut worst = 0.0f64;
    let (mut measured, mut unresolved) = (0, 0);
    for (inst, xs, ys) in suite() {
        let steps = practical_step_sizes(&inst).unwrap();
        let z0 = (vec![0.0; inst.n()], vec![0.0; inst.m()]);
        let rep = nonexpansive_violation(&inst, &steps, (&z0.0, &z0.1), (&xs, &ys), 2000).unwrap();
        worst = worst.max(rep.worst);
        measured += rep.measured;
        unresolved += rep.unresolved;
    }
    (
        worst <= 1e-9,
        format!("20 LPs x 2000 iterations; largest relative increase {worst:.2e} over {measured} steps ({unresolved} steps at the round-off floor)"),
    )
}

fn c5_sublinear() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut unique = true;
    for (inst, xs, ys) in suite() {
        unique &= LpGeometry::new(&inst).unwrap().wstar.len() == 1;
        let steps = practical_step_sizes(&inst).unwrap();
        let z0 = (vec![0.0; inst.n()], vec![0.0; inst.m()]);
        let neg: Vec<f64> = ys.iter().map(|v| -v).collect();
        let xsn: Vec<f64> = xs.iter().map(|v| -v).collect();
        let dist = m_norm(&xsn, &neg, steps.tau, steps.sigma, inst.a()).unwrap();
        let rep = sublinear_check(&inst, &steps, (&z0.0, &z0.1), dist, 1000).unwrap();
        ok &= rep.violations == 0;
        worst = worst.max(rep.worst_ratio);
    }
    (ok && unique, format!("20 LPs x 1000 iterations; unique optima: {unique}; max rho*k/(8 Dist_M) = {worst:.3}"))
}

/// Brute-force `ρ_N` for n = m = 1 over the ellipse boundary and the face `x̂ = 0`.
fn grid_rho(x: f64, y: f64, h1: f64, h2: f64, r: f64, tau: f64, sigma: f64) -> f64 {
    let (ax, ay) = (r * tau.sqrt(), r * sigma.sqrt());
    let mut best = 0.0f64;
    let steps = 200_000;
    for k in 0..steps {
        let th = std::f64::consts::TAU * k as f64 / steps as f64;
        let (xh, yh) = (x + ax * th.cos(), y + ay * th.sin());
        if xh >= 0.0 {
            best = best.max(h1 * (xh - x) + h2 * (yh - y));
        }
    }
    if x <= ax {
        let half = ay * (1.0 - (x / ax).powi(2)).max(0.0).sqrt();
        for yh in [y - half, y + half] {
            best = best.max(-h1 * x + h2 * (yh - y));
        }
    }
    best / r
}

fn c6_gap_certificates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut grid_err = 0.0f64;
    for (a, b, c) in [(2.0, 1.0, 0.7), (1.0, 1.0, 0.0), (-0.5, 2.0, 1.5)] {
        let inst = ClpInstance::new("2d", SparseMatrix::from_dense(&[vec![a]]), vec![b], vec![c], ConeSpec::nonneg(1)).unwrap();
        for _ in 0..4 {
            let (x, y, r) = (rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..3.0));
            let (tau, sigma) = (rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
            let (h1, h2) = gap_direction(&inst, &[x], &[y]);
            let q = GapQuery { x: &[x], y: &[y], r, tau, sigma, norm: GapNorm::N };
            let v = rho_n(&inst, &q).unwrap().rho;
            grid_err = grid_err.max((v - grid_rho(x, y, h1[0], h2[0], r, tau, sigma)).abs());
        }
    }
    let inst = random_lp(66, 2, 3);
    let lam = inst.spectra().unwrap().lambda_max;
    let (tau, sigma) = (0.5 / lam, 0.5 / lam);
    let upper_f = 1.0 / (1.0 - (tau * sigma).sqrt() * lam).sqrt();
    let mut sandwich = 0;
    let mut monotone = true;
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.5)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = rng.random_range(0.01..2.0);
        let qn = GapQuery { x: &x, y: &y, r, tau, sigma, norm: GapNorm::N };
        let n = rho_n(&inst, &qn).unwrap().rho;
        let m = rho_m(&inst, &GapQuery { norm: GapNorm::M, ..qn }).unwrap().rho;
        if n / 2f64.sqrt() <= m * (1.0 + 1e-7) + 1e-12 && m <= upper_f * n * (1.0 + 1e-7) + 1e-12 {
            sandwich += 1;
        }
        let mut prev = f64::INFINITY;
        for k in 0..12 {
            let rk = 0.01 * 2f64.powi(k);
            let v = rho_n(&inst, &GapQuery { r: rk, ..qn }).unwrap().rho;
            monotone &= v <= prev * (1.0 + 1e-9) + 1e-12;
            prev = v;
        }
    }
    (
        grid_err <= 1e-4 && sandwich == 50 && monotone,
        format!("grid error {grid_err:.2e}; sandwich {sandwich}/50 (tau*sigma*lambda^2 = 0.25); monotone on r-grids: {monotone}"),
    )
}

fn c7_rescaled_geometry() -> Outcome {
    let t = Instant::now();
    let inst = nu_family(1e-4);
    let mut ok = true;
    let mut detail = Vec::new();
    for eta in [0.1, 3.0, 300.0] {
        let (x, _, s) = central_point(&inst, eta).unwrap();
        let rep = rescaled_geometry_check(&inst, &x, &s, eta).unwrap();
        ok &= rep.all_hold();
        detail.push(format!("eta={eta}: D/r={:.2} (<= {:.2}) holds={:?}", rep.d / rep.r, rep.bound_ratio, rep.holds));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    (ok, format!("{}; {secs:.2}s", detail.join("; ")))
}

fn solver(rescaling: RescalingArg, d2: D2Arg) -> SolverArgs {
    SolverArgs {
        method: Method::Rpdhg,
        rescaling,
        d2,
        steps: None,
        eps_rel: 1e-8,
        max_iters: Some(2_000_000),
        time_limit: None,
        t0: 0.5,
        target: None,
    }
}

fn c8_rescaling_speedup() -> Outcome {
    let files = ["nu_1e-4.mps", "transport.mps", "diet.mps", "production.mps"];
    let mut faster = true;
    let mut ordered = 0;
    let mut detail = Vec::new();
    for f in files {
        let loaded = load_instance(&fixtures_dir().join(f).to_string_lossy()).unwrap();
        let run = |r, d| {
            let o = run_solve(&loaded, &solver(r, d), true, None).unwrap();
            assert!(o.solution.e_r <= 1e-8, "{f}: E_r {}", o.solution.e_r);
            o.solution.iterations
        };
        let easy = run(RescalingArg::EasyColumn, D2Arg::Identity);
        let c05 = run(RescalingArg::Hessian(0.5), D2Arg::Complete);
        let c001 = run(RescalingArg::Hessian(0.01), D2Arg::Complete);
        faster &= c001 < easy;
        if c001 <= c05 {
            ordered += 1;
        }
        detail.push(format!("{f}: easy {easy}, central-0.5 {c05}, central-0.01 {c001}"));
    }
    (faster && ordered >= 3, format!("{}; central-0.01 <= central-0.5 on {ordered}/4", detail.join("; ")))
}

fn c9_cp_cgm() -> Outcome {
    let mut ok = true;
    let mut reached = 0;
    let mut resume_ok = 0;
    for seed in 0..10u64 {
        let inst = random_lp(9000 + seed, 3, 6);
        // step by step through resumed single-iteration runs
        let mut state = None;
        let mut prev_mu = f64::INFINITY;
        for _ in 0..30 {
            let run = cp_cgm(&inst, &IpmBudget::outer(1), state.take()).unwrap();
            let it = &run.iterate;
            let interior = it.x.iter().chain(&it.s).all(|v| *v > 0.0);
            ok &= interior && it.mu < prev_mu;
            prev_mu = it.mu;
            state = Some(run.state);
            if relative_error(&inst, &it.x, &it.y) <= 1e-1 {
                break;
            }
        }
        let run = cp_cgm(&inst, &IpmBudget::seconds(0.01, true).with_target(1e-1), None).unwrap();
        if relative_error(&inst, &run.iterate.x, &run.iterate.y) <= 1e-1 {
            reached += 1;
        }
        let probe = cp_cgm(&inst, &IpmBudget::outer(2), None).unwrap();
        let t = probe.iterate.ops as f64 / clp_core::ipm::OPS_PER_SECOND;
        let half = cp_cgm(&inst, &IpmBudget::seconds(t, true), None).unwrap();
        let two = cp_cgm(&inst, &IpmBudget::seconds(t, true), Some(half.state)).unwrap();
        let one = cp_cgm(&inst, &IpmBudget::seconds(2.0 * t, true), None).unwrap();
        if two.iterate.x == one.iterate.x && two.iterate.y == one.iterate.y && two.iterate.outer == one.iterate.outer {
            resume_ok += 1;
        }
    }
    (
        ok && reached == 10 && resume_ok == 10,
        format!("interior with decreasing mu: {ok}; E_r <= 1e-1 within 0.01 simulated s: {reached}/10; resume determinism {resume_ok}/10"),
    )
}

fn c10_ahr() -> Outcome {
    let cfg = AhrConfig::with_eps(1e-8);
    let (acc, chosen_a) = AhrController::replay(&cfg, &[1e-2, 1e-5]);
    let accept = acc == vec![Decision::Continue, Decision::AcceptNew] && chosen_a == Some(2);
    let (rev, chosen_r) = AhrController::replay(&cfg, &[1e-2, 5e-2]);
    let revert = rev == vec![Decision::Continue, Decision::Revert] && chosen_r == Some(1);
    let res = solve_ahr(&nu_family(1e-4), &cfg).unwrap();
    let e = relative_error(&nu_family(1e-4), &res.result.x, &res.result.y);
    (
        accept && revert && e <= 1e-8,
        format!("accept path {acc:?}; revert path {rev:?}; end-to-end E_r = {e:.2e} in {} iterations", res.result.iterations),
    )
}

fn c11_invariance() -> Outcome {
    let inst = nu_family(1e-4);
    let eta = 3.0;
    let (xc, _, _) = central_point(&inst, eta).unwrap();
    let resc = hessian_rescaling_with_eta(&inst, &xc, eta, false).unwrap();
    let tilde = build_rescaled(&inst, &resc, false).unwrap();
    let f_star = LpGeometry::new(&inst).unwrap().f_star;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_gap = 0.0f64;
    let mut worst_obj = 0.0f64;
    for _ in 0..100 {
        // w ∈ V: x = x₀ + (null-space move), s = c - Aᵀy
        let u: [f64; 2] = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let x = vec![u[0], 1.0 + 10.0 * u[0] - u[1], u[1]];
        let y = [rng.random_range(-2.0..2.0)];
        let s = inst.slack(&y);
        let (xt, st) = phi(&resc, &x, &s);
        let g0 = gap(&inst, &x, &s);
        let g1 = gap(&tilde.instance, &xt, &st);
        worst_gap = worst_gap.max((g0 - g1).abs() / g0.abs().max(1.0));
        let e0 = e_obj(&inst, &x, &s, f_star);
        let e1 = e_obj(&tilde.instance, &xt, &st, f_star);
        worst_obj = worst_obj.max((e0 - e1).abs() / e0.abs().max(1.0));
    }
    // round trip with a dense row transform and a projected objective
    let full = resc.clone().with_d2(complete_preconditioner(&inst, &resc.d1).unwrap());
    let tp = build_rescaled(&inst, &full, true).unwrap();
    let mut worst_rt = 0.0f64;
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..3.0)).collect();
        let y = vec![rng.random_range(-2.0..2.0)];
        let (xt, yt) = tp.to_rescaled(&x, &y);
        let p = tp.map_back(&xt, &yt, false);
        for (a, b) in p.x.iter().zip(&x).chain(p.y.iter().zip(&y)) {
            worst_rt = worst_rt.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    (
        worst_gap <= 1e-10 && worst_obj <= 1e-10 && worst_rt <= 1e-10,
        format!("Gap {worst_gap:.1e}, E_obj {worst_obj:.1e}, round trip {worst_rt:.1e}"),
    )
}

fn c12_sandwich() -> Outcome {
    let mut insts: Vec<ClpInstance> = vec![nu_family(0.0), nu_family(1e-4), nu_family(1e-2)];
    for f in ["nu_1e-4.mps", "transport.mps", "diet.mps", "production.mps"] {
        insts.push(load_instance(&fixtures_dir().join(f).to_string_lossy()).unwrap().instance);
    }
    insts.extend((0..10u64).map(|s| random_lp(1200 + s, 2, 4)));
    let mut held = 0;
    let mut failed = Vec::new();
    for inst in &insts {
        let sw = LpGeometry::new(inst).and_then(|g| g.sandwich());
        match sw {
            Ok(s) if s.holds => held += 1,
            Ok(s) => failed.push(format!("{}: {:?}", inst.name(), s)),
            Err(e) => failed.push(format!("{}: {e}", inst.name())),
        }
    }
    (held == insts.len(), format!("{held}/{} instances; {}", insts.len(), if failed.is_empty() { "-".into() } else { failed.join("; ") }))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 reference geometry values", c1_reference_geometry),
        ("2 delta-sweep shape", c2_sweep_shape),
        ("3 iteration bounds", c3_iteration_bounds),
        ("4 nonexpansiveness", c4_nonexpansive),
        ("5 sublinear envelope", c5_sublinear),
        ("6 normalized-gap certificates", c6_gap_certificates),
        ("7 rescaled geometry", c7_rescaled_geometry),
        ("8 rescaling speedup", c8_rescaling_speedup),
        ("9 CP-CGM", c9_cp_cgm),
        ("10 AHR driver logic", c10_ahr),
        ("11 invariance", c11_invariance),
        ("12 width sandwich", c12_sandwich),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let (ok, detail) = match std::panic::catch_unwind(f) {
            Ok(o) => o,
            Err(e) => (false, format!("panicked: {:?}", e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())))),
        };
        if !ok {
            failures += 1;
        }
        println!("{} criterion {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
