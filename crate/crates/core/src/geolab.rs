//! Desk-scale geometry of LP primal-dual sublevel sets
//! `W_δ = {(x, s) : Ax = b, s ∈ c + Range(Aᵀ), x, s ≥ 0, Gap(x, s) ≤ δ}`
//! by vertex enumeration, and the iteration bounds built from it.
//!
//! Everything here is dense and self-contained (own simplex, own
//! min-norm-point routine) so it can serve as an oracle for the solvers.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::linalg::SparseMatrix;
use crate::model::{ClpInstance, ToleranceTriple};
use crate::rescale::{build_rescaled, hessian_rescaling_with_eta};
use crate::{Error, Result};

pub const MAX_VARS: usize = 25;
pub const MAX_ROWS: usize = 15;
pub const FEAS_TOL: f64 = 1e-9;
pub const DEDUP_TOL: f64 = 1e-8;
pub const WOLFE_TOL: f64 = 1e-10;
pub const GRID_PER_DECADE: usize = 40;
/// `γ = δ̄·2^-20` for the `sup_γ r_γ/γ` estimate.
pub const GAMMA_SHIFT: i32 = 20;
const PIVOT_TOL: f64 = 1e-10;
/// Constant parts of two vertices closer than this (relative) are treated as equal.
pub const SNAP_TOL: f64 = 1e-9;

// ---------------------------------------------------------------- simplex

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// Dense tableau whose right-hand side is carried as `f₀ + δ·f₁` in two
/// columns, so that quantities of order `δ` survive next to order-one data.
struct Tableau {
    rows: usize,
    width: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    delta: f64,
    snap0: f64,
    snap1: f64,
}

impl Tableau {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + j
    }

    fn rhs(&self, i: usize) -> f64 {
        let w = self.width;
        self.t[i * w + w - 2] + self.delta * self.t[i * w + w - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.t[self.idx(r, c)];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * self.t[r * w + j];
                }
            }
        }
        for i in 0..=self.rows {
            if self.t[i * w + w - 2].abs() <= self.snap0 {
                self.t[i * w + w - 2] = 0.0;
            }
            if self.t[i * w + w - 1].abs() <= self.snap1 {
                self.t[i * w + w - 1] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule on columns `< allowed`; the objective is row `rows`.
    fn run(&mut self, allowed: usize) -> bool {
        let obj = self.rows;
        loop {
            let enter = (0..allowed).find(|&j| self.t[self.idx(obj, j)] < -PIVOT_TOL);
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.t[self.idx(i, c)];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            let slack = 1e-12 * best.abs();
                            if ratio < best - slack || (ratio <= best + slack && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }
}

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Basic optimal solution `z = z₀ + δ·z₁` of `min cᵀz  s.t.  Az = f₀ + δf₁, z ≥ 0`.
fn solve_param(c: &[f64], a: &DMatrix<f64>, f0: &[f64], f1: &[f64], delta: f64) -> std::result::Result<(Vec<f64>, Vec<f64>), LpOutcome> {
    let (m, n) = a.shape();
    let width = n + m + 2;
    let snap0 = 1e-12 * (1.0 + amax(f0));
    let snap1 = 1e-12 * (1.0 + amax(f1));
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let sgn = if f0[i] + delta * f1[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * width + j] = sgn * a[(i, j)];
        }
        t[i * width + n + i] = 1.0;
        t[i * width + width - 2] = sgn * f0[i];
        t[i * width + width - 1] = sgn * f1[i];
    }
    for j in (0..n).chain([width - 2, width - 1]) {
        t[m * width + j] = -(0..m).map(|i| t[i * width + j]).sum::<f64>();
    }
    let mut tab = Tableau { rows: m, width, t, basis: (n..n + m).collect(), delta, snap0, snap1 };
    tab.run(n + m);
    let infeas = -tab.rhs(m);
    let bscale = 1.0 + amax(f0) + delta.abs() * amax(f1);
    if infeas > 1e-9 * bscale {
        return Err(LpOutcome::Infeasible);
    }
    // drive artificials out; drop redundant rows
    let mut keep = vec![true; m];
    for i in 0..m {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| tab.t[tab.idx(i, j)].abs() > 1e-9) {
                Some(j) => tab.pivot(i, j),
                None => keep[i] = false,
            }
        }
    }
    let rows: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
    let m2 = rows.len();
    let w2 = n + 2;
    let mut t2 = vec![0.0; (m2 + 1) * w2];
    let mut basis = Vec::with_capacity(m2);
    for (k, &i) in rows.iter().enumerate() {
        for j in 0..n {
            t2[k * w2 + j] = tab.t[tab.idx(i, j)];
        }
        t2[k * w2 + n] = tab.t[tab.idx(i, width - 2)];
        t2[k * w2 + n + 1] = tab.t[tab.idx(i, width - 1)];
        basis.push(tab.basis[i]);
    }
    t2[m2 * w2..m2 * w2 + n].copy_from_slice(c);
    for k in 0..m2 {
        let cb = c[basis[k]];
        if cb != 0.0 {
            for j in 0..w2 {
                t2[m2 * w2 + j] -= cb * t2[k * w2 + j];
            }
        }
    }
    let mut tab = Tableau { rows: m2, width: w2, t: t2, basis, delta, snap0, snap1 };
    if !tab.run(n) {
        return Err(LpOutcome::Unbounded);
    }
    let mut z0 = vec![0.0; n];
    let mut z1 = vec![0.0; n];
    for k in 0..m2 {
        z0[tab.basis[k]] = tab.t[k * w2 + n];
        z1[tab.basis[k]] = tab.t[k * w2 + n + 1];
    }
    Ok((z0, z1))
}

/// `min cᵀz  s.t.  Az = b, z ≥ 0` by a dense two-phase simplex with Bland's rule.
pub fn simplex(c: &[f64], a: &DMatrix<f64>, b: &[f64]) -> LpOutcome {
    match solve_param(c, a, b, &vec![0.0; b.len()], 0.0) {
        Ok((x, _)) => {
            let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
            let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            LpOutcome::Optimal { x, objective }
        }
        Err(o) => o,
    }
}

// ---------------------------------------------------------------- vertices

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VertexSet {
    pub vertices: Vec<Vec<f64>>,
    pub bases: Vec<Vec<usize>>,
}

/// A vertex `v₀ + δ·v₁` of a polyhedron whose right-hand side is affine in `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVertex {
    pub v0: Vec<f64>,
    pub v1: Vec<f64>,
}

impl ParamVertex {
    pub fn at(&self, delta: f64) -> Vec<f64> {
        self.v0.iter().zip(&self.v1).map(|(a, b)| a + delta * b).collect()
    }

    /// `self - (q₀ + δq₁)`, with cancellation in the constant part snapped to zero.
    fn minus(&self, q0: &[f64], q1: &[f64], delta: f64) -> Vec<f64> {
        (0..self.v0.len())
            .map(|i| {
                let mut d0 = self.v0[i] - q0[i];
                if d0.abs() <= SNAP_TOL * (1.0 + self.v0[i].abs() + q0[i].abs()) {
                    d0 = 0.0;
                }
                d0 + delta * (self.v1[i] - q1[i])
            })
            .collect()
    }
}

/// Independent rows of `[E | f₀ f₁]`, or `None` when the system is inconsistent.
fn row_reduce(e: &DMatrix<f64>, f0: &[f64], f1: &[f64]) -> Option<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    let (m, n) = e.shape();
    let mut aug = DMatrix::zeros(m, n + 2);
    aug.view_mut((0, 0), (m, n)).copy_from(e);
    for i in 0..m {
        aug[(i, n)] = f0[i];
        aug[(i, n + 1)] = f1[i];
    }
    let scale = e.amax().max(1.0);
    let mut r = 0;
    for col in 0..n {
        if r == m {
            break;
        }
        let (p, pv) = (r..m).map(|i| (i, aug[(i, col)].abs())).fold((r, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if pv <= 1e-10 * scale {
            continue;
        }
        aug.swap_rows(r, p);
        let piv = aug[(r, col)];
        for i in 0..m {
            if i != r {
                let fct = aug[(i, col)] / piv;
                if fct != 0.0 {
                    for j in 0..n + 2 {
                        aug[(i, j)] -= fct * aug[(r, j)];
                    }
                }
            }
        }
        r += 1;
    }
    let s0 = 1.0 + amax(f0);
    let s1 = 1.0 + amax(f1);
    for i in r..m {
        if aug[(i, n)].abs() > 1e-9 * s0 || aug[(i, n + 1)].abs() > 1e-9 * s1 {
            return None;
        }
    }
    let red = aug.view((0, 0), (r, n)).into_owned();
    Some((red, (0..r).map(|i| aug[(i, n)]).collect(), (0..r).map(|i| aug[(i, n + 1)]).collect()))
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn snap_small(v: &mut DVector<f64>) {
    let tol = 1e-11 * (1.0 + v.amax());
    v.iter_mut().filter(|x| x.abs() <= tol).for_each(|x| *x = 0.0);
}

/// Vertices of `{z ≥ 0 : Ez = f₀ + δf₁}` as affine functions of `δ`, with their bases.
pub fn enumerate_param(e: &DMatrix<f64>, f0: &[f64], f1: &[f64], delta: f64) -> Result<Vec<(ParamVertex, Vec<usize>)>> {
    let (rows, n) = e.shape();
    if n > MAX_VARS || rows > MAX_ROWS {
        return Err(Error::Unsupported(format!(
            "vertex enumeration limited to {MAX_VARS} variables and {MAX_ROWS} rows (got {n} and {rows})"
        )));
    }
    let mut out: Vec<(ParamVertex, Vec<usize>)> = Vec::new();
    let Some((e, f0, f1)) = row_reduce(e, f0, f1) else { return Ok(out) };
    let k = e.nrows();
    if k == 0 {
        out.push((ParamVertex { v0: vec![0.0; n], v1: vec![0.0; n] }, vec![]));
        return Ok(out);
    }
    if k > n {
        return Ok(out);
    }
    let rhs0 = DVector::from_column_slice(&f0);
    let rhs1 = DVector::from_column_slice(&f1);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let bmat = DMatrix::from_fn(k, k, |i, j| e[(i, idx[j])]);
        let lu = bmat.full_piv_lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..k).map(|i| u[(i, i)].abs()).collect();
        let dmax = diag.iter().cloned().fold(0.0, f64::max);
        let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if dmax > 0.0 && dmin > 1e-11 * dmax {
            if let (Some(mut z0), Some(mut z1)) = (lu.solve(&rhs0), lu.solve(&rhs1)) {
                snap_small(&mut z0);
                snap_small(&mut z1);
                let feasible = z0.iter().zip(z1.iter()).all(|(a, b)| {
                    let v = a + delta * b;
                    v >= -FEAS_TOL * (a.abs() + delta.abs() * b.abs())
                });
                if feasible {
                    let mut v0 = vec![0.0; n];
                    let mut v1 = vec![0.0; n];
                    for (t, &j) in idx.iter().enumerate() {
                        v0[j] = z0[t];
                        v1[j] = z1[t];
                    }
                    let r0 = (&e * DVector::from_column_slice(&v0) - &rhs0).amax();
                    let r1 = (&e * DVector::from_column_slice(&v1) - &rhs1).amax();
                    let ok = r0 <= FEAS_TOL * (1.0 + rhs0.amax() + amax(&v0)) && r1 <= FEAS_TOL * (1.0 + rhs1.amax() + amax(&v1));
                    let close = |p: &[f64], q: &[f64]| p.iter().zip(q).all(|(a, b)| (a - b).abs() <= DEDUP_TOL * (1.0 + a.abs()));
                    let dup = out.iter().any(|(w, _)| close(&w.v0, &v0) && close(&w.v1, &v1));
                    if ok && !dup {
                        out.push((ParamVertex { v0, v1 }, idx.clone()));
                    }
                }
            }
        }
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    Ok(out)
}

/// All basic feasible solutions of `{z ≥ 0 : Az = b, extra}`.
pub fn enumerate_vertices(a: &DMatrix<f64>, b: &[f64], extra: Option<(&DMatrix<f64>, &[f64])>) -> Result<VertexSet> {
    let (m0, n) = a.shape();
    let me = extra.map_or(0, |(e, _)| e.nrows());
    let mut e = DMatrix::zeros(m0 + me, n);
    e.view_mut((0, 0), (m0, n)).copy_from(a);
    let mut f = b.to_vec();
    if let Some((ea, eb)) = extra {
        if ea.ncols() != n || eb.len() != me {
            return Err(Error::input("extra rows have the wrong shape"));
        }
        e.view_mut((m0, 0), (me, n)).copy_from(ea);
        f.extend_from_slice(eb);
    }
    let zeros = vec![0.0; f.len()];
    let mut out = VertexSet::default();
    for (v, basis) in enumerate_param(&e, &f, &zeros, 0.0)? {
        out.vertices.push(v.v0.into_iter().map(|x| x.max(0.0)).collect());
        out.bases.push(basis);
    }
    Ok(out)
}

// ---------------------------------------------------------------- Wolfe

fn affine_min_norm(pts: &[&Vec<f64>]) -> Vec<f64> {
    let k = pts.len();
    let mut g = DMatrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = pts[i].iter().zip(pts[j]).map(|(a, b)| a * b).sum();
        }
        g[(i, k)] = 1.0;
        g[(k, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = g.clone().lu().solve(&rhs).unwrap_or_else(|| {
        g.svd(true, true).solve(&rhs, 1e-14).unwrap_or_else(|_| {
            let mut v = DVector::zeros(k + 1);
            v[0] = 1.0;
            v
        })
    });
    sol.iter().take(k).cloned().collect()
}

/// Minimum-norm point of `conv(points)` (Wolfe's algorithm).
pub fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    assert!(!points.is_empty(), "min_norm_point needs at least one point");
    let dim = points[0].len();
    let nrm2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    let start = (0..points.len()).min_by(|&i, &j| nrm2(&points[i]).total_cmp(&nrm2(&points[j]))).unwrap();
    let mut set = vec![start];
    let mut lam = vec![1.0];
    let mut x = points[start].clone();
    for _ in 0..10_000 {
        let xx = nrm2(&x);
        let (j, xp) = (0..points.len())
            .map(|j| (j, x.iter().zip(&points[j]).map(|(a, b)| a * b).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xp <= WOLFE_TOL * xx || set.contains(&j) {
            break;
        }
        set.push(j);
        lam.push(0.0);
        loop {
            let pts: Vec<&Vec<f64>> = set.iter().map(|&i| &points[i]).collect();
            let mu = affine_min_norm(&pts);
            if mu.iter().all(|v| *v > 1e-14) {
                lam = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in lam.iter().zip(&mu) {
                if *m <= 1e-14 && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lam.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut k = 0;
            while k < set.len() {
                if lam[k] <= 1e-14 {
                    set.remove(k);
                    lam.remove(k);
                } else {
                    k += 1;
                }
            }
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
            if set.len() <= 1 {
                break;
            }
        }
        x = vec![0.0; dim];
        for (l, &i) in lam.iter().zip(&set) {
            for (xv, pv) in x.iter_mut().zip(&points[i]) {
                *xv += l * pv;
            }
        }
    }
    x
}

/// Euclidean distance from `v` to `conv(points)`.
pub fn distance_to_hull(v: &[f64], points: &[Vec<f64>]) -> f64 {
    let shifted: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(v).map(|(a, b)| a - b).collect()).collect();
    min_norm_point(&shifted).iter().map(|a| a * a).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------- geometry

fn dense(a: &SparseMatrix) -> DMatrix<f64> {
    a.to_dense()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of `Null(A)` (columns).
fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    let ata = a.transpose() * a;
    let eig = SymmetricEigen::new(ata);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= 1e-12 * top.max(1e-300)).collect();
    DMatrix::from_fn(n, cols.len(), |i, j| eig.eigenvectors[(i, cols[j])])
}

/// `σ_max/σ_min⁺` of `A` from a dense SVD.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let low = sv.iter().cloned().filter(|s| *s > 1e-12 * top).fold(f64::INFINITY, f64::min);
    if top == 0.0 {
        1.0
    } else {
        top / low
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Exact vertex description of an LP's primal-dual feasible and optimal sets.
#[derive(Clone, Debug)]
pub struct LpGeometry {
    pub name: String,
    pub n: usize,
    a: DMatrix<f64>,
    b: Vec<f64>,
    z: DMatrix<f64>,
    c: Vec<f64>,
    q: Vec<f64>,
    q0: f64,
    pub kappa: f64,
    pub f_star: f64,
    pub primal_vertices: Vec<Vec<f64>>,
    pub dual_vertices: Vec<Vec<f64>>,
    /// Vertices of `W*` in `(x, s)` coordinates.
    pub wstar: Vec<Vec<f64>>,
    /// `None` when every extreme point is optimal.
    pub delta_bar: Option<f64>,
    pub dist0_wstar: f64,
    pub max_norm_wstar: f64,
    /// Width of the orthant `ℝ^{2n}_+`.
    pub width: f64,
}

impl LpGeometry {
    pub fn new(inst: &ClpInstance) -> Result<Self> {
        if !inst.cone().is_lp() {
            return Err(Error::Unsupported("the geometry lab handles LPs only".into()));
        }
        let n = inst.n();
        let a = dense(inst.a());
        let b = inst.b().to_vec();
        let c = inst.c().to_vec();
        let z = null_space(&a);
        let q: Vec<f64> = {
            let pinv = a.clone().svd(true, true).pseudo_inverse(1e-12 * a.amax().max(1e-300)).map_err(Error::numerical)?;
            (pinv * DVector::from_column_slice(&b)).as_slice().to_vec()
        };
        let q0 = dotv(&q, &c);
        let f_star = match simplex(&c, &a, &b) {
            LpOutcome::Optimal { objective, .. } => objective,
            LpOutcome::Infeasible => return Err(Error::Model("primal problem is infeasible".into())),
            LpOutcome::Unbounded => return Err(Error::Model("primal problem is unbounded".into())),
        };
        let primal = enumerate_vertices(&a, &b, None)?.vertices;
        let zt = z.transpose();
        let ztc = (&zt * DVector::from_column_slice(&c)).as_slice().to_vec();
        let dual = enumerate_vertices(&zt, &ztc, None)?.vertices;
        if dual.is_empty() {
            return Err(Error::Model("dual problem is infeasible".into()));
        }
        let tol = FEAS_TOL * (1.0 + f_star.abs());
        let pgap = |x: &Vec<f64>| dotv(&c, x) - f_star;
        let dgap = |s: &Vec<f64>| f_star - q0 + dotv(&q, s);
        let popt: Vec<&Vec<f64>> = primal.iter().filter(|x| pgap(x) <= tol).collect();
        let dopt: Vec<&Vec<f64>> = dual.iter().filter(|s| dgap(s).abs() <= tol).collect();
        if popt.is_empty() || dopt.is_empty() {
            return Err(Error::Model("no optimal vertex found (unbounded optimal face?)".into()));
        }
        let mut wstar = Vec::new();
        for x in &popt {
            for s in &dopt {
                let mut w = (*x).clone();
                w.extend_from_slice(s);
                wstar.push(w);
            }
        }
        let delta_bar = primal
            .iter()
            .map(pgap)
            .chain(dual.iter().map(dgap))
            .filter(|g| *g > tol)
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
        let dist0_wstar = norm(&min_norm_point(&wstar));
        let max_norm_wstar = wstar.iter().map(|w| norm(w)).fold(0.0, f64::max);
        let kappa = condition_number(&a);
        let geom = Self {
            name: inst.name().to_string(),
            n,
            a,
            b,
            z,
            c,
            q,
            q0,
            kappa,
            f_star,
            primal_vertices: primal,
            dual_vertices: dual,
            wstar,
            delta_bar,
            dist0_wstar,
            max_norm_wstar,
            width: ConeSpec::nonneg(2 * n).width(),
        };
        let probe = delta_bar.unwrap_or(1.0).max(1.0);
        let (e, f0, f1) = geom.sublevel_system(false);
        let f: Vec<f64> = f0.iter().zip(&f1).map(|(a, b)| a + probe * b).collect();
        let mut cost = vec![-1.0; e.ncols()];
        *cost.last_mut().unwrap() = 0.0;
        if simplex(&cost, &e, &f) == LpOutcome::Unbounded {
            return Err(Error::Model("sublevel sets are unbounded".into()));
        }
        Ok(geom)
    }

    /// `Gap(x, s) = cᵀx + qᵀs - q₀` on `w = (x, s)`.
    pub fn gap(&self, w: &[f64]) -> f64 {
        dotv(&self.c, &w[..self.n]) + dotv(&self.q, &w[self.n..]) - self.q0
    }

    /// Equality system `Ez = f₀ + δf₁` of `W_δ` over `(x, s, t)`; with `radius`
    /// a column for `r` (substituting `x = x' + r𝟙`, `s = s' + r𝟙`) is inserted before `t`.
    fn sublevel_system(&self, radius: bool) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let m = self.a.nrows();
        let k = self.z.ncols();
        let cols = 2 * n + 1 + usize::from(radius);
        let rows = m + k + 1;
        let mut e = DMatrix::zeros(rows, cols);
        let mut f = vec![0.0; rows];
        e.view_mut((0, 0), (m, n)).copy_from(&self.a);
        f[..m].copy_from_slice(&self.b);
        let zt = self.z.transpose();
        e.view_mut((m, n), (k, n)).copy_from(&zt);
        let ztc = &zt * DVector::from_column_slice(&self.c);
        f[m..m + k].copy_from_slice(ztc.as_slice());
        for j in 0..n {
            e[(m + k, j)] = self.c[j];
            e[(m + k, n + j)] = self.q[j];
        }
        f[m + k] = self.q0;
        let mut f1 = vec![0.0; rows];
        f1[m + k] = 1.0;
        if radius {
            let rc = 2 * n;
            for i in 0..m {
                e[(i, rc)] = self.a.row(i).sum();
            }
            for i in 0..k {
                e[(m + i, rc)] = zt.row(i).sum();
            }
            e[(m + k, rc)] = self.c.iter().sum::<f64>() + self.q.iter().sum::<f64>();
        }
        e[(m + k, cols - 1)] = 1.0;
        (e, f, f1)
    }

    fn sublevel_param(&self, delta: f64) -> Result<Vec<ParamVertex>> {
        let (e, f0, f1) = self.sublevel_system(false);
        Ok(enumerate_param(&e, &f0, &f1, delta)?
            .into_iter()
            .map(|(mut v, _)| {
                v.v0.truncate(2 * self.n);
                v.v1.truncate(2 * self.n);
                v
            })
            .collect())
    }

    /// Vertices of `W_δ` in `(x, s)` coordinates.
    pub fn sublevel_vertices(&self, delta: f64) -> Result<Vec<Vec<f64>>> {
        Ok(self.sublevel_param(delta)?.iter().map(|v| v.at(delta).into_iter().map(|x| x.max(0.0)).collect()).collect())
    }

    pub fn diameter(&self, delta: f64) -> Result<f64> {
        let vs = self.sublevel_param(delta)?;
        if vs.is_empty() {
            return Err(Error::Model(format!("sublevel set W_{delta:e} is empty")));
        }
        let mut d = 0.0f64;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                d = d.max(norm(&vs[i].minus(&vs[j].v0, &vs[j].v1, delta)));
            }
        }
        Ok(d)
    }

    /// `max r  s.t.  w ∈ W_δ, w ≥ r𝟙`, with its maximizer (the conic center).
    pub fn conic_radius(&self, delta: f64) -> Result<(f64, Vec<f64>)> {
        let (e, f0, f1) = self.sublevel_system(true);
        let mut cost = vec![0.0; e.ncols()];
        cost[2 * self.n] = -1.0;
        match solve_param(&cost, &e, &f0, &f1, delta) {
            Ok((z0, z1)) => {
                let rc = 2 * self.n;
                let r = (z0[rc] + delta * z1[rc]).max(0.0);
                let w = (0..rc).map(|i| (z0[i] + delta * z1[i]).max(0.0) + r).collect();
                Ok((r, w))
            }
            Err(LpOutcome::Infeasible) => Err(Error::Model(format!("sublevel set W_{delta:e} is empty"))),
            Err(_) => Err(Error::Model("conic radius is unbounded".into())),
        }
    }

    /// `max_{w ∈ W_δ} Dist(w, W*)`.
    pub fn hausdorff_to_optimum(&self, delta: f64) -> Result<f64> {
        let vs = self.sublevel_param(delta)?;
        let zeros = vec![0.0; 2 * self.n];
        let mut dh = 0.0f64;
        for v in &vs {
            let shifted: Vec<Vec<f64>> = self
                .wstar
                .iter()
                .map(|p| {
                    let p = ParamVertex { v0: p.clone(), v1: zeros.clone() };
                    p.minus(&v.v0, &v.v1, delta)
                })
                .collect();
            dh = dh.max(norm(&min_norm_point(&shifted)));
        }
        Ok(dh)
    }

    pub fn gamma(&self) -> f64 {
        self.delta_bar.unwrap_or(1.0) * 2f64.powi(-GAMMA_SHIFT)
    }

    /// `r_γ/γ` at `γ = δ̄·2^-20`, standing in for `sup_γ r_γ/γ`.
    pub fn sup_r_over_gamma(&self) -> Result<f64> {
        let g = self.gamma();
        Ok(self.conic_radius(g)?.0 / g)
    }

    /// `Width_K/max‖w*‖ ≤ sup r_γ/γ ≤ 1/max‖w*‖`.
    pub fn sandwich(&self) -> Result<SandwichCheck> {
        let value = self.sup_r_over_gamma()?;
        let lower = self.width / self.max_norm_wstar;
        let upper = 1.0 / self.max_norm_wstar;
        let holds = lower <= value * (1.0 + 1e-9) && value <= upper * (1.0 + 1e-9);
        Ok(SandwichCheck { lower, value, upper, holds })
    }

    /// `min{ε_cons, √2/(4·Dist(0,W*))·ε_gap, (1/14)·sup(r_γ/γ)·ε_obj}`.
    pub fn merr(&self, eps: &ToleranceTriple) -> Result<f64> {
        let gap_term = if self.dist0_wstar > 0.0 {
            2f64.sqrt() / (4.0 * self.dist0_wstar) * eps.eps_gap
        } else {
            f64::INFINITY
        };
        let obj_term = self.sup_r_over_gamma()? / 14.0 * eps.eps_obj;
        Ok(eps.eps_cons.min(gap_term).min(obj_term))
    }

    fn log_terms(&self, merr: f64) -> f64 {
        let l1 = (33.0 * self.kappa * self.dist0_wstar).ln().max(0.0);
        let l2 = (1.0 / merr).ln().max(0.0);
        l1 + l2
    }

    pub fn sweep(&self, grid: &[f64]) -> Result<Vec<SweepRow>> {
        grid.iter()
            .map(|&delta| {
                let d = self.diameter(delta)?;
                let (r, _) = self.conic_radius(delta)?;
                let dh = self.hausdorff_to_optimum(delta)?;
                Ok(SweepRow { delta, d, r, d_over_r: d / r, dh })
            })
            .collect()
    }

    /// `T_δ` at one sweep row.
    pub fn t_delta(&self, row: &SweepRow, merr: f64) -> f64 {
        t_delta_formula(self.kappa, row.d, row.r, row.dh, self.dist0_wstar, merr)
    }

    /// `inf_δ T_δ` over the rows, with the minimizing `δ`.
    pub fn bound_t_clp(&self, rows: &[SweepRow], eps: &ToleranceTriple) -> Result<(f64, f64)> {
        let merr = self.merr(eps)?;
        Ok(rows
            .iter()
            .map(|r| (self.t_delta(r, merr), r.delta))
            .fold((f64::INFINITY, f64::NAN), |a, b| if b.0 < a.0 { b } else { a }))
    }

    /// `255κ·min_{δ ≤ δ̄} D_δ/r_δ·[ln(33κ·Dist(0,W*)) + ln(1/MErr)]`.
    pub fn bound_t_lp(&self, rows: &[SweepRow], eps: &ToleranceTriple) -> Result<f64> {
        let merr = self.merr(eps)?;
        let cap = self.delta_bar.unwrap_or(f64::INFINITY) * (1.0 + 1e-12);
        let ratio = rows.iter().filter(|r| r.delta <= cap).map(|r| r.d_over_r).fold(f64::INFINITY, f64::min);
        Ok(255.0 * self.kappa * ratio * self.log_terms(merr))
    }

    pub fn report(&self, delta: f64, eps: Option<&ToleranceTriple>) -> Result<GeometryReport> {
        let d = self.diameter(delta)?;
        let (r, w) = self.conic_radius(delta)?;
        let dh = self.hausdorff_to_optimum(delta)?;
        let (merr, t_delta, t_lp) = match eps {
            Some(e) => {
                let merr = self.merr(e)?;
                let row = SweepRow { delta, d, r, d_over_r: d / r, dh };
                let t_lp = match self.delta_bar {
                    Some(db) => {
                        let grid: Vec<f64> = delta_grid(db).into_iter().filter(|g| *g <= db * (1.0 + 1e-12)).collect();
                        Some(self.bound_t_lp(&self.sweep(&grid)?, e)?)
                    }
                    None => None,
                };
                (Some(merr), Some(self.t_delta(&row, merr)), t_lp)
            }
            None => (None, None, None),
        };
        Ok(GeometryReport {
            instance: self.name.clone(),
            delta,
            kappa: self.kappa,
            d_delta: d,
            r_delta: r,
            w_delta: w,
            dh_delta: dh,
            delta_bar: self.delta_bar,
            sup_r_over_gamma: self.sup_r_over_gamma()?,
            dist0_wstar: self.dist0_wstar,
            max_norm_wstar: self.max_norm_wstar,
            width: self.width,
            merr,
            t_delta,
            t_lp,
        })
    }

    /// Error-bound spot check: for random `w ∈ V` near `W_δ` with
    /// `Gap(w) ≤ δ`, `Dist(w, W_δ)/Dist(w, K) ≤ D_δ/r_δ`. Returns the number
    /// of checked points and the largest ratio of the two sides.
    pub fn error_bound_spot_check(&self, delta: f64, samples: usize, seed: u64) -> Result<(usize, f64)> {
        let vs = self.sublevel_vertices(delta)?;
        let bound = self.diameter(delta)? / self.conic_radius(delta)?.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, m, k) = (self.n, self.a.nrows(), self.z.ncols());
        let mut checked = 0;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let base = &vs[rng.random_range(0..vs.len())];
            let u = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
            let y = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let dx = &self.z * u;
            let ds = -(self.a.transpose() * y);
            let mut w: Vec<f64> = base.iter().zip(dx.iter().chain(ds.iter())).map(|(a, d)| a + d).collect();
            if self.gap(&w) > delta {
                w = base.iter().zip(dx.iter().chain(ds.iter())).map(|(a, d)| a - d).collect();
            }
            let dk = norm(&w.iter().map(|v| v.min(0.0)).collect::<Vec<_>>());
            if dk <= 1e-12 || self.gap(&w) > delta + 1e-12 {
                continue;
            }
            let dw = distance_to_hull(&w, &vs);
            checked += 1;
            worst = worst.max(dw / dk / bound);
            debug_assert!(w.len() == 2 * n);
        }
        Ok((checked, worst))
    }
}

pub fn t_delta_formula(kappa: f64, d: f64, r: f64, dh: f64, dist0: f64, merr: f64) -> f64 {
    let l1 = (33.0 * kappa * dist0).ln().max(0.0);
    let l2 = (1.0 / merr).ln().max(0.0);
    190.0 * kappa * (d / r) * (l1 + l2) + 50.0 * kappa * dh / merr
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub d: f64,
    pub r: f64,
    pub d_over_r: f64,
    pub dh: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("delta,D_over_r,dH\n");
    for r in rows {
        let _ = writeln!(s, "{:e},{:e},{:e}", r.delta, r.d_over_r, r.dh);
    }
    s
}

/// 40 log-spaced points per decade from `1e-12·δ̄` to `1e2·δ̄`.
pub fn delta_grid(delta_bar: f64) -> Vec<f64> {
    let decades = 14;
    (0..=decades * GRID_PER_DECADE)
        .map(|i| delta_bar * 10f64.powf(-12.0 + i as f64 / GRID_PER_DECADE as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub instance: String,
    pub delta: f64,
    pub kappa: f64,
    pub d_delta: f64,
    pub r_delta: f64,
    pub w_delta: Vec<f64>,
    pub dh_delta: f64,
    pub delta_bar: Option<f64>,
    pub sup_r_over_gamma: f64,
    pub dist0_wstar: f64,
    pub max_norm_wstar: f64,
    pub width: f64,
    pub merr: Option<f64>,
    pub t_delta: Option<f64>,
    pub t_lp: Option<f64>,
}

impl GeometryReport {
    /// `D_δ ≥ d^H_δ > r_δ > 0`.
    pub fn ordering_holds(&self) -> bool {
        self.d_delta >= self.dh_delta * (1.0 - 1e-9) && self.dh_delta > self.r_delta && self.r_delta > 0.0
    }
}

pub fn best_suboptimal_gap(inst: &ClpInstance) -> Result<Option<f64>> {
    Ok(LpGeometry::new(inst)?.delta_bar)
}

pub fn conic_radius(inst: &ClpInstance, delta: f64) -> Result<(f64, Vec<f64>)> {
    LpGeometry::new(inst)?.conic_radius(delta)
}

pub fn diameter(inst: &ClpInstance, delta: f64) -> Result<f64> {
    LpGeometry::new(inst)?.diameter(delta)
}

pub fn hausdorff_to_optimum(inst: &ClpInstance, delta: f64) -> Result<f64> {
    LpGeometry::new(inst)?.hausdorff_to_optimum(delta)
}

pub fn merr(inst: &ClpInstance, eps: &ToleranceTriple) -> Result<f64> {
    LpGeometry::new(inst)?.merr(eps)
}

// ---------------------------------------------------------------- central path

/// Exact LP central point `w(η)`: `x ∘ s = 𝟙/η` with `Ax = b`,
/// `s = c - Aᵀy`, by damped Newton on the dual barrier problem.
pub fn central_point(inst: &ClpInstance, eta: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if !inst.cone().is_lp() {
        return Err(Error::Unsupported("central_point handles LPs only".into()));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::input("eta must be positive"));
    }
    let a = dense(inst.a());
    let (m, n) = a.shape();
    let c = DVector::from_column_slice(inst.c());
    let b = DVector::from_column_slice(inst.b());
    // strictly feasible dual start: max r s.t. Aᵀ(y⁺ - y⁻) + r𝟙 + u = c, r + v = 1
    let cols = 2 * m + 1 + n + 1;
    let mut e = DMatrix::zeros(n + 1, cols);
    for j in 0..n {
        for i in 0..m {
            e[(j, i)] = a[(i, j)];
            e[(j, m + i)] = -a[(i, j)];
        }
        e[(j, 2 * m)] = 1.0;
        e[(j, 2 * m + 1 + j)] = 1.0;
    }
    e[(n, 2 * m)] = 1.0;
    e[(n, cols - 1)] = 1.0;
    let mut f: Vec<f64> = inst.c().to_vec();
    f.push(1.0);
    let mut cost = vec![0.0; cols];
    cost[2 * m] = -1.0;
    let mut y = match simplex(&cost, &e, &f) {
        LpOutcome::Optimal { x, .. } if x[2 * m] > 0.0 => DVector::from_fn(m, |i, _| x[i] - x[m + i]),
        _ => return Err(Error::Model("dual problem has no strictly feasible point".into())),
    };
    let at = a.transpose();
    let slack = |y: &DVector<f64>| &c - &at * y;
    let phi = |s: &DVector<f64>, y: &DVector<f64>| -b.dot(y) - s.iter().map(|v| v.ln()).sum::<f64>() / eta;
    for _ in 0..500 {
        let s = slack(&y);
        let sinv = s.map(|v| 1.0 / v);
        let g = -&b + (&a * &sinv) / eta;
        let h = DMatrix::from_fn(m, m, |i, k| (0..n).map(|j| a[(i, j)] * a[(k, j)] * sinv[j] * sinv[j]).sum::<f64>() / eta);
        let dy = -h.clone().svd(true, true).solve(&g, 1e-14 * h.amax().max(1e-300)).map_err(Error::numerical)?;
        let dec2 = -g.dot(&dy);
        if dec2 <= 1e-30 * (1.0 + phi(&s, &y).abs()) {
            break;
        }
        let mut t = if dec2.sqrt() > 0.25 { 1.0 / (1.0 + dec2.sqrt()) } else { 1.0 };
        let f0 = phi(&s, &y);
        loop {
            let yn = &y + &dy * t;
            let sn = slack(&yn);
            if sn.iter().all(|v| *v > 0.0) && phi(&sn, &yn) <= f0 + 1e-4 * t * g.dot(&dy) + 1e-15 * f0.abs() {
                y = yn;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return Err(Error::numerical("central_point line search failed"));
            }
        }
    }
    let s = slack(&y);
    let x: Vec<f64> = s.iter().map(|v| 1.0 / (eta * v)).collect();
    Ok((x, y.as_slice().to_vec(), s.as_slice().to_vec()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledGeometryReport {
    pub eta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub d: f64,
    pub r: f64,
    pub dh: f64,
    pub dist0: f64,
    pub bound_d: f64,
    pub bound_r: f64,
    pub bound_dh: f64,
    pub bound_dist0: f64,
    pub bound_ratio: f64,
    /// Diameter, radius, Hausdorff, distance and ratio inequalities, in that order.
    pub holds: [bool; 5],
}

impl RescaledGeometryReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|h| *h)
    }
}

/// Geometry of `W̃_α` after the Hessian rescaling at a central point
/// `(x, s)` with parameter `η`, where `α = Gap(x, s)`.
pub fn rescaled_geometry_check(inst: &ClpInstance, x: &[f64], s: &[f64], eta: f64) -> Result<RescaledGeometryReport> {
    let base = LpGeometry::new(inst)?;
    let mut w = x.to_vec();
    w.extend_from_slice(s);
    let alpha = base.gap(&w);
    let resc = hessian_rescaling_with_eta(inst, x, eta, false)?;
    let tilde = build_rescaled(inst, &resc, false)?;
    let geom = LpGeometry::new(&tilde.instance)?;
    let d = geom.diameter(alpha)?;
    let (r, _) = geom.conic_radius(alpha)?;
    let dh = geom.hausdorff_to_optimum(alpha)?;
    let dist0 = geom.dist0_wstar;
    let theta = inst.n() as f64;
    let se = eta.sqrt();
    let big = 4.0 * theta + 4.0 * (2.0 * theta).sqrt();
    let bound_d = big / se;
    let bound_r = 1.0 / se;
    let bound_dh = big / se;
    let bound_dist0 = (2.0 * theta + 3.0 * (2.0 * theta).sqrt()) / se;
    let tol = 1e-9;
    let holds = [
        d <= bound_d * (1.0 + tol),
        r >= bound_r * (1.0 - tol),
        dh <= bound_dh * (1.0 + tol),
        dist0 <= bound_dist0 * (1.0 + tol),
        d / r <= big * (1.0 + tol),
    ];
    Ok(RescaledGeometryReport {
        eta,
        theta,
        alpha,
        d,
        r,
        dh,
        dist0,
        bound_d,
        bound_r,
        bound_dh,
        bound_dist0,
        bound_ratio: big,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::nu_family;

    fn dm(rows: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn simplex_small_cases() {
        // min -x1 - x2, x1 + 2x2 + s1 = 4, 3x1 + x2 + s2 = 6 → x = (1.6, 1.2)
        let a = dm(&[vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]]);
        match simplex(&[-1.0, -1.0, 0.0, 0.0], &a, &[4.0, 6.0]) {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
                assert!((objective + 2.8).abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
        assert_eq!(simplex(&[1.0, 1.0], &dm(&[vec![1.0, 1.0]]), &[-1.0]), LpOutcome::Infeasible);
        assert_eq!(simplex(&[-1.0, 0.0], &dm(&[vec![1.0, -1.0]]), &[1.0]), LpOutcome::Unbounded);
        // redundant row
        let a = dm(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert!(matches!(simplex(&[1.0, 2.0], &a, &[1.0, 2.0]), LpOutcome::Optimal { objective, .. } if (objective - 1.0).abs() < 1e-12));
    }

    #[test]
    fn vertex_examples() {
        let vs = enumerate_vertices(&dm(&[vec![-10.0, 1.0, 1.0]]), &[1.0], None).unwrap();
        let mut v = vs.vertices.clone();
        v.sort_by(|a, b| b[1].total_cmp(&a[1]));
        assert_eq!(v, vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let vs = enumerate_vertices(&dm(&[vec![1.0, 1.0]]), &[1.0], None).unwrap();
        assert_eq!(vs.vertices.len(), 2);
        let vs = enumerate_vertices(&dm(&[vec![1.0, 1.0]]), &[-1.0], None).unwrap();
        assert!(vs.vertices.is_empty());
        let big = DMatrix::zeros(1, 26);
        assert!(matches!(enumerate_vertices(&big, &[0.0], None), Err(Error::Unsupported(_))));
    }

    #[test]
    fn wolfe_examples() {
        let pts = vec![vec![1.0, -1.0], vec![1.0, 1.0]];
        let p = min_norm_point(&pts);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let tri = vec![vec![-1.0, -1.0], vec![2.0, -1.0], vec![-1.0, 2.0]];
        assert!(norm(&min_norm_point(&tri)) < 1e-12);
        assert!((distance_to_hull(&[3.0, 0.0], &[vec![0.0, 0.0], vec![1.0, 0.0]]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn segment_hausdorff_equals_length() {
        // min x1 s.t. x1 + x2 = 1: unique optimum (0,1) with s* = (1,0)
        let inst = ClpInstance::new("seg", SparseMatrix::from_dense(&[vec![1.0, 1.0]]), vec![1.0], vec![1.0, 0.0], ConeSpec::nonneg(2))
            .unwrap();
        let g = LpGeometry::new(&inst).unwrap();
        assert_eq!(g.wstar.len(), 1);
        let dh = g.hausdorff_to_optimum(0.5).unwrap();
        let d = g.diameter(0.5).unwrap();
        assert!(dh <= d + 1e-12);
        assert!(g.hausdorff_to_optimum(0.0).unwrap() < 1e-9);
    }

    #[test]
    fn nu_family_vertices_and_gap() {
        let g = LpGeometry::new(&nu_family(1e-4)).unwrap();
        assert!((g.f_star - 1.0).abs() < 1e-12);
        assert!((g.delta_bar.unwrap() - 1e-4).abs() < 1e-12);
        assert!((g.max_norm_wstar - 10.2001f64.hypot(1.0)).abs() < 1e-3);
        let g0 = LpGeometry::new(&nu_family(0.0)).unwrap();
        assert!((g0.delta_bar.unwrap() - 1.02).abs() < 1e-12);
        assert_eq!(g0.wstar.len(), 2);
    }

    #[test]
    fn all_vertices_optimal_gives_infinite_gap() {
        let inst = ClpInstance::new("flat", SparseMatrix::from_dense(&[vec![1.0, 1.0]]), vec![1.0], vec![1.0, 1.0], ConeSpec::nonneg(2))
            .unwrap();
        assert_eq!(best_suboptimal_gap(&inst).unwrap(), None);
    }

    #[test]
    fn merr_min_structure() {
        let g = LpGeometry::new(&nu_family(1e-4)).unwrap();
        let e = ToleranceTriple::new(1e-3, 1e30, 1e30).unwrap();
        assert_eq!(g.merr(&e).unwrap(), 1e-3);
        let sw = g.sandwich().unwrap();
        assert!(sw.holds, "{sw:?}");
    }

    #[test]
    fn ordering_and_monotonicity_on_nu_family() {
        let g = LpGeometry::new(&nu_family(1e-4)).unwrap();
        let grid: Vec<f64> = delta_grid(g.delta_bar.unwrap()).into_iter().step_by(20).collect();
        let rows = g.sweep(&grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].r >= w[0].r * (1.0 - 1e-9));
            assert!(w[1].dh >= w[0].dh * (1.0 - 1e-9) - 1e-12);
        }
        let rep = g.report(1e-2, Some(&ToleranceTriple::uniform(1e-6))).unwrap();
        assert!(rep.ordering_holds(), "{rep:?}");
        assert!(rep.t_lp.unwrap() > 0.0, "{rep:?}");
        let (checked, worst) = g.error_bound_spot_check(1e-2, 200, 3).unwrap();
        assert!(checked > 20);
        assert!(worst <= 1.0 + 1e-9, "{worst}");
    }

    #[test]
    fn t_delta_clamps_logs() {
        // both logs clamp to 0, only the Hausdorff term remains
        assert_eq!(t_delta_formula(1.0, 1.0, 1.0, 2.0, 0.01, 2.0), 50.0);
        let g = LpGeometry::new(&nu_family(1e-4)).unwrap();
        let grid: Vec<f64> = delta_grid(g.delta_bar.unwrap()).into_iter().step_by(40).collect();
        let rows = g.sweep(&grid).unwrap();
        let eps = ToleranceTriple::uniform(1e-4);
        let (inf, _) = g.bound_t_clp(&rows, &eps).unwrap();
        let merr = g.merr(&eps).unwrap();
        assert!(rows.iter().all(|r| inf <= g.t_delta(r, merr)));
    }

    #[test]
    fn central_point_is_central() {
        let inst = nu_family(1e-4);
        let (x, y, s) = central_point(&inst, 5.0).unwrap();
        for (a, b) in x.iter().zip(&s) {
            assert!((a * b - 0.2).abs() < 1e-12);
        }
        let ax: f64 = -10.0 * x[0] + x[1] + x[2];
        assert!((ax - 1.0).abs() < 1e-12);
        assert!((inst.slack(&y)[0] - s[0]).abs() < 1e-14);
    }

    #[test]
    fn rescaled_bounds_hold_on_nu_family() {
        let inst = nu_family(1e-4);
        for eta in [0.1, 3.0, 300.0] {
            let (x, _, s) = central_point(&inst, eta).unwrap();
            let rep = rescaled_geometry_check(&inst, &x, &s, eta).unwrap();
            assert!((rep.alpha - 3.0 / eta).abs() < 1e-9 * (1.0 + rep.alpha));
            assert!(rep.all_hold(), "{rep:?}");
        }
    }
}
