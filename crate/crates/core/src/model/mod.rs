//! Problem data, derived vectors and solution-quality metrics.

mod json;
mod mps;
mod stdform;

use std::sync::OnceLock;

pub use json::{read_instance_json, write_instance_json, CsrJson, InstanceJson};
pub use mps::{parse_mps, read_mps, MpsFormat, RawLp, RawRow, RowKind};
pub use stdform::{to_standard_form, StandardForm, VarMap};

use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::linalg::{
    cg_solve, dot, estimate_spectra, norm, SparseMatrix, SpectralEstimates, SpectralOptions,
};
use crate::{Error, Result};

/// Relative CG tolerance for the `AAᵀ` solves behind `q` and projections.
pub const PROJECTION_TOL: f64 = 1e-13;
pub const PROJECTION_MAX_ITER: usize = 1000;

/// `q = Aᵀ(AAᵀ)†b` and `q₀ = bᵀ(AAᵀ)†Ac`.
#[derive(Clone, Debug)]
pub struct QData {
    pub q: Vec<f64>,
    pub q0: f64,
    /// Relative residual of the `AAᵀu = b` solve.
    pub residual: f64,
}

/// `min cᵀx + offset  s.t.  Ax = b, x ∈ K`.
#[derive(Clone, Debug)]
pub struct ClpInstance {
    name: String,
    a: SparseMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    cone: ConeSpec,
    obj_offset: f64,
    dual_shift: Vec<f64>,
    c_projected: bool,
    projection_residual: Option<f64>,
    spectra: OnceLock<SpectralEstimates>,
    qdata: OnceLock<QData>,
}

impl ClpInstance {
    pub fn new(
        name: impl Into<String>,
        a: SparseMatrix,
        b: Vec<f64>,
        c: Vec<f64>,
        cone: ConeSpec,
    ) -> Result<Self> {
        if b.len() != a.nrows() || c.len() != a.ncols() || cone.dim() != a.ncols() {
            return Err(Error::input(format!(
                "dimension mismatch: A is {}x{}, b {}, c {}, cone {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len(),
                cone.dim()
            )));
        }
        if b.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::input("b or c has non-finite entries"));
        }
        let m = a.nrows();
        Ok(Self {
            name: name.into(),
            a,
            b,
            c,
            cone,
            obj_offset: 0.0,
            dual_shift: vec![0.0; m],
            c_projected: false,
            projection_residual: None,
            spectra: OnceLock::new(),
            qdata: OnceLock::new(),
        })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.obj_offset = offset;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }
    pub fn m(&self) -> usize {
        self.a.nrows()
    }
    pub fn n(&self) -> usize {
        self.a.ncols()
    }
    pub fn obj_offset(&self) -> f64 {
        self.obj_offset
    }
    /// Shift added to this instance's `y` to obtain the dual of the data it was derived from.
    pub fn dual_shift(&self) -> &[f64] {
        &self.dual_shift
    }
    pub fn c_projected(&self) -> bool {
        self.c_projected
    }
    pub fn projection_residual(&self) -> Option<f64> {
        self.projection_residual
    }

    /// Spectral data of `A`, computed once with default options.
    pub fn spectra(&self) -> Result<&SpectralEstimates> {
        if let Some(s) = self.spectra.get() {
            return Ok(s);
        }
        let s = estimate_spectra(&self.a, &SpectralOptions::default())?;
        Ok(self.spectra.get_or_init(|| s))
    }

    /// Installs precomputed spectral data (ignored if already set).
    pub fn set_spectra(&self, s: SpectralEstimates) {
        let _ = self.spectra.set(s);
    }

    pub fn qdata(&self) -> &QData {
        self.qdata.get_or_init(|| {
            let res = solve_gram(&self.a, &self.b);
            let q = self.a.spmv_t(&res.0).expect("dims");
            let q0 = dot(&q, &self.c);
            QData { q, q0, residual: res.1 }
        })
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) + self.obj_offset
    }

    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        dot(&self.b, y) + self.obj_offset
    }

    /// `s = c - Aᵀy`
    pub fn slack(&self, y: &[f64]) -> Vec<f64> {
        let aty = self.a.spmv_t(y).expect("dims");
        self.c.iter().zip(&aty).map(|(c, v)| c - v).collect()
    }

    /// Same data with a different objective vector (caches reset).
    pub(crate) fn with_c(&self, c: Vec<f64>) -> Self {
        let mut out = Self::new(self.name.clone(), self.a.clone(), self.b.clone(), c, self.cone.clone())
            .expect("same dims");
        if let Some(s) = self.spectra.get() {
            out.set_spectra(s.clone());
        }
        out.obj_offset = self.obj_offset;
        out.dual_shift = self.dual_shift.clone();
        out
    }
}

/// Solves `AAᵀu = r` with Jacobi-preconditioned CG. Returns `(u, relative residual)`.
pub(crate) fn solve_gram(a: &SparseMatrix, r: &[f64]) -> (Vec<f64>, f64) {
    let diag: Vec<f64> = (0..a.nrows()).map(|i| dot(a.row(i).1, a.row(i).1)).collect();
    let mut tmp = vec![0.0; a.ncols()];
    let res = cg_solve(
        |v, out| {
            a.spmv_t_into(v, &mut tmp);
            a.spmv_into(&tmp, out);
        },
        r,
        Some(&diag),
        PROJECTION_TOL,
        PROJECTION_MAX_ITER,
    );
    let rel = res.relative_residual();
    (res.x, rel)
}

/// Replaces `c` by its projection onto `Null(A)`. The objective offset
/// and dual shift are adjusted so objective values and `y` refer to the
/// original data.
pub fn project_c_to_nullspace(inst: &ClpInstance) -> ClpInstance {
    let ac = inst.a.spmv(&inst.c).expect("dims");
    let (lam, resid) = solve_gram(&inst.a, &ac);
    let atl = inst.a.spmv_t(&lam).expect("dims");
    let cbar: Vec<f64> = inst.c.iter().zip(&atl).map(|(c, v)| c - v).collect();
    let mut out = inst.with_c(cbar);
    out.obj_offset = inst.obj_offset + dot(&inst.b, &lam);
    out.dual_shift = inst.dual_shift.iter().zip(&lam).map(|(d, l)| d + l).collect();
    out.c_projected = true;
    out.projection_residual = Some(resid);
    out
}

pub fn compute_q(inst: &ClpInstance) -> Vec<f64> {
    inst.qdata().q.clone()
}

/// `Gap(x,s) = cᵀx + qᵀs - q₀`
pub fn gap(inst: &ClpInstance, x: &[f64], s: &[f64]) -> f64 {
    let qd = inst.qdata();
    dot(&inst.c, x) + dot(&qd.q, s) - qd.q0
}

/// `|cᵀx - f*| + |f* - q₀ + qᵀs|` with `f*` in this instance's `c`
/// (without the objective offset).
pub fn e_obj(inst: &ClpInstance, x: &[f64], s: &[f64], f_star: f64) -> f64 {
    let qd = inst.qdata();
    (dot(&inst.c, x) - f_star).abs() + (f_star - qd.q0 + dot(&qd.q, s)).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorParts {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl ErrorParts {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Relative KKT error of `(x, y)`; objective values include the offset.
pub fn relative_error(inst: &ClpInstance, x: &[f64], y: &[f64]) -> f64 {
    relative_error_parts(inst, x, y).max()
}

pub fn relative_error_parts(inst: &ClpInstance, x: &[f64], y: &[f64]) -> ErrorParts {
    let xp = inst.cone.project(x);
    let ax = inst.a.spmv(&xp).expect("dims");
    let aty = inst.a.spmv_t(y).expect("dims");
    relative_error_cached(inst, &xp, y, &ax, &aty)
}

/// Relative error from cached products; `x` must already lie in the cone
/// and `ax = Ax`, `aty = Aᵀy`.
pub fn relative_error_cached(
    inst: &ClpInstance,
    x: &[f64],
    y: &[f64],
    ax: &[f64],
    aty: &[f64],
) -> ErrorParts {
    let pr: f64 = ax.iter().zip(&inst.b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    let s: Vec<f64> = inst.c.iter().zip(aty).map(|(c, v)| c - v).collect();
    let dr = inst.cone.dual().distance(&s);
    let pobj = dot(&inst.c, x) + inst.obj_offset;
    let dobj = dot(&inst.b, y) + inst.obj_offset;
    ErrorParts {
        primal: pr / (1.0 + norm(&inst.b)),
        dual: dr / (1.0 + norm(&inst.c)),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
    }
}

/// `(Dist(x, V_p), Dist(s, V_d))`.
pub fn dist_to_affine(inst: &ClpInstance, x: &[f64], s: &[f64]) -> (f64, f64) {
    let a = &inst.a;
    let mut r = a.spmv(x).expect("dims");
    for (ri, bi) in r.iter_mut().zip(&inst.b) {
        *ri -= bi;
    }
    let (u, _) = solve_gram(a, &r);
    let dp = norm(&a.spmv_t(&u).expect("dims"));
    let d: Vec<f64> = s.iter().zip(&inst.c).map(|(s, c)| s - c).collect();
    let ad = a.spmv(&d).expect("dims");
    let (v, _) = solve_gram(a, &ad);
    let atv = a.spmv_t(&v).expect("dims");
    let resid: Vec<f64> = d.iter().zip(&atv).map(|(d, p)| d - p).collect();
    (dp, norm(&resid))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceTriple {
    pub eps_cons: f64,
    pub eps_gap: f64,
    pub eps_obj: f64,
}

impl ToleranceTriple {
    pub fn new(eps_cons: f64, eps_gap: f64, eps_obj: f64) -> Result<Self> {
        if !(eps_cons > 0.0 && eps_gap > 0.0 && eps_obj > 0.0) {
            return Err(Error::input("tolerances must be positive"));
        }
        Ok(Self { eps_cons, eps_gap, eps_obj })
    }

    pub fn uniform(eps: f64) -> Self {
        Self { eps_cons: eps, eps_gap: eps, eps_obj: eps }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QualityReport {
    pub dist_v: f64,
    pub dist_k: f64,
    pub gap: f64,
    pub e_obj: Option<f64>,
    pub relative_error: Option<f64>,
}

/// Evaluates the three tolerance conditions on `w = (x, s)`.
pub fn check_eps_tolerance(
    inst: &ClpInstance,
    x: &[f64],
    s: &[f64],
    eps: &ToleranceTriple,
    f_star: f64,
) -> (bool, QualityReport) {
    let (dp, dd) = dist_to_affine(inst, x, s);
    let dist_v = (dp * dp + dd * dd).sqrt();
    let kx = inst.cone.distance(x);
    let ks = inst.cone.dual().distance(s);
    let dist_k = (kx * kx + ks * ks).sqrt();
    let g = gap(inst, x, s);
    let eo = e_obj(inst, x, s, f_star);
    let ok = dist_v.max(dist_k) <= eps.eps_cons && g <= eps.eps_gap && eo <= eps.eps_obj;
    (ok, QualityReport { dist_v, dist_k, gap: g, e_obj: Some(eo), relative_error: None })
}

/// Three-variable LP family
/// `min ((2+ν)/10)x₁ + x₂ + (1+ν)x₃  s.t.  -10x₁ + x₂ + x₃ = 1, x ≥ 0`.
pub fn nu_family(nu: f64) -> ClpInstance {
    ClpInstance::new(
        format!("nu_family_{nu:e}"),
        SparseMatrix::from_dense(&[vec![-10.0, 1.0, 1.0]]),
        vec![1.0],
        vec![(2.0 + nu) / 10.0, 1.0, 1.0 + nu],
        ConeSpec::nonneg(3),
    )
    .expect("well formed")
}
