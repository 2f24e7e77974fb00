//! Central-path Hessian rescaling and other column/row transforms.
//!
//! The rescaled problem is `min (D₁c)ᵀx̃ s.t. D₂AD₁x̃ = D₂b, x̃ ∈ K`, with
//! `x = D₁x̃`, `s = D₁⁻¹s̃` and `y = D₂ỹ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cones::{BlockDiagOperator, ConeBlock, ConeSpec, DBlock, CLIP_HI, CLIP_LO};
use crate::ipm::{interior_point_at_gap, IpmBudget};
use crate::linalg::{dot, pock_chambolle_scaling, ruiz_scaling, SparseMatrix};
use crate::model::{project_c_to_nullspace, relative_error_parts, solve_gram, ClpInstance, ErrorParts};
use crate::{Error, Result};

/// Largest `m` for which the complete preconditioner is formed densely.
pub const COMPLETE_MAX_ROWS: usize = 2000;
const PINV_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RescaleSource {
    CentralPath,
    EasyColumn,
    RuizPc,
    External,
}

/// How `η` is chosen from an interior pair `(x, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EtaMode {
    /// `η = ϑ/(xᵀs)` so that the gap of a central point is `ϑ/η`.
    Theory,
    /// `η = xᵀs`.
    Ahr,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub enum RowTransform {
    Identity,
    /// Symmetric `D₂` with its (pseudo-)inverse.
    Dense { d2: DMatrix<f64>, inv: DMatrix<f64> },
    Diagonal(Vec<f64>),
}

impl RowTransform {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            RowTransform::Identity => v.to_vec(),
            RowTransform::Dense { d2, .. } => (d2 * DVector::from_column_slice(v)).as_slice().to_vec(),
            RowTransform::Diagonal(d) => v.iter().zip(d).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn apply_inv(&self, v: &[f64]) -> Vec<f64> {
        match self {
            RowTransform::Identity => v.to_vec(),
            RowTransform::Dense { inv, .. } => (inv * DVector::from_column_slice(v)).as_slice().to_vec(),
            RowTransform::Diagonal(d) => v.iter().zip(d).map(|(a, b)| a / b).collect(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            RowTransform::Identity => "identity",
            RowTransform::Dense { .. } => "dense",
            RowTransform::Diagonal(_) => "diagonal",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Rescaling {
    pub d1: BlockDiagOperator,
    pub d2: RowTransform,
    pub eta: Option<f64>,
    pub source: RescaleSource,
}

impl Rescaling {
    pub fn identity(m: usize, n: usize) -> Self {
        let _ = m;
        Self { d1: BlockDiagOperator::identity(n), d2: RowTransform::Identity, eta: None, source: RescaleSource::External }
    }

    pub fn with_d2(mut self, d2: RowTransform) -> Self {
        self.d2 = d2;
        self
    }

    /// JSON summary: diagonal entries when available, otherwise a digest of the dense parts.
    pub fn dump(&self) -> serde_json::Value {
        let d1 = match self.d1.diag_entries() {
            Some(d) => serde_json::json!({ "diagonal": d }),
            None => {
                let dense = self.d1.to_dense();
                serde_json::json!({ "dense_blocks": true, "frobenius": dense.norm(), "trace": dense.trace() })
            }
        };
        let d2 = match &self.d2 {
            RowTransform::Identity => serde_json::json!({ "kind": "identity" }),
            RowTransform::Diagonal(d) => serde_json::json!({ "kind": "diagonal", "diagonal": d }),
            RowTransform::Dense { d2, .. } => {
                serde_json::json!({ "kind": "dense", "m": d2.nrows(), "frobenius": d2.norm(), "trace": d2.trace() })
            }
        };
        serde_json::json!({ "source": self.source, "eta": self.eta, "d1": d1, "d2": d2 })
    }
}

/// Makes a column scaling constant on each second-order block (geometric
/// mean) so that the scaled cone is the same cone.
pub fn cone_uniform(cone: &ConeSpec, col: &[f64]) -> Vec<f64> {
    let mut out = col.to_vec();
    for (b, r) in cone.ranges() {
        if let ConeBlock::SecondOrder { .. } = b {
            let g = (col[r.clone()].iter().map(|v| v.ln()).sum::<f64>() / r.len() as f64).exp();
            out[r].iter_mut().for_each(|v| *v = g);
        }
    }
    out
}

/// `η` from an interior pair according to `mode`.
pub fn choose_eta(cone: &ConeSpec, x: &[f64], s: &[f64], mode: EtaMode) -> Result<f64> {
    let xs = dot(x, s);
    let eta = match mode {
        EtaMode::Theory => cone.barrier_theta().theta as f64 / xs,
        EtaMode::Ahr => xs,
        EtaMode::Fixed(e) => e,
    };
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::input(format!("eta must be positive and finite (x's = {xs:e})")));
    }
    Ok(eta)
}

/// `D₁ = √η·H(x)^{-1/2}`, optionally clipped to `[1e-5, 1e5]`.
pub fn hessian_rescaling(inst: &ClpInstance, x: &[f64], s: &[f64], mode: EtaMode, clip: bool) -> Result<Rescaling> {
    let eta = choose_eta(inst.cone(), x, s, mode)?;
    hessian_rescaling_with_eta(inst, x, eta, clip)
}

pub fn hessian_rescaling_with_eta(inst: &ClpInstance, x: &[f64], eta: f64, clip: bool) -> Result<Rescaling> {
    let mut d1 = inst.cone().hessian_sqrt_inv_scaled(x, eta)?;
    if clip {
        d1 = d1.clip(CLIP_LO, CLIP_HI);
    }
    Ok(Rescaling { d1, d2: RowTransform::Identity, eta: Some(eta), source: RescaleSource::CentralPath })
}

/// `(D₁)_jj = 1/max_i |a_ij|`; zero columns keep scale 1.
pub fn easy_column_rescaling(inst: &ClpInstance) -> Rescaling {
    let cm = inst.a().col_abs_max();
    let zero = cm.iter().filter(|v| **v == 0.0).count();
    if zero > 0 {
        log::warn!("{zero} zero column(s) in A keep unit scale");
    }
    let d: Vec<f64> = cm.iter().map(|v| if *v > 0.0 { 1.0 / v } else { 1.0 }).collect();
    let d = cone_uniform(inst.cone(), &d);
    Rescaling { d1: BlockDiagOperator::diagonal(d), d2: RowTransform::Identity, eta: None, source: RescaleSource::EasyColumn }
}

/// `A·D₁` for a block-diagonal `D₁`.
pub fn scale_columns(a: &SparseMatrix, d1: &BlockDiagOperator) -> SparseMatrix {
    if let Some(d) = d1.diag_entries() {
        return a.scale(&vec![1.0; a.nrows()], &d);
    }
    let blocks: Vec<(DBlock, std::ops::Range<usize>)> = d1.blocks().map(|(b, r)| (b.clone(), r)).collect();
    let mut owner = vec![0usize; a.ncols()];
    for (k, (_, r)) in blocks.iter().enumerate() {
        owner[r.clone()].iter_mut().for_each(|o| *o = k);
    }
    let mut trip = Vec::with_capacity(a.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        let mut touched: Vec<usize> = cols.iter().map(|&j| owner[j]).collect();
        touched.dedup();
        for &k in &touched {
            let (b, r) = &blocks[k];
            match b {
                DBlock::Diag(d) => {
                    for (&j, &v) in cols.iter().zip(vals) {
                        if owner[j] == k {
                            trip.push((i, j, v * d[j - r.start]));
                        }
                    }
                }
                DBlock::Sym { .. } => {
                    let mut seg = vec![0.0; r.len()];
                    for (&j, &v) in cols.iter().zip(vals) {
                        if owner[j] == k {
                            seg[j - r.start] = v;
                        }
                    }
                    let dense = b.to_dense();
                    let prod = dense * DVector::from_column_slice(&seg);
                    for (t, v) in prod.iter().enumerate() {
                        if *v != 0.0 {
                            trip.push((i, r.start + t, *v));
                        }
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(a.nrows(), a.ncols(), &trip).expect("in range")
}

/// `D₂ = (A D₁² Aᵀ)^{-1/2}` (pseudo-inverse on near-zero eigenvalues).
pub fn complete_preconditioner(inst: &ClpInstance, d1: &BlockDiagOperator) -> Result<RowTransform> {
    let m = inst.m();
    if m > COMPLETE_MAX_ROWS {
        return Err(Error::Unsupported(format!(
            "complete preconditioner needs a dense {m}x{m} eigendecomposition; use Ruiz/Pock-Chambolle row scaling"
        )));
    }
    let ad = scale_columns(inst.a(), d1);
    let g = ad.gram_dense();
    let eig = SymmetricEigen::new(g);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(*b));
    let f = |l: f64, p: f64| if l > PINV_RTOL * top { l.powf(p) } else { 0.0 };
    let v = &eig.eigenvectors;
    let d_half: Vec<f64> = eig.eigenvalues.iter().map(|l| f(*l, -0.5)).collect();
    let d_inv: Vec<f64> = eig.eigenvalues.iter().map(|l| f(*l, 0.5)).collect();
    let d2 = v * DMatrix::from_diagonal(&DVector::from_vec(d_half)) * v.transpose();
    let inv = v * DMatrix::from_diagonal(&DVector::from_vec(d_inv)) * v.transpose();
    Ok(RowTransform::Dense { d2, inv })
}

/// Ten Ruiz passes followed by Pock-Chambolle on `A·D₁`, folded into
/// `D₁` (columns) and a diagonal `D₂` (rows).
pub fn ruiz_pc_rescaling(inst: &ClpInstance, base: Option<Rescaling>) -> Result<Rescaling> {
    let base = base.unwrap_or_else(|| Rescaling::identity(inst.m(), inst.n()));
    let row0 = match &base.d2 {
        RowTransform::Identity => vec![1.0; inst.m()],
        RowTransform::Diagonal(d) => d.clone(),
        RowTransform::Dense { .. } => {
            return Err(Error::Unsupported("Ruiz/Pock-Chambolle on top of a dense row transform".into()))
        }
    };
    let a1 = scale_columns(inst.a(), &base.d1).scale(&row0, &vec![1.0; inst.n()]);
    let ruiz = ruiz_scaling(&a1, 10);
    let ruiz_col = cone_uniform(inst.cone(), &ruiz.col_scale);
    let a2 = a1.scale(&ruiz.row_scale, &ruiz_col);
    let pc = pock_chambolle_scaling(&a2);
    let pc_col = cone_uniform(inst.cone(), &pc.col_scale);
    let col: Vec<f64> = ruiz_col.iter().zip(&pc_col).map(|(a, b)| a * b).collect();
    let row: Vec<f64> = (0..inst.m()).map(|i| row0[i] * ruiz.row_scale[i] * pc.row_scale[i]).collect();
    let source = if base.source == RescaleSource::External { RescaleSource::RuizPc } else { base.source };
    Ok(Rescaling { d1: base.d1.then_diag(&col), d2: RowTransform::Diagonal(row), eta: base.eta, source })
}

/// The rescaled problem together with the data needed to map back.
#[derive(Clone, Debug)]
pub struct RescaledInstance {
    pub instance: ClpInstance,
    pub original: ClpInstance,
    pub rescaling: Rescaling,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

pub fn build_rescaled(inst: &ClpInstance, rescaling: &Rescaling, project_c: bool) -> Result<RescaledInstance> {
    if rescaling.d1.dim() != inst.n() {
        return Err(Error::input("D1 dimension does not match the instance"));
    }
    let ad1 = scale_columns(inst.a(), &rescaling.d1);
    let at = match &rescaling.d2 {
        RowTransform::Identity => ad1,
        RowTransform::Diagonal(d) => ad1.scale(d, &vec![1.0; inst.n()]),
        RowTransform::Dense { d2, .. } => {
            let mut dense = d2 * ad1.to_dense();
            let tiny = 1e-15 * dense.amax();
            dense.iter_mut().for_each(|v| {
                if v.abs() <= tiny {
                    *v = 0.0
                }
            });
            SparseMatrix::from_dmatrix(&dense)
        }
    };
    let bt = rescaling.d2.apply(inst.b());
    let ct = rescaling.d1.apply(inst.c());
    let mut tilde = ClpInstance::new(format!("{}_rescaled", inst.name()), at, bt, ct, inst.cone().clone())?
        .with_offset(inst.obj_offset());
    if project_c {
        tilde = project_c_to_nullspace(&tilde);
        if let Some(r) = tilde.projection_residual() {
            if r > 1e-6 {
                log::warn!("objective projection stopped with relative residual {r:e}");
            }
        }
    }
    Ok(RescaledInstance { instance: tilde, original: inst.clone(), rescaling: rescaling.clone() })
}

impl RescaledInstance {
    /// `φ(x, y) = (D₁⁻¹x, D₂⁻¹y - shift)`: a point of the original problem
    /// expressed in rescaled variables.
    pub fn to_rescaled(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let xt = self.rescaling.d1.apply_inv(x);
        let yt = self.rescaling.d2.apply_inv(y);
        let yt = yt.iter().zip(self.instance.dual_shift()).map(|(a, b)| a - b).collect();
        (xt, yt)
    }

    /// Original-space `(x, y, s)` from a rescaled iterate. With `pre_project`
    /// `x̃` is first projected onto `{Ãx̃ = b̃}`.
    pub fn map_back(&self, xt: &[f64], yt: &[f64], pre_project: bool) -> PrimalDualPoint {
        let xt = if pre_project { project_affine(&self.instance, xt) } else { xt.to_vec() };
        let x = self.rescaling.d1.apply(&xt);
        let yfull: Vec<f64> = yt.iter().zip(self.instance.dual_shift()).map(|(a, b)| a + b).collect();
        let y = self.rescaling.d2.apply(&yfull);
        let s = self.original.slack(&y);
        PrimalDualPoint { x, y, s }
    }

    /// Relative error on the original problem of a rescaled iterate.
    pub fn original_error(&self, xt: &[f64], yt: &[f64]) -> ErrorParts {
        let p = self.map_back(xt, yt, false);
        relative_error_parts(&self.original, &p.x, &p.y)
    }
}

/// `x - Aᵀ(AAᵀ)⁻¹(Ax - b)`.
pub fn project_affine(inst: &ClpInstance, x: &[f64]) -> Vec<f64> {
    let mut r = inst.a().spmv(x).expect("dims");
    for (ri, bi) in r.iter_mut().zip(inst.b()) {
        *ri -= bi;
    }
    let (u, _) = solve_gram(inst.a(), &r);
    let atu = inst.a().spmv_t(&u).expect("dims");
    x.iter().zip(&atu).map(|(a, b)| a - b).collect()
}

/// Least-squares `y` with `Aᵀy ≈ c - s`, via CG on `AAᵀy = A(c - s)`.
pub fn recover_y_least_squares(inst: &ClpInstance, s: &[f64]) -> Vec<f64> {
    let cs: Vec<f64> = inst.c().iter().zip(s).map(|(a, b)| a - b).collect();
    let rhs = inst.a().spmv(&cs).expect("dims");
    solve_gram(inst.a(), &rhs).0
}

/// `(D₁⁻¹x, D₁s)`.
pub fn phi(rescaling: &Rescaling, x: &[f64], s: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (rescaling.d1.apply_inv(x), rescaling.d1.apply(s))
}

/// Report string for logs.
pub fn describe(r: &Rescaling) -> String {
    format!("source={:?} eta={:?} d1_diagonal={} d2={}", r.source, r.eta, r.d1.is_diagonal(), r.d2.kind())
}

/// Row transform combined with a column rescaling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum D2Choice {
    Identity,
    Complete,
    /// Further Ruiz and Pock-Chambolle passes on top of `D₁` (rows and columns).
    RuizPc,
}

pub fn with_row_transform(inst: &ClpInstance, r: Rescaling, d2: D2Choice) -> Result<Rescaling> {
    match d2 {
        D2Choice::Identity => Ok(r),
        D2Choice::Complete => {
            let t = complete_preconditioner(inst, &r.d1)?;
            Ok(r.with_d2(t))
        }
        D2Choice::RuizPc => ruiz_pc_rescaling(inst, Some(r)),
    }
}

/// Hessian rescaling at an interior point with duality gap about `delta`
/// (theory `η`, no clipping), followed by the chosen row transform.
pub fn central_delta_rescaling(inst: &ClpInstance, delta: f64, d2: D2Choice, limits: &IpmBudget) -> Result<Rescaling> {
    let run = interior_point_at_gap(inst, delta, limits)?;
    let r = hessian_rescaling(inst, &run.iterate.x, &run.iterate.s, EtaMode::Theory, false)?;
    with_row_transform(inst, r, d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use crate::model::{gap, nu_family, relative_error};

    #[test]
    fn hessian_examples() {
        let inst = ClpInstance::new("h", SparseMatrix::from_dense(&[vec![1.0, 1.0]]), vec![5.0], vec![1.0, 1.0], ConeSpec::nonneg(2)).unwrap();
        let r = hessian_rescaling_with_eta(&inst, &[2.0, 3.0], 4.0, false).unwrap();
        assert_eq!(r.d1.diag_entries().unwrap(), vec![4.0, 6.0]);
        let r = hessian_rescaling_with_eta(&inst, &[1.0, 1.0], 1.0, false).unwrap();
        assert_eq!(r.d1.diag_entries().unwrap(), vec![1.0, 1.0]);
        assert!(hessian_rescaling_with_eta(&inst, &[0.0, 1.0], 1.0, false).is_err());
    }

    #[test]
    fn theory_and_ahr_eta_differ_by_theta() {
        // central point with x_i s_i = 1/η, η = 1
        let cone = ConeSpec::nonneg(2);
        let x = [0.5, 4.0];
        let s = [2.0, 0.25];
        let t = choose_eta(&cone, &x, &s, EtaMode::Theory).unwrap();
        let a = choose_eta(&cone, &x, &s, EtaMode::Ahr).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        assert!((a / t - 2.0).abs() < 1e-15);
    }

    #[test]
    fn easy_column_examples() {
        let inst = ClpInstance::new("e", SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]), vec![1.0, 1.0], vec![0.0, 0.0], ConeSpec::nonneg(2)).unwrap();
        assert_eq!(easy_column_rescaling(&inst).d1.diag_entries().unwrap(), vec![0.5, 0.25]);
        let z = ClpInstance::new("z", SparseMatrix::from_dense(&[vec![1.0, 0.0]]), vec![1.0], vec![0.0, 0.0], ConeSpec::nonneg(2)).unwrap();
        assert_eq!(easy_column_rescaling(&z).d1.diag_entries().unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn complete_preconditioner_examples() {
        let inst = ClpInstance::new("c", SparseMatrix::from_dense(&[vec![2.0]]), vec![1.0], vec![0.0], ConeSpec::nonneg(1)).unwrap();
        let d1 = BlockDiagOperator::diagonal(vec![3.0]);
        match complete_preconditioner(&inst, &d1).unwrap() {
            RowTransform::Dense { d2, .. } => assert!((d2[(0, 0)] - 1.0 / 6.0).abs() < 1e-15),
            _ => panic!("dense expected"),
        }
    }

    #[test]
    fn complete_preconditioner_gives_unit_singular_values() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let inst = ClpInstance::new("r", SparseMatrix::from_dense(&rows), vec![1.0; 5], vec![0.0; 8], ConeSpec::nonneg(8)).unwrap();
        let d1 = BlockDiagOperator::diagonal((0..8).map(|j| 0.5 + j as f64).collect());
        let r = Rescaling { d1: d1.clone(), d2: complete_preconditioner(&inst, &d1).unwrap(), eta: None, source: RescaleSource::External };
        let t = build_rescaled(&inst, &r, false).unwrap();
        for s in singular_values(t.instance.a()) {
            assert!((s - 1.0).abs() < 1e-8, "{s}");
        }
    }

    #[test]
    fn identity_rescaling_is_a_no_op() {
        let inst = nu_family(1e-2);
        let t = build_rescaled(&inst, &Rescaling::identity(1, 3), false).unwrap();
        assert_eq!(t.instance.a(), inst.a());
        assert_eq!(t.instance.c(), inst.c());
        let p = t.map_back(&[0.1, 0.2, 0.3], &[0.4], false);
        assert_eq!(p.x, vec![0.1, 0.2, 0.3]);
        assert_eq!(p.y, vec![0.4]);
    }

    #[test]
    fn round_trip_and_gap_invariance() {
        let inst = nu_family(1e-4);
        let x = [0.05, 0.8, 0.7];
        let r = hessian_rescaling_with_eta(&inst, &x, 3.0, false).unwrap();
        let r = Rescaling { d2: complete_preconditioner(&inst, &r.d1).unwrap(), ..r };
        let t = build_rescaled(&inst, &r, true).unwrap();
        // feasible primal point and any dual point
        let xf = [0.02, 0.6, 0.6];
        let y = [0.3];
        let s = inst.slack(&y);
        let (xt, yt) = t.to_rescaled(&xf, &y);
        let back = t.map_back(&xt, &yt, false);
        for (a, b) in back.x.iter().zip(&xf) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((back.y[0] - y[0]).abs() < 1e-12);
        let st = t.instance.slack(&yt);
        let g0 = gap(&inst, &xf, &s);
        let g1 = gap(&t.instance, &xt, &st);
        assert!((g0 - g1).abs() < 1e-10 * (1.0 + g0.abs()), "{g0} vs {g1}");
        // φ agrees with the slack of the mapped dual
        let (_, sp) = phi(&r, &xf, &s);
        for (a, b) in sp.iter().zip(&st) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_rescaled_optimum_maps_to_optimum() {
        let inst = nu_family(1e-4);
        let r = hessian_rescaling_with_eta(&inst, &[0.05, 0.8, 0.7], 10.0, false).unwrap();
        let t = build_rescaled(&inst, &r, true).unwrap();
        // optimum of the original: x = (0,1,0), y = 1 (s = (10.2001-10=0.0001·..))
        let (xt, yt) = t.to_rescaled(&[0.0, 1.0, 0.0], &[1.0]);
        let p = t.map_back(&xt, &yt, false);
        assert!(relative_error(&inst, &p.x, &p.y) < 1e-12);
    }

    #[test]
    fn pre_projection_keeps_feasible_points() {
        let inst = nu_family(0.0);
        let t = build_rescaled(&inst, &Rescaling::identity(1, 3), false).unwrap();
        let x = [0.1, 1.5, 0.5];
        let p = t.map_back(&x, &[0.0], true);
        for (a, b) in p.x.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_rescaling_keeps_cone() {
        let cone = ConeSpec::new(vec![ConeBlock::NonNeg { dim: 1 }, ConeBlock::SecondOrder { dim: 3 }]).unwrap();
        let inst = ClpInstance::new("soc", SparseMatrix::from_dense(&[vec![1.0, 0.5, -0.5, 2.0]]), vec![3.0], vec![1.0, 0.0, 0.0, 1.0], cone).unwrap();
        let r = hessian_rescaling_with_eta(&inst, &[1.0, 0.2, 0.1, 1.0], 2.0, false).unwrap();
        let r = ruiz_pc_rescaling(&inst, Some(r)).unwrap();
        let t = build_rescaled(&inst, &r, false).unwrap();
        let xt = [0.5, 0.1, 0.2, 0.9];
        let p = t.map_back(&xt, &[0.0], false);
        assert!(inst.cone().distance(&p.x) < 1e-12);
        let ax = inst.a().spmv(&p.x).unwrap();
        let atx = t.instance.a().spmv(&xt).unwrap();
        let d2 = t.rescaling.d2.apply(&ax);
        assert!((d2[0] - atx[0]).abs() < 1e-12);
    }
}
