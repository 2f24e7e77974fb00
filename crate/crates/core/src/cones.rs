//! Products of nonnegative orthants and second-order cones.
//!
//! Second-order blocks store the scalar `t` in the last coordinate:
//! `{(v, t) : ‖v‖ ≤ t}`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ConeBlock {
    #[serde(rename = "nonneg")]
    NonNeg { dim: usize },
    #[serde(rename = "soc")]
    SecondOrder { dim: usize },
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match *self {
            ConeBlock::NonNeg { dim } | ConeBlock::SecondOrder { dim } => dim,
        }
    }

    fn width(&self) -> f64 {
        match *self {
            ConeBlock::NonNeg { dim } => 1.0 / (dim as f64).sqrt(),
            ConeBlock::SecondOrder { .. } => std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    fn theta(&self) -> usize {
        match *self {
            ConeBlock::NonNeg { dim } => dim,
            ConeBlock::SecondOrder { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConeSpec {
    blocks: Vec<ConeBlock>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BarrierInfo {
    pub theta: usize,
    pub per_block: Vec<usize>,
}

impl ConeSpec {
    pub fn new(blocks: Vec<ConeBlock>) -> Result<Self> {
        for b in &blocks {
            match *b {
                ConeBlock::NonNeg { dim } if dim == 0 => {
                    return Err(Error::input("nonnegative block of dimension 0"))
                }
                ConeBlock::SecondOrder { dim } if dim < 2 => {
                    return Err(Error::input("second-order block needs dimension >= 2"))
                }
                _ => {}
            }
        }
        Ok(Self { blocks })
    }

    pub fn nonneg(n: usize) -> Self {
        Self { blocks: vec![ConeBlock::NonNeg { dim: n }] }
    }

    pub fn soc(dim: usize) -> Self {
        Self::new(vec![ConeBlock::SecondOrder { dim }]).expect("soc dimension")
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn is_lp(&self) -> bool {
        self.blocks.iter().all(|b| matches!(b, ConeBlock::NonNeg { .. }))
    }

    /// Blocks paired with their coordinate ranges.
    pub fn ranges(&self) -> Vec<(ConeBlock, Range<usize>)> {
        let mut off = 0;
        self.blocks
            .iter()
            .map(|b| {
                let r = off..off + b.dim();
                off = r.end;
                (*b, r)
            })
            .collect()
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub fn project_in_place(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        for (b, r) in self.ranges() {
            let blk = &mut v[r];
            match b {
                ConeBlock::NonNeg { .. } => blk.iter_mut().for_each(|x| *x = x.max(0.0)),
                ConeBlock::SecondOrder { dim } => project_soc(blk, dim),
            }
        }
    }

    pub fn distance(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        crate::linalg::dist(v, &p)
    }

    /// Both block families are self-dual.
    pub fn dual(&self) -> ConeSpec {
        self.clone()
    }

    /// Width `max {r/‖x‖ : B(x,r) ⊆ K}` of the product.
    pub fn width(&self) -> f64 {
        let inv_sq: f64 = self.blocks.iter().map(|b| b.width().powi(-2)).sum();
        inv_sq.sqrt().recip()
    }

    pub fn barrier_theta(&self) -> BarrierInfo {
        let per_block: Vec<usize> = self.blocks.iter().map(|b| b.theta()).collect();
        BarrierInfo { theta: per_block.iter().sum(), per_block }
    }

    /// Radius of the largest Euclidean ball around `x` inside the cone
    /// (negative when `x` is outside).
    pub fn interior_margin(&self, x: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for (b, r) in self.ranges() {
            let blk = &x[r];
            let d = match b {
                ConeBlock::NonNeg { .. } => blk.iter().copied().fold(f64::INFINITY, f64::min),
                ConeBlock::SecondOrder { dim } => {
                    (blk[dim - 1] - norm(&blk[..dim - 1])) * std::f64::consts::FRAC_1_SQRT_2
                }
            };
            m = m.min(d);
        }
        m
    }

    /// Positive entries on nonnegative blocks; second-order blocks need a
    /// margin of `1e-12·(1 + ‖x_block‖)`.
    pub fn is_strictly_interior(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
            && self.ranges().into_iter().all(|(b, r)| match b {
                ConeBlock::NonNeg { .. } => x[r].iter().all(|v| *v > 0.0),
                ConeBlock::SecondOrder { dim } => {
                    let blk = &x[r];
                    blk[dim - 1] - norm(&blk[..dim - 1]) >= 1e-12 * (1.0 + norm(blk))
                }
            })
    }

    /// Barrier Hessian of one block at `x` (dense).
    fn block_hessian(b: ConeBlock, x: &[f64]) -> DMatrix<f64> {
        match b {
            ConeBlock::NonNeg { dim } => {
                DMatrix::from_diagonal(&DVector::from_iterator(dim, x.iter().map(|v| 1.0 / (v * v))))
            }
            ConeBlock::SecondOrder { dim } => {
                let jx = DVector::from_iterator(
                    dim,
                    x.iter().enumerate().map(|(i, &v)| if i + 1 == dim { v } else { -v }),
                );
                let g = x[dim - 1] * x[dim - 1] - dot(&x[..dim - 1], &x[..dim - 1]);
                let mut h = &jx * jx.transpose() * (4.0 / (g * g));
                for i in 0..dim {
                    let j = if i + 1 == dim { 1.0 } else { -1.0 };
                    h[(i, i)] -= 2.0 * j / g;
                }
                h
            }
        }
    }

    /// Local norm `√(uᵀ H(x) u)` of the standard barrier at interior `x`.
    pub fn local_norm(&self, x: &[f64], u: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (b, r) in self.ranges() {
            let h = Self::block_hessian(b, &x[r.clone()]);
            let ub = DVector::from_column_slice(&u[r]);
            acc += (ub.transpose() * &h * &ub)[(0, 0)];
        }
        acc.max(0.0).sqrt()
    }

    /// `D₁ = √η · H(x)^{-1/2}` as a block-diagonal operator.
    pub fn hessian_sqrt_inv_scaled(&self, x: &[f64], eta: f64) -> Result<BlockDiagOperator> {
        if x.len() != self.dim() {
            return Err(Error::input("interior point has the wrong dimension"));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::input(format!("eta must be positive, got {eta}")));
        }
        if !self.is_strictly_interior(x) {
            return Err(Error::input("point is not strictly interior to the cone"));
        }
        let se = eta.sqrt();
        let mut blocks = Vec::new();
        for (b, r) in self.ranges() {
            let xb = &x[r];
            match b {
                ConeBlock::NonNeg { .. } => {
                    blocks.push(DBlock::Diag(xb.iter().map(|v| se * v).collect()))
                }
                ConeBlock::SecondOrder { .. } => {
                    let eig = SymmetricEigen::new(Self::block_hessian(b, xb));
                    let evals = eig.eigenvalues.iter().map(|l| se / l.sqrt()).collect();
                    blocks.push(DBlock::Sym { evecs: eig.eigenvectors, evals });
                }
            }
        }
        Ok(BlockDiagOperator::from_blocks(blocks))
    }
}

fn project_soc(blk: &mut [f64], dim: usize) {
    let t = blk[dim - 1];
    let nv = norm(&blk[..dim - 1]);
    if nv <= -t {
        blk.iter_mut().for_each(|x| *x = 0.0);
    } else if nv > t {
        let f = 0.5 * (1.0 + t / nv);
        for x in blk[..dim - 1].iter_mut() {
            *x *= f;
        }
        blk[dim - 1] = f * nv;
    }
}

/// One diagonal block of a [`BlockDiagOperator`].
#[derive(Clone, Debug, PartialEq)]
pub enum DBlock {
    Diag(Vec<f64>),
    /// Symmetric positive definite block `Q diag(λ) Qᵀ`.
    Sym { evecs: DMatrix<f64>, evals: Vec<f64> },
}

impl DBlock {
    pub fn dim(&self) -> usize {
        match self {
            DBlock::Diag(d) => d.len(),
            DBlock::Sym { evals, .. } => evals.len(),
        }
    }

    fn apply_pow(&self, v: &[f64], inverse: bool, out: &mut [f64]) {
        match self {
            DBlock::Diag(d) => {
                for i in 0..d.len() {
                    out[i] = if inverse { v[i] / d[i] } else { v[i] * d[i] };
                }
            }
            DBlock::Sym { evecs, evals } => {
                let vv = DVector::from_column_slice(v);
                let mut c = evecs.transpose() * vv;
                for (ci, l) in c.iter_mut().zip(evals) {
                    *ci = if inverse { *ci / l } else { *ci * l };
                }
                let r = evecs * c;
                out.copy_from_slice(r.as_slice());
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            DBlock::Diag(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            DBlock::Sym { evecs, evals } => {
                evecs * DMatrix::from_diagonal(&DVector::from_column_slice(evals)) * evecs.transpose()
            }
        }
    }
}

/// Symmetric positive definite block-diagonal operator.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagOperator {
    blocks: Vec<DBlock>,
    offsets: Vec<usize>,
}

impl BlockDiagOperator {
    pub fn from_blocks(blocks: Vec<DBlock>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut off = 0;
        offsets.push(0);
        for b in &blocks {
            off += b.dim();
            offsets.push(off);
        }
        Self { blocks, offsets }
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        Self::from_blocks(vec![DBlock::Diag(d)])
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&DBlock, Range<usize>)> {
        self.blocks.iter().enumerate().map(|(i, b)| (b, self.offsets[i]..self.offsets[i + 1]))
    }

    pub fn is_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| matches!(b, DBlock::Diag(_)))
    }

    /// Diagonal entries when every block is diagonal.
    pub fn diag_entries(&self) -> Option<Vec<f64>> {
        if !self.is_diagonal() {
            return None;
        }
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            if let DBlock::Diag(d) = b {
                out.extend_from_slice(d);
            }
        }
        Some(out)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (b, r) in self.blocks() {
            b.apply_pow(&v[r.clone()], false, &mut out[r]);
        }
        out
    }

    pub fn apply_inv(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (b, r) in self.blocks() {
            b.apply_pow(&v[r.clone()], true, &mut out[r]);
        }
        out
    }

    /// Clamp diagonal entries (and eigenvalues of dense blocks) into `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| match b {
                DBlock::Diag(d) => DBlock::Diag(d.iter().map(|v| v.clamp(lo, hi)).collect()),
                DBlock::Sym { evecs, evals } => DBlock::Sym {
                    evecs: evecs.clone(),
                    evals: evals.iter().map(|v| v.clamp(lo, hi)).collect(),
                },
            })
            .collect();
        Self::from_blocks(blocks)
    }

    /// `self · diag(col)` for a column scaling that is uniform over each
    /// dense block; dense blocks use the geometric mean of their entries.
    pub fn then_diag(&self, col: &[f64]) -> Self {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (b, r) in self.blocks() {
            let c = &col[r];
            blocks.push(match b {
                DBlock::Diag(d) => DBlock::Diag(d.iter().zip(c).map(|(a, b)| a * b).collect()),
                DBlock::Sym { evecs, evals } => {
                    let g = (c.iter().map(|v| v.ln()).sum::<f64>() / c.len() as f64).exp();
                    DBlock::Sym { evecs: evecs.clone(), evals: evals.iter().map(|v| v * g).collect() }
                }
            });
        }
        Self::from_blocks(blocks)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (b, r) in self.blocks() {
            m.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&b.to_dense());
        }
        m
    }
}

/// `clip_diagonal` with the default range `[1e-5, 1e5]`.
pub fn clip_diagonal(d1: &BlockDiagOperator, lo: f64, hi: f64) -> BlockDiagOperator {
    d1.clip(lo, hi)
}

pub const CLIP_LO: f64 = 1e-5;
pub const CLIP_HI: f64 = 1e5;
