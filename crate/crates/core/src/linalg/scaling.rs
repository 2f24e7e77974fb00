use serde::{Deserialize, Serialize};

use super::SparseMatrix;

/// Row and column scale factors; the scaled matrix is `diag(row)·A·diag(col)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalScaling {
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
}

impl DiagonalScaling {
    pub fn identity(m: usize, n: usize) -> Self {
        Self { row_scale: vec![1.0; m], col_scale: vec![1.0; n] }
    }

    pub fn apply(&self, a: &SparseMatrix) -> SparseMatrix {
        a.scale(&self.row_scale, &self.col_scale)
    }

    /// Scaling equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &DiagonalScaling) -> DiagonalScaling {
        DiagonalScaling {
            row_scale: self.row_scale.iter().zip(&next.row_scale).map(|(a, b)| a * b).collect(),
            col_scale: self.col_scale.iter().zip(&next.col_scale).map(|(a, b)| a * b).collect(),
        }
    }
}

fn inv_sqrt_or_one(v: f64) -> f64 {
    if v > 0.0 {
        1.0 / v.sqrt()
    } else {
        1.0
    }
}

/// Ruiz sup-norm equilibration.
pub fn ruiz_scaling(a: &SparseMatrix, iters: usize) -> DiagonalScaling {
    let mut total = DiagonalScaling::identity(a.nrows(), a.ncols());
    let mut cur = a.clone();
    for _ in 0..iters.max(1) {
        let step = DiagonalScaling {
            row_scale: cur.row_abs_max().into_iter().map(inv_sqrt_or_one).collect(),
            col_scale: cur.col_abs_max().into_iter().map(inv_sqrt_or_one).collect(),
        };
        cur = step.apply(&cur);
        total = total.then(&step);
    }
    total
}

/// Pock-Chambolle scaling with α = 1.
pub fn pock_chambolle_scaling(a: &SparseMatrix) -> DiagonalScaling {
    DiagonalScaling {
        row_scale: a.row_abs_sum().into_iter().map(inv_sqrt_or_one).collect(),
        col_scale: a.col_abs_sum().into_iter().map(inv_sqrt_or_one).collect(),
    }
}
