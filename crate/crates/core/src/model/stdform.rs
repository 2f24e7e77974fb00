//! Reformulation of a bounded, ranged LP into `min cᵀx s.t. Ax = b, x ≥ 0`.

use serde::{Deserialize, Serialize};

use super::mps::RawLp;
use super::ClpInstance;
use crate::cones::ConeSpec;
use crate::linalg::SparseMatrix;
use crate::{Error, Result};

/// How an original variable is recovered from standard-form columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum VarMap {
    /// `x = lo + x'[col]`
    Shift { col: usize, lo: f64 },
    /// `x = up - x'[col]`
    Reflect { col: usize, up: f64 },
    /// `x = x'[pos] - x'[neg]`
    Split { pos: usize, neg: usize },
    /// Fixed variable, no column.
    Fixed { value: f64 },
}

#[derive(Clone, Debug)]
pub struct StandardForm {
    pub instance: ClpInstance,
    pub var_map: Vec<VarMap>,
    pub var_names: Vec<String>,
    pub maximize: bool,
    /// Number of columns that stand for original variables; the rest are slacks.
    pub n_structural: usize,
    pub warnings: Vec<String>,
}

impl StandardForm {
    /// Original variable values from a standard-form `x`.
    pub fn map_back(&self, x: &[f64]) -> Vec<f64> {
        self.var_map
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, lo } => lo + x[col],
                VarMap::Reflect { col, up } => up - x[col],
                VarMap::Split { pos, neg } => x[pos] - x[neg],
                VarMap::Fixed { value } => value,
            })
            .collect()
    }

    /// Objective of the original problem (sign restored for maximization).
    pub fn original_objective(&self, x: &[f64]) -> f64 {
        let v = self.instance.objective(x);
        if self.maximize {
            -v
        } else {
            v
        }
    }
}

pub fn to_standard_form(raw: &RawLp) -> Result<StandardForm> {
    let n0 = raw.cols.len();
    let sign = if raw.maximize { -1.0 } else { 1.0 };
    let mut var_map = Vec::with_capacity(n0);
    let mut c: Vec<f64> = Vec::new();
    let mut offset = sign * raw.obj_constant;
    // per original column: list of (new column, coefficient) and a constant
    let mut subst: Vec<(Vec<(usize, f64)>, f64)> = Vec::with_capacity(n0);
    let mut ub_rows: Vec<(usize, f64)> = Vec::new();

    for j in 0..n0 {
        let (lo, up) = (raw.lower[j], raw.upper[j]);
        let cj = sign * raw.obj[j];
        if lo > up {
            return Err(Error::Model(format!("column '{}' has lower bound {lo} > upper bound {up}", raw.cols[j])));
        }
        if lo == up {
            var_map.push(VarMap::Fixed { value: lo });
            subst.push((vec![], lo));
            offset += cj * lo;
            continue;
        }
        match (lo.is_finite(), up.is_finite()) {
            (true, _) => {
                let col = c.len();
                c.push(cj);
                offset += cj * lo;
                var_map.push(VarMap::Shift { col, lo });
                subst.push((vec![(col, 1.0)], lo));
                if up.is_finite() {
                    ub_rows.push((col, up - lo));
                }
            }
            (false, true) => {
                let col = c.len();
                c.push(-cj);
                offset += cj * up;
                var_map.push(VarMap::Reflect { col, up });
                subst.push((vec![(col, -1.0)], up));
            }
            (false, false) => {
                let pos = c.len();
                c.push(cj);
                c.push(-cj);
                var_map.push(VarMap::Split { pos, neg: pos + 1 });
                subst.push((vec![(pos, 1.0), (pos + 1, -1.0)], 0.0));
            }
        }
    }
    let n_structural = c.len();

    let m0 = raw.rows.len();
    let mut row_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m0];
    let mut row_const = vec![0.0; m0];
    for &(i, j, v) in &raw.entries {
        let (terms, k) = &subst[j];
        row_const[i] += v * k;
        for &(col, s) in terms {
            row_terms[i].push((col, v * s));
        }
    }

    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    let new_slack = |c: &mut Vec<f64>| {
        c.push(0.0);
        c.len() - 1
    };
    for i in 0..m0 {
        let (lo, hi) = raw.row_bounds(i);
        let (lo, hi) = (lo - row_const[i], hi - row_const[i]);
        let nonzero = row_terms[i].iter().any(|&(_, v)| v != 0.0);
        if !nonzero {
            if lo > 1e-9 * (1.0 + lo.abs()) || hi < -1e-9 * (1.0 + hi.abs()) {
                return Err(Error::Model(format!(
                    "row '{}' has no free terms and bounds [{lo}, {hi}] exclude 0",
                    raw.rows[i].name
                )));
            }
            warnings.push(format!("empty row '{}' dropped", raw.rows[i].name));
            continue;
        }
        let r = b.len();
        for &(col, v) in &row_terms[i] {
            trip.push((r, col, v));
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) if lo == hi => b.push(lo),
            (true, true) => {
                // a·x - s1 = lo,  s1 + s2 = hi - lo
                let s1 = new_slack(&mut c);
                let s2 = new_slack(&mut c);
                trip.push((r, s1, -1.0));
                b.push(lo);
                let r2 = b.len();
                trip.push((r2, s1, 1.0));
                trip.push((r2, s2, 1.0));
                b.push(hi - lo);
            }
            (false, true) => {
                let s = new_slack(&mut c);
                trip.push((r, s, 1.0));
                b.push(hi);
            }
            (true, false) => {
                let s = new_slack(&mut c);
                trip.push((r, s, -1.0));
                b.push(lo);
            }
            (false, false) => {
                // free row: no constraint
                trip.retain(|t| t.0 != r);
                warnings.push(format!("free row '{}' dropped", raw.rows[i].name));
            }
        }
    }
    for (col, width) in ub_rows {
        let s = new_slack(&mut c);
        let r = b.len();
        trip.push((r, col, 1.0));
        trip.push((r, s, 1.0));
        b.push(width);
    }
    if b.is_empty() {
        return Err(Error::Model("no constraints after reformulation".into()));
    }
    let n = c.len();
    let a = SparseMatrix::from_triplets(b.len(), n, &trip)?;
    let name = if raw.name.is_empty() { "lp".to_string() } else { raw.name.clone() };
    let instance = ClpInstance::new(name, a, b, c, ConeSpec::nonneg(n))?.with_offset(offset);
    Ok(StandardForm {
        instance,
        var_map,
        var_names: raw.cols.clone(),
        maximize: raw.maximize,
        n_structural,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_mps, MpsFormat};

    #[test]
    fn upper_bound_becomes_row_with_slack() {
        let text = "NAME UB
ROWS
 N obj
COLUMNS
 x obj -1
BOUNDS
 UP bnd x 1
ENDATA
";
        let raw = parse_mps(text, MpsFormat::Free).unwrap();
        let sf = to_standard_form(&raw).unwrap();
        assert_eq!((sf.instance.m(), sf.instance.n()), (1, 2));
        assert_eq!(sf.instance.a().to_dense()[(0, 0)], 1.0);
        assert_eq!(sf.instance.a().to_dense()[(0, 1)], 1.0);
        // optimum x' = 1, slack 0
        let xs = [1.0, 0.0];
        assert_eq!(sf.map_back(&xs), vec![1.0]);
        assert_eq!(sf.original_objective(&xs), -1.0);
    }

    #[test]
    fn free_variable_is_split() {
        let text = "NAME FR
ROWS
 N obj
 E r
COLUMNS
 x obj 1 r 1
 y r 1
RHS
 rhs r 2
BOUNDS
 FR bnd x
ENDATA
";
        let sf = to_standard_form(&parse_mps(text, MpsFormat::Free).unwrap()).unwrap();
        assert_eq!(sf.instance.n(), 3);
        assert_eq!(sf.var_map[0], VarMap::Split { pos: 0, neg: 1 });
        assert_eq!(sf.map_back(&[0.5, 2.0, 3.5]), vec![-1.5, 3.5]);
    }

    #[test]
    fn already_standard_is_unchanged() {
        let text = "NAME PNU
ROWS
 N obj
 E r
COLUMNS
 x1 obj 0.2 r -10
 x2 obj 1 r 1
 x3 obj 1 r 1
RHS
 rhs r 1
ENDATA
";
        let sf = to_standard_form(&parse_mps(text, MpsFormat::Free).unwrap()).unwrap();
        let p = crate::model::nu_family(0.0);
        assert_eq!(sf.instance.a(), p.a());
        assert_eq!(sf.instance.b(), p.b());
        assert_eq!(sf.instance.c(), p.c());
        assert_eq!(sf.instance.obj_offset(), 0.0);
    }

    #[test]
    fn lower_bounds_reflections_and_inequalities() {
        let text = "NAME MIX
ROWS
 N obj
 L l
 G g
 E e
COLUMNS
 x obj 1 l 1
 x g 1
 y obj -1 l 1
 y e 2
RHS
 rhs l 10 g 1
 rhs e 4
RANGES
 rng e 2
BOUNDS
 LO bnd x 1
 MI bnd y
 UP bnd y 3
ENDATA
";
        let raw = parse_mps(text, MpsFormat::Free).unwrap();
        let sf = to_standard_form(&raw).unwrap();
        // original point x = 2, y = 2.5: l: 4.5 ≤ 10, g: 2 ≥ 1, e: 5 ∈ [4, 6]
        let (x, y) = (2.0, 2.5);
        // columns: x' (0), y' (1), slack l (2), slack g (3), range slacks (4, 5)
        let xs = [x - 1.0, 3.0 - y, 10.0 - (x + y), x - 1.0, 2.0 * y - 4.0, 6.0 - 2.0 * y];
        assert_eq!(sf.map_back(&xs), vec![x, y]);
        let r = sf.instance.a().spmv(&xs).unwrap();
        for (ri, bi) in r.iter().zip(sf.instance.b()) {
            assert!((ri - bi).abs() < 1e-12);
        }
        assert!((sf.original_objective(&xs) - (x - y)).abs() < 1e-12);
    }

    #[test]
    fn infeasible_empty_row_is_model_error() {
        let text = "NAME E
ROWS
 N obj
 E r
 E s
COLUMNS
 x obj 1 s 1
RHS
 rhs r 3 s 1
ENDATA
";
        let raw = parse_mps(text, MpsFormat::Free).unwrap();
        assert!(matches!(to_standard_form(&raw), Err(Error::Model(_))));
    }

    #[test]
    fn maximize_flips_sign() {
        let text = "NAME MX
OBJSENSE
    MAX
ROWS
 N obj
 L r
COLUMNS
 x obj 2 r 1
RHS
 rhs r 3
ENDATA
";
        let sf = to_standard_form(&parse_mps(text, MpsFormat::Free).unwrap()).unwrap();
        assert_eq!(sf.instance.c()[0], -2.0);
        assert_eq!(sf.original_objective(&[3.0, 0.0]), 6.0);
    }
}
