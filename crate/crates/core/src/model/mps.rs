//! MPS reader (fixed and free format).

use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpsFormat {
    Free,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    E,
    L,
    G,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub name: String,
    pub kind: RowKind,
}

/// An LP as read from an MPS file, before any reformulation.
#[derive(Clone, Debug, Default)]
pub struct RawLp {
    pub name: String,
    pub obj_name: String,
    pub rows: Vec<RawRow>,
    pub cols: Vec<String>,
    /// `(row, col, value)` for constraint rows.
    pub entries: Vec<(usize, usize, f64)>,
    pub obj: Vec<f64>,
    pub obj_constant: f64,
    pub rhs: Vec<f64>,
    pub ranges: Vec<Option<f64>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub maximize: bool,
    pub warnings: Vec<String>,
}

impl RawLp {
    /// Lower and upper activity bounds of constraint row `i`.
    pub fn row_bounds(&self, i: usize) -> (f64, f64) {
        let r = self.rhs[i];
        match (self.rows[i].kind, self.ranges[i]) {
            (RowKind::E, None) => (r, r),
            (RowKind::E, Some(rg)) if rg >= 0.0 => (r, r + rg.abs()),
            (RowKind::E, Some(rg)) => (r - rg.abs(), r),
            (RowKind::L, None) => (f64::NEG_INFINITY, r),
            (RowKind::L, Some(rg)) => (r - rg.abs(), r),
            (RowKind::G, None) => (r, f64::INFINITY),
            (RowKind::G, Some(rg)) => (r, r + rg.abs()),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    None,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

pub fn read_mps(path: impl AsRef<Path>) -> Result<RawLp> {
    let text = std::fs::read_to_string(path)?;
    match parse_mps(&text, MpsFormat::Free) {
        Ok(lp) => Ok(lp),
        Err(free_err) => parse_mps(&text, MpsFormat::Fixed).map_err(|_| free_err),
    }
}

fn fixed_fields(line: &str) -> Vec<String> {
    const SPANS: [(usize, usize); 6] = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)];
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    for (s, e) in SPANS {
        if s >= bytes.len() {
            break;
        }
        let f = String::from_utf8_lossy(&bytes[s..e.min(bytes.len())]).trim().to_string();
        out.push(f);
    }
    // the first field (row type / bound type) may be blank
    while out.last().is_some_and(|f| f.is_empty()) {
        out.pop();
    }
    if out.first().is_some_and(|f| f.is_empty()) {
        out.remove(0);
    }
    out
}

fn num(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad number '{tok}'") })?;
    if v.is_nan() {
        return Err(Error::Parse { line, msg: format!("bad number '{tok}'") });
    }
    Ok(v)
}

/// Parses MPS text. The first `N` row is the objective.
pub fn parse_mps(text: &str, format: MpsFormat) -> Result<RawLp> {
    let mut lp = RawLp::default();
    let mut sec = Section::None;
    let mut row_idx: HashMap<String, Option<usize>> = HashMap::new();
    let mut col_idx: HashMap<String, usize> = HashMap::new();
    let mut saw_end = false;
    let mut integer_marker = false;

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        if !line.starts_with(' ') && !line.starts_with('\t') {
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap().to_ascii_uppercase();
            sec = match head.as_str() {
                "NAME" => {
                    lp.name = toks.collect::<Vec<_>>().join(" ");
                    Section::Name
                }
                "OBJSENSE" => {
                    if let Some(t) = toks.next() {
                        lp.maximize = t.eq_ignore_ascii_case("MAX") || t.eq_ignore_ascii_case("MAXIMIZE");
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    saw_end = true;
                    Section::End
                }
                other => {
                    return Err(Error::Parse { line: ln, msg: format!("unknown section '{other}'") })
                }
            };
            if sec == Section::End {
                break;
            }
            continue;
        }
        let f: Vec<String> = match format {
            MpsFormat::Free => line.split_whitespace().map(str::to_string).collect(),
            MpsFormat::Fixed => fixed_fields(line),
        };
        if f.is_empty() {
            continue;
        }
        match sec {
            Section::None | Section::Name | Section::End => {
                return Err(Error::Parse { line: ln, msg: "data line outside a section".into() })
            }
            Section::ObjSense => {
                lp.maximize = f[0].eq_ignore_ascii_case("MAX") || f[0].eq_ignore_ascii_case("MAXIMIZE");
            }
            Section::Rows => {
                if f.len() < 2 {
                    return Err(Error::Parse { line: ln, msg: "ROWS entry needs a type and a name".into() });
                }
                let name = f[1].clone();
                if row_idx.contains_key(&name) {
                    return Err(Error::Parse { line: ln, msg: format!("duplicate row name '{name}'") });
                }
                let kind = match f[0].to_ascii_uppercase().as_str() {
                    "N" => {
                        if lp.obj_name.is_empty() {
                            lp.obj_name = name.clone();
                        } else {
                            lp.warnings.push(format!("line {ln}: extra objective row '{name}' ignored"));
                        }
                        row_idx.insert(name, None);
                        continue;
                    }
                    "E" => RowKind::E,
                    "L" => RowKind::L,
                    "G" => RowKind::G,
                    t => return Err(Error::Parse { line: ln, msg: format!("unknown row type '{t}'") }),
                };
                row_idx.insert(name.clone(), Some(lp.rows.len()));
                lp.rows.push(RawRow { name, kind });
                lp.rhs.push(0.0);
                lp.ranges.push(None);
            }
            Section::Columns => {
                if f.iter().any(|t| t.contains("MARKER")) {
                    if f.iter().any(|t| t.contains("INTORG")) {
                        integer_marker = true;
                    } else if f.iter().any(|t| t.contains("INTEND")) {
                        integer_marker = false;
                    }
                    lp.warnings.push(format!("line {ln}: integrality marker ignored"));
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(Error::Parse { line: ln, msg: "COLUMNS entry needs 3 or 5 fields".into() });
                }
                let _ = integer_marker;
                let cname = &f[0];
                let j = match col_idx.get(cname) {
                    Some(&j) => j,
                    None => {
                        let j = lp.cols.len();
                        col_idx.insert(cname.clone(), j);
                        lp.cols.push(cname.clone());
                        lp.obj.push(0.0);
                        lp.lower.push(0.0);
                        lp.upper.push(f64::INFINITY);
                        j
                    }
                };
                for pair in f[1..].chunks(2) {
                    let v = num(&pair[1], ln)?;
                    match row_idx.get(&pair[0]) {
                        None => {
                            return Err(Error::Parse { line: ln, msg: format!("unknown row '{}'", pair[0]) })
                        }
                        Some(None) => {
                            if pair[0] == lp.obj_name {
                                lp.obj[j] += v;
                            }
                        }
                        Some(Some(i)) => lp.entries.push((*i, j, v)),
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let body = if f.len() % 2 == 1 { &f[1..] } else { &f[..] };
                for pair in body.chunks(2) {
                    let v = num(&pair[1], ln)?;
                    match row_idx.get(&pair[0]) {
                        None => {
                            return Err(Error::Parse { line: ln, msg: format!("unknown row '{}'", pair[0]) })
                        }
                        Some(None) => {
                            if sec == Section::Rhs && pair[0] == lp.obj_name {
                                lp.obj_constant = -v;
                            }
                        }
                        Some(Some(i)) => {
                            if sec == Section::Rhs {
                                lp.rhs[*i] = v;
                            } else {
                                lp.ranges[*i] = Some(v);
                            }
                        }
                    }
                }
            }
            Section::Bounds => {
                let kind = f[0].to_ascii_uppercase();
                let needs_value = matches!(kind.as_str(), "UP" | "LO" | "FX" | "LI" | "UI");
                let known = needs_value || matches!(kind.as_str(), "FR" | "MI" | "PL" | "BV");
                if !known {
                    return Err(Error::Parse { line: ln, msg: format!("unknown bound type '{kind}'") });
                }
                let (col, val) = match (needs_value, f.len()) {
                    (true, 4) => (&f[2], Some(num(&f[3], ln)?)),
                    (true, 3) => (&f[1], Some(num(&f[2], ln)?)),
                    (false, 3) => (&f[2], None),
                    (false, 2) => (&f[1], None),
                    _ => {
                        return Err(Error::Parse { line: ln, msg: format!("malformed {kind} bound") })
                    }
                };
                let j = *col_idx
                    .get(col)
                    .ok_or_else(|| Error::Parse { line: ln, msg: format!("bound on unknown column '{col}'") })?;
                match kind.as_str() {
                    "UP" | "UI" => {
                        let v = val.unwrap();
                        lp.upper[j] = v;
                        if v < 0.0 && lp.lower[j] == 0.0 {
                            lp.lower[j] = f64::NEG_INFINITY;
                            lp.warnings.push(format!("line {ln}: negative upper bound on '{col}' makes it unbounded below"));
                        }
                    }
                    "LO" | "LI" => lp.lower[j] = val.unwrap(),
                    "FX" => {
                        lp.lower[j] = val.unwrap();
                        lp.upper[j] = val.unwrap();
                    }
                    "FR" => {
                        lp.lower[j] = f64::NEG_INFINITY;
                        lp.upper[j] = f64::INFINITY;
                    }
                    "MI" => lp.lower[j] = f64::NEG_INFINITY,
                    "PL" => lp.upper[j] = f64::INFINITY,
                    "BV" => {
                        lp.lower[j] = 0.0;
                        lp.upper[j] = 1.0;
                    }
                    _ => unreachable!(),
                }
            }
        }
    }
    if lp.obj_name.is_empty() {
        lp.warnings.push("no objective row; objective is zero".into());
    }
    if !saw_end {
        log::warn!("MPS input has no ENDATA line");
        lp.warnings.push("missing ENDATA".into());
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "NAME          TINY
ROWS
 N  COST
 E  R1
COLUMNS
    X1        COST               1.0   R1                 1.0
    X2        COST               2.0   R1                 1.0
RHS
    RHS       R1                 1.0
ENDATA
";

    #[test]
    fn minimal_free_and_fixed() {
        for fmt in [MpsFormat::Free, MpsFormat::Fixed] {
            let lp = parse_mps(TINY, fmt).unwrap();
            assert_eq!(lp.rows.len(), 1);
            assert_eq!(lp.cols.len(), 2);
            assert_eq!(lp.obj, vec![1.0, 2.0]);
            assert_eq!(lp.rhs, vec![1.0]);
            assert!(lp.warnings.is_empty(), "{:?}", lp.warnings);
        }
    }

    #[test]
    fn fixed_format_allows_spaces_in_names() {
        let text = "NAME          SP
ROWS
 N  COST
 L  ROW A
COLUMNS
    COL 1     COST               1.0   ROW A              2.0
RHS
    RHS       ROW A              4.0
ENDATA
";
        let lp = parse_mps(text, MpsFormat::Fixed).unwrap();
        assert_eq!(lp.rows[0].name, "ROW A");
        assert_eq!(lp.cols[0], "COL 1");
        assert_eq!(lp.entries, vec![(0, 0, 2.0)]);
    }

    #[test]
    fn missing_endata_warns() {
        let text = TINY.replace("ENDATA\n", "");
        let lp = parse_mps(&text, MpsFormat::Free).unwrap();
        assert!(lp.warnings.iter().any(|w| w.contains("ENDATA")));
    }

    #[test]
    fn unknown_bound_key_is_named() {
        let text = TINY.replace("ENDATA", "BOUNDS\n XX BND       X1                 1.0\nENDATA");
        match parse_mps(&text, MpsFormat::Free) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 11);
                assert!(msg.contains("XX"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_row_has_line_number() {
        let text = TINY.replace(" E  R1\n", " E  R1\n L  R1\n");
        match parse_mps(&text, MpsFormat::Free) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ranges_follow_sign_conventions() {
        let text = "NAME R
ROWS
 N obj
 E e1
 E e2
 L l1
 G g1
COLUMNS
 x obj 1 e1 1
 x e2 1 l1 1
 x g1 1
RHS
 rhs e1 1 e2 1
 rhs l1 5 g1 2
RANGES
 rng e1 2 e2 -2
 rng l1 3 g1 -4
ENDATA
";
        let lp = parse_mps(text, MpsFormat::Free).unwrap();
        assert_eq!(lp.row_bounds(0), (1.0, 3.0));
        assert_eq!(lp.row_bounds(1), (-1.0, 1.0));
        assert_eq!(lp.row_bounds(2), (2.0, 5.0));
        assert_eq!(lp.row_bounds(3), (2.0, 6.0));
    }

    #[test]
    fn bounds_and_objective_constant() {
        let text = "NAME B
ROWS
 N obj
 L c1
COLUMNS
 x obj 1 c1 1
 y obj 1 c1 1
 z obj 1 c1 1
RHS
 rhs c1 4 obj 2.5
BOUNDS
 UP bnd x 3
 FR bnd y
 MI bnd z
 UP bnd z -1
ENDATA
";
        let lp = parse_mps(text, MpsFormat::Free).unwrap();
        assert_eq!((lp.lower[0], lp.upper[0]), (0.0, 3.0));
        assert_eq!((lp.lower[1], lp.upper[1]), (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!((lp.lower[2], lp.upper[2]), (f64::NEG_INFINITY, -1.0));
        assert_eq!(lp.obj_constant, -2.5);
    }
}
