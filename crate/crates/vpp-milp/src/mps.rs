//! Fixed-format MPS export and import.
//!
//! The writer emits the classic section order (`NAME`, `OBJSENSE`, `ROWS`,
//! `COLUMNS` with `INTORG`/`INTEND` markers, `RHS`, `RANGES`, `BOUNDS`,
//! `ENDATA`), one entry per line, and is byte-for-byte deterministic for a
//! given model. Values use shortest-round-trip formatting so every `f64`
//! survives export and import bit-exactly, even where that overflows the
//! nominal 12-character value field; the reader splits on whitespace and is
//! therefore also a free-format reader.
//!
//! Names are mangled to at most 8 uppercase alphanumeric characters. Two
//! distinct rows (or columns) that mangle to the same string are an export
//! error rather than a silent rename.
//!
//! The reader supports the bound types `LO`, `UP`, `FX`, `FR`, `MI`, `PL`
//! and `BV` and rejects what the writer never produces: `RANGES` entries,
//! multiple objective rows, and general (non-binary) integer columns.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::model::{MilpModel, ModelError, RowSense};

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("name {raw:?} has no alphanumeric characters to build an MPS name from")]
    EmptyName { raw: String },
    #[error("{kind} names {a:?} and {b:?} both mangle to MPS name {mangled:?}")]
    NameCollision {
        kind: &'static str,
        a: String,
        b: String,
        mangled: String,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {what} not supported")]
    Unsupported { line: usize, what: String },
    #[error("imported model is invalid: {0}")]
    InvalidModel(#[from] ModelError),
}

/// Mangles a raw name into the MPS character set: uppercase alphanumeric,
/// at most 8 characters.
fn mangle(raw: &str) -> Result<String, MpsError> {
    let s: String = raw
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_uppercase())
        .take(8)
        .collect();
    if s.is_empty() {
        return Err(MpsError::EmptyName { raw: raw.into() });
    }
    Ok(s)
}

fn fmt_val(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

struct NameTable {
    kind: &'static str,
    seen: HashMap<String, String>,
}

impl NameTable {
    fn new(kind: &'static str) -> Self {
        NameTable {
            kind,
            seen: HashMap::new(),
        }
    }

    fn reserve(&mut self, mangled: &str, raw: &str) {
        self.seen.insert(mangled.to_string(), raw.to_string());
    }

    fn insert(&mut self, raw: &str) -> Result<String, MpsError> {
        let m = mangle(raw)?;
        if let Some(prev) = self.seen.get(&m) {
            return Err(MpsError::NameCollision {
                kind: self.kind,
                a: prev.clone(),
                b: raw.to_string(),
                mangled: m,
            });
        }
        self.seen.insert(m.clone(), raw.to_string());
        Ok(m)
    }
}

/// Writes `model` as fixed-format MPS.
pub fn export_mps(model: &MilpModel, w: &mut impl Write) -> Result<(), MpsError> {
    model.validate()?;
    let text = render(model)?;
    w.write_all(text.as_bytes())?;
    Ok(())
}

/// Renders `model` as an MPS string.
pub fn export_mps_string(model: &MilpModel) -> Result<String, MpsError> {
    model.validate()?;
    render(model)
}

fn render(model: &MilpModel) -> Result<String, MpsError> {
    let mut rows = NameTable::new("row");
    rows.reserve("OBJ", "(objective)");
    let row_names: Vec<String> = (0..model.num_rows())
        .map(|r| rows.insert(model.row_name(r)))
        .collect::<Result<_, _>>()?;
    let mut cols = NameTable::new("column");
    let col_names: Vec<String> = (0..model.num_cols())
        .map(|c| cols.insert(model.col_name(c)))
        .collect::<Result<_, _>>()?;

    // Column-major view of the rows.
    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_cols()];
    for r in 0..model.num_rows() {
        for &(c, a) in model.row_coeffs(r) {
            entries[c].push((r, a));
        }
    }

    let model_name = if model.name.is_empty() {
        "MODEL".to_string()
    } else {
        mangle(&model.name)?
    };

    let mut out = String::new();
    out.push_str(&format!("NAME          {model_name}\n"));
    out.push_str("OBJSENSE\n    MAX\n");
    out.push_str("ROWS\n N  OBJ\n");
    for (r, name) in row_names.iter().enumerate() {
        let sense = match model.row_sense(r) {
            RowSense::Le => 'L',
            RowSense::Eq => 'E',
            RowSense::Ge => 'G',
        };
        out.push_str(&format!(" {sense}  {name}\n"));
    }

    out.push_str("COLUMNS\n");
    let mut in_integer = false;
    let mut marker = 0usize;
    for c in 0..model.num_cols() {
        if model.is_binary(c) != in_integer {
            marker += 1;
            let tag = if in_integer { "'INTEND'" } else { "'INTORG'" };
            out.push_str(&format!(
                "    {:<8}  {:<8}{:17}{}\n",
                format!("MK{marker}"),
                "'MARKER'",
                "",
                tag
            ));
            in_integer = !in_integer;
        }
        let obj = model.objective_coeff(c);
        let mut wrote = false;
        if obj != 0.0 {
            out.push_str(&format!(
                "    {:<8}  {:<8}  {}\n",
                col_names[c],
                "OBJ",
                fmt_val(obj)
            ));
            wrote = true;
        }
        for &(r, a) in &entries[c] {
            out.push_str(&format!(
                "    {:<8}  {:<8}  {}\n",
                col_names[c],
                row_names[r],
                fmt_val(a)
            ));
            wrote = true;
        }
        if !wrote {
            // Keep the column alive in the file.
            out.push_str(&format!("    {:<8}  {:<8}  0\n", col_names[c], "OBJ"));
        }
    }
    if in_integer {
        marker += 1;
        out.push_str(&format!(
            "    {:<8}  {:<8}{:17}{}\n",
            format!("MK{marker}"),
            "'MARKER'",
            "",
            "'INTEND'"
        ));
    }

    out.push_str("RHS\n");
    for (r, name) in row_names.iter().enumerate() {
        let rhs = model.row_rhs(r);
        if rhs != 0.0 {
            out.push_str(&format!(
                "    {:<8}  {:<8}  {}\n",
                "RHS",
                name,
                fmt_val(rhs)
            ));
        }
    }

    out.push_str("RANGES\n");

    out.push_str("BOUNDS\n");
    for c in 0..model.num_cols() {
        let (lo, hi) = model.bounds(c);
        let name = &col_names[c];
        if lo == hi {
            out.push_str(&format!(
                " FX {:<8}  {:<8}  {}\n",
                "BND",
                name,
                fmt_val(lo)
            ));
            continue;
        }
        if lo.is_infinite() {
            out.push_str(&format!(" MI {:<8}  {:<8}\n", "BND", name));
        } else if lo != 0.0 {
            out.push_str(&format!(
                " LO {:<8}  {:<8}  {}\n",
                "BND",
                name,
                fmt_val(lo)
            ));
        }
        if hi.is_finite() {
            out.push_str(&format!(
                " UP {:<8}  {:<8}  {}\n",
                "BND",
                name,
                fmt_val(hi)
            ));
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[derive(Default)]
struct ColStage {
    name: String,
    binary: bool,
    lower: f64,
    upper: f64,
    objective: f64,
    entries: Vec<(usize, f64)>,
}

/// Parses an MPS file written by [`export_mps`] (or any free-format MPS
/// file within the supported feature set) back into a model.
pub fn import_mps(reader: impl BufRead) -> Result<MilpModel, MpsError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Ranges,
        Bounds,
        Done,
    }

    let mut section = Section::None;
    let mut name = String::new();
    let mut maximize = false;
    let mut obj_row: Option<String> = None;
    let mut row_ids: HashMap<String, usize> = HashMap::new();
    let mut row_defs: Vec<(String, RowSense)> = Vec::new();
    let mut rhs_vals: HashMap<usize, f64> = HashMap::new();
    let mut col_ids: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<ColStage> = Vec::new();
    let mut in_integer = false;

    let err = |line: usize, msg: String| MpsError::Parse { line, msg };
    let parse_num = |line: usize, s: &str| -> Result<f64, MpsError> {
        s.parse::<f64>()
            .map_err(|_| err(line, format!("bad number {s:?}")))
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let indented = line.starts_with(' ') || line.starts_with('\t');
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }

        if !indented {
            match fields[0] {
                "NAME" => {
                    name = fields.get(1).unwrap_or(&"").to_string();
                    continue;
                }
                "OBJSENSE" => {
                    if let Some(tok) = fields.get(1) {
                        maximize = tok.starts_with("MAX");
                    } else {
                        section = Section::ObjSense;
                    }
                    continue;
                }
                "ROWS" => {
                    section = Section::Rows;
                    continue;
                }
                "COLUMNS" => {
                    section = Section::Columns;
                    continue;
                }
                "RHS" => {
                    section = Section::Rhs;
                    continue;
                }
                "RANGES" => {
                    section = Section::Ranges;
                    continue;
                }
                "BOUNDS" => {
                    section = Section::Bounds;
                    continue;
                }
                "ENDATA" => {
                    section = Section::Done;
                    break;
                }
                other => return Err(err(lineno, format!("unknown section {other:?}"))),
            }
        }

        match section {
            Section::ObjSense => {
                maximize = fields[0].starts_with("MAX");
                section = Section::None;
            }
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(err(lineno, "expected sense and row name".into()));
                }
                let (sense, rname) = (fields[0], fields[1]);
                match sense {
                    "N" => {
                        if obj_row.is_some() {
                            return Err(err(lineno, "multiple objective rows".into()));
                        }
                        obj_row = Some(rname.to_string());
                    }
                    "L" | "G" | "E" => {
                        let s = match sense {
                            "L" => RowSense::Le,
                            "G" => RowSense::Ge,
                            _ => RowSense::Eq,
                        };
                        if row_ids.insert(rname.to_string(), row_defs.len()).is_some() {
                            return Err(err(lineno, format!("duplicate row {rname:?}")));
                        }
                        row_defs.push((rname.to_string(), s));
                    }
                    other => return Err(err(lineno, format!("bad row sense {other:?}"))),
                }
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    match *fields.last().unwrap() {
                        "'INTORG'" => in_integer = true,
                        "'INTEND'" => in_integer = false,
                        other => return Err(err(lineno, format!("bad marker {other:?}"))),
                    }
                    continue;
                }
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(err(lineno, "expected column, then row/value pairs".into()));
                }
                let cname = fields[0];
                let cid = *col_ids.entry(cname.to_string()).or_insert_with(|| {
                    cols.push(ColStage {
                        name: cname.to_string(),
                        binary: in_integer,
                        lower: 0.0,
                        upper: if in_integer { 1.0 } else { f64::INFINITY },
                        objective: 0.0,
                        entries: Vec::new(),
                    });
                    cols.len() - 1
                });
                for pair in fields[1..].chunks(2) {
                    let (rname, val) = (pair[0], parse_num(lineno, pair[1])?);
                    if Some(rname) == obj_row.as_deref() {
                        cols[cid].objective = val;
                    } else if let Some(&rid) = row_ids.get(rname) {
                        if cols[cid].entries.iter().any(|&(r, _)| r == rid) {
                            return Err(err(
                                lineno,
                                format!("duplicate entry for column {cname:?} in row {rname:?}"),
                            ));
                        }
                        cols[cid].entries.push((rid, val));
                    } else {
                        return Err(err(lineno, format!("unknown row {rname:?}")));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(err(lineno, "expected set name, then row/value pairs".into()));
                }
                for pair in fields[1..].chunks(2) {
                    let (rname, val) = (pair[0], parse_num(lineno, pair[1])?);
                    if Some(rname) == obj_row.as_deref() {
                        return Err(MpsError::Unsupported {
                            line: lineno,
                            what: "objective-row RHS (objective constant)".into(),
                        });
                    }
                    let Some(&rid) = row_ids.get(rname) else {
                        return Err(err(lineno, format!("unknown row {rname:?}")));
                    };
                    if rhs_vals.insert(rid, val).is_some() {
                        return Err(err(lineno, format!("duplicate RHS for row {rname:?}")));
                    }
                }
            }
            Section::Ranges => {
                return Err(MpsError::Unsupported {
                    line: lineno,
                    what: "RANGES entries".into(),
                });
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(lineno, "expected bound type, set, column".into()));
                }
                let (btype, cname) = (fields[0], fields[2]);
                let Some(&cid) = col_ids.get(cname) else {
                    return Err(err(lineno, format!("unknown column {cname:?}")));
                };
                let value = || -> Result<f64, MpsError> {
                    let Some(v) = fields.get(3) else {
                        return Err(err(lineno, format!("bound type {btype} needs a value")));
                    };
                    parse_num(lineno, v)
                };
                match btype {
                    "LO" => cols[cid].lower = value()?,
                    "UP" => cols[cid].upper = value()?,
                    "FX" => {
                        let v = value()?;
                        cols[cid].lower = v;
                        cols[cid].upper = v;
                    }
                    "FR" => {
                        cols[cid].lower = f64::NEG_INFINITY;
                        cols[cid].upper = f64::INFINITY;
                    }
                    "MI" => cols[cid].lower = f64::NEG_INFINITY,
                    "PL" => cols[cid].upper = f64::INFINITY,
                    "BV" => {
                        cols[cid].binary = true;
                        cols[cid].lower = 0.0;
                        cols[cid].upper = 1.0;
                    }
                    other => {
                        return Err(MpsError::Unsupported {
                            line: lineno,
                            what: format!("bound type {other:?}"),
                        })
                    }
                }
            }
            Section::None | Section::Done => {
                return Err(err(lineno, "data outside any section".into()));
            }
        }
    }

    if section != Section::Done {
        return Err(MpsError::Parse {
            line: 0,
            msg: "missing ENDATA".into(),
        });
    }

    for c in &cols {
        if c.binary && (c.lower < 0.0 || c.upper > 1.0) {
            return Err(MpsError::Unsupported {
                line: 0,
                what: format!(
                    "general integer column {:?} (bounds [{}, {}])",
                    c.name, c.lower, c.upper
                ),
            });
        }
    }

    let mut model = MilpModel::new(name);
    for c in &cols {
        let sign = if maximize { 1.0 } else { -1.0 };
        let id = if c.binary {
            model.add_binary_col(&c.name, sign * c.objective)
        } else {
            model.add_col(&c.name, c.lower, c.upper, sign * c.objective)
        };
        if c.binary {
            model.set_bounds(id, c.lower, c.upper);
        }
    }
    let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); row_defs.len()];
    for (cid, c) in cols.iter().enumerate() {
        for &(rid, val) in &c.entries {
            row_entries[rid].push((cid, val));
        }
    }
    for (rid, (rname, sense)) in row_defs.iter().enumerate() {
        let rhs = rhs_vals.get(&rid).copied().unwrap_or(0.0);
        model.add_row(rname, *sense, rhs, &row_entries[rid]);
    }
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MilpModel, RowSense};

    fn sample_model() -> MilpModel {
        let mut m = MilpModel::new("sample");
        let x = m.add_col("x", 0.0, 4.5, 1.25);
        let y = m.add_col("y", -2.0, f64::INFINITY, -0.75);
        let b = m.add_binary_col("b", 10.0);
        let f = m.add_col("f", f64::NEG_INFINITY, f64::INFINITY, 0.5);
        m.add_row("cap", RowSense::Le, 7.5, &[(x, 2.0), (y, 1.0), (b, 3.0)]);
        m.add_row("bal", RowSense::Eq, 0.25, &[(y, 1.0), (f, -1.0)]);
        m.add_row("floor", RowSense::Ge, -1.0, &[(x, 0.5), (f, 1.0)]);
        m
    }

    #[test]
    fn export_import_preserves_structure() {
        let m = sample_model();
        let text = export_mps_string(&m).unwrap();
        let back = import_mps(text.as_bytes()).unwrap();
        assert_eq!(back.num_cols(), m.num_cols());
        assert_eq!(back.num_rows(), m.num_rows());
        assert_eq!(back.num_binary_cols(), 1);
        for c in 0..m.num_cols() {
            assert_eq!(back.bounds(c), m.bounds(c), "bounds of col {c}");
            assert_eq!(
                back.objective_coeff(c),
                m.objective_coeff(c),
                "objective of col {c}"
            );
            assert_eq!(back.is_binary(c), m.is_binary(c));
        }
        for r in 0..m.num_rows() {
            assert_eq!(back.row_sense(r), m.row_sense(r));
            assert_eq!(back.row_rhs(r), m.row_rhs(r));
            assert_eq!(back.row_coeffs(r), m.row_coeffs(r));
        }
    }

    #[test]
    fn reexport_is_byte_identical() {
        let m = sample_model();
        let a = export_mps_string(&m).unwrap();
        let back = import_mps(a.as_bytes()).unwrap();
        let b = export_mps_string(&back).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_model_round_trips() {
        let m = MilpModel::new("empty");
        let text = export_mps_string(&m).unwrap();
        let back = import_mps(text.as_bytes()).unwrap();
        assert_eq!(back.num_cols(), 0);
        assert_eq!(back.num_rows(), 0);
    }

    #[test]
    fn awkward_floats_survive_bit_exactly() {
        let mut m = MilpModel::new("floats");
        let vals = [
            std::f64::consts::PI,
            0.1 + 0.2,
            1.0 / 3.0,
            -1.2345678901234567e-8,
            2.2250738585072014e-308,
            9.007199254740993e15,
        ];
        for (i, &v) in vals.iter().enumerate() {
            let c = m.add_col(format!("c{i}"), -v.abs(), v.abs(), v);
            m.add_row(format!("r{i}"), RowSense::Le, v, &[(c, v)]);
        }
        let text = export_mps_string(&m).unwrap();
        let back = import_mps(text.as_bytes()).unwrap();
        for (i, &v) in vals.iter().enumerate() {
            assert_eq!(back.objective_coeff(i).to_bits(), v.to_bits());
            assert_eq!(back.row_rhs(i).to_bits(), v.to_bits());
            assert_eq!(back.row_coeffs(i)[0].1.to_bits(), v.to_bits());
            assert_eq!(back.bounds(i).0.to_bits(), (-v.abs()).to_bits());
        }
    }

    #[test]
    fn name_collision_is_an_error() {
        let mut m = MilpModel::new("clash");
        m.add_col("x_1", 0.0, 1.0, 1.0);
        m.add_col("X.1", 0.0, 1.0, 1.0);
        let e = export_mps_string(&m).unwrap_err();
        assert!(matches!(e, MpsError::NameCollision { .. }));
        let msg = e.to_string();
        assert!(msg.contains("X1"), "unexpected message: {msg}");
    }

    #[test]
    fn truncation_collision_is_an_error() {
        let mut m = MilpModel::new("clash");
        m.add_col("verylongname_a", 0.0, 1.0, 1.0);
        m.add_col("verylongname_b", 0.0, 1.0, 1.0);
        assert!(matches!(
            export_mps_string(&m),
            Err(MpsError::NameCollision { .. })
        ));
    }

    #[test]
    fn row_named_like_objective_collides() {
        let mut m = MilpModel::new("clash");
        let x = m.add_col("x", 0.0, 1.0, 1.0);
        m.add_row("obj", RowSense::Le, 1.0, &[(x, 1.0)]);
        assert!(matches!(
            export_mps_string(&m),
            Err(MpsError::NameCollision { .. })
        ));
    }

    #[test]
    fn unusable_name_is_an_error() {
        let mut m = MilpModel::new("bad");
        m.add_col("+++", 0.0, 1.0, 1.0);
        assert!(matches!(
            export_mps_string(&m),
            Err(MpsError::EmptyName { .. })
        ));
    }

    #[test]
    fn zero_entry_column_survives_round_trip() {
        let mut m = MilpModel::new("iso");
        m.add_col("lonely", 0.0, 2.0, 0.0);
        let text = export_mps_string(&m).unwrap();
        let back = import_mps(text.as_bytes()).unwrap();
        assert_eq!(back.num_cols(), 1);
        assert_eq!(back.bounds(0), (0.0, 2.0));
    }

    #[test]
    fn rejects_ranges_entries() {
        let text = "NAME          T\nROWS\n N  OBJ\n L  R1\nCOLUMNS\n    X  R1  1\nRHS\nRANGES\n    RNG  R1  2\nBOUNDS\nENDATA\n";
        let e = import_mps(text.as_bytes()).unwrap_err();
        assert!(matches!(e, MpsError::Unsupported { .. }));
    }

    #[test]
    fn rejects_general_integer_columns() {
        let text = "NAME          T\nOBJSENSE\n    MAX\nROWS\n N  OBJ\nCOLUMNS\n    M1  'MARKER'  'INTORG'\n    X  OBJ  1\n    M2  'MARKER'  'INTEND'\nRHS\nBOUNDS\n UP BND  X  5\nENDATA\n";
        let e = import_mps(text.as_bytes()).unwrap_err();
        assert!(matches!(e, MpsError::Unsupported { .. }));
    }

    #[test]
    fn rejects_multiple_objective_rows() {
        let text = "NAME          T\nROWS\n N  OBJ\n N  OBJ2\nCOLUMNS\nRHS\nBOUNDS\nENDATA\n";
        let e = import_mps(text.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("multiple objective rows"));
    }

    #[test]
    fn rejects_unknown_row_reference() {
        let text = "NAME          T\nROWS\n N  OBJ\nCOLUMNS\n    X  NOPE  1\nRHS\nBOUNDS\nENDATA\n";
        let e = import_mps(text.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("unknown row"));
    }

    #[test]
    fn missing_endata_is_an_error() {
        let text = "NAME          T\nROWS\n N  OBJ\n";
        let e = import_mps(text.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("ENDATA"));
    }

    #[test]
    fn minimize_objsense_negates_into_max_form() {
        let text = "NAME          T\nOBJSENSE\n    MIN\nROWS\n N  COST\n L  R1\nCOLUMNS\n    X  COST  2\n    X  R1  1\nRHS\n    RHS  R1  4\nBOUNDS\nENDATA\n";
        let back = import_mps(text.as_bytes()).unwrap();
        assert_eq!(back.objective_coeff(0), -2.0);
    }

    #[test]
    fn import_solves_same_as_original() {
        use crate::simplex::{solve_lp, Tolerances};
        let m = sample_model();
        let text = export_mps_string(&m).unwrap();
        let back = import_mps(text.as_bytes()).unwrap();
        let t = Tolerances::default();
        let a = solve_lp(&m, &t);
        let b = solve_lp(&back, &t);
        assert_eq!(a.status, b.status);
        assert!((a.objective - b.objective).abs() < 1e-9);
    }
}
