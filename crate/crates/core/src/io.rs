//! Plain-text instance files.
//!
//! ```text
//! # comments run to end of line
//! name: worked example
//! seed: 7
//! dims: 2 3
//! A:
//! 1/5 ? 3/4
//! 4/5 ? 0.25
//! B:
//! 1/6 2/6 3/6
//! 4/6 1/6 1/6
//! ```
//!
//! Entries are fractions, integers or decimals, separated by whitespace or
//! commas; `?` marks an unknown. A joint distribution goes under `P:`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exact::{parse_rational, RatMatrix, Rational};
use crate::model::{ConditionalMatrix, JointDistribution, Orientation};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Instance {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub dims: (usize, usize),
    pub a: Option<ConditionalMatrix>,
    pub b: Option<ConditionalMatrix>,
    pub joint: Option<JointDistribution>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    A,
    B,
    P,
}

impl Section {
    fn label(self) -> &'static str {
        match self {
            Section::A => "A",
            Section::B => "B",
            Section::P => "P",
        }
    }
}

struct Block {
    section: Section,
    header_line: usize,
    rows: Vec<Vec<Option<Rational>>>,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Byte offset (1-based column) and text of every token on a line.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, c) in line.char_indices() {
        let sep = c.is_whitespace() || c == ',';
        match (sep, start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..k]));
                start = None;
            }
            (false, None) => start = Some(k),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn finish_block(block: Block, dims: (usize, usize), inst: &mut Instance) -> Result<()> {
    let at = |message: String| err(block.header_line, 1, message);
    let name = block.section.label();
    if block.rows.len() != dims.0 {
        return Err(at(format!(
            "matrix {name} has {} rows, expected {}",
            block.rows.len(),
            dims.0
        )));
    }
    let slot = match block.section {
        Section::A => &mut inst.a,
        Section::B => &mut inst.b,
        Section::P => {
            if inst.joint.is_some() {
                return Err(at("matrix P given twice".into()));
            }
            let rows = block
                .rows
                .into_iter()
                .map(|r| r.into_iter().map(Option::unwrap).collect())
                .collect();
            let joint = JointDistribution::new(RatMatrix::from_rows(rows)?)
                .map_err(|e| at(format!("matrix P: {e}")))?;
            inst.joint = Some(joint);
            return Ok(());
        }
    };
    if slot.is_some() {
        return Err(at(format!("matrix {name} given twice")));
    }
    let orientation = if block.section == Section::A {
        Orientation::GivenColumn
    } else {
        Orientation::GivenRow
    };
    let m = ConditionalMatrix::new(orientation, block.rows)?;
    if let Some(v) = m.validate().first() {
        return Err(at(format!("matrix {name}: {v}")));
    }
    *slot = Some(m);
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut inst = Instance::default();
    let mut dims: Option<(usize, usize)> = None;
    let mut block: Option<Block> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let first_col = line.len() - line.trim_start().len() + 1;
        if let Some((key, value)) = line.split_once(':') {
            let key = key.trim();
            if let Some(b) = block.take() {
                finish_block(b, dims.unwrap_or_default(), &mut inst)?;
            }
            let value_col = key.len() + first_col + 1;
            match key {
                "name" => inst.name = Some(value.trim().to_string()),
                "seed" => {
                    let v = value.trim();
                    inst.seed = Some(
                        v.parse()
                            .map_err(|_| err(line_no, value_col, format!("invalid seed `{v}`")))?,
                    );
                }
                "dims" => {
                    if dims.is_some() {
                        return Err(err(line_no, first_col, "dims given twice"));
                    }
                    let toks = tokens(value);
                    if toks.len() != 2 {
                        return Err(err(line_no, value_col, "dims needs two sizes"));
                    }
                    let mut sizes = [0usize; 2];
                    for (slot, (col, tok)) in sizes.iter_mut().zip(&toks) {
                        *slot = tok.parse().ok().filter(|&n: &usize| n > 0).ok_or_else(|| {
                            err(
                                line_no,
                                value_col + col - 1,
                                format!("invalid size `{tok}`"),
                            )
                        })?;
                    }
                    dims = Some((sizes[0], sizes[1]));
                }
                "A" | "B" | "P" => {
                    if dims.is_none() {
                        return Err(err(line_no, first_col, "dims must precede matrices"));
                    }
                    if !value.trim().is_empty() {
                        return Err(err(
                            line_no,
                            value_col,
                            "matrix rows start on the next line",
                        ));
                    }
                    let section = match key {
                        "A" => Section::A,
                        "B" => Section::B,
                        _ => Section::P,
                    };
                    block = Some(Block {
                        section,
                        header_line: line_no,
                        rows: Vec::new(),
                    });
                }
                other => {
                    return Err(err(line_no, first_col, format!("unknown key `{other}`")));
                }
            }
            continue;
        }

        let Some(b) = block.as_mut() else {
            return Err(err(line_no, first_col, "row outside of a matrix section"));
        };
        let (rows, cols) = dims.unwrap_or_default();
        if b.rows.len() == rows {
            return Err(err(
                line_no,
                first_col,
                format!("matrix {} already has {rows} rows", b.section.label()),
            ));
        }
        let toks = tokens(line);
        if toks.len() != cols {
            return Err(err(
                line_no,
                first_col,
                format!("expected {cols} entries, found {}", toks.len()),
            ));
        }
        let mut row = Vec::with_capacity(cols);
        for (col, tok) in toks {
            if tok == "?" {
                if b.section == Section::P {
                    return Err(err(line_no, col, "unknown entries are not allowed in P"));
                }
                row.push(None);
            } else {
                row.push(Some(parse_rational(tok).map_err(|m| err(line_no, col, m))?));
            }
        }
        b.rows.push(row);
    }

    let Some(dims) = dims else {
        return Err(err(last_line.max(1), 1, "missing dims"));
    };
    if let Some(b) = block.take() {
        finish_block(b, dims, &mut inst)?;
    }
    if inst.a.is_none() && inst.b.is_none() && inst.joint.is_none() {
        return Err(err(last_line.max(1), 1, "no matrices given"));
    }
    inst.dims = dims;
    Ok(inst)
}

fn write_rows(out: &mut String, label: &str, rows: Vec<Vec<Option<Rational>>>) {
    let _ = writeln!(out, "{label}:");
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|v| {
                v.as_ref()
                    .map_or_else(|| "?".to_string(), ToString::to_string)
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
}

/// Canonical text form; entries are written as reduced fractions.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    if let Some(name) = &inst.name {
        let _ = writeln!(out, "name: {name}");
    }
    if let Some(seed) = inst.seed {
        let _ = writeln!(out, "seed: {seed}");
    }
    let _ = writeln!(out, "dims: {} {}", inst.dims.0, inst.dims.1);
    if let Some(a) = &inst.a {
        write_rows(&mut out, "A", a.rows_of_options());
    }
    if let Some(b) = &inst.b {
        write_rows(&mut out, "B", b.rows_of_options());
    }
    if let Some(p) = &inst.joint {
        let rows = p
            .cells()
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(Some).collect())
            .collect();
        write_rows(&mut out, "P", rows);
    }
    out
}

impl Instance {
    pub fn pair(a: ConditionalMatrix, b: ConditionalMatrix) -> Self {
        Self {
            dims: a.dims(),
            a: Some(a),
            b: Some(b),
            ..Self::default()
        }
    }

    pub fn from_joint(joint: JointDistribution) -> Self {
        Self {
            dims: joint.dims(),
            joint: Some(joint),
            ..Self::default()
        }
    }
}
