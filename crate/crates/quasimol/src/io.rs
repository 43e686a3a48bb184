//! Text formats for study artifacts: the convergence-table CSV consumed
//! by the fit, per-run field CSVs for plotting, and a plain-text table
//! rendering with rows over grid levels and columns over kernel scales.
//!
//! Floats are serialized with shortest round-trip formatting, so parsing
//! a written table reproduces the original values bit for bit.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::CoefficientField;
use crate::study::{ErrorTable, TableCell};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub const TABLE_CSV_HEADER: &str = "nu_h,nu_eps,linf_error";
pub const FIELD_CSV_HEADER: &str = "index,x,value";

/// Renders a table as CSV; absent cells are omitted entirely.
pub fn table_to_csv(table: &ErrorTable) -> String {
    let mut out = String::new();
    out.push_str(TABLE_CSV_HEADER);
    out.push('\n');
    for (nu_h, nu_eps, error) in table.present() {
        writeln!(out, "{nu_h},{nu_eps},{error}").expect("string write");
    }
    out
}

/// Parses the table CSV written by [`table_to_csv`]. Errors carry the
/// 1-based line number; blank lines are allowed and ignored.
pub fn parse_table_csv(text: &str) -> Result<ErrorTable, IoError> {
    let fail = |line: usize, message: String| IoError::Parse { line, message };
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, raw)) => {
                let line = raw.trim();
                if !line.is_empty() {
                    break (i + 1, line);
                }
            }
            None => return Err(fail(1, "empty input, expected a header line".into())),
        }
    };
    if header.1 != TABLE_CSV_HEADER {
        return Err(fail(
            header.0,
            format!("expected header {TABLE_CSV_HEADER:?}, found {:?}", header.1),
        ));
    }

    let mut cells = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(fail(
                line_no,
                format!("expected 3 comma-separated fields, found {}", fields.len()),
            ));
        }
        let nu_h: i32 = fields[0]
            .trim()
            .parse()
            .map_err(|e| fail(line_no, format!("bad nu_h {:?}: {e}", fields[0])))?;
        let nu_eps: i32 = fields[1]
            .trim()
            .parse()
            .map_err(|e| fail(line_no, format!("bad nu_eps {:?}: {e}", fields[1])))?;
        let error: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|e| fail(line_no, format!("bad linf_error {:?}: {e}", fields[2])))?;
        if !error.is_finite() || error < 0.0 {
            return Err(fail(
                line_no,
                format!("linf_error must be finite and non-negative, found {error}"),
            ));
        }
        if nu_h >= nu_eps {
            return Err(fail(
                line_no,
                format!("cell ({nu_h}, {nu_eps}) has grid no finer than kernel scale"),
            ));
        }
        if !seen.insert((nu_h, nu_eps)) {
            return Err(fail(line_no, format!("duplicate cell ({nu_h}, {nu_eps})")));
        }
        cells.push(TableCell {
            nu_h,
            nu_eps,
            error: Some(error),
        });
    }
    Ok(ErrorTable {
        series: None,
        cells,
    })
}

/// Plain-text rendering: one row per grid level (coarse first), one
/// column per kernel scale (largest first), blanks where a cell is
/// absent.
pub fn render_table(table: &ErrorTable) -> String {
    let mut nu_hs: Vec<i32> = table.cells.iter().map(|c| c.nu_h).collect();
    let mut nu_epss: Vec<i32> = table.cells.iter().map(|c| c.nu_eps).collect();
    nu_hs.sort_unstable_by_key(|v| -v);
    nu_hs.dedup();
    nu_epss.sort_unstable_by_key(|v| -v);
    nu_epss.dedup();

    const W: usize = 12;
    let mut out = String::new();
    write!(out, "{:>6}", "nu_h").expect("string write");
    for ne in &nu_epss {
        write!(out, "{:>W$}", format!("eps=2^{ne}")).expect("string write");
    }
    out.push('\n');
    for nh in nu_hs {
        write!(out, "{nh:>6}").expect("string write");
        for &ne in &nu_epss {
            match table.get(nh, ne) {
                Some(e) => write!(out, "{:>W$}", format!("{e:.3e}")).expect("string write"),
                None => write!(out, "{:>W$}", "").expect("string write"),
            }
        }
        out.push('\n');
    }
    out
}

/// Renders a field as `index,x,value` CSV, one row per grid point in flat
/// order; on multi-axis grids `x` holds the space-separated coordinates.
pub fn field_to_csv(field: &CoefficientField) -> String {
    let mut out = String::new();
    out.push_str(FIELD_CSV_HEADER);
    out.push('\n');
    let values = field.values();
    field.grid().for_each_point(|flat, x| {
        let coords = x
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "{flat},{coords},{}", values[flat]).expect("string write");
    });
    out
}
