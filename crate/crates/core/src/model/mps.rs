use std::fmt::Write;

use super::rows::{CanonicalModel, Sense};

/// Free-format MPS text with named rows and columns. Integer columns are
/// wrapped in MARKER blocks; bounds follow the catalog.
pub fn to_mps(model: &CanonicalModel, name: &str) -> String {
    let cat = &model.catalog;
    let mut out = String::new();
    let row_name = |i: usize| format!("R{i}_{}", model.rows[i].tag.replace('-', "_"));
    writeln!(out, "NAME {name}").unwrap();
    writeln!(out, "ROWS").unwrap();
    writeln!(out, " N COST").unwrap();
    for (i, r) in model.rows.iter().enumerate() {
        let s = match r.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        writeln!(out, " {s} {}", row_name(i)).unwrap();
    }

    let mut by_col: Vec<Vec<(String, f64)>> = vec![Vec::new(); cat.len()];
    for &(col, coef) in &model.objective {
        if coef != 0.0 {
            by_col[col].push(("COST".to_string(), coef));
        }
    }
    for (i, r) in model.rows.iter().enumerate() {
        for &(col, coef) in &r.terms {
            by_col[col].push((row_name(i), coef as f64));
        }
    }
    writeln!(out, "COLUMNS").unwrap();
    writeln!(out, " MARKER 'MARKER' 'INTORG'").unwrap();
    for (col, entries) in by_col.iter().enumerate() {
        let cname = cat.name(col);
        if entries.is_empty() {
            // keep the column declared so bounds refer to something
            writeln!(out, " {cname} COST 0").unwrap();
        }
        for (row, coef) in entries {
            writeln!(out, " {cname} {row} {coef}").unwrap();
        }
    }
    writeln!(out, " MARKER 'MARKER' 'INTEND'").unwrap();

    writeln!(out, "RHS").unwrap();
    for (i, r) in model.rows.iter().enumerate() {
        if r.rhs != 0 {
            writeln!(out, " RHS {} {}", row_name(i), r.rhs).unwrap();
        }
    }
    writeln!(out, "BOUNDS").unwrap();
    for col in 0..cat.len() {
        let (lo, hi) = cat.bounds(col);
        let cname = cat.name(col);
        if lo == 0 && hi == 1 {
            writeln!(out, " BV BND {cname}").unwrap();
        } else {
            writeln!(out, " LI BND {cname} {lo}").unwrap();
            writeln!(out, " UI BND {cname} {hi}").unwrap();
        }
    }
    writeln!(out, "ENDATA").unwrap();
    out
}
