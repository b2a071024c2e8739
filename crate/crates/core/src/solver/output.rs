use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

use super::Row;

pub fn csv_header(m: usize) -> String {
    let mut h = String::from("t,l2w_sq,linf");
    for j in 1..=m {
        write!(h, ",mass_{j}").unwrap();
    }
    h.push_str(",min_u,clamps");
    h
}

/// Full time series as CSV; floats use Rust's shortest round-trip `{:e}`.
pub fn render_csv(rows: &[Row], m: usize) -> String {
    let mut out = csv_header(m);
    out.push('\n');
    for r in rows {
        write!(out, "{:e},{:e},{:e}", r.t, r.l2w_sq, r.linf).unwrap();
        for v in &r.mass {
            write!(out, ",{v:e}").unwrap();
        }
        writeln!(out, ",{:e},{}", r.min_u, r.clamps).unwrap();
    }
    out
}

/// Two columns `t ln(l2w_sq)`; rows with a zero distance are skipped.
pub fn render_gnuplot(rows: &[Row]) -> String {
    let mut out = String::from("# t log(l2w_sq)\n");
    for r in rows.iter().filter(|r| r.l2w_sq > 0.0) {
        writeln!(out, "{:e} {:e}", r.t, r.l2w_sq.ln()).unwrap();
    }
    out
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[Row], m: usize) -> Result<()> {
    write_atomic(path, &render_csv(rows, m))
}

pub fn write_gnuplot(path: &Path, rows: &[Row]) -> Result<()> {
    write_atomic(path, &render_gnuplot(rows))
}
