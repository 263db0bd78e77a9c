//! CSV emission for sweep results.
//!
//! The main format is one row per (scheme, snr) cell with full-precision
//! decimals, so a written file parses back to bit-identical values. The
//! plot-data variant reshapes the same numbers into one sum-rate column per
//! scheme for direct gnuplot consumption.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::sweep::RateCurve;

pub const CSV_HEADER: &str = "scheme,snr_db,sum_rate_bps_hz,std_err,realizations";

/// Shortest decimal that round-trips the exact f64 (17 significant digits
/// covers every double).
fn full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render the per-cell CSV body, header first, newline-terminated.
pub fn format_curves(curves: &[RateCurve]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for curve in curves {
        for p in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                curve.scheme.label(),
                p.snr_db,
                full(p.sum_rate),
                full(p.std_err),
                p.realizations
            ));
        }
    }
    out
}

/// Render the gnuplot-friendly reshape: snr_db plus one sum-rate column per
/// scheme.
pub fn format_plot_data(curves: &[RateCurve]) -> String {
    let mut out = String::from("snr_db");
    for curve in curves {
        out.push(',');
        out.push_str(curve.scheme.label());
    }
    out.push('\n');
    let grid = &curves[0].points;
    for (i, p) in grid.iter().enumerate() {
        out.push_str(&format!("{}", p.snr_db));
        for curve in curves {
            out.push(',');
            out.push_str(&full(curve.points[i].sum_rate));
        }
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, body: &str) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(body.as_bytes())?;
    w.flush()
}

/// Write the per-cell CSV. Errors on an empty curve list or unwritable path.
pub fn emit_csv(curves: &[RateCurve], path: &Path) -> io::Result<()> {
    if curves.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "no curves to emit",
        ));
    }
    write_text(path, &format_curves(curves))
}

/// Write the plot-data reshape. Same preconditions as [`emit_csv`].
pub fn emit_plot_data(curves: &[RateCurve], path: &Path) -> io::Result<()> {
    if curves.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "no curves to emit",
        ));
    }
    write_text(path, &format_plot_data(curves))
}
