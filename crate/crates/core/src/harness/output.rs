use std::io::Write;
use std::path::Path;

use super::{CflRow, ConvergenceRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = ["level", "h", "ndof", "err_l2", "eoc_l2", "err_curl", "eoc_curl", "runtime_s"];

/// Six significant digits in exponent form, e.g. `1.23457e-3`.
pub fn format_sig(v: f64) -> String {
    format!("{v:.5e}")
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

/// Writes rows as CSV. Missing rates are empty cells.
pub fn emit_results<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            format_sig(r.h),
            r.ndof.to_string(),
            format_sig(r.err_l2),
            opt_cell(r.eoc_l2),
            format_sig(r.err_curl),
            opt_cell(r.eoc_curl),
            format!("{:.3}", r.runtime_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::from(e).context(format!("cannot create {}", path.display())))?;
    emit_results(rows, std::io::BufWriter::new(file)).map_err(|e| e.context(format!("writing {}", path.display())))
}

pub fn parse_results(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |field: &str, v: &str| Error::Parse {
            line,
            message: format!("bad value {v:?} for {field}"),
        };
        let num = |k: usize| -> Result<f64> {
            let v = rec.get(k).unwrap_or("");
            v.trim().parse::<f64>().map_err(|_| bad(CSV_HEADER[k], v))
        };
        let opt = |k: usize| -> Result<Option<f64>> {
            match rec.get(k).unwrap_or("").trim() {
                "" => Ok(None),
                _ => num(k).map(Some),
            }
        };
        let int = |k: usize| -> Result<usize> {
            let v = rec.get(k).unwrap_or("");
            v.trim().parse::<usize>().map_err(|_| bad(CSV_HEADER[k], v))
        };
        rows.push(ConvergenceRow {
            level: int(0)?,
            h: num(1)?,
            ndof: int(2)?,
            err_l2: num(3)?,
            eoc_l2: opt(4)?,
            err_curl: num(5)?,
            eoc_curl: opt(6)?,
            runtime_s: num(7)?,
        });
    }
    Ok(rows)
}

/// Plain-text table for terminal output.
pub fn render_table(rows: &[ConvergenceRow]) -> String {
    let mut s = format!(
        "{:>4} {:>12} {:>9} {:>12} {:>6} {:>12} {:>6} {:>9}\n",
        "n", "h", "#dof", "err_l2", "eoc", "err_curl", "eoc", "runtime"
    );
    let rate = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
    for r in rows {
        s.push_str(&format!(
            "{:>4} {:>12} {:>9} {:>12} {:>6} {:>12} {:>6} {:>8.2}s\n",
            r.level,
            format_sig(r.h),
            r.ndof,
            format_sig(r.err_l2),
            rate(r.eoc_l2),
            format_sig(r.err_curl),
            rate(r.eoc_curl),
            r.runtime_s
        ));
    }
    s
}

/// CFL constants as CSV, one column per family in row order.
pub fn emit_cfl<W: Write>(rows: &[CflRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = rows.first() else {
        return Err(Error::InvalidArgument("no CFL rows to write".into()));
    };
    let mut header = vec!["level".to_owned(), "h".to_owned()];
    header.extend(first.entries.iter().map(|(f, _, _)| f.name().to_owned()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.level.to_string(), format_sig(r.h)];
        rec.extend(r.entries.iter().map(|(_, _, e)| format_sig(e.c)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn render_cfl_table(rows: &[CflRow]) -> String {
    let mut s = format!("{:>4} {:>12}", "n", "h");
    if let Some(first) = rows.first() {
        for (f, _, _) in &first.entries {
            s.push_str(&format!(" {:>10}", f.name()));
        }
    }
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{:>4} {:>12}", r.level, format_sig(r.h)));
        for (_, _, e) in &r.entries {
            s.push_str(&format!(" {:>10.6}", e.c));
        }
        s.push('\n');
    }
    s
}
