//! CSV writing and reading: comma-separated, one header row, LF line
//! endings, floats at 12 significant digits. The format round-trips through
//! the reader bit-identically at that precision.

use std::io::{self, BufRead, Write};

/// A float at 12 significant digits; parsing and reformatting the result
/// reproduces the same text.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Formats a boolean column as 0/1.
pub fn fmt_flag(b: bool) -> String {
    if b {
        "1".to_string()
    } else {
        "0".to_string()
    }
}

pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    w.write_all(header.join(",").as_bytes())?;
    w.write_all(b"\n")?;
    for row in rows {
        w.write_all(row.join(",").as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a CSV produced by [`write_csv`]: header line plus numeric rows.
pub fn read_csv<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(Ok(h)) => h.split(',').map(str::to_string).collect::<Vec<_>>(),
        Some(Err(e)) => return Err(format!("read error: {e}")),
        None => return Err("empty csv".to_string()),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| format!("read error: {e}"))?;
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| format!("row {}: bad field `{f}`: {e}", i + 2))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        if row.len() != header.len() {
            return Err(format!(
                "row {}: {} fields, expected {}",
                i + 2,
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
