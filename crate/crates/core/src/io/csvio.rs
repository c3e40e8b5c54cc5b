use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use crate::device::EnergyLedger;
use crate::error::{Error, Result};
use crate::tensor::{Matrix, SweepRecord};

/// Opens `path` for writing. Existing files are only replaced when `force`
/// is set.
pub fn create_output(path: &Path, force: bool) -> Result<File> {
    let mut opts = OpenOptions::new();
    opts.write(true);
    if force {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    opts.open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::io(
                path,
                std::io::Error::new(e.kind(), "file exists; pass --force to overwrite"),
            )
        } else {
            Error::io(path, e)
        }
    })
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Factor matrix as `index,r0,r1,...`, preceded by a `# weights=` comment
/// line when weights are given.
pub fn write_factor_csv<W: Write>(m: &Matrix, weights: Option<&[f64]>, mut out: W) -> Result<()> {
    if let Some(ws) = weights {
        let joined: Vec<String> = ws.iter().map(f64::to_string).collect();
        writeln!(out, "# weights={}", joined.join(";")).map_err(csv::Error::from)?;
    }
    let mut w = writer(out);
    let mut header = vec!["index".to_string()];
    header.extend((0..m.cols()).map(|r| format!("r{r}")));
    w.write_record(&header)?;
    for i in 0..m.rows() {
        let mut rec = vec![i.to_string()];
        rec.extend(m.row(i).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}

/// Inverse of [`write_factor_csv`].
pub fn read_factor_csv(text: &str, source_name: &str) -> Result<(Matrix, Option<Vec<f64>>)> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut weights = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut header_seen = false;
    for (n, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(c) = l.strip_prefix('#') {
            if let Some(ws) = c.trim().strip_prefix("weights=") {
                let parsed = ws
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| err(n + 1, format!("invalid weight {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                weights = Some(parsed);
            }
            continue;
        }
        if !header_seen {
            if !l.starts_with("index") {
                return Err(err(n + 1, "expected an index,r0,... header".into()));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = l.split(',').collect();
        if fields[0].trim().parse::<usize>() != Ok(rows.len()) {
            return Err(err(n + 1, format!("expected row index {}", rows.len())));
        }
        rows.push(
            fields[1..]
                .iter()
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| err(n + 1, format!("invalid value {s:?}")))
                })
                .collect::<Result<_>>()?,
        );
    }
    Ok((Matrix::from_rows(&rows)?, weights))
}

pub const FIT_TRACE_HEADER: &str = "sweep,fit,residual,fit_change";

pub fn write_fit_trace<W: Write>(trace: &[SweepRecord], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(FIT_TRACE_HEADER.split(','))?;
    for r in trace {
        w.write_record([
            r.sweep.to_string(),
            r.fit.to_string(),
            r.residual.to_string(),
            r.fit_change.to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_ledger_csv<W: Write>(ledger: &EnergyLedger, out: W) -> Result<()> {
    let mut w = writer(out);
    for row in ledger.csv_rows() {
        w.write_record(&row)?;
    }
    finish(w)
}

pub const MTTKRP_CSV_HEADER: &str = "row,rank,array,reference,deviation";

/// Element-by-element comparison of an array result with the reference.
pub fn write_mttkrp_csv<W: Write>(array: &Matrix, reference: &Matrix, out: W) -> Result<()> {
    if (array.rows(), array.cols()) != (reference.rows(), reference.cols()) {
        return Err(Error::invalid("result shapes differ"));
    }
    let mut w = writer(out);
    w.write_record(MTTKRP_CSV_HEADER.split(','))?;
    for i in 0..array.rows() {
        for r in 0..array.cols() {
            let (a, b) = (array.get(i, r), reference.get(i, r));
            w.write_record([
                i.to_string(),
                r.to_string(),
                a.to_string(),
                b.to_string(),
                (a - b).abs().to_string(),
            ])?;
        }
    }
    finish(w)
}
