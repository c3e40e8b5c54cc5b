use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, SparseTensor, Tensor};

fn parse_err(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(n, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#') && !l.starts_with('%')).then_some((n + 1, l))
    })
}

/// Coordinate format: one nonzero per line as 1-based indices followed by the
/// value. The mode count comes from the first entry and each extent is the
/// largest index seen, unless `shape` is given.
pub fn parse_tns(text: &str, source_name: &str, shape: Option<&[usize]>) -> Result<SparseTensor> {
    let mut ndim = shape.map(<[usize]>::len);
    let mut extents = shape.map(<[usize]>::to_vec).unwrap_or_default();
    let mut entries = Vec::new();
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    for (line, l) in data_lines(text) {
        let tokens: Vec<&str> = l.split_whitespace().collect();
        let n = *ndim.get_or_insert(tokens.len().saturating_sub(1));
        if n == 0 || tokens.len() != n + 1 {
            return Err(parse_err(
                source_name,
                line,
                format!(
                    "expected {} indices and a value, found {} fields",
                    n.max(1),
                    tokens.len()
                ),
            ));
        }
        if extents.is_empty() {
            extents = vec![0; n];
        }
        let mut coord = Vec::with_capacity(n);
        for (m, tok) in tokens[..n].iter().enumerate() {
            let idx: usize = tok.parse().map_err(|_| {
                parse_err(
                    source_name,
                    line,
                    format!("invalid index {tok:?} in mode {m}"),
                )
            })?;
            if idx == 0 {
                return Err(parse_err(
                    source_name,
                    line,
                    format!("index in mode {m} must be 1-based"),
                ));
            }
            if shape.is_some() && idx > extents[m] {
                return Err(parse_err(
                    source_name,
                    line,
                    format!("index {idx} exceeds extent {} of mode {m}", extents[m]),
                ));
            }
            coord.push(idx - 1);
        }
        let vtok = tokens[n];
        let value: f64 = vtok
            .parse()
            .map_err(|_| parse_err(source_name, line, format!("invalid value {vtok:?}")))?;
        if !value.is_finite() {
            return Err(parse_err(
                source_name,
                line,
                format!("non-finite value {vtok:?}"),
            ));
        }
        if let Some(first) = seen.insert(coord.clone(), line) {
            return Err(parse_err(
                source_name,
                line,
                format!("duplicate of the entry on line {first}"),
            ));
        }
        if shape.is_none() {
            for (e, &c) in extents.iter_mut().zip(&coord) {
                *e = (*e).max(c + 1);
            }
        }
        entries.push((coord, value));
    }
    if extents.is_empty() {
        return Err(parse_err(source_name, 0, "no entries and no shape"));
    }
    SparseTensor::new(extents, entries)
}

/// Writes nonzeros in coordinate format, 1-based.
pub fn format_tns(t: &SparseTensor) -> String {
    let mut s = String::new();
    for (coord, v) in t.entries() {
        for c in coord {
            let _ = write!(s, "{} ", c + 1);
        }
        let _ = writeln!(s, "{v}");
    }
    s
}

/// Dense text format: a header line `N I0 .. I(N-1)` followed by the values
/// in row-major order, whitespace separated.
pub fn parse_dense(text: &str, source_name: &str) -> Result<DenseTensor> {
    let mut lines = data_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(source_name, 0, "missing header"))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(source_name, hline, format!("invalid header field {t:?}")))
        })
        .collect::<Result<_>>()?;
    let (&n, dims) = nums
        .split_first()
        .ok_or_else(|| parse_err(source_name, hline, "empty header"))?;
    if dims.len() != n {
        return Err(parse_err(
            source_name,
            hline,
            format!("header declares {n} modes but lists {}", dims.len()),
        ));
    }
    let total: usize = dims.iter().product();
    let mut values = Vec::with_capacity(total);
    for (line, l) in lines {
        for tok in l.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(source_name, line, format!("invalid value {tok:?}")))?;
            if values.len() == total {
                return Err(parse_err(
                    source_name,
                    line,
                    format!("more than {total} values"),
                ));
            }
            values.push(v);
        }
    }
    if values.len() != total {
        return Err(parse_err(
            source_name,
            0,
            format!("expected {total} values, found {}", values.len()),
        ));
    }
    DenseTensor::new(dims.to_vec(), values)
}

pub fn format_dense(t: &DenseTensor) -> String {
    let mut s = format!("{}", t.ndim());
    for d in t.shape() {
        let _ = write!(s, " {d}");
    }
    s.push('\n');
    let last = *t.shape().last().unwrap_or(&1);
    for (i, v) in t.values().iter().enumerate() {
        let _ = write!(s, "{v}");
        s.push(if (i + 1) % last.max(1) == 0 {
            '\n'
        } else {
            ' '
        });
    }
    s
}

/// Reads a tensor file: `.tns` is coordinate format, anything else the
/// dense text format.
pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    if path.extension().is_some_and(|e| e == "tns") {
        Ok(Tensor::Sparse(parse_tns(&text, &name, None)?))
    } else {
        Ok(Tensor::Dense(parse_dense(&text, &name)?))
    }
}
