//! Command-line value grammars.
//!
//! Frequencies are plain hertz (`20e9`) or carry a `k`, `M` or `G` suffix,
//! optionally followed by `Hz` (`20G`, `2.5GHz`). Ranges are
//! `START:END[:STEP]`; a single value is a one-point range.

use psram_core::perf::{float_range, int_range};

pub fn parse_freq(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let t = t
        .strip_suffix("Hz")
        .or_else(|| t.strip_suffix("hz"))
        .unwrap_or(t);
    let (num, mult) = match t.chars().last() {
        Some('k' | 'K') => (&t[..t.len() - 1], 1e3),
        Some('M') => (&t[..t.len() - 1], 1e6),
        Some('G') => (&t[..t.len() - 1], 1e9),
        _ => (t, 1.0),
    };
    let v: f64 = num
        .parse()
        .map_err(|_| format!("invalid frequency {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("invalid frequency {s:?}"));
    }
    Ok(v * mult)
}

fn split_range(s: &str) -> Result<(&str, &str, Option<&str>), String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts[..] {
        [a] => Ok((a, a, None)),
        [a, b] => Ok((a, b, None)),
        [a, b, c] => Ok((a, b, Some(c))),
        _ => Err(format!("range {s:?} is not START:END[:STEP]")),
    }
}

/// Frequency range; the default step is 1 GHz, or the whole span if it is
/// shorter.
pub fn parse_freq_range(s: &str) -> Result<Vec<f64>, String> {
    let (a, b, step) = split_range(s)?;
    let (a, b) = (parse_freq(a)?, parse_freq(b)?);
    let step = match step {
        Some(st) => parse_freq(st)?,
        None if b > a => 1e9f64.min(b - a),
        None => 1.0,
    };
    float_range(a, b, step).map_err(|e| e.to_string())
}

pub fn parse_int_range(s: &str) -> Result<Vec<usize>, String> {
    let (a, b, step) = split_range(s)?;
    let p = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid integer {t:?}"))
    };
    let step = step.map(p).transpose()?.unwrap_or(1);
    int_range(p(a)?, p(b)?, step).map_err(|e| e.to_string())
}

/// Comma-separated extents, e.g. `1000000,1000000,1000000`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| *v >= 1.0 && v.fract() == 0.0 && *v < 1e18)
                .map(|v| v as usize)
                .ok_or_else(|| format!("invalid extent {t:?}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies() {
        assert_eq!(parse_freq("20e9").unwrap(), 20e9);
        assert_eq!(parse_freq("20G").unwrap(), 20e9);
        assert_eq!(parse_freq("2.5GHz").unwrap(), 2.5e9);
        assert_eq!(parse_freq("500M").unwrap(), 500e6);
        assert_eq!(parse_freq("3k").unwrap(), 3e3);
        assert!(parse_freq("fast").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_int_range("52:52").unwrap(), vec![52]);
        assert_eq!(parse_int_range("1:5:2").unwrap(), vec![1, 3, 5]);
        assert_eq!(parse_int_range("7").unwrap(), vec![7]);
        assert!(parse_int_range("5:1").is_err());
        assert_eq!(parse_freq_range("20e9:20e9").unwrap(), vec![20e9]);
        assert_eq!(parse_freq_range("5G:20G:5G").unwrap().len(), 4);
        assert_eq!(parse_freq_range("1G:40G").unwrap().len(), 40);
        assert!(parse_freq_range("40G:1G").is_err());
    }

    #[test]
    fn dims() {
        assert_eq!(parse_dims("1e6,2,3").unwrap(), vec![1_000_000, 2, 3]);
        assert!(parse_dims("0,2").is_err());
    }
}
