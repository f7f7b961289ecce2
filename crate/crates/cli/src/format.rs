//! Plot-data TSV files.
//!
//! Numbers use C `%.12g` formatting. Lines starting with `#` are comments;
//! the spectrum file ends with `# effective_rank=<k>`.

use std::fmt::Write as _;

/// `value` with `sig` significant digits, formatted like C's `%.{sig}g`.
pub fn format_g(value: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if value == 0.0 {
        return if value.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !value.is_finite() {
        return if value.is_nan() {
            "nan".into()
        } else if value > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", sig - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{value:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn g12(value: f64) -> String {
    format_g(value, 12)
}

/// One `index<TAB>eigenvalue` line per eigenvalue (1-based index), then the
/// summary line.
pub fn spectrum_tsv(header: &[String], eigenvalues: &[f64], effective_rank: usize) -> String {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    for (i, &v) in eigenvalues.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}", i + 1, g12(v));
    }
    let _ = writeln!(out, "# effective_rank={effective_rank}");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSpectrum {
    pub eigenvalues: Vec<f64>,
    pub effective_rank: usize,
}

/// Reads a file written by [`spectrum_tsv`].
pub fn parse_spectrum_tsv(text: &str) -> Result<ParsedSpectrum, String> {
    let mut eigenvalues = Vec::new();
    let mut effective_rank = None;
    for (no, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("# effective_rank=") {
            effective_rank = Some(rest.trim().parse().map_err(|e| format!("line {}: {e}", no + 1))?);
        } else if line.starts_with('#') || line.trim().is_empty() {
            continue;
        } else {
            let (idx, val) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected two tab-separated fields", no + 1))?;
            let idx: usize = idx.parse().map_err(|e| format!("line {}: {e}", no + 1))?;
            if idx != eigenvalues.len() + 1 {
                return Err(format!("line {}: index {idx} out of sequence", no + 1));
            }
            eigenvalues.push(val.parse().map_err(|e| format!("line {}: {e}", no + 1))?);
        }
    }
    Ok(ParsedSpectrum {
        eigenvalues,
        effective_rank: effective_rank.ok_or("missing effective_rank summary line")?,
    })
}

/// Tab-separated table with a header row; numbers in `%.12g`.
pub fn table_tsv(columns: &[String], rows: &[(Vec<String>, Vec<f64>)]) -> String {
    let mut out = columns.join("\t");
    out.push('\n');
    for (keys, values) in rows {
        let cells: Vec<String> = keys.iter().cloned().chain(values.iter().map(|&v| g12(v))).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (1.0 / 3.0, "0.333333333333"),
            (1.0, "1"),
            (100.0, "100"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (1e-300, "1e-300"),
            (0.0, "0"),
            (9.9999999999999e5, "1000000"),
        ];
        for (v, want) in cases {
            assert_eq!(format_g(v, 12), want, "{v:e}");
        }
    }

    #[test]
    fn spectrum_round_trip() {
        let text = spectrum_tsv(&["x".into()], &[2.0, 1.0 / 3.0, 1e-20], 2);
        assert!(text.ends_with("# effective_rank=2\n"));
        let parsed = parse_spectrum_tsv(&text).unwrap();
        assert_eq!(parsed.effective_rank, 2);
        assert_eq!(parsed.eigenvalues, vec![2.0, 0.333333333333, 1e-20]);
    }

    #[test]
    fn rejects_malformed_spectrum() {
        assert!(parse_spectrum_tsv("1\t2\n").is_err());
        assert!(parse_spectrum_tsv("2\t2\n# effective_rank=1\n").is_err());
        assert!(parse_spectrum_tsv("1 2\n# effective_rank=1\n").is_err());
    }
}
