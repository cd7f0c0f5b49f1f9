//! Draw and dataset CSV files, atomic writes, and flat key=value configs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::samplers::LogisticData;
use crate::types::DrawMatrix;

/// Write `bytes` to a sibling temporary file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_value(s: &mut String, v: f64) {
    let _ = write!(s, "{v:.16e}");
}

pub fn format_draws(d: &DrawMatrix) -> String {
    let mut s = String::with_capacity(d.n_draws() * d.dim() * 24 + 16);
    let header: Vec<String> = (1..=d.dim()).map(|k| format!("theta_{k}")).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for r in d.rows() {
        for (k, v) in r.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            fmt_value(&mut s, *v);
        }
        s.push('\n');
    }
    s
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("not a number: {field:?}") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("non-finite value {field:?}") });
    }
    Ok(v)
}

/// Parse draws CSV text. Line numbers in errors are 1-based.
pub fn parse_draws(text: &str, subset_id: usize) -> Result<DrawMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    for (k, c) in cols.iter().enumerate() {
        if *c != format!("theta_{}", k + 1) {
            return Err(Error::Parse { line: 1, msg: format!("expected header theta_1..theta_p, found {c:?}") });
        }
    }
    let p = cols.len();
    let mut data = Vec::new();
    for (i, l) in lines {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != p {
            return Err(Error::Parse { line: i + 1, msg: format!("expected {p} fields, found {}", fields.len()) });
        }
        for f in fields {
            data.push(parse_value(f, i + 1)?);
        }
    }
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    DrawMatrix::new(data, p, subset_id)
}

pub fn read_draws(path: &Path, subset_id: usize) -> Result<DrawMatrix> {
    parse_draws(&fs::read_to_string(path)?, subset_id)
}

pub fn write_draws(d: &DrawMatrix, path: &Path) -> Result<()> {
    write_atomic(path, format_draws(d).as_bytes())
}

/// Dataset CSV: `subset,y,x_1,...,x_{p-1}`; `assignment[j]` is the subset
/// of observation `j`.
pub fn format_logistic(data: &LogisticData, assignment: &[usize]) -> String {
    let mut s = String::from("subset,y");
    for k in 1..data.dim() {
        let _ = write!(s, ",x_{k}");
    }
    s.push('\n');
    for (j, a) in assignment.iter().enumerate().take(data.n_obs()) {
        let _ = write!(s, "{a},{}", u8::from(data.labels()[j]));
        for v in data.features(j) {
            s.push(',');
            fmt_value(&mut s, *v);
        }
        s.push('\n');
    }
    s
}

/// Inverse of [`format_logistic`]; `theta_star` sets the dimension.
pub fn parse_logistic(text: &str, theta_star: Vec<f64>) -> Result<(LogisticData, Vec<usize>)> {
    let p = theta_star.len();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    if header.split(',').count() != p + 1 {
        return Err(Error::Parse { line: 1, msg: format!("expected {} columns for dimension {p}", p + 1) });
    }
    let (mut feats, mut labels, mut assignment) = (Vec::new(), Vec::new(), Vec::new());
    for (i, l) in lines {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != p + 1 {
            return Err(Error::Parse { line: i + 1, msg: format!("expected {} fields", p + 1) });
        }
        assignment.push(
            f[0].trim()
                .parse()
                .map_err(|_| Error::Parse { line: i + 1, msg: "bad subset index".into() })?,
        );
        labels.push(match f[1].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse { line: i + 1, msg: format!("label {other:?} is not 0 or 1") }),
        });
        feats.push(f[2..].iter().map(|v| parse_value(v, i + 1)).collect::<Result<Vec<f64>>>()?);
    }
    Ok((LogisticData::new(&feats, labels, theta_star)?, assignment))
}

/// Single-line vector file: comma-separated values.
pub fn format_vector(v: &[f64]) -> String {
    let mut s = String::new();
    for (k, x) in v.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        fmt_value(&mut s, *x);
    }
    s.push('\n');
    s
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let line = text.lines().find(|l| !l.trim().is_empty()).ok_or(Error::EmptyInput)?;
    line.split(',').map(|f| parse_value(f, 1)).collect()
}

/// Flat `key = value` text. Blank lines and lines starting with `#` are
/// skipped; later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key=value, found {l:?}") })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse { line: i + 1, msg: "empty key".into() });
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn draws_round_trip_bitwise() {
        let mut rng = rng_from_seed(1);
        let data: Vec<f64> = (0..3000)
            .map(|_| (rng.random::<f64>() - 0.5) * 10f64.powi(rng.random_range(-300..300)))
            .collect();
        let d = DrawMatrix::new(data, 3, 0).unwrap();
        let back = parse_draws(&format_draws(&d), 0).unwrap();
        assert!(d.as_slice().iter().zip(back.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = DrawMatrix::new(vec![1.0, 2.0, 3.0, 4.0], 2, 0).unwrap();
        write_draws(&d, &path).unwrap();
        assert_eq!(read_draws(&path, 0).unwrap(), d);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn empty_and_header_only_files() {
        assert!(matches!(parse_draws("", 0), Err(Error::EmptyInput)));
        assert!(matches!(parse_draws("theta_1\n", 0), Err(Error::EmptyInput)));
    }

    #[test]
    fn nan_rejected_with_line() {
        let e = parse_draws("theta_1,theta_2\n1,2\n3,NaN\n", 0).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn arity_and_header_errors() {
        assert!(matches!(parse_draws("theta_1,theta_2\n1\n", 0), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_draws("a,b\n1,2\n", 0), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_draws("theta_1\nabc\n", 0), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn logistic_round_trip() {
        let data = LogisticData::new(&[vec![0.5, -1.0], vec![2.0, 0.25]], vec![true, false], vec![-3.0, 1.0, 2.0])
            .unwrap();
        let text = format_logistic(&data, &[1, 0]);
        let (back, a) = parse_logistic(&text, vec![-3.0, 1.0, 2.0]).unwrap();
        assert_eq!(back, data);
        assert_eq!(a, vec![1, 0]);
    }

    #[test]
    fn config_parsing() {
        let c = parse_config("# comment\ntrees = 20\n\nseed=3\ntrees=30\n").unwrap();
        assert_eq!(c["trees"], "30");
        assert_eq!(c["seed"], "3");
        assert!(matches!(parse_config("x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn vector_round_trip() {
        let v = vec![-3.0, 0.1, 1e-300];
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
    }
}
