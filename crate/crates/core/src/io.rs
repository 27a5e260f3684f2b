//! Plain-text matrix dumps and output helpers.
//!
//! Dump format (one file per matrix):
//!
//! ```text
//! # fermichain matrix dump v1
//! # kind: covariance-complex
//! # gamma: 1 lambda: 1
//! # window: [-4, 4)
//! # rows: 16 cols: 16
//! <re> <im> <re> <im> ...        (cols pairs per line, rows lines)
//! ```
//!
//! Entries are row-major complex pairs in full precision; header lines
//! start with `#` and carry `key: value` metadata.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use ndarray::Array2;
use num_complex::Complex64;

use crate::covariance::CovarianceTruncation;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::quasifree::DensityMatrix;

pub const DUMP_MAGIC: &str = "fermichain matrix dump v1";

pub fn write_matrix_dump(
    out: &mut impl Write,
    kind: &str,
    meta: &[(&str, String)],
    m: &CMat,
) -> Result<()> {
    writeln!(out, "# {DUMP_MAGIC}")?;
    writeln!(out, "# kind: {kind}")?;
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "# rows: {} cols: {}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        let mut line = String::new();
        for c in 0..m.ncols() {
            if c > 0 {
                line.push(' ');
            }
            let z = m[(r, c)];
            line.push_str(&format!("{:.17e} {:.17e}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub struct MatrixDump {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    pub matrix: CMat,
}

pub fn read_matrix_dump(input: &mut impl BufRead) -> Result<MatrixDump> {
    let mut kind = String::new();
    let mut meta = BTreeMap::new();
    let mut rows = 0usize;
    let mut cols = 0usize;
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dump".into()))??;
    if first.trim_start_matches("# ").trim() != DUMP_MAGIC {
        return Err(Error::Parse(format!("not a matrix dump: {first}")));
    }
    let mut data: Vec<Vec<Complex64>> = Vec::new();
    for line in lines {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((k, v)) = rest.split_once(':') {
                let k = k.trim();
                let v = v.trim();
                match k {
                    "kind" => kind = v.to_string(),
                    "rows" => {
                        // "rows: R cols: C" on one line
                        let parts: Vec<&str> = v.split_whitespace().collect();
                        if parts.len() == 3 && parts[1] == "cols:" {
                            rows = parts[0]
                                .parse()
                                .map_err(|e| Error::Parse(format!("rows: {e}")))?;
                            cols = parts[2]
                                .parse()
                                .map_err(|e| Error::Parse(format!("cols: {e}")))?;
                        }
                    }
                    _ => {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{e}"))))
            .collect::<Result<_>>()?;
        if nums.len() % 2 != 0 {
            return Err(Error::Parse("odd number of reals in a dump row".into()));
        }
        data.push(
            nums.chunks(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
        );
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("missing rows/cols header".into()));
    }
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("dump shape mismatch".into()));
    }
    let mut matrix: CMat = Array2::zeros((rows, cols));
    for (r, row) in data.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            matrix[(r, c)] = *z;
        }
    }
    Ok(MatrixDump { kind, meta, matrix })
}

/// Dump both forms of a covariance truncation.
pub fn dump_covariance(
    out: &mut impl Write,
    trunc: &CovarianceTruncation,
    majorana: bool,
) -> Result<()> {
    let p = trunc.params();
    let meta = vec![
        ("gamma", format!("{}", p.gamma)),
        ("lambda", format!("{}", p.lambda)),
        ("window", format!("{}", trunc.window())),
        ("quadrature_error", format!("{:e}", trunc.quadrature_error())),
    ];
    if majorana {
        let m = trunc.majorana_form().mapv(|v| Complex64::new(v, 0.0));
        write_matrix_dump(out, "covariance-majorana", &meta, &m)
    } else {
        write_matrix_dump(out, "covariance-complex", &meta, trunc.complex_form())
    }
}

pub fn dump_density_matrix(
    out: &mut impl Write,
    rho: &DensityMatrix,
    repaired: bool,
) -> Result<()> {
    let sites = rho
        .sites()
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let meta = vec![("sites", sites)];
    let (kind, m) = if repaired {
        ("density-matrix-repaired", rho.repaired())
    } else {
        ("density-matrix-raw", rho.matrix())
    };
    write_matrix_dump(out, kind, &meta, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::XYParams;
    use crate::lattice::Window;

    #[test]
    fn dump_round_trip() {
        let t = CovarianceTruncation::build(
            &XYParams::new(1.0, 1.0).unwrap(),
            Window::new(-2, 2).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        dump_covariance(&mut buf, &t, false).unwrap();
        let parsed = read_matrix_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(parsed.kind, "covariance-complex");
        assert_eq!(parsed.meta["gamma"], "1");
        assert_eq!(parsed.meta["window"], "[-2, 2)");
        let dev = (&parsed.matrix - t.complex_form())
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!(dev < 1e-15);
    }

    #[test]
    fn reader_rejects_garbage() {
        let text = "not a dump\n1 2 3\n";
        assert!(read_matrix_dump(&mut text.as_bytes()).is_err());
    }
}
