//! Matrix files.
//!
//! Binary layout (little endian throughout):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `UFMX`                  |
//! | 4      | 1    | version `0x01`                |
//! | 5      | 8    | rows (u64)                    |
//! | 13     | 8    | cols (u64)                    |
//! | 21     | 8·rc | values, f64, row-major        |
//!
//! The text alternative is plain CSV: one row per line, comma separated, no
//! header, every value in its shortest round-trip form.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use semsub::{Matrix, MatrixError};

use crate::error::CliError;

pub const MAGIC: &[u8; 4] = b"UFMX";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Ufmx,
    Csv,
}

impl FromStr for MatrixFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ufmx" => Ok(MatrixFormat::Ufmx),
            "csv" => Ok(MatrixFormat::Csv),
            other => Err(CliError::usage(format!("unknown format `{other}` (expected ufmx or csv)"))),
        }
    }
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Ufmx => "ufmx",
            MatrixFormat::Csv => "csv",
        }
    }

    /// `.csv` files are text, everything else binary.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Ufmx,
        }
    }
}

pub fn encode_ufmx(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_ufmx(bytes: &[u8], path: &Path) -> Result<Matrix, CliError> {
    let fail = |offset: usize, message: String| CliError::Format { path: path.to_path_buf(), offset: offset as u64, message };
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        let got = &bytes[..bytes.len().min(4)];
        return Err(fail(0, format!("bad magic bytes {got:02x?} (expected \"UFMX\")")));
    }
    if bytes.len() < HEADER_LEN {
        return Err(fail(bytes.len(), format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    if bytes[4] != VERSION {
        return Err(fail(4, format!("unsupported version {:#04x}", bytes[4])));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(5), word(13));
    if rows == 0 {
        return Err(fail(5, "row count is zero".into()));
    }
    if cols == 0 {
        return Err(fail(13, "column count is zero".into()));
    }
    let payload = bytes.len() - HEADER_LEN;
    let expected = rows.checked_mul(cols).and_then(|c| c.checked_mul(8));
    if expected != Some(payload as u64) {
        let want = expected.map_or_else(|| "an impossible number of".to_string(), |e| e.to_string());
        return Err(fail(HEADER_LEN, format!("payload is {payload} bytes but {rows}x{cols} needs {want} bytes")));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let data: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Matrix::new(rows, cols, data).map_err(|e| match e {
        MatrixError::NonFinite { row, col } => {
            fail(HEADER_LEN + 8 * (row * cols + col), format!("non-finite value at ({row}, {col})"))
        }
        other => fail(HEADER_LEN, other.to_string()),
    })
}

fn format_value(v: f64) -> String {
    // Debug gives the shortest string that parses back to the same f64
    format!("{v:?}")
}

pub fn to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| format_value(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Matrix, CliError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0usize;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let content = line.trim_end_matches(['\n', '\r']);
        if !content.trim().is_empty() {
            let mut row = Vec::new();
            let mut col_offset = offset;
            for field in content.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| CliError::Format {
                    path: path.to_path_buf(),
                    offset: col_offset as u64,
                    message: format!("line {}: `{}` is not a number", lineno + 1, field.trim()),
                })?;
                if !v.is_finite() {
                    return Err(CliError::Format {
                        path: path.to_path_buf(),
                        offset: col_offset as u64,
                        message: format!("line {}: non-finite value", lineno + 1),
                    });
                }
                row.push(v);
                col_offset += field.len() + 1;
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(CliError::Format {
                        path: path.to_path_buf(),
                        offset: offset as u64,
                        message: format!("line {} has {} values, expected {}", lineno + 1, row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        offset += line.len();
    }
    if rows.is_empty() {
        return Err(CliError::Format { path: path.to_path_buf(), offset: 0, message: "no rows".into() });
    }
    let cols = rows[0].len();
    Ok(Matrix::new(rows.len(), cols, rows.concat())?)
}

/// Reads a matrix, choosing the decoder from the file contents: a `UFMX`
/// header means binary, otherwise `.csv` files are parsed as text.
pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.starts_with(MAGIC) || MatrixFormat::for_path(path) == MatrixFormat::Ufmx {
        return decode_ufmx(&bytes, path);
    }
    let text = String::from_utf8(bytes).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to() as u64,
        message: "invalid UTF-8".into(),
    })?;
    parse_csv(&text, path)
}

/// Writes `m` as `format`, or as the format implied by the extension.
pub fn write_matrix(path: &Path, m: &Matrix, format: Option<MatrixFormat>) -> Result<(), CliError> {
    let bytes = match format.unwrap_or_else(|| MatrixFormat::for_path(path)) {
        MatrixFormat::Ufmx => encode_ufmx(m),
        MatrixFormat::Csv => to_csv(m).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
