//! Instance files: Matrix Market array format for matrices, one value per
//! line for vectors. Floats are written with 17 significant digits so a
//! write/read round trip reproduces every entry exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use spikesolve::numerics::DenseMatrix;

use crate::error::CliError;

fn read_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_error(path: &Path, line: usize, detail: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line: Some(line),
        detail: detail.into(),
    }
}

/// Reads a dense matrix in Matrix Market array format (column-major body).
pub fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let mut lines = text.lines().enumerate();

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "empty file"))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    let expected = ["%%matrixmarket", "matrix", "array", "real", "general"];
    if fields.len() != expected.len() || fields.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(parse_error(
            path,
            line_no + 1,
            "header must be '%%MatrixMarket matrix array real general'",
        ));
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (line_no, size) = body
        .next()
        .ok_or_else(|| parse_error(path, 1, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_error(path, line_no + 1, "size line must be 'rows cols'"));
    }
    let rows: usize = dims[0]
        .parse()
        .map_err(|_| parse_error(path, line_no + 1, format!("bad row count {:?}", dims[0])))?;
    let cols: usize = dims[1]
        .parse()
        .map_err(|_| parse_error(path, line_no + 1, format!("bad column count {:?}", dims[1])))?;
    if rows == 0 || cols == 0 {
        return Err(parse_error(path, line_no + 1, "matrix dimensions must be positive"));
    }

    let mut data = vec![0.0f64; rows * cols];
    let mut count = 0usize;
    let mut last_line = line_no + 1;
    for (line_no, entry) in body {
        last_line = line_no + 1;
        if count >= rows * cols {
            return Err(parse_error(
                path,
                last_line,
                format!("more than {} entries", rows * cols),
            ));
        }
        let value: f64 = entry
            .trim()
            .parse()
            .map_err(|_| parse_error(path, last_line, format!("bad number {:?}", entry.trim())))?;
        // Body is column-major per the format; storage is row-major.
        let col = count / rows;
        let row = count % rows;
        data[row * cols + col] = value;
        count += 1;
    }
    if count < rows * cols {
        return Err(parse_error(
            path,
            last_line,
            format!("expected {} entries, found {count}", rows * cols),
        ));
    }
    DenseMatrix::new(rows, cols, data).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: None,
        detail: e.to_string(),
    })
}

/// Writes a dense matrix in the same format [`read_matrix`] accepts.
pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{} {}\n", a.rows(), a.cols()));
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            out.push_str(&format!("{:.16e}\n", a.get(i, j)));
        }
    }
    fs::write(path, out).map_err(|e| read_error(path, e))
}

/// Reads a vector, one value per line; blank lines and `%` or `#` comments
/// are skipped.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let value: f64 = t
            .parse()
            .map_err(|_| parse_error(path, line_no + 1, format!("bad number {t:?}")))?;
        out.push(value);
    }
    if out.is_empty() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: None,
            detail: "no values in vector file".into(),
        });
    }
    Ok(out)
}

/// Writes a vector, one value per line.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| read_error(path, e))?;
    for x in v {
        writeln!(f, "{x:.16e}").map_err(|e| read_error(path, e))?;
    }
    Ok(())
}

/// Serializes any report as pretty JSON with a trailing newline; stable
/// field order and shortest-round-trip floats keep equal runs byte-equal.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| read_error(path, e))
}
