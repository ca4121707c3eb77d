use std::fmt::Write as _;
use std::path::Path;

use aaprox::{CsrMatrix, DataMatrix, Vector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{io_err, BenchError, Result};

/// Rows of features with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub a: DataMatrix,
    pub y: Vector,
}

impl Dataset {
    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> BenchError {
    BenchError::Parse {
        line,
        message: message.into(),
    }
}

/// Maps labels drawn from `{0, 1}` to `{-1, +1}`; other label sets are kept.
pub fn remap_binary_labels(y: &mut Vector) {
    if y.iter().all(|&v| v == 0.0 || v == 1.0) && y.iter().any(|&v| v == 0.0) {
        y.iter_mut().for_each(|v| *v = 2.0 * *v - 1.0);
    }
}

/// Parses `label idx:val idx:val ...` lines with 1-based, strictly
/// increasing indices. Blank lines and `#` comments are skipped.
pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut ncols = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_text = parts
            .next()
            .ok_or_else(|| parse_err(line_no, "missing label"))?;
        let label: f64 = label_text
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad label '{label_text}'")))?;
        let mut row = Vec::new();
        let mut last = 0;
        for tok in parts {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("expected idx:val, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad index '{idx}'")))?;
            if idx == 0 {
                return Err(parse_err(line_no, "indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_err(
                    line_no,
                    format!("index {idx} does not increase after {last}"),
                ));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad value '{val}'")))?;
            last = idx;
            if val != 0.0 {
                row.push((idx - 1, val));
            }
        }
        ncols = ncols.max(last);
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data rows"));
    }
    let a = CsrMatrix::from_rows(ncols, &rows)?;
    let mut y = DVector::from_vec(labels);
    remap_binary_labels(&mut y);
    Ok(Dataset { a: a.into(), y })
}

pub fn parse_libsvm(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_libsvm_str(&text)
}

/// Serializes with shortest round-trip number formatting; zeros are omitted.
pub fn write_libsvm(data: &Dataset) -> String {
    let a = match &data.a {
        DataMatrix::Sparse(s) => s.clone(),
        DataMatrix::Dense(d) => CsrMatrix::from_dense(d),
    };
    let mut out = String::new();
    for i in 0..a.nrows() {
        let _ = write!(out, "{}", data.y[i]);
        for (j, v) in a.row(i) {
            if v != 0.0 {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
        }
        out.push('\n');
    }
    out
}

/// Dense CSV with the target in the first column and features after it.
pub fn parse_csv_reader<R: std::io::Read>(reader: R, has_header: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut targets = Vec::new();
    let mut width = None;
    for (i, record) in rdr.records().enumerate() {
        let line_no = i + 1 + usize::from(has_header);
        let record = record?;
        if record.len() < 2 {
            return Err(parse_err(line_no, "need a target and at least one feature"));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(
                    line_no,
                    format!("expected {w} fields, got {}", record.len()),
                ))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad number '{field}'")))?;
            if j == 0 {
                targets.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let Some(width) = width else {
        return Err(parse_err(0, "no data rows"));
    };
    let a = DMatrix::from_row_slice(targets.len(), width - 1, &values);
    let mut y = DVector::from_vec(targets);
    remap_binary_labels(&mut y);
    Ok(Dataset { a: a.into(), y })
}

pub fn parse_csv(path: &Path, has_header: bool) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_csv_reader(file, has_header)
}

/// Reads CSV for `.csv` files and LIBSVM otherwise.
pub fn load(path: &Path, csv_has_header: bool) -> Result<Dataset> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_csv(path, csv_has_header)
    } else {
        parse_libsvm(path)
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.gen_range(lo..hi))
}

/// `Q` factor of a uniform random `m x n` matrix (`m >= n`).
fn orthonormal_columns(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    uniform_matrix(rng, m, n, -1.0, 1.0).qr().q()
}

/// Nonnegative `A` with entries uniform on `[0, 1)` and `b` uniform on
/// `(0, 1]`.
pub fn generate_kl_instance(m: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = uniform_matrix(&mut rng, m, n, 0.0, 1.0);
    let b = DVector::from_fn(m, |_, _| 1.0 - rng.gen::<f64>());
    Dataset { a: a.into(), y: b }
}

/// Binary classification data whose feature matrix has singular values
/// log-spaced from `sqrt(M)` down to `sqrt(M) / condition`. Labels are the
/// signs of a random linear score with 10% of them flipped.
pub fn generate_logreg_instance(m: usize, n: usize, condition: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = m.min(n);
    let u = orthonormal_columns(&mut rng, m, k);
    let v = orthonormal_columns(&mut rng, n, k);
    let scale = (m as f64).sqrt();
    let sigma = DVector::from_fn(k, |i, _| {
        let t = if k > 1 {
            i as f64 / (k - 1) as f64
        } else {
            0.0
        };
        scale * condition.powf(-t)
    });
    let a = &u * DMatrix::from_diagonal(&sigma) * v.transpose();
    let w = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let score = &a * &w;
    let y = DVector::from_fn(m, |i, _| {
        let s = if score[i] >= 0.0 { 1.0 } else { -1.0 };
        if rng.gen_bool(0.1) {
            -s
        } else {
            s
        }
    });
    Dataset { a: a.into(), y }
}

/// `A` uniform on `[-1, 1)`, `b = A x_true + 0.01 e` with a sparse
/// nonnegative `x_true` and uniform noise `e`.
pub fn generate_nnls_instance(m: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = uniform_matrix(&mut rng, m, n, -1.0, 1.0);
    let x_true = DVector::from_fn(n, |_, _| {
        if rng.gen_bool(0.3) {
            rng.gen_range(0.0..1.0)
        } else {
            0.0
        }
    });
    let noise = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    let b = &a * x_true + noise * 0.01;
    Dataset { a: a.into(), y: b }
}

/// `A` and `c` uniform on `[-1, 1)`; used as `Q = A^T A / M`, linear term
/// `A^T c / M`.
pub fn generate_quadratic_instance(m: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = uniform_matrix(&mut rng, m, n, -1.0, 1.0);
    let c = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    Dataset { a: a.into(), y: c }
}
