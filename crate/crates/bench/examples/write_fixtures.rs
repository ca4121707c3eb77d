//! Regenerates the small bundled datasets under `fixtures/`.

use std::fmt::Write as _;
use std::path::Path;

use aaprox_bench::data::{generate_logreg_instance, generate_nnls_instance, write_libsvm, Dataset};

fn rounded(mut d: Dataset) -> Dataset {
    let round = |v: f64| (v * 1e6).round() / 1e6;
    let dense = d.a.to_dense().map(round);
    d.a = dense.into();
    d.y = d.y.map(round);
    d
}

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir)?;

    let logreg = rounded(generate_logreg_instance(100, 20, 1e3, 7));
    std::fs::write(dir.join("logreg_100x20.libsvm"), write_libsvm(&logreg))?;

    let nnls = rounded(generate_nnls_instance(60, 15, 7));
    let a = nnls.a.to_dense();
    let mut csv = String::from("target");
    for j in 0..a.ncols() {
        let _ = write!(csv, ",f{}", j + 1);
    }
    csv.push('\n');
    for i in 0..a.nrows() {
        let _ = write!(csv, "{}", nnls.y[i]);
        for j in 0..a.ncols() {
            let _ = write!(csv, ",{}", a[(i, j)]);
        }
        csv.push('\n');
    }
    std::fs::write(dir.join("nnls_60x15.csv"), csv)?;
    Ok(())
}
