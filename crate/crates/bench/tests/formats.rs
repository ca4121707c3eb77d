use aaprox::{CsrMatrix, DataMatrix};
use aaprox_bench::data::{load, parse_csv_reader, parse_libsvm_str, write_libsvm, Dataset};
use nalgebra::DVector;
use proptest::prelude::*;

fn sparse_dataset() -> impl Strategy<Value = Dataset> {
    (1usize..8, 1usize..6).prop_flat_map(|(rows, cols)| {
        let entry = prop_oneof![Just(0.0), -1e6f64..1e6, -1e-6f64..1e-6];
        (
            prop::collection::vec(prop::collection::vec(entry, cols), rows),
            prop::collection::vec(-5.0f64..5.0, rows),
        )
            .prop_map(move |(values, labels)| {
                let mut rows: Vec<Vec<(usize, f64)>> = values
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(_, v)| **v != 0.0)
                            .map(|(j, v)| (j, *v))
                            .collect()
                    })
                    .collect();
                if !rows.iter().flatten().any(|(j, _)| *j == cols - 1) {
                    rows[0].retain(|(j, _)| *j != cols - 1);
                    rows[0].push((cols - 1, 1.5));
                }
                Dataset {
                    a: DataMatrix::Sparse(CsrMatrix::from_rows(cols, &rows).unwrap()),
                    y: DVector::from_vec(labels),
                }
            })
    })
}

proptest! {
    #[test]
    fn libsvm_round_trips(d in sparse_dataset()) {
        let text = write_libsvm(&d);
        let back = parse_libsvm_str(&text).unwrap();
        prop_assert_eq!(back.a.to_dense(), d.a.to_dense());
        prop_assert_eq!(back.y, d.y);
    }
}

#[test]
fn csv_and_libsvm_fixtures_agree_with_their_shapes() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let logreg = load(&dir.join("logreg_100x20.libsvm"), false).unwrap();
    assert_eq!((logreg.nrows(), logreg.ncols()), (100, 20));
    assert!(logreg.y.iter().all(|&v| v == 1.0 || v == -1.0));
    let nnls = load(&dir.join("nnls_60x15.csv"), true).unwrap();
    assert_eq!((nnls.nrows(), nnls.ncols()), (60, 15));
}

#[test]
fn csv_target_is_the_first_column() {
    let d = parse_csv_reader("y,a,b\n3,1,2\n-1,4,5\n".as_bytes(), true).unwrap();
    assert_eq!(d.y.as_slice(), &[3.0, -1.0]);
    assert_eq!(d.a.to_dense()[(1, 0)], 4.0);
}

#[test]
fn csv_errors_name_the_line() {
    let err = parse_csv_reader("1,2\n3,x\n".as_bytes(), false).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    assert!(parse_csv_reader("1,2\n3,4,5\n".as_bytes(), false).is_err());
}
