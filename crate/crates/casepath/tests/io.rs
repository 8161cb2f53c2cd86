use std::path::Path;

use casepath::io::{read_csv, read_csv_from, write_csv, write_csv_to};
use casepath::sim::{simulate, SimSpec};
use casepath::Error;
use casepath_core::Dataset;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn same(a: &Dataset, b: &Dataset) -> bool {
    a.x() == b.x() && a.y() == b.y()
}

#[test]
fn three_by_two_fixture() {
    let d = read_csv(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/three_by_two.csv"))).unwrap();
    assert_eq!(d.x(), &DMatrix::from_row_slice(3, 2, &[1.5, -2.0, 0.0, 0.3, -4.75, 10.0]));
    assert_eq!(d.y().as_slice(), &[0.25, 7.0, -1.0]);
}

#[test]
fn response_column_can_sit_anywhere() {
    let d = read_csv_from("y,a,b\n1,2,3\n4,5,6\n".as_bytes(), "mem").unwrap();
    assert_eq!(d.y().as_slice(), &[1.0, 4.0]);
    assert_eq!(d.x(), &DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 5.0, 6.0]));
}

#[test]
fn missing_response_is_named() {
    let err = read_csv_from("a,b\n1,2\n".as_bytes(), "mem").unwrap_err();
    assert!(matches!(&err, Error::MissingColumn { column, .. } if column == "y"));
    assert!(err.to_string().contains("\"y\""));
    assert_eq!(err.category(), "parse");
}

#[test]
fn bad_cells_report_their_location() {
    match read_csv_from("a,b,y\n1,2,3\n4,oops,6\n".as_bytes(), "mem").unwrap_err() {
        Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
        e => panic!("unexpected {e:?}"),
    }
    match read_csv_from("a,y\n1,2\n3\n".as_bytes(), "mem").unwrap_err() {
        Error::Parse { row, .. } => assert_eq!(row, 3),
        e => panic!("unexpected {e:?}"),
    }
    assert!(read_csv_from("a,y\n1,inf\n".as_bytes(), "mem").is_err());
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let d = simulate(SimSpec { n: 40, p: 6, seed: 3 }).unwrap().data;
    write_csv(&d, &path).unwrap();
    assert!(same(&read_csv(&path).unwrap(), &d));
    assert!(matches!(read_csv(&dir.path().join("nope.csv")), Err(Error::Io { .. })));
}

proptest! {
    #[test]
    fn round_trip_is_lossless(
        cells in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 12..80),
        p in 1usize..5,
    ) {
        let n = cells.len() / (p + 1);
        prop_assume!(n >= 2);
        let x = DMatrix::from_row_slice(n, p, &cells[..n * p]);
        let y = nalgebra::DVector::from_column_slice(&cells[n * p..n * p + n]);
        let d = Dataset::new(x, y).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&d, &mut buf).unwrap();
        let back = read_csv_from(buf.as_slice(), "mem").unwrap();
        prop_assert!(same(&back, &d));
    }
}
