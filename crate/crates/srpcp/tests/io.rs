use proptest::prelude::*;
use srpcp::matrix_io::{load_matrix, read_csv, read_raw, save_matrix, write_csv, write_raw, MatrixFormat};
use srpcp::IoError;
use srpcp_core::DenseMatrix;

fn splitmix_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut s = seed;
    DenseMatrix::from_fn(rows, cols, |_, _| {
        s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 * 200.0 - 100.0
    })
    .unwrap()
}

fn bits(m: &DenseMatrix) -> Vec<u64> {
    m.as_col_major().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn raw_round_trip_is_bitwise() {
    let m = splitmix_matrix(100, 80, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.srpm");
    save_matrix(&path, &m, MatrixFormat::RawF64).unwrap();
    let back = load_matrix(&path, MatrixFormat::RawF64).unwrap();
    assert_eq!(back.shape(), (100, 80));
    assert_eq!(bits(&back), bits(&m));
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 8 * 100 * 80);
}

#[test]
fn raw_layout_is_row_major_little_endian() {
    let m = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
    let mut buf = Vec::new();
    write_raw(&mut buf, &m).unwrap();
    assert_eq!(&buf[..4], b"SRPM");
    assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 2);
    assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
    let second = f64::from_le_bytes(buf[24..32].try_into().unwrap());
    assert_eq!(second, 2.0);
}

#[test]
fn raw_rejects_damaged_files() {
    let m = splitmix_matrix(3, 4, 2);
    let mut buf = Vec::new();
    write_raw(&mut buf, &m).unwrap();
    assert!(read_raw(&buf[..buf.len() - 1]).is_err());
    let mut extra = buf.clone();
    extra.push(0);
    assert!(read_raw(&extra[..]).is_err());
    let mut magic = buf.clone();
    magic[0] = b'X';
    assert!(read_raw(&magic[..]).is_err());
}

#[test]
fn csv_bad_cell_names_its_location() {
    let text = "2,3\n1,2,3\n4,oops,6\n";
    match read_csv(text.as_bytes()) {
        Err(IoError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_empty_and_mismatched_files_are_format_errors() {
    assert!(matches!(read_csv(&b""[..]), Err(IoError::Format(_))));
    assert!(matches!(read_csv(&b"2,2\n1,2\n"[..]), Err(IoError::Format(_))));
    assert!(matches!(read_csv(&b"1,2\n1,2,3\n"[..]), Err(IoError::Format(_))));
}

#[test]
fn format_follows_extension() {
    assert_eq!(MatrixFormat::from_path("a/b.csv".as_ref()), MatrixFormat::Csv);
    assert_eq!(MatrixFormat::from_path("a/b.srpm".as_ref()), MatrixFormat::RawF64);
}

#[test]
fn missing_file_reports_path() {
    let err = load_matrix("/nonexistent/x.srpm".as_ref(), MatrixFormat::RawF64).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/x.srpm"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_bitwise(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>(), tiny in any::<bool>()) {
        let m = splitmix_matrix(rows, cols, seed);
        let m = if tiny { m.scale(1e-300) } else { m };
        let mut buf = Vec::new();
        write_csv(&mut buf, &m).unwrap();
        let back = read_csv(&buf[..]).unwrap();
        prop_assert_eq!(bits(&back), bits(&m));
    }
}
