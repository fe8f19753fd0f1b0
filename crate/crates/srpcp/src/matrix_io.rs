//! Dense matrix files.
//!
//! `RawF64`: magic `SRPM`, `u32` rows, `u32` cols (little-endian), then
//! `rows * cols` little-endian `f64` in row-major order. Lossless.
//!
//! CSV: a `rows,cols` header line, then one comma-separated line per row.
//! Values are written in Rust's shortest round-trip exponent form, so CSV
//! is lossless too.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use srpcp_core::DenseMatrix;

use crate::error::{IoError, IoResult};

pub const RAW_MAGIC: &[u8; 4] = b"SRPM";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    RawF64,
}

impl MatrixFormat {
    /// `.csv` is CSV, anything else RawF64.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::RawF64,
        }
    }
}

pub fn save_matrix(path: &Path, m: &DenseMatrix, format: MatrixFormat) -> IoResult<()> {
    let file = File::create(path).map_err(|e| IoError::at(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        MatrixFormat::RawF64 => write_raw(&mut w, m),
        MatrixFormat::Csv => write_csv(&mut w, m),
    }
    .and_then(|_| w.flush())
    .map_err(|e| IoError::at(path, e))
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> IoResult<DenseMatrix> {
    let file = File::open(path).map_err(|e| IoError::at(path, e))?;
    let r = BufReader::new(file);
    match format {
        MatrixFormat::RawF64 => read_raw(r),
        MatrixFormat::Csv => read_csv(r),
    }
}

pub fn write_raw<W: Write>(w: &mut W, m: &DenseMatrix) -> std::io::Result<()> {
    let (rows, cols) = m.shape();
    let too_big = |_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "dimension exceeds u32");
    w.write_all(RAW_MAGIC)?;
    w.write_all(&u32::try_from(rows).map_err(too_big)?.to_le_bytes())?;
    w.write_all(&u32::try_from(cols).map_err(too_big)?.to_le_bytes())?;
    // Reserved, pads the header to 16 bytes.
    w.write_all(&[0u8; 4])?;
    for x in m.to_row_major() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raw<R: Read>(mut r: R) -> IoResult<DenseMatrix> {
    let mut header = [0u8; 16];
    read_exact_or(&mut r, &mut header, "file shorter than the 16-byte header")?;
    if &header[..4] != RAW_MAGIC {
        return Err(IoError::Format("missing SRPM magic".into()));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| IoError::Format("dimensions overflow".into()))?;
    let mut bytes = vec![0u8; count * 8];
    read_exact_or(&mut r, &mut bytes, "payload shorter than rows * cols values")?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(IoError::Format("trailing bytes after payload".into()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DenseMatrix::from_row_major(rows, cols, &values)?)
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], msg: &str) -> IoResult<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => IoError::Format(msg.into()),
        _ => IoError::Io(e),
    })
}

pub fn write_csv<W: Write>(w: &mut W, m: &DenseMatrix) -> std::io::Result<()> {
    let (rows, cols) = m.shape();
    writeln!(w, "{rows},{cols}")?;
    let flat = m.to_row_major();
    let mut line = String::new();
    for row in flat.chunks_exact(cols) {
        line.clear();
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{x:e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Parse errors carry the 1-based file line and column of the bad cell.
pub fn read_csv<R: Read>(r: R) -> IoResult<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(IoError::Format("empty file".into())),
        Some(rec) => rec?,
    };
    if header.len() != 2 {
        return Err(IoError::Format("header must be `rows,cols`".into()));
    }
    let dim = |i: usize| -> IoResult<usize> {
        header[i].parse().map_err(|_| IoError::Parse {
            line: 1,
            column: i + 1,
            message: format!("bad dimension {:?}", &header[i]),
        })
    };
    let (rows, cols) = (dim(0)?, dim(1)?);
    let mut values = Vec::with_capacity(rows.saturating_mul(cols));
    let mut seen = 0;
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(seen + 2, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        seen += 1;
        if seen > rows {
            return Err(IoError::Format(format!("more than {rows} data rows (line {line})")));
        }
        if rec.len() != cols {
            return Err(IoError::Format(format!(
                "line {line} has {} values, header declares {cols}",
                rec.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            let x: f64 = cell.parse().map_err(|_| IoError::Parse {
                line,
                column: j + 1,
                message: format!("not a number: {cell:?}"),
            })?;
            values.push(x);
        }
    }
    if seen != rows {
        return Err(IoError::Format(format!("expected {rows} data rows, found {seen}")));
    }
    Ok(DenseMatrix::from_row_major(rows, cols, &values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_mismatch() {
        let err = read_csv("2,2\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IoError::Format(_)), "{err}");
        let err = read_csv("1,3\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IoError::Format(_)), "{err}");
    }

    #[test]
    fn csv_bad_cell_location() {
        let err = read_csv("2,2\n1,2\n3,x\n".as_bytes()).unwrap_err();
        match err {
            IoError::Parse { line, column, .. } => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn raw_rejects_truncation() {
        let m = DenseMatrix::identity(3);
        let mut buf = Vec::new();
        write_raw(&mut buf, &m).unwrap();
        assert_eq!(read_raw(&buf[..]).unwrap(), m);
        assert!(matches!(read_raw(&buf[..buf.len() - 1]), Err(IoError::Format(_))));
        assert!(matches!(read_raw(&buf[..10]), Err(IoError::Format(_))));
        buf[0] = b'X';
        assert!(matches!(read_raw(&buf[..]), Err(IoError::Format(_))));
    }
}
