//! Matrix file formats.
//!
//! Binary layout: the ASCII magic `BPM1`, then little-endian `u32` rows,
//! `u32` cols and `u32` flags (bit 0 set for complex data), followed by
//! row-major little-endian `f64` values, interleaved `re, im` when complex.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, TransitionMatrix};

pub const MAGIC: &[u8; 4] = b"BPM1";
pub const HEADER_LEN: usize = 16;
const FLAG_COMPLEX: u32 = 1;

/// Largest dimension accepted by the CSV writer.
pub const CSV_MAX_DIM: usize = 256;

/// A decoded matrix file.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFile {
    Real(TransitionMatrix),
    Complex(ComplexGrid),
}

fn header(rows: usize, cols: usize, flags: u32) -> Result<Vec<u8>> {
    let dim = |d: usize| u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} too large")));
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&dim(rows)?.to_le_bytes());
    out.extend_from_slice(&dim(cols)?.to_le_bytes());
    out.extend_from_slice(&flags.to_le_bytes());
    Ok(out)
}

pub fn encode_matrix(s: &TransitionMatrix) -> Result<Vec<u8>> {
    let mut out = header(s.n(), s.n(), 0)?;
    out.reserve(8 * s.data().len());
    for x in s.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn encode_grid(g: &ComplexGrid) -> Result<Vec<u8>> {
    let mut out = header(g.rows(), g.cols(), FLAG_COMPLEX)?;
    out.reserve(16 * g.data().len());
    for z in g.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<MatrixFile> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing BPM1 header".into()));
    }
    let rows = u32_at(bytes, 4) as usize;
    let cols = u32_at(bytes, 8) as usize;
    let flags = u32_at(bytes, 12);
    if flags & !FLAG_COMPLEX != 0 {
        return Err(Error::Format(format!("unknown flags {flags:#x}")));
    }
    let complex = flags & FLAG_COMPLEX != 0;
    let width = if complex { 2 } else { 1 };
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8 * width))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} payload bytes for {rows}x{cols}, found {}",
            body.len()
        )));
    }
    let vals: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if complex {
        let data = vals.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        Ok(MatrixFile::Complex(ComplexGrid::from_vec(rows, cols, data)?))
    } else {
        if rows != cols {
            return Err(Error::NonSquareGrid { rows, cols });
        }
        Ok(MatrixFile::Real(TransitionMatrix::from_vec(rows, vals)?))
    }
}

pub fn write_matrix(path: &Path, s: &TransitionMatrix) -> Result<()> {
    Ok(fs::write(path, encode_matrix(s)?)?)
}

pub fn write_grid(path: &Path, g: &ComplexGrid) -> Result<()> {
    Ok(fs::write(path, encode_grid(g)?)?)
}

/// Reads a real matrix file.
pub fn read_matrix(path: &Path) -> Result<TransitionMatrix> {
    match decode(&fs::read(path)?)? {
        MatrixFile::Real(s) => Ok(s),
        MatrixFile::Complex(_) => Err(Error::Format("expected a real matrix, found complex".into())),
    }
}

pub fn read_grid(path: &Path) -> Result<ComplexGrid> {
    match decode(&fs::read(path)?)? {
        MatrixFile::Complex(g) => Ok(g),
        MatrixFile::Real(_) => Err(Error::Format("expected a complex grid, found real".into())),
    }
}

/// One CSV row per matrix row, shortest round-trip decimal form.
pub fn write_matrix_csv<W: Write>(mut w: W, s: &TransitionMatrix) -> Result<()> {
    let n = s.n();
    if n > CSV_MAX_DIM {
        return Err(Error::InvalidConfig(format!(
            "CSV export is limited to {CSV_MAX_DIM}x{CSV_MAX_DIM}, matrix is {n}x{n}"
        )));
    }
    for row in s.data().chunks(n.max(1)) {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv(text: &str) -> Result<TransitionMatrix> {
    let mut data = Vec::new();
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        rows += 1;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad CSV number {field:?}")))?;
            data.push(v);
        }
    }
    if data.len() != rows * rows {
        return Err(Error::Format(format!("CSV is not square: {rows} rows, {} values", data.len())));
    }
    TransitionMatrix::from_vec(rows, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_round_trip_and_layout() {
        let s = TransitionMatrix::from_vec(2, vec![0.5, -0.0, 1e-300, 0.25]).unwrap();
        let bytes = encode_matrix(&s).unwrap();
        assert_eq!(&bytes[..4], b"BPM1");
        assert_eq!(&bytes[4..16], &[2, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[16..24], &0.5f64.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 32);
        assert_eq!(decode(&bytes).unwrap(), MatrixFile::Real(s));
    }

    #[test]
    fn complex_round_trip() {
        let g = ComplexGrid::from_fn(2, 3, |r, c| Complex64::new(r as f64, -(c as f64)));
        let bytes = encode_grid(&g).unwrap();
        assert_eq!(u32_at(&bytes, 12), 1);
        assert_eq!(&bytes[16 + 24..16 + 32], &(-1.0f64).to_le_bytes());
        assert_eq!(decode(&bytes).unwrap(), MatrixFile::Complex(g));
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(decode(b"BPM0\0\0\0\0").is_err());
        let mut bytes = encode_matrix(&TransitionMatrix::zeros(2)).unwrap();
        bytes.pop();
        assert!(decode(&bytes).is_err());
        let mut bytes = encode_matrix(&TransitionMatrix::zeros(2)).unwrap();
        bytes[12] = 4;
        assert!(decode(&bytes).is_err());
    }

    #[test]
    fn csv_round_trip_and_limit() {
        let s = TransitionMatrix::from_vec(2, vec![0.1, 0.2, 1.0 / 3.0, -1e-9]).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "0.1,0.2\n0.3333333333333333,-0.000000001\n");
        assert_eq!(read_matrix_csv(&text).unwrap(), s);
        assert!(write_matrix_csv(Vec::new(), &TransitionMatrix::zeros(512)).is_err());
    }
}
