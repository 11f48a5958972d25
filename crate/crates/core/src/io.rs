//! On-disk formats.
//!
//! Latent batches use the LVF1 binary layout:
//!
//! ```text
//! offset  size        field
//! 0       4           magic "LVF1"
//! 4       4           n  (u32, little-endian)
//! 8       4           d  (u32, little-endian)
//! 12      4·n·d       f32 little-endian values, row-major
//! ```
//!
//! Reports are CSV with a header line, LF line endings and reals printed
//! with 9 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::batch::LatentBatch;
use crate::error::{Error, Result};

pub const LVF_MAGIC: [u8; 4] = *b"LVF1";
pub const LVF_HEADER_LEN: usize = 12;

/// Writes `bytes` through a sibling temp file and renames it into place.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut BufWriter<&File>) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_batch(path: impl AsRef<Path>, batch: &LatentBatch) -> Result<()> {
    let path = path.as_ref();
    let too_big = |what: &str, v: usize| Error::InvalidArgument(format!("{what} = {v} exceeds u32"));
    let n = u32::try_from(batch.n()).map_err(|_| too_big("n", batch.n()))?;
    let d = u32::try_from(batch.d()).map_err(|_| too_big("d", batch.d()))?;
    let mut buf = Vec::with_capacity(LVF_HEADER_LEN + 4 * batch.as_slice().len());
    buf.extend_from_slice(&LVF_MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&d.to_le_bytes());
    for (i, &v) in batch.as_slice().iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::NonFinite {
                path: path.to_path_buf(),
                offset: (LVF_HEADER_LEN + 4 * i) as u64,
            });
        }
        buf.extend_from_slice(&f.to_le_bytes());
    }
    write_atomic(path, |w| w.write_all(&buf))
}

pub fn read_batch(path: impl AsRef<Path>) -> Result<LatentBatch> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_batch(path, &bytes)
}

fn decode_batch(path: &Path, bytes: &[u8]) -> Result<LatentBatch> {
    if bytes.len() < LVF_HEADER_LEN {
        return Err(Error::Length {
            path: path.to_path_buf(),
            offset: 0,
            expected: LVF_HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if bytes[..4] != LVF_MAGIC {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: 0,
            message: format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4])),
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let (n, d) = (word(4) as usize, word(8) as usize);
    if n == 0 || d == 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: if n == 0 { 4 } else { 8 },
            message: format!("empty shape {n}x{d}"),
        });
    }
    let expected = (n as u64) * (d as u64) * 4;
    let found = (bytes.len() - LVF_HEADER_LEN) as u64;
    if found != expected {
        return Err(Error::Length {
            path: path.to_path_buf(),
            offset: LVF_HEADER_LEN as u64 + found.min(expected),
            expected,
            found,
        });
    }
    let mut data = Vec::with_capacity(n * d);
    for (i, chunk) in bytes[LVF_HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite {
                path: path.to_path_buf(),
                offset: (LVF_HEADER_LEN + 4 * i) as u64,
            });
        }
        data.push(v as f64);
    }
    LatentBatch::new(n, d, data)
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Formats a real with 9 significant digits in the style of C's `%.9g`.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // Scientific rendering fixes the decimal exponent after rounding.
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes a CSV report atomically. Every row must have as many cells as
/// the header.
pub fn write_csv_report(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let path = path.as_ref();
    let buf = render_csv(header, rows)?;
    write_atomic(path, |w| w.write_all(&buf))
}

/// Renders CSV bytes, for callers that print to stdout.
pub fn render_csv(header: &[&str], rows: &[Vec<Cell>]) -> Result<Vec<u8>> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::InvalidArgument(format!(
                "csv row {i} has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| Error::InvalidArgument(format!("csv encoding: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv encoding: {e}")))
}

/// Reads a CSV of reals, returning the header and the rows.
pub fn read_csv_reals(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| csv_err(format!("row {}: not a number: {f:?}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes any serializable report as pretty JSON.
pub fn write_json_report<T: Serialize>(path: impl AsRef<Path>, report: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_vec_pretty(report)
        .map_err(|e| Error::InvalidArgument(format!("json encoding: {e}")))?;
    text.push(b'\n');
    write_atomic(path, |w| w.write_all(&text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn batch_file_size_and_roundtrip() {
        let dir = tmp();
        let path = dir.path().join("b.lvf");
        let b = LatentBatch::from_rows(&[[0.1, -2.0, 3.5], [1.0 / 3.0, 0.0, -1e-3]]).unwrap();
        write_batch(&path, &b).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 36);
        let back = read_batch(&path).unwrap();
        assert_eq!((back.n(), back.d()), (2, 3));
        for (a, b) in b.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(*a as f32, *b as f32);
        }
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"LVF1");
        assert_eq!(&bytes[4..12], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &0.1f32.to_le_bytes());
    }

    #[test]
    fn bad_files() {
        let dir = tmp();
        let b = LatentBatch::from_rows(&[[1.0, 2.0]]).unwrap();
        let path = dir.path().join("b.lvf");
        write_batch(&path, &b).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[3] = b'2';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_batch(&path), Err(Error::Format { offset: 0, .. })));

        std::fs::write(&path, &good[..good.len() - 1]).unwrap();
        assert!(matches!(read_batch(&path), Err(Error::Length { expected: 8, found: 7, .. })));

        std::fs::write(&path, &good[..5]).unwrap();
        assert!(matches!(read_batch(&path), Err(Error::Length { .. })));

        let mut nan = good.clone();
        nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, &nan).unwrap();
        assert!(matches!(read_batch(&path), Err(Error::NonFinite { offset: 16, .. })));

        let mut empty = good[..12].to_vec();
        empty[4..8].copy_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, &empty).unwrap();
        assert!(matches!(read_batch(&path), Err(Error::Format { offset: 4, .. })));

        let missing = dir.path().join("nope.lvf");
        match read_batch(&missing) {
            Err(Error::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oversized_values_rejected_on_write() {
        let dir = tmp();
        let b = LatentBatch::from_rows(&[[1e300]]).unwrap();
        assert!(matches!(
            write_batch(dir.path().join("x.lvf"), &b),
            Err(Error::NonFinite { offset: 12, .. })
        ));
    }

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(1.0 / 3.0), "0.333333333");
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(-2.5), "-2.5");
        assert_eq!(format_real(33.333333333333), "33.3333333");
        assert_eq!(format_real(123456789.0), "123456789");
        assert_eq!(format_real(1234567890.0), "1.23456789e+09");
        assert_eq!(format_real(1e-7), "1e-07");
        assert_eq!(format_real(0.000123456789123), "0.000123456789");
        assert_eq!(format_real(9.9999999999), "10");
    }

    #[test]
    fn csv_reports() {
        let dir = tmp();
        let path = dir.path().join("h.csv");
        let rows: Vec<Vec<Cell>> = (0..3)
            .map(|i| vec![Cell::Real(i as f64), Cell::Real(i as f64 + 1.0), Cell::Int(7)])
            .collect();
        write_csv_report(&path, &["edge_lo", "edge_hi", "count"], &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert!(text.starts_with("edge_lo,edge_hi,count\n0,1,7\n"));

        write_csv_report(&path, &["a", "b"], &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");

        assert!(write_csv_report(&path, &["a", "b"], &[vec![Cell::Int(1)]]).is_err());

        let quoted = render_csv(&["name"], &[vec![Cell::Text("a,b".into())]]).unwrap();
        assert_eq!(String::from_utf8(quoted).unwrap(), "name\n\"a,b\"\n");
    }
}
