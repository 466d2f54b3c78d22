//! On-disk formats.
//!
//! * **EMB1**: the 4 magic bytes `EMB1`, then little-endian `u32` row count
//!   and `u32` column count, then `rows × cols` little-endian `f32` values in
//!   row-major order. Nothing follows the payload.
//! * **CSV**: one row per line, comma-separated decimal floats, no header.
//!   Blank lines are ignored.
//! * **Labels**: one base-10 non-negative integer per line.
//! * **Split**: one `train` or `test` per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::{EmbeddingMatrix, Split};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Emb1,
    Csv,
}

impl Format {
    /// Guesses from the file extension: `.csv` is CSV, everything else EMB1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Emb1,
        }
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn load_embeddings<T: Scalar>(path: &Path, format: Format) -> Result<EmbeddingMatrix<T>> {
    match format {
        Format::Emb1 => read_emb1(path),
        Format::Csv => read_csv(path),
    }
}

/// Decodes an EMB1 byte buffer.
pub fn decode_emb1<T: Scalar>(name: &str, bytes: &[u8]) -> Result<EmbeddingMatrix<T>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader {
            offset: bytes.len() as u64,
            reason: format!("file has {} bytes, header needs {HEADER_LEN}", bytes.len()),
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::MalformedHeader {
            offset: 0,
            reason: format!("bad magic {:?}", &bytes[0..4]),
        });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows == 0 {
        return Err(Error::MalformedHeader {
            offset: 4,
            reason: "row count is zero".into(),
        });
    }
    if cols == 0 {
        return Err(Error::MalformedHeader {
            offset: 8,
            reason: "column count is zero".into(),
        });
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = rows * cols;
    if payload.len() != expected * 4 {
        return Err(Error::DimensionMismatch {
            location: format!(
                "payload at byte {HEADER_LEN} ({} bytes, header declares {rows}x{cols})",
                payload.len()
            ),
            expected,
            found: payload.len() / 4,
        });
    }
    let mut data = Vec::with_capacity(expected);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                row: i / cols,
                col: i % cols,
            });
        }
        data.push(T::lit(v as f64));
    }
    let data = Array2::from_shape_vec((rows, cols), data).expect("length checked");
    EmbeddingMatrix::new(name, data)
}

pub fn encode_emb1<T: Scalar>(m: &EmbeddingMatrix<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.n_samples() * m.dim());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.n_samples() as u32).to_le_bytes());
    out.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    for &v in m.data().iter() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out
}

pub fn read_emb1<T: Scalar>(path: &Path) -> Result<EmbeddingMatrix<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_emb1(&file_stem(path), &bytes)
}

pub fn write_emb1<T: Scalar>(path: &Path, m: &EmbeddingMatrix<T>) -> Result<()> {
    fs::write(path, encode_emb1(m)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv<T: Scalar>(name: &str, text: &str) -> Result<EmbeddingMatrix<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut width = None;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row_index = rows.len();
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                location: format!("line {}, field {}", line_no + 1, col + 1),
                reason: format!("{e}: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: row_index,
                    col,
                });
            }
            row.push(T::lit(v));
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::DimensionMismatch {
                    location: format!("line {} (row {row_index})", line_no + 1),
                    expected: w,
                    found: row.len(),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    EmbeddingMatrix::from_rows(name, &rows)
}

pub fn read_csv<T: Scalar>(path: &Path) -> Result<EmbeddingMatrix<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&file_stem(path), &text)
}

pub fn write_csv<T: Scalar>(path: &Path, m: &EmbeddingMatrix<T>) -> Result<()> {
    let mut out = String::new();
    for row in m.data().rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|e| Error::Parse {
                location: format!("line {}", i + 1),
                reason: format!("{e}: {l:?}"),
            })
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = String::with_capacity(labels.len() * 3);
    for l in labels {
        buf.push_str(&l.to_string());
        buf.push('\n');
    }
    f.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_split(path: &Path) -> Result<Vec<Split>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Parse {
                location: format!("line {}", i + 1),
                reason: format!("expected 'train' or 'test', found {other:?}"),
            }),
        })
        .collect()
}

pub fn write_split(path: &Path, split: &[Split]) -> Result<()> {
    let text: String = split
        .iter()
        .map(|s| match s {
            Split::Train => "train\n",
            Split::Test => "test\n",
        })
        .collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn header(rows: u32, cols: u32) -> Vec<u8> {
        let mut b = MAGIC.to_vec();
        b.extend_from_slice(&rows.to_le_bytes());
        b.extend_from_slice(&cols.to_le_bytes());
        b
    }

    #[test]
    fn decodes_small_emb1() {
        let mut bytes = header(2, 3);
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.5] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let m: EmbeddingMatrix<f64> = decode_emb1("t", &bytes).unwrap();
        assert_eq!(m.data(), array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]].view());
    }

    #[test]
    fn short_payload_is_dimension_mismatch() {
        let mut bytes = header(2, 3);
        for v in [1.0f32; 5] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let err = decode_emb1::<f64>("t", &bytes).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 6,
                found: 5,
                ..
            }
        ));
        assert!(err.to_string().contains("byte 12"));
    }

    #[test]
    fn bad_magic_and_truncated_header() {
        let mut bytes = header(1, 1);
        bytes[0] = b'X';
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        assert!(matches!(
            decode_emb1::<f64>("t", &bytes),
            Err(Error::MalformedHeader { offset: 0, .. })
        ));
        assert!(matches!(
            decode_emb1::<f64>("t", b"EMB1\x01"),
            Err(Error::MalformedHeader { offset: 5, .. })
        ));
    }

    #[test]
    fn nan_payload_names_its_cell() {
        let mut bytes = header(2, 2);
        for v in [1.0f32, 2.0, f32::NAN, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(
            decode_emb1::<f64>("t", &bytes),
            Err(Error::NonFiniteValue { row: 1, col: 0 })
        ));
    }

    #[test]
    fn csv_examples() {
        let m: EmbeddingMatrix<f64> = parse_csv("c", "1.0,2.0\n3.0,4.0").unwrap();
        assert_eq!(m.data(), array![[1.0, 2.0], [3.0, 4.0]].view());
        assert!(matches!(
            parse_csv::<f64>("c", "1,2\n3"),
            Err(Error::DimensionMismatch { expected: 2, found: 1, .. })
        ));
        assert!(matches!(
            parse_csv::<f64>("c", "1,inf"),
            Err(Error::NonFiniteValue { row: 0, col: 1 })
        ));
        assert!(parse_csv::<f64>("c", "1,abc").is_err());
    }

    #[test]
    fn labels_parse_and_reject_garbage() {
        assert_eq!(parse_labels("0\n2\n\n1\n").unwrap(), vec![0, 2, 1]);
        assert!(parse_labels("0\n-1\n").is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = EmbeddingMatrix::new("v", array![[0.5f64, -1.25], [3.0, 1e-3]]).unwrap();
        let p = dir.path().join("v.emb");
        write_emb1(&p, &m).unwrap();
        let back: EmbeddingMatrix<f64> = read_emb1(&p).unwrap();
        assert_eq!(back.data(), m.data().mapv(|v| v as f32 as f64).view());
        let lp = dir.path().join("l.labels");
        write_labels(&lp, &[3, 0, 1]).unwrap();
        assert_eq!(read_labels(&lp).unwrap(), vec![3, 0, 1]);
        let sp = dir.path().join("s.split");
        write_split(&sp, &[Split::Train, Split::Test]).unwrap();
        assert_eq!(read_split(&sp).unwrap(), vec![Split::Train, Split::Test]);
    }

    proptest! {
        #[test]
        fn emb1_round_trip_is_bit_exact(
            (rows, cols, vals) in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
                (Just(r), Just(c), prop::collection::vec(-1e30f32..1e30f32, r * c))
            })
        ) {
            let data = Array2::from_shape_vec((rows, cols), vals.clone()).unwrap();
            let m = EmbeddingMatrix::new("p", data).unwrap();
            let bytes = encode_emb1(&m);
            let back: EmbeddingMatrix<f32> = decode_emb1("p", &bytes).unwrap();
            prop_assert_eq!(back.n_samples(), rows);
            prop_assert_eq!(back.dim(), cols);
            for (a, b) in back.data().iter().zip(&vals) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(encode_emb1(&back), bytes);
        }
    }
}
