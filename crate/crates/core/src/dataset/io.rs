//! Feature and label files.
//!
//! PNF1 layout (all little-endian):
//!
//! ```text
//! offset 0   b"PNF1"
//! offset 4   u32 rows
//! offset 8   u32 cols
//! offset 12  rows * cols f32 values, row-major
//! ```

use std::fs;
use std::path::Path;

use super::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};

pub const PNF1_MAGIC: &[u8; 4] = b"PNF1";
const HEADER_LEN: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureFormat {
    Pnf1,
    Csv,
}

impl FeatureFormat {
    /// `.csv` files are CSV, everything else is PNF1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureFormat::Csv,
            _ => FeatureFormat::Pnf1,
        }
    }
}

fn binary_error(path: &Path, what: &'static str, offset: usize, message: String) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        what,
        offset: offset as u64,
        binary: true,
        message,
    }
}

fn text_error(path: &Path, what: &'static str, line: usize, message: String) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        what,
        offset: line as u64,
        binary: false,
        message,
    }
}

pub fn load_features(path: impl AsRef<Path>, format: FeatureFormat) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    match format {
        FeatureFormat::Pnf1 => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_pnf1(&bytes, path)
        }
        FeatureFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv_features(&text, path)
        }
    }
}

pub fn save_features(path: impl AsRef<Path>, x: &FeatureMatrix, format: FeatureFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        FeatureFormat::Pnf1 => encode_pnf1(x)?,
        FeatureFormat::Csv => {
            let mut out = String::new();
            for i in 0..x.rows() {
                let row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out.into_bytes()
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Encodes at single precision; values are rounded to the nearest `f32`.
pub fn encode_pnf1(x: &FeatureMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(x.rows())
        .map_err(|_| Error::InvalidParameter(format!("{} rows exceed the PNF1 limit", x.rows())))?;
    let cols = u32::try_from(x.cols())
        .map_err(|_| Error::InvalidParameter(format!("{} cols exceed the PNF1 limit", x.cols())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * x.values().len());
    out.extend_from_slice(PNF1_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for &v in x.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Decodes a PNF1 buffer. `source` only labels errors.
pub fn decode_pnf1(bytes: &[u8], source: &Path) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(binary_error(
            source,
            "truncated header",
            bytes.len(),
            format!("need {HEADER_LEN} header bytes, file has {}", bytes.len()),
        ));
    }
    if &bytes[..4] != PNF1_MAGIC {
        return Err(binary_error(
            source,
            "magic mismatch",
            0,
            format!("expected \"PNF1\", found {:02x?}", &bytes[..4]),
        ));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows == 0 {
        return Err(binary_error(source, "malformed header", 4, "zero rows".into()));
    }
    if cols == 0 {
        return Err(binary_error(source, "malformed header", 8, "zero columns".into()));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| binary_error(source, "malformed header", 4, format!("{rows}x{cols} overflows")))?;
    if bytes.len() != expected {
        return Err(binary_error(
            source,
            "dimension mismatch",
            bytes.len().min(expected),
            format!(
                "header declares {rows}x{cols} ({expected} bytes), file has {} bytes",
                bytes.len()
            ),
        ));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(binary_error(
                source,
                "non-finite value",
                HEADER_LEN + 4 * k,
                format!("row {}, col {}", k / cols, k % cols),
            ));
        }
        values.push(v as f64);
    }
    FeatureMatrix::new(rows, cols, values)
}

fn parse_csv_features(text: &str, path: &Path) -> Result<FeatureMatrix> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for token in line.split(',') {
            let v: f64 = token.trim().parse().map_err(|_| {
                text_error(path, "unparseable value", lineno, format!("{:?}", token.trim()))
            })?;
            if !v.is_finite() {
                return Err(text_error(
                    path,
                    "non-finite value",
                    lineno,
                    format!("row {rows}, col {count}"),
                ));
            }
            values.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(text_error(
                    path,
                    "dimension mismatch",
                    lineno,
                    format!("expected {c} columns, found {count}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let Some(cols) = cols else {
        return Err(Error::Empty("CSV feature file has no rows"));
    };
    FeatureMatrix::new(rows, cols, values)
}

/// Loads a label CSV. When `num_classes` is `None` it is inferred as
/// `1 + max label`.
pub fn load_labels(path: impl AsRef<Path>, num_classes: Option<usize>) -> Result<LabelVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, path, num_classes)
}

/// Parses one integer label per line. A first line starting with a letter is
/// treated as a header.
pub fn parse_labels(text: &str, source: &Path, num_classes: Option<usize>) -> Result<LabelVector> {
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        if idx == 0 && token.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            continue;
        }
        let value: i64 = token
            .parse()
            .map_err(|_| text_error(source, "non-integer label", idx + 1, format!("{token:?}")))?;
        if value < 0 {
            return Err(text_error(source, "negative label", idx + 1, value.to_string()));
        }
        if let Some(c) = num_classes {
            if value as u64 >= c as u64 {
                return Err(Error::LabelOutOfRange {
                    index: labels.len(),
                    label: value,
                    num_classes: c,
                });
            }
        }
        labels.push(value as usize);
    }
    if labels.is_empty() {
        return Err(Error::Empty("label file has no labels"));
    }
    match num_classes {
        Some(c) => LabelVector::new(labels, c),
        None => LabelVector::inferred(labels),
    }
}

pub fn save_labels(path: impl AsRef<Path>, y: &LabelVector) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(y.len() * 3);
    for l in y.labels() {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mem() -> &'static Path {
        Path::new("<memory>")
    }

    #[test]
    fn decodes_two_by_three() {
        let x = FeatureMatrix::new(2, 3, (1..=6).map(f64::from).collect()).unwrap();
        let bytes = encode_pnf1(&x).unwrap();
        assert_eq!(&bytes[..4], b"PNF1");
        assert_eq!(bytes.len(), 12 + 24);
        let back = decode_pnf1(&bytes, mem()).unwrap();
        assert_eq!(back.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(back.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn parses_csv() {
        let x = parse_csv_features("1.0,2.0\n3.0,4.0", mem()).unwrap();
        assert_eq!((x.rows(), x.cols()), (2, 2));
        assert_eq!(x.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn nan_in_pnf1_names_position() {
        let mut v = vec![0.0; 10 * 3];
        v[7 * 3 + 2] = 1.0;
        let mut bytes = encode_pnf1(&FeatureMatrix::new(10, 3, v).unwrap()).unwrap();
        let off = 12 + 4 * (7 * 3 + 2);
        bytes[off..off + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = decode_pnf1(&bytes, mem()).unwrap_err().to_string();
        assert!(err.contains("row 7, col 2"), "{err}");
        assert!(err.contains(&format!("byte {off}")), "{err}");
    }

    #[test]
    fn nan_in_csv_names_position() {
        let err = parse_csv_features("1,2\n3,NaN\n", mem()).unwrap_err().to_string();
        assert!(err.contains("row 1, col 1"), "{err}");
    }

    #[test]
    fn bad_magic_and_truncation() {
        let x = FeatureMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let mut bytes = encode_pnf1(&x).unwrap();
        bytes[0] = b'X';
        assert!(decode_pnf1(&bytes, mem()).unwrap_err().to_string().contains("magic mismatch"));
        let bytes = encode_pnf1(&x).unwrap();
        let err = decode_pnf1(&bytes[..15], mem()).unwrap_err().to_string();
        assert!(err.contains("dimension mismatch at byte 15"), "{err}");
        assert!(decode_pnf1(&bytes[..5], mem()).is_err());
    }

    #[test]
    fn ragged_csv_is_rejected() {
        assert!(parse_csv_features("1,2\n3\n", mem()).is_err());
    }

    #[test]
    fn labels_inferred() {
        let y = parse_labels("0\n2\n1", mem(), None).unwrap();
        assert_eq!(y.labels(), &[0, 2, 1]);
        assert_eq!(y.num_classes(), 3);
    }

    #[test]
    fn labels_with_header() {
        let y = parse_labels("label\n1\n0\n", mem(), None).unwrap();
        assert_eq!(y.labels(), &[1, 0]);
    }

    #[test]
    fn label_errors() {
        assert!(matches!(parse_labels("", mem(), None), Err(Error::Empty(_))));
        assert!(matches!(
            parse_labels("0\n51", mem(), Some(51)),
            Err(Error::LabelOutOfRange { label: 51, .. })
        ));
        assert!(parse_labels("0\n-1", mem(), None).unwrap_err().to_string().contains("negative"));
        assert!(parse_labels("0\n1.5", mem(), None).unwrap_err().to_string().contains("non-integer"));
    }
}
