//! The HSF1 file format: an ASCII magic line, a one-line JSON header, then
//! little-endian `f64` samples (level-major, complex values interleaved).

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid, GridSpec, HalfSpaceFunction, LineFunction, Scalar};
use crate::error::{Result, TentError};

const MAGIC: &str = "HSF1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Line,
    Halfspace,
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(flatten)]
    spec: GridSpec,
    kind: FileKind,
    complex: bool,
}

/// Any object an HSF1 file can hold.
#[derive(Clone, Debug, PartialEq)]
pub enum Decoded {
    Line(LineFunction),
    ComplexLine(LineFunction<Complex64>),
    HalfSpace(HalfSpaceFunction),
    ComplexHalfSpace(HalfSpaceFunction<Complex64>),
}

impl From<LineFunction> for Decoded {
    fn from(f: LineFunction) -> Self {
        Decoded::Line(f)
    }
}

impl From<LineFunction<Complex64>> for Decoded {
    fn from(f: LineFunction<Complex64>) -> Self {
        Decoded::ComplexLine(f)
    }
}

impl From<HalfSpaceFunction> for Decoded {
    fn from(f: HalfSpaceFunction) -> Self {
        Decoded::HalfSpace(f)
    }
}

impl From<HalfSpaceFunction<Complex64>> for Decoded {
    fn from(f: HalfSpaceFunction<Complex64>) -> Self {
        Decoded::ComplexHalfSpace(f)
    }
}

impl Decoded {
    pub fn grid(&self) -> &Grid {
        match self {
            Decoded::Line(f) => f.grid(),
            Decoded::ComplexLine(f) => f.grid(),
            Decoded::HalfSpace(f) => f.grid(),
            Decoded::ComplexHalfSpace(f) => f.grid(),
        }
    }

    pub fn kind(&self) -> FileKind {
        match self {
            Decoded::Line(_) | Decoded::ComplexLine(_) => FileKind::Line,
            Decoded::HalfSpace(_) | Decoded::ComplexHalfSpace(_) => FileKind::Halfspace,
        }
    }
}

fn write_payload<T: Scalar>(out: &mut Vec<u8>, values: &[T]) {
    for v in values {
        let (re, im) = v.to_parts();
        out.extend_from_slice(&re.to_le_bytes());
        if T::IS_COMPLEX {
            out.extend_from_slice(&im.to_le_bytes());
        }
    }
}

fn read_payload<T: Scalar>(bytes: &[u8]) -> Vec<T> {
    let read = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    if T::IS_COMPLEX {
        bytes.chunks_exact(16).map(|c| T::from_parts(read(&c[..8]), read(&c[8..]))).collect()
    } else {
        bytes.chunks_exact(8).map(|c| T::from_real(read(c))).collect()
    }
}

pub fn encode(obj: &Decoded) -> Vec<u8> {
    let complex = matches!(obj, Decoded::ComplexLine(_) | Decoded::ComplexHalfSpace(_));
    let header = Header { spec: *obj.grid().spec(), kind: obj.kind(), complex };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(serde_json::to_string(&header).expect("header serializes").as_bytes());
    out.push(b'\n');
    match obj {
        Decoded::Line(f) => write_payload(&mut out, f.values()),
        Decoded::ComplexLine(f) => write_payload(&mut out, f.values()),
        Decoded::HalfSpace(f) => write_payload(&mut out, f.values()),
        Decoded::ComplexHalfSpace(f) => write_payload(&mut out, f.values()),
    }
    out
}

fn split_line(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let pos = bytes.iter().position(|&b| b == b'\n')?;
    Some((&bytes[..pos], &bytes[pos + 1..]))
}

pub fn decode(bytes: &[u8]) -> Result<Decoded> {
    let (magic, rest) = split_line(bytes).ok_or_else(|| TentError::BadMagic("missing magic line".into()))?;
    if magic != MAGIC.as_bytes() {
        return Err(TentError::BadMagic(format!(
            "expected `{MAGIC}`, found `{}`",
            String::from_utf8_lossy(&magic[..magic.len().min(16)])
        )));
    }
    let (line, payload) =
        split_line(rest).ok_or_else(|| TentError::CorruptHeader("missing header terminator".into()))?;
    let header: Header =
        serde_json::from_slice(line).map_err(|e| TentError::CorruptHeader(e.to_string()))?;
    let grid = Grid::new(header.spec).map_err(|e| TentError::CorruptHeader(e.to_string()))?;
    let count = match header.kind {
        FileKind::Line => grid.len(),
        FileKind::Halfspace => grid.len() * grid.levels(),
    };
    let expected = count * if header.complex { 16 } else { 8 };
    if payload.len() != expected {
        return Err(TentError::PayloadLength { expected, actual: payload.len() });
    }
    Ok(match (header.kind, header.complex) {
        (FileKind::Line, false) => Decoded::Line(LineFunction::new(grid, read_payload(payload))?),
        (FileKind::Line, true) => Decoded::ComplexLine(LineFunction::new(grid, read_payload(payload))?),
        (FileKind::Halfspace, false) => Decoded::HalfSpace(HalfSpaceFunction::new(grid, read_payload(payload))?),
        (FileKind::Halfspace, true) => {
            Decoded::ComplexHalfSpace(HalfSpaceFunction::new(grid, read_payload(payload))?)
        }
    })
}

pub fn write_file(path: impl AsRef<Path>, obj: &Decoded) -> Result<()> {
    fs::write(path, encode(obj))?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Decoded> {
    decode(&fs::read(path)?)
}
