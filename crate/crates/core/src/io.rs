//! VGRID and PGM ingestion.
//!
//! A VGRID file is one UTF-8 JSON header line terminated by `\n`, followed by
//! exactly N little-endian elements in x-fastest order:
//!
//! ```text
//! {"dims":[w,h(,d)],"spacing":[...],"dtype":"u8"|"u16"|"f32","order":"x-fastest"}\n<payload>
//! ```
//!
//! Binary PGM (`P5`) is accepted read-only and thresholded at half range
//! (`>= 128` for maxval 255).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryField, GridShape, LabelGrid, ScalarField};

const ORDER: &str = "x-fastest";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    U8,
    U16,
    F32,
}

impl Dtype {
    fn name(self) -> &'static str {
        match self {
            Dtype::U8 => "u8",
            Dtype::U16 => "u16",
            Dtype::F32 => "f32",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "u8" => Ok(Dtype::U8),
            "u16" => Ok(Dtype::U16),
            "f32" => Ok(Dtype::F32),
            other => Err(Error::MalformedHeader(format!("unknown dtype {other:?}"))),
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
            Dtype::F32 => 4,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    dtype: String,
    order: String,
}

/// Contents of a VGRID file.
#[derive(Clone, Debug, PartialEq)]
pub enum VgridData {
    Labels(LabelGrid),
    Scalar(ScalarField),
}

impl VgridData {
    pub fn shape(&self) -> &GridShape {
        match self {
            VgridData::Labels(g) => g.shape(),
            VgridData::Scalar(f) => f.shape(),
        }
    }
}

fn header_line(shape: &GridShape, dtype: Dtype) -> Vec<u8> {
    let header = Header {
        dims: shape.dims().to_vec(),
        spacing: shape.spacing().to_vec(),
        dtype: dtype.name().to_string(),
        order: ORDER.to_string(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out
}

/// Label payloads use `u8` when every class fits, `u16` otherwise.
pub fn encode_labels(grid: &LabelGrid) -> Vec<u8> {
    let dtype = if grid.num_classes() <= 256 {
        Dtype::U8
    } else {
        Dtype::U16
    };
    let mut out = header_line(grid.shape(), dtype);
    match dtype {
        Dtype::U8 => out.extend(grid.labels().iter().map(|&l| l as u8)),
        _ => {
            for &l in grid.labels() {
                out.extend_from_slice(&l.to_le_bytes());
            }
        }
    }
    out
}

/// Scalar payloads are stored as `f32`.
pub fn encode_scalar(field: &ScalarField) -> Vec<u8> {
    let mut out = header_line(field.shape(), Dtype::F32);
    for &v in field.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn encode(data: &VgridData) -> Vec<u8> {
    match data {
        VgridData::Labels(g) => encode_labels(g),
        VgridData::Scalar(f) => encode_scalar(f),
    }
}

pub fn decode(bytes: &[u8]) -> Result<VgridData> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("no terminating newline".into()))?;
    let text = std::str::from_utf8(&bytes[..nl])
        .map_err(|e| Error::MalformedHeader(format!("header is not UTF-8: {e}")))?;
    let header: Header =
        serde_json::from_str(text).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if header.order != ORDER {
        return Err(Error::MalformedHeader(format!(
            "unsupported order {:?}",
            header.order
        )));
    }
    if header.dims.len() != header.spacing.len() {
        return Err(Error::DimsSpacingMismatch {
            dims: header.dims.len(),
            spacing: header.spacing.len(),
        });
    }
    let dtype = Dtype::parse(&header.dtype)?;
    let shape = GridShape::with_spacing(&header.dims, &header.spacing)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;

    let payload = &bytes[nl + 1..];
    let expected = shape.len() * dtype.width();
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::ExcessPayload {
            expected,
            extra: payload.len() - expected,
        });
    }

    Ok(match dtype {
        Dtype::U8 => {
            VgridData::Labels(LabelGrid::from_labels(shape, payload.iter().map(|&b| b as u16).collect())?)
        }
        Dtype::U16 => {
            let labels = payload
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect();
            VgridData::Labels(LabelGrid::from_labels(shape, labels)?)
        }
        Dtype::F32 => {
            let values = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            VgridData::Scalar(ScalarField::new(shape, values)?)
        }
    })
}

pub fn read_vgrid(path: impl AsRef<Path>) -> Result<VgridData> {
    decode(&fs::read(path)?)
}

pub fn write_vgrid(path: impl AsRef<Path>, data: &VgridData) -> Result<()> {
    fs::write(path, encode(data))?;
    Ok(())
}

pub fn write_labels(path: impl AsRef<Path>, grid: &LabelGrid) -> Result<()> {
    fs::write(path, encode_labels(grid))?;
    Ok(())
}

/// Decodes a binary (`P5`) PGM into a mask.
pub fn decode_pgm(bytes: &[u8]) -> Result<BinaryField> {
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // whitespace and comments between header tokens
        while pos < bytes.len() {
            if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedPgm("header ends early".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::MalformedPgm(format!("magic {:?} is not P5", fields[0])));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::MalformedPgm(format!("bad {what} {s:?}")))
    };
    let w = parse(&fields[1], "width")?;
    let h = parse(&fields[2], "height")?;
    let maxval = parse(&fields[3], "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedPgm(format!("maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let shape = GridShape::new(&[w, h]).map_err(|e| Error::MalformedPgm(e.to_string()))?;
    let width = if maxval < 256 { 1 } else { 2 };
    let expected = shape.len() * width;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: raster.len(),
        });
    }
    let on = |v: usize| 2 * v >= maxval + 1;
    let values = if width == 1 {
        raster[..expected].iter().map(|&b| on(b as usize) as u8).collect()
    } else {
        raster[..expected]
            .chunks_exact(2)
            .map(|c| on(u16::from_be_bytes([c[0], c[1]]) as usize) as u8)
            .collect()
    };
    BinaryField::new(shape, values)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<BinaryField> {
    decode_pgm(&fs::read(path)?)
}

/// Reads a label grid from either a VGRID (integer dtype) or a PGM file.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelGrid> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P5") {
        return Ok(LabelGrid::from_mask(&decode_pgm(&bytes)?));
    }
    match decode(&bytes)? {
        VgridData::Labels(g) => Ok(g),
        VgridData::Scalar(_) => Err(Error::MalformedHeader(
            "expected an integer label grid, found dtype f32".into(),
        )),
    }
}
