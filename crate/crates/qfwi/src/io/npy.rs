//! Minimal NPY (version 1.0) reader/writer for little-endian float tensors
//! in C order, enough to interoperate with the public dataset family's
//! storage convention.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Clone, Debug, PartialEq)]
pub enum NpyData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

impl NpyArray {
    pub fn len(&self) -> usize {
        match &self.data {
            NpyData::F32(v) => v.len(),
            NpyData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_f64(&self) -> Vec<f64> {
        match &self.data {
            NpyData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            NpyData::F64(v) => v.clone(),
        }
    }
}

fn header_bytes(descr: &str, shape: &[usize]) -> Vec<u8> {
    let shape_str = match shape.len() {
        1 => format!("({},)", shape[0]),
        _ => format!(
            "({})",
            shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let dict = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_str}, }}");
    // Pad with spaces so magic + version + len + header is 64-byte aligned,
    // ending in a newline, per the format spec.
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header = format!("{dict}{}\n", " ".repeat(padding));

    let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len());
    out.extend_from_slice(MAGIC);
    out.push(1);
    out.push(0);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out
}

pub fn write_npy(path: &Path, array: &NpyArray) -> Result<()> {
    let count: usize = array.shape.iter().product();
    if count != array.len() {
        return Err(Error::config(format!(
            "shape {:?} holds {count} elements but {} given",
            array.shape,
            array.len()
        )));
    }
    let mut file = fs::File::create(path)?;
    match &array.data {
        NpyData::F32(values) => {
            file.write_all(&header_bytes("<f4", &array.shape))?;
            let mut bytes = Vec::with_capacity(values.len() * 4);
            for v in values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            file.write_all(&bytes)?;
        }
        NpyData::F64(values) => {
            file.write_all(&header_bytes("<f8", &array.shape))?;
            let mut bytes = Vec::with_capacity(values.len() * 8);
            for v in values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            file.write_all(&bytes)?;
        }
    }
    Ok(())
}

/// Pull the quoted value following `key` out of the header dict.
fn dict_field<'a>(dict: &'a str, key: &str) -> Result<&'a str> {
    let pos = dict
        .find(key)
        .ok_or_else(|| Error::data(format!("NPY header missing {key}")))?;
    let rest = &dict[pos + key.len()..];
    let rest = rest.trim_start_matches([':', ' ']);
    Ok(rest)
}

pub fn read_npy(path: &Path) -> Result<NpyArray> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::data(format!(
            "{} is not an NPY file (bad magic)",
            path.display()
        )));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if major != 1 {
        return Err(Error::data(format!(
            "unsupported NPY version {major}.{minor}"
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    if bytes.len() < 10 + header_len {
        return Err(Error::data("truncated NPY header".to_string()));
    }
    let header = std::str::from_utf8(&bytes[10..10 + header_len])
        .map_err(|_| Error::data("NPY header is not UTF-8".to_string()))?;

    let descr_field = dict_field(header, "'descr'")?;
    let descr = descr_field
        .trim_start_matches('\'')
        .split('\'')
        .next()
        .unwrap_or("");
    let fortran_field = dict_field(header, "'fortran_order'")?;
    if fortran_field.starts_with("True") {
        return Err(Error::data(
            "Fortran-order NPY layout is not supported (C order only)".to_string(),
        ));
    }
    if !fortran_field.starts_with("False") {
        return Err(Error::data("unreadable fortran_order flag".to_string()));
    }
    let shape_field = dict_field(header, "'shape'")?;
    let open = shape_field
        .find('(')
        .ok_or_else(|| Error::data("NPY shape tuple missing".to_string()))?;
    let close = shape_field
        .find(')')
        .ok_or_else(|| Error::data("NPY shape tuple unterminated".to_string()))?;
    let mut shape = Vec::new();
    for piece in shape_field[open + 1..close].split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        shape.push(
            piece
                .parse::<usize>()
                .map_err(|_| Error::data(format!("bad NPY shape entry '{piece}'")))?,
        );
    }
    if shape.is_empty() {
        return Err(Error::data("scalar (0-d) NPY arrays unsupported".to_string()));
    }

    let count: usize = shape.iter().product();
    let payload = &bytes[10 + header_len..];
    let data = match descr {
        "<f4" => {
            if payload.len() != count * 4 {
                return Err(Error::data(format!(
                    "NPY payload length {} does not match shape {:?} (<f4)",
                    payload.len(),
                    shape
                )));
            }
            NpyData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            )
        }
        "<f8" => {
            if payload.len() != count * 8 {
                return Err(Error::data(format!(
                    "NPY payload length {} does not match shape {:?} (<f8)",
                    payload.len(),
                    shape
                )));
            }
            NpyData::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| {
                        f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]])
                    })
                    .collect(),
            )
        }
        other => {
            return Err(Error::data(format!(
                "unsupported NPY dtype '{other}' (little-endian f32/f64 only)"
            )))
        }
    };
    Ok(NpyArray { shape, data })
}
