//! Native dataset container: a JSON manifest pairing named raw little-endian
//! float32 tensor files with shapes, normalization constants, and
//! generation provenance.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub byte_offset: u64,
    pub file: String,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Normalization {
    /// Dataset-level velocity bounds in m/s.
    pub v_min: f64,
    pub v_max: f64,
    /// Mean L2 norm of the normalized training labels (pixel-decode scale).
    pub pixel_scale: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridProvenance {
    pub dx: f64,
    pub dt: f64,
    pub nt: usize,
    pub sponge_width: usize,
    pub sponge_strength: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    /// "none" for full-resolution data, "physics" or "nearest" after scaling.
    pub scaling_method: String,
    pub wavelet_hz: f64,
    pub grid: GridProvenance,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub version: u32,
    pub n_samples: usize,
    /// Train/test split boundary: samples [0, n_train) train the model.
    pub n_train: usize,
    pub tensors: Vec<TensorEntry>,
    pub normalization: Option<Normalization>,
    pub provenance: Provenance,
}

impl DatasetManifest {
    pub fn tensor(&self, name: &str) -> Result<&TensorEntry> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::data(format!("manifest has no tensor named '{name}'")))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        if let Some(n) = &self.normalization {
            if !(n.v_min.is_finite() && n.v_max.is_finite() && n.v_min < n.v_max) {
                return Err(Error::config(format!(
                    "bad normalization bounds: v_min {} v_max {}",
                    n.v_min, n.v_max
                )));
            }
        }
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::data(format!("manifest serialization failed: {e}")))?;
        fs::write(dir.join(MANIFEST_FILE), json)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("malformed manifest: {e}")))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::data(format!(
                "manifest version {} unsupported (expected {MANIFEST_VERSION})",
                manifest.version
            )));
        }
        Ok(manifest)
    }
}

/// Write a float32 payload file and return its tensor entry.
pub fn write_tensor(dir: &Path, name: &str, shape: &[usize], values: &[f32]) -> Result<TensorEntry> {
    let count: usize = shape.iter().product();
    if count != values.len() {
        return Err(Error::config(format!(
            "tensor '{name}': shape {shape:?} holds {count} values, got {}",
            values.len()
        )));
    }
    fs::create_dir_all(dir)?;
    let file = format!("{name}.bin");
    let mut out = fs::File::create(dir.join(&file))?;
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(TensorEntry {
        name: name.to_string(),
        shape: shape.to_vec(),
        dtype: "float32".to_string(),
        byte_offset: 0,
        file,
    })
}

/// Read a contiguous element range of a tensor payload without loading the
/// whole file (gathers run to hundreds of megabytes).
pub fn read_tensor_slice(
    dir: &Path,
    entry: &TensorEntry,
    start_elem: usize,
    n_elems: usize,
) -> Result<Vec<f32>> {
    use std::io::{Seek, SeekFrom};
    if entry.dtype != "float32" {
        return Err(Error::data(format!(
            "tensor '{}' has unsupported dtype '{}'",
            entry.name, entry.dtype
        )));
    }
    let total: usize = entry.shape.iter().product();
    if start_elem + n_elems > total {
        return Err(Error::config(format!(
            "slice [{start_elem}, {}) exceeds tensor '{}' of {total} elements",
            start_elem + n_elems,
            entry.name
        )));
    }
    let path = dir.join(&entry.file);
    let mut file = fs::File::open(&path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    file.seek(SeekFrom::Start(entry.byte_offset + (start_elem * 4) as u64))?;
    let mut bytes = vec![0u8; n_elems * 4];
    file.read_exact(&mut bytes).map_err(|e| {
        Error::data(format!(
            "tensor '{}': short read ({e}); payload truncated?",
            entry.name
        ))
    })?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Read a tensor payload back, validating dtype and byte length.
pub fn read_tensor(dir: &Path, entry: &TensorEntry) -> Result<Vec<f32>> {
    if entry.dtype != "float32" {
        return Err(Error::data(format!(
            "tensor '{}' has unsupported dtype '{}'",
            entry.name, entry.dtype
        )));
    }
    let count: usize = entry.shape.iter().product();
    let path = dir.join(&entry.file);
    let mut file = fs::File::open(&path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let start = entry.byte_offset as usize;
    let needed = count * 4;
    if bytes.len() < start + needed {
        return Err(Error::data(format!(
            "tensor '{}': payload has {} bytes, needs {} at offset {start}",
            entry.name,
            bytes.len(),
            needed
        )));
    }
    Ok(bytes[start..start + needed]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_manifest() -> DatasetManifest {
        DatasetManifest {
            version: MANIFEST_VERSION,
            n_samples: 2,
            n_train: 1,
            tensors: vec![],
            normalization: Some(Normalization {
                v_min: 1500.0,
                v_max: 4000.0,
                pixel_scale: 4.2,
            }),
            provenance: Provenance {
                seed: 7,
                scaling_method: "none".to_string(),
                wavelet_hz: 15.0,
                grid: GridProvenance {
                    dx: 10.0,
                    dt: 8e-4,
                    nt: 1000,
                    sponge_width: 12,
                    sponge_strength: 3.0,
                },
            },
        }
    }

    #[test]
    fn manifest_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = sample_manifest();
        let entry = write_tensor(dir.path(), "velocity", &[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
            .unwrap();
        manifest.tensors.push(entry);
        manifest.save(dir.path()).unwrap();
        let first = fs::read(dir.path().join(MANIFEST_FILE)).unwrap();

        let loaded = DatasetManifest::load(dir.path()).unwrap();
        assert_eq!(loaded, manifest);
        loaded.save(dir.path()).unwrap();
        let second = fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn tensor_payload_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let values: Vec<f32> = (0..24).map(|i| i as f32 * 0.5).collect();
        let entry = write_tensor(dir.path(), "seismic", &[2, 3, 4], &values).unwrap();
        assert_eq!(read_tensor(dir.path(), &entry).unwrap(), values);
    }

    #[test]
    fn truncated_tensor_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let entry = write_tensor(dir.path(), "t", &[8], &[0.0; 8]).unwrap();
        let path = dir.path().join(&entry.file);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert_eq!(read_tensor(dir.path(), &entry).unwrap_err().category(), "data");
    }

    #[test]
    fn invalid_normalization_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = sample_manifest();
        manifest.normalization = Some(Normalization {
            v_min: 5.0,
            v_max: 5.0,
            pixel_scale: 1.0,
        });
        assert!(manifest.save(dir.path()).is_err());
    }

    #[test]
    fn missing_tensor_name_is_data_error() {
        let manifest = sample_manifest();
        assert_eq!(manifest.tensor("nope").unwrap_err().category(), "data");
    }
}
