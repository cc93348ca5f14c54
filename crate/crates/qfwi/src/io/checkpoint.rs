//! Checkpoint persistence: JSON with the trainable angles embedded as
//! base64-encoded little-endian float64 bytes, so the file stays
//! human-inspectable and diff-able while the parameters round-trip
//! bit-exactly.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzConfig, PARAM_LAYOUT};
use crate::error::{Error, Result};
use crate::train::{Checkpoint, DecoderKind, EpochRecord};

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    ansatz: AnsatzConfig,
    param_layout: String,
    /// base64 of little-endian f64 values, one per trainable slot.
    params_base64: String,
    decoder: DecoderKind,
    v_min: f64,
    v_max: f64,
    pixel_scale: f64,
    epoch: usize,
    batch_qubits: usize,
    extra_qubits: usize,
    history: Vec<EpochRecord>,
}

fn encode_params(params: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(params.len() * 8);
    for p in params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_params(text: &str) -> Result<Vec<f64>> {
    let bytes = BASE64
        .decode(text)
        .map_err(|e| Error::data(format!("bad base64 parameter payload: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::data(format!(
            "parameter payload of {} bytes is not a whole number of f64",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect())
}

pub fn save(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    let file = CheckpointFile {
        ansatz: checkpoint.ansatz.clone(),
        param_layout: PARAM_LAYOUT.to_string(),
        params_base64: encode_params(&checkpoint.params),
        decoder: checkpoint.decoder,
        v_min: checkpoint.v_min,
        v_max: checkpoint.v_max,
        pixel_scale: checkpoint.pixel_scale,
        epoch: checkpoint.epoch,
        batch_qubits: checkpoint.batch_qubits,
        extra_qubits: checkpoint.extra_qubits,
        history: checkpoint.history.clone(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::data(format!("checkpoint serialization failed: {e}")))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("malformed checkpoint: {e}")))?;
    let params = decode_params(&file.params_base64)?;
    if params.len() != file.ansatz.param_count() {
        return Err(Error::data(format!(
            "checkpoint holds {} parameters but the ansatz needs {}",
            params.len(),
            file.ansatz.param_count()
        )));
    }
    Ok(Checkpoint {
        ansatz: file.ansatz,
        params,
        decoder: file.decoder,
        v_min: file.v_min,
        v_max: file.v_max,
        pixel_scale: file.pixel_scale,
        epoch: file.epoch,
        batch_qubits: file.batch_qubits,
        extra_qubits: file.extra_qubits,
        history: file.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::init_params;

    fn sample_checkpoint() -> Checkpoint {
        let ansatz = AnsatzConfig::default();
        Checkpoint {
            params: init_params(ansatz.param_count(), 5),
            ansatz,
            decoder: DecoderKind::Layer,
            v_min: 1500.0,
            v_max: 4000.0,
            pixel_scale: 4.1,
            epoch: 12,
            batch_qubits: 1,
            extra_qubits: 1,
            history: vec![EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                test_mse: 0.01,
                test_ssim: 0.8,
            }],
        }
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let ckpt = sample_checkpoint();
        save(&ckpt, &path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded, ckpt);
        // Re-saving produces identical bytes.
        let path2 = dir.path().join("ckpt2.json");
        save(&loaded, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn parameter_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let mut ckpt = sample_checkpoint();
        ckpt.params.truncate(100);
        save(&ckpt, &path).unwrap();
        assert_eq!(load(&path).unwrap_err().category(), "data");
    }

    #[test]
    fn garbage_file_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "{not json").unwrap();
        assert_eq!(load(&path).unwrap_err().category(), "data");
    }
}
