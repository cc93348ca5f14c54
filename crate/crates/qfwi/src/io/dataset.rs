//! Dataset pipelines over the container format: streaming full-resolution
//! generation, the two scaling paths, and loading scaled data for training.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::manifest::{
    read_tensor, read_tensor_slice, write_tensor, DatasetManifest, GridProvenance, Normalization,
    Provenance, TensorEntry, MANIFEST_VERSION,
};
use crate::train::ScaledDataset;
use crate::wavesim::{
    coarse_grid, full_grid, generate_flatvel, scale_dsample, scale_physics, simulate_full_gather,
    COARSE_SIDE, FULL_NT, FULL_SIDE, FULL_WAVELET_HZ, N_SOURCES, SCALED_NT, SCALED_RECEIVERS,
    SCALED_WAVELET_HZ,
};

pub const VELOCITY_TENSOR: &str = "velocity";
pub const SEISMIC_TENSOR: &str = "seismic";

/// 80/20 split boundary recorded at generation time.
pub fn train_split(n_samples: usize) -> usize {
    n_samples * 4 / 5
}

fn grid_provenance(grid: &crate::wavesim::SimGrid) -> GridProvenance {
    GridProvenance {
        dx: grid.dx,
        dt: grid.dt,
        nt: grid.nt,
        sponge_width: grid.sponge_width,
        sponge_strength: grid.sponge_strength,
    }
}

/// Generate a full-resolution dataset: 70x70 maps and 5x1000x70 gathers per
/// sample. Gathers are simulated in small parallel blocks and streamed to
/// disk so memory stays at a few samples.
pub fn generate_fullres(dir: &Path, n_samples: usize, seed: u64) -> Result<DatasetManifest> {
    if n_samples == 0 {
        return Err(Error::config("need at least one sample"));
    }
    fs::create_dir_all(dir)?;
    let maps = generate_flatvel(n_samples, seed);

    let mut map_values = Vec::with_capacity(n_samples * FULL_SIDE * FULL_SIDE);
    for map in &maps {
        map_values.extend(map.iter().map(|&v| v as f32));
    }
    let velocity_entry = write_tensor(
        dir,
        VELOCITY_TENSOR,
        &[n_samples, FULL_SIDE, FULL_SIDE],
        &map_values,
    )?;

    let seismic_file = format!("{SEISMIC_TENSOR}.bin");
    let mut out = fs::File::create(dir.join(&seismic_file))?;
    for block in maps.chunks(4) {
        let gathers: Vec<Array3<f64>> = block
            .par_iter()
            .map(simulate_full_gather)
            .collect::<Result<_>>()?;
        for gather in &gathers {
            let mut bytes = Vec::with_capacity(gather.len() * 4);
            for &v in gather.iter() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
            out.write_all(&bytes)?;
        }
    }
    drop(out);
    let seismic_entry = TensorEntry {
        name: SEISMIC_TENSOR.to_string(),
        shape: vec![n_samples, N_SOURCES, FULL_NT, FULL_SIDE],
        dtype: "float32".to_string(),
        byte_offset: 0,
        file: seismic_file,
    };

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        n_samples,
        n_train: train_split(n_samples),
        tensors: vec![velocity_entry, seismic_entry],
        normalization: None,
        provenance: Provenance {
            seed,
            scaling_method: "none".to_string(),
            wavelet_hz: FULL_WAVELET_HZ,
            grid: grid_provenance(&full_grid()),
        },
    };
    manifest.save(dir)?;
    Ok(manifest)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingMethod {
    Physics,
    DSample,
}

impl ScalingMethod {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "physics" => Ok(ScalingMethod::Physics),
            "dsample" => Ok(ScalingMethod::DSample),
            other => Err(Error::config(format!(
                "unknown scaling method '{other}' (expected physics or dsample)"
            ))),
        }
    }
}

fn fullres_map(dir: &Path, entry: &TensorEntry, sample: usize) -> Result<Array2<f64>> {
    let n = FULL_SIDE * FULL_SIDE;
    let values = read_tensor_slice(dir, entry, sample * n, n)?;
    Ok(Array2::from_shape_fn((FULL_SIDE, FULL_SIDE), |(i, j)| {
        values[i * FULL_SIDE + j] as f64
    }))
}

fn fullres_gather(dir: &Path, entry: &TensorEntry, sample: usize) -> Result<Array3<f64>> {
    let n = N_SOURCES * FULL_NT * FULL_SIDE;
    let values = read_tensor_slice(dir, entry, sample * n, n)?;
    Ok(Array3::from_shape_fn(
        (N_SOURCES, FULL_NT, FULL_SIDE),
        |(s, t, r)| values[(s * FULL_NT + t) * FULL_SIDE + r] as f64,
    ))
}

/// Scale a full-resolution dataset to 256-value inputs and 8x8 labels,
/// computing the normalization constants the decoders rely on.
pub fn scale_dataset(in_dir: &Path, out_dir: &Path, method: ScalingMethod) -> Result<DatasetManifest> {
    let source = DatasetManifest::load(in_dir)?;
    let velocity_entry = source.tensor(VELOCITY_TENSOR)?.clone();
    let seismic_entry = source.tensor(SEISMIC_TENSOR)?.clone();
    if velocity_entry.shape.len() != 3 {
        return Err(Error::data(format!(
            "velocity tensor has shape {:?}, expected [N, {FULL_SIDE}, {FULL_SIDE}]",
            velocity_entry.shape
        )));
    }
    let n_samples = source.n_samples;

    let scaled: Vec<(Array2<f64>, Vec<f64>)> = (0..n_samples)
        .collect::<Vec<_>>()
        .par_chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&i| {
                    let map = fullres_map(in_dir, &velocity_entry, i)?;
                    match method {
                        ScalingMethod::Physics => scale_physics(&map),
                        ScalingMethod::DSample => {
                            let gather = fullres_gather(in_dir, &seismic_entry, i)?;
                            Ok(scale_dsample(&gather, &map))
                        }
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    // Convert to the stored float32 payload first; the normalization
    // constants must describe the bytes on disk, not the pre-rounding
    // values, or reloaded labels can fall just outside [0, 1].
    let mut seismic_values = Vec::with_capacity(n_samples * SCALED_NT * SCALED_RECEIVERS);
    let mut map_values = Vec::with_capacity(n_samples * COARSE_SIDE * COARSE_SIDE);
    for (map, seismic) in &scaled {
        seismic_values.extend(seismic.iter().map(|&v| v as f32));
        map_values.extend(map.iter().map(|&v| v as f32));
    }

    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for &v in &map_values {
        v_min = v_min.min(v as f64);
        v_max = v_max.max(v as f64);
    }
    if !(v_min < v_max) {
        return Err(Error::numeric(format!(
            "degenerate velocity range [{v_min}, {v_max}] in scaled dataset"
        )));
    }
    let n_train = source.n_train.min(n_samples);
    let px_per_map = COARSE_SIDE * COARSE_SIDE;
    let pixel_scale = (0..n_train.max(1))
        .map(|i| {
            map_values[i * px_per_map..(i + 1) * px_per_map]
                .iter()
                .map(|&v| {
                    let u = (v as f64 - v_min) / (v_max - v_min);
                    u * u
                })
                .sum::<f64>()
                .sqrt()
        })
        .sum::<f64>()
        / n_train.max(1) as f64;

    fs::create_dir_all(out_dir)?;
    let seismic_entry = write_tensor(
        out_dir,
        SEISMIC_TENSOR,
        &[n_samples, SCALED_NT * SCALED_RECEIVERS],
        &seismic_values,
    )?;
    let velocity_entry = write_tensor(
        out_dir,
        VELOCITY_TENSOR,
        &[n_samples, COARSE_SIDE, COARSE_SIDE],
        &map_values,
    )?;

    let (method_name, wavelet_hz, grid) = match method {
        ScalingMethod::Physics => ("physics", SCALED_WAVELET_HZ, grid_provenance(&coarse_grid())),
        ScalingMethod::DSample => (
            "nearest",
            source.provenance.wavelet_hz,
            source.provenance.grid,
        ),
    };
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        n_samples,
        n_train,
        tensors: vec![seismic_entry, velocity_entry],
        normalization: Some(Normalization {
            v_min,
            v_max,
            pixel_scale,
        }),
        provenance: Provenance {
            seed: source.provenance.seed,
            scaling_method: method_name.to_string(),
            wavelet_hz,
            grid,
        },
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Load a scaled dataset, min-max normalizing the labels to [0, 1] with the
/// manifest's dataset-level constants.
pub fn load_scaled(dir: &Path) -> Result<ScaledDataset> {
    let manifest = DatasetManifest::load(dir)?;
    let norm = manifest.normalization.ok_or_else(|| {
        Error::data("dataset has no normalization constants; run scale-data first".to_string())
    })?;
    let seismic_entry = manifest.tensor(SEISMIC_TENSOR)?;
    let velocity_entry = manifest.tensor(VELOCITY_TENSOR)?;
    if seismic_entry.shape.len() != 2 {
        return Err(Error::data(format!(
            "seismic tensor shape {:?} is not scaled [N, D]",
            seismic_entry.shape
        )));
    }
    let n = manifest.n_samples;
    let input_dim = seismic_entry.shape[1];
    let seismic = read_tensor(dir, seismic_entry)?;
    let velocity = read_tensor(dir, velocity_entry)?;
    let side = velocity_entry.shape[1];

    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            seismic[i * input_dim..(i + 1) * input_dim]
                .iter()
                .map(|&v| v as f64)
                .collect()
        })
        .collect();
    let labels: Vec<Array2<f64>> = (0..n)
        .map(|i| {
            Array2::from_shape_fn((side, side), |(r, c)| {
                let v = velocity[(i * side + r) * side + c] as f64;
                (v - norm.v_min) / (norm.v_max - norm.v_min)
            })
        })
        .collect();

    let dataset = ScaledDataset {
        inputs,
        labels,
        v_min: norm.v_min,
        v_max: norm.v_max,
        pixel_scale: norm.pixel_scale,
        n_train: manifest.n_train,
    };
    dataset.validate()?;
    Ok(dataset)
}
