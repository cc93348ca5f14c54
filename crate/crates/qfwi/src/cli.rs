//! Command-line entry points tying generation, scaling, training, and
//! evaluation together.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::io::checkpoint;
use crate::io::csv::write_metrics;
use crate::io::dataset::{generate_fullres, load_scaled, scale_dataset, ScalingMethod};
use crate::io::npy::{write_npy, NpyArray, NpyData};
use crate::train::{train, DecoderKind, Predictor, TrainConfig};

#[derive(Parser)]
#[command(
    name = "qfwi",
    version,
    about = "Variational quantum learning for seismic full-waveform inversion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    /// Re-simulate on the coarse grid with a lower-frequency wavelet.
    Physics,
    /// Nearest-neighbor subsampling of waveform and map.
    #[value(name = "dsample")]
    DSample,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DecoderArg {
    /// 8x8 map from the magnitudes of 64 amplitudes.
    Pixel,
    /// One velocity per depth row from Z expectations.
    Layer,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a full-resolution synthetic dataset (70x70 maps, 5x1000x70
    /// gathers).
    GenData {
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scale a full-resolution dataset to 256-value inputs and 8x8 labels.
    ScaleData {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the variational model on a scaled dataset; writes
    /// checkpoint.json and metrics.csv into --out.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "layer")]
        decoder: DecoderArg,
        #[arg(long, default_value_t = 0)]
        batch_qubits: usize,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a dataset's test split; writes metrics.json,
    /// predictions.npy, and profile.csv into --out.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Column of the vertical velocity profile CSV.
        #[arg(long, default_value_t = 4)]
        profile_col: usize,
        /// Test-split sample index the profile is taken from.
        #[arg(long, default_value_t = 0)]
        profile_sample: usize,
        /// Score the ground-truth labels as if they were predictions
        /// (exercises the mse 0 / ssim 1 path).
        #[arg(long, default_value_t = false)]
        self_test: bool,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { samples, seed, out } => {
            let manifest = generate_fullres(&out, samples, seed)?;
            println!(
                "wrote {} samples ({} train / {} test) to {}",
                manifest.n_samples,
                manifest.n_train,
                manifest.n_samples - manifest.n_train,
                out.display()
            );
            Ok(())
        }
        Command::ScaleData { method, input, out } => {
            let method = match method {
                MethodArg::Physics => ScalingMethod::Physics,
                MethodArg::DSample => ScalingMethod::DSample,
            };
            let manifest = scale_dataset(&input, &out, method)?;
            let norm = manifest.normalization.expect("scaled manifests carry constants");
            println!(
                "scaled {} samples via {} (v range [{:.1}, {:.1}] m/s, pixel scale {:.4}) to {}",
                manifest.n_samples,
                manifest.provenance.scaling_method,
                norm.v_min,
                norm.v_max,
                norm.pixel_scale,
                out.display()
            );
            Ok(())
        }
        Command::Train {
            data,
            decoder,
            batch_qubits,
            epochs,
            lr,
            seed,
            out,
        } => {
            let dataset = load_scaled(&data)?;
            let config = TrainConfig {
                epochs,
                initial_lr: lr,
                seed,
                decoder: match decoder {
                    DecoderArg::Pixel => DecoderKind::Pixel,
                    DecoderArg::Layer => DecoderKind::Layer,
                },
                batch_qubits,
                ..TrainConfig::default()
            };
            let ckpt = train(&dataset, &config)?;
            fs::create_dir_all(&out)?;
            checkpoint::save(&ckpt, &out.join("checkpoint.json"))?;
            write_metrics(&out.join("metrics.csv"), &ckpt.history)?;
            let summary = ckpt
                .history
                .last()
                .map(|r| format!("final test mse {:.6} ssim {:.4}", r.test_mse, r.test_ssim))
                .unwrap_or_else(|| "no epochs run".to_string());
            println!(
                "trained {} parameters ({} extra qubits) for {} epochs; {}",
                ckpt.params.len(),
                ckpt.extra_qubits,
                ckpt.epoch,
                summary
            );
            Ok(())
        }
        Command::Eval {
            checkpoint: ckpt_path,
            data,
            out,
            profile_col,
            profile_sample,
            self_test,
        } => {
            let ckpt = checkpoint::load(&ckpt_path)?;
            let dataset = load_scaled(&data)?;
            let inputs = &dataset.inputs[dataset.n_train..];
            let labels = &dataset.labels[dataset.n_train..];
            if inputs.is_empty() {
                return Err(Error::config("dataset has an empty test split"));
            }

            let predictor = Predictor::from_checkpoint(&ckpt)?;
            let predictions: Vec<crate::decode::VelocityMap> = if self_test {
                labels.to_vec()
            } else {
                inputs
                    .iter()
                    .map(|x| predictor.predict(x))
                    .collect::<Result<_>>()?
            };

            let n = labels.len() as f64;
            let mut mse = 0.0;
            let mut ssim = 0.0;
            for (label, prediction) in labels.iter().zip(&predictions) {
                let report = crate::metrics::report(label, prediction)?;
                mse += report.mse / n;
                ssim += report.ssim / n;
            }

            fs::create_dir_all(&out)?;
            fs::write(
                out.join("metrics.json"),
                format!(
                    "{{\n  \"mse\": {},\n  \"ssim\": {},\n  \"n_samples\": {}\n}}\n",
                    mse,
                    ssim,
                    labels.len()
                ),
            )?;

            let side = predictions[0].nrows();
            let mut flat = Vec::with_capacity(predictions.len() * side * side);
            for p in &predictions {
                flat.extend(p.iter().map(|&v| v as f32));
            }
            write_npy(
                &out.join("predictions.npy"),
                &NpyArray {
                    shape: vec![predictions.len(), side, side],
                    data: NpyData::F32(flat),
                },
            )?;

            if profile_sample >= predictions.len() || profile_col >= side {
                return Err(Error::config(format!(
                    "profile sample {profile_sample} / column {profile_col} out of range"
                )));
            }
            let denorm = |u: f64| ckpt.v_min + u * (ckpt.v_max - ckpt.v_min);
            let mut profile = String::from("depth,ground_truth,predicted\n");
            for row in 0..side {
                profile.push_str(&format!(
                    "{},{},{}\n",
                    row,
                    denorm(labels[profile_sample][(row, profile_col)]),
                    denorm(predictions[profile_sample][(row, profile_col)])
                ));
            }
            fs::write(out.join("profile.csv"), profile)?;

            println!(
                "evaluated {} samples: mse {:.6} ssim {:.4} -> {}",
                labels.len(),
                mse,
                ssim,
                out.display()
            );
            Ok(())
        }
    }
}

/// Install the worker pool requested via the QFWI_WORKERS env var, if any.
pub fn configure_workers() {
    if let Ok(value) = std::env::var("QFWI_WORKERS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Stable nonzero exit code per error category.
pub fn exit_code(error: &Error) -> i32 {
    match error.category() {
        "config" => 2,
        "data" => 3,
        "numeric" => 4,
        _ => 5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn method_and_decoder_names_match_interface() {
        use clap::ValueEnum;
        let methods: Vec<String> = MethodArg::value_variants()
            .iter()
            .map(|v| v.to_possible_value().unwrap().get_name().to_string())
            .collect();
        assert_eq!(methods, vec!["physics", "dsample"]);
        let decoders: Vec<String> = DecoderArg::value_variants()
            .iter()
            .map(|v| v.to_possible_value().unwrap().get_name().to_string())
            .collect();
        assert_eq!(decoders, vec!["pixel", "layer"]);
    }

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(exit_code(&Error::config("x")), 2);
        assert_eq!(exit_code(&Error::data("x")), 3);
        assert_eq!(exit_code(&Error::numeric("x")), 4);
    }
}
