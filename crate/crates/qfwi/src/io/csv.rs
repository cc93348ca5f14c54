//! CSV metric logs. Floats are written with Rust's shortest round-trip
//! formatting, so parsing a log back reproduces the exact values.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::train::EpochRecord;

pub const METRICS_HEADER: &str = "epoch,train_loss,test_mse,test_ssim";

pub fn write_metrics(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in history {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch, r.train_loss, r.test_mse, r.test_ssim
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => {
            return Err(Error::data(format!(
                "bad metrics header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::data(format!(
                "metrics line {} has {} fields, expected 4",
                i + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::data(format!("bad number '{s}' on line {}", i + 2)))
        };
        out.push(EpochRecord {
            epoch: fields[0]
                .parse()
                .map_err(|_| Error::data(format!("bad epoch '{}' on line {}", fields[0], i + 2)))?,
            train_loss: parse(fields[1])?,
            test_mse: parse(fields[2])?,
            test_ssim: parse(fields[3])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_round_trip_exactly() {
        let history = vec![
            EpochRecord {
                epoch: 1,
                train_loss: 0.123456789012345,
                test_mse: 4.6e-4,
                test_ssim: 0.859,
            },
            EpochRecord {
                epoch: 2,
                train_loss: std::f64::consts::PI,
                test_mse: 1.0 / 3.0,
                test_ssim: 0.9999999999999999,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_metrics(&path, &history).unwrap();
        let back = read_metrics(&path).unwrap();
        assert_eq!(back, history);
        // Bytes stable across rewrite.
        let path2 = dir.path().join("m2.csv");
        write_metrics(&path2, &back).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, "nope\n1,2,3,4\n").unwrap();
        assert_eq!(read_metrics(&path).unwrap_err().category(), "data");
    }

    #[test]
    fn single_epoch_has_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_metrics(
            &path,
            &[EpochRecord {
                epoch: 1,
                train_loss: 1.0,
                test_mse: 2.0,
                test_ssim: 0.5,
            }],
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
