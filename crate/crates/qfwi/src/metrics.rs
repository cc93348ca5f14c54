//! Image-quality metrics between predicted and ground-truth velocity maps.
//!
//! SSIM uses the standard 7x7 Gaussian window (sigma 1.5) over valid
//! (unpadded) positions with C1 = 1e-4 and C2 = 9e-4, i.e. the usual
//! (K1 L)^2 / (K2 L)^2 constants for maps normalized to [0, 1]. On 8x8 maps
//! this yields a 2x2 grid of windows.

use ndarray::Array2;

use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 7;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 1e-4;
pub const SSIM_C2: f64 = 9e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    pub ssim: f64,
}

/// Mean squared difference.
pub fn mse(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::config(format!(
            "mse shape mismatch: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let n = a.len() as f64;
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

fn gaussian_window() -> Array2<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut w = Array2::from_shape_fn((SSIM_WINDOW, SSIM_WINDOW), |(i, j)| {
        let di = i as f64 - half;
        let dj = j as f64 - half;
        (-(di * di + dj * dj) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    });
    let total: f64 = w.iter().sum();
    w.mapv_inplace(|x| x / total);
    w
}

/// Mean SSIM over all valid window positions. Inputs are expected in
/// normalized [0, 1] units (dynamic range L = 1).
pub fn ssim(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::config(format!(
            "ssim shape mismatch: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let (rows, cols) = a.dim();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::config(format!(
            "ssim needs maps of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {rows}x{cols}"
        )));
    }
    let w = gaussian_window();
    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..=(rows - SSIM_WINDOW) {
        for c0 in 0..=(cols - SSIM_WINDOW) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            let mut ab = 0.0;
            for i in 0..SSIM_WINDOW {
                for j in 0..SSIM_WINDOW {
                    let wa = w[(i, j)];
                    let x = a[(r0 + i, c0 + j)];
                    let y = b[(r0 + i, c0 + j)];
                    mu_a += wa * x;
                    mu_b += wa * y;
                    aa += wa * x * x;
                    bb += wa * y * y;
                    ab += wa * x * y;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let value = ((2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2));
            total += value;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

pub fn report(truth: &Array2<f64>, prediction: &Array2<f64>) -> Result<MetricReport> {
    Ok(MetricReport {
        mse: mse(truth, prediction)?,
        ssim: ssim(truth, prediction)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((8, 8), |_| rng.gen_range(0.0..1.0))
    }

    #[test]
    fn mse_basics() {
        let a = Array2::from_elem((8, 8), 1.0);
        let b = Array2::zeros((8, 8));
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn mse_matches_loop_oracle() {
        let a = random_map(1);
        let b = random_map(2);
        let mut want = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let d: f64 = a[(i, j)] - b[(i, j)];
                want += d * d;
            }
        }
        want /= 64.0;
        assert!((mse(&a, &b).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn ssim_of_identical_maps_is_one() {
        let a = random_map(3);
        assert_abs_diff_eq!(ssim(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_of_inverted_map_is_low() {
        // A layered map with real structure; inversion anti-correlates it.
        let a = Array2::from_shape_fn((8, 8), |(i, _)| if i < 4 { 0.2 } else { 0.8 });
        let b = a.mapv(|x| 1.0 - x);
        assert!(ssim(&a, &b).unwrap() < 0.5);
    }

    #[test]
    fn ssim_matches_windowed_statistics_oracle() {
        let a = random_map(5);
        let b = random_map(6);
        let got = ssim(&a, &b).unwrap();

        // Independent recomputation: explicit per-window weighted moments.
        let half = 3.0;
        let mut weights = vec![];
        for i in 0..7 {
            for j in 0..7 {
                let di = i as f64 - half;
                let dj = j as f64 - half;
                weights.push((-(di * di + dj * dj) / 4.5).exp());
            }
        }
        let wsum: f64 = weights.iter().sum();
        let mut vals = vec![];
        for r0 in 0..=1usize {
            for c0 in 0..=1usize {
                let mut ma = 0.0;
                let mut mb = 0.0;
                for i in 0..7 {
                    for j in 0..7 {
                        let w = weights[i * 7 + j] / wsum;
                        ma += w * a[(r0 + i, c0 + j)];
                        mb += w * b[(r0 + i, c0 + j)];
                    }
                }
                let mut va = 0.0;
                let mut vb = 0.0;
                let mut cab = 0.0;
                for i in 0..7 {
                    for j in 0..7 {
                        let w = weights[i * 7 + j] / wsum;
                        let da = a[(r0 + i, c0 + j)] - ma;
                        let db = b[(r0 + i, c0 + j)] - mb;
                        va += w * da * da;
                        vb += w * db * db;
                        cab += w * da * db;
                    }
                }
                vals.push(
                    ((2.0 * ma * mb + 1e-4) * (2.0 * cab + 9e-4))
                        / ((ma * ma + mb * mb + 1e-4) * (va + vb + 9e-4)),
                );
            }
        }
        let want: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        // The oracle computes central moments directly rather than via
        // E[x^2] - mu^2, so agreement checks both algebra routes.
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = random_map(7);
        let b = random_map(8);
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
    }

    #[test]
    fn ssim_rejects_small_maps() {
        let a = Array2::zeros((6, 6));
        assert_eq!(ssim(&a, &a).unwrap_err().category(), "config");
    }
}
