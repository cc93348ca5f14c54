//! Synthetic flat-layer dataset generation and the two scaling paths:
//! physics-guided re-simulation on the coarse grid versus nearest-neighbor
//! subsampling.

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{simulate_shot, ricker, SimGrid, SourceConfig};
use crate::error::Result;

/// Full-resolution map side (70x70, row = depth).
pub const FULL_SIDE: usize = 70;
/// Scaled map side.
pub const COARSE_SIDE: usize = 8;
/// Sources per full-resolution sample.
pub const N_SOURCES: usize = 5;
/// Full-resolution trace length.
pub const FULL_NT: usize = 1000;
/// Scaled trace length.
pub const SCALED_NT: usize = 32;
/// Receivers per scaled trace.
pub const SCALED_RECEIVERS: usize = 8;
/// Row holding sources and receivers, just below the pressure-release node.
pub const SURFACE_ROW: usize = 1;
/// Full-resolution cell spacing in meters.
pub const FULL_DX: f64 = 10.0;
/// Source wavelet peak frequency at full resolution (Hz).
pub const FULL_WAVELET_HZ: f64 = 15.0;
/// Reduced wavelet frequency for the coarse re-simulation (Hz).
pub const SCALED_WAVELET_HZ: f64 = 8.0;
/// Layer velocity range in m/s.
pub const VEL_MIN: f64 = 1500.0;
pub const VEL_MAX: f64 = 4000.0;
/// Minimum layer thickness in cells.
pub const MIN_THICKNESS: usize = 5;

/// Full-resolution grid. The 1 ms step conventional for this data family
/// violates the asserted stability bound once layers reach 4000 m/s, so the
/// default step is 0.8 ms and the trace still spans 0.8 s over 1000 samples.
pub fn full_grid() -> SimGrid {
    SimGrid {
        nx: FULL_SIDE,
        ny: FULL_SIDE,
        dx: FULL_DX,
        dt: 8e-4,
        nt: FULL_NT,
        sponge_width: 12,
        sponge_strength: 3.0,
    }
}

/// Coarse grid covering the same physical extent and record duration: dx
/// scaled by 70/8, dt set to the stability bound for the fastest layer.
pub fn coarse_grid() -> SimGrid {
    let dx = FULL_DX * FULL_SIDE as f64 / COARSE_SIDE as f64;
    let dt = SimGrid::cfl_limit(dx, VEL_MAX);
    let duration = full_grid().nt as f64 * full_grid().dt;
    SimGrid {
        nx: COARSE_SIDE,
        ny: COARSE_SIDE,
        dx,
        dt,
        nt: (duration / dt).ceil() as usize,
        sponge_width: 3,
        sponge_strength: 3.0,
    }
}

/// Source columns evenly spaced across the surface.
pub fn source_columns() -> [usize; N_SOURCES] {
    let mut cols = [0usize; N_SOURCES];
    for (i, c) in cols.iter_mut().enumerate() {
        *c = ((i as f64) * (FULL_SIDE - 1) as f64 / (N_SOURCES - 1) as f64).round() as usize;
    }
    cols
}

/// Nearest-neighbor index picks: round(i (n_src - 1) / (n_dst - 1)).
pub fn nearest_indices(n_src: usize, n_dst: usize) -> Vec<usize> {
    (0..n_dst)
        .map(|i| ((i * (n_src - 1)) as f64 / (n_dst - 1) as f64).round() as usize)
        .collect()
}

/// Random flat-layer velocity maps: 2-5 horizontal layers, minimum
/// thickness 5 cells, velocities drawn from [1500, 4000] m/s sorted
/// ascending with an occasional adjacent inversion (increasing-with-depth
/// bias rather than strict monotonicity).
pub fn generate_flatvel(n_samples: usize, seed: u64) -> Vec<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let n_layers = rng.gen_range(2..=5usize);
            let spare = FULL_SIDE - MIN_THICKNESS * n_layers;
            let mut cuts: Vec<usize> =
                (0..n_layers - 1).map(|_| rng.gen_range(0..=spare)).collect();
            cuts.sort_unstable();
            let mut thickness = Vec::with_capacity(n_layers);
            let mut prev = 0;
            for &c in &cuts {
                thickness.push(MIN_THICKNESS + c - prev);
                prev = c;
            }
            thickness.push(MIN_THICKNESS + spare - prev);

            let mut velocities: Vec<f64> =
                (0..n_layers).map(|_| rng.gen_range(VEL_MIN..VEL_MAX)).collect();
            velocities.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if rng.gen::<f64>() < 0.3 {
                let k = rng.gen_range(0..n_layers - 1);
                velocities.swap(k, k + 1);
            }

            let mut map = Array2::zeros((FULL_SIDE, FULL_SIDE));
            let mut row = 0;
            for (t, v) in thickness.iter().zip(&velocities) {
                for _ in 0..*t {
                    map.row_mut(row).fill(*v);
                    row += 1;
                }
            }
            debug_assert_eq!(row, FULL_SIDE);
            map
        })
        .collect()
}

/// Full-resolution gather for one map: 5 sources x 1000 time steps x 70
/// receivers, shots simulated in parallel and assembled in source order.
pub fn simulate_full_gather(velocity: &Array2<f64>) -> Result<Array3<f64>> {
    let grid = full_grid();
    let receiver_cols: Vec<usize> = (0..FULL_SIDE).collect();
    let shots: Vec<Result<Array2<f64>>> = source_columns()
        .into_par_iter()
        .map(|col| {
            let src = SourceConfig {
                row: SURFACE_ROW,
                col,
                peak_frequency: FULL_WAVELET_HZ,
                delay: 1.2 / FULL_WAVELET_HZ,
            };
            Ok(simulate_shot(velocity, grid, &src, &receiver_cols, SURFACE_ROW)?.traces)
        })
        .collect();
    let mut gather = Array3::zeros((N_SOURCES, FULL_NT, FULL_SIDE));
    for (s, shot) in shots.into_iter().enumerate() {
        gather.index_axis_mut(ndarray::Axis(0), s).assign(&shot?);
    }
    Ok(gather)
}

/// Block-average downsample of a full map onto the coarse side, with index
/// ranges [floor(i 70/8), floor((i+1) 70/8)).
pub fn downsample_map_blockavg(full: &Array2<f64>) -> Array2<f64> {
    let ratio = FULL_SIDE as f64 / COARSE_SIDE as f64;
    Array2::from_shape_fn((COARSE_SIDE, COARSE_SIDE), |(i, j)| {
        let r0 = (i as f64 * ratio).floor() as usize;
        let r1 = ((i + 1) as f64 * ratio).floor() as usize;
        let c0 = (j as f64 * ratio).floor() as usize;
        let c1 = ((j + 1) as f64 * ratio).floor() as usize;
        let mut sum = 0.0;
        for r in r0..r1 {
            for c in c0..c1 {
                sum += full[(r, c)];
            }
        }
        sum / ((r1 - r0) * (c1 - c0)) as f64
    })
}

/// Physics-guided scaling: block-average the map to 8x8, re-simulate one
/// central shot on the coarse grid with the 8 Hz wavelet, and resample the
/// traces to 32 time steps. Returns the coarse map and the 256-value input.
pub fn scale_physics(c_full: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>)> {
    let c_small = downsample_map_blockavg(c_full);
    let grid = coarse_grid();
    let src = SourceConfig {
        row: SURFACE_ROW,
        col: COARSE_SIDE / 2,
        peak_frequency: SCALED_WAVELET_HZ,
        delay: 1.2 / SCALED_WAVELET_HZ,
    };
    let receiver_cols: Vec<usize> = (0..COARSE_SIDE).collect();
    let gather = simulate_shot(&c_small, grid, &src, &receiver_cols, SURFACE_ROW)?;
    let time_picks = nearest_indices(grid.nt, SCALED_NT);
    let mut seismic = Vec::with_capacity(SCALED_NT * SCALED_RECEIVERS);
    for &t in &time_picks {
        for r in 0..SCALED_RECEIVERS {
            seismic.push(gather.traces[(t, r)]);
        }
    }
    Ok((c_small, seismic))
}

/// Nearest-neighbor scaling baseline: index-subsample the first source's
/// gather to 32x8 and the map to 8x8.
pub fn scale_dsample(seismic_full: &Array3<f64>, c_full: &Array2<f64>) -> (Array2<f64>, Vec<f64>) {
    let map_picks = nearest_indices(c_full.nrows(), COARSE_SIDE);
    let c_small = Array2::from_shape_fn((COARSE_SIDE, COARSE_SIDE), |(i, j)| {
        c_full[(map_picks[i], map_picks[j])]
    });
    let (_, nt, n_rec) = seismic_full.dim();
    let time_picks = nearest_indices(nt, SCALED_NT);
    let rec_picks = nearest_indices(n_rec, SCALED_RECEIVERS);
    let mut seismic = Vec::with_capacity(SCALED_NT * SCALED_RECEIVERS);
    for &t in &time_picks {
        for &r in &rec_picks {
            seismic.push(seismic_full[(0, t, r)]);
        }
    }
    (c_small, seismic)
}

/// Ricker amplitude at the coarse simulation's recorded sample times (used
/// by provenance-minded tests; the traces themselves come from
/// `scale_physics`).
pub fn scaled_wavelet_samples() -> Vec<f64> {
    let grid = coarse_grid();
    nearest_indices(grid.nt, SCALED_NT)
        .iter()
        .map(|&t| ricker(SCALED_WAVELET_HZ, t as f64 * grid.dt, 1.2 / SCALED_WAVELET_HZ))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatvel_maps_are_row_constant() {
        for map in generate_flatvel(20, 1) {
            for row in map.rows() {
                let first = row[0];
                assert!(row.iter().all(|&v| v == first));
            }
        }
    }

    #[test]
    fn flatvel_layer_counts_within_bounds() {
        for map in generate_flatvel(200, 2) {
            let mut layers = 1;
            let mut thickness = 1;
            let mut min_thickness = usize::MAX;
            for i in 1..FULL_SIDE {
                if map[(i, 0)] != map[(i - 1, 0)] {
                    layers += 1;
                    min_thickness = min_thickness.min(thickness);
                    thickness = 1;
                } else {
                    thickness += 1;
                }
            }
            min_thickness = min_thickness.min(thickness);
            // Adjacent layers can draw the same velocity, so observed layer
            // count may undershoot but never exceed 5.
            assert!((1..=5).contains(&layers));
            assert!(min_thickness >= MIN_THICKNESS);
            for &v in map.iter() {
                assert!((VEL_MIN..VEL_MAX).contains(&v));
            }
        }
    }

    #[test]
    fn flatvel_is_deterministic() {
        let a = generate_flatvel(5, 42);
        let b = generate_flatvel(5, 42);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
        let c = generate_flatvel(5, 43);
        assert!(a.iter().zip(&c).any(|(x, y)| x != y));
    }

    #[test]
    fn blockavg_of_constant_map_is_constant() {
        let full = Array2::from_elem((FULL_SIDE, FULL_SIDE), 2750.0);
        let small = downsample_map_blockavg(&full);
        assert!(small.iter().all(|&v| (v - 2750.0).abs() < 1e-9));
    }

    #[test]
    fn physics_scaling_has_256_values() {
        let map = &generate_flatvel(1, 7)[0];
        let (c_small, seismic) = scale_physics(map).unwrap();
        assert_eq!(c_small.dim(), (8, 8));
        assert_eq!(seismic.len(), 256);
        assert!(seismic.iter().all(|v| v.is_finite()));
        assert!(seismic.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn dsample_picks_exact_indices() {
        assert_eq!(nearest_indices(70, 8), vec![0, 10, 20, 30, 39, 49, 59, 69]);
        // Idempotence: downsampling an already coarse axis returns it.
        assert_eq!(nearest_indices(8, 8), vec![0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn dsample_of_constant_map_is_constant() {
        let full = Array2::from_elem((FULL_SIDE, FULL_SIDE), 3100.0);
        let gather = Array3::zeros((N_SOURCES, FULL_NT, FULL_SIDE));
        let (small, seismic) = scale_dsample(&gather, &full);
        assert!(small.iter().all(|&v| v == 3100.0));
        assert_eq!(seismic.len(), 256);
    }

    #[test]
    fn source_columns_are_evenly_spread() {
        assert_eq!(source_columns(), [0, 17, 35, 52, 69]);
    }

    #[test]
    fn physics_and_dsample_paths_differ() {
        let map = &generate_flatvel(1, 11)[0];
        let gather = simulate_full_gather(map).unwrap();
        let (_, phys) = scale_physics(map).unwrap();
        let (_, dsmp) = scale_dsample(&gather, map);
        let dist: f64 = phys
            .iter()
            .zip(&dsmp)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dist > 0.0);
    }
}
