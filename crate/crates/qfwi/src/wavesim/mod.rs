//! 2D acoustic wave forward modeling with absorbing boundaries.
//!
//! Explicit time stepping of the constant-density acoustic wave equation
//! (pressure formulation) on a square grid: 2nd-order leapfrog in time, a
//! 4th-order centered Laplacian in space, an exponential sponge taper on the
//! left/right/bottom edges, and a pressure-release (p = 0) free surface at
//! row 0. Row index is depth; sources and receivers live on the row just
//! below the surface node.

mod dataset;

pub use dataset::*;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Spatial/temporal discretization of one simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimGrid {
    /// Columns (width).
    pub nx: usize,
    /// Rows (depth).
    pub ny: usize,
    /// Cell spacing in meters (square cells).
    pub dx: f64,
    /// Time step in seconds.
    pub dt: f64,
    /// Number of time steps (= samples per trace).
    pub nt: usize,
    /// Sponge thickness in cells on the left/right/bottom edges.
    pub sponge_width: usize,
    /// Dimensionless sponge strength (edge damping factor is
    /// exp(-strength^2)).
    pub sponge_strength: f64,
}

impl SimGrid {
    /// Stability bound asserted at setup: dt <= 0.5 dx / (sqrt(2) c_max).
    pub fn cfl_limit(dx: f64, c_max: f64) -> f64 {
        0.5 * dx / (std::f64::consts::SQRT_2 * c_max)
    }

    pub fn validate(&self, c_max: f64) -> Result<()> {
        if self.nx < 5 || self.ny < 5 {
            return Err(Error::config(format!(
                "grid {}x{} too small for the 4th-order stencil",
                self.nx, self.ny
            )));
        }
        if self.dx <= 0.0 || self.dt <= 0.0 {
            return Err(Error::config("grid spacing and time step must be positive"));
        }
        if self.sponge_width >= self.nx.min(self.ny) / 2 {
            return Err(Error::config(format!(
                "sponge width {} must be below half the grid extent",
                self.sponge_width
            )));
        }
        let limit = SimGrid::cfl_limit(self.dx, c_max);
        if self.dt > limit {
            return Err(Error::config(format!(
                "CFL violation: dt {} exceeds limit {limit} for c_max {c_max}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// One point source injecting a Ricker wavelet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceConfig {
    pub row: usize,
    pub col: usize,
    pub peak_frequency: f64,
    pub delay: f64,
}

/// Receiver traces over time for one source.
#[derive(Clone, Debug)]
pub struct ShotGather {
    /// nt x n_receivers pressure samples; sample n is the field at t = n dt.
    pub traces: Array2<f64>,
    /// Depth row the receivers sit on.
    pub receiver_row: usize,
}

/// Ricker wavelet: (1 - 2 pi^2 f^2 tau^2) exp(-pi^2 f^2 tau^2), tau = t - t0.
pub fn ricker(peak_frequency: f64, t: f64, delay: f64) -> f64 {
    let tau = t - delay;
    let arg = std::f64::consts::PI * peak_frequency * tau;
    let arg2 = arg * arg;
    (1.0 - 2.0 * arg2) * (-arg2).exp()
}

/// Pressure field plus stepping state. The grid is padded by two cells on
/// every side so the stencil needs no branches; side and bottom ghosts stay
/// zero, top ghosts mirror antisymmetrically across the free surface.
#[derive(Debug)]
pub struct WaveField {
    grid: SimGrid,
    width: usize,
    c2dt2: Vec<f64>,
    damp: Vec<f64>,
    p_prev: Vec<f64>,
    p_cur: Vec<f64>,
    p_next: Vec<f64>,
    step: usize,
}

impl WaveField {
    pub fn new(velocity: &Array2<f64>, grid: SimGrid) -> Result<Self> {
        if velocity.dim() != (grid.ny, grid.nx) {
            return Err(Error::config(format!(
                "velocity map {:?} does not match grid {}x{}",
                velocity.dim(),
                grid.ny,
                grid.nx
            )));
        }
        let c_max = velocity.iter().cloned().fold(0.0, f64::max);
        if !(c_max > 0.0) {
            return Err(Error::config("velocity map must be positive"));
        }
        grid.validate(c_max)?;

        let width = grid.nx + 4;
        let height = grid.ny + 4;
        let mut c2dt2 = vec![0.0; width * height];
        for i in 0..grid.ny {
            for j in 0..grid.nx {
                let c = velocity[(i, j)];
                c2dt2[(i + 2) * width + j + 2] = (c * grid.dt) * (c * grid.dt);
            }
        }

        // Cerjan-style taper: cells at distance d < W from an absorbing edge
        // are scaled by exp(-(strength (W - d) / W)^2) each step.
        let w = grid.sponge_width;
        let taper = |d: usize| -> f64 {
            if w == 0 || d >= w {
                1.0
            } else {
                let x = grid.sponge_strength * (w - d) as f64 / w as f64;
                (-x * x).exp()
            }
        };
        let mut damp = vec![1.0; width * height];
        for i in 0..grid.ny {
            for j in 0..grid.nx {
                let d_bottom = grid.ny - 1 - i;
                let d_left = j;
                let d_right = grid.nx - 1 - j;
                damp[(i + 2) * width + j + 2] = taper(d_bottom) * taper(d_left) * taper(d_right);
            }
        }

        Ok(WaveField {
            grid,
            width,
            c2dt2,
            damp,
            p_prev: vec![0.0; width * height],
            p_cur: vec![0.0; width * height],
            p_next: vec![0.0; width * height],
            step: 0,
        })
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn pressure(&self, row: usize, col: usize) -> f64 {
        self.p_cur[(row + 2) * self.width + col + 2]
    }

    /// Current and previous interior fields (tests use these for energy
    /// accounting).
    pub fn fields(&self) -> (Array2<f64>, Array2<f64>) {
        let extract = |buf: &[f64]| {
            Array2::from_shape_fn((self.grid.ny, self.grid.nx), |(i, j)| {
                buf[(i + 2) * self.width + j + 2]
            })
        };
        (extract(&self.p_cur), extract(&self.p_prev))
    }

    /// Advance one time step, injecting `amplitude` at the source cell.
    pub fn step(&mut self, source: Option<(usize, usize, f64)>) -> Result<()> {
        let w = self.width;
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let inv12dx2 = 1.0 / (12.0 * self.grid.dx * self.grid.dx);

        // Antisymmetric mirror above the free surface: ghost(-k) = -p(k),
        // with p(0) held at zero.
        for j in 0..nx {
            self.p_cur[w + j + 2] = -self.p_cur[3 * w + j + 2];
            self.p_cur[j + 2] = -self.p_cur[4 * w + j + 2];
        }

        for i in 0..ny {
            let row = (i + 2) * w;
            for j in 0..nx {
                let c = row + j + 2;
                let cur = &self.p_cur;
                let lap_x = 16.0 * (cur[c - 1] + cur[c + 1]) - (cur[c - 2] + cur[c + 2]);
                let lap_y =
                    16.0 * (cur[c - w] + cur[c + w]) - (cur[c - 2 * w] + cur[c + 2 * w]);
                let lap = (lap_x + lap_y - 60.0 * cur[c]) * inv12dx2;
                self.p_next[c] = 2.0 * cur[c] - self.p_prev[c] + self.c2dt2[c] * lap;
            }
        }

        if let Some((row, col, amplitude)) = source {
            if row >= ny || col >= nx {
                return Err(Error::config(format!(
                    "source at ({row},{col}) outside {ny}x{nx} grid"
                )));
            }
            let c = (row + 2) * w + col + 2;
            self.p_next[c] += self.c2dt2[c] * amplitude;
        }

        // Pressure-release surface.
        for j in 0..nx {
            self.p_next[2 * w + j + 2] = 0.0;
        }

        // Sponge taper on the current and the new field.
        for i in 0..ny {
            let row = (i + 2) * w;
            for j in 0..nx {
                let c = row + j + 2;
                let d = self.damp[c];
                self.p_next[c] *= d;
                self.p_cur[c] *= d;
            }
        }

        std::mem::swap(&mut self.p_prev, &mut self.p_cur);
        std::mem::swap(&mut self.p_cur, &mut self.p_next);
        self.step += 1;

        if self.step % 50 == 0 {
            let total: f64 = self.p_cur.iter().sum();
            if !total.is_finite() {
                return Err(Error::numeric(format!(
                    "unstable time stepping: non-finite field at step {}",
                    self.step
                )));
            }
        }
        Ok(())
    }
}

/// Run a full shot: step `grid.nt` times, recording the pressure at the
/// receiver cells before each update (sample n is the field at t = n dt).
pub fn simulate_shot(
    velocity: &Array2<f64>,
    grid: SimGrid,
    src: &SourceConfig,
    receiver_cols: &[usize],
    receiver_row: usize,
) -> Result<ShotGather> {
    if src.row >= grid.ny || src.col >= grid.nx {
        return Err(Error::config(format!(
            "source at ({},{}) outside {}x{} grid",
            src.row, src.col, grid.ny, grid.nx
        )));
    }
    if receiver_row >= grid.ny {
        return Err(Error::config(format!(
            "receiver row {receiver_row} outside grid of {} rows",
            grid.ny
        )));
    }
    for &col in receiver_cols {
        if col >= grid.nx {
            return Err(Error::config(format!(
                "receiver column {col} outside grid of {} columns",
                grid.nx
            )));
        }
    }
    if src.peak_frequency <= 0.0 {
        return Err(Error::config("source frequency must be positive"));
    }

    let mut field = WaveField::new(velocity, grid)?;
    let mut traces = Array2::zeros((grid.nt, receiver_cols.len()));
    for n in 0..grid.nt {
        for (k, &col) in receiver_cols.iter().enumerate() {
            traces[(n, k)] = field.pressure(receiver_row, col);
        }
        let t = n as f64 * grid.dt;
        let amplitude = ricker(src.peak_frequency, t, src.delay);
        field.step(Some((src.row, src.col, amplitude)))?;
    }
    Ok(ShotGather {
        traces,
        receiver_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_grid() -> SimGrid {
        SimGrid {
            nx: 50,
            ny: 50,
            dx: 10.0,
            dt: 8e-4,
            nt: 300,
            sponge_width: 10,
            sponge_strength: 3.0,
        }
    }

    #[test]
    fn ricker_peaks_at_delay() {
        assert_eq!(ricker(15.0, 0.08, 0.08), 1.0);
        assert!(ricker(15.0, 10.0, 0.08).abs() < 1e-12);
        assert!(ricker(15.0, -10.0, 0.08).abs() < 1e-12);
    }

    #[test]
    fn ricker_integrates_to_zero() {
        // Trapezoid quadrature over a wide window around the peak.
        let f = 15.0;
        let t0 = 0.08;
        let dt = 1e-5;
        let n = 40_000;
        let mut integral = 0.0;
        for i in 0..n {
            let t = -0.12 + i as f64 * dt;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            integral += w * ricker(f, t, t0) * dt;
        }
        // |integral| under 1e-6 of peak * window length.
        assert!(integral.abs() < 1e-6 * (n as f64 * dt));
    }

    #[test]
    fn zero_source_stays_zero() {
        let c = Array2::from_elem((50, 50), 3000.0);
        let grid = small_grid();
        let src = SourceConfig {
            row: 1,
            col: 25,
            peak_frequency: 15.0,
            delay: 0.08,
        };
        // Zero amplitude by stepping manually without a source.
        let mut field = WaveField::new(&c, grid).unwrap();
        for _ in 0..100 {
            field.step(None).unwrap();
        }
        assert_eq!(field.pressure(10, 10), 0.0);
        let _ = src;
    }

    #[test]
    fn cfl_violation_is_config_error() {
        let c = Array2::from_elem((50, 50), 4000.0);
        let mut grid = small_grid();
        grid.dt = 1.0e-3; // above 0.5 dx / (sqrt(2) c) for c = 4000
        assert_eq!(
            WaveField::new(&c, grid).unwrap_err().category(),
            "config"
        );
    }

    #[test]
    fn traces_are_finite_and_nonzero() {
        let c = Array2::from_elem((50, 50), 3000.0);
        let grid = small_grid();
        let src = SourceConfig {
            row: 1,
            col: 10,
            peak_frequency: 15.0,
            delay: 0.08,
        };
        let gather = simulate_shot(&c, grid, &src, &[10, 25, 40], 1).unwrap();
        assert!(gather.traces.iter().all(|v| v.is_finite()));
        let peak = gather.traces.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(peak > 0.0);
    }

    #[test]
    fn homogeneous_reciprocity() {
        // Symmetric operator: swapping source and receiver cells leaves the
        // recorded trace unchanged up to rounding.
        let c = Array2::from_elem((50, 50), 2500.0);
        let grid = small_grid();
        let a = (1, 12);
        let b = (1, 38);
        let src_a = SourceConfig {
            row: a.0,
            col: a.1,
            peak_frequency: 15.0,
            delay: 0.08,
        };
        let src_b = SourceConfig {
            row: b.0,
            col: b.1,
            peak_frequency: 15.0,
            delay: 0.08,
        };
        let ab = simulate_shot(&c, grid, &src_a, &[b.1], b.0).unwrap();
        let ba = simulate_shot(&c, grid, &src_b, &[a.1], a.0).unwrap();
        let peak = ab.traces.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for (x, y) in ab.traces.iter().zip(ba.traces.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-6 * peak);
        }
    }

    #[test]
    fn source_outside_grid_rejected() {
        let c = Array2::from_elem((50, 50), 3000.0);
        let src = SourceConfig {
            row: 60,
            col: 10,
            peak_frequency: 15.0,
            delay: 0.08,
        };
        assert!(simulate_shot(&c, small_grid(), &src, &[10], 1).is_err());
    }
}
