//! Gabor filter bank and rectified feature stacks.
//!
//! The bank holds one even-symmetric (cosine, phase 0) kernel per
//! (orientation, frequency) pair with an isotropic Gaussian envelope and the
//! mean subtracted, so every kernel has zero DC response. Because the
//! kernels are even-symmetric, correlation and convolution coincide.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RadarFrame};
use crate::scale::ReflectivityScale;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Gabor bank parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborBankConfig {
    /// Number of orientations, evenly spaced over `[0, pi)`.
    pub orientations: usize,
    /// Carrier frequencies in cycles per pixel, each in `(0, 0.5]`.
    pub frequencies: Vec<f64>,
    /// Kernel side length in pixels (odd).
    pub kernel_size: usize,
    /// Gaussian envelope width as a multiple of the carrier wavelength:
    /// `sigma = sigma_factor / frequency`.
    pub sigma_factor: f64,
}

impl GaborBankConfig {
    /// Validates the configuration invariants.
    pub fn validate(&self) -> Result<()> {
        if self.orientations == 0 {
            return Err(Error::config("orientation count must be >= 1"));
        }
        if self.frequencies.is_empty() {
            return Err(Error::config("frequency list must be non-empty"));
        }
        for &f in &self.frequencies {
            if !(f.is_finite() && f > 0.0 && f <= 0.5) {
                return Err(Error::config(format!("frequency {f} outside (0, 0.5]")));
            }
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::config("kernel size must be odd and positive"));
        }
        if !(self.sigma_factor.is_finite() && self.sigma_factor > 0.0) {
            return Err(Error::config("sigma factor must be positive"));
        }
        Ok(())
    }
}

impl Default for GaborBankConfig {
    /// Six orientations x three frequencies = 18 kernels of 21x21 pixels,
    /// spanning streak widths of roughly 1-10 pixels.
    fn default() -> Self {
        GaborBankConfig {
            orientations: 6,
            frequencies: vec![0.10, 0.20, 0.35],
            kernel_size: 21,
            sigma_factor: 0.56,
        }
    }
}

/// One real Gabor kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborKernel {
    /// Carrier orientation in radians, in `[0, pi)`.
    pub orientation: f64,
    /// Carrier frequency in cycles per pixel.
    pub frequency: f64,
    /// Side length in pixels (odd).
    pub size: usize,
    /// Row-major weights, zero-mean.
    pub weights: Vec<f64>,
}

/// Builds the kernel list: orientations vary fastest in output order
/// `(orientation 0, freq 0), (orientation 0, freq 1), ...`.
pub fn build_gabor_bank(config: &GaborBankConfig) -> Result<Vec<GaborKernel>> {
    config.validate()?;
    let mut kernels = Vec::with_capacity(config.orientations * config.frequencies.len());
    let half = (config.kernel_size / 2) as i64;
    for o in 0..config.orientations {
        let theta = o as f64 * std::f64::consts::PI / config.orientations as f64;
        let (sin_t, cos_t) = theta.sin_cos();
        for &frequency in &config.frequencies {
            let sigma = config.sigma_factor / frequency;
            let two_sigma_sq = 2.0 * sigma * sigma;
            let omega = std::f64::consts::TAU * frequency;
            let mut weights = Vec::with_capacity(config.kernel_size * config.kernel_size);
            for ky in -half..=half {
                for kx in -half..=half {
                    let along = kx as f64 * cos_t + ky as f64 * sin_t;
                    let envelope = (-((kx * kx + ky * ky) as f64) / two_sigma_sq).exp();
                    weights.push(envelope * (omega * along).cos());
                }
            }
            let mean = weights.iter().sum::<f64>() / weights.len() as f64;
            for w in &mut weights {
                *w -= mean;
            }
            kernels.push(GaborKernel {
                orientation: theta,
                frequency,
                size: config.kernel_size,
                weights,
            });
        }
    }
    Ok(kernels)
}

/// Rectified responses of every bank kernel over one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    /// Raster geometry.
    pub spec: GridSpec,
    /// One row-major plane per kernel, values finite and >= 0.
    pub planes: Vec<Vec<f64>>,
}

impl FeatureStack {
    /// Number of feature planes.
    pub fn dim(&self) -> usize {
        self.planes.len()
    }

    /// Feature vector at `(x, y)`.
    pub fn vector(&self, x: usize, y: usize) -> Vec<f64> {
        let i = self.spec.index(x, y);
        self.planes.iter().map(|p| p[i]).collect()
    }
}

/// Side length of the coarse activity tiles used to skip all-zero input
/// areas. Any kernel half-width up to this value is covered by dilating the
/// activity mask by one tile, so skipped outputs are exact zeros.
const ACTIVITY_TILE: usize = 32;

fn activity_tiles(real: &[f64], spec: &GridSpec) -> (Vec<bool>, usize, usize) {
    let tiles_x = spec.width.div_ceil(ACTIVITY_TILE);
    let tiles_y = spec.height.div_ceil(ACTIVITY_TILE);
    let mut active = vec![false; tiles_x * tiles_y];
    for y in 0..spec.height {
        let ty = y / ACTIVITY_TILE;
        for x in 0..spec.width {
            if real[y * spec.width + x] != 0.0 {
                active[ty * tiles_x + x / ACTIVITY_TILE] = true;
            }
        }
    }
    // Dilate by one tile in all directions so kernel reach stays inside.
    let mut dilated = vec![false; active.len()];
    for ty in 0..tiles_y as i64 {
        for tx in 0..tiles_x as i64 {
            'scan: for dy in -1..=1 {
                for dx in -1..=1 {
                    let ny = ty + dy;
                    let nx = tx + dx;
                    if ny >= 0 && nx >= 0 && (ny as usize) < tiles_y && (nx as usize) < tiles_x {
                        if active[ny as usize * tiles_x + nx as usize] {
                            dilated[ty as usize * tiles_x + tx as usize] = true;
                            break 'scan;
                        }
                    }
                }
            }
        }
    }
    (dilated, tiles_x, tiles_y)
}

fn correlate_plane(
    padded: &[f64],
    padded_width: usize,
    spec: &GridSpec,
    kernel: &GaborKernel,
    pad: usize,
    tiles: &(Vec<bool>, usize, usize),
) -> Vec<f64> {
    let size = kernel.size;
    let shift = pad - size / 2;
    let (active, tiles_x, _) = tiles;
    let mut plane = vec![0.0; spec.len()];
    for ty in 0..spec.height.div_ceil(ACTIVITY_TILE) {
        let y_end = ((ty + 1) * ACTIVITY_TILE).min(spec.height);
        for tx in 0..spec.width.div_ceil(ACTIVITY_TILE) {
            if !active[ty * tiles_x + tx] {
                continue;
            }
            let x_end = ((tx + 1) * ACTIVITY_TILE).min(spec.width);
            for y in ty * ACTIVITY_TILE..y_end {
                for x in tx * ACTIVITY_TILE..x_end {
                    let mut acc = 0.0;
                    for ky in 0..size {
                        let row = (y + ky + shift) * padded_width + x + shift;
                        let prow = &padded[row..row + size];
                        let krow = &kernel.weights[ky * size..(ky + 1) * size];
                        for kx in 0..size {
                            acc += prow[kx] * krow[kx];
                        }
                    }
                    plane[y * spec.width + x] = acc.abs();
                }
            }
        }
    }
    plane
}

/// Maps a frame to physical units: dBZ per label, 0 for invalid pixels.
pub fn frame_to_real(frame: &RadarFrame, scale: &ReflectivityScale) -> Result<Vec<f64>> {
    let table = scale.values();
    Ok(frame
        .labels
        .iter()
        .zip(&frame.valid)
        .map(|(&l, &v)| if v { table[l as usize] } else { 0.0 })
        .collect())
}

/// Correlates the frame (as dBZ) with every kernel and rectifies: plane `i`
/// holds `|frame ⊛ kernel_i|` with zero padding at the borders.
pub fn compute_feature_stack(
    frame: &RadarFrame,
    scale: &ReflectivityScale,
    bank: &[GaborKernel],
) -> Result<FeatureStack> {
    if bank.is_empty() {
        return Err(Error::domain("gabor bank is empty"));
    }
    let max_half = bank.iter().map(|k| k.size / 2).max().unwrap();
    if max_half > ACTIVITY_TILE {
        return Err(Error::domain("kernel larger than activity tile"));
    }
    let spec = frame.spec;
    let real = frame_to_real(frame, scale)?;
    let tiles = activity_tiles(&real, &spec);

    let pad = max_half;
    let padded_width = spec.width + 2 * pad;
    let padded_height = spec.height + 2 * pad;
    let mut padded = vec![0.0; padded_width * padded_height];
    for y in 0..spec.height {
        let src = y * spec.width;
        let dst = (y + pad) * padded_width + pad;
        padded[dst..dst + spec.width].copy_from_slice(&real[src..src + spec.width]);
    }

    #[cfg(feature = "parallel")]
    let planes: Vec<Vec<f64>> = bank
        .par_iter()
        .map(|k| correlate_plane(&padded, padded_width, &spec, k, pad, &tiles))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let planes: Vec<Vec<f64>> = bank
        .iter()
        .map(|k| correlate_plane(&padded, padded_width, &spec, k, pad, &tiles))
        .collect();

    Ok(FeatureStack { spec, planes })
}
