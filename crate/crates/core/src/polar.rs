//! Polar resampling around a station center.
//!
//! A [`PolarGrid`] stores one value per (radius, azimuth) bin: row `r` spans
//! radii `[r*dr, (r+1)*dr)` kilometres, column `t` spans azimuths
//! `[t*dtheta, (t+1)*dtheta)` with `dtheta = 2*pi/theta_bins`. Azimuth 0
//! points along +x and grows toward +y, so a radial structure appears as a
//! vertical line (constant column) in polar space.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MaskRole, PixelMask, RadarFrame};

/// Default radial bin width in kilometres (450 bins for a 225 km range).
pub const DEFAULT_RADIAL_BIN_KM: f64 = 0.5;

/// Default azimuthal bin count (0.5 degrees per column).
pub const DEFAULT_THETA_BINS: usize = 720;

/// Raster in (radius, azimuth) coordinates around an origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid<T> {
    /// Origin in pixel units on the source grid.
    pub origin: (f64, f64),
    /// Number of radial bins (rows).
    pub r_bins: usize,
    /// Number of azimuthal bins (columns).
    pub theta_bins: usize,
    /// Radial bin width in kilometres.
    pub dr_km: f64,
    /// Row-major values, index `r * theta_bins + t`.
    pub values: Vec<T>,
}

impl<T: Copy> PolarGrid<T> {
    /// Value at radial bin `r`, azimuthal bin `t`.
    #[inline]
    pub fn get(&self, r: usize, t: usize) -> T {
        self.values[r * self.theta_bins + t]
    }

    /// Sets the value at radial bin `r`, azimuthal bin `t`.
    #[inline]
    pub fn set(&mut self, r: usize, t: usize, value: T) {
        self.values[r * self.theta_bins + t] = value;
    }

    /// Azimuthal bin width in radians.
    #[inline]
    pub fn dtheta(&self) -> f64 {
        std::f64::consts::TAU / self.theta_bins as f64
    }

    /// Maximum radius covered, in kilometres.
    #[inline]
    pub fn r_max_km(&self) -> f64 {
        self.r_bins as f64 * self.dr_km
    }
}

fn check_polar_args(origin: (f64, f64), r_max_km: f64, r_bins: usize, theta_bins: usize) -> Result<()> {
    if !(origin.0.is_finite() && origin.1.is_finite()) {
        return Err(Error::domain("polar origin must be finite"));
    }
    if r_bins == 0 || theta_bins == 0 {
        return Err(Error::domain("polar bin counts must be positive"));
    }
    if !r_max_km.is_finite() || r_max_km <= 0.0 {
        return Err(Error::domain("polar range must be a positive finite length"));
    }
    Ok(())
}

/// Samples a cartesian raster into polar bins by nearest-neighbour lookup at
/// each bin center. Bins whose back-projection leaves the grid receive
/// `default`.
fn sample_polar<T: Copy>(
    spec: &GridSpec,
    origin: (f64, f64),
    r_max_km: f64,
    r_bins: usize,
    theta_bins: usize,
    default: T,
    get: impl Fn(usize, usize) -> T,
) -> PolarGrid<T> {
    let dr = r_max_km / r_bins as f64;
    let dtheta = std::f64::consts::TAU / theta_bins as f64;
    let mut values = vec![default; r_bins * theta_bins];
    for r in 0..r_bins {
        let radius_px = (r as f64 + 0.5) * dr / spec.cell_km;
        for t in 0..theta_bins {
            let theta = (t as f64 + 0.5) * dtheta;
            let x = origin.0 + radius_px * theta.cos();
            let y = origin.1 + radius_px * theta.sin();
            let xi = x.round() as i64;
            let yi = y.round() as i64;
            if spec.contains(xi, yi) {
                values[r * theta_bins + t] = get(xi as usize, yi as usize);
            }
        }
    }
    PolarGrid { origin, r_bins, theta_bins, dr_km: dr, values }
}

/// Resamples a frame's labels into polar space (out-of-grid bins are 0).
pub fn frame_to_polar(
    frame: &RadarFrame,
    origin: (f64, f64),
    r_max_km: f64,
    r_bins: usize,
    theta_bins: usize,
) -> Result<PolarGrid<u8>> {
    check_polar_args(origin, r_max_km, r_bins, theta_bins)?;
    Ok(sample_polar(&frame.spec, origin, r_max_km, r_bins, theta_bins, 0, |x, y| {
        frame.label(x, y)
    }))
}

/// Resamples a mask into polar space (out-of-grid bins are false).
pub fn mask_to_polar(
    mask: &PixelMask,
    origin: (f64, f64),
    r_max_km: f64,
    r_bins: usize,
    theta_bins: usize,
) -> Result<PolarGrid<bool>> {
    check_polar_args(origin, r_max_km, r_bins, theta_bins)?;
    Ok(sample_polar(&mask.spec, origin, r_max_km, r_bins, theta_bins, false, |x, y| {
        mask.get(x, y)
    }))
}

/// Maps each set pixel into polar bins: the azimuth column containing the
/// pixel's center, and every radial bin the pixel's one-cell footprint
/// overlaps. Radial bins are much finer than a cell, so center-only mapping
/// would shred a thin radial structure into dashes at small radii; spanning
/// the footprint keeps it a contiguous vertical run. The angular footprint is
/// deliberately not spanned — near the origin a single pixel subtends many
/// columns, and smearing it would inflate every structure's angular width.
/// The center's own bin is always included, so back-projecting through
/// [`from_polar`] still covers every in-range source pixel.
pub fn mask_to_polar_forward(
    mask: &PixelMask,
    origin: (f64, f64),
    r_max_km: f64,
    r_bins: usize,
    theta_bins: usize,
) -> Result<PolarGrid<bool>> {
    check_polar_args(origin, r_max_km, r_bins, theta_bins)?;
    let cell_km = mask.spec.cell_km;
    let dr = r_max_km / r_bins as f64;
    let dtheta = std::f64::consts::TAU / theta_bins as f64;
    let mut values = vec![false; r_bins * theta_bins];
    for (x, y) in mask.iter_true() {
        let dx = x as f64 - origin.0;
        let dy = y as f64 - origin.1;
        // Nearest and farthest points of the square [x +/- 0.5, y +/- 0.5]
        // from the origin bound the radial interval the pixel covers.
        let ax = dx.abs();
        let ay = dy.abs();
        let r_near = ((ax - 0.5).max(0.0).hypot((ay - 0.5).max(0.0))) * cell_km;
        let r_far = (ax + 0.5).hypot(ay + 0.5) * cell_km;
        let first = (r_near / dr).floor() as usize;
        if first >= r_bins {
            continue;
        }
        let last = ((r_far / dr).floor() as usize).min(r_bins - 1);
        let mut theta = dy.atan2(dx);
        if theta < 0.0 {
            theta += std::f64::consts::TAU;
        }
        let mut t_bin = (theta / dtheta).floor() as usize;
        if t_bin >= theta_bins {
            t_bin = 0; // theta == 2*pi wraps to the first bin
        }
        for r_bin in first..=last {
            values[r_bin * theta_bins + t_bin] = true;
        }
    }
    Ok(PolarGrid { origin, r_bins, theta_bins, dr_km: dr, values })
}

/// Resamples arbitrary per-pixel reals into polar space (out-of-grid bins 0).
pub fn plane_to_polar(
    spec: &GridSpec,
    plane: &[f64],
    origin: (f64, f64),
    r_max_km: f64,
    r_bins: usize,
    theta_bins: usize,
) -> Result<PolarGrid<f64>> {
    if plane.len() != spec.len() {
        return Err(Error::domain("plane size does not match grid"));
    }
    check_polar_args(origin, r_max_km, r_bins, theta_bins)?;
    Ok(sample_polar(spec, origin, r_max_km, r_bins, theta_bins, 0.0, |x, y| {
        plane[spec.index(x, y)]
    }))
}

/// Marks which polar bins back-project onto the grid at all. Needed to tell
/// "measured empty" apart from "no data" when averaging polar columns.
pub fn polar_coverage(
    spec: &GridSpec,
    origin: (f64, f64),
    r_max_km: f64,
    r_bins: usize,
    theta_bins: usize,
) -> Result<PolarGrid<bool>> {
    check_polar_args(origin, r_max_km, r_bins, theta_bins)?;
    Ok(sample_polar(spec, origin, r_max_km, r_bins, theta_bins, false, |_, _| true))
}

/// Maps a polar binary image back onto the cartesian grid: a pixel is set
/// iff its center falls inside a set bin at radius below the polar range.
pub fn from_polar(polar: &PolarGrid<bool>, spec: &GridSpec, role: MaskRole) -> PixelMask {
    let mut mask = PixelMask::new(*spec, role);
    let dtheta = polar.dtheta();
    let r_max_px = polar.r_max_km() / spec.cell_km;
    let x0 = ((polar.origin.0 - r_max_px).floor().max(0.0)) as usize;
    let x1 = ((polar.origin.0 + r_max_px).ceil().min((spec.width - 1) as f64)) as usize;
    let y0 = ((polar.origin.1 - r_max_px).floor().max(0.0)) as usize;
    let y1 = ((polar.origin.1 + r_max_px).ceil().min((spec.height - 1) as f64)) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - polar.origin.0;
            let dy = y as f64 - polar.origin.1;
            let r_km = (dx * dx + dy * dy).sqrt() * spec.cell_km;
            let r_bin = (r_km / polar.dr_km).floor() as usize;
            if r_bin >= polar.r_bins {
                continue;
            }
            let mut theta = dy.atan2(dx);
            if theta < 0.0 {
                theta += std::f64::consts::TAU;
            }
            let mut t_bin = (theta / dtheta).floor() as usize;
            if t_bin >= polar.theta_bins {
                t_bin = 0; // theta == 2*pi wraps to the first bin
            }
            if polar.get(r_bin, t_bin) {
                mask.set(x, y, true);
            }
        }
    }
    mask
}
