//! Radial spoke detection. Interference artifacts radiate from a station
//! center, so in that station's polar raster they become near-vertical lines:
//! long in radius, a column or two wide in azimuth. Closing bridges radial
//! dropouts, then connected components are filtered by extent, width and
//! elongation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MaskRole, PixelMask, RadarFrame, Station, StructuringElement};
use crate::morph::{morph_polar, MorphOp};
use crate::polar::{from_polar, mask_to_polar_forward, PolarGrid, DEFAULT_RADIAL_BIN_KM, DEFAULT_THETA_BINS};
use crate::regions::{connected_components_polar, Connectivity};

/// Tuning for the polar spoke detector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SpokeDetectorConfig {
    /// Minimum radial length of a component, in kilometres.
    pub min_radial_extent_km: f64,
    /// Maximum azimuthal width of a component, in polar columns.
    pub max_angular_width_cols: usize,
    /// Minimum ratio of radial bins to azimuthal columns.
    pub elongation_ratio: f64,
    /// Structuring element for the radial closing.
    pub closing_se: StructuringElement,
    /// Radial bin width of the polar raster, in kilometres.
    pub radial_bin_km: f64,
    /// Number of azimuthal columns in the polar raster.
    pub theta_bins: usize,
}

impl Default for SpokeDetectorConfig {
    fn default() -> Self {
        SpokeDetectorConfig {
            min_radial_extent_km: 30.0,
            max_angular_width_cols: 6,
            elongation_ratio: 5.0,
            closing_se: StructuringElement::vertical_line(5).expect("static element"),
            radial_bin_km: DEFAULT_RADIAL_BIN_KM,
            theta_bins: DEFAULT_THETA_BINS,
        }
    }
}

impl SpokeDetectorConfig {
    /// Checks that every threshold is usable.
    pub fn validate(&self) -> Result<()> {
        if !(self.min_radial_extent_km.is_finite() && self.min_radial_extent_km > 0.0) {
            return Err(Error::config("minimum radial extent must be positive"));
        }
        if self.max_angular_width_cols == 0 {
            return Err(Error::config("maximum angular width must be at least one column"));
        }
        if !(self.elongation_ratio.is_finite() && self.elongation_ratio > 0.0) {
            return Err(Error::config("elongation ratio must be positive"));
        }
        if !(self.radial_bin_km.is_finite() && self.radial_bin_km > 0.0) {
            return Err(Error::config("radial bin width must be positive"));
        }
        if self.theta_bins == 0 {
            return Err(Error::config("azimuthal bin count must be positive"));
        }
        Ok(())
    }

    /// Number of radial bins needed to cover a station's range.
    fn r_bins(&self, range_km: f64) -> usize {
        (range_km / self.radial_bin_km).ceil() as usize
    }
}

/// Detects radial spokes from one station. Precipitation is projected into
/// the station's polar raster (forward pixel-to-bin mapping that spans each
/// pixel's radial footprint, so spokes thinner than a pixel still form
/// contiguous vertical runs), closed radially, and components that are long,
/// narrow and elongated are back-projected. The result only ever contains
/// precipitation pixels.
pub fn detect_spokes(
    frame: &RadarFrame,
    station: &Station,
    config: &SpokeDetectorConfig,
) -> Result<PixelMask> {
    config.validate()?;
    let precip = frame.precipitation_mask();
    let origin = (station.x, station.y);
    let r_bins = config.r_bins(station.range_km);
    let polar = mask_to_polar_forward(&precip, origin, station.range_km, r_bins, config.theta_bins)?;
    let closed = morph_polar(&polar, MorphOp::Close, &config.closing_se, 1)?;
    let mut kept = PolarGrid {
        origin: closed.origin,
        r_bins: closed.r_bins,
        theta_bins: closed.theta_bins,
        dr_km: closed.dr_km,
        values: vec![false; closed.values.len()],
    };
    let mut any = false;
    for component in connected_components_polar(&closed, Connectivity::Eight) {
        let (r_min, t_min, r_max, t_max) = component.bbox;
        let radial_bins = r_max - r_min + 1;
        let angular_cols = t_max - t_min + 1;
        let radial_extent_km = radial_bins as f64 * closed.dr_km;
        if radial_extent_km < config.min_radial_extent_km
            || angular_cols > config.max_angular_width_cols
            || (radial_bins as f64) < config.elongation_ratio * angular_cols as f64
        {
            continue;
        }
        any = true;
        for &(r, t) in &component.bins {
            kept.set(r, t, true);
        }
    }
    if !any {
        return Ok(PixelMask::new(frame.spec, MaskRole::ArtifactCandidate));
    }
    // Closing can light bins over non-precipitation pixels; clamp back.
    from_polar(&kept, &frame.spec, MaskRole::ArtifactCandidate).intersection(&precip)
}
