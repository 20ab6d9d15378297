//! Station-centred ring detection. Because candidate circle centres are fixed
//! at the station positions, the circular Hough accumulator collapses to a
//! 1-D radius histogram per station; a bin is a peak when it holds a salient
//! fraction of the circumference at that radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MaskRole, PixelMask, RadarFrame, RadarStationConfig, Station};

/// Tuning for the radius-histogram ring detector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RingDetectorConfig {
    /// Width of one radius bin, in kilometres.
    pub radius_bin_km: f64,
    /// Fraction of the circumference a bin must hold to count as a peak.
    pub occupancy_threshold: f64,
    /// Radii closer to the station than this are never peaks (ground clutter).
    pub min_radius_km: f64,
    /// Upper radius limit, clamped to each station's range.
    pub max_radius_km: f64,
}

impl Default for RingDetectorConfig {
    fn default() -> Self {
        RingDetectorConfig {
            radius_bin_km: 1.0,
            occupancy_threshold: 0.15,
            min_radius_km: 5.0,
            max_radius_km: 225.0,
        }
    }
}

impl RingDetectorConfig {
    /// Checks that every threshold is usable.
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_bin_km.is_finite() && self.radius_bin_km > 0.0) {
            return Err(Error::config("radius bin width must be positive"));
        }
        if !(self.occupancy_threshold > 0.0 && self.occupancy_threshold <= 1.0) {
            return Err(Error::config("occupancy threshold must be in (0, 1]"));
        }
        if !(self.min_radius_km.is_finite() && self.min_radius_km >= 0.0) {
            return Err(Error::config("minimum radius must be non-negative"));
        }
        if !(self.max_radius_km.is_finite() && self.min_radius_km < self.max_radius_km) {
            return Err(Error::config("minimum radius must lie below maximum radius"));
        }
        Ok(())
    }

    /// Number of radius bins for one station.
    fn bins(&self, station: &Station) -> usize {
        let r_max = self.max_radius_km.min(station.range_km);
        (r_max / self.radius_bin_km).ceil() as usize
    }
}

/// Counts precipitation pixels per radius bin around one station.
pub fn radius_histogram(
    frame: &RadarFrame,
    station: &Station,
    config: &RingDetectorConfig,
) -> Result<Vec<usize>> {
    config.validate()?;
    let bins = config.bins(station);
    let mut counts = vec![0usize; bins];
    let spec = &frame.spec;
    // Limit the scan to the station's reach.
    let r_max_px = config.max_radius_km.min(station.range_km) / spec.cell_km;
    let x0 = ((station.x - r_max_px).floor().max(0.0)) as usize;
    let x1 = ((station.x + r_max_px).ceil().min((spec.width - 1) as f64)) as usize;
    let y0 = ((station.y - r_max_px).floor().max(0.0)) as usize;
    let y1 = ((station.y + r_max_px).ceil().min((spec.height - 1) as f64)) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if !(frame.is_valid(x, y) && frame.label(x, y) > 0) {
                continue;
            }
            let dx = x as f64 - station.x;
            let dy = y as f64 - station.y;
            let r_km = (dx * dx + dy * dy).sqrt() * spec.cell_km;
            let bin = (r_km / config.radius_bin_km).floor() as usize;
            if bin < bins {
                counts[bin] += 1;
            }
        }
    }
    Ok(counts)
}

/// Bins whose count reaches `occupancy_threshold` of the circumference at the
/// bin-centre radius, expressed in cells.
fn peak_bins(counts: &[usize], config: &RingDetectorConfig, cell_km: f64) -> Vec<usize> {
    let mut peaks = Vec::new();
    for (bin, &count) in counts.iter().enumerate() {
        let r_center = (bin as f64 + 0.5) * config.radius_bin_km;
        if r_center < config.min_radius_km {
            continue;
        }
        let circumference_cells = std::f64::consts::TAU * r_center / cell_km;
        if count as f64 >= config.occupancy_threshold * circumference_cells {
            peaks.push(bin);
        }
    }
    peaks
}

/// Detects station-centred rings: every precipitation pixel whose radius bin
/// lies within one bin of a histogram peak is flagged. The result only ever
/// contains precipitation pixels.
pub fn detect_rings(
    frame: &RadarFrame,
    stations: &RadarStationConfig,
    config: &RingDetectorConfig,
) -> Result<PixelMask> {
    config.validate()?;
    stations.validate(&frame.spec)?;
    let mut mask = PixelMask::new(frame.spec, MaskRole::ArtifactCandidate);
    for station in &stations.stations {
        let counts = radius_histogram(frame, station, config)?;
        let peaks = peak_bins(&counts, config, frame.spec.cell_km);
        if peaks.is_empty() {
            continue;
        }
        let mut in_peak = vec![false; counts.len()];
        for &p in &peaks {
            // Annulus slack of one bin on each side.
            for b in p.saturating_sub(1)..=(p + 1).min(counts.len() - 1) {
                in_peak[b] = true;
            }
        }
        let spec = &frame.spec;
        let r_max_px = config.max_radius_km.min(station.range_km) / spec.cell_km;
        let x0 = ((station.x - r_max_px).floor().max(0.0)) as usize;
        let x1 = ((station.x + r_max_px).ceil().min((spec.width - 1) as f64)) as usize;
        let y0 = ((station.y - r_max_px).floor().max(0.0)) as usize;
        let y1 = ((station.y + r_max_px).ceil().min((spec.height - 1) as f64)) as usize;
        for y in y0..=y1 {
            for x in x0..=x1 {
                if !(frame.is_valid(x, y) && frame.label(x, y) > 0) {
                    continue;
                }
                let dx = x as f64 - station.x;
                let dy = y as f64 - station.y;
                let r_km = (dx * dx + dy * dy).sqrt() * spec.cell_km;
                let bin = (r_km / config.radius_bin_km).floor() as usize;
                if bin < in_peak.len() && in_peak[bin] {
                    mask.set(x, y, true);
                }
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn one_station(spec: GridSpec, range_km: f64) -> (RadarStationConfig, Station) {
        let station = Station { x: (spec.width / 2) as f64, y: (spec.height / 2) as f64, range_km };
        (RadarStationConfig { stations: vec![station] }, station)
    }

    /// Places `count` single pixels evenly around a circle; returns them.
    fn circle_pixels(
        frame: &mut RadarFrame,
        center: (f64, f64),
        radius: f64,
        count: usize,
    ) -> Vec<(usize, usize)> {
        let mut placed = Vec::new();
        for j in 0..count {
            let phi = j as f64 / count as f64 * std::f64::consts::TAU;
            let x = (center.0 + radius * phi.cos()).round() as usize;
            let y = (center.1 + radius * phi.sin()).round() as usize;
            frame.set_label(x, y, 4).unwrap();
            placed.push((x, y));
        }
        placed.sort_unstable();
        placed.dedup();
        placed
    }

    #[test]
    fn empty_frame_yields_empty_mask() {
        let spec = GridSpec::new(100, 100, 1.0).unwrap();
        let (stations, _) = one_station(spec, 45.0);
        let frame = RadarFrame::new(spec, 0);
        let mask = detect_rings(&frame, &stations, &RingDetectorConfig::default()).unwrap();
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn sparse_circle_is_fully_masked_at_low_threshold() {
        let spec = GridSpec::new(300, 300, 1.0).unwrap();
        let (stations, station) = one_station(spec, 140.0);
        let mut frame = RadarFrame::new(spec, 0);
        let pixels = circle_pixels(&mut frame, (station.x, station.y), 120.0, 40);

        let config = RingDetectorConfig { occupancy_threshold: 0.02, ..Default::default() };
        // Rounding to pixel centres splits the circle across bins 119/120.
        let counts = radius_histogram(&frame, &station, &config).unwrap();
        let peaks = peak_bins(&counts, &config, spec.cell_km);
        assert!(!peaks.is_empty());
        assert!(peaks.iter().all(|&p| (119..=120).contains(&p)), "peaks {peaks:?}");

        let mask = detect_rings(&frame, &stations, &config).unwrap();
        assert!(pixels.iter().all(|&(x, y)| mask.get(x, y)));
        assert_eq!(mask.count(), pixels.len());
    }

    #[test]
    fn default_threshold_ignores_the_sparse_circle() {
        let spec = GridSpec::new(300, 300, 1.0).unwrap();
        let (stations, _) = one_station(spec, 140.0);
        let mut frame = RadarFrame::new(spec, 0);
        circle_pixels(&mut frame, (150.0, 150.0), 120.0, 40);
        // 40 pixels over a 757-cell circumference is 5% occupancy.
        let mask = detect_rings(&frame, &stations, &RingDetectorConfig::default()).unwrap();
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn uniform_random_coverage_never_peaks() {
        let spec = GridSpec::new(200, 200, 1.0).unwrap();
        let (stations, _) = one_station(spec, 90.0);
        let config = RingDetectorConfig::default();
        for seed in 0..100u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut frame = RadarFrame::new(spec, 0);
            for y in 0..spec.height {
                for x in 0..spec.width {
                    if rng.random_bool(0.01) {
                        frame.set_label(x, y, 2).unwrap();
                    }
                }
            }
            let mask = detect_rings(&frame, &stations, &config).unwrap();
            assert_eq!(mask.count(), 0, "seed {seed} produced a spurious ring");
        }
    }

    #[test]
    fn full_circle_below_minimum_radius_is_ignored() {
        let spec = GridSpec::new(100, 100, 1.0).unwrap();
        let (stations, _) = one_station(spec, 45.0);
        let mut frame = RadarFrame::new(spec, 0);
        circle_pixels(&mut frame, (50.0, 50.0), 3.0, 30);
        let mask = detect_rings(&frame, &stations, &RingDetectorConfig::default()).unwrap();
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn histogram_matches_brute_force_binning() {
        let spec = GridSpec::new(64, 64, 1.0).unwrap();
        let station = Station { x: 30.0, y: 33.0, range_km: 40.0 };
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..spec.height {
            for x in 0..spec.width {
                if rng.random_bool(0.3) {
                    frame.set_label(x, y, rng.random_range(1..=13)).unwrap();
                }
            }
        }
        let config = RingDetectorConfig::default();
        let counts = radius_histogram(&frame, &station, &config).unwrap();

        // Independent route: raw per-pixel distance binning over the frame.
        let mut oracle = vec![0usize; counts.len()];
        for y in 0..64usize {
            for x in 0..64usize {
                if frame.label(x, y) == 0 {
                    continue;
                }
                let dx = x as f64 - 30.0;
                let dy = y as f64 - 33.0;
                let bin = (dx * dx + dy * dy).sqrt().floor() as usize;
                if bin < oracle.len() {
                    oracle[bin] += 1;
                }
            }
        }
        assert_eq!(counts, oracle);
    }

    #[test]
    fn bad_config_is_rejected() {
        let spec = GridSpec::new(40, 40, 1.0).unwrap();
        let (stations, _) = one_station(spec, 18.0);
        let frame = RadarFrame::new(spec, 0);
        for bad in [
            RingDetectorConfig { occupancy_threshold: 0.0, ..Default::default() },
            RingDetectorConfig { radius_bin_km: -1.0, ..Default::default() },
            RingDetectorConfig { min_radius_km: 300.0, ..Default::default() },
        ] {
            assert!(matches!(detect_rings(&frame, &stations, &bad), Err(Error::Config(_))));
        }
    }
}
