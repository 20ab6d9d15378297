//! Orographic shadow sectors. Terrain blocks a station's beam over fixed
//! azimuth ranges, so those polar columns stay near-empty in a long-run
//! precipitation sum. Derived sectors are later masked per frame, but only
//! when live precipitation forms a step edge at a sector boundary — a shadow
//! with nothing next to it conceals nothing.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MaskRole, PixelMask, RadarFrame, RadarStationConfig, Station};
use crate::io::SumImage;
use crate::polar::{
    mask_to_polar, plane_to_polar, polar_coverage, PolarGrid, DEFAULT_RADIAL_BIN_KM,
    DEFAULT_THETA_BINS,
};
use crate::scale::ReflectivityScale;

/// Radius below which returns are clutter-dominated; sectors start here.
pub const SHADOW_INNER_RADIUS_KM: f64 = 10.0;
/// Minimum run of low-mean polar columns that forms a sector.
pub const MIN_SECTOR_COLUMNS: usize = 2;
/// Default fraction of the column median below which a column counts as shadowed.
pub const DEFAULT_SHADOW_TAU: f64 = 0.2;
/// Polar columns probed on each side of a sector boundary.
const BOUNDARY_PROBE_COLS: i64 = 2;
/// Live-side occupancy must exceed sector-side occupancy by this factor.
const STEP_EDGE_FACTOR: f64 = 3.0;

/// One angular sector shadowed for a station, in station-polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowSector {
    /// Sector start angle in radians, in `[0, 2π)`.
    pub theta_start: f64,
    /// Sector end angle in radians, in `(0, 2π]`; always above `theta_start`.
    pub theta_end: f64,
    /// Inner radius in kilometres.
    pub r_start_km: f64,
    /// Outer radius in kilometres.
    pub r_end_km: f64,
}

impl ShadowSector {
    /// Builds a sector, enforcing ordered, in-range bounds.
    pub fn new(theta_start: f64, theta_end: f64, r_start_km: f64, r_end_km: f64) -> Result<Self> {
        let finite = theta_start.is_finite()
            && theta_end.is_finite()
            && r_start_km.is_finite()
            && r_end_km.is_finite();
        if !finite {
            return Err(Error::domain("sector bounds must be finite"));
        }
        if !(0.0..TAU).contains(&theta_start) || theta_end <= theta_start || theta_end > TAU + 1e-9 {
            return Err(Error::domain(format!(
                "sector angles [{theta_start}, {theta_end}] must satisfy 0 <= start < end <= 2pi"
            )));
        }
        if r_start_km < 0.0 || r_end_km <= r_start_km {
            return Err(Error::domain(format!(
                "sector radii [{r_start_km}, {r_end_km}] must satisfy 0 <= start < end"
            )));
        }
        Ok(ShadowSector { theta_start, theta_end: theta_end.min(TAU), r_start_km, r_end_km })
    }
}

/// Shadow sectors for every station of a composite, indexed like the station
/// list they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowSectorSet {
    /// `per_station[i]` holds station `i`'s sectors, ordered by start angle.
    pub per_station: Vec<Vec<ShadowSector>>,
}

impl ShadowSectorSet {
    /// An empty set for `station_count` stations.
    pub fn new(station_count: usize) -> Self {
        ShadowSectorSet { per_station: vec![Vec::new(); station_count] }
    }

    /// Rebuilds a set from `(station_index, sector)` pairs, rejecting indices
    /// outside the station list and overlapping sectors within one station.
    pub fn from_pairs(station_count: usize, pairs: &[(usize, ShadowSector)]) -> Result<Self> {
        let mut set = ShadowSectorSet::new(station_count);
        for &(station, sector) in pairs {
            if station >= station_count {
                return Err(Error::domain(format!(
                    "sector references station {station}, but only {station_count} exist"
                )));
            }
            set.per_station[station].push(sector);
        }
        for (station, sectors) in set.per_station.iter_mut().enumerate() {
            sectors.sort_by(|a, b| a.theta_start.total_cmp(&b.theta_start));
            for pair in sectors.windows(2) {
                if pair[1].theta_start < pair[0].theta_end - 1e-12 {
                    return Err(Error::domain(format!("station {station} has overlapping sectors")));
                }
            }
        }
        Ok(set)
    }

    /// Flattens to `(station_index, sector)` pairs, station-major.
    pub fn pairs(&self) -> Vec<(usize, ShadowSector)> {
        self.per_station
            .iter()
            .enumerate()
            .flat_map(|(i, sectors)| sectors.iter().map(move |&s| (i, s)))
            .collect()
    }

    /// Total number of sectors across all stations.
    pub fn total(&self) -> usize {
        self.per_station.iter().map(Vec::len).sum()
    }
}

/// Adds one frame into a running precipitation sum: each valid precipitation
/// pixel contributes its dBZ value.
pub fn add_frame(sum: &mut SumImage, frame: &RadarFrame, scale: &ReflectivityScale) -> Result<()> {
    if frame.spec != sum.spec {
        return Err(Error::domain("frame grid does not match the accumulated sum"));
    }
    for i in 0..frame.spec.len() {
        if frame.valid[i] && frame.labels[i] > 0 {
            sum.sums[i] += scale.label_to_dbz(frame.labels[i])?;
        }
    }
    sum.frame_count += 1;
    Ok(())
}

/// Folds a frame stream into a fresh precipitation sum. The stream may be
/// arbitrarily long; only one frame is held at a time beyond the sum itself.
pub fn accumulate_sum<'a>(
    frames: impl IntoIterator<Item = &'a RadarFrame>,
    scale: &ReflectivityScale,
) -> Result<SumImage> {
    let mut iter = frames.into_iter();
    let first = iter.next().ok_or_else(|| Error::domain("cannot accumulate an empty frame stream"))?;
    let mut sum = SumImage { spec: first.spec, sums: vec![0.0; first.spec.len()], frame_count: 0 };
    add_frame(&mut sum, first, scale)?;
    for frame in iter {
        add_frame(&mut sum, frame, scale)?;
    }
    Ok(sum)
}

/// Number of radial bins covering a station's range at the default bin width.
fn station_r_bins(range_km: f64) -> usize {
    (range_km / DEFAULT_RADIAL_BIN_KM).ceil() as usize
}

/// First radial row whose bin center reaches `r_km`.
fn first_row_at(r_km: f64, dr_km: f64) -> usize {
    (r_km / dr_km - 0.5).ceil().max(0.0) as usize
}

/// Last radial row whose bin center stays within `r_km`.
fn last_row_at(r_km: f64, dr_km: f64, r_bins: usize) -> usize {
    ((r_km / dr_km - 0.5).floor().max(0.0) as usize).min(r_bins.saturating_sub(1))
}

/// Derives shadow sectors from a long-run precipitation sum: per station,
/// polar columns whose annulus mean falls below `tau` times the median column
/// form runs; runs of at least [`MIN_SECTOR_COLUMNS`] become sectors spanning
/// [`SHADOW_INNER_RADIUS_KM`] out to the station range.
pub fn derive_shadow_sectors(
    sum: &SumImage,
    stations: &RadarStationConfig,
    tau: f64,
) -> Result<ShadowSectorSet> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::config(format!("tau {tau} must lie in (0, 1)")));
    }
    stations.validate(&sum.spec)?;
    if sum.frame_count == 0 {
        return Err(Error::state("no frames have been accumulated"));
    }
    let inv_count = 1.0 / sum.frame_count as f64;
    let mean: Vec<f64> = sum.sums.iter().map(|s| s * inv_count).collect();

    let mut set = ShadowSectorSet::new(stations.stations.len());
    for (si, station) in stations.stations.iter().enumerate() {
        let origin = (station.x, station.y);
        let r_bins = station_r_bins(station.range_km);
        let polar =
            plane_to_polar(&sum.spec, &mean, origin, station.range_km, r_bins, DEFAULT_THETA_BINS)?;
        let cover =
            polar_coverage(&sum.spec, origin, station.range_km, r_bins, DEFAULT_THETA_BINS)?;
        let r_lo = first_row_at(SHADOW_INNER_RADIUS_KM, polar.dr_km);

        // Mean per column over covered annulus bins; uncovered columns carry
        // no evidence and can never become candidates.
        let cols = polar.theta_bins;
        let mut col_mean = vec![None; cols];
        for t in 0..cols {
            let mut total = 0.0;
            let mut n = 0usize;
            for r in r_lo..r_bins {
                if cover.get(r, t) {
                    total += polar.get(r, t);
                    n += 1;
                }
            }
            if n > 0 {
                col_mean[t] = Some(total / n as f64);
            }
        }
        let mut covered: Vec<f64> = col_mean.iter().filter_map(|m| *m).collect();
        if covered.is_empty() {
            return Err(Error::state(format!("station {si} has no polar coverage")));
        }
        covered.sort_by(f64::total_cmp);
        let median = if covered.len() % 2 == 1 {
            covered[covered.len() / 2]
        } else {
            0.5 * (covered[covered.len() / 2 - 1] + covered[covered.len() / 2])
        };
        if median <= 0.0 {
            return Err(Error::state(format!(
                "station {si}: accumulated sum provides no azimuthal statistics"
            )));
        }

        let candidate: Vec<bool> =
            col_mean.iter().map(|m| m.is_some_and(|v| v < tau * median)).collect();
        let dtheta = polar.dtheta();
        let mut sectors = Vec::new();
        if candidate.iter().all(|&c| c) {
            sectors.push(ShadowSector::new(
                0.0,
                TAU,
                SHADOW_INNER_RADIUS_KM,
                station.range_km,
            )?);
        } else {
            // Circular maximal runs: start where the previous column is clear.
            for start in 0..cols {
                if !candidate[start] || candidate[(start + cols - 1) % cols] {
                    continue;
                }
                let mut len = 1;
                while candidate[(start + len) % cols] {
                    len += 1;
                }
                if len < MIN_SECTOR_COLUMNS {
                    continue;
                }
                let theta_start = start as f64 * dtheta;
                if start + len <= cols {
                    let theta_end = ((start + len) as f64 * dtheta).min(TAU);
                    sectors.push(ShadowSector::new(
                        theta_start,
                        theta_end,
                        SHADOW_INNER_RADIUS_KM,
                        station.range_km,
                    )?);
                } else {
                    // Wrapping run splits at 0/2π into two sectors.
                    sectors.push(ShadowSector::new(
                        theta_start,
                        TAU,
                        SHADOW_INNER_RADIUS_KM,
                        station.range_km,
                    )?);
                    sectors.push(ShadowSector::new(
                        0.0,
                        (start + len - cols) as f64 * dtheta,
                        SHADOW_INNER_RADIUS_KM,
                        station.range_km,
                    )?);
                }
            }
            sectors.sort_by(|a, b| a.theta_start.total_cmp(&b.theta_start));
        }
        set.per_station[si] = sectors;
    }
    Ok(set)
}

/// All pixels inside a sector's angular and radial span around a station.
pub fn sector_footprint(sector: &ShadowSector, station: &Station, spec: &GridSpec) -> PixelMask {
    let mut mask = PixelMask::new(*spec, MaskRole::Shadow);
    let r_max_px = sector.r_end_km / spec.cell_km;
    let x0 = ((station.x - r_max_px).floor().max(0.0)) as usize;
    let x1 = ((station.x + r_max_px).ceil().min((spec.width - 1) as f64)) as usize;
    let y0 = ((station.y - r_max_px).floor().max(0.0)) as usize;
    let y1 = ((station.y + r_max_px).ceil().min((spec.height - 1) as f64)) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - station.x;
            let dy = y as f64 - station.y;
            let r_km = (dx * dx + dy * dy).sqrt() * spec.cell_km;
            if r_km < sector.r_start_km || r_km > sector.r_end_km {
                continue;
            }
            let theta = dy.atan2(dx).rem_euclid(TAU);
            // theta < 2π always holds, so theta_end == 2π covers a full circle.
            if theta >= sector.theta_start && theta < sector.theta_end {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

/// Fraction of covered bins that hold precipitation, over `rows` and the
/// given (wrapped) columns. Zero when nothing is covered.
fn occupancy(
    polar: &PolarGrid<bool>,
    cover: &PolarGrid<bool>,
    rows: (usize, usize),
    columns: &[i64],
) -> f64 {
    let n = polar.theta_bins as i64;
    let mut set = 0usize;
    let mut covered = 0usize;
    for &c in columns {
        let t = c.rem_euclid(n) as usize;
        for r in rows.0..=rows.1 {
            if cover.get(r, t) {
                covered += 1;
                if polar.get(r, t) {
                    set += 1;
                }
            }
        }
    }
    if covered == 0 {
        0.0
    } else {
        set as f64 / covered as f64
    }
}

/// Masks each sector whose boundary shows a live precipitation step edge in
/// the current frame: over the sector's radial span, occupancy just outside a
/// boundary must be positive and at least [`STEP_EDGE_FACTOR`] times the
/// occupancy just inside. Matching sectors contribute their full footprint.
pub fn current_shadow_mask(
    frame: &RadarFrame,
    sectors: &ShadowSectorSet,
    stations: &RadarStationConfig,
) -> Result<PixelMask> {
    stations.validate(&frame.spec)?;
    if sectors.per_station.len() != stations.stations.len() {
        return Err(Error::domain(format!(
            "sector set covers {} stations, configuration has {}",
            sectors.per_station.len(),
            stations.stations.len()
        )));
    }
    let precip = frame.precipitation_mask();
    let mut out = PixelMask::new(frame.spec, MaskRole::Shadow);
    for (si, station) in stations.stations.iter().enumerate() {
        if sectors.per_station[si].is_empty() {
            continue;
        }
        let origin = (station.x, station.y);
        let r_bins = station_r_bins(station.range_km);
        let polar =
            mask_to_polar(&precip, origin, station.range_km, r_bins, DEFAULT_THETA_BINS)?;
        let cover =
            polar_coverage(&frame.spec, origin, station.range_km, r_bins, DEFAULT_THETA_BINS)?;
        let dtheta = polar.dtheta();
        for sector in &sectors.per_station[si] {
            let r0 = first_row_at(sector.r_start_km, polar.dr_km);
            let r1 = last_row_at(sector.r_end_km, polar.dr_km, r_bins);
            if r0 > r1 {
                continue;
            }
            let cs = (sector.theta_start / dtheta).round() as i64;
            let ce = (sector.theta_end / dtheta).round() as i64;
            let probes = [
                // Start boundary: live side below cs, sector side at/above it.
                ([cs - BOUNDARY_PROBE_COLS, cs - 1], [cs, cs + BOUNDARY_PROBE_COLS - 1]),
                // End boundary mirrors it.
                ([ce, ce + BOUNDARY_PROBE_COLS - 1], [ce - BOUNDARY_PROBE_COLS, ce - 1]),
            ];
            let step_edge = probes.iter().any(|(live_span, sector_span)| {
                let live_cols: Vec<i64> = (live_span[0]..=live_span[1]).collect();
                let sector_cols: Vec<i64> = (sector_span[0]..=sector_span[1]).collect();
                let occ_live = occupancy(&polar, &cover, (r0, r1), &live_cols);
                let occ_sector = occupancy(&polar, &cover, (r0, r1), &sector_cols);
                occ_live > 0.0 && occ_live >= STEP_EDGE_FACTOR * occ_sector
            });
            if step_edge {
                let footprint = sector_footprint(sector, station, &frame.spec);
                out = out.union(&footprint)?.with_role(MaskRole::Shadow);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn test_spec() -> GridSpec {
        GridSpec::new(301, 301, 1.0).unwrap()
    }

    fn test_stations() -> RadarStationConfig {
        RadarStationConfig {
            stations: vec![Station { x: 150.0, y: 150.0, range_km: 140.0 }],
        }
    }

    /// True when the pixel's station-polar angle lies in `[a, b)` radians.
    fn in_angle(x: usize, y: usize, station: &Station, a: f64, b: f64) -> bool {
        let theta = ((y as f64 - station.y).atan2(x as f64 - station.x)).rem_euclid(TAU);
        theta >= a && theta < b
    }

    #[test]
    fn single_frame_sum_equals_its_dbz_map() {
        let spec = GridSpec::new(4, 3, 1.0).unwrap();
        let scale = ReflectivityScale::default();
        let mut frame = RadarFrame::new(spec, 0);
        frame.set_label(0, 0, 5).unwrap();
        frame.set_label(2, 1, 13).unwrap();
        frame.set_label(3, 2, 1).unwrap();
        frame.set_invalid(1, 0);
        let sum = accumulate_sum([&frame], &scale).unwrap();
        assert_eq!(sum.frame_count, 1);
        for y in 0..3 {
            for x in 0..4 {
                let expect = if frame.is_valid(x, y) {
                    scale.label_to_dbz(frame.label(x, y)).unwrap()
                } else {
                    0.0
                };
                assert_eq!(sum.sums[spec.index(x, y)], expect);
            }
        }
    }

    #[test]
    fn repeated_frame_scales_linearly() {
        let spec = GridSpec::new(4, 3, 1.0).unwrap();
        let scale = ReflectivityScale::default();
        let mut frame = RadarFrame::new(spec, 0);
        frame.set_label(1, 1, 7).unwrap();
        let once = accumulate_sum([&frame], &scale).unwrap();
        let thrice = accumulate_sum([&frame, &frame, &frame], &scale).unwrap();
        assert_eq!(thrice.frame_count, 3);
        for i in 0..spec.len() {
            assert_eq!(thrice.sums[i], 3.0 * once.sums[i]);
        }
    }

    #[test]
    fn mismatched_grid_and_empty_stream_are_domain_errors() {
        let scale = ReflectivityScale::default();
        let a = RadarFrame::new(GridSpec::new(4, 3, 1.0).unwrap(), 0);
        let b = RadarFrame::new(GridSpec::new(3, 4, 1.0).unwrap(), 0);
        assert!(matches!(accumulate_sum([&a, &b], &scale), Err(Error::Domain(_))));
        assert!(matches!(accumulate_sum([], &scale), Err(Error::Domain(_))));
    }

    #[test]
    fn zeroed_sector_is_recovered_within_one_column() {
        let spec = test_spec();
        let stations = test_stations();
        let station = &stations.stations[0];
        let scale = ReflectivityScale::default();
        let (a, b) = (40f64.to_radians(), 60f64.to_radians());
        // 50 frames, every one empty inside the sector; labels vary by frame.
        let mut frames = Vec::new();
        for k in 0..50i64 {
            let mut frame = RadarFrame::new(spec, k * 300);
            let label = 1 + (k % 13) as u8;
            for y in 0..spec.height {
                for x in 0..spec.width {
                    if !in_angle(x, y, station, a, b) {
                        frame.set_label(x, y, label).unwrap();
                    }
                }
            }
            frames.push(frame);
        }
        let sum = accumulate_sum(frames.iter(), &scale).unwrap();

        // The zeroed span accumulated exactly nothing.
        for (i, &s) in sum.sums.iter().enumerate() {
            let (x, y) = spec.coords(i);
            if in_angle(x, y, station, a, b) {
                assert_eq!(s, 0.0, "pixel ({x},{y}) inside the gap accumulated {s}");
            }
        }

        let set = derive_shadow_sectors(&sum, &stations, DEFAULT_SHADOW_TAU).unwrap();
        assert_eq!(set.per_station[0].len(), 1, "sectors: {:?}", set.per_station[0]);
        let sector = set.per_station[0][0];
        let dtheta = TAU / DEFAULT_THETA_BINS as f64;
        assert!((sector.theta_start - a).abs() <= dtheta + 1e-12);
        assert!((sector.theta_end - b).abs() <= dtheta + 1e-12);
        assert_eq!(sector.r_start_km, SHADOW_INNER_RADIUS_KM);
        assert_eq!(sector.r_end_km, station.range_km);

        // Frame order must not change the derived sectors.
        let mut reversed: Vec<&RadarFrame> = frames.iter().collect();
        reversed.reverse();
        let sum_rev = accumulate_sum(reversed, &scale).unwrap();
        assert_eq!(derive_shadow_sectors(&sum_rev, &stations, DEFAULT_SHADOW_TAU).unwrap(), set);
    }

    #[test]
    fn uniform_sum_yields_no_sectors() {
        let spec = test_spec();
        let stations = test_stations();
        let scale = ReflectivityScale::default();
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..spec.height {
            for x in 0..spec.width {
                frame.set_label(x, y, 6).unwrap();
            }
        }
        let sum = accumulate_sum([&frame], &scale).unwrap();
        let set = derive_shadow_sectors(&sum, &stations, DEFAULT_SHADOW_TAU).unwrap();
        assert_eq!(set.total(), 0);
    }

    #[test]
    fn two_gaps_yield_two_disjoint_sectors() {
        let spec = test_spec();
        let stations = test_stations();
        let station = &stations.stations[0];
        let scale = ReflectivityScale::default();
        let spans =
            [(40f64.to_radians(), 60f64.to_radians()), (180f64.to_radians(), 195f64.to_radians())];
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..spec.height {
            for x in 0..spec.width {
                if spans.iter().all(|&(a, b)| !in_angle(x, y, station, a, b)) {
                    frame.set_label(x, y, 4).unwrap();
                }
            }
        }
        let sum = accumulate_sum([&frame], &scale).unwrap();
        let set = derive_shadow_sectors(&sum, &stations, DEFAULT_SHADOW_TAU).unwrap();
        let sectors = &set.per_station[0];
        assert_eq!(sectors.len(), 2, "{sectors:?}");
        assert!(sectors[0].theta_end <= sectors[1].theta_start);
        let dtheta = TAU / DEFAULT_THETA_BINS as f64;
        for (sector, (a, b)) in sectors.iter().zip(spans) {
            assert!((sector.theta_start - a).abs() <= dtheta + 1e-12);
            assert!((sector.theta_end - b).abs() <= dtheta + 1e-12);
        }
    }

    #[test]
    fn all_zero_sum_is_a_state_error() {
        let spec = test_spec();
        let stations = test_stations();
        let sum = SumImage { spec, sums: vec![0.0; spec.len()], frame_count: 50 };
        assert!(matches!(
            derive_shadow_sectors(&sum, &stations, DEFAULT_SHADOW_TAU),
            Err(Error::State(_))
        ));
        let empty = SumImage { spec, sums: vec![1.0; spec.len()], frame_count: 0 };
        assert!(matches!(
            derive_shadow_sectors(&empty, &stations, DEFAULT_SHADOW_TAU),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn tau_outside_unit_interval_is_rejected() {
        let spec = test_spec();
        let sum = SumImage { spec, sums: vec![1.0; spec.len()], frame_count: 1 };
        for tau in [0.0, 1.0, -0.3, f64::NAN] {
            assert!(matches!(
                derive_shadow_sectors(&sum, &test_stations(), tau),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn footprint_matches_angular_and_radial_predicate() {
        let station = Station { x: 150.0, y: 150.0, range_km: 140.0 };
        let sector = ShadowSector::new(0.0, std::f64::consts::FRAC_PI_2, 10.0, 50.0).unwrap();
        let spec = test_spec();
        let footprint = sector_footprint(&sector, &station, &spec);
        // Quarter annulus area: pi/4 * (50^2 - 10^2) ~ 1885 px.
        let expected = std::f64::consts::PI / 4.0 * (2500.0 - 100.0);
        assert!((footprint.count() as f64 - expected).abs() < 0.03 * expected);
        for (x, y) in footprint.iter_true() {
            let dx = x as f64 - station.x;
            let dy = y as f64 - station.y;
            let r = (dx * dx + dy * dy).sqrt();
            assert!((10.0..=50.0).contains(&r));
            assert!(in_angle(x, y, &station, 0.0, std::f64::consts::FRAC_PI_2));
        }
    }

    #[test]
    fn empty_frame_masks_nothing() {
        let spec = test_spec();
        let stations = test_stations();
        let sector = ShadowSector::new(40f64.to_radians(), 60f64.to_radians(), 10.0, 140.0).unwrap();
        let set = ShadowSectorSet::from_pairs(1, &[(0, sector)]).unwrap();
        let frame = RadarFrame::new(spec, 0);
        let mask = current_shadow_mask(&frame, &set, &stations).unwrap();
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn storm_truncated_at_boundary_masks_the_full_footprint() {
        let spec = test_spec();
        let stations = test_stations();
        let station = &stations.stations[0];
        let sector = ShadowSector::new(40f64.to_radians(), 60f64.to_radians(), 10.0, 140.0).unwrap();
        let set = ShadowSectorSet::from_pairs(1, &[(0, sector)]).unwrap();
        // Storm fills [60°, 100°): it abuts the sector's end boundary.
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..spec.height {
            for x in 0..spec.width {
                if in_angle(x, y, station, 60f64.to_radians(), 100f64.to_radians()) {
                    frame.set_label(x, y, 5).unwrap();
                }
            }
        }
        let mask = current_shadow_mask(&frame, &set, &stations).unwrap();
        let footprint = sector_footprint(&sector, station, &spec);
        assert_eq!(mask.bits, footprint.bits);
        assert!(mask.count() > 0);
    }

    #[test]
    fn distant_storm_and_sector_filling_storm_mask_nothing() {
        let spec = test_spec();
        let stations = test_stations();
        let station = &stations.stations[0];
        let sector = ShadowSector::new(40f64.to_radians(), 60f64.to_radians(), 10.0, 140.0).unwrap();
        let set = ShadowSectorSet::from_pairs(1, &[(0, sector)]).unwrap();

        // Far from both boundaries: no evidence.
        let mut far = RadarFrame::new(spec, 0);
        for y in 0..spec.height {
            for x in 0..spec.width {
                if in_angle(x, y, station, 200f64.to_radians(), 250f64.to_radians()) {
                    far.set_label(x, y, 5).unwrap();
                }
            }
        }
        assert_eq!(current_shadow_mask(&far, &set, &stations).unwrap().count(), 0);

        // Precipitation across the sector itself: occupied side is the sector
        // side, so no step edge points into it.
        let mut inside = RadarFrame::new(spec, 0);
        for y in 0..spec.height {
            for x in 0..spec.width {
                if in_angle(x, y, station, 40f64.to_radians(), 60f64.to_radians()) {
                    inside.set_label(x, y, 5).unwrap();
                }
            }
        }
        assert_eq!(current_shadow_mask(&inside, &set, &stations).unwrap().count(), 0);
    }

    #[test]
    fn station_count_mismatch_is_a_domain_error() {
        let spec = test_spec();
        let frame = RadarFrame::new(spec, 0);
        let set = ShadowSectorSet::new(3);
        assert!(matches!(
            current_shadow_mask(&frame, &set, &test_stations()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sector_validation_rejects_malformed_bounds() {
        assert!(ShadowSector::new(1.0, 0.5, 10.0, 20.0).is_err());
        assert!(ShadowSector::new(-0.1, 0.5, 10.0, 20.0).is_err());
        assert!(ShadowSector::new(0.0, 7.0, 10.0, 20.0).is_err());
        assert!(ShadowSector::new(0.0, 1.0, 30.0, 20.0).is_err());
        assert!(ShadowSector::new(0.0, TAU, 10.0, 20.0).is_ok());
        let overlapping = [
            (0usize, ShadowSector::new(0.1, 0.6, 10.0, 20.0).unwrap()),
            (0usize, ShadowSector::new(0.5, 0.9, 10.0, 20.0).unwrap()),
        ];
        assert!(ShadowSectorSet::from_pairs(1, &overlapping).is_err());
    }
}
