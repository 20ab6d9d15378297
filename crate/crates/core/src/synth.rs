//! Synthetic scenes with exact ground truth. Precipitation is a sum of
//! smoothed random bumps quantized onto the reflectivity scale; satellite
//! channels are monotone functions of the scene's true reflectivity plus
//! optional noise, so similar satellite vectors imply similar labels by
//! construction. Spokes, rings and shadow sectors are injected with
//! pixel-exact truth masks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{sector_footprint, ShadowSector, ShadowSectorSet};
use crate::grid::{GridSpec, MaskRole, PixelMask, RadarFrame, RadarStationConfig};
use crate::io::{MsgFrame, MSG_CHANNEL_COUNT};
use crate::scale::ReflectivityScale;
use crate::texture::TextureClass;

/// RNG stream tweak for satellite noise, so adding noise never perturbs the
/// precipitation field.
const MSG_NOISE_STREAM: u64 = 0x4d53_475f_4e4f_4953;
/// RNG stream tweak for artifact injection.
const INJECT_STREAM: u64 = 0x494e_4a45_4354_5f41;

/// One synthetic interference spoke.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpokeSpec {
    /// Index into the station list.
    pub station: usize,
    /// Central azimuth in degrees (0 along +x, counting toward +y).
    pub theta_deg: f64,
    /// Full angular width in degrees.
    pub width_deg: f64,
    /// Radial extent in kilometres from the station.
    pub extent_km: f64,
}

/// One synthetic ring of isolated echo points.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RingSpec {
    /// Index into the station list.
    pub station: usize,
    /// Circle radius in kilometres.
    pub radius_km: f64,
    /// Number of points placed on the circle.
    pub point_count: usize,
}

/// One synthetic shadow sector, angles in degrees.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShadowSpec {
    /// Index into the station list.
    pub station: usize,
    /// Sector start azimuth in degrees.
    pub theta_start_deg: f64,
    /// Sector end azimuth in degrees.
    pub theta_end_deg: f64,
    /// Inner radius in kilometres.
    pub r_start_km: f64,
    /// Outer radius in kilometres.
    pub r_end_km: f64,
}

/// Full description of a synthetic scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSceneConfig {
    /// Seed fixing the whole scene.
    pub seed: u64,
    /// Raster geometry.
    pub spec: GridSpec,
    /// Stations referenced by the injected geometry.
    pub stations: RadarStationConfig,
    /// Number of precipitation bumps.
    pub blob_count: usize,
    /// Typical bump radius in kilometres.
    pub blob_scale: f64,
    /// Shapes the bump peak-intensity distribution (1 = uniform; larger
    /// favours weak bumps).
    pub intensity_gamma: f64,
    /// Standard deviation of the per-channel satellite noise.
    pub msg_noise_sigma: f64,
    /// Bump centers keep this distance (km) from every station; 0 disables.
    pub station_clearance_km: f64,
    /// Spokes to inject.
    pub spoke_specs: Vec<SpokeSpec>,
    /// Rings to inject.
    pub ring_specs: Vec<RingSpec>,
    /// Shadow sectors to apply.
    pub shadow_specs: Vec<ShadowSpec>,
    /// Timestamp of the generated frame.
    pub timestamp: i64,
}

impl Default for SyntheticSceneConfig {
    fn default() -> Self {
        SyntheticSceneConfig {
            seed: 0,
            spec: GridSpec::default(),
            stations: RadarStationConfig::default(),
            blob_count: 12,
            blob_scale: 12.0,
            intensity_gamma: 1.0,
            msg_noise_sigma: 0.0,
            station_clearance_km: 0.0,
            spoke_specs: Vec::new(),
            ring_specs: Vec::new(),
            shadow_specs: Vec::new(),
            timestamp: 0,
        }
    }
}

impl SyntheticSceneConfig {
    /// Checks scalar ranges and that all injected geometry fits its station.
    pub fn validate(&self) -> Result<()> {
        self.stations.validate(&self.spec)?;
        if !(self.blob_scale.is_finite() && self.blob_scale > 0.0) {
            return Err(Error::config("blob_scale must be positive"));
        }
        if !(self.intensity_gamma.is_finite() && self.intensity_gamma > 0.0) {
            return Err(Error::config("intensity_gamma must be positive"));
        }
        if !(self.msg_noise_sigma.is_finite() && self.msg_noise_sigma >= 0.0) {
            return Err(Error::config("msg_noise_sigma must be non-negative"));
        }
        if !(self.station_clearance_km.is_finite() && self.station_clearance_km >= 0.0) {
            return Err(Error::config("station_clearance_km must be non-negative"));
        }
        for (i, s) in self.spoke_specs.iter().enumerate() {
            let station = self.station(s.station)?;
            if !(s.extent_km.is_finite() && s.extent_km > 0.0) || s.extent_km > station.range_km {
                return Err(Error::config(format!(
                    "spoke {i} extent {} exceeds station range {}",
                    s.extent_km, station.range_km
                )));
            }
            if !(s.width_deg.is_finite() && s.width_deg > 0.0 && s.theta_deg.is_finite()) {
                return Err(Error::config(format!("spoke {i} has degenerate angles")));
            }
        }
        for (i, r) in self.ring_specs.iter().enumerate() {
            let station = self.station(r.station)?;
            if !(r.radius_km.is_finite() && r.radius_km > 0.0) || r.radius_km > station.range_km {
                return Err(Error::config(format!(
                    "ring {i} radius {} exceeds station range {}",
                    r.radius_km, station.range_km
                )));
            }
            if r.point_count == 0 {
                return Err(Error::config(format!("ring {i} has no points")));
            }
        }
        for (i, s) in self.shadow_specs.iter().enumerate() {
            let station = self.station(s.station)?;
            if s.r_end_km > station.range_km {
                return Err(Error::config(format!(
                    "shadow sector {i} reaches beyond the station range"
                )));
            }
        }
        Ok(())
    }

    fn station(&self, index: usize) -> Result<&crate::grid::Station> {
        self.stations
            .stations
            .get(index)
            .ok_or_else(|| Error::config(format!("station index {index} out of range")))
    }

    /// The shadow specs as a validated sector set (radians).
    pub fn shadow_sectors(&self) -> Result<ShadowSectorSet> {
        let pairs: Vec<(usize, ShadowSector)> = self
            .shadow_specs
            .iter()
            .map(|s| {
                ShadowSector::new(
                    s.theta_start_deg.to_radians(),
                    s.theta_end_deg.to_radians(),
                    s.r_start_km,
                    s.r_end_km,
                )
                .map(|sector| (s.station, sector))
            })
            .collect::<Result<_>>()?;
        ShadowSectorSet::from_pairs(self.stations.stations.len(), &pairs)
    }
}

/// A generated scene with pixel-exact ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    /// Artifact-free precipitation frame.
    pub clean: RadarFrame,
    /// Clean frame plus injected spokes and rings.
    pub dirty: RadarFrame,
    /// Dirty frame with shadow sectors blanked out — what a downstream
    /// consumer would actually receive.
    pub observed: RadarFrame,
    /// Satellite channels derived from the clean labels.
    pub msg: MsgFrame,
    /// Exactly the injected artifact pixels.
    pub artifact_truth: PixelMask,
    /// Union of the shadow sector footprints.
    pub shadow_truth: PixelMask,
    /// The applied shadow sectors.
    pub sectors: ShadowSectorSet,
}

/// One gaussian precipitation bump.
struct Bump {
    cx: f64,
    cy: f64,
    sigma_px: f64,
    amp_dbz: f64,
}

/// Draws the bump population; the RNG consumption order is part of the
/// determinism contract.
fn draw_bumps(config: &SyntheticSceneConfig) -> Result<Vec<Bump>> {
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let spec = &config.spec;
    let max_dbz = ReflectivityScale::default().max_dbz();
    let clearance_px = config.station_clearance_km / spec.cell_km;
    let mut bumps = Vec::with_capacity(config.blob_count);
    let mut attempts = 0usize;
    while bumps.len() < config.blob_count {
        let cx = rng.random_range(0.0..spec.width as f64);
        let cy = rng.random_range(0.0..spec.height as f64);
        let sigma = config.blob_scale / spec.cell_km * rng.random_range(0.6..1.4);
        let u: f64 = rng.random_range(0.0..1.0);
        let amp = max_dbz * (0.3 + 0.7 * u.powf(config.intensity_gamma));
        let clear = config.stations.stations.iter().all(|s| {
            let d = ((cx - s.x).powi(2) + (cy - s.y).powi(2)).sqrt();
            d >= clearance_px
        });
        if clear {
            bumps.push(Bump { cx, cy, sigma_px: sigma, amp_dbz: amp });
        }
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::config(
                "station clearance leaves no room to place precipitation",
            ));
        }
    }
    Ok(bumps)
}

/// Renders the bump population into a quantized frame, with every bump center
/// shifted by `shift_px` (used to advect predecessors).
fn render_bumps(
    config: &SyntheticSceneConfig,
    bumps: &[Bump],
    shift_px: (f64, f64),
    timestamp: i64,
) -> Result<RadarFrame> {
    let spec = config.spec;
    let scale = ReflectivityScale::default();
    let mut dbz = vec![0.0f64; spec.len()];
    for b in bumps {
        let cx = b.cx + shift_px.0;
        let cy = b.cy + shift_px.1;
        let reach = 4.0 * b.sigma_px;
        let x0 = ((cx - reach).floor().max(0.0)) as usize;
        let y0 = ((cy - reach).floor().max(0.0)) as usize;
        let x1 = ((cx + reach).ceil() as usize).min(spec.width - 1);
        let y1 = ((cy + reach).ceil() as usize).min(spec.height - 1);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let inv = 1.0 / (2.0 * b.sigma_px * b.sigma_px);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                dbz[spec.index(x, y)] += b.amp_dbz * (-(dx * dx + dy * dy) * inv).exp();
            }
        }
    }
    let max_dbz = scale.max_dbz();
    let mut frame = RadarFrame::new(spec, timestamp);
    for i in 0..spec.len() {
        let label = scale.dbz_to_label(dbz[i].min(max_dbz))?;
        if label > 0 {
            let (x, y) = spec.coords(i);
            frame.set_label(x, y, label)?;
        }
    }
    Ok(frame)
}

/// The clean precipitation frame of a scene, advected by `shift_px`. Used to
/// build predecessor frames: the same storms, displaced, without artifacts.
pub fn clean_frame_at(
    config: &SyntheticSceneConfig,
    shift_px: (f64, f64),
    timestamp: i64,
) -> Result<RadarFrame> {
    config.validate()?;
    let bumps = draw_bumps(config)?;
    render_bumps(config, &bumps, shift_px, timestamp)
}

/// Per-channel transfer shape; each is strictly increasing on [0, 1].
fn channel_response(channel: usize, z: f64) -> f64 {
    match channel % 4 {
        0 => z,
        1 => z.sqrt(),
        2 => z * z,
        _ => (1.0 + 9.0 * z).ln() / 10.0f64.ln(),
    }
}

/// Channel gain and offset.
fn channel_params(channel: usize) -> (f64, f64) {
    (2.0 + (channel % 5) as f64, 0.1 * channel as f64)
}

/// The noise-free satellite value of one channel for one label.
pub fn msg_channel_value(channel: usize, label: u8, scale: &ReflectivityScale) -> Result<f64> {
    let z = scale.label_to_dbz(label)? / scale.max_dbz();
    let (a, b) = channel_params(channel);
    Ok(a * channel_response(channel, z) + b)
}

/// Builds the satellite frame from a label frame: channel c carries
/// `a_c * f_c(dBZ) + b_c` plus gaussian noise.
pub fn msg_from_frame(
    frame: &RadarFrame,
    scale: &ReflectivityScale,
    noise_sigma: f64,
    seed: u64,
) -> Result<MsgFrame> {
    let spec = frame.spec;
    // Precompute the 14 noise-free values per channel.
    let mut table = [[0.0f64; 14]; MSG_CHANNEL_COUNT];
    for (c, row) in table.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            *v = msg_channel_value(c, l as u8, scale)?;
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ MSG_NOISE_STREAM);
    let noise = if noise_sigma > 0.0 {
        Some(Normal::new(0.0, noise_sigma).map_err(|e| Error::config(e.to_string()))?)
    } else {
        None
    };
    let mut channels = vec![vec![0.0f32; spec.len()]; MSG_CHANNEL_COUNT];
    // Pixel-major sampling keeps each pixel's noise independent of the
    // channel count ordering.
    for i in 0..spec.len() {
        let label = frame.labels[i] as usize;
        for (c, plane) in channels.iter_mut().enumerate() {
            let mut v = table[c][label];
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            plane[i] = v as f32;
        }
    }
    MsgFrame::new(spec, channels, frame.timestamp)
}

/// Distance from pixel center `(x, y)` to a station, in kilometres.
fn range_to(x: usize, y: usize, sx: f64, sy: f64, cell_km: f64) -> f64 {
    ((x as f64 - sx).powi(2) + (y as f64 - sy).powi(2)).sqrt() * cell_km
}

/// Injects spokes and rings into a clean frame. Labels are drawn from the
/// mid-range classes 3–7; pixels already carrying precipitation are left
/// untouched, and the truth mask holds exactly the written pixels.
pub fn inject_artifacts(
    clean: &RadarFrame,
    config: &SyntheticSceneConfig,
) -> Result<(RadarFrame, PixelMask)> {
    config.validate()?;
    if clean.spec != config.spec {
        return Err(Error::domain("frame grid does not match the scene config"));
    }
    let spec = clean.spec;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed ^ INJECT_STREAM);
    let mut dirty = clean.clone();
    let mut truth = PixelMask::new(spec, MaskRole::Artifact);

    let write = |dirty: &mut RadarFrame, truth: &mut PixelMask, x: usize, y: usize, label: u8| {
        let i = spec.index(x, y);
        if clean.valid[i] && clean.labels[i] > 0 {
            return; // existing precipitation wins
        }
        dirty.set_label(x, y, label).expect("injected labels are in range");
        truth.set(x, y, true);
    };

    for s in &config.spoke_specs {
        let station = *config.station(s.station)?;
        let label: u8 = rng.random_range(3..=7);
        let theta = s.theta_deg.to_radians();
        let half = s.width_deg.to_radians() / 2.0;
        let reach_px = s.extent_km / spec.cell_km;
        let x0 = ((station.x - reach_px).floor().max(0.0)) as usize;
        let y0 = ((station.y - reach_px).floor().max(0.0)) as usize;
        let x1 = ((station.x + reach_px).ceil().max(0.0) as usize).min(spec.width - 1);
        let y1 = ((station.y + reach_px).ceil().max(0.0) as usize).min(spec.height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let r = range_to(x, y, station.x, station.y, spec.cell_km);
                if !(1.0..=s.extent_km).contains(&r) {
                    continue;
                }
                let ang = (y as f64 - station.y).atan2(x as f64 - station.x);
                let mut d = (ang - theta) % std::f64::consts::TAU;
                if d > std::f64::consts::PI {
                    d -= std::f64::consts::TAU;
                }
                if d < -std::f64::consts::PI {
                    d += std::f64::consts::TAU;
                }
                if d.abs() <= half {
                    write(&mut dirty, &mut truth, x, y, label);
                }
            }
        }
    }

    for r in &config.ring_specs {
        let station = *config.station(r.station)?;
        let label: u8 = rng.random_range(3..=7);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let radius_px = r.radius_km / spec.cell_km;
        for k in 0..r.point_count {
            let ang = phase + std::f64::consts::TAU * k as f64 / r.point_count as f64;
            let x = (station.x + radius_px * ang.cos()).round();
            let y = (station.y + radius_px * ang.sin()).round();
            if spec.contains(x as i64, y as i64) {
                write(&mut dirty, &mut truth, x as usize, y as usize, label);
            }
        }
    }

    Ok((dirty, truth))
}

/// Blanks every pixel inside the sector footprints: labels drop to zero and
/// validity is cleared, as an orographic shadow would leave them.
pub fn apply_shadow(
    frame: &RadarFrame,
    sectors: &ShadowSectorSet,
    stations: &RadarStationConfig,
) -> Result<RadarFrame> {
    if sectors.per_station.len() != stations.stations.len() {
        return Err(Error::domain("sector set does not match the station list"));
    }
    let mut out = frame.clone();
    for (station, sectors) in stations.stations.iter().zip(&sectors.per_station) {
        for sector in sectors {
            let footprint = sector_footprint(sector, station, &frame.spec);
            for (x, y) in footprint.iter_true() {
                out.set_invalid(x, y);
            }
        }
    }
    Ok(out)
}

/// Union of all sector footprints of a set.
pub fn shadow_footprint_mask(
    sectors: &ShadowSectorSet,
    stations: &RadarStationConfig,
    spec: &GridSpec,
) -> Result<PixelMask> {
    if sectors.per_station.len() != stations.stations.len() {
        return Err(Error::domain("sector set does not match the station list"));
    }
    let mut mask = PixelMask::new(*spec, MaskRole::Shadow);
    for (station, sectors) in stations.stations.iter().zip(&sectors.per_station) {
        for sector in sectors {
            mask = mask.union(&sector_footprint(sector, station, spec))?;
        }
    }
    Ok(mask)
}

/// Generates a full scene: clean precipitation, satellite channels derived
/// from it, injected artifacts with exact truth, and applied shadows.
pub fn synth_scene(config: &SyntheticSceneConfig) -> Result<Scene> {
    config.validate()?;
    let bumps = draw_bumps(config)?;
    let clean = render_bumps(config, &bumps, (0.0, 0.0), config.timestamp)?;
    let msg = msg_from_frame(&clean, &ReflectivityScale::default(), config.msg_noise_sigma, config.seed)?;
    let (dirty, artifact_truth) = inject_artifacts(&clean, config)?;
    let sectors = config.shadow_sectors()?;
    let shadow_truth = shadow_footprint_mask(&sectors, &config.stations, &config.spec)?;
    let observed = apply_shadow(&dirty, &sectors, &config.stations)?;
    Ok(Scene { clean, dirty, observed, msg, artifact_truth, shadow_truth, sectors })
}

/// Generates labelled training patches: speckled oriented bands for the
/// artifact class, smooth bump gradients for the precipitation class. All
/// patches are odd squares of the given side.
pub fn synth_texture_patches(
    seed: u64,
    artifact_count: usize,
    precipitation_count: usize,
    side: usize,
) -> Result<Vec<(RadarFrame, TextureClass)>> {
    if side % 2 == 0 || side < 9 {
        return Err(Error::config("patch side must be odd and at least 9"));
    }
    let spec = GridSpec::new(side, side, 1.0)?;
    let scale = ReflectivityScale::default();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut patches = Vec::with_capacity(artifact_count + precipitation_count);

    for _ in 0..artifact_count {
        let mut frame = RadarFrame::new(spec, 0);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let (dx, dy) = (angle.cos(), angle.sin());
        let period: f64 = rng.random_range(4.0..9.0);
        let duty: f64 = rng.random_range(0.25..0.45);
        let label: u8 = rng.random_range(3..=7);
        let keep_p: f64 = rng.random_range(0.6..0.9);
        let phase: f64 = rng.random_range(0.0..period);
        for y in 0..side {
            for x in 0..side {
                let u = (x as f64 * dx + y as f64 * dy + phase).rem_euclid(period) / period;
                if u < duty && rng.random_bool(keep_p) {
                    let jitter: i64 = rng.random_range(-1..=1);
                    let l = (label as i64 + jitter).clamp(3, 7) as u8;
                    frame.set_label(x, y, l)?;
                }
            }
        }
        patches.push((frame, TextureClass::Artifact));
    }

    for _ in 0..precipitation_count {
        let mut dbz = vec![0.0f64; spec.len()];
        let bump_count = rng.random_range(2..=4);
        for _ in 0..bump_count {
            let cx: f64 = rng.random_range(0.0..side as f64);
            let cy: f64 = rng.random_range(0.0..side as f64);
            let sigma: f64 = rng.random_range(side as f64 / 5.0..side as f64 / 2.0);
            let amp: f64 = rng.random_range(18.0..46.0);
            let inv = 1.0 / (2.0 * sigma * sigma);
            for y in 0..side {
                for x in 0..side {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    dbz[spec.index(x, y)] += amp * (-d2 * inv).exp();
                }
            }
        }
        let mut frame = RadarFrame::new(spec, 0);
        for i in 0..spec.len() {
            let label = scale.dbz_to_label(dbz[i].min(scale.max_dbz()))?;
            if label > 0 {
                let (x, y) = spec.coords(i);
                frame.set_label(x, y, label)?;
            }
        }
        patches.push((frame, TextureClass::Precipitation));
    }

    Ok(patches)
}
