//! Browser demo for the radar artifact pipeline.
//!
//! A [`DemoSession`] owns one synthetic scene (storms plus an injected spoke
//! and ring, with two artifact-free predecessor frames) and walks it through
//! the real pipeline: `observed_rgba` shows the input, `detect` fuses texture
//! and geometric evidence into an artifact mask, and `correct` fills the
//! flagged pixels from the scene's synthetic satellite channels. All image
//! outputs are RGBA byte arrays ready for an HTML canvas.

use wasm_bindgen::prelude::*;

use wxrclean_core::{
    build_artifact_mask, build_correction_mask, build_gabor_bank, correct_frame, synth_scene,
    synth_texture_patches, clean_frame_at, CorrectionConfig, DetectionConfig, FrameHistory,
    GridSpec, MaskRole, MsgFrame, PixelMask, RadarFrame, RadarStationConfig, RingSpec,
    ReflectivityScale, Station, SpokeSpec, SyntheticSceneConfig, TextureLibrary, INVALID_COLOR,
    LABEL_RAMP, OVERLAY_COLOR,
};

/// Demo raster edge in pixels; small enough for sub-second interaction.
const DEMO_SIZE: usize = 200;

/// Paints a frame with the label color ramp, optionally drawing a mask over
/// it in the overlay color.
fn frame_rgba(frame: &RadarFrame, overlay: Option<&PixelMask>) -> Vec<u8> {
    let mut rgba = Vec::with_capacity(frame.spec.len() * 4);
    for i in 0..frame.spec.len() {
        let color = if overlay.is_some_and(|m| m.bits[i]) {
            OVERLAY_COLOR
        } else if !frame.valid[i] {
            INVALID_COLOR
        } else {
            LABEL_RAMP[frame.labels[i] as usize]
        };
        rgba.extend_from_slice(&color);
        rgba.push(255);
    }
    rgba
}

/// One interactive scene: generate once, then detect and correct on demand.
#[wasm_bindgen]
pub struct DemoSession {
    scene_config: SyntheticSceneConfig,
    observed: RadarFrame,
    msg: MsgFrame,
    truth: PixelMask,
    scale: ReflectivityScale,
    library: TextureLibrary,
    mask: Option<PixelMask>,
    corrected: Option<RadarFrame>,
}

#[wasm_bindgen]
impl DemoSession {
    /// Builds the scene for a seed: six storm cells kept clear of the
    /// station, one bright spoke, one interference ring, and light satellite
    /// noise.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<DemoSession, String> {
        let spec = GridSpec::new(DEMO_SIZE, DEMO_SIZE, 1.0).map_err(|e| e.to_string())?;
        let center = DEMO_SIZE as f64 / 2.0;
        let scene_config = SyntheticSceneConfig {
            seed: seed as u64,
            spec,
            stations: RadarStationConfig {
                stations: vec![Station { x: center, y: center, range_km: 140.0 }],
            },
            blob_count: 6,
            blob_scale: 5.0,
            intensity_gamma: 1.0,
            msg_noise_sigma: 0.2,
            station_clearance_km: 70.0,
            spoke_specs: vec![
                SpokeSpec { station: 0, theta_deg: 25.0, width_deg: 2.0, extent_km: 50.0 },
                SpokeSpec { station: 0, theta_deg: 140.0, width_deg: 1.5, extent_km: 45.0 },
            ],
            ring_specs: vec![RingSpec { station: 0, radius_km: 45.0, point_count: 118 }],
            shadow_specs: Vec::new(),
            timestamp: 1200,
        };
        let scene = synth_scene(&scene_config).map_err(|e| e.to_string())?;
        let scale = ReflectivityScale::default();
        let bank = build_gabor_bank(&DetectionConfig::default().gabor).map_err(|e| e.to_string())?;
        let patches = synth_texture_patches(424242, 6, 6, 21).map_err(|e| e.to_string())?;
        let library =
            TextureLibrary::from_patches(&patches, &scale, &bank).map_err(|e| e.to_string())?;
        Ok(DemoSession {
            scene_config,
            observed: scene.observed,
            msg: scene.msg,
            truth: scene.artifact_truth,
            scale,
            library,
            mask: None,
            corrected: None,
        })
    }

    /// Raster edge length in pixels.
    pub fn size(&self) -> usize {
        DEMO_SIZE
    }

    /// The observed frame (artifacts included) as RGBA bytes.
    pub fn observed_rgba(&self) -> Vec<u8> {
        frame_rgba(&self.observed, None)
    }

    /// Runs detection with the default configuration and returns a JSON
    /// summary; the mask is kept for rendering and correction.
    pub fn detect(&mut self) -> Result<String, String> {
        let pred_5min = clean_frame_at(&self.scene_config, (-1.0, 0.0), 900)
            .map_err(|e| e.to_string())?;
        let pred_10min = clean_frame_at(&self.scene_config, (-2.0, 0.0), 600)
            .map_err(|e| e.to_string())?;
        let history = FrameHistory::new(self.observed.clone(), vec![pred_5min, pred_10min])
            .map_err(|e| e.to_string())?;
        let (mask, report) = build_artifact_mask(
            &history,
            &self.scale,
            &self.library,
            &self.scene_config.stations,
            &DetectionConfig::default(),
        )
        .map_err(|e| e.to_string())?;
        let recovered = self.truth.iter_true().filter(|&(x, y)| mask.get(x, y)).count();
        let summary = serde_json::json!({
            "flagged_pixels": mask.count(),
            "truth_pixels": self.truth.count(),
            "truth_recovered": recovered,
            "texture_pixels": report.texture_pixels,
            "spoke_pixels": report.spoke_pixels,
            "ring_pixels": report.ring_pixels,
        });
        self.mask = Some(mask);
        self.corrected = None;
        Ok(summary.to_string())
    }

    /// The observed frame with the detected mask drawn over it. Empty until
    /// [`DemoSession::detect`] has run.
    pub fn detected_rgba(&self) -> Vec<u8> {
        match &self.mask {
            Some(mask) => frame_rgba(&self.observed, Some(mask)),
            None => Vec::new(),
        }
    }

    /// Fills the detected pixels from the satellite channels and returns a
    /// JSON summary; requires a prior [`DemoSession::detect`].
    pub fn correct(&mut self) -> Result<String, String> {
        let mask = self.mask.as_ref().ok_or("run detect first")?;
        let shadow = PixelMask::new(self.observed.spec, MaskRole::Shadow);
        let correction = build_correction_mask(mask, &shadow).map_err(|e| e.to_string())?;
        let (corrected, report) =
            correct_frame(&self.observed, &self.msg, &correction, &CorrectionConfig::default())
                .map_err(|e| e.to_string())?;
        let summary = serde_json::json!({
            "pixels_corrected": report.pixels_corrected,
            "pixels_uncorrectable": report.pixels_uncorrectable,
            "regions": report.regions.len(),
            "regions_corrected": report.regions_corrected,
        });
        self.corrected = Some(corrected);
        Ok(summary.to_string())
    }

    /// The corrected frame. Empty until [`DemoSession::correct`] has run.
    pub fn corrected_rgba(&self) -> Vec<u8> {
        match &self.corrected {
            Some(frame) => frame_rgba(frame, None),
            None => Vec::new(),
        }
    }
}
