//! Candidate fusion and temporal confirmation. Geometry detections (spokes,
//! rings) are structurally unambiguous and pass straight through; texture
//! candidates are the false-positive source and must additionally look
//! transient: every available predecessor frame has to be background near the
//! pixel (or have flagged it itself) before a weak candidate becomes an
//! artifact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{detect_rings, detect_spokes, RingDetectorConfig, SpokeDetectorConfig};
use crate::grid::{GridSpec, MaskRole, PixelMask, RadarFrame, RadarStationConfig};
use crate::scale::ReflectivityScale;
use crate::texture::{build_gabor_bank, segment_texture, GaborBankConfig, TextureLibrary, DEFAULT_STRIDE};

/// Nominal spacing between consecutive composites, in seconds.
pub const DEFAULT_NOMINAL_INTERVAL_S: i64 = 300;
/// Predecessors older than this (relative to the current frame) are dropped.
pub const DEFAULT_MAX_GAP_S: i64 = 900;

/// The current frame plus up to two usable predecessors, most recent first.
#[derive(Debug, Clone)]
pub struct FrameHistory {
    /// The frame under analysis.
    pub current: RadarFrame,
    /// Usable predecessors, most recent first; over-aged ones were dropped.
    pub predecessors: Vec<RadarFrame>,
    /// Nominal composite interval in seconds.
    pub nominal_interval_s: i64,
    /// Maximum tolerated age of a predecessor relative to the current frame.
    pub max_gap_s: i64,
    /// Timestamps of predecessors that were supplied but dropped as too old.
    pub dropped: Vec<i64>,
}

impl FrameHistory {
    /// Builds a history with the default interval and gap limits.
    pub fn new(current: RadarFrame, predecessors: Vec<RadarFrame>) -> Result<Self> {
        FrameHistory::with_limits(
            current,
            predecessors,
            DEFAULT_NOMINAL_INTERVAL_S,
            DEFAULT_MAX_GAP_S,
        )
    }

    /// Builds a history, validating timestamp order and dropping predecessors
    /// whose gap to the current frame exceeds `max_gap_s`.
    pub fn with_limits(
        current: RadarFrame,
        predecessors: Vec<RadarFrame>,
        nominal_interval_s: i64,
        max_gap_s: i64,
    ) -> Result<Self> {
        if nominal_interval_s <= 0 || max_gap_s <= 0 {
            return Err(Error::config("history intervals must be positive"));
        }
        if predecessors.len() > 2 {
            return Err(Error::domain(format!(
                "history holds at most two predecessors, got {}",
                predecessors.len()
            )));
        }
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut last_ts = current.timestamp;
        for p in predecessors {
            if p.spec != current.spec {
                return Err(Error::domain("predecessor grid does not match the current frame"));
            }
            if p.timestamp >= last_ts {
                return Err(Error::domain(format!(
                    "predecessor timestamps must strictly decrease ({} then {})",
                    last_ts, p.timestamp
                )));
            }
            last_ts = p.timestamp;
            if current.timestamp - p.timestamp > max_gap_s {
                dropped.push(p.timestamp);
            } else {
                kept.push(p);
            }
        }
        Ok(FrameHistory { current, predecessors: kept, nominal_interval_s, max_gap_s, dropped })
    }
}

/// Tuning for temporal confirmation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Chebyshev radius around a pixel probed in predecessor frames.
    pub temporal_tolerance: usize,
    /// When true, weak candidates are refused outright with no predecessors.
    pub require_both_predecessors: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { temporal_tolerance: 2, require_both_predecessors: false }
    }
}

/// Fused candidates: strong pixels come from geometry, weak from texture only.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMask {
    /// Raster geometry.
    pub spec: GridSpec,
    /// Geometry-backed candidates (confirmed unconditionally).
    pub strong: Vec<bool>,
    /// Texture-only candidates (subject to temporal confirmation); disjoint
    /// from `strong`.
    pub weak: Vec<bool>,
}

impl CandidateMask {
    /// True when either strength is set at `(x, y)`.
    pub fn get(&self, x: usize, y: usize) -> bool {
        let i = self.spec.index(x, y);
        self.strong[i] || self.weak[i]
    }

    /// Number of strong candidate pixels.
    pub fn strong_count(&self) -> usize {
        self.strong.iter().filter(|&&b| b).count()
    }

    /// Number of weak candidate pixels.
    pub fn weak_count(&self) -> usize {
        self.weak.iter().filter(|&&b| b).count()
    }

    /// Both strengths as one candidate mask.
    pub fn union_mask(&self) -> PixelMask {
        let bits = self.strong.iter().zip(&self.weak).map(|(&s, &w)| s || w).collect();
        PixelMask { spec: self.spec, bits, role: MaskRole::ArtifactCandidate }
    }
}

/// Fuses texture and geometry candidates: spokes and rings are strong, pixels
/// flagged only by texture are weak.
pub fn fuse_spatial(
    texture: &PixelMask,
    spokes: &PixelMask,
    rings: &PixelMask,
) -> Result<CandidateMask> {
    if texture.spec != spokes.spec || texture.spec != rings.spec {
        return Err(Error::domain("candidate masks must share one grid"));
    }
    let n = texture.spec.len();
    let mut strong = vec![false; n];
    let mut weak = vec![false; n];
    for i in 0..n {
        strong[i] = spokes.bits[i] || rings.bits[i];
        weak[i] = texture.bits[i] && !strong[i];
    }
    Ok(CandidateMask { spec: texture.spec, strong, weak })
}

/// True when any labelled pixel lies within `tol` (Chebyshev) of `(x, y)`.
fn labelled_nearby(frame: &RadarFrame, x: usize, y: usize, tol: usize) -> bool {
    let spec = &frame.spec;
    let x0 = x.saturating_sub(tol);
    let y0 = y.saturating_sub(tol);
    let x1 = (x + tol).min(spec.width - 1);
    let y1 = (y + tol).min(spec.height - 1);
    for ny in y0..=y1 {
        for nx in x0..=x1 {
            if frame.labels[spec.index(nx, ny)] > 0 {
                return true;
            }
        }
    }
    false
}

/// True when the candidate mask flags any pixel within `tol` of `(x, y)`.
fn flagged_nearby(mask: &CandidateMask, x: usize, y: usize, tol: usize) -> bool {
    let spec = &mask.spec;
    let x0 = x.saturating_sub(tol);
    let y0 = y.saturating_sub(tol);
    let x1 = (x + tol).min(spec.width - 1);
    let y1 = (y + tol).min(spec.height - 1);
    for ny in y0..=y1 {
        for nx in x0..=x1 {
            let i = spec.index(nx, ny);
            if mask.strong[i] || mask.weak[i] {
                return true;
            }
        }
    }
    false
}

/// Temporal confirmation without predecessor candidate masks.
pub fn temporal_confirm(
    candidates: &CandidateMask,
    history: &FrameHistory,
    config: &FusionConfig,
) -> Result<PixelMask> {
    temporal_confirm_with_prior(candidates, history, config, &[])
}

/// Temporal confirmation. A weak candidate survives iff every available
/// predecessor was background within `temporal_tolerance` of the pixel, or —
/// when that predecessor's own candidate mask is supplied in `priors`
/// (index-aligned with `history.predecessors`) — had flagged the
/// neighbourhood itself. Strong candidates always survive. With no
/// predecessors at all, weak candidates stand unless
/// `require_both_predecessors` is set. The result never contains background
/// pixels of the current frame.
pub fn temporal_confirm_with_prior(
    candidates: &CandidateMask,
    history: &FrameHistory,
    config: &FusionConfig,
    priors: &[Option<&CandidateMask>],
) -> Result<PixelMask> {
    if candidates.spec != history.current.spec {
        return Err(Error::domain("candidate mask does not match the current frame"));
    }
    for prior in priors.iter().flatten() {
        if prior.spec != candidates.spec {
            return Err(Error::domain("prior candidate mask does not match the grid"));
        }
    }
    let spec = candidates.spec;
    let tol = config.temporal_tolerance;
    let mut out = PixelMask::new(spec, MaskRole::Artifact);
    for i in 0..spec.len() {
        if !(candidates.strong[i] || candidates.weak[i]) {
            continue;
        }
        // An artifact replaces a measurement; background stays background.
        if !(history.current.valid[i] && history.current.labels[i] > 0) {
            continue;
        }
        let (x, y) = spec.coords(i);
        let confirmed = if candidates.strong[i] {
            true
        } else if history.predecessors.is_empty() {
            !config.require_both_predecessors
        } else {
            history.predecessors.iter().enumerate().all(|(pi, pred)| {
                !labelled_nearby(pred, x, y, tol)
                    || priors
                        .get(pi)
                        .copied()
                        .flatten()
                        .is_some_and(|prior| flagged_nearby(prior, x, y, tol))
            })
        };
        if confirmed {
            out.bits[i] = true;
        }
    }
    Ok(out)
}

/// Detector tuning for the full fusion pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    /// Texture filter bank.
    pub gabor: GaborBankConfig,
    /// Stride of the texture classification lattice.
    pub texture_stride: usize,
    /// Spoke detector tuning.
    pub spokes: SpokeDetectorConfig,
    /// Ring detector tuning.
    pub rings: RingDetectorConfig,
    /// Temporal confirmation tuning.
    pub fusion: FusionConfig,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            gabor: GaborBankConfig::default(),
            texture_stride: DEFAULT_STRIDE,
            spokes: SpokeDetectorConfig::default(),
            rings: RingDetectorConfig::default(),
            fusion: FusionConfig::default(),
        }
    }
}

/// What each stage of the fusion pipeline contributed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionReport {
    /// Pixels flagged by texture segmentation.
    pub texture_pixels: usize,
    /// Pixels flagged by the spoke detector (any station).
    pub spoke_pixels: usize,
    /// Pixels flagged by the ring detector.
    pub ring_pixels: usize,
    /// Strong candidates after spatial fusion.
    pub strong_pixels: usize,
    /// Weak candidates after spatial fusion.
    pub weak_pixels: usize,
    /// Final artifact pixels.
    pub confirmed_pixels: usize,
    /// Weak candidates removed by temporal confirmation.
    pub removed_weak_pixels: usize,
    /// Timestamps of the predecessors that were actually used.
    pub predecessors_used: Vec<i64>,
    /// Timestamps of predecessors dropped for exceeding the gap limit.
    pub predecessors_dropped: Vec<i64>,
    /// True when no predecessor was available and weak candidates passed on
    /// texture evidence alone.
    pub degraded: bool,
}

/// Runs the full detection pipeline on a history: texture segmentation,
/// per-station spokes, rings, spatial fusion and temporal confirmation.
pub fn build_artifact_mask(
    history: &FrameHistory,
    scale: &ReflectivityScale,
    library: &TextureLibrary,
    stations: &RadarStationConfig,
    config: &DetectionConfig,
) -> Result<(PixelMask, FusionReport)> {
    let frame = &history.current;
    stations.validate(&frame.spec)?;
    let bank = build_gabor_bank(&config.gabor)?;
    let texture = segment_texture(frame, scale, &bank, library, config.texture_stride)?;
    let mut spokes = PixelMask::new(frame.spec, MaskRole::ArtifactCandidate);
    for station in &stations.stations {
        spokes = spokes
            .union(&detect_spokes(frame, station, &config.spokes)?)?
            .with_role(MaskRole::ArtifactCandidate);
    }
    let rings = detect_rings(frame, stations, &config.rings)?;
    let candidates = fuse_spatial(&texture, &spokes, &rings)?;
    let artifact = temporal_confirm(&candidates, history, &config.fusion)?;

    let weak_pixels = candidates.weak_count();
    let confirmed_pixels = artifact.count();
    let strong_pixels = candidates.strong_count();
    let report = FusionReport {
        texture_pixels: texture.count(),
        spoke_pixels: spokes.count(),
        ring_pixels: rings.count(),
        strong_pixels,
        weak_pixels,
        confirmed_pixels,
        removed_weak_pixels: (strong_pixels + weak_pixels).saturating_sub(confirmed_pixels),
        predecessors_used: history.predecessors.iter().map(|p| p.timestamp).collect(),
        predecessors_dropped: history.dropped.clone(),
        degraded: history.predecessors.is_empty(),
    };
    Ok((artifact, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn spec_8x8() -> GridSpec {
        GridSpec::new(8, 8, 1.0).unwrap()
    }

    fn mask_with(spec: GridSpec, pixels: &[(usize, usize)]) -> PixelMask {
        let mut m = PixelMask::new(spec, MaskRole::ArtifactCandidate);
        for &(x, y) in pixels {
            m.set(x, y, true);
        }
        m
    }

    fn frame_with(spec: GridSpec, pixels: &[(usize, usize)], label: u8, ts: i64) -> RadarFrame {
        let mut f = RadarFrame::new(spec, ts);
        for &(x, y) in pixels {
            f.set_label(x, y, label).unwrap();
        }
        f
    }

    #[test]
    fn history_enforces_order_arity_and_gap() {
        let spec = spec_8x8();
        let mk = |ts| RadarFrame::new(spec, ts);

        // More than two predecessors.
        assert!(FrameHistory::new(mk(900), vec![mk(600), mk(300), mk(0)]).is_err());
        // Non-decreasing timestamps.
        assert!(FrameHistory::new(mk(900), vec![mk(900)]).is_err());
        assert!(FrameHistory::new(mk(900), vec![mk(300), mk(600)]).is_err());
        // Grid mismatch.
        let other = RadarFrame::new(GridSpec::new(4, 4, 1.0).unwrap(), 600);
        assert!(FrameHistory::new(mk(900), vec![other]).is_err());

        // A 600 s gap survives; 1200 s from the current frame is dropped.
        let h = FrameHistory::new(mk(1200), vec![mk(600), mk(0)]).unwrap();
        assert_eq!(h.predecessors.len(), 1);
        assert_eq!(h.predecessors[0].timestamp, 600);
        assert_eq!(h.dropped, vec![0]);
    }

    #[test]
    fn spatial_fusion_assigns_strengths() {
        let spec = spec_8x8();
        let texture = mask_with(spec, &[(1, 1), (2, 2)]);
        let spokes = mask_with(spec, &[(5, 5)]);
        let rings = mask_with(spec, &[(2, 2), (6, 6)]);
        let fused = fuse_spatial(&texture, &spokes, &rings).unwrap();
        // Overlap with geometry promotes texture pixels to strong.
        assert_eq!(fused.strong_count(), 3); // (5,5), (2,2), (6,6)
        assert_eq!(fused.weak_count(), 1); // (1,1)
        assert!(fused.get(1, 1) && fused.get(2, 2) && fused.get(5, 5) && fused.get(6, 6));

        let empty = PixelMask::new(spec, MaskRole::ArtifactCandidate);
        let none = fuse_spatial(&empty, &empty, &empty).unwrap();
        assert_eq!(none.union_mask().count(), 0);

        let small = PixelMask::new(GridSpec::new(4, 4, 1.0).unwrap(), MaskRole::ArtifactCandidate);
        assert!(fuse_spatial(&small, &empty, &empty).is_err());
    }

    #[test]
    fn weak_candidates_need_background_predecessors() {
        let spec = spec_8x8();
        let current = frame_with(spec, &[(3, 3), (6, 6)], 5, 600);
        let candidates = fuse_spatial(
            &mask_with(spec, &[(3, 3), (6, 6)]),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
        )
        .unwrap();

        // Both predecessors background near (3,3); precipitation persists at (6,6).
        let p1 = frame_with(spec, &[(6, 6)], 4, 300);
        let p2 = frame_with(spec, &[(6, 6)], 4, 0);
        let history = FrameHistory::new(current, vec![p1, p2]).unwrap();
        let mask = temporal_confirm(&candidates, &history, &FusionConfig::default()).unwrap();
        assert!(mask.get(3, 3));
        assert!(!mask.get(6, 6));
    }

    #[test]
    fn tolerance_window_blocks_nearby_precipitation() {
        let spec = spec_8x8();
        let current = frame_with(spec, &[(3, 3)], 5, 600);
        let candidates = fuse_spatial(
            &mask_with(spec, &[(3, 3)]),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
        )
        .unwrap();

        // Precipitation two pixels away blocks confirmation at tolerance 2 …
        let near = frame_with(spec, &[(5, 3)], 4, 300);
        let history = FrameHistory::new(current.clone(), vec![near]).unwrap();
        let mask = temporal_confirm(&candidates, &history, &FusionConfig::default()).unwrap();
        assert!(!mask.get(3, 3));

        // … but three pixels away does not.
        let far = frame_with(spec, &[(6, 3)], 4, 300);
        let history = FrameHistory::new(current, vec![far]).unwrap();
        let mask = temporal_confirm(&candidates, &history, &FusionConfig::default()).unwrap();
        assert!(mask.get(3, 3));
    }

    #[test]
    fn strong_candidates_bypass_temporal_evidence() {
        let spec = spec_8x8();
        let current = frame_with(spec, &[(4, 4)], 6, 600);
        let candidates = fuse_spatial(
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
            &mask_with(spec, &[(4, 4)]),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
        )
        .unwrap();
        // Persistent precipitation would kill a weak candidate.
        let p1 = frame_with(spec, &[(4, 4)], 6, 300);
        let p2 = frame_with(spec, &[(4, 4)], 6, 0);
        let history = FrameHistory::new(current, vec![p1, p2]).unwrap();
        let mask = temporal_confirm(&candidates, &history, &FusionConfig::default()).unwrap();
        assert!(mask.get(4, 4));
        assert_eq!(mask.count(), 1);
    }

    #[test]
    fn zero_predecessors_follow_the_degraded_mode_switch() {
        let spec = spec_8x8();
        let current = frame_with(spec, &[(3, 3)], 5, 600);
        let candidates = fuse_spatial(
            &mask_with(spec, &[(3, 3)]),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
        )
        .unwrap();
        let history = FrameHistory::new(current, Vec::new()).unwrap();

        let lenient = FusionConfig { require_both_predecessors: false, ..Default::default() };
        assert!(temporal_confirm(&candidates, &history, &lenient).unwrap().get(3, 3));
        let strict = FusionConfig { require_both_predecessors: true, ..Default::default() };
        assert_eq!(temporal_confirm(&candidates, &history, &strict).unwrap().count(), 0);
    }

    #[test]
    fn prior_candidate_mask_excuses_predecessor_precipitation() {
        let spec = spec_8x8();
        let current = frame_with(spec, &[(3, 3)], 5, 600);
        let candidates = fuse_spatial(
            &mask_with(spec, &[(3, 3)]),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
        )
        .unwrap();
        // The predecessor shows precipitation at the spot, but its own
        // candidate mask had flagged that precipitation as artifact.
        let pred = frame_with(spec, &[(3, 3)], 5, 300);
        let prior = fuse_spatial(
            &mask_with(spec, &[(3, 3)]),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
        )
        .unwrap();
        let history = FrameHistory::new(current, vec![pred]).unwrap();
        let config = FusionConfig::default();

        let without = temporal_confirm(&candidates, &history, &config).unwrap();
        assert!(!without.get(3, 3));
        let with =
            temporal_confirm_with_prior(&candidates, &history, &config, &[Some(&prior)]).unwrap();
        assert!(with.get(3, 3));
    }

    #[test]
    fn confirmation_is_monotone_and_skips_background() {
        let spec = spec_8x8();
        // Candidate over a background pixel (e.g. stale mask): never confirmed.
        let current = frame_with(spec, &[(2, 2)], 3, 600);
        let candidates = fuse_spatial(
            &mask_with(spec, &[(2, 2), (5, 5)]),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
            &PixelMask::new(spec, MaskRole::ArtifactCandidate),
        )
        .unwrap();
        let history = FrameHistory::new(current, Vec::new()).unwrap();
        let mask = temporal_confirm(&candidates, &history, &FusionConfig::default()).unwrap();
        assert!(mask.get(2, 2));
        assert!(!mask.get(5, 5), "background pixel must not become an artifact");
        for (x, y) in mask.iter_true() {
            assert!(candidates.get(x, y), "output must stay inside the candidates");
        }
    }
}
