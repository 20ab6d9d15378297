//! Filling of non-valid pixels from synthetic satellite vectors. Each
//! connected region of the correction mask trains its own k-NN model on a
//! ring of trusted pixels just outside the region (grown by dilation until it
//! holds enough samples), then every pixel inside the region is predicted
//! from its 12-channel satellite vector. Regions whose surroundings cannot
//! supply enough training pixels stay invalid rather than being guessed.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MaskRole, PixelMask, RadarFrame, StructuringElement, MAX_LABEL};
use crate::io::{MsgFrame, MSG_CHANNEL_COUNT};
use crate::morph::{morph_mask, MorphOp};
use crate::regions::{connected_components, Connectivity, Region};

/// Tuning for per-region k-NN correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionConfig {
    /// Neighbours consulted per prediction.
    pub k: usize,
    /// Initial number of border dilation steps.
    pub dilation_iterations: usize,
    /// Minimum usable ring pixels before a region may be corrected.
    pub min_training_pixels: usize,
    /// Hard ceiling on dilation growth; beyond this a region is uncorrectable.
    pub max_dilation_iterations: usize,
    /// Element used to grow the region border.
    pub se: StructuringElement,
    /// When true, channels are z-score normalized per region before the
    /// distance computation (a zero spread normalizes to 1.0).
    pub normalize_channels: bool,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            k: 5,
            dilation_iterations: 5,
            min_training_pixels: 50,
            max_dilation_iterations: 15,
            se: StructuringElement::rect(3).expect("3x3 rectangle is a valid element"),
            normalize_channels: false,
        }
    }
}

impl CorrectionConfig {
    /// Checks the configuration invariants.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if self.min_training_pixels < self.k {
            return Err(Error::config(format!(
                "min_training_pixels {} cannot supply k = {} neighbours",
                self.min_training_pixels, self.k
            )));
        }
        if self.dilation_iterations > self.max_dilation_iterations {
            return Err(Error::config(format!(
                "dilation_iterations {} exceeds max_dilation_iterations {}",
                self.dilation_iterations, self.max_dilation_iterations
            )));
        }
        Ok(())
    }
}

/// Unions artifact and shadow masks into the set of pixels to fill.
pub fn build_correction_mask(artifact: &PixelMask, shadow: &PixelMask) -> Result<PixelMask> {
    Ok(artifact.union(shadow)?.with_role(MaskRole::Correction))
}

/// One labelled training pixel.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    /// Row-major pixel index; breaks distance ties deterministically.
    pub index: usize,
    /// 12-channel satellite vector.
    pub vector: [f64; MSG_CHANNEL_COUNT],
    /// Reflectivity label observed at the pixel.
    pub label: u8,
}

/// Training pixels gathered around one region.
#[derive(Debug, Clone)]
pub struct TrainingRing {
    /// Samples in row-major order of their pixels.
    pub samples: Vec<TrainingSample>,
    /// Dilation steps that produced the ring.
    pub dilation_used: usize,
}

/// How far (Chebyshev) one application of the element can reach.
fn se_reach(se: &StructuringElement) -> usize {
    se.offsets()
        .iter()
        .map(|&(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs()) as usize)
        .max()
        .unwrap_or(0)
}

/// Gathers trusted pixels around a region: the region border grown by
/// dilation, minus the region itself, restricted to valid measurements
/// outside the whole correction mask. Dilation starts at
/// `dilation_iterations` and grows one step at a time until the ring holds
/// `min_training_pixels`; if the ceiling is reached first the region is
/// uncorrectable and `None` is returned (with the best ring's size available
/// to the caller via the report).
pub fn extract_training_ring(
    frame: &RadarFrame,
    msg: &MsgFrame,
    region: &Region,
    correction_mask: &PixelMask,
    config: &CorrectionConfig,
) -> Result<Option<TrainingRing>> {
    config.validate()?;
    if frame.spec != msg.spec || frame.spec != correction_mask.spec {
        return Err(Error::domain("frame, satellite and mask grids differ"));
    }
    Ok(grow_ring(frame, msg, region, correction_mask, config).0)
}

/// Inner ring growth; also reports the final ring size for uncorrectable
/// regions.
fn grow_ring(
    frame: &RadarFrame,
    msg: &MsgFrame,
    region: &Region,
    correction_mask: &PixelMask,
    config: &CorrectionConfig,
) -> (Option<TrainingRing>, usize) {
    let spec = frame.spec;
    // Work on a window around the region so dilation cost scales with the
    // region, not the grid. The margin covers the deepest possible dilation.
    let margin = config.max_dilation_iterations * se_reach(&config.se) + 1;
    let (bx0, by0, bx1, by1) = region.bbox;
    let wx0 = bx0.saturating_sub(margin);
    let wy0 = by0.saturating_sub(margin);
    let wx1 = (bx1 + margin).min(spec.width - 1);
    let wy1 = (by1 + margin).min(spec.height - 1);
    let win = GridSpec::new(wx1 - wx0 + 1, wy1 - wy0 + 1, spec.cell_km)
        .expect("window dimensions are positive");

    let mut seed = PixelMask::new(win, MaskRole::Correction);
    for &(x, y) in &region.pixels {
        seed.set(x - wx0, y - wy0, true);
    }

    let collect = |dilated: &PixelMask| -> Vec<TrainingSample> {
        let mut samples = Vec::new();
        // Window row-major order is frame row-major order restricted to the
        // window, so sample indices come out sorted.
        for ly in 0..win.height {
            for lx in 0..win.width {
                if !dilated.get(lx, ly) || seed.get(lx, ly) {
                    continue;
                }
                let (x, y) = (lx + wx0, ly + wy0);
                let i = spec.index(x, y);
                if !frame.valid[i] || correction_mask.bits[i] {
                    continue;
                }
                samples.push(TrainingSample { index: i, vector: msg.vector(x, y), label: frame.labels[i] });
            }
        }
        samples
    };

    let mut dilated = seed.clone();
    let mut steps = 0;
    let mut first = true;
    let mut best = Vec::new();
    loop {
        let target = if first { config.dilation_iterations } else { steps + 1 };
        first = false;
        if target > config.max_dilation_iterations {
            break;
        }
        dilated = match morph_mask(&dilated, MorphOp::Dilate, &config.se, target - steps) {
            Ok(m) => m,
            Err(_) => break,
        };
        steps = target;
        best = collect(&dilated);
        if best.len() >= config.min_training_pixels {
            return (Some(TrainingRing { samples: best, dilation_used: steps }), 0);
        }
    }
    let found = best.len();
    (None, found)
}

/// Predicts a label as the rounded mean of the `k` nearest samples under
/// Euclidean distance, ties broken by row-major pixel position, rounding
/// half-up, clamped to the label range. Fewer than `k` samples is a state
/// error.
pub fn knn_predict(
    query: &[f64; MSG_CHANNEL_COUNT],
    samples: &[TrainingSample],
    k: usize,
) -> Result<u8> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if samples.len() < k {
        return Err(Error::state(format!(
            "need {k} training samples, have {}",
            samples.len()
        )));
    }
    let mut ranked: Vec<(f64, usize, u8)> = samples
        .iter()
        .map(|s| {
            let d2: f64 = s
                .vector
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2, s.index, s.label)
        })
        .collect();
    // Partial selection: the comparator is a strict total order (indices are
    // unique), so the set of k nearest is unique even under distance ties.
    ranked.select_nth_unstable_by(k - 1, |a, b| {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    });
    let sum: usize = ranked[..k].iter().map(|&(_, _, l)| l as usize).sum();
    // Integer round-half-up of sum / k.
    let label = ((2 * sum + k) / (2 * k)) as u8;
    Ok(label.min(MAX_LABEL))
}

/// Why a region ended up corrected or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionStatus {
    /// All pixels received predicted labels.
    Corrected,
    /// The surroundings could not supply enough training pixels.
    Uncorrectable,
}

/// Per-region outcome of a correction pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionReport {
    /// Region id (row-major order of first pixel).
    pub id: usize,
    /// Pixels in the region.
    pub pixels: usize,
    /// Outcome.
    pub status: RegionStatus,
    /// Dilation steps used for the training ring, when corrected.
    pub dilation_used: Option<usize>,
    /// Training pixels found (for uncorrectable regions: the best attempt).
    pub training_pixels: usize,
    /// Smallest label in the training ring, when corrected.
    pub ring_label_min: Option<u8>,
    /// Largest label in the training ring, when corrected.
    pub ring_label_max: Option<u8>,
}

/// Outcome of a whole correction pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionReport {
    /// One entry per connected region, in region-id order.
    pub regions: Vec<RegionReport>,
    /// Regions that were filled.
    pub regions_corrected: usize,
    /// Regions left invalid.
    pub regions_uncorrectable: usize,
    /// Pixels that received predicted labels.
    pub pixels_corrected: usize,
    /// Pixels left invalid.
    pub pixels_uncorrectable: usize,
}

enum Outcome {
    Corrected { labels: Vec<u8>, ring: TrainingRing },
    Uncorrectable { training_found: usize },
}

/// Corrects one region; predictions depend only on the region's own ring.
fn correct_region(
    frame: &RadarFrame,
    msg: &MsgFrame,
    region: &Region,
    correction_mask: &PixelMask,
    config: &CorrectionConfig,
) -> Result<Outcome> {
    let (ring, found) = grow_ring(frame, msg, region, correction_mask, config);
    let Some(ring) = ring else {
        return Ok(Outcome::Uncorrectable { training_found: found });
    };

    let (samples, transform): (Vec<TrainingSample>, Option<ChannelTransform>) =
        if config.normalize_channels {
            let t = ChannelTransform::fit(&ring.samples);
            (t.apply_all(&ring.samples), Some(t))
        } else {
            (ring.samples.clone(), None)
        };

    let mut labels = Vec::with_capacity(region.pixels.len());
    for &(x, y) in &region.pixels {
        let mut q = msg.vector(x, y);
        if let Some(t) = &transform {
            t.apply(&mut q);
        }
        labels.push(knn_predict(&q, &samples, config.k)?);
    }
    Ok(Outcome::Corrected { labels, ring })
}

/// Per-channel z-score parameters fitted on a training ring.
struct ChannelTransform {
    mean: [f64; MSG_CHANNEL_COUNT],
    inv_std: [f64; MSG_CHANNEL_COUNT],
}

impl ChannelTransform {
    fn fit(samples: &[TrainingSample]) -> Self {
        let n = samples.len().max(1) as f64;
        let mut mean = [0.0; MSG_CHANNEL_COUNT];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(&s.vector) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0; MSG_CHANNEL_COUNT];
        for s in samples {
            for c in 0..MSG_CHANNEL_COUNT {
                let d = s.vector[c] - mean[c];
                var[c] += d * d;
            }
        }
        let mut inv_std = [1.0; MSG_CHANNEL_COUNT];
        for c in 0..MSG_CHANNEL_COUNT {
            let std = (var[c] / n).sqrt();
            // A flat channel carries no signal; leave it unscaled.
            if std > 0.0 {
                inv_std[c] = 1.0 / std;
            }
        }
        ChannelTransform { mean, inv_std }
    }

    fn apply(&self, v: &mut [f64; MSG_CHANNEL_COUNT]) {
        for c in 0..MSG_CHANNEL_COUNT {
            v[c] = (v[c] - self.mean[c]) * self.inv_std[c];
        }
    }

    fn apply_all(&self, samples: &[TrainingSample]) -> Vec<TrainingSample> {
        samples
            .iter()
            .map(|s| {
                let mut v = s.vector;
                self.apply(&mut v);
                TrainingSample { index: s.index, vector: v, label: s.label }
            })
            .collect()
    }
}

/// Fills every masked pixel region by region. Pixels outside the mask are
/// untouched; corrected pixels become valid measurements; pixels of
/// uncorrectable regions are left invalid. Regions are independent, so the
/// result does not depend on evaluation order or thread count.
pub fn correct_frame(
    frame: &RadarFrame,
    msg: &MsgFrame,
    correction_mask: &PixelMask,
    config: &CorrectionConfig,
) -> Result<(RadarFrame, CorrectionReport)> {
    config.validate()?;
    if frame.spec != msg.spec || frame.spec != correction_mask.spec {
        return Err(Error::domain("frame, satellite and mask grids differ"));
    }
    let regions = connected_components(correction_mask, Connectivity::Eight);

    #[cfg(feature = "parallel")]
    let outcomes: Result<Vec<Outcome>> = regions
        .par_iter()
        .map(|r| correct_region(frame, msg, r, correction_mask, config))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Result<Vec<Outcome>> = regions
        .iter()
        .map(|r| correct_region(frame, msg, r, correction_mask, config))
        .collect();
    let outcomes = outcomes?;

    let mut out = frame.clone();
    let mut report = CorrectionReport {
        regions: Vec::with_capacity(regions.len()),
        regions_corrected: 0,
        regions_uncorrectable: 0,
        pixels_corrected: 0,
        pixels_uncorrectable: 0,
    };
    for (region, outcome) in regions.iter().zip(outcomes) {
        match outcome {
            Outcome::Corrected { labels, ring } => {
                for (&(x, y), &label) in region.pixels.iter().zip(&labels) {
                    out.set_label(x, y, label)?;
                }
                report.regions_corrected += 1;
                report.pixels_corrected += region.pixels.len();
                report.regions.push(RegionReport {
                    id: region.id,
                    pixels: region.pixels.len(),
                    status: RegionStatus::Corrected,
                    dilation_used: Some(ring.dilation_used),
                    training_pixels: ring.samples.len(),
                    ring_label_min: ring.samples.iter().map(|s| s.label).min(),
                    ring_label_max: ring.samples.iter().map(|s| s.label).max(),
                });
            }
            Outcome::Uncorrectable { training_found } => {
                for &(x, y) in &region.pixels {
                    out.set_invalid(x, y);
                }
                report.regions_uncorrectable += 1;
                report.pixels_uncorrectable += region.pixels.len();
                report.regions.push(RegionReport {
                    id: region.id,
                    pixels: region.pixels.len(),
                    status: RegionStatus::Uncorrectable,
                    dilation_used: None,
                    training_pixels: training_found,
                    ring_label_min: None,
                    ring_label_max: None,
                });
            }
        }
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    /// Satellite frame whose vector at each pixel encodes `source(x, y)`
    /// injectively: channel c carries `value * (c + 1)`.
    fn msg_from(spec: GridSpec, value_at: impl Fn(usize, usize) -> f64) -> MsgFrame {
        let mut channels = vec![vec![0.0f32; spec.len()]; MSG_CHANNEL_COUNT];
        for y in 0..spec.height {
            for x in 0..spec.width {
                let v = value_at(x, y);
                for (c, plane) in channels.iter_mut().enumerate() {
                    plane[spec.index(x, y)] = (v * (c as f64 + 1.0)) as f32;
                }
            }
        }
        MsgFrame::new(spec, channels, 0).unwrap()
    }

    fn rect_mask(spec: GridSpec, x0: usize, y0: usize, x1: usize, y1: usize) -> PixelMask {
        let mut m = PixelMask::new(spec, MaskRole::Correction);
        for y in y0..=y1 {
            for x in x0..=x1 {
                m.set(x, y, true);
            }
        }
        m
    }

    fn single_region(mask: &PixelMask) -> Region {
        let mut regions = connected_components(mask, Connectivity::Eight);
        assert_eq!(regions.len(), 1);
        regions.remove(0)
    }

    #[test]
    fn config_invariants_are_enforced() {
        assert!(CorrectionConfig::default().validate().is_ok());
        let bad_k = CorrectionConfig { k: 0, ..Default::default() };
        assert!(bad_k.validate().is_err());
        let starving = CorrectionConfig { k: 5, min_training_pixels: 3, ..Default::default() };
        assert!(starving.validate().is_err());
        let runaway =
            CorrectionConfig { dilation_iterations: 16, max_dilation_iterations: 15, ..Default::default() };
        assert!(runaway.validate().is_err());
    }

    #[test]
    fn correction_mask_is_the_union() {
        let spec = GridSpec::new(6, 6, 1.0).unwrap();
        let mut artifact = PixelMask::new(spec, MaskRole::Artifact);
        artifact.set(1, 1, true);
        let mut shadow = PixelMask::new(spec, MaskRole::Shadow);
        shadow.set(4, 4, true);
        shadow.set(1, 1, true);
        let mask = build_correction_mask(&artifact, &shadow).unwrap();
        assert_eq!(mask.role, MaskRole::Correction);
        assert_eq!(mask.count(), 2);
        assert!(mask.get(1, 1) && mask.get(4, 4));

        let other = PixelMask::new(GridSpec::new(5, 5, 1.0).unwrap(), MaskRole::Shadow);
        assert!(build_correction_mask(&artifact, &other).is_err());
    }

    #[test]
    fn one_step_ring_around_a_square_has_exactly_44_pixels() {
        let spec = GridSpec::new(40, 40, 1.0).unwrap();
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..40 {
            for x in 0..40 {
                frame.set_label(x, y, 2).unwrap();
            }
        }
        let msg = msg_from(spec, |_, _| 2.0);
        let mask = rect_mask(spec, 10, 10, 19, 19); // 10x10 region
        let region = single_region(&mask);
        let config = CorrectionConfig {
            dilation_iterations: 1,
            min_training_pixels: 10,
            ..Default::default()
        };
        let ring = extract_training_ring(&frame, &msg, &region, &mask, &config)
            .unwrap()
            .expect("ring exists");
        // 12x12 box minus the 10x10 region.
        assert_eq!(ring.samples.len(), 44);
        assert_eq!(ring.dilation_used, 1);
        // Samples arrive in row-major order with matching labels.
        assert!(ring.samples.windows(2).all(|w| w[0].index < w[1].index));
        assert!(ring.samples.iter().all(|s| s.label == 2));
    }

    #[test]
    fn ring_grows_until_it_finds_enough_pixels() {
        let spec = GridSpec::new(40, 40, 1.0).unwrap();
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..40 {
            for x in 0..40 {
                frame.set_label(x, y, 1).unwrap();
            }
        }
        let msg = msg_from(spec, |_, _| 1.0);
        let mask = rect_mask(spec, 10, 10, 19, 19);
        let region = single_region(&mask);
        // d=1 yields 44 < 60; d=2 yields 14*14-100 = 96.
        let config = CorrectionConfig {
            dilation_iterations: 1,
            min_training_pixels: 60,
            ..Default::default()
        };
        let ring = extract_training_ring(&frame, &msg, &region, &mask, &config)
            .unwrap()
            .expect("ring exists");
        assert_eq!(ring.dilation_used, 2);
        assert_eq!(ring.samples.len(), 96);
    }

    #[test]
    fn starved_region_is_uncorrectable_without_an_error() {
        let spec = GridSpec::new(30, 30, 1.0).unwrap();
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..30 {
            for x in 0..30 {
                frame.set_label(x, y, 1).unwrap();
            }
        }
        let msg = msg_from(spec, |_, _| 1.0);
        let mask = rect_mask(spec, 10, 10, 14, 14);
        let region = single_region(&mask);
        let config = CorrectionConfig { min_training_pixels: 10_000, ..Default::default() };
        let ring = extract_training_ring(&frame, &msg, &region, &mask, &config).unwrap();
        assert!(ring.is_none());
    }

    #[test]
    fn ring_respects_grid_border_validity_and_other_regions() {
        let spec = GridSpec::new(30, 30, 1.0).unwrap();
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..30 {
            for x in 0..30 {
                frame.set_label(x, y, 3).unwrap();
            }
        }
        let msg = msg_from(spec, |_, _| 3.0);

        // Corner region: the one-step ring is clipped to 21 in-grid pixels.
        let corner = rect_mask(spec, 0, 0, 9, 9);
        let region = single_region(&corner);
        let config = CorrectionConfig {
            dilation_iterations: 1,
            min_training_pixels: 10,
            ..Default::default()
        };
        let ring = extract_training_ring(&frame, &msg, &region, &corner, &config)
            .unwrap()
            .expect("ring exists");
        assert_eq!(ring.samples.len(), 21);

        // A second masked region adjacent to the first must not donate
        // training pixels, and neither must invalid pixels.
        let mut mask = rect_mask(spec, 10, 10, 14, 14);
        for y in 10..=14 {
            mask.set(16, y, true); // separate region one pixel to the right
        }
        for y in 10..=14 {
            frame.set_invalid(15, y); // the gap column carries no measurement
        }
        let regions = connected_components(&mask, Connectivity::Eight);
        assert_eq!(regions.len(), 2);
        let ring = extract_training_ring(&frame, &msg, &regions[0], &mask, &config)
            .unwrap()
            .expect("ring exists");
        for s in &ring.samples {
            let (x, y) = spec.coords(s.index);
            assert!(!mask.get(x, y), "ring pixel ({x},{y}) belongs to the mask");
            assert!(frame.is_valid(x, y), "ring pixel ({x},{y}) is invalid");
        }
    }

    fn sample(index: usize, value: f64, label: u8) -> TrainingSample {
        TrainingSample { index, vector: [value; MSG_CHANNEL_COUNT], label }
    }

    #[test]
    fn knn_matches_hand_cases() {
        let samples = vec![
            sample(0, 0.0, 1),
            sample(1, 1.0, 2),
            sample(2, 2.0, 2),
            sample(3, 10.0, 13),
        ];
        let q = [0.0; MSG_CHANNEL_COUNT];
        // Nearest three labels are 1, 2, 2; mean 5/3 rounds to 2.
        assert_eq!(knn_predict(&q, &samples, 3).unwrap(), 2);
        assert_eq!(knn_predict(&q, &samples, 1).unwrap(), 1);
        // Half-up: labels 1 and 2 average to 1.5 -> 2.
        let pair = vec![sample(0, 1.0, 1), sample(1, 1.0, 2)];
        let q = [1.0; MSG_CHANNEL_COUNT];
        assert_eq!(knn_predict(&q, &pair, 2).unwrap(), 2);
        // Fewer samples than k is a state error.
        assert!(knn_predict(&q, &pair, 3).is_err());
        assert!(knn_predict(&q, &pair, 0).is_err());
    }

    #[test]
    fn distance_ties_break_toward_the_lower_index() {
        // Two samples exactly equidistant from the query.
        let samples = vec![sample(7, 2.0, 9), sample(3, 0.0, 4)];
        let q = [1.0; MSG_CHANNEL_COUNT];
        // Index 3 wins the tie even though it was pushed second.
        assert_eq!(knn_predict(&q, &samples, 1).unwrap(), 4);
    }

    /// Two label bands, an artifact block across their boundary, satellite
    /// vectors derived from the clean labels.
    fn banded_scene() -> (RadarFrame, RadarFrame, MsgFrame, PixelMask) {
        let spec = GridSpec::new(40, 40, 1.0).unwrap();
        let mut clean = RadarFrame::new(spec, 0);
        for y in 0..40 {
            for x in 0..40 {
                clean.set_label(x, y, if x < 20 { 2 } else { 3 }).unwrap();
            }
        }
        let msg = msg_from(spec, |x, _| if x < 20 { 2.0 } else { 3.0 });
        let mask = rect_mask(spec, 15, 15, 24, 24);
        let mut corrupted = clean.clone();
        for (x, y) in mask.iter_true() {
            corrupted.set_label(x, y, 7).unwrap();
        }
        (clean, corrupted, msg, mask)
    }

    #[test]
    fn correction_recovers_clean_labels_and_leaves_the_rest_untouched() {
        let (clean, corrupted, msg, mask) = banded_scene();
        let config = CorrectionConfig::default();
        let (fixed, report) = correct_frame(&corrupted, &msg, &mask, &config).unwrap();

        for i in 0..clean.spec.len() {
            let (x, y) = clean.spec.coords(i);
            if mask.bits[i] {
                assert!(fixed.valid[i], "corrected pixel ({x},{y}) must be valid");
                assert_eq!(fixed.labels[i], clean.labels[i], "pixel ({x},{y})");
            } else {
                assert_eq!(fixed.labels[i], corrupted.labels[i]);
                assert_eq!(fixed.valid[i], corrupted.valid[i]);
            }
        }
        assert_eq!(report.regions.len(), 1);
        assert_eq!(report.regions_corrected, 1);
        assert_eq!(report.pixels_corrected, 100);
        assert_eq!(report.regions[0].ring_label_min, Some(2));
        assert_eq!(report.regions[0].ring_label_max, Some(3));
        // Predictions stay inside the ring's label range.
        for (x, y) in mask.iter_true() {
            let l = fixed.label(x, y);
            assert!((2..=3).contains(&l));
        }
    }

    #[test]
    fn uncorrectable_region_pixels_end_up_invalid() {
        let spec = GridSpec::new(30, 30, 1.0).unwrap();
        // Nothing outside the region carries a valid measurement.
        let mut frame = RadarFrame::new(spec, 0);
        for y in 0..30 {
            for x in 0..30 {
                frame.set_invalid(x, y);
            }
        }
        let mask = rect_mask(spec, 10, 10, 14, 14);
        for (x, y) in mask.iter_true() {
            frame.set_label(x, y, 6).unwrap();
        }
        let msg = msg_from(spec, |_, _| 1.0);
        let (fixed, report) = correct_frame(&frame, &msg, &mask, &CorrectionConfig::default()).unwrap();
        assert_eq!(report.regions_uncorrectable, 1);
        assert_eq!(report.pixels_uncorrectable, 25);
        assert_eq!(report.regions[0].status, RegionStatus::Uncorrectable);
        for (x, y) in mask.iter_true() {
            assert!(!fixed.is_valid(x, y));
            assert_eq!(fixed.label(x, y), 0);
        }
    }

    #[test]
    fn every_region_appears_in_the_report() {
        let (_, corrupted, msg, mut mask) = banded_scene();
        // Add a second, far-away region.
        for y in 2..=4 {
            for x in 2..=4 {
                mask.set(x, y, true);
            }
        }
        let (_, report) = correct_frame(&corrupted, &msg, &mask, &CorrectionConfig::default()).unwrap();
        assert_eq!(report.regions.len(), 2);
        assert_eq!(report.regions_corrected + report.regions_uncorrectable, 2);
        let total: usize = report.regions.iter().map(|r| r.pixels).sum();
        assert_eq!(total, mask.count());
    }

    #[test]
    fn corrections_are_local_and_deterministic() {
        let (_, corrupted, msg, mask) = banded_scene();
        let config = CorrectionConfig::default();
        let (a, _) = correct_frame(&corrupted, &msg, &mask, &config).unwrap();
        let (b, _) = correct_frame(&corrupted, &msg, &mask, &config).unwrap();
        assert_eq!(a, b);

        // Perturbing a pixel far outside any training ring changes nothing
        // inside the region.
        let mut far = corrupted.clone();
        far.set_label(0, 39, 9).unwrap();
        let (c, _) = correct_frame(&far, &msg, &mask, &config).unwrap();
        for (x, y) in mask.iter_true() {
            assert_eq!(a.label(x, y), c.label(x, y));
        }
    }

    #[test]
    fn normalization_hook_stays_inert_on_flat_channels() {
        let (clean, corrupted, msg, mask) = banded_scene();
        let config = CorrectionConfig { normalize_channels: true, ..Default::default() };
        let (fixed, _) = correct_frame(&corrupted, &msg, &mask, &config).unwrap();
        // Vectors are injective in the label, so normalized distances still
        // rank same-label pixels first.
        for (x, y) in mask.iter_true() {
            assert_eq!(fixed.label(x, y), clean.label(x, y));
        }
    }

    #[test]
    fn grid_mismatches_are_domain_errors() {
        let (_, corrupted, msg, mask) = banded_scene();
        let other_spec = GridSpec::new(10, 10, 1.0).unwrap();
        let small_mask = PixelMask::new(other_spec, MaskRole::Correction);
        assert!(correct_frame(&corrupted, &msg, &small_mask, &CorrectionConfig::default()).is_err());
    }
}
