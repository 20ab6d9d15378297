//! Evaluation metrics: label confusion matrices with column normalization,
//! ±1-class accuracy, detection sensitivity/specificity with background
//! exclusion, and a held-out region evaluation that carves connected regions
//! out of a frame, corrects them, and scores the recovery.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::correction::{correct_frame, CorrectionConfig};
use crate::error::{Error, Result};
use crate::grid::{MaskRole, PixelMask, RadarFrame, LEVEL_COUNT};
use crate::io::MsgFrame;

/// Per-trial seed stride (golden-ratio increment) for region evaluation.
const TRIAL_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Label confusion counts; columns are ground truth, rows are predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[pred][truth]` pixel tallies.
    pub counts: Vec<Vec<u64>>,
    /// Columns of `counts` divided by their totals; zero columns stay zero.
    pub column_normalized: Vec<Vec<f64>>,
    /// Column totals (pixels per ground-truth class).
    pub sample_sizes: Vec<u64>,
}

impl ConfusionMatrix {
    /// All-zero matrix.
    pub fn empty() -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; LEVEL_COUNT]; LEVEL_COUNT],
            column_normalized: vec![vec![0.0; LEVEL_COUNT]; LEVEL_COUNT],
            sample_sizes: vec![0; LEVEL_COUNT],
        }
    }

    /// Wraps raw counts, computing normalization and sample sizes.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != LEVEL_COUNT || counts.iter().any(|r| r.len() != LEVEL_COUNT) {
            return Err(Error::domain(format!("confusion matrix must be {LEVEL_COUNT}x{LEVEL_COUNT}")));
        }
        let mut m = ConfusionMatrix {
            counts,
            column_normalized: vec![vec![0.0; LEVEL_COUNT]; LEVEL_COUNT],
            sample_sizes: vec![0; LEVEL_COUNT],
        };
        m.renormalize();
        Ok(m)
    }

    /// Recomputes `column_normalized` and `sample_sizes` from `counts`.
    pub fn renormalize(&mut self) {
        for t in 0..LEVEL_COUNT {
            let total: u64 = (0..LEVEL_COUNT).map(|p| self.counts[p][t]).sum();
            self.sample_sizes[t] = total;
            for p in 0..LEVEL_COUNT {
                self.column_normalized[p][t] = if total == 0 {
                    0.0
                } else {
                    self.counts[p][t] as f64 / total as f64
                };
            }
        }
    }

    /// Adds another matrix's counts into this one.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for p in 0..LEVEL_COUNT {
            for t in 0..LEVEL_COUNT {
                self.counts[p][t] += other.counts[p][t];
            }
        }
        self.renormalize();
    }

    /// Total pixels tallied.
    pub fn total(&self) -> u64 {
        self.sample_sizes.iter().sum()
    }
}

/// Tallies a confusion matrix between predicted and true frames. When
/// `eval_set` is given only its pixels are counted; with `exclude_background`
/// pixels that are background in both frames are skipped.
pub fn confusion(
    pred: &RadarFrame,
    truth: &RadarFrame,
    eval_set: Option<&PixelMask>,
    exclude_background: bool,
) -> Result<ConfusionMatrix> {
    if pred.spec != truth.spec {
        return Err(Error::domain("frames must share one grid"));
    }
    if let Some(mask) = eval_set {
        if mask.spec != pred.spec {
            return Err(Error::domain("evaluation mask must share the frames' grid"));
        }
    }
    let mut counts = vec![vec![0u64; LEVEL_COUNT]; LEVEL_COUNT];
    for i in 0..pred.spec.len() {
        if let Some(mask) = eval_set {
            if !mask.bits[i] {
                continue;
            }
        }
        let (p, t) = (pred.labels[i] as usize, truth.labels[i] as usize);
        if exclude_background && p == 0 && t == 0 {
            continue;
        }
        counts[p][t] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

/// Per ground-truth class, the fraction of predictions within one class of
/// the truth (clamped at the scale ends). Classes with no samples are absent.
pub fn within_one(matrix: &ConfusionMatrix) -> Vec<Option<f64>> {
    (0..LEVEL_COUNT)
        .map(|t| {
            if matrix.sample_sizes[t] == 0 {
                return None;
            }
            let lo = t.saturating_sub(1);
            let hi = (t + 1).min(LEVEL_COUNT - 1);
            Some((lo..=hi).map(|p| matrix.column_normalized[p][t]).sum())
        })
        .collect()
}

/// Summary rates of a detection or correction evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Correct decisions over the evaluation set.
    pub accuracy: f64,
    /// TP / (TP + FN); 1.0 when no positives exist.
    pub sensitivity: f64,
    /// TN / (TN + FP); 1.0 when no negatives exist.
    pub specificity: f64,
    /// ±1-class rates per class, absent for classes without samples (empty
    /// for pure detection evaluations).
    pub within_one_per_class: Vec<Option<f64>>,
    /// Free-form remarks (degenerate denominators and the like).
    pub notes: Vec<String>,
}

/// Scores an artifact mask against truth. The evaluation set contains every
/// pixel that is flagged in the truth mask or carries precipitation in the
/// frame — pixels that are background in both are not scored, so empty areas
/// cannot inflate specificity.
pub fn detection_metrics(
    pred_mask: &PixelMask,
    truth_mask: &PixelMask,
    frame: &RadarFrame,
) -> Result<MetricsReport> {
    if pred_mask.spec != truth_mask.spec || pred_mask.spec != frame.spec {
        return Err(Error::domain("masks and frame must share one grid"));
    }
    let (mut tp, mut fp, mut tn, mut fne) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..frame.spec.len() {
        let in_eval = truth_mask.bits[i] || frame.labels[i] > 0;
        if !in_eval {
            continue;
        }
        match (pred_mask.bits[i], truth_mask.bits[i]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            (false, false) => tn += 1,
        }
    }
    let total = tp + fp + tn + fne;
    if total == 0 {
        return Err(Error::state("evaluation set is empty"));
    }
    let mut notes = Vec::new();
    let sensitivity = if tp + fne == 0 {
        notes.push("no positive pixels in the evaluation set".to_string());
        1.0
    } else {
        tp as f64 / (tp + fne) as f64
    };
    let specificity = if tn + fp == 0 {
        notes.push("no negative pixels in the evaluation set".to_string());
        1.0
    } else {
        tn as f64 / (tn + fp) as f64
    };
    Ok(MetricsReport {
        accuracy: (tp + tn) as f64 / total as f64,
        sensitivity,
        specificity,
        within_one_per_class: Vec::new(),
        notes,
    })
}

/// Held-out region size used by the evaluation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionSize {
    /// 100 pixels.
    Small,
    /// 1000 pixels.
    Medium,
    /// 10000 pixels.
    Large,
}

impl RegionSize {
    /// Exact pixel count of a carved region.
    pub fn pixels(&self) -> usize {
        match self {
            RegionSize::Small => 100,
            RegionSize::Medium => 1000,
            RegionSize::Large => 10_000,
        }
    }
}

/// Carves one connected region of exactly `size` valid pixels by randomized
/// growth from a random precipitation pixel.
fn carve_region(frame: &RadarFrame, size: usize, rng: &mut ChaCha12Rng) -> Option<Vec<usize>> {
    let spec = frame.spec;
    let precip: Vec<usize> = (0..spec.len())
        .filter(|&i| frame.valid[i] && frame.labels[i] > 0)
        .collect();
    if precip.is_empty() || size == 0 {
        return None;
    }
    'starts: for _ in 0..32 {
        let start = precip[rng.random_range(0..precip.len())];
        let mut members = vec![start];
        let mut in_region = HashSet::from([start]);
        let mut stalls = 0usize;
        while members.len() < size {
            let &anchor = &members[rng.random_range(0..members.len())];
            let (x, y) = spec.coords(anchor);
            let (dx, dy) = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)][rng.random_range(0..4)];
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if spec.contains(nx, ny) {
                let ni = spec.index(nx as usize, ny as usize);
                if frame.valid[ni] && !in_region.contains(&ni) {
                    members.push(ni);
                    in_region.insert(ni);
                    stalls = 0;
                    continue;
                }
            }
            stalls += 1;
            if stalls > 200 * size {
                continue 'starts; // walled in; try another start
            }
        }
        return Some(members);
    }
    None
}

/// Repeatedly removes a connected region of valid pixels, corrects it from
/// the satellite channels, and tallies predicted vs held-out labels. The
/// returned matrix accumulates all trials.
pub fn simulate_region_eval(
    frame: &RadarFrame,
    msg: &MsgFrame,
    region_size: RegionSize,
    trials: usize,
    seed: u64,
    config: &CorrectionConfig,
) -> Result<ConfusionMatrix> {
    config.validate()?;
    if frame.spec != msg.spec {
        return Err(Error::domain("frame and satellite grids differ"));
    }
    let mut total = ConfusionMatrix::empty();
    for trial in 0..trials {
        let mut rng =
            ChaCha12Rng::seed_from_u64(seed.wrapping_add(TRIAL_SEED_STRIDE.wrapping_mul(trial as u64)));
        let members = carve_region(frame, region_size.pixels(), &mut rng)
            .ok_or_else(|| Error::state("no room to place an evaluation region"))?;
        let mut mask = PixelMask::new(frame.spec, MaskRole::Correction);
        for &i in &members {
            let (x, y) = frame.spec.coords(i);
            mask.set(x, y, true);
        }
        let (corrected, _) = correct_frame(frame, msg, &mask, config)?;
        let m = confusion(&corrected, frame, Some(&mask), false)?;
        total.merge(&m);
    }
    Ok(total)
}
