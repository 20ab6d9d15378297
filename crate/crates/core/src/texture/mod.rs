//! Texture-based artifact candidate segmentation.
//!
//! A training library holds covariance descriptors of labelled 39x39
//! patches. Classification is nearest-neighbour under the covariance metric;
//! [`segment_texture`] applies it across a frame on a stride lattice.

pub mod covariance;
pub mod gabor;

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{MaskRole, PixelMask, RadarFrame};
use crate::io;
use crate::scale::ReflectivityScale;

pub use covariance::{
    covariance_distance, region_covariance, CovarianceDescriptor, DEFAULT_WINDOW, EPSILON,
};
pub use gabor::{build_gabor_bank, compute_feature_stack, FeatureStack, GaborBankConfig, GaborKernel};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default classification stride in pixels.
pub const DEFAULT_STRIDE: usize = 2;

/// Texture class of a patch or pixel site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureClass {
    /// Non-meteorological artifact texture.
    Artifact,
    /// Ordinary precipitation texture.
    Precipitation,
}

impl TextureClass {
    /// Stable textual name used in library index files.
    pub fn as_str(&self) -> &'static str {
        match self {
            TextureClass::Artifact => "artifact",
            TextureClass::Precipitation => "precipitation",
        }
    }

    /// Parses the textual name used in library index files.
    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "artifact" => Ok(TextureClass::Artifact),
            "precipitation" => Ok(TextureClass::Precipitation),
            other => Err(Error::parse(format!("unknown texture class {other:?}"))),
        }
    }
}

/// One labelled library entry.
#[derive(Debug, Clone)]
pub struct LibraryEntry {
    /// Precomputed descriptor of the training patch.
    pub descriptor: CovarianceDescriptor,
    /// Ground-truth class.
    pub class: TextureClass,
    /// Stable id; ties in nearest-neighbour search resolve to the lowest.
    pub source_id: u32,
}

/// A trained texture library.
#[derive(Debug, Clone)]
pub struct TextureLibrary {
    /// Entries in ascending `source_id` order.
    pub entries: Vec<LibraryEntry>,
    /// Descriptor window used for queries against this library.
    pub window: usize,
}

impl TextureLibrary {
    /// Wraps precomputed entries; dimensions must agree.
    pub fn new(entries: Vec<LibraryEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::state("texture library is empty"));
        }
        let dim = entries[0].descriptor.dim;
        let window = entries[0].descriptor.window;
        for e in &entries {
            if e.descriptor.dim != dim {
                return Err(Error::domain("library entries have mixed feature dimensions"));
            }
        }
        Ok(TextureLibrary { entries, window })
    }

    /// Computes descriptors for labelled patches. Patches must be square,
    /// odd-sized and uniform so one descriptor window covers each patch.
    pub fn from_patches(
        patches: &[(RadarFrame, TextureClass)],
        scale: &ReflectivityScale,
        bank: &[GaborKernel],
    ) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::state("no training patches supplied"));
        }
        let side = patches[0].0.spec.width;
        for (frame, _) in patches {
            if frame.spec.width != side || frame.spec.height != side || side % 2 == 0 {
                return Err(Error::domain(
                    "training patches must be uniform odd squares",
                ));
            }
        }
        let center = (side / 2, side / 2);
        let descriptors: Vec<Result<CovarianceDescriptor>> = {
            #[cfg(feature = "parallel")]
            {
                patches
                    .par_iter()
                    .map(|(frame, _)| {
                        let stack = compute_feature_stack(frame, scale, bank)?;
                        region_covariance(&stack, center, side)
                    })
                    .collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                patches
                    .iter()
                    .map(|(frame, _)| {
                        let stack = compute_feature_stack(frame, scale, bank)?;
                        region_covariance(&stack, center, side)
                    })
                    .collect()
            }
        };
        let mut entries = Vec::with_capacity(patches.len());
        for (i, (descriptor, (_, class))) in descriptors.into_iter().zip(patches).enumerate() {
            entries.push(LibraryEntry {
                descriptor: descriptor?,
                class: *class,
                source_id: i as u32,
            });
        }
        TextureLibrary::new(entries)
    }

    /// Loads a library from an index file plus its patch files.
    pub fn load(
        index_path: &Path,
        scale: &ReflectivityScale,
        bank: &[GaborKernel],
    ) -> Result<Self> {
        let index = io::read_library_index(index_path)?;
        let mut patches = Vec::with_capacity(index.len());
        for entry in &index {
            let path = io::resolve_patch_path(index_path, entry);
            patches.push((io::read_frame(&path)?, entry.class));
        }
        TextureLibrary::from_patches(&patches, scale, bank)
    }

    /// True when both classes are represented.
    pub fn has_both_classes(&self) -> bool {
        let artifact = self.entries.iter().any(|e| e.class == TextureClass::Artifact);
        let precip = self
            .entries
            .iter()
            .any(|e| e.class == TextureClass::Precipitation);
        artifact && precip
    }

    /// Entry counts as `(artifact, precipitation)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let artifact = self
            .entries
            .iter()
            .filter(|e| e.class == TextureClass::Artifact)
            .count();
        (artifact, self.entries.len() - artifact)
    }
}

/// Class of the minimum-distance entry; ties resolve to the lowest source id.
pub fn nn_classify(query: &CovarianceDescriptor, library: &TextureLibrary) -> Result<TextureClass> {
    if library.entries.is_empty() {
        return Err(Error::state("texture library is empty"));
    }
    let mut best: Option<(f64, u32, TextureClass)> = None;
    for e in &library.entries {
        let d = covariance_distance(query, &e.descriptor)?;
        let better = match &best {
            None => true,
            Some((bd, bid, _)) => d < *bd || (d == *bd && e.source_id < *bid),
        };
        if better {
            best = Some((d, e.source_id, e.class));
        }
    }
    Ok(best.unwrap().2)
}

/// Leave-one-out accuracy: the fraction of entries whose class is recovered
/// by nearest-neighbour search over the remaining entries.
pub fn loocv(library: &TextureLibrary) -> Result<f64> {
    let n = library.entries.len();
    if n < 2 {
        return Err(Error::state("leave-one-out needs at least 2 entries"));
    }
    let classify_without = |held_out: usize| -> Result<bool> {
        let query = &library.entries[held_out].descriptor;
        let mut best: Option<(f64, u32, TextureClass)> = None;
        for (j, e) in library.entries.iter().enumerate() {
            if j == held_out {
                continue;
            }
            let d = covariance_distance(query, &e.descriptor)?;
            let better = match &best {
                None => true,
                Some((bd, bid, _)) => d < *bd || (d == *bd && e.source_id < *bid),
            };
            if better {
                best = Some((d, e.source_id, e.class));
            }
        }
        Ok(best.unwrap().2 == library.entries[held_out].class)
    };
    let hits: Vec<Result<bool>> = {
        #[cfg(feature = "parallel")]
        {
            (0..n).into_par_iter().map(classify_without).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n).map(classify_without).collect()
        }
    };
    let mut correct = 0usize;
    for h in hits {
        if h? {
            correct += 1;
        }
    }
    Ok(correct as f64 / n as f64)
}

/// Classifies every precipitation pixel: descriptors are evaluated on a
/// stride lattice and other pixels copy the nearest evaluated lattice corner
/// of their cell (falling back to direct evaluation when no corner is a
/// precipitation pixel). Background pixels are never candidates.
pub fn segment_texture(
    frame: &RadarFrame,
    scale: &ReflectivityScale,
    bank: &[GaborKernel],
    library: &TextureLibrary,
    stride: usize,
) -> Result<PixelMask> {
    if stride == 0 {
        return Err(Error::domain("stride must be >= 1"));
    }
    if !library.has_both_classes() {
        return Err(Error::state(
            "texture library must contain both classes for segmentation",
        ));
    }
    let spec = frame.spec;
    let mut mask = PixelMask::new(spec, MaskRole::ArtifactCandidate);
    let precip = frame.precipitation_mask();
    if precip.count() == 0 {
        return Ok(mask);
    }
    let stack = compute_feature_stack(frame, scale, bank)?;
    let classify = |x: usize, y: usize| -> Result<bool> {
        let d = region_covariance(&stack, (x, y), library.window)?;
        Ok(nn_classify(&d, library)? == TextureClass::Artifact)
    };

    // Pass 1: evaluate lattice sites that carry precipitation.
    let sites: Vec<(usize, usize)> = precip
        .iter_true()
        .filter(|&(x, y)| x % stride == 0 && y % stride == 0)
        .collect();
    let flags: Vec<Result<bool>> = {
        #[cfg(feature = "parallel")]
        {
            sites.par_iter().map(|&(x, y)| classify(x, y)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            sites.iter().map(|&(x, y)| classify(x, y)).collect()
        }
    };
    // 0 = unevaluated, 1 = precipitation, 2 = artifact.
    let mut site_class = vec![0u8; spec.len()];
    for (&(x, y), flag) in sites.iter().zip(flags) {
        site_class[spec.index(x, y)] = if flag? { 2 } else { 1 };
    }

    // Pass 2: fill non-lattice precipitation pixels from the nearest
    // evaluated cell corner; collect pixels with no evaluated corner.
    let mut leftovers: Vec<(usize, usize)> = Vec::new();
    for (x, y) in precip.iter_true() {
        let cls = site_class[spec.index(x, y)];
        if cls != 0 {
            mask.set(x, y, cls == 2);
            continue;
        }
        let x0 = (x / stride) * stride;
        let y0 = (y / stride) * stride;
        let mut corners = Vec::with_capacity(4);
        for cy in [y0, y0 + stride] {
            for cx in [x0, x0 + stride] {
                if cx < spec.width && cy < spec.height {
                    let c = site_class[spec.index(cx, cy)];
                    if c != 0 {
                        let dx = cx as i64 - x as i64;
                        let dy = cy as i64 - y as i64;
                        corners.push((dx * dx + dy * dy, cy, cx, c));
                    }
                }
            }
        }
        if let Some(&(_, _, _, c)) = corners.iter().min() {
            mask.set(x, y, c == 2);
        } else {
            leftovers.push((x, y));
        }
    }
    let leftover_flags: Vec<Result<bool>> = {
        #[cfg(feature = "parallel")]
        {
            leftovers.par_iter().map(|&(x, y)| classify(x, y)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            leftovers.iter().map(|&(x, y)| classify(x, y)).collect()
        }
    };
    for (&(x, y), flag) in leftovers.iter().zip(leftover_flags) {
        mask.set(x, y, flag?);
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::{Rng, SeedableRng};

    fn descriptor(matrix: Vec<f64>, dim: usize, source_id: u32) -> CovarianceDescriptor {
        let _ = source_id;
        CovarianceDescriptor { matrix, dim, window: 3, center: (0, 0) }
    }

    fn library_of(descs: Vec<(Vec<f64>, TextureClass)>) -> TextureLibrary {
        let entries = descs
            .into_iter()
            .enumerate()
            .map(|(i, (m, class))| LibraryEntry {
                descriptor: descriptor(m, 1, i as u32),
                class,
                source_id: i as u32,
            })
            .collect();
        TextureLibrary::new(entries).unwrap()
    }

    #[test]
    fn self_match_returns_own_class() {
        let lib = library_of(vec![(vec![2.0], TextureClass::Artifact)]);
        let q = descriptor(vec![2.0], 1, 0);
        assert_eq!(nn_classify(&q, &lib).unwrap(), TextureClass::Artifact);
    }

    #[test]
    fn exact_match_beats_distant_entry() {
        let lib = library_of(vec![
            (vec![8.0], TextureClass::Artifact),
            (vec![2.0], TextureClass::Precipitation),
        ]);
        let q = descriptor(vec![2.0], 1, 0);
        assert_eq!(nn_classify(&q, &lib).unwrap(), TextureClass::Precipitation);
    }

    #[test]
    fn ties_resolve_to_lowest_source_id() {
        // Two entries at identical distance from the query.
        let lib = library_of(vec![
            (vec![4.0], TextureClass::Precipitation),
            (vec![4.0], TextureClass::Artifact),
        ]);
        let q = descriptor(vec![4.0], 1, 0);
        assert_eq!(nn_classify(&q, &lib).unwrap(), TextureClass::Precipitation);
    }

    #[test]
    fn agrees_with_exhaustive_scan_on_random_library() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        let descs: Vec<(Vec<f64>, TextureClass)> = (0..20)
            .map(|i| {
                let v: f64 = rng.random_range(0.1..10.0);
                let class = if i % 2 == 0 {
                    TextureClass::Artifact
                } else {
                    TextureClass::Precipitation
                };
                (vec![v], class)
            })
            .collect();
        let lib = library_of(descs.clone());
        for _ in 0..50 {
            let q = descriptor(vec![rng.random_range(0.1..10.0)], 1, 0);
            let got = nn_classify(&q, &lib).unwrap();
            // Oracle: full scan with explicit lexicographic (distance, id) order.
            let want = lib
                .entries
                .iter()
                .map(|e| {
                    (
                        covariance_distance(&q, &e.descriptor).unwrap(),
                        e.source_id,
                        e.class,
                    )
                })
                .min_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap())
                .unwrap()
                .2;
            assert_eq!(got, want);
        }
    }

    #[test]
    fn loocv_identical_pair_same_class_is_one() {
        let lib = library_of(vec![
            (vec![3.0], TextureClass::Artifact),
            (vec![3.0], TextureClass::Artifact),
        ]);
        assert_eq!(loocv(&lib).unwrap(), 1.0);
    }

    #[test]
    fn loocv_identical_pair_opposite_classes_is_zero() {
        let lib = library_of(vec![
            (vec![3.0], TextureClass::Artifact),
            (vec![3.0], TextureClass::Precipitation),
        ]);
        assert_eq!(loocv(&lib).unwrap(), 0.0);
    }

    #[test]
    fn loocv_separable_clusters_is_one() {
        // Two well separated clusters in log-eigenvalue space.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(12);
        let mut descs = Vec::new();
        for _ in 0..20 {
            descs.push((vec![(0.9 + rng.random_range(-0.05..0.05f64)).exp()], TextureClass::Artifact));
        }
        for _ in 0..20 {
            descs.push((vec![(3.1 + rng.random_range(-0.05..0.05f64)).exp()], TextureClass::Precipitation));
        }
        let lib = library_of(descs);
        assert_eq!(loocv(&lib).unwrap(), 1.0);
    }

    #[test]
    fn loocv_requires_two_entries() {
        let lib = library_of(vec![(vec![1.0], TextureClass::Artifact)]);
        assert!(loocv(&lib).is_err());
    }

    #[test]
    fn segmentation_skips_background_everywhere() {
        let scale = ReflectivityScale::default();
        let bank = build_gabor_bank(&GaborBankConfig {
            kernel_size: 9,
            ..GaborBankConfig::default()
        })
        .unwrap();
        // Library trained on two tiny uniform-ish patches.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        let mut patches = Vec::new();
        for class in [TextureClass::Artifact, TextureClass::Precipitation] {
            for _ in 0..2 {
                let spec = GridSpec::new(15, 15, 1.0).unwrap();
                let mut p = RadarFrame::new(spec, 0);
                for y in 0..15 {
                    for x in 0..15 {
                        let label = match class {
                            TextureClass::Artifact => {
                                if x == 7 {
                                    rng.random_range(4..=7)
                                } else {
                                    0
                                }
                            }
                            TextureClass::Precipitation => rng.random_range(1..=3),
                        };
                        p.set_label(x, y, label).unwrap();
                    }
                }
                patches.push((p, class));
            }
        }
        let lib = TextureLibrary::from_patches(&patches, &scale, &bank).unwrap();
        let spec = GridSpec::new(40, 40, 1.0).unwrap();
        let mut frame = RadarFrame::new(spec, 0);
        for y in 5..30 {
            frame.set_label(20, y, 6).unwrap();
        }
        let mask = segment_texture(&frame, &scale, &bank, &lib, 2).unwrap();
        for (x, y) in mask.iter_true() {
            assert!(frame.label(x, y) > 0, "flagged background at ({x},{y})");
        }
    }

    #[test]
    fn all_zero_frame_has_empty_candidates() {
        let scale = ReflectivityScale::default();
        let bank = build_gabor_bank(&GaborBankConfig {
            kernel_size: 9,
            ..GaborBankConfig::default()
        })
        .unwrap();
        let lib = library_of(vec![
            (vec![1.0], TextureClass::Artifact),
            (vec![2.0], TextureClass::Precipitation),
        ]);
        let frame = RadarFrame::new(GridSpec::new(30, 30, 1.0).unwrap(), 0);
        let mask = segment_texture(&frame, &scale, &bank, &lib, 2).unwrap();
        assert_eq!(mask.count(), 0);
    }
}
