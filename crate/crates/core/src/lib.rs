//! Artifact detection and correction for quantized weather-radar composites.
//!
//! The pipeline has three stages. Detection finds non-meteorological echoes
//! by fusing texture evidence (Gabor-bank features classified against a
//! covariance library) with station-geometry evidence (radial spokes and
//! station-centred rings), confirmed against up to two predecessor frames.
//! Shadow handling derives orographic concealment sectors from long-term
//! precipitation sums and decides per frame whether a sector is truncating a
//! storm. Correction fills artifact and shadow pixels per connected region
//! with a k-nearest-neighbour model over 12-channel satellite vectors,
//! trained on a dilated ring of trusted pixels around each region.
//!
//! [`synth`], [`metrics`] and [`render`] provide the synthetic-scene harness,
//! evaluation metrics and image output used to exercise the pipeline end to
//! end.

pub mod correction;
pub mod error;
pub mod fusion;
pub mod geo;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod morph;
pub mod polar;
pub mod regions;
pub mod render;
pub mod scale;
pub mod synth;
pub mod texture;

pub use correction::{
    build_correction_mask, correct_frame, extract_training_ring, knn_predict, CorrectionConfig,
    CorrectionReport, RegionStatus, TrainingRing, TrainingSample,
};
pub use error::{Error, Result};
pub use fusion::{
    build_artifact_mask, fuse_spatial, temporal_confirm, temporal_confirm_with_prior,
    CandidateMask, DetectionConfig, FrameHistory, FusionConfig, FusionReport,
};
pub use geo::{
    accumulate_sum, add_frame, current_shadow_mask, derive_shadow_sectors, detect_rings,
    detect_spokes, radius_histogram, sector_footprint, RingDetectorConfig, ShadowSector,
    ShadowSectorSet, SpokeDetectorConfig,
};
pub use grid::{
    GridSpec, MaskRole, PixelMask, RadarFrame, RadarStationConfig, SeShape, Station,
    StructuringElement, LEVEL_COUNT, MAX_LABEL,
};
pub use io::{MsgFrame, SumImage, MSG_CHANNEL_COUNT};
pub use metrics::{
    confusion, detection_metrics, simulate_region_eval, within_one, ConfusionMatrix,
    MetricsReport, RegionSize,
};
pub use morph::{morph_mask, morph_polar, MorphOp};
pub use polar::{
    frame_to_polar, from_polar, mask_to_polar, mask_to_polar_forward, plane_to_polar,
    polar_coverage, PolarGrid, DEFAULT_RADIAL_BIN_KM, DEFAULT_THETA_BINS,
};
pub use regions::{
    connected_components, connected_components_polar, regions_to_mask, Connectivity, PolarRegion,
    Region,
};
pub use render::{write_mask_pgm, write_pgm, write_ppm, INVALID_COLOR, LABEL_RAMP, OVERLAY_COLOR};
pub use scale::ReflectivityScale;
pub use synth::{
    apply_shadow, clean_frame_at, inject_artifacts, msg_from_frame, synth_scene,
    synth_texture_patches, RingSpec, Scene, ShadowSpec, SpokeSpec, SyntheticSceneConfig,
};
pub use texture::{
    build_gabor_bank, compute_feature_stack, nn_classify, segment_texture, GaborBankConfig,
    TextureClass, TextureLibrary,
};
