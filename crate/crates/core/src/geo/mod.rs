//! Geometry-aware detectors: radial spokes in polar space, station-centred
//! rings via a radius histogram, and orographic shadow sectors derived from
//! long-run precipitation sums.

pub mod rings;
pub mod shadow;
pub mod spokes;

pub use rings::{detect_rings, radius_histogram, RingDetectorConfig};
pub use shadow::{
    accumulate_sum, add_frame, current_shadow_mask, derive_shadow_sectors, sector_footprint,
    ShadowSector, ShadowSectorSet,
};
pub use spokes::{detect_spokes, SpokeDetectorConfig};
