//! Rendering of frames and masks to portable anymap images: 8-bit grayscale
//! (PGM) or a fixed 14-entry color ramp (PPM) with an optional mask overlay
//! in a color reserved for it.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{PixelMask, RadarFrame, LEVEL_COUNT};

/// RGB color of each reflectivity label, dark blue through violet.
pub const LABEL_RAMP: [[u8; 3]; LEVEL_COUNT] = [
    [20, 20, 28],    // 0: background
    [40, 74, 140],   // 1
    [48, 110, 180],  // 2
    [60, 150, 210],  // 3
    [80, 190, 220],  // 4
    [110, 210, 170], // 5
    [160, 220, 110], // 6
    [210, 220, 70],  // 7
    [240, 190, 50],  // 8
    [250, 140, 40],  // 9
    [245, 90, 40],   // 10
    [220, 40, 50],   // 11
    [180, 20, 90],   // 12
    [140, 20, 140],  // 13
];

/// RGB color of pixels without a valid measurement.
pub const INVALID_COLOR: [u8; 3] = [70, 70, 70];

/// RGB color of overlaid mask pixels; distinct from every ramp entry.
pub const OVERLAY_COLOR: [u8; 3] = [255, 0, 255];

/// Grayscale value of a label, spread over the 8-bit range injectively.
fn gray(label: u8) -> u8 {
    (label as u16 * 255 / (LEVEL_COUNT as u16 - 1)) as u8
}

/// Writes a frame as an 8-bit grayscale PGM; invalid pixels render black.
pub fn write_pgm(frame: &RadarFrame, path: &Path) -> Result<()> {
    let spec = frame.spec;
    let mut out = format!("P5\n{} {}\n255\n", spec.width, spec.height).into_bytes();
    out.reserve(spec.len());
    for i in 0..spec.len() {
        out.push(if frame.valid[i] { gray(frame.labels[i]) } else { 0 });
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a frame as a color PPM using the label ramp; mask bits, when given,
/// take the overlay color exactly.
pub fn write_ppm(frame: &RadarFrame, overlay: Option<&PixelMask>, path: &Path) -> Result<()> {
    let spec = frame.spec;
    if let Some(mask) = overlay {
        if mask.spec != spec {
            return Err(Error::domain("overlay mask must share the frame grid"));
        }
    }
    let mut out = format!("P6\n{} {}\n255\n", spec.width, spec.height).into_bytes();
    out.reserve(spec.len() * 3);
    for i in 0..spec.len() {
        let rgb = if overlay.is_some_and(|m| m.bits[i]) {
            OVERLAY_COLOR
        } else if !frame.valid[i] {
            INVALID_COLOR
        } else {
            LABEL_RAMP[frame.labels[i] as usize]
        };
        out.extend_from_slice(&rgb);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a mask alone as a binary-looking PGM (set = white).
pub fn write_mask_pgm(mask: &PixelMask, path: &Path) -> Result<()> {
    let spec = mask.spec;
    let mut out = format!("P5\n{} {}\n255\n", spec.width, spec.height).into_bytes();
    out.reserve(spec.len());
    out.extend(mask.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
    fs::write(path, out)?;
    Ok(())
}
