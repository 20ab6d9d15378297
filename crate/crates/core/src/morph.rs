//! Binary morphology on cartesian masks and polar binary images.
//!
//! Border convention: dilation reads out-of-grid neighbours as false (the OR
//! identity) and erosion reads them as true (the AND identity). This is the
//! duality-preserving choice; it keeps closing extensive (`m ⊆ close(m)`)
//! and opening anti-extensive on a bounded raster.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{PixelMask, StructuringElement};
use crate::polar::PolarGrid;

/// Morphological operation selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MorphOp {
    /// Minkowski erosion.
    Erode,
    /// Minkowski dilation.
    Dilate,
    /// Erosion followed by dilation.
    Open,
    /// Dilation followed by erosion.
    Close,
}

fn dilate_bits(width: usize, height: usize, bits: &[bool], offsets: &[(i64, i64)]) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let mut hit = false;
            for &(dx, dy) in offsets {
                let nx = x + dx;
                let ny = y + dy;
                if nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64 {
                    if bits[ny as usize * width + nx as usize] {
                        hit = true;
                        break;
                    }
                }
            }
            if hit {
                out[y as usize * width + x as usize] = true;
            }
        }
    }
    out
}

fn erode_bits(width: usize, height: usize, bits: &[bool], offsets: &[(i64, i64)]) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let mut all = true;
            for &(dx, dy) in offsets {
                let nx = x + dx;
                let ny = y + dy;
                if nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64 {
                    if !bits[ny as usize * width + nx as usize] {
                        all = false;
                        break;
                    }
                }
                // Out-of-grid neighbours count as true for erosion.
            }
            if all {
                out[y as usize * width + x as usize] = true;
            }
        }
    }
    out
}

fn apply_bits(
    width: usize,
    height: usize,
    bits: Vec<bool>,
    op: MorphOp,
    offsets: &[(i64, i64)],
    iterations: usize,
) -> Vec<bool> {
    let mut cur = bits;
    for _ in 0..iterations {
        cur = match op {
            MorphOp::Dilate => dilate_bits(width, height, &cur, offsets),
            MorphOp::Erode => erode_bits(width, height, &cur, offsets),
            MorphOp::Open => {
                let e = erode_bits(width, height, &cur, offsets);
                dilate_bits(width, height, &e, offsets)
            }
            MorphOp::Close => {
                let d = dilate_bits(width, height, &cur, offsets);
                erode_bits(width, height, &d, offsets)
            }
        };
    }
    cur
}

/// Applies a morphological operation to a cartesian mask.
pub fn morph_mask(
    mask: &PixelMask,
    op: MorphOp,
    se: &StructuringElement,
    iterations: usize,
) -> Result<PixelMask> {
    let offsets = se.offsets();
    let bits = apply_bits(
        mask.spec.width,
        mask.spec.height,
        mask.bits.clone(),
        op,
        &offsets,
        iterations,
    );
    Ok(PixelMask { spec: mask.spec, bits, role: mask.role })
}

/// Applies a morphological operation to a polar binary image. Rows are radii
/// and columns azimuths; no azimuthal wrap-around is performed.
pub fn morph_polar(
    polar: &PolarGrid<bool>,
    op: MorphOp,
    se: &StructuringElement,
    iterations: usize,
) -> Result<PolarGrid<bool>> {
    let offsets = se.offsets();
    // Polar rows are radii: width = theta_bins, height = r_bins, and the
    // row-major layout matches (r * theta_bins + t).
    let values = apply_bits(
        polar.theta_bins,
        polar.r_bins,
        polar.values.clone(),
        op,
        &offsets,
        iterations,
    );
    Ok(PolarGrid {
        origin: polar.origin,
        r_bins: polar.r_bins,
        theta_bins: polar.theta_bins,
        dr_km: polar.dr_km,
        values,
    })
}
