//! Connected-component labelling for cartesian masks and polar binary images.
//!
//! Components are numbered in row-major order of their first pixel, which
//! makes region ids deterministic and stable across runs.

use crate::error::{Error, Result};
use crate::grid::PixelMask;
use crate::polar::PolarGrid;

/// Pixel adjacency used when growing components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    /// Edge neighbours only.
    Four,
    /// Edge and corner neighbours.
    Eight,
}

impl Connectivity {
    fn offsets(&self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// A connected set of pixels in a cartesian mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Zero-based id in row-major order of first pixel.
    pub id: usize,
    /// Member pixels as `(x, y)`, in row-major order.
    pub pixels: Vec<(usize, usize)>,
    /// Inclusive bounding box `(x_min, y_min, x_max, y_max)`.
    pub bbox: (usize, usize, usize, usize),
}

impl Region {
    /// Number of member pixels.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    /// True when the region holds no pixels (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// A connected set of bins in a polar binary image.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarRegion {
    /// Zero-based id in row-major order of first bin.
    pub id: usize,
    /// Member bins as `(r, t)`, in row-major order.
    pub bins: Vec<(usize, usize)>,
    /// Inclusive bounding box `(r_min, t_min, r_max, t_max)`.
    pub bbox: (usize, usize, usize, usize),
}

/// Generic row-major flood fill; returns per-component pixel lists sorted
/// row-major within each component.
fn label_bits(
    width: usize,
    height: usize,
    bits: &[bool],
    connectivity: Connectivity,
) -> Vec<Vec<(usize, usize)>> {
    let offsets = connectivity.offsets();
    let mut seen = vec![false; bits.len()];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        let mut members = Vec::new();
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            members.push(i);
            let x = (i % width) as i64;
            let y = (i / width) as i64;
            for &(dx, dy) in offsets {
                let nx = x + dx;
                let ny = y + dy;
                if nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64 {
                    let ni = ny as usize * width + nx as usize;
                    if bits[ni] && !seen[ni] {
                        seen[ni] = true;
                        stack.push(ni);
                    }
                }
            }
        }
        members.sort_unstable();
        components.push(
            members
                .into_iter()
                .map(|i| (i % width, i / width))
                .collect(),
        );
    }
    components
}

fn bbox_of(pixels: &[(usize, usize)]) -> (usize, usize, usize, usize) {
    let mut x_min = usize::MAX;
    let mut y_min = usize::MAX;
    let mut x_max = 0;
    let mut y_max = 0;
    for &(x, y) in pixels {
        x_min = x_min.min(x);
        y_min = y_min.min(y);
        x_max = x_max.max(x);
        y_max = y_max.max(y);
    }
    (x_min, y_min, x_max, y_max)
}

/// Labels the connected components of a cartesian mask.
pub fn connected_components(mask: &PixelMask, connectivity: Connectivity) -> Vec<Region> {
    label_bits(mask.spec.width, mask.spec.height, &mask.bits, connectivity)
        .into_iter()
        .enumerate()
        .map(|(id, pixels)| {
            let bbox = bbox_of(&pixels);
            Region { id, pixels, bbox }
        })
        .collect()
}

/// Labels the connected components of a polar binary image. Components are
/// grown in (r, t) index space; no azimuthal wrap-around.
pub fn connected_components_polar(
    polar: &PolarGrid<bool>,
    connectivity: Connectivity,
) -> Vec<PolarRegion> {
    // Rows are radii, columns azimuths: width = theta_bins, height = r_bins.
    label_bits(polar.theta_bins, polar.r_bins, &polar.values, connectivity)
        .into_iter()
        .enumerate()
        .map(|(id, bins_tx)| {
            // label_bits returns (x, y) = (t, r); store as (r, t).
            let bins: Vec<(usize, usize)> = bins_tx.into_iter().map(|(t, r)| (r, t)).collect();
            let mut r_min = usize::MAX;
            let mut t_min = usize::MAX;
            let mut r_max = 0;
            let mut t_max = 0;
            for &(r, t) in &bins {
                r_min = r_min.min(r);
                t_min = t_min.min(t);
                r_max = r_max.max(r);
                t_max = t_max.max(t);
            }
            PolarRegion { id, bins, bbox: (r_min, t_min, r_max, t_max) }
        })
        .collect()
}

/// Rebuilds a mask holding the union of the given regions.
pub fn regions_to_mask(regions: &[&Region], like: &PixelMask) -> Result<PixelMask> {
    let mut mask = PixelMask::new(like.spec, like.role);
    for region in regions {
        for &(x, y) in &region.pixels {
            if x >= like.spec.width || y >= like.spec.height {
                return Err(Error::domain("region pixel outside grid"));
            }
            mask.set(x, y, true);
        }
    }
    Ok(mask)
}
