//! Core raster types: grid geometry, quantized reflectivity frames, binary
//! pixel masks, structuring elements and radar station layout.
//!
//! All rasters are row-major; pixel `(x, y)` lives at index `y * width + x`.
//! `x` grows to the right, `y` grows downward, and distances between pixel
//! centers are `cell_km` kilometres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of reflectivity quantization levels (labels `0..=13`).
pub const LEVEL_COUNT: usize = 14;

/// Highest valid reflectivity label.
pub const MAX_LABEL: u8 = (LEVEL_COUNT - 1) as u8;

/// Geometry of a raster: dimensions in pixels plus physical cell size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Width in pixels.
    pub width: usize,
    /// Height in pixels.
    pub height: usize,
    /// Edge length of one pixel in kilometres.
    pub cell_km: f64,
}

impl GridSpec {
    /// Creates a grid spec; dimensions must be positive and the cell size finite and positive.
    pub fn new(width: usize, height: usize, cell_km: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain("grid dimensions must be positive"));
        }
        if !cell_km.is_finite() || cell_km <= 0.0 {
            return Err(Error::domain("cell size must be a positive finite length"));
        }
        Ok(GridSpec { width, height, cell_km })
    }

    /// Number of pixels in the raster.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    /// True when the raster holds no pixels (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index of pixel `(x, y)`.
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    /// `(x, y)` coordinates of a row-major index.
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// True when `(x, y)` lies inside the raster (signed, for neighbor math).
    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }
}

impl Default for GridSpec {
    /// National composite geometry: 824 x 648 pixels at 1 km resolution.
    fn default() -> Self {
        GridSpec { width: 824, height: 648, cell_km: 1.0 }
    }
}

/// Role tag carried by a [`PixelMask`], written into mask file headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskRole {
    /// Spatially detected artifact candidates, before temporal confirmation.
    ArtifactCandidate,
    /// Confirmed artifact pixels.
    Artifact,
    /// Pixels concealed by orographic shadow.
    Shadow,
    /// Union mask handed to the correction stage.
    Correction,
    /// Pixels carrying a valid measurement.
    Valid,
}

impl MaskRole {
    /// Stable textual name used in `.msk` headers.
    pub fn as_str(&self) -> &'static str {
        match self {
            MaskRole::ArtifactCandidate => "artifact-candidate",
            MaskRole::Artifact => "artifact",
            MaskRole::Shadow => "shadow",
            MaskRole::Correction => "correction",
            MaskRole::Valid => "valid",
        }
    }

    /// Parses the textual name used in `.msk` headers.
    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "artifact-candidate" => Ok(MaskRole::ArtifactCandidate),
            "artifact" => Ok(MaskRole::Artifact),
            "shadow" => Ok(MaskRole::Shadow),
            "correction" => Ok(MaskRole::Correction),
            "valid" => Ok(MaskRole::Valid),
            other => Err(Error::parse(format!("unknown mask role {other:?}"))),
        }
    }
}

/// Binary raster with a role tag.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMask {
    /// Raster geometry.
    pub spec: GridSpec,
    /// Row-major bits.
    pub bits: Vec<bool>,
    /// What the set bits mean.
    pub role: MaskRole,
}

impl PixelMask {
    /// All-false mask.
    pub fn new(spec: GridSpec, role: MaskRole) -> Self {
        PixelMask { spec, bits: vec![false; spec.len()], role }
    }

    /// Builds a mask from existing bits; the bit count must match the spec.
    pub fn from_bits(spec: GridSpec, bits: Vec<bool>, role: MaskRole) -> Result<Self> {
        if bits.len() != spec.len() {
            return Err(Error::domain(format!(
                "mask has {} bits for a {}x{} grid",
                bits.len(),
                spec.width,
                spec.height
            )));
        }
        Ok(PixelMask { spec, bits, role })
    }

    /// Bit at `(x, y)`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[self.spec.index(x, y)]
    }

    /// Sets the bit at `(x, y)`.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        let i = self.spec.index(x, y);
        self.bits[i] = value;
    }

    /// Number of set bits.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Row-major coordinates of all set bits.
    pub fn iter_true(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.spec.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Pointwise OR with another mask of the same geometry; keeps `self`'s role.
    pub fn union(&self, other: &PixelMask) -> Result<PixelMask> {
        self.check_same_spec(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| *a || *b)
            .collect();
        Ok(PixelMask { spec: self.spec, bits, role: self.role })
    }

    /// Pointwise AND with another mask of the same geometry; keeps `self`'s role.
    pub fn intersection(&self, other: &PixelMask) -> Result<PixelMask> {
        self.check_same_spec(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| *a && *b)
            .collect();
        Ok(PixelMask { spec: self.spec, bits, role: self.role })
    }

    /// Returns a copy with a different role tag.
    pub fn with_role(mut self, role: MaskRole) -> PixelMask {
        self.role = role;
        self
    }

    fn check_same_spec(&self, other: &PixelMask) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::domain("mask geometries differ"));
        }
        Ok(())
    }
}

/// Quantized reflectivity frame.
///
/// Every pixel carries a label in `0..=13`; pixels without a valid
/// measurement have `valid == false` and label 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    /// Raster geometry.
    pub spec: GridSpec,
    /// Row-major reflectivity labels, each `<= 13`.
    pub labels: Vec<u8>,
    /// Row-major validity bits.
    pub valid: Vec<bool>,
    /// Acquisition time, seconds since the Unix epoch.
    pub timestamp: i64,
}

impl RadarFrame {
    /// All-background, all-valid frame.
    pub fn new(spec: GridSpec, timestamp: i64) -> Self {
        RadarFrame {
            spec,
            labels: vec![0; spec.len()],
            valid: vec![true; spec.len()],
            timestamp,
        }
    }

    /// Builds a frame from raw planes, enforcing the label range and the
    /// invalid-implies-zero invariant.
    pub fn from_parts(
        spec: GridSpec,
        labels: Vec<u8>,
        valid: Vec<bool>,
        timestamp: i64,
    ) -> Result<Self> {
        if labels.len() != spec.len() || valid.len() != spec.len() {
            return Err(Error::domain("frame plane size does not match grid"));
        }
        for (i, &l) in labels.iter().enumerate() {
            if l > MAX_LABEL {
                return Err(Error::domain(format!("label {l} at index {i} exceeds {MAX_LABEL}")));
            }
            if !valid[i] && l != 0 {
                return Err(Error::domain(format!(
                    "invalid pixel at index {i} carries nonzero label {l}"
                )));
            }
        }
        Ok(RadarFrame { spec, labels, valid, timestamp })
    }

    /// Label at `(x, y)`.
    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u8 {
        self.labels[self.spec.index(x, y)]
    }

    /// Validity at `(x, y)`.
    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.spec.index(x, y)]
    }

    /// Sets a valid measurement at `(x, y)`.
    pub fn set_label(&mut self, x: usize, y: usize, label: u8) -> Result<()> {
        if label > MAX_LABEL {
            return Err(Error::domain(format!("label {label} exceeds {MAX_LABEL}")));
        }
        let i = self.spec.index(x, y);
        self.labels[i] = label;
        self.valid[i] = true;
        Ok(())
    }

    /// Marks `(x, y)` as carrying no measurement (label drops to 0).
    pub fn set_invalid(&mut self, x: usize, y: usize) {
        let i = self.spec.index(x, y);
        self.labels[i] = 0;
        self.valid[i] = false;
    }

    /// Mask of precipitation pixels (valid with label > 0).
    pub fn precipitation_mask(&self) -> PixelMask {
        let bits = self
            .labels
            .iter()
            .zip(&self.valid)
            .map(|(&l, &v)| v && l > 0)
            .collect();
        PixelMask { spec: self.spec, bits, role: MaskRole::Valid }
    }

    /// Mask of valid pixels.
    pub fn valid_mask(&self) -> PixelMask {
        PixelMask { spec: self.spec, bits: self.valid.clone(), role: MaskRole::Valid }
    }
}

/// Shape of a structuring element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeShape {
    /// Full `width x height` rectangle.
    Rect,
    /// Ellipse inscribed in the `width x height` box.
    Disk,
    /// Single column of `height` pixels (width must be 1).
    VerticalLine,
}

/// Structuring element for binary morphology.
///
/// Both dimensions are odd so the element has an unambiguous center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    /// Element shape.
    pub shape: SeShape,
    /// Width in pixels (odd).
    pub width: usize,
    /// Height in pixels (odd).
    pub height: usize,
}

impl StructuringElement {
    /// Creates a structuring element; dimensions must be odd and positive.
    pub fn new(shape: SeShape, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 == 0 || height % 2 == 0 {
            return Err(Error::domain("structuring element dimensions must be odd and positive"));
        }
        if shape == SeShape::VerticalLine && width != 1 {
            return Err(Error::domain("vertical-line structuring element must have width 1"));
        }
        Ok(StructuringElement { shape, width, height })
    }

    /// Square `n x n` rectangle.
    pub fn rect(n: usize) -> Result<Self> {
        StructuringElement::new(SeShape::Rect, n, n)
    }

    /// Vertical line of `height` pixels.
    pub fn vertical_line(height: usize) -> Result<Self> {
        StructuringElement::new(SeShape::VerticalLine, 1, height)
    }

    /// Offsets `(dx, dy)` of the element relative to its center, row-major.
    pub fn offsets(&self) -> Vec<(i64, i64)> {
        let hw = (self.width / 2) as i64;
        let hh = (self.height / 2) as i64;
        let mut out = Vec::new();
        for dy in -hh..=hh {
            for dx in -hw..=hw {
                let keep = match self.shape {
                    SeShape::Rect => true,
                    SeShape::VerticalLine => dx == 0,
                    SeShape::Disk => {
                        // Ellipse membership with the conventional half-pixel slack
                        // so a "3x3 disk" is the 4-connected cross, not a lone pixel.
                        let rx = hw.max(1) as f64;
                        let ry = hh.max(1) as f64;
                        let nx = dx as f64 / rx;
                        let ny = dy as f64 / ry;
                        nx * nx + ny * ny <= 1.0 + 1e-9
                    }
                };
                if keep {
                    out.push((dx, dy));
                }
            }
        }
        out
    }
}

/// A single radar site: pixel coordinates of its center plus its range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    /// Center x in pixel units (may be fractional).
    pub x: f64,
    /// Center y in pixel units (may be fractional).
    pub y: f64,
    /// Measurement range in kilometres.
    pub range_km: f64,
}

/// The set of stations contributing to a composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarStationConfig {
    /// Station list; indices into this list identify stations elsewhere.
    pub stations: Vec<Station>,
}

impl RadarStationConfig {
    /// Validates station geometry against a grid: centers inside the raster,
    /// ranges positive and finite.
    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        if self.stations.is_empty() {
            return Err(Error::config("station list is empty"));
        }
        for (i, s) in self.stations.iter().enumerate() {
            if !(s.x.is_finite() && s.y.is_finite()) || !s.range_km.is_finite() || s.range_km <= 0.0 {
                return Err(Error::config(format!("station {i} has non-finite geometry")));
            }
            if s.x < 0.0 || s.y < 0.0 || s.x >= spec.width as f64 || s.y >= spec.height as f64 {
                return Err(Error::config(format!("station {i} center lies outside the grid")));
            }
        }
        Ok(())
    }
}

impl Default for RadarStationConfig {
    /// Four stations at the quadrant centers of the default composite,
    /// each with a 225 km range.
    fn default() -> Self {
        let range_km = 225.0;
        RadarStationConfig {
            stations: vec![
                Station { x: 206.0, y: 162.0, range_km },
                Station { x: 618.0, y: 162.0, range_km },
                Station { x: 206.0, y: 486.0, range_km },
                Station { x: 618.0, y: 486.0, range_km },
            ],
        }
    }
}
