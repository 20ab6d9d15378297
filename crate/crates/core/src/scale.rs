//! Reflectivity quantization: the mapping between 4-bit labels and dBZ.
//!
//! Composites store one of 14 reflectivity levels per pixel. Level 0 is the
//! "no precipitation" background; levels 1..=13 are increasing dBZ values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{LEVEL_COUNT, MAX_LABEL};

/// Representative dBZ value per label, strictly increasing, label 0 at 0 dBZ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityScale {
    dbz: Vec<f64>,
}

impl ReflectivityScale {
    /// Builds a scale from 14 strictly increasing dBZ values starting at 0.
    pub fn new(dbz: Vec<f64>) -> Result<Self> {
        if dbz.len() != LEVEL_COUNT {
            return Err(Error::domain(format!(
                "scale needs {LEVEL_COUNT} levels, got {}",
                dbz.len()
            )));
        }
        if dbz[0] != 0.0 {
            return Err(Error::domain("level 0 must map to 0 dBZ"));
        }
        for w in dbz.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::domain("scale values must be finite and strictly increasing"));
            }
        }
        Ok(ReflectivityScale { dbz })
    }

    /// The dBZ values, one per label.
    pub fn values(&self) -> &[f64] {
        &self.dbz
    }

    /// dBZ value of a label.
    pub fn label_to_dbz(&self, label: u8) -> Result<f64> {
        if label > MAX_LABEL {
            return Err(Error::domain(format!("label {label} exceeds {MAX_LABEL}")));
        }
        Ok(self.dbz[label as usize])
    }

    /// Label whose dBZ value is nearest to `dbz`; exact ties resolve to the
    /// lower label. Values beyond either end clamp to the end labels.
    pub fn dbz_to_label(&self, dbz: f64) -> Result<u8> {
        if !dbz.is_finite() {
            return Err(Error::domain("dBZ value must be finite"));
        }
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (i, &v) in self.dbz.iter().enumerate() {
            let d = (dbz - v).abs();
            // Strict comparison keeps the first (lower) label on exact ties.
            if d < best_dist {
                best_dist = d;
                best = i;
            }
        }
        Ok(best as u8)
    }

    /// Largest dBZ value on the scale.
    pub fn max_dbz(&self) -> f64 {
        *self.dbz.last().unwrap()
    }
}

impl Default for ReflectivityScale {
    /// Operational composite scale.
    fn default() -> Self {
        ReflectivityScale {
            dbz: vec![
                0.0, 11.82, 14.0, 19.46, 22.0, 26.69, 30.0, 34.19, 38.0, 41.82, 46.0, 50.19,
                54.27, 58.0,
            ],
        }
    }
}
