//! Region covariance descriptors and the generalized-eigenvalue metric.
//!
//! A descriptor is the sample covariance (divisor N-1) of the per-pixel
//! feature vectors over a square window, regularized by adding `EPSILON` to
//! the diagonal so it is strictly positive definite. Distances compare the
//! eigenvalue spectra of one descriptor in the metric of the other:
//! `d(A, B) = sqrt(sum_i ln^2 lambda_i)` over the generalized eigenvalues of
//! the pencil (A, B).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::texture::gabor::FeatureStack;

/// Diagonal regularizer added to every sample covariance.
pub const EPSILON: f64 = 1e-6;

/// Default descriptor window side length in pixels.
pub const DEFAULT_WINDOW: usize = 39;

/// Regularized covariance of feature vectors over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceDescriptor {
    /// Row-major `dim x dim` symmetric matrix.
    pub matrix: Vec<f64>,
    /// Feature dimension.
    pub dim: usize,
    /// Window side length the descriptor was computed over.
    pub window: usize,
    /// Window center `(x, y)` on the source grid.
    pub center: (usize, usize),
}

impl CovarianceDescriptor {
    /// Matrix entry `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.matrix)
    }
}

/// Computes the descriptor over the window centered at `center`, clipping
/// the window at the raster borders.
pub fn region_covariance(
    stack: &FeatureStack,
    center: (usize, usize),
    window: usize,
) -> Result<CovarianceDescriptor> {
    let spec = &stack.spec;
    if window % 2 == 0 {
        return Err(Error::domain("descriptor window must be odd"));
    }
    if window > spec.width.min(spec.height) {
        return Err(Error::domain("descriptor window larger than grid"));
    }
    if window < 3 {
        return Err(Error::domain("descriptor window must cover at least 3 pixels per side"));
    }
    let (cx, cy) = center;
    if cx >= spec.width || cy >= spec.height {
        return Err(Error::domain("descriptor center outside grid"));
    }
    let dim = stack.dim();
    let half = window / 2;
    let x0 = cx.saturating_sub(half);
    let y0 = cy.saturating_sub(half);
    let x1 = (cx + half).min(spec.width - 1);
    let y1 = (cy + half).min(spec.height - 1);
    let n = (x1 - x0 + 1) * (y1 - y0 + 1);
    debug_assert!(n >= 2);

    // One pass: per-plane sums and upper-triangle cross sums.
    let mut sums = vec![0.0; dim];
    let mut cross = vec![0.0; dim * dim];
    let mut v = vec![0.0; dim];
    for y in y0..=y1 {
        for x in x0..=x1 {
            let idx = y * spec.width + x;
            for (i, plane) in stack.planes.iter().enumerate() {
                v[i] = plane[idx];
            }
            for i in 0..dim {
                sums[i] += v[i];
                let row = i * dim;
                for j in i..dim {
                    cross[row + j] += v[i] * v[j];
                }
            }
        }
    }

    let nf = n as f64;
    let mut matrix = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let c = (cross[i * dim + j] - sums[i] * sums[j] / nf) / (nf - 1.0);
            matrix[i * dim + j] = c;
            matrix[j * dim + i] = c;
        }
        matrix[i * dim + i] += EPSILON;
    }
    Ok(CovarianceDescriptor { matrix, dim, window, center })
}

/// Förstner metric between two descriptors of equal dimension.
pub fn covariance_distance(a: &CovarianceDescriptor, b: &CovarianceDescriptor) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::domain(format!(
            "descriptor dimensions differ: {} vs {}",
            a.dim, b.dim
        )));
    }
    let am = a.to_dmatrix();
    let bm = b.to_dmatrix();
    // Generalized eigenvalues of (A, B) via the Cholesky factor of B:
    // lambda(A, B) = eig(L^-1 A L^-T). The metric is symmetric in (A, B)
    // because inverting the eigenvalues leaves sum ln^2 unchanged, so if B
    // resists factorization we factor A instead.
    let (chol, target) = match nalgebra::Cholesky::new(bm) {
        Some(c) => (c, am),
        None => match nalgebra::Cholesky::new(am) {
            Some(c) => (c, b.to_dmatrix()),
            None => {
                return Err(Error::numeric(
                    "covariance pencil is singular despite regularization",
                ))
            }
        },
    };
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&target)
        .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
    let z = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
    let sym = (&z + z.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    let mut total = 0.0;
    for &lambda in eigs.iter() {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::numeric(format!(
                "non-positive generalized eigenvalue {lambda}"
            )));
        }
        let ln = lambda.ln();
        total += ln * ln;
    }
    Ok(total.sqrt())
}
