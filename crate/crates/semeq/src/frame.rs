//! Finite frames for `R^d` and their Parseval normalization.
//!
//! A frame is a family of N vectors spanning `R^d`, stored here as the rows
//! of an N x d analysis operator F. Analysis maps a vector to its frame
//! coefficients, `c = F x`; synthesis maps coefficients back through the
//! transpose, `x_hat = F^T c`. The frame operator `S = F^T F` measures how
//! evenly the rows cover space: its extreme eigenvalues are the frame bounds
//! (A, B), and A = B = 1 characterizes a Parseval frame, for which
//! synthesis-after-analysis is the identity.
//!
//! Any operator can be pushed to the nearest Parseval frame by whitening,
//! `F_tilde = F S^{-1/2}`, with the inverse square root taken on the non-null
//! subspace only. When the rows do not span (N < d, or degenerate rows) the
//! whitened operator is a partial isometry and synthesis-after-analysis
//! becomes the orthogonal projection onto the row span, which is the best
//! reconstruction available from the coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Frame bounds: the sharpest constants `A ||x||^2 <= ||Fx||^2 <= B ||x||^2`
/// over all of `R^d`. A is zero whenever the rows fail to span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

/// A frame presented row-wise as an N x d matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOperator {
    matrix: DMatrix<f64>,
    rank: usize,
    whitened: bool,
}

/// Eigenvalue cutoff for numerical rank: an eigenvalue of S counts as zero
/// when it is at most `max(N, d) * eps * lambda_max`.
fn eigenvalue_cutoff(n: usize, d: usize, lambda_max: f64) -> f64 {
    n.max(d) as f64 * f64::EPSILON * lambda_max
}

impl AnalysisOperator {
    /// Wraps a row-wise frame matrix, computing its numerical rank.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidInput("analysis operator must be non-empty".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("analysis operator contains non-finite entries".into()));
        }
        let rank = numerical_rank(&matrix);
        Ok(AnalysisOperator { matrix, rank, whitened: false })
    }

    /// Builds the operator from `n * d` row-major entries.
    pub fn from_rows(n: usize, d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * d {
            return Err(Error::dim("from_rows", n * d, entries.len()));
        }
        Self::new(DMatrix::from_row_slice(n, d, entries))
    }

    /// Number of frame vectors (rows).
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Ambient dimension (columns).
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// True when this operator came out of [`AnalysisOperator::whiten`].
    pub fn is_whitened(&self) -> bool {
        self.whitened
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Frame coefficients `c = F x`.
    pub fn analyze(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::dim("analyze", self.dim(), x.len()));
        }
        Ok(&self.matrix * x)
    }

    /// Synthesis `x_hat = F^T c`, the adjoint of analysis.
    pub fn synthesize(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        if coeffs.len() != self.len() {
            return Err(Error::dim("synthesize", self.len(), coeffs.len()));
        }
        Ok(self.matrix.transpose() * coeffs)
    }

    /// Frame operator `S = F^T F`, a d x d Gram matrix of the columns.
    pub fn frame_operator(&self) -> DMatrix<f64> {
        self.matrix.transpose() * &self.matrix
    }

    /// Sharp frame bounds over all of `R^d`: the extreme squared singular
    /// values of F, with the lower bound collapsing to zero when the rows do
    /// not span.
    pub fn frame_bounds(&self) -> FrameBounds {
        let sv = self.singular_values();
        let upper = sv.iter().fold(0.0_f64, |a, &s| a.max(s * s));
        let lower = if self.rank < self.dim() {
            0.0
        } else {
            sv.iter().fold(f64::INFINITY, |a, &s| a.min(s * s))
        };
        FrameBounds { lower, upper }
    }

    /// Ratio of the largest to the smallest nonzero singular value.
    pub fn condition_number(&self) -> Result<f64> {
        if self.rank == 0 {
            return Err(Error::RankZero("condition_number"));
        }
        let sv = self.singular_values();
        let smax = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
        let cutoff = eigenvalue_cutoff(self.len(), self.dim(), smax * smax);
        let smin = sv
            .iter()
            .filter(|&&s| s * s > cutoff)
            .fold(f64::INFINITY, |a, &s| a.min(s));
        Ok(smax / smin)
    }

    /// Nearest Parseval frame: `F_tilde = F S^{-1/2}` with the inverse square
    /// root pseudo-inverted past the rank cutoff. Computed through the SVD of
    /// F itself (`F = U Sigma V^T` gives `F_tilde = U_r V_r^T`), which avoids
    /// forming S and squaring the condition number. Idempotent up to
    /// round-off.
    pub fn whiten(&self) -> Result<AnalysisOperator> {
        let (n, d) = (self.len(), self.dim());
        let svd = self.matrix.clone().svd(true, true);
        let u = svd.u.as_ref().expect("svd with u");
        let v_t = svd.v_t.as_ref().expect("svd with v_t");
        let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
        if smax == 0.0 {
            return Err(Error::RankZero("whiten"));
        }
        let cutoff = eigenvalue_cutoff(n, d, smax * smax);
        let kept: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| {
                let s = svd.singular_values[i];
                s * s > cutoff
            })
            .collect();
        let mut whitened = DMatrix::zeros(n, d);
        for &i in &kept {
            // rank-one update u_i v_i^T per retained direction
            let ui = u.column(i);
            let vi = v_t.row(i);
            for r in 0..n {
                for c in 0..d {
                    whitened[(r, c)] += ui[r] * vi[c];
                }
            }
        }
        Ok(AnalysisOperator { matrix: whitened, rank: kept.len(), whitened: true })
    }

    fn singular_values(&self) -> Vec<f64> {
        self.matrix
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect()
    }
}

fn numerical_rank(matrix: &DMatrix<f64>) -> usize {
    let sv = matrix.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    if smax == 0.0 {
        return 0;
    }
    let cutoff = eigenvalue_cutoff(matrix.nrows(), matrix.ncols(), smax * smax);
    sv.iter().filter(|&&s| s * s > cutoff).count()
}

/// Normalizes every row to unit Euclidean length. Errors on a zero row.
pub fn normalize_rows(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = matrix.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot normalize zero or non-finite row".into()));
        }
        row /= norm;
    }
    Ok(out)
}
