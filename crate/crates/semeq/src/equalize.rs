//! Zero-shot semantic equalizers built from paired anchors.
//!
//! Two agents that never trained together describe the same content in
//! different latent spaces. Given N anchor pairs (the same underlying items
//! embedded by both sides), an equalizer pair maps a transmit-side vector to
//! channel coefficients and maps received coefficients into the receive-side
//! space, without touching either model's weights.
//!
//! Three constructions are provided:
//!
//! * [`build_pfe`]: whitens both anchor sets to Parseval frames. Analysis and
//!   synthesis are then 1-Lipschitz, so coefficient noise is never amplified,
//!   at any redundancy N.
//! * [`build_fe`]: uses the raw (row-normalized) anchors for analysis and a
//!   pseudo-inverse for synthesis. Exact on clean coefficients, but the
//!   pseudo-inverse amplifies noise by the anchor condition number.
//! * [`build_upe`]: a unitary map from the SVD of the pilot cross-covariance,
//!   the closed-form solution of the orthogonal Procrustes problem; optional
//!   truncation keeps only the strongest aligned directions.
//!
//! All inputs are L2-normalized before analysis, which keeps every
//! coefficient in `[-1, 1]` and makes the quantizer grid of
//! [`crate::quant`] directly applicable.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frame::{normalize_rows, AnalysisOperator};
use crate::quant::SemanticCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EqualizerMethod {
    /// Parseval frame equalizer: both sides whitened.
    Pfe,
    /// Frame equalizer: raw anchors, pseudo-inverse synthesis.
    Fe,
    /// Unitary Procrustes equalizer from paired pilots.
    Upe,
}

impl std::fmt::Display for EqualizerMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EqualizerMethod::Pfe => "pfe",
            EqualizerMethod::Fe => "fe",
            EqualizerMethod::Upe => "upe",
        })
    }
}

impl std::str::FromStr for EqualizerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pfe" => Ok(EqualizerMethod::Pfe),
            "fe" => Ok(EqualizerMethod::Fe),
            "upe" => Ok(EqualizerMethod::Upe),
            other => Err(Error::InvalidInput(format!(
                "unknown equalizer method {other:?}, expected pfe, fe or upe"
            ))),
        }
    }
}

/// A matched pre/post equalizer pair. `encode` produces the coefficients the
/// transmitter sends; `decode` maps (possibly quantized or noisy)
/// coefficients into the receiver's latent space.
#[derive(Debug, Clone)]
pub struct EqualizerPair {
    method: EqualizerMethod,
    pre: AnalysisOperator,
    /// Receive-side synthesis, applied as `post * coeffs`.
    post: DMatrix<f64>,
}

impl EqualizerPair {
    pub fn method(&self) -> EqualizerMethod {
        self.method
    }

    /// Number of channel coefficients per encoded vector.
    pub fn n_coeffs(&self) -> usize {
        self.pre.len()
    }

    /// Transmit-side latent dimension.
    pub fn dim_tx(&self) -> usize {
        self.pre.dim()
    }

    /// Receive-side latent dimension.
    pub fn dim_rx(&self) -> usize {
        self.post.nrows()
    }

    pub fn pre_operator(&self) -> &AnalysisOperator {
        &self.pre
    }

    pub fn post_matrix(&self) -> &DMatrix<f64> {
        &self.post
    }

    /// L2-normalizes `x` and analyzes it into channel coefficients.
    pub fn encode(&self, x: &DVector<f64>, source_user: usize) -> Result<SemanticCode> {
        let norm = x.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot encode zero or non-finite vector".into()));
        }
        let coeffs = self.pre.analyze(&(x / norm))?;
        Ok(SemanticCode::new(coeffs.iter().copied().collect(), source_user))
    }

    /// Synthesizes received coefficients into the receive-side space.
    pub fn decode(&self, code: &SemanticCode) -> Result<DVector<f64>> {
        if code.len() != self.n_coeffs() {
            return Err(Error::dim("decode", self.n_coeffs(), code.len()));
        }
        let c = DVector::from_column_slice(&code.coeffs);
        Ok(&self.post * c)
    }
}

/// Parseval frame equalizer. Anchor rows are unit-normalized, then both
/// sides are whitened; synthesis is the transpose of the whitened receive
/// frame. With full-rank anchors and `N >= d` the composite map reproduces
/// the transform relating the two latent spaces; with `N < d` it reproduces
/// it on the span of the transmit anchors.
pub fn build_pfe(anchors_tx: &DMatrix<f64>, anchors_rx: &DMatrix<f64>) -> Result<EqualizerPair> {
    check_paired(anchors_tx, anchors_rx, "build_pfe")?;
    let pre = AnalysisOperator::new(normalize_rows(anchors_tx)?)?.whiten()?;
    let rx = AnalysisOperator::new(normalize_rows(anchors_rx)?)?.whiten()?;
    let post = rx.matrix().transpose();
    Ok(EqualizerPair { method: EqualizerMethod::Pfe, pre, post })
}

/// Frame equalizer: analysis by the normalized transmit anchors, synthesis by
/// the Moore-Penrose pseudo-inverse of the normalized receive anchors.
pub fn build_fe(anchors_tx: &DMatrix<f64>, anchors_rx: &DMatrix<f64>) -> Result<EqualizerPair> {
    check_paired(anchors_tx, anchors_rx, "build_fe")?;
    let pre = AnalysisOperator::new(normalize_rows(anchors_tx)?)?;
    let post = pseudo_inverse(&normalize_rows(anchors_rx)?)?;
    Ok(EqualizerPair { method: EqualizerMethod::Fe, pre, post })
}

/// Unitary Procrustes equalizer from `n_pilots` paired pilot embeddings.
///
/// The SVD `K^T H = U S V^T` of the pilot cross-covariance yields the
/// orthogonal map `U V^T` minimizing `||H - K P||_F`; the pre-equalizer keeps
/// the first `n_keep` columns of U and the post-equalizer the matching
/// columns of V, so both operators are partial isometries.
pub fn build_upe(
    pilots_tx: &DMatrix<f64>,
    pilots_rx: &DMatrix<f64>,
    n_keep: usize,
) -> Result<EqualizerPair> {
    check_paired(pilots_tx, pilots_rx, "build_upe")?;
    let (d, p) = (pilots_tx.ncols(), pilots_rx.ncols());
    let limit = d.min(p).min(pilots_tx.nrows());
    if n_keep == 0 || n_keep > limit {
        return Err(Error::InvalidInput(format!(
            "n_keep must be in 1..={limit} for {d}-to-{p} dimensional pilots, got {n_keep}"
        )));
    }
    let k = normalize_rows(pilots_tx)?;
    let h = normalize_rows(pilots_rx)?;
    let svd = (k.transpose() * h).svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");

    let mut pre = DMatrix::zeros(n_keep, d);
    let mut post = DMatrix::zeros(p, n_keep);
    for i in 0..n_keep {
        pre.set_row(i, &u.column(i).transpose());
        post.set_column(i, &v_t.row(i).transpose());
    }
    let pre = AnalysisOperator::new(pre)?;
    Ok(EqualizerPair { method: EqualizerMethod::Upe, pre, post })
}

/// Closed-form orthogonal Procrustes solution: the map `P` minimizing
/// `||rx - tx * P||_F` over matrices with orthonormal columns/rows, from the
/// SVD of `tx^T rx`.
pub fn procrustes_align(tx: &DMatrix<f64>, rx: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_paired(tx, rx, "procrustes_align")?;
    let svd = (tx.transpose() * rx).svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    Ok(u * v_t)
}

fn check_paired(tx: &DMatrix<f64>, rx: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if tx.nrows() == 0 || tx.ncols() == 0 || rx.ncols() == 0 {
        return Err(Error::InvalidInput(format!("{context}: empty anchor matrix")));
    }
    if tx.nrows() != rx.nrows() {
        return Err(Error::dim(context, format!("{} paired rows", tx.nrows()), rx.nrows()));
    }
    Ok(())
}

/// Moore-Penrose pseudo-inverse through the SVD, with the same spectral
/// cutoff convention as frame whitening.
fn pseudo_inverse(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, d) = (matrix.nrows(), matrix.ncols());
    let svd = matrix.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    if smax == 0.0 {
        return Err(Error::RankZero("pseudo_inverse"));
    }
    let cutoff = n.max(d) as f64 * f64::EPSILON * smax * smax;
    let mut pinv = DMatrix::zeros(d, n);
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i];
        if s * s <= cutoff {
            continue;
        }
        let vi = v_t.row(i);
        let ui = u.column(i);
        for r in 0..d {
            for c in 0..n {
                pinv[(r, c)] += vi[r] * ui[c] / s;
            }
        }
    }
    Ok(pinv)
}
