//! Uniform mid-tread quantization of frame coefficients on `[-1, 1]`.
//!
//! With q bits per coefficient the grid has `2^q` levels
//! `-1, -1 + step, ..., 1` with `step = 2 / (2^q - 1)`, so both endpoints are
//! exact levels. Inputs are rounded to the nearest level, ties toward the
//! lower one; anything outside `[-1, 1]` is clamped first (and logged, since
//! coefficients of unit-norm inputs under the equalizers built here should
//! never leave the interval).

use crate::error::{Error, Result};

/// A coefficient vector as it travels over the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticCode {
    pub coeffs: Vec<f64>,
    /// Bits per coefficient; 32 marks an effectively unquantized code.
    pub bits: u32,
    pub source_user: usize,
}

impl SemanticCode {
    pub fn new(coeffs: Vec<f64>, source_user: usize) -> Self {
        SemanticCode { coeffs, bits: 32, source_user }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Grid spacing `2 / (2^q - 1)` for q-bit quantization.
///
/// ```
/// assert_eq!(semeq::quant::step_size(2).unwrap(), 2.0 / 3.0);
/// ```
pub fn step_size(bits: u32) -> Result<f64> {
    if bits == 0 || bits > 32 {
        return Err(Error::InvalidInput(format!("quantizer bits must be in 1..=32, got {bits}")));
    }
    Ok(2.0 / (2.0_f64.powi(bits as i32) - 1.0))
}

/// Rounds one value to the q-bit grid.
pub fn quantize_value(x: f64, bits: u32) -> Result<f64> {
    let step = step_size(bits)?;
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("cannot quantize non-finite value {x}")));
    }
    let clamped = if !(-1.0..=1.0).contains(&x) {
        log::warn!("quantizer input {x} outside [-1, 1]; clamping");
        x.clamp(-1.0, 1.0)
    } else {
        x
    };
    // nearest level, half-way cases toward the lower level
    let idx = ((clamped + 1.0) / step - 0.5).ceil();
    let idx = idx.clamp(0.0, 2.0_f64.powi(bits as i32) - 1.0);
    Ok(-1.0 + idx * step)
}

/// Quantizes every coefficient of a code to q bits.
pub fn quantize(code: &SemanticCode, bits: u32) -> Result<SemanticCode> {
    let coeffs = code
        .coeffs
        .iter()
        .map(|&c| quantize_value(c, bits))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SemanticCode { coeffs, bits, source_user: code.source_user })
}

/// Payload compression factor relative to sending `n_absolute` raw 32-bit
/// floats: `(n_coeffs * bits) / (n_absolute * 32)`.
pub fn compression_factor(n_coeffs: usize, bits: u32, n_absolute: usize) -> Result<f64> {
    if n_coeffs == 0 || n_absolute == 0 {
        return Err(Error::InvalidInput("compression factor needs nonzero sizes".into()));
    }
    if bits == 0 || bits > 32 {
        return Err(Error::InvalidInput(format!("bits must be in 1..=32, got {bits}")));
    }
    Ok((n_coeffs as f64 * bits as f64) / (n_absolute as f64 * 32.0))
}
