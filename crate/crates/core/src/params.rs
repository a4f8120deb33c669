//! Problem parameters for the two-exponent Dirichlet problem on (0,1).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Exponents and spectral parameters of
/// −(|u′|^{p−2}u′)′ − (|u′|^{q−2}u′)′ = α|u|^{p−2}u + β|u|^{q−2}u on (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Params {
    pub fn new(p: f64, q: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::domain("params must be finite"));
        }
        if !(1.0 < q && q < p) {
            return Err(Error::domain(format!(
                "exponents must satisfy 1 < q < p, got p={p}, q={q}"
            )));
        }
        Ok(Params { p, q, alpha, beta })
    }

    /// Same exponents, different spectral parameters.
    pub fn with_spectral(&self, alpha: f64, beta: f64) -> Self {
        Params { alpha, beta, ..*self }
    }
}
