//! One-step leave-one-out coefficient changes (DFBETA).
//!
//! For a GLM fitted by IRLS the one-step approximation to deleting unit `i`
//! is
//!
//! ```text
//! β̂_(i) − β̂ ≈ −(Z'ΩZ)^{-1} z_i · sqrt(ω_i) · r_i / (1 − h_i)
//! ```
//!
//! where `r_i` is the raw Pearson residual, `ω_i` the working weight and
//! `h_i` the leverage. Writing `r_i / sqrt(1 − h_i)` as the standardized
//! Pearson residual gives the familiar `(1 − h_i)^{-1/2}` form. For the
//! Gaussian identity model the expression is exact.

use serde::{Deserialize, Serialize};

use crate::error::{RarError, Result};
use crate::linalg::Matrix;

use super::{fit_glm, Dataset, DesignMatrix, Family, GlmFit, GlmOptions};

/// Leverage at or above this is treated as `h = 1`.
const LEVERAGE_LIMIT: f64 = 1.0 - 1e-10;

/// Per-unit standardized exposure DFBETA and its sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationVector {
    pub d: Vec<f64>,
    /// Sample standard deviation of `d` (denominator `S − 1`).
    pub sigma_d: f64,
}

impl DeviationVector {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.len() < 2 {
            return Err(RarError::validation("deviation vector needs at least 2 entries"));
        }
        if let Some(i) = d.iter().position(|v| !v.is_finite()) {
            return Err(RarError::Numerical(format!("deviation d[{i}] is not finite")));
        }
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let ss: f64 = d.iter().map(|v| (v - mean).powi(2)).sum();
        Ok(DeviationVector {
            sigma_d: (ss / (n - 1.0)).sqrt(),
            d,
        })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

/// One-step `β̂_(i) − β̂` for every unit and every coefficient (S × p).
pub fn one_step_deltas(fit: &GlmFit, design: &DesignMatrix, unit_ids: &[String]) -> Result<Matrix> {
    let n = design.n_rows();
    let p = design.n_cols();
    if fit.n_obs() != n || fit.n_coef() != p {
        return Err(RarError::validation("fit and design dimensions differ"));
    }
    let mut out = Matrix::zeros(n, p);
    for i in 0..n {
        let h = fit.leverages[i];
        if h >= LEVERAGE_LIMIT {
            return Err(RarError::DegenerateLeverage {
                unit: unit_ids.get(i).cloned().unwrap_or_else(|| format!("#{i}")),
                leverage: h,
            });
        }
        let scale = -fit.working_weights[i].sqrt() * fit.pearson_residuals[i] / (1.0 - h);
        let step = fit.unscaled_cov.matvec(design.row(i));
        for (o, s) in out.row_mut(i).iter_mut().zip(step) {
            *o = scale * s;
        }
    }
    Ok(out)
}

/// Standardized exposure DFBETA: `d_i = (β̂_(i) − β̂)_exposure / σ̂(β̂)`.
///
/// The sign follows the deletion-minus-full convention, the negative of the
/// classical `β̂ − β̂_(i)` DFBETA. When the exposure standard error is zero
/// (an exact Gaussian fit, so every residual vanishes up to rounding) all
/// `d_i` are zero.
pub fn dfbeta(fit: &GlmFit, data: &Dataset) -> Result<DeviationVector> {
    if !fit.converged {
        return Err(RarError::Numerical(
            "influence measures need a converged fit".to_string(),
        ));
    }
    let design = data.design();
    let j = fit
        .exposure_index
        .ok_or_else(|| RarError::validation("fit has no exposure coefficient"))?;
    let deltas = one_step_deltas(fit, &design, data.unit_ids())?;
    let se = fit.se(j);
    let raw: Vec<f64> = (0..data.len()).map(|i| deltas[(i, j)]).collect();
    let d = if is_exact_fit(fit, data) {
        vec![0.0; raw.len()]
    } else if se > 0.0 {
        raw.iter().map(|v| v / se).collect()
    } else if raw.iter().all(|v| v.abs() < 1e-300) {
        vec![0.0; raw.len()]
    } else {
        return Err(RarError::Numerical(
            "exposure standard error is zero but residuals are not".to_string(),
        ));
    };
    DeviationVector::new(d)
}

/// A Gaussian fit whose residual sum of squares is at rounding level
/// relative to the response.
fn is_exact_fit(fit: &GlmFit, data: &Dataset) -> bool {
    if fit.family != Family::Gaussian {
        return false;
    }
    let rss: f64 = fit.response_residuals().iter().map(|r| r * r).sum();
    let yy: f64 = data.y().iter().map(|v| v * v).sum();
    rss <= 1e-24 * yy.max(f64::MIN_POSITIVE)
}

/// Coefficients refitted without unit `i`; the brute-force counterpart of
/// [`one_step_deltas`].
pub fn exact_loo_beta(data: &Dataset, family: Family, i: usize, opts: &GlmOptions) -> Result<Vec<f64>> {
    if i >= data.len() {
        return Err(RarError::validation(format!("unit index {i} out of range")));
    }
    if data.len() < data.n_coef() + 2 {
        return Err(RarError::validation(format!(
            "leave-one-out fit needs at least {} units, have {}",
            data.n_coef() + 2,
            data.len()
        )));
    }
    let fit = fit_glm(&data.without(i), family, opts)?;
    Ok(fit.beta)
}
