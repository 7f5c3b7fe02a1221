//! Generalized linear models fitted by iteratively reweighted least squares,
//! plus the per-unit influence quantities that drive region detection.
//!
//! Two families are supported: Poisson with log link (counts with an
//! optional expected-count offset entering as `log(n_i)`) and Gaussian with
//! identity link. The standard design always carries an intercept followed
//! by the exposure column and the confounders.

mod dataset;
mod influence;
mod irls;

use serde::{Deserialize, Serialize};

pub use dataset::{Dataset, DesignMatrix, INTERCEPT_NAME};
pub use influence::{dfbeta, exact_loo_beta, one_step_deltas, DeviationVector};
pub use irls::{fit_design, fit_glm, GlmFit};

/// Response distribution and link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Poisson response, log link.
    #[serde(rename = "poisson-log")]
    Poisson,
    /// Normal response, identity link.
    #[serde(rename = "gaussian-identity")]
    Gaussian,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Gaussian => "gaussian",
        }
    }

    /// Extra scale parameters estimated alongside the coefficients.
    pub fn n_scale_params(self) -> usize {
        match self {
            Family::Poisson => 0,
            Family::Gaussian => 1,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "poisson-log" => Ok(Family::Poisson),
            "gaussian" | "gaussian-identity" | "normal" => Ok(Family::Gaussian),
            other => Err(format!("unknown family `{other}` (expected poisson or gaussian)")),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// IRLS controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmOptions {
    pub max_iter: usize,
    /// Convergence threshold on the largest absolute coefficient change.
    pub tol: f64,
}

impl Default for GlmOptions {
    fn default() -> Self {
        GlmOptions {
            max_iter: 50,
            tol: 1e-8,
        }
    }
}
