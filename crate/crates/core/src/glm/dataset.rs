use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{RarError, Result};
use crate::linalg::Matrix;

use super::Family;

pub const INTERCEPT_NAME: &str = "(intercept)";

/// Unit-level regression inputs: response, optional exposure offset
/// (expected counts for a rate model), the exposure of interest and
/// confounder covariates.
///
/// Row order is the canonical unit order shared with adjacency matrices,
/// similarity graphs and partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    unit_ids: Vec<String>,
    y: Vec<f64>,
    offset: Option<Vec<f64>>,
    exposure_name: String,
    exposure: Vec<f64>,
    covariate_names: Vec<String>,
    covariates: Vec<Vec<f64>>,
}

impl Dataset {
    /// Builds a dataset, checking shapes, finiteness and id uniqueness.
    ///
    /// Family-specific constraints (integer counts, positive offsets) are
    /// checked by [`Dataset::validate_for`].
    pub fn new(
        unit_ids: Vec<String>,
        y: Vec<f64>,
        offset: Option<Vec<f64>>,
        exposure: Vec<f64>,
        covariates: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let s = unit_ids.len();
        if s < 2 {
            return Err(RarError::validation(format!("dataset needs at least 2 units, got {s}")));
        }
        let (covariate_names, covariates): (Vec<_>, Vec<_>) = covariates.into_iter().unzip();
        let ds = Dataset {
            unit_ids,
            y,
            offset,
            exposure_name: "exposure".to_string(),
            exposure,
            covariate_names,
            covariates,
        };
        ds.check_shape()?;
        Ok(ds)
    }

    pub fn with_exposure_name(mut self, name: impl Into<String>) -> Self {
        self.exposure_name = name.into();
        self
    }

    fn check_shape(&self) -> Result<()> {
        let s = self.unit_ids.len();
        let check = |name: &str, v: &[f64]| -> Result<()> {
            if v.len() != s {
                return Err(RarError::validation(format!(
                    "column `{name}` has length {} but there are {s} units",
                    v.len()
                )));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(RarError::validation(format!(
                    "column `{name}` has a non-finite value at unit `{}`",
                    self.unit_ids[i]
                )));
            }
            Ok(())
        };
        check("y", &self.y)?;
        check(&self.exposure_name, &self.exposure)?;
        if let Some(off) = &self.offset {
            check("offset", off)?;
        }
        for (name, col) in self.covariate_names.iter().zip(&self.covariates) {
            check(name, col)?;
        }
        let mut seen = HashSet::with_capacity(s);
        for id in &self.unit_ids {
            if !seen.insert(id.as_str()) {
                return Err(RarError::validation(format!("duplicate unit id `{id}`")));
            }
        }
        Ok(())
    }

    /// Checks the response/offset constraints of `family`.
    pub fn validate_for(&self, family: Family) -> Result<()> {
        validate_response(&self.y, self.offset.as_deref(), family, |i| self.unit_ids[i].clone())
    }

    pub fn len(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_ids.is_empty()
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn offset(&self) -> Option<&[f64]> {
        self.offset.as_deref()
    }

    pub fn exposure(&self) -> &[f64] {
        &self.exposure
    }

    pub fn exposure_name(&self) -> &str {
        &self.exposure_name
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate(&self, j: usize) -> &[f64] {
        &self.covariates[j]
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    /// Number of coefficients in the standard design `[1, exposure, X]`.
    pub fn n_coef(&self) -> usize {
        self.covariates.len() + 2
    }

    /// Restriction to the given unit indices (in the given order).
    ///
    /// Unlike [`Dataset::new`] this does not require two or more units, so
    /// that small regions can be represented and rejected by the fitter.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Dataset {
            unit_ids: idx.iter().map(|&i| self.unit_ids[i].clone()).collect(),
            y: pick(&self.y),
            offset: self.offset.as_ref().map(|o| pick(o)),
            exposure_name: self.exposure_name.clone(),
            exposure: pick(&self.exposure),
            covariate_names: self.covariate_names.clone(),
            covariates: self.covariates.iter().map(|c| pick(c)).collect(),
        }
    }

    /// All units except `i`.
    pub fn without(&self, i: usize) -> Dataset {
        let idx: Vec<usize> = (0..self.len()).filter(|&j| j != i).collect();
        self.subset(&idx)
    }

    /// The standard design `Z = [1, exposure, X]`.
    pub fn design(&self) -> DesignMatrix {
        let mut names = vec![INTERCEPT_NAME.to_string(), self.exposure_name.clone()];
        names.extend(self.covariate_names.iter().cloned());
        let p = names.len();
        let s = self.len();
        let mut m = Matrix::zeros(s, p);
        for i in 0..s {
            let row = m.row_mut(i);
            row[0] = 1.0;
            row[1] = self.exposure[i];
            for (j, c) in self.covariates.iter().enumerate() {
                row[j + 2] = c[i];
            }
        }
        DesignMatrix {
            names,
            matrix: m,
            exposure_index: Some(1),
        }
    }
}

pub(crate) fn validate_response(
    y: &[f64],
    offset: Option<&[f64]>,
    family: Family,
    unit: impl Fn(usize) -> String,
) -> Result<()> {
    match family {
        Family::Poisson => {
            if let Some(i) = y.iter().position(|&v| !(v >= 0.0) || v.fract() != 0.0) {
                return Err(RarError::validation(format!(
                    "poisson family needs non-negative integer responses; unit `{}` has y = {}",
                    unit(i),
                    y[i]
                )));
            }
            if let Some(off) = offset {
                if let Some(i) = off.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(RarError::validation(format!(
                        "poisson offset must be positive; unit `{}` has offset = {}",
                        unit(i),
                        off[i]
                    )));
                }
            }
        }
        Family::Gaussian => {
            if offset.is_some() {
                return Err(RarError::validation(
                    "an offset (expected count) is only meaningful for the poisson family",
                ));
            }
        }
    }
    Ok(())
}

/// Named design matrix with an optional marker for the exposure column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub matrix: Matrix,
    pub exposure_index: Option<usize>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, matrix: Matrix, exposure_index: Option<usize>) -> Self {
        assert_eq!(names.len(), matrix.cols(), "one name per design column");
        DesignMatrix {
            names,
            matrix,
            exposure_index,
        }
    }

    /// A single column of ones.
    pub fn intercept_only(n: usize) -> Self {
        DesignMatrix::new(
            vec![INTERCEPT_NAME.to_string()],
            Matrix::from_fn(n, 1, |_, _| 1.0),
            None,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }
}
