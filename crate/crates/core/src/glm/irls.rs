use statrs::function::gamma::ln_gamma;

use crate::error::{RarError, Result};
use crate::linalg::{dot, Cholesky, Matrix};

use super::dataset::validate_response;
use super::{Dataset, DesignMatrix, Family, GlmOptions};

/// Fitted GLM with everything the influence computations need.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub family: Family,
    pub coef_names: Vec<String>,
    pub beta: Vec<f64>,
    /// Estimated covariance of `beta`: `(Z'ΩZ)^{-1}` for Poisson and
    /// `φ̂ (Z'Z)^{-1}` for Gaussian, with `φ̂ = RSS / (S - p)`.
    pub cov_beta: Matrix,
    /// `(Z'ΩZ)^{-1}` at convergence, without dispersion scaling.
    pub unscaled_cov: Matrix,
    pub exposure_index: Option<usize>,
    pub dispersion: f64,
    pub mu: Vec<f64>,
    pub working_weights: Vec<f64>,
    pub leverages: Vec<f64>,
    /// Raw Pearson residuals `(y - μ) / sqrt(V(μ))`, not divided by the
    /// dispersion or by `sqrt(1 - h)`.
    pub pearson_residuals: Vec<f64>,
    pub loglik: f64,
    /// Log-likelihood after each accepted coefficient update.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub n_iter: usize,
}

impl GlmFit {
    pub fn n_obs(&self) -> usize {
        self.mu.len()
    }

    pub fn n_coef(&self) -> usize {
        self.beta.len()
    }

    /// Coefficients plus any estimated scale parameter.
    pub fn n_params(&self) -> usize {
        self.beta.len() + self.family.n_scale_params()
    }

    pub fn se(&self, j: usize) -> f64 {
        self.cov_beta[(j, j)].max(0.0).sqrt()
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.coef_names.iter().position(|n| n == name).map(|j| self.beta[j])
    }

    pub fn exposure_coef(&self) -> Option<f64> {
        self.exposure_index.map(|j| self.beta[j])
    }

    /// σ̂(β̂) of the exposure coefficient.
    pub fn se_exposure(&self) -> Option<f64> {
        self.exposure_index.map(|j| self.se(j))
    }

    /// Response residuals `y - μ̂`, recovered from the Pearson residuals.
    pub fn response_residuals(&self) -> Vec<f64> {
        self.pearson_residuals
            .iter()
            .zip(&self.mu)
            .map(|(r, &m)| match self.family {
                Family::Poisson => r * m.sqrt(),
                Family::Gaussian => *r,
            })
            .collect()
    }
}

/// Fits `family` on the standard design `[1, exposure, X]` of `data`.
pub fn fit_glm(data: &Dataset, family: Family, opts: &GlmOptions) -> Result<GlmFit> {
    data.validate_for(family)?;
    let design = data.design();
    fit_design(&design, data.y(), data.offset(), family, opts)
}

/// Fits `family` on an arbitrary design matrix.
///
/// Non-convergence is not an error: the last iterate is returned with
/// `converged = false`.
pub fn fit_design(
    design: &DesignMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    family: Family,
    opts: &GlmOptions,
) -> Result<GlmFit> {
    let n = design.n_rows();
    let p = design.n_cols();
    if y.len() != n || offset.is_some_and(|o| o.len() != n) {
        return Err(RarError::validation("response, offset and design lengths differ"));
    }
    if opts.max_iter == 0 || !(opts.tol > 0.0) {
        return Err(RarError::validation("max_iter must be >= 1 and tol > 0"));
    }
    if n <= p {
        return Err(RarError::validation(format!(
            "under-identified fit: {n} observations for {p} coefficients"
        )));
    }
    validate_response(y, offset, family, |i| format!("#{i}"))?;

    match family {
        Family::Gaussian => fit_gaussian(design, y),
        Family::Poisson => fit_poisson(design, y, offset, opts),
    }
}

/// Accumulates `Z'WZ` and `Z'Wz`.
fn normal_equations(design: &DesignMatrix, w: &[f64], z: &[f64]) -> (Matrix, Vec<f64>) {
    let p = design.n_cols();
    let mut a = Matrix::zeros(p, p);
    let mut b = vec![0.0; p];
    for i in 0..design.n_rows() {
        let row = design.row(i);
        let wi = w[i];
        for j in 0..p {
            let wz = wi * row[j];
            b[j] += wz * z[i];
            for k in 0..=j {
                a[(j, k)] += wz * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[(k, j)] = a[(j, k)];
        }
    }
    (a, b)
}

fn factor(design: &DesignMatrix, a: &Matrix) -> Result<Cholesky> {
    Cholesky::factor(a).map_err(|j| RarError::SingularDesign {
        column: design.names[j].clone(),
    })
}

fn leverages(design: &DesignMatrix, inv: &Matrix, w: &[f64]) -> Vec<f64> {
    (0..design.n_rows())
        .map(|i| {
            let z = design.row(i);
            w[i] * dot(z, &inv.matvec(z))
        })
        .collect()
}

fn fit_gaussian(design: &DesignMatrix, y: &[f64]) -> Result<GlmFit> {
    let n = design.n_rows();
    let p = design.n_cols();
    let w = vec![1.0; n];
    let (a, b) = normal_equations(design, &w, y);
    let chol = factor(design, &a)?;
    let beta = chol.solve(&b);
    let inv = chol.inverse();
    let mu: Vec<f64> = (0..n).map(|i| dot(design.row(i), &beta)).collect();
    let resid: Vec<f64> = y.iter().zip(&mu).map(|(y, m)| y - m).collect();
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let dispersion = rss / (n - p) as f64;
    let loglik = gaussian_loglik(rss, n);
    let mut cov = inv.clone();
    for i in 0..p {
        for j in 0..p {
            cov[(i, j)] *= dispersion;
        }
    }
    Ok(GlmFit {
        family: Family::Gaussian,
        coef_names: design.names.clone(),
        beta,
        cov_beta: cov,
        leverages: leverages(design, &inv, &w),
        unscaled_cov: inv,
        exposure_index: design.exposure_index,
        dispersion,
        mu,
        working_weights: w,
        pearson_residuals: resid,
        loglik,
        loglik_trace: vec![loglik],
        converged: true,
        n_iter: 1,
    })
}

/// Profile log-likelihood at the MLE variance `RSS / n`.
///
/// An exact fit would give `+inf`; the variance is floored at the smallest
/// positive normal double so the value stays finite.
pub(crate) fn gaussian_loglik(rss: f64, n: usize) -> f64 {
    let n = n as f64;
    let s2 = (rss / n).max(f64::MIN_POSITIVE);
    -0.5 * n * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0)
}

fn poisson_loglik(y: &[f64], mu: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(&y, &m)| {
            let t = if y > 0.0 { y * m.ln() } else { 0.0 };
            t - m - ln_gamma(y + 1.0)
        })
        .sum()
}

fn linear_predictor(design: &DesignMatrix, beta: &[f64], log_off: &[f64]) -> Vec<f64> {
    (0..design.n_rows())
        .map(|i| dot(design.row(i), beta) + log_off[i])
        .collect()
}

fn poisson_loglik_at(design: &DesignMatrix, y: &[f64], beta: &[f64], log_off: &[f64]) -> f64 {
    let mu: Vec<f64> = linear_predictor(design, beta, log_off)
        .into_iter()
        .map(f64::exp)
        .collect();
    let ll = poisson_loglik(y, &mu);
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

fn fit_poisson(
    design: &DesignMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    opts: &GlmOptions,
) -> Result<GlmFit> {
    let n = design.n_rows();
    let log_off: Vec<f64> = match offset {
        Some(o) => o.iter().map(|v| v.ln()).collect(),
        None => vec![0.0; n],
    };

    // starting values from μ₀ = y + 0.1
    let mu0: Vec<f64> = y.iter().map(|v| v + 0.1).collect();
    let z0: Vec<f64> = (0..n)
        .map(|i| mu0[i].ln() - log_off[i] + (y[i] - mu0[i]) / mu0[i])
        .collect();
    let (a, b) = normal_equations(design, &mu0, &z0);
    let mut beta = factor(design, &a)?.solve(&b);
    let mut ll = poisson_loglik_at(design, y, &beta, &log_off);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut n_iter = 0;

    while n_iter < opts.max_iter {
        n_iter += 1;
        let eta = linear_predictor(design, &beta, &log_off);
        let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
        let z: Vec<f64> = (0..n)
            .map(|i| eta[i] - log_off[i] + (y[i] - mu[i]) / mu[i])
            .collect();
        let (a, b) = normal_equations(design, &mu, &z);
        let target = factor(design, &a)?.solve(&b);

        // step halving keeps the log-likelihood non-decreasing
        let mut step = 1.0;
        let mut candidate = target.clone();
        let mut ll_new = poisson_loglik_at(design, y, &candidate, &log_off);
        let mut halvings = 0;
        while !(ll_new >= ll) && halvings < 50 {
            step *= 0.5;
            halvings += 1;
            candidate = beta
                .iter()
                .zip(&target)
                .map(|(b0, t)| b0 + step * (t - b0))
                .collect();
            ll_new = poisson_loglik_at(design, y, &candidate, &log_off);
        }
        if !(ll_new >= ll) {
            // no ascent along the Newton direction at any step length
            candidate = beta.clone();
            ll_new = ll;
        }

        let delta = beta
            .iter()
            .zip(&candidate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = candidate;
        ll = ll_new;
        trace.push(ll);
        if delta < opts.tol {
            converged = true;
            break;
        }
    }

    let mu: Vec<f64> = linear_predictor(design, &beta, &log_off)
        .into_iter()
        .map(f64::exp)
        .collect();
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(RarError::Numerical("poisson fit diverged (non-finite fitted means)".into()));
    }
    let unused = vec![0.0; n];
    let (a, _) = normal_equations(design, &mu, &unused);
    let inv = factor(design, &a)?.inverse();
    let pearson = y.iter().zip(&mu).map(|(y, m)| (y - m) / m.sqrt()).collect();
    Ok(GlmFit {
        family: Family::Poisson,
        coef_names: design.names.clone(),
        beta,
        cov_beta: inv.clone(),
        leverages: leverages(design, &inv, &mu),
        unscaled_cov: inv,
        exposure_index: design.exposure_index,
        dispersion: 1.0,
        loglik: poisson_loglik(y, &mu),
        mu: mu.clone(),
        working_weights: mu,
        pearson_residuals: pearson,
        loglik_trace: trace,
        converged,
        n_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, Poisson};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i}")).collect()
    }

    fn random_poisson(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let off: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..200.0)).collect();
        let y = (0..n)
            .map(|i| {
                let rate = (-2.0 + 0.4 * x[i] - 0.3 * c[i]).exp() * off[i];
                Poisson::new(rate).unwrap().sample(&mut rng)
            })
            .collect();
        Dataset::new(ids(n), y, Some(off), x, vec![("c".into(), c)]).unwrap()
    }

    /// Independent Newton-Raphson on the Poisson log-likelihood with a
    /// Gauss-Jordan solve, for use as an oracle only.
    fn newton_oracle(data: &Dataset) -> Vec<f64> {
        let z = data.design();
        let p = z.n_cols();
        let off: Vec<f64> = data.offset().unwrap().iter().map(|v| v.ln()).collect();
        let mut beta = vec![0.0; p];
        beta[0] = (data.y().iter().sum::<f64>() / data.offset().unwrap().iter().sum::<f64>()).ln();
        for _ in 0..100 {
            let mut grad = vec![0.0; p];
            let mut hess = vec![vec![0.0; p]; p];
            for i in 0..data.len() {
                let row = z.row(i);
                let mu = (row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + off[i]).exp();
                for j in 0..p {
                    grad[j] += (data.y()[i] - mu) * row[j];
                    for k in 0..p {
                        hess[j][k] += mu * row[j] * row[k];
                    }
                }
            }
            // solve hess * step = grad
            let mut aug: Vec<Vec<f64>> = hess
                .iter()
                .zip(&grad)
                .map(|(r, g)| {
                    let mut r = r.clone();
                    r.push(*g);
                    r
                })
                .collect();
            for col in 0..p {
                let piv = (col..p).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs())).unwrap();
                aug.swap(col, piv);
                let d = aug[col][col];
                for v in aug[col].iter_mut() {
                    *v /= d;
                }
                for r in 0..p {
                    if r != col {
                        let f = aug[r][col];
                        let src = aug[col].clone();
                        for (v, s) in aug[r].iter_mut().zip(src) {
                            *v -= f * s;
                        }
                    }
                }
            }
            for j in 0..p {
                beta[j] += aug[j][p];
            }
        }
        beta
    }

    #[test]
    fn gaussian_noiseless_line_is_exact() {
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.7 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let data = Dataset::new(ids(8), y, None, x, vec![]).unwrap();
        let fit = fit_glm(&data, Family::Gaussian, &GlmOptions::default()).unwrap();
        assert!((fit.exposure_coef().unwrap() - 2.0).abs() < 1e-12);
        assert!(fit.beta[0].abs() < 1e-12);
        assert!(fit.pearson_residuals.iter().all(|r| r.abs() < 1e-12));
        assert!(fit.converged);
        assert_eq!(fit.n_iter, 1);
        assert!(fit.loglik.is_finite());
    }

    #[test]
    fn poisson_intercept_only_recovers_log_mean() {
        let design = DesignMatrix::intercept_only(5);
        let y = vec![7.0; 5];
        let fit = fit_design(&design, &y, Some(&[1.0; 5]), Family::Poisson, &GlmOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.beta[0] - 7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn poisson_matches_newton_oracle() {
        for seed in 0..5 {
            let data = random_poisson(20, seed);
            let fit = fit_glm(&data, Family::Poisson, &GlmOptions::default()).unwrap();
            assert!(fit.converged);
            let oracle = newton_oracle(&data);
            for (a, b) in fit.beta.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-6, "seed {seed}: {:?} vs {oracle:?}", fit.beta);
            }
        }
    }

    #[test]
    fn leverage_trace_equals_design_width() {
        let data = random_poisson(40, 11);
        let fit = fit_glm(&data, Family::Poisson, &GlmOptions::default()).unwrap();
        let tr: f64 = fit.leverages.iter().sum();
        assert!((tr - 3.0).abs() < 1e-8, "trace {tr}");
        assert!(fit.leverages.iter().all(|&h| (0.0..1.0).contains(&h)));
    }

    #[test]
    fn loglik_trace_is_monotone() {
        for seed in 0..10 {
            let data = random_poisson(30, 100 + seed);
            let fit = fit_glm(&data, Family::Poisson, &GlmOptions::default()).unwrap();
            for w in fit.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-10, "seed {seed}: {:?}", fit.loglik_trace);
            }
            assert!((fit.loglik - fit.loglik_trace.last().unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let data = random_poisson(30, 5);
        let fit = fit_glm(&data, Family::Poisson, &GlmOptions::default()).unwrap();
        let c = &fit.cov_beta;
        assert!(c.max_abs_diff(&c.transpose()) < 1e-14);
        assert!(Cholesky::factor(c).is_ok());
    }

    #[test]
    fn collinear_covariate_is_named() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..10).map(|_| normal.sample(&mut rng)).collect();
        let dup: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let y: Vec<f64> = x.iter().map(|v| v + normal.sample(&mut rng)).collect();
        let data = Dataset::new(ids(10), y, None, x, vec![("tripled".into(), dup)]).unwrap();
        match fit_glm(&data, Family::Gaussian, &GlmOptions::default()) {
            Err(RarError::SingularDesign { column }) => assert_eq!(column, "tripled"),
            other => panic!("expected singular design, got {other:?}"),
        }
    }

    #[test]
    fn non_convergence_is_flagged_not_fatal() {
        let data = random_poisson(30, 9);
        let opts = GlmOptions { max_iter: 1, tol: 1e-14 };
        let fit = fit_glm(&data, Family::Poisson, &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.n_iter, 1);
    }

    #[test]
    fn poisson_rejects_bad_responses() {
        let x = vec![0.0, 1.0, 2.0];
        let frac = Dataset::new(ids(3), vec![1.0, 2.5, 3.0], Some(vec![1.0; 3]), x.clone(), vec![]).unwrap();
        assert!(matches!(fit_glm(&frac, Family::Poisson, &GlmOptions::default()), Err(RarError::Validation(_))));
        let neg_off = Dataset::new(ids(3), vec![1.0, 2.0, 3.0], Some(vec![1.0, 0.0, 1.0]), x.clone(), vec![]).unwrap();
        assert!(matches!(fit_glm(&neg_off, Family::Poisson, &GlmOptions::default()), Err(RarError::Validation(_))));
        let gauss_off = Dataset::new(ids(3), vec![1.0, 2.0, 3.0], Some(vec![1.0; 3]), x, vec![]).unwrap();
        assert!(matches!(fit_glm(&gauss_off, Family::Gaussian, &GlmOptions::default()), Err(RarError::Validation(_))));
    }

    #[test]
    fn gaussian_matches_closed_form_ls() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 15;
        let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.5 * v + normal.sample(&mut rng)).collect();
        let data = Dataset::new(ids(n), y.clone(), None, x.clone(), vec![]).unwrap();
        let fit = fit_glm(&data, Family::Gaussian, &GlmOptions::default()).unwrap();
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((fit.beta[1] - slope).abs() < 1e-12);
        assert!((fit.beta[0] - (my - slope * mx)).abs() < 1e-12);
    }
}
