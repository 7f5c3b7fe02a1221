//! Region-wise estimation on a fixed partition, BIC selection of the number
//! of regions, and residual spatial-dependence diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{RarError, Result};
use crate::glm::{dfbeta, fit_design, fit_glm, Dataset, DesignMatrix, DeviationVector, Family, GlmFit, GlmOptions};
use crate::graph::{build_similarity, AdjacencyMatrix, SimilarityGraph};
use crate::linalg::Matrix;
use crate::partition::Partition;
use crate::segmentation::{segment, segment_with_spectrum, SegmentOptions, Segmentation, Spectrum};

/// Two-sided 95% standard-normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Exposure association estimated within one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEstimate {
    pub region: usize,
    pub n_units: usize,
    pub beta: f64,
    pub se: f64,
    pub ci95: (f64, f64),
    pub intercept: f64,
    /// Covariate coefficients, in dataset column order.
    pub eta: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
}

/// Outcome of fitting one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RegionResult {
    Estimated(RegionEstimate),
    Failed { region: usize, n_units: usize, reason: String },
}

impl RegionResult {
    pub fn estimate(&self) -> Option<&RegionEstimate> {
        match self {
            RegionResult::Estimated(e) => Some(e),
            RegionResult::Failed { .. } => None,
        }
    }

    pub fn region(&self) -> usize {
        match self {
            RegionResult::Estimated(e) => e.region,
            RegionResult::Failed { region, .. } => *region,
        }
    }
}

/// Independent per-region GLMs.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedFit {
    pub family: Family,
    pub regions: Vec<RegionResult>,
    /// Per-unit residuals from the unit's own region fit (response scale
    /// for Gaussian, Pearson for Poisson); `None` where the region failed.
    pub residuals: Vec<Option<f64>>,
    pub n_covariates: usize,
}

impl StratifiedFit {
    pub fn all_estimated(&self) -> bool {
        self.regions.iter().all(|r| r.estimate().is_some())
    }

    /// Sum of region log-likelihoods, if every region was estimated.
    pub fn total_loglik(&self) -> Option<f64> {
        self.regions.iter().map(|r| r.estimate().map(|e| e.loglik)).sum()
    }

    /// `K (q + 2)` coefficients plus one variance per region for Gaussian.
    pub fn n_params(&self) -> usize {
        stratified_n_params(self.regions.len(), self.n_covariates, self.family)
    }

    pub fn bic(&self) -> Option<f64> {
        let s = self.residuals.len();
        self.total_loglik().map(|ll| bic(ll, self.n_params(), s))
    }
}

pub fn stratified_n_params(k: usize, q: usize, family: Family) -> usize {
    k * (q + 2) + k * family.n_scale_params()
}

/// `−2 ℓ + p ln S`.
pub fn bic(loglik: f64, n_params: usize, s: usize) -> f64 {
    -2.0 * loglik + n_params as f64 * (s as f64).ln()
}

fn check_partition(data: &Dataset, partition: &Partition) -> Result<()> {
    if partition.len() != data.len() {
        return Err(RarError::validation(format!(
            "partition labels {} units but dataset has {}",
            partition.len(),
            data.len()
        )));
    }
    Ok(())
}

fn residuals_of(fit: &GlmFit) -> Vec<f64> {
    match fit.family {
        Family::Gaussian => fit.response_residuals(),
        Family::Poisson => fit.pearson_residuals.clone(),
    }
}

/// Fits the standard GLM separately in every region.
///
/// Regions with fewer than `q + 3` units, or whose fit fails numerically,
/// are reported as [`RegionResult::Failed`] while the others are still
/// estimated.
pub fn fit_stratified(data: &Dataset, partition: &Partition, family: Family, opts: &GlmOptions) -> Result<StratifiedFit> {
    check_partition(data, partition)?;
    data.validate_for(family)?;
    let min_units = data.n_covariates() + 3;
    let mut residuals = vec![None; data.len()];
    let mut regions = Vec::with_capacity(partition.k());
    for (region, members) in partition.members().into_iter().enumerate() {
        let n_units = members.len();
        if n_units < min_units {
            regions.push(RegionResult::Failed {
                region,
                n_units,
                reason: format!("under-identified: {n_units} units, need at least {min_units}"),
            });
            continue;
        }
        let sub = data.subset(&members);
        match fit_glm(&sub, family, opts) {
            Ok(fit) => {
                for (&u, r) in members.iter().zip(residuals_of(&fit)) {
                    residuals[u] = Some(r);
                }
                let se = fit.se(1);
                regions.push(RegionResult::Estimated(RegionEstimate {
                    region,
                    n_units,
                    beta: fit.beta[1],
                    se,
                    ci95: (fit.beta[1] - Z_95 * se, fit.beta[1] + Z_95 * se),
                    intercept: fit.beta[0],
                    eta: fit.beta[2..].to_vec(),
                    loglik: fit.loglik,
                    converged: fit.converged,
                }));
            }
            Err(e) if e.class() == crate::error::ErrorClass::Numerical => {
                regions.push(RegionResult::Failed {
                    region,
                    n_units,
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(StratifiedFit {
        family,
        regions,
        residuals,
        n_covariates: data.n_covariates(),
    })
}

#[derive(Clone, Copy)]
struct Terms {
    dummies: bool,
    exposure_interactions: bool,
    covariate_interactions: bool,
}

/// Standard design extended with treatment-coded region terms; region 0 is
/// the reference.
fn region_design(data: &Dataset, partition: &Partition, terms: Terms) -> DesignMatrix {
    let base = data.design();
    let k = partition.k();
    let labels = partition.labels();
    let mut names = base.names.clone();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for r in 1..k {
        let ind: Vec<f64> = labels.iter().map(|&l| if l == r { 1.0 } else { 0.0 }).collect();
        if terms.dummies {
            names.push(format!("region{r}"));
            columns.push(ind.clone());
        }
        if terms.exposure_interactions {
            names.push(format!("region{r}:{}", data.exposure_name()));
            columns.push(ind.iter().zip(data.exposure()).map(|(a, b)| a * b).collect());
        }
        if terms.covariate_interactions {
            for j in 0..data.n_covariates() {
                names.push(format!("region{r}:{}", data.covariate_names()[j]));
                columns.push(ind.iter().zip(data.covariate(j)).map(|(a, b)| a * b).collect());
            }
        }
    }
    let p0 = base.n_cols();
    let matrix = Matrix::from_fn(data.len(), names.len(), |i, j| {
        if j < p0 {
            base.matrix[(i, j)]
        } else {
            columns[j - p0][i]
        }
    });
    DesignMatrix::new(names, matrix, base.exposure_index)
}

/// Single GLM with region-specific exposure slopes.
#[derive(Debug, Clone)]
pub struct InteractionFit {
    pub fit: GlmFit,
    /// Exposure coefficient and standard error for each region, derived
    /// from the reference slope plus the region's interaction term.
    pub region_exposure: Vec<(f64, f64)>,
    pub fully_stratified: bool,
}

/// GLM with `K − 1` region dummies and `K − 1` region × exposure
/// interactions. With `fully_stratified`, every covariate is interacted
/// too, so the region slopes equal those of [`fit_stratified`].
pub fn fit_interaction(
    data: &Dataset,
    partition: &Partition,
    family: Family,
    fully_stratified: bool,
    opts: &GlmOptions,
) -> Result<InteractionFit> {
    check_partition(data, partition)?;
    data.validate_for(family)?;
    let terms = Terms {
        dummies: true,
        exposure_interactions: true,
        covariate_interactions: fully_stratified,
    };
    let design = region_design(data, partition, terms);
    let fit = fit_design(&design, data.y(), data.offset(), family, opts)?;
    let e = 1;
    let per_region = 2 + if fully_stratified { data.n_covariates() } else { 0 };
    let p0 = data.n_coef();
    let region_exposure = (0..partition.k())
        .map(|r| {
            if r == 0 {
                (fit.beta[e], fit.se(e))
            } else {
                let j = p0 + (r - 1) * per_region + 1;
                let var = fit.cov_beta[(e, e)] + fit.cov_beta[(j, j)] + 2.0 * fit.cov_beta[(e, j)];
                (fit.beta[e] + fit.beta[j], var.max(0.0).sqrt())
            }
        })
        .collect();
    Ok(InteractionFit {
        fit,
        region_exposure,
        fully_stratified,
    })
}

/// Likelihood-ratio comparison of nested fits.
///
/// The p-value is the nominal chi-square tail probability; it treats the
/// partition as fixed, although the partition was estimated from the same
/// data, so it is optimistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub name: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

pub fn likelihood_ratio(name: impl Into<String>, reduced: &GlmFit, full: &GlmFit) -> LrTest {
    let statistic = (2.0 * (full.loglik - reduced.loglik)).max(0.0);
    let df = full.n_params().saturating_sub(reduced.n_params());
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
    };
    LrTest {
        name: name.into(),
        statistic,
        df,
        p_value,
    }
}

/// Tests for region main effects (dummies vs the pooled model) and for
/// region × exposure interactions (interaction model vs dummies only).
/// Empty when the partition has a single region.
pub fn region_lr_tests(data: &Dataset, partition: &Partition, family: Family, opts: &GlmOptions) -> Result<Vec<LrTest>> {
    check_partition(data, partition)?;
    if partition.k() < 2 {
        return Ok(Vec::new());
    }
    let pooled = fit_glm(data, family, opts)?;
    let mains = region_design(
        data,
        partition,
        Terms {
            dummies: true,
            exposure_interactions: false,
            covariate_interactions: false,
        },
    );
    let mains = fit_design(&mains, data.y(), data.offset(), family, opts)?;
    let inter = fit_interaction(data, partition, family, false, opts)?.fit;
    Ok(vec![
        likelihood_ratio("region main effects", &pooled, &mains),
        likelihood_ratio("region x exposure interaction", &mains, &inter),
    ])
}

/// Moran's I: `(S / ΣW) · Σ_ij w_ij z_i z_j / Σ_i z_i²` with `z` the
/// centered values.
pub fn morans_i(values: &[f64], w: &AdjacencyMatrix) -> Result<f64> {
    if values.len() != w.n() {
        return Err(RarError::validation(format!(
            "{} values for {} units",
            values.len(),
            w.n()
        )));
    }
    if w.edge_count() == 0 {
        return Err(RarError::validation("Moran's I needs at least one adjacent pair"));
    }
    let n = values.len() as f64;
    let mean = crate::stats::mean(values).unwrap_or(0.0);
    let z: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = crate::stats::sum(z.iter().map(|v| v * v));
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(denom > (f64::EPSILON * scale).powi(2) * n) {
        return Err(RarError::ConstantInput("Moran's I of a constant vector".to_string()));
    }
    let cross = crate::stats::sum(w.edges().iter().map(|&(a, b)| 2.0 * z[a] * z[b]));
    let total_weight = 2.0 * w.edge_count() as f64;
    Ok(n / total_weight * cross / denom)
}

/// Moran's I of the residuals inside each region, on the adjacency induced
/// by that region. `None` where the region failed, has no internal edges, or
/// has constant residuals.
pub fn region_morans_i(fit: &StratifiedFit, partition: &Partition, w: &AdjacencyMatrix) -> Vec<Option<f64>> {
    partition
        .members()
        .iter()
        .map(|members| {
            let vals: Option<Vec<f64>> = members.iter().map(|&u| fit.residuals[u]).collect();
            let vals = vals?;
            morans_i(&vals, &w.induced(members)).ok()
        })
        .collect()
}

/// Pipeline controls shared by every candidate K.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub glm: GlmOptions,
    pub segment: SegmentOptions,
}

/// Step 1: global fit, deviation vector and similarity graph.
#[derive(Debug, Clone)]
pub struct Influence {
    pub global: GlmFit,
    pub deviation: DeviationVector,
    pub graph: SimilarityGraph,
    /// The deviations were all equal, so the graph is the bare adjacency.
    pub spatial_fallback: bool,
}

pub fn influence(data: &Dataset, w: &AdjacencyMatrix, family: Family, opts: &GlmOptions) -> Result<Influence> {
    if w.n() != data.len() {
        return Err(RarError::validation(format!(
            "adjacency has {} units but dataset has {}",
            w.n(),
            data.len()
        )));
    }
    data.validate_for(family)?;
    let global = fit_glm(data, family, opts)?;
    let deviation = dfbeta(&global, data)?;
    let (graph, spatial_fallback) = match build_similarity(&deviation, w) {
        Ok(g) => (g, false),
        Err(RarError::DegenerateSimilarity) => (SimilarityGraph::from_adjacency(w), true),
        Err(e) => return Err(e),
    };
    Ok(Influence {
        global,
        deviation,
        graph,
        spatial_fallback,
    })
}

/// One candidate region count in a BIC search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: usize,
    /// Number of regions actually produced (after contiguity repair and
    /// isolated singletons).
    pub realized_k: Option<usize>,
    pub bic: Option<f64>,
    pub loglik: Option<f64>,
    pub n_params: Option<usize>,
    pub ncut: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub candidates: Vec<Candidate>,
    pub chosen_k: usize,
}

/// Everything computed for the selected region count.
#[derive(Debug, Clone)]
pub struct RegionAnalysis {
    pub family: Family,
    pub influence: Influence,
    pub trace: SelectionTrace,
    pub segmentation: Segmentation,
    pub stratified: StratifiedFit,
    pub lr_tests: Vec<LrTest>,
    pub morans_i: Vec<Option<f64>>,
}

struct Evaluated {
    segmentation: Segmentation,
    stratified: StratifiedFit,
}

fn evaluate_k(
    data: &Dataset,
    w: &AdjacencyMatrix,
    family: Family,
    k: usize,
    inf: &Influence,
    spectrum: Option<&Spectrum>,
    opts: &PipelineOptions,
) -> (Candidate, Option<Evaluated>) {
    let mut cand = Candidate {
        k,
        realized_k: None,
        bic: None,
        loglik: None,
        n_params: None,
        ncut: None,
        error: None,
    };
    let seg = match spectrum {
        Some(s) if k >= 2 && k <= s.k_max() => segment_with_spectrum(&inf.graph, w, k, s, &opts.segment),
        _ => segment(&inf.graph, w, k, &opts.segment),
    };
    let seg = match seg {
        Ok(s) => s,
        Err(e) => {
            cand.error = Some(e.to_string());
            return (cand, None);
        }
    };
    cand.realized_k = Some(seg.partition.k());
    cand.ncut = Some(seg.ncut);
    let strat = match fit_stratified(data, &seg.partition, family, &opts.glm) {
        Ok(s) => s,
        Err(e) => {
            cand.error = Some(e.to_string());
            return (cand, None);
        }
    };
    cand.n_params = Some(strat.n_params());
    match strat.total_loglik() {
        Some(ll) => {
            cand.loglik = Some(ll);
            cand.bic = strat.bic();
        }
        None => {
            let failed: Vec<String> = strat
                .regions
                .iter()
                .filter_map(|r| match r {
                    RegionResult::Failed { region, reason, .. } => Some(format!("region {region}: {reason}")),
                    RegionResult::Estimated(_) => None,
                })
                .collect();
            cand.error = Some(failed.join("; "));
        }
    }
    (
        cand,
        Some(Evaluated {
            segmentation: seg,
            stratified: strat,
        }),
    )
}

fn check_range(k_range: (usize, usize), s: usize) -> Result<()> {
    let (lo, hi) = k_range;
    if lo == 0 || lo > hi || hi > s {
        return Err(RarError::validation(format!(
            "K range must satisfy 1 <= min <= max <= {s}, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

fn spectrum_for(inf: &Influence, w: &AdjacencyMatrix, k_max: usize) -> Result<Option<Spectrum>> {
    let active: Vec<usize> = (0..w.n()).filter(|&i| w.degree(i) > 0).collect();
    let k = k_max.min(active.len().saturating_sub(1));
    if k < 2 {
        return Ok(None);
    }
    Spectrum::compute(&inf.graph.induced(&active), k).map(Some)
}

fn choose(candidates: &[Candidate]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for c in candidates {
        if let Some(b) = c.bic {
            if best.is_none_or(|(_, v)| b < v) {
                best = Some((c.k, b));
            }
        }
    }
    best.map(|b| b.0).ok_or_else(|| {
        let reasons: Vec<String> = candidates
            .iter()
            .map(|c| format!("K={}: {}", c.k, c.error.as_deref().unwrap_or("no BIC")))
            .collect();
        RarError::Numerical(format!("no candidate K could be fitted ({})", reasons.join(" | ")))
    })
}

/// BIC over `k_range`, computing the influence graph and its spectrum once.
pub fn select_k(
    data: &Dataset,
    w: &AdjacencyMatrix,
    family: Family,
    k_range: (usize, usize),
    opts: &PipelineOptions,
) -> Result<SelectionTrace> {
    Ok(run_pipeline(data, w, family, k_range, opts)?.trace)
}

/// Full analysis: influence graph, segmentation and region fits for every
/// K in `k_range`, BIC selection (ties to the smaller K), then LR tests and
/// residual Moran's I for the chosen partition.
pub fn run_pipeline(
    data: &Dataset,
    w: &AdjacencyMatrix,
    family: Family,
    k_range: (usize, usize),
    opts: &PipelineOptions,
) -> Result<RegionAnalysis> {
    check_range(k_range, data.len())?;
    let inf = influence(data, w, family, &opts.glm)?;
    let spectrum = spectrum_for(&inf, w, k_range.1)?;
    let results: Vec<(Candidate, Option<Evaluated>)> = (k_range.0..=k_range.1)
        .into_par_iter()
        .map(|k| evaluate_k(data, w, family, k, &inf, spectrum.as_ref(), opts))
        .collect();
    let candidates: Vec<Candidate> = results.iter().map(|r| r.0.clone()).collect();
    let chosen_k = choose(&candidates)?;
    let chosen = results
        .into_iter()
        .find(|r| r.0.k == chosen_k)
        .and_then(|r| r.1)
        .expect("chosen candidate was evaluated");
    let partition = &chosen.segmentation.partition;
    let lr_tests = region_lr_tests(data, partition, family, &opts.glm).unwrap_or_default();
    let morans = region_morans_i(&chosen.stratified, partition, w);
    Ok(RegionAnalysis {
        family,
        influence: inf,
        trace: SelectionTrace { candidates, chosen_k },
        segmentation: chosen.segmentation,
        stratified: chosen.stratified,
        lr_tests,
        morans_i: morans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::grid_adjacency;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i}")).collect()
    }

    fn banded_gaussian(rows: usize, cols: usize, betas: [f64; 3], noise: &[f64]) -> (Dataset, Partition) {
        let n = rows * cols;
        let band = |i: usize| ((i % cols) * 3) / cols;
        let x: Vec<f64> = (0..n).map(|i| 5.0 + ((i * 37 % 11) as f64 - 5.0) * 0.4).collect();
        let y: Vec<f64> = (0..n).map(|i| x[i] * betas[band(i)] + noise[i]).collect();
        let data = Dataset::new(ids(n), y, None, x, vec![]).unwrap();
        (data, Partition::new((0..n).map(band).collect()).unwrap())
    }

    #[test]
    fn bic_identities() {
        assert_eq!(bic(0.0, 0, 10), 0.0);
        assert!((bic(-100.0, 4, 7) - (200.0 + 4.0 * 7f64.ln())).abs() < 1e-12);
        assert!(bic(-3.0, 5, 20) > bic(-3.0, 4, 20));
    }

    #[test]
    fn noiseless_bands_recovered_exactly() {
        let (data, truth) = banded_gaussian(6, 9, [40.0, -30.0, 10.0], &[0.0; 54]);
        let fit = fit_stratified(&data, &truth, Family::Gaussian, &GlmOptions::default()).unwrap();
        for (r, want) in [40.0, -30.0, 10.0].iter().enumerate() {
            let e = fit.regions[r].estimate().unwrap();
            assert!((e.beta - want).abs() < 1e-9, "{} vs {want}", e.beta);
        }
    }

    #[test]
    fn single_region_matches_global_fit() {
        let noise: Vec<f64> = (0..30).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let (data, _) = banded_gaussian(5, 6, [1.0, 2.0, 3.0], &noise);
        let strat = fit_stratified(&data, &Partition::single(30), Family::Gaussian, &GlmOptions::default()).unwrap();
        let global = fit_glm(&data, Family::Gaussian, &GlmOptions::default()).unwrap();
        let e = strat.regions[0].estimate().unwrap();
        assert!((e.beta - global.beta[1]).abs() < 1e-12);
        assert!((e.loglik - global.loglik).abs() < 1e-9);
    }

    #[test]
    fn small_region_reported_not_fatal() {
        let (data, _) = banded_gaussian(2, 6, [1.0, 2.0, 3.0], &[0.1; 12]);
        let labels: Vec<usize> = (0..12).map(|i| usize::from(i == 0)).collect();
        let p = Partition::new(labels).unwrap();
        let fit = fit_stratified(&data, &p, Family::Gaussian, &GlmOptions::default()).unwrap();
        assert!(fit.regions[0].estimate().is_some());
        assert!(matches!(fit.regions[1], RegionResult::Failed { n_units: 1, .. }));
        assert!(fit.total_loglik().is_none());
    }

    #[test]
    fn interaction_k1_is_global_fit() {
        let noise: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let (data, _) = banded_gaussian(4, 5, [1.0, 2.0, 3.0], &noise);
        let inter = fit_interaction(&data, &Partition::single(20), Family::Gaussian, false, &GlmOptions::default()).unwrap();
        let global = fit_glm(&data, Family::Gaussian, &GlmOptions::default()).unwrap();
        assert_eq!(inter.fit.n_coef(), global.n_coef());
        assert!((inter.region_exposure[0].0 - global.beta[1]).abs() < 1e-12);
    }

    #[test]
    fn checkerboard_moran_is_minus_one() {
        let w = grid_adjacency(6, 6).unwrap();
        let v: Vec<f64> = (0..36).map(|i| if (i / 6 + i % 6) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((morans_i(&v, &w).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(morans_i(&[2.0; 36], &w), Err(RarError::ConstantInput(_))));
    }

    #[test]
    fn single_candidate_range() {
        let noise: Vec<f64> = (0..54).map(|i| ((i * 13 % 7) as f64 - 3.0) * 0.5).collect();
        let (data, _) = banded_gaussian(6, 9, [40.0, -30.0, 10.0], &noise);
        let w = grid_adjacency(6, 9).unwrap();
        let trace = select_k(&data, &w, Family::Gaussian, (3, 3), &PipelineOptions::default()).unwrap();
        assert_eq!(trace.candidates.len(), 1);
        assert_eq!(trace.chosen_k, 3);
        assert!(select_k(&data, &w, Family::Gaussian, (0, 3), &PipelineOptions::default()).is_err());
    }
}
