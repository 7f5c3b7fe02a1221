//! Planted-region grid simulations and the evaluation harness that scores
//! the pipeline against the known truth.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RarError, Result};
use crate::glm::{fit_glm, Dataset, Family};
use crate::graph::{grid_adjacency, AdjacencyMatrix};
use crate::inference::{run_pipeline, PipelineOptions, RegionResult, Z_95};
use crate::partition::Partition;
use crate::stats::{adjusted_rand_index, max_weight_assignment, CompensatedSum};

/// How grid cells are assigned to true regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionLayout {
    /// Three vertical bands of near-equal width.
    VerticalBands,
    /// Explicit region index per cell, row-major.
    Custom(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rows: usize,
    pub cols: usize,
    pub layout: RegionLayout,
    /// True exposure coefficient of each region.
    pub beta_true: Vec<f64>,
    pub mu_x: f64,
    pub tau: f64,
    pub sigma2: f64,
    /// Standard deviation of the smoothing kernel, in cells.
    pub bandwidth: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rows: 30,
            cols: 30,
            layout: RegionLayout::VerticalBands,
            beta_true: vec![40.0, -30.0, 10.0],
            mu_x: 5.0,
            tau: 2.0,
            sigma2: 1.0,
            bandwidth: 1.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn n_units(&self) -> usize {
        self.rows * self.cols
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(RarError::validation("grid must have at least one row and column"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(RarError::validation(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(RarError::validation(format!("sigma2 must be non-negative, got {}", self.sigma2)));
        }
        if !(self.bandwidth >= 0.0) || !self.bandwidth.is_finite() {
            return Err(RarError::validation(format!("bandwidth must be non-negative, got {}", self.bandwidth)));
        }
        if !self.mu_x.is_finite() || self.beta_true.iter().any(|b| !b.is_finite()) {
            return Err(RarError::validation("mu_x and beta_true must be finite"));
        }
        Ok(())
    }
}

/// Unit identifier of grid cell `(r, c)`.
pub fn cell_id(r: usize, c: usize) -> String {
    format!("r{r}_c{c}")
}

/// True partition and rook adjacency of the configured grid.
pub fn generate_map(config: &SimConfig) -> Result<(Partition, AdjacencyMatrix)> {
    config.validate()?;
    let (rows, cols) = (config.rows, config.cols);
    let w = grid_adjacency(rows, cols)?;
    let labels = match &config.layout {
        RegionLayout::VerticalBands => {
            if cols < 3 {
                return Err(RarError::validation(format!(
                    "three vertical bands need at least 3 columns, got {cols}"
                )));
            }
            (0..rows * cols).map(|i| (i % cols) * 3 / cols).collect()
        }
        RegionLayout::Custom(labels) => {
            if labels.len() != rows * cols {
                return Err(RarError::validation(format!(
                    "custom layout has {} cells, grid has {}",
                    labels.len(),
                    rows * cols
                )));
            }
            labels.clone()
        }
    };
    let truth = Partition::new(labels)?;
    if truth.k() != config.beta_true.len() {
        return Err(RarError::validation(format!(
            "layout has {} regions but {} true coefficients were given",
            truth.k(),
            config.beta_true.len()
        )));
    }
    let truth = truth.verify_contiguity(&w);
    if !truth.contiguous() {
        return Err(RarError::validation("every region of the layout must be a connected set of cells"));
    }
    Ok((truth, w))
}

/// Discrete Gaussian smoothing on a `rows × cols` grid (row-major).
///
/// Kernel weights `exp(−(Δr² + Δc²) / (2h²))` are truncated at distance
/// `3h` and renormalized to sum to one over the cells inside the grid.
/// `h = 0` returns the input unchanged.
pub fn gaussian_smooth_residuals(eps: &[f64], rows: usize, cols: usize, bandwidth: f64) -> Result<Vec<f64>> {
    if eps.len() != rows * cols {
        return Err(RarError::validation(format!(
            "{} values for a {rows}x{cols} grid",
            eps.len()
        )));
    }
    if !(bandwidth >= 0.0) || !bandwidth.is_finite() {
        return Err(RarError::validation(format!("bandwidth must be non-negative, got {bandwidth}")));
    }
    if bandwidth == 0.0 {
        return Ok(eps.to_vec());
    }
    let cutoff = 3.0 * bandwidth;
    let reach = cutoff.floor() as isize;
    let mut kernel = Vec::new();
    for dr in -reach..=reach {
        for dc in -reach..=reach {
            let d2 = (dr * dr + dc * dc) as f64;
            if d2 <= cutoff * cutoff {
                kernel.push((dr, dc, (-d2 / (2.0 * bandwidth * bandwidth)).exp()));
            }
        }
    }
    let mut out = vec![0.0; eps.len()];
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let mut num = 0.0;
            let mut den = 0.0;
            for &(dr, dc, k) in &kernel {
                let (rr, cc) = (r + dr, c + dc);
                if rr >= 0 && cc >= 0 && rr < rows as isize && cc < cols as isize {
                    num += k * eps[rr as usize * cols + cc as usize];
                    den += k;
                }
            }
            out[r as usize * cols + c as usize] = num / den;
        }
    }
    Ok(out)
}

/// One simulated dataset from the configuration's own seed.
pub fn simulate_dataset(config: &SimConfig) -> Result<(Dataset, Partition)> {
    simulate_replicate(config, 0)
}

/// Replicate `r`: an independent stream of the configuration's seed.
///
/// `x_i ~ N(μ_x, τ²)`, `ε ~ N(0, σ²)` smoothed over the grid, and
/// `y_i = x_i β_{c(i)} + ε_i`.
pub fn simulate_replicate(config: &SimConfig, replicate: u64) -> Result<(Dataset, Partition)> {
    let (truth, _) = generate_map(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(replicate);
    let n = config.n_units();
    let xdist = Normal::new(config.mu_x, config.tau).map_err(|e| RarError::validation(e.to_string()))?;
    let edist = Normal::new(0.0, config.sigma2.sqrt()).map_err(|e| RarError::validation(e.to_string()))?;
    let x: Vec<f64> = (0..n).map(|_| xdist.sample(&mut rng)).collect();
    let raw: Vec<f64> = (0..n).map(|_| edist.sample(&mut rng)).collect();
    let eps = gaussian_smooth_residuals(&raw, config.rows, config.cols, config.bandwidth)?;
    let y: Vec<f64> = (0..n)
        .map(|i| x[i] * config.beta_true[truth.labels()[i]] + eps[i])
        .collect();
    let ids = (0..n).map(|i| cell_id(i / config.cols, i % config.cols)).collect();
    let data = Dataset::new(ids, y, None, x, Vec::new())?;
    Ok((data, truth))
}

/// How many regions the pipeline is asked for in each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KPolicy {
    /// Always request three regions.
    Fixed3,
    /// Choose K in `1..=k_max` by BIC.
    Bic { k_max: usize },
}

impl KPolicy {
    fn range(self) -> (usize, usize) {
        match self {
            KPolicy::Fixed3 => (3, 3),
            KPolicy::Bic { k_max } => (1, k_max),
        }
    }
}

/// Result for one true region in one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionOutcome {
    pub truth: f64,
    /// Estimated region matched to this true region, if any.
    pub matched: Option<usize>,
    pub beta: Option<f64>,
    pub se: Option<f64>,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledOutcome {
    pub beta: f64,
    pub se: f64,
    /// Whether the pooled 95% interval covers each true coefficient.
    pub covers: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub chosen_k: usize,
    pub realized_k: usize,
    pub ari: f64,
    pub regions: Vec<RegionOutcome>,
    pub pooled: PooledOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ReplicateRecord {
    Ok(ReplicateOutcome),
    Failed { replicate: usize, error: String },
}

/// Mean, standard deviation and coverage of one true region's estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub region: usize,
    pub truth: f64,
    /// Replicates in which this region received an estimate.
    pub n_estimated: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub bias: Option<f64>,
    pub mean_abs_bias: Option<f64>,
    /// Share of successful replicates whose matched 95% interval covers the
    /// truth; unmatched regions count as not covered.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledSummary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// Coverage of each true coefficient by the pooled interval.
    pub coverage: Vec<f64>,
    /// Share of replicates where the pooled interval covers none of them.
    pub covers_none: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub k_policy: KPolicy,
    pub replicates: Vec<ReplicateRecord>,
    pub failures: usize,
    pub regions: Vec<RegionSummary>,
    pub pooled: PooledSummary,
    pub mean_ari: Option<f64>,
    /// How often each K was chosen.
    pub chosen_k_counts: BTreeMap<usize, usize>,
}

impl SimResult {
    /// Most frequently chosen K, the smallest on ties.
    pub fn modal_k(&self) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (&k, &c) in &self.chosen_k_counts {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((k, c));
            }
        }
        best.map(|b| b.0)
    }
}

/// Runs the pipeline on `replicates` simulated datasets and scores it.
///
/// Replicates run in parallel; each owns the RNG stream of its index and
/// aggregates are accumulated in replicate order, so the result does not
/// depend on the number of threads.
pub fn evaluate(replicates: usize, config: &SimConfig, k_policy: KPolicy, opts: &PipelineOptions) -> Result<SimResult> {
    if replicates == 0 {
        return Err(RarError::validation("need at least one replicate"));
    }
    let (truth, w) = generate_map(config)?;
    if let KPolicy::Bic { k_max } = k_policy {
        if k_max == 0 || k_max > config.n_units() {
            return Err(RarError::validation(format!("k_max must be in 1..={}", config.n_units())));
        }
    }
    let records: Vec<ReplicateRecord> = (0..replicates)
        .into_par_iter()
        .map(|r| match run_replicate(config, r, &truth, &w, k_policy, opts) {
            Ok(o) => ReplicateRecord::Ok(o),
            Err(e) => ReplicateRecord::Failed {
                replicate: r,
                error: e.to_string(),
            },
        })
        .collect();
    Ok(summarize(config.clone(), k_policy, records))
}

fn run_replicate(
    config: &SimConfig,
    replicate: usize,
    truth: &Partition,
    w: &AdjacencyMatrix,
    k_policy: KPolicy,
    opts: &PipelineOptions,
) -> Result<ReplicateOutcome> {
    let (data, _) = simulate_replicate(config, replicate as u64)?;
    let mut opts = *opts;
    opts.segment.seed = opts.segment.seed.wrapping_add(replicate as u64);
    let analysis = run_pipeline(&data, w, Family::Gaussian, k_policy.range(), &opts)?;
    let est = &analysis.segmentation.partition;
    let regions = score_regions(&config.beta_true, truth, est, &analysis.stratified.regions);

    let global = fit_glm(&data, Family::Gaussian, &opts.glm)?;
    let (beta, se) = (global.beta[1], global.se(1));
    let pooled = PooledOutcome {
        beta,
        se,
        covers: config
            .beta_true
            .iter()
            .map(|&b| interval_covers(beta, (beta - Z_95 * se, beta + Z_95 * se), b))
            .collect(),
    };

    Ok(ReplicateOutcome {
        replicate,
        chosen_k: analysis.trace.chosen_k,
        realized_k: est.k(),
        ari: adjusted_rand_index(truth.labels(), est.labels()),
        regions,
        pooled,
    })
}

/// Whether an interval covers `truth`. An estimate that equals the truth to
/// rounding error counts as covering even when the interval has collapsed
/// to (nearly) a point, as happens for exact fits.
pub fn interval_covers(estimate: f64, ci: (f64, f64), truth: f64) -> bool {
    (ci.0 <= truth && truth <= ci.1) || (estimate - truth).abs() <= 1e-10 * (1.0 + truth.abs())
}

/// Matches estimated regions to true regions and checks each true
/// coefficient against the matched region's estimate.
pub fn score_regions(
    beta_true: &[f64],
    truth: &Partition,
    estimate: &Partition,
    fits: &[RegionResult],
) -> Vec<RegionOutcome> {
    let matching = match_regions(truth, estimate);
    beta_true
        .iter()
        .enumerate()
        .map(|(c, &b)| {
            let matched = matching[c];
            let e = matched.and_then(|m| fits.get(m)).and_then(RegionResult::estimate);
            RegionOutcome {
                truth: b,
                matched,
                beta: e.map(|e| e.beta),
                se: e.map(|e| e.se),
                covered: e.is_some_and(|e| interval_covers(e.beta, e.ci95, b)),
            }
        })
        .collect()
}

/// For each true region, the estimated region assigned to it by maximum
/// total unit overlap, or `None` when there are fewer estimated regions.
pub fn match_regions(truth: &Partition, estimate: &Partition) -> Vec<Option<usize>> {
    let (kt, ke) = (truth.k(), estimate.k());
    let mut overlap = vec![vec![0.0; ke]; kt];
    for (&t, &e) in truth.labels().iter().zip(estimate.labels()) {
        overlap[t][e] += 1.0;
    }
    if kt <= ke {
        max_weight_assignment(&overlap).into_iter().map(Some).collect()
    } else {
        let transposed: Vec<Vec<f64>> = (0..ke).map(|e| (0..kt).map(|t| overlap[t][e]).collect()).collect();
        let mut out = vec![None; kt];
        for (e, t) in max_weight_assignment(&transposed).into_iter().enumerate() {
            out[t] = Some(e);
        }
        out
    }
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let mut s = CompensatedSum::default();
    values.iter().for_each(|&v| s.add(v));
    let mean = s.value() / values.len() as f64;
    let sd = (values.len() > 1).then(|| {
        let mut ss = CompensatedSum::default();
        values.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
        (ss.value() / (values.len() - 1) as f64).sqrt()
    });
    (Some(mean), sd)
}

fn summarize(config: SimConfig, k_policy: KPolicy, records: Vec<ReplicateRecord>) -> SimResult {
    let ok: Vec<&ReplicateOutcome> = records
        .iter()
        .filter_map(|r| match r {
            ReplicateRecord::Ok(o) => Some(o),
            ReplicateRecord::Failed { .. } => None,
        })
        .collect();
    let n_ok = ok.len();
    let rate = |count: usize| if n_ok == 0 { 0.0 } else { count as f64 / n_ok as f64 };

    let regions = config
        .beta_true
        .iter()
        .enumerate()
        .map(|(c, &truth)| {
            let betas: Vec<f64> = ok.iter().filter_map(|o| o.regions[c].beta).collect();
            let (mean, sd) = mean_sd(&betas);
            let abs_bias: Vec<f64> = betas.iter().map(|b| (b - truth).abs()).collect();
            RegionSummary {
                region: c,
                truth,
                n_estimated: betas.len(),
                mean,
                sd,
                bias: mean.map(|m| m - truth),
                mean_abs_bias: mean_sd(&abs_bias).0,
                coverage: rate(ok.iter().filter(|o| o.regions[c].covered).count()),
            }
        })
        .collect();

    let pooled_betas: Vec<f64> = ok.iter().map(|o| o.pooled.beta).collect();
    let (pm, psd) = mean_sd(&pooled_betas);
    let pooled = PooledSummary {
        mean: pm,
        sd: psd,
        coverage: (0..config.beta_true.len())
            .map(|c| rate(ok.iter().filter(|o| o.pooled.covers[c]).count()))
            .collect(),
        covers_none: rate(ok.iter().filter(|o| o.pooled.covers.iter().all(|&c| !c)).count()),
    };

    let aris: Vec<f64> = ok.iter().map(|o| o.ari).collect();
    let mut chosen_k_counts = BTreeMap::new();
    for o in &ok {
        *chosen_k_counts.entry(o.chosen_k).or_insert(0) += 1;
    }
    SimResult {
        failures: records.len() - n_ok,
        config,
        k_policy,
        regions,
        pooled,
        mean_ari: mean_sd(&aris).0,
        chosen_k_counts,
        replicates: records,
    }
}
