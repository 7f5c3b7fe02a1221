use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RarError, Result};
use crate::linalg::{svd, Matrix};

use super::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeOptions {
    /// Stop once `|ρ − ρ_prev|` falls below this.
    pub epsilon: f64,
    pub max_outer: usize,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        DiscretizeOptions {
            epsilon: 1e-10,
            max_outer: 100,
        }
    }
}

/// Outcome of rotating an embedding onto the nearest cluster-indicator matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    /// Cluster of each unit in `0..K`; every cluster is non-empty.
    pub labels: Vec<usize>,
    /// Final orthogonal rotation `R`.
    pub rotation: Matrix,
    /// `ρ = tr Ω` after each iteration.
    pub rho_trace: Vec<f64>,
    /// `max |R'R − I|` for each rotation produced by an SVD update.
    pub orthogonality_errors: Vec<f64>,
    pub converged: bool,
    /// Number of times an empty cluster had to be re-seeded.
    pub reseeded: usize,
}

/// Seeded discretization; see [`discretize_with_rng`].
pub fn discretize(embedding: &Embedding, seed: u64, opts: &DiscretizeOptions) -> Result<Discretization> {
    discretize_with_rng(embedding, &mut ChaCha8Rng::seed_from_u64(seed), opts)
}

/// Alternates between the indicator matrix `Y` closest to `XR` and the
/// rotation `R` maximizing `tr(Y'XR)` until `ρ` stabilizes.
///
/// `R` starts from K rows of `X` chosen farthest-first: the first at random,
/// each subsequent one minimizing the accumulated absolute inner product
/// with the rows already chosen.
pub fn discretize_with_rng<R: Rng + ?Sized>(
    embedding: &Embedding,
    rng: &mut R,
    opts: &DiscretizeOptions,
) -> Result<Discretization> {
    let x = &embedding.x;
    let (n, k) = (x.rows(), x.cols());
    if k == 0 || n < k {
        return Err(RarError::validation(format!(
            "cannot discretize {n} units into {k} clusters"
        )));
    }
    if opts.max_outer == 0 || !(opts.epsilon > 0.0) {
        return Err(RarError::validation("discretization needs max_outer >= 1 and epsilon > 0"));
    }

    let mut r = Matrix::zeros(k, k);
    let first = rng.random_range(0..n);
    set_column(&mut r, 0, x.row(first));
    let mut score = vec![0.0; n];
    for j in 1..k {
        for (i, s) in score.iter_mut().enumerate() {
            let ip: f64 = (0..k).map(|c| x[(i, c)] * r[(c, j - 1)]).sum();
            *s += ip.abs();
        }
        let pick = argmin(&score);
        set_column(&mut r, j, x.row(pick));
    }

    let mut rho_trace = Vec::new();
    let mut orthogonality_errors = Vec::new();
    let mut reseeded = 0;
    let mut converged = false;
    let mut labels = vec![0; n];
    let mut rho_prev = f64::NAN;

    for _ in 0..opts.max_outer {
        let xr = x.matmul(&r);
        for (i, l) in labels.iter_mut().enumerate() {
            *l = argmax(xr.row(i));
        }
        reseeded += fill_empty_clusters(&mut labels, &xr, k);

        let mut yx = Matrix::zeros(k, k);
        for (i, &l) in labels.iter().enumerate() {
            for (dst, src) in yx.row_mut(l).iter_mut().zip(x.row(i)) {
                *dst += src;
            }
        }
        let (u, s, v) = svd(&yx)?;
        let rho: f64 = s.iter().sum();
        r = v.matmul(&u.transpose());
        orthogonality_errors.push(r.transpose().matmul(&r).max_abs_diff(&Matrix::identity(k)));
        rho_trace.push(rho);
        if (rho - rho_prev).abs() < opts.epsilon {
            converged = true;
            break;
        }
        rho_prev = rho;
    }

    Ok(Discretization {
        labels,
        rotation: r,
        rho_trace,
        orthogonality_errors,
        converged,
        reseeded,
    })
}

fn set_column(r: &mut Matrix, j: usize, values: &[f64]) {
    for (c, v) in values.iter().enumerate() {
        r.row_mut(c)[j] = *v;
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Lowest index wins ties.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Moves the worst-represented unit (smallest best score in `XR`) of any
/// multi-member cluster into each empty cluster. Returns how many clusters
/// were re-seeded.
fn fill_empty_clusters(labels: &mut [usize], xr: &Matrix, k: usize) -> usize {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut count = 0;
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut pick: Option<(usize, f64)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let fit = xr[(i, l)];
            if pick.is_none_or(|(_, best)| fit < best) {
                pick = Some((i, fit));
            }
        }
        let (i, _) = pick.expect("n >= k guarantees a cluster with two members");
        sizes[labels[i]] -= 1;
        labels[i] = empty;
        sizes[empty] = 1;
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;

    fn indicator_embedding(labels: &[usize], k: usize, scale: &[f64]) -> Embedding {
        let x = Matrix::from_fn(labels.len(), k, |i, c| if labels[i] == c { scale[i] } else { 0.0 });
        Embedding {
            x,
            eigenvalues: vec![1.0; k],
        }
    }

    #[test]
    fn indicator_is_a_fixed_point() {
        let truth = [0, 0, 1, 1, 1, 0, 1];
        let emb = indicator_embedding(&truth, 2, &[1.0; 7]);
        for seed in 0..10 {
            let out = discretize(&emb, seed, &DiscretizeOptions::default()).unwrap();
            assert!(out.converged);
            assert_eq!(out.rho_trace.len(), 2);
            assert!((out.rho_trace[0] - out.rho_trace[1]).abs() < 1e-12);
            assert_eq!(
                Partition::from_labels_renumbered(&out.labels),
                Partition::from_labels_renumbered(&truth)
            );
        }
    }

    #[test]
    fn rotated_indicator_is_recovered() {
        let truth = [0, 1, 2, 2, 1, 0, 0, 2];
        let emb = indicator_embedding(&truth, 3, &[1.0; 8]);
        let (q, _, _) = svd(&Matrix::from_row_major(3, 3, vec![0.3, 1.0, -0.2, 0.7, 0.1, 0.5, -0.4, 0.2, 0.9])).unwrap();
        let rotated = Embedding {
            x: emb.x.matmul(&q),
            eigenvalues: emb.eigenvalues.clone(),
        };
        let out = discretize(&rotated, 3, &DiscretizeOptions::default()).unwrap();
        assert_eq!(
            Partition::from_labels_renumbered(&out.labels),
            Partition::from_labels_renumbered(&truth)
        );
    }

    #[test]
    fn rotation_stays_orthogonal_and_rho_increases() {
        let w = crate::graph::grid_adjacency(6, 6).unwrap();
        let g = crate::graph::SimilarityGraph::from_adjacency(&w);
        let emb = super::super::spectral_embed(&g, 4).unwrap();
        for seed in 0..5 {
            let out = discretize(&emb, seed, &DiscretizeOptions::default()).unwrap();
            assert!(out.orthogonality_errors.iter().all(|&e| e < 1e-8));
            if out.reseeded == 0 {
                for pair in out.rho_trace.windows(2) {
                    assert!(pair[1] >= pair[0] - 1e-10);
                }
            }
            let mut used = vec![false; 4];
            out.labels.iter().for_each(|&l| used[l] = true);
            assert!(used.iter().all(|&u| u));
        }
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // every row identical: XR argmax puts all units in one cluster
        let emb = Embedding {
            x: Matrix::from_fn(5, 2, |_, c| if c == 0 { 1.0 } else { 0.0 }),
            eigenvalues: vec![1.0, 1.0],
        };
        let out = discretize(&emb, 0, &DiscretizeOptions::default()).unwrap();
        assert!(out.reseeded > 0);
        assert_eq!(Partition::from_labels_renumbered(&out.labels).k(), 2);
    }

    #[test]
    fn same_seed_same_labels() {
        let w = crate::graph::grid_adjacency(5, 7).unwrap();
        let g = crate::graph::SimilarityGraph::from_adjacency(&w);
        let emb = super::super::spectral_embed(&g, 3).unwrap();
        let a = discretize(&emb, 42, &DiscretizeOptions::default()).unwrap();
        let b = discretize(&emb, 42, &DiscretizeOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
