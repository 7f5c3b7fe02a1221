#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rar_core::glm::Dataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("u{i}")).collect()
}

/// Linear-Gaussian data with `q` standard-normal covariates.
pub fn gaussian_data(rng: &mut ChaCha8Rng, s: usize, q: usize) -> Dataset {
    let z = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<f64> = (0..s).map(|_| 2.0 + z.sample(rng)).collect();
    let cov: Vec<Vec<f64>> = (0..q).map(|_| (0..s).map(|_| z.sample(rng)).collect()).collect();
    let y = (0..s)
        .map(|i| 1.0 + 0.7 * x[i] + cov.iter().map(|c| 0.3 * c[i]).sum::<f64>() + z.sample(rng))
        .collect();
    let covariates = cov.into_iter().enumerate().map(|(j, c)| (format!("x{j}"), c)).collect();
    Dataset::new(ids(s), y, None, x, covariates).unwrap()
}

/// Poisson counts with population offsets and `q` covariates.
pub fn poisson_data(rng: &mut ChaCha8Rng, s: usize, q: usize) -> Dataset {
    let z = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<f64> = (0..s).map(|_| z.sample(rng)).collect();
    let cov: Vec<Vec<f64>> = (0..q).map(|_| (0..s).map(|_| z.sample(rng)).collect()).collect();
    let offset: Vec<f64> = (0..s).map(|_| rng.random_range(50.0..500.0f64).round()).collect();
    let y = (0..s)
        .map(|i| {
            let eta = -3.0 + 0.4 * x[i] + cov.iter().map(|c| 0.2 * c[i]).sum::<f64>();
            Poisson::new(offset[i] * eta.exp()).unwrap().sample(rng)
        })
        .collect();
    let covariates = cov.into_iter().enumerate().map(|(j, c)| (format!("x{j}"), c)).collect();
    Dataset::new(ids(s), y, Some(offset), x, covariates).unwrap()
}

/// Design rows `[1, exposure, covariates...]` of a dataset.
pub fn design_rows(d: &Dataset) -> Vec<Vec<f64>> {
    (0..d.len())
        .map(|i| {
            let mut row = vec![1.0, d.exposure()[i]];
            row.extend((0..d.n_covariates()).map(|j| d.covariate(j)[i]));
            row
        })
        .collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Inverse of a small dense matrix, column by column.
pub fn inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let e = (0..n).map(|i| f64::from(u8::from(i == j))).collect();
            solve(a.to_vec(), e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// Unit-weight edges `(i, j, 1.0)` from an index edge list.
pub fn unit_weights(edges: &[(usize, usize)]) -> Vec<(usize, usize, f64)> {
    edges.iter().map(|&(a, b)| (a, b, 1.0)).collect()
}

/// Normalized cut computed from a dense weight matrix.
pub fn dense_ncut(e: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut cut = vec![0.0; k];
    let mut vol = vec![0.0; k];
    for i in 0..e.len() {
        for j in 0..e.len() {
            vol[labels[i]] += e[i][j];
            if labels[i] != labels[j] {
                cut[labels[i]] += e[i][j];
            }
        }
    }
    (0..k).map(|r| cut[r] / vol[r]).sum()
}

/// Minimum normalized cut over every split of the nodes into two non-empty
/// sets, with the minimizing labels (node 0 always in region 0).
pub fn brute_force_two_way(e: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = e.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 1u32..(1 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize }).collect();
        let v = dense_ncut(e, &labels);
        if v < best.0 {
            best = (v, labels);
        }
    }
    best
}

/// Whether two label vectors describe the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}
