use faer::Mat;

use crate::error::{RarError, Result};
use crate::graph::SimilarityGraph;
use crate::linalg::{symmetric_eigen_desc, Matrix};

/// Leading eigenpairs of the normalized affinity of one graph.
///
/// Computing these is the dominant cost of segmentation, so a spectrum is
/// computed once for the largest K of interest and sliced per K.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    vectors: Matrix,
    inv_sqrt_degree: Vec<f64>,
}

impl Spectrum {
    /// Top `k_max` eigenpairs of `D^{-1/2} E D^{-1/2}`, eigenvalues descending.
    pub fn compute(graph: &SimilarityGraph, k_max: usize) -> Result<Self> {
        let n = graph.n();
        if k_max == 0 || k_max > n {
            return Err(RarError::validation(format!(
                "number of eigenpairs must be in 1..={n}, got {k_max}"
            )));
        }
        if let Some(i) = graph.degrees().iter().position(|&d| !(d > 0.0)) {
            return Err(RarError::validation(format!(
                "unit {i} has zero degree in the similarity graph"
            )));
        }
        let inv_sqrt_degree: Vec<f64> = graph.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for &(j, w) in graph.neighbors(i) {
                m[(i, j)] = inv_sqrt_degree[i] * w * inv_sqrt_degree[j];
            }
        }
        let (eigenvalues, vectors) = symmetric_eigen_desc(&m, k_max)?;
        Ok(Spectrum {
            eigenvalues,
            vectors,
            inv_sqrt_degree,
        })
    }

    pub fn k_max(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors `V` (S × k_max).
    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    /// Row-normalized `D^{-1/2} V` restricted to the first `k` eigenvectors.
    pub fn embedding(&self, k: usize) -> Result<Embedding> {
        if k == 0 || k > self.k_max() {
            return Err(RarError::validation(format!(
                "embedding dimension must be in 1..={}, got {k}",
                self.k_max()
            )));
        }
        let n = self.vectors.rows();
        let mut x = Matrix::zeros(n, k);
        for i in 0..n {
            let row = x.row_mut(i);
            for (c, r) in row.iter_mut().enumerate() {
                *r = self.inv_sqrt_degree[i] * self.vectors[(i, c)];
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            } else {
                row[0] = 1.0;
            }
        }
        Ok(Embedding {
            x,
            eigenvalues: self.eigenvalues[..k].to_vec(),
        })
    }
}

/// Unit-norm spectral coordinates of every unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// S × K, each row of unit Euclidean norm.
    pub x: Matrix,
    /// Leading K eigenvalues of the normalized affinity, descending.
    pub eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.x.cols()
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }
}

/// Top-K spectral embedding of a graph with no zero-degree nodes.
pub fn spectral_embed(graph: &SimilarityGraph, k: usize) -> Result<Embedding> {
    if k < 2 || k > graph.n() {
        return Err(RarError::validation(format!(
            "K must be in 2..={}, got {k}",
            graph.n()
        )));
    }
    Spectrum::compute(graph, k)?.embedding(k)
}
