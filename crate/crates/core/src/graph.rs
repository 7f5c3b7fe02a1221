//! Spatial adjacency, the deviation-similarity graph and the normalized cut.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{RarError, Result};
use crate::glm::DeviationVector;
use crate::linalg::Matrix;
use crate::partition::Partition;

/// Binary symmetric adjacency between spatial units.
///
/// Stored as a sorted list of undirected edges `(i, j)` with `i < j` plus
/// sorted per-unit neighbor lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    warnings: Vec<String>,
}

impl AdjacencyMatrix {
    /// Builds the symmetric closure of `edges` over units `0..n`, removing
    /// duplicates. Self-loops and out-of-range indices are errors.
    pub fn from_index_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(RarError::validation(format!(
                    "edge ({a}, {b}) references a unit outside 0..{n}"
                )));
            }
            if a == b {
                return Err(RarError::validation(format!("self-loop at unit {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        list.dedup();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &list {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(AdjacencyMatrix {
            n,
            edges: list,
            neighbors,
            warnings: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Units without any neighbor.
    pub fn isolated(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.neighbors[i].is_empty()).collect()
    }

    /// Non-fatal findings from construction (e.g. isolated units).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for &(a, b) in &self.edges {
            m[(a, b)] = 1.0;
            m[(b, a)] = 1.0;
        }
        m
    }

    /// Subgraph induced by `units`, re-indexed in the given order.
    pub fn induced(&self, units: &[usize]) -> AdjacencyMatrix {
        let pos: HashMap<usize, usize> = units.iter().enumerate().map(|(k, &u)| (u, k)).collect();
        let edges = self.edges.iter().filter_map(|(a, b)| Some((*pos.get(a)?, *pos.get(b)?)));
        AdjacencyMatrix::from_index_edges(units.len(), edges).expect("induced edges are valid")
    }

    /// Connected-component label of each unit, numbered by lowest member.
    pub fn connected_components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in &self.neighbors[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Adjacency from identifier pairs, indexed by the order of `unit_ids`.
///
/// Unknown identifiers are collected and reported together. Isolated units
/// are allowed and listed in [`AdjacencyMatrix::warnings`].
pub fn build_adjacency<S: AsRef<str>>(edges: &[(S, S)], unit_ids: &[String]) -> Result<AdjacencyMatrix> {
    let index: HashMap<&str, usize> = unit_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut unknown: Vec<String> = Vec::new();
    let mut pairs = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        let (a, b) = (a.as_ref(), b.as_ref());
        match (index.get(a), index.get(b)) {
            (Some(&i), Some(&j)) => {
                if i == j {
                    return Err(RarError::validation(format!("self-loop at unit `{a}`")));
                }
                pairs.push((i, j));
            }
            (ia, ib) => {
                for (id, hit) in [(a, ia), (b, ib)] {
                    if hit.is_none() && !unknown.iter().any(|u| u == id) {
                        unknown.push(id.to_string());
                    }
                }
            }
        }
    }
    if !unknown.is_empty() {
        return Err(RarError::validation(format!(
            "adjacency references unknown unit ids: {}",
            unknown.join(", ")
        )));
    }
    let mut w = AdjacencyMatrix::from_index_edges(unit_ids.len(), pairs)?;
    let isolated = w.isolated();
    if !isolated.is_empty() {
        let names: Vec<&str> = isolated.iter().map(|&i| unit_ids[i].as_str()).collect();
        w.warnings.push(format!(
            "{} isolated unit(s) will form singleton regions: {}",
            names.len(),
            names.join(", ")
        ));
    }
    Ok(w)
}

/// Rook (4-neighbor) adjacency on a `rows × cols` lattice, units numbered
/// row-major.
pub fn grid_adjacency(rows: usize, cols: usize) -> Result<AdjacencyMatrix> {
    if rows == 0 || cols == 0 {
        return Err(RarError::validation(format!("grid must be at least 1x1, got {rows}x{cols}")));
    }
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let u = r * cols + c;
            if c + 1 < cols {
                edges.push((u, u + 1));
            }
            if r + 1 < rows {
                edges.push((u, u + cols));
            }
        }
    }
    AdjacencyMatrix::from_index_edges(rows * cols, edges)
}

/// Sparse symmetric weighted graph over spatial units.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    rows: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    source: Option<DeviationVector>,
}

impl SimilarityGraph {
    /// Graph from explicit undirected weighted edges. Weights must be finite
    /// and non-negative; repeated edges are rejected.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n || a == b {
                return Err(RarError::validation(format!("invalid edge ({a}, {b})")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(RarError::validation(format!("invalid weight {w} on edge ({a}, {b})")));
            }
            rows[a].push((b, w));
            rows[b].push((a, w));
        }
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
            if r.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(RarError::validation("duplicate edge in similarity graph"));
            }
        }
        Ok(Self::from_rows(rows, None))
    }

    /// `e_ij = W_ij`: the purely spatial graph.
    pub fn from_adjacency(w: &AdjacencyMatrix) -> Self {
        let rows = (0..w.n())
            .map(|i| w.neighbors(i).iter().map(|&j| (j, 1.0)).collect())
            .collect();
        Self::from_rows(rows, None)
    }

    fn from_rows(rows: Vec<Vec<(usize, f64)>>, source: Option<DeviationVector>) -> Self {
        let degree = rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
        SimilarityGraph { rows, degree, source }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => 0.0,
        }
    }

    /// `e_{i+} = Σ_j e_ij`.
    pub fn degree(&self, i: usize) -> f64 {
        self.degree[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn source_deviation(&self) -> Option<&DeviationVector> {
        self.source.as_ref()
    }

    /// Subgraph induced by `units`, re-indexed in the given order.
    pub fn induced(&self, units: &[usize]) -> SimilarityGraph {
        let pos: HashMap<usize, usize> = units.iter().enumerate().map(|(k, &u)| (u, k)).collect();
        let rows = units
            .iter()
            .map(|&u| {
                let mut r: Vec<(usize, f64)> = self.rows[u]
                    .iter()
                    .filter_map(|&(v, w)| pos.get(&v).map(|&k| (k, w)))
                    .collect();
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        Self::from_rows(rows, None)
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                m[(i, j)] = w;
            }
        }
        m
    }
}

/// Adjacency-masked Gaussian kernel of deviation differences:
/// `e_ij = exp(−(d_i − d_j)² / (2 σ̂_d²))` for adjacent `i, j`, else 0.
///
/// Returns [`RarError::DegenerateSimilarity`] when `σ̂_d = 0`; callers then
/// fall back to [`SimilarityGraph::from_adjacency`]. Kernel values that
/// underflow are clamped to the smallest positive double so that `E` keeps
/// exactly the sparsity pattern of `W`.
pub fn build_similarity(d: &DeviationVector, w: &AdjacencyMatrix) -> Result<SimilarityGraph> {
    if d.len() != w.n() {
        return Err(RarError::validation(format!(
            "deviation vector has {} entries but adjacency has {} units",
            d.len(),
            w.n()
        )));
    }
    if !(d.sigma_d > 0.0) {
        return Err(RarError::DegenerateSimilarity);
    }
    let two_var = 2.0 * d.sigma_d * d.sigma_d;
    let rows = (0..w.n())
        .map(|i| {
            w.neighbors(i)
                .iter()
                .map(|&j| {
                    let diff = d.d[i] - d.d[j];
                    (j, (-(diff * diff) / two_var).exp().max(f64::MIN_POSITIVE))
                })
                .collect()
        })
        .collect();
    Ok(SimilarityGraph::from_rows(rows, Some(d.clone())))
}

/// Normalized cut `Σ_k cut(G_k, Ḡ_k) / vol(G_k)`.
pub fn ncut(graph: &SimilarityGraph, partition: &Partition) -> Result<f64> {
    if partition.len() != graph.n() {
        return Err(RarError::validation(format!(
            "partition labels {} units but graph has {}",
            partition.len(),
            graph.n()
        )));
    }
    let labels = partition.labels();
    let k = partition.k();
    let mut cut = vec![0.0; k];
    let mut vol = vec![0.0; k];
    for i in 0..graph.n() {
        let li = labels[i];
        vol[li] += graph.degree(i);
        for &(j, w) in graph.neighbors(i) {
            if labels[j] != li {
                cut[li] += w;
            }
        }
    }
    let mut total = 0.0;
    for r in 0..k {
        if !(vol[r] > 0.0) {
            return Err(RarError::DegeneratePartition { region: r });
        }
        total += cut[r] / vol[r];
    }
    Ok(total)
}
