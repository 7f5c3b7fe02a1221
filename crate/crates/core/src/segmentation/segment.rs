use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RarError, Result};
use crate::graph::{ncut, AdjacencyMatrix, SimilarityGraph};
use crate::partition::Partition;

use super::{discretize_with_rng, enforce_contiguity, DiscretizeOptions, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentOptions {
    pub seed: u64,
    /// Independent discretization starts; the lowest-ncut result wins.
    pub restarts: usize,
    pub discretize: DiscretizeOptions,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            seed: 0,
            restarts: 10,
            discretize: DiscretizeOptions::default(),
        }
    }
}

/// A contiguous partition together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub partition: Partition,
    /// Normalized cut over the non-isolated units.
    pub ncut: f64,
    pub requested_k: usize,
    /// Index of the winning restart.
    pub restart: usize,
    pub converged: bool,
    pub reseeded: usize,
    /// Units without neighbors, each placed in a singleton region.
    pub isolated: Vec<usize>,
    pub eigenvalues: Vec<f64>,
}

/// Partitions the units of `graph` into `k` contiguous regions.
///
/// Isolated units of `w` are set aside as singleton regions and the rest is
/// segmented into `k` regions, so the realized region count can exceed `k`
/// by the number of isolated units, and can differ from `k` after contiguity
/// repair. `k = 1` places every unit in one region.
pub fn segment(graph: &SimilarityGraph, w: &AdjacencyMatrix, k: usize, opts: &SegmentOptions) -> Result<Segmentation> {
    let active = active_units(graph, w, k)?;
    let spectrum = if k >= 2 && k < active.len() {
        Some(Spectrum::compute(&graph.induced(&active), k)?)
    } else {
        None
    };
    run(graph, w, k, &active, spectrum.as_ref(), opts)
}

/// Like [`segment`], reusing a spectrum of the graph restricted to the
/// non-isolated units (in unit order) with at least `k` eigenpairs.
pub fn segment_with_spectrum(
    graph: &SimilarityGraph,
    w: &AdjacencyMatrix,
    k: usize,
    spectrum: &Spectrum,
    opts: &SegmentOptions,
) -> Result<Segmentation> {
    let active = active_units(graph, w, k)?;
    if k >= 2 && k < active.len() && spectrum.k_max() < k {
        return Err(RarError::validation(format!(
            "spectrum holds {} eigenpairs, need {k}",
            spectrum.k_max()
        )));
    }
    if spectrum.vectors().rows() != active.len() {
        return Err(RarError::validation("spectrum was computed for a different graph"));
    }
    run(graph, w, k, &active, Some(spectrum), opts)
}

fn active_units(graph: &SimilarityGraph, w: &AdjacencyMatrix, k: usize) -> Result<Vec<usize>> {
    let n = w.n();
    if graph.n() != n {
        return Err(RarError::validation(format!(
            "similarity graph has {} units but adjacency has {n}",
            graph.n()
        )));
    }
    if k == 0 || k > n {
        return Err(RarError::validation(format!("K must be in 1..={n}, got {k}")));
    }
    Ok((0..n).filter(|&i| w.degree(i) > 0).collect())
}

fn run(
    graph: &SimilarityGraph,
    w: &AdjacencyMatrix,
    k: usize,
    active: &[usize],
    spectrum: Option<&Spectrum>,
    opts: &SegmentOptions,
) -> Result<Segmentation> {
    let n = w.n();
    let isolated: Vec<usize> = (0..n).filter(|&i| w.degree(i) == 0).collect();
    let sub_graph = graph.induced(active);
    let sub_w = w.induced(active);

    if k == 1 {
        let partition = Partition::single(n).verify_contiguity(w);
        let ncut = if active.is_empty() { 0.0 } else { ncut(&sub_graph, &Partition::single(active.len()))? };
        return Ok(Segmentation {
            partition,
            ncut,
            requested_k: k,
            restart: 0,
            converged: true,
            reseeded: 0,
            isolated,
            eigenvalues: Vec::new(),
        });
    }

    let (sub_partition, ncut_value, restart, converged, reseeded, eigenvalues) = if k >= active.len() {
        let p = Partition::singletons(active.len());
        let value = if active.is_empty() { 0.0 } else { ncut(&sub_graph, &p)? };
        (p, value, 0, true, 0, Vec::new())
    } else {
        let spectrum = spectrum.expect("spectrum is computed whenever 2 <= k < active units");
        let embedding = spectrum.embedding(k)?;
        let restarts = opts.restarts.max(1);
        let candidates: Vec<Result<(Partition, f64, bool, usize)>> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(r as u64);
                let disc = discretize_with_rng(&embedding, &mut rng, &opts.discretize)?;
                let raw = Partition::from_labels_renumbered(&disc.labels);
                let repaired = enforce_contiguity(&raw, &sub_w, &sub_graph);
                let value = ncut(&sub_graph, &repaired)?;
                Ok((repaired, value, disc.converged, disc.reseeded))
            })
            .collect();
        let mut best: Option<(usize, Partition, f64, bool, usize)> = None;
        for (r, cand) in candidates.into_iter().enumerate() {
            let (p, value, conv, reseed) = cand?;
            if best.as_ref().is_none_or(|b| value < b.2) {
                best = Some((r, p, value, conv, reseed));
            }
        }
        let (r, p, value, conv, reseed) = best.expect("at least one restart");
        (p, value, r, conv, reseed, embedding.eigenvalues)
    };

    let mut labels = vec![usize::MAX; n];
    for (pos, &u) in active.iter().enumerate() {
        labels[u] = sub_partition.labels()[pos];
    }
    let mut next = sub_partition.k();
    for &u in &isolated {
        labels[u] = next;
        next += 1;
    }
    let partition = Partition::from_labels_renumbered(&labels).verify_contiguity(w);
    Ok(Segmentation {
        partition,
        ncut: ncut_value,
        requested_k: k,
        restart,
        converged,
        reseeded,
        isolated,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::grid_adjacency;

    #[test]
    fn components_recovered_exactly() {
        let w = AdjacencyMatrix::from_index_edges(7, [(0, 1), (1, 2), (3, 4), (5, 6), (4, 5)]).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let seg = segment(&g, &w, 2, &SegmentOptions::default()).unwrap();
        assert_eq!(seg.partition.labels(), &[0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(seg.ncut, 0.0);
        assert!(seg.partition.contiguous());
    }

    #[test]
    fn k_equal_s_gives_singletons() {
        let w = grid_adjacency(2, 3).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let seg = segment(&g, &w, 6, &SegmentOptions::default()).unwrap();
        assert_eq!(seg.partition.k(), 6);
        assert!(seg.ncut.is_finite());
        assert!((seg.ncut - 6.0).abs() < 1e-12);
    }

    #[test]
    fn isolated_units_become_singletons() {
        let w = AdjacencyMatrix::from_index_edges(6, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let seg = segment(&g, &w, 2, &SegmentOptions::default()).unwrap();
        assert_eq!(seg.isolated, vec![5]);
        assert_eq!(seg.partition.k(), 3);
        assert_eq!(seg.partition.labels(), &[0, 0, 0, 1, 1, 2]);
    }

    #[test]
    fn single_region_request() {
        let w = grid_adjacency(3, 3).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let seg = segment(&g, &w, 1, &SegmentOptions::default()).unwrap();
        assert_eq!(seg.partition.k(), 1);
        assert_eq!(seg.ncut, 0.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let w = grid_adjacency(8, 8).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let opts = SegmentOptions { seed: 9, ..Default::default() };
        let a = segment(&g, &w, 4, &opts).unwrap();
        let b = segment(&g, &w, 4, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.partition.contiguous());
    }
}
