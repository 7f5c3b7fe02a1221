//! Synthetic inputs shared by the benchmarks and the performance checks.
//!
//! [`county_like_map`] builds a planar triangulated lattice whose size and
//! edge density resemble a national county map (about three edges per unit,
//! average degree near six). [`county_like_dataset`] attaches Poisson death
//! counts with population offsets and a slope that changes across blocks of
//! the map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rar_core::glm::Dataset;
use rar_core::graph::AdjacencyMatrix;

/// Units of the default county-scale fixture.
pub const COUNTY_UNITS: usize = 3109;

fn lattice_dims(n: usize) -> (usize, usize) {
    let rows = ((n as f64) / 1.4).sqrt().ceil() as usize;
    let cols = n.div_ceil(rows);
    (rows, cols)
}

/// Row-major lattice truncated to `n` cells, with rook edges plus one
/// randomly oriented diagonal per complete square.
pub fn county_like_map(n: usize, seed: u64) -> AdjacencyMatrix {
    let (rows, cols) = lattice_dims(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |r: usize, c: usize| r * cols + c;
    let inside = |r: usize, c: usize| r < rows && c < cols && id(r, c) < n;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if !inside(r, c) {
                continue;
            }
            if inside(r, c + 1) {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if inside(r + 1, c) {
                edges.push((id(r, c), id(r + 1, c)));
            }
            if inside(r + 1, c + 1) && inside(r, c + 1) && inside(r + 1, c) {
                if rng.random_bool(0.5) {
                    edges.push((id(r, c), id(r + 1, c + 1)));
                } else {
                    edges.push((id(r, c + 1), id(r + 1, c)));
                }
            }
        }
    }
    AdjacencyMatrix::from_index_edges(n, edges).expect("lattice edges are valid")
}

/// Poisson outcomes on the lattice of [`county_like_map`] with the same `n`.
///
/// Columns: deaths `y`, population `offset`, exposure `pm25` (a smooth
/// east-west gradient plus noise) and one covariate `smoking`. The exposure
/// slope takes one of four values by quadrant of the lattice.
pub fn county_like_dataset(n: usize, seed: u64) -> Dataset {
    let (rows, cols) = lattice_dims(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let slopes = [0.04, -0.02, 0.01, 0.06];
    let mut ids = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut pop = Vec::with_capacity(n);
    let mut pm = Vec::with_capacity(n);
    let mut smoke = Vec::with_capacity(n);
    for i in 0..n {
        let (r, c) = (i / cols, i % cols);
        let quadrant = usize::from(r >= rows / 2) * 2 + usize::from(c >= cols / 2);
        let exposure = 8.0 + 6.0 * c as f64 / cols as f64 + noise.sample(&mut rng);
        let smoking = 0.2 + 0.05 * noise.sample(&mut rng);
        let population = (2_000.0 + 50_000.0 * rng.random::<f64>()).round();
        let rate = (-4.5 + slopes[quadrant] * exposure + 1.5 * smoking).exp();
        let deaths = Poisson::new(population * rate).unwrap().sample(&mut rng);
        ids.push(format!("c{i:04}"));
        y.push(deaths);
        pop.push(population);
        pm.push(exposure);
        smoke.push(smoking);
    }
    Dataset::new(ids, y, Some(pop), pm, vec![("smoking".to_string(), smoke)])
        .expect("synthetic data are valid")
        .with_exposure_name("pm25")
}
