use crate::graph::{AdjacencyMatrix, SimilarityGraph};
use crate::partition::Partition;

/// Makes every region a connected subgraph of `w`.
///
/// For each region, the largest connected piece keeps the label (the piece
/// containing the lowest unit index on size ties). Each smaller piece joins
/// the neighboring region it shares the most similarity `Σ e_ij` with,
/// falling back to the number of shared edges and then to the lowest region
/// index. A piece with no neighbor outside itself becomes a region of its
/// own. Regions are finally renumbered by first appearance.
pub fn enforce_contiguity(partition: &Partition, w: &AdjacencyMatrix, graph: &SimilarityGraph) -> Partition {
    let n = partition.len();
    assert_eq!(w.n(), n, "adjacency and partition disagree on unit count");
    assert_eq!(graph.n(), n, "similarity graph and partition disagree on unit count");
    let mut labels = partition.labels().to_vec();
    let mut next_label = labels.iter().max().map_or(0, |m| m + 1);

    loop {
        let fragments = fragments(&labels, w);
        if fragments.is_empty() {
            break;
        }
        for piece in fragments {
            let own = labels[piece[0]];
            // (label, similarity, edges), kept sorted by label
            let mut contacts: Vec<(usize, f64, usize)> = Vec::new();
            let mut rejoined = false;
            for &u in &piece {
                for &v in w.neighbors(u) {
                    let lv = labels[v];
                    if lv == own {
                        rejoined |= piece.binary_search(&v).is_err();
                        continue;
                    }
                    let e = graph.weight(u, v);
                    match contacts.binary_search_by_key(&lv, |c| c.0) {
                        Ok(p) => {
                            contacts[p].1 += e;
                            contacts[p].2 += 1;
                        }
                        Err(p) => contacts.insert(p, (lv, e, 1)),
                    }
                }
            }
            // An earlier merge in this pass reconnected the piece to its
            // own label; the next pass sees the updated pieces.
            if rejoined {
                continue;
            }
            let target = contacts
                .iter()
                .fold(None::<&(usize, f64, usize)>, |best, c| match best {
                    Some(b) if (b.1, b.2) >= (c.1, c.2) => Some(b),
                    _ => Some(c),
                })
                .map(|c| c.0);
            let new_label = target.unwrap_or_else(|| {
                next_label += 1;
                next_label - 1
            });
            for &u in &piece {
                labels[u] = new_label;
            }
        }
    }
    Partition::from_labels_renumbered(&labels).with_contiguous(true)
}

/// Every connected piece of every label except the largest one per label.
fn fragments(labels: &[usize], w: &AdjacencyMatrix) -> Vec<Vec<usize>> {
    let n = labels.len();
    let mut seen = vec![false; n];
    let mut pieces: Vec<Vec<usize>> = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let l = labels[s];
        let mut piece = vec![s];
        seen[s] = true;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &v in w.neighbors(u) {
                if !seen[v] && labels[v] == l {
                    seen[v] = true;
                    piece.push(v);
                    stack.push(v);
                }
            }
        }
        piece.sort_unstable();
        pieces.push(piece);
    }
    let max_label = labels.iter().max().map_or(0, |m| m + 1);
    let mut keeper: Vec<Option<usize>> = vec![None; max_label];
    for (p, piece) in pieces.iter().enumerate() {
        let l = labels[piece[0]];
        match keeper[l] {
            Some(q) if pieces[q].len() >= piece.len() => {}
            _ => keeper[l] = Some(p),
        }
    }
    pieces
        .into_iter()
        .enumerate()
        .filter(|(p, piece)| keeper[labels[piece[0]]] != Some(*p))
        .map(|(_, piece)| piece)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::grid_adjacency;

    #[test]
    fn contiguous_input_only_renumbered() {
        let w = grid_adjacency(2, 3).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let p = Partition::new(vec![1, 1, 0, 1, 1, 0]).unwrap();
        let out = enforce_contiguity(&p, &w, &g);
        assert_eq!(out.labels(), &[0, 0, 1, 0, 0, 1]);
        assert!(out.contiguous());
    }

    #[test]
    fn island_merges_into_surrounding_region() {
        // 4x4 grid; region 1 is the left two columns plus an island at (2,3)
        // that sits inside region 0
        let w = grid_adjacency(4, 4).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let mut labels = vec![0; 16];
        for r in 0..4 {
            labels[r * 4] = 1;
            labels[r * 4 + 1] = 1;
        }
        labels[2 * 4 + 3] = 1;
        let p = Partition::new(labels.clone()).unwrap();
        assert!(!p.is_contiguous_under(&w));
        let out = enforce_contiguity(&p, &w, &g);
        assert_eq!(out.k(), 2);
        assert!(out.is_contiguous_under(&w));
        assert_eq!(out.labels()[11], out.labels()[3]);
        assert_ne!(out.labels()[11], out.labels()[0]);
    }

    #[test]
    fn fragment_follows_strongest_similarity() {
        // path 0-1-2-3-4 labelled a b a c c ... the lone `a` at 2 touches b and c
        let w = AdjacencyMatrix::from_index_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let g = SimilarityGraph::from_weighted_edges(5, &[(0, 1, 1.0), (1, 2, 0.2), (2, 3, 0.9), (3, 4, 1.0)]).unwrap();
        let p = Partition::new(vec![0, 0, 1, 2, 2]).unwrap();
        let split = Partition::new(vec![0, 1, 0, 2, 2]).unwrap();
        assert_eq!(enforce_contiguity(&p, &w, &g).k(), 3);
        let out = enforce_contiguity(&split, &w, &g);
        assert_eq!(out.labels()[2], out.labels()[3]);
    }

    #[test]
    fn single_region_unchanged() {
        let w = grid_adjacency(3, 3).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let out = enforce_contiguity(&Partition::single(9), &w, &g);
        assert_eq!(out.k(), 1);
    }

    #[test]
    fn separate_component_is_promoted() {
        // units 0-1 and 2-3 are separate components but share a label
        let w = AdjacencyMatrix::from_index_edges(4, [(0, 1), (2, 3)]).unwrap();
        let g = SimilarityGraph::from_adjacency(&w);
        let out = enforce_contiguity(&Partition::single(4), &w, &g);
        assert_eq!(out.labels(), &[0, 0, 1, 1]);
    }
}
