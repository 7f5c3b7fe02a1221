use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{RarError, Result};
use crate::graph::AdjacencyMatrix;

/// Assignment of every unit to one of `k` regions `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
    contiguous: bool,
}

impl Partition {
    /// Wraps labels that already use every region index `0..k` at least once.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(RarError::validation("partition must label at least one unit"));
        }
        let k = labels.iter().max().copied().unwrap_or(0) + 1;
        let mut used = vec![false; k];
        for &l in &labels {
            used[l] = true;
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return Err(RarError::validation(format!(
                "region {missing} of 0..{k} has no units"
            )));
        }
        Ok(Partition {
            labels,
            k,
            contiguous: false,
        })
    }

    /// Renumbers arbitrary labels to `0..k` in order of first appearance.
    pub fn from_labels_renumbered(labels: &[usize]) -> Self {
        let mut map = HashMap::new();
        let renumbered = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition {
            labels: renumbered,
            k: map.len(),
            contiguous: false,
        }
    }

    /// Everything in one region.
    pub fn single(n: usize) -> Self {
        Partition {
            labels: vec![0; n],
            k: 1,
            contiguous: false,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            labels: (0..n).collect(),
            k: n,
            contiguous: false,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Whether contiguity has been enforced or verified.
    pub fn contiguous(&self) -> bool {
        self.contiguous
    }

    pub(crate) fn with_contiguous(mut self, flag: bool) -> Self {
        self.contiguous = flag;
        self
    }

    /// Unit indices of each region, in unit order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    /// Checks that each region induces a connected subgraph of `w`, and
    /// records the result in the contiguity flag.
    pub fn verify_contiguity(mut self, w: &AdjacencyMatrix) -> Self {
        self.contiguous = self.is_contiguous_under(w);
        self
    }

    pub fn is_contiguous_under(&self, w: &AdjacencyMatrix) -> bool {
        assert_eq!(w.n(), self.len());
        let mut seen = vec![false; self.len()];
        let mut region_seen = vec![false; self.k];
        let mut stack = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let l = self.labels[start];
            if region_seen[l] {
                return false;
            }
            region_seen[l] = true;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in w.neighbors(u) {
                    if !seen[v] && self.labels[v] == l {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        true
    }
}
