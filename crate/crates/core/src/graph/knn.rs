use std::cmp::Ordering;

use rayon::prelude::*;

use super::{Edge, Graph};
use crate::error::{Error, Result};

/// A symmetrized k-nearest-neighbor graph with Gaussian weights.
#[derive(Debug, Clone)]
pub struct KnnGraph {
    pub graph: Graph,
    /// Mean over all points of the distance to the k-th nearest neighbor.
    pub mean_kth_distance: f64,
    /// Kernel scale `3 * mean_kth_distance^2`.
    pub sigma2: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

/// The `k` nearest neighbors of every point as `(squared distance, index)`,
/// nearest first. Ties go to the lower index.
pub(crate) fn nearest_neighbors<P: AsRef<[f64]> + Sync>(
    points: &[P],
    k: usize,
) -> Vec<Vec<(f64, usize)>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let p = p.as_ref();
            let mut cand: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| (squared_distance(p, q.as_ref()), j))
                .collect();
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_distance_then_index);
                cand.truncate(k);
            }
            cand.sort_by(by_distance_then_index);
            cand
        })
        .collect()
}

/// Builds the union-symmetrized k-NN graph with weights `exp(-r^2 / sigma^2)`,
/// `sigma^2 = 3 d_k^2`.
pub fn build_knn_graph<P: AsRef<[f64]> + Sync>(points: &[P], k: usize) -> Result<KnnGraph> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidNeighborCount { k, n });
    }
    let dim = points[0].as_ref().len();
    if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.as_ref().len() != dim) {
        return Err(Error::RaggedPoints { index, expected: dim, got: p.as_ref().len() });
    }

    let neighbors = nearest_neighbors(points, k);
    let mean_kth_distance =
        neighbors.iter().map(|nb| nb[k - 1].0.sqrt()).sum::<f64>() / n as f64;
    let sigma2 = 3.0 * mean_kth_distance * mean_kth_distance;

    let mut pairs: Vec<(usize, usize, f64)> = neighbors
        .iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.iter().map(move |&(d2, j)| (i.min(j), i.max(j), d2)))
        .collect();
    pairs.sort_by_key(|p| (p.0, p.1));
    pairs.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));

    let edges = pairs
        .into_iter()
        .map(|(i, j, d2)| {
            let w = if d2 == 0.0 { 1.0 } else { (-d2 / sigma2).exp() };
            Edge { i, j, w }
        })
        .filter(|e| e.w > 0.0)
        .collect();
    Ok(KnnGraph { graph: Graph::from_sorted(n, edges), mean_kth_distance, sigma2 })
}
