//! Second eigenvector of the normalized graph Laplacian.
//!
//! With `M = D^{-1/2} W D^{-1/2}`, the second smallest eigenvalue of
//! `I - M` corresponds to the largest eigenvalue of `M` on the orthogonal
//! complement of `D^{1/2} 1`. Small graphs use a dense symmetric eigensolver,
//! larger ones restarted Lanczos with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::Graph;

const DENSE_LIMIT: usize = 200;
const KRYLOV_DIM: usize = 200;
const MAX_RESTARTS: usize = 30;
const RITZ_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
        }
    }
}

struct NormalizedAdjacency<'a> {
    graph: &'a Graph,
    inv_sqrt_degree: Vec<f64>,
}

impl NormalizedAdjacency<'_> {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for e in self.graph.edges() {
            let s = e.w * self.inv_sqrt_degree[e.i] * self.inv_sqrt_degree[e.j];
            out[e.i] += s * x[e.j];
            out[e.j] += s * x[e.i];
        }
    }
}

/// Eigenvector of the random-walk Laplacian `I - D^{-1} W` for its second
/// smallest eigenvalue. The sign makes the largest-magnitude entry positive.
pub fn fiedler_vector(g: &Graph, seed: u64) -> Result<Vec<f64>> {
    g.require_connected()?;
    let n = g.n();
    if n < 2 {
        return Err(Error::param("spectral initialization needs at least 2 vertices"));
    }
    let degree: Vec<f64> = (0..n).map(|v| g.weighted_degree(v)).collect();
    let op = NormalizedAdjacency { graph: g, inv_sqrt_degree: degree.iter().map(|d| 1.0 / d.sqrt()).collect() };
    let mut top: Vec<f64> = degree.iter().map(|d| d.sqrt()).collect();
    normalize(&mut top);

    let x = if n <= DENSE_LIMIT { dense(&op, n, &top) } else { lanczos(&op, n, &top, seed) };
    let mut f: Vec<f64> = x.iter().zip(&op.inv_sqrt_degree).map(|(xi, s)| xi * s).collect();
    let pivot = f
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if v.abs() > f[best].abs() { i } else { best });
    if f[pivot] < 0.0 {
        f.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(f)
}

fn dense(op: &NormalizedAdjacency, n: usize, top: &[f64]) -> Vec<f64> {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for e in op.graph.edges() {
        let s = e.w * op.inv_sqrt_degree[e.i] * op.inv_sqrt_degree[e.j];
        m[(e.i, e.j)] = s;
        m[(e.j, e.i)] = s;
    }
    // push the known top eigenvector to the bottom of the spectrum
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] -= 3.0 * top[i] * top[j];
        }
    }
    let eig = SymmetricEigen::new(m);
    let best = eig.eigenvalues.imax();
    eig.eigenvectors.column(best).iter().copied().collect()
}

fn lanczos(op: &NormalizedAdjacency, n: usize, top: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let dim = KRYLOV_DIM.min(n - 1);
    let mut w = vec![0.0; n];

    for _ in 0..MAX_RESTARTS {
        orthogonalize(&mut start, std::slice::from_ref(&top.to_vec()));
        normalize(&mut start);
        let mut basis: Vec<Vec<f64>> = vec![top.to_vec(), start.clone()];
        let mut alpha = Vec::with_capacity(dim);
        let mut beta: Vec<f64> = Vec::with_capacity(dim);
        let mut last_beta = 0.0;
        for j in 0..dim {
            let q = &basis[j + 1];
            op.apply(q, &mut w);
            alpha.push(dot(&w, q));
            orthogonalize(&mut w, &basis);
            let b = normalize(&mut w);
            last_beta = b;
            if b < 1e-12 || j + 1 == dim {
                break;
            }
            beta.push(b);
            basis.push(w.clone());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let best = eig.eigenvalues.imax();
        let s = eig.eigenvectors.column(best);
        let mut ritz = vec![0.0; n];
        for (i, q) in basis[1..=k].iter().enumerate() {
            ritz.iter_mut().zip(q).for_each(|(r, qi)| *r += s[i] * qi);
        }
        normalize(&mut ritz);
        let residual = (last_beta * s[k - 1]).abs();
        start = ritz;
        if residual < RITZ_TOL || last_beta < 1e-12 {
            break;
        }
    }
    start
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1, 1.0))).unwrap()
    }

    /// Checks `W f = mu D f` for the second largest `mu`.
    fn check_eigen(g: &Graph, f: &[f64]) -> f64 {
        let n = g.n();
        let mut wf = vec![0.0; n];
        for e in g.edges() {
            wf[e.i] += e.w * f[e.j];
            wf[e.j] += e.w * f[e.i];
        }
        let d: Vec<f64> = (0..n).map(|v| g.weighted_degree(v)).collect();
        let mu = dot(&wf, f) / f.iter().zip(&d).map(|(x, di)| x * x * di).sum::<f64>();
        let res: f64 = (0..n).map(|v| (wf[v] - mu * d[v] * f[v]).powi(2)).sum::<f64>().sqrt();
        res / dot(f, f).sqrt()
    }

    #[test]
    fn three_vertex_path() {
        let f = fiedler_vector(&path(3), 0).unwrap();
        let a = f[0];
        assert!(f[1].abs() < 1e-12);
        assert!((f[2] + a).abs() < 1e-12 && a.abs() > 0.1);
    }

    #[test]
    fn dense_and_lanczos_agree() {
        // path eigenvalues are well separated at the low end
        let g = path(400);
        let f = fiedler_vector(&g, 7).unwrap();
        assert!(check_eigen(&g, &f) < 1e-6);
        // monotone along the path
        let increasing = f.windows(2).all(|w| w[1] >= w[0]);
        let decreasing = f.windows(2).all(|w| w[1] <= w[0]);
        assert!(increasing || decreasing);
        let small = path(150);
        let f = fiedler_vector(&small, 7).unwrap();
        assert!(check_eigen(&small, &f) < 1e-9);
    }
}
