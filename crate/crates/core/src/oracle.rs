//! Independent references used to check the iterative machinery: exhaustive
//! balanced cuts, the closed-form two-vertex ROF solution, a long-run ROF
//! solve, and the indicator/energy correspondence.

use crate::energy::balance_energy;
use crate::error::{Error, Result};
use crate::graph::{balanced_cut_value, Graph, Partition};
use crate::rof::{self, RofProblem};

pub const BRUTE_FORCE_MAX_N: usize = 20;

/// Minimum balanced cut by enumeration of all `2^(n-1) - 1` bipartitions.
///
/// Vertex 0 is kept in `S`. Among exact ties the lexicographically smallest
/// sorted `S` wins.
pub fn brute_force_balanced_cut(g: &Graph) -> Result<(Partition, f64)> {
    let n = g.n();
    if !(2..=BRUTE_FORCE_MAX_N).contains(&n) {
        return Err(Error::param(format!("brute force needs 2 <= n <= {BRUTE_FORCE_MAX_N}, got {n}")));
    }
    let exact = |mask: &[bool]| balanced_cut_value(g, &Partition::from_mask(mask.to_vec()));

    let mut in_s = vec![false; n];
    in_s[0] = true;
    let mut size = 1usize;
    // S = {0}: cut is the weighted degree of vertex 0
    let mut cut = g.weighted_degree(0);
    let mut best_mask = in_s.clone();
    let mut best = exact(&best_mask)?;

    let total: u64 = 1 << (n - 1);
    for step in 1..total {
        // Gray code: flip the lowest set bit position of `step`
        let v = step.trailing_zeros() as usize + 1;
        for &(u, e) in g.neighbors(v) {
            let w = g.edges()[e].w;
            if in_s[u] == in_s[v] {
                cut += w;
            } else {
                cut -= w;
            }
        }
        in_s[v] = !in_s[v];
        if in_s[v] {
            size += 1;
        } else {
            size -= 1;
        }
        if size == n {
            continue;
        }
        let value = cut / size.min(n - size) as f64;
        if value <= best * (1.0 + 1e-9) + 1e-300 {
            let value = exact(&in_s)?;
            let better = value < best || (value == best && lex_less(&in_s, &best_mask));
            if better {
                best = value;
                best_mask.copy_from_slice(&in_s);
            }
        }
    }
    Ok((Partition::from_mask(best_mask), best))
}

fn lex_less(a: &[bool], b: &[bool]) -> bool {
    let ia = a.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i);
    let ib = b.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i);
    ia.lt(ib)
}

/// Exact minimizer of `2 w |u1 - u2| + (lambda / 2) ||u - g||^2`.
pub fn rof_two_node_closed_form(w: f64, lambda: f64, g1: f64, g2: f64) -> (f64, f64) {
    let mean = 0.5 * (g1 + g2);
    let half = 0.5 * (g1 - g2);
    let shrunk = half.signum() * (half.abs() - 2.0 * w / lambda).max(0.0);
    (mean + shrunk, mean - shrunk)
}

#[derive(Debug, Clone)]
pub struct HighAccuracyRof {
    pub h: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Whether the residual target was reached before the iteration cap.
    pub converged: bool,
}

pub const HIGH_ACCURACY_MAX_N: usize = 500;
pub const HIGH_ACCURACY_RESIDUAL: f64 = 1e-11;
pub const HIGH_ACCURACY_MAX_ITER: usize = 1_000_000;

/// Runs the dual forward-backward iteration until the optimality residual
/// drops to `1e-11` or a million iterations have been spent.
pub fn high_accuracy_rof(problem: &RofProblem) -> Result<HighAccuracyRof> {
    let n = problem.graph.n();
    if n > HIGH_ACCURACY_MAX_N {
        return Err(Error::param(format!("high-accuracy reference limited to n <= {HIGH_ACCURACY_MAX_N}")));
    }
    problem.graph.require_connected()?;
    let step = rof::default_dual_step(problem);
    let mut p = vec![0.0; problem.graph.edge_count()];
    let mut iterations = 0;
    let mut check_every = 16;
    loop {
        for _ in 0..check_every {
            p = rof::forward_backward_dual_step(problem, &p, step);
        }
        iterations += check_every;
        let h = problem.primal_from_dual(&p);
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { iteration: iterations });
        }
        let residual = rof::rof_optimality_residual_with_hint(problem, &h, Some(&p));
        let converged = residual <= HIGH_ACCURACY_RESIDUAL;
        if converged || iterations >= HIGH_ACCURACY_MAX_ITER {
            return Ok(HighAccuracyRof { h, residual, iterations, converged });
        }
        check_every = (check_every * 2).min(1000);
    }
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub subsets_checked: usize,
    /// `max_S |E(1_S) - 2 C(S)|`.
    pub max_deviation: f64,
    pub min_indicator_energy: f64,
    pub brute_force_value: f64,
    pub brute_force_partition: Partition,
}

impl EquivalenceReport {
    /// Minimum indicator energy equals twice the combinatorial optimum, bit for bit.
    pub fn minimum_matches(&self) -> bool {
        self.min_indicator_energy == 2.0 * self.brute_force_value
    }
}

pub const EQUIVALENCE_MAX_N: usize = 12;

/// Compares `E(1_S)` with `2 C(S)` over every proper subset.
pub fn check_relaxation_equivalence(g: &Graph) -> Result<EquivalenceReport> {
    let n = g.n();
    if !(2..=EQUIVALENCE_MAX_N).contains(&n) {
        return Err(Error::param(format!("equivalence check needs 2 <= n <= {EQUIVALENCE_MAX_N}")));
    }
    g.require_connected()?;
    let mut max_deviation = 0.0f64;
    let mut min_indicator_energy = f64::INFINITY;
    let mut subsets_checked = 0;
    for mask in 1u32..(1 << n) - 1 {
        let s = Partition::from_mask((0..n).map(|v| mask >> v & 1 == 1).collect());
        let e = balance_energy(g, &s.indicator())?;
        let c = balanced_cut_value(g, &s)?;
        max_deviation = max_deviation.max((e - 2.0 * c).abs());
        min_indicator_energy = min_indicator_energy.min(e);
        subsets_checked += 1;
    }
    let (brute_force_partition, brute_force_value) = brute_force_balanced_cut(g)?;
    Ok(EquivalenceReport {
        subsets_checked,
        max_deviation,
        min_indicator_energy,
        brute_force_value,
        brute_force_partition,
    })
}
