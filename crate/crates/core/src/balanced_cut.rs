//! Outer iterations for the balanced-cut energy, rounding, and multi-class
//! recursive bisection.

mod spectral;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use spectral::fiedler_vector;

use crate::energy::{self, balance_energy, zero_mean_subgradient, Subgradient};
use crate::error::{Error, Result};
use crate::graph::{balanced_cut_value, Graph, Partition};
use crate::rof::{
    center_and_normalize, solve_rof_with_steps, RofProblem, SolverKind, StoppingPolicy, StoppingRule,
    Termination, DEFAULT_M_MAX,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgorithmVariant {
    /// Inner solves stop on a fixed step tolerance.
    NonAdaptive { eps: f64 },
    AdaptiveMedian { theta: f64 },
    AdaptiveMedianFree { theta: f64 },
}

impl AlgorithmVariant {
    pub fn is_adaptive(&self) -> bool {
        !matches!(self, AlgorithmVariant::NonAdaptive { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmVariant::NonAdaptive { .. } => "fixed",
            AlgorithmVariant::AdaptiveMedian { .. } => "adaptive-median",
            AlgorithmVariant::AdaptiveMedianFree { .. } => "adaptive-median-free",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    RandomZeroMedian,
    SpectralSecondEigenvector,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunOptions {
    pub solver: SolverKind,
    pub m_max: usize,
    /// Outer stopping threshold relative to `E(f^0)`.
    pub tol: f64,
    pub max_outer: usize,
    pub stride: usize,
    /// Primal-dual step ratio `tau / (tau sigma)^(1/2)`.
    pub pd_ratio: f64,
}

pub const DEFAULT_PD_RATIO: f64 = 1.0;

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::PrimalDual,
            m_max: DEFAULT_M_MAX,
            tol: 1e-10,
            max_outer: 300,
            stride: 1,
            pd_ratio: DEFAULT_PD_RATIO,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.m_max < 2 {
            return Err(Error::param("max-inner must be at least 2"));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::param(format!("tol = {} must be nonnegative", self.tol)));
        }
        if self.max_outer == 0 {
            return Err(Error::param("max-outer must be positive"));
        }
        if self.stride == 0 {
            return Err(Error::param("stride must be positive"));
        }
        if !(self.pd_ratio > 0.0 && self.pd_ratio.is_finite()) {
            return Err(Error::param("step ratio must be positive"));
        }
        Ok(())
    }
}

/// `(f - med f) / ||f - med f||_2`; `None` for constant input.
fn zero_median_unit(f: &[f64]) -> Option<Vec<f64>> {
    center_and_normalize(f)
}

/// A starting point with median zero and unit norm.
pub fn initialize(g: &Graph, method: InitMethod, seed: u64) -> Result<Vec<f64>> {
    g.require_connected()?;
    if g.n() < 2 {
        return Err(Error::param("clustering needs at least 2 vertices"));
    }
    match method {
        InitMethod::RandomZeroMedian => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            loop {
                let raw: Vec<f64> = (0..g.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
                if let Some(f) = zero_median_unit(&raw) {
                    return Ok(f);
                }
            }
        }
        InitMethod::SpectralSecondEigenvector => {
            let x = fiedler_vector(g, seed)?;
            zero_median_unit(&x).ok_or(Error::Degenerate("constant spectral vector"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct OuterState {
    pub k: usize,
    /// Median zero, unit norm.
    pub f: Vec<f64>,
    pub energy: f64,
}

impl OuterState {
    pub fn new(g: &Graph, f: Vec<f64>) -> Result<Self> {
        g.check_len(&f)?;
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 || energy::median(&f)? != 0.0 {
            return Err(Error::param("initial function must have median 0 and unit norm"));
        }
        let energy = balance_energy(g, &f)?;
        Ok(Self { k: 0, f, energy })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepOutcome {
    Descent,
    /// The new energy is not below the old one.
    NoDescent,
    /// The inner solve returned `f^k` itself, or an adaptive solve hit the cap
    /// without producing descent. The state is left unchanged.
    CriticalPoint,
}

/// Everything produced by one outer iteration.
#[derive(Debug, Clone)]
pub struct OuterStep {
    pub v: Subgradient,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub h0: Vec<f64>,
    pub next: OuterState,
    pub inner_iterations: usize,
    pub terminated_by: Termination,
    pub gap: Option<f64>,
    pub outcome: StepOutcome,
}

fn policy_for<'a>(
    variant: AlgorithmVariant,
    opts: &RunOptions,
    f: &'a [f64],
    v: &'a [f64],
    energy_fk: f64,
    tv_fk: f64,
) -> StoppingPolicy<'a> {
    let rule = match variant {
        AlgorithmVariant::NonAdaptive { eps } => StoppingRule::FixedTolerance { eps },
        AlgorithmVariant::AdaptiveMedian { theta } => StoppingRule::AdaptiveMedian { theta, f_k: f, energy_fk },
        AlgorithmVariant::AdaptiveMedianFree { theta } => {
            StoppingRule::AdaptiveMedianFree { theta, f_k: f, v_k: v, energy_fk, tv_fk }
        }
    };
    StoppingPolicy { rule, m_max: opts.m_max, stride: opts.stride }
}

/// One outer iteration. `dual` carries the inner solver's dual variable
/// between iterations.
pub fn outer_step(
    g: &Graph,
    state: &OuterState,
    variant: AlgorithmVariant,
    opts: &RunOptions,
    dual: &mut Vec<f64>,
) -> Result<OuterStep> {
    let f = &state.f;
    let v = zero_mean_subgradient(f)?;
    let shifted: Vec<f64> = f.iter().zip(v.values()).map(|(a, b)| a + b).collect();
    let tv_fk = energy::tv_unchecked(g, f);
    let problem = RofProblem::new(g, state.energy, &shifted, f)?;
    let policy = policy_for(variant, opts, f, v.values(), state.energy, tv_fk);
    let sol = solve_rof_with_steps(&problem, opts.solver, &policy, dual, opts.pd_ratio)?;

    let unchanged = |next: OuterState, h0: Vec<f64>, sol: crate::rof::RofSolution, v| OuterStep {
        v,
        g: shifted.clone(),
        h0,
        h: sol.h,
        next,
        inner_iterations: sol.iterations_used,
        terminated_by: sol.terminated_by,
        gap: sol.gap,
        outcome: StepOutcome::CriticalPoint,
    };
    if sol.h == *f {
        return Ok(unchanged(state.clone(), f.clone(), sol, v));
    }

    let med = energy::median(&sol.h)?;
    let h0: Vec<f64> = sol.h.iter().map(|x| x - med).collect();
    let f_next = center_and_normalize(&sol.h)
        .ok_or_else(|| Error::Invariant(format!("inner solution is constant at outer iteration {}", state.k)))?;
    let e_next = balance_energy(g, &f_next)?;
    if let (AlgorithmVariant::AdaptiveMedian { .. }, Termination::AdaptiveConditionMet) = (variant, sol.terminated_by) {
        if !(e_next < state.energy) {
            return Err(Error::Invariant(format!("adaptive test fired without descent at outer iteration {}", state.k)));
        }
    }
    // At the cap the iterate stands in for the exact minimizer; if even that
    // does not descend, f^k is critical up to solver accuracy.
    if variant.is_adaptive() && sol.terminated_by == Termination::CapReached && !(e_next < state.energy) {
        return Ok(unchanged(state.clone(), h0, sol, v));
    }
    let outcome = if e_next < state.energy { StepOutcome::Descent } else { StepOutcome::NoDescent };
    Ok(OuterStep {
        v,
        g: shifted,
        h: sol.h,
        h0,
        next: OuterState { k: state.k + 1, f: f_next, energy: e_next },
        inner_iterations: sol.iterations_used,
        terminated_by: sol.terminated_by,
        gap: sol.gap,
        outcome,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Energy decrement below `tol * E(f^0)`.
    Converged,
    CriticalPoint,
    /// An adaptive step failed to lower the energy in floating point; the
    /// step was discarded.
    DescentLost,
    /// A non-adaptive step changed the energy by less than the threshold
    /// without lowering it.
    Stalled,
    MaxOuter,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Index `k` of the iterate the step started from.
    pub k: usize,
    pub energy_before: f64,
    /// `E(f^{k+1})`.
    pub energy: f64,
    pub inner_iterations: usize,
    pub terminated_by: Termination,
    pub h_minus_f: f64,
    pub median_h: f64,
    pub h_norm: f64,
    /// `||f^{k+1} - f^k||_2`.
    pub f_step: f64,
    pub gap: Option<f64>,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterTrace {
    pub variant: AlgorithmVariant,
    pub initial_energy: f64,
    /// One record per accepted step.
    pub records: Vec<IterationRecord>,
    pub final_f: Vec<f64>,
    pub final_energy: f64,
    pub stop_reason: StopReason,
    /// Inner iterations over every outer step, including a final rejected one.
    pub total_inner_iterations: usize,
    /// Steps whose energy did not decrease.
    pub monotonicity_violations: usize,
    pub wall_time_secs: f64,
}

impl OuterTrace {
    pub fn energies(&self) -> Vec<f64> {
        std::iter::once(self.initial_energy).chain(self.records.iter().map(|r| r.energy)).collect()
    }

    pub fn outer_iterations(&self) -> usize {
        self.records.len()
    }
}

fn record(step: &OuterStep, state: &OuterState) -> IterationRecord {
    let h = &step.h;
    IterationRecord {
        k: state.k,
        energy_before: state.energy,
        energy: step.next.energy,
        inner_iterations: step.inner_iterations,
        terminated_by: step.terminated_by,
        h_minus_f: energy::sq_dist(h, &state.f).sqrt(),
        median_h: energy::median(h).unwrap_or(f64::NAN),
        h_norm: h.iter().map(|x| x * x).sum::<f64>().sqrt(),
        f_step: energy::sq_dist(&step.next.f, &state.f).sqrt(),
        gap: step.gap,
        outcome: step.outcome,
    }
}

/// Runs outer iterations from `f0` until the energy changes by less than
/// `tol * E(f^0)`, a critical point is detected, or `max_outer` steps are done.
///
/// Adaptive variants stop at the first step that fails to descend. The
/// non-adaptive variant continues through energy increases and counts them.
pub fn run(g: &Graph, f0: Vec<f64>, variant: AlgorithmVariant, opts: &RunOptions) -> Result<OuterTrace> {
    let start = Instant::now();
    opts.validate()?;
    g.require_connected()?;
    let mut state = OuterState::new(g, f0)?;
    let initial_energy = state.energy;
    let threshold = opts.tol * initial_energy;
    let mut dual = vec![0.0; g.edge_count()];
    let mut records = Vec::new();
    let mut total_inner = 0;
    let mut violations = 0;
    let mut stop_reason = StopReason::MaxOuter;

    while records.len() < opts.max_outer {
        let step = outer_step(g, &state, variant, opts, &mut dual)?;
        total_inner += step.inner_iterations;
        match step.outcome {
            StepOutcome::CriticalPoint => {
                stop_reason = StopReason::CriticalPoint;
                break;
            }
            StepOutcome::NoDescent if variant.is_adaptive() => {
                stop_reason = StopReason::DescentLost;
                break;
            }
            StepOutcome::NoDescent => {
                // the fixed-tolerance scheme keeps going; the rise is recorded
                violations += 1;
                let change = (state.energy - step.next.energy).abs();
                records.push(record(&step, &state));
                state = step.next;
                if change < threshold {
                    stop_reason = StopReason::Stalled;
                    break;
                }
            }
            StepOutcome::Descent => {
                let decrement = state.energy - step.next.energy;
                records.push(record(&step, &state));
                state = step.next;
                if decrement < threshold {
                    stop_reason = StopReason::Converged;
                    break;
                }
            }
        }
    }

    Ok(OuterTrace {
        variant,
        initial_energy,
        records,
        final_energy: state.energy,
        final_f: state.f,
        stop_reason,
        total_inner_iterations: total_inner,
        monotonicity_violations: violations,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Best level set `{i : f_i > t}` over all thresholds between distinct
/// values of `f`, with its balanced-cut value.
///
/// Ties go to the smaller cut, then the smaller side, then the
/// lexicographically smaller sorted subset.
pub fn threshold_to_partition(g: &Graph, f: &[f64]) -> Result<(Partition, f64)> {
    g.check_len(f)?;
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
    let mut in_s = vec![false; n];
    let mut cut = 0.0;
    let mut candidates = Vec::new();
    for t in 1..n {
        let v = order[t - 1];
        for &(u, e) in g.neighbors(v) {
            let w = g.edges()[e].w;
            if in_s[u] {
                cut -= w;
            } else {
                cut += w;
            }
        }
        in_s[v] = true;
        if f[order[t]] < f[v] {
            candidates.push((t, cut / t.min(n - t) as f64));
        }
    }
    if candidates.is_empty() {
        return Err(Error::Degenerate("threshold sweep of a constant function"));
    }
    let best_approx = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let mut best: Option<(Partition, f64, f64, usize, Vec<usize>)> = None;
    for &(t, approx) in &candidates {
        if approx > best_approx * (1.0 + 1e-9) + 1e-300 {
            continue;
        }
        let p = Partition::from_indices(n, &order[..t])?;
        let value = balanced_cut_value(g, &p)?;
        let cut = crate::graph::cut_value(g, &p)?;
        let side = t.min(n - t);
        let idx = p.indices();
        let better = match &best {
            None => true,
            Some((_, bv, bc, bs, bi)) => {
                (value, cut, side).partial_cmp(&(*bv, *bc, *bs)) == Some(std::cmp::Ordering::Less)
                    || ((value, cut, side) == (*bv, *bc, *bs) && idx < *bi)
            }
        };
        if better {
            best = Some((p, value, cut, side, idx));
        }
    }
    let (p, value, ..) = best.expect("at least one candidate");
    Ok((p, value))
}

/// Deterministic seed for a sub-run.
pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
pub struct BisectionOptions {
    pub variant: AlgorithmVariant,
    pub run: RunOptions,
    pub init: InitMethod,
    /// Runs per split; the first uses `init`, later ones random starts.
    pub restarts: usize,
    pub seed: u64,
}

/// Result of the best of several two-way runs on one graph.
#[derive(Debug, Clone)]
pub struct BestSplit {
    pub partition: Partition,
    pub value: f64,
    pub traces: Vec<OuterTrace>,
    pub best_restart: usize,
}

/// Best-of-`restarts` two-way clustering of a connected graph.
pub fn best_bipartition(g: &Graph, opts: &BisectionOptions) -> Result<BestSplit> {
    if opts.restarts == 0 {
        return Err(Error::param("restarts must be positive"));
    }
    let results: Vec<Result<(OuterTrace, Partition, f64)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let method = if r == 0 { opts.init } else { InitMethod::RandomZeroMedian };
            let seed = derive_seed(opts.seed, 0, r as u64);
            let f0 = initialize(g, method, seed)?;
            let trace = run(g, f0, opts.variant, &opts.run)?;
            let (p, value) = threshold_to_partition(g, &trace.final_f)?;
            Ok((trace, p, value))
        })
        .collect();
    let mut traces = Vec::with_capacity(opts.restarts);
    let mut best: Option<(usize, Partition, f64)> = None;
    for (r, res) in results.into_iter().enumerate() {
        let (trace, p, value) = res?;
        traces.push(trace);
        if best.as_ref().is_none_or(|b| value < b.2) {
            best = Some((r, p, value));
        }
    }
    let (best_restart, partition, value) = best.expect("restarts > 0");
    Ok(BestSplit { partition, value, traces, best_restart })
}

struct Candidate {
    value: f64,
    left: Vec<usize>,
    right: Vec<usize>,
    inner_iterations: usize,
}

fn split_cluster(g: &Graph, members: &[usize], opts: &BisectionOptions) -> Result<Option<Candidate>> {
    if members.len() < 2 {
        return Ok(None);
    }
    let sub = g.induced_subgraph(members);
    if !sub.is_connected() {
        let comp = sub.connected_components();
        let (left, right): (Vec<usize>, Vec<usize>) =
            (0..members.len()).partition(|&i| comp[i] == comp[0]);
        return Ok(Some(Candidate {
            value: 0.0,
            left: left.into_iter().map(|i| members[i]).collect(),
            right: right.into_iter().map(|i| members[i]).collect(),
            inner_iterations: 0,
        }));
    }
    let sub_opts = BisectionOptions { seed: derive_seed(opts.seed, members[0] as u64 + 1, members.len() as u64), ..*opts };
    let best = best_bipartition(&sub, &sub_opts)?;
    let (left, right): (Vec<usize>, Vec<usize>) =
        (0..members.len()).partition(|&i| best.partition.contains(i));
    Ok(Some(Candidate {
        value: best.value,
        left: left.into_iter().map(|i| members[i]).collect(),
        right: right.into_iter().map(|i| members[i]).collect(),
        inner_iterations: best.traces.iter().map(|t| t.total_inner_iterations).sum(),
    }))
}

#[derive(Debug, Clone)]
pub struct Clustering {
    /// Cluster ids ordered by smallest member.
    pub labels: Vec<usize>,
    pub split_values: Vec<f64>,
    pub total_inner_iterations: usize,
}

/// Greedy recursive bisection into `k` clusters: at each round the cluster
/// whose best split has the smallest balanced-cut value is divided.
/// Disconnected clusters split along components first, at value 0.
pub fn recursive_bisection(g: &Graph, k: usize, opts: &BisectionOptions) -> Result<Clustering> {
    g.require_connected()?;
    let n = g.n();
    if k < 2 || k > n {
        return Err(Error::param(format!("cluster count {k} must lie in [2, {n}]")));
    }
    let mut clusters: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut candidates: Vec<Option<Candidate>> = vec![split_cluster(g, &clusters[0], opts)?];
    let mut split_values = Vec::new();
    let mut total_inner = 0;
    while clusters.len() < k {
        let pick = candidates
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (i, c.value)))
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, bv)) if bv <= v => best,
                _ => Some((i, v)),
            });
        let (i, _) = pick.ok_or(Error::Invariant("no splittable cluster left".into()))?;
        let cand = candidates[i].take().expect("picked a candidate");
        total_inner += cand.inner_iterations;
        split_values.push(cand.value);
        clusters[i] = cand.left;
        clusters.push(cand.right);
        let new = [i, clusters.len() - 1];
        let fresh: Vec<Result<Option<Candidate>>> =
            new.par_iter().map(|&c| split_cluster(g, &clusters[c], opts)).collect();
        let mut fresh = fresh.into_iter();
        candidates[i] = fresh.next().expect("two entries")?;
        candidates.push(fresh.next().expect("two entries")?);
    }
    clusters.sort_by_key(|c| c.iter().copied().min());
    let mut labels = vec![0; n];
    for (id, c) in clusters.iter().enumerate() {
        for &v in c {
            labels[v] = id;
        }
    }
    Ok(Clustering { labels, split_values, total_inner_iterations: total_inner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::cycle;
    use crate::oracle::brute_force_balanced_cut;

    fn barbell() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        edges.push((4, 5, 1.0));
        Graph::from_edges(10, edges).unwrap()
    }

    fn adaptive() -> AlgorithmVariant {
        AlgorithmVariant::AdaptiveMedian { theta: 0.99 }
    }

    #[test]
    fn initial_functions_are_normalized() {
        let g = barbell();
        for method in [InitMethod::RandomZeroMedian, InitMethod::SpectralSecondEigenvector] {
            let f = initialize(&g, method, 3).unwrap();
            assert_eq!(energy::median(&f).unwrap(), 0.0);
            let norm: f64 = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            assert_eq!(f, initialize(&g, method, 3).unwrap());
        }
    }

    #[test]
    fn spectral_init_on_three_path() {
        let g = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let f = initialize(&g, InitMethod::SpectralSecondEigenvector, 0).unwrap();
        assert!(f[1].abs() < 1e-12);
        assert!((f[0] + f[2]).abs() < 1e-12);
    }

    #[test]
    fn four_cycle_reaches_optimum() {
        let g = cycle(4, 1.0);
        let f0 = initialize(&g, InitMethod::SpectralSecondEigenvector, 0).unwrap();
        let trace = run(&g, f0, adaptive(), &RunOptions::default()).unwrap();
        let (_, value) = threshold_to_partition(&g, &trace.final_f).unwrap();
        assert_eq!(value, 1.0);
    }

    #[test]
    fn barbell_separates_the_cliques() {
        let g = barbell();
        for variant in [adaptive(), AlgorithmVariant::AdaptiveMedianFree { theta: 0.99 }] {
            let f0 = initialize(&g, InitMethod::SpectralSecondEigenvector, 0).unwrap();
            let trace = run(&g, f0, variant, &RunOptions::default()).unwrap();
            let (s, value) = threshold_to_partition(&g, &trace.final_f).unwrap();
            assert_eq!(value, 0.2);
            let idx = s.indices();
            assert!(idx == vec![0, 1, 2, 3, 4] || idx == vec![5, 6, 7, 8, 9]);
            let e = trace.energies();
            assert!(e.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn converged_indicator_is_critical() {
        // the optimal indicator, centered and normalized
        let g = barbell();
        let f: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 / 5f64.sqrt() } else { 0.0 }).collect();
        let state = OuterState::new(&g, f).unwrap();
        assert!((state.energy - 0.4).abs() < 1e-15);
        let mut dual = vec![0.0; g.edge_count()];
        let step = outer_step(&g, &state, adaptive(), &RunOptions::default(), &mut dual).unwrap();
        assert_eq!(step.outcome, StepOutcome::CriticalPoint);
        assert_eq!(step.next.f, state.f);
    }

    #[test]
    fn threshold_sweep_returns_indicator_sets() {
        let g = barbell();
        let mut f = vec![0.0; 10];
        f[..5].iter_mut().for_each(|x| *x = 1.0);
        let (s, value) = threshold_to_partition(&g, &f).unwrap();
        assert_eq!(s.indices(), vec![0, 1, 2, 3, 4]);
        assert_eq!(value, 0.2);
        assert!(threshold_to_partition(&g, &[1.0; 10]).is_err());
    }

    #[test]
    fn threshold_ties_prefer_lexicographic() {
        // on the 4-cycle, f = (2, 1, 0, 1) sweeps {0}, {0,1,3}; both have cut 2
        let g = cycle(4, 1.0);
        let (s, value) = threshold_to_partition(&g, &[2.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(value, 2.0);
        assert_eq!(s.indices(), vec![0]);
    }

    #[test]
    fn bisection_base_and_full_split() {
        let g = barbell();
        let opts = BisectionOptions {
            variant: adaptive(),
            run: RunOptions::default(),
            init: InitMethod::SpectralSecondEigenvector,
            restarts: 2,
            seed: 1,
        };
        let c = recursive_bisection(&g, 2, &opts).unwrap();
        assert_eq!(c.labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let all = recursive_bisection(&g, 10, &opts).unwrap();
        let mut sorted = all.labels.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_eq!(brute_force_balanced_cut(&g).unwrap().1, c.split_values[0]);
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let g = cycle(3, 1.0).disjoint_union(&cycle(3, 1.0));
        assert!(matches!(initialize(&g, InitMethod::RandomZeroMedian, 0), Err(Error::Disconnected)));
    }
}
