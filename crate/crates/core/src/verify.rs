//! Self-check suite behind `tvcut verify`: monotonicity, the energy
//! inequality, ROF correctness, the indicator/cut correspondence and oracle
//! quality, each on seeded random instances.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::balanced_cut::{
    self, AlgorithmVariant, BisectionOptions, InitMethod, OuterState, RunOptions, StepOutcome,
};
use crate::energy::{self, zero_mean_subgradient};
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, divergence, gradient, Graph};
use crate::oracle;
use crate::rof::{self, RofProblem, SolverKind, StoppingPolicy, StoppingRule, Termination};

/// Adaptive steps use this `theta` unless overridden.
pub const DEFAULT_THETA: f64 = 0.99;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Replaces `theta` in every adaptive check. Values outside `(0, 1]` are
    /// meant to make the suite fail.
    pub theta: f64,
    /// Random k-NN graphs in the monotonicity check.
    pub monotonicity_trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, theta: DEFAULT_THETA, monotonicity_trials: 100 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub secs: f64,
}

impl CheckResult {
    fn from_outcome(name: &'static str, start: Instant, outcome: Result<(bool, String)>) -> Self {
        let (passed, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        Self { name, passed, detail, secs: start.elapsed().as_secs_f64() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub theta: f64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per check.
    pub fn matrix(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{status}  {:<22} {:>8.2}s  {}", c.name, c.secs, c.detail);
        }
        out
    }
}

/// Runs every check.
pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    let checks = vec![
        check_monotonicity(opts),
        check_energy_inequality(opts),
        check_rof_correctness(opts),
        check_relaxation(opts),
        check_oracle_quality(opts),
    ];
    VerifyReport { seed: opts.seed, theta: opts.theta, checks }
}

fn rng_for(seed: u64, check: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(balanced_cut::derive_seed(seed, 100 + check, trial))
}

/// Connected graph on `n` vertices: a random spanning tree plus each other
/// pair with probability `density`. Weights are uniform in `[0.1, 1]`.
pub fn random_connected_graph<R: Rng>(n: usize, density: f64, rng: &mut R) -> Result<Graph> {
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    let mut add = |a: usize, b: usize, w: f64, edges: &mut Vec<(usize, usize, f64)>| {
        let (i, j) = (a.min(b), a.max(b));
        if !present[i * n + j] {
            present[i * n + j] = true;
            edges.push((i, j, w));
        }
    };
    for t in 1..n {
        let parent = order[rng.random_range(0..t)];
        let w = rng.random_range(0.1..=1.0);
        add(order[t], parent, w, &mut edges);
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                let w = rng.random_range(0.1..=1.0);
                add(i, j, w, &mut edges);
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// As [`random_connected_graph`] with weights rounded up to multiples of
/// 1/64. Cut values and energies of indicators are then exact in floating
/// point, so both sides of `E(1_S) = 2 C(S)` can be compared bit for bit.
pub fn random_dyadic_graph<R: Rng>(n: usize, density: f64, rng: &mut R) -> Result<Graph> {
    let g = random_connected_graph(n, density, rng)?;
    Graph::from_edges(n, g.edges().iter().map(|e| (e.i, e.j, (e.w * 64.0).ceil() / 64.0)))
}

/// Connected k-NN graph of `n` points drawn from two or three Gaussian
/// clusters in 2 to 5 dimensions, `k` in `[5, 10]`. Redraws until connected.
pub fn random_knn_graph<R: Rng>(n: usize, rng: &mut R) -> Result<Graph> {
    if n < 12 {
        return Err(Error::TooFewPoints(n));
    }
    loop {
        let dim = rng.random_range(2..=5);
        let clusters = rng.random_range(2..=3);
        let k = rng.random_range(5..=10);
        let spread = Normal::new(0.0, 1.0).map_err(|e| Error::param(e.to_string()))?;
        let centers: Vec<Vec<f64>> =
            (0..clusters).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let points: Vec<Vec<f64>> = (0..n)
            .map(|i| centers[i % clusters].iter().map(|c| c + spread.sample(rng)).collect())
            .collect();
        let g = build_knn_graph(&points, k)?.graph;
        if g.is_connected() {
            return Ok(g);
        }
    }
}

/// Unit-norm, zero-median random vector.
fn random_iterate<R: Rng>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let raw: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    rof::center_and_normalize(&raw).ok_or(Error::Degenerate("constant random vector"))
}

/// Every accepted outer step of both adaptive variants lowers the energy.
pub fn check_monotonicity(opts: &VerifyOptions) -> CheckResult {
    let start = Instant::now();
    let outcome = (|| {
        let per_trial: Vec<Result<(usize, usize, usize)>> = (0..opts.monotonicity_trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(opts.seed, 1, t as u64);
                let n = rng.random_range(50..=500);
                let g = random_knn_graph(n, &mut rng)?;
                let init = if t % 2 == 0 { InitMethod::RandomZeroMedian } else { InitMethod::SpectralSecondEigenvector };
                let init_seed = rng.random();
                let mut steps = 0;
                let mut violations = 0;
                for variant in [
                    AlgorithmVariant::AdaptiveMedian { theta: opts.theta },
                    AlgorithmVariant::AdaptiveMedianFree { theta: opts.theta },
                ] {
                    let f0 = balanced_cut::initialize(&g, init, init_seed)?;
                    let trace = balanced_cut::run(&g, f0, variant, &RunOptions::default())?;
                    let e = trace.energies();
                    steps += e.len() - 1;
                    violations += e.windows(2).filter(|w| !(w[1] < w[0])).count();
                }
                Ok((n, steps, violations))
            })
            .collect();
        let mut steps = 0;
        let mut violations = 0;
        for r in per_trial {
            let (_, s, v) = r?;
            steps += s;
            violations += v;
        }
        Ok((
            violations == 0,
            format!("{} graphs x 2 variants, {steps} outer steps, {violations} violations", opts.monotonicity_trials),
        ))
    })();
    CheckResult::from_outcome("monotonicity", start, outcome)
}

/// Fired adaptive stops satisfy their test, and exact proximal steps satisfy
/// the `theta = 1` inequality up to `1e-9`.
pub fn check_energy_inequality(opts: &VerifyOptions) -> CheckResult {
    const INSTANCES: usize = 50;
    const EXACT_TOL: f64 = 1e-9;
    let start = Instant::now();
    let outcome = (|| {
        let mut fired = 0;
        let mut recorded_bad = 0;
        let mut worst_exact = f64::INFINITY;
        let mut unconverged = 0;
        for t in 0..INSTANCES {
            let mut rng = rng_for(opts.seed, 2, t as u64);
            let n = rng.random_range(5..=50);
            let g = random_connected_graph(n, rng.random_range(0.05..0.5), &mut rng)?;
            let f = random_iterate(n, &mut rng)?;
            let state = OuterState::new(&g, f.clone())?;
            let v = zero_mean_subgradient(&f)?;

            // the exact proximal step
            let shifted: Vec<f64> = f.iter().zip(v.values()).map(|(a, b)| a + b).collect();
            let problem = RofProblem::new(&g, state.energy, &shifted, &f)?;
            let exact = oracle::high_accuracy_rof(&problem)?;
            unconverged += usize::from(!exact.converged);
            if exact.h != f {
                worst_exact = worst_exact.min(energy::energy_inequality_gap(&g, &f, &exact.h, 1.0)?);
                worst_exact = worst_exact.min(energy::median_free_gap(&g, &f, &v, &exact.h, 1.0)?);
            }

            // a few adaptive outer steps of each variant from the same start
            for variant in [
                AlgorithmVariant::AdaptiveMedian { theta: opts.theta },
                AlgorithmVariant::AdaptiveMedianFree { theta: opts.theta },
            ] {
                let mut state = state.clone();
                let mut dual = vec![0.0; g.edge_count()];
                for _ in 0..5 {
                    let step = balanced_cut::outer_step(&g, &state, variant, &RunOptions::default(), &mut dual)?;
                    if step.terminated_by == Termination::AdaptiveConditionMet {
                        fired += 1;
                        let recorded = step.gap.is_some_and(|x| x > 0.0);
                        let recomputed = match variant {
                            AlgorithmVariant::AdaptiveMedianFree { theta } => {
                                energy::median_free_gap(&g, &state.f, &step.v, &step.h, theta)?
                            }
                            _ => energy::energy_inequality_gap(&g, &state.f, &step.h, opts.theta)?,
                        };
                        if !recorded || recomputed < -1e-12 * state.energy {
                            recorded_bad += 1;
                        }
                    }
                    if step.outcome != StepOutcome::Descent {
                        break;
                    }
                    state = step.next;
                }
            }
        }
        let passed = recorded_bad == 0 && worst_exact >= -EXACT_TOL && unconverged == 0;
        Ok((
            passed,
            format!(
                "{fired} fired stops, {recorded_bad} failing; exact steps min gap {worst_exact:.2e} \
                 (tolerance -{EXACT_TOL:e}), {unconverged} reference solves unconverged"
            ),
        ))
    })();
    CheckResult::from_outcome("energy-inequality", start, outcome)
}

fn solve_tight(problem: &RofProblem, solver: SolverKind, m_max: usize) -> Result<Vec<f64>> {
    let policy = StoppingPolicy::new(StoppingRule::FixedTolerance { eps: 1e-15 }, m_max);
    Ok(rof::solve_rof(problem, solver, &policy)?.h)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Two-vertex closed form, cross-solver agreement and adjointness.
pub fn check_rof_correctness(opts: &VerifyOptions) -> CheckResult {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = rng_for(opts.seed, 3, 0);
        let mut two_node = 0.0f64;
        for _ in 0..1000 {
            let w = rng.random_range(0.1..5.0);
            let lambda = rng.random_range(0.1..10.0);
            let g_vals = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let graph = Graph::from_edges(2, [(0, 1, w)])?;
            let problem = RofProblem::new(&graph, lambda, &g_vals, &g_vals)?;
            let (a, b) = oracle::rof_two_node_closed_form(w, lambda, g_vals[0], g_vals[1]);
            for solver in [SolverKind::PrimalDual, SolverKind::ForwardBackwardDual] {
                let h = solve_tight(&problem, solver, 20_000)?;
                two_node = two_node.max(max_abs_diff(&h, &[a, b]));
            }
        }

        let mut cross = 0.0f64;
        let mut adjoint = 0.0f64;
        for t in 0..50 {
            let mut rng = rng_for(opts.seed, 3, 1 + t);
            let graph = random_connected_graph(20, rng.random_range(0.1..0.5), &mut rng)?;
            let g_vals: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
            let lambda = rng.random_range(0.2..5.0);
            let problem = RofProblem::new(&graph, lambda, &g_vals, &g_vals)?;
            let pd = solve_tight(&problem, SolverKind::PrimalDual, 400_000)?;
            let fb = solve_tight(&problem, SolverKind::ForwardBackwardDual, 400_000)?;
            cross = cross.max(max_abs_diff(&pd, &fb));

            let f: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
            let p: Vec<f64> = (0..graph.edge_count()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let lhs: f64 = gradient(&graph, &f)?.iter().zip(&p).map(|(a, b)| a * b).sum();
            let rhs: f64 = -divergence(&graph, &p)?.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            adjoint = adjoint.max((lhs - rhs).abs() / scale);
        }
        let passed = two_node <= 1e-10 && cross <= 1e-7 && adjoint <= 1e-12;
        Ok((
            passed,
            format!("two-node max err {two_node:.1e}, cross-solver max diff {cross:.1e}, adjointness {adjoint:.1e}"),
        ))
    })();
    CheckResult::from_outcome("rof-correctness", start, outcome)
}

/// `E(1_S) = 2 C(S)` over all subsets, and the minimum matches brute force.
pub fn check_relaxation(opts: &VerifyOptions) -> CheckResult {
    let start = Instant::now();
    let outcome = (|| {
        let mut worst = 0.0f64;
        let mut mismatched = 0;
        for t in 0..50 {
            let mut rng = rng_for(opts.seed, 4, t);
            let n = rng.random_range(3..=10);
            let g = random_dyadic_graph(n, rng.random_range(0.1..0.6), &mut rng)?;
            let report = oracle::check_relaxation_equivalence(&g)?;
            worst = worst.max(report.max_deviation);
            mismatched += usize::from(!report.minimum_matches());
        }
        Ok((worst <= 1e-12 && mismatched == 0, format!("50 graphs, max |E - 2C| {worst:.1e}, {mismatched} minimum mismatches")))
    })();
    CheckResult::from_outcome("relaxation-equivalence", start, outcome)
}

/// Best-of-10 adaptive runs find the exhaustive optimum on at least 80% of
/// small graphs and never claim a value below it.
pub fn check_oracle_quality(opts: &VerifyOptions) -> CheckResult {
    const GRAPHS: usize = 50;
    let start = Instant::now();
    let outcome = (|| {
        let mut hits = 0;
        let mut below = 0;
        for t in 0..GRAPHS {
            let mut rng = rng_for(opts.seed, 5, t as u64);
            let n = rng.random_range(6..=12);
            let g = random_connected_graph(n, rng.random_range(0.1..0.5), &mut rng)?;
            let (_, optimum) = oracle::brute_force_balanced_cut(&g)?;
            let bis = BisectionOptions {
                variant: AlgorithmVariant::AdaptiveMedianFree { theta: opts.theta },
                run: RunOptions::default(),
                init: InitMethod::SpectralSecondEigenvector,
                restarts: 10,
                seed: rng.random(),
            };
            let best = balanced_cut::best_bipartition(&g, &bis)?;
            let rel = (best.value - optimum) / optimum;
            if rel.abs() <= 1e-12 {
                hits += 1;
            } else if rel < 0.0 {
                below += 1;
            }
        }
        let passed = hits * 5 >= GRAPHS * 4 && below == 0;
        Ok((passed, format!("optimum on {hits}/{GRAPHS} graphs, {below} below the optimum")))
    })();
    CheckResult::from_outcome("oracle-quality", start, outcome)
}
