//! Iterative solvers for the graph ROF problem
//!
//! ```text
//! min_u ||u||_TV + (lambda / 2) ||u - g||^2
//! ```
//!
//! written with the weights folded into the dual box:
//! `||u||_TV = max_{|p_e| <= 2 w_e} <grad u, p>`. Two solvers are provided.
//! [`SolverKind::PrimalDual`] is the over-relaxed primal-dual scheme;
//! its state is a (primal, dual, extrapolated) triple.
//! [`SolverKind::ForwardBackwardDual`] is projected gradient on the dual,
//! whose next state depends on the current dual state only.
//!
//! Iterates are numbered from `m = 1`, with `Phi^1` the warm start; stopping
//! rules are first evaluated at `m = 2`.

use crate::energy::{self, median_free_gap_with};
use crate::error::{Error, Result};
use crate::graph::{divergence_into, EdgeFunction, Graph};

#[derive(Debug, Clone, Copy)]
pub struct RofProblem<'a> {
    pub graph: &'a Graph,
    pub lambda: f64,
    pub g: &'a [f64],
    pub warm_start: &'a [f64],
}

impl<'a> RofProblem<'a> {
    pub fn new(graph: &'a Graph, lambda: f64, g: &'a [f64], warm_start: &'a [f64]) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param(format!("lambda = {lambda} must be positive and finite")));
        }
        graph.check_len(g)?;
        graph.check_len(warm_start)?;
        Ok(Self { graph, lambda, g, warm_start })
    }

    /// Primal objective `||u||_TV + (lambda / 2) ||u - g||^2`.
    pub fn objective(&self, u: &[f64]) -> f64 {
        energy::tv_unchecked(self.graph, u) + 0.5 * self.lambda * energy::sq_dist(u, self.g)
    }

    /// Primal point associated with a dual state: `g + div(p) / lambda`.
    pub fn primal_from_dual(&self, p: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.graph.n()];
        divergence_into(self.graph, p, &mut u);
        for (ui, gi) in u.iter_mut().zip(self.g) {
            *ui = gi + *ui / self.lambda;
        }
        u
    }

    /// Dual objective `(lambda / 2) ||g + div(p) / lambda||^2`, minimized over the box.
    pub fn dual_objective(&self, p: &[f64]) -> f64 {
        let u = self.primal_from_dual(p);
        0.5 * self.lambda * u.iter().map(|x| x * x).sum::<f64>()
    }

    fn clamp_dual(&self, p: &mut [f64]) {
        for (pe, e) in p.iter_mut().zip(self.graph.edges()) {
            *pe = pe.clamp(-2.0 * e.w, 2.0 * e.w);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    PrimalDual,
    ForwardBackwardDual,
}

/// When an inner solve may stop.
#[derive(Debug, Clone, Copy)]
pub enum StoppingRule<'a> {
    /// `||Phi^m - Phi^{m-1}||_2 <= eps`.
    FixedTolerance { eps: f64 },
    /// `E(f_k) > E(h) + theta E(f_k) ||h - f_k||^2 / ||h - med(h) 1||_1`.
    AdaptiveMedian { theta: f64, f_k: &'a [f64], energy_fk: f64 },
    /// `||f_k||_TV > ||h||_TV + theta E(f_k) ||h - f_k||^2 - E(f_k) <v_k, h - f_k>`.
    AdaptiveMedianFree { theta: f64, f_k: &'a [f64], v_k: &'a [f64], energy_fk: f64, tv_fk: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct StoppingPolicy<'a> {
    pub rule: StoppingRule<'a>,
    /// Iteration cap; the returned iterate index never exceeds it.
    pub m_max: usize,
    /// Evaluate the rule every `stride` iterations (and always at the cap).
    pub stride: usize,
}

pub const DEFAULT_M_MAX: usize = 1500;

impl<'a> StoppingPolicy<'a> {
    pub fn new(rule: StoppingRule<'a>, m_max: usize) -> Self {
        Self { rule, m_max, stride: 1 }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m_max < 2 {
            return Err(Error::param(format!("iteration cap {} must be at least 2", self.m_max)));
        }
        if self.stride == 0 {
            return Err(Error::param("stride must be positive"));
        }
        let check_theta = |theta: f64| {
            if theta > 0.0 && theta < 1.0 {
                Ok(())
            } else {
                Err(Error::param(format!("theta = {theta} must lie strictly between 0 and 1")))
            }
        };
        match self.rule {
            StoppingRule::FixedTolerance { eps } => {
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(Error::param(format!("eps = {eps} must be positive")));
                }
            }
            StoppingRule::AdaptiveMedian { theta, f_k, energy_fk } => {
                check_theta(theta)?;
                if f_k.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: f_k.len() });
                }
                if !(energy_fk > 0.0 && energy_fk.is_finite()) {
                    return Err(Error::param("energy of the current iterate must be positive"));
                }
            }
            StoppingRule::AdaptiveMedianFree { theta, f_k, v_k, energy_fk, .. } => {
                check_theta(theta)?;
                for len in [f_k.len(), v_k.len()] {
                    if len != n {
                        return Err(Error::DimensionMismatch { expected: n, got: len });
                    }
                }
                if !(energy_fk > 0.0 && energy_fk.is_finite()) {
                    return Err(Error::param("energy of the current iterate must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    AdaptiveConditionMet,
    FixedToleranceMet,
    CapReached,
}

#[derive(Debug, Clone)]
pub struct RofSolution {
    pub h: Vec<f64>,
    /// Index `M` of the returned iterate `Phi^M` (the warm start is `Phi^1`).
    pub iterations_used: usize,
    pub terminated_by: Termination,
    /// `||Phi^M - Phi^{M-1}||_2`.
    pub final_residual: f64,
    /// Value of the adaptive test at the last evaluation, if any.
    pub gap: Option<f64>,
}

/// Default step sizes: `tau = sigma = 1 / sqrt(L)` for the primal-dual
/// scheme, `lambda / L` for the dual projected gradient, with `L` the bound of
/// [`Graph::gradient_norm_bound`].
pub fn default_steps(problem: &RofProblem) -> (f64, f64) {
    let l = problem.graph.gradient_norm_bound();
    (1.0 / l.sqrt(), 1.0 / l.sqrt())
}

/// Primal-dual steps `tau = ratio / sqrt(L)`, `sigma = 1 / (ratio sqrt(L))`;
/// `tau sigma L = 1` for every ratio.
pub fn balanced_steps(problem: &RofProblem, ratio: f64) -> (f64, f64) {
    let root = problem.graph.gradient_norm_bound().sqrt();
    (ratio / root, 1.0 / (ratio * root))
}

pub fn default_dual_step(problem: &RofProblem) -> f64 {
    problem.lambda / problem.graph.gradient_norm_bound()
}

/// One projected-gradient step on the dual problem.
pub fn forward_backward_dual_step(problem: &RofProblem, dual: &[f64], step: f64) -> EdgeFunction {
    let u = problem.primal_from_dual(dual);
    let mut p = dual.to_vec();
    fb_update(problem, &u, &mut p, step);
    p
}

fn fb_update(problem: &RofProblem, u: &[f64], p: &mut [f64], step: f64) {
    for (pe, e) in p.iter_mut().zip(problem.graph.edges()) {
        let bound = 2.0 * e.w;
        *pe = (*pe + step * (u[e.j] - u[e.i])).clamp(-bound, bound);
    }
}

/// One over-relaxed primal-dual iteration; returns `(primal, dual, extrapolated)`.
pub fn primal_dual_step(
    problem: &RofProblem,
    primal: &[f64],
    dual: &[f64],
    extrapolated: &[f64],
    tau: f64,
    sigma: f64,
) -> (Vec<f64>, EdgeFunction, Vec<f64>) {
    let mut x = primal.to_vec();
    let mut p = dual.to_vec();
    let mut xbar = extrapolated.to_vec();
    let mut div = vec![0.0; x.len()];
    pd_update(problem, &mut x, &mut p, &mut xbar, &mut div, tau, sigma);
    (x, p, xbar)
}

/// In-place primal-dual update; returns `||x_new - x_old||^2`.
fn pd_update(
    problem: &RofProblem,
    x: &mut [f64],
    p: &mut [f64],
    xbar: &mut [f64],
    div: &mut [f64],
    tau: f64,
    sigma: f64,
) -> f64 {
    // dual ascent and divergence in one pass over the edges
    div.iter_mut().for_each(|d| *d = 0.0);
    for (pe, e) in p.iter_mut().zip(problem.graph.edges()) {
        let bound = 2.0 * e.w;
        *pe = (*pe + sigma * (xbar[e.j] - xbar[e.i])).clamp(-bound, bound);
        div[e.i] += *pe;
        div[e.j] -= *pe;
    }
    let tl = tau * problem.lambda;
    let scale = 1.0 / (1.0 + tl);
    let mut step2 = 0.0;
    for v in 0..x.len() {
        let xn = (x[v] + tau * div[v] + tl * problem.g[v]) * scale;
        let d = xn - x[v];
        step2 += d * d;
        xbar[v] = xn + d;
        x[v] = xn;
    }
    step2
}

/// Persistent iteration state of one of the solvers.
enum Engine {
    PrimalDual { x: Vec<f64>, xbar: Vec<f64>, div: Vec<f64>, tau: f64, sigma: f64 },
    ForwardBackward { u: Vec<f64>, div: Vec<f64>, step: f64 },
}

impl Engine {
    fn new(problem: &RofProblem, kind: SolverKind, dual: &[f64], ratio: f64) -> Self {
        let n = problem.graph.n();
        match kind {
            SolverKind::PrimalDual => {
                let (tau, sigma) = balanced_steps(problem, ratio);
                Engine::PrimalDual {
                    x: problem.warm_start.to_vec(),
                    xbar: problem.warm_start.to_vec(),
                    div: vec![0.0; n],
                    tau,
                    sigma,
                }
            }
            SolverKind::ForwardBackwardDual => Engine::ForwardBackward {
                u: problem.primal_from_dual(dual),
                div: vec![0.0; n],
                step: default_dual_step(problem),
            },
        }
    }

    /// Advances one iteration; returns the new primal iterate and its
    /// squared distance from the previous one.
    fn advance(&mut self, problem: &RofProblem, p: &mut [f64]) -> (&[f64], f64) {
        match self {
            Engine::PrimalDual { x, xbar, div, tau, sigma } => {
                let step2 = pd_update(problem, x, p, xbar, div, *tau, *sigma);
                (x, step2)
            }
            Engine::ForwardBackward { u, div, step } => {
                fb_update(problem, u, p, *step);
                divergence_into(problem.graph, p, div);
                let mut step2 = 0.0;
                for ((ui, gi), di) in u.iter_mut().zip(problem.g).zip(div.iter()) {
                    let next = gi + di / problem.lambda;
                    step2 += (next - *ui) * (next - *ui);
                    *ui = next;
                }
                (u, step2)
            }
        }
    }
}

/// Scratch space for evaluating the median-based rule.
struct MedianScratch {
    sorted: Vec<f64>,
    candidate: Vec<f64>,
}

/// `(h - med(h)) / ||h - med(h)||_2`, or `None` for constant `h`.
pub(crate) fn center_and_normalize(h: &[f64]) -> Option<Vec<f64>> {
    let mut buf = h.to_vec();
    let med = energy::median_in_place(&mut buf);
    let mut out: Vec<f64> = h.iter().map(|x| x - med).collect();
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    out.iter_mut().for_each(|x| *x /= norm);
    Some(out)
}

/// Median-based descent test. The energy of `h` is evaluated on the
/// centered, normalized candidate, which is exactly the next outer iterate,
/// so a positive gap certifies strict descent of the recorded energy.
fn median_gap(
    graph: &Graph,
    h: &[f64],
    f_k: &[f64],
    theta: f64,
    energy_fk: f64,
    scratch: &mut MedianScratch,
) -> Option<f64> {
    scratch.sorted.clear();
    scratch.sorted.extend_from_slice(h);
    let med = energy::median_in_place(&mut scratch.sorted);
    let dev = energy::l1_deviation(h, med);
    if dev == 0.0 {
        return None;
    }
    scratch.candidate.clear();
    scratch.candidate.extend(h.iter().map(|x| x - med));
    let norm = scratch.candidate.iter().map(|x| x * x).sum::<f64>().sqrt();
    scratch.candidate.iter_mut().for_each(|x| *x /= norm);
    let e_h = energy::balance_energy(graph, &scratch.candidate).ok()?;
    Some(energy::gap_from_parts(energy_fk, e_h, theta, energy::sq_dist(h, f_k), dev))
}

/// Solves from a zero dual state.
pub fn solve_rof(
    problem: &RofProblem,
    solver: SolverKind,
    policy: &StoppingPolicy,
) -> Result<RofSolution> {
    let mut dual = vec![0.0; problem.graph.edge_count()];
    solve_rof_with_dual(problem, solver, policy, &mut dual)
}

/// Solves starting from (and updating) a persistent dual state.
pub fn solve_rof_with_dual(
    problem: &RofProblem,
    solver: SolverKind,
    policy: &StoppingPolicy,
    dual: &mut EdgeFunction,
) -> Result<RofSolution> {
    solve_rof_with_steps(problem, solver, policy, dual, 1.0)
}

/// As [`solve_rof_with_dual`], with primal-dual steps from [`balanced_steps`].
pub fn solve_rof_with_steps(
    problem: &RofProblem,
    solver: SolverKind,
    policy: &StoppingPolicy,
    dual: &mut EdgeFunction,
    pd_ratio: f64,
) -> Result<RofSolution> {
    if !(pd_ratio > 0.0 && pd_ratio.is_finite()) {
        return Err(Error::param(format!("step ratio {pd_ratio} must be positive")));
    }
    let graph = problem.graph;
    graph.require_connected()?;
    policy.validate(graph.n())?;
    if dual.len() != graph.edge_count() {
        return Err(Error::DimensionMismatch { expected: graph.edge_count(), got: dual.len() });
    }
    problem.clamp_dual(dual);

    let mut engine = Engine::new(problem, solver, dual, pd_ratio);
    let mut scratch = MedianScratch { sorted: Vec::new(), candidate: Vec::new() };
    let mut gap = None;

    for m in 2..=policy.m_max {
        let (current, step2) = engine.advance(problem, dual);
        // the forward-backward state does not start at the warm start
        let step = if m == 2 { energy::sq_dist(current, problem.warm_start) } else { step2 }.sqrt();
        if !step.is_finite() {
            return Err(Error::NonFinite { iteration: m });
        }
        let check = (m - 2) % policy.stride == 0 || m == policy.m_max;
        let met = check
            && match policy.rule {
                StoppingRule::FixedTolerance { eps } => step <= eps,
                StoppingRule::AdaptiveMedian { theta, f_k, energy_fk } => {
                    gap = median_gap(graph, current, f_k, theta, energy_fk, &mut scratch);
                    gap.is_some_and(|v| v > 0.0)
                }
                StoppingRule::AdaptiveMedianFree { theta, f_k, v_k, energy_fk, tv_fk } => {
                    let v = median_free_gap_with(graph, f_k, v_k, current, theta, energy_fk, tv_fk);
                    gap = Some(v);
                    v > 0.0
                }
            };
        if met || m == policy.m_max {
            let terminated_by = if !met {
                Termination::CapReached
            } else if matches!(policy.rule, StoppingRule::FixedTolerance { .. }) {
                Termination::FixedToleranceMet
            } else {
                Termination::AdaptiveConditionMet
            };
            return Ok(RofSolution {
                h: current.to_vec(),
                iterations_used: m,
                terminated_by,
                final_residual: step,
                gap,
            });
        }
    }
    unreachable!("m_max >= 2 guarantees at least one iteration")
}

/// Distance of `lambda (g - h)` from the TV subdifferential at `h`.
///
/// Edges whose gradient at `h` exceeds a small tolerance in magnitude carry
/// the fixed certificate value `2 w_e sign(grad h)`; the remaining edges are
/// free in `[-2 w_e, 2 w_e]`. The best free values are found by accelerated
/// projected gradient on the resulting box-constrained least squares, and the
/// norm of the remaining mismatch is returned. Zero exactly at the minimizer.
pub fn rof_optimality_residual(problem: &RofProblem, h: &[f64]) -> f64 {
    rof_optimality_residual_with_hint(problem, h, None)
}

pub(crate) fn rof_optimality_residual_with_hint(
    problem: &RofProblem,
    h: &[f64],
    hint: Option<&[f64]>,
) -> f64 {
    let graph = problem.graph;
    let edges = graph.edges();
    let n = graph.n();
    let scale = h.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let flat_tol = 1e-9 * scale;

    // target: G^T q = b with b = lambda (g - h) and G^T q = -div q
    let b: Vec<f64> = problem.g.iter().zip(h).map(|(gi, hi)| problem.lambda * (gi - hi)).collect();
    let mut free = vec![false; edges.len()];
    let mut q = vec![0.0; edges.len()];
    for (idx, e) in edges.iter().enumerate() {
        let d = h[e.j] - h[e.i];
        if d.abs() > flat_tol {
            q[idx] = 2.0 * e.w * d.signum();
        } else {
            free[idx] = true;
            q[idx] = hint.map_or(0.0, |p| p[idx].clamp(-2.0 * e.w, 2.0 * e.w));
        }
    }

    let mut div = vec![0.0; n];
    let residual = |q: &[f64], div: &mut Vec<f64>, r: &mut Vec<f64>| {
        divergence_into(graph, q, div);
        for v in 0..n {
            r[v] = -div[v] - b[v];
        }
        r.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    let mut r = vec![0.0; n];
    let mut best = residual(&q, &mut div, &mut r);
    if !free.iter().any(|&f| f) {
        return best;
    }

    let step = 1.0 / graph.gradient_norm_bound();
    let target = 1e-15 * (1.0 + b.iter().map(|x| x * x).sum::<f64>().sqrt());
    let mut y = q.clone();
    let mut q_prev = q.clone();
    let mut t = 1.0f64;
    let mut last = best;
    let max_iter = 20_000 + 200 * n;
    for _ in 0..max_iter {
        if best <= target {
            break;
        }
        // gradient of 0.5 ||G^T y - b||^2 is G r(y)
        residual(&y, &mut div, &mut r);
        let mut moved = 0.0f64;
        for (idx, e) in edges.iter().enumerate() {
            if !free[idx] {
                continue;
            }
            let bound = 2.0 * e.w;
            let next = (y[idx] - step * (r[e.j] - r[e.i])).clamp(-bound, bound);
            moved = moved.max((next - q[idx]).abs());
            q_prev[idx] = q[idx];
            q[idx] = next;
        }
        let value = residual(&q, &mut div, &mut r);
        best = best.min(value);
        if moved <= 1e-17 * scale {
            break;
        }
        let restart = value > last;
        last = value;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let beta = if restart { 0.0 } else { (t - 1.0) / t_next };
        for idx in 0..q.len() {
            y[idx] = if free[idx] { q[idx] + beta * (q[idx] - q_prev[idx]) } else { q[idx] };
        }
        t = t_next;
    }
    best
}
