//! Experiment harness: dataset preparation, single runs, seeded trial
//! batches comparing an adaptive variant with the fixed-tolerance baseline,
//! and report output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balanced_cut::{
    best_bipartition, derive_seed, recursive_bisection, AlgorithmVariant, BisectionOptions, InitMethod,
    OuterTrace, RunOptions, StopReason,
};
use crate::datasets::{self, PointCloud};
use crate::error::{Error, Result};
use crate::graph::{self, build_knn_graph, Graph};

pub const SCHEMA_VERSION: u32 = 1;

/// Candidate tolerances for the fixed-tolerance baseline, loosest first.
pub const EPS_GRID: [f64; 6] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];

/// Relative slack when matching final energies.
pub const ENERGY_MATCH: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    TwoMoons { n: usize, noise_sd: f64, dim: usize },
    Blobs { n_per: usize, centers: usize, dim: usize, sd: f64 },
    Points { path: PathBuf, labels: Option<PathBuf> },
    /// One or more IDX image/label pairs, concatenated.
    Idx { images: Vec<PathBuf>, labels: Vec<PathBuf> },
    LabeledCsv { path: PathBuf },
    Graph { path: PathBuf, labels: Option<PathBuf> },
}

impl DatasetSpec {
    pub fn is_synthetic(&self) -> bool {
        matches!(self, DatasetSpec::TwoMoons { .. } | DatasetSpec::Blobs { .. })
    }

    pub fn label(&self) -> String {
        match self {
            DatasetSpec::TwoMoons { .. } => "2 moons".into(),
            DatasetSpec::Blobs { centers, .. } => format!("blobs ({centers})"),
            DatasetSpec::Points { path, .. }
            | DatasetSpec::LabeledCsv { path }
            | DatasetSpec::Graph { path, .. } => path.display().to_string(),
            DatasetSpec::Idx { images, .. } => {
                images.first().map_or_else(|| "idx".into(), |p| p.display().to_string())
            }
        }
    }

    /// Generates or loads the points; `None` for graph files.
    pub fn point_cloud(&self, seed: u64) -> Result<Option<PointCloud>> {
        Ok(Some(match self {
            DatasetSpec::TwoMoons { n, noise_sd, dim } => datasets::two_moons_in(*n, *dim, *noise_sd, seed)?,
            DatasetSpec::Blobs { n_per, centers, dim, sd } => datasets::blobs(*n_per, *centers, *dim, *sd, seed)?,
            DatasetSpec::Points { path, labels } => {
                let mut pc = datasets::read_points_csv(path)?;
                if let Some(l) = labels {
                    pc = PointCloud::new(pc.points, Some(datasets::read_labels_csv(l)?))?;
                }
                pc
            }
            DatasetSpec::Idx { images, labels } => {
                if images.is_empty() || images.len() != labels.len() {
                    return Err(Error::param("IDX inputs need matching image and label files"));
                }
                let parts = images
                    .iter()
                    .zip(labels)
                    .map(|(i, l)| datasets::load_idx(i, l))
                    .collect::<Result<Vec<_>>>()?;
                datasets::concat(parts)?
            }
            DatasetSpec::LabeledCsv { path } => datasets::read_labeled_csv(path)?,
            DatasetSpec::Graph { .. } => return Ok(None),
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub k: usize,
    pub pca: Option<usize>,
    pub variant: AlgorithmVariant,
    pub run: RunOptions,
    pub init: InitMethod,
    pub classes: usize,
    pub restarts: usize,
    pub seed: u64,
    pub trials: usize,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(dataset: DatasetSpec, variant: AlgorithmVariant) -> Self {
        Self {
            dataset,
            k: 5,
            pca: None,
            variant,
            run: RunOptions::default(),
            init: InitMethod::SpectralSecondEigenvector,
            classes: 2,
            restarts: 1,
            seed: 0,
            trials: 1,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        match self.variant {
            AlgorithmVariant::NonAdaptive { eps } if !(eps > 0.0 && eps.is_finite()) => {
                return Err(Error::param("the fixed variant needs a positive eps"));
            }
            AlgorithmVariant::AdaptiveMedian { theta } | AlgorithmVariant::AdaptiveMedianFree { theta }
                if !(theta > 0.0 && theta < 1.0) =>
            {
                return Err(Error::param(format!("theta = {theta} must lie strictly between 0 and 1")));
            }
            _ => {}
        }
        if self.k == 0 {
            return Err(Error::param("k must be positive"));
        }
        if self.classes < 2 {
            return Err(Error::param("classes must be at least 2"));
        }
        if self.restarts == 0 || self.trials == 0 || self.jobs == 0 {
            return Err(Error::param("restarts, trials and jobs must be positive"));
        }
        if self.pca == Some(0) {
            return Err(Error::param("pca must be positive"));
        }
        Ok(())
    }
}

/// A prepared graph with optional ground truth.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub labels: Option<Vec<usize>>,
    pub sigma2: Option<f64>,
    pub build_secs: f64,
}

/// Loads or generates trial `trial`'s data and builds its graph.
pub fn prepare_instance(config: &RunConfig, trial: usize) -> Result<Instance> {
    let start = Instant::now();
    let data_seed = derive_seed(config.seed, 1, trial as u64);
    if let DatasetSpec::Graph { path, labels } = &config.dataset {
        let graph = graph::read_graph(path)?;
        let labels = labels.as_deref().map(datasets::read_labels_csv).transpose()?;
        if let Some(l) = &labels {
            if l.len() != graph.n() {
                return Err(Error::DimensionMismatch { expected: graph.n(), got: l.len() });
            }
        }
        return Ok(Instance { graph, labels, sigma2: None, build_secs: start.elapsed().as_secs_f64() });
    }
    let mut pc = config.dataset.point_cloud(data_seed)?.expect("point data");
    if let Some(c) = config.pca {
        pc = datasets::pca_project(&pc, c)?;
    }
    let knn = build_knn_graph(&pc.points, config.k)?;
    Ok(Instance {
        graph: knn.graph,
        labels: pc.labels,
        sigma2: Some(knn.sigma2),
        build_secs: start.elapsed().as_secs_f64(),
    })
}

/// Percentage of points whose cluster's majority true label differs from
/// their own. Majority ties go to the smaller label.
pub fn score_error(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: pred.len() });
    }
    if pred.is_empty() {
        return Err(Error::Empty);
    }
    let clusters = pred.iter().max().map_or(0, |m| m + 1);
    let classes = truth.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; classes]; clusters];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1;
    }
    let correct: usize = counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(100.0 * (pred.len() - correct) as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub edges: usize,
    pub error_pct: Option<f64>,
    pub build_secs: f64,
    pub solve_secs: f64,
    pub outer_iterations: usize,
    pub total_inner_iterations: usize,
    /// Two-way runs only: final energy and balanced cut of the best restart.
    pub final_energy: Option<f64>,
    pub balanced_cut: Option<f64>,
    pub stop_reason: Option<StopReason>,
    pub monotonicity_violations: usize,
    pub energies: Vec<f64>,
    #[serde(skip)]
    pub labels: Vec<usize>,
    #[serde(skip)]
    pub trace: Option<OuterTrace>,
}

/// Clusters one prepared instance.
pub fn cluster_instance(
    inst: &Instance,
    config: &RunConfig,
    variant: AlgorithmVariant,
    trial: usize,
) -> Result<TrialResult> {
    let start = Instant::now();
    let seed = derive_seed(config.seed, 2, trial as u64);
    let opts = BisectionOptions { variant, run: config.run, init: config.init, restarts: config.restarts, seed };
    let g = &inst.graph;
    g.require_connected()?;
    let mut result = TrialResult {
        trial,
        seed,
        n: g.n(),
        edges: g.edge_count(),
        error_pct: None,
        build_secs: inst.build_secs,
        solve_secs: 0.0,
        outer_iterations: 0,
        total_inner_iterations: 0,
        final_energy: None,
        balanced_cut: None,
        stop_reason: None,
        monotonicity_violations: 0,
        energies: Vec::new(),
        labels: Vec::new(),
        trace: None,
    };
    if config.classes == 2 {
        let best = best_bipartition(g, &opts)?;
        let trace = best.traces[best.best_restart].clone();
        result.outer_iterations = best.traces.iter().map(|t| t.outer_iterations()).sum();
        result.total_inner_iterations = best.traces.iter().map(|t| t.total_inner_iterations).sum();
        result.monotonicity_violations = best.traces.iter().map(|t| t.monotonicity_violations).sum();
        result.final_energy = Some(trace.final_energy);
        result.balanced_cut = Some(best.value);
        result.stop_reason = Some(trace.stop_reason);
        result.energies = trace.energies();
        result.labels = best.partition.labels();
        result.trace = Some(trace);
    } else {
        let c = recursive_bisection(g, config.classes, &opts)?;
        result.total_inner_iterations = c.total_inner_iterations;
        result.labels = c.labels;
    }
    result.solve_secs = start.elapsed().as_secs_f64();
    if let Some(truth) = &inst.labels {
        result.error_pct = Some(score_error(&result.labels, truth)?);
    }
    Ok(result)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub mean_error_pct: Option<f64>,
    pub mean_solve_secs: f64,
    pub mean_build_secs: f64,
    pub mean_outer_iterations: f64,
    pub mean_inner_iterations: f64,
    pub mean_final_energy: Option<f64>,
    pub monotonicity_violations: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c.max(1) as f64
}

impl Aggregate {
    pub fn from_trials(trials: &[TrialResult]) -> Self {
        let all = |f: fn(&TrialResult) -> Option<f64>| -> Option<f64> {
            trials.iter().map(f).collect::<Option<Vec<f64>>>().map(|v| mean(v.into_iter()))
        };
        Self {
            trials: trials.len(),
            mean_error_pct: all(|t| t.error_pct),
            mean_solve_secs: mean(trials.iter().map(|t| t.solve_secs)),
            mean_build_secs: mean(trials.iter().map(|t| t.build_secs)),
            mean_outer_iterations: mean(trials.iter().map(|t| t.outer_iterations as f64)),
            mean_inner_iterations: mean(trials.iter().map(|t| t.total_inner_iterations as f64)),
            mean_final_energy: all(|t| t.final_energy),
            monotonicity_violations: trials.iter().map(|t| t.monotonicity_violations).sum(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub variant: AlgorithmVariant,
    pub trials: Vec<TrialResult>,
    pub aggregate: Aggregate,
}

impl VariantReport {
    fn new(variant: AlgorithmVariant, trials: Vec<TrialResult>) -> Self {
        let aggregate = Aggregate::from_trials(&trials);
        Self { name: variant.name().into(), variant, trials, aggregate }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsCandidate {
    pub eps: f64,
    pub mean_final_energy: f64,
    pub mean_inner_iterations: f64,
    /// Mean final energy within the match slack of the adaptive run's.
    pub matched: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub dataset: String,
    pub config: RunConfig,
    pub variants: Vec<VariantReport>,
    /// Baseline tolerances tried when no eps was given.
    pub eps_tuning: Vec<EpsCandidate>,
    /// Adaptive over baseline mean inner iterations, when both ran.
    pub inner_iteration_ratio: Option<f64>,
}

impl BenchReport {
    fn new(config: &RunConfig, variants: Vec<VariantReport>, eps_tuning: Vec<EpsCandidate>) -> Self {
        let inner_iteration_ratio = match variants.as_slice() {
            [a, b] => Some(a.aggregate.mean_inner_iterations / b.aggregate.mean_inner_iterations),
            _ => None,
        };
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            dataset: config.dataset.label(),
            config: config.clone(),
            variants,
            eps_tuning,
            inner_iteration_ratio,
        }
    }

    /// Plain-text comparison table, one column group per variant.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let mut head = format!("{:<16}", "");
        let mut sub = format!("{:<16}", "");
        let mut row = format!("{:<16}", self.dataset);
        for v in &self.variants {
            let title = match v.variant {
                AlgorithmVariant::NonAdaptive { eps } => format!("{} (eps {eps:e})", v.name),
                AlgorithmVariant::AdaptiveMedian { theta } | AlgorithmVariant::AdaptiveMedianFree { theta } => {
                    format!("{} (theta {theta})", v.name)
                }
            };
            let _ = write!(head, "| {title:<38}");
            let _ = write!(sub, "| {:>9} {:>11} {:>16} ", "Error (%)", "Time", "Inner iters");
            let a = &v.aggregate;
            let err = a.mean_error_pct.map_or_else(|| "-".into(), |e| format!("{e:.2}"));
            let _ = write!(row, "| {:>9} {:>11} {:>16.1} ", err, format_secs(a.mean_solve_secs), a.mean_inner_iterations);
        }
        let _ = writeln!(out, "{head}\n{sub}\n{row}");
        if let Some(r) = self.inner_iteration_ratio {
            let _ = writeln!(out, "inner iteration ratio {r:.3}");
        }
        out
    }

    /// One line per outer iteration of every two-way trial.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("variant,trial,k,energy,inner_iterations,terminated_by,h_minus_f,median_h,outcome\n");
        for v in &self.variants {
            for t in &v.trials {
                let Some(trace) = &t.trace else { continue };
                for r in &trace.records {
                    let _ = writeln!(
                        out,
                        "{},{},{},{:?},{},{},{:?},{:?},{}",
                        v.name,
                        t.trial,
                        r.k,
                        r.energy,
                        r.inner_iterations,
                        serde_json::to_value(r.terminated_by).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default(),
                        r.h_minus_f,
                        r.median_h,
                        serde_json::to_value(r.outcome).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default(),
                    );
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn format_secs(s: f64) -> String {
    if s >= 60.0 {
        format!("{:.2} min", s / 60.0)
    } else {
        format!("{s:.2} sec")
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))
}

/// One trial of the configured variant.
pub fn cmd_cluster(config: &RunConfig) -> Result<(BenchReport, Vec<usize>)> {
    config.validate()?;
    let inst = prepare_instance(config, 0)?;
    let trial = pool(config.jobs)?.install(|| cluster_instance(&inst, config, config.variant, 0))?;
    let labels = trial.labels.clone();
    Ok((BenchReport::new(config, vec![VariantReport::new(config.variant, vec![trial])], Vec::new()), labels))
}

fn run_trials(
    instances: &[Instance],
    config: &RunConfig,
    variant: AlgorithmVariant,
) -> Result<Vec<TrialResult>> {
    instances
        .par_iter()
        .enumerate()
        .map(|(t, inst)| cluster_instance(inst, config, variant, t))
        .collect()
}

/// Runs `config.trials` seeded trials of the adaptive variant and of the
/// fixed-tolerance baseline on the same graphs and starting points.
///
/// Without `baseline_eps`, the baseline tolerance is the loosest value of
/// [`EPS_GRID`] whose mean final energy is within 0.5% of the adaptive one
/// (the tightest value if none is).
pub fn cmd_bench(config: &RunConfig, baseline_eps: Option<f64>) -> Result<BenchReport> {
    config.validate()?;
    if !config.variant.is_adaptive() {
        return Err(Error::param("bench compares an adaptive variant against the fixed baseline"));
    }
    pool(config.jobs)?.install(|| {
        let instances: Vec<Instance> =
            (0..config.trials).into_par_iter().map(|t| prepare_instance(config, t)).collect::<Result<_>>()?;
        let adaptive = run_trials(&instances, config, config.variant)?;
        let adaptive = VariantReport::new(config.variant, adaptive);
        let mut tuning = Vec::new();
        let baseline = match baseline_eps {
            Some(eps) => VariantReport::new(AlgorithmVariant::NonAdaptive { eps }, run_trials(&instances, config, AlgorithmVariant::NonAdaptive { eps })?),
            None => {
                let target = adaptive.aggregate.mean_final_energy;
                let mut chosen = None;
                for eps in EPS_GRID {
                    let v = AlgorithmVariant::NonAdaptive { eps };
                    let report = VariantReport::new(v, run_trials(&instances, config, v)?);
                    let energy = report.aggregate.mean_final_energy;
                    let matched = matches!((energy, target), (Some(e), Some(t)) if e <= t * (1.0 + ENERGY_MATCH));
                    tuning.push(EpsCandidate {
                        eps,
                        mean_final_energy: energy.unwrap_or(f64::NAN),
                        mean_inner_iterations: report.aggregate.mean_inner_iterations,
                        matched,
                    });
                    chosen = Some(report);
                    if matched {
                        break;
                    }
                }
                chosen.expect("nonempty grid")
            }
        };
        Ok(BenchReport::new(config, vec![adaptive, baseline], tuning))
    })
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 2);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
