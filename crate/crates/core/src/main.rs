use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tvcut::balanced_cut::{AlgorithmVariant, InitMethod, RunOptions};
use tvcut::bench::{self, BenchReport, DatasetSpec, RunConfig};
use tvcut::datasets;
use tvcut::rof::{SolverKind, DEFAULT_M_MAX};
use tvcut::verify::{self, VerifyOptions};
use tvcut::{Error, Result};

#[derive(Parser)]
#[command(name = "tvcut", version, about = "Balanced graph cuts by total-variation minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster one dataset and write the report, labels and energy trace.
    Cluster(RunArgs),
    /// Compare an adaptive variant with the fixed-tolerance baseline over
    /// seeded trials.
    Bench(RunArgs),
    /// Write a synthetic dataset as CSV points plus labels.
    GenData(GenArgs),
    /// Run the self-check suite and print a pass/fail matrix.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    TwoMoons,
    Blobs,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Algo {
    Fixed,
    AdaptiveMedian,
    AdaptiveMedianFree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Spectral,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    PrimalDual,
    ForwardBackward,
}

#[derive(Args)]
struct DataArgs {
    /// Weighted graph as an edge list or Matrix Market file.
    #[arg(long, group = "source")]
    graph: Option<PathBuf>,
    /// Points as headerless CSV rows.
    #[arg(long, group = "source")]
    points: Option<PathBuf>,
    /// Ground-truth labels for --points or --graph, one per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Synthetic data generator.
    #[arg(long = "gen", group = "source", value_enum)]
    generator: Option<Generator>,
    /// IDX image file; repeat with --idx-labels to concatenate several sets.
    #[arg(long, group = "source")]
    idx_images: Vec<PathBuf>,
    #[arg(long)]
    idx_labels: Vec<PathBuf>,
    /// CSV with the label first on each row (USPS layout).
    #[arg(long, group = "source")]
    labeled_csv: Option<PathBuf>,
    #[command(flatten)]
    synth: SynthArgs,
    /// Neighbors per point in the k-NN graph.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Project points onto this many principal components first.
    #[arg(long)]
    pca: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Points in the two-moons set.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Ambient dimension (default 100 for two-moons, 5 for blobs).
    #[arg(long)]
    dim: Option<usize>,
    /// Noise standard deviation for two-moons.
    #[arg(long, default_value_t = 0.02f64.sqrt())]
    noise_sd: f64,
    /// Points per blob.
    #[arg(long, default_value_t = 1000)]
    n_per: usize,
    #[arg(long, default_value_t = 2)]
    centers: usize,
    /// Standard deviation of each blob.
    #[arg(long, default_value_t = 4.0)]
    blob_sd: f64,
}

impl SynthArgs {
    fn spec(&self, generator: Generator) -> DatasetSpec {
        match generator {
            Generator::TwoMoons => {
                DatasetSpec::TwoMoons { n: self.n, noise_sd: self.noise_sd, dim: self.dim.unwrap_or(100) }
            }
            Generator::Blobs => DatasetSpec::Blobs {
                n_per: self.n_per,
                centers: self.centers,
                dim: self.dim.unwrap_or(5),
                sd: self.blob_sd,
            },
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "adaptive-median-free")]
    algo: Algo,
    #[arg(long, default_value_t = 0.99)]
    theta: f64,
    /// Inner tolerance of the fixed variant; for bench, fixes the baseline
    /// tolerance instead of tuning it.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_M_MAX)]
    max_inner: usize,
    /// Outer stopping threshold relative to the initial energy.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 300)]
    max_outer: usize,
    #[arg(long, value_enum, default_value = "spectral")]
    init: Init,
    #[arg(long, value_enum, default_value = "primal-dual")]
    solver: Solver,
    /// Number of clusters, reached by recursive bisection.
    #[arg(long, default_value_t = 2)]
    classes: usize,
    /// Two-way runs per split; later runs start from random points.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Seeded trials (default 1 for cluster, 10 for bench).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory for report.json, trace.csv and labels.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long = "gen", value_enum)]
    generator: Generator,
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: the data directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Debug override of theta in every adaptive check.
    #[arg(long)]
    inject_theta: Option<f64>,
    /// Random graphs in the monotonicity check.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn require_file(path: &Path) -> Result<PathBuf> {
    let resolved = datasets::resolve_path(path);
    if resolved.is_file() {
        Ok(resolved)
    } else {
        Err(Error::InvalidParameter(format!("{}: no such file", path.display())))
    }
}

fn dataset(args: &DataArgs) -> Result<DatasetSpec> {
    let labels = args.labels.as_deref().map(require_file).transpose()?;
    if let Some(path) = &args.graph {
        return Ok(DatasetSpec::Graph { path: require_file(path)?, labels });
    }
    if let Some(path) = &args.points {
        return Ok(DatasetSpec::Points { path: require_file(path)?, labels });
    }
    if let Some(path) = &args.labeled_csv {
        return Ok(DatasetSpec::LabeledCsv { path: require_file(path)? });
    }
    if !args.idx_images.is_empty() {
        if args.idx_images.len() != args.idx_labels.len() {
            return Err(Error::InvalidParameter("give one --idx-labels per --idx-images".into()));
        }
        let images = args.idx_images.iter().map(|p| require_file(p)).collect::<Result<_>>()?;
        let labels = args.idx_labels.iter().map(|p| require_file(p)).collect::<Result<_>>()?;
        return Ok(DatasetSpec::Idx { images, labels });
    }
    match args.generator {
        Some(g) => Ok(args.synth.spec(g)),
        None => Err(Error::InvalidParameter(
            "no dataset: use --graph, --points, --gen, --idx-images or --labeled-csv".into(),
        )),
    }
}

fn run_config(args: &RunArgs, default_trials: usize) -> Result<RunConfig> {
    let variant = match args.algo {
        Algo::Fixed => AlgorithmVariant::NonAdaptive { eps: args.eps.unwrap_or(1e-4) },
        Algo::AdaptiveMedian => AlgorithmVariant::AdaptiveMedian { theta: args.theta },
        Algo::AdaptiveMedianFree => AlgorithmVariant::AdaptiveMedianFree { theta: args.theta },
    };
    let mut config = RunConfig::new(dataset(&args.data)?, variant);
    config.k = args.data.k;
    config.pca = args.data.pca;
    config.run = RunOptions {
        solver: match args.solver {
            Solver::PrimalDual => SolverKind::PrimalDual,
            Solver::ForwardBackward => SolverKind::ForwardBackwardDual,
        },
        m_max: args.max_inner,
        tol: args.tol,
        max_outer: args.max_outer,
        ..RunOptions::default()
    };
    config.init = match args.init {
        Init::Spectral => InitMethod::SpectralSecondEigenvector,
        Init::Random => InitMethod::RandomZeroMedian,
    };
    config.classes = args.classes;
    config.restarts = args.restarts;
    config.trials = args.trials.unwrap_or(default_trials);
    config.seed = args.seed;
    config.jobs = args.jobs;
    config.validate()?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn write_report(out: &Path, report: &BenchReport, labels: Option<&[usize]>) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io { path: out.to_path_buf(), source: e })?;
    write_file(&out.join("report.json"), &report.to_json())?;
    write_file(&out.join("trace.csv"), &report.trace_csv())?;
    if let Some(labels) = labels {
        bench::write_labels(&out.join("labels.csv"), labels)?;
    }
    Ok(())
}

fn cluster(args: &RunArgs) -> Result<()> {
    let config = run_config(args, 1)?;
    let (report, labels) = bench::cmd_cluster(&config)?;
    print!("{}", report.table());
    let trial = &report.variants[0].trials[0];
    if let (Some(energy), Some(cut), Some(stop)) = (trial.final_energy, trial.balanced_cut, trial.stop_reason) {
        println!("final energy {energy:.6}, balanced cut {cut:.6}, stop: {stop:?}");
    }
    println!(
        "{} outer / {} inner iterations, energy increases: {}",
        trial.outer_iterations, trial.total_inner_iterations, trial.monotonicity_violations
    );
    if let Some(out) = &args.out {
        write_report(out, &report, Some(&labels))?;
    }
    Ok(())
}

fn bench_cmd(args: &RunArgs) -> Result<()> {
    if args.algo == Algo::Fixed {
        return Err(Error::InvalidParameter("bench needs an adaptive --algo; the fixed baseline is added".into()));
    }
    let config = run_config(args, 10)?;
    let report = bench::cmd_bench(&config, args.eps)?;
    print!("{}", report.table());
    for c in &report.eps_tuning {
        println!(
            "eps {:e}: mean final energy {:.6}, mean inner iterations {:.1}{}",
            c.eps,
            c.mean_final_energy,
            c.mean_inner_iterations,
            if c.matched { " (matched)" } else { "" }
        );
    }
    if let Some(out) = &args.out {
        write_report(out, &report, None)?;
    }
    Ok(())
}

fn gen_data(args: &GenArgs) -> Result<()> {
    let spec = args.synth.spec(args.generator);
    let cloud = spec.point_cloud(args.seed)?.ok_or(Error::EmptyDataset)?;
    let dir = args.out.clone().unwrap_or_else(datasets::data_dir);
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    let stem = match args.generator {
        Generator::TwoMoons => "two-moons",
        Generator::Blobs => "blobs",
    };
    let points = dir.join(format!("{stem}.csv"));
    datasets::write_points_csv(&cloud, &points)?;
    let labels = dir.join(format!("{stem}-labels.csv"));
    if let Some(l) = &cloud.labels {
        bench::write_labels(&labels, l)?;
    }
    println!("wrote {} points to {} and labels to {}", cloud.len(), points.display(), labels.display());
    Ok(())
}

fn verify_cmd(args: &VerifyArgs) -> Result<bool> {
    let opts = VerifyOptions {
        seed: args.seed,
        theta: args.inject_theta.unwrap_or(verify::DEFAULT_THETA),
        monotonicity_trials: args.trials,
    };
    let report = verify::run_all(&opts);
    print!("{}", report.matrix());
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(out, &json)?;
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cluster(a) => cluster(a).map(|_| true),
        Command::Bench(a) => bench_cmd(a).map(|_| true),
        Command::GenData(a) => gen_data(a).map(|_| true),
        Command::Verify(a) => verify_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
