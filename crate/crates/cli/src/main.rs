use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sbmtest::io::{self, BallSummary, RunManifest};
use sbmtest::{
    assess_exogenous, co_clustering, compare_exogenous, credible_ball, harmonic_mean_trajectory,
    misclassification_error, plug_in_theta, run_chain, run_chains, simulate_sbm, standard_scenario, vi_distance,
    vi_point_estimate_with, BlockStats, ChainTrace, InitPartition, ModelConfig, Network, Partition,
    PointEstimateSearch, SamplerSettings, SbmSpec,
};

#[derive(Parser)]
#[command(
    name = "sbmtest",
    version,
    about = "Bayes-factor tests of exogenous node partitions in binary networks"
)]
struct Cli {
    /// Worker threads for parallel steps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a network from a planted-partition block model.
    Simulate(SimulateArgs),
    /// Run the collapsed Gibbs sampler and write the chain.
    Sample(SampleArgs),
    /// Bayes-factor test of one or more exogenous partitions.
    Test(TestArgs),
    /// Point estimate, credible ball, co-clustering and diagnostics of a chain.
    Summarize(SummarizeArgs),
    /// Plug-in block probabilities and misclassification error for a partition.
    Predict(PredictArgs),
    /// Variation of information (bits) between two partitions.
    Vi(ViArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Beta prior first shape parameter.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Beta prior second shape parameter.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// CRP concentration.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

impl ModelArgs {
    fn config(&self) -> Result<ModelConfig> {
        Ok(ModelConfig::new(self.a, self.b, self.alpha)?)
    }

    fn record(&self, m: &mut RunManifest) {
        m.param("a", self.a).param("b", self.b).param("alpha", self.alpha);
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NetworkFormat {
    /// n x n comma-separated 0/1 matrix.
    Dense,
    /// One 1-based `u,v` pair per line; requires --nodes.
    Edge,
}

#[derive(Args)]
struct NetworkArgs {
    /// Network file.
    #[arg(long)]
    network: PathBuf,
    #[arg(long, value_enum, default_value_t = NetworkFormat::Dense)]
    format: NetworkFormat,
    /// Node count for edge-list input.
    #[arg(long)]
    nodes: Option<usize>,
}

impl NetworkArgs {
    fn load(&self, m: &mut RunManifest) -> Result<Network> {
        let net = match self.format {
            NetworkFormat::Dense => io::read_network_csv(&self.network)?,
            NetworkFormat::Edge => {
                let n = self.nodes.context("--format edge requires --nodes")?;
                io::read_edge_list(&self.network, n)?
            }
        };
        m.inputs.insert("network".into(), self.network.display().to_string());
        let format = match self.format {
            NetworkFormat::Dense => "dense",
            NetworkFormat::Edge => "edge",
        };
        m.param("network_format", format);
        Ok(net)
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Three groups of 20 nodes, within 0.8, between 0.2, plus the four
    /// comparison partitions z0..z3.
    #[arg(long = "paper-scenario")]
    standard_scenario: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    groups: usize,
    #[arg(long, default_value_t = 20)]
    group_size: usize,
    #[arg(long, default_value_t = 0.8)]
    within: f64,
    #[arg(long, default_value_t = 0.2)]
    between: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Singletons,
    SingleCluster,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Total sweeps, burn-in included.
    #[arg(long, default_value_t = 15_000)]
    samples: usize,
    #[arg(long, default_value_t = 2_000)]
    burnin: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Independent chains; chain i is written to `<stem>.<i>.csv`.
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Singletons)]
    init: InitArg,
    /// Start from a partition file instead of --init.
    #[arg(long, conflicts_with = "init")]
    init_file: Option<PathBuf>,
    /// Chain output file.
    #[arg(long, default_value = "chain.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Chain written by `sample`.
    #[arg(long, required_unless_present = "exo_vs_exo")]
    chain: Option<PathBuf>,
    /// Exogenous partition files.
    #[arg(long, required = true, num_args = 1..)]
    exogenous: Vec<PathBuf>,
    /// Natural-log prior odds of the endogenous over the exogenous model.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    prior_log_odds: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Refine the point estimate with single-node moves.
    #[arg(long)]
    refine: bool,
    /// Compare two exogenous partitions in closed form; no chain needed.
    #[arg(long)]
    exo_vs_exo: bool,
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    chain: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    refine: bool,
    /// Network to audit the stored log-likelihoods against.
    #[arg(long)]
    network: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Partition to estimate block probabilities for.
    #[arg(long)]
    zhat: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ViArgs {
    first: PathBuf,
    second: PathBuf,
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn load_partition(path: &Path, key: &str, m: &mut RunManifest) -> Result<Partition> {
    let loaded = io::read_partition(path)?;
    m.inputs.insert(key.to_string(), path.display().to_string());
    m.label_maps.insert(key.to_string(), loaded.label_map);
    Ok(loaded.partition)
}

fn partition_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn emit(m: &mut RunManifest, path: &Path, contents: &str) -> Result<()> {
    io::write_text(path, contents)?;
    m.outputs.push(path.display().to_string());
    Ok(())
}

fn finish(mut m: RunManifest, path: &Path, start: Instant) -> Result<()> {
    m.duration_seconds = start.elapsed().as_secs_f64();
    m.write(path)?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    create_dir(&args.out_dir)?;
    let mut m = RunManifest::new("simulate");
    m.param("seed", args.seed)
        .param("paper_scenario", args.standard_scenario);
    let net_path = args.out_dir.join("network.csv");
    if args.standard_scenario {
        let s = standard_scenario(args.seed)?;
        emit(&mut m, &net_path, &io::network_to_csv(&s.network))?;
        for (name, z) in s.exogenous() {
            emit(
                &mut m,
                &args.out_dir.join(format!("{name}.csv")),
                &io::partition_to_text(z),
            )?;
        }
    } else {
        m.param("groups", args.groups)
            .param("group_size", args.group_size)
            .param("within", args.within)
            .param("between", args.between);
        let spec = SbmSpec::planted(args.groups, args.group_size, args.within, args.between, args.seed)?;
        let net = simulate_sbm(&spec)?;
        emit(&mut m, &net_path, &io::network_to_csv(&net))?;
        emit(&mut m, &args.out_dir.join("z0.csv"), &io::partition_to_text(&spec.z0))?;
    }
    finish(m, &args.out_dir.join("manifest.json"), start)
}

fn chain_path(out: &Path, index: usize, chains: usize) -> PathBuf {
    if chains == 1 {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}.{}.{ext}", index + 1))
}

fn sample(args: &SampleArgs) -> Result<()> {
    let start = Instant::now();
    ensure!(args.chains > 0, "--chains must be positive");
    let mut m = RunManifest::new("sample");
    let net = args.network.load(&mut m)?;
    let cfg = args.model.config()?;
    args.model.record(&mut m);
    let init = match (&args.init_file, args.init) {
        (Some(path), _) => InitPartition::Given(load_partition(path, "init", &mut m)?),
        (None, InitArg::Singletons) => InitPartition::Singletons,
        (None, InitArg::SingleCluster) => InitPartition::SingleCluster,
    };
    let init_name = match &init {
        InitPartition::Singletons => "singletons",
        InitPartition::SingleCluster => "single-cluster",
        InitPartition::Given(_) => "file",
    };
    m.param("samples", args.samples)
        .param("burnin", args.burnin)
        .param("thin", args.thin)
        .param("seed", args.seed)
        .param("chains", args.chains)
        .param("init", init_name);
    let settings = SamplerSettings {
        total_samples: args.samples,
        burn_in: args.burnin,
        thin: args.thin,
        seed: args.seed,
        init,
    };
    let traces = if args.chains == 1 {
        vec![run_chain(&net, &cfg, &settings)?]
    } else {
        run_chains(&net, &cfg, &settings, args.chains)?
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    for (i, trace) in traces.iter().enumerate() {
        emit(&mut m, &chain_path(&args.out, i, args.chains), &io::chain_to_csv(trace))?;
    }
    finish(m, &manifest_path(&args.out), start)
}

fn load_checked_chain(path: &Path, net: &Network, cfg: &ModelConfig, m: &mut RunManifest) -> Result<ChainTrace> {
    let trace = io::read_chain(path)?;
    m.inputs.insert("chain".into(), path.display().to_string());
    if trace.node_count() != Some(net.n()) {
        bail!(
            "chain {} has {} nodes but the network has {}",
            path.display(),
            trace.node_count().unwrap_or(0),
            net.n()
        );
    }
    trace
        .audit(net, cfg)
        .with_context(|| format!("chain {} does not match the network", path.display()))?;
    Ok(trace)
}

fn search(refine: bool) -> PointEstimateSearch {
    if refine {
        PointEstimateSearch::Greedy
    } else {
        PointEstimateSearch::Sampled
    }
}

fn test(args: &TestArgs) -> Result<()> {
    let start = Instant::now();
    let mut m = RunManifest::new("test");
    let net = args.network.load(&mut m)?;
    let cfg = args.model.config()?;
    args.model.record(&mut m);
    m.param("prior_log_odds", args.prior_log_odds)
        .param("delta", args.delta)
        .param("refine", args.refine)
        .param("exo_vs_exo", args.exo_vs_exo);
    let mut candidates = Vec::with_capacity(args.exogenous.len());
    for path in &args.exogenous {
        let name = partition_name(path);
        let z = load_partition(path, &name, &mut m)?;
        ensure!(
            z.len() == net.n(),
            "{} has {} nodes but the network has {}",
            path.display(),
            z.len(),
            net.n()
        );
        candidates.push((name, z));
    }

    let contents = if args.exo_vs_exo {
        ensure!(
            candidates.len() == 2,
            "--exo-vs-exo takes exactly two --exogenous files"
        );
        let c = compare_exogenous(&net, &candidates[0].1, &candidates[1].1, &cfg)?;
        println!(
            "2 log BF({} vs {}) = {:.4} ({})",
            candidates[0].0, candidates[1].0, c.two_log_bf, c.category
        );
        io::comparison_to_csv(&candidates[0].0, &candidates[1].0, &c)
    } else {
        let chain = args.chain.as_deref().context("--chain is required")?;
        let trace = load_checked_chain(chain, &net, &cfg, &mut m)?;
        let center = vi_point_estimate_with(&trace, search(args.refine))?.partition;
        let ball = credible_ball(&trace, &center, args.delta)?;
        let rows = assess_exogenous(&net, &trace, &ball, &candidates, &cfg, args.prior_log_odds)?;
        for row in &rows {
            println!(
                "{}: 2 log BF = {:.4} ({}), VI to estimate = {:.4}, in ball = {}",
                row.name, row.evidence.two_log_bf, row.evidence.category, row.vi_to_estimate, row.in_credible_ball
            );
        }
        io::report_to_csv(&rows)
    };
    emit(&mut m, &args.out, &contents)?;
    finish(m, &manifest_path(&args.out), start)
}

fn summarize(args: &SummarizeArgs) -> Result<()> {
    let start = Instant::now();
    let mut m = RunManifest::new("summarize");
    m.param("delta", args.delta).param("refine", args.refine);
    let trace = match &args.network {
        Some(path) => {
            let net = io::read_network_csv(path)?;
            m.inputs.insert("network".into(), path.display().to_string());
            args.model.record(&mut m);
            load_checked_chain(&args.chain, &net, &args.model.config()?, &mut m)?
        }
        None => {
            m.inputs.insert("chain".into(), args.chain.display().to_string());
            io::read_chain(&args.chain)?
        }
    };
    ensure!(!trace.is_empty(), "chain {} has no samples", args.chain.display());
    create_dir(&args.out_dir)?;

    let estimate = vi_point_estimate_with(&trace, search(args.refine))?;
    let ball = credible_ball(&trace, &estimate.partition, args.delta)?;
    let summary = BallSummary::new(&ball, estimate.expected_vi, trace.len());
    let dir = &args.out_dir;
    emit(
        &mut m,
        &dir.join("zhat.csv"),
        &io::partition_to_text(&estimate.partition),
    )?;
    emit(
        &mut m,
        &dir.join("ball.json"),
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    emit(
        &mut m,
        &dir.join("coclust.csv"),
        &io::co_clustering_to_csv(&co_clustering(&trace)?),
    )?;
    emit(&mut m, &dir.join("diag_loglik.csv"), &io::loglik_trace_to_csv(&trace))?;
    emit(
        &mut m,
        &dir.join("diag_harmonic.csv"),
        &io::harmonic_trajectory_to_csv(&harmonic_mean_trajectory(&trace)),
    )?;
    println!(
        "point estimate: {} groups, expected VI {:.4}; credible ball radius {:.4} holds {}/{} samples",
        estimate.partition.num_groups(),
        estimate.expected_vi,
        ball.threshold,
        ball.member_indices.len(),
        trace.len()
    );
    finish(m, &dir.join("summary.manifest.json"), start)
}

fn predict(args: &PredictArgs) -> Result<()> {
    let start = Instant::now();
    let mut m = RunManifest::new("predict");
    let net = args.network.load(&mut m)?;
    let cfg = args.model.config()?;
    args.model.record(&mut m);
    let z = load_partition(&args.zhat, "zhat", &mut m)?;
    ensure!(
        z.len() == net.n(),
        "{} has {} nodes but the network has {}",
        args.zhat.display(),
        z.len(),
        net.n()
    );
    let stats = BlockStats::compute(&net, &z)?;
    let theta = plug_in_theta(&stats, &cfg);
    let error = misclassification_error(&net, &z, &theta)?;
    create_dir(&args.out_dir)?;
    emit(&mut m, &args.out_dir.join("theta.csv"), &io::theta_to_csv(&theta))?;
    emit(
        &mut m,
        &args.out_dir.join("misclassification.txt"),
        &format!("{}\n", io::format_f64(error)),
    )?;
    m.param("misclassification_error", error);
    println!("misclassification error: {error:.4}");
    finish(m, &args.out_dir.join("predict.manifest.json"), start)
}

fn vi(args: &ViArgs) -> Result<()> {
    let p = io::read_partition(&args.first)?.partition;
    let q = io::read_partition(&args.second)?.partition;
    println!("{}", io::format_f64(vi_distance(&p, &q)?));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sample(args) => sample(args),
        Command::Test(args) => test(args),
        Command::Summarize(args) => summarize(args),
        Command::Predict(args) => predict(args),
        Command::Vi(args) => vi(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
