use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dual_al::backend::{
    embed_documents, BackendDescriptor, BackendKind, MockBackend, RemoteBackend,
    SummarizationBackend,
};
use dual_al::corpus::{load_dataset, Corpus, DocId};
use dual_al::embedspace::{
    diversity_score, idds_scores, outlier_score, EmbeddingMatrix, IddsParams, DEFAULT_KNN_K,
};
use dual_al::harness::{
    export_results, export_viz, read_noise, read_selections, run_experiment, write_viz,
    ExperimentConfig, HarnessError, StrategyKind, Workspace,
};
use dual_al::strategies::{score_bleuvar, DualConfig, PoolState, StepContext};
use dual_al::synthetic::SyntheticSpec;

#[derive(Parser)]
#[command(
    name = "dual-al",
    version,
    about = "Active learning for summarization: DUAL, BAS, IDDS and random selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an active-learning experiment and write results to --out.
    Run(RunArgs),
    /// Score an unlabeled pool by IDDS and optionally BLEUVar.
    Score(ScoreArgs),
    /// Diversity and outlier scores of a labeled id set.
    Metrics(MetricsArgs),
    /// Write PCA coordinates of every document tagged by selection.
    ExportViz(VizArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// CSV of `id,noise` for the mock backend.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Use the built-in two-cluster synthetic corpus.
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long = "per-iter")]
    per_iter: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long = "p")]
    p: Option<f64>,
    #[arg(long = "k")]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// `mock` or a model-server URL.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Dataset (JSONL) holding the pool.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// File of labeled ids, one per line; they are scored against, not scored.
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long, default_value_t = IddsParams::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Also compute BLEUVar with n stochastic passes per document.
    #[arg(long)]
    bleuvar: bool,
    #[arg(long = "n", default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "mock")]
    backend: String,
    #[arg(long)]
    noise: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labeled: PathBuf,
    /// Neighbor pool; defaults to every embedded id outside the labeled set.
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    #[arg(long = "knn-k", default_value_t = DEFAULT_KNN_K)]
    knn_k: usize,
}

#[derive(Args)]
struct VizArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// `selections.csv` written by `run`.
    #[arg(long)]
    selections: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    repeat: usize,
    /// Dataset whose ids to project; defaults to every embedded id.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value = "selected")]
    strategy: String,
    #[arg(long, default_value = "viz.csv")]
    out: PathBuf,
}

fn read_ids(path: &Path) -> Result<Vec<DocId>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(DocId::from)
        .collect())
}

fn resolve_config(a: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut c = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($src:expr, $dst:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(a.budget, c.dual.budget);
    set!(a.per_iter, c.dual.per_iteration);
    set!(a.warmup, c.dual.warmup);
    set!(a.p, c.dual.random_ratio);
    set!(a.k, c.dual.top_k);
    set!(a.tau, c.dual.tau);
    set!(a.n, c.dual.mc_passes);
    set!(a.lambda, c.dual.lambda);
    set!(a.seed, c.dual.seed);
    set!(a.strategy, c.strategy);
    set!(a.backend, c.backend);
    set!(a.repeats, c.repeats);
    if a.train.is_some() {
        c.train = a.train.clone();
    }
    if a.test.is_some() {
        c.test = a.test.clone();
    }
    if a.embeddings.is_some() {
        c.embeddings = a.embeddings.clone();
    }
    if a.noise.is_some() {
        c.noise = a.noise.clone();
    }
    if a.out.is_some() {
        c.out = a.out.clone();
    }
    if a.synthetic && c.synthetic.is_none() {
        c.synthetic = Some(SyntheticSpec::default());
    }
    c.validate()?;
    Ok(c)
}

fn run(a: RunArgs) -> Result<i32, HarnessError> {
    let config = resolve_config(&a)?;
    let out = config
        .out
        .clone()
        .ok_or_else(|| HarnessError::Config("--out is required".into()))?;
    let workspace = Workspace::from_config(&config)?;
    let result = run_experiment(&config, &workspace)?;
    export_results(&result, &out)?;
    if let Some(first) = result.repeats.first() {
        let selections: Vec<_> = first
            .records
            .iter()
            .flat_map(|r| r.selections.clone())
            .collect();
        let rows = export_viz(
            &workspace.corpus.train_ids(),
            &selections,
            &workspace.embeddings,
            config.strategy.as_str(),
        )?;
        write_viz(out.join("viz.csv"), &rows)?;
    }
    for rep in &result.repeats {
        let last = rep.records.last();
        println!(
            "repeat {}: {:?}, |L| = {}, rouge1 = {}",
            rep.repeat,
            rep.status,
            last.map_or(0, |r| r.labeled),
            last.and_then(|r| r.scores)
                .map_or("n/a".to_string(), |s| format!("{:.4}", s.rouge1)),
        );
    }
    println!("results written to {}", out.display());
    Ok(result.exit_code())
}

fn connect(spec: &str) -> Result<Box<dyn SummarizationBackend>, HarnessError> {
    let d = BackendDescriptor::parse(spec).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(match d.kind {
        BackendKind::Mock => Box::new(MockBackend::new(d)),
        BackendKind::Remote => Box::new(RemoteBackend::connect(d)?),
    })
}

fn score(a: ScoreArgs) -> Result<i32, HarnessError> {
    let docs = load_dataset(&a.train)?;
    let mut backend = connect(&a.backend)?;
    if let Some(p) = &a.noise {
        if backend.descriptor().kind == BackendKind::Mock {
            backend = Box::new(
                MockBackend::new(backend.descriptor().clone()).with_noise_levels(read_noise(p)?),
            );
        }
    }
    let embeddings = match &a.embeddings {
        Some(p) => EmbeddingMatrix::load(p)?,
        None => embed_documents(backend.as_ref(), &docs)?,
    };
    let corpus = Corpus::new(docs, Vec::new())?;
    let labeled: HashSet<DocId> = match &a.labeled {
        Some(p) => read_ids(p)?.into_iter().collect(),
        None => HashSet::new(),
    };
    let all = corpus.train_ids();
    let unlabeled: Vec<DocId> = all
        .iter()
        .filter(|id| !labeled.contains(*id))
        .cloned()
        .collect();
    let penalty: Vec<DocId> = all
        .iter()
        .filter(|id| labeled.contains(*id))
        .cloned()
        .collect();
    let params = IddsParams::new(a.lambda)?;
    let idds = idds_scores(
        &embeddings.subset(&unlabeled)?,
        &embeddings.subset(&penalty)?,
        params,
    )?;

    let bleuvars = if a.bleuvar {
        let config = DualConfig {
            mc_passes: a.n,
            seed: a.seed,
            ..Default::default()
        };
        let pool = PoolState::new(unlabeled.clone(), 0).map_err(HarnessError::from)?;
        let ctx = StepContext::new(&corpus, &embeddings, &config);
        Some(score_bleuvar(&unlabeled, &pool, &ctx, backend.as_ref())?)
    } else {
        None
    };
    println!("id\tidds{}", if a.bleuvar { "\tbleuvar" } else { "" });
    for (i, (id, s)) in idds.iter().enumerate() {
        match &bleuvars {
            Some(b) => println!("{id}\t{s}\t{}", b[i]),
            None => println!("{id}\t{s}"),
        }
    }
    Ok(0)
}

fn metrics(a: MetricsArgs) -> Result<i32, HarnessError> {
    let embeddings = EmbeddingMatrix::load(&a.embeddings)?;
    let labeled = read_ids(&a.labeled)?;
    let pool = match &a.unlabeled {
        Some(p) => read_ids(p)?,
        None => {
            let l: HashSet<&DocId> = labeled.iter().collect();
            embeddings
                .ids()
                .iter()
                .filter(|id| !l.contains(id))
                .cloned()
                .collect()
        }
    };
    let diversity = diversity_score(&embeddings.subset(&labeled)?)?;
    let outlier = outlier_score(&labeled, &embeddings, &pool, a.knn_k)?;
    println!("diversity\t{diversity}");
    println!("outlier\t{outlier}");
    Ok(0)
}

fn export_viz_cmd(a: VizArgs) -> Result<i32, HarnessError> {
    let embeddings = EmbeddingMatrix::load(&a.embeddings)?;
    let ids = match &a.train {
        Some(p) => load_dataset(p)?.into_iter().map(|d| d.id).collect(),
        None => embeddings.ids().to_vec(),
    };
    let selections: Vec<_> = match &a.selections {
        Some(p) => read_selections(p)?
            .into_iter()
            .filter(|(r, _)| *r == a.repeat)
            .map(|(_, s)| s)
            .collect(),
        None => Vec::new(),
    };
    let rows = export_viz(&ids, &selections, &embeddings, &a.strategy)?;
    write_viz(&a.out, &rows)?;
    println!("{} points written to {}", rows.len(), a.out.display());
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Score(a) => score(a),
        Command::Metrics(a) => metrics(a),
        Command::ExportViz(a) => export_viz_cmd(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
