use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use immunoclust::config::{CorpusFormat, Method, RunConfig};
use immunoclust::pipeline::{self, PipelineError, Stage};
use immunoclust::similarity::Metric;

#[derive(Parser)]
#[command(
    name = "immunoclust",
    version,
    about = "Immune-network document clustering over character n-grams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a corpus once.
    Run(Common),
    /// Run every combination of gram length and metric.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Gram lengths to sweep.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        grams: Vec<usize>,
        /// Metrics to sweep.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "cosine,euclidean,minkowski4"
        )]
        metrics: Vec<Metric>,
    },
}

#[derive(Args)]
struct Common {
    /// key=value configuration file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// sgml or plaintext.
    #[arg(long)]
    format: Option<CorpusFormat>,
    /// Gram length.
    #[arg(long)]
    n: Option<usize>,
    /// Accept gram lengths outside 2..=5.
    #[arg(long)]
    allow_any_n: bool,
    /// euclidean, minkowski4 or cosine.
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long)]
    k_per_doc: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Documents sampled per source file.
    #[arg(long)]
    per_source: Option<usize>,
    /// Output directory.
    #[arg(long, env = "IMMUNOCLUST_OUT")]
    out: Option<PathBuf>,
    /// Cluster with k-means instead of the immune network.
    #[arg(long, value_name = "K")]
    baseline_kmeans: Option<usize>,
    /// Write vocabulary.csv and selected_terms.csv.
    #[arg(long)]
    dump_vocabulary: bool,
    /// Write similarity.csv.
    #[arg(long)]
    dump_similarity: bool,
    /// Any configuration key, e.g. --set mutation_scale=0.05.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn into_config(self) -> Result<RunConfig, PipelineError> {
        let stage = |e: Box<dyn std::error::Error + Send + Sync>| PipelineError {
            stage: Stage::Config,
            source: e,
        };
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| stage(Box::new(e)))?;
            c.apply_text(&text).map_err(|e| stage(Box::new(e)))?;
        }
        if let Some(v) = self.corpus {
            c.corpus = v;
        }
        if let Some(v) = self.format {
            c.format = v;
        }
        if let Some(v) = self.n {
            c.n = v;
        }
        c.allow_any_n |= self.allow_any_n;
        if let Some(v) = self.metric {
            c.metric = v;
        }
        if let Some(v) = self.k_per_doc {
            c.k_per_doc = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if self.per_source.is_some() {
            c.per_source = self.per_source;
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        if let Some(k) = self.baseline_kmeans {
            c.method = Method::KMeans;
            c.kmeans_k = k;
        }
        c.dump_vocabulary |= self.dump_vocabulary;
        c.dump_similarity |= self.dump_similarity;
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| stage(format!("--set expects KEY=VALUE, got {kv:?}").into()))?;
            c.set(k.trim(), v.trim()).map_err(|e| stage(Box::new(e)))?;
        }
        Ok(c)
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Run(common) => {
            let config = common.into_config()?;
            let o = pipeline::run_pipeline(&config)?;
            println!(
                "{} documents, {} clusters, F-measure {:.2}% (random {:.2}%), {:.0} ms; outputs in {}",
                o.documents,
                o.num_clusters,
                100.0 * o.evaluation.f_measure,
                100.0 * o.random_baseline_f,
                o.clustering_ms,
                o.out_dir.display()
            );
        }
        Command::Sweep {
            common,
            grams,
            metrics,
        } => {
            let config = common.into_config()?;
            let rows = pipeline::sweep(&config, &grams, &metrics)?;
            println!("{}", pipeline::SWEEP_HEADER);
            for r in &rows {
                println!("{}", r.to_csv());
            }
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            if failed > 0 {
                eprintln!("{failed} of {} sweep cells failed", rows.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
