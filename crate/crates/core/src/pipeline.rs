//! End-to-end runs: corpus -> n-grams -> chi-square -> TFC -> clustering ->
//! evaluation, plus grid sweeps over gram length and metric.

use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::config::{CorpusFormat, Method, RunConfig};
use crate::corpus::{self, DocumentSet};
use crate::eval::{self, EvaluationReport};
use crate::features::{self, ReductionReport};
use crate::immune::{self, IterationStats};
use crate::ngram;
use crate::similarity::{self, Metric};

pub const ASSIGNMENTS_FILE: &str = "assignments.tsv";
pub const REPORT_FILE: &str = "report.txt";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved";
pub const SWEEP_FILE: &str = "sweep.csv";
/// Report lines starting with this prefix carry wall-clock measurements.
pub const TIMING_PREFIX: &str = "clustering_time_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Corpus,
    Ngrams,
    Features,
    Similarity,
    Clustering,
    Evaluation,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Corpus => "corpus",
            Stage::Ngrams => "ngrams",
            Stage::Features => "features",
            Stage::Similarity => "similarity",
            Stage::Clustering => "clustering",
            Stage::Evaluation => "evaluation",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: std::error::Error + Send + Sync + 'static> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: Box::new(e),
        })
    }
}

/// Everything a run measured.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub documents: usize,
    pub excluded: Vec<String>,
    pub reduction: ReductionReport,
    pub num_clusters: usize,
    pub clustering_ms: f64,
    pub evaluation: EvaluationReport,
    pub random_baseline_f: f64,
    pub history: Vec<IterationStats>,
    pub out_dir: PathBuf,
}

pub fn load_documents(config: &RunConfig) -> Result<DocumentSet, PipelineError> {
    let set = match config.format {
        CorpusFormat::Sgml => corpus::load_sgml(&config.corpus),
        CorpusFormat::Plaintext => corpus::load_plaintext_dir(&config.corpus),
    }
    .at(Stage::Corpus)?;
    match config.per_source {
        Some(p) => corpus::sample_subset(&set, p, config.seed).at(Stage::Corpus),
        None => Ok(set),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, PipelineError> {
    File::create(dir.join(name))
        .map(BufWriter::new)
        .at(Stage::Output)
}

/// Runs the whole pipeline and writes the assignments, report and resolved
/// configuration into `config.out`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    config.validate().at(Stage::Config)?;
    let mut config = config.resolved();
    let out_dir = config.out.clone();
    fs::create_dir_all(&out_dir).at(Stage::Output)?;

    let docs = load_documents(&config)?;
    log::info!(
        "loaded {} documents from {}",
        docs.len(),
        config.corpus.display()
    );

    let (vocab, counts) =
        ngram::build_matrix(&docs, config.n, config.normalization()).at(Stage::Ngrams)?;
    if config.dump_vocabulary {
        counts
            .write_csv(&vocab, create(&out_dir, "vocabulary.csv")?)
            .at(Stage::Output)?;
    }
    let chi2 = features::chi2_scores(&counts).at(Stage::Features)?;
    let selection =
        features::select_terms(&vocab, &counts, &chi2, config.k_per_doc).at(Stage::Features)?;
    if config.dump_vocabulary {
        selection
            .write_csv(create(&out_dir, "selected_terms.csv")?)
            .at(Stage::Output)?;
    }
    let reduced = counts.restrict(&vocab, &selection.vocabulary);
    let weights = features::tfidf_weight(&reduced).at(Stage::Features)?;
    let vectors = features::tfc_normalize(&weights);
    config = config.with_dimension(vectors.dim);
    let excluded: Vec<String> = vectors
        .excluded_ids()
        .into_iter()
        .map(String::from)
        .collect();
    if !excluded.is_empty() {
        log::warn!(
            "{} documents have no usable grams and are excluded",
            excluded.len()
        );
    }

    if config.dump_similarity {
        let matrix =
            similarity::similarity_matrix(&vectors, config.metric).at(Stage::Similarity)?;
        matrix
            .write_csv(create(&out_dir, "similarity.csv")?)
            .at(Stage::Output)?;
    }

    let started = Instant::now();
    let (clustering, history) = match config.method {
        Method::Ais => {
            let params = config.ais_params();
            let antigens = immune::antigens_from(&vectors);
            let rep = immune::run_ais(&antigens, &params).at(Stage::Clustering)?;
            let clustering =
                immune::extract_clusters(&rep, &antigens, &params).at(Stage::Clustering)?;
            (clustering, rep.history)
        }
        Method::KMeans => (
            eval::kmeans_baseline(
                &vectors,
                config.kmeans_k,
                config.seed,
                config.kmeans_max_iter,
            )
            .at(Stage::Clustering)?,
            Vec::new(),
        ),
    };
    let clustering_ms = started.elapsed().as_secs_f64() * 1000.0;

    let labels = docs.labels();
    let evaluation = eval::evaluate(&clustering, &labels, config.beta).at(Stage::Evaluation)?;
    let assigned: Vec<String> = clustering
        .assignment
        .iter()
        .map(|(d, _)| d.clone())
        .collect();
    let random = eval::random_assignment(&assigned, clustering.num_clusters, config.seed);
    let random_baseline_f = eval::evaluate(&random, &labels, config.beta)
        .at(Stage::Evaluation)?
        .f_measure;

    clustering
        .write_tsv(create(&out_dir, ASSIGNMENTS_FILE)?)
        .at(Stage::Output)?;
    if config.method == Method::Ais {
        clustering
            .write_centers_csv(create(&out_dir, "centers.csv")?)
            .at(Stage::Output)?;
    }
    fs::write(out_dir.join(RESOLVED_CONFIG_FILE), config.to_text()).at(Stage::Output)?;

    let outcome = RunOutcome {
        documents: docs.len(),
        excluded,
        reduction: selection.report,
        num_clusters: clustering.num_clusters,
        clustering_ms,
        evaluation,
        random_baseline_f,
        history,
        out_dir: out_dir.clone(),
        config,
    };
    fs::write(out_dir.join(REPORT_FILE), render_report(&outcome, &docs)).at(Stage::Output)?;
    Ok(outcome)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Plain-text run report. Only lines starting with [`TIMING_PREFIX`] vary
/// between identical runs.
pub fn render_report(o: &RunOutcome, docs: &DocumentSet) -> String {
    let mut r = String::new();
    let c = &o.config;
    let _ = writeln!(r, "# immunoclust run report");
    let _ = writeln!(r, "corpus={}", c.corpus.display());
    let _ = writeln!(r, "documents={}", o.documents);
    let _ = writeln!(r, "excluded_documents={}", o.excluded.len());
    for id in &o.excluded {
        let _ = writeln!(r, "  excluded {id}");
    }

    let _ = writeln!(r, "\n[manifest]");
    let _ = writeln!(r, "source\trecords_read\trecords_skipped");
    for m in &docs.source_manifest {
        let _ = writeln!(
            r,
            "{}\t{}\t{}",
            m.source,
            m.records_read,
            m.records_skipped()
        );
        for s in &m.skipped {
            let _ = writeln!(r, "  skipped {}: {}", s.locator, s.reason);
        }
        for note in &m.notes {
            let _ = writeln!(r, "  note {note}");
        }
    }

    let red = &o.reduction;
    let _ = writeln!(r, "\n[reduction]");
    let _ = writeln!(r, "n_grams\tterms_before\tterms_after\trate_reduction");
    let _ = writeln!(
        r,
        "{}\t{}\t{}\t{}%",
        red.n,
        red.terms_before,
        red.terms_after,
        pct(red.rate())
    );

    let e = &o.evaluation;
    let _ = writeln!(r, "\n[clustering]");
    let _ = writeln!(r, "method={}", c.method);
    let _ = writeln!(r, "metric={}", c.metric);
    let _ = writeln!(r, "grams={}", c.n);
    let _ = writeln!(r, "num_clusters={}", o.num_clusters);
    let _ = writeln!(r, "{TIMING_PREFIX}={:.0}", o.clustering_ms);
    let _ = writeln!(r, "f_measure_pct={}", pct(e.f_measure));
    let _ = writeln!(r, "beta={}", e.beta);
    let _ = writeln!(r, "mean_purity_pct={}", pct(e.mean_purity));
    let _ = writeln!(
        r,
        "random_baseline_f_measure_pct={}",
        pct(o.random_baseline_f)
    );
    let _ = writeln!(r, "evaluated_documents={}", e.evaluated);
    let _ = writeln!(r, "unlabeled_documents={}", e.unlabeled);

    let _ = writeln!(r, "\n[per_class]");
    let _ = writeln!(r, "class\tsize\tbest_cluster\tprecision\trecall\tscore");
    for m in &e.per_class {
        let _ = writeln!(
            r,
            "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
            m.class, m.size, m.best_cluster, m.precision, m.recall, m.score
        );
    }
    let _ = writeln!(r, "\n[purity]");
    let _ = writeln!(r, "cluster\tpurity");
    for (k, p) in &e.purity {
        let _ = writeln!(r, "{k}\t{p:.4}");
    }

    if !o.history.is_empty() {
        let _ = writeln!(r, "\n[immune_history]");
        let _ = writeln!(r, "iteration\tsize\tmatches\tclones\tsuppressed\tcovered");
        for h in &o.history {
            let _ = writeln!(
                r,
                "{}\t{}\t{}\t{}\t{}\t{}",
                h.iteration, h.size, h.matches, h.clones, h.suppressed, h.covered
            );
        }
    }
    r
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub grams: usize,
    pub metric: Metric,
    pub result: Result<CellResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub num_clusters: usize,
    pub clustering_ms: f64,
    pub f_measure: f64,
    pub mean_purity: f64,
    pub terms_before: usize,
    pub terms_after: usize,
}

impl From<&RunOutcome> for CellResult {
    fn from(o: &RunOutcome) -> Self {
        CellResult {
            num_clusters: o.num_clusters,
            clustering_ms: o.clustering_ms,
            f_measure: o.evaluation.f_measure,
            mean_purity: o.evaluation.mean_purity,
            terms_before: o.reduction.terms_before,
            terms_after: o.reduction.terms_after,
        }
    }
}

pub const SWEEP_HEADER: &str = "grams,metric,status,num_clusters,clustering_time_ms,f_measure_pct,mean_purity_pct,terms_before,terms_after,rate_reduction_pct,error";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        match &self.result {
            Ok(c) => {
                let rate = if c.terms_before == 0 {
                    0.0
                } else {
                    1.0 - c.terms_after as f64 / c.terms_before as f64
                };
                format!(
                    "{},{},ok,{},{:.0},{},{},{},{},{},",
                    self.grams,
                    self.metric,
                    c.num_clusters,
                    c.clustering_ms,
                    pct(c.f_measure),
                    pct(c.mean_purity),
                    c.terms_before,
                    c.terms_after,
                    pct(rate)
                )
            }
            Err(e) => format!(
                "{},{},error,,,,,,,,{}",
                self.grams,
                self.metric,
                ngram::csv_field(e)
            ),
        }
    }
}

/// Configuration of one sweep cell; outputs go to `<out>/n<grams>-<metric>`.
pub fn cell_config(base: &RunConfig, grams: usize, metric: Metric) -> RunConfig {
    RunConfig {
        n: grams,
        metric,
        out: base.out.join(format!("n{grams}-{metric}")),
        ..base.clone()
    }
}

/// Runs every (gram length, metric) pair with [`run_pipeline`].
pub fn sweep(
    config: &RunConfig,
    grams: &[usize],
    metrics: &[Metric],
) -> Result<Vec<SweepRow>, PipelineError> {
    sweep_with(config, grams, metrics, |c| {
        run_pipeline(c).map(|o| CellResult::from(&o))
    })
}

/// Sweep with a custom cell runner. Failing cells become error rows; the
/// table goes to `<out>/sweep.csv`.
pub fn sweep_with<F>(
    config: &RunConfig,
    grams: &[usize],
    metrics: &[Metric],
    runner: F,
) -> Result<Vec<SweepRow>, PipelineError>
where
    F: Fn(&RunConfig) -> Result<CellResult, PipelineError>,
{
    if grams.is_empty() || metrics.is_empty() {
        return Err(PipelineError {
            stage: Stage::Config,
            source: "sweep needs at least one gram length and one metric".into(),
        });
    }
    let mut rows = Vec::new();
    for &n in grams {
        for &metric in metrics {
            let cell = cell_config(config, n, metric);
            let result = runner(&cell).map_err(|e| e.to_string());
            if let Err(e) = &result {
                log::error!("sweep cell n={n} metric={metric}: {e}");
            }
            rows.push(SweepRow {
                grams: n,
                metric,
                result,
            });
        }
    }
    fs::create_dir_all(&config.out).at(Stage::Output)?;
    let mut out = create(&config.out, SWEEP_FILE)?;
    writeln!(out, "{SWEEP_HEADER}").at(Stage::Output)?;
    for row in &rows {
        writeln!(out, "{}", row.to_csv()).at(Stage::Output)?;
    }
    out.flush().at(Stage::Output)?;
    Ok(rows)
}
