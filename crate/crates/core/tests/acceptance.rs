//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use immunoclust::config::RunConfig;
use immunoclust::corpus;
use immunoclust::eval::{self, ConfusionCounts};
use immunoclust::features::{self, VectorSet};
use immunoclust::immune::{self, AISParams, Antigen, Clustering};
use immunoclust::ngram::{self, NormalizationOptions, TermDocMatrix};
use immunoclust::pipeline;
use immunoclust::similarity::{self, Metric};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/newswire")
}

fn check(cond: bool, msg: impl FnOnce() -> String) {
    if !cond {
        panic!("{}", msg());
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) {
    check(elapsed.as_secs_f64() < limit_s, || {
        format!(
            "{what} took {:.2} s, limit {limit_s} s",
            elapsed.as_secs_f64()
        )
    });
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

// 1 ------------------------------------------------------------------------

fn ngram_examples() -> String {
    let start = Instant::now();
    let raw = NormalizationOptions {
        fold_case: false,
        ..NormalizationOptions::default()
    };
    let girl = ngram::normalize_text("The girl eats the apple", raw);
    check(girl == "The-girl-eats-the-apple", || {
        format!("normalized to {girl:?}")
    });
    let expected = [
        "The-g", "he-gi", "e-gir", "-girl", "girl-", "irl-e", "rl-ea", "l-eat", "-eats", "eats-",
        "ats-t", "ts-th", "s-the", "-the-", "the-a", "he-ap", "e-app", "-appl", "apple",
    ];
    let grams = ngram::extract_ngrams(&girl, 5);
    check(grams == expected, || format!("got {grams:?}"));

    let fish = ngram::normalize_text("the fisherman fishing", NormalizationOptions::default());
    let windows = ngram::extract_ngrams(&fish, 5);
    let mut distinct = windows.clone();
    distinct.sort();
    distinct.dedup();
    let fish_count = windows.iter().filter(|g| *g == "-fish").count();
    check(windows.len() == 17, || format!("{} windows", windows.len()));
    check(distinct.len() == 16, || {
        format!("{} distinct", distinct.len())
    });
    check(fish_count == 2, || format!("-fish x{fish_count}"));

    let docs = corpus::DocumentSet {
        documents: vec![corpus::Document {
            id: "t2".into(),
            body: "the fisherman fishing".into(),
            label: "x".into(),
            source: "s".into(),
            has_body: true,
        }],
        source_manifest: Vec::new(),
    };
    let (vocab, m) = ngram::build_matrix(&docs, 5, NormalizationOptions::default()).unwrap();
    check(vocab.len() == 16 && m.grand_total() == 17, || {
        "matrix totals".into()
    });
    check(m.get(vocab.index_of("-fish").unwrap(), 0) == 2, || {
        "matrix count of -fish".into()
    });
    within(start.elapsed(), 1.0, "n-gram examples");
    "19 grams in order; 17 windows, 16 distinct, -fish x2".into()
}

// 2 ------------------------------------------------------------------------

fn naive_chi2(counts: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let rows = counts.len();
    let cols = counts[0].len();
    let mut total = 0.0;
    for r in counts {
        for &c in r {
            total += c as f64;
        }
    }
    let mut out = vec![vec![0.0; cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            let mut ni = 0.0;
            for jj in 0..cols {
                ni += counts[i][jj] as f64;
            }
            let mut nj = 0.0;
            for ii in 0..rows {
                nj += counts[ii][j] as f64;
            }
            let e = ni * nj / total;
            let o = counts[i][j] as f64;
            out[i][j] = (o - e) * (o - e) / e;
        }
    }
    out
}

fn random_counts(rng: &mut ChaCha8Rng) -> Vec<Vec<u64>> {
    loop {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        let m: Vec<Vec<u64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(0..=5)).collect())
            .collect();
        let rows_ok = m.iter().all(|r| r.iter().any(|&c| c > 0));
        let cols_ok = (0..cols).all(|j| m.iter().any(|r| r[j] > 0));
        if rows_ok && cols_ok {
            return m;
        }
    }
}

fn chi2_oracle() -> String {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let counts = random_counts(&mut rng);
        let ids = (0..counts[0].len()).map(|j| format!("d{j}")).collect();
        let m = TermDocMatrix::from_dense(&counts, ids);
        let table = features::chi2_scores(&m).unwrap();
        let oracle = naive_chi2(&counts);
        for (i, row) in oracle.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                let got = table.get(i, j);
                check(rel_close(got, want, 1e-12), || {
                    format!("case {case} cell ({i},{j}): {got} vs oracle {want}")
                });
                if want != 0.0 {
                    worst = worst.max((got - want).abs() / want.abs());
                }
            }
        }
    }
    within(start.elapsed(), 10.0, "chi-square oracle");
    format!("1000 matrices, worst relative error {worst:.1e}")
}

// 3 ------------------------------------------------------------------------

fn fixture_counts(n: usize) -> (ngram::Vocabulary, TermDocMatrix) {
    let docs = corpus::load_sgml(&fixture_dir()).unwrap();
    ngram::build_matrix(&docs, n, NormalizationOptions::default()).unwrap()
}

fn reduced_fixture(n: usize, k: usize) -> TermDocMatrix {
    let (vocab, m) = fixture_counts(n);
    let table = features::chi2_scores(&m).unwrap();
    let sel = features::select_terms(&vocab, &m, &table, k).unwrap();
    m.restrict(&vocab, &sel.vocabulary)
}

fn tfc_properties() -> String {
    let start = Instant::now();
    let mut matrices = vec![reduced_fixture(3, 10)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let counts = random_counts(&mut rng);
        let ids = (0..counts[0].len()).map(|j| format!("d{j}")).collect();
        matrices.push(TermDocMatrix::from_dense(&counts, ids));
    }
    let (mut checked, mut worst_norm, mut worst_base) = (0, 0.0f64, 0.0f64);
    for m in &matrices {
        let natural = features::tfc_normalize(&features::tfidf_weight(m).unwrap());
        for j in natural.included() {
            let norm = natural.vectors[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            worst_norm = worst_norm.max((norm - 1.0).abs());
            check((norm - 1.0).abs() <= 1e-9, || {
                format!("vector {j} has norm {norm}")
            });
            checked += 1;
        }
        for base in [2.0, 10.0] {
            let other = features::tfc_normalize(&features::tfidf_weight_base(m, base).unwrap());
            check(other.excluded == natural.excluded, || {
                "exclusions differ by base".into()
            });
            for (a, b) in natural.vectors.iter().zip(&other.vectors) {
                for (x, y) in a.iter().zip(b) {
                    worst_base = worst_base.max((x - y).abs());
                    check((x - y).abs() <= 1e-9, || format!("base {base}: {x} vs {y}"));
                }
            }
        }
    }
    within(start.elapsed(), 5.0, "TFC properties");
    format!("{checked} vectors, max |norm-1| {worst_norm:.1e}, max base drift {worst_base:.1e}")
}

// 4 ------------------------------------------------------------------------

fn random_vectors(rng: &mut ChaCha8Rng, count: usize, dim: usize, nonneg: bool) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    if nonneg {
                        x.abs()
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect()
}

fn metric_suite() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for set in 0..5 {
        let vectors = random_vectors(&mut rng, 40, 12, set % 2 == 0);
        let ids = (0..vectors.len()).map(|i| format!("v{i}")).collect();
        let vs = VectorSet::from_vectors(ids, vectors);
        for metric in Metric::ALL {
            let s = similarity::similarity_matrix(&vs, metric).unwrap();
            for i in 0..s.len() {
                let diag = s.get(i, i);
                let want = if metric.is_similarity() { 1.0 } else { 0.0 };
                check(diag == want, || format!("{metric} diagonal {i} = {diag}"));
                for j in 0..s.len() {
                    check(s.get(i, j).to_bits() == s.get(j, i).to_bits(), || {
                        format!("{metric} asymmetric at ({i},{j})")
                    });
                }
            }
        }
    }
    let mut worst: f64 = f64::NEG_INFINITY;
    for metric in [Metric::Euclidean, Metric::Minkowski4] {
        for _ in 0..10_000 {
            let dim = rng.random_range(1..10);
            let t = random_vectors(&mut rng, 3, dim, false);
            let ab = similarity::distance(metric, &t[0], &t[1]).unwrap();
            let bc = similarity::distance(metric, &t[1], &t[2]).unwrap();
            let ac = similarity::distance(metric, &t[0], &t[2]).unwrap();
            worst = worst.max(ac - ab - bc);
            check(ac <= ab + bc + 1e-9, || {
                format!("{metric}: {ac} > {ab} + {bc}")
            });
        }
    }
    format!(
        "symmetry and diagonals on 5 sets x 3 metrics; 2 x 10000 triangles, max slack {worst:.3}"
    )
}

// 5 ------------------------------------------------------------------------

fn clustering_from(pairs: &[(&str, usize)]) -> Clustering {
    let ids: Vec<String> = pairs.iter().map(|(d, _)| d.to_string()).collect();
    let labels: Vec<usize> = pairs.iter().map(|&(_, c)| c).collect();
    Clustering::from_labels(&ids, &labels, &[])
}

/// F-measure computed straight from document lists: for each class, try
/// every cluster and keep the best (1+b)rp/(br+p).
fn enumeration_f(classes: &[(&str, &[&str])], clusters: &[&[&str]], beta: f64) -> f64 {
    let total: usize = classes.iter().map(|(_, d)| d.len()).sum();
    let mut f = 0.0;
    for (_, members) in classes {
        let mut best: f64 = 0.0;
        for cluster in clusters {
            let shared = members.iter().filter(|d| cluster.contains(d)).count() as f64;
            if shared == 0.0 {
                continue;
            }
            let p = shared / cluster.len() as f64;
            let r = shared / members.len() as f64;
            best = best.max((1.0 + beta) * r * p / (beta * r + p));
        }
        f += members.len() as f64 / total as f64 * best;
    }
    f
}

fn f_measure_checks() -> String {
    let labels: HashMap<String, String> = [("d1", "A"), ("d2", "A"), ("d3", "B"), ("d4", "B")]
        .iter()
        .map(|(d, c)| (d.to_string(), c.to_string()))
        .collect();

    let perfect = clustering_from(&[("d1", 0), ("d2", 0), ("d3", 1), ("d4", 1)]);
    let f = eval::evaluate(&perfect, &labels, 1.0).unwrap().f_measure;
    check(f == 1.0, || format!("perfect clustering gave {f}"));

    let worked = clustering_from(&[("d1", 0), ("d2", 0), ("d3", 0), ("d4", 1)]);
    let f = eval::evaluate(&worked, &labels, 1.0).unwrap().f_measure;
    let oracle = enumeration_f(
        &[("A", &["d1", "d2"]), ("B", &["d3", "d4"])],
        &[&["d1", "d2", "d3"], &["d4"]],
        1.0,
    );
    check((oracle - 0.7333).abs() <= 1e-4, || {
        format!("oracle {oracle}")
    });
    check((f - oracle).abs() <= 1e-4, || {
        format!("4-document case {f} vs oracle {oracle}")
    });

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..100 {
        let classes = rng.random_range(1..6);
        let clusters = rng.random_range(1..8);
        let joint: Vec<Vec<usize>> = (0..classes)
            .map(|_| (0..clusters).map(|_| rng.random_range(0..6)).collect())
            .collect();
        if joint.iter().flatten().all(|&x| x == 0) {
            continue;
        }
        let mut perm: Vec<usize> = (0..clusters).collect();
        for i in (1..clusters).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<Vec<usize>> = joint
            .iter()
            .map(|r| perm.iter().map(|&k| r[k]).collect())
            .collect();
        let (a, b) = (
            ConfusionCounts::from_joint(joint),
            ConfusionCounts::from_joint(permuted),
        );
        for beta in [0.5, 1.0, 2.0] {
            let (fa, fb) = (eval::f_measure(&a, beta), eval::f_measure(&b, beta));
            check(fa == fb, || {
                format!("table {t} beta {beta}: {fa} vs {fb} after relabeling")
            });
        }
    }
    format!(
        "perfect = 1.0; 4-document case = {f:.4} (oracle {oracle:.4}); 100 relabelings invariant"
    )
}

// 6 ------------------------------------------------------------------------

/// Counts set partitions of an n-set by number of blocks, enumerating
/// restricted growth strings.
fn partition_counts(n: usize) -> Vec<u64> {
    fn walk(pos: usize, n: usize, blocks: usize, counts: &mut [u64]) {
        if pos == n {
            counts[blocks] += 1;
            return;
        }
        for b in 0..=blocks {
            walk(pos + 1, n, blocks.max(b + 1), counts);
        }
    }
    let mut counts = vec![0; n + 1];
    walk(0, n, 0, &mut counts);
    counts
}

fn stirling_checks() -> String {
    let start = Instant::now();
    let mut pairs = 0;
    for n in 1..=10 {
        let brute = partition_counts(n);
        for k in 1..=n {
            let got = eval::stirling_partitions(n, k).unwrap();
            check(got == BigUint::from(brute[k]), || {
                format!("S({n},{k}) = {got}, enumeration {}", brute[k])
            });
            pairs += 1;
        }
    }
    within(start.elapsed(), 5.0, "Stirling enumeration");
    format!("{pairs} (n, k) pairs up to n = 10")
}

// 7 ------------------------------------------------------------------------

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Three unit-normalized Gaussian blobs in 3 dimensions (sigma 0.05, 30
/// points each) around centers with pairwise cosine below 0.3.
fn blobs(seed: u64) -> (Vec<Antigen>, HashMap<String, String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 3;
    let centers = loop {
        let c: Vec<Vec<f64>> = (0..3)
            .map(|_| unit((0..dim).map(|_| rng.sample(StandardNormal)).collect()))
            .collect();
        let cos = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        if cos(&c[0], &c[1]) < 0.3 && cos(&c[0], &c[2]) < 0.3 && cos(&c[1], &c[2]) < 0.3 {
            break c;
        }
    };
    let mut antigens = Vec::new();
    let mut labels = HashMap::new();
    for (b, c) in centers.iter().enumerate() {
        for p in 0..30 {
            let id = format!("b{b}p{p}");
            let v = c
                .iter()
                .map(|x| x + 0.05 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            antigens.push(Antigen::new(id.clone(), unit(v)));
            labels.insert(id, format!("blob{b}"));
        }
    }
    (antigens, labels)
}

fn blob_recovery() -> String {
    let start = Instant::now();
    let mut good = 0;
    let mut outcomes = Vec::new();
    for seed in 0..10 {
        let (antigens, labels) = blobs(seed);
        let params = AISParams {
            seed,
            ..AISParams::for_metric(Metric::Cosine)
        };
        let rep = immune::run_ais(&antigens, &params).unwrap();
        let clustering = immune::extract_clusters(&rep, &antigens, &params).unwrap();
        let f = eval::evaluate(&clustering, &labels, 1.0).unwrap().f_measure;
        if clustering.num_clusters == 3 && f >= 0.95 {
            good += 1;
        }
        outcomes.push(format!("{}:{:.2}", clustering.num_clusters, f));
    }
    within(start.elapsed(), 30.0, "blob recovery");
    check(good >= 9, || {
        format!(
            "{good}/10 seeds recovered 3 clusters (clusters:F {})",
            outcomes.join(" ")
        )
    });
    format!(
        "{good}/10 seeds give 3 clusters with F >= 0.95 ({})",
        outcomes.join(" ")
    )
}

// 8 ------------------------------------------------------------------------

fn fixture_antigens(n: usize) -> Vec<Antigen> {
    let m = reduced_fixture(n, 10);
    let vectors = features::tfc_normalize(&features::tfidf_weight(&m).unwrap());
    immune::antigens_from(&vectors)
}

fn fixture_params(metric: Metric, dim: usize) -> AISParams {
    RunConfig {
        metric,
        ..RunConfig::default()
    }
    .with_dimension(dim)
    .ais_params()
}

fn assert_separated(rep: &immune::Repertoire, params: &AISParams, what: &str) {
    let abs = &rep.antibodies;
    for i in 0..abs.len() {
        for j in i + 1..abs.len() {
            let s = immune::separation(params.metric, &abs[i], &abs[j]);
            check(s > params.suppression_threshold, || {
                format!(
                    "{what}: survivors {i},{j} only {s} apart (threshold {})",
                    params.suppression_threshold
                )
            });
        }
    }
}

fn determinism_and_suppression() -> String {
    let (blob_antigens, _) = blobs(11);
    let text_antigens = fixture_antigens(3);
    let dim = text_antigens[0].vector.len();
    let mut corpora = 0;
    for metric in Metric::ALL {
        let cases = [
            ("blobs", &blob_antigens, AISParams::for_metric(metric)),
            ("fixture", &text_antigens, fixture_params(metric, dim)),
        ];
        for (name, antigens, params) in cases {
            let what = format!("{name}/{metric}");
            let a = immune::run_ais(antigens, &params).unwrap();
            let b = immune::run_ais(antigens, &params).unwrap();
            check(
                format!("{:?}", a.history) == format!("{:?}", b.history),
                || format!("{what}: history differs"),
            );
            check(a == b, || format!("{what}: repertoire differs"));

            assert_separated(&a, &params, &what);
            let mut again = a.clone();
            check(immune::suppress(&mut again, &params) == 0, || {
                format!("{what}: second suppression removed antibodies")
            });
            check(again.antibodies == a.antibodies, || {
                format!("{what}: suppression not idempotent")
            });
            corpora += 1;
        }
    }

    // crowded random repertoires, including exact duplicates
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for metric in Metric::ALL {
        let params = AISParams::for_metric(metric);
        for _ in 0..20 {
            let mut rep = immune::Repertoire::new();
            for v in random_vectors(&mut rng, 60, 4, true) {
                let mut ab = immune::Antibody::new(v.iter().map(|x| x * 0.4).collect());
                ab.stimulation = rng.random_range(0..3);
                ab.age = rng.random_range(0..3);
                rep.insert(ab.clone(), true);
                if rng.random_bool(0.2) {
                    rep.insert(ab, true);
                }
            }
            immune::suppress(&mut rep, &params);
            assert_separated(&rep, &params, &format!("random/{metric}"));
            let once = rep.antibodies.clone();
            immune::suppress(&mut rep, &params);
            check(rep.antibodies == once, || {
                format!("random/{metric}: not idempotent")
            });
        }
    }
    format!("{corpora} corpus/metric runs reproduce exactly; suppression idempotent and separated there and on 60 random repertoires")
}

// 9 ------------------------------------------------------------------------

fn desk_scale_run() -> String {
    let out = tempfile::tempdir().unwrap();
    let config = RunConfig {
        corpus: fixture_dir(),
        n: 3,
        metric: Metric::Cosine,
        out: out.path().to_path_buf(),
        ..RunConfig::default()
    };
    let start = Instant::now();
    let o = pipeline::run_pipeline(&config).unwrap();
    let elapsed = start.elapsed();
    within(elapsed, 60.0, "fixture pipeline");
    check(o.documents == 400, || format!("{} documents", o.documents));
    check((2..=60).contains(&o.num_clusters), || {
        format!("{} clusters", o.num_clusters)
    });
    let f = o.evaluation.f_measure;
    let margin = f - o.random_baseline_f;
    check(margin >= 0.10, || {
        format!(
            "F {f:.4} beats random {:.4} by only {margin:.4}",
            o.random_baseline_f
        )
    });
    format!(
        "{} clusters, F {:.2}% vs random {:.2}%, clustering {:.0} ms, total {:.1} s",
        o.num_clusters,
        100.0 * f,
        100.0 * o.random_baseline_f,
        o.clustering_ms,
        elapsed.as_secs_f64()
    )
}

// 10 -----------------------------------------------------------------------

fn reduction_reporting() -> String {
    let mut table = vec!["grams\tbefore\tafter\trate".to_string()];
    for n in 2..=5 {
        let (vocab, m) = fixture_counts(n);
        let chi2 = features::chi2_scores(&m).unwrap();
        let mut previous = f64::INFINITY;
        for k in [1, 2, 3, 5, 8, 10, 15, 20, 40, 80, 160, 100_000] {
            let report = features::select_terms(&vocab, &m, &chi2, k).unwrap().report;
            check(report.n == n && report.terms_before == vocab.len(), || {
                "report header".into()
            });
            check(report.terms_after <= report.terms_before, || {
                "more terms after than before".into()
            });
            let rate = report.rate();
            check(rate <= previous, || {
                format!("n={n}: rate rose to {rate} at k={k} from {previous}")
            });
            previous = rate;
            if k == 10 {
                table.push(format!(
                    "{n}\t{}\t{}\t{:.2}%",
                    report.terms_before,
                    report.terms_after,
                    100.0 * rate
                ));
            }
        }
        check(previous == 0.0, || {
            format!("n={n}: unlimited k still reduces")
        });
    }

    let out = tempfile::tempdir().unwrap();
    let config = RunConfig {
        corpus: fixture_dir(),
        n: 2,
        out: out.path().to_path_buf(),
        ..RunConfig::default()
    };
    pipeline::run_pipeline(&config).unwrap();
    let report = std::fs::read_to_string(out.path().join(pipeline::REPORT_FILE)).unwrap();
    check(
        report.contains("n_grams\tterms_before\tterms_after\trate_reduction\n2\t"),
        || "report lacks the reduction table".into(),
    );
    format!("k=10 on the fixture: {}", table.join(" | "))
}

fn main() {
    let criteria: [(&str, fn() -> String); 10] = [
        ("n-gram worked examples", ngram_examples),
        ("chi-square oracle equivalence", chi2_oracle),
        ("TFC norms and log-base invariance", tfc_properties),
        (
            "metric symmetry, diagonals, triangle inequality",
            metric_suite,
        ),
        ("F-measure checks", f_measure_checks),
        ("Stirling numbers vs enumeration", stirling_checks),
        ("immune recovery of Gaussian blobs", blob_recovery),
        (
            "immune determinism and suppression",
            determinism_and_suppression,
        ),
        ("desk-scale fixture run", desk_scale_run),
        ("reduction-rate reporting", reduction_reporting),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!(
                "PASS  criterion {:>2}: {name} [{secs:.2} s] {detail}",
                i + 1
            ),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  criterion {:>2}: {name} [{secs:.2} s] {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
