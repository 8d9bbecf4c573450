//! Clustering evaluation against reference labels, partition counting and a
//! k-means baseline.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::UNLABELED;
use crate::features::VectorSet;
use crate::immune::Clustering;
use crate::similarity::euclidean_unchecked;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no assigned document carries a class label")]
    NothingToEvaluate,
    #[error("invalid partition size: k = {k}, n = {n}")]
    InvalidPartition { n: usize, k: usize },
    #[error("k = {k} is invalid for {available} vectors")]
    InvalidK { k: usize, available: usize },
}

/// Class-by-cluster contingency table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub total: usize,
    /// Class names, sorted.
    pub classes: Vec<String>,
    /// Cluster ids present, sorted.
    pub clusters: Vec<usize>,
    pub class_sizes: Vec<usize>,
    pub cluster_sizes: Vec<usize>,
    /// `joint[i][k]`: documents of class `i` in cluster `k`.
    pub joint: Vec<Vec<usize>>,
    /// Assigned documents left out for lack of a label.
    pub unlabeled: Vec<String>,
}

impl ConfusionCounts {
    /// Builds from a dense joint table; marginals are derived.
    pub fn from_joint(joint: Vec<Vec<usize>>) -> Self {
        let num_clusters = joint.first().map_or(0, Vec::len);
        let class_sizes: Vec<usize> = joint.iter().map(|r| r.iter().sum()).collect();
        let cluster_sizes: Vec<usize> = (0..num_clusters)
            .map(|k| joint.iter().map(|r| r[k]).sum())
            .collect();
        ConfusionCounts {
            total: class_sizes.iter().sum(),
            classes: (0..joint.len()).map(|i| format!("c{i}")).collect(),
            clusters: (0..num_clusters).collect(),
            class_sizes,
            cluster_sizes,
            joint,
            unlabeled: Vec::new(),
        }
    }

    pub fn precision(&self, i: usize, k: usize) -> f64 {
        ratio(self.joint[i][k], self.cluster_sizes[k])
    }

    pub fn recall(&self, i: usize, k: usize) -> f64 {
        ratio(self.joint[i][k], self.class_sizes[i])
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Joint counts of reference classes and clusters. Documents without a label
/// (or labeled "unlabeled") are left out and listed.
pub fn confusion(
    clustering: &Clustering,
    labels: &HashMap<String, String>,
) -> Result<ConfusionCounts, EvalError> {
    let mut unlabeled = Vec::new();
    let mut pairs = Vec::new();
    for (doc, cluster) in &clustering.assignment {
        match labels.get(doc) {
            Some(l) if l != UNLABELED => pairs.push((l.as_str(), *cluster)),
            _ => unlabeled.push(doc.clone()),
        }
    }
    if pairs.is_empty() {
        return Err(EvalError::NothingToEvaluate);
    }
    let classes: Vec<String> = {
        let mut c: Vec<String> = pairs.iter().map(|(l, _)| l.to_string()).collect();
        c.sort();
        c.dedup();
        c
    };
    let clusters: Vec<usize> = {
        let mut c: Vec<usize> = pairs.iter().map(|&(_, k)| k).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let class_pos: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let cluster_pos: HashMap<usize, usize> =
        clusters.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut joint = vec![vec![0usize; clusters.len()]; classes.len()];
    for (l, k) in pairs {
        joint[class_pos[l]][cluster_pos[&k]] += 1;
    }
    let mut counts = ConfusionCounts::from_joint(joint);
    counts.classes = classes;
    counts.clusters = clusters;
    counts.unlabeled = unlabeled;
    Ok(counts)
}

/// Score of one (class, cluster) pair: `(1 + b) r p / (b r + p)`, 0 when the
/// denominator vanishes.
pub fn pair_score(recall: f64, precision: f64, beta: f64) -> f64 {
    let den = beta * recall + precision;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + beta) * recall * precision / den
    }
}

/// Best cluster for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMatch {
    pub class: String,
    pub size: usize,
    pub best_cluster: usize,
    pub precision: f64,
    pub recall: f64,
    pub score: f64,
}

/// Per-class best matches, in class order.
pub fn class_matches(c: &ConfusionCounts, beta: f64) -> Vec<ClassMatch> {
    (0..c.classes.len())
        .map(|i| {
            let mut best = ClassMatch {
                class: c.classes[i].clone(),
                size: c.class_sizes[i],
                best_cluster: c.clusters.first().copied().unwrap_or(0),
                precision: 0.0,
                recall: 0.0,
                score: 0.0,
            };
            for k in 0..c.clusters.len() {
                let (p, r) = (c.precision(i, k), c.recall(i, k));
                let s = pair_score(r, p, beta);
                if s > best.score {
                    best = ClassMatch {
                        best_cluster: c.clusters[k],
                        precision: p,
                        recall: r,
                        score: s,
                        ..best
                    };
                }
            }
            best
        })
        .collect()
}

/// `F = sum_i (N_ci / N) max_k (1 + b) r p / (b r + p)`.
pub fn f_measure(c: &ConfusionCounts, beta: f64) -> f64 {
    assert!(beta > 0.0, "beta must be positive");
    class_matches(c, beta)
        .iter()
        .map(|m| ratio(m.size, c.total) * m.score)
        .sum()
}

/// Majority-class fraction of each cluster and the size-weighted mean.
pub fn purity(c: &ConfusionCounts) -> (Vec<f64>, f64) {
    let per: Vec<f64> = (0..c.clusters.len())
        .map(|k| {
            let top = c.joint.iter().map(|r| r[k]).max().unwrap_or(0);
            ratio(top, c.cluster_sizes[k])
        })
        .collect();
    let mean = per
        .iter()
        .zip(&c.cluster_sizes)
        .map(|(p, &s)| p * ratio(s, c.total))
        .sum();
    (per, mean)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub f_measure: f64,
    pub beta: f64,
    pub per_class: Vec<ClassMatch>,
    /// `(cluster id, purity)`.
    pub purity: Vec<(usize, f64)>,
    pub mean_purity: f64,
    pub num_clusters: usize,
    pub evaluated: usize,
    pub unlabeled: usize,
}

pub fn evaluate(
    clustering: &Clustering,
    labels: &HashMap<String, String>,
    beta: f64,
) -> Result<EvaluationReport, EvalError> {
    let c = confusion(clustering, labels)?;
    let (per, mean) = purity(&c);
    Ok(EvaluationReport {
        f_measure: f_measure(&c, beta),
        beta,
        per_class: class_matches(&c, beta),
        purity: c.clusters.iter().copied().zip(per).collect(),
        mean_purity: mean,
        num_clusters: clustering.num_clusters,
        evaluated: c.total,
        unlabeled: c.unlabeled.len(),
    })
}

/// Number of partitions of `n` items into `k` non-empty classes (Stirling
/// number of the second kind), from `(1/k!) sum_i C(k,i) (-1)^(k-i) i^n`.
pub fn stirling_partitions(n: usize, k: usize) -> Result<BigUint, EvalError> {
    if k == 0 || k > n {
        return Err(EvalError::InvalidPartition { n, k });
    }
    let mut sum = BigInt::zero();
    let mut binom = BigInt::one();
    for i in 0..=k {
        if i > 0 {
            binom = binom * BigInt::from(k - i + 1) / BigInt::from(i);
        }
        let term = &binom * BigInt::from(i).pow(n as u32);
        if (k - i).is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let factorial: BigInt = (1..=k).map(BigInt::from).product();
    let result = sum / factorial;
    debug_assert!(!result.is_negative());
    Ok(result.to_biguint().expect("non-negative partition count"))
}

/// Lloyd's k-means (Euclidean) with seeded farthest-point initialization.
/// Excluded vectors are not clustered.
pub fn kmeans_baseline(
    vectors: &VectorSet,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Clustering, EvalError> {
    let idx: Vec<usize> = vectors.included().collect();
    if k == 0 || k > idx.len() {
        return Err(EvalError::InvalidK {
            k,
            available: idx.len(),
        });
    }
    let points: Vec<&[f64]> = idx.iter().map(|&j| vectors.vectors[j].as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| euclidean_unchecked(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let far = argmax(&nearest);
        centers.push(points[far].to_vec());
        let c = centers.last().expect("just pushed");
        for (d, p) in nearest.iter_mut().zip(&points) {
            *d = d.min(euclidean_unchecked(p, c));
        }
    }

    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut dist = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (best, d) = nearest_center(p, &centers);
            dist[i] = d;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        // reseed empty clusters from the point farthest from its center
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        for c in 0..k {
            if sizes[c] == 0 {
                let far = argmax(&dist);
                sizes[labels[far]] -= 1;
                labels[far] = c;
                sizes[c] = 1;
                dist[far] = 0.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = vectors.dim;
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, x) in sums[l].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        for c in 0..k {
            centers[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
        }
    }

    let ids: Vec<String> = idx.iter().map(|&j| vectors.doc_ids[j].clone()).collect();
    Ok(Clustering::from_labels(&ids, &labels, &centers))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = euclidean_unchecked(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Uniformly random assignment of `doc_ids` to `k` clusters; the reference
/// point a clustering has to beat.
pub fn random_assignment(doc_ids: &[String], k: usize, seed: u64) -> Clustering {
    let k = k.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = doc_ids.iter().map(|_| rng.random_range(0..k)).collect();
    Clustering::from_labels(doc_ids, &labels, &[])
}

/// Class sizes of a labeled document map, for report headers.
pub fn class_histogram(labels: &HashMap<String, String>) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for l in labels.values() {
        *h.entry(l.clone()).or_insert(0) += 1;
    }
    h
}
