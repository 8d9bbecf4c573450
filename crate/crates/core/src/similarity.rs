//! Euclidean, Minkowski-4 and cosine measures and the document-document matrix.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::features::VectorSet;
use crate::ngram::csv_field;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("vectors must have at least one coordinate")]
    Empty,
    #[error("unknown metric {0:?} (expected euclidean, minkowski4 or cosine)")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Euclidean,
    Minkowski4,
    Cosine,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Cosine, Metric::Euclidean, Metric::Minkowski4];

    /// Cosine is a similarity (higher is closer); the others are distances.
    pub fn is_similarity(self) -> bool {
        matches!(self, Metric::Cosine)
    }

    /// Value of a vector against itself.
    pub fn self_value(self) -> f64 {
        if self.is_similarity() {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Minkowski4 => "minkowski4",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "minkowski4" | "minkowski-4" => Ok(Metric::Minkowski4),
            "cosine" => Ok(Metric::Cosine),
            other => Err(SimilarityError::UnknownMetric(other.to_string())),
        }
    }
}

const PAIRWISE_BLOCK: usize = 64;

/// Sums `term(i)` for `i` in `0..len` by recursive halving.
pub(crate) fn pairwise_sum(len: usize, term: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            (lo..hi).map(term).sum()
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, len, term)
}

fn check(u: &[f64], v: &[f64]) -> Result<(), SimilarityError> {
    if u.len() != v.len() {
        return Err(SimilarityError::DimensionMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(SimilarityError::Empty);
    }
    Ok(())
}

pub(crate) fn euclidean_unchecked(u: &[f64], v: &[f64]) -> f64 {
    pairwise_sum(u.len(), &|k| {
        let d = u[k] - v[k];
        d * d
    })
    .sqrt()
}

pub(crate) fn minkowski4_unchecked(u: &[f64], v: &[f64]) -> f64 {
    pairwise_sum(u.len(), &|k| {
        let d = u[k] - v[k];
        let d2 = d * d;
        d2 * d2
    })
    .sqrt()
    .sqrt()
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    pairwise_sum(u.len(), &|k| u[k] * v[k])
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine from precomputed norms; 0 when either norm is 0.
pub(crate) fn cosine_with_norms(u: &[f64], v: &[f64], nu: f64, nv: f64) -> f64 {
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

pub(crate) fn measure_unchecked(metric: Metric, u: &[f64], v: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => euclidean_unchecked(u, v),
        Metric::Minkowski4 => minkowski4_unchecked(u, v),
        Metric::Cosine => cosine_with_norms(u, v, norm(u), norm(v)),
    }
}

/// Distance (or cosine similarity) between two vectors. Cosine with a
/// zero-norm operand is 0.
pub fn distance(metric: Metric, u: &[f64], v: &[f64]) -> Result<f64, SimilarityError> {
    check(u, v)?;
    Ok(measure_unchecked(metric, u, v))
}

/// General Minkowski distance of order `p`.
pub fn minkowski(u: &[f64], v: &[f64], p: f64) -> Result<f64, SimilarityError> {
    check(u, v)?;
    Ok(pairwise_sum(u.len(), &|k| (u[k] - v[k]).abs().powf(p)).powf(1.0 / p))
}

/// Symmetric N x N matrix of pairwise values, stored in full.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub metric: Metric,
    pub doc_index: Vec<String>,
    values: Vec<f64>,
    /// Documents with a zero vector; their cosine against anything is 0.
    pub zero_vectors: Vec<usize>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.doc_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_index.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.len()..(i + 1) * self.len()]
    }

    /// Header of document ids, then one row per document.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<String> = self.doc_index.iter().map(|s| csv_field(s)).collect();
        writeln!(out, "doc_id,{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{}", header[i], row.join(","))?;
        }
        Ok(())
    }
}

/// Computes the upper triangle row by row (in parallel) and mirrors it.
pub fn similarity_matrix(
    vectors: &VectorSet,
    metric: Metric,
) -> Result<SimilarityMatrix, SimilarityError> {
    let n = vectors.len();
    if let Some(bad) = vectors.vectors.iter().find(|v| v.len() != vectors.dim) {
        return Err(SimilarityError::DimensionMismatch(vectors.dim, bad.len()));
    }
    if vectors.dim == 0 && n > 0 {
        return Err(SimilarityError::Empty);
    }
    let norms: Vec<f64> = vectors.vectors.iter().map(|v| norm(v)).collect();
    let zero_vectors: Vec<usize> = (0..n).filter(|&i| norms[i] == 0.0).collect();

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = &vectors.vectors[i];
            (i + 1..n)
                .map(|j| {
                    let v = &vectors.vectors[j];
                    match metric {
                        Metric::Cosine => cosine_with_norms(u, v, norms[i], norms[j]),
                        _ => measure_unchecked(metric, u, v),
                    }
                })
                .collect()
        })
        .collect();

    let mut values = vec![0.0; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        values[i * n + i] = if metric.is_similarity() && norms[i] == 0.0 {
            0.0
        } else {
            metric.self_value()
        };
        for (off, x) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = x;
            values[j * n + i] = x;
        }
    }
    if metric.is_similarity() && !zero_vectors.is_empty() {
        log::warn!(
            "{} zero vectors; their cosine is reported as 0",
            zero_vectors.len()
        );
    }
    Ok(SimilarityMatrix {
        metric,
        doc_index: vectors.doc_ids.clone(),
        values,
        zero_vectors,
    })
}
