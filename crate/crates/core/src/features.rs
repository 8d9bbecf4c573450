//! Chi-square term selection and TF-IDF / TFC document weighting.

use std::io::{self, Write};

use thiserror::Error;

use crate::ngram::{csv_field, TermDocMatrix, Vocabulary};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("term-document matrix is empty")]
    EmptyMatrix,
    #[error("term {0} has a zero row total")]
    ZeroRow(usize),
    #[error("included document {0} has a zero column total")]
    ZeroColumn(String),
    #[error("k per document must be at least 1")]
    ZeroK,
    #[error("logarithm base must be positive and different from 1")]
    BadLogBase,
}

/// Per-cell chi-square contributions, stored column-major (one column per
/// document).
#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Table {
    num_terms: usize,
    num_docs: usize,
    scores: Vec<f64>,
}

impl Chi2Table {
    pub fn get(&self, term: usize, doc: usize) -> f64 {
        self.scores[doc * self.num_terms + term]
    }

    pub fn column(&self, doc: usize) -> &[f64] {
        &self.scores[doc * self.num_terms..(doc + 1) * self.num_terms]
    }

    pub fn num_terms(&self) -> usize {
        self.num_terms
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }
}

/// Chi-square contribution of every (gram, document) cell:
/// `(N_ij - E_ij)^2 / E_ij` with `E_ij = N_i. * N_.j / N`.
///
/// Columns of excluded documents score 0.
pub fn chi2_scores(m: &TermDocMatrix) -> Result<Chi2Table, FeatureError> {
    let total = m.grand_total();
    if total == 0 {
        return Err(FeatureError::EmptyMatrix);
    }
    if let Some(i) = m.row_totals().iter().position(|&r| r == 0) {
        return Err(FeatureError::ZeroRow(i));
    }
    let num_terms = m.num_terms();
    let mut scores = vec![0.0; num_terms * m.num_docs()];
    let total = total as f64;
    let row_share: Vec<f64> = m.row_totals().iter().map(|&r| r as f64 / total).collect();

    for j in m.included() {
        let col_total = m.col_totals()[j];
        if col_total == 0 {
            return Err(FeatureError::ZeroColumn(m.doc_ids()[j].clone()));
        }
        let col_total = col_total as f64;
        let out = &mut scores[j * num_terms..(j + 1) * num_terms];
        // an unobserved cell contributes (0 - E)^2 / E = E
        for (o, share) in out.iter_mut().zip(&row_share) {
            *o = share * col_total;
        }
        for &(i, count) in m.column(j) {
            let expected = row_share[i] * col_total;
            let diff = count as f64 - expected;
            out[i] = diff * diff / expected;
        }
    }
    Ok(Chi2Table {
        num_terms,
        num_docs: m.num_docs(),
        scores,
    })
}

/// Size of the vocabulary before and after chi-square selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub n: usize,
    pub terms_before: usize,
    pub terms_after: usize,
}

impl ReductionReport {
    /// `1 - after / before`.
    pub fn rate(&self) -> f64 {
        if self.terms_before == 0 {
            0.0
        } else {
            1.0 - self.terms_after as f64 / self.terms_before as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub vocabulary: Vocabulary,
    pub report: ReductionReport,
    /// Highest score of each selected term over included documents, aligned
    /// with `vocabulary`.
    pub max_scores: Vec<f64>,
}

impl Selection {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "term,max_chi2")?;
        for (t, s) in self.vocabulary.terms().iter().zip(&self.max_scores) {
            writeln!(out, "{},{}", csv_field(t), s)?;
        }
        Ok(())
    }
}

/// For each included document keeps the `k_per_doc` grams it contains with
/// the highest chi-square score (ties go to the lexicographically smaller
/// gram). The reduced vocabulary is the union over documents.
pub fn select_terms(
    vocab: &Vocabulary,
    m: &TermDocMatrix,
    table: &Chi2Table,
    k_per_doc: usize,
) -> Result<Selection, FeatureError> {
    if k_per_doc == 0 {
        return Err(FeatureError::ZeroK);
    }
    let mut keep = vec![false; vocab.len()];
    let mut max_scores = vec![f64::NEG_INFINITY; vocab.len()];
    for j in m.included() {
        let scores = table.column(j);
        let mut candidates: Vec<usize> = m.column(j).iter().map(|&(i, _)| i).collect();
        // terms are indexed in lexicographic order, so the index is the tie key
        candidates.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        for &i in candidates.iter().take(k_per_doc) {
            keep[i] = true;
        }
        for &(i, _) in m.column(j) {
            max_scores[i] = max_scores[i].max(scores[i]);
        }
    }
    let selected: Vec<usize> = (0..vocab.len()).filter(|&i| keep[i]).collect();
    let vocabulary = Vocabulary::new(
        vocab.n(),
        selected.iter().map(|&i| vocab.term(i).to_string()),
    );
    Ok(Selection {
        report: ReductionReport {
            n: vocab.n(),
            terms_before: vocab.len(),
            terms_after: vocabulary.len(),
        },
        max_scores: selected.iter().map(|&i| max_scores[i]).collect(),
        vocabulary,
    })
}

/// Sparse standardized TF x IDF weights, one column per document.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    pub num_terms: usize,
    pub doc_ids: Vec<String>,
    pub columns: Vec<Vec<(usize, f64)>>,
    pub excluded: Vec<usize>,
}

impl WeightedMatrix {
    pub fn get(&self, term: usize, doc: usize) -> f64 {
        self.columns[doc]
            .iter()
            .find(|&&(i, _)| i == term)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    }
}

/// `(n_ij / sum_i n_ij) * ln(N_docs / DF_i)` over included documents.
pub fn tfidf_weight(m: &TermDocMatrix) -> Result<WeightedMatrix, FeatureError> {
    weight_with(m, f64::ln)
}

/// Same as [`tfidf_weight`] with a logarithm of the given base.
pub fn tfidf_weight_base(m: &TermDocMatrix, base: f64) -> Result<WeightedMatrix, FeatureError> {
    if base <= 0.0 || base == 1.0 || !base.is_finite() {
        return Err(FeatureError::BadLogBase);
    }
    let ln_base = base.ln();
    weight_with(m, |x| x.ln() / ln_base)
}

fn weight_with(
    m: &TermDocMatrix,
    log: impl Fn(f64) -> f64,
) -> Result<WeightedMatrix, FeatureError> {
    let included: Vec<usize> = m.included().collect();
    let mut df = vec![0usize; m.num_terms()];
    for &j in &included {
        let col_total = m.col_totals()[j];
        if col_total == 0 {
            return Err(FeatureError::ZeroColumn(m.doc_ids()[j].clone()));
        }
        for &(i, _) in m.column(j) {
            df[i] += 1;
        }
    }
    let num_docs = included.len() as f64;
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| {
            if d == 0 {
                0.0
            } else {
                log(num_docs / d as f64)
            }
        })
        .collect();

    let mut columns = vec![Vec::new(); m.num_docs()];
    for &j in &included {
        let col_total = m.col_totals()[j] as f64;
        columns[j] = m
            .column(j)
            .iter()
            .map(|&(i, c)| (i, c as f64 / col_total * idf[i]))
            .filter(|&(_, w)| w != 0.0)
            .collect();
    }
    Ok(WeightedMatrix {
        num_terms: m.num_terms(),
        doc_ids: m.doc_ids().to_vec(),
        columns,
        excluded: m.excluded().to_vec(),
    })
}

/// Dense document vectors of one shared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    pub dim: usize,
    pub doc_ids: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    /// Indices of documents whose vector is zero.
    pub excluded: Vec<usize>,
}

impl VectorSet {
    /// Wraps raw vectors, marking zero vectors as excluded.
    pub fn from_vectors(doc_ids: Vec<String>, vectors: Vec<Vec<f64>>) -> Self {
        assert_eq!(doc_ids.len(), vectors.len());
        let dim = vectors.first().map(Vec::len).unwrap_or(0);
        assert!(
            vectors.iter().all(|v| v.len() == dim),
            "vectors must share one dimension"
        );
        let excluded = vectors
            .iter()
            .enumerate()
            .filter(|(_, v)| v.iter().all(|&x| x == 0.0))
            .map(|(j, _)| j)
            .collect();
        VectorSet {
            dim,
            doc_ids,
            vectors,
            excluded,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_excluded(&self, j: usize) -> bool {
        self.excluded.binary_search(&j).is_ok()
    }

    pub fn included(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| !self.is_excluded(j))
    }

    pub fn excluded_ids(&self) -> Vec<&str> {
        self.excluded
            .iter()
            .map(|&j| self.doc_ids[j].as_str())
            .collect()
    }
}

/// Divides every document vector by its L2 norm. Zero vectors stay zero and
/// are listed as excluded.
pub fn tfc_normalize(w: &WeightedMatrix) -> VectorSet {
    let mut vectors = Vec::with_capacity(w.columns.len());
    let mut excluded = Vec::new();
    for (j, col) in w.columns.iter().enumerate() {
        let mut v = vec![0.0; w.num_terms];
        let norm = col.iter().map(|&(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            for &(i, x) in col {
                v[i] = x / norm;
            }
        } else {
            excluded.push(j);
        }
        vectors.push(v);
    }
    VectorSet {
        dim: w.num_terms,
        doc_ids: w.doc_ids.clone(),
        vectors,
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|j| format!("d{j}")).collect()
    }

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::new(
            2,
            (0..n).map(|i| {
                format!(
                    "{}{}",
                    (b'a' + (i / 26) as u8) as char,
                    (b'a' + (i % 26) as u8) as char
                )
            }),
        )
    }

    #[test]
    fn chi2_diagonal() {
        let m = TermDocMatrix::from_dense(&[vec![1, 0], vec![0, 1]], ids(2));
        let t = chi2_scores(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((t.get(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn chi2_independent() {
        let m = TermDocMatrix::from_dense(&[vec![2, 2], vec![2, 2]], ids(2));
        let t = chi2_scores(&m).unwrap();
        assert!(t.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn chi2_excluded_column_scores_zero() {
        let m = TermDocMatrix::from_dense(&[vec![1, 0, 3], vec![2, 0, 1]], ids(3));
        let t = chi2_scores(&m).unwrap();
        assert_eq!(t.column(1), &[0.0, 0.0]);
    }

    #[test]
    fn chi2_zero_row_rejected() {
        let m = TermDocMatrix::from_dense(&[vec![1, 1], vec![0, 0]], ids(2));
        assert_eq!(chi2_scores(&m).unwrap_err(), FeatureError::ZeroRow(1));
    }

    #[test]
    fn chi2_zero_column_after_restrict_rejected() {
        let full = TermDocMatrix::from_dense(&[vec![1, 0], vec![0, 1]], ids(2));
        let v = vocab(2);
        let reduced = Vocabulary::new(2, [v.term(0).to_string()]);
        let r = full.restrict(&v, &reduced);
        assert_eq!(
            chi2_scores(&r).unwrap_err(),
            FeatureError::ZeroColumn("d1".into())
        );
        assert_eq!(
            tfidf_weight(&r).unwrap_err(),
            FeatureError::ZeroColumn("d1".into())
        );
    }

    #[test]
    fn select_each_docs_top_term() {
        let m = TermDocMatrix::from_dense(&[vec![1, 0], vec![0, 1]], ids(2));
        let t = chi2_scores(&m).unwrap();
        let s = select_terms(&vocab(2), &m, &t, 1).unwrap();
        assert_eq!(s.vocabulary.len(), 2);
        assert_eq!(s.report.rate(), 0.0);
    }

    #[test]
    fn select_large_k_is_identity() {
        let m = TermDocMatrix::from_dense(&[vec![1, 2, 0], vec![0, 1, 1], vec![4, 0, 1]], ids(3));
        let t = chi2_scores(&m).unwrap();
        let v = vocab(3);
        let s = select_terms(&v, &m, &t, 10).unwrap();
        assert_eq!(s.vocabulary, v);
        assert_eq!(s.report.rate(), 0.0);
        assert!(select_terms(&v, &m, &t, 0).is_err());
    }

    #[test]
    fn select_ties_break_lexicographically() {
        // both terms score identically in the single-document column
        let m = TermDocMatrix::from_dense(&[vec![1, 1], vec![1, 1]], ids(2));
        let t = chi2_scores(&m).unwrap();
        let s = select_terms(&vocab(2), &m, &t, 1).unwrap();
        assert_eq!(s.vocabulary.terms(), &["aa".to_string()]);
        assert_eq!(s.report.rate(), 0.5);
    }

    #[test]
    fn tfidf_formula() {
        // term 0: count 2 in doc 0 only; doc 0 total 10; 4 documents
        let counts = vec![vec![2, 0, 0, 0], vec![8, 1, 1, 1], vec![0, 1, 1, 1]];
        let m = TermDocMatrix::from_dense(&counts, ids(4));
        let w = tfidf_weight(&m).unwrap();
        assert!((w.get(0, 0) - 0.2 * 4f64.ln()).abs() < 1e-15);
        assert!((w.get(0, 0) - 0.277_258_872_223_978_1).abs() < 1e-12);
        // term 1 occurs everywhere
        for j in 0..4 {
            assert_eq!(w.get(1, j), 0.0);
        }
    }

    #[test]
    fn tfidf_ratio_invariance() {
        let a = TermDocMatrix::from_dense(&[vec![1, 0, 2], vec![3, 1, 0], vec![0, 2, 2]], ids(3));
        let b = TermDocMatrix::from_dense(&[vec![2, 0, 2], vec![6, 1, 0], vec![0, 2, 2]], ids(3));
        let (wa, wb) = (tfidf_weight(&a).unwrap(), tfidf_weight(&b).unwrap());
        for i in 0..3 {
            assert!((wa.get(i, 0) - wb.get(i, 0)).abs() < 1e-15);
        }
    }

    #[test]
    fn tfc_examples() {
        let w = WeightedMatrix {
            num_terms: 2,
            doc_ids: ids(3),
            columns: vec![vec![(0, 3.0), (1, 4.0)], vec![], vec![(0, 0.6), (1, 0.8)]],
            excluded: vec![],
        };
        let v = tfc_normalize(&w);
        assert!((v.vectors[0][0] - 0.6).abs() < 1e-15 && (v.vectors[0][1] - 0.8).abs() < 1e-15);
        assert_eq!(v.vectors[1], vec![0.0, 0.0]);
        assert_eq!(v.excluded, vec![1]);
        assert_eq!(v.excluded_ids(), vec!["d1"]);
        assert!((v.vectors[2][0] - 0.6).abs() < 1e-15 && (v.vectors[2][1] - 0.8).abs() < 1e-15);
    }

    fn small_matrix() -> impl Strategy<Value = Vec<Vec<u64>>> {
        (1usize..=8, 1usize..=8).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(0u64..=5, c), r)
        })
    }

    proptest! {
        #[test]
        fn selection_is_monotone(counts in small_matrix(), k in 1usize..5) {
            let m = TermDocMatrix::from_dense(&counts, ids(counts[0].len()));
            prop_assume!(m.row_totals().iter().all(|&r| r > 0));
            let v = vocab(counts.len());
            let t = chi2_scores(&m).unwrap();
            let small = select_terms(&v, &m, &t, k).unwrap();
            let big = select_terms(&v, &m, &t, k + 1).unwrap();
            for term in small.vocabulary.terms() {
                prop_assert!(big.vocabulary.index_of(term).is_some());
            }
            prop_assert!(big.report.rate() <= small.report.rate());
        }

        #[test]
        fn tfc_unit_norm(counts in small_matrix()) {
            let m = TermDocMatrix::from_dense(&counts, ids(counts[0].len()));
            let vs = tfc_normalize(&tfidf_weight(&m).unwrap());
            for j in vs.included() {
                let norm = vs.vectors[j].iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-9);
                prop_assert!(vs.vectors[j].iter().all(|&x| x >= 0.0));
            }
        }
    }
}
