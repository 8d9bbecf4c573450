//! Character n-grams and the sparse term-document count matrix.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use thiserror::Error;

use crate::corpus::DocumentSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NgramError {
    #[error("gram length must be at least 1")]
    ZeroLength,
    #[error("no document yields a {0}-gram")]
    NoGrams(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizationOptions {
    pub fold_case: bool,
    pub strip_punctuation: bool,
}

impl Default for NormalizationOptions {
    fn default() -> Self {
        NormalizationOptions {
            fold_case: true,
            strip_punctuation: true,
        }
    }
}

/// Collapses whitespace runs to a single `-`, trims the ends and optionally
/// lowercases and drops anything that is not a letter, digit or `-`.
pub fn normalize_text(raw: &str, opts: NormalizationOptions) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if opts.strip_punctuation && !(c.is_alphanumeric() || c == '-') {
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push('-');
        }
        pending_space = false;
        if opts.fold_case {
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// All windows of `n` consecutive characters, in order. No boundary padding.
pub fn extract_ngrams(text: &str, n: usize) -> Vec<String> {
    if n == 0 {
        return Vec::new();
    }
    let chars: Vec<char> = text.chars().collect();
    if chars.len() < n {
        return Vec::new();
    }
    chars.windows(n).map(|w| w.iter().collect()).collect()
}

/// Sorted list of distinct grams of one length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    n: usize,
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from arbitrary grams; duplicates are merged and the
    /// result sorted.
    pub fn new(n: usize, terms: impl IntoIterator<Item = String>) -> Self {
        let mut terms: Vec<String> = terms.into_iter().collect();
        terms.sort();
        terms.dedup();
        debug_assert!(terms.iter().all(|t| t.chars().count() == n));
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { n, terms, index }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }
}

/// Sparse gram-by-document occurrence counts, stored column-wise.
///
/// Each column holds `(term index, count)` pairs sorted by term index, with
/// no zero counts. Columns of excluded documents are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    num_terms: usize,
    doc_ids: Vec<String>,
    columns: Vec<Vec<(usize, u64)>>,
    row_totals: Vec<u64>,
    col_totals: Vec<u64>,
    grand_total: u64,
    excluded: Vec<usize>,
}

impl TermDocMatrix {
    /// Builds from per-document sparse columns. Columns are sorted and merged;
    /// zero entries dropped. Documents whose column is empty are excluded.
    pub fn from_columns(
        num_terms: usize,
        doc_ids: Vec<String>,
        columns: Vec<Vec<(usize, u64)>>,
    ) -> Self {
        assert_eq!(doc_ids.len(), columns.len());
        let columns: Vec<Vec<(usize, u64)>> = columns
            .into_iter()
            .map(|col| {
                let mut merged: BTreeMap<usize, u64> = BTreeMap::new();
                for (i, c) in col {
                    assert!(i < num_terms, "term index {i} out of range");
                    *merged.entry(i).or_default() += c;
                }
                merged.into_iter().filter(|&(_, c)| c > 0).collect()
            })
            .collect();
        let excluded = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(j, _)| j)
            .collect();
        Self::with_exclusions(num_terms, doc_ids, columns, excluded)
    }

    fn with_exclusions(
        num_terms: usize,
        doc_ids: Vec<String>,
        columns: Vec<Vec<(usize, u64)>>,
        excluded: Vec<usize>,
    ) -> Self {
        let mut row_totals = vec![0u64; num_terms];
        let mut col_totals = Vec::with_capacity(columns.len());
        for col in &columns {
            let mut total = 0;
            for &(i, c) in col {
                row_totals[i] += c;
                total += c;
            }
            col_totals.push(total);
        }
        let grand_total = col_totals.iter().sum();
        TermDocMatrix {
            num_terms,
            doc_ids,
            columns,
            row_totals,
            col_totals,
            grand_total,
            excluded,
        }
    }

    /// Dense `counts[term][doc]` convenience constructor.
    pub fn from_dense(counts: &[Vec<u64>], doc_ids: Vec<String>) -> Self {
        let num_terms = counts.len();
        let columns = (0..doc_ids.len())
            .map(|j| {
                (0..num_terms)
                    .filter(|&i| counts[i][j] > 0)
                    .map(|i| (i, counts[i][j]))
                    .collect()
            })
            .collect();
        Self::from_columns(num_terms, doc_ids, columns)
    }

    pub fn num_terms(&self) -> usize {
        self.num_terms
    }

    pub fn num_docs(&self) -> usize {
        self.columns.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn column(&self, j: usize) -> &[(usize, u64)] {
        &self.columns[j]
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        let col = &self.columns[j];
        col.binary_search_by_key(&i, |&(t, _)| t)
            .map(|p| col[p].1)
            .unwrap_or(0)
    }

    pub fn row_totals(&self) -> &[u64] {
        &self.row_totals
    }

    pub fn col_totals(&self) -> &[u64] {
        &self.col_totals
    }

    pub fn grand_total(&self) -> u64 {
        self.grand_total
    }

    /// Column indices of documents that took no part in term statistics.
    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    pub fn is_excluded(&self, j: usize) -> bool {
        self.excluded.binary_search(&j).is_ok()
    }

    pub fn included(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_docs()).filter(move |&j| !self.is_excluded(j))
    }

    /// Number of documents containing each term.
    pub fn document_frequencies(&self) -> Vec<usize> {
        let mut df = vec![0usize; self.num_terms];
        for col in &self.columns {
            for &(i, _) in col {
                df[i] += 1;
            }
        }
        df
    }

    /// Keeps only the rows of `reduced` (which must be a subset of `vocab`),
    /// re-indexed to `reduced`. The exclusion list is kept as is, so an
    /// included document may end up with an empty column.
    pub fn restrict(&self, vocab: &Vocabulary, reduced: &Vocabulary) -> TermDocMatrix {
        let remap: Vec<Option<usize>> = vocab.terms().iter().map(|t| reduced.index_of(t)).collect();
        let columns = self
            .columns
            .iter()
            .map(|col| {
                col.iter()
                    .filter_map(|&(i, c)| remap[i].map(|r| (r, c)))
                    .collect()
            })
            .collect();
        Self::with_exclusions(
            reduced.len(),
            self.doc_ids.clone(),
            columns,
            self.excluded.clone(),
        )
    }

    /// Writes `term,doc_id,count` for every nonzero cell.
    pub fn write_csv<W: Write>(&self, vocab: &Vocabulary, mut out: W) -> io::Result<()> {
        writeln!(out, "term,doc_id,count")?;
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, c) in col {
                writeln!(
                    out,
                    "{},{},{}",
                    csv_field(vocab.term(i)),
                    csv_field(&self.doc_ids[j]),
                    c
                )?;
            }
        }
        Ok(())
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Counts `n`-grams of every document. Documents yielding no gram get an
/// empty column and are reported through [`TermDocMatrix::excluded`].
pub fn build_matrix(
    docs: &DocumentSet,
    n: usize,
    opts: NormalizationOptions,
) -> Result<(Vocabulary, TermDocMatrix), NgramError> {
    if n == 0 {
        return Err(NgramError::ZeroLength);
    }
    let per_doc: Vec<HashMap<String, u64>> = docs
        .documents
        .iter()
        .map(|d| {
            let mut counts = HashMap::new();
            for g in extract_ngrams(&normalize_text(&d.body, opts), n) {
                *counts.entry(g).or_insert(0u64) += 1;
            }
            counts
        })
        .collect();

    let vocab = Vocabulary::new(n, per_doc.iter().flat_map(|m| m.keys().cloned()));
    if vocab.is_empty() {
        return Err(NgramError::NoGrams(n));
    }
    let columns = per_doc
        .into_iter()
        .map(|m| {
            m.into_iter()
                .map(|(g, c)| (vocab.index_of(&g).expect("gram in vocabulary"), c))
                .collect()
        })
        .collect();
    let ids = docs.documents.iter().map(|d| d.id.clone()).collect();
    let matrix = TermDocMatrix::from_columns(vocab.len(), ids, columns);
    Ok((vocab, matrix))
}
