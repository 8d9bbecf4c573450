//! Corpus ingestion: Reuters-style SGML files and plaintext directory trees.
//!
//! Input is treated as 8-bit text. Every byte maps to the Unicode scalar of
//! the same value, so parsing never fails on encoding grounds.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use walkdir::WalkDir;

/// Label given to documents without a usable class.
pub const UNLABELED: &str = "unlabeled";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus directory {path}: {source}")]
    UnreadableDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus path {0} does not exist")]
    Missing(PathBuf),
    #[error("per-source sample size must be at least 1")]
    InvalidSampleSize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub body: String,
    pub label: String,
    /// Source file (SGML) or directory (plaintext) the record came from.
    pub source: String,
    /// False when the record carried no body element at all.
    pub has_body: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    /// Record ordinal (SGML) or file path (plaintext).
    pub locator: String,
    pub reason: String,
}

/// One manifest line per source: how many records were read and which were
/// skipped, with reasons.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ManifestEntry {
    pub source: String,
    pub records_read: usize,
    pub skipped: Vec<SkippedRecord>,
    pub notes: Vec<String>,
}

impl ManifestEntry {
    fn new(source: &str) -> Self {
        ManifestEntry {
            source: source.to_string(),
            ..Default::default()
        }
    }

    pub fn records_skipped(&self) -> usize {
        self.skipped.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DocumentSet {
    pub documents: Vec<Document>,
    pub source_manifest: Vec<ManifestEntry>,
}

impl DocumentSet {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Document id to class label.
    pub fn labels(&self) -> HashMap<String, String> {
        self.documents
            .iter()
            .map(|d| (d.id.clone(), d.label.clone()))
            .collect()
    }

    /// Sources in order of first appearance together with their document indices.
    pub fn by_source(&self) -> Vec<(String, Vec<usize>)> {
        let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
        let mut position: HashMap<&str, usize> = HashMap::new();
        for (i, doc) in self.documents.iter().enumerate() {
            let slot = *position.entry(doc.source.as_str()).or_insert_with(|| {
                groups.push((doc.source.clone(), Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(i);
        }
        groups
    }
}

fn latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

fn find_from(haystack: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    if from >= haystack.len() || needle.is_empty() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

/// Finds `<name` followed by whitespace, `>` or `/`. `lower` must already be
/// ASCII-lowercased and `name` lowercase.
fn find_open_tag(lower: &[u8], name: &str, from: usize) -> Option<usize> {
    let pat = format!("<{name}");
    let mut at = from;
    while let Some(p) = find_from(lower, pat.as_bytes(), at) {
        match lower.get(p + pat.len()) {
            Some(b'>') | Some(b'/') => return Some(p),
            Some(c) if c.is_ascii_whitespace() => return Some(p),
            None => return None,
            _ => at = p + 1,
        }
    }
    None
}

fn find_close_tag(lower: &[u8], name: &str, from: usize) -> Option<(usize, usize)> {
    let pat = format!("</{name}");
    let mut at = from;
    while let Some(p) = find_from(lower, pat.as_bytes(), at) {
        let mut q = p + pat.len();
        while q < lower.len() && lower[q].is_ascii_whitespace() {
            q += 1;
        }
        if lower.get(q) == Some(&b'>') {
            return Some((p, q + 1));
        }
        at = p + 1;
    }
    None
}

/// Content between `<name ...>` and `</name>` inside `range`, as a byte range.
/// A missing close tag extends the element to the end of the range.
fn element_content(lower: &[u8], name: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let open = find_open_tag(&lower[..end], name, start)?;
    let tag_end = find_from(&lower[..end], b">", open)? + 1;
    let close = find_close_tag(&lower[..end], name, tag_end)
        .map(|(p, _)| p)
        .unwrap_or(end);
    Some((tag_end, close))
}

/// Removes markup and decodes `&amp;`, `&lt;`, `&gt;`. Other entities are dropped.
fn strip_markup(raw: &[u8]) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        match raw[i] {
            b'<' => match find_from(raw, b">", i) {
                Some(end) => i = end + 1,
                None => break,
            },
            b'&' => {
                let name_end = raw[i + 1..]
                    .iter()
                    .take(12)
                    .position(|&c| c == b';')
                    .map(|p| i + 1 + p);
                match name_end {
                    Some(semi)
                        if semi > i + 1
                            && raw[i + 1..semi]
                                .iter()
                                .all(|c| c.is_ascii_alphanumeric() || *c == b'#') =>
                    {
                        match raw[i + 1..semi].to_ascii_lowercase().as_slice() {
                            b"amp" => out.push('&'),
                            b"lt" => out.push('<'),
                            b"gt" => out.push('>'),
                            _ => {}
                        }
                        i = semi + 1;
                    }
                    _ => {
                        out.push('&');
                        i += 1;
                    }
                }
            }
            b => {
                out.push(b as char);
                i += 1;
            }
        }
    }
    out
}

fn topics(raw: &[u8], lower: &[u8], start: usize, end: usize) -> Vec<String> {
    let Some((t0, t1)) = element_content(lower, "topics", start, end) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut at = t0;
    while let Some((d0, d1)) = element_content(lower, "d", at, t1) {
        let topic = strip_markup(&raw[d0..d1]).trim().to_string();
        if !topic.is_empty() {
            out.push(topic);
        }
        at = d1.max(d0 + 1);
    }
    out
}

/// Parses every `<REUTERS>` record in `bytes`.
///
/// Malformed records are skipped and listed in the returned manifest entry.
pub fn parse_sgml_corpus(bytes: &[u8], source_name: &str) -> (Vec<Document>, ManifestEntry) {
    let lower = bytes.to_ascii_lowercase();
    let mut manifest = ManifestEntry::new(source_name);
    let mut docs = Vec::new();
    let mut pos = 0;
    let mut ordinal = 0usize;

    while let Some(open) = find_open_tag(&lower, "reuters", pos) {
        ordinal += 1;
        let Some(tag_end) = find_from(&lower, b">", open).map(|p| p + 1) else {
            manifest.skipped.push(SkippedRecord {
                locator: ordinal.to_string(),
                reason: "unterminated record start tag".into(),
            });
            break;
        };
        let close = find_close_tag(&lower, "reuters", tag_end);
        let next_open = find_open_tag(&lower, "reuters", tag_end);
        let (content_end, after) = match (close, next_open) {
            (Some((c, _)), Some(n)) if n < c => {
                manifest.skipped.push(SkippedRecord {
                    locator: ordinal.to_string(),
                    reason: "missing closing record tag".into(),
                });
                pos = n;
                continue;
            }
            (Some(c), _) => c,
            (None, next) => {
                manifest.skipped.push(SkippedRecord {
                    locator: ordinal.to_string(),
                    reason: "missing closing record tag".into(),
                });
                match next {
                    Some(n) => {
                        pos = n;
                        continue;
                    }
                    None => break,
                }
            }
        };

        let (body, has_body) = match element_content(&lower, "body", tag_end, content_end) {
            Some((b0, b1)) => (strip_markup(&bytes[b0..b1]), true),
            None => (String::new(), false),
        };
        let mut topic_list = topics(bytes, &lower, tag_end, content_end);
        let id = format!("{source_name}:{ordinal}");
        let label = if topic_list.is_empty() {
            UNLABELED.to_string()
        } else {
            topic_list.remove(0)
        };
        if !topic_list.is_empty() {
            manifest.notes.push(format!(
                "{id}: extra topics ignored: {}",
                topic_list.join(",")
            ));
        }
        docs.push(Document {
            id,
            body,
            label,
            source: source_name.to_string(),
            has_body,
        });
        pos = after;
    }

    manifest.records_read = docs.len();
    if ordinal == 0 {
        manifest.notes.push("no records found".into());
    }
    (docs, manifest)
}

/// Loads SGML records from a single file or from every `*.sgm` file of a
/// directory (lexicographic order).
pub fn load_sgml(path: &Path) -> Result<DocumentSet, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::Missing(path.to_path_buf()));
    }
    let files: Vec<PathBuf> = if path.is_dir() {
        let entries = fs::read_dir(path).map_err(|source| CorpusError::UnreadableDir {
            path: path.to_path_buf(),
            source,
        })?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .map(|e| e.eq_ignore_ascii_case("sgm"))
                        .unwrap_or(false)
            })
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };

    let mut set = DocumentSet::default();
    for file in files {
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.display().to_string());
        match fs::read(&file) {
            Ok(bytes) => {
                let (docs, entry) = parse_sgml_corpus(&bytes, &name);
                set.documents.extend(docs);
                set.source_manifest.push(entry);
            }
            Err(e) => {
                log::warn!("skipping unreadable file {}: {e}", file.display());
                let mut entry = ManifestEntry::new(&name);
                entry.skipped.push(SkippedRecord {
                    locator: file.display().to_string(),
                    reason: format!("unreadable file: {e}"),
                });
                set.source_manifest.push(entry);
            }
        }
    }
    Ok(set)
}

/// One document per file. Files inside a subdirectory take the directory's
/// name as their label; files directly under `path` are unlabeled.
pub fn load_plaintext_dir(path: &Path) -> Result<DocumentSet, CorpusError> {
    fs::read_dir(path).map_err(|source| CorpusError::UnreadableDir {
        path: path.to_path_buf(),
        source,
    })?;

    let mut set = DocumentSet::default();
    let mut entry_of: HashMap<String, usize> = HashMap::new();
    let mut entry_for = |set: &mut DocumentSet, source: &str| -> usize {
        *entry_of.entry(source.to_string()).or_insert_with(|| {
            set.source_manifest.push(ManifestEntry::new(source));
            set.source_manifest.len() - 1
        })
    };

    for item in WalkDir::new(path).min_depth(1).sort_by_file_name() {
        let item = match item {
            Ok(item) => item,
            Err(e) => {
                let locator = e
                    .path()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default();
                let slot = entry_for(&mut set, ".");
                set.source_manifest[slot].skipped.push(SkippedRecord {
                    locator,
                    reason: format!("unreadable entry: {e}"),
                });
                continue;
            }
        };
        if !item.file_type().is_file() {
            continue;
        }
        let rel = item.path().strip_prefix(path).unwrap_or(item.path());
        let rel_str = rel.to_string_lossy().replace('\\', "/");
        let (source, label) = match rel.parent().filter(|p| !p.as_os_str().is_empty()) {
            Some(parent) => {
                let label = parent
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| UNLABELED.to_string());
                (parent.to_string_lossy().replace('\\', "/"), label)
            }
            None => (".".to_string(), UNLABELED.to_string()),
        };
        let slot = entry_for(&mut set, &source);
        match fs::read(item.path()) {
            Ok(bytes) => {
                set.documents.push(Document {
                    id: rel_str,
                    body: latin1(&bytes),
                    label,
                    source,
                    has_body: true,
                });
                set.source_manifest[slot].records_read += 1;
            }
            Err(e) => set.source_manifest[slot].skipped.push(SkippedRecord {
                locator: rel_str,
                reason: format!("unreadable file: {e}"),
            }),
        }
    }
    Ok(set)
}

/// Takes `min(per_source, available)` documents from every source, chosen
/// uniformly with a seeded stream and kept in their original order.
pub fn sample_subset(
    set: &DocumentSet,
    per_source: usize,
    seed: u64,
) -> Result<DocumentSet, CorpusError> {
    if per_source == 0 {
        return Err(CorpusError::InvalidSampleSize);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::new();
    for (_, indices) in set.by_source() {
        if indices.len() <= per_source {
            documents.extend(indices.iter().map(|&i| set.documents[i].clone()));
            continue;
        }
        let mut picked = rand::seq::index::sample(&mut rng, indices.len(), per_source).into_vec();
        picked.sort_unstable();
        documents.extend(
            picked
                .into_iter()
                .map(|p| set.documents[indices[p]].clone()),
        );
    }
    Ok(DocumentSet {
        documents,
        source_manifest: set.source_manifest.clone(),
    })
}
