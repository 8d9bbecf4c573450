use std::io::{self, Write};

use super::{raw_value, separation, AISParams, Antigen, ImmuneError, Repertoire};
use crate::ngram::csv_field;

/// Document-to-cluster assignment. Cluster ids run from 0 to
/// `num_clusters - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `(doc_id, cluster_id)` in antigen order.
    pub assignment: Vec<(String, usize)>,
    /// Center vector of each cluster id.
    pub centers: Vec<Vec<f64>>,
    pub num_clusters: usize,
}

impl Clustering {
    /// Builds a clustering from raw labels, renumbering them densely in order
    /// of first appearance.
    pub fn from_labels(doc_ids: &[String], labels: &[usize], centers: &[Vec<f64>]) -> Self {
        let mut remap = vec![usize::MAX; labels.iter().max().map_or(0, |m| m + 1)];
        let mut dense_centers = Vec::new();
        let assignment = doc_ids
            .iter()
            .zip(labels)
            .map(|(id, &l)| {
                if remap[l] == usize::MAX {
                    remap[l] = dense_centers.len();
                    dense_centers.push(centers.get(l).cloned().unwrap_or_default());
                }
                (id.clone(), remap[l])
            })
            .collect();
        Clustering {
            assignment,
            num_clusters: dense_centers.len(),
            centers: dense_centers,
        }
    }

    pub fn cluster_of(&self, doc_id: &str) -> Option<usize> {
        self.assignment
            .iter()
            .find(|(d, _)| d == doc_id)
            .map(|&(_, c)| c)
    }

    /// One `doc_id<TAB>cluster_id` line per document.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (doc, c) in &self.assignment {
            writeln!(out, "{doc}\t{c}")?;
        }
        Ok(())
    }

    /// `cluster_id,c0,c1,...` per center.
    pub fn write_centers_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (c, v) in self.centers.iter().enumerate() {
            let coords: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{}", csv_field(&c.to_string()), coords.join(","))?;
        }
        Ok(())
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Turns a repertoire into clusters.
///
/// Antibodies within the suppression threshold of each other are linked into
/// connected components; each antigen joins the component of its nearest
/// antibody (ties go to the lower component id). Components that attract no
/// antigen are dropped.
pub fn extract_clusters(
    rep: &Repertoire,
    antigens: &[Antigen],
    params: &AISParams,
) -> Result<Clustering, ImmuneError> {
    if rep.is_empty() {
        return Err(ImmuneError::EmptyRepertoire);
    }
    let abs = &rep.antibodies;
    let n = abs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if separation(params.metric, &abs[i], &abs[j]) <= params.suppression_threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    // keep the smaller index as root so component ids follow repertoire order
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut num_components = 0;
    let mut root_component = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_component[r] == usize::MAX {
            root_component[r] = num_components;
            num_components += 1;
        }
        component[i] = root_component[r];
    }

    // representative: highest-priority member of each component
    let mut representative: Vec<Option<usize>> = vec![None; num_components];
    for i in 0..n {
        let slot = &mut representative[component[i]];
        match slot {
            Some(r) if abs[*r].priority_cmp(&abs[i]).is_le() => {}
            _ => *slot = Some(i),
        }
    }
    let centers: Vec<Vec<f64>> = representative
        .iter()
        .map(|r| abs[r.expect("non-empty component")].vector.clone())
        .collect();

    let similarity = params.metric.is_similarity();
    let labels: Vec<usize> = antigens
        .iter()
        .map(|g| {
            let mut best: Option<(f64, usize)> = None;
            for (i, ab) in abs.iter().enumerate() {
                let v = raw_value(params.metric, ab, g);
                let c = component[i];
                best = match best {
                    None => Some((v, c)),
                    Some((bv, bc)) => {
                        let better = if similarity { v > bv } else { v < bv };
                        if better || (v == bv && c < bc) {
                            Some((v, c))
                        } else {
                            Some((bv, bc))
                        }
                    }
                };
            }
            best.expect("non-empty repertoire").1
        })
        .collect();

    // dense renumbering in component order
    let mut used = vec![false; num_components];
    for &l in &labels {
        used[l] = true;
    }
    let mut dense = vec![usize::MAX; num_components];
    let mut dense_centers = Vec::new();
    for c in 0..num_components {
        if used[c] {
            dense[c] = dense_centers.len();
            dense_centers.push(centers[c].clone());
        }
    }
    Ok(Clustering {
        assignment: antigens
            .iter()
            .zip(&labels)
            .map(|(g, &l)| (g.doc_id.clone(), dense[l]))
            .collect(),
        num_clusters: dense_centers.len(),
        centers: dense_centers,
    })
}
