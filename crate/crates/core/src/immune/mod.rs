//! Clonal-selection clustering.
//!
//! Document vectors act as antigens. They are presented one by one to a
//! repertoire of antibodies; antibodies that match an antigen are cloned with
//! affinity-inverse mutation, and antibodies that end up too close to a
//! better-stimulated one are suppressed. The sweep repeats until the
//! repertoire size stalls or the iteration budget runs out. Surviving
//! antibodies become cluster centers (see [`extract_clusters`]).

mod clusters;

pub use clusters::{extract_clusters, Clustering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::VectorSet;
use crate::similarity::{cosine_with_norms, measure_unchecked, norm, Metric};

#[derive(Debug, Error, PartialEq)]
pub enum ImmuneError {
    #[error("no antigens to present")]
    NoAntigens,
    #[error("antigen {0} has dimension {1}, expected {2}")]
    DimensionMismatch(String, usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("repertoire is empty")]
    EmptyRepertoire,
    #[error("repertoire grew to {size} antibodies, past the limit of {limit}; lower the mutation scale or the affinity threshold")]
    Diverged { size: usize, limit: usize },
}

/// Repertoire size at which [`run_ais`] gives up: ten antibodies per antigen,
/// or the initial size if that is larger.
pub fn repertoire_limit(params: &AISParams, antigens: usize) -> usize {
    (10 * antigens).max(params.initial_size(antigens))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Antigen {
    pub doc_id: String,
    pub vector: Vec<f64>,
    norm: f64,
}

impl Antigen {
    pub fn new(doc_id: impl Into<String>, vector: Vec<f64>) -> Self {
        let norm = norm(&vector);
        Antigen {
            doc_id: doc_id.into(),
            vector,
            norm,
        }
    }
}

/// Antigens for every non-excluded document of `vectors`.
pub fn antigens_from(vectors: &VectorSet) -> Vec<Antigen> {
    vectors
        .included()
        .map(|j| Antigen::new(vectors.doc_ids[j].clone(), vectors.vectors[j].clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Antibody {
    pub vector: Vec<f64>,
    /// Antigen matches since creation.
    pub stimulation: u64,
    /// Completed iterations survived.
    pub age: u64,
    /// Serial of the founder this antibody descends from.
    pub lineage: u64,
    /// Insertion order within the repertoire; assigned on insertion.
    pub serial: u64,
    norm: f64,
}

impl Antibody {
    pub fn new(vector: Vec<f64>) -> Self {
        let norm = norm(&vector);
        Antibody {
            vector,
            stimulation: 0,
            age: 0,
            lineage: 0,
            serial: 0,
            norm,
        }
    }

    fn priority_cmp(&self, other: &Antibody) -> std::cmp::Ordering {
        other
            .stimulation
            .cmp(&self.stimulation)
            .then(other.age.cmp(&self.age))
            .then(self.serial.cmp(&other.serial))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AISParams {
    pub metric: Metric,
    /// Cosine: minimum affinity for a match. Distances: maximum distance.
    pub affinity_threshold: f64,
    /// Clones per match at affinity 1.
    pub clone_budget: usize,
    /// Per-coordinate noise standard deviation at affinity 0.
    pub mutation_scale: f64,
    /// Antibodies at most this far apart (cosine: `1 - affinity`) are merged.
    pub suppression_threshold: f64,
    pub max_iterations: usize,
    pub stall_window: usize,
    /// `None` means `max(10, antigens / 10)`.
    pub initial_repertoire_size: Option<usize>,
    pub seed: u64,
}

impl AISParams {
    pub fn for_metric(metric: Metric) -> Self {
        AISParams {
            metric,
            affinity_threshold: if metric.is_similarity() { 0.90 } else { 0.75 },
            clone_budget: 5,
            mutation_scale: 0.1,
            suppression_threshold: 0.15,
            max_iterations: 50,
            stall_window: 5,
            initial_repertoire_size: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ImmuneError> {
        let bad = |msg: String| Err(ImmuneError::InvalidParams(msg));
        let tau = self.affinity_threshold;
        if self.metric.is_similarity() {
            if !(tau > 0.0 && tau <= 1.0) {
                return bad(format!(
                    "cosine affinity threshold must be in (0, 1], got {tau}"
                ));
            }
        } else if !(tau > 0.0 && tau.is_finite()) {
            return bad(format!("distance threshold must be positive, got {tau}"));
        }
        if !(self.mutation_scale >= 0.0 && self.mutation_scale.is_finite()) {
            return bad(format!(
                "mutation scale must be non-negative, got {}",
                self.mutation_scale
            ));
        }
        if !(self.suppression_threshold >= 0.0 && self.suppression_threshold.is_finite()) {
            return bad(format!(
                "suppression threshold must be non-negative, got {}",
                self.suppression_threshold
            ));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if self.stall_window == 0 {
            return bad("stall_window must be at least 1".into());
        }
        if self.initial_repertoire_size == Some(0) {
            return bad("initial repertoire size must be at least 1".into());
        }
        Ok(())
    }

    pub fn initial_size(&self, antigens: usize) -> usize {
        self.initial_repertoire_size
            .unwrap_or_else(|| (antigens / 10).max(10))
    }
}

/// Per-iteration bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationStats {
    pub iteration: usize,
    /// Repertoire size at the end of the iteration.
    pub size: usize,
    pub matches: usize,
    pub clones: usize,
    pub suppressed: usize,
    /// Antigens matched by at least one antibody after the sweep.
    pub covered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repertoire {
    pub antibodies: Vec<Antibody>,
    pub iteration: usize,
    pub history: Vec<IterationStats>,
    next_serial: u64,
    /// All members are pairwise farther apart than the suppression threshold.
    separated: bool,
}

impl Repertoire {
    pub fn new() -> Self {
        Repertoire {
            antibodies: Vec::new(),
            iteration: 0,
            history: Vec::new(),
            next_serial: 0,
            separated: true,
        }
    }

    pub fn len(&self) -> usize {
        self.antibodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antibodies.is_empty()
    }

    /// Appends an antibody, giving it the next serial. A fresh founder (one
    /// whose lineage is unset) becomes its own lineage.
    pub fn insert(&mut self, mut ab: Antibody, founder: bool) {
        ab.serial = self.next_serial;
        if founder {
            ab.lineage = ab.serial;
        }
        self.next_serial += 1;
        self.separated = false;
        self.antibodies.push(ab);
    }
}

impl Default for Repertoire {
    fn default() -> Self {
        Self::new()
    }
}

/// Affinity in `[0, 1]`: the cosine itself (negative values clamp to 0), or
/// `1 / (1 + d)` for distances.
pub fn affinity(metric: Metric, antibody: &Antibody, antigen: &Antigen) -> f64 {
    affinity_from_value(metric, raw_value(metric, antibody, antigen))
}

fn raw_value(metric: Metric, antibody: &Antibody, antigen: &Antigen) -> f64 {
    match metric {
        Metric::Cosine => cosine_with_norms(
            &antibody.vector,
            &antigen.vector,
            antibody.norm,
            antigen.norm,
        ),
        _ => measure_unchecked(metric, &antibody.vector, &antigen.vector),
    }
}

fn affinity_from_value(metric: Metric, value: f64) -> f64 {
    if metric.is_similarity() {
        value.clamp(0.0, 1.0)
    } else {
        1.0 / (1.0 + value)
    }
}

fn is_match(params: &AISParams, value: f64) -> bool {
    if params.metric.is_similarity() {
        value >= params.affinity_threshold
    } else {
        value <= params.affinity_threshold
    }
}

/// Whether `antibody` recognizes `antigen` under the threshold of `params`.
pub fn matches(antibody: &Antibody, antigen: &Antigen, params: &AISParams) -> bool {
    is_match(params, raw_value(params.metric, antibody, antigen))
}

/// Separation used by suppression: the distance, or `1 - cosine`.
pub fn separation(metric: Metric, a: &Antibody, b: &Antibody) -> f64 {
    match metric {
        Metric::Cosine => 1.0 - cosine_with_norms(&a.vector, &b.vector, a.norm, b.norm),
        _ => measure_unchecked(metric, &a.vector, &b.vector),
    }
}

/// `ceil(clone_budget * affinity)`. A tolerance of 1e-12 absorbs rounding in
/// the product so that e.g. `5 * 0.6` yields 3.
pub fn clone_count(params: &AISParams, affinity: f64) -> usize {
    let x = params.clone_budget as f64 * affinity.clamp(0.0, 1.0);
    (x - 1e-12).ceil().max(0.0) as usize
}

/// Per-coordinate noise standard deviation of a clone: `mutation_scale * (1 - affinity)`.
pub fn mutation_noise(params: &AISParams, affinity: f64) -> f64 {
    params.mutation_scale * (1.0 - affinity.clamp(0.0, 1.0))
}

fn jitter<R: Rng>(vector: &[f64], scale: f64, rng: &mut R) -> Vec<f64> {
    if scale == 0.0 {
        return vector.to_vec();
    }
    vector
        .iter()
        .map(|&x| x + scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Clones `antibody` in proportion to `affinity` and mutates every clone in
/// inverse proportion. The parent's stimulation goes up by one.
pub fn clone_and_mutate<R: Rng>(
    antibody: &mut Antibody,
    affinity: f64,
    params: &AISParams,
    rng: &mut R,
) -> Vec<Antibody> {
    antibody.stimulation += 1;
    let count = clone_count(params, affinity);
    let scale = mutation_noise(params, affinity);
    (0..count)
        .map(|_| {
            let mut clone = Antibody::new(jitter(&antibody.vector, scale, rng));
            clone.lineage = antibody.lineage;
            clone
        })
        .collect()
}

fn check_antigens(antigens: &[Antigen]) -> Result<usize, ImmuneError> {
    let first = antigens.first().ok_or(ImmuneError::NoAntigens)?;
    let dim = first.vector.len();
    if let Some(bad) = antigens.iter().find(|g| g.vector.len() != dim) {
        return Err(ImmuneError::DimensionMismatch(
            bad.doc_id.clone(),
            bad.vector.len(),
            dim,
        ));
    }
    Ok(dim)
}

fn init_with<R: Rng>(
    antigens: &[Antigen],
    params: &AISParams,
    rng: &mut R,
) -> Result<Repertoire, ImmuneError> {
    params.validate()?;
    check_antigens(antigens)?;
    let n = antigens.len();
    let size = params.initial_size(n);
    let picks: Vec<usize> = if size <= n {
        let mut p = rand::seq::index::sample(rng, n, size).into_vec();
        p.sort_unstable();
        p
    } else {
        (0..size).map(|_| rng.random_range(0..n)).collect()
    };
    let mut rep = Repertoire::new();
    for p in picks {
        let vector = jitter(&antigens[p].vector, params.mutation_scale, rng);
        rep.insert(Antibody::new(vector), true);
    }
    Ok(rep)
}

/// Seeds the repertoire with jittered copies of randomly chosen antigens.
pub fn init_repertoire(
    antigens: &[Antigen],
    params: &AISParams,
) -> Result<Repertoire, ImmuneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    init_with(antigens, params, &mut rng)
}

/// Greedy suppression in descending (stimulation, age, insertion order)
/// priority: an antibody survives only if it is farther than the suppression
/// threshold from every survivor before it. Survivors keep their order.
/// Returns the number of antibodies removed.
pub fn suppress(rep: &mut Repertoire, params: &AISParams) -> usize {
    let mut order: Vec<usize> = (0..rep.len()).collect();
    order.sort_by(|&a, &b| rep.antibodies[a].priority_cmp(&rep.antibodies[b]));
    let mut kept: Vec<usize> = Vec::with_capacity(rep.len());
    for i in order {
        let candidate = &rep.antibodies[i];
        if kept.iter().all(|&k| {
            separation(params.metric, &rep.antibodies[k], candidate) > params.suppression_threshold
        }) {
            kept.push(i);
        }
    }
    retain_indices(rep, kept)
}

/// Suppression when `rep.antibodies[..fresh_from]` are already pairwise
/// separated and everything from `fresh_from` on is a new clone. Clones rank
/// below every older antibody, so the old ones all survive and only the
/// clones need checking.
fn suppress_fresh(rep: &mut Repertoire, params: &AISParams, fresh_from: usize) -> usize {
    let mut kept: Vec<usize> = (0..fresh_from).collect();
    for i in fresh_from..rep.len() {
        let candidate = &rep.antibodies[i];
        if kept.iter().all(|&k| {
            separation(params.metric, &rep.antibodies[k], candidate) > params.suppression_threshold
        }) {
            kept.push(i);
        }
    }
    retain_indices(rep, kept)
}

fn retain_indices(rep: &mut Repertoire, mut kept: Vec<usize>) -> usize {
    kept.sort_unstable();
    let removed = rep.len() - kept.len();
    let mut keep = vec![false; rep.len()];
    for k in kept {
        keep[k] = true;
    }
    let mut flags = keep.into_iter();
    rep.antibodies.retain(|_| flags.next().unwrap_or(false));
    rep.separated = true;
    removed
}

fn values_against(rep: &Repertoire, antigen: &Antigen, metric: Metric) -> Vec<f64> {
    rep.antibodies
        .par_iter()
        .map(|ab| raw_value(metric, ab, antigen))
        .collect()
}

/// Runs clonal selection until the repertoire size is unchanged for
/// `stall_window` consecutive iterations or `max_iterations` is reached.
pub fn run_ais(antigens: &[Antigen], params: &AISParams) -> Result<Repertoire, ImmuneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut rep = init_with(antigens, params, &mut rng)?;
    let metric = params.metric;
    let mut previous_size = rep.len();
    let mut stalled = 0;
    let limit = repertoire_limit(params, antigens.len());

    for iteration in 1..=params.max_iterations {
        let (mut matches, mut clones, mut suppressed) = (0, 0, 0);
        for antigen in antigens {
            let values = values_against(&rep, antigen, metric);
            let matched: Vec<usize> = (0..rep.len())
                .filter(|&i| is_match(params, values[i]))
                .collect();
            if matched.is_empty() {
                continue;
            }
            matches += matched.len();
            let fresh_from = rep.len();
            let mut fresh = Vec::new();
            for i in matched {
                let aff = affinity_from_value(metric, values[i]);
                fresh.extend(clone_and_mutate(
                    &mut rep.antibodies[i],
                    aff,
                    params,
                    &mut rng,
                ));
            }
            clones += fresh.len();
            let was_separated = rep.separated;
            for ab in fresh {
                rep.insert(ab, false);
            }
            suppressed += if was_separated {
                suppress_fresh(&mut rep, params, fresh_from)
            } else {
                suppress(&mut rep, params)
            };
            if rep.len() > limit {
                return Err(ImmuneError::Diverged {
                    size: rep.len(),
                    limit,
                });
            }
        }

        // refresh the antibody/antigen affinities for the new population
        let covered = antigens
            .iter()
            .filter(|g| {
                values_against(&rep, g, metric)
                    .iter()
                    .any(|&v| is_match(params, v))
            })
            .count();
        for ab in &mut rep.antibodies {
            ab.age += 1;
        }
        rep.iteration = iteration;
        rep.history.push(IterationStats {
            iteration,
            size: rep.len(),
            matches,
            clones,
            suppressed,
            covered,
        });
        log::debug!(
            "iteration {iteration}: size {} matches {matches} clones {clones} suppressed {suppressed} covered {covered}",
            rep.len()
        );

        if rep.len() == previous_size {
            stalled += 1;
        } else {
            stalled = 0;
        }
        previous_size = rep.len();
        if stalled >= params.stall_window {
            break;
        }
    }
    Ok(rep)
}
