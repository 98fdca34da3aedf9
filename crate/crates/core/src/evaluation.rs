//! Weighted-sum valuation of images and services, feasibility-gated
//! combination of the two, and the single-hierarchy pair evaluation.
//!
//! Every alternative that fails more requirements than the relaxation level
//! is valued exactly 0. Survivors are valued by `sum_j w_j * norm_j`, where
//! `norm_j` is the distributive normalization of criterion `j` over the
//! surviving population, so survivor values always sum to 1.
//!
//! All orderings are by value descending, ties broken by ascending id.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::{self, global_weights, AhpError, ConsistencyWarning, GoalHierarchy, IMAGE_PREFIX, SERVICE_PREFIX};
use crate::catalog::{Catalog, CatalogEntity, CatalogError, EntityKind, Influence};
use crate::requirements::{self, Requirement, RequirementError, RequirementReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Requirement(#[from] RequirementError),
    #[error(transparent)]
    Ahp(#[from] AhpError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("no {0} alternatives to evaluate")]
    NoAlternatives(EntityKind),
    #[error("criterion `{0}` must be prefixed with `image.` or `service.`")]
    UnboundCriterion(String),
    #[error("combination weights must be non-negative and sum to 1 (got w_a={w_a}, w_s={w_s})")]
    InvalidWeights { w_a: f64, w_s: f64 },
    #[error("no feasible image-service combination")]
    NoFeasibleCombination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub entity_id: String,
    pub value: f64,
    pub failure_count: usize,
    /// Whether the entity passed the requirement check at the relaxation level.
    pub survived: bool,
    pub rank: usize,
}

/// Ranked results of one side of the two-phase evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub kind: EntityKind,
    pub results: Vec<EvaluationResult>,
    pub weights: BTreeMap<String, f64>,
    pub warnings: Vec<ConsistencyWarning>,
    pub relaxation_level: usize,
}

impl Evaluation {
    pub fn get(&self, id: &str) -> Option<&EvaluationResult> {
        self.results.iter().find(|r| r.entity_id == id)
    }
}

pub fn evaluate_images(
    catalog: &Catalog,
    reqs: &[Requirement],
    hierarchy: &GoalHierarchy,
    relaxation_level: usize,
) -> Result<Evaluation, EvaluationError> {
    evaluate_entities(catalog, EntityKind::VmImage, reqs, hierarchy, relaxation_level)
}

pub fn evaluate_services(
    catalog: &Catalog,
    reqs: &[Requirement],
    hierarchy: &GoalHierarchy,
    relaxation_level: usize,
) -> Result<Evaluation, EvaluationError> {
    evaluate_entities(catalog, EntityKind::InfraService, reqs, hierarchy, relaxation_level)
}

pub fn evaluate_entities(
    catalog: &Catalog,
    kind: EntityKind,
    reqs: &[Requirement],
    hierarchy: &GoalHierarchy,
    relaxation_level: usize,
) -> Result<Evaluation, EvaluationError> {
    let entities = catalog.entities(kind);
    if entities.is_empty() {
        return Err(EvaluationError::NoAlternatives(kind));
    }
    hierarchy.check_leaves(catalog.schema(), kind)?;
    let gw = global_weights(hierarchy)?;
    let reports = requirements::check_all(entities, reqs)?;
    if relaxation_level > reqs.len() {
        return Err(RequirementError::RelaxationOutOfRange { level: relaxation_level, count: reqs.len() }.into());
    }
    let criteria: Vec<(Influence, f64, &str)> = gw
        .weights
        .iter()
        .map(|(key, &w)| {
            let influence = catalog.schema().numerical(kind, key).map(|d| d.influence).expect("leaves checked");
            (influence, w, key.as_str())
        })
        .collect();
    let results = score(entities, &reports, relaxation_level, &criteria)?;
    Ok(Evaluation { kind, results, weights: gw.weights, warnings: gw.warnings, relaxation_level })
}

fn score(
    entities: &[CatalogEntity],
    reports: &[RequirementReport],
    relaxation_level: usize,
    criteria: &[(Influence, f64, &str)],
) -> Result<Vec<EvaluationResult>, EvaluationError> {
    let survivors: Vec<usize> =
        (0..entities.len()).filter(|&i| reports[i].failure_count() <= relaxation_level).collect();
    let mut values = vec![0.0; entities.len()];
    if !survivors.is_empty() {
        let mut column = Vec::with_capacity(survivors.len());
        for &(influence, weight, key) in criteria {
            column.clear();
            column.extend(survivors.iter().map(|&i| entities[i].numerical(key).expect("schema validated")));
            let norm = ahp::normalize_alternatives(&column, influence)?;
            for (&i, n) in survivors.iter().zip(norm) {
                values[i] += weight * n;
            }
        }
    }
    let mut results: Vec<EvaluationResult> = entities
        .iter()
        .zip(reports)
        .zip(values)
        .map(|((e, r), value)| EvaluationResult {
            entity_id: e.id.clone(),
            value,
            failure_count: r.failure_count(),
            survived: r.failure_count() <= relaxation_level,
            rank: 0,
        })
        .collect();
    results.sort_by(|a, b| by_value_then_id(a.value, &a.entity_id, b.value, &b.entity_id));
    for (i, r) in results.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(results)
}

fn by_value_then_id(va: f64, ia: &str, vb: f64, ib: &str) -> Ordering {
    vb.total_cmp(&va).then_with(|| ia.cmp(ib))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// `w_a * f + w_s * g`
    #[default]
    Additive,
    /// `f * g`; the weights are ignored.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct CombinationWeights {
    w_a: f64,
    w_s: f64,
    combiner: Combiner,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    w_a: f64,
    w_s: f64,
    #[serde(default)]
    combiner: Combiner,
}

impl TryFrom<RawWeights> for CombinationWeights {
    type Error = EvaluationError;

    fn try_from(raw: RawWeights) -> Result<Self, Self::Error> {
        CombinationWeights::new(raw.w_a, raw.w_s, raw.combiner)
    }
}

impl From<CombinationWeights> for RawWeights {
    fn from(cw: CombinationWeights) -> Self {
        RawWeights { w_a: cw.w_a, w_s: cw.w_s, combiner: cw.combiner }
    }
}

impl CombinationWeights {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(w_a: f64, w_s: f64, combiner: Combiner) -> Result<Self, EvaluationError> {
        let ok = w_a.is_finite() && w_s.is_finite() && w_a >= 0.0 && w_s >= 0.0;
        if !ok || (w_a + w_s - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(EvaluationError::InvalidWeights { w_a, w_s });
        }
        Ok(Self { w_a, w_s, combiner })
    }

    pub fn additive(w_a: f64, w_s: f64) -> Result<Self, EvaluationError> {
        Self::new(w_a, w_s, Combiner::Additive)
    }

    pub fn multiplicative() -> Self {
        Self { w_a: 0.5, w_s: 0.5, combiner: Combiner::Multiplicative }
    }

    pub fn w_a(&self) -> f64 {
        self.w_a
    }

    pub fn w_s(&self) -> f64 {
        self.w_s
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    pub fn apply(&self, image_value: f64, service_value: f64) -> f64 {
        match self.combiner {
            Combiner::Additive => self.w_a * image_value + self.w_s * service_value,
            Combiner::Multiplicative => image_value * service_value,
        }
    }
}

impl Default for CombinationWeights {
    fn default() -> Self {
        Self { w_a: 0.5, w_s: 0.5, combiner: Combiner::Additive }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedSolution {
    /// Shared with every other pair of the same image, so ranking m*n pairs
    /// allocates m + n ids rather than 2*m*n.
    pub image_id: Arc<str>,
    pub service_id: Arc<str>,
    pub combined_value: f64,
    pub image_value: f64,
    pub service_value: f64,
    /// The pair is a declared dependency and both members passed their requirements.
    pub feasible: bool,
}

fn by_combined(a: &CombinedSolution, b: &CombinedSolution) -> Ordering {
    b.combined_value
        .total_cmp(&a.combined_value)
        .then_with(|| a.image_id.cmp(&b.image_id))
        .then_with(|| a.service_id.cmp(&b.service_id))
}

fn pair_row(
    image: &EvaluationResult,
    image_id: &Arc<str>,
    services: &Evaluation,
    service_ids: &[Arc<str>],
    catalog: &Catalog,
    cw: &CombinationWeights,
) -> Vec<CombinedSolution> {
    let deps = catalog.dependencies();
    services
        .results
        .iter()
        .zip(service_ids)
        .map(|(service, service_id)| {
            let feasible = image.survived && service.survived && deps.contains(&image.entity_id, &service.entity_id);
            CombinedSolution {
                image_id: Arc::clone(image_id),
                service_id: Arc::clone(service_id),
                combined_value: if feasible { cw.apply(image.value, service.value) } else { 0.0 },
                image_value: image.value,
                service_value: service.value,
                feasible,
            }
        })
        .collect()
}

fn shared_ids(ev: &Evaluation) -> Vec<Arc<str>> {
    ev.results.iter().map(|r| Arc::from(r.entity_id.as_str())).collect()
}

/// Every (image, service) pair with its combined value, ranked.
pub fn combine(images: &Evaluation, services: &Evaluation, catalog: &Catalog, cw: &CombinationWeights) -> Vec<CombinedSolution> {
    let (image_ids, service_ids) = (shared_ids(images), shared_ids(services));
    let mut out: Vec<CombinedSolution> = images
        .results
        .iter()
        .zip(&image_ids)
        .flat_map(|(img, id)| pair_row(img, id, services, &service_ids, catalog, cw))
        .collect();
    out.sort_by(by_combined);
    out
}

/// [`combine`] with pairs valued and sorted on the rayon pool. The output is identical.
pub fn combine_par(images: &Evaluation, services: &Evaluation, catalog: &Catalog, cw: &CombinationWeights) -> Vec<CombinedSolution> {
    let (image_ids, service_ids) = (shared_ids(images), shared_ids(services));
    let mut out: Vec<CombinedSolution> = images
        .results
        .par_iter()
        .zip(&image_ids)
        .flat_map_iter(|(img, id)| pair_row(img, id, services, &service_ids, catalog, cw))
        .collect();
    out.par_sort_by(by_combined);
    out
}

/// Highest-valued feasible pair, least (image, service) ids on ties.
pub fn best_combination(solutions: &[CombinedSolution]) -> Result<&CombinedSolution, EvaluationError> {
    solutions
        .iter()
        .filter(|s| s.feasible)
        .min_by(|a, b| by_combined(a, b))
        .ok_or(EvaluationError::NoFeasibleCombination)
}

/// Result of evaluating feasible pairs under one hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedEvaluation {
    pub combinations: Vec<CombinedSolution>,
    pub weights: BTreeMap<String, f64>,
    pub warnings: Vec<ConsistencyWarning>,
}

/// Scores each feasible pair as one alternative. Leaves are `image.<key>` or
/// `service.<key>`; normalization runs over the feasible pairs only. In the
/// output, `image_value` and `service_value` are the contributions of the
/// image and service criteria to `combined_value`.
pub fn evaluate_integrated(
    catalog: &Catalog,
    image_reqs: &[Requirement],
    service_reqs: &[Requirement],
    hierarchy: &GoalHierarchy,
    image_relaxation: usize,
    service_relaxation: usize,
) -> Result<IntegratedEvaluation, EvaluationError> {
    let schema = catalog.schema();
    let mut criteria = Vec::new();
    let gw = global_weights(hierarchy)?;
    for (leaf, &w) in &gw.weights {
        let (kind, key) = if let Some(k) = leaf.strip_prefix(IMAGE_PREFIX) {
            (EntityKind::VmImage, k)
        } else if let Some(k) = leaf.strip_prefix(SERVICE_PREFIX) {
            (EntityKind::InfraService, k)
        } else {
            return Err(EvaluationError::UnboundCriterion(leaf.clone()));
        };
        let def = schema
            .numerical(kind, key)
            .ok_or_else(|| AhpError::UnknownCriterion { kind, key: key.to_string() })?;
        criteria.push((kind, key, def.influence, w));
    }

    let survivors = |kind: EntityKind, reqs: &[Requirement], level: usize| -> Result<Vec<bool>, EvaluationError> {
        let entities = catalog.entities(kind);
        if entities.is_empty() {
            return Err(EvaluationError::NoAlternatives(kind));
        }
        if level > reqs.len() {
            return Err(RequirementError::RelaxationOutOfRange { level, count: reqs.len() }.into());
        }
        Ok(requirements::check_all(entities, reqs)?.iter().map(|r| r.failure_count() <= level).collect())
    };
    let image_ok = survivors(EntityKind::VmImage, image_reqs, image_relaxation)?;
    let service_ok = survivors(EntityKind::InfraService, service_reqs, service_relaxation)?;

    let images = catalog.images();
    let services = catalog.services();
    let deps = catalog.dependencies();
    let mut feasible = Vec::new();
    for (i, img) in images.iter().enumerate() {
        for (j, svc) in services.iter().enumerate() {
            if image_ok[i] && service_ok[j] && deps.contains(&img.id, &svc.id) {
                feasible.push((i, j));
            }
        }
    }

    let mut image_part = vec![0.0; feasible.len()];
    let mut service_part = vec![0.0; feasible.len()];
    if !feasible.is_empty() {
        for &(kind, key, influence, w) in &criteria {
            let column: Vec<f64> = feasible
                .iter()
                .map(|&(i, j)| match kind {
                    EntityKind::VmImage => images[i].numerical(key),
                    EntityKind::InfraService => services[j].numerical(key),
                })
                .map(|v| v.expect("schema validated"))
                .collect();
            let target = match kind {
                EntityKind::VmImage => &mut image_part,
                EntityKind::InfraService => &mut service_part,
            };
            for (t, n) in target.iter_mut().zip(ahp::normalize_alternatives(&column, influence)?) {
                *t += w * n;
            }
        }
    }

    let mut scored: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for (k, &pair) in feasible.iter().enumerate() {
        scored.insert(pair, (image_part[k], service_part[k]));
    }
    let image_ids: Vec<Arc<str>> = images.iter().map(|e| Arc::from(e.id.as_str())).collect();
    let service_ids: Vec<Arc<str>> = services.iter().map(|e| Arc::from(e.id.as_str())).collect();
    let mut combinations = Vec::with_capacity(images.len() * services.len());
    for (i, image_id) in image_ids.iter().enumerate() {
        for (j, service_id) in service_ids.iter().enumerate() {
            let (iv, sv, ok) = match scored.get(&(i, j)) {
                Some(&(iv, sv)) => (iv, sv, true),
                None => (0.0, 0.0, false),
            };
            combinations.push(CombinedSolution {
                image_id: Arc::clone(image_id),
                service_id: Arc::clone(service_id),
                combined_value: iv + sv,
                image_value: iv,
                service_value: sv,
                feasible: ok,
            });
        }
    }
    combinations.sort_by(by_combined);
    Ok(IntegratedEvaluation { combinations, weights: gw.weights, warnings: gw.warnings })
}
