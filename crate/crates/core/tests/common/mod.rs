//! Independent reference implementations and random input generators shared
//! by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cloudsel::ahp::{GoalHierarchy, GoalNode, PairwiseMatrix};
use cloudsel::catalog::{sampling_range, Catalog, CatalogEntity, EntityKind, Influence};
use cloudsel::evaluation::Combiner;
use cloudsel::requirements::{Predicate, Requirement};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

/// Number of requirements `entity` fails, evaluated predicate by predicate.
pub fn failure_count(entity: &CatalogEntity, reqs: &[Requirement]) -> usize {
    reqs.iter().filter(|r| !predicate_holds(entity, r)).count()
}

fn norm(s: &str) -> String {
    s.trim().to_lowercase()
}

fn predicate_holds(entity: &CatalogEntity, req: &Requirement) -> bool {
    match &req.predicate {
        Predicate::Max(bound) => entity.numerical[&req.attribute] < *bound,
        Predicate::Min(bound) => entity.numerical[&req.attribute] > *bound,
        Predicate::Equals(want) => entity.non_numerical[&req.attribute].values().any(|v| norm(v) == norm(want)),
        Predicate::OneOf(allowed) => {
            let have: Vec<String> = entity.non_numerical[&req.attribute].values().map(norm).collect();
            allowed.iter().any(|a| have.contains(&norm(a)))
        }
    }
}

/// Per-entity value: 0 for entities over the relaxation level, otherwise the
/// weighted sum of distributively normalized attribute values over survivors.
pub fn entity_values(
    catalog: &Catalog,
    kind: EntityKind,
    reqs: &[Requirement],
    leaf_weights: &BTreeMap<String, f64>,
    level: usize,
) -> BTreeMap<String, (f64, bool)> {
    let entities = catalog.entities(kind);
    let alive: Vec<&CatalogEntity> = entities.iter().filter(|e| failure_count(e, reqs) <= level).collect();
    let mut out: BTreeMap<String, (f64, bool)> = entities.iter().map(|e| (e.id.clone(), (0.0, false))).collect();
    for e in &alive {
        out.get_mut(&e.id).unwrap().1 = true;
    }
    for (key, w) in leaf_weights {
        let influence = catalog.schema().numerical(kind, key).unwrap().influence;
        let raw: Vec<f64> = alive.iter().map(|e| e.numerical[key]).collect();
        let transformed: Vec<f64> = match influence {
            Influence::Positive => raw.clone(),
            Influence::Negative => raw.iter().map(|v| 1.0 / (v + 1e-9)).collect(),
        };
        let total: f64 = transformed.iter().sum();
        for (e, t) in alive.iter().zip(&transformed) {
            let share = if total == 0.0 { 1.0 / alive.len() as f64 } else { t / total };
            out.get_mut(&e.id).unwrap().0 += w * share;
        }
    }
    out
}

/// Brute force over all pairs: highest combined value among pairs that are
/// declared dependencies with both members alive; ties go to the smallest
/// (image id, service id).
pub fn best_pair(
    catalog: &Catalog,
    images: &BTreeMap<String, (f64, bool)>,
    services: &BTreeMap<String, (f64, bool)>,
    w_a: f64,
    w_s: f64,
    combiner: Combiner,
) -> Option<(String, String, f64)> {
    let mut best: Option<(String, String, f64)> = None;
    for (img, &(f, img_ok)) in images {
        for (svc, &(g, svc_ok)) in services {
            if !(img_ok && svc_ok && catalog.dependencies().contains(img, svc)) {
                continue;
            }
            let v = match combiner {
                Combiner::Additive => w_a * f + w_s * g,
                Combiner::Multiplicative => f * g,
            };
            // BTreeMap iteration is already in (image, service) order, so only
            // a strictly larger value replaces the incumbent.
            if best.as_ref().is_none_or(|b| v > b.2) {
                best = Some((img.clone(), svc.clone(), v));
            }
        }
    }
    best
}

/// Principal eigenvector by repeated squaring of the matrix, normalized to sum 1.
pub fn principal_eigenvector(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows.len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    for _ in 0..60 {
        let mut next = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                next[i][j] = (0..k).map(|l| a[i][l] * a[l][j]).sum();
            }
        }
        let scale: f64 = next.iter().flatten().sum();
        a = next.into_iter().map(|r| r.into_iter().map(|x| x / scale).collect()).collect();
    }
    let col: Vec<f64> = (0..k).map(|i| a[i].iter().sum()).collect();
    let s: f64 = col.iter().sum();
    col.into_iter().map(|x| x / s).collect()
}

/// Random positive weights summing to 1.
pub fn random_weights<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Random requirement set over the standard schema for `kind`.
pub fn random_requirements<R: Rng>(rng: &mut R, catalog: &Catalog, kind: EntityKind, max: usize) -> Vec<Requirement> {
    let schema = catalog.schema();
    let numerical: Vec<_> = schema.numerical_for(kind).collect();
    let non_numerical: Vec<_> = schema.non_numerical_for(kind).filter(|d| !d.examples.is_empty()).collect();
    let count = rng.random_range(0..=max);
    (0..count)
        .map(|_| {
            if rng.random_bool(0.6) {
                let def = numerical.choose(rng).unwrap();
                let (lo, hi) = sampling_range(def);
                let bound = rng.random_range(lo..=hi);
                let p = if rng.random_bool(0.5) { Predicate::Max(bound) } else { Predicate::Min(bound) };
                Requirement::new(kind, def.key.clone(), p)
            } else {
                let def = non_numerical.choose(rng).unwrap();
                if rng.random_bool(0.5) {
                    let mut v = def.examples.choose(rng).unwrap().clone();
                    if rng.random_bool(0.3) {
                        v = format!(" {} ", v.to_uppercase());
                    }
                    Requirement::new(kind, def.key.clone(), Predicate::Equals(v))
                } else {
                    let mut pool = def.examples.clone();
                    pool.shuffle(rng);
                    let n = rng.random_range(1..=pool.len().min(3));
                    Requirement::new(kind, def.key.clone(), Predicate::OneOf(pool[..n].to_vec()))
                }
            }
        })
        .collect()
}

/// Random two-level hierarchy over a non-empty subset of the numerical
/// attributes of `kind`, with consistent comparison matrices.
pub fn random_hierarchy<R: Rng>(rng: &mut R, catalog: &Catalog, kind: EntityKind) -> GoalHierarchy {
    let mut keys: Vec<String> = catalog.schema().numerical_for(kind).map(|d| d.key.clone()).collect();
    keys.shuffle(rng);
    let take = rng.random_range(1..=keys.len());
    keys.truncate(take);
    let groups = rng.random_range(1..=take.min(3));
    let mut buckets: Vec<Vec<String>> = vec![Vec::new(); groups];
    for (i, k) in keys.into_iter().enumerate() {
        let b = if i < groups { i } else { rng.random_range(0..groups) };
        buckets[b].push(k);
    }
    let children: Vec<GoalNode> = buckets
        .into_iter()
        .enumerate()
        .map(|(g, leaves)| {
            let w = random_weights(rng, leaves.len());
            let leaves = leaves.into_iter().map(|k| GoalNode::criterion(k.clone(), k)).collect();
            GoalNode::goal_with(format!("goal {g}"), leaves, PairwiseMatrix::from_weights(&w).unwrap())
        })
        .collect();
    let w = random_weights(rng, children.len());
    GoalHierarchy::new(GoalNode::goal_with("root", children, PairwiseMatrix::from_weights(&w).unwrap())).unwrap()
}
