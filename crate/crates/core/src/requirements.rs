//! Satisficing requirement checks and relaxation by failure count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{AttributeSchema, CatalogEntity, EntityKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// Passes iff the attribute value is strictly below the bound.
    Max(f64),
    /// Passes iff the attribute value is strictly above the bound.
    Min(f64),
    Equals(String),
    OneOf(Vec<String>),
}

impl Predicate {
    fn is_numerical(&self) -> bool {
        matches!(self, Predicate::Max(_) | Predicate::Min(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RequirementRecord", into = "RequirementRecord")]
pub struct Requirement {
    pub target: EntityKind,
    pub attribute: String,
    pub predicate: Predicate,
}

impl Requirement {
    pub fn new(target: EntityKind, attribute: impl Into<String>, predicate: Predicate) -> Self {
        Self { target, attribute: attribute.into(), predicate }
    }

    /// Checks the requirement against an attribute schema without an entity at hand.
    pub fn validate(&self, schema: &AttributeSchema) -> Result<(), RequirementError> {
        if let Predicate::OneOf(values) = &self.predicate {
            if values.is_empty() {
                return Err(RequirementError::EmptyOneOf(self.attribute.clone()));
            }
        }
        let numerical = schema.numerical(self.target, &self.attribute).is_some();
        let non_numerical = schema.non_numerical(self.target, &self.attribute).is_some();
        if !numerical && !non_numerical {
            return Err(RequirementError::UnknownAttribute { kind: self.target, key: self.attribute.clone() });
        }
        if self.predicate.is_numerical() != numerical {
            return Err(RequirementError::PredicateMismatch { key: self.attribute.clone() });
        }
        Ok(())
    }

    /// Evaluates the requirement on one entity.
    pub fn passes(&self, entity: &CatalogEntity) -> Result<bool, RequirementError> {
        if entity.kind != self.target {
            return Err(RequirementError::KindMismatch {
                entity: entity.id.clone(),
                expected: self.target,
                found: entity.kind,
            });
        }
        let unknown = || RequirementError::UnknownAttribute { kind: entity.kind, key: self.attribute.clone() };
        let mismatch = || RequirementError::PredicateMismatch { key: self.attribute.clone() };
        match &self.predicate {
            Predicate::Max(bound) | Predicate::Min(bound) => {
                let value = match entity.numerical(&self.attribute) {
                    Some(v) => v,
                    None if entity.non_numerical(&self.attribute).is_some() => return Err(mismatch()),
                    None => return Err(unknown()),
                };
                Ok(match self.predicate {
                    Predicate::Max(_) => value < *bound,
                    _ => value > *bound,
                })
            }
            Predicate::Equals(_) | Predicate::OneOf(_) => {
                let value = match entity.non_numerical(&self.attribute) {
                    Some(v) => v,
                    None if entity.numerical(&self.attribute).is_some() => return Err(mismatch()),
                    None => return Err(unknown()),
                };
                let allowed: &[String] = match &self.predicate {
                    Predicate::Equals(s) => std::slice::from_ref(s),
                    Predicate::OneOf(set) => set,
                    _ => unreachable!(),
                };
                Ok(value.values().any(|v| allowed.iter().any(|a| text_eq(v, a))))
            }
        }
    }
}

/// Case-insensitive comparison of trimmed strings.
fn text_eq(a: &str, b: &str) -> bool {
    let (a, b) = (a.trim(), b.trim());
    a.len() == b.len() && a.chars().flat_map(char::to_lowercase).eq(b.chars().flat_map(char::to_lowercase))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateKind {
    Max,
    Min,
    Equals,
    OneOf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarValue {
    Number(f64),
    Text(String),
}

/// On-disk shape of a requirement: `{kind, attribute, predicate, value | values}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementRecord {
    pub kind: EntityKind,
    pub attribute: String,
    pub predicate: PredicateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<ScalarValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
}

impl TryFrom<RequirementRecord> for Requirement {
    type Error = RequirementError;

    fn try_from(rec: RequirementRecord) -> Result<Self, Self::Error> {
        let bad = |why: &str| RequirementError::Malformed { key: rec.attribute.clone(), reason: why.to_string() };
        let predicate = match (rec.predicate, &rec.value, &rec.values) {
            (PredicateKind::Max, Some(ScalarValue::Number(v)), None) => Predicate::Max(*v),
            (PredicateKind::Min, Some(ScalarValue::Number(v)), None) => Predicate::Min(*v),
            (PredicateKind::Max | PredicateKind::Min, _, _) => return Err(bad("expects a numeric `value`")),
            (PredicateKind::Equals, Some(ScalarValue::Text(s)), None) => Predicate::Equals(s.clone()),
            (PredicateKind::Equals, _, _) => return Err(bad("expects a string `value`")),
            (PredicateKind::OneOf, None, Some(vs)) if !vs.is_empty() => Predicate::OneOf(vs.clone()),
            (PredicateKind::OneOf, None, Some(_)) => return Err(RequirementError::EmptyOneOf(rec.attribute)),
            (PredicateKind::OneOf, _, _) => return Err(bad("expects a `values` list")),
        };
        Ok(Requirement { target: rec.kind, attribute: rec.attribute, predicate })
    }
}

impl From<Requirement> for RequirementRecord {
    fn from(r: Requirement) -> Self {
        let (predicate, value, values) = match r.predicate {
            Predicate::Max(v) => (PredicateKind::Max, Some(ScalarValue::Number(v)), None),
            Predicate::Min(v) => (PredicateKind::Min, Some(ScalarValue::Number(v)), None),
            Predicate::Equals(s) => (PredicateKind::Equals, Some(ScalarValue::Text(s)), None),
            Predicate::OneOf(vs) => (PredicateKind::OneOf, None, Some(vs)),
        };
        RequirementRecord { kind: r.target, attribute: r.attribute, predicate, value, values }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequirementError {
    #[error("unknown attribute `{key}` for {kind}")]
    UnknownAttribute { kind: EntityKind, key: String },
    #[error("requirement on `{key}` uses a predicate of the wrong value type")]
    PredicateMismatch { key: String },
    #[error("requirement targets {expected} but entity `{entity}` is {found}")]
    KindMismatch { entity: String, expected: EntityKind, found: EntityKind },
    #[error("one_of requirement on `{0}` has an empty value set")]
    EmptyOneOf(String),
    #[error("requirement on `{key}` is malformed: {reason}")]
    Malformed { key: String, reason: String },
    #[error("relaxation level {level} exceeds the number of requirements ({count})")]
    RelaxationOutOfRange { level: usize, count: usize },
    #[error("no entities to check")]
    NoEntities,
}

/// Which requirements an entity failed, by index into the requirement list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementReport {
    pub entity_id: String,
    pub failed: Vec<usize>,
}

impl RequirementReport {
    pub fn failure_count(&self) -> usize {
        self.failed.len()
    }
}

pub fn check(entity: &CatalogEntity, reqs: &[Requirement]) -> Result<RequirementReport, RequirementError> {
    let mut failed = Vec::new();
    for (i, req) in reqs.iter().enumerate() {
        if !req.passes(entity)? {
            failed.push(i);
        }
    }
    Ok(RequirementReport { entity_id: entity.id.clone(), failed })
}

/// Reports for every entity, in input order.
pub fn check_all(entities: &[CatalogEntity], reqs: &[Requirement]) -> Result<Vec<RequirementReport>, RequirementError> {
    entities.iter().map(|e| check(e, reqs)).collect()
}

/// Entities that fail at most `relaxation_level` requirements, in input order.
///
/// Each entity may fail any `relaxation_level` requirements; the requirement
/// list itself is never shortened.
pub fn filter_with_relaxation(
    entities: &[CatalogEntity],
    reqs: &[Requirement],
    relaxation_level: usize,
) -> Result<Vec<RequirementReport>, RequirementError> {
    if relaxation_level > reqs.len() {
        return Err(RequirementError::RelaxationOutOfRange { level: relaxation_level, count: reqs.len() });
    }
    Ok(check_all(entities, reqs)?
        .into_iter()
        .filter(|r| r.failure_count() <= relaxation_level)
        .collect())
}

/// Least relaxation level that leaves at least one entity.
pub fn minimal_relaxation(entities: &[CatalogEntity], reqs: &[Requirement]) -> Result<usize, RequirementError> {
    minimal_level(&check_all(entities, reqs)?)
}

pub(crate) fn minimal_level(reports: &[RequirementReport]) -> Result<usize, RequirementError> {
    reports.iter().map(RequirementReport::failure_count).min().ok_or(RequirementError::NoEntities)
}
