//! Session documents (requirements, preferences, combination weights) and
//! the full selection pipeline that turns one into a result document.
//!
//! Session and result documents use the same TOML encoding as catalogs.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ahp::{AhpError, GoalHierarchy};
use crate::catalog::{Catalog, EntityKind};
use crate::evaluation::{
    self, best_combination, combine, evaluate_entities, CombinationWeights, CombinedSolution, EvaluationError,
    EvaluationResult,
};
use crate::requirements::{self, Requirement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    TwoPhase,
    Integrated,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-phase" => Ok(Mode::TwoPhase),
            "integrated" => Ok(Mode::Integrated),
            other => Err(format!("unknown mode `{other}` (expected two-phase or integrated)")),
        }
    }
}

/// How many requirements an alternative may fail. `Auto` picks, per side,
/// the least level that leaves at least one alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelaxationPolicy {
    #[default]
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for RelaxationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(RelaxationPolicy::Auto),
            n => n
                .parse()
                .map(RelaxationPolicy::Fixed)
                .map_err(|_| format!("invalid relaxation `{n}` (expected auto or a non-negative integer)")),
        }
    }
}

impl Serialize for RelaxationPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RelaxationPolicy::Auto => s.serialize_str("auto"),
            RelaxationPolicy::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for RelaxationPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct PolicyVisitor;
        impl Visitor<'_> for PolicyVisitor {
            type Value = RelaxationPolicy;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"auto\" or a non-negative integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(RelaxationPolicy::Fixed(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                usize::try_from(v)
                    .map(RelaxationPolicy::Fixed)
                    .map_err(|_| E::custom("relaxation level must be non-negative"))
            }
        }
        d.deserialize_any(PolicyVisitor)
    }
}

fn default_image_hierarchy() -> GoalHierarchy {
    GoalHierarchy::default_image()
}

fn default_service_hierarchy() -> GoalHierarchy {
    GoalHierarchy::default_service()
}

/// Everything a user supplies for one selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionDocument {
    /// Path of the catalog file, relative to the session document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub relaxation: RelaxationPolicy,
    #[serde(default)]
    pub combination: CombinationWeights,
    /// Goals or criteria (by name or attribute key) removed from every hierarchy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deselected: Vec<String>,
    #[serde(default)]
    pub requirements: Vec<Requirement>,
    #[serde(default = "default_image_hierarchy")]
    pub image_hierarchy: GoalHierarchy,
    #[serde(default = "default_service_hierarchy")]
    pub service_hierarchy: GoalHierarchy,
    /// Hierarchy over `image.*` and `service.*` criteria for integrated mode.
    /// Defaults to the image and service hierarchies under a root weighted by
    /// the combination weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrated_hierarchy: Option<GoalHierarchy>,
}

impl Default for SessionDocument {
    fn default() -> Self {
        Self {
            catalog: None,
            mode: Mode::default(),
            relaxation: RelaxationPolicy::default(),
            combination: CombinationWeights::default(),
            deselected: Vec::new(),
            requirements: Vec::new(),
            image_hierarchy: GoalHierarchy::default_image(),
            service_hierarchy: GoalHierarchy::default_service(),
            integrated_hierarchy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}

fn invalid(path: impl Into<String>, err: impl fmt::Display) -> SessionError {
    SessionError::Invalid { path: path.into(), message: err.to_string() }
}

/// Hierarchies after deselection, ready for evaluation.
struct Effective {
    image: GoalHierarchy,
    service: GoalHierarchy,
    integrated: GoalHierarchy,
}

impl SessionDocument {
    pub fn parse(text: &str) -> Result<Self, SessionError> {
        toml::from_str(text).map_err(|e| SessionError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("session documents always serialize")
    }

    pub fn requirements_for(&self, kind: EntityKind) -> Vec<Requirement> {
        self.requirements.iter().filter(|r| r.target == kind).cloned().collect()
    }

    /// Checks the document against a catalog without evaluating anything.
    pub fn validate(&self, catalog: &Catalog) -> Result<(), SessionError> {
        self.effective(catalog).map(|_| ())
    }

    fn effective(&self, catalog: &Catalog) -> Result<Effective, SessionError> {
        let schema = catalog.schema();
        for (i, r) in self.requirements.iter().enumerate() {
            r.validate(schema).map_err(|e| invalid(format!("requirements[{i}]"), e))?;
        }
        let deselected: Vec<&str> = self.deselected.iter().map(String::as_str).collect();
        let prune = |h: &GoalHierarchy, path: &str| -> Result<GoalHierarchy, SessionError> {
            h.without(&deselected).map_err(|e| invalid(path, e))
        };
        let image = prune(&self.image_hierarchy, "image_hierarchy")?;
        image.check_leaves(schema, EntityKind::VmImage).map_err(|e| invalid("image_hierarchy", e))?;
        let service = prune(&self.service_hierarchy, "service_hierarchy")?;
        service.check_leaves(schema, EntityKind::InfraService).map_err(|e| invalid("service_hierarchy", e))?;
        let integrated = match &self.integrated_hierarchy {
            Some(h) => prune(h, "integrated_hierarchy")?,
            None => {
                let (w_a, w_s) = (self.combination.w_a(), self.combination.w_s());
                if self.mode == Mode::Integrated && (w_a == 0.0 || w_s == 0.0) {
                    return Err(invalid(
                        "combination",
                        "integrated mode without an integrated_hierarchy needs positive w_a and w_s",
                    ));
                }
                let (w_a, w_s) = if w_a > 0.0 && w_s > 0.0 { (w_a, w_s) } else { (1.0, 1.0) };
                GoalHierarchy::integrated(&image, &service, w_a, w_s).map_err(|e| invalid("combination", e))?
            }
        };
        for leaf in integrated.leaves() {
            let bound = leaf
                .strip_prefix(crate::ahp::IMAGE_PREFIX)
                .map(|k| (EntityKind::VmImage, k))
                .or_else(|| leaf.strip_prefix(crate::ahp::SERVICE_PREFIX).map(|k| (EntityKind::InfraService, k)));
            match bound {
                Some((kind, key)) if schema.numerical(kind, key).is_some() => {}
                Some((kind, key)) => {
                    return Err(invalid("integrated_hierarchy", AhpError::UnknownCriterion { kind, key: key.into() }))
                }
                None => return Err(invalid("integrated_hierarchy", EvaluationError::UnboundCriterion(leaf.into()))),
            }
        }
        Ok(Effective { image, service, integrated })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    NoFeasibleCombination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelaxationUsed {
    pub policy: RelaxationPolicy,
    pub image_level: usize,
    pub service_level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub hierarchy: String,
    pub goal: String,
    pub consistency_ratio: f64,
}

/// Ranked output of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub outcome: Outcome,
    pub mode: Mode,
    pub relaxation: RelaxationUsed,
    pub combination: CombinationWeights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<CombinedSolution>,
    pub image_weights: BTreeMap<String, f64>,
    pub service_weights: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub integrated_weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub warnings: Vec<Warning>,
    pub images: Vec<EvaluationResult>,
    pub services: Vec<EvaluationResult>,
    pub combinations: Vec<CombinedSolution>,
}

impl ResultDocument {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("result documents always serialize")
    }

    pub fn parse(text: &str) -> Result<Self, SessionError> {
        toml::from_str(text).map_err(|e| SessionError::Parse(e.to_string()))
    }
}

fn level_for(policy: RelaxationPolicy, catalog: &Catalog, kind: EntityKind, reqs: &[Requirement]) -> Result<usize, EvaluationError> {
    Ok(match policy {
        RelaxationPolicy::Auto => requirements::minimal_relaxation(catalog.entities(kind), reqs)?,
        RelaxationPolicy::Fixed(n) => n.min(reqs.len()),
    })
}

/// Runs the whole selection for `session` over `catalog`. An empty feasible
/// set is reported through [`Outcome::NoFeasibleCombination`], not as an error.
pub fn run_session(catalog: &Catalog, session: &SessionDocument) -> Result<ResultDocument, SessionError> {
    let eff = session.effective(catalog)?;
    let image_reqs = session.requirements_for(EntityKind::VmImage);
    let service_reqs = session.requirements_for(EntityKind::InfraService);
    let image_level = level_for(session.relaxation, catalog, EntityKind::VmImage, &image_reqs)?;
    let service_level = level_for(session.relaxation, catalog, EntityKind::InfraService, &service_reqs)?;

    let images = evaluate_entities(catalog, EntityKind::VmImage, &image_reqs, &eff.image, image_level)?;
    let services = evaluate_entities(catalog, EntityKind::InfraService, &service_reqs, &eff.service, service_level)?;

    let mut warnings: Vec<Warning> = Vec::new();
    let mut note = |hierarchy: &str, ws: &[crate::ahp::ConsistencyWarning]| {
        warnings.extend(ws.iter().map(|w| Warning {
            hierarchy: hierarchy.to_string(),
            goal: w.goal.clone(),
            consistency_ratio: w.consistency_ratio,
        }))
    };
    note("image", &images.warnings);
    note("service", &services.warnings);

    let (combinations, integrated_weights) = match session.mode {
        Mode::TwoPhase => (combine(&images, &services, catalog, &session.combination), BTreeMap::new()),
        Mode::Integrated => {
            let int = evaluation::evaluate_integrated(
                catalog,
                &image_reqs,
                &service_reqs,
                &eff.integrated,
                image_level,
                service_level,
            )?;
            note("integrated", &int.warnings);
            (int.combinations, int.weights)
        }
    };
    let best = best_combination(&combinations).ok().cloned();
    Ok(ResultDocument {
        outcome: if best.is_some() { Outcome::Ok } else { Outcome::NoFeasibleCombination },
        mode: session.mode,
        relaxation: RelaxationUsed { policy: session.relaxation, image_level, service_level },
        combination: session.combination,
        best,
        image_weights: images.weights,
        service_weights: services.weights,
        integrated_weights,
        warnings,
        images: images.results,
        services: services.results,
        combinations,
    })
}
