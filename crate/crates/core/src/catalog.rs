//! Entity sets of the selection model: providers, VM images, infrastructure
//! services, their attribute schema and the image/service dependency set.
//!
//! A [`Catalog`] is only ever constructed through validation, so every value
//! handed to the evaluation code is known to satisfy its attribute schema.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Metric used by percentage attributes (popularity, uptime).
pub const PERCENT_METRIC: &str = "%";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    VmImage,
    InfraService,
}

impl EntityKind {
    fn section(self) -> &'static str {
        match self {
            EntityKind::VmImage => "images",
            EntityKind::InfraService => "services",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityKind::VmImage => f.write_str("vm_image"),
            EntityKind::InfraService => f.write_str("infra_service"),
        }
    }
}

/// Direction in which a numerical attribute affects the value of an alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Influence {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variability {
    Static,
    Dynamic,
}

/// Interval of admissible values. A missing `max` means the range is unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueRange {
    pub min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl ValueRange {
    pub fn bounded(min: f64, max: f64) -> Self {
        Self { min, max: Some(max) }
    }

    pub fn unbounded(min: f64) -> Self {
        Self { min, max: None }
    }

    pub fn contains(&self, value: f64) -> bool {
        value.is_finite() && value >= self.min && self.max.is_none_or(|max| value <= max)
    }
}

impl fmt::Display for ValueRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(max) => write!(f, "[{}, {}]", self.min, max),
            None => write!(f, "[{}, inf)", self.min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericalAttributeDef {
    pub key: String,
    pub kind: EntityKind,
    pub influence: Influence,
    pub metric: String,
    pub range: ValueRange,
    pub variability: Variability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonNumericalAttributeDef {
    pub key: String,
    pub kind: EntityKind,
    /// Whether entities carry a set of strings rather than a single string.
    #[serde(default)]
    pub set_valued: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<String>,
    pub variability: Variability,
}

/// Attribute definitions for both entity kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSchema {
    #[serde(default)]
    pub numerical: Vec<NumericalAttributeDef>,
    #[serde(default)]
    pub non_numerical: Vec<NonNumericalAttributeDef>,
}

fn num(
    key: &str,
    kind: EntityKind,
    influence: Influence,
    metric: &str,
    range: ValueRange,
) -> NumericalAttributeDef {
    NumericalAttributeDef {
        key: key.into(),
        kind,
        influence,
        metric: metric.into(),
        range,
        variability: Variability::Dynamic,
    }
}

fn non_num(key: &str, kind: EntityKind, set_valued: bool, examples: &[&str]) -> NonNumericalAttributeDef {
    NonNumericalAttributeDef {
        key: key.into(),
        kind,
        set_valued,
        examples: examples.iter().map(|s| s.to_string()).collect(),
        variability: Variability::Static,
    }
}

/// Attribute keys of the standard schema.
pub mod keys {
    pub const IMAGE_HOURLY_LICENSE_PRICE: &str = "hourly_license_price";
    pub const IMAGE_POPULARITY: &str = "popularity";
    pub const VIRTUALIZATION_FORMAT: &str = "virtualization_format";
    pub const OPERATING_SYSTEM: &str = "operating_system";
    pub const OS_VERSION: &str = "os_version";
    pub const IMPLEMENTATION_LANGUAGE: &str = "implementation_language";
    pub const SUPPORTED_LANGUAGES: &str = "supported_languages";

    pub const SERVICE_HOURLY_PRICE: &str = "hourly_price";
    pub const CPU_PERFORMANCE: &str = "cpu_performance";
    pub const RAM_PERFORMANCE: &str = "ram_performance";
    pub const DISK_PERFORMANCE: &str = "disk_performance";
    pub const MAX_LATENCY: &str = "max_latency";
    pub const AVG_LATENCY: &str = "avg_latency";
    pub const UPTIME: &str = "uptime";
    pub const SERVICE_POPULARITY: &str = "service_popularity";
    pub const PROVIDER: &str = "provider";
    pub const LOCATION_COUNTRY: &str = "location_country";
}

impl AttributeSchema {
    /// The default attribute set for VM images and infrastructure services.
    pub fn standard() -> Self {
        use EntityKind::{InfraService, VmImage};
        use Influence::{Negative, Positive};
        let numerical = vec![
            num(keys::IMAGE_HOURLY_LICENSE_PRICE, VmImage, Negative, "$/h", ValueRange::unbounded(0.0)),
            num(keys::IMAGE_POPULARITY, VmImage, Positive, PERCENT_METRIC, ValueRange::bounded(0.0, 100.0)),
            num(keys::SERVICE_HOURLY_PRICE, InfraService, Negative, "$/h", ValueRange::unbounded(0.0)),
            num(keys::CPU_PERFORMANCE, InfraService, Positive, "Flops", ValueRange::unbounded(0.0)),
            num(keys::RAM_PERFORMANCE, InfraService, Positive, "Flops", ValueRange::unbounded(0.0)),
            num(keys::DISK_PERFORMANCE, InfraService, Positive, "Flops", ValueRange::unbounded(0.0)),
            num(keys::MAX_LATENCY, InfraService, Negative, "ms", ValueRange::unbounded(0.0)),
            num(keys::AVG_LATENCY, InfraService, Negative, "ms", ValueRange::unbounded(0.0)),
            num(keys::UPTIME, InfraService, Positive, PERCENT_METRIC, ValueRange::bounded(0.0, 100.0)),
            num(keys::SERVICE_POPULARITY, InfraService, Positive, PERCENT_METRIC, ValueRange::bounded(0.0, 100.0)),
        ];
        let non_numerical = vec![
            non_num(keys::VIRTUALIZATION_FORMAT, VmImage, false, &["Xen", "VMWare", "AMI", "KVM"]),
            non_num(keys::OPERATING_SYSTEM, VmImage, false, &["Linux", "Windows"]),
            non_num(keys::OS_VERSION, VmImage, false, &["Ubuntu 10.4", "CentOS 5.6", "Windows Server 2008"]),
            non_num(keys::IMPLEMENTATION_LANGUAGE, VmImage, false, &["Java", "Perl", "Ruby", "PHP", "Python"]),
            non_num(keys::SUPPORTED_LANGUAGES, VmImage, true, &["Java", "Perl", "Ruby", "PHP", "Python"]),
            non_num(keys::PROVIDER, InfraService, false, &["Amazon", "Rackspace", "GoGrid"]),
            non_num(keys::LOCATION_COUNTRY, InfraService, false, &["Germany", "Australia", "USA", "Ireland"]),
        ];
        Self { numerical, non_numerical }
    }

    pub fn numerical(&self, kind: EntityKind, key: &str) -> Option<&NumericalAttributeDef> {
        self.numerical.iter().find(|d| d.kind == kind && d.key == key)
    }

    pub fn non_numerical(&self, kind: EntityKind, key: &str) -> Option<&NonNumericalAttributeDef> {
        self.non_numerical.iter().find(|d| d.kind == kind && d.key == key)
    }

    pub fn numerical_for(&self, kind: EntityKind) -> impl Iterator<Item = &NumericalAttributeDef> {
        self.numerical.iter().filter(move |d| d.kind == kind)
    }

    pub fn non_numerical_for(&self, kind: EntityKind) -> impl Iterator<Item = &NonNumericalAttributeDef> {
        self.non_numerical.iter().filter(move |d| d.kind == kind)
    }

    fn violations(&self, out: &mut Vec<CatalogError>) {
        let mut seen = HashSet::new();
        for (i, def) in self.numerical.iter().enumerate() {
            let path = format!("attribute_defs.numerical[{i}]");
            if def.key.trim().is_empty() {
                out.push(CatalogError::schema(&path, "attribute key must not be empty"));
            }
            if !seen.insert((def.kind, def.key.as_str())) {
                out.push(CatalogError::schema(&path, format!("duplicate attribute key `{}` for {}", def.key, def.kind)));
            }
            let r = def.range;
            if !(r.min.is_finite() && r.min >= 0.0) {
                out.push(CatalogError::schema(&path, format!("range lower bound {} must be a non-negative number", r.min)));
            }
            if let Some(max) = r.max {
                if !(max.is_finite() && max >= r.min) {
                    out.push(CatalogError::schema(&path, format!("range upper bound {max} must be >= lower bound")));
                }
            }
            if def.metric == PERCENT_METRIC && !(r.min >= 0.0 && r.max.is_some_and(|m| m <= 100.0)) {
                out.push(CatalogError::schema(&path, "percentage attributes must have a range inside [0, 100]"));
            }
        }
        for (i, def) in self.non_numerical.iter().enumerate() {
            let path = format!("attribute_defs.non_numerical[{i}]");
            if def.key.trim().is_empty() {
                out.push(CatalogError::schema(&path, "attribute key must not be empty"));
            }
            if !seen.insert((def.kind, def.key.as_str())) {
                out.push(CatalogError::schema(&path, format!("duplicate attribute key `{}` for {}", def.key, def.kind)));
            }
        }
    }
}

impl Default for AttributeSchema {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provider {
    pub id: String,
    pub name: String,
}

/// Value of a non-numerical attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Single(String),
    Set(Vec<String>),
}

impl AttributeValue {
    pub fn values(&self) -> impl Iterator<Item = &str> {
        let slice: &[String] = match self {
            AttributeValue::Single(s) => std::slice::from_ref(s),
            AttributeValue::Set(v) => v,
        };
        slice.iter().map(String::as_str)
    }
}

/// A VM image or an infrastructure service.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntity {
    pub id: String,
    pub kind: EntityKind,
    pub provider: String,
    pub numerical: BTreeMap<String, f64>,
    pub non_numerical: BTreeMap<String, AttributeValue>,
}

impl CatalogEntity {
    pub fn numerical(&self, key: &str) -> Option<f64> {
        self.numerical.get(key).copied()
    }

    pub fn non_numerical(&self, key: &str) -> Option<&AttributeValue> {
        self.non_numerical.get(key)
    }
}

/// Explicit (image, service) compatibility pairs. Pairs are ordered: the
/// first id is always the image.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencySet {
    by_image: BTreeMap<String, BTreeSet<String>>,
    len: usize,
}

impl DependencySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `false` if the pair was already present.
    pub fn insert(&mut self, image_id: impl Into<String>, service_id: impl Into<String>) -> bool {
        let added = self.by_image.entry(image_id.into()).or_default().insert(service_id.into());
        if added {
            self.len += 1;
        }
        added
    }

    pub fn contains(&self, image_id: &str, service_id: &str) -> bool {
        self.by_image.get(image_id).is_some_and(|s| s.contains(service_id))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Pairs in ascending (image, service) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_image
            .iter()
            .flat_map(|(img, svcs)| svcs.iter().map(move |s| (img.as_str(), s.as_str())))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: value {value} of `{key}` is outside {range}")]
    Range { path: String, key: String, value: f64, range: ValueRange },
    #[error("{path}: unresolved reference `{id}`")]
    DanglingReference { path: String, id: String },
    #[error("{path}: duplicate id `{id}`")]
    DuplicateId { path: String, id: String },
    #[error("catalog must contain at least one image and one service")]
    Empty,
    #[error("unknown entity id `{0}`")]
    UnknownEntity(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CatalogError {
    fn schema(path: &str, message: impl Into<String>) -> Self {
        CatalogError::Schema { path: path.to_string(), message: message.into() }
    }
}

/// One image or service as written in the catalog file; the kind comes from
/// the section it appears in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityRecord {
    pub id: String,
    pub provider: String,
    #[serde(default)]
    pub numerical: BTreeMap<String, f64>,
    #[serde(default)]
    pub non_numerical: BTreeMap<String, AttributeValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependencyRecord {
    pub image: String,
    pub service: String,
}

/// Serialized form of a catalog. Omitting `attribute_defs` selects the
/// standard schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDocument {
    #[serde(default)]
    pub providers: Vec<Provider>,
    #[serde(default)]
    pub attribute_defs: AttributeSchema,
    #[serde(default)]
    pub images: Vec<EntityRecord>,
    #[serde(default)]
    pub services: Vec<EntityRecord>,
    #[serde(default)]
    pub dependencies: Vec<DependencyRecord>,
}

impl CatalogDocument {
    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        toml::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("catalog documents always serialize")
    }

    /// Every violation in the document, in document order.
    pub fn violations(&self) -> Vec<CatalogError> {
        let mut out = Vec::new();
        self.attribute_defs.violations(&mut out);

        let mut provider_ids = HashSet::new();
        for (i, p) in self.providers.iter().enumerate() {
            if p.id.trim().is_empty() {
                out.push(CatalogError::schema(&format!("providers[{i}].id"), "provider id must not be empty"));
            } else if !provider_ids.insert(p.id.as_str()) {
                out.push(CatalogError::DuplicateId { path: format!("providers[{i}]"), id: p.id.clone() });
            }
        }

        if self.images.is_empty() || self.services.is_empty() {
            out.push(CatalogError::Empty);
        }

        let mut entity_ids: HashMap<&str, EntityKind> = HashMap::new();
        for (kind, records) in [(EntityKind::VmImage, &self.images), (EntityKind::InfraService, &self.services)] {
            for (i, rec) in records.iter().enumerate() {
                let path = format!("{}[{}]", kind.section(), if rec.id.is_empty() { i.to_string() } else { rec.id.clone() });
                if rec.id.trim().is_empty() {
                    out.push(CatalogError::schema(&path, "entity id must not be empty"));
                } else if entity_ids.insert(rec.id.as_str(), kind).is_some() {
                    out.push(CatalogError::DuplicateId { path: path.clone(), id: rec.id.clone() });
                }
                if !provider_ids.contains(rec.provider.as_str()) {
                    out.push(CatalogError::DanglingReference { path: format!("{path}.provider"), id: rec.provider.clone() });
                }
                entity_violations(&self.attribute_defs, kind, rec, &path, &mut out);
            }
        }

        let mut seen_pairs = HashSet::new();
        for (i, dep) in self.dependencies.iter().enumerate() {
            let path = format!("dependencies[{i}]");
            if entity_ids.get(dep.image.as_str()) != Some(&EntityKind::VmImage) {
                out.push(CatalogError::DanglingReference { path: format!("{path}.image"), id: dep.image.clone() });
            }
            if entity_ids.get(dep.service.as_str()) != Some(&EntityKind::InfraService) {
                out.push(CatalogError::DanglingReference { path: format!("{path}.service"), id: dep.service.clone() });
            }
            if !seen_pairs.insert((dep.image.as_str(), dep.service.as_str())) {
                out.push(CatalogError::DuplicateId { path, id: format!("({}, {})", dep.image, dep.service) });
            }
        }
        out
    }
}

fn entity_violations(
    schema: &AttributeSchema,
    kind: EntityKind,
    rec: &EntityRecord,
    path: &str,
    out: &mut Vec<CatalogError>,
) {
    for (key, &value) in &rec.numerical {
        let key_path = format!("{path}.numerical.{key}");
        match schema.numerical(kind, key) {
            None => out.push(CatalogError::schema(&key_path, format!("unknown numerical attribute `{key}` for {kind}"))),
            Some(def) if !def.range.contains(value) => out.push(CatalogError::Range {
                path: key_path,
                key: key.clone(),
                value,
                range: def.range,
            }),
            Some(_) => {}
        }
    }
    for (key, value) in &rec.non_numerical {
        let key_path = format!("{path}.non_numerical.{key}");
        match schema.non_numerical(kind, key) {
            None => out.push(CatalogError::schema(&key_path, format!("unknown non-numerical attribute `{key}` for {kind}"))),
            Some(def) => {
                if matches!(value, AttributeValue::Set(_)) && !def.set_valued {
                    out.push(CatalogError::schema(&key_path, "attribute takes a single value, not a set"));
                }
            }
        }
    }
    for def in schema.numerical_for(kind) {
        if !rec.numerical.contains_key(&def.key) {
            out.push(CatalogError::schema(&format!("{path}.numerical"), format!("missing attribute `{}`", def.key)));
        }
    }
    for def in schema.non_numerical_for(kind) {
        if !rec.non_numerical.contains_key(&def.key) {
            out.push(CatalogError::schema(&format!("{path}.non_numerical"), format!("missing attribute `{}`", def.key)));
        }
    }
}

/// Validated, immutable catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    providers: Vec<Provider>,
    schema: AttributeSchema,
    images: Vec<CatalogEntity>,
    services: Vec<CatalogEntity>,
    dependencies: DependencySet,
    index: HashMap<String, (EntityKind, usize)>,
}

impl Catalog {
    /// Validates `doc`, failing on the first violation.
    pub fn from_document(doc: CatalogDocument) -> Result<Self, CatalogError> {
        if let Some(err) = doc.violations().into_iter().next() {
            return Err(err);
        }
        let schema = doc.attribute_defs;
        let to_entity = |kind: EntityKind, rec: EntityRecord| {
            let non_numerical = rec
                .non_numerical
                .into_iter()
                .map(|(k, v)| {
                    let set_valued = schema.non_numerical(kind, &k).is_some_and(|d| d.set_valued);
                    let v = match v {
                        AttributeValue::Single(s) if set_valued => AttributeValue::Set(vec![s]),
                        other => other,
                    };
                    (k, v)
                })
                .collect();
            CatalogEntity { id: rec.id, kind, provider: rec.provider, numerical: rec.numerical, non_numerical }
        };
        let images: Vec<_> = doc.images.into_iter().map(|r| to_entity(EntityKind::VmImage, r)).collect();
        let services: Vec<_> = doc.services.into_iter().map(|r| to_entity(EntityKind::InfraService, r)).collect();
        let mut dependencies = DependencySet::new();
        for dep in doc.dependencies {
            dependencies.insert(dep.image, dep.service);
        }
        let mut index = HashMap::with_capacity(images.len() + services.len());
        for (i, e) in images.iter().enumerate() {
            index.insert(e.id.clone(), (EntityKind::VmImage, i));
        }
        for (i, e) in services.iter().enumerate() {
            index.insert(e.id.clone(), (EntityKind::InfraService, i));
        }
        Ok(Self { providers: doc.providers, schema, images, services, dependencies, index })
    }

    pub fn to_document(&self) -> CatalogDocument {
        let record = |e: &CatalogEntity| EntityRecord {
            id: e.id.clone(),
            provider: e.provider.clone(),
            numerical: e.numerical.clone(),
            non_numerical: e.non_numerical.clone(),
        };
        CatalogDocument {
            providers: self.providers.clone(),
            attribute_defs: self.schema.clone(),
            images: self.images.iter().map(record).collect(),
            services: self.services.iter().map(record).collect(),
            dependencies: self
                .dependencies
                .iter()
                .map(|(i, s)| DependencyRecord { image: i.to_string(), service: s.to_string() })
                .collect(),
        }
    }

    pub fn providers(&self) -> &[Provider] {
        &self.providers
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn images(&self) -> &[CatalogEntity] {
        &self.images
    }

    pub fn services(&self) -> &[CatalogEntity] {
        &self.services
    }

    pub fn entities(&self, kind: EntityKind) -> &[CatalogEntity] {
        match kind {
            EntityKind::VmImage => &self.images,
            EntityKind::InfraService => &self.services,
        }
    }

    pub fn dependencies(&self) -> &DependencySet {
        &self.dependencies
    }

    pub fn entity(&self, id: &str) -> Option<&CatalogEntity> {
        self.index.get(id).map(|&(kind, i)| &self.entities(kind)[i])
    }

    /// Whether `(image_id, service_id)` is a declared dependency. Both ids must
    /// exist in the catalog; a pair given in (service, image) order is never feasible.
    pub fn is_feasible(&self, image_id: &str, service_id: &str) -> Result<bool, CatalogError> {
        for id in [image_id, service_id] {
            if !self.index.contains_key(id) {
                return Err(CatalogError::UnknownEntity(id.to_string()));
            }
        }
        Ok(self.dependencies.contains(image_id, service_id))
    }
}

pub fn load_catalog<R: Read>(mut source: R) -> Result<Catalog, CatalogError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| CatalogError::Io(e.to_string()))?;
    Catalog::from_document(CatalogDocument::parse(&text)?)
}

pub fn save_catalog<W: Write>(catalog: &Catalog, mut sink: W) -> Result<(), CatalogError> {
    sink.write_all(catalog.to_document().to_toml().as_bytes())
        .map_err(|e| CatalogError::Io(e.to_string()))
}

/// How the dependency set of a synthetic catalog is populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DependencyMode {
    /// Every image is compatible with every service.
    #[default]
    CrossProduct,
    /// Images are compatible with the services of their own provider.
    SameProvider,
}

/// Finite interval used to sample attributes whose declared range is unbounded.
pub fn sampling_range(def: &NumericalAttributeDef) -> (f64, f64) {
    if let Some(max) = def.range.max {
        return (def.range.min, max);
    }
    let (lo, hi) = match def.metric.as_str() {
        "$/h" => (0.01, 10.0),
        "Flops" => (1e6, 1e12),
        "ms" => (1.0, 2000.0),
        _ => (def.range.min, def.range.min + 1000.0),
    };
    (lo.max(def.range.min), hi)
}

const SYNTHETIC_PROVIDERS: [(&str, &str); 3] =
    [("amazon", "Amazon Web Services"), ("rackspace", "Rackspace"), ("gogrid", "GoGrid")];

/// Random but plausible catalog over the standard schema. Deterministic in `seed`.
pub fn generate_synthetic_catalog(
    images: usize,
    services: usize,
    seed: u64,
    mode: DependencyMode,
) -> Result<Catalog, CatalogError> {
    if images == 0 || services == 0 {
        return Err(CatalogError::Empty);
    }
    let schema = AttributeSchema::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let providers: Vec<Provider> = SYNTHETIC_PROVIDERS
        .iter()
        .map(|(id, name)| Provider { id: id.to_string(), name: name.to_string() })
        .collect();

    let mut make = |kind: EntityKind, count: usize, prefix: &str| -> Vec<EntityRecord> {
        let width = count.to_string().len();
        (0..count)
            .map(|i| {
                let provider = providers.choose(&mut rng).expect("providers non-empty").id.clone();
                let numerical = schema
                    .numerical_for(kind)
                    .map(|def| {
                        let (lo, hi) = sampling_range(def);
                        (def.key.clone(), rng.random_range(lo..=hi))
                    })
                    .collect();
                let non_numerical = schema
                    .non_numerical_for(kind)
                    .map(|def| (def.key.clone(), sample_non_numerical(def, &mut rng)))
                    .collect();
                EntityRecord { id: format!("{prefix}-{i:0width$}"), provider, numerical, non_numerical }
            })
            .collect()
    };
    let image_records = make(EntityKind::VmImage, images, "img");
    let service_records = make(EntityKind::InfraService, services, "svc");

    let mut dependencies = Vec::new();
    for img in &image_records {
        for svc in &service_records {
            if mode == DependencyMode::CrossProduct || img.provider == svc.provider {
                dependencies.push(DependencyRecord { image: img.id.clone(), service: svc.id.clone() });
            }
        }
    }
    Catalog::from_document(CatalogDocument {
        providers,
        attribute_defs: schema,
        images: image_records,
        services: service_records,
        dependencies,
    })
}

fn sample_non_numerical(def: &NonNumericalAttributeDef, rng: &mut ChaCha8Rng) -> AttributeValue {
    if def.examples.is_empty() {
        return AttributeValue::Single("unspecified".into());
    }
    if def.set_valued {
        let mut picked: Vec<String> = def.examples.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        if picked.is_empty() {
            picked.push(def.examples.choose(rng).expect("non-empty").clone());
        }
        AttributeValue::Set(picked)
    } else {
        AttributeValue::Single(def.examples.choose(rng).expect("non-empty").clone())
    }
}
