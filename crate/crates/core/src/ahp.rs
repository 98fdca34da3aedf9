//! Analytic Hierarchy Process: pairwise comparison matrices, priority vectors,
//! consistency ratios and global criteria weights of a goal hierarchy.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{AttributeSchema, EntityKind, Influence};

/// Saaty's random consistency index, indexed by matrix order (0 and 1 unused).
pub const RANDOM_INDEX: [f64; 11] = [0.0, 0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];
pub const MAX_ORDER: usize = 10;
/// Consistency ratios above this value produce a warning.
pub const CONSISTENCY_THRESHOLD: f64 = 0.1;
pub const SAATY_MIN: f64 = 1.0 / 9.0;
pub const SAATY_MAX: f64 = 9.0;
pub const RECIPROCAL_TOLERANCE: f64 = 1e-9;
/// Offset that keeps reciprocal normalization finite for zero-valued attributes.
pub const NEGATIVE_EPSILON: f64 = 1e-9;

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AhpError {
    #[error("matrix order must be between 1 and {MAX_ORDER}, got {0}")]
    Order(usize),
    #[error("matrix is not square")]
    NotSquare,
    #[error("entry ({i}, {j}) = {value} must be a positive finite number")]
    NonPositive { i: usize, j: usize, value: f64 },
    #[error("diagonal entry {0} must be exactly 1")]
    Diagonal(usize),
    #[error("entries ({i}, {j}) and ({j}, {i}) are not reciprocal")]
    NotReciprocal { i: usize, j: usize },
    #[error("judgment ({i}, {j}) is not an upper-triangle index pair of an order-{order} matrix")]
    JudgmentIndex { i: usize, j: usize, order: usize },
    #[error("judgment ({i}, {j}) appears more than once")]
    DuplicateJudgment { i: usize, j: usize },
    #[error("judgment ({i}, {j}) ratio {ratio} is outside the 1/9..9 scale")]
    OutOfScale { i: usize, j: usize, ratio: f64 },
    #[error("power iteration did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("goal `{node}` compares {matrix} children but has {children}")]
    MatrixOrderMismatch { node: String, matrix: usize, children: usize },
    #[error("goal `{0}` has no children")]
    EmptyGoal(String),
    #[error("hierarchy has no leaf criteria")]
    NoLeaves,
    #[error("criterion `{0}` appears more than once")]
    DuplicateLeaf(String),
    #[error("criterion `{key}` is not a numerical attribute of {kind}")]
    UnknownCriterion { kind: EntityKind, key: String },
    #[error("cannot normalize an empty list")]
    EmptyAlternatives,
    #[error("alternative value {0} must be a non-negative number")]
    NegativeValue(f64),
}

/// Upper-triangle pairwise judgment: child `i` is `ratio` times as important as child `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Judgment {
    pub i: usize,
    pub j: usize,
    pub ratio: f64,
}

/// Positive reciprocal matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl PairwiseMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let order = rows.len();
        if order == 0 || order > MAX_ORDER {
            return Err(AhpError::Order(order));
        }
        if rows.iter().any(|r| r.len() != order) {
            return Err(AhpError::NotSquare);
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        let m = Self { order, entries };
        for i in 0..order {
            for j in 0..order {
                let value = m.get(i, j);
                if !(value.is_finite() && value > 0.0) {
                    return Err(AhpError::NonPositive { i, j, value });
                }
            }
            if m.get(i, i) != 1.0 {
                return Err(AhpError::Diagonal(i));
            }
        }
        for i in 0..order {
            for j in i + 1..order {
                if (m.get(i, j) * m.get(j, i) - 1.0).abs() > RECIPROCAL_TOLERANCE {
                    return Err(AhpError::NotReciprocal { i, j });
                }
            }
        }
        Ok(m)
    }

    /// All-ones matrix: every child equally important.
    pub fn indifferent(order: usize) -> Result<Self, AhpError> {
        if order == 0 || order > MAX_ORDER {
            return Err(AhpError::Order(order));
        }
        Ok(Self { order, entries: vec![1.0; order * order] })
    }

    /// Builds a matrix from user judgments on the 1/9..9 scale. Pairs without
    /// a judgment are treated as indifferent.
    pub fn from_judgments(order: usize, judgments: &[Judgment]) -> Result<Self, AhpError> {
        let mut m = Self::indifferent(order)?;
        let mut seen = HashSet::new();
        for &Judgment { i, j, ratio } in judgments {
            if !(i < j && j < order) {
                return Err(AhpError::JudgmentIndex { i, j, order });
            }
            if !seen.insert((i, j)) {
                return Err(AhpError::DuplicateJudgment { i, j });
            }
            if !(ratio.is_finite() && (SAATY_MIN - 1e-12..=SAATY_MAX).contains(&ratio)) {
                return Err(AhpError::OutOfScale { i, j, ratio });
            }
            m.entries[i * order + j] = ratio;
            m.entries[j * order + i] = 1.0 / ratio;
        }
        Ok(m)
    }

    /// Perfectly consistent matrix `a_ij = w_i / w_j`. Not bound to the judgment scale.
    pub fn from_weights(weights: &[f64]) -> Result<Self, AhpError> {
        let order = weights.len();
        if order == 0 || order > MAX_ORDER {
            return Err(AhpError::Order(order));
        }
        if let Some((i, &value)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(AhpError::NonPositive { i, j: i, value });
        }
        let mut entries = vec![1.0; order * order];
        for i in 0..order {
            for j in 0..order {
                if i != j {
                    entries[i * order + j] = weights[i] / weights[j];
                }
            }
        }
        Ok(Self { order, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.order)
    }

    /// Upper-triangle judgments that differ from indifference.
    pub fn judgments(&self) -> Vec<Judgment> {
        let mut out = Vec::new();
        for i in 0..self.order {
            for j in i + 1..self.order {
                let ratio = self.get(i, j);
                if ratio != 1.0 {
                    out.push(Judgment { i, j, ratio });
                }
            }
        }
        out
    }

    /// The matrix with row and column `index` removed.
    pub fn without(&self, index: usize) -> Result<Self, AhpError> {
        let keep: Vec<usize> = (0..self.order).filter(|&k| k != index).collect();
        if keep.is_empty() {
            return Err(AhpError::Order(0));
        }
        let entries = keep.iter().flat_map(|&i| keep.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Ok(Self { order: keep.len(), entries })
    }

    fn multiply(&self, v: &[f64], out: &mut [f64]) {
        for (row, o) in self.rows().zip(out.iter_mut()) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

/// Normalized principal eigenvector of a comparison matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityVector {
    pub weights: Vec<f64>,
    pub lambda_max: f64,
    pub consistency_ratio: f64,
}

/// Power iteration from the uniform vector.
pub fn priority_vector(m: &PairwiseMatrix) -> Result<PriorityVector, AhpError> {
    let k = m.order();
    let mut w = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    let mut converged = false;
    for _ in 0..POWER_MAX_ITERATIONS {
        m.multiply(&w, &mut next);
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= sum);
        let delta = w.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut w, &mut next);
        if delta < POWER_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AhpError::NonConvergence(POWER_MAX_ITERATIONS));
    }
    // w sums to 1, so the components of Aw sum to lambda_max.
    m.multiply(&w, &mut next);
    let lambda_max: f64 = next.iter().sum();
    let consistency_ratio = if k <= 2 {
        0.0
    } else {
        let ci = (lambda_max - k as f64) / (k as f64 - 1.0);
        (ci / RANDOM_INDEX[k]).max(0.0)
    };
    Ok(PriorityVector { weights: w, lambda_max, consistency_ratio })
}

/// Node of a goal/criteria hierarchy. Leaves bind to numerical attribute keys.
#[derive(Debug, Clone, PartialEq)]
pub enum GoalNode {
    Goal { name: String, children: Vec<GoalNode>, comparison: PairwiseMatrix },
    Criterion { name: String, attribute: String },
}

impl GoalNode {
    pub fn goal(name: impl Into<String>, children: Vec<GoalNode>) -> Result<Self, AhpError> {
        let comparison = PairwiseMatrix::indifferent(children.len())?;
        Ok(GoalNode::Goal { name: name.into(), children, comparison })
    }

    pub fn goal_with(name: impl Into<String>, children: Vec<GoalNode>, comparison: PairwiseMatrix) -> Self {
        GoalNode::Goal { name: name.into(), children, comparison }
    }

    pub fn criterion(name: impl Into<String>, attribute: impl Into<String>) -> Self {
        GoalNode::Criterion { name: name.into(), attribute: attribute.into() }
    }

    pub fn name(&self) -> &str {
        match self {
            GoalNode::Goal { name, .. } | GoalNode::Criterion { name, .. } => name,
        }
    }

    fn visit_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            GoalNode::Goal { children, .. } => children.iter().for_each(|c| c.visit_leaves(out)),
            GoalNode::Criterion { attribute, .. } => out.push(attribute),
        }
    }

    fn check(&self) -> Result<(), AhpError> {
        if let GoalNode::Goal { name, children, comparison } = self {
            if children.is_empty() {
                return Err(AhpError::EmptyGoal(name.clone()));
            }
            if comparison.order() != children.len() {
                return Err(AhpError::MatrixOrderMismatch {
                    node: name.clone(),
                    matrix: comparison.order(),
                    children: children.len(),
                });
            }
            children.iter().try_for_each(GoalNode::check)?;
        }
        Ok(())
    }

    /// Drops every node whose name or attribute is in `removed`, along with
    /// goals left without children. Returns `None` if nothing remains.
    fn prune(&self, removed: &[&str]) -> Result<Option<GoalNode>, AhpError> {
        match self {
            GoalNode::Criterion { name, attribute } => {
                let gone = removed.iter().any(|r| r == name || r == attribute);
                Ok((!gone).then(|| self.clone()))
            }
            GoalNode::Goal { name, children, comparison } => {
                if removed.contains(&name.as_str()) {
                    return Ok(None);
                }
                let mut matrix = comparison.clone();
                let mut kept = Vec::new();
                let mut offset = 0;
                for (idx, child) in children.iter().enumerate() {
                    match child.prune(removed)? {
                        Some(c) => kept.push(c),
                        None => {
                            if matrix.order() > 1 {
                                matrix = matrix.without(idx - offset)?;
                            }
                            offset += 1;
                        }
                    }
                }
                if kept.is_empty() {
                    return Ok(None);
                }
                Ok(Some(GoalNode::Goal { name: name.clone(), children: kept, comparison: matrix }))
            }
        }
    }

    fn accumulate(&self, weight: f64, out: &mut GlobalWeights) -> Result<(), AhpError> {
        match self {
            GoalNode::Criterion { attribute, .. } => {
                out.weights.insert(attribute.clone(), weight);
            }
            GoalNode::Goal { name, children, comparison } => {
                let pv = priority_vector(comparison)?;
                if pv.consistency_ratio > CONSISTENCY_THRESHOLD {
                    out.warnings.push(ConsistencyWarning { goal: name.clone(), consistency_ratio: pv.consistency_ratio });
                }
                for (child, local) in children.iter().zip(&pv.weights) {
                    child.accumulate(weight * local, out)?;
                }
            }
        }
        Ok(())
    }
}

/// Weighted tree of goals whose leaves are attribute criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GoalNodeDocument", into = "GoalNodeDocument")]
pub struct GoalHierarchy {
    root: GoalNode,
}

impl GoalHierarchy {
    pub fn new(root: GoalNode) -> Result<Self, AhpError> {
        root.check()?;
        let leaves = {
            let mut v = Vec::new();
            root.visit_leaves(&mut v);
            v
        };
        if leaves.is_empty() {
            return Err(AhpError::NoLeaves);
        }
        let mut seen = HashSet::new();
        for leaf in &leaves {
            if !seen.insert(*leaf) {
                return Err(AhpError::DuplicateLeaf(leaf.to_string()));
            }
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &GoalNode {
        &self.root
    }

    /// Attribute keys bound to the leaves, in tree order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut v = Vec::new();
        self.root.visit_leaves(&mut v);
        v
    }

    /// Requires every leaf to name a numerical attribute of `kind`.
    pub fn check_leaves(&self, schema: &AttributeSchema, kind: EntityKind) -> Result<(), AhpError> {
        for key in self.leaves() {
            if schema.numerical(kind, key).is_none() {
                return Err(AhpError::UnknownCriterion { kind, key: key.to_string() });
            }
        }
        Ok(())
    }

    /// The hierarchy with the named goals or criteria deselected.
    pub fn without(&self, deselected: &[&str]) -> Result<Self, AhpError> {
        match self.root.prune(deselected)? {
            Some(root) => Self::new(root),
            None => Err(AhpError::NoLeaves),
        }
    }

    /// Two goals, cheapest and best quality, with one criterion each.
    pub fn default_image() -> Self {
        use crate::catalog::keys::*;
        let g = |name: &str, children: Vec<GoalNode>| GoalNode::goal(name, children).expect("static hierarchy");
        let root = g(
            "Best VM image",
            vec![
                g("Cheapest", vec![GoalNode::criterion("Hourly license price", IMAGE_HOURLY_LICENSE_PRICE)]),
                g("Best quality", vec![GoalNode::criterion("Popularity", IMAGE_POPULARITY)]),
            ],
        );
        Self::new(root).expect("static hierarchy")
    }

    /// Cheapest, best latency and best quality service; performance splits
    /// into CPU, RAM and disk.
    pub fn default_service() -> Self {
        use crate::catalog::keys::*;
        let g = |name: &str, children: Vec<GoalNode>| GoalNode::goal(name, children).expect("static hierarchy");
        let root = g(
            "Best infrastructure service",
            vec![
                g("Cheapest", vec![GoalNode::criterion("Hourly price", SERVICE_HOURLY_PRICE)]),
                g(
                    "Best latency",
                    vec![
                        GoalNode::criterion("Max. latency", MAX_LATENCY),
                        GoalNode::criterion("Avg. latency", AVG_LATENCY),
                    ],
                ),
                g(
                    "Best quality",
                    vec![
                        g(
                            "Performance",
                            vec![
                                GoalNode::criterion("CPU performance", CPU_PERFORMANCE),
                                GoalNode::criterion("RAM performance", RAM_PERFORMANCE),
                                GoalNode::criterion("Disk performance", DISK_PERFORMANCE),
                            ],
                        ),
                        GoalNode::criterion("Uptime", UPTIME),
                        GoalNode::criterion("Service popularity", SERVICE_POPULARITY),
                    ],
                ),
            ],
        );
        Self::new(root).expect("static hierarchy")
    }

    /// Single hierarchy over image-service pairs. Leaves are prefixed with
    /// `image.` or `service.`; the root weighs the two subtrees `image_weight`
    /// to `service_weight`.
    pub fn integrated(image: &GoalHierarchy, service: &GoalHierarchy, image_weight: f64, service_weight: f64) -> Result<Self, AhpError> {
        fn prefixed(node: &GoalNode, prefix: &str) -> GoalNode {
            match node {
                GoalNode::Criterion { name, attribute } => GoalNode::criterion(name.clone(), format!("{prefix}{attribute}")),
                GoalNode::Goal { name, children, comparison } => GoalNode::goal_with(
                    name.clone(),
                    children.iter().map(|c| prefixed(c, prefix)).collect(),
                    comparison.clone(),
                ),
            }
        }
        let root = GoalNode::goal_with(
            "Best combination",
            vec![prefixed(&image.root, IMAGE_PREFIX), prefixed(&service.root, SERVICE_PREFIX)],
            PairwiseMatrix::from_weights(&[image_weight, service_weight])?,
        );
        Self::new(root)
    }

    pub fn default_integrated() -> Self {
        Self::integrated(&Self::default_image(), &Self::default_service(), 1.0, 1.0).expect("static hierarchy")
    }
}

pub const IMAGE_PREFIX: &str = "image.";
pub const SERVICE_PREFIX: &str = "service.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyWarning {
    pub goal: String,
    pub consistency_ratio: f64,
}

/// Global weight per leaf criterion, plus goals whose judgments are inconsistent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlobalWeights {
    pub weights: BTreeMap<String, f64>,
    pub warnings: Vec<ConsistencyWarning>,
}

/// Product of local priorities along each root-to-leaf path.
pub fn global_weights(h: &GoalHierarchy) -> Result<GlobalWeights, AhpError> {
    let mut out = GlobalWeights::default();
    h.root.accumulate(1.0, &mut out)?;
    Ok(out)
}

/// Distributive normalization with [`NEGATIVE_EPSILON`] for negative attributes.
pub fn normalize_alternatives(values: &[f64], influence: Influence) -> Result<Vec<f64>, AhpError> {
    normalize_with_epsilon(values, influence, NEGATIVE_EPSILON)
}

/// Positive: `v_i / sum(v)`. Negative: `(1/(v_i+eps)) / sum(1/(v_j+eps))`.
/// An all-zero positive column normalizes to the uniform vector.
pub fn normalize_with_epsilon(values: &[f64], influence: Influence, epsilon: f64) -> Result<Vec<f64>, AhpError> {
    if values.is_empty() {
        return Err(AhpError::EmptyAlternatives);
    }
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(AhpError::NegativeValue(bad));
    }
    let transformed: Vec<f64> = match influence {
        Influence::Positive => values.to_vec(),
        Influence::Negative => values.iter().map(|v| 1.0 / (v + epsilon)).collect(),
    };
    let total: f64 = transformed.iter().sum();
    if total == 0.0 || !total.is_finite() {
        let uniform = 1.0 / values.len() as f64;
        return Ok(vec![uniform; values.len()]);
    }
    Ok(transformed.into_iter().map(|v| v / total).collect())
}

/// Serialized hierarchy node. A node with `attribute` is a criterion; otherwise
/// its `children` are compared through `judgments`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalNodeDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub judgments: Vec<Judgment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<GoalNodeDocument>,
}

impl GoalNodeDocument {
    fn into_node(self) -> Result<GoalNode, AhpError> {
        match self.attribute {
            Some(attribute) if self.children.is_empty() => Ok(GoalNode::criterion(self.name, attribute)),
            Some(_) => Err(AhpError::MatrixOrderMismatch { node: self.name, matrix: 0, children: self.children.len() }),
            None => {
                if self.children.is_empty() {
                    return Err(AhpError::EmptyGoal(self.name));
                }
                let comparison = PairwiseMatrix::from_judgments(self.children.len(), &self.judgments)?;
                let children = self.children.into_iter().map(Self::into_node).collect::<Result<_, _>>()?;
                Ok(GoalNode::goal_with(self.name, children, comparison))
            }
        }
    }

    fn from_node(node: &GoalNode) -> Self {
        match node {
            GoalNode::Criterion { name, attribute } => Self {
                name: name.clone(),
                attribute: Some(attribute.clone()),
                judgments: Vec::new(),
                children: Vec::new(),
            },
            GoalNode::Goal { name, children, comparison } => Self {
                name: name.clone(),
                attribute: None,
                judgments: comparison.judgments(),
                children: children.iter().map(Self::from_node).collect(),
            },
        }
    }
}

impl TryFrom<GoalNodeDocument> for GoalHierarchy {
    type Error = AhpError;

    fn try_from(doc: GoalNodeDocument) -> Result<Self, Self::Error> {
        GoalHierarchy::new(doc.into_node()?)
    }
}

impl From<GoalHierarchy> for GoalNodeDocument {
    fn from(h: GoalHierarchy) -> Self {
        GoalNodeDocument::from_node(&h.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn two_by_two() {
        let m = PairwiseMatrix::new(vec![vec![1.0, 3.0], vec![1.0 / 3.0, 1.0]]).unwrap();
        let pv = priority_vector(&m).unwrap();
        assert!(close(&pv.weights, &[0.75, 0.25], 1e-9), "{:?}", pv.weights);
        assert_eq!(pv.consistency_ratio, 0.0);
    }

    #[test]
    fn consistent_three_by_three() {
        let m = PairwiseMatrix::new(vec![vec![1.0, 2.0, 4.0], vec![0.5, 1.0, 2.0], vec![0.25, 0.5, 1.0]]).unwrap();
        let pv = priority_vector(&m).unwrap();
        assert!(close(&pv.weights, &[4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0], 1e-9), "{:?}", pv.weights);
        assert!(pv.consistency_ratio < 1e-9);
        assert!((pv.lambda_max - 3.0).abs() < 1e-9);
    }

    #[test]
    fn indifferent_three() {
        let pv = priority_vector(&PairwiseMatrix::indifferent(3).unwrap()).unwrap();
        assert!(close(&pv.weights, &[1.0 / 3.0; 3], 1e-12));
        assert_eq!(pv.consistency_ratio, 0.0);
    }

    #[test]
    fn literal_identity_is_not_reciprocal() {
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!(matches!(PairwiseMatrix::new(id), Err(AhpError::NonPositive { .. })));
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(PairwiseMatrix::new(vec![]), Err(AhpError::Order(0))));
        assert!(matches!(
            PairwiseMatrix::new(vec![vec![1.0, 2.0], vec![0.4, 1.0]]),
            Err(AhpError::NotReciprocal { .. })
        ));
        assert!(matches!(PairwiseMatrix::new(vec![vec![2.0]]), Err(AhpError::Diagonal(0))));
        assert!(matches!(PairwiseMatrix::indifferent(11), Err(AhpError::Order(11))));
    }

    #[test]
    fn judgments_are_scale_bounded() {
        let err = PairwiseMatrix::from_judgments(2, &[Judgment { i: 0, j: 1, ratio: 10.0 }]).unwrap_err();
        assert!(matches!(err, AhpError::OutOfScale { .. }));
        let err = PairwiseMatrix::from_judgments(2, &[Judgment { i: 1, j: 0, ratio: 2.0 }]).unwrap_err();
        assert!(matches!(err, AhpError::JudgmentIndex { .. }));
        let m = PairwiseMatrix::from_judgments(3, &[Judgment { i: 0, j: 2, ratio: 1.0 / 9.0 }]).unwrap();
        assert_eq!(m.get(2, 0), 9.0);
        assert_eq!(m.judgments(), vec![Judgment { i: 0, j: 2, ratio: 1.0 / 9.0 }]);
    }

    #[test]
    fn cyclic_judgments_are_inconsistent() {
        // a > b, b > c, c > a, all strongly
        let m = PairwiseMatrix::from_judgments(
            3,
            &[Judgment { i: 0, j: 1, ratio: 7.0 }, Judgment { i: 1, j: 2, ratio: 7.0 }, Judgment { i: 0, j: 2, ratio: 1.0 / 7.0 }],
        )
        .unwrap();
        assert!(priority_vector(&m).unwrap().consistency_ratio > CONSISTENCY_THRESHOLD);
    }

    #[test]
    fn single_level_indifference() {
        let h = GoalHierarchy::new(
            GoalNode::goal("root", vec![GoalNode::criterion("a", "a"), GoalNode::criterion("b", "b")]).unwrap(),
        )
        .unwrap();
        let gw = global_weights(&h).unwrap();
        assert_eq!(gw.weights["a"], 0.5);
        assert_eq!(gw.weights["b"], 0.5);
    }

    #[test]
    fn two_level_product() {
        let left = GoalNode::goal("left", vec![GoalNode::criterion("l1", "l1"), GoalNode::criterion("l2", "l2")]).unwrap();
        let root = GoalNode::goal_with(
            "root",
            vec![left, GoalNode::criterion("r", "r")],
            PairwiseMatrix::from_judgments(2, &[Judgment { i: 0, j: 1, ratio: 3.0 }]).unwrap(),
        );
        let gw = global_weights(&GoalHierarchy::new(root).unwrap()).unwrap();
        assert!((gw.weights["l1"] - 0.375).abs() < 1e-12);
        assert!((gw.weights["l2"] - 0.375).abs() < 1e-12);
        assert!((gw.weights["r"] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn default_service_hierarchy_weights() {
        // Hand product of uniform local weights: 1/3 per top goal; quality has
        // three children (performance, uptime, popularity), so performance is
        // 1/9 and each of its three leaves 1/27; the latency leaves are 1/6.
        let gw = global_weights(&GoalHierarchy::default_service()).unwrap();
        let expect = [
            ("hourly_price", 1.0 / 3.0),
            ("max_latency", 1.0 / 6.0),
            ("avg_latency", 1.0 / 6.0),
            ("cpu_performance", 1.0 / 27.0),
            ("ram_performance", 1.0 / 27.0),
            ("disk_performance", 1.0 / 27.0),
            ("uptime", 1.0 / 9.0),
            ("service_popularity", 1.0 / 9.0),
        ];
        assert_eq!(gw.weights.len(), expect.len());
        for (k, w) in expect {
            assert!((gw.weights[k] - w).abs() < 1e-12, "{k}: {}", gw.weights[k]);
        }
        assert!(gw.warnings.is_empty());
    }

    #[test]
    fn default_image_hierarchy_weights() {
        let gw = global_weights(&GoalHierarchy::default_image()).unwrap();
        assert_eq!(gw.weights["hourly_license_price"], 0.5);
        assert_eq!(gw.weights["popularity"], 0.5);
        let schema = AttributeSchema::standard();
        GoalHierarchy::default_image().check_leaves(&schema, EntityKind::VmImage).unwrap();
        GoalHierarchy::default_service().check_leaves(&schema, EntityKind::InfraService).unwrap();
        assert!(GoalHierarchy::default_image().check_leaves(&schema, EntityKind::InfraService).is_err());
    }

    #[test]
    fn deselection_prunes_goals_and_matrices() {
        let h = GoalHierarchy::default_service().without(&["Best latency", "uptime"]).unwrap();
        let gw = global_weights(&h).unwrap();
        assert!((gw.weights["hourly_price"] - 0.5).abs() < 1e-12);
        assert!((gw.weights["service_popularity"] - 0.25).abs() < 1e-12);
        assert!(!gw.weights.contains_key("max_latency"));
        assert!(matches!(
            GoalHierarchy::default_image().without(&["Cheapest", "Best quality"]),
            Err(AhpError::NoLeaves)
        ));
    }

    #[test]
    fn deselection_keeps_remaining_judgments() {
        let root = GoalNode::goal_with(
            "root",
            vec![GoalNode::criterion("a", "a"), GoalNode::criterion("b", "b"), GoalNode::criterion("c", "c")],
            PairwiseMatrix::from_weights(&[4.0, 2.0, 1.0]).unwrap(),
        );
        let h = GoalHierarchy::new(root).unwrap().without(&["b"]).unwrap();
        let gw = global_weights(&h).unwrap();
        assert!((gw.weights["a"] - 0.8).abs() < 1e-12);
        assert!((gw.weights["c"] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn hierarchy_validation() {
        let root = GoalNode::goal_with("root", vec![GoalNode::criterion("a", "a")], PairwiseMatrix::indifferent(2).unwrap());
        assert!(matches!(GoalHierarchy::new(root), Err(AhpError::MatrixOrderMismatch { .. })));
        let dup = GoalNode::goal("root", vec![GoalNode::criterion("a", "x"), GoalNode::criterion("b", "x")]).unwrap();
        assert!(matches!(GoalHierarchy::new(dup), Err(AhpError::DuplicateLeaf(_))));
    }

    #[test]
    fn hierarchy_document_round_trip() {
        let h = GoalHierarchy::default_service();
        let text = toml::to_string(&h).unwrap();
        let back: GoalHierarchy = toml::from_str(&text).unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn integrated_root_split() {
        let h = GoalHierarchy::integrated(&GoalHierarchy::default_image(), &GoalHierarchy::default_service(), 0.75, 0.25).unwrap();
        let gw = global_weights(&h).unwrap();
        let image: f64 = gw.weights.iter().filter(|(k, _)| k.starts_with(IMAGE_PREFIX)).map(|(_, w)| w).sum();
        assert!((image - 0.75).abs() < 1e-12);
        assert!((gw.weights["image.popularity"] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_alternatives(&[2.0, 2.0], Influence::Positive).unwrap(), vec![0.5, 0.5]);
        assert_eq!(normalize_alternatives(&[1.0, 3.0], Influence::Positive).unwrap(), vec![0.25, 0.75]);
        // (1/1) / (1/1 + 1/3) = 0.75
        let neg = normalize_with_epsilon(&[1.0, 3.0], Influence::Negative, 0.0).unwrap();
        assert!(close(&neg, &[0.75, 0.25], 1e-15));
        assert_eq!(normalize_alternatives(&[0.0, 0.0, 0.0, 0.0], Influence::Positive).unwrap(), vec![0.25; 4]);
        let free = normalize_alternatives(&[0.0, 1.0], Influence::Negative).unwrap();
        assert!(free[0] > 0.999_999 && (free.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(normalize_alternatives(&[], Influence::Positive).is_err());
        assert!(normalize_alternatives(&[-1.0], Influence::Positive).is_err());
    }
}
