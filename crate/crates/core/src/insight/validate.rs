//! Lenient reading of insight documents into drafts, with slot reporting.
//!
//! A document coming from the template-filling step or from the controlled
//! parser may be incomplete. [`validate`] never stops at the first problem: it
//! walks the whole document and returns either a complete insight or every
//! slot that still needs the user's attention.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::model::*;
use super::InsightError;

/// Whether a slot of the template carries a usable value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotState {
    Filled,
    Missing,
    Ambiguous,
}

/// One field of an insight document that needs completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotStatus {
    /// Dotted path rooted at the insight type, e.g. `read.threshold` or
    /// `comparison.conditions[0].bounds`.
    pub path: String,
    pub state: SlotState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
    /// Suggested value shown next to an input field; never applied silently.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl SlotStatus {
    pub fn missing(path: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            state: SlotState::Missing,
            candidates: None,
            hint: None,
            note: None,
        }
    }

    pub fn ambiguous(path: impl Into<String>) -> Self {
        Self {
            state: SlotState::Ambiguous,
            ..Self::missing(path)
        }
    }

    pub fn with_candidates(mut self, candidates: Vec<String>) -> Self {
        self.candidates = Some(candidates);
        self
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = Some(hint.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DraftPredicate {
    pub comparator: Option<Comparator>,
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DraftVariable {
    pub feature: Option<String>,
    pub facet: Option<Facet>,
    pub aggregator: Option<Aggregator>,
    pub predicate: Option<DraftPredicate>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DraftCondition {
    pub feature: Option<String>,
    pub op: Option<ConditionOp>,
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DraftBody {
    Read {
        variable: DraftVariable,
        comparator: Option<ReadComparator>,
        threshold: Option<f64>,
    },
    Correlation {
        x: DraftVariable,
        y: DraftVariable,
        direction: Option<Direction>,
    },
    Comparison {
        left: DraftVariable,
        right: DraftVariable,
        relation: Option<Relation>,
    },
}

/// A possibly incomplete insight; every leaf may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct InsightDraft {
    pub body: DraftBody,
    pub conditions: Vec<DraftCondition>,
}

/// Result of [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Validation {
    Valid(StructuredInsight),
    Incomplete {
        draft: InsightDraft,
        slots: Vec<SlotStatus>,
    },
}

impl Validation {
    pub fn slots(&self) -> &[SlotStatus] {
        match self {
            Validation::Valid(_) => &[],
            Validation::Incomplete { slots, .. } => slots,
        }
    }
}

/// Validates an insight document.
pub fn validate(document: &Value) -> Result<Validation, InsightError> {
    let (draft, slots) = InsightDraft::read(document)?;
    if slots.is_empty() {
        if let Some(insight) = draft.complete() {
            return Ok(Validation::Valid(insight));
        }
    }
    Ok(Validation::Incomplete { draft, slots })
}

impl DraftVariable {
    pub fn from_variable(v: &TVariable) -> Self {
        Self {
            feature: Some(v.feature.clone()),
            facet: Some(v.facet),
            aggregator: Some(v.aggregator),
            predicate: v.predicate.map(|p| DraftPredicate {
                comparator: Some(p.comparator),
                constant: Some(p.constant),
            }),
        }
    }

    fn complete(&self) -> Option<TVariable> {
        let predicate = match self.predicate {
            None => None,
            Some(p) => Some(Predicate::new(p.comparator?, p.constant?)),
        };
        Some(TVariable {
            feature: self.feature.clone()?,
            facet: self.facet?,
            aggregator: self.aggregator?,
            predicate,
        })
    }

    fn to_value(self: &DraftVariable) -> Value {
        json!({
            "feature": self.feature,
            "facet": self.facet.map(Facet::as_str),
            "aggregator": self.aggregator.map(Aggregator::as_str),
            "predicate": self.predicate.map(|p| json!({
                "comparator": p.comparator.map(Comparator::as_str),
                "constant": p.constant,
            })),
        })
    }

    fn same_column(&self, other: &DraftVariable) -> bool {
        match (&self.feature, &other.feature, self.facet, other.facet) {
            (Some(a), Some(b), Some(fa), Some(fb)) => a == b && fa == fb,
            _ => false,
        }
    }
}

impl DraftCondition {
    fn complete(&self) -> Option<TCondition> {
        Some(TCondition {
            feature: self.feature.clone()?,
            op: self.op?,
            bounds: self.bounds.clone()?,
        })
    }

    fn to_value(&self) -> Value {
        json!({
            "feature": self.feature,
            "facet": "value",
            "op": self.op.map(ConditionOp::as_str),
            "bounds": self.bounds.as_ref().map(Bounds::to_value),
        })
    }
}

impl From<&StructuredInsight> for InsightDraft {
    fn from(insight: &StructuredInsight) -> Self {
        let body = match insight {
            StructuredInsight::Read(r) => DraftBody::Read {
                variable: DraftVariable::from_variable(&r.variable),
                comparator: Some(r.comparator),
                threshold: Some(r.threshold),
            },
            StructuredInsight::Correlation(c) => DraftBody::Correlation {
                x: DraftVariable::from_variable(&c.x),
                y: DraftVariable::from_variable(&c.y),
                direction: Some(c.direction),
            },
            StructuredInsight::Comparison(c) => DraftBody::Comparison {
                left: DraftVariable::from_variable(&c.left),
                right: DraftVariable::from_variable(&c.right),
                relation: Some(c.relation),
            },
        };
        let conditions = insight
            .conditions()
            .iter()
            .map(|c| DraftCondition {
                feature: Some(c.feature.clone()),
                op: Some(c.op),
                bounds: Some(c.bounds.clone()),
            })
            .collect();
        InsightDraft { body, conditions }
    }
}

impl InsightDraft {
    pub fn kind(&self) -> InsightKind {
        match self.body {
            DraftBody::Read { .. } => InsightKind::Read,
            DraftBody::Correlation { .. } => InsightKind::Correlation,
            DraftBody::Comparison { .. } => InsightKind::Comparison,
        }
    }

    /// Variables with their slot path prefix, e.g. `("comparison.left", ..)`.
    pub fn variables(&self) -> Vec<(String, &DraftVariable)> {
        let tag = self.kind().as_str();
        match &self.body {
            DraftBody::Read { variable, .. } => vec![(format!("{tag}.variable"), variable)],
            DraftBody::Correlation { x, y, .. } => {
                vec![(format!("{tag}.x"), x), (format!("{tag}.y"), y)]
            }
            DraftBody::Comparison { left, right, .. } => {
                vec![(format!("{tag}.left"), left), (format!("{tag}.right"), right)]
            }
        }
    }

    pub fn variables_mut(&mut self) -> Vec<&mut DraftVariable> {
        match &mut self.body {
            DraftBody::Read { variable, .. } => vec![variable],
            DraftBody::Correlation { x, y, .. } => vec![x, y],
            DraftBody::Comparison { left, right, .. } => vec![left, right],
        }
    }

    /// Converts to a complete insight when every leaf is present and the
    /// structural invariants hold. Does not report why; use [`validate`].
    pub fn complete(&self) -> Option<StructuredInsight> {
        let conditions = self
            .conditions
            .iter()
            .map(DraftCondition::complete)
            .collect::<Option<Vec<_>>>()?;
        let insight = match &self.body {
            DraftBody::Read {
                variable,
                comparator,
                threshold,
            } => StructuredInsight::Read(ReadInsight {
                variable: variable.complete()?,
                comparator: (*comparator)?,
                threshold: (*threshold)?,
                conditions,
            }),
            DraftBody::Correlation { x, y, direction } => {
                StructuredInsight::Correlation(CorrelationInsight {
                    x: x.complete()?,
                    y: y.complete()?,
                    direction: (*direction)?,
                    conditions,
                })
            }
            DraftBody::Comparison {
                left,
                right,
                relation,
            } => StructuredInsight::Comparison(ComparisonInsight {
                left: left.complete()?,
                right: right.complete()?,
                relation: (*relation)?,
                conditions,
            }),
        };
        let (_, slots) = InsightDraft::read(&insight.to_value()).ok()?;
        slots.is_empty().then_some(insight)
    }

    /// Document form with explicit nulls for every absent leaf.
    pub fn to_document(&self) -> Value {
        let mut map = Map::new();
        map.insert("schema".into(), json!(SCHEMA_VERSION));
        map.insert("type".into(), json!(self.kind().as_str()));
        match &self.body {
            DraftBody::Read {
                variable,
                comparator,
                threshold,
            } => {
                map.insert("variable".into(), variable.to_value());
                map.insert("comparator".into(), json!(comparator.map(|c| c.as_str())));
                map.insert("threshold".into(), json!(threshold));
            }
            DraftBody::Correlation { x, y, direction } => {
                map.insert("x".into(), x.to_value());
                map.insert("y".into(), y.to_value());
                map.insert("direction".into(), json!(direction.map(|d| d.as_str())));
            }
            DraftBody::Comparison {
                left,
                right,
                relation,
            } => {
                map.insert("left".into(), left.to_value());
                map.insert("right".into(), right.to_value());
                map.insert("relation".into(), json!(relation.map(|r| r.as_str())));
            }
        }
        map.insert(
            "conditions".into(),
            if self.conditions.is_empty() {
                Value::Null
            } else {
                Value::Array(self.conditions.iter().map(DraftCondition::to_value).collect())
            },
        );
        Value::Object(map)
    }

    /// Reads a document leniently, collecting every slot problem.
    pub fn read(document: &Value) -> Result<(InsightDraft, Vec<SlotStatus>), InsightError> {
        let obj = document.as_object().ok_or(InsightError::NotAnObject)?;
        if let Some(schema) = obj.get("schema") {
            if !schema.is_null() && schema.as_str() != Some(SCHEMA_VERSION) {
                return Err(InsightError::UnsupportedSchema(schema.to_string()));
            }
        }
        let tag = obj.get("type").and_then(Value::as_str).unwrap_or("");
        let kind = InsightKind::parse(&tag.trim().to_ascii_lowercase())
            .ok_or_else(|| InsightError::UnknownInsightType(tag.to_string()))?;

        let mut slots = Vec::new();
        let prefix = kind.as_str();
        let body = match kind {
            InsightKind::Read => {
                let path = format!("{prefix}.variable");
                let variable = read_variable(obj.get("variable"), &path, Role::Aggregated, &mut slots);
                let comparator = read_keyword::<ReadComparator>(
                    obj.get("comparator"),
                    &format!("{prefix}.comparator"),
                    ReadComparator::parse,
                    ReadComparator::candidates(),
                    &mut slots,
                );
                let threshold = read_number(obj.get("threshold"), &format!("{prefix}.threshold"), &mut slots);
                if let (Some(t), Some(Aggregator::Fraction)) = (threshold, variable.aggregator) {
                    if !(0.0..=1.0).contains(&t) {
                        slots.push(
                            SlotStatus::ambiguous(format!("{prefix}.threshold"))
                                .with_hint(format!("{}", t / 100.0))
                                .with_note("a fraction threshold must lie in [0, 1]"),
                        );
                    }
                }
                DraftBody::Read {
                    variable,
                    comparator,
                    threshold,
                }
            }
            InsightKind::Correlation => {
                let x = read_variable(obj.get("x"), &format!("{prefix}.x"), Role::PerRow, &mut slots);
                let y = read_variable(obj.get("y"), &format!("{prefix}.y"), Role::PerRow, &mut slots);
                if x.same_column(&y) {
                    slots.push(
                        SlotStatus::ambiguous(format!("{prefix}.y"))
                            .with_note("x and y refer to the same feature and facet"),
                    );
                }
                let direction = read_keyword::<Direction>(
                    obj.get("direction"),
                    &format!("{prefix}.direction"),
                    Direction::parse,
                    Direction::candidates(),
                    &mut slots,
                );
                DraftBody::Correlation { x, y, direction }
            }
            InsightKind::Comparison => {
                let left = read_variable(obj.get("left"), &format!("{prefix}.left"), Role::Aggregated, &mut slots);
                let right = read_variable(obj.get("right"), &format!("{prefix}.right"), Role::Aggregated, &mut slots);
                if left.complete().is_some() && left.complete() == right.complete() {
                    slots.push(
                        SlotStatus::ambiguous(format!("{prefix}.right"))
                            .with_note("both sides of the comparison are the same variable"),
                    );
                }
                let relation = read_keyword::<Relation>(
                    obj.get("relation"),
                    &format!("{prefix}.relation"),
                    Relation::parse,
                    Relation::candidates(),
                    &mut slots,
                );
                DraftBody::Comparison {
                    left,
                    right,
                    relation,
                }
            }
        };

        let conditions = match obj.get("conditions") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, item)| read_condition(item, &format!("{prefix}.conditions[{i}]"), &mut slots))
                .collect(),
            Some(_) => {
                slots.push(
                    SlotStatus::ambiguous(format!("{prefix}.conditions"))
                        .with_note("conditions must be a list"),
                );
                Vec::new()
            }
        };

        Ok((InsightDraft { body, conditions }, slots))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    PerRow,
    Aggregated,
}

fn read_keyword<K>(
    value: Option<&Value>,
    path: &str,
    parse: fn(&str) -> Option<K>,
    candidates: Vec<String>,
    slots: &mut Vec<SlotStatus>,
) -> Option<K> {
    match value {
        None | Some(Value::Null) => {
            slots.push(SlotStatus::missing(path).with_candidates(candidates));
            None
        }
        Some(Value::String(s)) => match parse(s.trim()) {
            Some(k) => Some(k),
            None => {
                slots.push(
                    SlotStatus::ambiguous(path)
                        .with_candidates(candidates)
                        .with_note(format!("`{s}` is not an allowed value")),
                );
                None
            }
        },
        Some(other) => {
            slots.push(
                SlotStatus::ambiguous(path)
                    .with_candidates(candidates)
                    .with_note(format!("expected a string, found {other}")),
            );
            None
        }
    }
}

fn read_number(value: Option<&Value>, path: &str, slots: &mut Vec<SlotStatus>) -> Option<f64> {
    match value {
        None | Some(Value::Null) => {
            slots.push(SlotStatus::missing(path));
            None
        }
        Some(Value::Number(n)) => match n.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                slots.push(SlotStatus::ambiguous(path).with_note("number out of range"));
                None
            }
        },
        Some(other) => {
            slots.push(SlotStatus::ambiguous(path).with_note(format!("expected a number, found {other}")));
            None
        }
    }
}

fn read_feature(value: Option<&Value>, path: &str, slots: &mut Vec<SlotStatus>) -> Option<String> {
    match value {
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(Value::String(_)) | None | Some(Value::Null) => {
            slots.push(SlotStatus::missing(path));
            None
        }
        Some(other) => {
            slots.push(SlotStatus::ambiguous(path).with_note(format!("expected a feature name, found {other}")));
            None
        }
    }
}

fn read_variable(value: Option<&Value>, path: &str, role: Role, slots: &mut Vec<SlotStatus>) -> DraftVariable {
    let obj = match value {
        Some(Value::Object(obj)) => obj,
        Some(Value::Null) | None => {
            slots.push(SlotStatus::missing(format!("{path}.feature")));
            slots.push(SlotStatus::missing(format!("{path}.facet")).with_candidates(Facet::candidates()));
            let mut draft = DraftVariable::default();
            if role == Role::PerRow {
                draft.aggregator = Some(Aggregator::Identity);
            } else {
                slots.push(SlotStatus::missing(format!("{path}.aggregator")).with_candidates(Aggregator::aggregated()));
            }
            return draft;
        }
        Some(other) => {
            slots.push(SlotStatus::ambiguous(path).with_note(format!("expected an object, found {other}")));
            return DraftVariable::default();
        }
    };

    let feature = read_feature(obj.get("feature"), &format!("{path}.feature"), slots);
    let facet = read_keyword(
        obj.get("facet"),
        &format!("{path}.facet"),
        Facet::parse,
        Facet::candidates(),
        slots,
    );

    let aggregator_path = format!("{path}.aggregator");
    let aggregator = match (role, obj.get("aggregator")) {
        // Per-row variables have exactly one legal aggregator.
        (Role::PerRow, None | Some(Value::Null)) => Some(Aggregator::Identity),
        (Role::PerRow, raw) => {
            let agg = read_keyword(raw, &aggregator_path, Aggregator::parse, vec!["identity".into()], slots);
            match agg {
                Some(Aggregator::Identity) => agg,
                Some(_) => {
                    slots.push(
                        SlotStatus::ambiguous(&aggregator_path)
                            .with_candidates(vec!["identity".into()])
                            .with_note("correlation variables are per-row"),
                    );
                    None
                }
                None => None,
            }
        }
        (Role::Aggregated, raw) => {
            let agg = read_keyword(raw, &aggregator_path, Aggregator::parse, Aggregator::aggregated(), slots);
            match agg {
                Some(Aggregator::Identity) => {
                    slots.push(
                        SlotStatus::ambiguous(&aggregator_path)
                            .with_candidates(Aggregator::aggregated())
                            .with_note("identity is only allowed inside correlations"),
                    );
                    None
                }
                other => other,
            }
        }
    };

    let predicate_path = format!("{path}.predicate");
    let raw_predicate = obj.get("predicate").filter(|v| !v.is_null());
    let predicate = match (aggregator, raw_predicate) {
        (Some(a), None) if a.needs_predicate() => {
            slots.push(SlotStatus::missing(format!("{predicate_path}.comparator")).with_candidates(Comparator::candidates()));
            slots.push(SlotStatus::missing(format!("{predicate_path}.constant")));
            Some(DraftPredicate::default())
        }
        (Some(a), Some(_)) if !a.needs_predicate() => {
            slots.push(
                SlotStatus::ambiguous(&predicate_path)
                    .with_note(format!("`{a}` does not take a row predicate")),
            );
            None
        }
        (_, Some(Value::Object(p))) => Some(DraftPredicate {
            comparator: read_keyword(
                p.get("comparator"),
                &format!("{predicate_path}.comparator"),
                Comparator::parse,
                Comparator::candidates(),
                slots,
            ),
            constant: read_number(p.get("constant"), &format!("{predicate_path}.constant"), slots),
        }),
        (_, Some(other)) => {
            slots.push(SlotStatus::ambiguous(&predicate_path).with_note(format!("expected an object, found {other}")));
            None
        }
        (_, None) => None,
    };

    DraftVariable {
        feature,
        facet,
        aggregator,
        predicate,
    }
}

fn read_condition(value: &Value, path: &str, slots: &mut Vec<SlotStatus>) -> DraftCondition {
    let Some(obj) = value.as_object() else {
        slots.push(SlotStatus::ambiguous(path).with_note("expected a condition object"));
        return DraftCondition::default();
    };
    let feature = read_feature(obj.get("feature"), &format!("{path}.feature"), slots);
    if let Some(facet) = obj.get("facet").filter(|f| !f.is_null()) {
        if facet.as_str() != Some("value") {
            slots.push(
                SlotStatus::ambiguous(format!("{path}.facet"))
                    .with_candidates(vec!["value".into()])
                    .with_note("conditions restrict feature values only"),
            );
        }
    }
    let op = read_keyword(
        obj.get("op"),
        &format!("{path}.op"),
        ConditionOp::parse,
        ConditionOp::candidates(),
        slots,
    );
    let bounds_path = format!("{path}.bounds");
    let bounds = match (op, obj.get("bounds")) {
        (_, None | Some(Value::Null)) => {
            slots.push(SlotStatus::missing(&bounds_path));
            None
        }
        (Some(ConditionOp::InRange), Some(Value::Array(items))) => {
            let pair: Vec<Option<f64>> = items.iter().map(|v| v.as_f64().filter(|x| x.is_finite())).collect();
            match pair.as_slice() {
                [Some(lo), Some(hi)] if lo <= hi => Some(Bounds::Range(*lo, *hi)),
                [Some(_), Some(_)] => {
                    slots.push(SlotStatus::ambiguous(&bounds_path).with_note("range lower bound exceeds upper bound"));
                    None
                }
                _ => {
                    slots.push(SlotStatus::ambiguous(&bounds_path).with_note("in-range needs two numeric bounds"));
                    None
                }
            }
        }
        (Some(ConditionOp::InRange), Some(_)) => {
            slots.push(SlotStatus::ambiguous(&bounds_path).with_note("in-range needs two numeric bounds"));
            None
        }
        (_, Some(Value::Number(n))) => match n.as_f64() {
            Some(x) if x.is_finite() => Some(Bounds::Number(x)),
            _ => {
                slots.push(SlotStatus::ambiguous(&bounds_path).with_note("number out of range"));
                None
            }
        },
        (Some(ConditionOp::Eq) | None, Some(Value::String(s))) => Some(Bounds::Category(s.clone())),
        (_, Some(Value::Array(_))) => {
            slots.push(SlotStatus::ambiguous(&bounds_path).with_note("only in-range takes two bounds"));
            None
        }
        (_, Some(other)) => {
            slots.push(
                SlotStatus::ambiguous(&bounds_path)
                    .with_note(format!("`{other}` is not a valid bound for this operator")),
            );
            None
        }
    };
    DraftCondition { feature, op, bounds }
}
