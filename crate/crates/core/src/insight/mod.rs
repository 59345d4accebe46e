//! Structured insights: the intermediate representation between free-form
//! observations and both the evaluator and the chart mapper.

mod bind;
mod model;
mod validate;

pub use bind::{bind, bind_draft, resolve_feature, BoundInsight, Resolution};
pub use model::*;
pub use validate::{
    validate, DraftBody, DraftCondition, DraftPredicate, DraftVariable, InsightDraft, SlotState,
    SlotStatus, Validation,
};

use serde_json::Value;
use thiserror::Error;

use crate::json::canonical_json;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InsightError {
    #[error("unknown insight type `{0}` (expected read, correlation or comparison)")]
    UnknownInsightType(String),
    #[error("unsupported schema version {0}")]
    UnsupportedSchema(String),
    #[error("insight document must be a JSON object")]
    NotAnObject,
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("invalid JSON: {0}")]
    InvalidJson(String),
    #[error("no slot at path `{0}`")]
    BadSlotPath(String),
}

/// Canonical JSON text of an insight (sorted keys, explicit nulls).
pub fn serialize(insight: &StructuredInsight) -> String {
    canonical_json(&insight.to_value())
}

/// Parses canonical (or any key order) insight JSON, strictly.
pub fn deserialize(text: &str) -> Result<StructuredInsight, InsightError> {
    let value: Value = serde_json::from_str(text).map_err(|e| InsightError::InvalidJson(e.to_string()))?;
    from_value(&value)
}

/// Strict conversion of a document into a complete insight.
pub fn from_value(value: &Value) -> Result<StructuredInsight, InsightError> {
    match validate(value) {
        Ok(Validation::Valid(insight)) => Ok(insight),
        Ok(Validation::Incomplete { slots, .. }) => {
            let slot = slots.first().cloned().unwrap_or_else(|| SlotStatus::missing("$"));
            Err(InsightError::SchemaViolation {
                path: json_path(&slot.path),
                message: slot.note.unwrap_or_else(|| format!("{:?} value", slot.state).to_lowercase()),
            })
        }
        Err(InsightError::UnknownInsightType(tag)) => Err(InsightError::SchemaViolation {
            path: "$.type".into(),
            message: format!("unknown insight type `{tag}`"),
        }),
        Err(InsightError::NotAnObject) => Err(InsightError::SchemaViolation {
            path: "$".into(),
            message: "expected an object".into(),
        }),
        Err(InsightError::UnsupportedSchema(s)) => Err(InsightError::SchemaViolation {
            path: "$.schema".into(),
            message: format!("unsupported schema {s}"),
        }),
        Err(other) => Err(other),
    }
}

/// Converts a slot path (`read.variable.feature`) to a JSON path
/// (`$.variable.feature`).
pub fn json_path(slot_path: &str) -> String {
    match slot_path.split_once('.') {
        Some((_, rest)) => format!("$.{rest}"),
        None => "$".to_string(),
    }
}

/// Writes `value` at a slot path inside an insight document, creating
/// intermediate objects where the document holds `null`.
pub fn set_slot(document: &mut Value, path: &str, value: Value) -> Result<(), InsightError> {
    let bad = || InsightError::BadSlotPath(path.to_string());
    let (_, rest) = path.split_once('.').ok_or_else(bad)?;
    let mut steps = Vec::new();
    for part in rest.split('.') {
        match part.split_once('[') {
            Some((key, index)) => {
                let index: usize = index.strip_suffix(']').and_then(|i| i.parse().ok()).ok_or_else(bad)?;
                steps.push((key.to_string(), Some(index)));
            }
            None => steps.push((part.to_string(), None)),
        }
    }
    let mut cursor = document;
    for (key, index) in steps {
        if key.is_empty() {
            return Err(bad());
        }
        if cursor.is_null() {
            *cursor = Value::Object(Default::default());
        }
        let obj = cursor.as_object_mut().ok_or_else(bad)?;
        cursor = obj.entry(key).or_insert(Value::Null);
        if let Some(i) = index {
            if cursor.is_null() {
                *cursor = Value::Array(Vec::new());
            }
            let items = cursor.as_array_mut().ok_or_else(bad)?;
            while items.len() <= i {
                items.push(Value::Object(Default::default()));
            }
            cursor = &mut items[i];
        }
    }
    *cursor = value;
    Ok(())
}
