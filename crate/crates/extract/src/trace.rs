use serde::{Deserialize, Serialize};
use serde_json::Value;
use xlint_core::insight::InsightKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Classify,
    Fill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRecord {
    pub prompt: String,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classified_type: Option<InsightKind>,
    #[serde(default)]
    pub has_condition: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillRecord {
    pub prompt: String,
    pub raw_response: String,
    /// The validated document handed downstream, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<Value>,
}

/// A follow-up request sent after an unusable response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub stage: Stage,
    pub reason: String,
    pub prompt: String,
    pub raw_response: String,
}

/// Everything sent to and received from the provider for one text.
///
/// `stage1.raw_response` and `stage2.raw_response` hold the first answer of
/// each stage; later answers of the same stage are in `repairs`, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionTrace {
    pub stage1: ClassifyRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage2: Option<FillRecord>,
    #[serde(default)]
    pub repairs: Vec<RepairRecord>,
}

impl ExtractionTrace {
    /// Provider answers in the order they were received.
    pub fn responses(&self) -> Vec<String> {
        let mut out = vec![self.stage1.raw_response.clone()];
        let of = |stage| self.repairs.iter().filter(move |r| r.stage == stage).map(|r| r.raw_response.clone());
        out.extend(of(Stage::Classify));
        if let Some(s2) = &self.stage2 {
            out.push(s2.raw_response.clone());
        }
        out.extend(of(Stage::Fill));
        out
    }
}
