//! Evaluation plus mapping of one complete insight, shared by the HTTP API
//! and the command line.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use xlint_core::evaluate::{evaluate, EvalConfig, EvalError, Verdict};
use xlint_core::insight::{bind, SlotStatus};
use xlint_core::mapper::{map_insight, MappingResult};
use xlint_core::vis::{compile, VisError, VisSpec};
use xlint_core::{StructuredInsight, Table};

/// Vega-Lite output of a mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledViews {
    pub annotated: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommended: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub verdict: Verdict,
    pub mapping: MappingResult,
    pub views: CompiledViews,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("the insight does not fit the table")]
    Unbound(Vec<SlotStatus>),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Vis(#[from] VisError),
}

pub fn compile_views(mapping: &MappingResult, table: &Table) -> Result<CompiledViews, VisError> {
    Ok(CompiledViews {
        annotated: compile(&mapping.annotated_spec, table)?,
        recommended: mapping.recommended_spec.as_ref().map(|s| compile(s, table)).transpose()?,
    })
}

pub fn check(insight: &StructuredInsight, table: &Table, spec: &VisSpec) -> Result<CheckResult, CheckError> {
    let bound = bind(insight, table).map_err(CheckError::Unbound)?;
    let verdict = evaluate(&bound, table, &EvalConfig::default())?;
    let mapping = map_insight(spec, &bound);
    let views = compile_views(&mapping, table)?;
    Ok(CheckResult { verdict, mapping, views })
}
