//! Resolution of the feature names an insight mentions against a table.

use std::ops::Deref;

use crate::attribution::{ExplanationTable, FeatureKind, FeatureMeta};
use crate::scalar::Scalar;

use super::model::{Bounds, ConditionOp, Facet, StructuredInsight};
use super::validate::{InsightDraft, SlotStatus};

/// Outcome of looking up one user-supplied feature reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Bound(String),
    Ambiguous(Vec<String>),
    Unresolved,
}

/// Looks a feature up by exact name, then case-folded name, then as a
/// substring of a feature description. The first stage with any hit decides;
/// several hits in that stage make the reference ambiguous.
pub fn resolve_feature(query: &str, features: &[FeatureMeta]) -> Resolution {
    let query = query.trim();
    if query.is_empty() {
        return Resolution::Unresolved;
    }
    if features.iter().any(|f| f.name == query) {
        return Resolution::Bound(query.to_string());
    }
    let folded = query.to_lowercase();
    let stages: [&dyn Fn(&FeatureMeta) -> bool; 2] = [
        &|f| f.name.to_lowercase() == folded,
        &|f| {
            f.description
                .as_deref()
                .is_some_and(|d| d.to_lowercase().contains(&folded))
        },
    ];
    for stage in stages {
        let hits: Vec<String> = features
            .iter()
            .filter(|f| stage(f))
            .map(|f| f.name.clone())
            .collect();
        match hits.len() {
            0 => continue,
            1 => return Resolution::Bound(hits.into_iter().next().unwrap()),
            _ => return Resolution::Ambiguous(hits),
        }
    }
    Resolution::Unresolved
}

/// An insight whose every feature reference names a column of a specific
/// table, with facets and condition operators compatible with column kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInsight(StructuredInsight);

impl BoundInsight {
    pub fn insight(&self) -> &StructuredInsight {
        &self.0
    }

    pub fn into_inner(self) -> StructuredInsight {
        self.0
    }
}

impl Deref for BoundInsight {
    type Target = StructuredInsight;

    fn deref(&self) -> &StructuredInsight {
        &self.0
    }
}

/// Binds a complete insight against `table`.
pub fn bind<T: Scalar>(
    insight: &StructuredInsight,
    table: &ExplanationTable<T>,
) -> Result<BoundInsight, Vec<SlotStatus>> {
    let (draft, slots) = bind_draft(&InsightDraft::from(insight), table.features());
    if !slots.is_empty() {
        return Err(slots);
    }
    draft
        .complete()
        .map(BoundInsight)
        .ok_or_else(|| vec![SlotStatus::ambiguous(insight.kind().as_str())])
}

/// Binds whatever feature references a draft carries, returning the draft with
/// canonical names substituted and every unresolved or incompatible reference
/// as a slot. Structural slots that only appear after renaming (for example a
/// correlation whose two sides turn out to be the same column) are included.
pub fn bind_draft(draft: &InsightDraft, features: &[FeatureMeta]) -> (InsightDraft, Vec<SlotStatus>) {
    let mut bound = draft.clone();
    let mut slots = Vec::new();
    let names: Vec<String> = features.iter().map(|f| f.name.clone()).collect();
    let kind_of = |name: &str| features.iter().find(|f| f.name == name).map(|f| f.kind);

    let paths: Vec<String> = draft.variables().into_iter().map(|(p, _)| p).collect();
    for (path, variable) in paths.iter().zip(bound.variables_mut()) {
        let Some(name) = variable.feature.clone() else { continue };
        match resolve_feature(&name, features) {
            Resolution::Bound(canonical) => {
                if kind_of(&canonical) == Some(FeatureKind::Categorical) && variable.facet == Some(Facet::Value) {
                    slots.push(
                        SlotStatus::ambiguous(format!("{path}.facet"))
                            .with_candidates(vec![Facet::Attribution.as_str().into()])
                            .with_note(format!("`{canonical}` is categorical; its values cannot be aggregated")),
                    );
                }
                variable.feature = Some(canonical);
            }
            Resolution::Ambiguous(candidates) => {
                slots.push(
                    SlotStatus::ambiguous(format!("{path}.feature"))
                        .with_candidates(candidates)
                        .with_note(format!("`{name}` matches several features")),
                );
            }
            Resolution::Unresolved => {
                slots.push(
                    SlotStatus::missing(format!("{path}.feature"))
                        .with_candidates(names.clone())
                        .with_note(format!("no feature called `{name}`")),
                );
            }
        }
    }

    let tag = draft.kind().as_str();
    for (i, condition) in bound.conditions.iter_mut().enumerate() {
        let path = format!("{tag}.conditions[{i}]");
        let Some(name) = condition.feature.clone() else { continue };
        match resolve_feature(&name, features) {
            Resolution::Bound(canonical) => {
                match kind_of(&canonical) {
                    Some(FeatureKind::Categorical) => {
                        if condition.op.is_some_and(ConditionOp::is_ordering) {
                            slots.push(
                                SlotStatus::ambiguous(format!("{path}.op"))
                                    .with_candidates(vec![ConditionOp::Eq.as_str().into()])
                                    .with_note(format!("`{canonical}` is categorical; only equality applies")),
                            );
                        } else if matches!(condition.bounds, Some(Bounds::Number(_) | Bounds::Range(..))) {
                            slots.push(
                                SlotStatus::ambiguous(format!("{path}.bounds"))
                                    .with_note(format!("`{canonical}` is categorical; expected a category")),
                            );
                        }
                    }
                    _ => {
                        if matches!(condition.bounds, Some(Bounds::Category(_))) {
                            slots.push(
                                SlotStatus::ambiguous(format!("{path}.bounds"))
                                    .with_note(format!("`{canonical}` is quantitative; expected a number")),
                            );
                        }
                    }
                }
                condition.feature = Some(canonical);
            }
            Resolution::Ambiguous(candidates) => slots.push(
                SlotStatus::ambiguous(format!("{path}.feature"))
                    .with_candidates(candidates)
                    .with_note(format!("`{name}` matches several features")),
            ),
            Resolution::Unresolved => slots.push(
                SlotStatus::missing(format!("{path}.feature"))
                    .with_candidates(names.clone())
                    .with_note(format!("no feature called `{name}`")),
            ),
        }
    }

    if let Ok((_, structural)) = InsightDraft::read(&bound.to_document()) {
        for slot in structural {
            if !slots.iter().any(|s| s.path == slot.path) {
                slots.push(slot);
            }
        }
    }
    (bound, slots)
}
