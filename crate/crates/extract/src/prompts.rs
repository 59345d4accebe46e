//! Prompt texts. Everything here is deterministic in its inputs, which keeps
//! recorded fixtures replayable.

use xlint_core::attribution::FeatureKind;
use xlint_core::insight::{Aggregator, Comparator, ConditionOp, Direction, InsightKind, ReadComparator, Relation, SlotStatus};
use xlint_core::FeatureMeta;

pub const SYSTEM: &str = "You turn observations about feature-attribution (SHAP-style) charts into structured data. \
Respond with a single JSON object and nothing else: no prose, no code fences.";

fn feature_list(features: &[FeatureMeta]) -> String {
    features
        .iter()
        .map(|f| {
            let kind = match f.kind {
                FeatureKind::Quantitative => "quantitative",
                FeatureKind::Categorical => "categorical",
            };
            match &f.description {
                Some(d) => format!("- {} ({kind}): {d}", f.name),
                None => format!("- {} ({kind})", f.name),
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn classify(text: &str, features: &[FeatureMeta]) -> String {
    format!(
        r#"Classify the observation below into one of three insight types.

read: a statistic of one quantity compared with a constant.
  "The average attribution of bmi is above 0.02."
  "For more than half of the patients, blood pressure pushes the prediction up."
correlation: two per-row quantities that move together, in opposite directions, or not at all.
  "As bmi increases, its attribution increases too."
  "There is no correlation between age attributions and sex attributions."
comparison: two aggregated quantities compared with each other.
  "bmi matters more than age on average."
  "Blood pressure raises the prediction for more patients than it lowers it."

Also decide whether the observation restricts the rows it talks about by a feature value
("for patients older than 60", "when bmi is high"): has_condition.

Features of the model:
{features}

Think step by step about which quantities the observation mentions and how they are related,
then answer with JSON of the form
{{"reasoning": "<one or two sentences>", "type": "read" | "correlation" | "comparison", "has_condition": true | false}}

Observation: {text}"#,
        features = feature_list(features),
        text = text.trim(),
    )
}

fn keywords(all: Vec<String>) -> String {
    all.iter().map(|k| format!("\"{k}\"")).collect::<Vec<_>>().join(" | ")
}

fn template(kind: InsightKind) -> &'static str {
    match kind {
        InsightKind::Read => {
            r#"{"schema": "insight/v1", "type": "read",
 "variable": {"feature": null, "facet": null, "aggregator": null, "predicate": null},
 "comparator": null, "threshold": null, "conditions": null}"#
        }
        InsightKind::Correlation => {
            r#"{"schema": "insight/v1", "type": "correlation",
 "x": {"feature": null, "facet": null, "aggregator": "identity", "predicate": null},
 "y": {"feature": null, "facet": null, "aggregator": "identity", "predicate": null},
 "direction": null, "conditions": null}"#
        }
        InsightKind::Comparison => {
            r#"{"schema": "insight/v1", "type": "comparison",
 "left": {"feature": null, "facet": null, "aggregator": null, "predicate": null},
 "right": {"feature": null, "facet": null, "aggregator": null, "predicate": null},
 "relation": null, "conditions": null}"#
        }
    }
}

pub fn fill(text: &str, kind: InsightKind, has_condition: bool, features: &[FeatureMeta]) -> String {
    let aggregators = match kind {
        InsightKind::Correlation => "\"identity\" (one value per row)".to_string(),
        _ => keywords(Aggregator::aggregated()),
    };
    let relation_line = match kind {
        InsightKind::Read => format!("comparator: {}; threshold: a number", keywords(ReadComparator::candidates())),
        InsightKind::Correlation => format!("direction: {}", keywords(Direction::candidates())),
        InsightKind::Comparison => format!("relation: {} (left relative to right)", keywords(Relation::candidates())),
    };
    let condition_hint = if has_condition {
        "The observation restricts the rows: fill `conditions`."
    } else {
        "The observation probably does not restrict the rows; leave `conditions` null unless it clearly does."
    };
    format!(
        r#"Fill this {kind} insight template from the observation.

{template}

Field rules:
- feature: a feature name from the list below, or the words the user used for it.
- facet: "attribution" (the feature's contribution to the prediction) or "value" (the input value).
- aggregator: {aggregators}.
- predicate: only with "count" or "fraction": {{"comparator": {comparators}, "constant": number}};
  a positive attribution is {{"comparator": ">", "constant": 0}}, a negative one {{"comparator": "<", "constant": 0}}.
- {relation_line}
- conditions: a list of {{"feature": name, "op": {ops}, "bounds": number, "category" or [low, high]}}.
- "most" or "the majority" means a fraction above 0.5, or more rows on one side than on the other.
- Use null for anything the observation does not state. Never invent numbers: "older", "high" or
  "matters" without a number leave the constant null.

{condition_hint}

Features of the model:
{features}

Observation: {text}"#,
        template = template(kind),
        comparators = keywords(Comparator::candidates()),
        ops = keywords(ConditionOp::candidates()),
        features = feature_list(features),
        text = text.trim(),
    )
}

pub fn repair_classification(reason: &str) -> String {
    format!(
        "Your answer could not be used: {reason}. Answer again with only the JSON object \
{{\"reasoning\": ..., \"type\": \"read\" | \"correlation\" | \"comparison\", \"has_condition\": true | false}}."
    )
}

pub fn repair_document(reason: &str, slots: &[SlotStatus]) -> String {
    let mut out = format!("Your document could not be used: {reason}.");
    if !slots.is_empty() {
        out.push_str(" Problems:");
        for s in slots {
            out.push_str(&format!("\n- {}", s.path));
            if let Some(note) = &s.note {
                out.push_str(&format!(": {note}"));
            }
            if let Some(c) = &s.candidates {
                out.push_str(&format!(" (allowed: {})", c.join(", ")));
            }
        }
    }
    out.push_str("\nReturn the corrected JSON document only. Use null for values the observation does not state.");
    out
}
