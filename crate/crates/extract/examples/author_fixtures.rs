//! Records the fixture set under `fixtures/` by running the extraction
//! pipeline against scripted model answers.
//!
//! ```text
//! cargo run -p xlint-extract --example author_fixtures [-- <dir>]
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use xlint_core::synthetic::diabetes_features;
use xlint_extract::{Extractor, ExtractorConfig, ScriptedClient};

fn classify(kind: &str, has_condition: bool, reasoning: &str) -> String {
    serde_json::json!({"reasoning": reasoning, "type": kind, "has_condition": has_condition}).to_string()
}

fn cases() -> Vec<(&'static str, Vec<String>)> {
    vec![
        (
            "There is no correlation between blood pressure attributions and serum triglycerides attributions",
            vec![
                classify("correlation", false, "Two per-row attribution columns are said to be unrelated."),
                r#"{"schema": "insight/v1", "type": "correlation",
                    "x": {"feature": "blood pressure", "facet": "attribution", "aggregator": "identity", "predicate": null},
                    "y": {"feature": "serum triglycerides", "facet": "attribution", "aggregator": "identity", "predicate": null},
                    "direction": "none", "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "Blood pressure contributes to increased diabetes progression in most patients",
            vec![
                classify(
                    "comparison",
                    false,
                    "\"Most patients\" compares how many rows have a positive blood pressure attribution with how many have a negative one.",
                ),
                r#"```json
{"schema": "insight/v1", "type": "comparison",
 "left": {"feature": "blood pressure", "facet": "attribution", "aggregator": "count", "predicate": {"comparator": ">", "constant": 0}},
 "right": {"feature": "blood pressure", "facet": "attribution", "aggregator": "count", "predicate": {"comparator": "<", "constant": 0}},
 "relation": "greater", "conditions": null}
```"#
                    .into(),
            ],
        ),
        (
            "Higher blood pressure pushes the prediction up for the majority of patients",
            vec![
                classify("comparison", false, "Counts rows with a positive against rows with a negative attribution."),
                r#"{"schema": "insight/v1", "type": "comparison",
                    "left": {"feature": "bp", "facet": "attribution", "aggregator": "count", "predicate": {"comparator": ">", "constant": 0}},
                    "right": {"feature": "bp", "facet": "attribution", "aggregator": "count", "predicate": {"comparator": "<", "constant": 0}},
                    "relation": "greater", "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "bp and triglyceride contributions look completely unrelated",
            vec![
                classify("correlation", false, "Two attribution columns, no relation."),
                r#"{"schema": "insight/v1", "type": "correlation",
                    "x": {"feature": "bp", "facet": "attribution", "aggregator": "identity", "predicate": null},
                    "y": {"feature": "s5", "facet": "attribution", "aggregator": "identity", "predicate": null},
                    "direction": "none", "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "Patients with a high BMI get larger BMI contributions",
            vec![
                classify("correlation", false, "The value of bmi and its attribution rise together."),
                r#"{"schema": "insight/v1", "type": "correlation",
                    "x": {"feature": "BMI", "facet": "value", "aggregator": "identity", "predicate": null},
                    "y": {"feature": "BMI", "facet": "attribution", "aggregator": "identity", "predicate": null},
                    "direction": "positive", "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "On average body mass index has a bigger effect than age",
            vec![
                classify("comparison", false, "Two averaged attributions compared."),
                // First answer uses a word outside the schema; the repair fixes it.
                r#"{"schema": "insight/v1", "type": "comparison",
                    "left": {"feature": "body mass index", "facet": "attribution", "aggregator": "average", "predicate": null},
                    "right": {"feature": "age", "facet": "attribution", "aggregator": "mean", "predicate": null},
                    "relation": "bigger", "conditions": null}"#
                    .into(),
                r#"{"schema": "insight/v1", "type": "comparison",
                    "left": {"feature": "body mass index", "facet": "attribution", "aggregator": "mean", "predicate": null},
                    "right": {"feature": "age", "facet": "attribution", "aggregator": "mean", "predicate": null},
                    "relation": "greater", "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "The blood sugar attribution averages out to roughly zero",
            vec![
                classify("read", false, "One averaged attribution against a constant."),
                r#"{"schema": "insight/v1", "type": "read",
                    "variable": {"feature": "blood sugar", "facet": "attribution", "aggregator": "mean", "predicate": null},
                    "comparator": "approx", "threshold": 0, "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "More than half of the patients have a positive blood pressure contribution",
            vec![
                classify("read", false, "A fraction of rows against one half."),
                r#"{"schema": "insight/v1", "type": "read",
                    "variable": {"feature": "blood pressure", "facet": "attribution", "aggregator": "fraction", "predicate": {"comparator": ">", "constant": 0}},
                    "comparator": ">", "threshold": 50, "conditions": null}"#
                    .into(),
                r#"{"schema": "insight/v1", "type": "read",
                    "variable": {"feature": "blood pressure", "facet": "attribution", "aggregator": "fraction", "predicate": {"comparator": ">", "constant": 0}},
                    "comparator": ">", "threshold": 0.5, "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "BMI matters when patients are older",
            vec![
                classify("read", true, "A statement about the bmi attribution restricted to older patients."),
                r#"{"schema": "insight/v1", "type": "read",
                    "variable": {"feature": "bmi", "facet": "attribution", "aggregator": "mean", "predicate": null},
                    "comparator": ">", "threshold": null,
                    "conditions": [{"feature": "age", "op": ">", "bounds": null}]}"#
                    .into(),
            ],
        ),
        (
            "bp matters for most patients",
            vec![
                classify("read", false, "A share of patients for whom blood pressure matters."),
                r#"{"schema": "insight/v1", "type": "read",
                    "variable": {"feature": "bp", "facet": "attribution", "aggregator": "fraction", "predicate": null},
                    "comparator": ">", "threshold": 0.5, "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "Cholesterol drives the model more than blood pressure does",
            vec![
                classify("comparison", false, "Two features' average contributions compared."),
                r#"{"schema": "insight/v1", "type": "comparison",
                    "left": {"feature": "cholesterol", "facet": "attribution", "aggregator": "mean", "predicate": null},
                    "right": {"feature": "blood pressure", "facet": "attribution", "aggregator": "mean", "predicate": null},
                    "relation": "greater", "conditions": null}"#
                    .into(),
            ],
        ),
        (
            "For older patients the triglyceride attribution rises with the triglyceride level",
            vec![
                classify("correlation", true, "Value and attribution of s5 move together among older patients."),
                r#"{"schema": "insight/v1", "type": "correlation",
                    "x": {"feature": "s5", "facet": "value", "aggregator": "identity", "predicate": null},
                    "y": {"feature": "s5", "facet": "attribution", "aggregator": "identity", "predicate": null},
                    "direction": "positive",
                    "conditions": [{"feature": "age", "op": ">", "bounds": null}]}"#
                    .into(),
            ],
        ),
        // Malformed: the model never returns a document.
        (
            "the mean attribution of bmi is greater than 0",
            vec![
                classify("read", false, "A mean against zero."),
                "Sure! The mean attribution of BMI is positive.".into(),
                "I think the answer is that BMI has a positive mean.".into(),
                "BMI mean > 0".into(),
            ],
        ),
        // Malformed: the model never names a type.
        (
            "zebra quantum teapot",
            vec![
                "I am not sure what you mean.".into(),
                "Could you rephrase that?".into(),
                "This does not look like an observation.".into(),
            ],
        ),
    ]
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    let features = diabetes_features();
    for (text, responses) in cases() {
        let config = ExtractorConfig {
            record_dir: Some(dir.clone()),
            ..ExtractorConfig::default()
        };
        let client = Arc::new(ScriptedClient::new(responses));
        let extractor = Extractor::with_client(config, client.clone()).expect("valid config");
        let outcome = match extractor.extract(text, &features) {
            Ok(x) if x.slots.is_empty() => "complete".to_string(),
            Ok(x) => format!("{} slot(s)", x.slots.len()),
            Err(e) => format!("error: {e}"),
        };
        assert_eq!(client.remaining(), 0, "unused scripted answers for {text:?}");
        println!("{:<90} {outcome}", text);
    }
}
