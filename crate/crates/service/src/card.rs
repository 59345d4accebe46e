use serde::{Deserialize, Serialize};
use xlint_core::attribution::FeatureKind;
use xlint_core::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCard {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Mean absolute attribution, the usual global importance.
    pub mean_abs_attribution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// What the model explains, at a glance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCard {
    pub n_rows: usize,
    pub base_value: f64,
    pub features: Vec<FeatureCard>,
    pub prediction: Summary,
}

impl ModelCard {
    pub fn of(table: &Table) -> Self {
        let n = table.len().max(1) as f64;
        let features = table
            .features()
            .iter()
            .map(|f| FeatureCard {
                name: f.name.clone(),
                kind: f.kind,
                unit: f.unit.clone(),
                description: f.description.clone(),
                mean_abs_attribution: table
                    .rows()
                    .iter()
                    .map(|r| r.attribution(&f.name).unwrap_or(0.0).abs())
                    .sum::<f64>()
                    / n,
            })
            .collect();
        let predictions = table.rows().iter().map(|r| r.prediction);
        let (min, max, sum) = predictions.fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), p| {
            (lo.min(p), hi.max(p), s + p)
        });
        Self {
            n_rows: table.len(),
            base_value: table.base_value(),
            features,
            prediction: Summary { min, max, mean: sum / n },
        }
    }
}
