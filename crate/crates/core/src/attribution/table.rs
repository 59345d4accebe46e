use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::TableError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Quantitative,
    Categorical,
}

/// Declared input column of the explained model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl FeatureMeta {
    pub fn quantitative(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Quantitative,
            unit: None,
            description: None,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            kind: FeatureKind::Categorical,
            ..Self::quantitative(name)
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }
}

/// A feature value: numeric for quantitative features, a label otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue<T> {
    Number(T),
    Category(String),
}

impl<T: Scalar> FeatureValue<T> {
    pub fn as_number(&self) -> Option<T> {
        match self {
            FeatureValue::Number(x) => Some(*x),
            FeatureValue::Category(_) => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            FeatureValue::Number(_) => None,
            FeatureValue::Category(c) => Some(c),
        }
    }
}

/// One explained instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Row<T> {
    pub id: String,
    pub values: BTreeMap<String, FeatureValue<T>>,
    pub attributions: BTreeMap<String, T>,
    pub prediction: T,
}

impl<T: Scalar> Row<T> {
    pub fn value(&self, feature: &str) -> Option<&FeatureValue<T>> {
        self.values.get(feature)
    }

    pub fn attribution(&self, feature: &str) -> Option<T> {
        self.attributions.get(feature).copied()
    }
}

/// A row whose attributions do not add up to its prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyWarning {
    pub row_id: String,
    /// `base_value + Σ attributions − prediction`
    pub residual: f64,
    pub tolerance: f64,
}

/// Tabular global explanation: per-instance feature values, attributions and
/// predictions, plus the base value every attribution vector starts from.
///
/// Immutable once constructed; the constructor enforces the structural
/// invariants and records efficiency violations as warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "RawTable<T>")]
pub struct ExplanationTable<T> {
    base_value: T,
    features: Vec<FeatureMeta>,
    rows: Vec<Row<T>>,
    #[serde(skip)]
    warnings: Vec<EfficiencyWarning>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawTable<T> {
    #[serde(default)]
    base_value: Option<T>,
    features: Vec<FeatureMeta>,
    rows: Vec<Row<T>>,
}

impl<T: Scalar> TryFrom<RawTable<T>> for ExplanationTable<T> {
    type Error = TableError;

    fn try_from(raw: RawTable<T>) -> Result<Self, TableError> {
        ExplanationTable::new(raw.features, raw.base_value.unwrap_or_else(T::zero), raw.rows)
    }
}

impl<T: Scalar> ExplanationTable<T> {
    pub fn new(features: Vec<FeatureMeta>, base_value: T, rows: Vec<Row<T>>) -> Result<Self, TableError> {
        if features.is_empty() {
            return Err(TableError::MalformedInput("no features declared".into()));
        }
        let mut names = HashSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(TableError::MalformedInput("empty feature name".into()));
            }
            if !names.insert(f.name.as_str()) {
                return Err(TableError::MalformedInput(format!("duplicate feature `{}`", f.name)));
            }
        }
        if rows.is_empty() {
            return Err(TableError::EmptyTable);
        }
        if !base_value.is_finite() {
            return Err(TableError::MalformedInput("base_value is not finite".into()));
        }

        let mut ids = HashSet::new();
        for row in &rows {
            if !ids.insert(row.id.as_str()) {
                return Err(TableError::DuplicateRowId(row.id.clone()));
            }
            if row.values.len() != features.len() || row.attributions.len() != features.len() {
                let extra = row
                    .values
                    .keys()
                    .chain(row.attributions.keys())
                    .find(|k| !names.contains(k.as_str()));
                if let Some(extra) = extra {
                    return Err(TableError::MalformedInput(format!(
                        "row `{}` mentions undeclared feature `{extra}`",
                        row.id
                    )));
                }
            }
            for f in &features {
                let value = row.values.get(&f.name).ok_or_else(|| {
                    TableError::MalformedInput(format!("row `{}` has no value for `{}`", row.id, f.name))
                })?;
                match (f.kind, value) {
                    (FeatureKind::Quantitative, FeatureValue::Number(x)) if x.is_finite() => {}
                    (FeatureKind::Categorical, FeatureValue::Category(_)) => {}
                    _ => {
                        return Err(TableError::MalformedInput(format!(
                            "row `{}`: value of `{}` does not match its {:?} kind",
                            row.id, f.name, f.kind
                        )))
                    }
                }
                match row.attributions.get(&f.name) {
                    Some(a) if a.is_finite() => {}
                    Some(_) => {
                        return Err(TableError::MalformedInput(format!(
                            "row `{}`: attribution of `{}` is not finite",
                            row.id, f.name
                        )))
                    }
                    None => {
                        return Err(TableError::MalformedInput(format!(
                            "row `{}` has no attribution for `{}`",
                            row.id, f.name
                        )))
                    }
                }
            }
            if !row.prediction.is_finite() {
                return Err(TableError::MalformedInput(format!("row `{}`: prediction is not finite", row.id)));
            }
        }

        let mut table = Self {
            base_value,
            features,
            rows,
            warnings: Vec::new(),
        };
        table.warnings = table.efficiency_warnings();
        Ok(table)
    }

    pub fn base_value(&self) -> T {
        self.base_value
    }

    pub fn features(&self) -> &[FeatureMeta] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureMeta> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn rows(&self) -> &[Row<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn warnings(&self) -> &[EfficiencyWarning] {
        &self.warnings
    }

    /// Per-row efficiency residuals exceeding `1e-6 · (1 + |prediction|)`.
    fn efficiency_warnings(&self) -> Vec<EfficiencyWarning> {
        self.rows
            .iter()
            .filter_map(|row| {
                let total = row.attributions.values().fold(self.base_value, |acc, a| acc + *a);
                let residual = (total - row.prediction).as_f64();
                let tolerance = 1e-6 * (1.0 + row.prediction.as_f64().abs());
                (residual.abs() > tolerance).then(|| EfficiencyWarning {
                    row_id: row.id.clone(),
                    residual,
                    tolerance,
                })
            })
            .collect()
    }

    /// Copy of the table restricted to the given row indices.
    pub fn subset(&self, indices: &[usize]) -> Option<Self> {
        let rows: Vec<Row<T>> = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Self::new(self.features.clone(), self.base_value, rows).ok()
    }

    /// Same rows in a different order.
    pub fn reordered(&self, order: &[usize]) -> Self {
        let mut table = self.clone();
        table.rows = order.iter().map(|&i| self.rows[i].clone()).collect();
        table.warnings = table.efficiency_warnings();
        table
    }
}
