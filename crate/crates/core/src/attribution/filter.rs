use thiserror::Error;

use crate::insight::{Bounds, TCondition};
use crate::scalar::Scalar;

use super::table::{ExplanationTable, FeatureKind, FeatureValue, Row};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("condition references unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("condition on `{feature}` does not fit its {kind:?} kind")]
    TypeMismatch { feature: String, kind: FeatureKind },
}

/// Rows of a table selected by a conjunction of conditions, kept in table
/// order.
#[derive(Debug, Clone)]
pub struct RowView<'a, T> {
    table: &'a ExplanationTable<T>,
    indices: Vec<usize>,
}

impl<'a, T: Scalar> RowView<'a, T> {
    pub fn all(table: &'a ExplanationTable<T>) -> Self {
        Self {
            table,
            indices: (0..table.len()).collect(),
        }
    }

    pub fn table(&self) -> &'a ExplanationTable<T> {
        self.table
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a Row<T>> + '_ {
        self.indices.iter().map(move |&i| &self.table.rows()[i])
    }

    /// Narrows the view further; conditions are checked before any row is
    /// inspected, so an invalid condition fails even on an empty view.
    pub fn filter(&self, conditions: &[TCondition]) -> Result<RowView<'a, T>, FilterError> {
        for c in conditions {
            check_condition(self.table, c)?;
        }
        let indices = self
            .indices
            .iter()
            .copied()
            .filter(|&i| {
                let row = &self.table.rows()[i];
                conditions.iter().all(|c| row_satisfies(row, c))
            })
            .collect();
        Ok(RowView {
            table: self.table,
            indices,
        })
    }
}

/// Rows satisfying every condition (an empty list selects all rows).
pub fn filter_rows<'a, T: Scalar>(
    table: &'a ExplanationTable<T>,
    conditions: &[TCondition],
) -> Result<RowView<'a, T>, FilterError> {
    RowView::all(table).filter(conditions)
}

pub(crate) fn check_condition<T: Scalar>(table: &ExplanationTable<T>, c: &TCondition) -> Result<(), FilterError> {
    let meta = table
        .feature(&c.feature)
        .ok_or_else(|| FilterError::UnknownFeature(c.feature.clone()))?;
    let fits = match meta.kind {
        FeatureKind::Quantitative => !matches!(c.bounds, Bounds::Category(_)),
        FeatureKind::Categorical => !c.op.is_ordering() && matches!(c.bounds, Bounds::Category(_)),
    };
    if fits {
        Ok(())
    } else {
        Err(FilterError::TypeMismatch {
            feature: c.feature.clone(),
            kind: meta.kind,
        })
    }
}

pub(crate) fn row_satisfies<T: Scalar>(row: &Row<T>, c: &TCondition) -> bool {
    match row.value(&c.feature) {
        Some(FeatureValue::Number(x)) => c.accepts_number(x.as_f64()),
        Some(FeatureValue::Category(label)) => c.accepts_category(label),
        None => false,
    }
}
