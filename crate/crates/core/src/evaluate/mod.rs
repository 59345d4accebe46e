//! Checks insights against an explanation table.
//!
//! Every insight is reduced to one or two statistics over the rows selected
//! by its conditions. A statistic that cannot be computed (no rows, a single
//! row for a variance, a constant column in a correlation) yields an
//! [`Outcome::Undetermined`] verdict with a reason rather than an error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::{filter_rows, ExplanationTable, FeatureKind, FeatureValue, FilterError, RowView};
use crate::grammar::format_number;
use crate::insight::{
    Aggregator, ComparisonInsight, CorrelationInsight, Direction, Facet, ReadComparator, ReadInsight, Relation,
    StructuredInsight, TVariable, DEFAULT_APPROX_TOLERANCE,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Supported,
    Refuted,
    Undetermined,
}

/// Result of checking one insight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Named statistics the decision was based on.
    pub statistics: BTreeMap<String, f64>,
    /// Human-readable comparison, e.g. `0.4 > 0.65 is false`.
    pub evidence: String,
    /// Rows left after applying the conditions.
    pub n_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// `|r|` at or above which a correlation counts as present.
    pub correlation_threshold: f64,
    /// Fewest rows a correlation is computed on.
    pub min_correlation_rows: usize,
    /// Relative tolerance of `approx` and `approx-equal`.
    pub approx_tolerance: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            correlation_threshold: 0.3,
            min_correlation_rows: 3,
            approx_tolerance: DEFAULT_APPROX_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("insight references unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("`{0}` is categorical; its values are not numbers")]
    CategoricalValues(String),
}

/// Evaluates any insight kind.
pub fn evaluate<T: Scalar>(
    insight: &StructuredInsight,
    table: &ExplanationTable<T>,
    config: &EvalConfig,
) -> Result<Verdict, EvalError> {
    match insight {
        StructuredInsight::Read(r) => eval_read(r, table, config),
        StructuredInsight::Correlation(c) => eval_correlation(c, table, config),
        StructuredInsight::Comparison(c) => eval_comparison(c, table, config),
    }
}

/// `|a − b| ≤ tol · max(|a|, |b|)`
pub fn approx_equal(a: f64, b: f64, tolerance: f64) -> bool {
    (a - b).abs() <= tolerance * a.abs().max(b.abs())
}

pub fn eval_read<T: Scalar>(
    insight: &ReadInsight,
    table: &ExplanationTable<T>,
    config: &EvalConfig,
) -> Result<Verdict, EvalError> {
    let view = filter_rows(table, &insight.conditions)?;
    let name = statistic_name(insight.variable.aggregator);
    let value = match aggregate(&view, &insight.variable)? {
        Ok(v) => v,
        Err(reason) => return Ok(undetermined(view.len(), reason)),
    };
    let t = insight.threshold;
    let holds = match insight.comparator {
        ReadComparator::Lt => value < t,
        ReadComparator::Le => value <= t,
        ReadComparator::Gt => value > t,
        ReadComparator::Ge => value >= t,
        ReadComparator::Approx => approx_equal(value, t, config.approx_tolerance),
    };
    let symbol = match insight.comparator {
        ReadComparator::Approx => "≈",
        c => c.as_str(),
    };
    Ok(Verdict {
        outcome: decided(holds),
        statistics: [(name.to_string(), value), ("n_rows".to_string(), view.len() as f64)].into(),
        evidence: format!("{name} = {}; {} {symbol} {} is {holds}", format_number(value), format_number(value), format_number(t)),
        n_rows: view.len(),
        reason: None,
    })
}

pub fn eval_comparison<T: Scalar>(
    insight: &ComparisonInsight,
    table: &ExplanationTable<T>,
    config: &EvalConfig,
) -> Result<Verdict, EvalError> {
    let view = filter_rows(table, &insight.conditions)?;
    let lhs = aggregate(&view, &insight.left)?;
    let rhs = aggregate(&view, &insight.right)?;
    let (lhs, rhs) = match (lhs, rhs) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(reason), _) => return Ok(undetermined(view.len(), format!("left side: {reason}"))),
        (_, Err(reason)) => return Ok(undetermined(view.len(), format!("right side: {reason}"))),
    };
    let (holds, symbol) = match insight.relation {
        Relation::Greater => (lhs > rhs, ">"),
        Relation::Less => (lhs < rhs, "<"),
        Relation::ApproxEqual => (approx_equal(lhs, rhs, config.approx_tolerance), "≈"),
    };
    Ok(Verdict {
        outcome: decided(holds),
        statistics: [
            ("lhs".to_string(), lhs),
            ("rhs".to_string(), rhs),
            ("n_rows".to_string(), view.len() as f64),
        ]
        .into(),
        evidence: format!("{} {symbol} {} is {holds}", format_number(lhs), format_number(rhs)),
        n_rows: view.len(),
        reason: None,
    })
}

pub fn eval_correlation<T: Scalar>(
    insight: &CorrelationInsight,
    table: &ExplanationTable<T>,
    config: &EvalConfig,
) -> Result<Verdict, EvalError> {
    let view = filter_rows(table, &insight.conditions)?;
    let xs = column(&view, &insight.x)?;
    let ys = column(&view, &insight.y)?;
    let n = view.len();
    if n < config.min_correlation_rows.max(2) {
        return Ok(undetermined(
            n,
            format!("a correlation needs at least {} rows, found {n}", config.min_correlation_rows),
        ));
    }
    let Some(r) = pearson(&xs, &ys) else {
        return Ok(undetermined(n, "one of the columns is constant on the selected rows".into()));
    };
    let rho = spearman(&xs, &ys);
    let tau = config.correlation_threshold;
    let holds = match insight.direction {
        Direction::Positive => r >= tau,
        Direction::Negative => r <= -tau,
        Direction::None => r.abs() < tau,
    };
    let claim = match insight.direction {
        Direction::Positive => format!("r >= {tau}"),
        Direction::Negative => format!("r <= -{tau}"),
        Direction::None => format!("|r| < {tau}"),
    };
    let mut statistics: BTreeMap<String, f64> =
        [("pearson_r".to_string(), r), ("n_rows".to_string(), n as f64)].into();
    if let Some(rho) = rho {
        statistics.insert("spearman_rho".into(), rho);
    }
    Ok(Verdict {
        outcome: decided(holds),
        statistics,
        evidence: format!("r = {r:.4}; {claim} is {holds}"),
        n_rows: n,
        reason: None,
    })
}

fn decided(holds: bool) -> Outcome {
    if holds {
        Outcome::Supported
    } else {
        Outcome::Refuted
    }
}

fn undetermined(n_rows: usize, reason: String) -> Verdict {
    Verdict {
        outcome: Outcome::Undetermined,
        statistics: [("n_rows".to_string(), n_rows as f64)].into(),
        evidence: String::new(),
        n_rows,
        reason: Some(reason),
    }
}

/// Name a statistic is reported under.
pub fn statistic_name(aggregator: Aggregator) -> &'static str {
    match aggregator {
        Aggregator::Identity => "value",
        Aggregator::Mean => "mean",
        Aggregator::Variance => "variance",
        Aggregator::Min => "min",
        Aggregator::Max => "max",
        Aggregator::Count => "count",
        Aggregator::Fraction => "fraction",
    }
}

/// Numeric column of `(feature, facet)` over the view, in view order.
pub fn column<T: Scalar>(view: &RowView<'_, T>, variable: &TVariable) -> Result<Vec<T>, EvalError> {
    let meta = view
        .table()
        .feature(&variable.feature)
        .ok_or_else(|| EvalError::UnknownFeature(variable.feature.clone()))?;
    if variable.facet == Facet::Value && meta.kind == FeatureKind::Categorical {
        return Err(EvalError::CategoricalValues(variable.feature.clone()));
    }
    Ok(view
        .rows()
        .map(|row| match variable.facet {
            Facet::Attribution => row.attribution(&variable.feature).unwrap_or_else(T::nan),
            Facet::Value => match row.value(&variable.feature) {
                Some(FeatureValue::Number(x)) => *x,
                _ => T::nan(),
            },
        })
        .collect())
}

/// The aggregated statistic, or the reason it is undefined.
pub fn aggregate<T: Scalar>(view: &RowView<'_, T>, variable: &TVariable) -> Result<Result<f64, String>, EvalError> {
    let xs = column(view, variable)?;
    let n = xs.len();
    let need = |k: usize| {
        if n < k {
            Err(format!(
                "{} needs at least {k} row{}, found {n}",
                statistic_name(variable.aggregator),
                if k == 1 { "" } else { "s" }
            ))
        } else {
            Ok(())
        }
    };
    let satisfied = || {
        let p = variable.predicate.expect("counting aggregators carry a predicate");
        xs.iter().filter(|x| p.comparator.holds(x.as_f64(), p.constant)).count()
    };
    Ok(match variable.aggregator {
        Aggregator::Identity => Err("a per-row variable has no single value".into()),
        Aggregator::Mean => need(1).map(|_| mean(&xs).as_f64()),
        Aggregator::Variance => need(2).map(|_| sample_variance(&xs).as_f64()),
        Aggregator::Min => need(1).map(|_| xs.iter().copied().fold(T::infinity(), T::min).as_f64()),
        Aggregator::Max => need(1).map(|_| xs.iter().copied().fold(T::neg_infinity(), T::max).as_f64()),
        Aggregator::Count => Ok(satisfied() as f64),
        Aggregator::Fraction => need(1).map(|_| satisfied() as f64 / n as f64),
    })
}

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::lit(xs.len() as f64)
}

/// Two-pass sample variance (denominator `n − 1`).
pub fn sample_variance<T: Scalar>(xs: &[T]) -> T {
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    ss / T::lit(xs.len() as f64 - 1.0)
}

/// Pearson correlation; `None` when either column is constant.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Option<f64> {
    let xs: Vec<f64> = xs.iter().map(|x| x.as_f64()).collect();
    let ys: Vec<f64> = ys.iter().map(|y| y.as_f64()).collect();
    pearson_f64(&xs, &ys)
}

fn pearson_f64(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman<T: Scalar>(xs: &[T], ys: &[T]) -> Option<f64> {
    pearson_f64(&ranks(xs), &ranks(ys))
}

fn ranks<T: Scalar>(xs: &[T]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}
