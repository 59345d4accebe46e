//! The structured insight representation.
//!
//! An insight is one of three shapes: a `Read` of an aggregated statistic
//! against a threshold, a `Correlation` between two per-row variables, or a
//! `Comparison` of two aggregated variables. Each may carry conditions that
//! restrict the rows it talks about to a feature value range.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

/// Version tag written into every canonical insight document.
pub const SCHEMA_VERSION: &str = "insight/v1";

/// Relative tolerance used by `≈` / approx-equal unless configured otherwise.
pub const DEFAULT_APPROX_TOLERANCE: f64 = 0.05;

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn parse(text: &str) -> Option<Self> {
                match text {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }

            /// Every allowed spelling, in declaration order.
            pub fn candidates() -> Vec<String> {
                Self::ALL.iter().map(|v| v.as_str().to_string()).collect()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                Self::parse(&text).ok_or_else(|| {
                    de::Error::custom(format!(
                        "unknown {} `{}`, expected one of {:?}",
                        stringify!($name),
                        text,
                        Self::candidates()
                    ))
                })
            }
        }
    };
}

keyword_enum! {
    /// Which column family of the explanation table a variable reads.
    Facet { Value => "value", Attribution => "attribution" }
}

keyword_enum! {
    /// How a variable reduces its column. `Identity` keeps one value per row.
    Aggregator {
        Identity => "identity",
        Mean => "mean",
        Variance => "variance",
        Min => "min",
        Max => "max",
        Count => "count",
        Fraction => "fraction",
    }
}

keyword_enum! {
    /// Row predicate comparator used by `count` / `fraction`.
    Comparator { Lt => "<", Le => "<=", Gt => ">", Ge => ">=", Eq => "=" }
}

keyword_enum! {
    /// Comparator between a Read statistic and its threshold.
    ReadComparator { Lt => "<", Le => "<=", Gt => ">", Ge => ">=", Approx => "approx" }
}

keyword_enum! {
    /// Claimed direction of a correlation.
    Direction { Positive => "positive", Negative => "negative", None => "none" }
}

keyword_enum! {
    /// Claimed relation between the two sides of a comparison.
    Relation { Greater => "greater", Less => "less", ApproxEqual => "approx-equal" }
}

keyword_enum! {
    /// Operator of a feature-value condition.
    ConditionOp { Lt => "<", Le => "<=", Gt => ">", Ge => ">=", Eq => "=", InRange => "in-range" }
}

keyword_enum! {
    /// The union tag.
    InsightKind { Read => "read", Correlation => "correlation", Comparison => "comparison" }
}

impl Aggregator {
    pub fn is_aggregated(self) -> bool {
        self != Aggregator::Identity
    }

    pub fn needs_predicate(self) -> bool {
        matches!(self, Aggregator::Count | Aggregator::Fraction)
    }

    pub fn aggregated() -> Vec<String> {
        Self::ALL
            .iter()
            .filter(|a| a.is_aggregated())
            .map(|a| a.as_str().to_string())
            .collect()
    }
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
        }
    }
}

impl ConditionOp {
    pub fn is_ordering(self) -> bool {
        !matches!(self, ConditionOp::Eq)
    }
}

/// Row predicate attached to a `count` or `fraction` variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predicate {
    pub comparator: Comparator,
    pub constant: f64,
}

impl Predicate {
    pub fn new(comparator: Comparator, constant: f64) -> Self {
        Self { comparator, constant }
    }

    pub fn positive() -> Self {
        Self::new(Comparator::Gt, 0.0)
    }

    pub fn negative() -> Self {
        Self::new(Comparator::Lt, 0.0)
    }
}

/// A reference to one column of the table plus the reduction applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TVariable {
    pub feature: String,
    pub facet: Facet,
    pub aggregator: Aggregator,
    pub predicate: Option<Predicate>,
}

impl TVariable {
    pub fn per_row(feature: impl Into<String>, facet: Facet) -> Self {
        Self {
            feature: feature.into(),
            facet,
            aggregator: Aggregator::Identity,
            predicate: None,
        }
    }

    pub fn aggregated(feature: impl Into<String>, facet: Facet, aggregator: Aggregator) -> Self {
        Self {
            feature: feature.into(),
            facet,
            aggregator,
            predicate: None,
        }
    }

    pub fn counting(
        feature: impl Into<String>,
        facet: Facet,
        aggregator: Aggregator,
        predicate: Predicate,
    ) -> Self {
        Self {
            feature: feature.into(),
            facet,
            aggregator,
            predicate: Some(predicate),
        }
    }

    /// `(feature, facet)` pair, the unit of field matching against charts.
    pub fn column(&self) -> (&str, Facet) {
        (&self.feature, self.facet)
    }

    pub(crate) fn to_value(&self) -> Value {
        json!({
            "feature": self.feature,
            "facet": self.facet.as_str(),
            "aggregator": self.aggregator.as_str(),
            "predicate": self.predicate.map(|p| json!({
                "comparator": p.comparator.as_str(),
                "constant": p.constant,
            })),
        })
    }
}

/// Right-hand side of a condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Bounds {
    Number(f64),
    Category(String),
    Range(f64, f64),
}

impl Bounds {
    pub(crate) fn to_value(&self) -> Value {
        match self {
            Bounds::Number(x) => json!(x),
            Bounds::Category(c) => json!(c),
            Bounds::Range(lo, hi) => json!([lo, hi]),
        }
    }

    /// Numeric constants mentioned by the bound.
    pub fn constants(&self) -> Vec<f64> {
        match self {
            Bounds::Number(x) => vec![*x],
            Bounds::Category(_) => Vec::new(),
            Bounds::Range(lo, hi) => vec![*lo, *hi],
        }
    }
}

/// Restriction of the rows an insight talks about, always on feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct TCondition {
    pub feature: String,
    pub op: ConditionOp,
    pub bounds: Bounds,
}

impl TCondition {
    pub fn new(feature: impl Into<String>, op: ConditionOp, bounds: Bounds) -> Self {
        Self {
            feature: feature.into(),
            op,
            bounds,
        }
    }

    pub fn above(feature: impl Into<String>, constant: f64) -> Self {
        Self::new(feature, ConditionOp::Gt, Bounds::Number(constant))
    }

    pub fn in_range(feature: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self::new(feature, ConditionOp::InRange, Bounds::Range(lo, hi))
    }

    /// Whether a numeric feature value satisfies the condition.
    pub fn accepts_number(&self, x: f64) -> bool {
        match (&self.op, &self.bounds) {
            (ConditionOp::InRange, Bounds::Range(lo, hi)) => *lo <= x && x <= *hi,
            (ConditionOp::Lt, Bounds::Number(c)) => x < *c,
            (ConditionOp::Le, Bounds::Number(c)) => x <= *c,
            (ConditionOp::Gt, Bounds::Number(c)) => x > *c,
            (ConditionOp::Ge, Bounds::Number(c)) => x >= *c,
            (ConditionOp::Eq, Bounds::Number(c)) => x == *c,
            _ => false,
        }
    }

    pub fn accepts_category(&self, value: &str) -> bool {
        matches!((&self.op, &self.bounds), (ConditionOp::Eq, Bounds::Category(c)) if c == value)
    }

    pub(crate) fn to_value(&self) -> Value {
        json!({
            "feature": self.feature,
            "facet": "value",
            "op": self.op.as_str(),
            "bounds": self.bounds.to_value(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadInsight {
    pub variable: TVariable,
    pub comparator: ReadComparator,
    pub threshold: f64,
    pub conditions: Vec<TCondition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationInsight {
    pub x: TVariable,
    pub y: TVariable,
    pub direction: Direction,
    pub conditions: Vec<TCondition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonInsight {
    pub left: TVariable,
    pub right: TVariable,
    pub relation: Relation,
    pub conditions: Vec<TCondition>,
}

/// A fully specified, machine-checkable insight.
#[derive(Debug, Clone, PartialEq)]
pub enum StructuredInsight {
    Read(ReadInsight),
    Correlation(CorrelationInsight),
    Comparison(ComparisonInsight),
}

impl StructuredInsight {
    pub fn kind(&self) -> InsightKind {
        match self {
            StructuredInsight::Read(_) => InsightKind::Read,
            StructuredInsight::Correlation(_) => InsightKind::Correlation,
            StructuredInsight::Comparison(_) => InsightKind::Comparison,
        }
    }

    pub fn conditions(&self) -> &[TCondition] {
        match self {
            StructuredInsight::Read(r) => &r.conditions,
            StructuredInsight::Correlation(c) => &c.conditions,
            StructuredInsight::Comparison(c) => &c.conditions,
        }
    }

    pub fn conditions_mut(&mut self) -> &mut Vec<TCondition> {
        match self {
            StructuredInsight::Read(r) => &mut r.conditions,
            StructuredInsight::Correlation(c) => &mut c.conditions,
            StructuredInsight::Comparison(c) => &mut c.conditions,
        }
    }

    pub fn variables(&self) -> Vec<&TVariable> {
        match self {
            StructuredInsight::Read(r) => vec![&r.variable],
            StructuredInsight::Correlation(c) => vec![&c.x, &c.y],
            StructuredInsight::Comparison(c) => vec![&c.left, &c.right],
        }
    }

    /// Every `(feature, facet)` the insight mentions, conditions included.
    pub fn columns(&self) -> Vec<(String, Facet)> {
        let mut out: Vec<(String, Facet)> = Vec::new();
        let mentioned = self
            .variables()
            .into_iter()
            .map(|v| (v.feature.clone(), v.facet))
            .chain(
                self.conditions()
                    .iter()
                    .map(|c| (c.feature.clone(), Facet::Value)),
            );
        for column in mentioned {
            if !out.contains(&column) {
                out.push(column);
            }
        }
        out
    }

    /// Canonical JSON value: every key present, absent conditions as `null`.
    pub fn to_value(&self) -> Value {
        let mut map = Map::new();
        map.insert("schema".into(), json!(SCHEMA_VERSION));
        map.insert("type".into(), json!(self.kind().as_str()));
        match self {
            StructuredInsight::Read(r) => {
                map.insert("variable".into(), r.variable.to_value());
                map.insert("comparator".into(), json!(r.comparator.as_str()));
                map.insert("threshold".into(), json!(r.threshold));
            }
            StructuredInsight::Correlation(c) => {
                map.insert("x".into(), c.x.to_value());
                map.insert("y".into(), c.y.to_value());
                map.insert("direction".into(), json!(c.direction.as_str()));
            }
            StructuredInsight::Comparison(c) => {
                map.insert("left".into(), c.left.to_value());
                map.insert("right".into(), c.right.to_value());
                map.insert("relation".into(), json!(c.relation.as_str()));
            }
        }
        let conditions = self.conditions();
        map.insert(
            "conditions".into(),
            if conditions.is_empty() {
                Value::Null
            } else {
                Value::Array(conditions.iter().map(TCondition::to_value).collect())
            },
        );
        Value::Object(map)
    }
}

impl Serialize for StructuredInsight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StructuredInsight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        super::from_value(&value).map_err(de::Error::custom)
    }
}
