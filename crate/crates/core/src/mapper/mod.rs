//! Reverse mapping: projects an insight back onto the chart it was read
//! from, and proposes a better-suited coordinated chart when needed.
//!
//! Annotation only appends [`Layer`]s; the marks and encodings of the input
//! spec are never touched. Recommendation is a fixed rule table keyed on the
//! insight type and aggregators.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::insight::{Aggregator, Facet, StructuredInsight, TCondition, TVariable};
use crate::vis::{conditions_serde, Channel, DataRef, FieldRef, KeepSelector, Layer, Mark, VisSpec, DIM_OPACITY};

/// Problems found while annotating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingFlag {
    /// None of the spec's encodings shows a column the insight mentions.
    NoMatch,
}

/// Which row of the recommendation table fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    CorrelationScatter,
    CountDualBeeswarm,
    AggregatePairedBar,
    ReadBeeswarm,
    /// The current chart already is the target chart.
    AnnotateOnly,
}

impl RuleId {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::CorrelationScatter => "correlation-scatter",
            RuleId::CountDualBeeswarm => "count-dual-beeswarm",
            RuleId::AggregatePairedBar => "aggregate-paired-bar",
            RuleId::ReadBeeswarm => "read-beeswarm",
            RuleId::AnnotateOnly => "annotate-only",
        }
    }

    fn explanation(self) -> &'static str {
        match self {
            RuleId::CorrelationScatter => {
                "A relation between two per-row quantities is easiest to judge on a scatter plot of one against the other."
            }
            RuleId::CountDualBeeswarm => {
                "Counts and fractions on either side of a threshold are easiest to compare when every row is a point, colored by its side."
            }
            RuleId::AggregatePairedBar => "Aggregates of different columns are compared directly as side-by-side bars.",
            RuleId::ReadBeeswarm => {
                "A statistic of one column is read against the full distribution of that column, with the threshold marked."
            }
            RuleId::AnnotateOnly => "The current chart already shows the insight; it is annotated in place.",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State shared by the annotated and the recommended chart: both draw the
/// same data and keep the same rows in the foreground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coordination {
    pub data: DataRef,
    #[serde(default, with = "conditions_serde")]
    pub conditions: Vec<TCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingResult {
    pub annotated_spec: VisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommended_spec: Option<VisSpec>,
    pub rule_id: RuleId,
    pub rationale: String,
    pub coordination: Coordination,
    #[serde(default)]
    pub flags: Vec<MappingFlag>,
}

/// Annotates `spec` and, unless it already is the most suitable chart for
/// the insight, recommends a coordinated one.
pub fn map_insight(spec: &VisSpec, insight: &StructuredInsight) -> MappingResult {
    let (annotated_spec, flags) = annotate(spec, insight);
    let (rule, target) = target_spec(spec, insight);
    let recommended_spec = (flags.contains(&MappingFlag::NoMatch) || !already_suitable(spec, &target, insight))
        .then(|| annotate(&target, insight).0);
    let rule_id = if recommended_spec.is_some() { rule } else { RuleId::AnnotateOnly };
    MappingResult {
        annotated_spec,
        recommended_spec,
        rule_id,
        rationale: rule_id.explanation().to_string(),
        coordination: Coordination {
            data: spec.data.clone(),
            conditions: insight.conditions().to_vec(),
        },
        flags,
    }
}

fn field_matches(field: &FieldRef, columns: &[(String, Facet)]) -> bool {
    match field {
        FieldRef::Column { feature, facet } => columns.iter().any(|(f, c)| f == feature && c == facet),
        FieldRef::Melted { facet, features } => columns
            .iter()
            .any(|(f, c)| c == facet && (features.is_empty() || features.contains(f))),
        FieldRef::Synthetic(_) => false,
    }
}

/// Channels of `spec` whose field shows a column of the insight. Condition
/// features count through their value facet.
pub fn matched_channels(spec: &VisSpec, insight: &StructuredInsight) -> Vec<Channel> {
    let columns = insight.columns();
    spec.encodings
        .iter()
        .filter(|(_, e)| field_matches(&e.field, &columns))
        .map(|(c, _)| *c)
        .collect()
}

/// Positional channel on which `(feature, facet)` is drawn as a plain column.
fn positional_channel(spec: &VisSpec, feature: &str, facet: Facet) -> Option<Channel> {
    spec.encodings.iter().find_map(|(c, e)| {
        let hit = matches!(&e.field, FieldRef::Column { feature: f, facet: k } if f == feature && *k == facet);
        (hit && c.is_positional()).then_some(*c)
    })
}

fn counting_variables(insight: &StructuredInsight) -> Vec<&TVariable> {
    insight
        .variables()
        .into_iter()
        .filter(|v| v.aggregator.needs_predicate())
        .collect()
}

fn is_location(a: Aggregator) -> bool {
    matches!(a, Aggregator::Mean | Aggregator::Min | Aggregator::Max)
}

/// Dashed reference lines the insight implies on `spec`'s axes, at most one
/// per (channel, value).
fn reference_rules(spec: &VisSpec, insight: &StructuredInsight) -> Vec<Layer> {
    let mut rules: Vec<(Channel, f64, String)> = Vec::new();
    for c in insight.conditions() {
        if let Some(channel) = positional_channel(spec, &c.feature, Facet::Value) {
            for constant in c.bounds.constants() {
                rules.push((channel, constant, format!("{} {} {}", c.feature, c.op, constant)));
            }
        }
    }
    if let StructuredInsight::Read(r) = insight {
        let v = &r.variable;
        if is_location(v.aggregator) {
            if let Some(channel) = positional_channel(spec, &v.feature, v.facet) {
                rules.push((channel, r.threshold, format!("{} {} {}", v.aggregator, r.comparator, r.threshold)));
            }
        }
    }
    for v in counting_variables(insight) {
        if let (Some(p), Some(channel)) = (v.predicate, positional_channel(spec, &v.feature, v.facet)) {
            rules.push((channel, p.constant, format!("{} {} {}", v.feature, p.comparator, p.constant)));
        }
    }
    let mut seen = BTreeSet::new();
    rules
        .into_iter()
        .filter(|(c, v, _)| seen.insert((*c, v.to_bits())))
        .map(|(channel, value, label)| Layer::Rule {
            channel,
            value,
            label: Some(label),
        })
        .collect()
}

fn dim_layer(spec: &VisSpec, insight: &StructuredInsight) -> Option<Layer> {
    let mut keep = KeepSelector {
        features: Vec::new(),
        conditions: insight.conditions().to_vec(),
    };
    if spec.is_long_form() {
        let scope: BTreeSet<&str> = spec
            .encodings
            .values()
            .filter_map(|e| match &e.field {
                FieldRef::Melted { features, .. } if !features.is_empty() => Some(features.iter().map(String::as_str)),
                _ => None,
            })
            .flatten()
            .collect();
        let mentioned: BTreeSet<&str> = insight.variables().iter().map(|v| v.feature.as_str()).collect();
        if scope.is_empty() || !scope.iter().all(|f| mentioned.contains(f)) {
            keep.features = mentioned.into_iter().map(str::to_string).collect();
        }
    }
    (!keep.features.is_empty() || !keep.conditions.is_empty()).then_some(Layer::Dim {
        keep,
        opacity: DIM_OPACITY,
    })
}

/// Appends emphasis, dim and reference-line layers for `insight` to a copy
/// of `spec`. Layers already present are not repeated, so annotating twice
/// changes nothing.
pub fn annotate(spec: &VisSpec, insight: &StructuredInsight) -> (VisSpec, Vec<MappingFlag>) {
    let matched = matched_channels(spec, insight);
    if matched.is_empty() {
        return (spec.clone(), vec![MappingFlag::NoMatch]);
    }
    let mut out = spec.clone();
    let mut push = |layer: Layer| {
        if !out.layers.contains(&layer) {
            out.layers.push(layer);
        }
    };
    for channel in matched {
        push(Layer::Emphasis { channel });
    }
    if let Some(dim) = dim_layer(spec, insight) {
        let last_dim = spec.layers.iter().rev().find(|l| matches!(l, Layer::Dim { .. }));
        if last_dim != Some(&dim) {
            out.layers.push(dim);
        }
    }
    for rule in reference_rules(spec, insight) {
        if !out.layers.contains(&rule) {
            out.layers.push(rule);
        }
    }
    (out, Vec::new())
}

/// The bare chart best suited to `insight`, over the same data as `current`.
pub fn target_spec(current: &VisSpec, insight: &StructuredInsight) -> (RuleId, VisSpec) {
    let dataset = current.data.dataset.clone();
    let (rule, mut spec) = match insight {
        StructuredInsight::Correlation(c) => (
            RuleId::CorrelationScatter,
            VisSpec::scatter(dataset, (&c.x.feature, c.x.facet), (&c.y.feature, c.y.facet)),
        ),
        _ => {
            if let Some(v) = counting_variables(insight).first() {
                let at = v.predicate.map_or(0.0, |p| p.constant);
                (RuleId::CountDualBeeswarm, VisSpec::dual_beeswarm(dataset, &v.feature, v.facet, at))
            } else if let StructuredInsight::Comparison(c) = insight {
                let mut features = vec![c.left.feature.clone()];
                if c.right.feature != c.left.feature {
                    features.push(c.right.feature.clone());
                }
                (
                    RuleId::AggregatePairedBar,
                    VisSpec::paired_bar(dataset, c.left.facet, features, c.left.aggregator),
                )
            } else {
                let v = insight.variables()[0];
                (RuleId::ReadBeeswarm, VisSpec::beeswarm(dataset, &v.feature, v.facet))
            }
        }
    };
    spec.data = current.data.clone();
    spec.title = Some(format!("{} insight", insight.kind()));
    (rule, spec)
}

fn same_bindings(a: &VisSpec, b: &VisSpec) -> bool {
    a.mark == b.mark
        && a.encodings.len() == b.encodings.len()
        && a.encodings
            .iter()
            .zip(&b.encodings)
            .all(|((ca, ea), (cb, eb))| ca == cb && ea.field == eb.field && ea.aggregate == eb.aggregate)
}

/// Whether `current` shows the insight as well as `target` would: same mark
/// and field bindings, or a bar chart already aggregating every variable.
fn already_suitable(current: &VisSpec, target: &VisSpec, insight: &StructuredInsight) -> bool {
    if same_bindings(current, target) {
        return true;
    }
    let variables = insight.variables();
    current.mark == Mark::Bar
        && !matches!(insight, StructuredInsight::Correlation(_))
        && variables.iter().all(|v| !v.aggregator.needs_predicate())
        && variables.iter().all(|v| {
            current.encodings.values().any(|e| {
                e.aggregate == Some(v.aggregator) && field_matches(&e.field, &[(v.feature.clone(), v.facet)])
            })
        })
}

/// The recommended chart with its rule, or `None` when `current` already
/// suits the insight.
pub fn recommend(current: &VisSpec, insight: &StructuredInsight) -> Option<(RuleId, VisSpec)> {
    let (rule, target) = target_spec(current, insight);
    (!already_suitable(current, &target, insight)).then(|| (rule, annotate(&target, insight).0))
}

#[cfg(test)]
mod tests;
