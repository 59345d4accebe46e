//! Declarative chart specifications over explanation tables.
//!
//! A [`VisSpec`] names fields semantically (a feature's values, a feature's
//! attributions, all attributions in long form, layout helpers) instead of by
//! column string, which is what lets the mapper reason about which fields an
//! insight touches. [`compile`] turns a spec plus its table into Vega-Lite v5.

mod beeswarm;
mod compile;

pub use beeswarm::{beeswarm_layout, SwarmPoint};
pub use compile::{compile, VisError, VEGA_LITE_SCHEMA};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::insight::{Aggregator, Facet, TCondition};

/// Opacity of rows an annotation pushes into the background.
pub const DIM_OPACITY: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mark {
    Point,
    Rect,
    Bar,
    Tick,
    BeeswarmPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    X,
    Y,
    Color,
    Size,
    Row,
    Column,
}

impl Channel {
    pub fn is_positional(self) -> bool {
        matches!(self, Channel::X | Channel::Y)
    }

    pub fn is_facet(self) -> bool {
        matches!(self, Channel::Row | Channel::Column)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Color => "color",
            Channel::Size => "size",
            Channel::Row => "row",
            Channel::Column => "column",
        }
    }
}

/// Layout-only quantities with no column in the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "synthetic", rename_all = "kebab-case")]
pub enum Synthetic {
    /// Position of the row in the (filtered) table.
    InstanceIndex,
    /// Feature name of a long-form datum.
    FeatureName,
    /// Vertical offset computed by the beeswarm layout.
    DensityOffset,
    /// Which side of `at` the feature's `facet` falls on:
    /// `left` (below), `right` (above) or `split` (equal).
    SplitSide { feature: String, facet: Facet, at: f64 },
}

/// What an encoding shows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldRef {
    /// One table column.
    Column { feature: String, facet: Facet },
    /// `facet` of every feature in `features` (all features when empty), one
    /// datum per row and feature.
    Melted {
        facet: Facet,
        #[serde(default)]
        features: Vec<String>,
    },
    Synthetic(Synthetic),
}

impl FieldRef {
    pub fn column(feature: impl Into<String>, facet: Facet) -> Self {
        FieldRef::Column {
            feature: feature.into(),
            facet,
        }
    }

    pub fn melted(facet: Facet) -> Self {
        FieldRef::Melted {
            facet,
            features: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Scale {
    Linear,
    Band,
    Categorical,
    /// Blue–white–red scale centered at `mid`.
    Diverging { mid: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub field: FieldRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregator>,
}

impl Encoding {
    pub fn new(field: FieldRef) -> Self {
        Self {
            field,
            scale: None,
            title: None,
            aggregate: None,
        }
    }

    pub fn scale(mut self, scale: Scale) -> Self {
        self.scale = Some(scale);
        self
    }

    pub fn aggregate(mut self, aggregator: Aggregator) -> Self {
        self.aggregate = Some(aggregator);
        self
    }
}

/// Which data a spec draws: a data set and the rows it is restricted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRef {
    pub dataset: String,
    #[serde(default, with = "conditions_serde")]
    pub filter: Vec<TCondition>,
}

/// Data that stays in the foreground of a dim layer: long-form data whose
/// feature is in `features` (any feature when empty) and rows satisfying all
/// `conditions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeepSelector {
    #[serde(default)]
    pub features: Vec<String>,
    #[serde(default, with = "conditions_serde")]
    pub conditions: Vec<TCondition>,
}

/// Annotation drawn on top of a chart. Layers only ever add to a spec; when
/// several dim layers are present the last one wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "kebab-case")]
pub enum Layer {
    /// Lowers the opacity of everything the selector does not keep.
    Dim { keep: KeepSelector, opacity: f64 },
    /// Highlights the axis, legend or header explaining `channel`.
    Emphasis { channel: Channel },
    /// Dashed reference line at a data value on a positional channel.
    Rule {
        channel: Channel,
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub data: DataRef,
    pub mark: Mark,
    pub encodings: BTreeMap<Channel, Encoding>,
    #[serde(default)]
    pub layers: Vec<Layer>,
}

impl VisSpec {
    pub fn new(dataset: impl Into<String>, mark: Mark) -> Self {
        Self {
            title: None,
            data: DataRef {
                dataset: dataset.into(),
                filter: Vec::new(),
            },
            mark,
            encodings: BTreeMap::new(),
            layers: Vec::new(),
        }
    }

    pub fn encode(mut self, channel: Channel, encoding: Encoding) -> Self {
        self.encodings.insert(channel, encoding);
        self
    }

    pub fn titled(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn filtered(mut self, filter: Vec<TCondition>) -> Self {
        self.data.filter = filter;
        self
    }

    /// Rows × features heatmap of attributions.
    pub fn heatmap(dataset: impl Into<String>) -> Self {
        Self::new(dataset, Mark::Rect)
            .encode(Channel::X, Encoding::new(FieldRef::Synthetic(Synthetic::FeatureName)).scale(Scale::Band))
            .encode(Channel::Y, Encoding::new(FieldRef::Synthetic(Synthetic::InstanceIndex)).scale(Scale::Band))
            .encode(
                Channel::Color,
                Encoding::new(FieldRef::melted(Facet::Attribution)).scale(Scale::Diverging { mid: 0.0 }),
            )
            .titled("Attributions per instance")
    }

    pub fn scatter(dataset: impl Into<String>, x: (&str, Facet), y: (&str, Facet)) -> Self {
        Self::new(dataset, Mark::Point)
            .encode(Channel::X, Encoding::new(FieldRef::column(x.0, x.1)))
            .encode(Channel::Y, Encoding::new(FieldRef::column(y.0, y.1)))
    }

    /// Distribution of one column, with the feature's values (or
    /// attributions) as color.
    pub fn beeswarm(dataset: impl Into<String>, feature: &str, facet: Facet) -> Self {
        let other = match facet {
            Facet::Attribution => Facet::Value,
            Facet::Value => Facet::Attribution,
        };
        Self::new(dataset, Mark::BeeswarmPoint)
            .encode(Channel::X, Encoding::new(FieldRef::column(feature, facet)))
            .encode(Channel::Y, Encoding::new(FieldRef::Synthetic(Synthetic::DensityOffset)))
            .encode(Channel::Color, Encoding::new(FieldRef::column(feature, other)))
    }

    /// Beeswarm whose points are colored by the side of `at` they fall on.
    pub fn dual_beeswarm(dataset: impl Into<String>, feature: &str, facet: Facet, at: f64) -> Self {
        let side = Synthetic::SplitSide {
            feature: feature.to_string(),
            facet,
            at,
        };
        Self::new(dataset, Mark::BeeswarmPoint)
            .encode(Channel::X, Encoding::new(FieldRef::column(feature, facet)))
            .encode(Channel::Y, Encoding::new(FieldRef::Synthetic(Synthetic::DensityOffset)))
            .encode(Channel::Color, Encoding::new(FieldRef::Synthetic(side)).scale(Scale::Categorical))
    }

    /// One bar per feature showing `aggregator` of its `facet`.
    pub fn paired_bar(dataset: impl Into<String>, facet: Facet, features: Vec<String>, aggregator: Aggregator) -> Self {
        Self::new(dataset, Mark::Bar)
            .encode(Channel::X, Encoding::new(FieldRef::Synthetic(Synthetic::FeatureName)).scale(Scale::Band))
            .encode(Channel::Y, Encoding::new(FieldRef::Melted { facet, features }).aggregate(aggregator))
    }

    /// Whether the spec draws one datum per (row, feature).
    pub fn is_long_form(&self) -> bool {
        self.encodings
            .values()
            .any(|e| matches!(e.field, FieldRef::Melted { .. } | FieldRef::Synthetic(Synthetic::FeatureName)))
    }

    /// Every table column the spec reads, including conditions of its filter.
    pub fn columns(&self) -> Vec<(String, Facet)> {
        let mut out = Vec::new();
        for e in self.encodings.values() {
            match &e.field {
                FieldRef::Column { feature, facet } => out.push((feature.clone(), *facet)),
                FieldRef::Synthetic(Synthetic::SplitSide { feature, facet, .. }) => out.push((feature.clone(), *facet)),
                _ => {}
            }
        }
        out.extend(self.data.filter.iter().map(|c| (c.feature.clone(), Facet::Value)));
        out.sort();
        out.dedup();
        out
    }
}

/// Conditions inside specs use the same JSON form as inside insights.
pub(crate) mod conditions_serde {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::{json, Value};

    use crate::insight::{from_value, StructuredInsight, TCondition};

    pub fn serialize<S: Serializer>(conditions: &[TCondition], s: S) -> Result<S::Ok, S::Error> {
        let values: Vec<Value> = conditions.iter().map(TCondition::to_value).collect();
        values.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<TCondition>, D::Error> {
        let values = Option::<Vec<Value>>::deserialize(d)?.unwrap_or_default();
        if values.is_empty() {
            return Ok(Vec::new());
        }
        // Reuse the insight reader for its condition checks.
        let carrier = json!({
            "type": "read",
            "variable": {"feature": "_", "facet": "value", "aggregator": "mean"},
            "comparator": ">",
            "threshold": 0.0,
            "conditions": values,
        });
        match from_value(&carrier).map_err(D::Error::custom)? {
            StructuredInsight::Read(r) => Ok(r.conditions),
            _ => unreachable!("carrier is a read insight"),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests;
