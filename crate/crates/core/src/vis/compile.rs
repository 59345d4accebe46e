use std::collections::BTreeSet;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::attribution::{filter, filter_rows, ExplanationTable, FeatureKind, FeatureValue, FilterError, Row};
use crate::grammar::format_number;
use crate::insight::{Aggregator, Facet};
use crate::scalar::Scalar;

use super::beeswarm::{beeswarm_layout, default_bin_width, SwarmPoint};
use super::{Channel, Encoding, FieldRef, Layer, Mark, Scale, Synthetic, VisSpec};

pub const VEGA_LITE_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

const EMPHASIS_COLOR: &str = "#c0392b";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VisError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("spec references unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("`{0}` cannot be drawn as a chart aggregate")]
    UnsupportedAggregate(Aggregator),
}

struct Ctx<'a, T> {
    table: &'a ExplanationTable<T>,
}

impl<T: Scalar> Ctx<'_, T> {
    fn index(&self, feature: &str) -> Result<usize, VisError> {
        self.table
            .features()
            .iter()
            .position(|f| f.name == feature)
            .ok_or_else(|| VisError::UnknownFeature(feature.to_string()))
    }

    /// Data field name, Vega-Lite type and default title.
    fn field(&self, field: &FieldRef) -> Result<(String, &'static str, String), VisError> {
        Ok(match field {
            FieldRef::Column { feature, facet } => {
                let i = self.index(feature)?;
                match facet {
                    Facet::Attribution => (format!("a{i}"), "quantitative", format!("{feature} (attribution)")),
                    Facet::Value => {
                        let kind = match self.table.features()[i].kind {
                            FeatureKind::Quantitative => "quantitative",
                            FeatureKind::Categorical => "nominal",
                        };
                        (format!("v{i}"), kind, feature.clone())
                    }
                }
            }
            FieldRef::Melted { facet, features } => {
                for f in features {
                    self.index(f)?;
                }
                (format!("_m_{facet}"), "quantitative", facet.to_string())
            }
            FieldRef::Synthetic(s) => match s {
                Synthetic::InstanceIndex => ("_index".into(), "ordinal", "instance".into()),
                Synthetic::FeatureName => ("_feature".into(), "nominal", "feature".into()),
                Synthetic::DensityOffset => ("_offset".into(), "quantitative", String::new()),
                Synthetic::SplitSide { feature, facet, at } => {
                    self.index(feature)?;
                    let what = match facet {
                        Facet::Attribution => format!("{feature} attribution"),
                        Facet::Value => feature.clone(),
                    };
                    ("_side".into(), "nominal", format!("{what} vs {}", format_number(*at)))
                }
            },
        })
    }
}

fn cell<T: Scalar>(row: &Row<T>, feature: &str, facet: Facet) -> Value {
    match facet {
        Facet::Attribution => row.attribution(feature).map_or(Value::Null, |a| json!(a.as_f64())),
        Facet::Value => match row.value(feature) {
            Some(FeatureValue::Number(x)) => json!(x.as_f64()),
            Some(FeatureValue::Category(c)) => json!(c),
            None => Value::Null,
        },
    }
}

fn side_of(x: Option<f64>, at: f64) -> Value {
    match x {
        Some(x) if x < at => json!("left"),
        Some(x) if x > at => json!("right"),
        Some(_) => json!("split"),
        None => Value::Null,
    }
}

fn vl_aggregate(a: Aggregator) -> Result<&'static str, VisError> {
    match a {
        Aggregator::Mean => Ok("mean"),
        Aggregator::Variance => Ok("variance"),
        Aggregator::Min => Ok("min"),
        Aggregator::Max => Ok("max"),
        Aggregator::Count => Ok("count"),
        other => Err(VisError::UnsupportedAggregate(other)),
    }
}

fn emphasis_style() -> Value {
    json!({"titleFontWeight": "bold", "titleColor": EMPHASIS_COLOR})
}

/// Compiles `spec` against `table` into a self-contained Vega-Lite v5
/// specification with inline data.
pub fn compile<T: Scalar>(spec: &VisSpec, table: &ExplanationTable<T>) -> Result<Value, VisError> {
    let ctx = Ctx { table };
    let view = filter_rows(table, &spec.data.filter)?;

    // Long-form data: one datum per (row, feature).
    let long_features: Option<Vec<String>> = spec.is_long_form().then(|| {
        let mut explicit = BTreeSet::new();
        let mut everything = false;
        for e in spec.encodings.values() {
            if let FieldRef::Melted { features, .. } = &e.field {
                everything |= features.is_empty();
                explicit.extend(features.iter().map(String::as_str));
            }
        }
        everything |= explicit.is_empty();
        table
            .feature_names()
            .into_iter()
            .filter(|n| everything || explicit.contains(n))
            .map(str::to_string)
            .collect()
    });

    let dim = spec.layers.iter().rev().find_map(|l| match l {
        Layer::Dim { keep, opacity } => Some((keep, *opacity)),
        _ => None,
    });
    for layer in &spec.layers {
        if let Layer::Dim { keep, .. } = layer {
            for c in &keep.conditions {
                filter::check_condition(table, c)?;
            }
            for f in &keep.features {
                ctx.index(f)?;
            }
        }
    }

    let mut datums: Vec<Map<String, Value>> = Vec::new();
    for (position, row) in view.rows().enumerate() {
        let mut base = Map::new();
        base.insert("_row".into(), json!(row.id));
        base.insert("_index".into(), json!(position));
        for (i, f) in table.features().iter().enumerate() {
            base.insert(format!("v{i}"), cell(row, &f.name, Facet::Value));
            base.insert(format!("a{i}"), cell(row, &f.name, Facet::Attribution));
        }
        let row_kept = dim.is_none_or(|(keep, _)| keep.conditions.iter().all(|c| filter::row_satisfies(row, c)));
        match &long_features {
            Some(features) => {
                for f in features {
                    let mut d = base.clone();
                    d.insert("_feature".into(), json!(f));
                    d.insert("_m_attribution".into(), cell(row, f, Facet::Attribution));
                    let value = match row.value(f) {
                        Some(FeatureValue::Number(x)) => json!(x.as_f64()),
                        _ => Value::Null,
                    };
                    d.insert("_m_value".into(), value);
                    if let Some((keep, _)) = dim {
                        let feature_kept = keep.features.is_empty() || keep.features.contains(f);
                        d.insert("_keep".into(), json!(row_kept && feature_kept));
                    }
                    datums.push(d);
                }
            }
            None => {
                if dim.is_some() {
                    base.insert("_keep".into(), json!(row_kept));
                }
                datums.push(base);
            }
        }
    }

    // Synthetic split side.
    for e in spec.encodings.values() {
        if let FieldRef::Synthetic(Synthetic::SplitSide { feature, facet, at }) = &e.field {
            let i = ctx.index(feature)?;
            let key = match facet {
                Facet::Attribution => format!("a{i}"),
                Facet::Value => format!("v{i}"),
            };
            for d in &mut datums {
                let side = side_of(d.get(&key).and_then(Value::as_f64), *at);
                d.insert("_side".into(), side);
            }
        }
    }

    // Beeswarm offsets along whichever positional channel is not the offset.
    let offset_channel = spec
        .encodings
        .iter()
        .find(|(_, e)| e.field == FieldRef::Synthetic(Synthetic::DensityOffset))
        .map(|(c, _)| *c);
    if let Some(offset_channel) = offset_channel {
        let value_channel = if offset_channel == Channel::Y { Channel::X } else { Channel::Y };
        let value_field = match spec.encodings.get(&value_channel) {
            Some(e) => Some(ctx.field(&e.field)?.0),
            None => None,
        };
        let mut group_fields = Vec::new();
        for (c, e) in &spec.encodings {
            if c.is_facet() || matches!(e.field, FieldRef::Synthetic(Synthetic::SplitSide { .. })) {
                group_fields.push(ctx.field(&e.field)?.0);
            }
        }
        let value_of = |d: &Map<String, Value>| {
            value_field
                .as_ref()
                .and_then(|f| d.get(f))
                .and_then(Value::as_f64)
                .unwrap_or(0.0)
        };
        let points: Vec<SwarmPoint> = datums
            .iter()
            .map(|d| SwarmPoint {
                value: value_of(d),
                id: format!("{}|{}", d["_row"], d.get("_feature").unwrap_or(&Value::Null)),
                group: group_fields
                    .iter()
                    .map(|f| d.get(f).map_or(String::new(), Value::to_string))
                    .collect::<Vec<_>>()
                    .join("|"),
            })
            .collect();
        let bin_width = default_bin_width(points.iter().map(|p| p.value));
        let offsets = beeswarm_layout(&points, bin_width, 1.0);
        for (d, o) in datums.iter_mut().zip(offsets) {
            d.insert("_offset".into(), json!(o));
        }
    }

    // Encodings.
    let mut unit_encoding = Map::new();
    let mut facet = Map::new();
    let mut facet_fields = Vec::new();
    let emphasized: BTreeSet<Channel> = spec
        .layers
        .iter()
        .filter_map(|l| match l {
            Layer::Emphasis { channel } => Some(*channel),
            _ => None,
        })
        .collect();
    for (channel, e) in &spec.encodings {
        let json = encoding_json(&ctx, *channel, e, emphasized.contains(channel))?;
        if channel.is_facet() {
            facet_fields.push(json["field"].clone());
            facet.insert(channel.as_str().into(), json);
        } else {
            unit_encoding.insert(channel.as_str().into(), json);
        }
    }
    if let Some((_, opacity)) = dim {
        unit_encoding.insert(
            "opacity".into(),
            json!({"condition": {"test": "datum._keep", "value": 1}, "value": opacity.clamp(0.0, 1.0)}),
        );
    }
    unit_encoding.insert("tooltip".into(), json!([{"field": "_row", "type": "nominal", "title": "id"}]));

    let mark = match spec.mark {
        Mark::Point => json!({"type": "point", "filled": true}),
        Mark::Rect => json!({"type": "rect"}),
        Mark::Bar => json!({"type": "bar"}),
        Mark::Tick => json!({"type": "tick"}),
        Mark::BeeswarmPoint => json!({"type": "circle", "size": 30}),
    };
    let mut layers = vec![json!({"mark": mark, "encoding": unit_encoding})];
    for layer in &spec.layers {
        if let Layer::Rule { channel, value, label } = layer {
            let mut transform = json!({"aggregate": [{"op": "count", "as": "_n"}]});
            if !facet_fields.is_empty() {
                transform["groupby"] = json!(facet_fields);
            }
            let mut encoding = Map::new();
            encoding.insert(channel.as_str().into(), json!({"datum": value}));
            let text = label.clone().unwrap_or_else(|| format_number(*value));
            encoding.insert("tooltip".into(), json!({"value": text}));
            layers.push(json!({
                "transform": [transform],
                "mark": {"type": "rule", "strokeDash": [6, 4], "color": "#333333", "strokeWidth": 1.5},
                "encoding": encoding,
            }));
        }
    }

    let mut out = Map::new();
    out.insert("$schema".into(), json!(VEGA_LITE_SCHEMA));
    if let Some(title) = &spec.title {
        out.insert("title".into(), json!(title));
    }
    out.insert("data".into(), json!({"values": datums}));
    if facet.is_empty() {
        out.insert("layer".into(), Value::Array(layers));
    } else {
        out.insert("facet".into(), Value::Object(facet));
        out.insert("spec".into(), json!({"layer": layers}));
    }
    Ok(Value::Object(out))
}

fn encoding_json<T: Scalar>(
    ctx: &Ctx<'_, T>,
    channel: Channel,
    e: &Encoding,
    emphasis: bool,
) -> Result<Value, VisError> {
    let (field, kind, default_title) = ctx.field(&e.field)?;
    let mut out = Map::new();
    out.insert("field".into(), json!(field));
    out.insert("type".into(), json!(kind));
    let title = e.title.clone().unwrap_or(default_title);
    if let Some(agg) = e.aggregate {
        out.insert("aggregate".into(), json!(vl_aggregate(agg)?));
        out.insert("title".into(), json!(format!("{agg} of {title}")));
    } else {
        out.insert("title".into(), json!(title));
    }
    match &e.scale {
        Some(Scale::Linear) => {
            out.insert("scale".into(), json!({"type": "linear", "zero": false}));
        }
        Some(Scale::Band) => {
            out.insert("scale".into(), json!({"type": "band"}));
        }
        Some(Scale::Categorical) => {
            if e.field_is_side() {
                out.insert(
                    "scale".into(),
                    json!({"domain": ["left", "right", "split"], "range": ["#2c7bb6", "#d7191c", "#999999"]}),
                );
            } else {
                out.insert("scale".into(), json!({"scheme": "category10"}));
            }
        }
        Some(Scale::Diverging { mid }) => {
            out.insert("scale".into(), json!({"scheme": "redblue", "reverse": true, "domainMid": mid}));
        }
        None => {}
    }
    let guide = if channel.is_positional() {
        "axis"
    } else if channel.is_facet() {
        "header"
    } else {
        "legend"
    };
    if emphasis {
        out.insert(guide.into(), emphasis_style());
    } else if e.field == FieldRef::Synthetic(Synthetic::DensityOffset) {
        out.insert(guide.into(), Value::Null);
    }
    Ok(Value::Object(out))
}

impl Encoding {
    fn field_is_side(&self) -> bool {
        matches!(self.field, FieldRef::Synthetic(Synthetic::SplitSide { .. }))
    }
}
