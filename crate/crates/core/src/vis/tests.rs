use std::sync::OnceLock;

use jsonschema::JSONSchema;
use proptest::prelude::*;
use serde_json::Value;

use super::*;
use crate::insight::{ConditionOp, Bounds};
use crate::synthetic::diabetes_table;

fn schema() -> &'static JSONSchema {
    static SCHEMA: OnceLock<JSONSchema> = OnceLock::new();
    SCHEMA.get_or_init(|| {
        let text = include_str!("../../tests/data/vega-lite-v5.schema.json");
        let value: Value = serde_json::from_str(text).unwrap();
        JSONSchema::compile(&value).expect("schema compiles")
    })
}

pub(crate) fn assert_valid_vega_lite(spec: &Value) {
    if let Err(errors) = schema().validate(spec) {
        let messages: Vec<String> = errors.take(5).map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("invalid Vega-Lite: {messages:#?}");
    }
}

fn all_kinds() -> Vec<VisSpec> {
    let mut annotated = VisSpec::beeswarm("demo", "bmi", Facet::Attribution);
    annotated.layers.push(Layer::Emphasis { channel: Channel::X });
    annotated.layers.push(Layer::Rule { channel: Channel::X, value: 0.5, label: Some("threshold".into()) });
    annotated.layers.push(Layer::Dim {
        keep: KeepSelector { features: vec![], conditions: vec![TCondition::above("age", 65.0)] },
        opacity: DIM_OPACITY,
    });
    let mut faceted = VisSpec::beeswarm("demo", "bmi", Facet::Value)
        .encode(Channel::Row, Encoding::new(FieldRef::column("sex", Facet::Value)));
    faceted.layers.push(Layer::Rule { channel: Channel::X, value: 30.0, label: None });
    faceted.layers.push(Layer::Emphasis { channel: Channel::Row });
    let mut heat = VisSpec::heatmap("demo");
    heat.layers.push(Layer::Dim {
        keep: KeepSelector { features: vec!["bp".into()], conditions: vec![] },
        opacity: DIM_OPACITY,
    });
    vec![
        VisSpec::heatmap("demo"),
        heat,
        VisSpec::scatter("demo", ("bp", Facet::Value), ("bp", Facet::Attribution)),
        VisSpec::dual_beeswarm("demo", "bp", Facet::Attribution, 0.0),
        VisSpec::paired_bar("demo", Facet::Attribution, vec!["bmi".into(), "bp".into()], Aggregator::Mean),
        VisSpec::new("demo", Mark::Tick).encode(Channel::X, Encoding::new(FieldRef::column("s1", Facet::Value))),
        annotated,
        faceted,
        VisSpec::heatmap("demo").filtered(vec![TCondition::new("sex", ConditionOp::Eq, Bounds::Category("male".into()))]),
    ]
}

#[test]
fn every_spec_kind_compiles_to_valid_vega_lite() {
    let table = diabetes_table(1);
    for spec in all_kinds() {
        let vl = compile(&spec, &table).unwrap();
        assert_valid_vega_lite(&vl);
        assert_eq!(vl["$schema"], VEGA_LITE_SCHEMA);
    }
}

#[test]
fn schema_rejects_garbage() {
    let bad = serde_json::json!({"mark": "nonsense", "data": {"values": []}});
    assert!(schema().validate(&bad).is_err());
}

#[test]
fn dual_beeswarm_sides_split_at_the_constant() {
    let table = diabetes_table(7);
    let vl = compile(&VisSpec::dual_beeswarm("demo", "bp", Facet::Attribution, 0.0), &table).unwrap();
    let values = vl["data"]["values"].as_array().unwrap();
    let left = values.iter().filter(|d| d["_side"] == "left").count();
    let right = values.iter().filter(|d| d["_side"] == "right").count();
    assert_eq!((left, right), (120, 80));
}

#[test]
fn dim_layer_marks_kept_rows() {
    let table = diabetes_table(1);
    let spec = all_kinds().remove(6);
    let vl = compile(&spec, &table).unwrap();
    let values = vl["data"]["values"].as_array().unwrap();
    let kept = values.iter().filter(|d| d["_keep"] == true).count();
    let expected = table
        .rows()
        .iter()
        .filter(|r| r.value("age").unwrap().as_number().unwrap() > 65.0)
        .count();
    assert_eq!(kept, expected);
    let opacity = &vl["layer"][0]["encoding"]["opacity"];
    assert_eq!(opacity["value"], DIM_OPACITY);
    assert_eq!(vl["layer"][1]["encoding"]["x"]["datum"], 0.5);
    assert_eq!(vl["layer"][0]["encoding"]["x"]["axis"]["titleFontWeight"], "bold");
}

#[test]
fn heatmap_is_long_form_and_filter_applies() {
    let table = diabetes_table(1);
    let vl = compile(&VisSpec::heatmap("demo"), &table).unwrap();
    assert_eq!(vl["data"]["values"].as_array().unwrap().len(), 200 * 10);
    let males = table.rows().iter().filter(|r| r.value("sex").unwrap().as_category() == Some("male")).count();
    let vl = compile(&all_kinds().pop().unwrap(), &table).unwrap();
    assert_eq!(vl["data"]["values"].as_array().unwrap().len(), males * 10);
}

#[test]
fn unknown_features_fail_to_compile() {
    let table = diabetes_table(1);
    let spec = VisSpec::beeswarm("demo", "weight", Facet::Value);
    assert_eq!(compile(&spec, &table), Err(VisError::UnknownFeature("weight".into())));
    let bars = VisSpec::paired_bar("demo", Facet::Value, vec!["bmi".into()], Aggregator::Fraction);
    assert_eq!(compile(&bars, &table), Err(VisError::UnsupportedAggregate(Aggregator::Fraction)));
}

#[test]
fn spec_json_round_trips() {
    for spec in all_kinds() {
        let text = serde_json::to_string(&spec).unwrap();
        let back: VisSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}

#[test]
fn beeswarm_stacks_alternate_around_zero() {
    let pts: Vec<SwarmPoint> = [0.1, 0.2, 0.3, 5.0]
        .iter()
        .enumerate()
        .map(|(i, v)| SwarmPoint { value: *v, id: format!("p{i}"), group: String::new() })
        .collect();
    assert_eq!(beeswarm_layout(&pts, 1.0, 1.0), vec![0.0, 1.0, -1.0, 0.0]);
}

fn arb_points() -> impl Strategy<Value = Vec<SwarmPoint>> {
    proptest::collection::vec((-50i32..50, 0u8..2), 0..60).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (v, g))| SwarmPoint { value: f64::from(v) / 4.0, id: format!("p{i}"), group: format!("g{g}") })
            .collect()
    })
}

proptest! {
    #[test]
    fn beeswarm_is_order_invariant_and_collision_free(points in arb_points(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let offsets = beeswarm_layout(&points, 1.0, 1.0);
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.shuffle(&mut crate::synthetic::rng(seed));
        let shuffled: Vec<SwarmPoint> = order.iter().map(|&i| points[i].clone()).collect();
        let again = beeswarm_layout(&shuffled, 1.0, 1.0);
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(again[k], offsets[i]);
        }
        let mut seen = std::collections::HashSet::new();
        for (p, o) in points.iter().zip(&offsets) {
            let key = (p.group.clone(), (p.value).floor() as i64, (*o * 2.0) as i64);
            prop_assert!(seen.insert(key), "two points share a slot");
        }
    }
}
