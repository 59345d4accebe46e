use std::collections::BTreeSet;

use super::*;
use crate::insight::{ComparisonInsight, CorrelationInsight, Predicate, ReadComparator, ReadInsight, Relation, TCondition};
use crate::synthetic::{diabetes_features, diabetes_table, random_insight, rng};
use crate::vis::tests::assert_valid_vega_lite;
use crate::vis::{compile, Encoding, Synthetic};

fn catalog() -> Vec<VisSpec> {
    vec![
        VisSpec::heatmap("demo"),
        VisSpec::scatter("demo", ("bp", Facet::Value), ("bp", Facet::Attribution)),
        VisSpec::beeswarm("demo", "bmi", Facet::Attribution),
        VisSpec::dual_beeswarm("demo", "s5", Facet::Attribution, 0.0),
        VisSpec::paired_bar("demo", Facet::Attribution, vec!["bp".into(), "s5".into()], Aggregator::Mean),
        VisSpec::scatter("demo", ("age", Facet::Value), ("s1", Facet::Value))
            .filtered(vec![TCondition::above("s6", -0.05)]),
    ]
}

fn bp_positive_count_comparison() -> StructuredInsight {
    StructuredInsight::Comparison(ComparisonInsight {
        left: TVariable::counting("bp", Facet::Attribution, Aggregator::Count, Predicate::positive()),
        relation: Relation::Greater,
        right: TVariable::counting("bp", Facet::Attribution, Aggregator::Count, Predicate::negative()),
        conditions: Vec::new(),
    })
}

fn correlation(x: &str, y: &str) -> StructuredInsight {
    StructuredInsight::Correlation(CorrelationInsight {
        x: TVariable::per_row(x, Facet::Attribution),
        y: TVariable::per_row(y, Facet::Attribution),
        direction: crate::insight::Direction::None,
        conditions: Vec::new(),
    })
}

fn mean_read(feature: &str, threshold: f64, conditions: Vec<TCondition>) -> StructuredInsight {
    StructuredInsight::Read(ReadInsight {
        variable: TVariable::aggregated(feature, Facet::Value, Aggregator::Mean),
        comparator: ReadComparator::Gt,
        threshold,
        conditions,
    })
}

fn emphasized(spec: &VisSpec) -> Vec<Channel> {
    spec.layers
        .iter()
        .filter_map(|l| match l {
            Layer::Emphasis { channel } => Some(*channel),
            _ => None,
        })
        .collect()
}

fn rules_on(spec: &VisSpec, axis: Channel) -> Vec<f64> {
    spec.layers
        .iter()
        .filter_map(|l| match l {
            Layer::Rule { channel, value, .. } if *channel == axis => Some(*value),
            _ => None,
        })
        .collect()
}

fn dims(spec: &VisSpec) -> Vec<(&KeepSelector, f64)> {
    spec.layers
        .iter()
        .filter_map(|l| match l {
            Layer::Dim { keep, opacity } => Some((keep, *opacity)),
            _ => None,
        })
        .collect()
}

/// The input is a prefix of the output: same title, data, mark, encodings,
/// and the original layers in their original order.
fn assert_structural_subset(base: &VisSpec, annotated: &VisSpec) {
    assert_eq!(base.title, annotated.title);
    assert_eq!(base.data, annotated.data);
    assert_eq!(base.mark, annotated.mark);
    assert_eq!(base.encodings, annotated.encodings);
    assert!(annotated.layers.starts_with(&base.layers));
}

#[test]
fn heatmap_annotation_emphasises_color_and_keeps_mentioned_features() {
    let spec = VisSpec::heatmap("demo");
    let (out, flags) = annotate(&spec, &correlation("bp", "s5"));
    assert!(flags.is_empty());
    assert_structural_subset(&spec, &out);
    assert_eq!(emphasized(&out), vec![Channel::Color]);
    let dims = dims(&out);
    assert_eq!(dims.len(), 1);
    assert_eq!(dims[0].0.features, vec!["bp".to_string(), "s5".to_string()]);
    assert!(dims[0].0.conditions.is_empty());
    assert_eq!(dims[0].1, DIM_OPACITY);
}

#[test]
fn no_dim_layer_when_everything_stays() {
    let spec = VisSpec::scatter("demo", ("bp", Facet::Value), ("bp", Facet::Attribution));
    let insight = StructuredInsight::Read(ReadInsight {
        variable: TVariable::aggregated("bp", Facet::Attribution, Aggregator::Variance),
        comparator: ReadComparator::Lt,
        threshold: 1.0,
        conditions: Vec::new(),
    });
    let (out, _) = annotate(&spec, &insight);
    assert_eq!(out.layers, vec![Layer::Emphasis { channel: Channel::Y }]);

    let bars = VisSpec::paired_bar("demo", Facet::Attribution, vec!["bp".into(), "s5".into()], Aggregator::Mean);
    let (out, _) = annotate(&bars, &correlation("s5", "bp"));
    assert!(dims(&out).is_empty());
}

#[test]
fn condition_on_drawn_feature_gets_reference_line() {
    let spec = VisSpec::scatter("demo", ("age", Facet::Value), ("bmi", Facet::Attribution));
    let insight = StructuredInsight::Read(ReadInsight {
        variable: TVariable::aggregated("bmi", Facet::Attribution, Aggregator::Mean),
        comparator: ReadComparator::Gt,
        threshold: 0.0,
        conditions: vec![TCondition::above("age", 0.05)],
    });
    let (out, _) = annotate(&spec, &insight);
    assert_structural_subset(&spec, &out);
    assert_eq!(rules_on(&out, Channel::X), vec![0.05]);
    assert_eq!(rules_on(&out, Channel::Y), vec![0.0]);
    assert_eq!(emphasized(&out), vec![Channel::X, Channel::Y]);
}

#[test]
fn conditions_become_dim_selector_and_rules_on_positional_axes() {
    let spec = VisSpec::scatter("demo", ("bmi", Facet::Value), ("bmi", Facet::Attribution));
    let conditions = vec![TCondition::in_range("bmi", -0.02, 0.04), TCondition::above("age", 0.0)];
    let (out, flags) = annotate(&spec, &mean_read("bmi", 0.01, conditions.clone()));
    assert!(flags.is_empty());
    assert_eq!(emphasized(&out), vec![Channel::X]);
    // Range ends from the condition plus the read threshold; age is not drawn.
    assert_eq!(rules_on(&out, Channel::X), vec![-0.02, 0.04, 0.01]);
    assert_eq!(dims(&out)[0].0.conditions, conditions);
}

#[test]
fn duplicate_rules_are_merged_and_annotation_is_stable() {
    let spec = VisSpec::scatter("demo", ("bmi", Facet::Value), ("s1", Facet::Value));
    let insight = mean_read("bmi", 0.03, vec![TCondition::above("bmi", 0.03)]);
    let (once, _) = annotate(&spec, &insight);
    assert_eq!(rules_on(&once, Channel::X), vec![0.03]);
    let (twice, _) = annotate(&once, &insight);
    assert_eq!(once, twice);
}

#[test]
fn later_insight_appends_its_own_dim_layer() {
    let spec = VisSpec::heatmap("demo");
    let (first, _) = annotate(&spec, &correlation("bp", "s5"));
    let (second, _) = annotate(&first, &correlation("bmi", "s5"));
    assert_structural_subset(&first, &second);
    let dims = dims(&second);
    assert_eq!(dims.len(), 2);
    assert_eq!(dims[1].0.features, vec!["bmi".to_string(), "s5".to_string()]);
}

#[test]
fn unmatched_spec_is_flagged_left_alone_and_gets_a_recommendation() {
    let spec = VisSpec::scatter("demo", ("age", Facet::Value), ("s1", Facet::Value));
    let result = map_insight(&spec, &bp_positive_count_comparison());
    assert_eq!(result.flags, vec![MappingFlag::NoMatch]);
    assert_eq!(result.annotated_spec, spec);
    assert_eq!(result.rule_id, RuleId::CountDualBeeswarm);
    let rec = result.recommended_spec.expect("forced recommendation");
    assert_eq!(rec.mark, Mark::BeeswarmPoint);
    assert_eq!(result.coordination.data, rec.data);
}

#[test]
fn recommendation_shapes_by_insight_form() {
    let heat = VisSpec::heatmap("demo");

    let (rule, rec) = recommend(&heat, &bp_positive_count_comparison()).unwrap();
    assert_eq!(rule, RuleId::CountDualBeeswarm);
    let bare = VisSpec::dual_beeswarm("demo", "bp", Facet::Attribution, 0.0);
    assert_eq!((rec.mark, &rec.encodings), (bare.mark, &bare.encodings));
    assert_eq!(rules_on(&rec, Channel::X), vec![0.0]);

    let (rule, rec) = recommend(&heat, &correlation("bp", "s5")).unwrap();
    assert_eq!(rule, RuleId::CorrelationScatter);
    assert_eq!(rec.mark, Mark::Point);
    assert_eq!(rec.encodings[&Channel::X].field, FieldRef::column("bp", Facet::Attribution));
    assert_eq!(rec.encodings[&Channel::Y].field, FieldRef::column("s5", Facet::Attribution));

    let cmp = StructuredInsight::Comparison(ComparisonInsight {
        left: TVariable::aggregated("bmi", Facet::Attribution, Aggregator::Max),
        relation: Relation::Greater,
        right: TVariable::aggregated("s5", Facet::Attribution, Aggregator::Max),
        conditions: vec![TCondition::above("age", 0.0)],
    });
    let (rule, rec) = recommend(&heat, &cmp).unwrap();
    assert_eq!(rule, RuleId::AggregatePairedBar);
    assert_eq!(rec.mark, Mark::Bar);
    assert_eq!(
        rec.encodings[&Channel::Y].field,
        FieldRef::Melted { facet: Facet::Attribution, features: vec!["bmi".into(), "s5".into()] }
    );
    assert_eq!(rec.encodings[&Channel::Y].aggregate, Some(Aggregator::Max));
    assert_eq!(dims(&rec)[0].0.conditions, vec![TCondition::above("age", 0.0)]);

    let (rule, rec) = recommend(&heat, &mean_read("bmi", 0.01, vec![])).unwrap();
    assert_eq!(rule, RuleId::ReadBeeswarm);
    assert_eq!(rec.mark, Mark::BeeswarmPoint);
    assert_eq!(rules_on(&rec, Channel::X), vec![0.01]);
}

#[test]
fn both_views_share_data_and_conditions() {
    let spec = VisSpec::heatmap("demo").filtered(vec![TCondition::above("age", -0.1)]);
    let conditions = vec![TCondition::above("age", 0.0), TCondition::above("bp", 0.01)];
    let insight = StructuredInsight::Read(ReadInsight {
        variable: TVariable::aggregated("bmi", Facet::Attribution, Aggregator::Mean),
        comparator: ReadComparator::Gt,
        threshold: 0.0,
        conditions: conditions.clone(),
    });
    let result = map_insight(&spec, &insight);
    assert!(result.flags.is_empty());
    let rec = result.recommended_spec.as_ref().unwrap();
    assert_eq!(rec.data, result.annotated_spec.data);
    assert_eq!(result.coordination.data, spec.data);
    assert_eq!(result.coordination.conditions, conditions);
    assert_eq!(dims(rec).last().unwrap().0.conditions, conditions);
    assert_eq!(dims(&result.annotated_spec).last().unwrap().0.conditions, conditions);
}

#[test]
fn current_chart_that_already_fits_is_only_annotated() {
    let scatter = VisSpec::scatter("demo", ("bp", Facet::Attribution), ("s5", Facet::Attribution));
    let result = map_insight(&scatter, &correlation("bp", "s5"));
    assert_eq!(result.recommended_spec, None);
    assert_eq!(result.rule_id, RuleId::AnnotateOnly);

    let bars = VisSpec::paired_bar("demo", Facet::Attribution, vec!["bp".into(), "s5".into()], Aggregator::Mean);
    let cmp = |a| {
        StructuredInsight::Comparison(ComparisonInsight {
            left: TVariable::aggregated("s5", Facet::Attribution, a),
            relation: Relation::Less,
            right: TVariable::aggregated("bp", Facet::Attribution, a),
            conditions: Vec::new(),
        })
    };
    assert_eq!(recommend(&bars, &cmp(Aggregator::Mean)), None);
    assert!(recommend(&bars, &cmp(Aggregator::Max)).is_some());
    let read = StructuredInsight::Read(ReadInsight {
        variable: TVariable::aggregated("bp", Facet::Attribution, Aggregator::Mean),
        comparator: ReadComparator::Gt,
        threshold: 0.0,
        conditions: Vec::new(),
    });
    assert_eq!(recommend(&bars, &read), None);
}

#[test]
fn synthetic_fields_never_match() {
    let spec = VisSpec::new("demo", Mark::Point)
        .encode(Channel::X, Encoding::new(FieldRef::Synthetic(Synthetic::InstanceIndex)))
        .encode(Channel::Y, Encoding::new(FieldRef::Synthetic(Synthetic::FeatureName)));
    assert!(matched_channels(&spec, &correlation("bp", "s5")).is_empty());
}

fn insight_constants(insight: &StructuredInsight) -> Vec<f64> {
    let mut out: Vec<f64> = insight.conditions().iter().flat_map(|c| c.bounds.constants()).collect();
    if let StructuredInsight::Read(r) = insight {
        out.push(r.threshold);
    }
    out.extend(insight.variables().iter().filter_map(|v| v.predicate.map(|p| p.constant)));
    out
}

/// Every insight kind on every chart kind: annotations are append-only, put
/// reference lines only at constants of the insight, and compile to valid
/// Vega-Lite; a chart is produced whenever nothing matched; mapping the
/// recommended chart again yields no further recommendation.
#[test]
fn mapping_is_exhaustive_and_idempotent() {
    let table = diabetes_table(11);
    let features = diabetes_features();
    let mut r = rng(5);
    let mut insights = vec![bp_positive_count_comparison(), correlation("bp", "s5"), mean_read("bmi", 0.0, vec![])];
    insights.extend((0..60).map(|_| random_insight(&mut r, &features, &["1", "2"])));

    let mut recommended = 0;
    let mut no_match = 0;
    let mut rules_seen = BTreeSet::new();
    for spec in catalog() {
        assert_valid_vega_lite(&compile(&spec, &table).unwrap());
        for insight in &insights {
            let result = map_insight(&spec, insight);
            assert_structural_subset(&spec, &result.annotated_spec);
            let constants = insight_constants(insight);
            for l in &result.annotated_spec.layers {
                if let Layer::Rule { value, .. } = l {
                    assert!(constants.contains(value), "rule at {value} not in {insight:?}");
                }
            }
            assert_valid_vega_lite(&compile(&result.annotated_spec, &table).unwrap());
            rules_seen.insert(result.rule_id);
            if result.flags.contains(&MappingFlag::NoMatch) {
                no_match += 1;
                assert!(result.recommended_spec.is_some());
            }
            if let Some(rec) = &result.recommended_spec {
                recommended += 1;
                assert_eq!(rec.data, spec.data);
                assert_valid_vega_lite(&compile(rec, &table).unwrap());
                let again = map_insight(rec, insight);
                assert!(again.flags.is_empty(), "recommended chart does not show the insight: {rec:?}");
                assert_eq!(again.recommended_spec, None, "not idempotent for {insight:?}");
            }
        }
    }
    assert!(recommended > 0 && no_match > 0);
    assert_eq!(rules_seen.len(), 5, "{rules_seen:?}");
}

#[test]
fn mapping_result_round_trips_through_json() {
    let spec = VisSpec::heatmap("demo");
    let result = map_insight(&spec, &mean_read("bmi", 0.0, vec![TCondition::above("age", 0.0)]));
    let value = serde_json::to_value(&result).unwrap();
    for key in ["annotated_spec", "recommended_spec", "rule_id", "rationale", "coordination"] {
        assert!(value.get(key).is_some(), "missing {key}");
    }
    assert_eq!(value["rule_id"], "read-beeswarm");
    let back: MappingResult = serde_json::from_value(value).unwrap();
    assert_eq!(back, result);
}
