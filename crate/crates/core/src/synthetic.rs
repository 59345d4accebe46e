//! Seeded generators for explanation tables and insights.
//!
//! Used by tests, the acceptance suite and the demo data set. Everything is
//! deterministic given the seed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::attribution::{
    exact_shapley_linear, ExplanationTable, FeatureKind, FeatureMeta, FeatureValue, LinearModel, Row,
};
use crate::insight::{
    Aggregator, Bounds, Comparator, ComparisonInsight, ConditionOp, CorrelationInsight, Direction, Facet,
    Predicate, ReadComparator, ReadInsight, Relation, StructuredInsight, TCondition, TVariable,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Number of rows in [`diabetes_table`].
pub const DIABETES_ROWS: usize = 200;
/// Rows of [`diabetes_table`] whose `bp` attribution is positive.
pub const DIABETES_BP_POSITIVE: usize = 80;

/// Feature metadata of the diabetes-shaped demo table.
pub fn diabetes_features() -> Vec<FeatureMeta> {
    vec![
        FeatureMeta::quantitative("age").with_unit("years"),
        FeatureMeta::categorical("sex"),
        FeatureMeta::quantitative("bmi").with_description("body mass index").with_unit("kg/m2"),
        FeatureMeta::quantitative("bp").with_description("average blood pressure").with_unit("mmHg"),
        FeatureMeta::quantitative("s1").with_description("total serum cholesterol"),
        FeatureMeta::quantitative("s2").with_description("low-density lipoproteins"),
        FeatureMeta::quantitative("s3").with_description("high-density lipoproteins"),
        FeatureMeta::quantitative("s4").with_description("total cholesterol over HDL"),
        FeatureMeta::quantitative("s5").with_description("log of serum triglycerides level"),
        FeatureMeta::quantitative("s6").with_description("blood sugar level"),
    ]
}

/// A 200-row explanation of a linear disease-progression model over
/// diabetes-like features. Exactly [`DIABETES_BP_POSITIVE`] rows have a
/// positive `bp` attribution and the rest a negative one; `s5` is drawn
/// independently of `bp`.
pub fn diabetes_table(seed: u64) -> ExplanationTable<f64> {
    let mut rng = rng(seed);
    // (name, background mean, spread, weight)
    let spec: [(&str, f64, f64, f64); 9] = [
        ("age", 48.5, 13.0, 0.14),
        ("bmi", 26.4, 4.4, 5.6),
        ("bp", 94.6, 13.8, 0.95),
        ("s1", 189.1, 34.6, -0.25),
        ("s2", 115.4, 30.4, 0.12),
        ("s3", 49.8, 12.9, -0.6),
        ("s4", 4.1, 1.3, 4.5),
        ("s5", 4.64, 0.52, 38.0),
        ("s6", 91.3, 11.5, 0.2),
    ];
    let sex_weight = -11.0;
    let sex_mean = 0.47;
    let intercept = 152.1 - spec.iter().map(|(_, m, _, w)| m * w).sum::<f64>() - sex_weight * sex_mean;

    let mut bp_signs: Vec<bool> = (0..DIABETES_ROWS).map(|i| i < DIABETES_BP_POSITIVE).collect();
    bp_signs.shuffle(&mut rng);

    let mut weights = BTreeMap::new();
    let mut means = BTreeMap::new();
    for (name, mean, _, w) in spec {
        weights.insert(name.to_string(), w);
        means.insert(name.to_string(), mean);
    }
    weights.insert("sex".to_string(), sex_weight);
    means.insert("sex".to_string(), sex_mean);
    let model = LinearModel::new(weights, intercept, means).expect("same keys");

    let rows = (0..DIABETES_ROWS)
        .map(|i| {
            let mut numeric = BTreeMap::new();
            for (name, mean, spread, _) in spec {
                let draw = Normal::new(0.0, spread).expect("positive spread").sample(&mut rng);
                let value = if name == "bp" {
                    let offset = round_to(draw.abs(), 1) + 0.5;
                    if bp_signs[i] {
                        mean + offset
                    } else {
                        mean - offset
                    }
                } else {
                    round_to(mean + draw, if mean < 10.0 { 3 } else { 1 })
                };
                numeric.insert(name.to_string(), value);
            }
            let male = rng.gen_bool(sex_mean);
            numeric.insert("sex".to_string(), if male { 1.0 } else { 0.0 });
            let explanation = exact_shapley_linear(&model, &numeric).expect("complete instance");

            let mut values: BTreeMap<String, FeatureValue<f64>> = numeric
                .iter()
                .filter(|(k, _)| k.as_str() != "sex")
                .map(|(k, v)| (k.clone(), FeatureValue::Number(*v)))
                .collect();
            values.insert(
                "sex".into(),
                FeatureValue::Category(if male { "male" } else { "female" }.into()),
            );
            Row {
                id: format!("patient-{:03}", i + 1),
                values,
                attributions: explanation.attributions,
                prediction: explanation.prediction,
            }
        })
        .collect();
    let base = model.intercept() + model.weights().iter().map(|(k, w)| w * model.background_means()[k]).sum::<f64>();
    ExplanationTable::new(diabetes_features(), base, rows).expect("generated table is valid")
}

fn round_to(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

/// Random linear model over `x0 … x{n-1}` with weights in [−3, 3].
pub fn random_linear_model<R: Rng>(rng: &mut R, n_features: usize) -> LinearModel<f64> {
    let weights = (0..n_features).map(|i| (format!("x{i}"), rng.gen_range(-3.0..3.0))).collect();
    let means = (0..n_features).map(|i| (format!("x{i}"), rng.gen_range(-2.0..2.0))).collect();
    LinearModel::new(weights, rng.gen_range(-5.0..5.0), means).expect("same keys")
}

/// Explanation table of `model` on `n_rows` random instances.
pub fn linear_explanation_table<R: Rng>(
    rng: &mut R,
    model: &LinearModel<f64>,
    n_rows: usize,
) -> ExplanationTable<f64> {
    let names: Vec<String> = model.features().map(str::to_string).collect();
    let rows = (0..n_rows)
        .map(|i| {
            let instance: BTreeMap<String, f64> =
                names.iter().map(|n| (n.clone(), rng.gen_range(-4.0..4.0))).collect();
            let e = exact_shapley_linear(model, &instance).expect("complete instance");
            Row {
                id: format!("r{i}"),
                values: instance.into_iter().map(|(k, v)| (k, FeatureValue::Number(v))).collect(),
                attributions: e.attributions,
                prediction: e.prediction,
            }
        })
        .collect();
    let base = model.intercept()
        + model
            .weights()
            .iter()
            .map(|(k, w)| w * model.background_means()[k])
            .sum::<f64>();
    let features = names.iter().map(FeatureMeta::quantitative).collect();
    ExplanationTable::new(features, base, rows).expect("generated table is valid")
}

/// Small table with four quantitative features `x0…x3` and a categorical
/// `group` (`a`, `b`, `c`). Values and attributions are coarsely rounded so
/// ties and exact zeros occur.
pub fn random_table<R: Rng>(rng: &mut R, n_rows: usize) -> ExplanationTable<f64> {
    let mut features: Vec<FeatureMeta> = (0..4).map(|i| FeatureMeta::quantitative(format!("x{i}"))).collect();
    features.push(FeatureMeta::categorical("group"));
    let rows = (0..n_rows)
        .map(|i| {
            let mut values = BTreeMap::new();
            let mut attributions = BTreeMap::new();
            for f in &features {
                let value = match f.kind {
                    FeatureKind::Quantitative => FeatureValue::Number(f64::from(rng.gen_range(-10i32..=10)) / 2.0),
                    FeatureKind::Categorical => FeatureValue::Category(["a", "b", "c"][rng.gen_range(0..3)].into()),
                };
                values.insert(f.name.clone(), value);
                attributions.insert(f.name.clone(), f64::from(rng.gen_range(-8i32..=8)) / 4.0);
            }
            let prediction = attributions.values().sum();
            Row {
                id: format!("r{i}"),
                values,
                attributions,
                prediction,
            }
        })
        .collect();
    ExplanationTable::new(features, 0.0, rows).expect("generated table is valid")
}

/// A number that is either round, a short decimal, or an arbitrary double.
fn random_number<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    match rng.gen_range(0..3) {
        0 => rng.gen_range(lo..hi).round(),
        1 => round_to(rng.gen_range(lo..hi), 2),
        _ => rng.gen_range(lo..hi),
    }
}

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty choice")
}

/// Random well-formed insight over `features`, respecting feature kinds:
/// categorical features only appear as attributions or in equality
/// conditions against one of `categories`.
pub fn random_insight<R: Rng>(rng: &mut R, features: &[FeatureMeta], categories: &[&str]) -> StructuredInsight {
    let quantitative: Vec<&FeatureMeta> = features.iter().filter(|f| f.kind == FeatureKind::Quantitative).collect();
    let column = |rng: &mut R| -> (String, Facet) {
        let f = pick(rng, features);
        let facet = if f.kind == FeatureKind::Categorical || rng.gen_bool(0.6) {
            Facet::Attribution
        } else {
            Facet::Value
        };
        (f.name.clone(), facet)
    };
    let aggregated = |rng: &mut R| -> TVariable {
        let (feature, facet) = column(rng);
        let aggregator = *pick(
            rng,
            &[
                Aggregator::Mean,
                Aggregator::Variance,
                Aggregator::Min,
                Aggregator::Max,
                Aggregator::Count,
                Aggregator::Fraction,
            ],
        );
        if aggregator.needs_predicate() {
            let comparator = *pick(rng, Comparator::ALL);
            let constant = if rng.gen_bool(0.5) { 0.0 } else { random_number(rng, -50.0, 50.0) };
            TVariable::counting(feature, facet, aggregator, Predicate::new(comparator, constant))
        } else {
            TVariable::aggregated(feature, facet, aggregator)
        }
    };

    let n_conditions = *pick(rng, &[0usize, 0, 1, 1, 2, 3]);
    let conditions: Vec<TCondition> = (0..n_conditions)
        .map(|_| {
            let f = pick(rng, features);
            if f.kind == FeatureKind::Categorical || quantitative.is_empty() {
                let f = features.iter().find(|f| f.kind == FeatureKind::Categorical).unwrap_or(f);
                return TCondition::new(&f.name, ConditionOp::Eq, Bounds::Category(pick(rng, categories).to_string()));
            }
            let op = *pick(rng, ConditionOp::ALL);
            let bounds = if op == ConditionOp::InRange {
                let lo = random_number(rng, -100.0, 100.0);
                Bounds::Range(lo, lo + random_number(rng, 0.0, 50.0).abs())
            } else {
                Bounds::Number(random_number(rng, -100.0, 100.0))
            };
            TCondition::new(&f.name, op, bounds)
        })
        .collect();

    match rng.gen_range(0..3) {
        0 => {
            let variable = aggregated(rng);
            let threshold = if variable.aggregator == Aggregator::Fraction {
                match rng.gen_range(0..3) {
                    0 => round_to(rng.gen_range(0.0..1.0), 2),
                    1 => rng.gen_range(0.0..1.0),
                    _ => *pick(rng, &[0.0, 0.5, 1.0]),
                }
            } else {
                random_number(rng, -200.0, 200.0)
            };
            StructuredInsight::Read(ReadInsight {
                variable,
                comparator: *pick(rng, ReadComparator::ALL),
                threshold,
                conditions,
            })
        }
        1 => {
            let x = column(rng);
            let y = loop {
                let y = column(rng);
                if y != x {
                    break y;
                }
            };
            StructuredInsight::Correlation(CorrelationInsight {
                x: TVariable::per_row(x.0, x.1),
                y: TVariable::per_row(y.0, y.1),
                direction: *pick(rng, Direction::ALL),
                conditions,
            })
        }
        _ => {
            let left = aggregated(rng);
            let right = loop {
                let right = if rng.gen_bool(0.5) {
                    let mut r = left.clone();
                    match rng.gen_range(0..2) {
                        0 => r.feature = pick(rng, features).name.clone(),
                        _ => r.predicate = r.predicate.map(|p| Predicate::new(p.comparator, -p.constant + 1.0)),
                    }
                    if features.iter().any(|f| f.name == r.feature && f.kind == FeatureKind::Categorical) {
                        r.facet = Facet::Attribution;
                    }
                    r
                } else {
                    aggregated(rng)
                };
                if right != left {
                    break right;
                }
            };
            StructuredInsight::Comparison(ComparisonInsight {
                left,
                right,
                relation: *pick(rng, Relation::ALL),
                conditions,
            })
        }
    }
}
