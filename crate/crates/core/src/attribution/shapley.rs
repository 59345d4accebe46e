//! Exact Shapley values for linear models, and a brute-force enumerator
//! usable on any cooperative game with few players.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Largest player count the enumerator accepts (2¹² coalitions).
pub const MAX_BRUTE_FORCE_FEATURES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapleyError {
    #[error("instance is missing feature `{0}`")]
    MissingFeature(String),
    #[error("model weights and background means cover different features")]
    FeatureSetMismatch,
    #[error("{0} features exceed the brute-force limit of {MAX_BRUTE_FORCE_FEATURES}")]
    TooManyFeatures(usize),
}

/// Subset of players encoded as a bit mask (bit `i` = player `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coalition(pub u32);

impl Coalition {
    pub fn contains(self, player: usize) -> bool {
        self.0 & (1 << player) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// `f(x) = intercept + Σ weightᵢ · xᵢ` with a background mean per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearModel<T> {
    weights: BTreeMap<String, T>,
    intercept: T,
    background_means: BTreeMap<String, T>,
}

/// Attributions of one instance together with the base value and prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearExplanation<T> {
    pub attributions: BTreeMap<String, T>,
    pub base_value: T,
    pub prediction: T,
}

impl<T: Scalar> LinearModel<T> {
    pub fn new(
        weights: BTreeMap<String, T>,
        intercept: T,
        background_means: BTreeMap<String, T>,
    ) -> Result<Self, ShapleyError> {
        if !weights.keys().eq(background_means.keys()) {
            return Err(ShapleyError::FeatureSetMismatch);
        }
        Ok(Self {
            weights,
            intercept,
            background_means,
        })
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.weights.keys().map(String::as_str)
    }

    pub fn weights(&self) -> &BTreeMap<String, T> {
        &self.weights
    }

    pub fn intercept(&self) -> T {
        self.intercept
    }

    pub fn background_means(&self) -> &BTreeMap<String, T> {
        &self.background_means
    }

    pub fn predict(&self, instance: &BTreeMap<String, T>) -> Result<T, ShapleyError> {
        self.weights.iter().try_fold(self.intercept, |acc, (name, w)| {
            let x = instance.get(name).ok_or_else(|| ShapleyError::MissingFeature(name.clone()))?;
            Ok(acc + *w * *x)
        })
    }

    /// Model output when only the features in `coalition` take the
    /// instance's values and the rest are replaced by their background
    /// means. Players are numbered in feature-name order.
    pub fn coalition_value(&self, instance: &BTreeMap<String, T>, coalition: Coalition) -> Result<T, ShapleyError> {
        self.weights
            .iter()
            .zip(self.background_means.values())
            .enumerate()
            .try_fold(self.intercept, |acc, (i, ((name, w), mean))| {
                let x = if coalition.contains(i) {
                    *instance.get(name).ok_or_else(|| ShapleyError::MissingFeature(name.clone()))?
                } else {
                    *mean
                };
                Ok(acc + *w * x)
            })
    }
}

/// Closed-form Shapley values of a linear model with independent features:
/// `φᵢ = wᵢ · (xᵢ − μᵢ)`, base value `b + Σ wᵢ μᵢ`.
pub fn exact_shapley_linear<T: Scalar>(
    model: &LinearModel<T>,
    instance: &BTreeMap<String, T>,
) -> Result<LinearExplanation<T>, ShapleyError> {
    let mut attributions = BTreeMap::new();
    let mut base_value = model.intercept;
    for ((name, w), mean) in model.weights.iter().zip(model.background_means.values()) {
        let x = instance.get(name).ok_or_else(|| ShapleyError::MissingFeature(name.clone()))?;
        attributions.insert(name.clone(), *w * (*x - *mean));
        base_value = base_value + *w * *mean;
    }
    let prediction = model.predict(instance)?;
    Ok(LinearExplanation {
        attributions,
        base_value,
        prediction,
    })
}

/// Shapley vector of an `n`-player game by enumerating all coalitions:
///
/// `φᵢ = Σ_{S ⊆ N∖{i}} |S|! (n−|S|−1)! / n! · (v(S ∪ {i}) − v(S))`
pub fn brute_force_shapley<T, F>(n: usize, value_fn: F) -> Result<Vec<T>, ShapleyError>
where
    T: Scalar,
    F: Fn(Coalition) -> T,
{
    if n > MAX_BRUTE_FORCE_FEATURES {
        return Err(ShapleyError::TooManyFeatures(n));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let size = 1usize << n;
    let values: Vec<T> = (0..size as u32).map(|mask| value_fn(Coalition(mask))).collect();

    let factorial = |k: usize| (1..=k).fold(1.0f64, |acc, i| acc * i as f64);
    let n_factorial = factorial(n);
    let weight_by_size: Vec<T> = (0..n)
        .map(|s| T::lit(factorial(s) * factorial(n - s - 1) / n_factorial))
        .collect();

    let phi = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            (0..size)
                .filter(|mask| mask & bit == 0)
                .map(|mask| {
                    let s = (mask as u32).count_ones() as usize;
                    weight_by_size[s] * (values[mask | bit] - values[mask])
                })
                .fold(T::zero(), |acc, term| acc + term)
        })
        .collect();
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(weights: &[(&str, f64)], intercept: f64, means: &[(&str, f64)]) -> LinearModel<f64> {
        LinearModel::new(
            weights.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            intercept,
            means.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        )
        .unwrap()
    }

    fn point(values: &[(&str, f64)]) -> BTreeMap<String, f64> {
        values.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn two_feature_example_matches_enumeration() {
        let m = model(&[("a", 2.0), ("b", -1.0)], 0.0, &[("a", 1.0), ("b", 2.0)]);
        let x = point(&[("a", 3.0), ("b", 4.0)]);

        // Oracle first: v(∅)=0, v({a})=6-2=4, v({b})=2-4=-2, v(N)=6-4=2.
        let oracle = brute_force_shapley(2, |s| m.coalition_value(&x, s).unwrap()).unwrap();
        assert_eq!(oracle, vec![4.0, -2.0]);

        let exact = exact_shapley_linear(&m, &x).unwrap();
        assert_eq!(exact.attributions, point(&[("a", 4.0), ("b", -2.0)]));
        assert_eq!(exact.base_value, 0.0);
        assert_eq!(exact.prediction, 2.0);
    }

    #[test]
    fn zero_weights_give_zero_attributions() {
        let m = model(&[("a", 0.0), ("b", 0.0)], 3.0, &[("a", 1.0), ("b", 2.0)]);
        let e = exact_shapley_linear(&m, &point(&[("a", 9.0), ("b", -9.0)])).unwrap();
        assert!(e.attributions.values().all(|a| *a == 0.0));
        assert_eq!(e.base_value, 3.0);
    }

    #[test]
    fn identity_case() {
        let m = model(&[("f", 1.0)], 0.0, &[("f", 0.0)]);
        let e = exact_shapley_linear(&m, &point(&[("f", 5.0)])).unwrap();
        assert_eq!(e.attributions["f"], 5.0);
    }

    #[test]
    fn missing_feature_is_reported() {
        let m = model(&[("a", 1.0), ("b", 1.0)], 0.0, &[("a", 0.0), ("b", 0.0)]);
        assert_eq!(
            exact_shapley_linear(&m, &point(&[("a", 1.0)])),
            Err(ShapleyError::MissingFeature("b".into()))
        );
    }

    #[test]
    fn mismatched_feature_sets_rejected() {
        let err = LinearModel::new(point(&[("a", 1.0)]), 0.0, point(&[("b", 0.0)])).unwrap_err();
        assert_eq!(err, ShapleyError::FeatureSetMismatch);
    }

    #[test]
    fn null_player_and_symmetry_axioms() {
        let constant = brute_force_shapley(4, |_| 7.5f64).unwrap();
        assert_eq!(constant, vec![0.0; 4]);

        let symmetric = brute_force_shapley(2, |s: Coalition| s.len() as f64).unwrap();
        assert_eq!(symmetric, vec![1.0, 1.0]);
    }

    #[test]
    fn enumeration_cap() {
        assert_eq!(
            brute_force_shapley(13, |_| 0.0f64),
            Err(ShapleyError::TooManyFeatures(13))
        );
        assert!(brute_force_shapley(12, |s: Coalition| s.len() as f64).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let m = LinearModel::<f32>::new(
            [("a".to_string(), 2.0f32)].into(),
            1.0,
            [("a".to_string(), 0.5f32)].into(),
        )
        .unwrap();
        let x: BTreeMap<String, f32> = [("a".to_string(), 1.5f32)].into();
        let e = exact_shapley_linear(&m, &x).unwrap();
        let oracle = brute_force_shapley(1, |s| m.coalition_value(&x, s).unwrap()).unwrap();
        assert_eq!(e.attributions["a"], oracle[0]);
        assert_eq!(e.base_value + e.attributions["a"], e.prediction);
    }
}
