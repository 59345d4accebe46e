use std::collections::BTreeMap;

/// One point handed to [`beeswarm_layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmPoint {
    pub value: f64,
    /// Stable identity used to break ties between equal values.
    pub id: String,
    /// Points in different groups never share a stack (sides of a split,
    /// facet cells).
    pub group: String,
}

/// Vertical offsets for a beeswarm.
///
/// Values are binned by `floor(value / bin_width)`; inside a bin, points are
/// taken in (value, id) order and stacked at offsets `0, +1, −1, +2, −2, …`
/// (in units of `step`). The result is independent of input order.
pub fn beeswarm_layout(points: &[SwarmPoint], bin_width: f64, step: f64) -> Vec<f64> {
    let bin_width = if bin_width > 0.0 && bin_width.is_finite() { bin_width } else { 1.0 };
    let mut stacks: BTreeMap<(&str, i64), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let bin = (p.value / bin_width).floor() as i64;
        stacks.entry((p.group.as_str(), bin)).or_default().push(i);
    }
    let mut offsets = vec![0.0; points.len()];
    for members in stacks.values_mut() {
        members.sort_by(|&a, &b| {
            points[a]
                .value
                .total_cmp(&points[b].value)
                .then_with(|| points[a].id.cmp(&points[b].id))
        });
        for (k, &i) in members.iter().enumerate() {
            let level = k.div_ceil(2) as f64;
            offsets[i] = match k {
                0 => 0.0,
                k if k % 2 == 1 => level * step,
                _ => -level * step,
            };
        }
    }
    offsets
}

/// Bin width giving about 40 bins across the data range.
pub(crate) fn default_bin_width(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (hi - lo) / 40.0
    } else {
        1.0
    }
}
