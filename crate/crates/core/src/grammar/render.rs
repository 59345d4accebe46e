use serde::{Deserialize, Serialize};

use crate::insight::{
    Aggregator, Bounds, ConditionOp, Direction, DraftBody, DraftCondition, DraftVariable, Facet, InsightDraft,
    SlotState, SlotStatus, StructuredInsight,
};

use super::lexer::{format_number, format_percent};
use super::words;
use super::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Literal,
    Keyword,
    Slot,
}

/// Color class of a segment in the rendered sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Highlight {
    Feature,
    Attribution,
    InsightType,
    Condition,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub text: String,
    /// Slot path this segment displays, for keywords and slots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_ref: Option<String>,
    pub highlight: Highlight,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<SlotState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedInsight {
    pub segments: Vec<Segment>,
}

impl RenderedInsight {
    /// Plain sentence text.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            if !out.is_empty() && !seg.text.starts_with([',', '.']) {
                out.push(' ');
            }
            out.push_str(&seg.text);
        }
        out
    }

    pub fn slot_segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.kind == SegmentKind::Slot)
    }
}

/// Renders a complete insight.
pub fn render_insight(insight: &StructuredInsight, vocab: &Vocabulary) -> RenderedInsight {
    render(&InsightDraft::from(insight), &[], vocab)
}

/// Renders a draft. Every entry of `slots` appears as exactly one slot
/// segment; slots the sentence has no natural place for are appended.
pub fn render(draft: &InsightDraft, slots: &[SlotStatus], vocab: &Vocabulary) -> RenderedInsight {
    let mut r = Renderer {
        segments: Vec::new(),
        slots,
        used: vec![false; slots.len()],
        vocab,
    };
    let tag = draft.kind().as_str();
    match &draft.body {
        DraftBody::Read {
            variable,
            comparator,
            threshold,
        } => {
            let path = format!("{tag}.variable");
            let fraction = variable.aggregator == Some(Aggregator::Fraction);
            let threshold_text = threshold.map(|t| if fraction { format_percent(t) } else { format_number(t) });
            if fraction && !r.has_slot(&path) && !r.has_slot(&format!("{path}.aggregator")) {
                r.lit("for");
                let quantifier = comparator.map(|c| words::quantifier_phrases(c)[0].join(" "));
                r.field(&format!("{tag}.comparator"), quantifier, Highlight::InsightType);
                r.field(&format!("{tag}.threshold"), threshold_text, Highlight::InsightType);
                r.lit("of rows");
                r.lit(",");
                r.feature(&format!("{path}.feature"), variable.feature.as_deref());
                r.lit("has");
                r.per_row_predicate(&path, variable);
            } else {
                r.aggregated(&path, variable);
                r.lit("is");
                let phrase = comparator.map(|c| words::read_phrases(c)[0].join(" "));
                r.field(&format!("{tag}.comparator"), phrase, Highlight::InsightType);
                r.field(&format!("{tag}.threshold"), threshold_text, Highlight::InsightType);
            }
        }
        DraftBody::Comparison { left, right, relation } => {
            let (lp, rp) = (format!("{tag}.left"), format!("{tag}.right"));
            r.aggregated(&lp, left);
            r.lit("is");
            let phrase = relation.map(|rel| words::relation_phrases(rel)[0].join(" "));
            r.field(&format!("{tag}.relation"), phrase, Highlight::InsightType);
            let plain = !r.has_slot(&rp) && !r.has_slot(&lp) && is_full(left) && is_full(right);
            if plain
                && left.aggregator == right.aggregator
                && left.aggregator.is_some_and(Aggregator::needs_predicate)
                && left.feature == right.feature
                && left.facet == right.facet
            {
                r.lit("the");
                r.field(&format!("{rp}.aggregator"), agg_word(right.aggregator), Highlight::InsightType);
                r.lit("with");
                r.row_predicate(&rp, right, false);
            } else if plain
                && left.aggregator == right.aggregator
                && left.facet == right.facet
                && left.predicate == right.predicate
            {
                r.lit("that of");
                r.feature(&format!("{rp}.feature"), right.feature.as_deref());
            } else {
                r.aggregated(&rp, right);
            }
        }
        DraftBody::Correlation { x, y, direction } => {
            let (xp, yp) = (format!("{tag}.x"), format!("{tag}.y"));
            let dpath = format!("{tag}.direction");
            let trend = matches!(direction, Some(Direction::Positive | Direction::Negative))
                && !r.has_slot(&dpath)
                && !r.has_slot(&xp)
                && !r.has_slot(&yp);
            if trend {
                r.lit("as");
                if x.facet == Some(Facet::Value) {
                    r.feature(&format!("{xp}.feature"), x.feature.as_deref());
                } else {
                    r.lit("the");
                    r.field(&format!("{xp}.facet"), x.facet.map(|f| words::facet_singular(f).into()), Highlight::Attribution);
                    r.lit("of");
                    r.feature(&format!("{xp}.feature"), x.feature.as_deref());
                }
                r.lit("increases");
                r.lit(",");
                r.lit("the");
                r.field(&format!("{yp}.facet"), y.facet.map(|f| words::facet_singular(f).into()), Highlight::Attribution);
                r.lit("of");
                r.feature(&format!("{yp}.feature"), y.feature.as_deref());
                r.lit("tends to");
                r.field(&dpath, direction.map(|d| words::trend_phrase(d).into()), Highlight::InsightType);
            } else {
                r.lit("there is");
                match direction {
                    Some(Direction::None) => r.field(&dpath, Some("no".into()), Highlight::InsightType),
                    Some(d) => r.field(&dpath, Some(format!("a {d}")), Highlight::InsightType),
                    None => r.field(&dpath, None, Highlight::InsightType),
                }
                r.keyword("correlation", Highlight::InsightType, None);
                r.lit("between");
                r.per_row(&xp, x);
                r.lit("and");
                r.per_row(&yp, y);
            }
        }
    }
    for (i, condition) in draft.conditions.iter().enumerate() {
        let word = if i == 0 { "when" } else { "and" };
        r.keyword(word, Highlight::Condition, None);
        r.condition(&format!("{tag}.conditions[{i}]"), condition);
    }
    for i in 0..slots.len() {
        if !r.used[i] {
            r.used[i] = true;
            let slot = &slots[i];
            r.segments.push(slot_segment(slot, None, Highlight::None));
        }
    }
    if let Some(first) = r.segments.first_mut() {
        if first.kind == SegmentKind::Literal {
            first.text = capitalize(&first.text);
        }
    }
    r.lit(".");
    RenderedInsight { segments: r.segments }
}

fn is_full(v: &DraftVariable) -> bool {
    v.feature.is_some()
        && v.facet.is_some()
        && v.aggregator.is_some()
        && v.predicate.is_none_or(|p| p.comparator.is_some() && p.constant.is_some())
}

fn agg_word(a: Option<Aggregator>) -> Option<String> {
    a.and_then(|a| words::aggregator_words(a).first().map(|p| p.join(" ")))
}

fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn placeholder(path: &str) -> String {
    let leaf = path.rsplit('.').next().unwrap_or(path);
    let leaf = leaf.split('[').next().unwrap_or(leaf);
    format!("[{leaf}]")
}

fn slot_segment(slot: &SlotStatus, text: Option<String>, highlight: Highlight) -> Segment {
    Segment {
        kind: SegmentKind::Slot,
        text: text.unwrap_or_else(|| placeholder(&slot.path)),
        slot_ref: Some(slot.path.clone()),
        highlight,
        state: Some(slot.state),
        candidates: slot.candidates.clone(),
    }
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

struct Renderer<'a> {
    segments: Vec<Segment>,
    slots: &'a [SlotStatus],
    used: Vec<bool>,
    vocab: &'a Vocabulary,
}

impl Renderer<'_> {
    fn has_slot(&self, path: &str) -> bool {
        self.slots.iter().any(|s| s.path == path)
    }

    fn take_slot(&mut self, path: &str) -> Option<SlotStatus> {
        let i = self.slots.iter().enumerate().position(|(i, s)| s.path == path && !self.used[i])?;
        self.used[i] = true;
        Some(self.slots[i].clone())
    }

    fn lit(&mut self, text: &str) {
        self.segments.push(Segment {
            kind: SegmentKind::Literal,
            text: text.into(),
            slot_ref: None,
            highlight: Highlight::None,
            state: None,
            candidates: None,
        });
    }

    fn keyword(&mut self, text: &str, highlight: Highlight, slot_ref: Option<&str>) {
        self.segments.push(Segment {
            kind: SegmentKind::Keyword,
            text: text.into(),
            slot_ref: slot_ref.map(str::to_string),
            highlight,
            state: None,
            candidates: None,
        });
    }

    /// A leaf value: a slot segment if the path has an open slot or no value,
    /// a keyword otherwise.
    fn field(&mut self, path: &str, value: Option<String>, highlight: Highlight) {
        match (self.take_slot(path), value) {
            (Some(slot), value) => self.segments.push(slot_segment(&slot, value, highlight)),
            (None, Some(text)) => self.keyword(&text, highlight, Some(path)),
            (None, None) => self.segments.push(slot_segment(&SlotStatus::missing(path), None, highlight)),
        }
    }

    fn feature(&mut self, path: &str, name: Option<&str>) {
        let text = name.map(|n| if self.vocab.is_bare_safe(n) { n.to_string() } else { quote(n) });
        self.field(path, text, Highlight::Feature);
    }

    /// Claims a slot that covers a whole variable or condition.
    fn whole(&mut self, path: &str) -> bool {
        match self.take_slot(path) {
            Some(slot) => {
                self.segments.push(slot_segment(&slot, None, Highlight::None));
                true
            }
            None => false,
        }
    }

    fn aggregated(&mut self, path: &str, v: &DraftVariable) {
        if self.whole(path) {
            return;
        }
        let agg_path = format!("{path}.aggregator");
        self.lit("the");
        match v.aggregator {
            Some(a @ (Aggregator::Count | Aggregator::Fraction)) => {
                self.field(&agg_path, agg_word(Some(a)), Highlight::InsightType);
                self.lit("of rows with");
                self.row_predicate(path, v, true);
            }
            Some(Aggregator::Variance) => {
                self.field(&agg_path, agg_word(v.aggregator), Highlight::InsightType);
                self.lit("of the");
                self.facet(path, v.facet);
                self.lit("of");
                self.feature(&format!("{path}.feature"), v.feature.as_deref());
            }
            other => {
                self.field(&agg_path, agg_word(other), Highlight::InsightType);
                self.facet(path, v.facet);
                self.lit("of");
                self.feature(&format!("{path}.feature"), v.feature.as_deref());
            }
        }
    }

    fn facet(&mut self, path: &str, facet: Option<Facet>) {
        self.field(
            &format!("{path}.facet"),
            facet.map(|f| words::facet_singular(f).into()),
            Highlight::Attribution,
        );
    }

    fn sign_form(&self, path: &str, v: &DraftVariable) -> bool {
        let pred = format!("{path}.predicate");
        v.predicate.is_some_and(|p| p.comparator.is_some() && p.constant == Some(0.0))
            && !self.has_slot(&pred)
            && !self.has_slot(&format!("{pred}.comparator"))
            && !self.has_slot(&format!("{pred}.constant"))
    }

    /// `positive attribution for F` or `attribution for F greater than 0.5`.
    fn row_predicate(&mut self, path: &str, v: &DraftVariable, with_feature: bool) {
        let pred = format!("{path}.predicate");
        let predicate = v.predicate.unwrap_or_default();
        if self.sign_form(path, v) {
            let sign = predicate.comparator.map(|c| words::sign_word(c).to_string());
            self.field(&pred, sign, Highlight::Attribution);
            self.facet(path, v.facet);
            if with_feature {
                self.lit("for");
                self.feature(&format!("{path}.feature"), v.feature.as_deref());
            }
        } else {
            self.whole(&pred);
            self.facet(path, v.facet);
            if with_feature {
                self.lit("for");
                self.feature(&format!("{path}.feature"), v.feature.as_deref());
            }
            self.predicate_tail(&pred, predicate.comparator, predicate.constant);
        }
    }

    fn predicate_tail(&mut self, pred: &str, comparator: Option<crate::insight::Comparator>, constant: Option<f64>) {
        let phrase = comparator.map(|c| words::comparator_phrases(c)[0].join(" "));
        self.field(&format!("{pred}.comparator"), phrase, Highlight::Attribution);
        self.field(&format!("{pred}.constant"), constant.map(format_number), Highlight::Attribution);
    }

    /// `a positive attribution` or `an attribution greater than 0.5`.
    fn per_row_predicate(&mut self, path: &str, v: &DraftVariable) {
        let pred = format!("{path}.predicate");
        let predicate = v.predicate.unwrap_or_default();
        if self.sign_form(path, v) {
            self.lit("a");
            let sign = predicate.comparator.map(|c| words::sign_word(c).to_string());
            self.field(&pred, sign, Highlight::Attribution);
            self.facet(path, v.facet);
        } else {
            self.whole(&pred);
            self.lit(if v.facet == Some(Facet::Attribution) { "an" } else { "a" });
            self.facet(path, v.facet);
            self.predicate_tail(&pred, predicate.comparator, predicate.constant);
        }
    }

    fn per_row(&mut self, path: &str, v: &DraftVariable) {
        if self.whole(path) {
            return;
        }
        self.feature(&format!("{path}.feature"), v.feature.as_deref());
        self.field(
            &format!("{path}.facet"),
            v.facet.map(|f| words::facet_plural(f).into()),
            Highlight::Attribution,
        );
    }

    fn condition(&mut self, path: &str, c: &DraftCondition) {
        if self.whole(path) {
            return;
        }
        self.feature(&format!("{path}.feature"), c.feature.as_deref());
        self.keyword("is", Highlight::Condition, None);
        let op_text = c.op.map(|op| match op {
            ConditionOp::InRange => "between".to_string(),
            op => words::condition_phrases(op)[0].join(" "),
        });
        self.field(&format!("{path}.op"), op_text, Highlight::Condition);
        let bounds = c.bounds.as_ref().map(|b| match b {
            Bounds::Number(x) => format_number(*x),
            Bounds::Category(label) => quote(label),
            Bounds::Range(lo, hi) => format!("{} and {}", format_number(*lo), format_number(*hi)),
        });
        self.field(&format!("{path}.bounds"), bounds, Highlight::Condition);
    }
}
