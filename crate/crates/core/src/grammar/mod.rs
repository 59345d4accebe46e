//! Controlled natural language for insights.
//!
//! [`parse_controlled`] reads sentences such as
//!
//! ```text
//! the mean attribution of bmi is greater than 0.5 when age is greater than 65
//! for more than 65% of rows, bp has a positive attribution
//! there is no correlation between bp attributions and s5 attributions
//! ```
//!
//! and [`render`] writes any (possibly incomplete) insight back in the same
//! language, split into highlightable segments. Rendering a complete insight
//! and parsing the text again yields the same insight.

mod lexer;
mod parser;
mod render;
mod words;

pub use lexer::{format_number, format_percent, tokenize, LexError, Token};
pub use render::{render, render_insight, Highlight, RenderedInsight, Segment, SegmentKind};
pub use words::{is_reserved, RESERVED};

use crate::attribution::{ExplanationTable, FeatureMeta};
use crate::insight::{bind_draft, InsightDraft, SlotStatus, StructuredInsight};
use crate::scalar::Scalar;

/// Result of parsing one sentence.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    /// Fully specified and bound against the table.
    Insight(StructuredInsight),
    /// Recognized, but some slots still need a value.
    Incomplete {
        draft: InsightDraft,
        slots: Vec<SlotStatus>,
    },
    /// Not a sentence of the controlled language.
    NoParse,
}

/// Feature names of a table, pre-tokenized for matching and quoting.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    entries: Vec<(String, Vec<Token>)>,
}

impl Vocabulary {
    pub fn new<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        let entries = names
            .into_iter()
            .map(|n| {
                let name = n.as_ref().to_string();
                let tokens = tokenize(&name).unwrap_or_default();
                (name, tokens)
            })
            .collect();
        Self { entries }
    }

    pub fn from_features(features: &[FeatureMeta]) -> Self {
        Self::new(features.iter().map(|f| f.name.as_str()))
    }

    pub fn from_table<T: Scalar>(table: &ExplanationTable<T>) -> Self {
        Self::from_features(table.features())
    }

    /// Longest unquoted vocabulary name at the start of `tokens`. Only names
    /// free of reserved words and symbols take part, so a name never
    /// swallows the grammar around it.
    pub(crate) fn longest_match(&self, tokens: &[Token]) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .filter(|(_, t)| !t.is_empty() && t.iter().all(matchable))
            .filter(|(_, t)| tokens.len() >= t.len() && tokens[..t.len()] == t[..])
            .max_by_key(|(_, t)| t.len())
            .map(|(name, t)| (t.len(), name.as_str()))
    }

    /// Whether `name` can be written without quotes and still parse back to
    /// exactly this feature.
    pub fn is_bare_safe(&self, name: &str) -> bool {
        let Ok(tokens) = tokenize(name) else { return false };
        let words: Option<Vec<&str>> = tokens
            .iter()
            .map(|t| match t {
                Token::Word(w) if !is_reserved(w) => Some(w.as_str()),
                _ => None,
            })
            .collect();
        let Some(words) = words else { return false };
        if words.is_empty() || words.join(" ") != name.to_lowercase() {
            return false;
        }
        let folded = name.to_lowercase();
        !self.entries.iter().any(|(other, other_tokens)| {
            other != name
                && (other.to_lowercase() == folded
                    || (other_tokens.len() > tokens.len() && other_tokens[..tokens.len()] == tokens[..]))
        })
    }
}

fn matchable(token: &Token) -> bool {
    match token {
        Token::Word(w) => !is_reserved(w),
        Token::Number { .. } => true,
        _ => false,
    }
}

/// Parses a sentence of the controlled language and binds it against
/// `table`.
pub fn parse_controlled<T: Scalar>(text: &str, table: &ExplanationTable<T>) -> ParseOutcome {
    parse_with_features(text, table.features())
}

/// [`parse_controlled`] against a bare feature list.
pub fn parse_with_features(text: &str, features: &[FeatureMeta]) -> ParseOutcome {
    let Ok(tokens) = tokenize(text) else { return ParseOutcome::NoParse };
    if tokens.is_empty() {
        return ParseOutcome::NoParse;
    }
    let vocab = Vocabulary::from_features(features);
    let Some(parsed) = parser::parse(&tokens, &vocab) else { return ParseOutcome::NoParse };
    let (draft, mut slots) = bind_draft(&parsed.draft, features);
    for vague in parsed.vague {
        match slots.iter_mut().find(|s| s.path == vague.path) {
            Some(slot) => *slot = vague,
            None => slots.push(vague),
        }
    }
    if slots.is_empty() {
        if let Some(insight) = draft.complete() {
            return ParseOutcome::Insight(insight);
        }
    }
    ParseOutcome::Incomplete { draft, slots }
}

/// Renders `insight` and parses the text back, reporting whether the same
/// insight comes out.
pub fn roundtrip_check<T: Scalar>(insight: &StructuredInsight, table: &ExplanationTable<T>) -> bool {
    let text = render_insight(insight, &Vocabulary::from_table(table)).text();
    parse_controlled(&text, table) == ParseOutcome::Insight(insight.clone())
}
