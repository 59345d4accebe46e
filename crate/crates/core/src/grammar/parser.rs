//! Recursive-descent parser for the controlled insight language.
//!
//! The parser only recognizes structure. Feature phrases come out as written
//! (or as the vocabulary name they matched) and are bound afterwards.

use crate::insight::{
    Aggregator, Bounds, Comparator, ConditionOp, Direction, DraftBody, DraftCondition, DraftPredicate,
    DraftVariable, Facet, InsightDraft, ReadComparator, Relation, SlotStatus,
};

use super::lexer::Token;
use super::words::{self, Phrase};
use super::Vocabulary;

pub(crate) struct Parsed {
    pub draft: InsightDraft,
    /// Slots for vague wording the parser recognized but refused to guess.
    pub vague: Vec<SlotStatus>,
}

pub(crate) fn parse(tokens: &[Token], vocab: &Vocabulary) -> Option<Parsed> {
    let mut parser = Parser {
        tokens,
        pos: 0,
        vocab,
        vague: Vec::new(),
    };
    let body = parser.body()?;
    let conditions = parser.conditions()?;
    if parser.pos != tokens.len() {
        return None;
    }
    Some(Parsed {
        draft: InsightDraft { body, conditions },
        vague: parser.vague,
    })
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vocab: &'a Vocabulary,
    vague: Vec<SlotStatus>,
}

const MAGNITUDES: [Aggregator; 4] = [Aggregator::Mean, Aggregator::Variance, Aggregator::Min, Aggregator::Max];
const QUANTITIES: [Aggregator; 2] = [Aggregator::Count, Aggregator::Fraction];

impl<'a> Parser<'a> {
    /// Runs `f`, rewinding the cursor (and vague slots) when it fails.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> Option<T>) -> Option<T> {
        let saved = (self.pos, self.vague.len());
        let out = f(self);
        if out.is_none() {
            self.pos = saved.0;
            self.vague.truncate(saved.1);
        }
        out
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn word(&mut self, w: &str) -> bool {
        if self.peek().and_then(Token::surface) == Some(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn any_word(&mut self, options: &[&str]) -> Option<&'a str> {
        let surface = self.peek().and_then(Token::surface)?;
        options.contains(&surface).then(|| {
            self.pos += 1;
            surface
        })
    }

    fn phrase_len(&self, phrase: Phrase) -> Option<usize> {
        phrase
            .iter()
            .enumerate()
            .all(|(i, w)| self.tokens.get(self.pos + i).and_then(Token::surface) == Some(*w))
            .then_some(phrase.len())
    }

    fn phrase(&mut self, phrase: Phrase) -> bool {
        match self.phrase_len(phrase) {
            Some(n) => {
                self.pos += n;
                true
            }
            None => false,
        }
    }

    /// Longest matching phrase among all options.
    fn choose<K: Copy>(&mut self, options: &[K], phrases: fn(K) -> &'static [Phrase]) -> Option<K> {
        let mut best: Option<(usize, K)> = None;
        for &option in options {
            for phrase in phrases(option) {
                if let Some(n) = self.phrase_len(phrase) {
                    if best.is_none_or(|(m, _)| n > m) {
                        best = Some((n, option));
                    }
                }
            }
        }
        let (n, option) = best?;
        self.pos += n;
        Some(option)
    }

    fn number(&mut self) -> Option<f64> {
        match self.peek()? {
            Token::Number { value, .. } => {
                self.pos += 1;
                Some(*value)
            }
            _ => None,
        }
    }

    fn quoted(&mut self) -> Option<String> {
        match self.peek()? {
            Token::Quoted(s) => {
                self.pos += 1;
                Some(s.clone())
            }
            _ => None,
        }
    }

    fn row_noun(&mut self) -> bool {
        words::ROW_NOUNS.iter().any(|p| self.phrase(p))
    }

    fn article(&mut self) {
        let _ = self.any_word(&["a", "an"]);
    }

    fn facet_word(&mut self) -> Option<Facet> {
        let facet = words::facet_from_word(self.peek().and_then(Token::surface)?)?;
        self.pos += 1;
        Some(facet)
    }

    /// Quoted name, else the longest vocabulary name, else a run of
    /// non-reserved words.
    fn feature(&mut self) -> Option<String> {
        if let Some(name) = self.quoted() {
            return Some(name);
        }
        if let Some((len, name)) = self.vocab.longest_match(&self.tokens[self.pos..]) {
            self.pos += len;
            return Some(name.to_string());
        }
        let start = self.pos;
        let mut parts = Vec::new();
        while let Some(Token::Word(w)) = self.peek() {
            if words::is_reserved(w) {
                break;
            }
            parts.push(w.as_str());
            self.pos += 1;
        }
        if parts.is_empty() {
            self.pos = start;
            None
        } else {
            Some(parts.join(" "))
        }
    }

    fn body(&mut self) -> Option<DraftBody> {
        self.attempt(Self::correlation_between)
            .or_else(|| self.attempt(Self::correlation_trend))
            .or_else(|| self.attempt(Self::fraction_read))
            .or_else(|| self.attempt(Self::statement))
    }

    // there is a positive|negative|no correlation between X and Y
    fn correlation_between(&mut self) -> Option<DraftBody> {
        if !self.word("there") || self.any_word(&["is", "are"]).is_none() {
            return None;
        }
        self.article();
        let direction = match self.any_word(&["positive", "negative", "no"]) {
            Some("positive") => Some(Direction::Positive),
            Some("negative") => Some(Direction::Negative),
            Some(_) => Some(Direction::None),
            None => None,
        };
        if !self.word("correlation") || !self.word("between") {
            return None;
        }
        let x = self.per_row_variable()?;
        if !self.word("and") {
            return None;
        }
        let y = self.per_row_variable()?;
        Some(DraftBody::Correlation { x, y, direction })
    }

    // as X increases, Y (also) tends to increase|decrease
    fn correlation_trend(&mut self) -> Option<DraftBody> {
        if !self.word("as") {
            return None;
        }
        let x = self
            .attempt(Self::per_row_variable)
            .or_else(|| self.feature().map(|f| per_row(f, Facet::Value)))?;
        if !self.word("increases") {
            return None;
        }
        self.word(",");
        let y = self
            .attempt(Self::per_row_variable)
            .or_else(|| self.feature().map(|f| per_row(f, Facet::Value)))?;
        self.word("also");
        let direction = if self.any_word(&["tends", "tend"]).is_some() {
            if !self.word("to") {
                return None;
            }
            match self.any_word(&["increase", "decrease"])? {
                "increase" => Direction::Positive,
                _ => Direction::Negative,
            }
        } else {
            match self.any_word(&["increases", "decreases"])? {
                "increases" => Direction::Positive,
                _ => Direction::Negative,
            }
        };
        Some(DraftBody::Correlation {
            x,
            y,
            direction: Some(direction),
        })
    }

    fn per_row_variable(&mut self) -> Option<DraftVariable> {
        self.attempt(|p| {
            if !p.word("the") {
                return None;
            }
            let facet = p.facet_word()?;
            if !p.word("of") {
                return None;
            }
            Some(per_row(p.feature()?, facet))
        })
        .or_else(|| {
            self.attempt(|p| {
                p.word("the");
                let feature = p.feature()?;
                let facet = p.facet_word()?;
                Some(per_row(feature, facet))
            })
        })
    }

    // for more than 65% of rows, F has a positive attribution
    fn fraction_read(&mut self) -> Option<DraftBody> {
        if !self.word("for") {
            return None;
        }
        let (comparator, threshold) = if self.word("most") {
            self.vague.push(
                SlotStatus::ambiguous("read.threshold")
                    .with_hint("0.5")
                    .with_note("`most` does not say how large a share of rows is meant"),
            );
            (ReadComparator::Gt, None)
        } else {
            let comparator = self.choose(ReadComparator::ALL, words::quantifier_phrases)?;
            (comparator, Some(self.number()?))
        };
        self.word("of");
        if !self.row_noun() {
            return None;
        }
        self.word(",");
        let feature = self.feature()?;
        self.any_word(&["has", "have"])?;
        self.article();
        let (facet, predicate) = self
            .attempt(|p| {
                let sign = p.sign()?;
                Some((p.facet_word()?, sign))
            })
            .or_else(|| {
                self.attempt(|p| {
                    let facet = p.facet_word()?;
                    let comparator = p.choose(Comparator::ALL, words::comparator_phrases)?;
                    Some((facet, DraftPredicate {
                        comparator: Some(comparator),
                        constant: Some(p.number()?),
                    }))
                })
            })?;
        Some(DraftBody::Read {
            variable: DraftVariable {
                feature: Some(feature),
                facet: Some(facet),
                aggregator: Some(Aggregator::Fraction),
                predicate: Some(predicate),
            },
            comparator: Some(comparator),
            threshold,
        })
    }

    fn sign(&mut self) -> Option<DraftPredicate> {
        let surface = self.peek().and_then(Token::surface)?;
        let (_, comparator) = words::SIGNS.iter().find(|(w, _)| *w == surface)?;
        self.pos += 1;
        Some(DraftPredicate {
            comparator: Some(*comparator),
            constant: Some(0.0),
        })
    }

    // <aggregated variable> is <comparator> <number>
    // <aggregated variable> is <relation> <aggregated variable>
    fn statement(&mut self) -> Option<DraftBody> {
        let left = self.aggregated_variable(None)?;
        self.any_word(&["is", "are"])?;
        let read = self.attempt(|p| {
            let comparator = p.choose(ReadComparator::ALL, words::read_phrases)?;
            let threshold = p.number()?;
            Some((comparator, threshold))
        });
        if let Some((comparator, threshold)) = read {
            return Some(DraftBody::Read {
                variable: left,
                comparator: Some(comparator),
                threshold: Some(threshold),
            });
        }
        let relation = self.choose(Relation::ALL, words::relation_phrases)?;
        let right = self.right_variable(&left)?;
        Some(DraftBody::Comparison {
            left,
            right,
            relation: Some(relation),
        })
    }

    fn right_variable(&mut self, left: &DraftVariable) -> Option<DraftVariable> {
        self.attempt(|p| {
            if !p.phrase(&["that", "of"]) {
                return None;
            }
            let feature = p.feature()?;
            Some(DraftVariable {
                feature: Some(feature),
                ..left.clone()
            })
        })
        .or_else(|| self.aggregated_variable(left.feature.as_deref()))
    }

    /// `inherit` is the feature an elliptical right-hand side refers back to.
    fn aggregated_variable(&mut self, inherit: Option<&str>) -> Option<DraftVariable> {
        self.attempt(|p| {
            if !p.word("the") {
                return None;
            }
            let aggregator = p.choose(&MAGNITUDES, words::aggregator_words)?;
            p.phrase(&["of", "the"]);
            let facet = p.facet_word()?;
            if !p.word("of") {
                return None;
            }
            let feature = p.feature()?;
            Some(DraftVariable {
                feature: Some(feature),
                facet: Some(facet),
                aggregator: Some(aggregator),
                predicate: None,
            })
        })
        .or_else(|| {
            self.attempt(|p| {
                if !p.word("the") {
                    return None;
                }
                let aggregator = p.choose(&QUANTITIES, words::aggregator_words)?;
                p.attempt(|q| (q.word("of") && q.row_noun()).then_some(()));
                if !p.word("with") {
                    return None;
                }
                let (facet, predicate, feature) = p.row_predicate(inherit)?;
                Some(DraftVariable {
                    feature: Some(feature),
                    facet: Some(facet),
                    aggregator: Some(aggregator),
                    predicate: Some(predicate),
                })
            })
        })
    }

    // positive attribution for F | attribution for F greater than 0.5
    fn row_predicate(&mut self, inherit: Option<&str>) -> Option<(Facet, DraftPredicate, String)> {
        let feature_ref = |p: &mut Self| -> Option<String> {
            p.attempt(|q| {
                q.any_word(&["for", "of"])?;
                q.feature()
            })
            .or_else(|| inherit.map(str::to_string))
        };
        self.attempt(|p| {
            let predicate = p.sign()?;
            let facet = p.facet_word()?;
            let feature = feature_ref(p)?;
            Some((facet, predicate, feature))
        })
        .or_else(|| {
            self.attempt(|p| {
                let facet = p.facet_word()?;
                let feature = feature_ref(p)?;
                let comparator = p.choose(Comparator::ALL, words::comparator_phrases)?;
                let constant = p.number()?;
                Some((
                    facet,
                    DraftPredicate {
                        comparator: Some(comparator),
                        constant: Some(constant),
                    },
                    feature,
                ))
            })
        })
    }

    fn conditions(&mut self) -> Option<Vec<DraftCondition>> {
        let mut out = Vec::new();
        let start = self.pos;
        self.word(",");
        if self.any_word(&["when", "if", "where"]).is_none() {
            self.pos = start;
            return Some(out);
        }
        loop {
            out.push(self.condition()?);
            let before = self.pos;
            if self.word(",") {
                self.word("and");
            } else if !self.word("and") {
                break;
            }
            if self.pos == before {
                break;
            }
        }
        Some(out)
    }

    fn condition(&mut self) -> Option<DraftCondition> {
        let feature = self.feature()?;
        self.any_word(&["is", "are"]);
        if self.word("between") {
            let lo = self.number()?;
            if !self.word("and") {
                return None;
            }
            let hi = self.number()?;
            return Some(DraftCondition {
                feature: Some(feature),
                op: Some(ConditionOp::InRange),
                bounds: Some(Bounds::Range(lo, hi)),
            });
        }
        if let Some(label) = self.quoted() {
            return Some(DraftCondition {
                feature: Some(feature),
                op: Some(ConditionOp::Eq),
                bounds: Some(Bounds::Category(label)),
            });
        }
        let op = self.choose(
            &[ConditionOp::Lt, ConditionOp::Le, ConditionOp::Gt, ConditionOp::Ge, ConditionOp::Eq],
            words::condition_phrases,
        )?;
        let bounds = match (op, self.number()) {
            (_, Some(x)) => Bounds::Number(x),
            (ConditionOp::Eq, None) => Bounds::Category(self.quoted()?),
            _ => return None,
        };
        Some(DraftCondition {
            feature: Some(feature),
            op: Some(op),
            bounds: Some(bounds),
        })
    }
}

fn per_row(feature: String, facet: Facet) -> DraftVariable {
    DraftVariable {
        feature: Some(feature),
        facet: Some(facet),
        aggregator: Some(Aggregator::Identity),
        predicate: None,
    }
}
