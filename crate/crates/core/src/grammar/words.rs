//! Phrase tables shared by the parser and the renderer. The first spelling in
//! every list is the one the renderer emits.

use crate::insight::{Aggregator, Comparator, ConditionOp, Direction, Facet, ReadComparator, Relation};

/// Words that end a bare (unquoted) feature name.
pub const RESERVED: &[&str] = &[
    "a", "about", "above", "also", "an", "and", "approximately", "are", "around", "as", "at", "attribution",
    "attributions", "average", "below", "between", "bigger", "correlation", "count", "data", "decrease",
    "decreases", "does", "equal", "equals", "exactly", "fewer", "for", "fraction", "greater", "has", "have",
    "higher", "if", "increase", "increases", "instance", "instances", "is", "larger", "least", "less",
    "lower", "max", "maximum", "mean", "min", "minimum", "more", "most", "negative", "no", "non-negative",
    "non-positive", "not", "number", "of", "one", "over", "patient", "patients", "percentage", "point",
    "points", "positive", "proportion", "roughly", "row", "rows", "same", "share", "similar", "smaller",
    "tend", "tends", "than", "that", "the", "there", "to", "under", "value", "values", "variance", "when",
    "where", "with", "zero",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.binary_search(&word).is_ok()
}

pub type Phrase = &'static [&'static str];

pub const ROW_NOUNS: &[Phrase] = &[
    &["rows"],
    &["patients"],
    &["instances"],
    &["data", "points"],
    &["points"],
    &["row"],
    &["patient"],
    &["instance"],
];

pub fn aggregator_words(a: Aggregator) -> &'static [Phrase] {
    match a {
        Aggregator::Identity => &[],
        Aggregator::Mean => &[&["mean"], &["average"]],
        Aggregator::Variance => &[&["variance"]],
        Aggregator::Min => &[&["minimum"], &["min"]],
        Aggregator::Max => &[&["maximum"], &["max"]],
        Aggregator::Count => &[&["number"], &["count"]],
        Aggregator::Fraction => &[&["fraction"], &["proportion"], &["share"], &["percentage"]],
    }
}

pub fn facet_singular(f: Facet) -> &'static str {
    match f {
        Facet::Value => "value",
        Facet::Attribution => "attribution",
    }
}

pub fn facet_plural(f: Facet) -> &'static str {
    match f {
        Facet::Value => "values",
        Facet::Attribution => "attributions",
    }
}

pub fn facet_from_word(word: &str) -> Option<Facet> {
    match word {
        "value" | "values" => Some(Facet::Value),
        "attribution" | "attributions" => Some(Facet::Attribution),
        _ => None,
    }
}

/// Sign words stand for a predicate against zero.
pub const SIGNS: &[(&str, Comparator)] = &[
    ("positive", Comparator::Gt),
    ("negative", Comparator::Lt),
    ("non-negative", Comparator::Ge),
    ("non-positive", Comparator::Le),
    ("zero", Comparator::Eq),
];

pub fn sign_word(c: Comparator) -> &'static str {
    SIGNS.iter().find(|(_, cmp)| *cmp == c).map(|(w, _)| *w).unwrap_or("positive")
}

pub fn comparator_phrases(c: Comparator) -> &'static [Phrase] {
    match c {
        Comparator::Gt => &[&["greater", "than"], &["larger", "than"], &["higher", "than"], &["more", "than"], &["above"], &["over"], &[">"]],
        Comparator::Lt => &[&["less", "than"], &["smaller", "than"], &["lower", "than"], &["fewer", "than"], &["below"], &["under"], &["<"]],
        Comparator::Ge => &[&["at", "least"], &[">="]],
        Comparator::Le => &[&["at", "most"], &["<="]],
        Comparator::Eq => &[&["equal", "to"], &["exactly"], &["="]],
    }
}

pub fn condition_phrases(op: ConditionOp) -> &'static [Phrase] {
    match op {
        ConditionOp::Lt => comparator_phrases(Comparator::Lt),
        ConditionOp::Le => comparator_phrases(Comparator::Le),
        ConditionOp::Gt => comparator_phrases(Comparator::Gt),
        ConditionOp::Ge => comparator_phrases(Comparator::Ge),
        ConditionOp::Eq => comparator_phrases(Comparator::Eq),
        ConditionOp::InRange => &[&["between"]],
    }
}

pub fn read_phrases(c: ReadComparator) -> &'static [Phrase] {
    match c {
        ReadComparator::Lt => comparator_phrases(Comparator::Lt),
        ReadComparator::Le => comparator_phrases(Comparator::Le),
        ReadComparator::Gt => comparator_phrases(Comparator::Gt),
        ReadComparator::Ge => comparator_phrases(Comparator::Ge),
        ReadComparator::Approx => &[
            &["approximately", "equal", "to"],
            &["approximately"],
            &["about"],
            &["roughly"],
            &["around"],
            &["≈"],
        ],
    }
}

/// Quantifiers in "for more than 65% of rows, …".
pub fn quantifier_phrases(c: ReadComparator) -> &'static [Phrase] {
    match c {
        ReadComparator::Gt => &[&["more", "than"], &["over"], &["greater", "than"]],
        ReadComparator::Lt => &[&["less", "than"], &["fewer", "than"], &["under"]],
        ReadComparator::Ge => &[&["at", "least"]],
        ReadComparator::Le => &[&["at", "most"]],
        ReadComparator::Approx => &[&["about"], &["approximately"], &["roughly"], &["around"]],
    }
}

pub fn relation_phrases(r: Relation) -> &'static [Phrase] {
    match r {
        Relation::Greater => &[&["greater", "than"], &["larger", "than"], &["higher", "than"], &["more", "than"], &["bigger", "than"]],
        Relation::Less => &[&["less", "than"], &["smaller", "than"], &["lower", "than"], &["fewer", "than"]],
        Relation::ApproxEqual => &[
            &["approximately", "equal", "to"],
            &["roughly", "equal", "to"],
            &["about", "equal", "to"],
            &["equal", "to"],
            &["similar", "to"],
            &["about", "the", "same", "as"],
            &["the", "same", "as"],
        ],
    }
}

pub fn trend_phrase(d: Direction) -> &'static str {
    match d {
        Direction::Positive => "increase",
        Direction::Negative => "decrease",
        Direction::None => "stay flat",
    }
}
