//! Free-form observation → structured insight, through a chat-completion
//! model.
//!
//! The pipeline runs in two stages. The model first classifies the
//! observation as a read, correlation or comparison insight and says whether
//! it restricts rows by a condition; it then fills the JSON template of that
//! type. Every answer goes through the insight validator; unusable answers
//! trigger a repair request quoting the validator's findings, up to
//! `max_repair_retries` times. Whatever is still missing comes back as
//! slots, never as guessed values.
//!
//! In fixture mode the provider is replaced by recorded answers looked up by
//! the SHA-256 of the trimmed text, which makes extraction reproducible
//! offline.

mod config;
mod fixture;
pub mod prompts;
mod provider;
mod trace;

use std::collections::VecDeque;
use std::sync::Arc;

use serde_json::Value;
use thiserror::Error;
use xlint_core::grammar::{parse_with_features, ParseOutcome};
use xlint_core::insight::{bind_draft, validate, InsightDraft, InsightError, InsightKind, SlotState, SlotStatus, Validation};
use xlint_core::{FeatureMeta, StructuredInsight};

pub use config::{ConfigError, ExtractorConfig, Mode};
pub use fixture::{fixture_key, fixture_path, load_fixture, save_fixture, Fixture};
pub use provider::{ChatClient, HttpChatClient, Message, ProviderError, ScriptedClient};
pub use trace::{ClassifyRecord, ExtractionTrace, FillRecord, RepairRecord, Stage};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("empty observation")]
    EmptyText,
    #[error("provider unavailable: {source}")]
    ProviderUnavailable {
        source: ProviderError,
        trace: Option<Box<ExtractionTrace>>,
    },
    #[error("no usable classification after {attempts} attempts")]
    UnparseableClassification {
        attempts: u32,
        trace: Box<ExtractionTrace>,
    },
    #[error("no schema-conforming document after {attempts} attempts: {reason}")]
    SchemaViolation {
        attempts: u32,
        reason: String,
        trace: Box<ExtractionTrace>,
    },
}

impl ExtractError {
    pub fn trace(&self) -> Option<&ExtractionTrace> {
        match self {
            ExtractError::EmptyText => None,
            ExtractError::ProviderUnavailable { trace, .. } => trace.as_deref(),
            ExtractError::UnparseableClassification { trace, .. } | ExtractError::SchemaViolation { trace, .. } => {
                Some(trace)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub kind: InsightKind,
    pub has_condition: bool,
}

/// A validated, table-bound result of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub classification: Classification,
    pub draft: InsightDraft,
    /// `draft` as an insight document, explicit nulls for open slots.
    pub document: Value,
    /// Present exactly when `slots` is empty.
    pub insight: Option<StructuredInsight>,
    pub slots: Vec<SlotStatus>,
    pub trace: ExtractionTrace,
}

/// Why stage one produced no classification; turned into an
/// [`ExtractError`] once the trace is complete.
enum ClassifyFailure {
    Provider(ProviderError),
    Unparseable(u32),
}

impl ClassifyFailure {
    fn into_error(self, trace: ExtractionTrace) -> ExtractError {
        match self {
            ClassifyFailure::Provider(source) => ExtractError::ProviderUnavailable {
                source,
                trace: Some(Box::new(trace)),
            },
            ClassifyFailure::Unparseable(attempts) => ExtractError::UnparseableClassification {
                attempts,
                trace: Box::new(trace),
            },
        }
    }
}

/// Source of provider answers for one extraction.
enum Responder {
    Live(Arc<dyn ChatClient>),
    Replay { key: String, queue: VecDeque<String> },
}

impl Responder {
    fn ask(&mut self, messages: &[Message]) -> Result<String, ProviderError> {
        match self {
            Responder::Live(client) => client.complete(messages),
            Responder::Replay { key, queue } => queue.pop_front().ok_or_else(|| ProviderError::FixtureExhausted(key.clone())),
        }
    }
}

pub struct Extractor {
    config: ExtractorConfig,
    client: Option<Arc<dyn ChatClient>>,
}

impl std::fmt::Debug for Extractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Extractor").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Extractor {
    pub fn new(config: ExtractorConfig) -> Result<Self, ConfigError> {
        config.check()?;
        let client: Option<Arc<dyn ChatClient>> = match config.mode {
            Mode::Live => Some(Arc::new(HttpChatClient::new(&config))),
            Mode::Fixture => None,
        };
        Ok(Self { config, client })
    }

    /// Live-mode extractor over an arbitrary client.
    pub fn with_client(config: ExtractorConfig, client: Arc<dyn ChatClient>) -> Result<Self, ConfigError> {
        config.check()?;
        Ok(Self {
            config: ExtractorConfig {
                mode: Mode::Live,
                ..config
            },
            client: Some(client),
        })
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.config
    }

    fn attempts(&self) -> u32 {
        self.config.max_repair_retries + 1
    }

    fn responder(&self, text: &str, stage: Option<Stage>) -> Result<Responder, ExtractError> {
        let unavailable = |source| ExtractError::ProviderUnavailable { source, trace: None };
        match (&self.client, &self.config.fixture_dir) {
            (Some(client), _) => Ok(Responder::Live(client.clone())),
            (None, Some(dir)) => {
                let fixture = load_fixture(dir, text).map_err(unavailable)?;
                let t = &fixture.trace;
                let repairs = |s| t.repairs.iter().filter(move |r| r.stage == s).map(|r| r.raw_response.clone());
                let queue: VecDeque<String> = match stage {
                    None => t.responses().into(),
                    Some(Stage::Classify) => std::iter::once(t.stage1.raw_response.clone())
                        .chain(repairs(Stage::Classify))
                        .collect(),
                    Some(Stage::Fill) => t
                        .stage2
                        .iter()
                        .map(|s| s.raw_response.clone())
                        .chain(repairs(Stage::Fill))
                        .collect(),
                };
                Ok(Responder::Replay {
                    key: fixture_key(text),
                    queue,
                })
            }
            (None, None) => Err(unavailable(ProviderError::MissingFixture("no fixture directory".into()))),
        }
    }

    /// Stage one on its own.
    pub fn classify(&self, text: &str, features: &[FeatureMeta]) -> Result<Classification, ExtractError> {
        if text.trim().is_empty() {
            return Err(ExtractError::EmptyText);
        }
        let mut responder = self.responder(text, Some(Stage::Classify))?;
        let mut repairs = Vec::new();
        let (record, result) = self.run_classify(&mut responder, text, features, &mut repairs);
        let trace = ExtractionTrace {
            stage1: record,
            stage2: None,
            repairs,
        };
        result.map_err(|e| e.into_error(trace))
    }

    /// Stage two on its own, for an already known type.
    pub fn fill_template(
        &self,
        text: &str,
        classification: Classification,
        features: &[FeatureMeta],
    ) -> Result<Extraction, ExtractError> {
        if text.trim().is_empty() {
            return Err(ExtractError::EmptyText);
        }
        let mut responder = self.responder(text, Some(Stage::Fill))?;
        let trace = ExtractionTrace {
            stage1: ClassifyRecord {
                prompt: String::new(),
                raw_response: String::new(),
                classified_type: Some(classification.kind),
                has_condition: classification.has_condition,
            },
            stage2: None,
            repairs: Vec::new(),
        };
        self.run_fill(&mut responder, text, classification, features, trace)
    }

    /// Both stages, then binding of feature references against `features`.
    pub fn extract(&self, text: &str, features: &[FeatureMeta]) -> Result<Extraction, ExtractError> {
        if text.trim().is_empty() {
            return Err(ExtractError::EmptyText);
        }
        let mut responder = self.responder(text, None)?;
        let mut repairs = Vec::new();
        let (record, classified) = self.run_classify(&mut responder, text, features, &mut repairs);
        let trace = ExtractionTrace {
            stage1: record,
            stage2: None,
            repairs,
        };
        let result = match classified {
            Ok(classification) => self.run_fill(&mut responder, text, classification, features, trace),
            Err(e) => Err(e.into_error(trace)),
        };
        self.record(text, &result);
        result
    }

    /// [`Extractor::extract`], falling back to the controlled grammar when
    /// the model gives nothing usable.
    pub fn extract_or_parse(&self, text: &str, features: &[FeatureMeta]) -> Result<Interpreted, InterpretError> {
        match self.extract(text, features) {
            Ok(x) => Ok(Interpreted::from_extraction(x)),
            Err(ExtractError::EmptyText) => Err(InterpretError::NoParse),
            Err(e) => match grammar(text, features) {
                Some(mut parsed) => {
                    parsed.source = Source::GrammarFallback;
                    parsed.trace = e.trace().cloned();
                    Ok(parsed)
                }
                None => Err(InterpretError::Extraction(e)),
            },
        }
    }

    fn record(&self, text: &str, result: &Result<Extraction, ExtractError>) {
        let (Some(dir), Mode::Live) = (&self.config.record_dir, self.config.mode) else { return };
        let trace = match result {
            Ok(x) => Some(&x.trace),
            Err(e) => e.trace(),
        };
        if let Some(trace) = trace {
            let fixture = Fixture {
                text: text.trim().to_string(),
                trace: trace.clone(),
            };
            // Recording is best effort; the extraction result stands either way.
            let _ = save_fixture(dir, &fixture);
        }
    }

    fn run_classify(
        &self,
        responder: &mut Responder,
        text: &str,
        features: &[FeatureMeta],
        repairs: &mut Vec<RepairRecord>,
    ) -> (ClassifyRecord, Result<Classification, ClassifyFailure>) {
        let prompt = prompts::classify(text, features);
        let mut messages = vec![Message::system(prompts::SYSTEM), Message::user(prompt.clone())];
        let mut record = ClassifyRecord {
            prompt,
            raw_response: String::new(),
            classified_type: None,
            has_condition: false,
        };
        let mut pending: Option<(String, String)> = None;
        for attempt in 0..self.attempts() {
            let raw = match responder.ask(&messages) {
                Ok(raw) => raw,
                Err(source) => return (record, Err(ClassifyFailure::Provider(source))),
            };
            match pending.take() {
                None => record.raw_response = raw.clone(),
                Some((reason, prompt)) => repairs.push(RepairRecord {
                    stage: Stage::Classify,
                    reason,
                    prompt,
                    raw_response: raw.clone(),
                }),
            }
            match parse_classification(&raw) {
                Ok(c) => {
                    record.classified_type = Some(c.kind);
                    record.has_condition = c.has_condition;
                    return (record, Ok(c));
                }
                Err(reason) if attempt + 1 < self.attempts() => {
                    let prompt = prompts::repair_classification(&reason);
                    messages.push(Message::assistant(raw));
                    messages.push(Message::user(prompt.clone()));
                    pending = Some((reason, prompt));
                }
                Err(_) => {}
            }
        }
        (record, Err(ClassifyFailure::Unparseable(self.attempts())))
    }

    fn run_fill(
        &self,
        responder: &mut Responder,
        text: &str,
        classification: Classification,
        features: &[FeatureMeta],
        mut trace: ExtractionTrace,
    ) -> Result<Extraction, ExtractError> {
        let prompt = prompts::fill(text, classification.kind, classification.has_condition, features);
        let mut messages = vec![Message::system(prompts::SYSTEM), Message::user(prompt.clone())];
        let mut stage2 = FillRecord {
            prompt,
            raw_response: String::new(),
            document: None,
        };
        let mut pending: Option<(String, String)> = None;
        let mut last: Option<(InsightDraft, Vec<SlotStatus>)> = None;
        let mut last_reason = String::new();
        for attempt in 0..self.attempts() {
            let raw = match responder.ask(&messages) {
                Ok(raw) => raw,
                Err(source) => {
                    if attempt > 0 {
                        trace.stage2 = Some(stage2);
                    }
                    return Err(ExtractError::ProviderUnavailable {
                        source,
                        trace: Some(Box::new(trace)),
                    });
                }
            };
            match pending.take() {
                None => stage2.raw_response = raw.clone(),
                Some((reason, prompt)) => trace.repairs.push(RepairRecord {
                    stage: Stage::Fill,
                    reason,
                    prompt,
                    raw_response: raw.clone(),
                }),
            }
            match check_document(&raw, classification.kind) {
                Checked::Accept(draft, slots) => {
                    last = Some((draft, slots));
                    last_reason.clear();
                    break;
                }
                Checked::Reject { reason, usable, flagged } => {
                    last = usable;
                    if attempt + 1 < self.attempts() {
                        let prompt = prompts::repair_document(&reason, &flagged);
                        messages.push(Message::assistant(raw));
                        messages.push(Message::user(prompt.clone()));
                        pending = Some((reason.clone(), prompt));
                    }
                    last_reason = reason;
                }
            }
        }

        let Some((draft, slots)) = last else {
            trace.stage2 = Some(stage2);
            return Err(ExtractError::SchemaViolation {
                attempts: self.attempts(),
                reason: last_reason,
                trace: Box::new(trace),
            });
        };
        let (bound, insight, slots) = settle(&draft, slots, features);
        let document = bound.to_document();
        stage2.document = Some(document.clone());
        trace.stage2 = Some(stage2);
        Ok(Extraction {
            classification,
            draft: bound,
            document,
            insight,
            slots,
            trace,
        })
    }
}

/// Binds `draft` against `features`, merging binding problems into the
/// validator's `slots`. The insight is present exactly when no slot is left.
pub fn settle(
    draft: &InsightDraft,
    mut slots: Vec<SlotStatus>,
    features: &[FeatureMeta],
) -> (InsightDraft, Option<StructuredInsight>, Vec<SlotStatus>) {
    let (bound, bind_slots) = bind_draft(draft, features);
    for slot in bind_slots {
        match slots.iter_mut().find(|s| s.path == slot.path) {
            Some(existing) => *existing = slot,
            None => slots.push(slot),
        }
    }
    let insight = if slots.is_empty() { bound.complete() } else { None };
    if insight.is_none() && slots.is_empty() {
        slots.push(SlotStatus::ambiguous(bound.kind().as_str()).with_note("document is incomplete"));
    }
    (bound, insight, slots)
}

/// Re-reads an edited insight document: validation, then [`settle`].
pub fn settle_document(
    document: &Value,
    features: &[FeatureMeta],
) -> Result<(InsightDraft, Option<StructuredInsight>, Vec<SlotStatus>), InsightError> {
    let (draft, slots) = match validate(document)? {
        Validation::Valid(insight) => (InsightDraft::from(&insight), Vec::new()),
        Validation::Incomplete { draft, slots } => (draft, slots),
    };
    Ok(settle(&draft, slots, features))
}

/// The JSON object inside a model answer, tolerating code fences and
/// surrounding prose.
fn json_object(raw: &str) -> Result<Value, String> {
    let (Some(start), Some(end)) = (raw.find('{'), raw.rfind('}')) else {
        return Err("the answer contains no JSON object".into());
    };
    if end < start {
        return Err("the answer contains no JSON object".into());
    }
    match serde_json::from_str::<Value>(&raw[start..=end]) {
        Ok(v) if v.is_object() => Ok(v),
        Ok(_) => Err("the answer is not a JSON object".into()),
        Err(e) => Err(format!("the answer is not valid JSON ({e})")),
    }
}

fn parse_classification(raw: &str) -> Result<Classification, String> {
    if let Ok(v) = json_object(raw) {
        let tag = v
            .get("type")
            .or_else(|| v.get("insight_type"))
            .and_then(Value::as_str)
            .map(|s| s.trim().to_ascii_lowercase());
        let Some(tag) = tag else { return Err("the JSON answer has no `type` field".into()) };
        let kind = InsightKind::parse(&tag).ok_or_else(|| format!("`{tag}` is not one of read, correlation, comparison"))?;
        let has_condition = match v.get("has_condition") {
            Some(Value::Bool(b)) => *b,
            Some(Value::String(s)) => s.trim().eq_ignore_ascii_case("true"),
            _ => false,
        };
        return Ok(Classification { kind, has_condition });
    }
    // A bare answer naming exactly one type is accepted as well.
    let lower = raw.to_ascii_lowercase();
    let words: Vec<&str> = lower.split(|c: char| !c.is_ascii_alphabetic()).collect();
    let named: Vec<InsightKind> = InsightKind::ALL
        .iter()
        .copied()
        .filter(|k| words.contains(&k.as_str()))
        .collect();
    match named.as_slice() {
        [kind] => Ok(Classification {
            kind: *kind,
            has_condition: false,
        }),
        [] => Err("the answer names no insight type".into()),
        _ => Err("the answer names more than one insight type".into()),
    }
}

enum Checked {
    Accept(InsightDraft, Vec<SlotStatus>),
    Reject {
        reason: String,
        /// Readable document with flagged slots, kept in case no retry fixes it.
        usable: Option<(InsightDraft, Vec<SlotStatus>)>,
        flagged: Vec<SlotStatus>,
    },
}

fn check_document(raw: &str, kind: InsightKind) -> Checked {
    let reject = |reason: String| Checked::Reject {
        reason,
        usable: None,
        flagged: Vec::new(),
    };
    let document = match json_object(raw) {
        Ok(v) => v,
        Err(reason) => return reject(reason),
    };
    let tag = document.get("type").and_then(Value::as_str).unwrap_or_default();
    if tag.trim().to_ascii_lowercase() != kind.as_str() {
        return reject(format!("`type` must be \"{kind}\""));
    }
    match validate(&document) {
        Err(e) => reject(e.to_string()),
        Ok(Validation::Valid(insight)) => Checked::Accept(InsightDraft::from(&insight), Vec::new()),
        Ok(Validation::Incomplete { draft, slots }) => {
            let flagged: Vec<SlotStatus> = slots.iter().filter(|s| s.state == SlotState::Ambiguous).cloned().collect();
            if flagged.is_empty() {
                Checked::Accept(draft, slots)
            } else {
                Checked::Reject {
                    reason: format!("{} field(s) hold values outside the schema", flagged.len()),
                    usable: Some((draft, slots)),
                    flagged,
                }
            }
        }
    }
}

/// Where an interpretation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Grammar,
    Llm,
    /// The model failed and the controlled grammar parsed the text.
    GrammarFallback,
}

/// Result of turning a text into an insight by whichever route worked.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpreted {
    pub source: Source,
    pub draft: InsightDraft,
    pub insight: Option<StructuredInsight>,
    pub slots: Vec<SlotStatus>,
    pub trace: Option<ExtractionTrace>,
}

impl Interpreted {
    fn from_extraction(x: Extraction) -> Self {
        Self {
            source: Source::Llm,
            draft: x.draft,
            insight: x.insight,
            slots: x.slots,
            trace: Some(x.trace),
        }
    }

    /// The insight as a validated document (explicit nulls in open slots).
    pub fn document(&self) -> Value {
        self.draft.to_document()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpretError {
    #[error("the text is not a sentence of the controlled insight language")]
    NoParse,
    #[error(transparent)]
    Extraction(ExtractError),
}

fn grammar(text: &str, features: &[FeatureMeta]) -> Option<Interpreted> {
    let (draft, insight, slots) = match parse_with_features(text, features) {
        ParseOutcome::Insight(insight) => (InsightDraft::from(&insight), Some(insight), Vec::new()),
        ParseOutcome::Incomplete { draft, slots } => (draft, None, slots),
        ParseOutcome::NoParse => return None,
    };
    Some(Interpreted {
        source: Source::Grammar,
        draft,
        insight,
        slots,
        trace: None,
    })
}

/// Controlled grammar first; the model only for texts outside it.
pub fn interpret(text: &str, features: &[FeatureMeta], extractor: Option<&Extractor>) -> Result<Interpreted, InterpretError> {
    if let Some(parsed) = grammar(text, features) {
        return Ok(parsed);
    }
    match extractor {
        None => Err(InterpretError::NoParse),
        Some(x) => match x.extract(text, features) {
            Ok(extraction) => Ok(Interpreted::from_extraction(extraction)),
            Err(ExtractError::EmptyText) => Err(InterpretError::NoParse),
            Err(e) => Err(InterpretError::Extraction(e)),
        },
    }
}
