use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use proptest::prelude::*;
use serde_json::{json, Value};
use xlint_core::insight::{
    validate, Aggregator, Comparator, Direction, Facet, InsightKind, Relation, SlotState, Validation,
};
use xlint_core::synthetic::diabetes_features;
use xlint_core::StructuredInsight;
use xlint_extract::*;

const CASE_1: &str = "There is no correlation between blood pressure attributions and serum triglycerides attributions";
const CASE_2: &str = "Blood pressure contributes to increased diabetes progression in most patients";

const PARAPHRASES: [&str; 10] = [
    "Higher blood pressure pushes the prediction up for the majority of patients",
    "bp and triglyceride contributions look completely unrelated",
    "Patients with a high BMI get larger BMI contributions",
    "On average body mass index has a bigger effect than age",
    "The blood sugar attribution averages out to roughly zero",
    "More than half of the patients have a positive blood pressure contribution",
    "BMI matters when patients are older",
    "bp matters for most patients",
    "Cholesterol drives the model more than blood pressure does",
    "For older patients the triglyceride attribution rises with the triglyceride level",
];

const NEVER_JSON: &str = "the mean attribution of bmi is greater than 0";
const NEVER_TYPED: &str = "zebra quantum teapot";

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn replay() -> Extractor {
    Extractor::new(ExtractorConfig::fixture(fixture_dir())).unwrap()
}

/// The contract every successful extraction honours: the document is one the
/// validator accepts as-is, and it is complete exactly when no slot is open.
fn assert_downstream_safe(x: &Extraction) {
    let validation = validate(&x.document).expect("document readable by the validator");
    match (&validation, &x.insight) {
        (Validation::Valid(v), Some(i)) => {
            assert_eq!(v, i);
            assert!(x.slots.is_empty());
        }
        (_, None) => assert!(!x.slots.is_empty(), "incomplete document without slots"),
        (Validation::Incomplete { .. }, Some(_)) => panic!("insight emitted for an incomplete document"),
    }
    assert_eq!(x.document.get("type").and_then(Value::as_str), Some(x.classification.kind.as_str()));
}

#[test]
fn case_sentences_and_paraphrases_give_documents_or_slots() {
    let features = diabetes_features();
    let x = replay();
    for text in [CASE_1, CASE_2].iter().chain(PARAPHRASES.iter()) {
        let extraction = x.extract(text, &features).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_downstream_safe(&extraction);
    }
}

#[test]
fn correlation_case_binds_descriptions() {
    let out = replay().extract(CASE_1, &diabetes_features()).unwrap();
    assert_eq!(out.classification, Classification { kind: InsightKind::Correlation, has_condition: false });
    let Some(StructuredInsight::Correlation(c)) = out.insight else { panic!("{:?}", out.slots) };
    assert_eq!((c.x.feature.as_str(), c.x.facet), ("bp", Facet::Attribution));
    assert_eq!((c.y.feature.as_str(), c.y.facet), ("s5", Facet::Attribution));
    assert_eq!(c.direction, Direction::None);
    assert!(c.conditions.is_empty());
}

#[test]
fn most_patients_becomes_a_count_comparison() {
    let out = replay().extract(CASE_2, &diabetes_features()).unwrap();
    assert_eq!(out.classification.kind, InsightKind::Comparison);
    assert!(!out.classification.has_condition);
    let Some(StructuredInsight::Comparison(c)) = out.insight else { panic!("{:?}", out.slots) };
    assert_eq!(c.relation, Relation::Greater);
    for (side, comparator) in [(&c.left, Comparator::Gt), (&c.right, Comparator::Lt)] {
        assert_eq!(side.feature, "bp");
        assert_eq!(side.facet, Facet::Attribution);
        assert_eq!(side.aggregator, Aggregator::Count);
        let p = side.predicate.unwrap();
        assert_eq!((p.comparator, p.constant), (comparator, 0.0));
    }
    assert!(out.trace.repairs.is_empty());
}

#[test]
fn vague_constants_stay_open() {
    let out = replay().extract("BMI matters when patients are older", &diabetes_features()).unwrap();
    let paths: Vec<&str> = out.slots.iter().map(|s| s.path.as_str()).collect();
    assert_eq!(paths, ["read.threshold", "read.conditions[0].bounds"]);
    assert!(out.slots.iter().all(|s| s.state == SlotState::Missing));
    assert_eq!(out.document["conditions"][0]["feature"], "age");
    assert_eq!(out.document["threshold"], Value::Null);

    let out = replay().extract("bp matters for most patients", &diabetes_features()).unwrap();
    assert!(!out.slots.is_empty());
    assert!(out.insight.is_none());
}

#[test]
fn ambiguous_feature_offers_candidates() {
    let out = replay()
        .extract("Cholesterol drives the model more than blood pressure does", &diabetes_features())
        .unwrap();
    assert_eq!(out.slots.len(), 1);
    let slot = &out.slots[0];
    assert_eq!(slot.path, "comparison.left.feature");
    assert_eq!(slot.state, SlotState::Ambiguous);
    assert_eq!(slot.candidates.as_deref(), Some(&["s1".to_string(), "s4".to_string()][..]));
    assert_eq!(out.document["right"]["feature"], "bp");
}

#[test]
fn out_of_schema_values_are_repaired() {
    let out = replay()
        .extract("On average body mass index has a bigger effect than age", &diabetes_features())
        .unwrap();
    assert!(out.slots.is_empty());
    assert_eq!(out.trace.repairs.len(), 1);
    let repair = &out.trace.repairs[0];
    assert_eq!(repair.stage, Stage::Fill);
    assert!(repair.prompt.contains("comparison.left.aggregator"), "{}", repair.prompt);
    assert!(repair.prompt.contains("comparison.relation"), "{}", repair.prompt);

    let out = replay()
        .extract("More than half of the patients have a positive blood pressure contribution", &diabetes_features())
        .unwrap();
    let Some(StructuredInsight::Read(r)) = out.insight else { panic!() };
    assert_eq!(r.threshold, 0.5);
    assert!(out.trace.repairs[0].prompt.contains("read.threshold"));
}

#[test]
fn replay_is_byte_deterministic() {
    let features = diabetes_features();
    for text in [CASE_1, CASE_2].iter().chain(PARAPHRASES.iter()) {
        let first = replay().extract(text, &features).unwrap();
        let second = replay().extract(text, &features).unwrap();
        let stored = load_fixture(&fixture_dir(), text).unwrap();
        let a = serde_json::to_string(&first.trace).unwrap();
        assert_eq!(a, serde_json::to_string(&second.trace).unwrap());
        assert_eq!(a, serde_json::to_string(&stored.trace).unwrap(), "fixture for {text:?} is stale");
    }
}

#[test]
fn fixture_names_are_hashes_of_trimmed_text() {
    assert_eq!(fixture_key("  abc \n"), fixture_key("abc"));
    assert_eq!(fixture_key("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    for entry in std::fs::read_dir(fixture_dir()).unwrap() {
        let path = entry.unwrap().path();
        let fixture: Fixture = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(path, fixture_path(&fixture_dir(), &fixture.text));
    }
}

#[test]
fn documents_that_never_conform_are_rejected() {
    let err = replay().extract(NEVER_JSON, &diabetes_features()).unwrap_err();
    let ExtractError::SchemaViolation { attempts, trace, .. } = &err else { panic!("{err:?}") };
    assert_eq!(*attempts, 3);
    assert_eq!(trace.repairs.len(), 2);
    assert_eq!(trace.stage2.as_ref().unwrap().document, None);
}

#[test]
fn failed_extraction_falls_back_to_the_grammar() {
    let features = diabetes_features();
    let out = replay().extract_or_parse(NEVER_JSON, &features).unwrap();
    assert_eq!(out.source, Source::GrammarFallback);
    assert!(out.trace.is_some());
    let Some(StructuredInsight::Read(r)) = &out.insight else { panic!() };
    assert_eq!(r.variable.feature, "bmi");
    assert!(matches!(validate(&out.document()), Ok(Validation::Valid(_))));

    let err = replay().extract_or_parse(NEVER_TYPED, &features).unwrap_err();
    assert!(matches!(err, InterpretError::Extraction(ExtractError::UnparseableClassification { attempts: 3, .. })));
}

#[test]
fn classification_gives_up_after_the_retry_cap() {
    let config = ExtractorConfig { max_repair_retries: 1, ..ExtractorConfig::fixture(fixture_dir()) };
    let err = Extractor::new(config).unwrap().classify(NEVER_TYPED, &diabetes_features()).unwrap_err();
    let ExtractError::UnparseableClassification { attempts, trace } = err else { panic!() };
    assert_eq!(attempts, 2);
    assert_eq!(trace.repairs.len(), 1);
    assert_eq!(trace.stage1.classified_type, None);
}

#[test]
fn classification_replays_identically() {
    let x = replay();
    let a = x.classify(CASE_2, &diabetes_features()).unwrap();
    let b = x.classify(CASE_2, &diabetes_features()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, Classification { kind: InsightKind::Comparison, has_condition: false });
}

#[test]
fn stage_two_runs_on_its_own() {
    let c = Classification { kind: InsightKind::Correlation, has_condition: false };
    let out = replay().fill_template(CASE_1, c, &diabetes_features()).unwrap();
    assert!(out.insight.is_some());
}

#[test]
fn missing_fixture_is_a_provider_error() {
    let err = replay().extract("nothing was recorded for this", &diabetes_features()).unwrap_err();
    assert!(matches!(err, ExtractError::ProviderUnavailable { source: ProviderError::MissingFixture(_), .. }));
    assert_eq!(replay().extract("   ", &diabetes_features()), Err(ExtractError::EmptyText));
}

#[test]
fn grammar_sentences_never_reach_the_model() {
    let client = Arc::new(ScriptedClient::new(["should not be used"]));
    let x = Extractor::with_client(ExtractorConfig::default(), client.clone()).unwrap();
    let out = interpret("the mean attribution of bmi is greater than 0", &diabetes_features(), Some(&x)).unwrap();
    assert_eq!(out.source, Source::Grammar);
    assert_eq!(client.remaining(), 1);
    assert_eq!(interpret(NEVER_TYPED, &diabetes_features(), None), Err(InterpretError::NoParse));
}

#[test]
fn recording_writes_replayable_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let responses = [
        json!({"type": "read", "has_condition": false}).to_string(),
        json!({"type": "read", "variable": {"feature": "age", "facet": "attribution", "aggregator": "max"},
               "comparator": "<", "threshold": 1}).to_string(),
    ];
    let text = "age never contributes much";
    let config = ExtractorConfig { record_dir: Some(dir.path().into()), ..ExtractorConfig::default() };
    let live = Extractor::with_client(config, Arc::new(ScriptedClient::new(responses))).unwrap();
    let recorded = live.extract(text, &diabetes_features()).unwrap();
    let replayed = Extractor::new(ExtractorConfig::fixture(dir.path())).unwrap().extract(text, &diabetes_features()).unwrap();
    assert_eq!(recorded, replayed);
}

/// Records every request it sees and answers from a script.
struct Capturing {
    script: ScriptedClient,
    seen: Mutex<Vec<Vec<Message>>>,
}

impl ChatClient for Capturing {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError> {
        self.seen.lock().unwrap().push(messages.to_vec());
        self.script.complete(messages)
    }
}

#[test]
fn prompts_carry_instructions_features_and_repair_context() {
    let client = Arc::new(Capturing {
        script: ScriptedClient::new([
            "It is a correlation.".to_string(),
            json!({"type": "correlation", "x": {"feature": "bmi", "facet": "value", "aggregator": "identity"},
                   "y": {"feature": "bmi", "facet": "attribution", "aggregator": "identity"},
                   "direction": "upward"}).to_string(),
            json!({"type": "correlation", "x": {"feature": "bmi", "facet": "value", "aggregator": "identity"},
                   "y": {"feature": "bmi", "facet": "attribution", "aggregator": "identity"},
                   "direction": "positive"}).to_string(),
        ]),
        seen: Mutex::new(Vec::new()),
    });
    let x = Extractor::with_client(ExtractorConfig::default(), client.clone()).unwrap();
    let out = x.extract("heavier patients get pushed up by bmi", &diabetes_features()).unwrap();
    assert!(out.insight.is_some());

    let seen = client.seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let classify = &seen[0];
    assert_eq!(classify[0].role, "system");
    assert!(classify[0].content.contains("JSON"));
    assert!(classify[1].content.contains("Think step by step"));
    assert!(classify[1].content.contains("s5 (quantitative): log of serum triglycerides level"));
    let repair = &seen[2];
    assert_eq!(repair.len(), 4);
    assert_eq!(repair[2].role, "assistant");
    assert!(repair[3].content.contains("correlation.direction"));
    assert!(repair[3].content.contains("positive, negative, none"));
}

#[test]
fn config_invariants() {
    let no_dir = ExtractorConfig { mode: Mode::Fixture, ..ExtractorConfig::default() };
    assert_eq!(Extractor::new(no_dir).unwrap_err(), ConfigError::MissingFixtureDir);
    let hot = ExtractorConfig { temperature: 2.5, ..ExtractorConfig::default() };
    assert_eq!(hot.check(), Err(ConfigError::Temperature(2.5)));
    assert_eq!(ExtractorConfig::default().temperature, 0.0);
    assert_eq!(ExtractorConfig::default().max_repair_retries, 2);

    let env = |pairs: &'static [(&'static str, &'static str)]| {
        move |name: &str| pairs.iter().find(|(k, _)| *k == name).map(|(_, v)| v.to_string())
    };
    let c = ExtractorConfig::from_lookup(env(&[("XLINT_LLM_MODE", "fixture"), ("XLINT_LLM_FIXTURES", "/tmp/f"), ("XLINT_LLM_RETRIES", "4")])).unwrap();
    assert_eq!((c.mode, c.max_repair_retries), (Mode::Fixture, 4));
    assert_eq!(c.fixture_dir, Some(PathBuf::from("/tmp/f")));
    assert!(ExtractorConfig::from_lookup(env(&[("XLINT_LLM_MODE", "fixture")])).is_err());
    assert!(ExtractorConfig::from_lookup(env(&[("XLINT_LLM_TEMPERATURE", "warm")])).is_err());
}

/// One-shot HTTP server answering a chat-completion request.
fn serve_once(status: u16, body: Value) -> (String, std::thread::JoinHandle<Value>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut length = 0;
        let mut auth = String::new();
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let lower = line.to_ascii_lowercase();
            if let Some(v) = lower.strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            if lower.starts_with("authorization:") {
                auth = line.trim().to_string();
            }
            if line == "\r\n" {
                break;
            }
        }
        let mut buf = vec![0; length];
        reader.read_exact(&mut buf).unwrap();
        let payload = body.to_string();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
            payload.len()
        )
        .unwrap();
        let mut request: Value = serde_json::from_slice(&buf).unwrap();
        request["_auth"] = json!(auth);
        request
    });
    (url, handle)
}

#[test]
fn http_client_speaks_the_chat_completion_shape() {
    std::env::set_var("XLINT_TEST_KEY_OK", "secret");
    let (url, server) = serve_once(200, json!({"choices": [{"message": {"role": "assistant", "content": "{\"type\": \"read\"}"}}]}));
    let config = ExtractorConfig {
        provider_endpoint: url,
        model_name: "test-model".into(),
        api_key_env: "XLINT_TEST_KEY_OK".into(),
        ..ExtractorConfig::default()
    };
    let client = HttpChatClient::new(&config);
    let answer = client.complete(&[Message::system("s"), Message::user("u")]).unwrap();
    assert_eq!(answer, "{\"type\": \"read\"}");
    let request = server.join().unwrap();
    assert_eq!(request["model"], "test-model");
    assert_eq!(request["temperature"], 0.0);
    assert_eq!(request["messages"][1], json!({"role": "user", "content": "u"}));
    assert_eq!(request["_auth"], "Authorization: Bearer secret");
}

#[test]
fn http_errors_are_provider_errors() {
    std::env::set_var("XLINT_TEST_KEY_ERR", "secret");
    let (url, server) = serve_once(503, json!({"error": "overloaded"}));
    let config = ExtractorConfig {
        provider_endpoint: url,
        api_key_env: "XLINT_TEST_KEY_ERR".into(),
        ..ExtractorConfig::default()
    };
    let x = Extractor::new(config).unwrap();
    let err = x.extract("anything at all", &diabetes_features()).unwrap_err();
    assert!(matches!(err, ExtractError::ProviderUnavailable { source: ProviderError::Status { status: 503, .. }, .. }));
    server.join().unwrap();

    let missing = ExtractorConfig { api_key_env: "XLINT_TEST_KEY_UNSET".into(), ..ExtractorConfig::default() };
    let err = HttpChatClient::new(&missing).complete(&[]).unwrap_err();
    assert_eq!(err, ProviderError::MissingApiKey("XLINT_TEST_KEY_UNSET".into()));
}

fn answer() -> impl Strategy<Value = String> {
    let fragments = prop_oneof![
        Just("{\"type\": \"read\", \"has_condition\": false}".to_string()),
        Just("{\"type\": \"comparison\"}".to_string()),
        Just("{\"type\": \"correlation\", \"x\": {\"feature\": \"bp\", \"facet\": \"attribution\", \"aggregator\": \"identity\"}, \"y\": {\"feature\": \"s5\", \"facet\": \"attribution\", \"aggregator\": \"identity\"}, \"direction\": \"none\"}".to_string()),
        Just("{\"type\": \"read\", \"variable\": {\"feature\": \"bmi\", \"facet\": \"value\", \"aggregator\": \"mean\"}, \"comparator\": \">\", \"threshold\": \"big\"}".to_string()),
        Just("{\"type\": \"read\", \"variable\": {\"feature\": \"lipoproteins\", \"facet\": \"attribution\", \"aggregator\": \"count\"}, \"comparator\": \"<\", \"threshold\": 3, \"conditions\": [{\"feature\": \"sex\", \"op\": \"in-range\", \"bounds\": \"2\"}]}".to_string()),
        Just("{\"type\": \"comparison\", \"left\": {\"feature\": \"age\", \"facet\": \"value\", \"aggregator\": \"max\"}, \"right\": {\"feature\": \"age\", \"facet\": \"value\", \"aggregator\": \"max\"}, \"relation\": \"less\"}".to_string()),
        Just("[1, 2, 3]".to_string()),
        ".{0,40}",
    ];
    prop::collection::vec(fragments, 1..4).prop_map(|parts| parts.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Whatever the model says, nothing unvalidated leaves the extractor.
    #[test]
    fn arbitrary_answers_never_leak_unvalidated_documents(answers in prop::collection::vec(answer(), 0..7)) {
        let x = Extractor::with_client(ExtractorConfig::default(), Arc::new(ScriptedClient::new(answers))).unwrap();
        if let Ok(out) = x.extract("some observation", &diabetes_features()) {
            assert_downstream_safe(&out);
        }
    }
}
