//! `xlint check`: batch checking of insights against a table.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use xlint_core::attribution::load_table;
use xlint_core::evaluate::{Outcome, Verdict};
use xlint_core::insight::SlotStatus;
use xlint_core::mapper::RuleId;
use xlint_core::vis::VisSpec;
use xlint_core::{Table, TableFormat};
use xlint_extract::{interpret, settle_document, Extractor, InterpretError};

use crate::check::check;

pub const EXIT_SUPPORTED: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_UNRESOLVED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Result for one input line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum LineReport {
    Checked {
        line: usize,
        text: String,
        verdict: Verdict,
        rule_id: RuleId,
    },
    OpenSlots {
        line: usize,
        text: String,
        slots: Vec<SlotStatus>,
    },
    Failed {
        line: usize,
        text: String,
        message: String,
    },
}

impl LineReport {
    /// Undetermined verdicts, parse failures and open slots outrank refuted
    /// ones, which outrank supported ones.
    fn exit_code(&self) -> i32 {
        match self {
            LineReport::Checked { verdict, .. } => match verdict.outcome {
                Outcome::Supported => EXIT_SUPPORTED,
                Outcome::Refuted => EXIT_REFUTED,
                Outcome::Undetermined => EXIT_UNRESOLVED,
            },
            _ => EXIT_UNRESOLVED,
        }
    }

    pub fn human(&self) -> String {
        match self {
            LineReport::Checked { line, text, verdict, .. } => {
                let outcome = serde_json::to_value(verdict.outcome).unwrap();
                let mut out = format!("{line}: {} {text} [{}]", outcome.as_str().unwrap_or("?"), verdict.evidence);
                if let Some(reason) = &verdict.reason {
                    let _ = write!(out, " ({reason})");
                }
                out
            }
            LineReport::OpenSlots { line, text, slots } => {
                let paths: Vec<&str> = slots.iter().map(|s| s.path.as_str()).collect();
                format!("{line}: incomplete {text} [open: {}]", paths.join(", "))
            }
            LineReport::Failed { line, text, message } => format!("{line}: error {text} [{message}]"),
        }
    }
}

pub fn exit_code(reports: &[LineReport]) -> i32 {
    let codes = reports.iter().map(LineReport::exit_code);
    if codes.clone().any(|c| c == EXIT_UNRESOLVED) {
        EXIT_UNRESOLVED
    } else {
        codes.max().unwrap_or(EXIT_SUPPORTED)
    }
}

pub fn read_table(path: &Path) -> io::Result<Table> {
    let bytes = fs::read(path)?;
    let format = TableFormat::detect(path.to_str(), &bytes);
    load_table(&bytes[..], format).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Reads `path`, or standard input for `-`.
pub fn read_input(path: &Path) -> io::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path)
    }
}

pub struct CheckOptions<'a> {
    pub spec: VisSpec,
    pub extractor: Option<&'a Extractor>,
    pub out_specs: Option<PathBuf>,
}

fn check_line(line: usize, text: &str, table: &Table, options: &CheckOptions<'_>) -> io::Result<LineReport> {
    let features = table.features();
    let failed = |message: String| LineReport::Failed {
        line,
        text: text.to_string(),
        message,
    };
    let settled = if text.starts_with('{') {
        serde_json::from_str::<Value>(text)
            .map_err(|e| e.to_string())
            .and_then(|doc| settle_document(&doc, features).map_err(|e| e.to_string()))
            .map(|(_, insight, slots)| (insight, slots))
    } else {
        match interpret(text, features, options.extractor) {
            Ok(i) => Ok((i.insight, i.slots)),
            Err(InterpretError::NoParse) => Err("not a sentence of the controlled insight language".to_string()),
            Err(InterpretError::Extraction(e)) => Err(e.to_string()),
        }
    };
    let insight = match settled {
        Err(message) => return Ok(failed(message)),
        Ok((Some(insight), _)) => insight,
        Ok((None, slots)) => {
            return Ok(LineReport::OpenSlots {
                line,
                text: text.to_string(),
                slots,
            })
        }
    };
    let result = match check(&insight, table, &options.spec) {
        Ok(r) => r,
        Err(crate::check::CheckError::Unbound(slots)) => {
            return Ok(LineReport::OpenSlots {
                line,
                text: text.to_string(),
                slots,
            })
        }
        Err(e) => return Ok(failed(e.to_string())),
    };
    if let Some(dir) = &options.out_specs {
        let write = |name: String, view: &Value| {
            let mut bytes = serde_json::to_vec_pretty(view).expect("views serialize");
            bytes.push(b'\n');
            fs::write(dir.join(name), bytes)
        };
        write(format!("{line:03}-annotated.vl.json"), &result.views.annotated)?;
        if let Some(view) = &result.views.recommended {
            write(format!("{line:03}-recommended.vl.json"), view)?;
        }
    }
    Ok(LineReport::Checked {
        line,
        text: text.to_string(),
        verdict: result.verdict,
        rule_id: result.mapping.rule_id,
    })
}

/// Checks every non-blank line that is not a `#` comment. Lines are
/// sentences or insight JSON documents.
pub fn check_lines(input: &str, table: &Table, options: &CheckOptions<'_>) -> io::Result<Vec<LineReport>> {
    if let Some(dir) = &options.out_specs {
        fs::create_dir_all(dir)?;
    }
    input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, text)| check_line(line, text, table, options))
        .collect()
}
