//! CSV and JSON encodings of an [`ExplanationTable`].
//!
//! CSV layout:
//!
//! ```text
//! # base_value=152.13
//! id,f:age,f:bmi,attr:age,attr:bmi,prediction
//! p1,0.03,0.06,1.2,-4.5,148.8
//! ```
//!
//! The metadata line is optional (base value 0 when absent). A feature column
//! whose every cell parses as a number is quantitative, otherwise categorical.

use std::collections::BTreeMap;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::table::{ExplanationTable, FeatureKind, FeatureMeta, FeatureValue, Row};
use super::TableError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, TableError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(TableError::MalformedInput(format!("unknown table format `{other}`"))),
        }
    }
}

impl TableFormat {
    /// Guess from a file name, falling back to sniffing the first byte.
    pub fn detect(name: Option<&str>, bytes: &[u8]) -> TableFormat {
        if let Some(ext) = name.and_then(|n| n.rsplit_once('.')).map(|(_, e)| e.to_ascii_lowercase()) {
            match ext.as_str() {
                "json" => return TableFormat::Json,
                "csv" => return TableFormat::Csv,
                _ => {}
            }
        }
        match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
            Some(b'{') => TableFormat::Json,
            _ => TableFormat::Csv,
        }
    }
}

/// Reads and validates a table.
pub fn load_table<T: Scalar, R: Read>(mut source: R, format: TableFormat) -> Result<ExplanationTable<T>, TableError> {
    let mut bytes = Vec::new();
    source
        .read_to_end(&mut bytes)
        .map_err(|e| TableError::MalformedInput(format!("read failed: {e}")))?;
    let text = String::from_utf8(bytes).map_err(|_| TableError::MalformedInput("input is not UTF-8".into()))?;
    match format {
        TableFormat::Csv => parse_csv(&text),
        TableFormat::Json => parse_json(&text),
    }
}

pub fn parse_json<T: Scalar>(text: &str) -> Result<ExplanationTable<T>, TableError> {
    if text.trim().is_empty() {
        return Err(TableError::EmptyTable);
    }
    serde_json::from_str(text).map_err(|e| {
        // serde wraps the TryFrom error in its message; recover the typed ones.
        let message = e.to_string();
        if message.starts_with("table has no rows") {
            TableError::EmptyTable
        } else if let Some(id) = message.strip_prefix("duplicate row id `") {
            TableError::DuplicateRowId(id.split('`').next().unwrap_or_default().to_string())
        } else {
            TableError::MalformedInput(message)
        }
    })
}

enum Column {
    Id,
    Prediction,
    Value(String),
    Attribution(String),
}

pub fn parse_csv<T: Scalar>(text: &str) -> Result<ExplanationTable<T>, TableError> {
    let mut base_value = T::zero();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(meta) = trimmed.strip_prefix('#') {
            let (key, value) = meta
                .split_once('=')
                .ok_or_else(|| TableError::MalformedInput(format!("bad metadata line `{trimmed}`")))?;
            if key.trim() != "base_value" {
                return Err(TableError::MalformedInput(format!("unknown metadata key `{}`", key.trim())));
            }
            base_value = parse_number(value.trim())
                .ok_or_else(|| TableError::MalformedInput(format!("base_value `{}` is not a number", value.trim())))?;
            body_start += line.len();
        } else if trimmed.is_empty() {
            body_start += line.len();
        } else {
            break;
        }
    }
    let body = &text[body_start..];
    if body.trim().is_empty() {
        return Err(TableError::EmptyTable);
    }

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| TableError::MalformedInput(e.to_string()))?
        .clone();

    let mut columns = Vec::with_capacity(header.len());
    let mut value_names = Vec::new();
    let mut attribution_names = Vec::new();
    for name in header.iter() {
        let column = if name == "id" {
            Column::Id
        } else if name == "prediction" {
            Column::Prediction
        } else if let Some(f) = name.strip_prefix("f:") {
            value_names.push(f.to_string());
            Column::Value(f.to_string())
        } else if let Some(f) = name.strip_prefix("attr:") {
            attribution_names.push(f.to_string());
            Column::Attribution(f.to_string())
        } else {
            return Err(TableError::MalformedInput(format!("unexpected column `{name}`")));
        };
        columns.push(column);
    }
    for required in ["id", "prediction"] {
        if !header.iter().any(|h| h == required) {
            return Err(TableError::MalformedInput(format!("missing `{required}` column")));
        }
    }
    for f in &value_names {
        if !attribution_names.contains(f) {
            return Err(TableError::MalformedInput(format!("missing `attr:{f}` column")));
        }
    }
    for f in &attribution_names {
        if !value_names.contains(f) {
            return Err(TableError::MalformedInput(format!("missing `f:{f}` column")));
        }
    }

    let mut raw_rows: Vec<(String, BTreeMap<String, String>, BTreeMap<String, T>, T)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| TableError::MalformedInput(e.to_string()))?;
        let mut id = String::new();
        let mut prediction = None;
        let mut values = BTreeMap::new();
        let mut attributions = BTreeMap::new();
        for (column, cell) in columns.iter().zip(record.iter()) {
            if cell.is_empty() {
                return Err(TableError::MalformedInput(format!("empty cell in data row {}", line + 1)));
            }
            match column {
                Column::Id => id = cell.to_string(),
                Column::Prediction => {
                    prediction = Some(parse_number(cell).ok_or_else(|| {
                        TableError::MalformedInput(format!("prediction `{cell}` is not numeric"))
                    })?)
                }
                Column::Value(f) => {
                    values.insert(f.clone(), cell.to_string());
                }
                Column::Attribution(f) => {
                    let a = parse_number(cell).ok_or_else(|| {
                        TableError::MalformedInput(format!("attribution `{cell}` for `{f}` is not numeric"))
                    })?;
                    attributions.insert(f.clone(), a);
                }
            }
        }
        let prediction = prediction.ok_or_else(|| TableError::MalformedInput("missing prediction".into()))?;
        raw_rows.push((id, values, attributions, prediction));
    }
    if raw_rows.is_empty() {
        return Err(TableError::EmptyTable);
    }

    let features: Vec<FeatureMeta> = value_names
        .iter()
        .map(|name| {
            let numeric = raw_rows.iter().all(|(_, v, _, _)| parse_number::<T>(&v[name]).is_some());
            if numeric {
                FeatureMeta::quantitative(name.clone())
            } else {
                FeatureMeta::categorical(name.clone())
            }
        })
        .collect();

    let rows = raw_rows
        .into_iter()
        .map(|(id, raw_values, attributions, prediction)| {
            let values = features
                .iter()
                .map(|f| {
                    let cell = &raw_values[&f.name];
                    let value = match f.kind {
                        FeatureKind::Quantitative => FeatureValue::Number(parse_number(cell).unwrap_or_else(T::nan)),
                        FeatureKind::Categorical => FeatureValue::Category(cell.clone()),
                    };
                    (f.name.clone(), value)
                })
                .collect();
            Row {
                id,
                values,
                attributions,
                prediction,
            }
        })
        .collect();

    ExplanationTable::new(features, base_value, rows)
}

fn parse_number<T: Scalar>(text: &str) -> Option<T> {
    text.parse::<T>().ok().filter(|x| x.is_finite())
}

/// CSV text in the layout [`parse_csv`] reads. Units and descriptions are not
/// representable in CSV and are dropped.
pub fn to_csv<T: Scalar>(table: &ExplanationTable<T>) -> String {
    let mut out = format!("# base_value={}\n", table.base_value());
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend(table.features().iter().map(|f| format!("f:{}", f.name)));
    header.extend(table.features().iter().map(|f| format!("attr:{}", f.name)));
    header.push("prediction".into());
    writer.write_record(&header).expect("in-memory write");
    for row in table.rows() {
        let mut record = vec![row.id.clone()];
        for f in table.features() {
            record.push(match &row.values[&f.name] {
                FeatureValue::Number(x) => x.to_string(),
                FeatureValue::Category(c) => c.clone(),
            });
        }
        for f in table.features() {
            record.push(row.attributions[&f.name].to_string());
        }
        record.push(row.prediction.to_string());
        writer.write_record(&record).expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    out.push_str(&String::from_utf8(bytes).expect("csv writer emits UTF-8"));
    out
}

pub fn to_json<T: Scalar>(table: &ExplanationTable<T>) -> String {
    serde_json::to_string_pretty(table).expect("table serializes")
}
