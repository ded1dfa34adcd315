use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// One rater's judgement of one suggestion. Accuracy is 1 (not accurate),
/// 2 (partially accurate) or 3 (accurate); helpfulness is 1-5.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub suggestion_id: String,
    pub rater_id: String,
    pub accuracy: u8,
    pub helpfulness: u8,
    #[serde(default)]
    pub explanation: String,
    /// The suggestion text, used by the word-count analysis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guideline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Accuracy,
    Helpfulness,
}

impl Dimension {
    pub fn levels(self) -> &'static [u8] {
        match self {
            Dimension::Accuracy => &[1, 2, 3],
            Dimension::Helpfulness => &[1, 2, 3, 4, 5],
        }
    }

    pub fn value(self, r: &RatingRecord) -> u8 {
        match self {
            Dimension::Accuracy => r.accuracy,
            Dimension::Helpfulness => r.helpfulness,
        }
    }

    pub fn parse(s: &str) -> Option<Dimension> {
        match s.trim().to_ascii_lowercase().as_str() {
            "accuracy" => Some(Dimension::Accuracy),
            "helpfulness" => Some(Dimension::Helpfulness),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingFormat {
    Csv,
    Jsonl,
}

impl RatingFormat {
    /// `.jsonl` / `.ndjson` files are JSON lines; anything else is CSV.
    pub fn from_path(path: &Path) -> RatingFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => RatingFormat::Jsonl,
            _ => RatingFormat::Csv,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct RawRow {
    suggestion_id: Option<String>,
    rater_id: Option<String>,
    accuracy: Option<String>,
    helpfulness: Option<String>,
    explanation: Option<String>,
    text: Option<String>,
    guideline: Option<String>,
    round: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.is_empty())
}

fn validate(row: RawRow, row_no: usize) -> Result<RatingRecord, AnalysisError> {
    let schema = |message: String| AnalysisError::SchemaError { row: row_no, message };
    let required = |v: Option<String>, col: &str| non_empty(v).ok_or_else(|| schema(format!("missing {col}")));
    let scale = |v: Option<String>, col: &str, max: u8| -> Result<u8, AnalysisError> {
        let raw = required(v, col)?;
        match raw.trim().parse::<u8>() {
            Ok(x) if (1..=max).contains(&x) => Ok(x),
            _ => Err(schema(format!("{col} must be an integer from 1 to {max}, got `{raw}`"))),
        }
    };
    let round = match non_empty(row.round) {
        Some(r) => Some(r.trim().parse::<u32>().map_err(|_| schema(format!("round must be an integer, got `{r}`")))?),
        None => None,
    };
    Ok(RatingRecord {
        suggestion_id: required(row.suggestion_id, "suggestion_id")?,
        rater_id: required(row.rater_id, "rater_id")?,
        accuracy: scale(row.accuracy, "accuracy", 3)?,
        helpfulness: scale(row.helpfulness, "helpfulness", 5)?,
        explanation: row.explanation.unwrap_or_default(),
        text: non_empty(row.text),
        guideline: non_empty(row.guideline),
        round,
    })
}

// JSON values may be numbers or strings; normalize to the CSV shape
fn json_row(value: serde_json::Value) -> Result<RawRow, String> {
    let serde_json::Value::Object(map) = value else {
        return Err("expected a JSON object".into());
    };
    let field = |k: &str| -> Result<Option<String>, String> {
        match map.get(k) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
            Some(serde_json::Value::Number(n)) => Ok(Some(n.to_string())),
            Some(other) => Err(format!("{k} has unsupported value {other}")),
        }
    };
    Ok(RawRow {
        suggestion_id: field("suggestion_id")?,
        rater_id: field("rater_id")?,
        accuracy: field("accuracy")?,
        helpfulness: field("helpfulness")?,
        explanation: field("explanation")?,
        text: field("text")?,
        guideline: field("guideline")?,
        round: field("round")?,
    })
}

/// Reads ratings. CSV needs a header naming `suggestion_id, rater_id,
/// accuracy, helpfulness, explanation` and optionally `text, guideline,
/// round`; JSON lines use the same keys. Empty optional values read as absent.
/// Rows are numbered from 1, not counting the CSV header or blank lines.
pub fn load_ratings(reader: impl Read, format: RatingFormat) -> Result<Vec<RatingRecord>, AnalysisError> {
    let mut out = Vec::new();
    match format {
        RatingFormat::Csv => {
            let mut csv = csv::ReaderBuilder::new().from_reader(reader);
            for (i, row) in csv.deserialize::<RawRow>().enumerate() {
                let row = row.map_err(|e| AnalysisError::SchemaError { row: i + 1, message: e.to_string() })?;
                out.push(validate(row, i + 1)?);
            }
        }
        RatingFormat::Jsonl => {
            let mut row_no = 0;
            for line in BufReader::new(reader).lines() {
                let line = line.map_err(|e| AnalysisError::SchemaError { row: row_no + 1, message: e.to_string() })?;
                if line.trim().is_empty() {
                    continue;
                }
                row_no += 1;
                let schema = |message: String| AnalysisError::SchemaError { row: row_no, message };
                let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
                out.push(validate(json_row(value).map_err(schema)?, row_no)?);
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suggestion_id: &'a str,
    rater_id: &'a str,
    accuracy: u8,
    helpfulness: u8,
    explanation: &'a str,
    text: &'a str,
    guideline: &'a str,
    round: Option<u32>,
}

/// Writes ratings in the format read by [`load_ratings`].
pub fn write_ratings(records: &[RatingRecord], format: RatingFormat) -> String {
    match format {
        RatingFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in records {
                w.serialize(CsvRow {
                    suggestion_id: &r.suggestion_id,
                    rater_id: &r.rater_id,
                    accuracy: r.accuracy,
                    helpfulness: r.helpfulness,
                    explanation: &r.explanation,
                    text: r.text.as_deref().unwrap_or(""),
                    guideline: r.guideline.as_deref().unwrap_or(""),
                    round: r.round,
                })
                .expect("writing to memory");
            }
            if records.is_empty() {
                w.write_record(["suggestion_id", "rater_id", "accuracy", "helpfulness", "explanation"])
                    .expect("writing to memory");
            }
            String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
        }
        RatingFormat::Jsonl => records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect(),
    }
}

/// Counts and percentages per scale level. Percentages have one decimal and
/// always sum to exactly 100 (largest-remainder rounding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Buckets {
    pub total: usize,
    pub counts: BTreeMap<u8, usize>,
    pub percent: BTreeMap<u8, f64>,
}

impl Buckets {
    fn new(levels: &[u8], values: impl Iterator<Item = u8>) -> Buckets {
        let mut counts: BTreeMap<u8, usize> = levels.iter().map(|&l| (l, 0)).collect();
        for v in values {
            *counts.entry(v).or_default() += 1;
        }
        let total: usize = counts.values().sum();
        let mut percent = BTreeMap::new();
        if total > 0 {
            // tenths of a percent
            let mut tenths: Vec<(u8, usize, usize)> =
                counts.iter().map(|(&l, &c)| (l, c * 1000 / total, c * 1000 % total)).collect();
            let assigned: usize = tenths.iter().map(|t| t.1).sum();
            let mut order: Vec<usize> = (0..tenths.len()).collect();
            order.sort_by(|&a, &b| tenths[b].2.cmp(&tenths[a].2).then(tenths[a].0.cmp(&tenths[b].0)));
            for &i in order.iter().take(1000 - assigned) {
                tenths[i].1 += 1;
            }
            percent = tenths.into_iter().map(|(l, t, _)| (l, t as f64 / 10.0)).collect();
        }
        Buckets { total, counts, percent }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub dimension: Dimension,
    pub overall: Buckets,
    pub by_guideline: BTreeMap<String, Buckets>,
    pub by_round: BTreeMap<u32, Buckets>,
}

/// Rating distribution for one dimension, overall and broken down by the
/// guideline and round recorded on each rating (records without one are
/// left out of that breakdown).
pub fn rating_distribution(records: &[RatingRecord], dimension: Dimension) -> Result<Distribution, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let levels = dimension.levels();
    let overall = Buckets::new(levels, records.iter().map(|r| dimension.value(r)));
    let mut guidelines: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut rounds: BTreeMap<u32, Vec<u8>> = BTreeMap::new();
    for r in records {
        if let Some(g) = &r.guideline {
            guidelines.entry(g.clone()).or_default().push(dimension.value(r));
        }
        if let Some(n) = r.round {
            rounds.entry(n).or_default().push(dimension.value(r));
        }
    }
    Ok(Distribution {
        dimension,
        overall,
        by_guideline: guidelines.into_iter().map(|(k, v)| (k, Buckets::new(levels, v.into_iter()))).collect(),
        by_round: rounds.into_iter().map(|(k, v)| (k, Buckets::new(levels, v.into_iter()))).collect(),
    })
}
