use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Precision, recall and F1. A value is `None` when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub reported: u64,
    pub helpful: u64,
    pub ground_truth: u64,
}

/// `reported` violations from the evaluator, of which `helpful` are in a
/// ground-truth set of `ground_truth` violations.
pub fn precision_recall_f1(reported: u64, helpful: u64, ground_truth: u64) -> Result<MetricsReport, AnalysisError> {
    if helpful > reported {
        return Err(AnalysisError::InvalidCounts(format!("helpful ({helpful}) exceeds reported ({reported})")));
    }
    if helpful > ground_truth {
        return Err(AnalysisError::InvalidCounts(format!(
            "helpful ({helpful}) exceeds ground truth size ({ground_truth})"
        )));
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(helpful, reported);
    let recall = ratio(helpful, ground_truth);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport { precision, recall, f1, reported, helpful, ground_truth })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LlmOnly,
    Both,
    HumanOnly,
}

impl Provenance {
    pub fn parse(s: &str) -> Option<Provenance> {
        match s.trim() {
            "llm-only" => Some(Provenance::LlmOnly),
            "both" => Some(Provenance::Both),
            "human-only" => Some(Provenance::HumanOnly),
            _ => None,
        }
    }

    pub fn found_by_llm(self) -> bool {
        matches!(self, Provenance::LlmOnly | Provenance::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub id: String,
    pub provenance: Provenance,
}

/// Distinct violations found by the evaluator, by human experts, or by both.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub entries: Vec<GroundTruthEntry>,
}

impl GroundTruth {
    pub fn total(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn count(&self, provenance: Provenance) -> u64 {
        self.entries.iter().filter(|e| e.provenance == provenance).count() as u64
    }

    /// Helpful violations the evaluator found: llm-only plus both.
    pub fn llm_found(&self) -> u64 {
        self.entries.iter().filter(|e| e.provenance.found_by_llm()).count() as u64
    }

    /// Metrics for an evaluator that reported `reported` violations in total.
    pub fn metrics(&self, reported: u64) -> Result<MetricsReport, AnalysisError> {
        precision_recall_f1(reported, self.llm_found(), self.total())
    }
}

#[derive(Deserialize)]
struct GroundTruthRow {
    id: Option<String>,
    provenance: Option<String>,
}

/// Reads a CSV with columns `id,provenance`, provenance being one of
/// `llm-only`, `both`, `human-only`. Rows are numbered from 1 after the header.
pub fn load_ground_truth(reader: impl Read) -> Result<GroundTruth, AnalysisError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in csv.deserialize::<GroundTruthRow>().enumerate() {
        let row_no = i + 1;
        let schema = |message: String| AnalysisError::SchemaError { row: row_no, message };
        let row = row.map_err(|e| schema(e.to_string()))?;
        let id = row.id.filter(|s| !s.is_empty()).ok_or_else(|| schema("missing id".into()))?;
        let raw = row.provenance.unwrap_or_default();
        let provenance = Provenance::parse(&raw).ok_or_else(|| schema(format!("unknown provenance `{raw}`")))?;
        if !seen.insert(id.clone()) {
            return Err(schema(format!("duplicate id `{id}`")));
        }
        entries.push(GroundTruthEntry { id, provenance });
    }
    Ok(GroundTruth { entries })
}
