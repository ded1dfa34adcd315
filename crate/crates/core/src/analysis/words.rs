use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{AnalysisError, RatingRecord};

pub const DEFAULT_TOP_K: usize = 20;

/// Words too common in UI feedback to tell categories apart.
pub const DEFAULT_DROP_WORDS: &[&str] = &["interface", "guideline"];

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// The committed English stopword list.
pub fn default_stopwords() -> HashSet<String> {
    STOPWORDS.lines().map(str::trim).filter(|w| !w.is_empty()).map(str::to_string).collect()
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// A suggestion's text with one rater's ratings of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatedText {
    pub text: String,
    pub accuracy: u8,
    pub helpfulness: u8,
}

impl RatedText {
    /// Ratings that carry the suggestion text.
    pub fn from_records(records: &[RatingRecord]) -> Vec<RatedText> {
        records
            .iter()
            .filter_map(|r| {
                r.text.as_ref().map(|t| RatedText { text: t.clone(), accuracy: r.accuracy, helpfulness: r.helpfulness })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCountReport {
    pub k: usize,
    pub accurate: Vec<WordCount>,
    pub inaccurate: Vec<WordCount>,
    pub helpful: Vec<WordCount>,
    pub unhelpful: Vec<WordCount>,
    /// Top accurate words missing from the top inaccurate words, and so on.
    pub accurate_only: Vec<String>,
    pub inaccurate_only: Vec<String>,
    pub helpful_only: Vec<String>,
    pub unhelpful_only: Vec<String>,
}

fn top_k(texts: &[&str], k: usize, dropped: &HashSet<String>) -> Vec<WordCount> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        for token in tokenize(text).filter(|t| !dropped.contains(t)) {
            *counts.entry(token).or_default() += 1;
        }
    }
    let mut ranked: Vec<WordCount> = counts.into_iter().map(|(word, count)| WordCount { word, count }).collect();
    // BTreeMap order is alphabetical, and the sort is stable
    ranked.sort_by_key(|w| std::cmp::Reverse(w.count));
    ranked.truncate(k);
    ranked
}

fn only_in(a: &[WordCount], b: &[WordCount]) -> Vec<String> {
    let other: HashSet<&str> = b.iter().map(|w| w.word.as_str()).collect();
    a.iter().filter(|w| !other.contains(w.word.as_str())).map(|w| w.word.clone()).collect()
}

/// Top-`k` words for accurate (accuracy 3), inaccurate (accuracy 1), helpful
/// (helpfulness 4 or 5) and unhelpful (helpfulness 1) suggestions, after
/// removing `stopwords` and `drop_words`. Ties in count are broken
/// alphabetically. Each `*_only` list holds the words in one top list that
/// are absent from its counterpart.
pub fn word_count_analysis(
    corpus: &[RatedText],
    k: usize,
    stopwords: &HashSet<String>,
    drop_words: &[&str],
) -> Result<WordCountReport, AnalysisError> {
    if corpus.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut dropped = stopwords.clone();
    dropped.extend(drop_words.iter().map(|w| w.to_lowercase()));
    let select = |pred: &dyn Fn(&RatedText) -> bool| -> Vec<WordCount> {
        let texts: Vec<&str> = corpus.iter().filter(|r| pred(r)).map(|r| r.text.as_str()).collect();
        top_k(&texts, k, &dropped)
    };
    let accurate = select(&|r| r.accuracy == 3);
    let inaccurate = select(&|r| r.accuracy == 1);
    let helpful = select(&|r| r.helpfulness >= 4);
    let unhelpful = select(&|r| r.helpfulness == 1);
    Ok(WordCountReport {
        k,
        accurate_only: only_in(&accurate, &inaccurate),
        inaccurate_only: only_in(&inaccurate, &accurate),
        helpful_only: only_in(&helpful, &unhelpful),
        unhelpful_only: only_in(&unhelpful, &helpful),
        accurate,
        inaccurate,
        helpful,
        unhelpful,
    })
}
