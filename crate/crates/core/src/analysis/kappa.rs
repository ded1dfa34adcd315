use std::collections::BTreeMap;

use super::{AnalysisError, Dimension, RatingRecord};

/// Fleiss' kappa for `table[item][category]` rating counts with `n` raters
/// per item. `Ok(None)` when expected agreement is 1 (every rating falls in
/// one category), where kappa is undefined.
pub fn fleiss_kappa(table: &[Vec<u64>], n: u64) -> Result<Option<f64>, AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::TooFewRaters(n));
    }
    if table.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let k = table[0].len();
    for (i, row) in table.iter().enumerate() {
        let sum: u64 = row.iter().sum();
        if row.len() != k || sum != n {
            return Err(AnalysisError::RowSumMismatch { row: i + 1, expected: n, got: sum });
        }
    }
    let items = table.len() as f64;
    let nf = n as f64;
    let mut column = vec![0u64; k];
    let mut p_bar = 0.0;
    for row in table {
        for (c, &x) in column.iter_mut().zip(row) {
            *c += x;
        }
        let agreeing: u64 = row.iter().map(|&x| x * x).sum::<u64>() - n;
        p_bar += agreeing as f64 / (nf * (nf - 1.0));
    }
    p_bar /= items;
    let total = items * nf;
    let p_e: f64 = column.iter().map(|&c| (c as f64 / total).powi(2)).sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Ok(None);
    }
    Ok(Some((p_bar - p_e) / (1.0 - p_e)))
}

/// Items-by-levels count table from ratings, one row per suggestion id (in id
/// order). Every suggestion must have the same number of ratings.
pub fn kappa_table(records: &[RatingRecord], dimension: Dimension) -> Result<(Vec<Vec<u64>>, u64), AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let levels = dimension.levels();
    let mut rows: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let level = dimension.value(r);
        if !levels.contains(&level) {
            return Err(AnalysisError::SchemaError { row: i + 1, message: format!("rating {level} is off the scale") });
        }
        let row = rows.entry(r.suggestion_id.as_str()).or_insert_with(|| vec![0; levels.len()]);
        row[(level - levels[0]) as usize] += 1;
    }
    let table: Vec<Vec<u64>> = rows.into_values().collect();
    let n: u64 = table[0].iter().sum();
    for (i, row) in table.iter().enumerate() {
        let got: u64 = row.iter().sum();
        if got != n {
            return Err(AnalysisError::RowSumMismatch { row: i + 1, expected: n, got });
        }
    }
    Ok((table, n))
}
