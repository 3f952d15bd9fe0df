//! Rank statistics: Spearman correlation, quartile summaries, rank curves.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::RepoRecord;
use crate::error::{Error, Result};

/// Spearman rank correlation with tie bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub n: usize,
    /// Number of tied groups (2+ equal values) in the first input.
    pub tie_groups_x: usize,
    pub tie_groups_y: usize,
}

/// Fractional ("average") ranks, 1-based. Ties share the mean of the rank
/// positions they occupy: `[10, 20, 20, 30]` → `[1.0, 2.5, 2.5, 4.0]`.
/// Returns the ranks and the number of tied groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, usize) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-finite value"));
    let mut ranks = vec![0.0; n];
    let mut tie_groups = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        if j > i {
            tie_groups += 1;
        }
        // positions i..=j (0-based) hold equal values; average their 1-based ranks
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    (ranks, tie_groups)
}

/// Spearman rank correlation: Pearson correlation of fractional ranks.
///
/// Handles ties correctly (the `1 − 6Σd²/(n(n²−1))` shortcut does not).
/// Errors: length mismatch or n < 2 → validation; a constant input leaves
/// the correlation undefined.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "spearman inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Validation(format!(
            "spearman needs at least 2 paired observations, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation(
            "spearman input contains a non-finite value".to_string(),
        ));
    }
    let (rx, tie_groups_x) = average_ranks(x);
    let (ry, tie_groups_y) = average_ranks(y);
    let rho = pearson(&rx, &ry)?;
    Ok(CorrelationResult {
        rho: rho.clamp(-1.0, 1.0),
        n: x.len(),
        tie_groups_x,
        tie_groups_y,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "an input is constant, so ranks have zero variance".to_string(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Five-number summary for one group of values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuartileSummary {
    pub group_key: String,
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-group quartiles with linear interpolation between order statistics
/// (quantile at position `(n−1)·p`; R's default, "type 7").
///
/// Output is sorted by group key. Groups are never empty by construction.
pub fn quartiles_by_group(values: &[(String, f64)]) -> Result<Vec<QuartileSummary>> {
    if let Some((group, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite value {v} in group {group:?}"
        )));
    }
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (group, v) in values {
        groups.entry(group).or_default().push(*v);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (group, mut vs) in groups {
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(QuartileSummary {
            group_key: group.to_string(),
            n: vs.len(),
            q1: quantile_sorted(&vs, 0.25),
            median: quantile_sorted(&vs, 0.5),
            q3: quantile_sorted(&vs, 0.75),
            min: vs[0],
            max: vs[vs.len() - 1],
        });
    }
    Ok(out)
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Star counts per rank position: repos sorted by stars descending
/// (full-name tie-break), emitted as (1-based rank, stars) pairs.
pub fn rank_star_curve(repos: &[RepoRecord]) -> Vec<(u64, u64)> {
    let mut order: Vec<&RepoRecord> = repos.iter().collect();
    order.sort_by(|a, b| {
        b.stars_at_snapshot
            .cmp(&a.stars_at_snapshot)
            .then_with(|| a.full_name.cmp(&b.full_name))
    });
    order
        .iter()
        .enumerate()
        .map(|(i, r)| (i as u64 + 1, r.stars_at_snapshot))
        .collect()
}
