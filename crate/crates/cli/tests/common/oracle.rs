//! Deliberately naive re-implementations of the analysis math, used to
//! cross-check the library. Everything here favors obviousness over speed:
//! straight loops, textbook formulas, no shared code with the crate.

use std::collections::BTreeSet;

/// Buckets event ages (seconds before the snapshot) by scanning each week's
/// interval directly instead of doing bucket arithmetic.
pub fn bucket_by_scan(ages: &[i64], weeks: usize) -> (u64, Vec<u64>) {
    let week = 604_800i64;
    let mut baseline = 0u64;
    let mut weekly = vec![0u64; weeks];
    for &age in ages {
        assert!(age >= 0);
        if age > weeks as i64 * week {
            baseline += 1;
            continue;
        }
        if age == 0 {
            weekly[weeks - 1] += 1;
            continue;
        }
        // Week w covers ages ((weeks-w)·week, (weeks-w+1)·week].
        for w in 1..=weeks {
            let low = (weeks - w) as i64 * week;
            let high = (weeks - w + 1) as i64 * week;
            if age > low && age <= high {
                weekly[w - 1] += 1;
                break;
            }
        }
    }
    (baseline, weekly)
}

/// Labels a trajectory by transcribing the four predicate definitions.
/// Returns (matched set, canonical name).
pub fn label_by_definition(
    r: &[f64],
    weekly: &[u64],
    total: u64,
    sustainable_band: f64,
    shift_threshold: f64,
    monotone_fraction: f64,
    viral_fraction: f64,
) -> (BTreeSet<&'static str>, &'static str) {
    let r_old = r[0];
    let r_now = r[r.len() - 1];
    let mut r_top = f64::INFINITY;
    let mut r_bottom = f64::NEG_INFINITY;
    for &value in r {
        if value < r_top {
            r_top = value;
        }
        if value > r_bottom {
            r_bottom = value;
        }
    }

    let transitions = r.len() - 1;
    let mut non_worsening = 0usize;
    let mut non_improving = 0usize;
    for t in 0..transitions {
        if r[t + 1] <= r[t] {
            non_worsening += 1;
        }
        if r[t + 1] >= r[t] {
            non_improving += 1;
        }
    }
    let enough = |count: usize| count as f64 >= monotone_fraction * transitions as f64;

    let mut matched = BTreeSet::new();
    if r_bottom - r_top < sustainable_band {
        matched.insert("sustainable");
    }
    if r_old - r_now > shift_threshold && enough(non_worsening) {
        matched.insert("fast");
    }
    if r_now - r_old > shift_threshold && enough(non_improving) {
        matched.insert("slow");
    }
    if total > 0 {
        let mut max_week = 0u64;
        for &count in weekly {
            if count > max_week {
                max_week = count;
            }
        }
        if max_week as f64 / total as f64 > viral_fraction {
            matched.insert("viral");
        }
    }

    let canonical = if matched.contains("viral") {
        "viral"
    } else if matched.contains("fast") {
        "fast"
    } else if matched.contains("slow") {
        "slow"
    } else if matched.contains("sustainable") {
        "sustainable"
    } else {
        "other"
    };
    (matched, canonical)
}

/// Spearman's rho from first principles: average-rank both sides by
/// sorting, then apply the textbook Pearson formula to the ranks.
pub fn spearman_by_definition(x: &[f64], y: &[f64]) -> f64 {
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold one tie group; each member gets the mean rank
        let mean = (i + 1 + j + 1) as f64 / 2.0;
        for &index in &order[i..=j] {
            ranks[index] = mean;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean_x: f64 = x.iter().sum::<f64>() / n;
    let mean_y: f64 = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mean_x;
        let dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}
